//! Component-based Simplex runtime assurance for multi-rate synchronous
//! systems, with a differential-drive rover as the worked example.
//!
//! [`sync`] provides the component model and scheduler, and [`assurance`]
//! adds contracts, monitors and Simplex switching on top of it. The rover is
//! split into [`plant`], [`navigation`] and [`mission`] (energy safety) or
//! [`completion`] (deadline-bounded missions). [`harness`] loads scenarios,
//! runs them and checks the resulting traces.

pub mod sync;
pub mod assurance;
pub mod geometry;
pub mod navigation;
pub mod plant;
pub mod vars;
pub mod mission;
pub mod completion;
pub mod harness;
