//! Assume-guarantee contracts, runtime monitors, Simplex instances with
//! coordinated switching, and the static discharge check.

mod contract;
mod discharge;
mod simplex;

pub use contract::{
    monitor_tick, AGTriple, AtomFn, Contract, ContractMonitor, Predicate, TripleError, Verdict,
    Violation,
};
pub use discharge::{
    check_discharge, ContractNode, DischargeEdge, DischargeGraph, DischargeReport, TRUE_TOKEN,
};
pub use simplex::{dm_decide, resolve, Mode, Release, SimplexInstance};
