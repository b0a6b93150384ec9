//! Multi-rate synchronous components.
//!
//! A component owns state, input and output variables and a schedule of
//! `(next-state, output, period)` entries. Components communicate through a
//! shared [`ValueStore`]; composition fixes a total execution order, and any
//! variable read by a part that runs before its writer sees the value from
//! the previous tick.

mod component;
mod scheduler;
mod value;

pub use component::{
    compose, compose_all, Assignments, Component, ComponentBuilder, Composition,
    CompositionError, RateEntry, UpdateFn,
};
pub use scheduler::{
    run, step, ObserverAbort, Observer, RunError, SimClock, Trace, ValueStore, View,
};
pub(crate) use scheduler::step_in_place;
pub use value::{Codec, SeqReader, Value, VarId, VarKind};

#[derive(Clone, Debug, thiserror::Error, PartialEq)]
pub enum StepError {
    #[error("`{component}` read `{var}` before it had a value")]
    MissingValue { var: VarId, component: String },
    #[error("`{var}`: expected {expected}, found {found}")]
    TypeMismatch {
        var: VarId,
        expected: &'static str,
        found: &'static str,
    },
    #[error("`{component}` read undeclared variable `{var}`")]
    UndeclaredRead { component: String, var: VarId },
    #[error("`{component}` wrote undeclared variable `{var}`")]
    UndeclaredWrite { component: String, var: VarId },
    #[error("cannot decode {what}: {detail}")]
    Decode { what: &'static str, detail: String },
    #[error("tick 0 holds initial values and is never stepped")]
    TickZero,
    #[error("{component}: {message}")]
    Component { component: String, message: String },
}
