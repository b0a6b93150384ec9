//! Scenario files, system assembly, property checkers, the run loop and
//! trace output.

mod generate;
mod output;
mod properties;
mod runner;
mod scenario;
mod system;

pub use generate::{random_es_scenario, random_mc_scenario, random_polygon};
pub use output::{emit_outputs, render_svg, write_csv, write_events, OutputError, OutputFiles};
pub use properties::{
    case_check, cf_holds, energy_view, es_holds, CaseCheck, DecisionSample, EnergyView, LegRecord, PropertySet,
    PropertyViolation, VisitTracker, CASE_TOL,
};
pub use runner::{run_scenario, run_system, Event, RunOptions, RunReport, StopReason, TraceRecord, CSV_COLUMNS};
pub use scenario::{
    load_scenario, nearest_station, Issue, Periods, Scenario, ScenarioError, ScenarioMode, ValidationBounds,
};
pub use system::{
    assemble, assemble_with, contracts, discharge, energy_requirement_at, es_contracts, interpolated_be,
    mc_contracts, AssembleError, PeriodicContract, System, ENERGY_TOL,
};
