//! Names of the shared variables wiring the rover components together.

// Plant state.
pub const P: &str = "p";
pub const THETA: &str = "theta";
pub const V: &str = "v";
pub const OMEGA: &str = "omega";
pub const B: &str = "B";
/// Cumulative energy drawn since the start of the run.
pub const E_USED: &str = "e_used";

// Plant outputs.
pub const IR: &str = "ir";
/// Index of the station within docking range and in sight, or -1.
pub const PS_VISIBLE: &str = "ps_visible";
pub const D_O: &str = "d_o";

// Navigation.
pub const V_T: &str = "v_T";
pub const OMEGA_T: &str = "omega_T";
pub const DOCK: &str = "dock";
pub const W: &str = "W";
/// Backtrack energy from the pose read at the last Nav decision.
pub const BE: &str = "be";
/// Rate of change of `be` until the next Nav decision.
pub const BE_RATE: &str = "be_rate";
pub const NAV_MODE: &str = "nav_mode";
pub const CF_MODE: &str = "cf_mode";
pub const NAV_STATE: &str = "nav_state";

// Mission planning.
pub const T: &str = "T";
pub const CTLR: &str = "ctlr";
pub const FE: &str = "FE";
pub const MISSION: &str = "mission";
pub const VISITED: &str = "visited";
pub const DONE: &str = "done";

// Mission completion.
/// Largest mission-time bound over the reachable region at the last decision.
pub const MC_BOUND: &str = "mc_bound";
pub const PLAN: &str = "plan";
