use std::fmt;

use serde::{Deserialize, Serialize};

use super::Predicate;
use crate::sync::{Assignments, Codec, SimClock, StepError, Value, ValueStore, VarId, View};

/// Which controller of a Simplex instance is in charge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Mode {
    Ac,
    Bc,
}

impl Mode {
    pub fn is_bc(self) -> bool {
        self == Mode::Bc
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Ac => "AC",
            Mode::Bc => "BC",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl Codec for Mode {
    fn encode(&self) -> Value {
        Value::Int(match self {
            Mode::Ac => 0,
            Mode::Bc => 1,
        })
    }

    fn decode(value: &Value) -> Result<Self, StepError> {
        match value.as_int() {
            Some(0) => Ok(Mode::Ac),
            Some(1) => Ok(Mode::Bc),
            _ => Err(StepError::Decode {
                what: "mode",
                detail: format!("{value:?}"),
            }),
        }
    }
}

impl From<Mode> for Value {
    fn from(m: Mode) -> Value {
        m.encode()
    }
}

/// How a Simplex instance leaves BC once it is there.
#[derive(Clone, Debug)]
pub enum Release {
    /// BC is dropped as soon as neither the switch line nor the DM asks for it.
    Immediate,
    /// BC is held until the predicate holds (and the DM is quiet).
    When(Predicate),
}

/// An AC/BC pair supervised by a decision module.
#[derive(Clone, Debug)]
pub struct SimplexInstance {
    pub name: String,
    pub period: u64,
    pub dm: Predicate,
    pub release: Release,
    /// Variable holding the instance's current decision.
    pub active: VarId,
    /// Upstream decision line; reading BC forces BC here.
    pub switch_in: Option<VarId>,
    /// Line this instance publishes its decision on.
    pub switch_out: Option<VarId>,
}

impl SimplexInstance {
    pub fn new(name: &str, period: u64, active: &str, dm: Predicate) -> Self {
        SimplexInstance {
            name: name.to_string(),
            period,
            dm,
            release: Release::Immediate,
            active: VarId::new(active),
            switch_in: None,
            switch_out: None,
        }
    }

    pub fn sticky_until(mut self, p: Predicate) -> Self {
        self.release = Release::When(p);
        self
    }

    pub fn switch_in(mut self, var: &str) -> Self {
        self.switch_in = Some(VarId::new(var));
        self
    }

    pub fn switch_out(mut self, var: &str) -> Self {
        self.switch_out = Some(VarId::new(var));
        self
    }

    /// Decision for the period starting now.
    pub fn decide(&self, view: &View<'_>) -> Result<Mode, StepError> {
        if let Some(line) = &self.switch_in {
            if view.decode::<Mode>(line.as_str())?.is_bc() {
                return Ok(Mode::Bc);
            }
        }
        if self.dm.eval(view)? {
            return Ok(Mode::Bc);
        }
        let current: Mode = view.decode(self.active.as_str())?;
        let released = match (&self.release, current) {
            (Release::When(p), Mode::Bc) => p.eval(view)?,
            _ => true,
        };
        Ok(resolve(current, false, false, released))
    }

    /// The assignments publishing `mode` on the instance's variables.
    pub fn publish(&self, mode: Mode) -> Assignments {
        let mut out = vec![(self.active.clone(), mode.encode())];
        if let Some(line) = &self.switch_out {
            if line != &self.active {
                out.push((line.clone(), mode.encode()));
            }
        }
        out
    }
}

/// The switching rule shared by every instance: the upstream line and the
/// DM force BC; otherwise BC is held until released.
pub fn resolve(current: Mode, cascade: bool, dm_fires: bool, released: bool) -> Mode {
    if cascade || dm_fires || (current.is_bc() && !released) {
        Mode::Bc
    } else {
        Mode::Ac
    }
}

/// Decision of `s` on `store`, evaluated at a decision tick.
pub fn dm_decide(s: &SimplexInstance, store: &ValueStore, clock: &SimClock) -> Result<Mode, StepError> {
    debug_assert!(clock.tick().is_multiple_of(s.period), "DM evaluated off its period");
    s.decide(&View::of(store, clock))
}
