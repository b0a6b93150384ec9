use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::{Codec, Component, StepError, Value, VarId};

/// Global clock: tick index `i` and tick length `dt` in seconds.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimClock {
    dt: f64,
    tick: u64,
}

impl SimClock {
    pub fn new(dt: f64) -> Self {
        assert!(dt > 0.0 && dt.is_finite(), "tick length must be positive");
        SimClock { dt, tick: 0 }
    }

    pub fn at(dt: f64, tick: u64) -> Self {
        SimClock { tick, ..SimClock::new(dt) }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    /// Time at the end of the current tick.
    pub fn time(&self) -> f64 {
        self.tick as f64 * self.dt
    }

    pub fn advance(&mut self) {
        self.tick += 1;
    }
}

/// Current and previous-tick values of every shared variable.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValueStore {
    current: BTreeMap<VarId, Value>,
    previous: BTreeMap<VarId, Value>,
}

impl ValueStore {
    pub fn new() -> Self {
        ValueStore::default()
    }

    pub fn with<V: Into<Value>>(mut self, var: &str, value: V) -> Self {
        self.set(var, value.into());
        self
    }

    pub fn set(&mut self, var: &str, value: Value) {
        match self.current.get_mut(var) {
            Some(slot) => *slot = value,
            None => {
                self.current.insert(VarId::new(var), value);
            }
        }
    }

    pub fn get(&self, var: &str) -> Option<&Value> {
        self.current.get(var)
    }

    pub fn previous(&self, var: &str) -> Option<&Value> {
        self.previous.get(var).or_else(|| self.current.get(var))
    }

    pub fn current(&self) -> &BTreeMap<VarId, Value> {
        &self.current
    }

    pub fn real(&self, var: &str) -> Option<f64> {
        self.get(var).and_then(Value::as_real)
    }

    pub fn int(&self, var: &str) -> Option<i64> {
        self.get(var).and_then(Value::as_int)
    }

    pub fn vec2(&self, var: &str) -> Option<[f64; 2]> {
        self.get(var).and_then(Value::as_vec2)
    }

    pub fn bool(&self, var: &str) -> Option<bool> {
        self.get(var).and_then(Value::as_bool)
    }

    pub fn decode<T: Codec>(&self, var: &str) -> Result<T, StepError> {
        let v = self.get(var).ok_or_else(|| StepError::MissingValue {
            var: VarId::new(var),
            component: "<store>".into(),
        })?;
        T::decode(v)
    }

    /// Bit-for-bit equality of the current values.
    pub fn bit_eq(&self, other: &ValueStore) -> bool {
        self.current.len() == other.current.len()
            && self
                .current
                .iter()
                .zip(other.current.iter())
                .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
    }

    fn snapshot_previous(&mut self) {
        self.previous.clone_from(&self.current);
    }
}

/// Immutable, access-checked view handed to next-state, output and
/// predicate functions.
pub struct View<'a> {
    store: &'a ValueStore,
    owner: &'a str,
    readable: Option<&'a BTreeSet<VarId>>,
    delayed: Option<&'a BTreeSet<VarId>>,
    tick: u64,
    dt: f64,
}

impl<'a> View<'a> {
    /// Unrestricted view of `store`, e.g. for monitors over the whole system.
    pub fn of(store: &'a ValueStore, clock: &SimClock) -> Self {
        View {
            store,
            owner: "<observer>",
            readable: None,
            delayed: None,
            tick: clock.tick(),
            dt: clock.dt(),
        }
    }

    /// View restricted to the variables in `readable`.
    pub fn restricted(
        store: &'a ValueStore,
        owner: &'a str,
        readable: &'a BTreeSet<VarId>,
        clock: &SimClock,
    ) -> Self {
        View {
            readable: Some(readable),
            owner,
            ..View::of(store, clock)
        }
    }

    pub fn tick(&self) -> u64 {
        self.tick
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn get(&self, var: &str) -> Result<&'a Value, StepError> {
        if let Some(readable) = self.readable {
            if !readable.contains(var) {
                return Err(StepError::UndeclaredRead {
                    component: self.owner.to_string(),
                    var: VarId::new(var),
                });
            }
        }
        let delayed = self.delayed.is_some_and(|d| d.contains(var));
        let value = if delayed {
            self.store.previous(var)
        } else {
            self.store.get(var)
        };
        value.ok_or_else(|| StepError::MissingValue {
            var: VarId::new(var),
            component: self.owner.to_string(),
        })
    }

    fn typed<T>(
        &self,
        var: &str,
        expected: &'static str,
        f: impl Fn(&Value) -> Option<T>,
    ) -> Result<T, StepError> {
        let v = self.get(var)?;
        f(v).ok_or_else(|| StepError::TypeMismatch {
            var: VarId::new(var),
            expected,
            found: v.type_name(),
        })
    }

    pub fn real(&self, var: &str) -> Result<f64, StepError> {
        self.typed(var, "real", Value::as_real)
    }

    pub fn int(&self, var: &str) -> Result<i64, StepError> {
        self.typed(var, "int", Value::as_int)
    }

    pub fn bool(&self, var: &str) -> Result<bool, StepError> {
        self.typed(var, "bool", Value::as_bool)
    }

    pub fn vec2(&self, var: &str) -> Result<[f64; 2], StepError> {
        self.typed(var, "vec2", Value::as_vec2)
    }

    pub fn seq(&self, var: &str) -> Result<&'a Arc<Vec<Value>>, StepError> {
        let v = self.get(var)?;
        v.as_seq().ok_or_else(|| StepError::TypeMismatch {
            var: VarId::new(var),
            expected: "seq",
            found: v.type_name(),
        })
    }

    pub fn decode<T: Codec>(&self, var: &str) -> Result<T, StepError> {
        T::decode(self.get(var)?)
    }
}

/// Executes one global tick `clock.tick()` of `comp` on a copy of `store`.
///
/// Parts run in composition order; within a part, every entry whose period
/// divides the tick applies its next-state function and then its output
/// function. Variables nobody writes keep their previous value.
pub fn step(comp: &Component, store: &ValueStore, clock: &SimClock) -> Result<ValueStore, StepError> {
    let mut next = store.clone();
    step_in_place(comp, &mut next, clock)?;
    Ok(next)
}

pub(crate) fn step_in_place(
    comp: &Component,
    store: &mut ValueStore,
    clock: &SimClock,
) -> Result<(), StepError> {
    let tick = clock.tick();
    if tick == 0 {
        return Err(StepError::TickZero);
    }
    store.snapshot_previous();
    for (k, part) in comp.parts().iter().enumerate() {
        let delayed = comp.delayed_reads(k);
        for entry in &part.schedule {
            if !entry.fires_at(tick) {
                continue;
            }
            if let Some(f) = entry.next_state_fn() {
                let writes = {
                    let view = View {
                        store,
                        owner: &part.name,
                        readable: Some(&part.readable),
                        delayed: Some(delayed),
                        tick,
                        dt: clock.dt(),
                    };
                    f(&view)?
                };
                apply(store, &part.name, &part.state, writes)?;
            }
            if let Some(g) = entry.output_fn() {
                let writes = {
                    let view = View {
                        store,
                        owner: &part.name,
                        readable: Some(&part.readable),
                        delayed: Some(delayed),
                        tick,
                        dt: clock.dt(),
                    };
                    g(&view)?
                };
                apply(store, &part.name, &part.outputs, writes)?;
            }
        }
    }
    Ok(())
}

fn apply(
    store: &mut ValueStore,
    owner: &str,
    allowed: &BTreeSet<VarId>,
    writes: Vec<(VarId, Value)>,
) -> Result<(), StepError> {
    for (var, value) in writes {
        if !allowed.contains(&var) {
            return Err(StepError::UndeclaredWrite {
                component: owner.to_string(),
                var,
            });
        }
        store.set(var.as_str(), value);
    }
    Ok(())
}

/// Reason an observer stopped a run.
#[derive(Clone, Debug, PartialEq)]
pub struct ObserverAbort {
    pub observer: String,
    pub reason: String,
}

/// Hook invoked after every tick of [`run`].
pub trait Observer {
    fn observe(&mut self, clock: &SimClock, store: &ValueStore) -> Result<(), ObserverAbort>;
}

impl<F> Observer for F
where
    F: FnMut(&SimClock, &ValueStore) -> Result<(), ObserverAbort>,
{
    fn observe(&mut self, clock: &SimClock, store: &ValueStore) -> Result<(), ObserverAbort> {
        self(clock, store)
    }
}

/// Post-tick snapshots of a run; `records[k]` is the store after tick `k + 1`.
#[derive(Clone, Debug, Default)]
pub struct Trace {
    pub records: Vec<BTreeMap<VarId, Value>>,
}

impl Trace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Values of one variable across the run.
    pub fn column(&self, var: &str) -> Vec<Option<&Value>> {
        self.records.iter().map(|r| r.get(var)).collect()
    }

    pub fn bit_eq(&self, other: &Trace) -> bool {
        self.records.len() == other.records.len()
            && self.records.iter().zip(&other.records).all(|(a, b)| {
                a.len() == b.len()
                    && a.iter()
                        .zip(b.iter())
                        .all(|((ka, va), (kb, vb))| ka == kb && va.bit_eq(vb))
            })
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("tick count must be at least 1")]
    NoTicks,
    #[error("tick {tick}: {source}")]
    Step {
        tick: u64,
        #[source]
        source: StepError,
        trace: Trace,
    },
    #[error("tick {tick}: observer `{}` aborted the run: {}", .abort.observer, .abort.reason)]
    ObserverAbort {
        tick: u64,
        abort: ObserverAbort,
        trace: Trace,
    },
}

/// Runs `ticks` global ticks starting from `store` (which holds the tick-0
/// values), calling every observer after each tick.
pub fn run(
    comp: &Component,
    store: &ValueStore,
    dt: f64,
    ticks: u64,
    observers: &mut [&mut dyn Observer],
) -> Result<Trace, RunError> {
    if ticks == 0 {
        return Err(RunError::NoTicks);
    }
    let mut clock = SimClock::new(dt);
    let mut current = store.clone();
    let mut trace = Trace::default();
    for _ in 0..ticks {
        clock.advance();
        if let Err(source) = step_in_place(comp, &mut current, &clock) {
            return Err(RunError::Step {
                tick: clock.tick(),
                source,
                trace,
            });
        }
        trace.records.push(current.current().clone());
        for obs in observers.iter_mut() {
            if let Err(abort) = obs.observe(&clock, &current) {
                return Err(RunError::ObserverAbort {
                    tick: clock.tick(),
                    abort,
                    trace,
                });
            }
        }
    }
    Ok(trace)
}
