use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use crate::sync::{Component, ObserverAbort, SimClock, StepError, ValueStore, VarId, View};

pub type AtomFn = dyn Fn(&View<'_>) -> Result<bool, StepError> + Send + Sync;

/// Predicate over a store view, built from labelled atoms.
///
/// `Implies` and `And` short-circuit, so a false antecedent never evaluates
/// the consequent.
#[derive(Clone)]
pub enum Predicate {
    True,
    Atom { label: String, eval: Arc<AtomFn> },
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Implies(Box<Predicate>, Box<Predicate>),
}

impl Predicate {
    pub fn atom<F>(label: &str, eval: F) -> Predicate
    where
        F: Fn(&View<'_>) -> Result<bool, StepError> + Send + Sync + 'static,
    {
        Predicate::Atom {
            label: label.to_string(),
            eval: Arc::new(eval),
        }
    }

    pub fn not(p: Predicate) -> Predicate {
        Predicate::Not(Box::new(p))
    }

    pub fn implies(antecedent: Predicate, consequent: Predicate) -> Predicate {
        Predicate::Implies(Box::new(antecedent), Box::new(consequent))
    }

    pub fn eval(&self, view: &View<'_>) -> Result<bool, StepError> {
        match self {
            Predicate::True => Ok(true),
            Predicate::Atom { eval, .. } => eval(view),
            Predicate::Not(p) => Ok(!p.eval(view)?),
            Predicate::And(ps) => {
                for p in ps {
                    if !p.eval(view)? {
                        return Ok(false);
                    }
                }
                Ok(true)
            }
            Predicate::Implies(a, c) => {
                if a.eval(view)? {
                    c.eval(view)
                } else {
                    Ok(true)
                }
            }
        }
    }
}

impl fmt::Debug for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Predicate::True => f.write_str("true"),
            Predicate::Atom { label, .. } => f.write_str(label),
            Predicate::Not(p) => write!(f, "!({p:?})"),
            Predicate::And(ps) => {
                let parts: Vec<String> = ps.iter().map(|p| format!("{p:?}")).collect();
                write!(f, "({})", parts.join(" && "))
            }
            Predicate::Implies(a, c) => write!(f, "({a:?} => {c:?})"),
        }
    }
}

/// An assume-guarantee contract `(I, O, A, G)`.
///
/// The token sets name the assumption and guarantee formulas for static
/// discharge; the predicates check the same formulas on traces.
#[derive(Clone, Debug)]
pub struct Contract {
    pub component: String,
    pub inputs: BTreeSet<VarId>,
    pub outputs: BTreeSet<VarId>,
    pub assumption: Predicate,
    pub guarantee: Predicate,
    pub assumption_tokens: BTreeSet<String>,
    pub guarantee_tokens: BTreeSet<String>,
    readable: BTreeSet<VarId>,
}

impl Contract {
    pub fn new<I, O>(component: &str, inputs: I, outputs: O) -> Contract
    where
        I: IntoIterator<Item = &'static str>,
        O: IntoIterator<Item = &'static str>,
    {
        let inputs: BTreeSet<VarId> = inputs.into_iter().map(VarId::new).collect();
        let outputs: BTreeSet<VarId> = outputs.into_iter().map(VarId::new).collect();
        let readable = inputs.union(&outputs).cloned().collect();
        Contract {
            component: component.to_string(),
            inputs,
            outputs,
            assumption: Predicate::True,
            guarantee: Predicate::True,
            assumption_tokens: BTreeSet::new(),
            guarantee_tokens: BTreeSet::new(),
            readable,
        }
    }

    pub fn assume(mut self, token: &str, p: Predicate) -> Contract {
        self.assumption = p;
        self.assumption_tokens.insert(token.to_string());
        self
    }

    /// Adds a guarantee conjunct with its discharge token.
    pub fn guarantee(mut self, token: &str, q: Predicate) -> Contract {
        self.guarantee = match self.guarantee {
            Predicate::True => q,
            Predicate::And(mut qs) => {
                qs.push(q);
                Predicate::And(qs)
            }
            other => Predicate::And(vec![other, q]),
        };
        self.guarantee_tokens.insert(token.to_string());
        self
    }

    /// Guarantee token that is declared but has no runtime predicate, used by
    /// mutation tests and for obligations checked elsewhere.
    pub fn guarantee_token(mut self, token: &str) -> Contract {
        self.guarantee_tokens.insert(token.to_string());
        self
    }

    pub fn without_guarantee_token(mut self, token: &str) -> Contract {
        self.guarantee_tokens.remove(token);
        self
    }

    pub fn view<'a>(&'a self, store: &'a ValueStore, clock: &SimClock) -> View<'a> {
        View::restricted(store, &self.component, &self.readable, clock)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Verdict {
    pub assumption_met: bool,
    pub guarantee_met: bool,
}

/// Evaluates both sides of `c` on the current store.
pub fn monitor_tick(c: &Contract, store: &ValueStore, clock: &SimClock) -> Result<Verdict, StepError> {
    let view = c.view(store, clock);
    Ok(Verdict {
        assumption_met: c.assumption.eval(&view)?,
        guarantee_met: c.guarantee.eval(&view)?,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub contract: String,
    pub tick: u64,
    pub detail: String,
}

/// Runtime monitor for an A-G triple `M: <A> s <G>`.
///
/// The assumption is sampled at each period start (ticks divisible by `s`);
/// when it held there, the guarantee must hold on every tick through the
/// next period start.
#[derive(Clone, Debug)]
pub struct ContractMonitor {
    pub contract: Contract,
    pub period: u64,
    latched: bool,
    first: Option<Violation>,
    violations: usize,
    fail_fast: bool,
}

impl ContractMonitor {
    pub fn new(contract: Contract, period: u64) -> Self {
        assert!(period >= 1);
        ContractMonitor {
            contract,
            period,
            latched: false,
            first: None,
            violations: 0,
            fail_fast: false,
        }
    }

    pub fn fail_fast(mut self, yes: bool) -> Self {
        self.fail_fast = yes;
        self
    }

    /// Samples the assumption on the initial store (tick 0).
    pub fn start(&mut self, store: &ValueStore, clock: &SimClock) -> Result<(), StepError> {
        let view = self.contract.view(store, clock);
        self.latched = self.contract.assumption.eval(&view)?;
        Ok(())
    }

    pub fn first_violation(&self) -> Option<&Violation> {
        self.first.as_ref()
    }

    pub fn violation_count(&self) -> usize {
        self.violations
    }

    /// Checks one post-tick store. Returns the violation if one occurred.
    pub fn check(&mut self, store: &ValueStore, clock: &SimClock) -> Result<Option<Violation>, StepError> {
        let view = self.contract.view(store, clock);
        let mut found = None;
        if self.latched && !self.contract.guarantee.eval(&view)? {
            let v = Violation {
                contract: self.contract.component.clone(),
                tick: clock.tick(),
                detail: format!("guarantee {:?} failed", self.contract.guarantee),
            };
            self.violations += 1;
            if self.first.is_none() {
                self.first = Some(v.clone());
            }
            found = Some(v);
        }
        if clock.tick().is_multiple_of(self.period) {
            self.latched = self.contract.assumption.eval(&view)?;
        }
        Ok(found)
    }
}

impl crate::sync::Observer for ContractMonitor {
    fn observe(&mut self, clock: &SimClock, store: &ValueStore) -> Result<(), ObserverAbort> {
        let observer = self.contract.component.clone();
        let abort = |reason: String| ObserverAbort { observer, reason };
        match self.check(store, clock) {
            Ok(Some(v)) if self.fail_fast => Err(abort(v.detail)),
            Ok(_) => Ok(()),
            Err(e) => Err(abort(e.to_string())),
        }
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
#[error("period {period} is not an update period of `{component}`")]
pub struct TripleError {
    pub component: String,
    pub period: u64,
}

/// `M: <p> s <q>`: if `p` holds at a period start, `q` holds up to and
/// including the next period start.
#[derive(Clone, Debug)]
pub struct AGTriple {
    pub component: String,
    pub period: u64,
    pub assumption: Predicate,
    pub guarantee: Predicate,
}

impl AGTriple {
    pub fn new(
        component: &Component,
        period: u64,
        assumption: Predicate,
        guarantee: Predicate,
    ) -> Result<Self, TripleError> {
        if !component.periods().contains(&period) {
            return Err(TripleError {
                component: component.name().to_string(),
                period,
            });
        }
        Ok(AGTriple {
            component: component.name().to_string(),
            period,
            assumption,
            guarantee,
        })
    }

    /// First tick of `trace` (post-tick stores, starting at tick 1, with
    /// `initial` at tick 0) where the triple fails.
    pub fn first_failure(
        &self,
        initial: &ValueStore,
        trace: &[ValueStore],
        dt: f64,
    ) -> Result<Option<u64>, StepError> {
        let mut latched = self.assumption.eval(&View::of(initial, &SimClock::at(dt, 0)))?;
        for (k, store) in trace.iter().enumerate() {
            let clock = SimClock::at(dt, k as u64 + 1);
            let view = View::of(store, &clock);
            if latched && !self.guarantee.eval(&view)? {
                return Ok(Some(clock.tick()));
            }
            if clock.tick().is_multiple_of(self.period) {
                latched = self.assumption.eval(&view)?;
            }
        }
        Ok(None)
    }
}
