use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::sync::Arc;

use super::{StepError, Value, VarId, View};

/// Variable assignments produced by a next-state or output function.
pub type Assignments = Vec<(VarId, Value)>;

/// A next-state or output function. Functions see an immutable view of the
/// store and return the assignments they want to make.
pub type UpdateFn = dyn Fn(&View<'_>) -> Result<Assignments, StepError> + Send + Sync;

/// One `(f, g, s)` triple of a component schedule.
#[derive(Clone)]
pub struct RateEntry {
    period: u64,
    next_state: Option<Arc<UpdateFn>>,
    output: Option<Arc<UpdateFn>>,
}

impl RateEntry {
    pub fn new<F>(period: u64, next_state: F) -> Self
    where
        F: Fn(&View<'_>) -> Result<Assignments, StepError> + Send + Sync + 'static,
    {
        RateEntry {
            period,
            next_state: Some(Arc::new(next_state)),
            output: None,
        }
    }

    /// Entry with only an output function.
    pub fn output_only<G>(period: u64, output: G) -> Self
    where
        G: Fn(&View<'_>) -> Result<Assignments, StepError> + Send + Sync + 'static,
    {
        RateEntry {
            period,
            next_state: None,
            output: Some(Arc::new(output)),
        }
    }

    pub fn with_output<G>(mut self, output: G) -> Self
    where
        G: Fn(&View<'_>) -> Result<Assignments, StepError> + Send + Sync + 'static,
    {
        self.output = Some(Arc::new(output));
        self
    }

    pub fn period(&self) -> u64 {
        self.period
    }

    pub fn fires_at(&self, tick: u64) -> bool {
        tick.is_multiple_of(self.period)
    }

    pub(crate) fn next_state_fn(&self) -> Option<&Arc<UpdateFn>> {
        self.next_state.as_ref()
    }

    pub(crate) fn output_fn(&self) -> Option<&Arc<UpdateFn>> {
        self.output.as_ref()
    }
}

impl fmt::Debug for RateEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RateEntry")
            .field("period", &self.period)
            .field("next_state", &self.next_state.is_some())
            .field("output", &self.output.is_some())
            .finish()
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum CompositionError {
    #[error("component `{component}`: input and output sets overlap on {vars:?}")]
    InputOutputOverlap {
        component: String,
        vars: Vec<VarId>,
    },
    #[error("component `{component}`: update period must be at least 1")]
    ZeroPeriod { component: String },
    #[error("components `{left}` and `{right}` share state variables {vars:?}")]
    SharedState {
        left: String,
        right: String,
        vars: Vec<VarId>,
    },
    #[error("components `{left}` and `{right}` share output variables {vars:?}")]
    SharedOutputs {
        left: String,
        right: String,
        vars: Vec<VarId>,
    },
}

/// An atomic component as authored, before composition.
#[derive(Debug)]
pub(crate) struct Leaf {
    pub(crate) name: String,
    pub(crate) state: BTreeSet<VarId>,
    pub(crate) inputs: BTreeSet<VarId>,
    pub(crate) outputs: BTreeSet<VarId>,
    pub(crate) schedule: Vec<RateEntry>,
    pub(crate) readable: BTreeSet<VarId>,
}

/// A multi-rate component `(x, u, y, S)`.
///
/// Atomic components are built with [`ComponentBuilder`]; composition of two
/// components is again a component, whose schedule keeps the atomic parts in
/// execution order.
#[derive(Clone, Debug)]
pub struct Component {
    name: String,
    state: BTreeSet<VarId>,
    inputs: BTreeSet<VarId>,
    outputs: BTreeSet<VarId>,
    hidden: BTreeSet<VarId>,
    delayed: BTreeSet<VarId>,
    parts: Vec<Arc<Leaf>>,
    /// Per part: the variables that part reads from the previous tick.
    delayed_reads: Vec<BTreeSet<VarId>>,
}

/// Result of composing components. A composition is itself a component.
pub type Composition = Component;

pub struct ComponentBuilder {
    name: String,
    state: BTreeSet<VarId>,
    inputs: BTreeSet<VarId>,
    outputs: BTreeSet<VarId>,
    schedule: Vec<RateEntry>,
}

impl ComponentBuilder {
    pub fn state<I, S>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<VarId>,
    {
        self.state.extend(vars.into_iter().map(Into::into));
        self
    }

    pub fn inputs<I, S>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<VarId>,
    {
        self.inputs.extend(vars.into_iter().map(Into::into));
        self
    }

    pub fn outputs<I, S>(mut self, vars: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<VarId>,
    {
        self.outputs.extend(vars.into_iter().map(Into::into));
        self
    }

    pub fn rate(mut self, entry: RateEntry) -> Self {
        self.schedule.push(entry);
        self
    }

    pub fn build(self) -> Result<Component, CompositionError> {
        let overlap: Vec<VarId> = self.inputs.intersection(&self.outputs).cloned().collect();
        if !overlap.is_empty() {
            return Err(CompositionError::InputOutputOverlap {
                component: self.name,
                vars: overlap,
            });
        }
        if self.schedule.iter().any(|e| e.period == 0) {
            return Err(CompositionError::ZeroPeriod {
                component: self.name,
            });
        }
        let readable: BTreeSet<VarId> = self
            .state
            .iter()
            .chain(&self.inputs)
            .chain(&self.outputs)
            .cloned()
            .collect();
        let leaf = Leaf {
            name: self.name.clone(),
            state: self.state.clone(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
            schedule: self.schedule,
            readable,
        };
        Ok(Component {
            name: self.name,
            state: self.state,
            inputs: self.inputs,
            outputs: self.outputs,
            hidden: BTreeSet::new(),
            delayed: BTreeSet::new(),
            parts: vec![Arc::new(leaf)],
            delayed_reads: vec![BTreeSet::new()],
        })
    }
}

impl Component {
    pub fn builder(name: &str) -> ComponentBuilder {
        ComponentBuilder {
            name: name.to_string(),
            state: BTreeSet::new(),
            inputs: BTreeSet::new(),
            outputs: BTreeSet::new(),
            schedule: Vec::new(),
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn state_vars(&self) -> &BTreeSet<VarId> {
        &self.state
    }

    pub fn input_vars(&self) -> &BTreeSet<VarId> {
        &self.inputs
    }

    pub fn output_vars(&self) -> &BTreeSet<VarId> {
        &self.outputs
    }

    /// Connected inputs that composition moved from `u` to `x`.
    pub fn hidden_vars(&self) -> &BTreeSet<VarId> {
        &self.hidden
    }

    /// Outputs that feed back into an earlier part and are read one tick late.
    pub fn delayed_vars(&self) -> &BTreeSet<VarId> {
        &self.delayed
    }

    /// Names of the atomic parts, in execution order.
    pub fn part_names(&self) -> Vec<&str> {
        self.parts.iter().map(|p| p.name.as_str()).collect()
    }

    /// All variables any part may read or write.
    pub fn all_vars(&self) -> BTreeSet<VarId> {
        self.state
            .iter()
            .chain(&self.inputs)
            .chain(&self.outputs)
            .cloned()
            .collect()
    }

    /// Update periods appearing anywhere in the schedule.
    pub fn periods(&self) -> BTreeSet<u64> {
        self.parts
            .iter()
            .flat_map(|p| p.schedule.iter().map(|e| e.period))
            .collect()
    }

    pub(crate) fn parts(&self) -> &[Arc<Leaf>] {
        &self.parts
    }

    pub(crate) fn delayed_reads(&self, part: usize) -> &BTreeSet<VarId> {
        &self.delayed_reads[part]
    }
}

/// Parallel composition `a ∥ b` with execution order `a` then `b`.
pub fn compose(a: &Component, b: &Component) -> Result<Component, CompositionError> {
    let shared_state: Vec<VarId> = a.state.intersection(&b.state).cloned().collect();
    if !shared_state.is_empty() {
        return Err(CompositionError::SharedState {
            left: a.name.clone(),
            right: b.name.clone(),
            vars: shared_state,
        });
    }
    let shared_out: Vec<VarId> = a.outputs.intersection(&b.outputs).cloned().collect();
    if !shared_out.is_empty() {
        return Err(CompositionError::SharedOutputs {
            left: a.name.clone(),
            right: b.name.clone(),
            vars: shared_out,
        });
    }

    let a_to_b: BTreeSet<VarId> = a.outputs.intersection(&b.inputs).cloned().collect();
    let b_to_a: BTreeSet<VarId> = b.outputs.intersection(&a.inputs).cloned().collect();

    let mut state: BTreeSet<VarId> = a.state.union(&b.state).cloned().collect();
    state.extend(a_to_b.iter().cloned());
    state.extend(b_to_a.iter().cloned());

    let outputs: BTreeSet<VarId> = a.outputs.union(&b.outputs).cloned().collect();
    let inputs: BTreeSet<VarId> = a
        .inputs
        .union(&b.inputs)
        .filter(|v| !outputs.contains(*v))
        .cloned()
        .collect();

    let mut hidden: BTreeSet<VarId> = a.hidden.union(&b.hidden).cloned().collect();
    hidden.extend(a_to_b);
    hidden.extend(b_to_a);

    let parts: Vec<Arc<Leaf>> = a.parts.iter().chain(&b.parts).cloned().collect();
    let (delayed, delayed_reads) = back_edges(&parts);

    Ok(Component {
        name: format!("{} || {}", a.name, b.name),
        state,
        inputs,
        outputs,
        hidden,
        delayed,
        parts,
        delayed_reads,
    })
}

/// Left fold of [`compose`] over `parts`.
pub fn compose_all(parts: &[&Component]) -> Result<Component, CompositionError> {
    let (first, rest) = parts
        .split_first()
        .expect("compose_all needs at least one component");
    rest.iter()
        .try_fold((*first).clone(), |acc, next| compose(&acc, next))
}

/// Dependency analysis over same-tick reads and writes. A variable written by
/// part `j` and read by an earlier part `k < j` closes a feedback path under
/// the fixed execution order, so `k` gets the tick `i-1` value.
fn back_edges(parts: &[Arc<Leaf>]) -> (BTreeSet<VarId>, Vec<BTreeSet<VarId>>) {
    let mut writer: BTreeMap<&VarId, usize> = BTreeMap::new();
    for (j, part) in parts.iter().enumerate() {
        for v in &part.outputs {
            writer.insert(v, j);
        }
    }
    let mut delayed = BTreeSet::new();
    let mut per_part = Vec::with_capacity(parts.len());
    for (k, part) in parts.iter().enumerate() {
        let mut reads = BTreeSet::new();
        for v in &part.inputs {
            if let Some(&j) = writer.get(v) {
                if j > k {
                    reads.insert(v.clone());
                    delayed.insert(v.clone());
                }
            }
        }
        per_part.push(reads);
    }
    (delayed, per_part)
}
