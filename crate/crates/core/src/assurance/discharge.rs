use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::Contract;

/// Literal assumption token that needs no discharge.
pub const TRUE_TOKEN: &str = "true";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContractNode {
    pub component: String,
    pub assumption_tokens: BTreeSet<String>,
    pub guarantee_tokens: BTreeSet<String>,
}

impl From<&Contract> for ContractNode {
    fn from(c: &Contract) -> Self {
        ContractNode {
            component: c.component.clone(),
            assumption_tokens: c.assumption_tokens.clone(),
            guarantee_tokens: c.guarantee_tokens.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DischargeEdge {
    pub guarantor: String,
    pub assumer: String,
    pub token: String,
}

/// Contracts of one system plus the guarantee-to-assumption edges between
/// them. Edges that run over a delayed feedback variable are excluded from
/// the cycle check.
#[derive(Clone, Debug, Default)]
pub struct DischargeGraph {
    pub nodes: Vec<ContractNode>,
    delayed: BTreeSet<(String, String)>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DischargeReport {
    pub edges: Vec<DischargeEdge>,
    /// (assumer, token) with no guarantor.
    pub uncovered: Vec<(String, String)>,
    /// (assumer, token, guarantors) with more than one guarantor.
    pub ambiguous: Vec<(String, String, Vec<String>)>,
    /// (guarantor, token) discharging nothing. Informational: top-level
    /// properties such as ES and CF end up here.
    pub unused: Vec<(String, String)>,
    /// Components on an undelayed discharge cycle, if any.
    pub cycle: Option<Vec<String>>,
}

impl DischargeReport {
    pub fn passed(&self) -> bool {
        self.uncovered.is_empty() && self.ambiguous.is_empty() && self.cycle.is_none()
    }
}

impl fmt::Display for DischargeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.edges {
            writeln!(f, "  {} --{}--> {}", e.guarantor, e.token, e.assumer)?;
        }
        for (c, t) in &self.uncovered {
            writeln!(f, "  uncovered: {c} assumes {t}")?;
        }
        for (c, t, by) in &self.ambiguous {
            writeln!(f, "  ambiguous: {c} assumes {t}, guaranteed by {}", by.join(", "))?;
        }
        for (c, t) in &self.unused {
            writeln!(f, "  top-level: {c} guarantees {t}")?;
        }
        if let Some(cycle) = &self.cycle {
            writeln!(f, "  cycle: {}", cycle.join(" -> "))?;
        }
        write!(f, "{}", if self.passed() { "discharge: pass" } else { "discharge: FAIL" })
    }
}

impl DischargeGraph {
    pub fn new<'a>(contracts: impl IntoIterator<Item = &'a Contract>) -> Self {
        DischargeGraph {
            nodes: contracts.into_iter().map(ContractNode::from).collect(),
            delayed: BTreeSet::new(),
        }
    }

    /// Marks discharge from `guarantor` to `assumer` as crossing a one-tick
    /// feedback delay.
    pub fn mark_delayed(&mut self, guarantor: &str, assumer: &str) {
        self.delayed.insert((guarantor.to_string(), assumer.to_string()));
    }
}

/// Static check of the asymmetric A-G rule over token names.
pub fn check_discharge(g: &DischargeGraph) -> DischargeReport {
    let mut report = DischargeReport::default();
    let mut used: BTreeSet<(usize, &str)> = BTreeSet::new();

    for (a, assumer) in g.nodes.iter().enumerate() {
        for token in &assumer.assumption_tokens {
            if token == TRUE_TOKEN {
                continue;
            }
            let providers: Vec<usize> = g
                .nodes
                .iter()
                .enumerate()
                .filter(|(k, n)| *k != a && n.guarantee_tokens.contains(token))
                .map(|(k, _)| k)
                .collect();
            match providers.as_slice() {
                [] => report.uncovered.push((assumer.component.clone(), token.clone())),
                [k] => {
                    used.insert((*k, token.as_str()));
                    report.edges.push(DischargeEdge {
                        guarantor: g.nodes[*k].component.clone(),
                        assumer: assumer.component.clone(),
                        token: token.clone(),
                    });
                }
                many => report.ambiguous.push((
                    assumer.component.clone(),
                    token.clone(),
                    many.iter().map(|k| g.nodes[*k].component.clone()).collect(),
                )),
            }
        }
    }

    for (k, node) in g.nodes.iter().enumerate() {
        for token in &node.guarantee_tokens {
            if !used.contains(&(k, token.as_str())) {
                report.unused.push((node.component.clone(), token.clone()));
            }
        }
    }

    report.cycle = find_cycle(&report.edges, &g.delayed);
    report
}

fn find_cycle(edges: &[DischargeEdge], delayed: &BTreeSet<(String, String)>) -> Option<Vec<String>> {
    let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
    for e in edges {
        if delayed.contains(&(e.guarantor.clone(), e.assumer.clone())) {
            continue;
        }
        adj.entry(e.guarantor.as_str()).or_default().push(e.assumer.as_str());
        adj.entry(e.assumer.as_str()).or_default();
    }

    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        Fresh,
        Open,
        Done,
    }
    let mut marks: BTreeMap<&str, Mark> = adj.keys().map(|k| (*k, Mark::Fresh)).collect();
    let nodes: Vec<&str> = adj.keys().copied().collect();

    fn dfs<'a>(
        n: &'a str,
        adj: &BTreeMap<&'a str, Vec<&'a str>>,
        marks: &mut BTreeMap<&'a str, Mark>,
        path: &mut Vec<&'a str>,
    ) -> Option<Vec<String>> {
        marks.insert(n, Mark::Open);
        path.push(n);
        for &m in &adj[n] {
            match marks[m] {
                Mark::Open => {
                    let start = path.iter().position(|p| *p == m).unwrap();
                    let mut cycle: Vec<String> = path[start..].iter().map(|s| s.to_string()).collect();
                    cycle.push(m.to_string());
                    return Some(cycle);
                }
                Mark::Fresh => {
                    if let Some(c) = dfs(m, adj, marks, path) {
                        return Some(c);
                    }
                }
                Mark::Done => {}
            }
        }
        path.pop();
        marks.insert(n, Mark::Done);
        None
    }

    for n in nodes {
        if marks[n] == Mark::Fresh {
            if let Some(c) = dfs(n, &adj, &mut marks, &mut Vec::new()) {
                return Some(c);
            }
        }
    }
    None
}
