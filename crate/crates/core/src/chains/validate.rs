use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::graph::{ChainGraph, RoleClass};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum Violation {
    Cycle { nodes: Vec<String> },
    EdgeIntoPrime { from: String, to: String },
    /// A node that value-determined others while not reachable from any prime.
    DisconnectedMember { node: String },
    NonLocalEdge { from: String, to: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniverseConditions {
    /// Every link joins co-located systems.
    pub locality: bool,
    /// At least one system sits outside every chain.
    pub udcs_exist: bool,
}

impl ChainGraph {
    /// Structure constraints on the slice at the chain clock.
    pub fn validate(&self) -> ValidationReport {
        self.validate_at(self.clock())
    }

    /// Structure constraints on the links live at `t`.
    pub fn validate_at(&self, t: f64) -> ValidationReport {
        let mut violations = Vec::new();
        let live: Vec<_> = self.live_edges(t).collect();
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in &live {
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        for cycle in cycles(&adj) {
            violations.push(Violation::Cycle { nodes: cycle });
        }
        for e in &live {
            let to = self.node(&e.to).map(|n| n.role_class);
            if to == Ok(RoleClass::PrimeInitiator) {
                violations.push(Violation::EdgeIntoPrime { from: e.from.clone(), to: e.to.clone() });
            }
            let (a, b) = (self.node(&e.from), self.node(&e.to));
            if let (Ok(a), Ok(b)) = (a, b) {
                if matches!((&a.position, &b.position), (Some(x), Some(y)) if x != y) {
                    violations.push(Violation::NonLocalEdge { from: e.from.clone(), to: e.to.clone() });
                }
            }
        }
        // a link is judged by its source's membership when it last ticked
        let mut disconnected = BTreeSet::new();
        for e in &live {
            let last = e.ticks[e.ticks_until(t) - 1];
            if !self.memberships(last).get(&e.from).is_some_and(|m| m.is_sdc()) {
                disconnected.insert(e.from.as_str());
            }
        }
        for s in disconnected {
            violations.push(Violation::DisconnectedMember { node: s.to_string() });
        }
        ValidationReport { violations }
    }

    /// Locality of every recorded link and the existence of systems outside
    /// every chain at `t`.
    pub fn universe_conditions(&self, t: f64) -> UniverseConditions {
        let locality = self.edges().all(|e| match (self.node(&e.from), self.node(&e.to)) {
            (Ok(a), Ok(b)) => !matches!((&a.position, &b.position), (Some(x), Some(y)) if x != y),
            _ => false,
        });
        let udcs_exist = self.memberships(t).values().any(|m| !m.is_sdc());
        UniverseConditions { locality, udcs_exist }
    }
}

/// One representative node list per strongly connected component that
/// contains a cycle.
fn cycles(adj: &BTreeMap<&str, Vec<&str>>) -> Vec<Vec<String>> {
    let nodes: BTreeSet<&str> = adj.iter().flat_map(|(k, v)| std::iter::once(*k).chain(v.iter().copied())).collect();
    let reach = |from: &str| {
        let mut seen = BTreeSet::new();
        let mut stack = vec![from];
        while let Some(n) = stack.pop() {
            for &m in adj.get(n).into_iter().flatten() {
                if seen.insert(m) {
                    stack.push(m);
                }
            }
        }
        seen
    };
    let reach: BTreeMap<&str, BTreeSet<&str>> = nodes.iter().map(|&n| (n, reach(n))).collect();
    let mut done: BTreeSet<String> = BTreeSet::new();
    let mut out = Vec::new();
    for &n in &nodes {
        if done.contains(n) || !reach[n].contains(n) {
            continue;
        }
        let comp: Vec<String> = nodes
            .iter()
            .filter(|&&m| reach[n].contains(m) && reach[m].contains(n))
            .map(|m| m.to_string())
            .collect();
        done.extend(comp.iter().cloned());
        out.push(comp);
    }
    out
}
