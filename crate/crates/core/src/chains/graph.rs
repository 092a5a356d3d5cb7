use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoleClass {
    PrimeInitiator,
    SubordinateInitiator,
    NonInitiator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChainNode {
    pub system: String,
    pub position: Option<String>,
    pub role_class: RoleClass,
}

impl ChainNode {
    pub fn new(system: impl Into<String>, role_class: RoleClass) -> Self {
        Self { system: system.into(), position: None, role_class }
    }

    pub fn at(mut self, position: impl Into<String>) -> Self {
        self.position = Some(position.into());
        self
    }
}

/// `window_length` is Δt; a link is live at `t` when it has at least
/// `min_ticks` ticks in `(t − Δt, t]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StabilityParams {
    pub window_length: f64,
    pub min_ticks: usize,
}

impl StabilityParams {
    pub fn new(window_length: f64, min_ticks: usize) -> Result<Self> {
        if !(window_length > 0.0 && window_length.is_finite()) {
            return Err(Error::InvalidStability(format!("window length {window_length} must be positive")));
        }
        if min_ticks == 0 {
            return Err(Error::InvalidStability("min_ticks must be at least 1".into()));
        }
        Ok(Self { window_length, min_ticks })
    }
}

impl Default for StabilityParams {
    fn default() -> Self {
        Self { window_length: 1.0, min_ticks: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueDeterminationEdge {
    pub from: String,
    pub to: String,
    /// Sorted interaction instants.
    pub ticks: Vec<f64>,
    /// Prime-to-subordinate initiator interaction.
    pub blueprint: bool,
}

impl ValueDeterminationEdge {
    /// `(first tick, last tick + Δt)`.
    pub fn window(&self, stability: &StabilityParams) -> Option<(f64, f64)> {
        Some((*self.ticks.first()?, self.ticks.last()? + stability.window_length))
    }

    pub fn ticks_until(&self, t: f64) -> usize {
        self.ticks.partition_point(|&x| x <= t)
    }

    fn ticks_in_window(&self, t: f64, window: f64) -> usize {
        self.ticks_until(t) - self.ticks.partition_point(|&x| x + window <= t)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Membership {
    /// Member of the chain identified by its prime initiator.
    Sdc { chain: String },
    Udc,
}

impl Membership {
    pub fn is_sdc(&self) -> bool {
        matches!(self, Membership::Sdc { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gate {
    Permit,
    Deny,
}

impl Gate {
    pub fn is_permit(self) -> bool {
        self == Gate::Permit
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TickOutcome {
    Recorded,
    /// The source was not a chain member: no edge, logged only.
    UnstableDifferentiation,
    /// The pair straddles an active isolation boundary.
    Blocked,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IsolationOutcome {
    pub cut_edges: Vec<(String, String)>,
    /// Time from which members inside the boundary have lapsed, if any edge was cut.
    pub lapse_time: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum ChainEvent {
    Tick { from: String, to: String, t: f64, blueprint: bool },
    UnstableDifferentiation { from: String, to: String, t: f64 },
    Blocked { from: String, to: String, t: f64 },
    Isolated { boundary: Vec<String>, t: f64, cut: Vec<(String, String)>, lapse_time: f64 },
    Reopened { boundary: Vec<String>, t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Isolation {
    boundary: BTreeSet<String>,
    start: f64,
    end: Option<f64>,
}

impl Isolation {
    fn active_at(&self, t: f64) -> bool {
        self.start <= t && self.end.is_none_or(|e| t < e)
    }

    fn separates(&self, a: &str, b: &str) -> bool {
        self.boundary.contains(a) != self.boundary.contains(b)
    }
}

/// Timestamped value-determination graph. Membership is derived lazily
/// from tick history; mutations require non-decreasing event times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainGraph {
    nodes: BTreeMap<String, ChainNode>,
    edges: BTreeMap<(String, String), ValueDeterminationEdge>,
    stability: StabilityParams,
    isolations: Vec<Isolation>,
    events: Vec<ChainEvent>,
    clock: f64,
}

impl ChainGraph {
    pub fn new(stability: StabilityParams) -> Result<Self> {
        let stability = StabilityParams::new(stability.window_length, stability.min_ticks)?;
        Ok(Self {
            nodes: BTreeMap::new(),
            edges: BTreeMap::new(),
            stability,
            isolations: Vec::new(),
            events: Vec::new(),
            clock: f64::NEG_INFINITY,
        })
    }

    pub fn add_node(&mut self, node: ChainNode) -> Result<()> {
        if self.nodes.contains_key(&node.system) {
            return Err(Error::DuplicateSystem(node.system));
        }
        self.nodes.insert(node.system.clone(), node);
        Ok(())
    }

    /// Declares an initiator 2-tuple, adding both systems.
    pub fn declare_initiators(&mut self, prime: &str, subordinate: &str) -> Result<()> {
        if prime == subordinate {
            return Err(Error::DuplicateSystem(prime.to_string()));
        }
        self.add_node(ChainNode::new(prime, RoleClass::PrimeInitiator))?;
        self.add_node(ChainNode::new(subordinate, RoleClass::SubordinateInitiator))
    }

    pub fn add_system(&mut self, system: &str) -> Result<()> {
        self.add_node(ChainNode::new(system, RoleClass::NonInitiator))
    }

    pub fn stability(&self) -> &StabilityParams {
        &self.stability
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ChainNode> {
        self.nodes.values()
    }

    pub fn node(&self, system: &str) -> Result<&ChainNode> {
        self.nodes.get(system).ok_or_else(|| Error::UnknownSystem(system.to_string()))
    }

    pub fn edges(&self) -> impl Iterator<Item = &ValueDeterminationEdge> {
        self.edges.values()
    }

    pub fn edge(&self, from: &str, to: &str) -> Option<&ValueDeterminationEdge> {
        self.edges.get(&(from.to_string(), to.to_string()))
    }

    pub fn events(&self) -> &[ChainEvent] {
        &self.events
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn events_json(&self) -> String {
        serde_json::to_string_pretty(&self.events).expect("events serialize")
    }

    /// Inserts ticks without membership, isolation or structure checks, so
    /// that arbitrary (possibly invalid) graphs can be built for `validate`.
    pub fn insert_edge_unchecked(&mut self, from: &str, to: &str, ticks: &[f64]) -> Result<()> {
        let blueprint = self.is_blueprint(from, to)?;
        let e = self.edges.entry((from.to_string(), to.to_string())).or_insert_with(|| ValueDeterminationEdge {
            from: from.to_string(),
            to: to.to_string(),
            ticks: Vec::new(),
            blueprint,
        });
        e.ticks.extend_from_slice(ticks);
        e.ticks.sort_by(f64::total_cmp);
        Ok(())
    }

    fn is_blueprint(&self, from: &str, to: &str) -> Result<bool> {
        Ok(self.node(from)?.role_class == RoleClass::PrimeInitiator
            && self.node(to)?.role_class == RoleClass::SubordinateInitiator)
    }

    fn advance_clock(&mut self, t: f64) -> Result<()> {
        if !t.is_finite() || t < self.clock {
            return Err(Error::NonMonotoneTime { t, clock: self.clock });
        }
        self.clock = t;
        Ok(())
    }

    /// Records that `from` value-determined a property of `to` at `t`.
    pub fn record_value_determination(&mut self, from: &str, to: &str, t: f64) -> Result<TickOutcome> {
        let src = self.node(from)?;
        let dst = self.node(to)?;
        if dst.role_class == RoleClass::PrimeInitiator {
            return Err(Error::PrimeTarget { from: from.into(), to: to.into() });
        }
        if let (Some(a), Some(b)) = (&src.position, &dst.position) {
            if a != b {
                return Err(Error::NonLocal { from: from.into(), to: to.into() });
            }
        }
        if from == to {
            return Err(Error::CycleRejected { from: from.into(), to: to.into() });
        }
        if !t.is_finite() || t < self.clock {
            return Err(Error::NonMonotoneTime { t, clock: self.clock });
        }
        if self.isolations.iter().any(|i| i.active_at(t) && i.separates(from, to)) {
            self.advance_clock(t)?;
            self.events.push(ChainEvent::Blocked { from: from.into(), to: to.into(), t });
            return Ok(TickOutcome::Blocked);
        }
        if !self.membership(from, t)?.is_sdc() {
            self.advance_clock(t)?;
            self.events.push(ChainEvent::UnstableDifferentiation { from: from.into(), to: to.into(), t });
            return Ok(TickOutcome::UnstableDifferentiation);
        }
        // a path to → … → from among live links would close a cycle
        if self.reaches(to, from, t) {
            return Err(Error::CycleRejected { from: from.into(), to: to.into() });
        }
        self.advance_clock(t)?;
        let blueprint = self.is_blueprint(from, to)?;
        self.insert_edge_unchecked(from, to, &[t])?;
        self.events.push(ChainEvent::Tick { from: from.into(), to: to.into(), t, blueprint });
        Ok(TickOutcome::Recorded)
    }

    /// Cuts every link crossing `boundary` from `t` on.
    pub fn isolate(&mut self, boundary: &[&str], t: f64) -> Result<IsolationOutcome> {
        if boundary.is_empty() {
            return Err(Error::EmptyBoundary);
        }
        for s in boundary {
            self.node(s)?;
        }
        let set: BTreeSet<String> = boundary.iter().map(|s| s.to_string()).collect();
        let cut: Vec<(String, String)> = self
            .edges
            .keys()
            .filter(|(a, b)| set.contains(a) != set.contains(b))
            .cloned()
            .collect();
        if cut.is_empty() {
            return Ok(IsolationOutcome { cut_edges: cut, lapse_time: None });
        }
        self.advance_clock(t)?;
        let lapse_time = t + self.stability.window_length;
        self.isolations.push(Isolation { boundary: set.clone(), start: t, end: None });
        self.events.push(ChainEvent::Isolated {
            boundary: set.into_iter().collect(),
            t,
            cut: cut.clone(),
            lapse_time,
        });
        Ok(IsolationOutcome { cut_edges: cut, lapse_time: Some(lapse_time) })
    }

    /// Ends the active isolation with exactly this boundary. Returns false
    /// if there was none.
    pub fn reopen(&mut self, boundary: &[&str], t: f64) -> Result<bool> {
        let set: BTreeSet<String> = boundary.iter().map(|s| s.to_string()).collect();
        let Some(idx) = self.isolations.iter().position(|i| i.boundary == set && i.end.is_none()) else {
            return Ok(false);
        };
        self.advance_clock(t)?;
        self.isolations[idx].end = Some(t);
        self.events.push(ChainEvent::Reopened { boundary: set.into_iter().collect(), t });
        Ok(true)
    }

    pub fn is_isolated(&self, system: &str, t: f64) -> bool {
        self.isolations.iter().any(|i| i.active_at(t) && i.boundary.contains(system))
    }

    pub(crate) fn live_edges(&self, t: f64) -> impl Iterator<Item = &ValueDeterminationEdge> {
        let w = self.stability.window_length;
        let k = self.stability.min_ticks;
        self.edges.values().filter(move |e| e.ticks_in_window(t, w) >= k)
    }

    fn reaches(&self, from: &str, to: &str, t: f64) -> bool {
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in self.live_edges(t) {
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        let mut seen = BTreeSet::new();
        let mut queue = VecDeque::from([from]);
        while let Some(n) = queue.pop_front() {
            if n == to {
                return true;
            }
            if seen.insert(n) {
                queue.extend(adj.get(n).into_iter().flatten().copied());
            }
        }
        false
    }

    /// Chain membership of every node at `t`.
    pub fn memberships(&self, t: f64) -> BTreeMap<String, Membership> {
        let mut chain_of: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::new();
        for n in self.nodes.values() {
            if n.role_class == RoleClass::PrimeInitiator {
                chain_of.insert(&n.system, &n.system);
                queue.push_back(n.system.as_str());
            }
        }
        // subordinate initiators belong from their first blueprint tick on
        for e in self.edges.values() {
            if e.blueprint && e.ticks_until(t) > 0 && !chain_of.contains_key(e.to.as_str()) {
                chain_of.insert(&e.to, &e.from);
                queue.push_back(e.to.as_str());
            }
        }
        let mut adj: BTreeMap<&str, Vec<&str>> = BTreeMap::new();
        for e in self.live_edges(t) {
            adj.entry(e.from.as_str()).or_default().push(e.to.as_str());
        }
        while let Some(n) = queue.pop_front() {
            let chain = chain_of[n];
            for &m in adj.get(n).into_iter().flatten() {
                if !chain_of.contains_key(m) {
                    chain_of.insert(m, chain);
                    queue.push_back(m);
                }
            }
        }
        self.nodes
            .keys()
            .map(|k| {
                let m = chain_of
                    .get(k.as_str())
                    .map_or(Membership::Udc, |c| Membership::Sdc { chain: c.to_string() });
                (k.clone(), m)
            })
            .collect()
    }

    pub fn membership(&self, system: &str, t: f64) -> Result<Membership> {
        self.node(system)?;
        Ok(self.memberships(t).remove(system).unwrap_or(Membership::Udc))
    }

    /// Permit iff `env` is a chain member at `t`.
    pub fn determinacy_gate(&self, system: &str, env: &str, t: f64) -> Result<Gate> {
        self.node(system)?;
        let gate = if self.membership(env, t)?.is_sdc() { Gate::Permit } else { Gate::Deny };
        debug_assert!(!gate.is_permit() || self.membership(env, t).is_ok_and(|m| m.is_sdc()));
        Ok(gate)
    }
}
