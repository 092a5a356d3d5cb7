use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::choi::{ChoiMatrix, CHOI_TOL};
use crate::error::{Error, Result};
use crate::quantum::linalg::{self, CMatrix};
use crate::quantum::{HilbertSpace, Subsystem};

/// Tolerance for commutators, products and normalization.
pub const PROCESS_TOL: f64 = 1e-8;

/// A locus of intervention with input and output wires.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcmNode {
    pub name: String,
    pub input: HilbertSpace,
    pub output: HilbertSpace,
}

impl QcmNode {
    /// Wires are labeled `{name}.in{k}` and `{name}.out{k}`.
    pub fn new(name: &str, input_dims: &[usize], output_dims: &[usize]) -> Result<Self> {
        let wires = |kind: &str, dims: &[usize]| {
            HilbertSpace::new(dims.iter().enumerate().map(|(k, &d)| Subsystem::new(format!("{name}.{kind}{k}"), d)).collect())
        };
        Ok(Self { name: name.to_string(), input: wires("in", input_dims)?, output: wires("out", output_dims)? })
    }

    pub fn input_labels(&self) -> Vec<&str> {
        self.input.labels().collect()
    }

    pub fn output_labels(&self) -> Vec<&str> {
        self.output.labels().collect()
    }
}

/// Process operator `σ = Π_i ρ_{A_i|Pa(A_i)}` over a DAG of nodes. Each
/// factor maps the parents' outputs to the node's input; roots carry a state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawProcess", into = "RawProcess")]
pub struct ProcessOperator {
    nodes: Vec<QcmNode>,
    parents: BTreeMap<String, Vec<String>>,
    factors: BTreeMap<String, ChoiMatrix>,
    tags: BTreeMap<String, String>,
    space: HilbertSpace,
    sigma: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct RawProcess {
    nodes: Vec<QcmNode>,
    parents: BTreeMap<String, Vec<String>>,
    factors: BTreeMap<String, ChoiMatrix>,
    #[serde(default)]
    tags: BTreeMap<String, String>,
}

impl From<ProcessOperator> for RawProcess {
    fn from(p: ProcessOperator) -> Self {
        RawProcess { nodes: p.nodes, parents: p.parents, factors: p.factors, tags: p.tags }
    }
}

impl TryFrom<RawProcess> for ProcessOperator {
    type Error = Error;
    fn try_from(r: RawProcess) -> Result<Self> {
        let mut p = ProcessOperator::new(r.nodes, r.parents, r.factors)?;
        p.tags = r.tags;
        Ok(p)
    }
}

impl ProcessOperator {
    /// Checks the DAG, that each factor maps the parents' outputs to the
    /// node's input, and that each factor is a channel.
    pub fn new(
        nodes: Vec<QcmNode>,
        parents: BTreeMap<String, Vec<String>>,
        factors: BTreeMap<String, ChoiMatrix>,
    ) -> Result<Self> {
        let p = Self::assemble(nodes, parents, factors)?;
        let by_name: BTreeMap<&str, &QcmNode> = p.nodes.iter().map(|n| (n.name.as_str(), n)).collect();
        for node in &p.nodes {
            let factor = &p.factors[&node.name];
            let mut pa_out = HilbertSpace::trivial();
            for parent in &p.parents[&node.name] {
                let pn = by_name.get(parent.as_str()).ok_or_else(|| Error::InvalidProcess(format!("unknown parent `{parent}`")))?;
                pa_out = pa_out.concat(&pn.output)?;
            }
            if !factor.input().same_factors(&pa_out) || !factor.output().same_factors(&node.input) {
                return Err(Error::InvalidProcess(format!(
                    "factor of `{}` must map its parents' outputs to its input",
                    node.name
                )));
            }
            if !factor.is_trace_preserving() {
                return Err(Error::InvalidProcess(format!(
                    "factor of `{}` is not trace preserving (error {:.3e})",
                    node.name,
                    factor.trace_preservation_error()
                )));
            }
        }
        p.check_acyclic()?;
        Ok(p)
    }

    /// Builds `σ` from factors on any wires of the nodes, without channel or
    /// DAG checks. Used to examine arbitrary operator products.
    pub fn assemble(
        nodes: Vec<QcmNode>,
        parents: BTreeMap<String, Vec<String>>,
        factors: BTreeMap<String, ChoiMatrix>,
    ) -> Result<Self> {
        let mut space = HilbertSpace::trivial();
        let mut names = BTreeSet::new();
        for n in &nodes {
            if !names.insert(n.name.clone()) {
                return Err(Error::InvalidProcess(format!("duplicate node `{}`", n.name)));
            }
            space = space.concat(&n.input)?.concat(&n.output)?;
        }
        let mut parents = parents;
        for n in &nodes {
            if !factors.contains_key(&n.name) {
                return Err(Error::InvalidProcess(format!("node `{}` has no factor", n.name)));
            }
            parents.entry(n.name.clone()).or_default();
        }
        if let Some(extra) = factors.keys().find(|k| !names.contains(*k)) {
            return Err(Error::InvalidProcess(format!("factor for unknown node `{extra}`")));
        }
        let order: Vec<String> = nodes.iter().map(|n| n.name.clone()).collect();
        let sigma = product(&factors, &order, &space)?;
        Ok(Self { nodes, parents, factors, tags: BTreeMap::new(), space, sigma })
    }

    fn check_acyclic(&self) -> Result<()> {
        let mut state: BTreeMap<&str, u8> = BTreeMap::new();
        fn visit<'a>(
            n: &'a str,
            parents: &'a BTreeMap<String, Vec<String>>,
            state: &mut BTreeMap<&'a str, u8>,
        ) -> Result<()> {
            match state.get(n) {
                Some(2) => return Ok(()),
                Some(1) => return Err(Error::InvalidProcess(format!("causal structure has a cycle through `{n}`"))),
                _ => {}
            }
            state.insert(n, 1);
            for p in parents.get(n).into_iter().flatten() {
                visit(p, parents, state)?;
            }
            state.insert(n, 2);
            Ok(())
        }
        for n in &self.nodes {
            visit(&n.name, &self.parents, &mut state)?;
        }
        Ok(())
    }

    pub fn nodes(&self) -> &[QcmNode] {
        &self.nodes
    }

    pub fn node(&self, name: &str) -> Option<&QcmNode> {
        self.nodes.iter().find(|n| n.name == name)
    }

    pub fn parents(&self, node: &str) -> &[String] {
        self.parents.get(node).map_or(&[], Vec::as_slice)
    }

    pub fn factor(&self, node: &str) -> Option<&ChoiMatrix> {
        self.factors.get(node)
    }

    pub fn factors(&self) -> &BTreeMap<String, ChoiMatrix> {
        &self.factors
    }

    /// Interpretive annotation on a factor; no numerical effect.
    pub fn set_tag(&mut self, node: &str, tag: &str) {
        self.tags.insert(node.to_string(), tag.to_string());
    }

    pub fn tag(&self, node: &str) -> Option<&str> {
        self.tags.get(node).map(String::as_str)
    }

    /// Node-major wires: each node's input then output factors.
    pub fn space(&self) -> &HilbertSpace {
        &self.space
    }

    pub fn sigma(&self) -> &CMatrix {
        &self.sigma
    }

    /// Factor `node` padded with identities to the full wire space.
    pub fn padded_factor(&self, node: &str) -> Result<CMatrix> {
        let f = self.factors.get(node).ok_or_else(|| Error::InvalidProcess(format!("unknown node `{node}`")))?;
        linalg::embed(f.matrix(), &f.space(), &self.space)
    }

    /// The same process with `σ` recomputed as the product in `order`.
    pub fn with_product_order(&self, order: &[&str]) -> Result<Self> {
        let set: BTreeSet<&str> = order.iter().copied().collect();
        if set.len() != self.nodes.len() || self.nodes.iter().any(|n| !set.contains(n.name.as_str())) {
            return Err(Error::InvalidProcess("order must list every node once".into()));
        }
        let order: Vec<String> = order.iter().map(|s| s.to_string()).collect();
        Ok(Self { sigma: product(&self.factors, &order, &self.space)?, ..self.clone() })
    }
}

fn product(factors: &BTreeMap<String, ChoiMatrix>, order: &[String], space: &HilbertSpace) -> Result<CMatrix> {
    let n = space.total_dim();
    let mut sigma = CMatrix::identity(n, n);
    for name in order {
        let f = &factors[name];
        sigma *= linalg::embed(f.matrix(), &f.space(), space)?;
    }
    Ok(sigma)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QmcReport {
    /// `‖[ρ_i, ρ_j]‖_max` for every pair of nodes.
    pub commutators: Vec<(String, String, f64)>,
    pub non_commuting: Vec<(String, String)>,
    /// `‖σ − Π_i ρ_i‖_max`.
    pub product_error: f64,
}

impl QmcReport {
    pub fn is_ok(&self) -> bool {
        self.non_commuting.is_empty() && self.product_error < PROCESS_TOL
    }
}

/// Quantum Markov condition: padded factors commute pairwise and `σ` is
/// their product.
pub fn check_qmc(p: &ProcessOperator) -> Result<QmcReport> {
    let names: Vec<&str> = p.nodes.iter().map(|n| n.name.as_str()).collect();
    let padded: Vec<CMatrix> = names.iter().map(|n| p.padded_factor(n)).collect::<Result<_>>()?;
    let mut commutators = Vec::new();
    let mut non_commuting = Vec::new();
    for i in 0..names.len() {
        for j in i + 1..names.len() {
            let c = linalg::max_abs(&(&padded[i] * &padded[j] - &padded[j] * &padded[i]));
            if c >= PROCESS_TOL {
                non_commuting.push((names[i].to_string(), names[j].to_string()));
            }
            commutators.push((names[i].to_string(), names[j].to_string(), c));
        }
    }
    let n = p.space.total_dim();
    let prod = padded.iter().fold(CMatrix::identity(n, n), |acc, f| acc * f);
    let product_error = linalg::max_abs(&(&p.sigma - prod));
    Ok(QmcReport { commutators, non_commuting, product_error })
}

/// Outcome `outcome` of intervention `setting` at `node`: a CP map from
/// the node's input to its output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterventionMap {
    pub node: String,
    pub setting: String,
    pub outcome: String,
    pub choi: ChoiMatrix,
}

/// All outcomes of one setting at one node; their sum is a channel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instrument {
    pub node: String,
    pub setting: String,
    pub elements: Vec<InterventionMap>,
}

impl Instrument {
    pub fn new(node: &str, setting: &str, elements: Vec<(String, ChoiMatrix)>) -> Result<Self> {
        let Some((_, first)) = elements.first() else {
            return Err(Error::InvalidProcess("instrument has no outcomes".into()));
        };
        let (input, output) = (first.input().clone(), first.output().clone());
        let mut total = CMatrix::zeros(first.matrix().nrows(), first.matrix().ncols());
        for (_, c) in &elements {
            if c.input() != &input || c.output() != &output {
                return Err(Error::InvalidProcess("instrument elements act on different wires".into()));
            }
            total += c.matrix();
        }
        let sum = ChoiMatrix::new(input, output, total)?;
        let err = sum.trace_preservation_error();
        if err > CHOI_TOL {
            return Err(Error::InvalidProcess(format!("instrument `{setting}` at `{node}` is incomplete (error {err:.3e})")));
        }
        let elements = elements
            .into_iter()
            .map(|(outcome, choi)| InterventionMap { node: node.into(), setting: setting.into(), outcome, choi })
            .collect();
        Ok(Self { node: node.into(), setting: setting.into(), elements })
    }

    /// Projective measurement of `observable` on a node with no output
    /// wires; element `k` is `Π_k^T` and its outcome id is the eigenvalue.
    pub fn projective(node: &QcmNode, setting: &str, observable: &crate::quantum::Observable) -> Result<Self> {
        if !node.output.is_empty() {
            return Err(Error::InvalidProcess(format!("node `{}` has output wires", node.name)));
        }
        if observable.space().dims() != node.input.dims() {
            return Err(Error::SpaceMismatch("observable does not fit the node's input".into()));
        }
        let elements = observable
            .eigenvalues()
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let c = ChoiMatrix::new(node.input.clone(), HilbertSpace::trivial(), observable.projector(k).transpose())?;
                Ok((format!("{v}"), c))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(&node.name, setting, elements)
    }

    /// Single-outcome pass-through from input to output.
    pub fn identity(node: &QcmNode) -> Result<Self> {
        let c = ChoiMatrix::identity_channel(&node.input, &node.output)?;
        Self::new(&node.name, "identity", vec![("pass".into(), c)])
    }

    pub fn element(&self, outcome: &str) -> Option<&InterventionMap> {
        self.elements.iter().find(|e| e.outcome == outcome)
    }
}

/// `P = Tr[σ · ⊗_i τ_i^T]` for one intervention element per node.
pub fn qcm_born(p: &ProcessOperator, interventions: &[&InterventionMap]) -> Result<f64> {
    let mut by_node: BTreeMap<&str, &InterventionMap> = BTreeMap::new();
    for i in interventions {
        if p.node(&i.node).is_none() {
            return Err(Error::InvalidProcess(format!("intervention at unknown node `{}`", i.node)));
        }
        if by_node.insert(&i.node, i).is_some() {
            return Err(Error::IncompleteInterventionSet(format!("{} (supplied twice)", i.node)));
        }
    }
    let n = p.space.total_dim();
    let mut t = CMatrix::identity(n, n);
    for node in &p.nodes {
        let i = by_node.get(node.name.as_str()).ok_or_else(|| Error::IncompleteInterventionSet(node.name.clone()))?;
        if !i.choi.input().same_factors(&node.input) || !i.choi.output().same_factors(&node.output) {
            return Err(Error::SpaceMismatch(format!("intervention at `{}` does not act on its wires", node.name)));
        }
        t *= linalg::embed(&i.choi.matrix().transpose(), &i.choi.space(), &p.space)?;
    }
    // Tr[σ T] = Σ_ij σ_ij T_ji
    let tr: f64 = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (p.sigma[(i, j)] * t[(j, i)]).re).sum();
    Ok(tr)
}

/// Conditional probability table `P(child wires | parent wires)` read off
/// a diagonal factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub node: String,
    pub child: HilbertSpace,
    pub parents: HilbertSpace,
    /// Row-major over `(parent index, child index)`.
    pub probabilities: Vec<f64>,
}

impl ConditionalTable {
    pub fn get(&self, parent: usize, child: usize) -> f64 {
        self.probabilities[parent * self.child.total_dim() + child]
    }

    /// `parent,child,p` rows with basis indices.
    pub fn to_csv(&self) -> String {
        let dc = self.child.total_dim();
        let mut out = String::from("parent,child,p\n");
        for (k, p) in self.probabilities.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", k / dc, k % dc, p));
        }
        out
    }
}

/// Classical causal model recovered from a process with diagonal factors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModel {
    pub space: HilbertSpace,
    pub tables: Vec<ConditionalTable>,
}

/// Diagonality tolerance for the classical limit.
pub const DIAGONAL_TOL: f64 = 1e-10;

pub fn classical_limit(p: &ProcessOperator) -> Result<ClassicalModel> {
    let mut tables = Vec::new();
    for node in &p.nodes {
        let f = &p.factors[&node.name];
        let m = f.matrix();
        let n = m.nrows();
        let mut off: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off = off.max(m[(i, j)].norm());
                }
            }
        }
        if off > DIAGONAL_TOL {
            return Err(Error::NotDiagonal { node: node.name.clone(), max_off_diagonal: off });
        }
        let dc = f.output().total_dim();
        let dp = f.input().total_dim();
        // rows of the Choi matrix are (child, parent); tables are (parent, child)
        let probabilities = (0..dp).flat_map(|pa| (0..dc).map(move |ch| (pa, ch))).map(|(pa, ch)| m[(ch * dp + pa, ch * dp + pa)].re).collect();
        tables.push(ConditionalTable {
            node: node.name.clone(),
            child: f.output().clone(),
            parents: f.input().clone(),
            probabilities,
        });
    }
    Ok(ClassicalModel { space: p.space.clone(), tables })
}

impl ClassicalModel {
    /// Probability of the wire configuration with basis index `index` in
    /// `space`: the product of the conditional tables.
    pub fn joint(&self, index: usize) -> f64 {
        let digits = self.space.digits(index);
        let level = |label: &str| digits[self.space.position(label).expect("wire of the model")];
        self.tables
            .iter()
            .map(|t| {
                let child = t.child.index_of(&t.child.labels().map(level).collect::<Vec<_>>());
                let parent = t.parents.index_of(&t.parents.labels().map(level).collect::<Vec<_>>());
                t.get(parent, child)
            })
            .product()
    }

    /// Outcome probability as a sum over wire configurations of the table
    /// product weighted by each intervention's classical response
    /// `P(out, outcome | in)`, the diagonal of `τ^T`.
    pub fn probability(&self, interventions: &[&InterventionMap]) -> Result<f64> {
        let n = self.space.total_dim();
        let responses: Vec<(HilbertSpace, Vec<f64>)> = interventions
            .iter()
            .map(|i| {
                let s = i.choi.space();
                let d: Vec<f64> = (0..s.total_dim()).map(|k| i.choi.matrix()[(k, k)].re).collect();
                (s, d)
            })
            .collect();
        let mut total = 0.0;
        for idx in 0..n {
            let weight = self.joint(idx);
            if weight == 0.0 {
                continue;
            }
            let digits = self.space.digits(idx);
            let mut r = weight;
            for (s, d) in &responses {
                let local: Vec<usize> = s
                    .labels()
                    .map(|l| self.space.position(l).map(|p| digits[p]).ok_or_else(|| Error::UnknownLabel(l.into())))
                    .collect::<Result<_>>()?;
                r *= d[s.index_of(&local)];
            }
            total += r;
        }
        Ok(total)
    }
}

/// Whether `from` (input wires) can influence `to` (output wires) through
/// the channel: false iff `Tr_Z C = ρ_{K|Y} ⊗ I_X` with `Z` the other
/// outputs and `Y` the other inputs.
pub fn no_influence(u_choi: &ChoiMatrix, from: &[&str], to: &[&str]) -> Result<bool> {
    let x = u_choi.input().select(from)?;
    let k = u_choi.output().select(to)?;
    let y = u_choi.input().complement(from);
    let full = u_choi.space();
    let kxy = k.concat(&x)?.concat(&y)?;
    let traced = linalg::partial_trace(u_choi.matrix(), &full, &kxy)?;
    let ky = k.concat(&y)?;
    let dx = x.total_dim() as f64;
    let rho_k_y = linalg::partial_trace(&traced, &kxy, &ky)? / linalg::c(dx, 0.0);
    let rebuilt = linalg::embed(&rho_k_y, &ky, &kxy)?;
    Ok(linalg::max_abs(&(traced - rebuilt)) < PROCESS_TOL)
}
