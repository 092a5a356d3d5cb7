use std::collections::BTreeMap;

use super::choi::ChoiMatrix;
use super::process::{qcm_born, Instrument, ProcessOperator, QcmNode};
use crate::error::Result;
use crate::quantum::{singlet, Observable};

pub const SOURCE: &str = "L";
pub const ALICE: &str = "A";
pub const BOB: &str = "B";

/// Common-cause Bell model: a source node `L` whose two output wires feed
/// Alice's and Bob's measurement nodes.
#[derive(Debug, Clone)]
pub struct BellModel {
    pub process: ProcessOperator,
    pub source: Instrument,
    pub alice: QcmNode,
    pub bob: QcmNode,
}

impl BellModel {
    /// Singlet at the source; with `decohered`, every factor is replaced by
    /// its computational-basis diagonal.
    pub fn new(decohered: bool) -> Result<Self> {
        let source = QcmNode::new(SOURCE, &[2, 2], &[2, 2])?;
        let alice = QcmNode::new(ALICE, &[2], &[])?;
        let bob = QcmNode::new(BOB, &[2], &[])?;
        let [l0, l1] = [source.input_labels()[0], source.input_labels()[1]];
        let [o0, o1] = [source.output_labels()[0], source.output_labels()[1]];
        let rho = ChoiMatrix::from_state(&singlet(l0, l1)?.to_density());
        let to_a = ChoiMatrix::marginal_channel(&source.output, &[o0], &alice.input)?;
        let to_b = ChoiMatrix::marginal_channel(&source.output, &[o1], &bob.input)?;
        let mut factors = BTreeMap::from([
            (SOURCE.to_string(), rho),
            (ALICE.to_string(), to_a),
            (BOB.to_string(), to_b),
        ]);
        if decohered {
            factors.values_mut().for_each(|f| *f = f.dephased());
        }
        let parents = BTreeMap::from([
            (SOURCE.to_string(), vec![]),
            (ALICE.to_string(), vec![SOURCE.to_string()]),
            (BOB.to_string(), vec![SOURCE.to_string()]),
        ]);
        let mut process = ProcessOperator::new(vec![source.clone(), alice.clone(), bob.clone()], parents, factors)?;
        let tag = if decohered { "SDC" } else { "UDC" };
        for n in [SOURCE, ALICE, BOB] {
            process.set_tag(n, tag);
        }
        Ok(Self { source: Instrument::identity(&source)?, process, alice, bob })
    }

    /// Spin measurement along angle `theta` from z in the x–z plane.
    pub fn spin_instrument(node: &QcmNode, theta: f64) -> Result<Instrument> {
        let obs = Observable::spin(node.input_labels()[0], theta)?;
        Instrument::projective(node, &format!("{theta}"), &obs)
    }

    /// `P(a, b | θ_A, θ_B)` over outcome indices (0: −½, 1: +½).
    pub fn probabilities(&self, theta_a: f64, theta_b: f64) -> Result<[[f64; 2]; 2]> {
        let ia = Self::spin_instrument(&self.alice, theta_a)?;
        let ib = Self::spin_instrument(&self.bob, theta_b)?;
        let src = &self.source.elements[0];
        let mut out = [[0.0; 2]; 2];
        for (a, ea) in ia.elements.iter().enumerate() {
            for (b, eb) in ib.elements.iter().enumerate() {
                out[a][b] = qcm_born(&self.process, &[src, ea, eb])?;
            }
        }
        Ok(out)
    }

    /// `E = Σ_ab (±1)(±1) P(a, b)`.
    pub fn correlation(&self, theta_a: f64, theta_b: f64) -> Result<f64> {
        let p = self.probabilities(theta_a, theta_b)?;
        Ok(p[0][0] + p[1][1] - p[0][1] - p[1][0])
    }

    /// `S = E(a0,b0) − E(a0,b1) + E(a1,b0) + E(a1,b1)`.
    pub fn chsh(&self, alice: [f64; 2], bob: [f64; 2]) -> Result<f64> {
        Ok(self.correlation(alice[0], bob[0])? - self.correlation(alice[0], bob[1])?
            + self.correlation(alice[1], bob[0])?
            + self.correlation(alice[1], bob[1])?)
    }
}
