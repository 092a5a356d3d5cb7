use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quantum::linalg::{self, CMatrix};
use crate::quantum::{von_neumann_entropy, DensityOperator, HilbertSpace, Observable, PureState};

/// Amplitudes below this leave the conditional environment state undefined.
pub const AMPLITUDE_TOL: f64 = 1e-9;

/// Overlaps `⟨Ê_j|Ê_i⟩` between normalized conditional environment states,
/// indexed by pointer eigenvector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapMatrix {
    dim: usize,
    /// `|α_i|` per pointer eigenvector.
    weights: Vec<f64>,
    /// Row-major `[re, im]`, `None` where an amplitude vanishes.
    entries: Vec<Option<[f64; 2]>>,
}

impl OverlapMatrix {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize, j: usize) -> Option<Complex64> {
        self.entries[i * self.dim + j].map(|[re, im]| Complex64::new(re, im))
    }

    pub fn is_defined(&self, i: usize) -> bool {
        self.weights[i] > AMPLITUDE_TOL
    }

    /// `((i, j), |⟨Ê_j|Ê_i⟩|)` for every defined pair `i < j`.
    pub fn off_diagonal_moduli(&self) -> Vec<((usize, usize), f64)> {
        let mut out = Vec::new();
        for i in 0..self.dim {
            for j in i + 1..self.dim {
                if let Some(z) = self.get(i, j) {
                    out.push(((i, j), z.norm()));
                }
            }
        }
        out
    }

    /// Largest defined off-diagonal modulus, `None` if fewer than two
    /// amplitudes are non-zero.
    pub fn max_off_diagonal(&self) -> Option<f64> {
        self.off_diagonal_moduli().into_iter().map(|(_, m)| m).reduce(f64::max)
    }
}

/// Decomposes `joint = Σ α_i |s_i⟩|E_i⟩` in the pointer eigenbasis and
/// returns the overlaps of the normalized conditional environment states.
pub fn coherence_overlaps(joint: &PureState, system_label: &str, pointer: &Observable) -> Result<OverlapMatrix> {
    let labels: Vec<&str> = pointer.space().labels().collect();
    if labels != [system_label] {
        return Err(Error::SpaceMismatch(format!("pointer must act on `{system_label}` alone")));
    }
    let sys_dim = joint.space().dim_of(system_label)?;
    if sys_dim != pointer.dim() {
        return Err(Error::SpaceMismatch("pointer dimension differs from the system factor".into()));
    }
    let rest = joint.space().complement(&[system_label]);
    let ordered = pointer.space().concat(&rest)?;
    let psi = joint.reordered_like(&ordered)?;
    let env_dim = rest.total_dim();
    let a = psi.amplitudes();
    let grid = CMatrix::from_fn(sys_dim, env_dim, |s, e| a[s * env_dim + e]);
    // row i: (⟨s_i| ⊗ I)|Ψ⟩ = α_i |E_i⟩
    let mut conditional = pointer.eigenvectors().adjoint() * grid;
    let weights: Vec<f64> = (0..sys_dim).map(|i| conditional.row(i).norm()).collect();
    // α_i absorbs the phase of the first significant component of |E_i⟩
    for i in 0..sys_dim {
        if let Some(z) = conditional.row(i).iter().find(|z| z.norm() > AMPLITUDE_TOL * weights[i]).copied() {
            let phase = z.conj() / z.norm();
            conditional.row_mut(i).iter_mut().for_each(|x| *x *= phase);
        }
    }
    let mut entries = vec![None; sys_dim * sys_dim];
    for i in 0..sys_dim {
        for j in 0..sys_dim {
            if weights[i] > AMPLITUDE_TOL && weights[j] > AMPLITUDE_TOL {
                let ei = conditional.row(i);
                let ej = conditional.row(j);
                // ⟨Ê_j|Ê_i⟩ = Σ_e conj(E_j[e]) E_i[e]
                let z: Complex64 = ej.iter().zip(ei.iter()).map(|(x, y)| x.conj() * y).sum();
                let z = z / (weights[i] * weights[j]);
                entries[i * sys_dim + j] = Some([z.re, z.im]);
            }
        }
    }
    Ok(OverlapMatrix { dim: sys_dim, weights, entries })
}

/// `D* = S(ρ_S) / ln N` with `N` the dimension of `rho_s`.
pub fn degree_of_differentiation(rho_s: &DensityOperator, pointer: &Observable) -> Result<f64> {
    check_pointer_space(rho_s.space(), pointer)?;
    let n = rho_s.space().total_dim() as f64;
    Ok((von_neumann_entropy(rho_s) / n.ln()).clamp(0.0, 1.0))
}

/// The degree reached once every pointer-basis coherence is gone: the
/// normalized Shannon entropy of the pointer populations.
pub fn completed_degree(rho_s: &DensityOperator, pointer: &Observable) -> Result<f64> {
    let rotated = pointer_basis_matrix(rho_s, pointer)?;
    let n = rotated.nrows();
    let h: f64 = (0..n)
        .map(|k| rotated[(k, k)].re)
        .filter(|&p| p > crate::quantum::ENTROPY_FLOOR)
        .map(|p| -p * p.ln())
        .sum();
    Ok((h / (n as f64).ln() + 0.0).clamp(0.0, 1.0))
}

/// `ρ_S` written in the pointer eigenbasis.
pub fn pointer_basis_matrix(rho_s: &DensityOperator, pointer: &Observable) -> Result<CMatrix> {
    check_pointer_space(rho_s.space(), pointer)?;
    let rho = rho_s.reordered_like(pointer.space())?;
    let v = pointer.eigenvectors();
    Ok(v.adjoint() * rho.matrix() * v)
}

/// Largest pointer-basis coherence `|ρ_ij|`, `i ≠ j`.
pub fn max_coherence(rho_s: &DensityOperator, pointer: &Observable) -> Result<f64> {
    let m = pointer_basis_matrix(rho_s, pointer)?;
    let n = m.nrows();
    let mut best: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                best = best.max(m[(i, j)].norm());
            }
        }
    }
    Ok(best)
}

fn check_pointer_space(space: &HilbertSpace, pointer: &Observable) -> Result<()> {
    if !space.same_factors(pointer.space()) {
        return Err(Error::SpaceMismatch("pointer observable does not act on the reduced state".into()));
    }
    Ok(())
}

/// Reduced state rebuilt from amplitudes and overlaps:
/// `ρ_ij = α_i α_j* ⟨E_j|E_i⟩` in the pointer basis.
pub fn reduced_from_overlaps(overlaps: &OverlapMatrix, phases: &[Complex64]) -> CMatrix {
    let n = overlaps.dim();
    CMatrix::from_fn(n, n, |i, j| {
        let ai = phases[i] * overlaps.weights()[i];
        let aj = phases[j] * overlaps.weights()[j];
        overlaps.get(i, j).map_or(linalg::ZERO, |o| ai * aj.conj() * o)
    })
}
