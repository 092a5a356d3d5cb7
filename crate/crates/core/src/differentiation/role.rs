use serde::{Deserialize, Serialize};

use super::coupling::PointerCoupling;
use super::measure::OverlapMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum InteractionRole {
    ValueDetermining,
    StableDifferentiator,
    UnstableDifferentiator,
    Undifferentiator,
    SecondOrderUnstableDifferentiator,
    SecondOrderUnstableUndifferentiator,
}

/// Moduli closer than this count as equal.
pub const TREND_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Trend {
    Zero,
    Hold,
    Decreasing,
    Increasing,
    Mixed,
}

fn trend(series: &[f64]) -> Trend {
    if series.iter().all(|&m| m <= TREND_TOL) {
        return Trend::Zero;
    }
    let mut up = false;
    let mut down = false;
    for w in series.windows(2) {
        let d = w[1] - w[0];
        if d > TREND_TOL {
            up = true;
        } else if d < -TREND_TOL {
            down = true;
        }
    }
    match (up, down) {
        (false, false) => Trend::Hold,
        (false, true) => Trend::Decreasing,
        (true, false) => Trend::Increasing,
        (true, true) => Trend::Mixed,
    }
}

/// Role of a system–environment interaction from its overlap trajectory.
///
/// Pairs with a vanishing amplitude at any step are excluded. A trajectory
/// with no defined pair at all belongs to an already-differentiated property.
pub fn classify_role(
    coupling: &PointerCoupling,
    overlap_trajectory: &[OverlapMatrix],
    env_chain_connected: bool,
) -> Result<InteractionRole> {
    let Some(first) = overlap_trajectory.first() else {
        return Err(Error::AmbiguousRole { trajectory: Vec::new() });
    };
    let n = coupling.pointer().dim();
    if overlap_trajectory.iter().any(|o| o.dim() != n) {
        return Err(Error::SpaceMismatch("overlap matrices do not match the pointer dimension".into()));
    }
    let pairs: Vec<(usize, usize)> = first
        .off_diagonal_moduli()
        .into_iter()
        .map(|(p, _)| p)
        .filter(|&(i, j)| overlap_trajectory.iter().all(|o| o.get(i, j).is_some()))
        .collect();
    let envelope: Vec<f64> = overlap_trajectory
        .iter()
        .map(|o| pairs.iter().map(|&(i, j)| o.get(i, j).map_or(0.0, |z| z.norm())).fold(0.0, f64::max))
        .collect();
    let trends: Vec<Trend> = pairs
        .iter()
        .map(|&(i, j)| {
            let series: Vec<f64> = overlap_trajectory.iter().map(|o| o.get(i, j).map_or(0.0, |z| z.norm())).collect();
            trend(&series)
        })
        .collect();
    let has = |t: Trend| trends.contains(&t);
    let ambiguous = || Error::AmbiguousRole { trajectory: envelope.clone() };

    if has(Trend::Mixed) || (has(Trend::Increasing) && has(Trend::Decreasing)) {
        return Err(ambiguous());
    }
    if has(Trend::Increasing) {
        return Ok(InteractionRole::Undifferentiator);
    }
    let all_zero = trends.iter().all(|&t| t == Trend::Zero);
    match (env_chain_connected, all_zero, has(Trend::Decreasing)) {
        (true, true, _) => Ok(InteractionRole::ValueDetermining),
        (true, false, true) => Ok(InteractionRole::StableDifferentiator),
        (true, false, false) => Err(ambiguous()),
        (false, _, _) => Ok(InteractionRole::UnstableDifferentiator),
    }
}

/// Second-order roles of a mode transformation: one occupied input mode
/// spread over several output modes undifferentiates the particle-number
/// property; several merged into one differentiates it.
pub fn classify_mode_transformation(occupied_in: usize, occupied_out: usize) -> Result<InteractionRole> {
    match (occupied_in, occupied_out) {
        (1, n) if n > 1 => Ok(InteractionRole::SecondOrderUnstableUndifferentiator),
        (n, 1) if n > 1 => Ok(InteractionRole::SecondOrderUnstableDifferentiator),
        (a, b) => Err(Error::AmbiguousRole { trajectory: vec![a as f64, b as f64] }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trend_classes() {
        assert_eq!(trend(&[0.0, 1e-12]), Trend::Zero);
        assert_eq!(trend(&[1.0, 0.5, 0.0]), Trend::Decreasing);
        assert_eq!(trend(&[0.0, 0.5, 1.0]), Trend::Increasing);
        assert_eq!(trend(&[0.7, 0.7]), Trend::Hold);
        assert_eq!(trend(&[1.0, 0.2, 0.6]), Trend::Mixed);
    }

    #[test]
    fn mode_signatures() {
        assert_eq!(classify_mode_transformation(1, 2).unwrap(), InteractionRole::SecondOrderUnstableUndifferentiator);
        assert_eq!(classify_mode_transformation(2, 1).unwrap(), InteractionRole::SecondOrderUnstableDifferentiator);
        assert!(classify_mode_transformation(1, 1).is_err());
    }
}
