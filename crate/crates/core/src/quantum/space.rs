use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest composite dimension accepted unless a caller raises the cap.
pub const DEFAULT_DIM_CAP: usize = 4096;

/// One tensor factor of a composite space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Subsystem {
    pub label: String,
    pub dim: usize,
}

impl Subsystem {
    pub fn new(label: impl Into<String>, dim: usize) -> Self {
        Self { label: label.into(), dim }
    }

    pub fn qubit(label: impl Into<String>) -> Self {
        Self::new(label, 2)
    }
}

/// An ordered tensor product of labeled finite-dimensional factors.
///
/// Basis ordering is row-major over the subsystem sequence: the first
/// subsystem is the most significant digit, matching the Kronecker product
/// `a ⊗ b`. An empty subsystem list is the trivial one-dimensional space
/// used for nodes without inputs or outputs.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Subsystem>", into = "Vec<Subsystem>")]
pub struct HilbertSpace {
    subsystems: Vec<Subsystem>,
}

impl TryFrom<Vec<Subsystem>> for HilbertSpace {
    type Error = Error;

    fn try_from(subsystems: Vec<Subsystem>) -> Result<Self> {
        Self::new(subsystems)
    }
}

impl From<HilbertSpace> for Vec<Subsystem> {
    fn from(space: HilbertSpace) -> Self {
        space.subsystems
    }
}

impl HilbertSpace {
    pub fn new(subsystems: Vec<Subsystem>) -> Result<Self> {
        Self::with_cap(subsystems, DEFAULT_DIM_CAP)
    }

    pub fn with_cap(subsystems: Vec<Subsystem>, cap: usize) -> Result<Self> {
        let mut total = 1usize;
        for (i, s) in subsystems.iter().enumerate() {
            if s.dim < 2 {
                return Err(Error::InvalidDimension { label: s.label.clone(), dim: s.dim });
            }
            if subsystems[..i].iter().any(|o| o.label == s.label) {
                return Err(Error::DuplicateLabel(s.label.clone()));
            }
            total = total.saturating_mul(s.dim);
        }
        if total > cap {
            return Err(Error::DimensionCap { dim: total, cap });
        }
        Ok(Self { subsystems })
    }

    /// The one-dimensional space with no factors.
    pub fn trivial() -> Self {
        Self { subsystems: Vec::new() }
    }

    pub fn qubits<S: AsRef<str>>(labels: &[S]) -> Result<Self> {
        Self::new(labels.iter().map(|l| Subsystem::qubit(l.as_ref())).collect())
    }

    pub fn subsystems(&self) -> &[Subsystem] {
        &self.subsystems
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.subsystems.iter().map(|s| s.label.as_str())
    }

    pub fn len(&self) -> usize {
        self.subsystems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsystems.is_empty()
    }

    pub fn total_dim(&self) -> usize {
        self.subsystems.iter().map(|s| s.dim).product()
    }

    pub fn contains(&self, label: &str) -> bool {
        self.position(label).is_some()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.subsystems.iter().position(|s| s.label == label)
    }

    pub fn dim_of(&self, label: &str) -> Result<usize> {
        self.position(label)
            .map(|i| self.subsystems[i].dim)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Concatenation `self ⊗ other`; labels must be disjoint.
    pub fn concat(&self, other: &HilbertSpace) -> Result<Self> {
        if let Some(clash) = other.labels().find(|l| self.contains(l)) {
            return Err(Error::LabelClash(clash.to_string()));
        }
        let mut subsystems = self.subsystems.clone();
        subsystems.extend(other.subsystems.iter().cloned());
        Self::new(subsystems)
    }

    /// The factors named in `labels`, in the order given.
    pub fn select<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        let mut subsystems = Vec::with_capacity(labels.len());
        for l in labels {
            let i = self.position(l.as_ref()).ok_or_else(|| Error::UnknownLabel(l.as_ref().to_string()))?;
            subsystems.push(self.subsystems[i].clone());
        }
        Self::new(subsystems)
    }

    /// The factors not named in `labels`, in this space's order.
    pub fn complement<S: AsRef<str>>(&self, labels: &[S]) -> Self {
        Self {
            subsystems: self
                .subsystems
                .iter()
                .filter(|s| !labels.iter().any(|l| l.as_ref() == s.label))
                .cloned()
                .collect(),
        }
    }

    /// Same dimensions, new labels.
    pub fn relabel<S: AsRef<str>>(&self, labels: &[S]) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::SpaceMismatch(format!(
                "{} labels supplied for {} subsystems",
                labels.len(),
                self.len()
            )));
        }
        Self::new(
            self.subsystems
                .iter()
                .zip(labels)
                .map(|(s, l)| Subsystem::new(l.as_ref(), s.dim))
                .collect(),
        )
    }

    /// Same set of factors, possibly in a different order.
    pub fn same_factors(&self, other: &HilbertSpace) -> bool {
        self.len() == other.len()
            && self
                .subsystems
                .iter()
                .all(|s| other.position(&s.label).map(|i| &other.subsystems[i]) == Some(s))
    }

    pub fn dims(&self) -> Vec<usize> {
        self.subsystems.iter().map(|s| s.dim).collect()
    }

    /// Mixed-radix digits of a basis index, most significant first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for (k, s) in self.subsystems.iter().enumerate().rev() {
            out[k] = index % s.dim;
            index /= s.dim;
        }
        out
    }

    pub fn index_of(&self, digits: &[usize]) -> usize {
        digits
            .iter()
            .zip(&self.subsystems)
            .fold(0, |acc, (d, s)| acc * s.dim + d)
    }

    /// For every basis index of `self`, its index in `sub` (a subset of the
    /// factors, any order) and in the complement of `sub`.
    pub(crate) fn split_indices(&self, sub: &HilbertSpace) -> Result<(Vec<usize>, Vec<usize>)> {
        let positions: Vec<usize> = sub
            .labels()
            .map(|l| self.position(l).ok_or_else(|| Error::UnknownLabel(l.to_string())))
            .collect::<Result<_>>()?;
        let rest: Vec<usize> = (0..self.len()).filter(|k| !positions.contains(k)).collect();
        let n = self.total_dim();
        let mut sub_idx = Vec::with_capacity(n);
        let mut rest_idx = Vec::with_capacity(n);
        for i in 0..n {
            let digits = self.digits(i);
            let s = positions
                .iter()
                .fold(0, |acc, &p| acc * self.subsystems[p].dim + digits[p]);
            let r = rest
                .iter()
                .fold(0, |acc, &p| acc * self.subsystems[p].dim + digits[p]);
            sub_idx.push(s);
            rest_idx.push(r);
        }
        Ok((sub_idx, rest_idx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_unit_dimension_and_duplicates() {
        assert!(matches!(
            HilbertSpace::new(vec![Subsystem::new("vac", 1)]),
            Err(Error::InvalidDimension { .. })
        ));
        assert!(matches!(
            HilbertSpace::qubits(&["a", "a"]),
            Err(Error::DuplicateLabel(_))
        ));
    }

    #[test]
    fn enforces_cap() {
        let subs: Vec<_> = (0..13).map(|i| Subsystem::qubit(format!("q{i}"))).collect();
        assert!(matches!(HilbertSpace::new(subs.clone()), Err(Error::DimensionCap { dim: 8192, .. })));
        assert!(HilbertSpace::with_cap(subs, 1 << 13).is_ok());
    }

    #[test]
    fn digits_round_trip() {
        let s = HilbertSpace::new(vec![Subsystem::new("a", 2), Subsystem::new("b", 3)]).unwrap();
        for i in 0..6 {
            assert_eq!(s.index_of(&s.digits(i)), i);
        }
        assert_eq!(s.digits(5), vec![1, 2]);
    }

    #[test]
    fn concat_detects_clash() {
        let a = HilbertSpace::qubits(&["a"]).unwrap();
        assert_eq!(a.concat(&a), Err(Error::LabelClash("a".into())));
    }
}
