//! Sparse weighted supports over sets and over set pairs.

use crate::linalg::{compensated_sum, DenseVector, KahanSum};
use crate::subset::Subset;

/// A sparse list of (set, weight) pairs; the container behind the y_S
/// coefficients of an extension.
///
/// Flags record what the constructor guaranteed: `normalized` means the
/// weights sum to one, `lp_feasible` means additionally that weights are
/// nonnegative and the weighted indicators reproduce the input point.
/// Lifted eigenvector supports legitimately carry negative weights and are
/// flagged infeasible.
#[derive(Clone, Debug, PartialEq)]
pub struct SupportedDistribution {
    entries: Vec<(Subset, f64)>,
    normalized: bool,
    lp_feasible: bool,
}

impl SupportedDistribution {
    pub fn new(entries: Vec<(Subset, f64)>, normalized: bool, lp_feasible: bool) -> Self {
        debug_assert!({
            let mut bits: Vec<u64> = entries.iter().map(|(s, _)| s.bits()).collect();
            bits.sort_unstable();
            bits.windows(2).all(|w| w[0] != w[1])
        });
        SupportedDistribution {
            entries,
            normalized,
            lp_feasible,
        }
    }

    pub fn entries(&self) -> &[(Subset, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn lp_feasible(&self) -> bool {
        self.lp_feasible
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|&(_, w)| w))
    }

    pub fn min_weight(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(_, w)| w)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn weight_of(&self, s: &Subset) -> f64 {
        self.entries
            .iter()
            .find(|(t, _)| t == s)
            .map_or(0.0, |&(_, w)| w)
    }

    /// Σ_S y_S 1_S, the marginal vector the dual-LP constraint pins to x.
    pub fn marginals(&self, n: usize) -> DenseVector {
        let mut acc = vec![KahanSum::new(); n];
        for (s, w) in &self.entries {
            for i in s.iter() {
                acc[i].add(*w);
            }
        }
        DenseVector::new(acc.into_iter().map(|k| k.value()).collect())
    }
}

/// A sparse list of (S, T, weight) triples; the y_{S,T} coefficients of a
/// lifted extension.
#[derive(Clone, Debug, PartialEq)]
pub struct PairDistribution {
    entries: Vec<(Subset, Subset, f64)>,
    normalized: bool,
}

impl PairDistribution {
    pub fn new(entries: Vec<(Subset, Subset, f64)>, normalized: bool) -> Self {
        PairDistribution {
            entries,
            normalized,
        }
    }

    pub fn entries(&self) -> &[(Subset, Subset, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn normalized(&self) -> bool {
        self.normalized
    }

    pub fn total_mass(&self) -> f64 {
        compensated_sum(self.entries.iter().map(|&(_, _, w)| w))
    }
}
