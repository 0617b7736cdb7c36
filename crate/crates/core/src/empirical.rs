//! Weighted-atom empirical distributions on `(-inf, 1]`.

use std::collections::HashMap;

use thiserror::Error;

use crate::divergence::DistView;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DistError {
    #[error("sample value {value} lies above the support bound 1")]
    ValueAboveOne { value: f64 },
    #[error("sample value must be finite, got {value}")]
    NonFiniteValue { value: f64 },
    #[error("atom weight must be positive and finite, got {weight}")]
    BadWeight { weight: f64 },
    #[error("empirical distribution has no atoms")]
    Empty,
}

/// Empirical distribution stored as a list of weighted atoms, all `<= 1`.
///
/// Duplicate sample values (same bit pattern) are merged into a single atom,
/// so Bernoulli-style reward streams stay two atoms wide no matter how many
/// samples are pushed. Expectations are exact weighted sums over the atoms.
#[derive(Debug, Clone, Default)]
pub struct EmpiricalDist {
    atoms: Vec<(f64, f64)>,
    slots: HashMap<u64, usize>,
    total_weight: f64,
    weighted_sum: f64,
}

impl EmpiricalDist {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a distribution from `(value, weight)` pairs, merging duplicates.
    pub fn from_weighted<I>(pairs: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut dist = Self::new();
        for (x, w) in pairs {
            dist.push_weighted(x, w)?;
        }
        if dist.is_empty() {
            return Err(DistError::Empty);
        }
        Ok(dist)
    }

    /// Builds a unit-weight distribution from raw samples.
    pub fn from_samples<I>(samples: I) -> Result<Self, DistError>
    where
        I: IntoIterator<Item = f64>,
    {
        Self::from_weighted(samples.into_iter().map(|x| (x, 1.0)))
    }

    /// Pushes one sample with weight 1.
    pub fn push(&mut self, x: f64) -> Result<(), DistError> {
        self.push_weighted(x, 1.0)
    }

    pub fn push_weighted(&mut self, x: f64, w: f64) -> Result<(), DistError> {
        if !x.is_finite() {
            return Err(DistError::NonFiniteValue { value: x });
        }
        if x > 1.0 {
            return Err(DistError::ValueAboveOne { value: x });
        }
        if !(w > 0.0) || !w.is_finite() {
            return Err(DistError::BadWeight { weight: w });
        }
        match self.slots.entry(x.to_bits()) {
            std::collections::hash_map::Entry::Occupied(e) => {
                self.atoms[*e.get()].1 += w;
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(self.atoms.len());
                self.atoms.push((x, w));
            }
        }
        self.total_weight += w;
        self.weighted_sum += w * x;
        Ok(())
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Number of distinct atoms.
    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.total_weight
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn min_value(&self) -> Option<f64> {
        self.atoms.iter().map(|&(x, _)| x).reduce(f64::min)
    }

    pub fn max_value(&self) -> Option<f64> {
        self.atoms.iter().map(|&(x, _)| x).reduce(f64::max)
    }

    /// Transfers all mass at values `< a` to a single atom at `a`; mass at or
    /// above `a` is unchanged. Requires `a < 1`.
    pub fn truncate_at(&self, a: f64) -> EmpiricalDist {
        debug_assert!(a < 1.0, "truncation point must be below 1");
        let moved: f64 = self
            .atoms
            .iter()
            .filter(|&&(x, _)| x < a)
            .map(|&(_, w)| w)
            .sum();
        if moved == 0.0 {
            return self.clone();
        }
        let mut out = EmpiricalDist::new();
        for &(x, w) in &self.atoms {
            if x >= a {
                out.push_weighted(x, w).expect("kept atom stays valid");
            }
        }
        out.push_weighted(a, moved).expect("a < 1 by precondition");
        out
    }
}

impl DistView for EmpiricalDist {
    fn mean(&self) -> f64 {
        self.weighted_sum / self.total_weight
    }

    fn expect_log(&self, nu: f64, mu: f64) -> f64 {
        if nu == 0.0 {
            return 0.0;
        }
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            let arg = 1.0 - (x - mu) * nu;
            if arg <= 0.0 {
                // only reachable by an atom at exactly 1 with nu at the boundary
                return f64::NEG_INFINITY;
            }
            acc += w * arg.ln();
        }
        acc / self.total_weight
    }

    fn expect_ratio(&self, nu: f64, mu: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            let u = x - mu;
            acc += w * u / (1.0 - u * nu);
        }
        acc / self.total_weight
    }

    fn expect_ratio_sq(&self, nu: f64, mu: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            let u = x - mu;
            let d = 1.0 - u * nu;
            acc += w * (u * u) / (d * d);
        }
        acc / self.total_weight
    }

    fn expect_inv_gap(&self, mu: f64) -> f64 {
        let mut acc = 0.0;
        for &(x, w) in &self.atoms {
            if x == 1.0 {
                return f64::INFINITY;
            }
            acc += w * (1.0 - mu) / (1.0 - x);
        }
        acc / self.total_weight
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn push_merges_duplicates_and_tracks_weight() {
        let mut d = EmpiricalDist::new();
        d.push(0.5).unwrap();
        d.push(0.5).unwrap();
        d.push(-1.0).unwrap();
        assert_eq!(d.len(), 2);
        assert_abs_diff_eq!(d.total_weight(), 3.0);
        assert_abs_diff_eq!(d.mean(), 0.0, epsilon = 1e-15);
        d.push(0.25).unwrap();
        assert_abs_diff_eq!(d.total_weight(), 4.0);
    }

    #[test]
    fn rejects_values_above_one_and_bad_weights() {
        let mut d = EmpiricalDist::new();
        assert!(matches!(
            d.push(1.5),
            Err(DistError::ValueAboveOne { .. })
        ));
        assert!(matches!(
            d.push(f64::NAN),
            Err(DistError::NonFiniteValue { .. })
        ));
        assert!(matches!(
            d.push_weighted(0.0, 0.0),
            Err(DistError::BadWeight { .. })
        ));
        assert!(matches!(
            d.push_weighted(0.0, -1.0),
            Err(DistError::BadWeight { .. })
        ));
        d.push(1.0).unwrap();
    }

    #[test]
    fn truncate_moves_left_mass() {
        let f = EmpiricalDist::from_weighted([(-3.0, 0.5), (0.5, 0.5)]).unwrap();
        let g = f.truncate_at(-1.0);
        let mut atoms = g.atoms().to_vec();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(atoms, vec![(-1.0, 0.5), (0.5, 0.5)]);
        assert_abs_diff_eq!(g.total_weight(), f.total_weight());
        assert!(g.mean() >= f.mean());
    }

    #[test]
    fn truncate_below_min_is_identity() {
        let f = EmpiricalDist::from_weighted([(-3.0, 1.0), (0.5, 2.0)]).unwrap();
        let g = f.truncate_at(-3.0);
        assert_eq!(g.atoms(), f.atoms());
        let h = f.truncate_at(-10.0);
        assert_eq!(h.atoms(), f.atoms());
    }

    #[test]
    fn truncate_merges_at_boundary() {
        let f = EmpiricalDist::from_weighted([(-10.0, 1.0), (-2.0, 1.0), (1.0, 1.0)]).unwrap();
        let g = f.truncate_at(-2.0);
        let mut atoms = g.atoms().to_vec();
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        assert_eq!(atoms, vec![(-2.0, 2.0), (1.0, 1.0)]);
    }

    #[test]
    fn inv_gap_infinite_with_mass_at_one() {
        let f = EmpiricalDist::from_weighted([(0.0, 0.5), (1.0, 0.5)]).unwrap();
        assert!(f.expect_inv_gap(0.75).is_infinite());
        let g = EmpiricalDist::from_samples([0.0]).unwrap();
        assert_abs_diff_eq!(g.expect_inv_gap(0.5), 0.5, epsilon = 1e-15);
    }
}
