use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::OutcomeModel;

/// Largest negative residue tolerated before cleanup.
pub const NEGATIVE_TOLERANCE: f64 = 1e-15;
/// Largest normalization defect tolerated on construction.
pub const MASS_TOLERANCE: f64 = 1e-9;
/// A threshold within this many lattice steps of an atom is "at" the atom.
pub const ATOM_EPSILON: f64 = 1e-9;

/// Probability mass function on the lattice `{offset/k, (offset+1)/k, ...}`.
///
/// Atom `i` of `probs` sits at value `(offset + i) / k`. The first and last
/// entries are nonzero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticePmf {
    step_denominator: u32,
    offset: i64,
    probs: Vec<f64>,
    /// Mass removed or added by clamping and renormalization so far.
    cleanup_mass: f64,
}

/// Where a real threshold falls relative to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ThresholdPosition {
    /// Largest lattice index that does NOT strictly exceed the threshold.
    pub cut: i64,
    /// The threshold is within [`ATOM_EPSILON`] steps of the atom at `cut`.
    pub near_atom: bool,
}

impl ThresholdPosition {
    pub fn locate(u: f64, step_denominator: u32) -> Self {
        let v = u * f64::from(step_denominator);
        let nearest = v.round();
        if (v - nearest).abs() <= ATOM_EPSILON {
            ThresholdPosition {
                cut: nearest as i64,
                near_atom: true,
            }
        } else {
            ThresholdPosition {
                cut: v.floor() as i64,
                near_atom: false,
            }
        }
    }

    /// The same threshold moved down by `shift` lattice steps.
    pub fn shifted_down(self, shift: i64) -> Self {
        ThresholdPosition {
            cut: self.cut - shift,
            near_atom: self.near_atom,
        }
    }
}

impl LatticePmf {
    pub fn new(step_denominator: u32, offset: i64, probs: Vec<f64>) -> Result<Self> {
        if step_denominator == 0 {
            return Err(Error::domain("lattice step denominator must be positive"));
        }
        if let Some(bad) = probs.iter().find(|p| !(**p >= -NEGATIVE_TOLERANCE)) {
            return Err(Error::domain(format!("lattice pmf entry {bad} is negative")));
        }
        let total: f64 = probs.iter().sum();
        if probs.is_empty() || !((total - 1.0).abs() <= MASS_TOLERANCE) {
            return Err(Error::domain(format!("lattice pmf sums to {total}")));
        }
        let mut pmf = LatticePmf {
            step_denominator,
            offset,
            probs,
            cleanup_mass: 0.0,
        };
        pmf.clamp_and_renormalize();
        Ok(pmf)
    }

    pub fn point_mass(step_denominator: u32, index: i64) -> Self {
        LatticePmf {
            step_denominator,
            offset: index,
            probs: vec![1.0],
            cleanup_mass: 0.0,
        }
    }

    /// Law of a single match reward `X_ij`.
    pub fn from_model(model: &OutcomeModel) -> Result<Self> {
        model.validate().into_result()?;
        let lo = model.support.first().map(|s| s.0).unwrap_or(0);
        let hi = model.support.last().map(|s| s.0).unwrap_or(0);
        let mut probs = vec![0.0; (hi - lo + 1) as usize];
        for &(m, w) in &model.support {
            probs[(m - lo) as usize] = w;
        }
        Ok(LatticePmf {
            step_denominator: model.denominator,
            offset: i64::from(lo),
            probs,
            cleanup_mass: 0.0,
        })
    }

    /// Assembles a pmf from raw convolution output. Small negative residue
    /// is clamped before renormalizing; zero tails are trimmed.
    pub(crate) fn from_raw(
        step_denominator: u32,
        offset: i64,
        probs: Vec<f64>,
        inherited_cleanup: f64,
        renormalize: bool,
    ) -> Self {
        let mut pmf = LatticePmf {
            step_denominator,
            offset,
            probs,
            cleanup_mass: 0.0,
        };
        if renormalize {
            pmf.clamp_and_renormalize();
        } else {
            pmf.trim();
        }
        pmf.cleanup_mass += inherited_cleanup;
        pmf
    }

    fn clamp_and_renormalize(&mut self) {
        let mut removed = 0.0;
        for p in self.probs.iter_mut() {
            if *p < 0.0 {
                removed -= *p;
                *p = 0.0;
            }
        }
        self.trim();
        let total: f64 = self.probs.iter().sum();
        if total > 0.0 && total != 1.0 {
            let scale = 1.0 / total;
            self.probs.iter_mut().for_each(|p| *p *= scale);
        }
        self.cleanup_mass += removed + (total - 1.0).abs();
    }

    fn trim(&mut self) {
        let first = self.probs.iter().position(|&p| p != 0.0);
        let Some(first) = first else {
            self.probs.clear();
            return;
        };
        let last = self.probs.iter().rposition(|&p| p != 0.0).unwrap_or(first);
        self.probs.truncate(last + 1);
        self.probs.drain(..first);
        self.offset += first as i64;
    }

    pub fn step_denominator(&self) -> u32 {
        self.step_denominator
    }

    pub fn offset(&self) -> i64 {
        self.offset
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn cleanup_mass(&self) -> f64 {
        self.cleanup_mass
    }

    /// Lattice index of the last atom.
    pub fn max_index(&self) -> i64 {
        self.offset + self.probs.len() as i64 - 1
    }

    /// Real value of atom `i` (position in `probs`).
    pub fn value(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 / f64::from(self.step_denominator)
    }

    /// Probability at lattice index `index`, zero off the support.
    pub fn prob_at(&self, index: i64) -> f64 {
        let i = index - self.offset;
        if i < 0 || i >= self.probs.len() as i64 {
            0.0
        } else {
            self.probs[i as usize]
        }
    }

    pub fn mean(&self) -> f64 {
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| p * self.value(i))
            .sum()
    }

    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.probs
            .iter()
            .enumerate()
            .map(|(i, p)| {
                let d = self.value(i) - mean;
                p * d * d
            })
            .sum()
    }

    /// `P(X > u)`, strict. An atom within [`ATOM_EPSILON`] steps of `u` counts
    /// as equal to `u` and is excluded.
    pub fn tail_prob(&self, u: f64) -> f64 {
        self.tail_at(ThresholdPosition::locate(u, self.step_denominator))
    }

    /// `P(X >= u)`, counting an atom at `u` (within epsilon) as included.
    pub fn tail_prob_inclusive(&self, u: f64) -> f64 {
        let pos = ThresholdPosition::locate(u, self.step_denominator);
        if pos.near_atom {
            self.tail_above_index(pos.cut - 1)
        } else {
            self.tail_at(pos)
        }
    }

    pub fn tail_at(&self, pos: ThresholdPosition) -> f64 {
        self.tail_above_index(pos.cut)
    }

    /// `P(index > cut)`, summed smallest-first.
    pub fn tail_above_index(&self, cut: i64) -> f64 {
        let start = cut + 1 - self.offset;
        if start <= 0 {
            return 1.0;
        }
        if start >= self.probs.len() as i64 {
            return 0.0;
        }
        self.probs[start as usize..].iter().rev().sum()
    }

    /// Suffix sums for repeated tail lookups.
    pub fn tail_table(&self) -> TailTable {
        let mut suffix = vec![0.0; self.probs.len() + 1];
        for i in (0..self.probs.len()).rev() {
            suffix[i] = suffix[i + 1] + self.probs[i];
        }
        TailTable {
            offset: self.offset,
            suffix,
        }
    }
}

/// Precomputed `P(index > cut)` for every cut.
#[derive(Debug, Clone)]
pub struct TailTable {
    offset: i64,
    suffix: Vec<f64>,
}

impl TailTable {
    pub fn above(&self, cut: i64) -> f64 {
        let start = cut + 1 - self.offset;
        if start <= 0 {
            // Exactly 1: the suffix sum may carry rounding.
            1.0
        } else if start as usize >= self.suffix.len() {
            0.0
        } else {
            self.suffix[start as usize]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classical3() -> LatticePmf {
        LatticePmf::new(1, 0, vec![0.25, 0.5, 0.25]).unwrap()
    }

    #[test]
    fn strict_tail_semantics() {
        let p = classical3();
        assert_eq!(p.tail_prob(1.5), 0.25);
        assert_eq!(p.tail_prob(1.0), 0.25);
        assert_eq!(p.tail_prob_inclusive(1.0), 0.75);
        assert_eq!(p.tail_prob(-0.1), 1.0);
        assert_eq!(p.tail_prob(2.0), 0.0);
        assert_eq!(p.tail_prob(1.0 + 1e-12), 0.25);
        assert_eq!(p.tail_prob(1.0 - 1e-12), 0.25);
    }

    #[test]
    fn threshold_location() {
        let pos = ThresholdPosition::locate(1.25, 2);
        assert_eq!(pos, ThresholdPosition { cut: 2, near_atom: false });
        let pos = ThresholdPosition::locate(1.5, 2);
        assert_eq!(pos, ThresholdPosition { cut: 3, near_atom: true });
        let pos = ThresholdPosition::locate(-0.3, 1);
        assert_eq!(pos.cut, -1);
    }

    #[test]
    fn trims_and_rejects() {
        let p = LatticePmf::new(2, 0, vec![0.0, 0.5, 0.5, 0.0]).unwrap();
        assert_eq!(p.offset(), 1);
        assert_eq!(p.len(), 2);
        assert!(LatticePmf::new(1, 0, vec![0.5, 0.6]).is_err());
        assert!(LatticePmf::new(1, 0, vec![1.0, -1e-3]).is_err());
        assert!(LatticePmf::new(1, 0, vec![]).is_err());
        let q = LatticePmf::new(1, 0, vec![1.0 + 1e-12, -1e-16]).unwrap();
        assert_eq!(q.len(), 1);
        assert!(q.cleanup_mass() > 0.0);
    }

    #[test]
    fn tail_table_matches_direct() {
        let p = LatticePmf::new(2, -3, vec![0.1, 0.2, 0.3, 0.15, 0.25]).unwrap();
        let table = p.tail_table();
        for cut in -6..5 {
            assert!((table.above(cut) - p.tail_above_index(cut)).abs() < 1e-16);
        }
    }

    #[test]
    fn model_law() {
        let p = LatticePmf::from_model(&OutcomeModel::chess()).unwrap();
        assert_eq!(p.probs(), &[0.25, 0.5, 0.25]);
        assert_eq!(p.step_denominator(), 2);
        assert!((p.mean() - 0.5).abs() < 1e-16);
        assert!((p.variance() - 0.125).abs() < 1e-16);
    }
}
