//! Agreement between a predicted and a reference partition.

mod hungarian;

use crate::error::{Error, Result};
use crate::types::LabelAssignment;

/// Accuracy, adjusted Rand index and normalized mutual information.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scores {
    pub accuracy: f64,
    pub ari: f64,
    pub nmi: f64,
}

impl Scores {
    pub fn compute(truth: &LabelAssignment, pred: &LabelAssignment) -> Result<Self> {
        let table = ContingencyTable::new(truth, pred)?;
        Ok(Self {
            accuracy: table.accuracy(),
            ari: table.ari(),
            nmi: table.nmi(NmiNormalization::Arithmetic),
        })
    }
}

/// Denominator used to normalize mutual information.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    Max,
    Min,
    #[default]
    Arithmetic,
    Geometric,
}

/// Joint counts of (true cluster, predicted cluster).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn new(truth: &LabelAssignment, pred: &LabelAssignment) -> Result<Self> {
        if truth.len() != pred.len() {
            return Err(Error::DimensionMismatch {
                axis: "predicted vs true label count",
                expected: truth.len(),
                got: pred.len(),
            });
        }
        let mut counts = vec![vec![0u64; pred.k()]; truth.k()];
        for (&t, &p) in truth.labels().iter().zip(pred.labels()) {
            counts[t][p] += 1;
        }
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..pred.k()).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        Ok(Self {
            counts,
            row_sums,
            col_sums,
            total: truth.len() as u64,
        })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Largest number of samples on the diagonal over injective cluster maps.
    pub fn matched(&self) -> u64 {
        let (rows, cols) = (self.counts.len(), self.col_sums.len());
        // the assignment routine wants at most as many rows as columns
        let cost: Vec<Vec<i64>> = if rows <= cols {
            self.counts.iter().map(|r| r.iter().map(|&c| -(c as i64)).collect()).collect()
        } else {
            (0..cols).map(|j| self.counts.iter().map(|r| -(r[j] as i64)).collect()).collect()
        };
        let assignment = hungarian::min_cost_assignment(&cost);
        assignment.iter().enumerate().map(|(i, &j)| -cost[i][j]).sum::<i64>() as u64
    }

    pub fn accuracy(&self) -> f64 {
        self.matched() as f64 / self.total as f64
    }

    pub fn ari(&self) -> f64 {
        let pairs = |n: u64| (n * n.saturating_sub(1) / 2) as f64;
        let index: f64 = self.counts.iter().flatten().map(|&c| pairs(c)).sum();
        let a: f64 = self.row_sums.iter().map(|&c| pairs(c)).sum();
        let b: f64 = self.col_sums.iter().map(|&c| pairs(c)).sum();
        let all = pairs(self.total);
        if all == 0.0 {
            return 1.0;
        }
        let expected = a * b / all;
        let max = 0.5 * (a + b);
        if max == expected {
            return 1.0;
        }
        (index - expected) / (max - expected)
    }

    pub fn nmi(&self, normalization: NmiNormalization) -> f64 {
        let n = self.total as f64;
        let entropy = |sums: &[u64]| -> f64 {
            -sums
                .iter()
                .filter(|&&c| c > 0)
                .map(|&c| {
                    let p = c as f64 / n;
                    p * p.ln()
                })
                .sum::<f64>()
        };
        let (hu, hv) = (entropy(&self.row_sums), entropy(&self.col_sums));
        let mut mi = 0.0;
        for (i, row) in self.counts.iter().enumerate() {
            for (j, &c) in row.iter().enumerate() {
                if c == 0 {
                    continue;
                }
                let c = c as f64;
                let ratio = c * n / (self.row_sums[i] as f64 * self.col_sums[j] as f64);
                mi += c / n * ratio.ln();
            }
        }
        if hu == 0.0 && hv == 0.0 {
            return 1.0;
        }
        let denom = match normalization {
            NmiNormalization::Max => hu.max(hv),
            NmiNormalization::Min => hu.min(hv),
            NmiNormalization::Arithmetic => 0.5 * (hu + hv),
            NmiNormalization::Geometric => (hu * hv).sqrt(),
        };
        if denom == 0.0 {
            return 0.0;
        }
        (mi / denom).clamp(0.0, 1.0)
    }
}

/// Fraction of samples agreeing under the best matching of clusters.
pub fn accuracy(truth: &LabelAssignment, pred: &LabelAssignment) -> Result<f64> {
    Ok(ContingencyTable::new(truth, pred)?.accuracy())
}

/// Adjusted Rand index.
pub fn ari(truth: &LabelAssignment, pred: &LabelAssignment) -> Result<f64> {
    Ok(ContingencyTable::new(truth, pred)?.ari())
}

/// Mutual information over the arithmetic mean of the two entropies.
pub fn nmi(truth: &LabelAssignment, pred: &LabelAssignment) -> Result<f64> {
    nmi_with(truth, pred, NmiNormalization::Arithmetic)
}

pub fn nmi_with(
    truth: &LabelAssignment,
    pred: &LabelAssignment,
    normalization: NmiNormalization,
) -> Result<f64> {
    Ok(ContingencyTable::new(truth, pred)?.nmi(normalization))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn la(v: &[usize]) -> LabelAssignment {
        let codes: Vec<i64> = v.iter().map(|&x| x as i64).collect();
        LabelAssignment::from_codes(&codes).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&la(&[0, 0, 1, 1]), &la(&[1, 1, 0, 0])).unwrap(), 1.0);
        assert_eq!(accuracy(&la(&[0, 0, 1, 1]), &la(&[0, 1, 1, 1])).unwrap(), 0.75);
        let same = la(&[2, 0, 1, 1, 0]);
        assert_eq!(accuracy(&same, &same).unwrap(), 1.0);
    }

    #[test]
    fn accuracy_with_unequal_cluster_counts() {
        let truth = la(&[0, 0, 0, 1, 1, 1]);
        let pred = la(&[0, 0, 1, 2, 2, 2]);
        assert!((accuracy(&truth, &pred).unwrap() - 5.0 / 6.0).abs() < 1e-15);
        assert!((accuracy(&pred, &truth).unwrap() - 5.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn ari_examples() {
        let t = la(&[0, 0, 1, 1]);
        assert_eq!(ari(&t, &t).unwrap(), 1.0);
        assert!((ari(&t, &la(&[0, 1, 0, 1])).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(ari(&t, &la(&[0, 0, 0, 0])).unwrap(), 0.0);
    }

    #[test]
    fn ari_degenerate_partitions() {
        let single = la(&[0, 0, 0]);
        let singletons = la(&[0, 1, 2]);
        assert_eq!(ari(&single, &single).unwrap(), 1.0);
        assert_eq!(ari(&singletons, &singletons).unwrap(), 1.0);
    }

    #[test]
    fn nmi_examples() {
        let t = la(&[0, 0, 1, 1]);
        assert!((nmi(&t, &t).unwrap() - 1.0).abs() < 1e-15);
        assert!(nmi(&t, &la(&[0, 1, 0, 1])).unwrap().abs() < 1e-15);
        let single = la(&[0, 0, 0, 0]);
        assert_eq!(nmi(&single, &single).unwrap(), 1.0);
        assert_eq!(nmi(&t, &single).unwrap(), 0.0);
    }

    #[test]
    fn nmi_variants_order() {
        let t = la(&[0, 0, 1, 1, 2, 2]);
        let p = la(&[0, 0, 1, 1, 1, 1]);
        let v = |n| nmi_with(&t, &p, n).unwrap();
        let (mx, mn) = (v(NmiNormalization::Max), v(NmiNormalization::Min));
        let (ar, ge) = (v(NmiNormalization::Arithmetic), v(NmiNormalization::Geometric));
        assert!(mx <= ar && ar <= ge && ge <= mn);
        assert!((mn - 1.0).abs() < 1e-12);
    }

    #[test]
    fn length_mismatch_is_an_error() {
        assert!(accuracy(&la(&[0, 1]), &la(&[0, 1, 1])).is_err());
        assert!(ari(&la(&[0, 1]), &la(&[0, 1, 1])).is_err());
        assert!(nmi(&la(&[0, 1]), &la(&[0, 1, 1])).is_err());
    }

    #[test]
    fn constant_prediction_on_balanced_truth() {
        let truth = la(&[0, 0, 1, 1, 2, 2]);
        let pred = la(&[0; 6]);
        assert!(accuracy(&truth, &pred).unwrap() >= 1.0 / 3.0);
    }

    #[test]
    fn symmetric_and_relabel_invariant() {
        let t = la(&[0, 1, 1, 2, 2, 2, 0]);
        let p = la(&[1, 1, 0, 0, 2, 2, 2]);
        let p2 = la(&[2, 2, 1, 1, 0, 0, 0]);
        assert!((ari(&t, &p).unwrap() - ari(&p, &t).unwrap()).abs() < 1e-15);
        assert!((nmi(&t, &p).unwrap() - nmi(&p, &t).unwrap()).abs() < 1e-15);
        assert_eq!(accuracy(&t, &p).unwrap(), accuracy(&t, &p2).unwrap());
        assert!((ari(&t, &p).unwrap() - ari(&t, &p2).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn table_marginals() {
        let table = ContingencyTable::new(&la(&[0, 0, 1]), &la(&[1, 0, 0])).unwrap();
        assert_eq!(table.counts(), &[vec![1, 1], vec![1, 0]]);
        assert_eq!(table.row_sums(), &[2, 1]);
        assert_eq!(table.col_sums(), &[2, 1]);
        assert_eq!(table.total(), 3);
    }
}
