//! Correlation coefficients over paired dataset-level series. The Pearson
//! and Spearman cores run on exact rationals so that algebraically perfect
//! relationships (y = ax + b, monotone rank agreement) come out as exactly
//! 1.0 instead of 1.0 - epsilon.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::rational::{big, mean, rat_to_f64};
use super::StatsError;

/// Two metric series observed on the same labelled datasets.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PairedSeries {
    pub labels: Vec<String>,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(labels: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        let s = Self { labels, x, y };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), StatsError> {
        if self.x.len() != self.y.len() {
            return Err(StatsError::LengthMismatch(self.x.len(), self.y.len()));
        }
        if self.labels.len() != self.x.len() {
            return Err(StatsError::LengthMismatch(self.labels.len(), self.x.len()));
        }
        if self.x.len() < 2 {
            return Err(StatsError::TooShort {
                have: self.x.len(),
                need: 2,
            });
        }
        for (i, v) in self.x.iter().chain(self.y.iter()).enumerate() {
            if !v.is_finite() {
                return Err(StatsError::NonFinite(i % self.x.len()));
            }
        }
        Ok(())
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<(), StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(StatsError::TooShort {
            have: x.len(),
            need: 2,
        });
    }
    for (i, v) in x.iter().chain(y.iter()).enumerate() {
        if !v.is_finite() {
            return Err(StatsError::NonFinite(i % x.len()));
        }
    }
    Ok(())
}

/// Pearson product-moment correlation. Exact-rational core:
/// r = sign(sxy) * sqrt(sxy^2 / (sxx * syy)), so the only rounding happens
/// in one final conversion and square root. A zero-variance side makes the
/// coefficient undefined and is reported as an error.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let rx: Vec<_> = x
        .iter()
        .enumerate()
        .map(|(i, v)| big(*v, i))
        .collect::<Result<_, _>>()?;
    let ry: Vec<_> = y
        .iter()
        .enumerate()
        .map(|(i, v)| big(*v, i))
        .collect::<Result<_, _>>()?;
    let mx = mean(&rx);
    let my = mean(&ry);
    let mut sxx = num::BigRational::default();
    let mut syy = num::BigRational::default();
    let mut sxy = num::BigRational::default();
    for (a, b) in rx.iter().zip(ry.iter()) {
        let dx = a - &mx;
        let dy = b - &my;
        sxx += &dx * &dx;
        syy += &dy * &dy;
        sxy += dx * dy;
    }
    use num::Zero;
    if sxx.is_zero() {
        return Err(StatsError::ZeroVariance { which: "x" });
    }
    if syy.is_zero() {
        return Err(StatsError::ZeroVariance { which: "y" });
    }
    let ratio = &sxy * &sxy / (sxx * syy);
    let magnitude = rat_to_f64(&ratio).sqrt();
    Ok(if sxy < num::BigRational::default() {
        -magnitude
    } else {
        magnitude
    })
}

/// 1-based ranks with ties replaced by the mean of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the tied value
        let shared = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            ranks[idx] = shared;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation: Pearson over average ranks. A constant series
/// leaves every rank tied, which we score as 0 (no rank information) rather
/// than erroring, so rank and linear correlations can sit in one table.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let rx = average_ranks(x);
    let ry = average_ranks(y);
    match pearson(&rx, &ry) {
        Ok(v) => Ok(v),
        Err(StatsError::ZeroVariance { .. }) => Ok(0.0),
        Err(e) => Err(e),
    }
}

/// Kendall tau-a: (concordant - discordant) / (n(n-1)/2). Tied pairs on
/// either side contribute zero to the numerator.
pub fn kendall(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    check_pair(x, y)?;
    let n = x.len();
    let mut concordant = 0i64;
    let mut discordant = 0i64;
    for i in 0..n {
        for j in (i + 1)..n {
            let s = (x[i] - x[j]) * (y[i] - y[j]);
            if s > 0.0 {
                concordant += 1;
            } else if s < 0.0 {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    Ok((concordant - discordant) as f64 / pairs)
}

/// One row of the correlation table. Pearson is `None` when undefined
/// (zero variance); the rank coefficients always have a value.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationRow {
    pub pearson: Option<f64>,
    pub spearman: f64,
    pub kendall: f64,
}

/// Correlation table between a diversity series and an accuracy series,
/// with per-dataset leave-one-out rows for influence inspection.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub labels: Vec<String>,
    pub full: CorrelationRow,
    pub leave_one_out: Vec<(String, CorrelationRow)>,
    pub notes: Vec<String>,
}

fn corr_row(x: &[f64], y: &[f64], notes: &mut Vec<String>, tag: &str) -> Result<CorrelationRow, StatsError> {
    let pearson = match pearson(x, y) {
        Ok(v) => Some(v),
        Err(StatsError::ZeroVariance { which }) => {
            notes.push(format!("pearson undefined ({which} has zero variance){tag}"));
            None
        }
        Err(e) => return Err(e),
    };
    Ok(CorrelationRow {
        pearson,
        spearman: spearman(x, y)?,
        kendall: kendall(x, y)?,
    })
}

/// Correlates per-dataset diversity against per-dataset accuracy. The two
/// maps must be keyed by exactly the same dataset labels; any mismatch is
/// an error naming the offending labels.
pub fn diversity_accuracy_correlation(
    diversity: &BTreeMap<String, f64>,
    accuracy: &BTreeMap<String, f64>,
) -> Result<CorrelationTable, StatsError> {
    let missing: Vec<&str> = diversity
        .keys()
        .filter(|k| !accuracy.contains_key(*k))
        .chain(accuracy.keys().filter(|k| !diversity.contains_key(*k)))
        .map(|k| k.as_str())
        .collect();
    if !missing.is_empty() {
        return Err(StatsError::LabelMismatch(missing.join(", ")));
    }
    let labels: Vec<String> = diversity.keys().cloned().collect();
    let x: Vec<f64> = labels.iter().map(|l| diversity[l]).collect();
    let y: Vec<f64> = labels.iter().map(|l| accuracy[l]).collect();
    let series = PairedSeries::new(labels, x, y)?;

    let mut notes = Vec::new();
    let full = corr_row(&series.x, &series.y, &mut notes, "")?;

    let mut leave_one_out = Vec::new();
    if series.x.len() >= 3 {
        for drop in 0..series.x.len() {
            let xs: Vec<f64> = series
                .x
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, v)| *v)
                .collect();
            let ys: Vec<f64> = series
                .y
                .iter()
                .enumerate()
                .filter(|(i, _)| *i != drop)
                .map(|(_, v)| *v)
                .collect();
            let tag = format!(" [without {}]", series.labels[drop]);
            let row = corr_row(&xs, &ys, &mut notes, &tag)?;
            leave_one_out.push((series.labels[drop].clone(), row));
        }
    } else {
        notes.push("too few datasets for leave-one-out rows".to_string());
    }

    Ok(CorrelationTable {
        labels: series.labels,
        full,
        leave_one_out,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;

    #[test]
    fn exact_linear_relation_scores_one_in_all_three() {
        let x = [0.3, 1.7, 2.2, 5.9, 8.1];
        let y: Vec<f64> = x.iter().map(|v| 2.0 * v + 1.0).collect();
        assert_eq!(pearson(&x, &y).unwrap(), 1.0);
        assert_eq!(spearman(&x, &y).unwrap(), 1.0);
        assert_eq!(kendall(&x, &y).unwrap(), 1.0);
    }

    #[test]
    fn reversed_order_scores_minus_one() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y: Vec<f64> = x.iter().map(|v| -3.0 * v + 10.0).collect();
        assert_eq!(pearson(&x, &y).unwrap(), -1.0);
        assert_eq!(spearman(&x, &y).unwrap(), -1.0);
        assert_eq!(kendall(&x, &y).unwrap(), -1.0);
    }

    #[test]
    fn pearson_matches_hand_computation() {
        // x=[1,2,3], y=[1,3,2]: sxy=1, sxx=syy=2 => r = 1/2 exactly
        assert_eq!(pearson(&[1.0, 2.0, 3.0], &[1.0, 3.0, 2.0]).unwrap(), 0.5);
    }

    #[test]
    fn zero_variance_is_undefined_for_pearson_and_zero_for_ranks() {
        let x = [1.0, 2.0, 3.0];
        let y = [4.0, 4.0, 4.0];
        assert!(matches!(
            pearson(&x, &y),
            Err(StatsError::ZeroVariance { which: "y" })
        ));
        assert_eq!(spearman(&x, &y).unwrap(), 0.0);
        assert_eq!(kendall(&x, &y).unwrap(), 0.0);
    }

    #[test]
    fn average_ranks_share_tied_positions() {
        assert_eq!(average_ranks(&[1.0, 2.0, 2.0, 3.0]), vec![1.0, 2.5, 2.5, 4.0]);
        assert_eq!(average_ranks(&[5.0, 5.0, 5.0]), vec![2.0, 2.0, 2.0]);
        assert_eq!(average_ranks(&[9.0, -1.0, 4.0]), vec![3.0, 1.0, 2.0]);
    }

    #[test]
    fn spearman_equals_rank_difference_identity_without_ties() {
        let mut rng = crate::rng::derive_rng(11, &["spearman"]);
        for _ in 0..50 {
            let n = rng.gen_range(4..12);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let rx = average_ranks(&x);
            let ry = average_ranks(&y);
            if rx.iter().any(|r| r.fract() != 0.0) || ry.iter().any(|r| r.fract() != 0.0) {
                continue; // identity only holds tie-free
            }
            let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b) * (a - b)).sum();
            let m = n as f64;
            let identity = 1.0 - 6.0 * d2 / (m * (m * m - 1.0));
            assert_abs_diff_eq!(spearman(&x, &y).unwrap(), identity, epsilon = 1e-12);
        }
    }

    #[test]
    fn kendall_matches_signed_pair_enumeration() {
        let mut rng = crate::rng::derive_rng(12, &["kendall"]);
        for _ in 0..50 {
            let n = rng.gen_range(3..10);
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            // oracle: sum of sign products over every ordered pair, halved;
            // f64::signum maps 0.0 to 1.0, so spell out the three-way sign
            let sgn = |v: f64| {
                if v > 0.0 {
                    1.0
                } else if v < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            };
            let mut signed = 0.0;
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        signed += sgn(x[i] - x[j]) * sgn(y[i] - y[j]) / 2.0;
                    }
                }
            }
            let oracle = signed / (n as f64 * (n as f64 - 1.0) / 2.0);
            assert_eq!(kendall(&x, &y).unwrap(), oracle);
        }
    }

    #[test]
    fn non_finite_and_short_inputs_are_rejected_up_front() {
        assert!(matches!(
            pearson(&[1.0], &[2.0]),
            Err(StatsError::TooShort { .. })
        ));
        assert!(matches!(
            kendall(&[1.0, 2.0], &[2.0]),
            Err(StatsError::LengthMismatch(2, 1))
        ));
        assert!(matches!(
            spearman(&[1.0, f64::NAN], &[2.0, 3.0]),
            Err(StatsError::NonFinite(_))
        ));
    }

    fn map(entries: &[(&str, f64)]) -> BTreeMap<String, f64> {
        entries.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    #[test]
    fn table_requires_aligned_labels() {
        let div = map(&[("a", 0.1), ("b", 0.2)]);
        let acc = map(&[("a", 0.5), ("c", 0.6)]);
        let err = diversity_accuracy_correlation(&div, &acc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains('b') && msg.contains('c'), "{msg}");
    }

    #[test]
    fn monotone_linear_table_is_all_ones() {
        let div = map(&[("a", 0.01), ("b", 0.02), ("c", 0.05), ("d", 0.09)]);
        let acc: BTreeMap<String, f64> =
            div.iter().map(|(k, v)| (k.clone(), 3.0 * v + 0.5)).collect();
        let table = diversity_accuracy_correlation(&div, &acc).unwrap();
        assert_eq!(table.full.pearson, Some(1.0));
        assert_eq!(table.full.spearman, 1.0);
        assert_eq!(table.full.kendall, 1.0);
        assert_eq!(table.leave_one_out.len(), 4);
        for (_, row) in &table.leave_one_out {
            assert_eq!(row.pearson, Some(1.0));
        }
    }

    #[test]
    fn constant_accuracy_reports_undefined_pearson_and_zero_ranks() {
        let div = map(&[("a", 0.01), ("b", 0.02), ("c", 0.05)]);
        let acc = map(&[("a", 0.4), ("b", 0.4), ("c", 0.4)]);
        let table = diversity_accuracy_correlation(&div, &acc).unwrap();
        assert_eq!(table.full.pearson, None);
        assert_eq!(table.full.spearman, 0.0);
        assert_eq!(table.full.kendall, 0.0);
        assert!(table.notes.iter().any(|n| n.contains("zero variance")));
    }

    #[test]
    fn leave_one_out_exposes_a_single_adversarial_dataset() {
        // five aligned points plus one that flips the trend
        let div = map(&[
            ("a", 0.01),
            ("b", 0.02),
            ("c", 0.03),
            ("d", 0.04),
            ("e", 0.05),
            ("z", 0.06),
        ]);
        let mut acc = map(&[
            ("a", 0.11),
            ("b", 0.22),
            ("c", 0.33),
            ("d", 0.44),
            ("e", 0.55),
        ]);
        acc.insert("z".to_string(), 0.0);
        let table = diversity_accuracy_correlation(&div, &acc).unwrap();
        let full = table.full.pearson.unwrap();
        let without_z = table
            .leave_one_out
            .iter()
            .find(|(l, _)| l == "z")
            .map(|(_, row)| row.pearson.unwrap())
            .unwrap();
        assert_eq!(without_z, 1.0);
        assert!(full < 0.9, "outlier should drag the full-table Pearson down: {full}");
    }
}
