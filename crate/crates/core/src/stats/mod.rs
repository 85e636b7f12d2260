//! Descriptive statistics and rank-based comparison of several solvers over
//! a set of instances: Friedman omnibus test and Holm post-hoc against a
//! control.

mod experiment;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};
use thiserror::Error;

pub use experiment::{
    population_sweep, render_best_found, render_rank_tests, render_results, render_sweep, run_experiment, BestFound,
    CellFailure, CellSummary, CellTiming, ExperimentConfig, ExperimentReport, HolmRow, RankTests, RunRecord,
    SweepConfig, SweepReport, TimingSummary, text_table,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("no values to aggregate")]
    Empty,
    #[error("need at least {need} {what}, got {got}")]
    TooFew { what: &'static str, need: usize, got: usize },
    #[error("row {row} has {got} values, expected {expected}")]
    Ragged { row: usize, got: usize, expected: usize },
    #[error("non-finite value in row {0}")]
    NonFinite(usize),
    #[error("control index {control} out of range for {k} algorithms")]
    ControlOutOfRange { control: usize, k: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator); 0 for a single value.
    pub sd: f64,
    pub n: usize,
}

pub fn aggregate(values: &[f64]) -> Result<Aggregate, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let sd = if n < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    };
    Ok(Aggregate { mean, sd, n })
}

/// Ascending ranks from 1; tied values share the mean of their positions.
pub fn midranks(row: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..row.len()).collect();
    order.sort_by(|&a, &b| row[a].total_cmp(&row[b]));
    let mut ranks = vec![0.0; row.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && row[order[end]] == row[order[start]] {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let shared = (start + 1 + end) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = shared;
        }
        start = end;
    }
    ranks
}

/// Column-wise mean of row midranks; rows are instances, columns algorithms.
pub fn average_ranks(rows: &[Vec<f64>]) -> Result<Vec<f64>, StatsError> {
    let k = check_matrix(rows)?;
    let mut sums = vec![0.0; k];
    for row in rows {
        for (s, r) in sums.iter_mut().zip(midranks(row)) {
            *s += r;
        }
    }
    Ok(sums.into_iter().map(|s| s / rows.len() as f64).collect())
}

fn check_matrix(rows: &[Vec<f64>]) -> Result<usize, StatsError> {
    let k = rows.first().map_or(0, Vec::len);
    for (i, row) in rows.iter().enumerate() {
        if row.len() != k {
            return Err(StatsError::Ragged { row: i, got: row.len(), expected: k });
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
    }
    Ok(k)
}

/// Upper tail of the chi-square distribution.
pub fn chi2_sf(x: f64, df: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    ChiSquared::new(df as f64).map_or(f64::NAN, |d| d.sf(x))
}

/// `2 * Phi(-|z|)`.
pub fn normal_two_sided_p(z: f64) -> f64 {
    libm::erfc(z.abs() / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub average_ranks: Vec<f64>,
    pub instances: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Friedman test on an instances x algorithms matrix of (mean) costs.
pub fn friedman(rows: &[Vec<f64>]) -> Result<FriedmanResult, StatsError> {
    let k = check_matrix(rows)?;
    if rows.len() < 2 {
        return Err(StatsError::TooFew { what: "instances", need: 2, got: rows.len() });
    }
    if k < 2 {
        return Err(StatsError::TooFew { what: "algorithms", need: 2, got: k });
    }
    Ok(friedman_from_ranks(&average_ranks(rows)?, rows.len()))
}

/// Friedman statistic `12N / (k(k+1)) * sum (R_j - (k+1)/2)^2` from average ranks.
pub fn friedman_from_ranks(average_ranks: &[f64], instances: usize) -> FriedmanResult {
    let k = average_ranks.len() as f64;
    let centre = (k + 1.0) / 2.0;
    let spread: f64 = average_ranks.iter().map(|r| (r - centre).powi(2)).sum();
    let statistic = 12.0 * instances as f64 / (k * (k + 1.0)) * spread;
    let df = average_ranks.len().saturating_sub(1);
    FriedmanResult {
        average_ranks: average_ranks.to_vec(),
        instances,
        statistic,
        df,
        p_value: chi2_sf(statistic, df),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmComparison {
    /// Column of the compared algorithm.
    pub index: usize,
    pub z: f64,
    pub p_unadjusted: f64,
    pub p_adjusted: f64,
    pub reject: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HolmResult {
    pub control: usize,
    pub alpha: f64,
    /// Non-control algorithms, most significant first.
    pub comparisons: Vec<HolmComparison>,
}

/// Holm step-down procedure for all algorithms against `control`, with
/// z statistics from average ranks over `instances` problems.
pub fn holm(average_ranks: &[f64], instances: usize, control: usize, alpha: f64) -> Result<HolmResult, StatsError> {
    let k = average_ranks.len();
    if control >= k {
        return Err(StatsError::ControlOutOfRange { control, k });
    }
    let se = ((k * (k + 1)) as f64 / (6.0 * instances as f64)).sqrt();
    let mut comparisons: Vec<HolmComparison> = (0..k)
        .filter(|&j| j != control)
        .map(|j| {
            let z = (average_ranks[j] - average_ranks[control]) / se;
            HolmComparison {
                index: j,
                z,
                p_unadjusted: normal_two_sided_p(z),
                p_adjusted: 0.0,
                reject: false,
            }
        })
        .collect();
    comparisons.sort_by(|a, b| a.p_unadjusted.total_cmp(&b.p_unadjusted).then(a.index.cmp(&b.index)));
    let m = comparisons.len();
    let mut running = 0.0_f64;
    let mut still_rejecting = true;
    for (h, c) in comparisons.iter_mut().enumerate() {
        running = running.max(((m - h) as f64 * c.p_unadjusted).min(1.0));
        c.p_adjusted = running;
        still_rejecting &= c.p_unadjusted <= alpha / (m - h) as f64;
        c.reject = still_rejecting;
    }
    Ok(HolmResult { control, alpha, comparisons })
}

/// A column whose recomputed average rank differs from a reference value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankDiscrepancy {
    pub index: usize,
    pub recomputed: f64,
    pub reference: f64,
}

pub fn rank_discrepancies(recomputed: &[f64], reference: &[f64], tolerance: f64) -> Vec<RankDiscrepancy> {
    recomputed
        .iter()
        .zip(reference)
        .enumerate()
        .filter(|(_, (a, b))| (*a - *b).abs() > tolerance)
        .map(|(index, (&recomputed, &reference))| RankDiscrepancy { index, recomputed, reference })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Closed form for even degrees of freedom.
    fn chi2_sf_even(x: f64, df: usize) -> f64 {
        let h = x / 2.0;
        let mut term = 1.0;
        let mut sum = 1.0;
        for k in 1..df / 2 {
            term *= h / k as f64;
            sum += term;
        }
        (-h).exp() * sum
    }

    fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, steps: usize) -> f64 {
        let h = (b - a) / steps as f64;
        let mut s = f(a) + f(b);
        for i in 1..steps {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[5.0, 5.0, 5.0]).unwrap(), Aggregate { mean: 5.0, sd: 0.0, n: 3 });
        assert_eq!(aggregate(&[1.0, 2.0, 3.0]).unwrap(), Aggregate { mean: 2.0, sd: 1.0, n: 3 });
        assert_eq!(aggregate(&[7.0]).unwrap(), Aggregate { mean: 7.0, sd: 0.0, n: 1 });
        assert_eq!(aggregate(&[]), Err(StatsError::Empty));
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 2.0]), vec![3.0, 1.0, 2.0]);
        assert_eq!(midranks(&[5.0, 5.0, 1.0, 9.0]), vec![2.5, 2.5, 1.0, 4.0]);
        assert_eq!(midranks(&[4.0, 4.0, 4.0]), vec![2.0, 2.0, 2.0]);
    }

    #[test]
    fn population_table_ranking() {
        let means = vec![
            vec![51945.7, 51561.3, 50989.5, 50934.3],
            vec![57398.7, 56721.8, 56203.8, 56213.7],
            vec![92990.39, 91663.8, 89512.0, 89531.0],
            vec![110206.94, 108241.6, 107799.5, 107745.7],
        ];
        assert_eq!(average_ranks(&means).unwrap(), vec![4.0, 3.0, 1.5, 1.5]);
    }

    #[test]
    fn friedman_regression_from_published_ranks() {
        let ranks = [1.2, 2.0667, 2.7333];
        let f = friedman_from_ranks(&ranks, 15);
        assert!((f.statistic - 17.73).abs() < 0.01, "{}", f.statistic);
        assert_eq!(f.df, 2);
        assert!((f.p_value - 0.000141).abs() < 2e-6, "{}", f.p_value);
        // exact arithmetic: 15 * sum (R - 2)^2 with df 2 tail exp(-x/2)
        let hand = 15.0 * (0.8f64.powi(2) + 0.0667f64.powi(2) + 0.7333f64.powi(2));
        assert!((f.statistic - hand).abs() < 1e-9);
        assert!((f.p_value - (-hand / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn friedman_degenerate_rows() {
        let same = vec![vec![3.0, 3.0, 3.0]; 4];
        let f = friedman(&same).unwrap();
        assert_eq!(f.statistic, 0.0);
        assert_eq!(f.p_value, 1.0);
        assert!(matches!(friedman(&[vec![1.0, 2.0]]), Err(StatsError::TooFew { .. })));
        assert!(matches!(friedman(&[vec![1.0, 2.0], vec![1.0]]), Err(StatsError::Ragged { .. })));
    }

    #[test]
    fn ranks_sum_to_grid_total() {
        let rows = vec![vec![1.0, 5.0, 3.0], vec![2.0, 2.0, 9.0], vec![8.0, 1.0, 4.0]];
        let ranks = average_ranks(&rows).unwrap();
        let total: f64 = ranks.iter().sum::<f64>() * rows.len() as f64;
        assert!((total - 3.0 * 6.0).abs() < 1e-12);
    }

    #[test]
    fn chi2_critical_point_and_even_closed_form() {
        assert!((chi2_sf(9.21, 2) - 0.0100).abs() < 5e-5);
        assert_eq!(chi2_sf(0.0, 3), 1.0);
        for df in [2usize, 4, 6, 8, 10] {
            for x in [0.1, 1.0, 2.5, 7.3, 17.73, 30.0] {
                assert!((chi2_sf(x, df) - chi2_sf_even(x, df)).abs() < 1e-10, "df {df} x {x}");
            }
        }
    }

    #[test]
    fn chi2_odd_df_matches_quadrature() {
        // df = 3 density: sqrt(x) e^{-x/2} / (2^{3/2} Gamma(3/2)), Gamma(3/2) = sqrt(pi)/2;
        // substitute x = u^2 to remove the square-root cusp at 0
        let norm = 2f64.powf(1.5) * std::f64::consts::PI.sqrt() / 2.0;
        for x in [0.5f64, 2.0, 6.0, 12.0] {
            let cdf = simpson(|u: f64| 2.0 * u * u * (-u * u / 2.0).exp() / norm, 0.0, x.sqrt(), 20_000);
            assert!((chi2_sf(x, 3) - (1.0 - cdf)).abs() < 1e-10, "x {x}");
        }
    }

    #[test]
    fn normal_tail_matches_quadrature() {
        let phi = |t: f64| (-t * t / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
        for z in [0.0f64, 0.5, 1.96, 2.3735, 4.2] {
            let oracle = 1.0 - 2.0 * simpson(phi, 0.0, z.max(1e-300), 20_000);
            assert!((normal_two_sided_p(z) - oracle).abs() < 1e-12, "z {z}: {} vs {oracle}", normal_two_sided_p(z));
            assert_eq!(normal_two_sided_p(z), normal_two_sided_p(-z));
        }
    }

    #[test]
    fn holm_regression_from_published_ranks() {
        let h = holm(&[1.2, 2.0667, 2.7333], 15, 0, 0.05).unwrap();
        assert_eq!(h.comparisons.len(), 2);
        let ea = &h.comparisons[0];
        let esa = &h.comparisons[1];
        assert_eq!((ea.index, esa.index), (2, 1));
        assert!((esa.p_unadjusted - 0.017622).abs() < 1e-5, "{}", esa.p_unadjusted);
        assert!((ea.p_unadjusted - 0.000027).abs() < 1e-5, "{}", ea.p_unadjusted);
        assert!((ea.p_adjusted - 0.000054).abs() < 1e-5);
        assert!((esa.p_adjusted - 0.017622).abs() < 1e-5);
        assert!(ea.reject && esa.reject);
        // hand arithmetic: SE = sqrt(12 / 90)
        let se = (12.0f64 / 90.0).sqrt();
        assert!((esa.z - 0.8667 / se).abs() < 1e-12);
    }

    #[test]
    fn holm_excludes_control_and_checks_range() {
        let h = holm(&[2.0, 1.0, 3.0], 10, 1, 0.05).unwrap();
        assert!(h.comparisons.iter().all(|c| c.index != 1));
        assert!(holm(&[2.0, 1.0], 10, 2, 0.05).is_err());
    }

    #[test]
    fn discrepancy_is_flagged() {
        let d = rank_discrepancies(&[1.1333, 2.0, 2.8667], &[1.2, 2.0667, 2.7333], 1e-3);
        assert_eq!(d.len(), 3);
        assert!(rank_discrepancies(&[1.2, 2.0], &[1.2, 2.0], 1e-9).is_empty());
    }

    proptest! {
        #[test]
        fn friedman_is_invariant_under_monotone_maps(rows in prop::collection::vec(prop::collection::vec(-100.0f64..100.0, 4), 2..12)) {
            let cubed: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|v| v.powi(3)).collect()).collect();
            let a = friedman(&rows).unwrap();
            let b = friedman(&cubed).unwrap();
            prop_assert_eq!(a.average_ranks, b.average_ranks);
            prop_assert_eq!(a.statistic, b.statistic);
        }

        #[test]
        fn chi2_sf_decreases(df in 1usize..12, x in 0.01f64..60.0, dx in 0.01f64..5.0) {
            prop_assert!(chi2_sf(x + dx, df) < chi2_sf(x, df));
        }

        #[test]
        fn holm_adjustment_is_monotone(ranks in prop::collection::vec(1.0f64..6.0, 2..7), n in 2usize..40) {
            let h = holm(&ranks, n, 0, 0.05).unwrap();
            for w in h.comparisons.windows(2) {
                prop_assert!(w[1].p_adjusted >= w[0].p_adjusted);
            }
            for c in &h.comparisons {
                prop_assert!(c.p_adjusted >= c.p_unadjusted - 1e-15);
                prop_assert!(c.p_adjusted <= 1.0);
            }
        }
    }
}
