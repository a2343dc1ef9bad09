//! Collision-statistic testers for walk endpoint distributions.
//!
//! Both testers work on [`SampleCounts`] histograms. The norm tester counts
//! self-collisions `Z = sum_i C(c_i, 2)` and rejects once `Z >= C(r,2) sigma / 2`.
//! The closeness tester evaluates the unbiased estimator
//!
//! ```text
//! T = (sum_i C(X_i,2) + C(Y_i,2)) / C(r,2) - 2 sum_i X_i Y_i / r^2
//! ```
//!
//! of `||p - q||_2^2` on each of `m = ceil(24 ln(1/delta))` independent batch
//! pairs and accepts when the lower median is below `5 xi / 2`, the midpoint of
//! the promise gap `[xi, 4 xi]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::walk::SampleCounts;

/// Upper bound on samples per histogram; keeps `r^2` exact in 64 bits.
pub const MAX_SAMPLES: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TesterVerdict {
    pub accepted: bool,
    pub statistic: f64,
    pub threshold: f64,
    pub r: u64,
}

fn pairs(r: u64) -> u64 {
    r * r.saturating_sub(1) / 2
}

fn check_r(c: &SampleCounts) -> Result<u64> {
    let r = c.r();
    if r < 2 {
        return Err(Error::invalid(format!("need at least 2 samples, got {r}")));
    }
    if r > MAX_SAMPLES {
        return Err(Error::invalid(format!(
            "{r} samples exceeds the cap of {MAX_SAMPLES}"
        )));
    }
    Ok(r)
}

/// Number of pairwise self-collisions among the samples.
pub fn collision_count(c: &SampleCounts) -> u64 {
    c.iter().map(|(_, x)| pairs(x)).sum()
}

/// Accepts iff `Z < C(r,2) sigma / 2`; a tie rejects.
pub fn l2_norm_test(c: &SampleCounts, sigma: f64) -> Result<TesterVerdict> {
    let r = check_r(c)?;
    let threshold = 0.5 * pairs(r) as f64 * sigma;
    let statistic = c.cached_self_pairs() as f64;
    Ok(TesterVerdict {
        accepted: statistic < threshold,
        statistic,
        threshold,
        r,
    })
}

/// `Z / C(r,2)`, unbiased for `||p||_2^2`.
pub fn l2_norm_estimate(c: &SampleCounts) -> Result<f64> {
    let r = check_r(c)?;
    Ok(c.cached_self_pairs() as f64 / pairs(r) as f64)
}

/// Unbiased estimate of `||p - q||_2^2` from equally sized sample sets.
pub fn l2_distance_estimate(cp: &SampleCounts, cq: &SampleCounts) -> Result<f64> {
    let r = check_r(cp)?;
    if cq.r() != r {
        return Err(Error::invalid(format!(
            "sample sizes differ: {r} vs {}",
            cq.r()
        )));
    }
    Ok(distance_statistic(cp, cq, r))
}

fn distance_statistic(cp: &SampleCounts, cq: &SampleCounts, r: u64) -> f64 {
    let (a, b) = (cp.entries(), cq.entries());
    let (mut i, mut j) = (0, 0);
    let mut cross: u64 = 0;
    while i < a.len() && j < b.len() {
        match a[i].0.cmp(&b[j].0) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                cross += a[i].1 as u64 * b[j].1 as u64;
                i += 1;
                j += 1;
            }
        }
    }
    let self_term = (cp.cached_self_pairs() + cq.cached_self_pairs()) as f64 / pairs(r) as f64;
    self_term - 2.0 * cross as f64 / (r as f64 * r as f64)
}

/// Batch count `ceil(24 ln(1/delta))` that drives the median to confidence `1 - delta`.
pub fn amplification_batches(delta: f64) -> Result<usize> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta must lie in (0, 1), got {delta}")));
    }
    Ok((24.0 * (1.0 / delta).ln()).ceil().max(1.0) as usize)
}

/// Lower median: the `ceil(m/2)`-th smallest value.
pub(crate) fn lower_median(values: &mut [f64]) -> f64 {
    let mid = (values.len() - 1) / 2;
    let (_, m, _) = values.select_nth_unstable_by(mid, |a, b| a.total_cmp(b));
    *m
}

/// Median-amplified closeness test with promise `<= xi` versus `>= 4 xi`.
///
/// Both lists must hold exactly `amplification_batches(delta)` histograms,
/// all with the same sample count. A median exactly at `5 xi / 2` rejects.
pub fn l2_closeness_test(
    cp_list: &[SampleCounts],
    cq_list: &[SampleCounts],
    xi: f64,
    delta: f64,
) -> Result<TesterVerdict> {
    let m = amplification_batches(delta)?;
    if !(xi > 0.0) {
        return Err(Error::invalid(format!("xi must be positive, got {xi}")));
    }
    if cp_list.len() != m || cq_list.len() != m {
        return Err(Error::invalid(format!(
            "expected {m} batches per distribution, got {} and {}",
            cp_list.len(),
            cq_list.len()
        )));
    }
    let r = check_r(&cp_list[0])?;
    if let Some(bad) = cp_list.iter().chain(cq_list).find(|c| c.r() != r) {
        return Err(Error::invalid(format!(
            "batch sizes differ: {r} vs {}",
            bad.r()
        )));
    }
    let mut stats: Vec<f64> = cp_list
        .iter()
        .zip(cq_list)
        .map(|(p, q)| distance_statistic(p, q, r))
        .collect();
    Ok(closeness_verdict(&mut stats, xi, r))
}

fn closeness_verdict(stats: &mut [f64], xi: f64, r: u64) -> TesterVerdict {
    let threshold = 2.5 * xi;
    let statistic = lower_median(stats);
    TesterVerdict {
        accepted: statistic < threshold,
        statistic,
        threshold,
        r,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn counts(c: &[u64]) -> SampleCounts {
        SampleCounts::from_counts(0, 0, c.iter().copied().enumerate())
    }

    fn point_mass(v: usize, r: u64) -> SampleCounts {
        SampleCounts::from_counts(v, 0, [(v, r)])
    }

    #[test]
    fn collision_count_examples() {
        assert_eq!(collision_count(&counts(&[3, 2, 1])), 4);
        assert_eq!(collision_count(&counts(&[1, 1, 1, 1])), 0);
        assert_eq!(collision_count(&point_mass(5, 40)), 40 * 39 / 2);
    }

    #[test]
    fn norm_test_rule() {
        // r = 100 with Z = 25: threshold 0.5 * 4950 * 0.01 = 24.75
        let mut c = vec![1u64; 100];
        // turn 25 singletons into collisions: 25 doubletons -> Z = 25, r stays 100
        for i in 0..25 {
            c[i] = 2;
            c[99 - i] = 0;
        }
        let c = counts(&c);
        assert_eq!(c.r(), 100);
        assert_eq!(collision_count(&c), 25);
        let v = l2_norm_test(&c, 0.01).unwrap();
        assert!(!v.accepted);
        assert!((v.threshold - 24.75).abs() < 1e-12);

        let v = l2_norm_test(&point_mass(0, 30), 0.5).unwrap();
        assert!(!v.accepted);
        assert!(l2_norm_test(&point_mass(0, 1), 0.5).is_err());
    }

    #[test]
    fn norm_test_tie_rejects() {
        // r = 4, one doubleton: Z = 1, C(4,2) = 6, sigma = 1/3 gives threshold exactly 1
        let c = counts(&[2, 1, 1]);
        let v = l2_norm_test(&c, 1.0 / 3.0).unwrap();
        assert_eq!(v.threshold, 1.0);
        assert!(!v.accepted);
    }

    #[test]
    fn norm_estimate_examples() {
        let est = l2_norm_estimate(&counts(&[3, 2, 1])).unwrap();
        assert!((est - 4.0 / 15.0).abs() < 1e-15);
        assert_eq!(l2_norm_estimate(&point_mass(2, 17)).unwrap(), 1.0);
    }

    #[test]
    fn distance_estimate_examples() {
        let a = point_mass(3, 50);
        assert_eq!(l2_distance_estimate(&a, &a.clone()).unwrap(), 0.0);
        let b = point_mass(4, 50);
        assert_eq!(l2_distance_estimate(&a, &b).unwrap(), 2.0);
        assert!(l2_distance_estimate(&a, &point_mass(4, 49)).is_err());
    }

    #[test]
    fn batch_count_formula() {
        assert_eq!(amplification_batches(0.5).unwrap(), 17); // 24 ln 2 = 16.6
        assert_eq!(amplification_batches(1.0 / 12.0).unwrap(), 60); // 24 ln 12 = 59.6
        assert!(amplification_batches(0.0).is_err());
        assert!(amplification_batches(1.0).is_err());
    }

    #[test]
    fn closeness_examples() {
        let delta = 0.1;
        let m = amplification_batches(delta).unwrap();
        let same: Vec<_> = (0..m).map(|_| point_mass(1, 20)).collect();
        let v = l2_closeness_test(&same, &same, 0.01, delta).unwrap();
        assert!(v.accepted);
        assert_eq!(v.statistic, 0.0);

        let other: Vec<_> = (0..m).map(|_| point_mass(2, 20)).collect();
        let v = l2_closeness_test(&same, &other, 0.1, delta).unwrap();
        assert!(!v.accepted);
        assert_eq!(v.statistic, 2.0);

        assert!(l2_closeness_test(&same[1..], &other[1..], 0.1, delta).is_err());
        let mut mixed = other.clone();
        mixed[0] = point_mass(2, 21);
        assert!(l2_closeness_test(&same, &mixed, 0.1, delta).is_err());
    }

    #[test]
    fn closeness_tie_rejects() {
        // distinct point masses give statistic 2; xi = 0.8 puts the threshold at 2
        let m = amplification_batches(0.5).unwrap();
        let p: Vec<_> = (0..m).map(|_| point_mass(0, 10)).collect();
        let q: Vec<_> = (0..m).map(|_| point_mass(1, 10)).collect();
        let v = l2_closeness_test(&p, &q, 0.8, 0.5).unwrap();
        assert_eq!(v.statistic, v.threshold);
        assert!(!v.accepted);
    }

    #[test]
    fn median_resists_minority_corruption() {
        let delta = 0.05;
        let m = amplification_batches(delta).unwrap();
        let corrupt = (m - 1) / 2;
        let p: Vec<_> = (0..m).map(|_| point_mass(0, 10)).collect();

        // truly equal: corrupting a minority of q-batches to a far point mass
        let mut q: Vec<_> = (0..m).map(|_| point_mass(0, 10)).collect();
        for b in q.iter_mut().take(corrupt) {
            *b = point_mass(9, 10);
        }
        assert!(l2_closeness_test(&p, &q, 0.01, delta).unwrap().accepted);

        // truly far: corrupting a minority to match p must not flip to accept
        let mut q: Vec<_> = (0..m).map(|_| point_mass(9, 10)).collect();
        for b in q.iter_mut().rev().take(corrupt) {
            *b = point_mass(0, 10);
        }
        assert!(!l2_closeness_test(&p, &q, 0.01, delta).unwrap().accepted);
    }
}
