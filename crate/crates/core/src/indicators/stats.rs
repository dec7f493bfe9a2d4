//! Rank-based two-sided tests.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

/// Samples of this size or larger use the normal approximation.
pub const EXACT_LIMIT: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestOutcome {
    pub statistic: f64,
    pub p_value: f64,
}

/// Midranks (1-based) of the pooled values, plus the tie term Σ(t³ - t).
fn midranks(pooled: &[f64]) -> (Vec<f64>, f64) {
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&a, &b| pooled[a].total_cmp(&pooled[b]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && pooled[order[j + 1]] == pooled[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        let t = (j - i + 1) as f64;
        ties += t * t * t - t;
        i = j + 1;
    }
    (ranks, ties)
}

/// Mann-Whitney U of `a` against `b`, two-sided.
///
/// Exact permutation distribution of the rank sum (midranks under ties) when
/// both samples are smaller than [`EXACT_LIMIT`]; otherwise the normal
/// approximation with tie-corrected variance and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> TestOutcome {
    assert!(!a.is_empty() && !b.is_empty(), "Mann-Whitney needs two non-empty samples");
    let (na, nb) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let rank_sum: f64 = ranks[..na].iter().sum();
    let u = rank_sum - (na * (na + 1)) as f64 / 2.0;
    let mean = (na * nb) as f64 / 2.0;

    let p_value = if na < EXACT_LIMIT && nb < EXACT_LIMIT {
        exact_p(&ranks, na, rank_sum)
    } else {
        let n = (na + nb) as f64;
        let var = (na * nb) as f64 / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
        if var <= 0.0 {
            1.0
        } else {
            let z = ((u - mean).abs() - 0.5).max(0.0) / var.sqrt();
            let normal = Normal::new(0.0, 1.0).expect("standard normal");
            (2.0 * normal.sf(z)).min(1.0)
        }
    };
    TestOutcome { statistic: u, p_value }
}

/// Share of all C(N, na) rank assignments whose rank sum lies at least as far
/// from its mean as the observed one.
fn exact_p(ranks: &[f64], na: usize, observed: f64) -> f64 {
    // Doubled midranks are integers; count subsets by (size, doubled sum).
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    let mut ways = vec![vec![0f64; max_sum + 1]; na + 1];
    ways[0][0] = 1.0;
    for &r in &doubled {
        for k in (1..=na).rev() {
            for s in (r..=max_sum).rev() {
                let add = ways[k - 1][s - r];
                ways[k][s] += add;
            }
        }
    }
    let centre = na as f64 * (ranks.len() + 1) as f64;
    let observed_dev = (2.0 * observed - centre).abs();
    let total: f64 = ways[na].iter().sum();
    let extreme: f64 = ways[na]
        .iter()
        .enumerate()
        .filter(|&(s, _)| (s as f64 - centre).abs() >= observed_dev - 1e-9)
        .map(|(_, w)| w)
        .sum();
    (extreme / total).min(1.0)
}

/// Kruskal-Wallis H with tie correction; p from chi-squared with k - 1
/// degrees of freedom.
pub fn kruskal_wallis(groups: &[Vec<f64>]) -> TestOutcome {
    assert!(groups.len() >= 2, "Kruskal-Wallis needs at least two groups");
    assert!(groups.iter().all(|g| !g.is_empty()), "Kruskal-Wallis groups must be non-empty");
    let pooled: Vec<f64> = groups.iter().flatten().copied().collect();
    let n = pooled.len() as f64;
    let (ranks, ties) = midranks(&pooled);
    let correction = 1.0 - ties / (n * n * n - n);
    if correction <= 0.0 {
        return TestOutcome { statistic: 0.0, p_value: 1.0 };
    }
    let mut offset = 0;
    let mut weighted = 0.0;
    for g in groups {
        let r: f64 = ranks[offset..offset + g.len()].iter().sum();
        weighted += r * r / g.len() as f64;
        offset += g.len();
    }
    let h = ((12.0 / (n * (n + 1.0)) * weighted - 3.0 * (n + 1.0)) / correction).max(0.0);
    let chi2 = ChiSquared::new((groups.len() - 1) as f64).expect("positive degrees of freedom");
    TestOutcome {
        statistic: h,
        p_value: chi2.sf(h),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    /// Brute-force permutation test over every subset of positions.
    fn enumerate_p(a: &[f64], b: &[f64]) -> f64 {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let (ranks, _) = midranks(&pooled);
        let n = pooled.len();
        let na = a.len();
        let observed: f64 = ranks[..na].iter().sum();
        let mean = na as f64 * (n + 1) as f64 / 2.0;
        let (mut hit, mut total) = (0u32, 0u32);
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize != na {
                continue;
            }
            let s: f64 = (0..n).filter(|k| mask >> k & 1 == 1).map(|k| ranks[k]).sum();
            total += 1;
            if (s - mean).abs() >= (observed - mean).abs() - 1e-9 {
                hit += 1;
            }
        }
        hit as f64 / total as f64
    }

    #[test]
    fn separated_triples() {
        let t = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]);
        assert_eq!(t.statistic, 0.0);
        // Two of the C(6,3) = 20 assignments are as extreme.
        assert_abs_diff_eq!(t.p_value, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn exact_matches_enumeration_with_ties() {
        let cases: [(&[f64], &[f64]); 4] = [
            (&[1.0, 2.0, 2.0, 5.0], &[2.0, 3.0, 7.0]),
            (&[0.5], &[0.1, 0.2, 0.9]),
            (&[1.0, 1.0, 1.0], &[1.0, 2.0]),
            (&[3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0], &[6.0, 5.0, 3.0, 5.0, 8.0, 9.0, 7.0]),
        ];
        for (a, b) in cases {
            assert_abs_diff_eq!(mann_whitney_u(a, b).p_value, enumerate_p(a, b), epsilon = 1e-12);
        }
    }

    #[test]
    fn identical_samples_not_significant() {
        let a: Vec<f64> = (0..36).map(|k| k as f64).collect();
        let t = mann_whitney_u(&a, &a);
        assert_eq!(t.statistic, 36.0 * 36.0 / 2.0);
        assert_eq!(t.p_value, 1.0);
        assert_eq!(mann_whitney_u(&[2.0, 2.0], &[2.0]).p_value, 1.0);
    }

    #[test]
    fn normal_approximation_hand_value() {
        // a = 0..9, b = 10..19: U = 0, mean 50, var 10*10*21/12 = 175.
        let a: Vec<f64> = (0..10).map(f64::from).collect();
        let b: Vec<f64> = (10..20).map(f64::from).collect();
        let t = mann_whitney_u(&a, &b);
        assert_eq!(t.statistic, 0.0);
        let z = 49.5 / 175f64.sqrt();
        let expected = statrs::function::erf::erfc(z / 2f64.sqrt());
        assert_abs_diff_eq!(t.p_value, expected, epsilon = 1e-14);
        assert!(t.p_value < 2e-4);
    }

    #[test]
    fn kruskal_wallis_identical_groups() {
        let g = vec![1.0, 2.0, 3.0];
        let t = kruskal_wallis(&[g.clone(), g.clone(), g]);
        assert_abs_diff_eq!(t.statistic, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.p_value, 1.0, epsilon = 1e-12);
        let flat = kruskal_wallis(&[vec![4.0, 4.0], vec![4.0]]);
        assert_eq!((flat.statistic, flat.p_value), (0.0, 1.0));
    }

    #[test]
    fn kruskal_wallis_constant_groups() {
        // Midranks 1.5, 3.5, 5.5; rank sums 3, 7, 11; N = 6.
        // Uncorrected: 12/42 * (9 + 49 + 121)/2 - 21 = 32/7.
        // Ties: three pairs, 1 - 18/210 = 32/35. H = (32/7) / (32/35) = 5.
        let t = kruskal_wallis(&[vec![1.0, 1.0], vec![2.0, 2.0], vec![3.0, 3.0]]);
        assert_abs_diff_eq!(t.statistic, 5.0, epsilon = 1e-12);
        // Chi-squared with 2 dof: sf(h) = exp(-h/2).
        assert_abs_diff_eq!(t.p_value, (-2.5f64).exp(), epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn mann_whitney_symmetric(
            a in prop::collection::vec(0u8..20, 1..12),
            b in prop::collection::vec(0u8..20, 1..12),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b);
            let ba = mann_whitney_u(&b, &a);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!((ab.statistic + ba.statistic - (a.len() * b.len()) as f64).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&ab.p_value));
        }
    }
}
