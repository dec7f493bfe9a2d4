//! Front-quality indicators and rank-based significance tests.

mod stats;

pub use stats::{kruskal_wallis, mann_whitney_u, TestOutcome};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::moea::{Front, Snapshot};
use crate::simulator::ObjectiveVector;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub r1: f64,
    pub r2: f64,
}

impl Default for ReferencePoint {
    fn default() -> Self {
        Self { r1: 0.4223, r2: 0.5752 }
    }
}

impl ReferencePoint {
    pub fn new(r1: f64, r2: f64) -> Self {
        Self { r1, r2 }
    }

    /// Weak dominance of the reference point.
    pub fn covers(&self, f: &ObjectiveVector) -> bool {
        f.f1 <= self.r1 && f.f2 <= self.r2
    }
}

/// Union of all fronts with dominated and duplicate members removed.
pub fn combine_reference_front<'a>(fronts: impl IntoIterator<Item = &'a Front>) -> Front {
    Front::nondominated(fronts.into_iter().flat_map(|f| f.members.iter().copied()))
}

/// Nondominated objective vectors sorted by f1, duplicates removed.
fn staircase(points: &[ObjectiveVector]) -> Vec<ObjectiveVector> {
    let mut pts: Vec<ObjectiveVector> = points.to_vec();
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2)));
    let mut out: Vec<ObjectiveVector> = Vec::with_capacity(pts.len());
    for p in pts {
        if out.last().map_or(true, |q| p.f2 < q.f2) {
            out.push(p);
        }
    }
    out
}

/// Exact dominated area in two objectives. Points outside the reference box
/// are ignored; the second value counts them.
pub fn hypervolume_2d_counted(points: &[ObjectiveVector], r: ReferencePoint) -> (f64, usize) {
    let inside: Vec<ObjectiveVector> = points.iter().copied().filter(|p| r.covers(p)).collect();
    let excluded = points.len() - inside.len();
    let stairs = staircase(&inside);
    let mut area = 0.0;
    for (k, p) in stairs.iter().enumerate() {
        let next_f1 = stairs.get(k + 1).map_or(r.r1, |q| q.f1);
        area += (next_f1 - p.f1) * (r.r2 - p.f2);
    }
    (area, excluded)
}

/// Exact dominated area in two objectives, logging a warning when members
/// lie outside the reference box.
pub fn hypervolume_2d(points: &[ObjectiveVector], r: ReferencePoint) -> f64 {
    let (area, excluded) = hypervolume_2d_counted(points, r);
    if excluded > 0 {
        log::warn!(
            "{excluded} of {} points lie outside the hypervolume reference box ({}, {})",
            points.len(),
            r.r1,
            r.r2
        );
    }
    area
}

/// Hypervolume on objectives scaled into the unit box spanned by 1.1 times
/// the front bounds `bounds`, so that the reference point becomes (1, 1).
/// Objectives are nonnegative here, which puts the lower corner at the origin.
pub fn normalized_hypervolume(points: &[ObjectiveVector], bounds: ReferencePoint) -> f64 {
    let r = ReferencePoint::new(NORMALIZED_MARGIN * bounds.r1, NORMALIZED_MARGIN * bounds.r2);
    hypervolume_2d(points, r) / (r.r1 * r.r2)
}

/// [`normalized_hypervolume`] without the warning; the second value counts
/// the points outside the scaled box.
pub fn normalized_hypervolume_counted(points: &[ObjectiveVector], bounds: ReferencePoint) -> (f64, usize) {
    let r = ReferencePoint::new(NORMALIZED_MARGIN * bounds.r1, NORMALIZED_MARGIN * bounds.r2);
    let (area, excluded) = hypervolume_2d_counted(points, r);
    (area / (r.r1 * r.r2), excluded)
}

/// Reference point offset of [`normalized_hypervolume`] relative to the bounds.
pub const NORMALIZED_MARGIN: f64 = 1.1;

fn distance(a: &ObjectiveVector, b: &ObjectiveVector) -> f64 {
    (a.f1 - b.f1).hypot(a.f2 - b.f2)
}

/// Mean distance from each reference member to its nearest front member.
/// Infinite for an empty front.
pub fn igd(front: &[ObjectiveVector], reference: &[ObjectiveVector]) -> Result<f64> {
    if reference.is_empty() {
        return Err(Error::Undefined("IGD of an empty reference front"));
    }
    if front.is_empty() {
        return Ok(f64::INFINITY);
    }
    let total: f64 = reference
        .iter()
        .map(|r| front.iter().map(|f| distance(f, r)).fold(f64::INFINITY, f64::min))
        .sum();
    Ok(total / reference.len() as f64)
}

/// Deb's spread Δ. Extreme distances are taken from the front's end points to
/// the reference front's extremes (lowest f1 and lowest f2).
pub fn spread(front: &[ObjectiveVector], reference: &[ObjectiveVector]) -> Result<f64> {
    if front.len() < 2 {
        return Err(Error::Undefined("spread of a front with fewer than two members"));
    }
    if reference.is_empty() {
        return Err(Error::Undefined("spread against an empty reference front"));
    }
    let mut pts = front.to_vec();
    pts.sort_by(|a, b| a.f1.total_cmp(&b.f1).then(b.f2.total_cmp(&a.f2)));
    let by_f1 = reference.iter().min_by(|a, b| a.f1.total_cmp(&b.f1).then(a.f2.total_cmp(&b.f2))).unwrap();
    let by_f2 = reference.iter().min_by(|a, b| a.f2.total_cmp(&b.f2).then(a.f1.total_cmp(&b.f1))).unwrap();
    let d_f = distance(&pts[0], by_f1);
    let d_l = distance(&pts[pts.len() - 1], by_f2);

    let gaps: Vec<f64> = pts.windows(2).map(|w| distance(&w[0], &w[1])).collect();
    let mean = gaps.iter().sum::<f64>() / gaps.len() as f64;
    let deviation: f64 = gaps.iter().map(|d| (d - mean).abs()).sum();
    let denom = d_f + d_l + gaps.len() as f64 * mean;
    if denom == 0.0 {
        return Ok(0.0);
    }
    Ok((d_f + d_l + deviation) / denom)
}

/// Normalized hypervolume of each snapshot. Working sets routinely hold
/// members outside the box early on, so these are dropped silently.
pub fn hv_history(history: &[Snapshot], bounds: ReferencePoint) -> Vec<(usize, f64)> {
    history
        .iter()
        .map(|s| (s.evaluations, normalized_hypervolume_counted(&s.objectives, bounds).0))
        .collect()
}

/// Sample mean and standard deviation (n - 1 denominator; 0 for one sample).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self { mean: f64::NAN, std: f64::NAN, n };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std, n }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Indicator {
    Hv,
    Igd,
    Spread,
}

impl Indicator {
    pub const ALL: [Indicator; 3] = [Indicator::Hv, Indicator::Igd, Indicator::Spread];

    pub fn label(self) -> &'static str {
        match self {
            Indicator::Hv => "HV",
            Indicator::Igd => "IGD",
            Indicator::Spread => "Spread",
        }
    }
}

/// Per-run indicator values of one algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSamples {
    pub name: String,
    /// Normalized hypervolume, see [`normalized_hypervolume`].
    pub hv: Vec<f64>,
    /// Plain staircase area against the reference point itself.
    pub hv_raw: Vec<f64>,
    pub igd: Vec<f64>,
    /// `None` where the run's front had fewer than two members.
    pub spread: Vec<Option<f64>>,
}

impl AlgorithmSamples {
    pub fn from_fronts(name: impl Into<String>, fronts: &[Front], reference: &Front, r: ReferencePoint) -> Result<Self> {
        let reference = reference.objectives();
        let mut out = Self {
            name: name.into(),
            hv: Vec::with_capacity(fronts.len()),
            hv_raw: Vec::with_capacity(fronts.len()),
            igd: Vec::with_capacity(fronts.len()),
            spread: Vec::with_capacity(fronts.len()),
        };
        for front in fronts {
            let objs = front.objectives();
            out.hv.push(normalized_hypervolume(&objs, r));
            out.hv_raw.push(hypervolume_2d(&objs, r));
            out.igd.push(igd(&objs, &reference)?);
            out.spread.push(spread(&objs, &reference).ok());
        }
        Ok(out)
    }

    pub fn values(&self, which: Indicator) -> Vec<f64> {
        match which {
            Indicator::Hv => self.hv.clone(),
            Indicator::Igd => self.igd.clone(),
            Indicator::Spread => self.spread.iter().flatten().copied().collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmSummary {
    pub name: String,
    pub runs: usize,
    pub hv: Summary,
    pub hv_raw: Summary,
    pub igd: Summary,
    pub spread: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub indicator: Indicator,
    pub a: String,
    pub b: String,
    pub outcome: TestOutcome,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupTest {
    pub indicator: Indicator,
    pub outcome: TestOutcome,
    pub significant: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndicatorReport {
    pub reference_point: ReferencePoint,
    pub alpha: f64,
    pub algorithms: Vec<AlgorithmSummary>,
    pub kruskal_wallis: Vec<GroupTest>,
    pub pairwise: Vec<PairwiseTest>,
}

impl IndicatorReport {
    /// Summaries per algorithm, then for each indicator a Kruskal-Wallis test
    /// over all algorithms followed by pairwise Mann-Whitney tests. Tests
    /// need at least two algorithms.
    pub fn build(samples: &[AlgorithmSamples], r: ReferencePoint, alpha: f64) -> Self {
        let algorithms = samples
            .iter()
            .map(|s| AlgorithmSummary {
                name: s.name.clone(),
                runs: s.hv.len(),
                hv: Summary::of(&s.hv),
                hv_raw: Summary::of(&s.hv_raw),
                igd: Summary::of(&s.igd),
                spread: Summary::of(&s.values(Indicator::Spread)),
            })
            .collect();
        let mut kruskal = Vec::new();
        let mut pairwise = Vec::new();
        if samples.len() >= 2 {
            for which in Indicator::ALL {
                let groups: Vec<Vec<f64>> = samples.iter().map(|s| s.values(which)).collect();
                if groups.iter().any(|g| g.is_empty()) {
                    continue;
                }
                let outcome = kruskal_wallis(&groups);
                kruskal.push(GroupTest {
                    indicator: which,
                    outcome,
                    significant: outcome.p_value <= alpha,
                });
                for i in 0..samples.len() {
                    for j in i + 1..samples.len() {
                        let outcome = mann_whitney_u(&groups[i], &groups[j]);
                        pairwise.push(PairwiseTest {
                            indicator: which,
                            a: samples[i].name.clone(),
                            b: samples[j].name.clone(),
                            outcome,
                            significant: outcome.p_value <= alpha,
                        });
                    }
                }
            }
        }
        Self {
            reference_point: r,
            alpha,
            algorithms,
            kruskal_wallis: kruskal,
            pairwise,
        }
    }

    /// Mean (standard deviation) table, one row per algorithm.
    pub fn table(&self) -> String {
        let mut out = format!("{:<10} {:>22} {:>22} {:>22}\n", "Algorithm", "HV", "IGD", "Spread");
        for a in &self.algorithms {
            let cell = |s: &Summary| format!("{:.1E} ({:.1E})", s.mean, s.std);
            out.push_str(&format!(
                "{:<10} {:>22} {:>22} {:>22}\n",
                a.name,
                cell(&a.hv),
                cell(&a.igd),
                cell(&a.spread)
            ));
        }
        for k in &self.kruskal_wallis {
            out.push_str(&format!(
                "Kruskal-Wallis {:<6} H = {:.4}, p = {:.3E}\n",
                k.indicator.label(),
                k.outcome.statistic,
                k.outcome.p_value
            ));
        }
        for p in &self.pairwise {
            out.push_str(&format!(
                "Mann-Whitney {:<6} {} vs {}: U = {:.1}, p = {:.3E}{}\n",
                p.indicator.label(),
                p.a,
                p.b,
                p.outcome.statistic,
                p.outcome.p_value,
                if p.significant { " *" } else { "" }
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moea::Individual;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn ov(f1: f64, f2: f64) -> ObjectiveVector {
        ObjectiveVector::new(f1, f2)
    }

    fn front_of(points: &[(f64, f64)]) -> Front {
        Front::nondominated(
            points
                .iter()
                .map(|&(a, b)| Individual::new([100.0 * a, 100.0 * b], ov(a, b))),
        )
    }

    /// Random mutually nondominated set inside the unit box.
    fn random_front(rng: &mut ChaCha8Rng, n: usize) -> Vec<ObjectiveVector> {
        let mut f1: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let mut f2: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        f1.sort_by(f64::total_cmp);
        f2.sort_by(|a, b| b.total_cmp(a));
        f1.into_iter().zip(f2).map(|(a, b)| ov(a, b)).collect()
    }

    #[test]
    fn hv_small_cases() {
        let r = ReferencePoint::default();
        assert_eq!(hypervolume_2d(&[], r), 0.0);
        assert_abs_diff_eq!(
            hypervolume_2d(&[ov(0.2, 0.3)], r),
            (0.4223 - 0.2) * (0.5752 - 0.3),
            epsilon = 1e-15
        );
        // Two steps under ref (1,1): width 0.5 at height 0.5, then width 0.5 at height 1.
        let r1 = ReferencePoint::new(1.0, 1.0);
        let hv = hypervolume_2d(&[ov(0.0, 0.5), ov(0.5, 0.0)], r1);
        assert_abs_diff_eq!(hv, 0.5 * 0.5 + 0.5 * 1.0, epsilon = 1e-15);
        // The reference point itself and outside points add nothing.
        assert_eq!(hypervolume_2d_counted(&[ov(1.0, 1.0)], r1), (0.0, 0));
        assert_eq!(hypervolume_2d_counted(&[ov(1.5, 0.0)], r1), (0.0, 1));
        // Dominated members do not change the area.
        assert_eq!(hypervolume_2d(&[ov(0.0, 0.5), ov(0.5, 0.0), ov(0.6, 0.6)], r1), hv);
    }

    #[test]
    fn hv_matches_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let r = ReferencePoint::new(1.0, 1.0);
        const SAMPLES: usize = 1_000_000;
        for round in 0..100 {
            let n = if round == 0 { 30 } else { rng.gen_range(1..=30) };
            let front = random_front(&mut rng, n);
            let exact = hypervolume_2d(&front, r);
            let hits = (0..SAMPLES)
                .filter(|_| {
                    let p = ov(rng.gen(), rng.gen());
                    front.iter().any(|q| q.f1 <= p.f1 && q.f2 <= p.f2)
                })
                .count();
            let p = hits as f64 / SAMPLES as f64;
            let se = (p * (1.0 - p) / SAMPLES as f64).sqrt().max(1e-9);
            let z = (exact - p).abs() / se;
            assert!(z <= 3.0, "round {round}: exact {exact} vs mc {p} (z = {z})");
        }
    }

    #[test]
    fn normalized_hv_single_point() {
        let bounds = ReferencePoint::default();
        let (r1, r2) = (1.1 * 0.4223, 1.1 * 0.5752);
        let hv = normalized_hypervolume(&[ov(0.2, 0.3)], bounds);
        assert_abs_diff_eq!(hv, (1.0 - 0.2 / r1) * (1.0 - 0.3 / r2), epsilon = 1e-14);
        // The bounds corner still dominates the square margin between it and (1, 1).
        let corner = normalized_hypervolume(&[ov(0.4223, 0.5752)], bounds);
        assert_abs_diff_eq!(corner, (1.0f64 - 1.0 / 1.1).powi(2), epsilon = 1e-14);
        assert_eq!(normalized_hypervolume(&[ov(0.0, 0.0)], bounds), 1.0);
    }

    #[test]
    fn igd_examples() {
        assert_eq!(igd(&[ov(3.0, 4.0)], &[ov(0.0, 0.0)]).unwrap(), 5.0);
        assert_eq!(igd(&[], &[ov(0.0, 0.0)]).unwrap(), f64::INFINITY);
        assert!(igd(&[ov(0.0, 0.0)], &[]).is_err());
        // Mean over reference members: distances 0 and 1.
        assert_eq!(igd(&[ov(0.0, 1.0)], &[ov(0.0, 1.0), ov(1.0, 1.0)]).unwrap(), 0.5);
    }

    #[test]
    fn spread_examples() {
        let reference: Vec<_> = (0..=10).map(|k| ov(k as f64 / 10.0, 1.0 - k as f64 / 10.0)).collect();
        assert_abs_diff_eq!(spread(&reference, &reference).unwrap(), 0.0, epsilon = 1e-12);
        let ends = [ov(0.0, 1.0), ov(1.0, 0.0)];
        assert_eq!(spread(&ends, &reference).unwrap(), 0.0);
        assert!(spread(&ends[..1], &reference).is_err());
        // Hand computation: front (0,1),(0.1,0.9),(1,0) against the same
        // extremes. Gaps s = 0.1√2 and 0.9√2, mean 0.5√2, Δ = 0.8√2 / √2.
        let lopsided = [ov(0.0, 1.0), ov(0.1, 0.9), ov(1.0, 0.0)];
        assert_abs_diff_eq!(spread(&lopsided, &reference).unwrap(), 0.8, epsilon = 1e-12);
        // Missing the extremes adds d_f + d_l to both sums.
        let inner = [ov(0.1, 0.9), ov(0.9, 0.1)];
        let d = 0.1 * 2f64.sqrt();
        assert_abs_diff_eq!(
            spread(&inner, &reference).unwrap(),
            2.0 * d / (2.0 * d + 0.8 * 2f64.sqrt()),
            epsilon = 1e-12
        );
    }

    #[test]
    fn combine_examples() {
        let a = front_of(&[(0.0, 1.0), (1.0, 0.0)]);
        assert_eq!(combine_reference_front([&a]), a);
        let b = front_of(&[(0.5, 0.5)]);
        let both = combine_reference_front([&a, &b]);
        assert_eq!(both.len(), 3);
        let c = front_of(&[(0.6, 0.6)]);
        assert_eq!(combine_reference_front([&a, &b, &c]).len(), 3);
    }

    #[test]
    fn hv_history_one_point_per_snapshot() {
        let snaps = vec![Snapshot {
            evaluations: 100,
            objectives: vec![ov(0.0, 0.0)],
        }];
        // Scaled box 1.1 x 2.2 fully dominated by the origin.
        assert_eq!(hv_history(&snaps, ReferencePoint::new(1.0, 2.0)), vec![(100, 1.0)]);
    }

    #[test]
    fn report_single_algorithm_has_no_tests() {
        let f = front_of(&[(0.1, 0.3), (0.3, 0.1)]);
        let s = AlgorithmSamples::from_fronts("A", &[f.clone(), f.clone()], &f, ReferencePoint::new(1.0, 1.0)).unwrap();
        let report = IndicatorReport::build(&[s], ReferencePoint::new(1.0, 1.0), 0.01);
        assert_eq!(report.algorithms.len(), 1);
        assert_eq!(report.algorithms[0].runs, 2);
        assert!(report.kruskal_wallis.is_empty() && report.pairwise.is_empty());
        assert_eq!(report.table().lines().count(), 2);
    }

    #[test]
    fn identical_algorithms_are_not_significant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let fronts: Vec<Front> = (0..10)
            .map(|_| {
                let pts: Vec<(f64, f64)> = random_front(&mut rng, 8).iter().map(|p| (p.f1, p.f2)).collect();
                front_of(&pts)
            })
            .collect();
        let reference = combine_reference_front(&fronts);
        let r = ReferencePoint::new(1.0, 1.0);
        let a = AlgorithmSamples::from_fronts("A", &fronts, &reference, r).unwrap();
        let b = AlgorithmSamples::from_fronts("B", &fronts, &reference, r).unwrap();
        let report = IndicatorReport::build(&[a, b], r, 0.01);
        assert_eq!(report.pairwise.len(), 3);
        assert!(report.pairwise.iter().all(|p| !p.significant));
        assert!(report.kruskal_wallis.iter().all(|k| !k.significant));
    }

    fn arb_front() -> impl Strategy<Value = Vec<ObjectiveVector>> {
        (1usize..20, any::<u64>()).prop_map(|(n, seed)| random_front(&mut ChaCha8Rng::seed_from_u64(seed), n))
    }

    proptest! {
        #[test]
        fn hv_never_drops_when_adding_a_point(front in arb_front(), a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let r = ReferencePoint::new(1.0, 1.0);
            let before = hypervolume_2d(&front, r);
            let mut more = front.clone();
            more.push(ov(a, b));
            prop_assert!(hypervolume_2d(&more, r) >= before - 1e-15);
        }

        #[test]
        fn igd_of_front_with_itself_is_zero(front in arb_front()) {
            prop_assert_eq!(igd(&front, &front).unwrap(), 0.0);
        }

        #[test]
        fn combine_is_idempotent(seeds in prop::collection::vec(any::<u64>(), 1..6)) {
            let fronts: Vec<Front> = seeds
                .iter()
                .map(|&s| {
                    let pts: Vec<(f64, f64)> = random_front(&mut ChaCha8Rng::seed_from_u64(s), 6).iter().map(|p| (p.f1, p.f2)).collect();
                    front_of(&pts)
                })
                .collect();
            let once = combine_reference_front(&fronts);
            prop_assert!(once.is_mutually_nondominated());
            prop_assert_eq!(combine_reference_front([&once]), once.clone());
        }
    }
}
