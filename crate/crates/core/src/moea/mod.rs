//! Multi-objective evolutionary algorithms over two bounded decision
//! variables and two minimized objectives.

mod moead;
mod mopso;
mod nsga2;
mod nsga3;
pub mod operators;
pub mod sorting;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulator::{Bounds, ObjectiveVector, TriggerProblem};

pub use moead::{run_moead, tchebycheff, uniform_weights};
pub use mopso::run_mopso;
pub use nsga2::run_nsga2;
pub use nsga3::{das_dennis, run_nsga3};
pub use sorting::{crowding_distance, fast_nondominated_sort};

pub type Decision = [f64; 2];

pub(crate) type Rand = ChaCha8Rng;

/// Something that maps a decision vector to two minimized objectives.
pub trait Problem: Sync {
    fn bounds(&self) -> Bounds;
    fn evaluate(&self, x: &Decision) -> Result<ObjectiveVector>;
}

impl Problem for TriggerProblem {
    fn bounds(&self) -> Bounds {
        TriggerProblem::bounds(self)
    }

    /// `x = (t_sd, t_ld)`.
    fn evaluate(&self, x: &Decision) -> Result<ObjectiveVector> {
        TriggerProblem::evaluate(self, x[0], x[1])
    }
}

/// Pareto dominance for minimization.
pub fn dominates(a: &ObjectiveVector, b: &ObjectiveVector) -> bool {
    a.f1 <= b.f1 && a.f2 <= b.f2 && (a.f1 < b.f1 || a.f2 < b.f2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Individual {
    pub x: Decision,
    pub f: ObjectiveVector,
    #[serde(skip)]
    pub rank: usize,
    #[serde(skip)]
    pub crowding: f64,
}

impl Individual {
    pub fn new(x: Decision, f: ObjectiveVector) -> Self {
        Self {
            x,
            f,
            rank: 0,
            crowding: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Nsga2,
    Nsga3,
    Moead,
    Mopso,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Nsga2, Algorithm::Nsga3, Algorithm::Moead, Algorithm::Mopso];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "nsga2",
            Algorithm::Nsga3 => "nsga3",
            Algorithm::Moead => "moead",
            Algorithm::Mopso => "mopso",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Algorithm::Nsga2 => "NSGA-II",
            Algorithm::Nsga3 => "NSGA-III",
            Algorithm::Moead => "MOEA/D",
            Algorithm::Mopso => "MOPSO",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::invalid("algorithm", format!("unknown algorithm `{s}`")))
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// SBX and polynomial mutation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VariationParams {
    pub eta_c: f64,
    pub p_c: f64,
    pub eta_m: f64,
    /// Per-variable mutation probability; `None` means 1 / n.
    pub p_m: Option<f64>,
}

impl Default for VariationParams {
    fn default() -> Self {
        Self {
            eta_c: 20.0,
            p_c: 1.0,
            eta_m: 20.0,
            p_m: None,
        }
    }
}

impl VariationParams {
    pub fn mutation_probability(&self) -> f64 {
        self.p_m.unwrap_or(1.0 / 2.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Nsga3Params {
    /// Das-Dennis divisions; `None` gives one direction per population member.
    pub divisions: Option<usize>,
}

impl Default for Nsga3Params {
    fn default() -> Self {
        Self { divisions: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MoeadParams {
    /// Neighborhood size; `None` means ceil(N / 10).
    pub neighborhood: Option<usize>,
}

impl Default for MoeadParams {
    fn default() -> Self {
        Self { neighborhood: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MopsoParams {
    pub inertia: f64,
    pub c1: f64,
    pub c2: f64,
    pub grid_divisions: usize,
    pub archive_size: usize,
    /// Controls how fast the mutated share of the swarm decays; 0 disables
    /// mutation.
    pub mutation_rate: f64,
}

impl Default for MopsoParams {
    fn default() -> Self {
        Self {
            inertia: 0.4,
            c1: 2.0,
            c2: 2.0,
            grid_divisions: 10,
            archive_size: 100,
            mutation_rate: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub algorithm: Algorithm,
    pub population_size: usize,
    pub max_evaluations: usize,
    pub seed: u64,
    pub variation: VariationParams,
    pub nsga3: Nsga3Params,
    pub moead: MoeadParams,
    pub mopso: MopsoParams,
    /// Evaluate each generation's offspring on the rayon pool. Results are
    /// collected in order, so fronts do not depend on this flag.
    pub parallel_evaluations: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            algorithm: Algorithm::Nsga2,
            population_size: 100,
            max_evaluations: 4000,
            seed: 0,
            variation: VariationParams::default(),
            nsga3: Nsga3Params::default(),
            moead: MoeadParams::default(),
            mopso: MopsoParams::default(),
            parallel_evaluations: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population_size == 0 {
            return Err(Error::invalid("population_size", "must be > 0"));
        }
        if self.max_evaluations < self.population_size {
            return Err(Error::invalid("max_evaluations", "must be >= population_size"));
        }
        let v = &self.variation;
        if !(0.0..=1.0).contains(&v.p_c) {
            return Err(Error::invalid("p_c", format!("{} is outside [0, 1]", v.p_c)));
        }
        if !(0.0..=1.0).contains(&v.mutation_probability()) {
            return Err(Error::invalid("p_m", "must be in [0, 1]"));
        }
        if !(v.eta_c >= 0.0 && v.eta_m >= 0.0) {
            return Err(Error::invalid("eta", "distribution indices must be >= 0"));
        }
        if self.mopso.archive_size == 0 || self.mopso.grid_divisions == 0 {
            return Err(Error::invalid("mopso", "archive_size and grid_divisions must be > 0"));
        }
        if self.nsga3.divisions == Some(0) {
            return Err(Error::invalid("nsga3.divisions", "must be > 0"));
        }
        if self.moead.neighborhood == Some(0) {
            return Err(Error::invalid("moead.neighborhood", "must be > 0"));
        }
        Ok(())
    }
}

/// Mutually nondominated solutions.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Front {
    pub members: Vec<Individual>,
}

impl Front {
    /// Nondominated subset of `candidates` without exact duplicates, in
    /// ascending (f1, f2) order.
    pub fn nondominated(candidates: impl IntoIterator<Item = Individual>) -> Self {
        let mut all: Vec<Individual> = candidates.into_iter().collect();
        all.sort_by(|a, b| {
            a.f.f1
                .total_cmp(&b.f.f1)
                .then(a.f.f2.total_cmp(&b.f.f2))
                .then(a.x[0].total_cmp(&b.x[0]))
                .then(a.x[1].total_cmp(&b.x[1]))
        });
        all.dedup_by(|a, b| a.x == b.x && a.f == b.f);
        // After sorting by f1, a member survives iff its f2 is strictly below
        // every earlier f2, or it ties the previous survivor exactly.
        let mut members: Vec<Individual> = Vec::new();
        let mut best_f2 = f64::INFINITY;
        for ind in all {
            if ind.f.f2 < best_f2 {
                best_f2 = ind.f.f2;
                members.push(ind);
            } else if members.last().is_some_and(|last| last.f == ind.f) {
                members.push(ind);
            }
        }
        Self { members }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn objectives(&self) -> Vec<ObjectiveVector> {
        self.members.iter().map(|m| m.f).collect()
    }

    pub fn is_mutually_nondominated(&self) -> bool {
        self.members
            .iter()
            .all(|a| self.members.iter().all(|b| !dominates(&a.f, &b.f)))
    }
}

/// Objective vectors of the working set (population or archive) after a
/// given number of evaluations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Snapshot {
    pub evaluations: usize,
    pub objectives: Vec<ObjectiveVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub front: Front,
    /// Final population (or archive, for MOPSO).
    pub population: Vec<Individual>,
    pub history: Vec<Snapshot>,
    pub evaluations: usize,
}

pub fn run(problem: &dyn Problem, config: &RunConfig) -> Result<RunResult> {
    config.validate()?;
    let result = match config.algorithm {
        Algorithm::Nsga2 => run_nsga2(problem, config),
        Algorithm::Nsga3 => run_nsga3(problem, config),
        Algorithm::Moead => run_moead(problem, config),
        Algorithm::Mopso => run_mopso(problem, config),
    }?;
    assert_eq!(result.evaluations, config.max_evaluations, "evaluation budget not spent exactly");
    Ok(result)
}

/// Counts evaluations against the run's budget.
pub(crate) struct Evaluator<'a> {
    problem: &'a dyn Problem,
    budget: usize,
    used: usize,
    parallel: bool,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a dyn Problem, config: &RunConfig) -> Self {
        Self {
            problem,
            budget: config.max_evaluations,
            used: 0,
            parallel: config.parallel_evaluations,
        }
    }

    pub fn remaining(&self) -> usize {
        self.budget - self.used
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn bounds(&self) -> Bounds {
        self.problem.bounds()
    }

    pub fn evaluate(&mut self, x: Decision) -> Result<Individual> {
        assert!(self.used < self.budget, "evaluation budget exceeded");
        let b = self.problem.bounds();
        debug_assert!(x.iter().all(|&v| b.contains(v)), "decision {x:?} out of bounds");
        self.used += 1;
        Ok(Individual::new(x, self.problem.evaluate(&x)?))
    }

    /// Evaluates as many of `xs` as the budget allows, in order.
    pub fn evaluate_all(&mut self, xs: &[Decision]) -> Result<Vec<Individual>> {
        let take = xs.len().min(self.remaining());
        let xs = &xs[..take];
        if self.parallel {
            use rayon::prelude::*;
            self.used += take;
            xs.par_iter()
                .map(|x| Ok(Individual::new(*x, self.problem.evaluate(x)?)))
                .collect()
        } else {
            xs.iter().map(|x| self.evaluate(*x)).collect()
        }
    }
}

pub(crate) fn seeded_rng(seed: u64) -> Rand {
    Rand::seed_from_u64(seed)
}

pub(crate) fn random_decision(rng: &mut Rand, b: Bounds) -> Decision {
    [rng.gen_range(b.lower..=b.upper), rng.gen_range(b.lower..=b.upper)]
}

pub(crate) fn snapshot(evaluations: usize, pop: &[Individual]) -> Snapshot {
    Snapshot {
        evaluations,
        objectives: pop.iter().map(|i| i.f).collect(),
    }
}


#[cfg(test)]
mod tests {
    use super::test_problems::*;
    use super::*;
    use std::sync::atomic::{AtomicUsize, Ordering};

    #[test]
    fn dominance_examples() {
        let a = ObjectiveVector::new(0.2, 0.3);
        assert!(dominates(&a, &ObjectiveVector::new(0.3, 0.3)));
        assert!(!dominates(&a, &a));
        let b = ObjectiveVector::new(0.2, 0.5);
        let c = ObjectiveVector::new(0.3, 0.4);
        assert!(!dominates(&b, &c) && !dominates(&c, &b));
    }

    #[test]
    fn front_filter_keeps_only_nondominated() {
        let pts = [(0.1, 0.9), (0.2, 0.5), (0.3, 0.6), (0.5, 0.1), (0.5, 0.1), (0.9, 0.05)];
        let inds = pts
            .iter()
            .enumerate()
            .map(|(k, &(a, b))| Individual::new([k as f64, 0.0], ObjectiveVector::new(a, b)));
        let front = Front::nondominated(inds);
        let got: Vec<_> = front.members.iter().map(|m| (m.f.f1, m.f.f2)).collect();
        assert_eq!(got, vec![(0.1, 0.9), (0.2, 0.5), (0.5, 0.1), (0.5, 0.1), (0.9, 0.05)]);
        assert!(front.is_mutually_nondominated());
    }

    struct Counting(AtomicUsize);

    impl Problem for Counting {
        fn bounds(&self) -> Bounds {
            Bounds::default()
        }

        fn evaluate(&self, x: &Decision) -> Result<ObjectiveVector> {
            self.0.fetch_add(1, Ordering::Relaxed);
            Strict.evaluate(x)
        }
    }

    #[test]
    fn every_algorithm_spends_exact_budget_in_bounds() {
        for algorithm in Algorithm::ALL {
            for (n, evals) in [(20, 20), (20, 130), (12, 100)] {
                let counter = Counting(AtomicUsize::new(0));
                let cfg = RunConfig {
                    algorithm,
                    population_size: n,
                    max_evaluations: evals,
                    seed: 3,
                    ..Default::default()
                };
                let res = run(&counter, &cfg).unwrap();
                assert_eq!(counter.0.load(Ordering::Relaxed), evals, "{algorithm}");
                assert_eq!(res.evaluations, evals);
                assert!(res.front.is_mutually_nondominated());
                assert!(!res.history.is_empty());
                assert!(res.history.windows(2).all(|w| w[0].evaluations < w[1].evaluations));
                assert_eq!(res.history.last().unwrap().evaluations, evals);
            }
        }
    }

    #[test]
    fn runs_are_seed_deterministic() {
        for algorithm in Algorithm::ALL {
            let cfg = RunConfig {
                algorithm,
                population_size: 16,
                max_evaluations: 200,
                seed: 11,
                ..Default::default()
            };
            let a = run(&Convex, &cfg).unwrap();
            let b = run(&Convex, &cfg).unwrap();
            let bits = |r: &RunResult| -> Vec<u64> {
                r.front
                    .members
                    .iter()
                    .flat_map(|m| [m.x[0], m.x[1], m.f.f1, m.f.f2])
                    .map(f64::to_bits)
                    .collect()
            };
            assert_eq!(bits(&a), bits(&b), "{algorithm}");
            let par = run(
                &Convex,
                &RunConfig {
                    parallel_evaluations: true,
                    ..cfg
                },
            )
            .unwrap();
            assert_eq!(bits(&a), bits(&par), "{algorithm} parallel");
            let other = run(&Convex, &RunConfig { seed: 12, ..cfg }).unwrap();
            assert_ne!(bits(&a), bits(&other), "{algorithm} ignores its seed");
        }
    }

    #[test]
    fn front_members_match_their_decisions() {
        for algorithm in Algorithm::ALL {
            let cfg = RunConfig {
                algorithm,
                population_size: 10,
                max_evaluations: 60,
                seed: 5,
                ..Default::default()
            };
            let res = run(&Convex, &cfg).unwrap();
            for m in &res.front.members {
                assert_eq!(Convex.evaluate(&m.x).unwrap(), m.f);
            }
        }
    }

    #[test]
    fn algorithms_approach_known_front() {
        // Front of `Convex`: x2 = 0, f2 = (1 - sqrt(f1))^2.
        for algorithm in Algorithm::ALL {
            let cfg = RunConfig {
                algorithm,
                population_size: 40,
                max_evaluations: 4000,
                seed: 1,
                ..Default::default()
            };
            let res = run(&Convex, &cfg).unwrap();
            let worst = res
                .front
                .members
                .iter()
                .map(|m| m.f.f2 - (1.0 - m.f.f1.sqrt()).powi(2))
                .fold(0.0f64, f64::max);
            assert!(worst < 0.02, "{algorithm}: gap {worst}");
            assert!(res.front.len() >= 5, "{algorithm}: {} members", res.front.len());
        }
    }

    #[test]
    fn invalid_configs_rejected() {
        let bad = [
            RunConfig {
                population_size: 0,
                ..Default::default()
            },
            RunConfig {
                max_evaluations: 10,
                ..Default::default()
            },
            RunConfig {
                variation: VariationParams {
                    p_c: 1.5,
                    ..Default::default()
                },
                ..Default::default()
            },
        ];
        for cfg in bad {
            assert!(run(&Convex, &cfg).is_err());
        }
    }

    #[test]
    fn algorithm_names_parse() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        assert_eq!("NSGA2".parse::<Algorithm>().unwrap(), Algorithm::Nsga2);
        assert!("spea2".parse::<Algorithm>().is_err());
    }
}
