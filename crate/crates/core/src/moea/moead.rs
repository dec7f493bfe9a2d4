//! MOEA/D with Tchebycheff decomposition.

use rand::seq::index::sample;

use super::operators::{polynomial_mutation, sbx_crossover};
use super::{random_decision, seeded_rng, snapshot, Decision, Evaluator, Front, Problem, RunConfig, RunResult};
use crate::error::Result;
use crate::simulator::ObjectiveVector;

/// `n` evenly spaced weight vectors (w, 1 - w).
pub fn uniform_weights(n: usize) -> Vec<[f64; 2]> {
    if n == 1 {
        return vec![[0.5, 0.5]];
    }
    (0..n)
        .map(|i| {
            let w = i as f64 / (n - 1) as f64;
            [w, 1.0 - w]
        })
        .collect()
}

pub fn tchebycheff(f: &ObjectiveVector, weight: &[f64; 2], ideal: &[f64; 2]) -> f64 {
    let a = f.as_array();
    (weight[0] * (a[0] - ideal[0]).abs()).max(weight[1] * (a[1] - ideal[1]).abs())
}

/// Indices of the `t` weight vectors closest to each weight (self included).
fn neighborhoods(weights: &[[f64; 2]], t: usize) -> Vec<Vec<usize>> {
    weights
        .iter()
        .map(|w| {
            let mut idx: Vec<usize> = (0..weights.len()).collect();
            let d = |j: usize| (weights[j][0] - w[0]).powi(2) + (weights[j][1] - w[1]).powi(2);
            idx.sort_by(|&a, &b| d(a).total_cmp(&d(b)).then(a.cmp(&b)));
            idx.truncate(t);
            idx
        })
        .collect()
}

pub fn run_moead(problem: &dyn Problem, config: &RunConfig) -> Result<RunResult> {
    let mut rng = seeded_rng(config.seed);
    let mut eval = Evaluator::new(problem, config);
    let bounds = eval.bounds();
    let n = config.population_size;
    let weights = uniform_weights(n);
    let t = config.moead.neighborhood.unwrap_or(n.div_ceil(10)).clamp(1, n);
    let hood = neighborhoods(&weights, t);
    let v = &config.variation;
    let p_m = v.mutation_probability();

    let init: Vec<Decision> = (0..n).map(|_| random_decision(&mut rng, bounds)).collect();
    let mut pop = eval.evaluate_all(&init)?;
    let mut ideal = [0, 1].map(|m| pop.iter().map(|i| i.f.as_array()[m]).fold(f64::INFINITY, f64::min));
    let mut history = vec![snapshot(eval.used(), &pop)];

    'outer: loop {
        for i in 0..n {
            if eval.remaining() == 0 {
                break 'outer;
            }
            let (a, b) = if t >= 2 {
                let pick = sample(&mut rng, t, 2);
                (hood[i][pick.index(0)], hood[i][pick.index(1)])
            } else {
                (hood[i][0], hood[i][0])
            };
            let (child, _) = sbx_crossover(&pop[a].x, &pop[b].x, v.eta_c, v.p_c, bounds, &mut rng);
            let child = polynomial_mutation(&child, v.eta_m, p_m, bounds, &mut rng);
            let child = eval.evaluate(child)?;

            let cf = child.f.as_array();
            for m in 0..2 {
                ideal[m] = ideal[m].min(cf[m]);
            }
            for &j in &hood[i] {
                if tchebycheff(&child.f, &weights[j], &ideal) <= tchebycheff(&pop[j].f, &weights[j], &ideal) {
                    pop[j] = child;
                }
            }
            if eval.used() % n == 0 || eval.remaining() == 0 {
                history.push(snapshot(eval.used(), &pop));
            }
        }
    }

    Ok(RunResult {
        front: Front::nondominated(pop.iter().copied()),
        population: pop,
        history,
        evaluations: eval.used(),
    })
}
