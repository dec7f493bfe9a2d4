//! NSGA-III: nondominated sorting with reference-direction niching.

use rand::Rng;

use super::nsga2::make_offspring;
use super::sorting::fast_nondominated_sort;
use super::{random_decision, seeded_rng, snapshot, Decision, Evaluator, Front, Individual, Problem, Rand, RunConfig, RunResult};
use crate::error::Result;

/// Das-Dennis directions on the 2-simplex with `divisions` steps.
pub fn das_dennis(divisions: usize) -> Vec<[f64; 2]> {
    (0..=divisions)
        .map(|i| {
            let w = i as f64 / divisions as f64;
            [w, 1.0 - w]
        })
        .collect()
}

pub fn run_nsga3(problem: &dyn Problem, config: &RunConfig) -> Result<RunResult> {
    let mut rng = seeded_rng(config.seed);
    let mut eval = Evaluator::new(problem, config);
    let bounds = eval.bounds();
    let n = config.population_size;
    let refs = das_dennis(config.nsga3.divisions.unwrap_or(n.saturating_sub(1).max(1)));

    let init: Vec<Decision> = (0..n).map(|_| random_decision(&mut rng, bounds)).collect();
    let mut pop = eval.evaluate_all(&init)?;
    pop = select(pop, n, &refs, &mut rng);
    let mut history = vec![snapshot(eval.used(), &pop)];

    while eval.remaining() > 0 {
        let parents: Vec<Decision> = (0..n).map(|_| pop[rng.gen_range(0..pop.len())].x).collect();
        let children = make_offspring(&parents, config, bounds, &mut rng);
        pop.extend(eval.evaluate_all(&children)?);
        pop = select(pop, n, &refs, &mut rng);
        history.push(snapshot(eval.used(), &pop));
    }

    Ok(RunResult {
        front: Front::nondominated(pop.iter().copied()),
        population: pop,
        history,
        evaluations: eval.used(),
    })
}

/// Keeps `n` members: whole fronts, then niche-preserving picks from the
/// split front.
pub(crate) fn select(pop: Vec<Individual>, n: usize, refs: &[[f64; 2]], rng: &mut Rand) -> Vec<Individual> {
    let objs: Vec<[f64; 2]> = pop.iter().map(|i| i.f.as_array()).collect();
    let fronts = fast_nondominated_sort(&pop.iter().map(|i| i.f).collect::<Vec<_>>());

    let mut chosen: Vec<usize> = Vec::with_capacity(n);
    let mut last: Vec<usize> = Vec::new();
    for front in &fronts {
        if chosen.len() + front.len() <= n {
            chosen.extend(front);
            if chosen.len() == n {
                break;
            }
        } else {
            last = front.clone();
            break;
        }
    }

    if !last.is_empty() {
        let candidates: Vec<usize> = chosen.iter().chain(&last).copied().collect();
        let normalized = normalize(&candidates.iter().map(|&i| objs[i]).collect::<Vec<_>>());
        let assoc: Vec<(usize, f64)> = normalized.iter().map(|p| associate(p, refs)).collect();
        let (in_chosen, in_last) = assoc.split_at(chosen.len());

        let mut niche = vec![0usize; refs.len()];
        for &(r, _) in in_chosen {
            niche[r] += 1;
        }
        let mut pending: Vec<Option<(usize, f64)>> = in_last.iter().map(|&a| Some(a)).collect();
        let mut excluded = vec![false; refs.len()];
        let mut need = n - chosen.len();

        while need > 0 {
            let min_count = (0..refs.len())
                .filter(|&r| !excluded[r])
                .map(|r| niche[r])
                .min()
                .expect("some reference direction still has candidates");
            let tied: Vec<usize> = (0..refs.len()).filter(|&r| !excluded[r] && niche[r] == min_count).collect();
            let r = tied[rng.gen_range(0..tied.len())];
            let members: Vec<usize> = pending
                .iter()
                .enumerate()
                .filter_map(|(k, a)| a.filter(|&(rr, _)| rr == r).map(|(_, d)| (k, d)))
                .map(|(k, _)| k)
                .collect();
            if members.is_empty() {
                excluded[r] = true;
                continue;
            }
            let pick = if niche[r] == 0 {
                let best = members
                    .iter()
                    .map(|&k| pending[k].unwrap().1)
                    .fold(f64::INFINITY, f64::min);
                let closest: Vec<usize> = members.into_iter().filter(|&k| pending[k].unwrap().1 == best).collect();
                closest[rng.gen_range(0..closest.len())]
            } else {
                members[rng.gen_range(0..members.len())]
            };
            pending[pick] = None;
            chosen.push(last[pick]);
            niche[r] += 1;
            need -= 1;
        }
    }

    // Rank is informational for NSGA-III (mating is uniform).
    let mut rank_of = vec![0usize; pop.len()];
    for (rank, front) in fronts.iter().enumerate() {
        for &i in front {
            rank_of[i] = rank;
        }
    }
    chosen
        .into_iter()
        .map(|i| Individual {
            rank: rank_of[i],
            ..pop[i]
        })
        .collect()
}

/// Translates by the ideal point and scales by hyperplane intercepts from
/// the two extreme points, falling back to the per-objective maximum when
/// the hyperplane is degenerate.
fn normalize(objs: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let ideal = [0, 1].map(|m| objs.iter().map(|o| o[m]).fold(f64::INFINITY, f64::min));
    let translated: Vec<[f64; 2]> = objs.iter().map(|o| [o[0] - ideal[0], o[1] - ideal[1]]).collect();

    let extreme = |axis: usize| -> [f64; 2] {
        let mut w = [1e-6; 2];
        w[axis] = 1.0;
        *translated
            .iter()
            .min_by(|a, b| asf(a, &w).total_cmp(&asf(b, &w)))
            .expect("non-empty")
    };
    let (e1, e2) = (extreme(0), extreme(1));
    // Solve [e1; e2] a = 1; intercepts are 1 / a.
    let det = e1[0] * e2[1] - e1[1] * e2[0];
    let mut intercepts = [f64::NAN; 2];
    if det.abs() > 1e-12 {
        let a0 = (e2[1] - e1[1]) / det;
        let a1 = (e1[0] - e2[0]) / det;
        intercepts = [1.0 / a0, 1.0 / a1];
    }
    let worst = [0, 1].map(|m| translated.iter().map(|o| o[m]).fold(0.0, f64::max));
    for m in 0..2 {
        if !(intercepts[m].is_finite() && intercepts[m] > 1e-6) {
            intercepts[m] = worst[m];
        }
        if intercepts[m] <= 1e-12 {
            intercepts[m] = 1.0;
        }
    }
    translated
        .iter()
        .map(|o| [o[0] / intercepts[0], o[1] / intercepts[1]])
        .collect()
}

fn asf(f: &[f64; 2], w: &[f64; 2]) -> f64 {
    (f[0] / w[0]).max(f[1] / w[1])
}

/// Nearest reference line and the perpendicular distance to it.
fn associate(p: &[f64; 2], refs: &[[f64; 2]]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (r, w) in refs.iter().enumerate() {
        let norm2 = w[0] * w[0] + w[1] * w[1];
        let t = (p[0] * w[0] + p[1] * w[1]) / norm2;
        let d = ((p[0] - t * w[0]).powi(2) + (p[1] - t * w[1]).powi(2)).sqrt();
        if d < best.1 {
            best = (r, d);
        }
    }
    best
}
