use rand::seq::SliceRandom;
use rand::Rng;

use super::operators::{polynomial_mutation, sbx_crossover};
use super::sorting::{crowding_distance, fast_nondominated_sort};
use super::{random_decision, seeded_rng, snapshot, Decision, Evaluator, Front, Individual, Problem, Rand, RunConfig, RunResult};
use crate::error::Result;

pub fn run_nsga2(problem: &dyn Problem, config: &RunConfig) -> Result<RunResult> {
    let mut rng = seeded_rng(config.seed);
    let mut eval = Evaluator::new(problem, config);
    let bounds = eval.bounds();
    let n = config.population_size;

    let init: Vec<Decision> = (0..n).map(|_| random_decision(&mut rng, bounds)).collect();
    let mut pop = eval.evaluate_all(&init)?;
    pop = select(pop, n, &mut rng);
    let mut history = vec![snapshot(eval.used(), &pop)];

    while eval.remaining() > 0 {
        let parents: Vec<Decision> = (0..n).map(|_| tournament(&pop, &mut rng).x).collect();
        let children = make_offspring(&parents, config, bounds, &mut rng);
        let offspring = eval.evaluate_all(&children)?;
        pop.extend(offspring);
        pop = select(pop, n, &mut rng);
        history.push(snapshot(eval.used(), &pop));
    }

    Ok(RunResult {
        front: Front::nondominated(pop.iter().copied()),
        population: pop,
        history,
        evaluations: eval.used(),
    })
}

/// Pairs consecutive parents through SBX and mutates every child.
pub(crate) fn make_offspring(parents: &[Decision], config: &RunConfig, bounds: crate::simulator::Bounds, rng: &mut Rand) -> Vec<Decision> {
    let v = &config.variation;
    let p_m = v.mutation_probability();
    let mut children = Vec::with_capacity(parents.len() + 1);
    for pair in parents.chunks(2) {
        let (a, b) = match pair {
            [a, b] => (a, b),
            [a] => (a, a),
            _ => unreachable!(),
        };
        let (c1, c2) = sbx_crossover(a, b, v.eta_c, v.p_c, bounds, rng);
        children.push(polynomial_mutation(&c1, v.eta_m, p_m, bounds, rng));
        children.push(polynomial_mutation(&c2, v.eta_m, p_m, bounds, rng));
    }
    children.truncate(parents.len());
    children
}

/// Binary tournament on rank, then crowding distance, then a coin flip.
fn tournament<'a>(pop: &'a [Individual], rng: &mut Rand) -> &'a Individual {
    let a = &pop[rng.gen_range(0..pop.len())];
    let b = &pop[rng.gen_range(0..pop.len())];
    if a.rank != b.rank {
        return if a.rank < b.rank { a } else { b };
    }
    if a.crowding != b.crowding {
        return if a.crowding > b.crowding { a } else { b };
    }
    if rng.gen::<bool>() {
        a
    } else {
        b
    }
}

/// Elitist truncation to `n`: whole fronts first, then the least crowded
/// members of the split front. Assigns rank and crowding distance.
pub(crate) fn select(pop: Vec<Individual>, n: usize, rng: &mut Rand) -> Vec<Individual> {
    let objs: Vec<_> = pop.iter().map(|i| i.f).collect();
    let mut out = Vec::with_capacity(n);
    for (rank, front) in fast_nondominated_sort(&objs).into_iter().enumerate() {
        let front_objs: Vec<_> = front.iter().map(|&i| objs[i]).collect();
        let dist = crowding_distance(&front_objs);
        let mut members: Vec<Individual> = front
            .iter()
            .zip(dist)
            .map(|(&i, d)| Individual {
                rank,
                crowding: d,
                ..pop[i]
            })
            .collect();
        if out.len() + members.len() > n {
            members.shuffle(rng);
            members.sort_by(|a, b| b.crowding.total_cmp(&a.crowding));
            members.truncate(n - out.len());
        }
        out.extend(members);
        if out.len() == n {
            break;
        }
    }
    out
}
