//! MOPSO with an external archive and adaptive-grid leader selection.

use rand::Rng;

use super::{dominates, random_decision, seeded_rng, snapshot, Decision, Evaluator, Front, Individual, MopsoParams, Problem, Rand, RunConfig, RunResult};
use crate::error::Result;

/// Occupied hypercubes over the archive's current objective range.
struct Grid {
    /// (cell id, member indices), ordered by cell id.
    cells: Vec<(usize, Vec<usize>)>,
}

impl Grid {
    fn new(archive: &[Individual], divisions: usize) -> Self {
        let objs: Vec<[f64; 2]> = archive.iter().map(|a| a.f.as_array()).collect();
        let lo = [0, 1].map(|m| objs.iter().map(|o| o[m]).fold(f64::INFINITY, f64::min));
        let hi = [0, 1].map(|m| objs.iter().map(|o| o[m]).fold(f64::NEG_INFINITY, f64::max));
        let coord = |m: usize, v: f64| -> usize {
            let span = hi[m] - lo[m];
            if span > 0.0 {
                (((v - lo[m]) / span * divisions as f64) as usize).min(divisions - 1)
            } else {
                0
            }
        };
        let cell_of: Vec<usize> = objs.iter().map(|o| coord(0, o[0]) * divisions + coord(1, o[1])).collect();
        let mut ids: Vec<usize> = cell_of.clone();
        ids.sort_unstable();
        ids.dedup();
        let cells = ids
            .into_iter()
            .map(|c| (c, (0..cell_of.len()).filter(|&i| cell_of[i] == c).collect()))
            .collect();
        Self { cells }
    }

    /// Roulette over occupied cells with fitness 10 / occupancy, then a
    /// uniform member of the chosen cell.
    fn pick_leader(&self, rng: &mut Rand) -> usize {
        let fitness: Vec<f64> = self.cells.iter().map(|(_, m)| 10.0 / m.len() as f64).collect();
        let total: f64 = fitness.iter().sum();
        let mut spin = rng.gen::<f64>() * total;
        let mut chosen = self.cells.len() - 1;
        for (k, f) in fitness.iter().enumerate() {
            if spin < *f {
                chosen = k;
                break;
            }
            spin -= f;
        }
        let members = &self.cells[chosen].1;
        members[rng.gen_range(0..members.len())]
    }
}

/// Merges `incoming` into the archive, keeping it nondominated and within
/// capacity by deleting from the most crowded cells.
fn update_archive(archive: Vec<Individual>, incoming: &[Individual], params: &MopsoParams, rng: &mut Rand) -> Vec<Individual> {
    let mut members = Front::nondominated(archive.into_iter().chain(incoming.iter().copied())).members;
    while members.len() > params.archive_size {
        let grid = Grid::new(&members, params.grid_divisions);
        let most = grid.cells.iter().map(|(_, m)| m.len()).max().unwrap_or(0);
        let crowded: Vec<&Vec<usize>> = grid.cells.iter().filter(|(_, m)| m.len() == most).map(|(_, m)| m).collect();
        let cell = crowded[rng.gen_range(0..crowded.len())];
        let victim = cell[rng.gen_range(0..cell.len())];
        members.remove(victim);
    }
    members
}

struct Particle {
    x: Decision,
    v: [f64; 2],
    best: Individual,
}

pub fn run_mopso(problem: &dyn Problem, config: &RunConfig) -> Result<RunResult> {
    let mut rng = seeded_rng(config.seed);
    let mut eval = Evaluator::new(problem, config);
    let bounds = eval.bounds();
    let n = config.population_size;
    let params = config.mopso;
    let iterations = (config.max_evaluations - n).div_ceil(n).max(1);

    let init: Vec<Decision> = (0..n).map(|_| random_decision(&mut rng, bounds)).collect();
    let evaluated = eval.evaluate_all(&init)?;
    let mut swarm: Vec<Particle> = evaluated
        .iter()
        .map(|ind| Particle {
            x: ind.x,
            v: [0.0; 2],
            best: *ind,
        })
        .collect();
    let mut archive = update_archive(Vec::new(), &evaluated, &params, &mut rng);
    let mut history = vec![snapshot(eval.used(), &archive)];

    let mut it = 0usize;
    while eval.remaining() > 0 {
        let grid = Grid::new(&archive, params.grid_divisions);
        let mutation_share = if params.mutation_rate > 0.0 {
            (1.0 - it as f64 / iterations as f64).max(0.0).powf(5.0 / params.mutation_rate)
        } else {
            0.0
        };

        let mut proposed = Vec::with_capacity(n);
        let mut velocities = Vec::with_capacity(n);
        for p in &swarm {
            let leader = archive[grid.pick_leader(&mut rng)].x;
            let mut x = p.x;
            let mut v = p.v;
            for k in 0..2 {
                let r1: f64 = rng.gen();
                let r2: f64 = rng.gen();
                v[k] = params.inertia * v[k]
                    + 0.5 * params.c1 * r1 * (p.best.x[k] - x[k])
                    + 0.5 * params.c2 * r2 * (leader[k] - x[k]);
                x[k] += v[k];
                if x[k] < bounds.lower {
                    x[k] = bounds.lower;
                    v[k] = -v[k];
                } else if x[k] > bounds.upper {
                    x[k] = bounds.upper;
                    v[k] = -v[k];
                }
            }
            if mutation_share > 0.0 && rng.gen::<f64>() < mutation_share {
                let k = rng.gen_range(0..2);
                let range = bounds.width() * mutation_share;
                let lo = (x[k] - range).max(bounds.lower);
                let hi = (x[k] + range).min(bounds.upper);
                x[k] = rng.gen_range(lo..=hi);
            }
            proposed.push(x);
            velocities.push(v);
        }

        let evaluated = eval.evaluate_all(&proposed)?;
        for ((p, ind), v) in swarm.iter_mut().zip(&evaluated).zip(velocities) {
            p.x = ind.x;
            p.v = v;
            if dominates(&ind.f, &p.best.f) {
                p.best = *ind;
            } else if !dominates(&p.best.f, &ind.f) && rng.gen::<bool>() {
                p.best = *ind;
            }
        }
        archive = update_archive(archive, &evaluated, &params, &mut rng);
        history.push(snapshot(eval.used(), &archive));
        it += 1;
    }

    Ok(RunResult {
        front: Front::nondominated(archive.iter().copied()),
        population: archive,
        history,
        evaluations: eval.used(),
    })
}
