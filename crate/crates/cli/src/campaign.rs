//! Optimization campaigns: algorithms x independent runs, seed derivation,
//! aggregation and the on-disk layout.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use hedopt::indicators::{combine_reference_front, hv_history, ReferencePoint};
use hedopt::moea::{self, Snapshot};
use hedopt::{Algorithm, Front, TriggerProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of run `run` of the algorithm at `algorithm_index`.
pub fn derive_seed(base: u64, algorithm_index: usize, run: usize) -> u64 {
    let a = splitmix64(base ^ splitmix64(algorithm_index as u64));
    splitmix64(a ^ splitmix64(!(run as u64)))
}

/// SHA-256 of the canonical JSON form of the configuration.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let json = serde_json::to_vec(config).expect("config serializes");
    Sha256::digest(&json).iter().map(|b| format!("{b:02x}")).collect()
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub seconds: f64,
    pub result: std::result::Result<RunData, String>,
}

#[derive(Debug, Clone)]
pub struct RunData {
    pub front: Front,
    pub history: Vec<Snapshot>,
    pub evaluations: usize,
}

#[derive(Debug, Clone)]
pub struct Campaign {
    pub config: ExperimentConfig,
    /// Grouped by algorithm in configuration order, runs ascending.
    pub runs: Vec<RunOutcome>,
}

impl Campaign {
    pub fn algorithms(&self) -> &[Algorithm] {
        &self.config.optimization.algorithms
    }

    /// Fronts of the successful runs of one algorithm.
    pub fn fronts(&self, algorithm: Algorithm) -> Vec<Front> {
        self.runs
            .iter()
            .filter(|r| r.algorithm == algorithm)
            .filter_map(|r| r.result.as_ref().ok().map(|d| d.front.clone()))
            .collect()
    }

    pub fn combined(&self, algorithm: Algorithm) -> Front {
        combine_reference_front(&self.fronts(algorithm))
    }

    /// Nondominated union over every algorithm and run.
    pub fn reference_front(&self) -> Front {
        let all: Vec<Front> = self.algorithms().iter().flat_map(|&a| self.fronts(a)).collect();
        combine_reference_front(&all)
    }

    /// Mean normalized HV per snapshot evaluation count over successful runs.
    pub fn mean_hv_history(&self, algorithm: Algorithm, bounds: ReferencePoint) -> Vec<(usize, f64)> {
        let mut acc: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for r in self.runs.iter().filter(|r| r.algorithm == algorithm) {
            if let Ok(d) = &r.result {
                for (evals, hv) in hv_history(&d.history, bounds) {
                    let e = acc.entry(evals).or_insert((0.0, 0));
                    e.0 += hv;
                    e.1 += 1;
                }
            }
        }
        acc.into_iter().map(|(k, (sum, n))| (k, sum / n as f64)).collect()
    }
}

/// Runs every (algorithm, run) pair on a pool of `workers` threads. Results
/// are ordered independently of scheduling, so outputs do not depend on the
/// worker count.
pub fn run_campaign(config: &ExperimentConfig, workers: usize) -> Result<Campaign> {
    config.validate()?;
    let problem = config.problem()?;
    let tasks: Vec<(usize, Algorithm, usize)> = config
        .optimization
        .algorithms
        .iter()
        .enumerate()
        .flat_map(|(ai, &a)| (0..config.optimization.runs).map(move |k| (ai, a, k)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let runs = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(ai, algorithm, run)| execute(config, &problem, ai, algorithm, run))
            .collect()
    });
    Ok(Campaign {
        config: config.clone(),
        runs,
    })
}

fn execute(config: &ExperimentConfig, problem: &TriggerProblem, ai: usize, algorithm: Algorithm, run: usize) -> RunOutcome {
    let seed = derive_seed(config.optimization.seed, ai, run);
    let start = Instant::now();
    let result = moea::run(problem, &config.run_config(algorithm, seed))
        .map(|r| RunData {
            front: r.front,
            history: r.history,
            evaluations: r.evaluations,
        })
        .map_err(|e| e.to_string());
    if let Err(e) = &result {
        log::error!("{} run {run} failed: {e}", algorithm.label());
    }
    RunOutcome {
        algorithm,
        run,
        seed,
        seconds: start.elapsed().as_secs_f64(),
        result,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub algorithm: Algorithm,
    pub run: usize,
    pub seed: u64,
    pub status: RunStatus,
    pub error: Option<String>,
    pub evaluations: usize,
    pub seconds: f64,
    /// Paths relative to the output directory; absent for failed runs.
    pub front: Option<PathBuf>,
    pub hv_history: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmFiles {
    pub algorithm: Algorithm,
    pub combined: PathBuf,
    pub mean_hv_history: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub started_unix: u64,
    pub finished_unix: u64,
    pub config: ExperimentConfig,
    pub runs: Vec<RunRecord>,
    pub algorithms: Vec<AlgorithmFiles>,
    pub reference_front: PathBuf,
}

impl RunManifest {
    /// Every file path recorded in the manifest, relative to the output directory.
    pub fn files(&self) -> Vec<PathBuf> {
        let mut out: Vec<PathBuf> = Vec::new();
        for r in &self.runs {
            out.extend(r.front.iter().cloned());
            out.extend(r.hv_history.iter().cloned());
        }
        for a in &self.algorithms {
            out.push(a.combined.clone());
            out.push(a.mean_hv_history.clone());
        }
        out.push(self.reference_front.clone());
        out
    }
}

pub fn unix_now() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map_or(0, |d| d.as_secs())
}

pub fn run_dir(algorithm: Algorithm, run: usize) -> PathBuf {
    PathBuf::from(algorithm.name()).join(format!("run_{run}"))
}

/// Writes the campaign layout under `out` and returns the manifest (also
/// written as `manifest.json`).
pub fn write_campaign(campaign: &Campaign, out: &Path, started_unix: u64) -> Result<RunManifest> {
    let config = &campaign.config;
    let bounds = config.indicators.reference_point;
    io::create_dir(out)?;
    let mut runs = Vec::with_capacity(campaign.runs.len());
    for r in &campaign.runs {
        let dir = run_dir(r.algorithm, r.run);
        let record = match &r.result {
            Ok(d) => {
                let front = dir.join("front.csv");
                let history = dir.join("hv_history.csv");
                io::write_front(&out.join(&front), &d.front)?;
                io::write_hv_history(&out.join(&history), &hv_history(&d.history, bounds))?;
                RunRecord {
                    algorithm: r.algorithm,
                    run: r.run,
                    seed: r.seed,
                    status: RunStatus::Ok,
                    error: None,
                    evaluations: d.evaluations,
                    seconds: r.seconds,
                    front: Some(front),
                    hv_history: Some(history),
                }
            }
            Err(e) => RunRecord {
                algorithm: r.algorithm,
                run: r.run,
                seed: r.seed,
                status: RunStatus::Failed,
                error: Some(e.clone()),
                evaluations: 0,
                seconds: r.seconds,
                front: None,
                hv_history: None,
            },
        };
        runs.push(record);
    }

    let mut algorithms = Vec::new();
    for &a in campaign.algorithms() {
        let combined = PathBuf::from(a.name()).join("combined.csv");
        let mean = PathBuf::from(a.name()).join("hv_history_mean.csv");
        io::write_front(&out.join(&combined), &campaign.combined(a))?;
        io::write_hv_history(&out.join(&mean), &campaign.mean_hv_history(a, bounds))?;
        algorithms.push(AlgorithmFiles {
            algorithm: a,
            combined,
            mean_hv_history: mean,
        });
    }
    let reference_front = PathBuf::from("reference_front.csv");
    io::write_front(&out.join(&reference_front), &campaign.reference_front())?;

    let manifest = RunManifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: config_hash(config),
        base_seed: config.optimization.seed,
        started_unix,
        finished_unix: unix_now(),
        config: config.clone(),
        runs,
        algorithms,
        reference_front,
    };
    io::write_json(&out.join("manifest.json"), &manifest)?;
    Ok(manifest)
}
