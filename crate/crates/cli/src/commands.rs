//! Subcommand implementations. Each returns its result so tests can inspect
//! it without going through files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use hedopt::indicators::{combine_reference_front, AlgorithmSamples, IndicatorReport};
use hedopt::moea::{Decision, Individual};
use hedopt::simulator::{integrate, objectives};
use hedopt::{Algorithm, Front, Scenario, TriggerProblem};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::campaign::{self, Campaign, RunManifest, RunStatus};
use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};
use crate::io;
use crate::svg::{Chart, Mark, Series};

#[derive(Debug, Clone, Copy, Default)]
pub struct SimulateArgs {
    pub t_sd: Option<f64>,
    pub t_ld: Option<f64>,
    /// Step size; when it differs from the configured step, the objectives
    /// are also computed at the configured step and compared.
    pub dt: Option<f64>,
    pub plot: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub t_sd: Option<f64>,
    pub t_ld: Option<f64>,
    pub dt: f64,
    pub t_max: f64,
    /// Peak of E + Eq + I + Iq.
    pub f1: f64,
    /// Negated GDP minimum.
    pub f2: f64,
    pub gdp_min: f64,
    pub dt_check: Option<DtCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DtCheck {
    pub reference_dt: f64,
    pub reference_f1: f64,
    pub reference_f2: f64,
    /// Largest absolute objective difference between the two step sizes.
    pub max_deviation: f64,
}

/// Scenario for optional triggers: absent triggers mean the policy is off.
pub fn scenario_for(config: &ExperimentConfig, t_sd: Option<f64>, t_ld: Option<f64>) -> Scenario {
    let mut s = config.base_scenario();
    if let Some(t) = t_sd {
        s.policies.push(config.scenario.social_distancing.with_trigger(t));
    }
    if let Some(t) = t_ld {
        s.policies.push(config.scenario.lockdown.with_trigger(t));
    }
    s
}

pub fn simulate(config: &ExperimentConfig, args: &SimulateArgs, out: &Path) -> Result<SimulationSummary> {
    let mut scenario = scenario_for(config, args.t_sd, args.t_ld);
    let configured_dt = scenario.dt;
    if let Some(dt) = args.dt {
        scenario.dt = dt;
    }
    let trajectory = integrate(&scenario)?;
    let f = objectives(&trajectory);

    let dt_check = match args.dt {
        Some(dt) if dt != configured_dt => {
            let reference = objectives(&integrate(&Scenario {
                dt: configured_dt,
                ..scenario.clone()
            })?);
            Some(DtCheck {
                reference_dt: configured_dt,
                reference_f1: reference.f1,
                reference_f2: reference.f2,
                max_deviation: (f.f1 - reference.f1).abs().max((f.f2 - reference.f2).abs()),
            })
        }
        _ => None,
    };

    let summary = SimulationSummary {
        t_sd: args.t_sd,
        t_ld: args.t_ld,
        dt: scenario.dt,
        t_max: scenario.t_max,
        f1: f.f1,
        f2: f.f2,
        gdp_min: -f.f2,
        dt_check,
    };
    io::write_trajectory(&out.join("trajectory.csv"), &trajectory)?;
    io::write_json(&out.join("objectives.json"), &summary)?;
    if args.plot {
        let rows = io::read_trajectory(&out.join("trajectory.csv"))?;
        write_svg(&out.join("trajectory.svg"), &trajectory_chart(&rows))?;
    }
    Ok(summary)
}

/// Runs the campaign and writes its files; returns the manifest.
pub fn optimize(config: &ExperimentConfig, out: &Path, workers: usize, plot: bool) -> Result<(Campaign, RunManifest)> {
    let started = campaign::unix_now();
    let c = campaign::run_campaign(config, workers)?;
    let manifest = campaign::write_campaign(&c, out, started)?;
    if plot {
        let combined: Vec<(String, Front)> = c.algorithms().iter().map(|&a| (a.label().to_string(), c.combined(a))).collect();
        write_svg(&out.join("front.svg"), &front_chart(&combined))?;
        write_svg(&out.join("set.svg"), &set_chart(&combined))?;
        let bounds = config.indicators.reference_point;
        let hv: Vec<Series> = c
            .algorithms()
            .iter()
            .map(|&a| {
                let pts = c.mean_hv_history(a, bounds).into_iter().map(|(e, v)| (e as f64, v)).collect();
                Series::new(a.label(), pts)
            })
            .collect();
        write_svg(&out.join("hv_history.svg"), &hv_chart(hv))?;
    }
    Ok((c, manifest))
}

/// Per-algorithm run fronts found under a campaign directory: from its
/// manifest when present, otherwise from `<alg>/run_<k>/front.csv`.
pub fn discover_fronts(dir: &Path) -> Result<Vec<(String, Vec<PathBuf>)>> {
    let manifest_path = dir.join("manifest.json");
    let mut groups: Vec<(String, Vec<PathBuf>)> = Vec::new();
    if manifest_path.exists() {
        let manifest: RunManifest = io::read_json(&manifest_path)?;
        for r in manifest.runs.iter().filter(|r| r.status == RunStatus::Ok) {
            let label = r.algorithm.label().to_string();
            let path = dir.join(r.front.as_ref().expect("successful runs record a front"));
            match groups.iter_mut().find(|(l, _)| *l == label) {
                Some((_, v)) => v.push(path),
                None => groups.push((label, vec![path])),
            }
        }
        return Ok(groups);
    }
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::io(dir, e))?;
    let mut subdirs: Vec<PathBuf> = entries.filter_map(|e| e.ok().map(|e| e.path())).filter(|p| p.is_dir()).collect();
    subdirs.sort();
    for sub in subdirs {
        let mut runs: Vec<(usize, PathBuf)> = std::fs::read_dir(&sub)
            .map_err(|e| CliError::io(&sub, e))?
            .filter_map(|e| e.ok())
            .filter_map(|e| {
                let name = e.file_name().to_string_lossy().to_string();
                name.strip_prefix("run_")?.parse().ok().map(|k| (k, e.path().join("front.csv")))
            })
            .collect();
        if runs.is_empty() {
            continue;
        }
        runs.sort();
        let name = sub.file_name().unwrap_or_default().to_string_lossy().to_string();
        let label = name.parse::<Algorithm>().map(|a| a.label().to_string()).unwrap_or(name);
        groups.push((label, runs.into_iter().map(|(_, p)| p).collect()));
    }
    Ok(groups)
}

/// Indicator report for a campaign directory. The reference front is, in
/// order of preference: `reference`, the configured file, the directory's
/// `reference_front.csv`, or the union of all discovered fronts.
pub fn indicators(config: &ExperimentConfig, dir: &Path, reference: Option<&Path>) -> Result<IndicatorReport> {
    let groups = discover_fronts(dir)?;
    if groups.is_empty() {
        return Err(CliError::Runtime(format!("{}: no run fronts found", dir.display())));
    }
    let missing: Vec<String> = groups
        .iter()
        .flat_map(|(_, paths)| paths.iter())
        .filter(|p| !p.is_file())
        .map(|p| p.display().to_string())
        .collect();
    if !missing.is_empty() {
        return Err(CliError::Runtime(format!("missing front files: {}", missing.join(", "))));
    }
    let mut fronts: Vec<(String, Vec<Front>)> = Vec::new();
    for (label, paths) in &groups {
        let f = paths.iter().map(|p| io::read_front(p)).collect::<Result<Vec<_>>>()?;
        fronts.push((label.clone(), f));
    }

    let default_reference = dir.join("reference_front.csv");
    let reference_path = reference
        .map(Path::to_path_buf)
        .or_else(|| config.indicators.reference_front.clone())
        .or_else(|| default_reference.is_file().then_some(default_reference));
    let reference = match reference_path {
        Some(p) => combine_reference_front([&io::read_front(&p)?]),
        None => combine_reference_front(fronts.iter().flat_map(|(_, f)| f.iter())),
    };
    if reference.is_empty() {
        return Err(CliError::Runtime("reference front is empty".into()));
    }

    let r = config.indicators.reference_point;
    let samples = fronts
        .iter()
        .map(|(label, f)| AlgorithmSamples::from_fronts(label.clone(), f, &reference, r))
        .collect::<hedopt::Result<Vec<_>>>()?;
    let report = IndicatorReport::build(&samples, r, config.indicators.alpha);
    io::write_json(&dir.join("indicators.json"), &report)?;
    std::fs::write(dir.join("indicators.txt"), report.table()).map_err(|e| CliError::io(&dir.join("indicators.txt"), e))?;
    Ok(report)
}

/// Evenly spaced trigger values covering the bounds, both ends included.
pub fn grid_axis(lower: f64, upper: f64, resolution: usize) -> Vec<f64> {
    (0..resolution)
        .map(|k| {
            if k + 1 == resolution {
                upper
            } else {
                lower + (upper - lower) * k as f64 / (resolution - 1) as f64
            }
        })
        .collect()
}

/// Nondominated set of all `resolution`² trigger pairs on the grid.
pub fn grid_front(problem: &TriggerProblem, resolution: usize, workers: usize) -> Result<Front> {
    if resolution < 2 {
        return Err(CliError::Validation(format!("invalid resolution: {resolution} must be >= 2")));
    }
    let b = problem.bounds();
    let axis = grid_axis(b.lower, b.upper, resolution);
    let pairs: Vec<Decision> = axis.iter().flat_map(|&sd| axis.iter().map(move |&ld| [sd, ld])).collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Runtime(format!("cannot start worker pool: {e}")))?;
    let evaluated: Vec<Individual> = pool.install(|| {
        pairs
            .par_iter()
            .map(|x| problem.evaluate(x[0], x[1]).map(|f| Individual::new(*x, f)))
            .collect::<hedopt::Result<Vec<_>>>()
    })?;
    Ok(Front::nondominated(evaluated))
}

pub fn front_grid(config: &ExperimentConfig, resolution: usize, out: &Path, workers: usize) -> Result<Front> {
    let front = grid_front(&config.problem()?, resolution, workers)?;
    io::write_front(&out.join("grid_front.csv"), &front)?;
    Ok(front)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    Front,
    Set,
    Trajectory,
    Hv,
}

impl std::str::FromStr for PlotKind {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "front" => Ok(Self::Front),
            "set" => Ok(Self::Set),
            "trajectory" => Ok(Self::Trajectory),
            "hv" => Ok(Self::Hv),
            other => Err(CliError::Validation(format!(
                "unknown plot kind {other:?} (expected front, set, trajectory or hv)"
            ))),
        }
    }
}

fn sniff(path: &Path) -> Result<Vec<PlotKind>> {
    let header = io::read_header(path)?;
    match header.as_str() {
        "t_sd,t_ld,f1,f2" => Ok(vec![PlotKind::Front, PlotKind::Set]),
        "evaluations,hv" => Ok(vec![PlotKind::Hv]),
        h if h == io::TRAJECTORY_HEADER.join(",") => Ok(vec![PlotKind::Trajectory]),
        _ => Err(CliError::parse(path, format!("row 0: unrecognized header {header:?}"))),
    }
}

fn series_label(path: &Path) -> String {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy().to_string();
    match path.parent().and_then(|p| p.file_name()) {
        Some(parent) => {
            let parent = parent.to_string_lossy().to_string();
            let parent = parent.parse::<Algorithm>().map(|a| a.label().to_string()).unwrap_or(parent);
            format!("{parent}/{stem}")
        }
        None => stem,
    }
}

/// Renders SVG charts for CSV inputs. All inputs of one kind share a chart.
/// Returns the written files.
pub fn plot(inputs: &[PathBuf], kind: Option<PlotKind>, out: Option<&Path>) -> Result<Vec<PathBuf>> {
    if inputs.is_empty() {
        return Err(CliError::Validation("plot needs at least one input CSV".into()));
    }
    let kinds = match kind {
        Some(k) => vec![k],
        None => sniff(&inputs[0])?,
    };
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => inputs[0].parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    let stem = inputs[0].file_stem().unwrap_or_default().to_string_lossy().to_string();
    let mut written = Vec::new();
    for kind in kinds {
        let chart = match kind {
            PlotKind::Front | PlotKind::Set => {
                let fronts = inputs
                    .iter()
                    .map(|p| Ok((series_label(p), io::read_front(p)?)))
                    .collect::<Result<Vec<_>>>()?;
                if kind == PlotKind::Front {
                    front_chart(&fronts)
                } else {
                    set_chart(&fronts)
                }
            }
            PlotKind::Trajectory => {
                if inputs.len() > 1 {
                    return Err(CliError::Validation("trajectory plots take one input".into()));
                }
                trajectory_chart(&io::read_trajectory(&inputs[0])?)
            }
            PlotKind::Hv => {
                let series = inputs
                    .iter()
                    .map(|p| {
                        let rows: Vec<io::HvRow> = io::read_rows(p)?;
                        Ok(Series::new(series_label(p), rows.iter().map(|r| (r.evaluations as f64, r.hv)).collect()))
                    })
                    .collect::<Result<Vec<_>>>()?;
                hv_chart(series)
            }
        };
        let suffix = match kind {
            PlotKind::Front => "front",
            PlotKind::Set => "set",
            PlotKind::Trajectory => "trajectory",
            PlotKind::Hv => "hv",
        };
        let path = dir.join(format!("{stem}_{suffix}.svg"));
        write_svg(&path, &chart)?;
        written.push(path);
    }
    Ok(written)
}

fn write_svg(path: &Path, chart: &Chart) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        io::create_dir(parent)?;
    }
    std::fs::write(path, chart.render()).map_err(|e| CliError::io(path, e))
}

pub fn front_chart(fronts: &[(String, Front)]) -> Chart {
    Chart {
        title: "Pareto front".into(),
        x_label: "f1: peak active cases (E + Eq + I + Iq)".into(),
        y_label: "f2: GDP loss (negated GDP minimum)".into(),
        mark: Mark::Points,
        series: fronts
            .iter()
            .map(|(l, f)| Series::new(l.clone(), f.members.iter().map(|m| (m.f.f1, m.f.f2)).collect()))
            .collect(),
    }
}

pub fn set_chart(fronts: &[(String, Front)]) -> Chart {
    Chart {
        title: "Pareto set".into(),
        x_label: "social distancing trigger t_sd (days)".into(),
        y_label: "lockdown trigger t_ld (days)".into(),
        mark: Mark::Points,
        series: fronts
            .iter()
            .map(|(l, f)| Series::new(l.clone(), f.members.iter().map(|m| (m.x[0], m.x[1])).collect()))
            .collect(),
    }
}

pub fn trajectory_chart(rows: &[[f64; 9]]) -> Chart {
    Chart {
        title: "Compartments and GDP".into(),
        x_label: "time (days)".into(),
        y_label: "population fraction / GDP index".into(),
        mark: Mark::Line,
        series: (1..9)
            .map(|c| Series::new(io::TRAJECTORY_HEADER[c], rows.iter().map(|r| (r[0], r[c])).collect()))
            .collect(),
    }
}

pub fn hv_chart(series: Vec<Series>) -> Chart {
    Chart {
        title: "Mean hypervolume".into(),
        x_label: "evaluations".into(),
        y_label: "HV".into(),
        mark: Mark::Line,
        series,
    }
}

/// One line per algorithm: successful runs and combined front size.
pub fn campaign_summary(c: &Campaign) -> String {
    let mut counts: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    for r in &c.runs {
        let idx = c.algorithms().iter().position(|&a| a == r.algorithm).unwrap_or(0);
        let e = counts.entry(idx).or_default();
        if r.result.is_ok() {
            e.0 += 1;
        } else {
            e.1 += 1;
        }
    }
    let mut s = String::new();
    for (idx, (ok, failed)) in counts {
        let a = c.algorithms()[idx];
        s.push_str(&format!(
            "{:<9} runs ok {ok:>3}, failed {failed:>3}, combined front {} points\n",
            a.label(),
            c.combined(a).len()
        ));
    }
    s
}
