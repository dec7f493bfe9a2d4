//! Fixed-step RK4 integration of the policy-modulated model and the two
//! objectives computed from its trajectory.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{economy_load, pandemic_derivatives, CompartmentState, ModelParams, PandemicState};
use crate::policy::{effective_params_with, Policy, PolicySpec};

pub const DEFAULT_T_MAX: f64 = 300.0;
pub const DEFAULT_DT: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Scenario {
    pub initial: CompartmentState,
    pub params: ModelParams,
    pub policies: Vec<PolicySpec>,
    pub t_max: f64,
    pub dt: f64,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            initial: CompartmentState {
                s: 0.98,
                e: 0.01,
                i: 0.01,
                ..CompartmentState::fully_susceptible()
            },
            params: ModelParams::default(),
            policies: Vec::new(),
            t_max: DEFAULT_T_MAX,
            dt: DEFAULT_DT,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.initial.validate()?;
        self.params.validate()?;
        if !(self.t_max.is_finite() && self.t_max > 0.0) {
            return Err(Error::invalid("t_max", format!("{} must be > 0", self.t_max)));
        }
        if !(self.dt.is_finite() && self.dt > 0.0 && self.dt <= self.t_max) {
            return Err(Error::invalid("dt", format!("{} must be in (0, t_max]", self.dt)));
        }
        for p in &self.policies {
            p.validate()?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<CompartmentState>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, &CompartmentState)> {
        self.times.iter().copied().zip(self.states.iter())
    }
}

/// Peak active cases and the negated GDP minimum; both minimized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveVector {
    pub f1: f64,
    pub f2: f64,
}

impl ObjectiveVector {
    pub const fn new(f1: f64, f2: f64) -> Self {
        Self { f1, f2 }
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.f1, self.f2]
    }
}

/// Running extrema over the stored time grid.
#[derive(Debug, Clone, Copy)]
struct Extrema {
    peak_active: f64,
    gdp_min: f64,
}

impl Extrema {
    fn new() -> Self {
        Self {
            peak_active: f64::NEG_INFINITY,
            gdp_min: f64::INFINITY,
        }
    }

    fn observe(&mut self, st: &CompartmentState) {
        self.peak_active = self.peak_active.max(st.active_cases());
        self.gdp_min = self.gdp_min.min(st.gdp);
    }

    fn objectives(&self) -> ObjectiveVector {
        // `0.0 - x` rather than `-x` keeps a zero minimum as +0.
        ObjectiveVector::new(self.peak_active, 0.0 - self.gdp_min)
    }
}

type Vector = [f64; 8];

fn to_vector(st: &CompartmentState) -> Vector {
    [st.s, st.s_q, st.e, st.e_q, st.i, st.i_q, st.r, st.gdp]
}

fn from_vector(v: &Vector) -> CompartmentState {
    CompartmentState {
        s: v[0],
        s_q: v[1],
        e: v[2],
        e_q: v[3],
        i: v[4],
        i_q: v[5],
        r: v[6],
        gdp: v[7],
    }
}

fn axpy(y: &Vector, a: f64, x: &Vector) -> Vector {
    std::array::from_fn(|k| y[k] + a * x[k])
}

/// Borrowed view of everything the right-hand side needs.
struct Dynamics<'a> {
    params: &'a ModelParams,
    policies: &'a [&'a Policy],
}

impl Dynamics<'_> {
    fn params_at(&self, t: f64) -> crate::model::PandemicParams {
        effective_params_with(
            &self.params.pandemic,
            self.policies.iter().map(|p| (p.spec.target, p.influence(t))),
        )
    }

    fn rhs(&self, v: &Vector, p: &crate::model::PandemicParams) -> Vector {
        let pandemic = PandemicState([v[0], v[1], v[2], v[3], v[4], v[5], v[6]]);
        let d = pandemic_derivatives(&pandemic, p);
        let econ = &self.params.economy;
        let load = economy_load(&from_vector(v), econ);
        [d[0], d[1], d[2], d[3], d[4], d[5], d[6], econ.b_g - econ.p_i * load]
    }

    /// Integrates over the time grid, handing every grid state to `visit`.
    fn run(&self, initial: &CompartmentState, t_max: f64, dt: f64, mut visit: impl FnMut(f64, &Vector)) -> Result<()> {
        let grid = TimeGrid::new(t_max, dt);
        let mut v = to_vector(initial);
        let mut t0 = 0.0;
        visit(t0, &v);
        let mut p0 = self.params_at(t0);
        for k in 1..grid.len() {
            let t1 = grid.at(k);
            let h = t1 - t0;
            let mid = t0 + 0.5 * h;
            let p_mid = self.params_at(mid);
            let p1 = self.params_at(t1);

            let k1 = self.rhs(&v, &p0);
            let k2 = self.rhs(&axpy(&v, 0.5 * h, &k1), &p_mid);
            let k3 = self.rhs(&axpy(&v, 0.5 * h, &k2), &p_mid);
            let k4 = self.rhs(&axpy(&v, h, &k3), &p1);
            for j in 0..8 {
                v[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
            }
            for x in &mut v[..7] {
                *x = x.max(0.0);
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite { time: t1 });
            }
            visit(t1, &v);
            t0 = t1;
            p0 = p1;
        }
        Ok(())
    }
}

/// 0, dt, 2dt, ... with a final shortened step landing exactly on t_max.
#[derive(Debug, Clone, Copy)]
struct TimeGrid {
    dt: f64,
    t_max: f64,
    n: usize,
}

impl TimeGrid {
    fn new(t_max: f64, dt: f64) -> Self {
        let full = (t_max / dt * (1.0 - 1e-12)).ceil() as usize;
        Self { dt, t_max, n: full + 1 }
    }

    fn len(&self) -> usize {
        self.n
    }

    fn at(&self, k: usize) -> f64 {
        if k + 1 == self.n {
            self.t_max
        } else {
            k as f64 * self.dt
        }
    }
}

fn build_policies(specs: &[PolicySpec]) -> Result<Vec<Policy>> {
    specs.iter().map(|s| Policy::new(*s)).collect()
}

pub fn integrate(scenario: &Scenario) -> Result<Trajectory> {
    scenario.validate()?;
    let policies = build_policies(&scenario.policies)?;
    let refs: Vec<&Policy> = policies.iter().collect();
    let dynamics = Dynamics {
        params: &scenario.params,
        policies: &refs,
    };
    let grid = TimeGrid::new(scenario.t_max, scenario.dt);
    let mut traj = Trajectory {
        times: Vec::with_capacity(grid.len()),
        states: Vec::with_capacity(grid.len()),
    };
    dynamics.run(&scenario.initial, scenario.t_max, scenario.dt, |t, v| {
        traj.times.push(t);
        traj.states.push(from_vector(v));
    })?;
    Ok(traj)
}

/// Health and economy objectives over the stored grid.
///
/// Panics on an empty trajectory.
pub fn objectives(trajectory: &Trajectory) -> ObjectiveVector {
    assert!(!trajectory.is_empty(), "objectives of an empty trajectory");
    let mut ex = Extrema::new();
    for st in &trajectory.states {
        ex.observe(st);
    }
    ex.objectives()
}

/// Inclusive box bounds shared by both trigger times.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    pub lower: f64,
    pub upper: f64,
}

impl Default for Bounds {
    fn default() -> Self {
        Self {
            lower: 0.0,
            upper: 100.0,
        }
    }
}

impl Bounds {
    pub fn contains(&self, x: f64) -> bool {
        (self.lower..=self.upper).contains(&x)
    }

    pub fn clamp(&self, x: f64) -> f64 {
        x.clamp(self.lower, self.upper)
    }

    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// The bi-objective trigger-time problem: fixed-shape social distancing and
/// lockdown policies whose trigger times are the decision variables.
#[derive(Debug, Clone)]
pub struct TriggerProblem {
    base: Scenario,
    static_policies: Vec<Policy>,
    social_distancing: Policy,
    lockdown: Policy,
    bounds: Bounds,
}

impl TriggerProblem {
    /// `base.policies` stay active in every evaluation alongside the two
    /// triggered policies.
    pub fn new(base: Scenario, social_distancing: PolicySpec, lockdown: PolicySpec, bounds: Bounds) -> Result<Self> {
        base.validate()?;
        if !(bounds.lower.is_finite() && bounds.upper.is_finite() && bounds.lower < bounds.upper) {
            return Err(Error::invalid("bounds", "lower must be < upper"));
        }
        Ok(Self {
            static_policies: build_policies(&base.policies)?,
            social_distancing: Policy::new(social_distancing)?,
            lockdown: Policy::new(lockdown)?,
            base,
            bounds,
        })
    }

    /// The experiment's default model, policy shapes and bounds.
    pub fn standard() -> Self {
        Self::new(
            Scenario::default(),
            PolicySpec::social_distancing(),
            PolicySpec::lockdown(),
            Bounds::default(),
        )
        .expect("default scenario is valid")
    }

    pub fn bounds(&self) -> Bounds {
        self.bounds
    }

    pub fn base(&self) -> &Scenario {
        &self.base
    }

    /// Full scenario for the given triggers, suitable for [`integrate`].
    pub fn scenario(&self, t_sd: f64, t_ld: f64) -> Scenario {
        let mut s = self.base.clone();
        s.policies.push(self.social_distancing.spec.with_trigger(t_sd));
        s.policies.push(self.lockdown.spec.with_trigger(t_ld));
        s
    }

    pub fn evaluate(&self, t_sd: f64, t_ld: f64) -> Result<ObjectiveVector> {
        for v in [t_sd, t_ld] {
            if !self.bounds.contains(v) {
                return Err(Error::Domain {
                    what: "trigger time",
                    value: v,
                    lo: self.bounds.lower,
                    hi: self.bounds.upper,
                });
            }
        }
        let sd = self.social_distancing.retriggered(t_sd);
        let ld = self.lockdown.retriggered(t_ld);
        let mut refs: Vec<&Policy> = self.static_policies.iter().collect();
        refs.push(&sd);
        refs.push(&ld);
        let dynamics = Dynamics {
            params: &self.base.params,
            policies: &refs,
        };
        let mut ex = Extrema::new();
        dynamics.run(&self.base.initial, self.base.t_max, self.base.dt, |_, v| {
            ex.observe(&from_vector(v))
        })?;
        Ok(ex.objectives())
    }
}

pub fn evaluate_triggers(t_sd: f64, t_ld: f64, problem: &TriggerProblem) -> Result<ObjectiveVector> {
    problem.evaluate(t_sd, t_ld)
}
