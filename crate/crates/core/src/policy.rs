//! Control policies as time-limited additive offsets on one model parameter.
//!
//! A policy's influence over its lifetime follows a degree-5 Bézier curve
//! whose control polygon encodes buildup, peak and fade phases:
//!
//! ```text
//! (0,0) (b,0) (b,1) (b+p,1) (b+p,0) (b+p+f,0)
//! ```
//!
//! The curve is sampled densely in its parameter, rescaled so that its
//! extreme value equals the policy amplitude, and then read back as a
//! piecewise-linear function of relative time.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{PandemicParams, ParamId};

/// Number of uniform parameter samples per curve. Odd, so that the
/// symmetric peak at u = 1/2 is sampled exactly.
pub const CURVE_SAMPLES: usize = 2049;

pub type Point = (f64, f64);

/// Shape and timing of one policy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySpec {
    pub target: ParamId,
    pub amplitude: f64,
    #[serde(default)]
    pub trigger_time: f64,
    pub buildup: f64,
    pub peak: f64,
    pub fade: f64,
}

impl PolicySpec {
    /// Social distancing with the experiment's fixed shape: contact rate
    /// lowered by up to 5.
    pub fn social_distancing() -> Self {
        Self {
            target: ParamId::CR,
            amplitude: -5.0,
            trigger_time: 0.0,
            buildup: 5.0,
            peak: 40.0,
            fade: 400.0,
        }
    }

    /// Lockdown with the experiment's fixed shape: preventive quarantine
    /// rate raised by up to 1.
    pub fn lockdown() -> Self {
        Self {
            target: ParamId::PQr,
            amplitude: 1.0,
            trigger_time: 0.0,
            buildup: 5.0,
            peak: 10.0,
            fade: 40.0,
        }
    }

    pub fn with_trigger(self, trigger_time: f64) -> Self {
        Self {
            trigger_time,
            ..self
        }
    }

    pub fn duration(&self) -> f64 {
        self.buildup + self.peak + self.fade
    }

    pub fn control_points(&self) -> [Point; 6] {
        let (b, p, f) = (self.buildup, self.peak, self.fade);
        [
            (0.0, 0.0),
            (b, 0.0),
            (b, 1.0),
            (b + p, 1.0),
            (b + p, 0.0),
            (b + p + f, 0.0),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let name = self.target.name();
        if !self.amplitude.is_finite() {
            return Err(Error::invalid(format!("{name} policy amplitude"), "must be finite"));
        }
        for (what, v) in [
            ("trigger_time", self.trigger_time),
            ("buildup", self.buildup),
            ("peak", self.peak),
            ("fade", self.fade),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::invalid(
                    format!("{name} policy {what}"),
                    format!("{v} must be finite and >= 0"),
                ));
            }
        }
        if self.duration() <= 0.0 {
            return Err(Error::FlatCurve);
        }
        Ok(())
    }
}

const BINOMIAL_5: [f64; 6] = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0];

/// Degree-5 Bernstein combination of six control points.
pub fn bezier_point(control: &[Point; 6], u: f64) -> Result<Point> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::Domain {
            what: "u",
            value: u,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(bernstein5(control, u))
}

fn bernstein5(control: &[Point; 6], u: f64) -> Point {
    let v = 1.0 - u;
    let mut x = 0.0;
    let mut y = 0.0;
    for (k, &(px, py)) in control.iter().enumerate() {
        let w = BINOMIAL_5[k] * u.powi(k as i32) * v.powi(5 - k as i32);
        x += w * px;
        y += w * py;
    }
    (x, y)
}

/// Scaled influence of a policy as a function of time since its trigger.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceCurve {
    xs: Vec<f64>,
    ys: Vec<f64>,
    scale: f64,
    duration: f64,
    /// For each of `xs.len() - 1` equal-width time buckets, the last sample
    /// whose x lies at or before the bucket start.
    bucket_start: Vec<u32>,
}

impl InfluenceCurve {
    pub fn samples(&self) -> impl Iterator<Item = Point> + '_ {
        self.xs.iter().copied().zip(self.ys.iter().copied())
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    /// Amplitude divided by the highest point of the unscaled curve.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn duration(&self) -> f64 {
        self.duration
    }

    /// Influence at relative time `r` (time since trigger).
    pub fn value_at(&self, r: f64) -> f64 {
        if !(0.0..=self.duration).contains(&r) {
            return 0.0;
        }
        let last = self.xs.len() - 1;
        let width = self.duration / last as f64;
        let b = ((r / width) as usize).min(last - 1);
        let lo = self.bucket_start[b] as usize;
        let hi = if b + 1 < last {
            self.bucket_start[b + 1] as usize + 1
        } else {
            last
        };
        // First segment whose right end reaches r.
        let i = lo + self.xs[lo + 1..=hi].partition_point(|&x| x < r);
        let i = i.min(last - 1);
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        if x1 > x0 {
            let w = (r - x0) / (x1 - x0);
            y0 * (1.0 - w) + y1 * w
        } else {
            y0
        }
    }
}

pub fn build_influence_curve(spec: &PolicySpec) -> Result<InfluenceCurve> {
    spec.validate()?;
    let control = spec.control_points();
    let duration = spec.duration();
    let n = CURVE_SAMPLES;
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for k in 0..n {
        let (x, y) = bernstein5(&control, k as f64 / (n - 1) as f64);
        // Monotone in exact arithmetic; absorb rounding where control
        // x-coordinates coincide.
        let x = xs.last().map_or(x, |&prev: &f64| x.max(prev));
        xs.push(x);
        ys.push(y);
    }
    xs[n - 1] = duration;

    let max_y = ys.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_y <= 0.0 {
        return Err(Error::FlatCurve);
    }
    let scale = spec.amplitude / max_y;
    for y in &mut ys {
        *y *= scale;
    }

    let width = duration / (n - 1) as f64;
    let bucket_start = (0..n - 1)
        .map(|b| {
            let start = b as f64 * width;
            let idx = xs.partition_point(|&x| x <= start).saturating_sub(1);
            idx.min(n - 2) as u32
        })
        .collect();

    Ok(InfluenceCurve {
        xs,
        ys,
        scale,
        duration,
        bucket_start,
    })
}

/// Influence of `curve` at absolute time `t` for a policy triggered at `trigger`.
pub fn influence_at(curve: &InfluenceCurve, t: f64, trigger: f64) -> f64 {
    curve.value_at(t - trigger)
}

/// A policy spec paired with its precomputed influence curve.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy {
    pub spec: PolicySpec,
    pub curve: InfluenceCurve,
}

impl Policy {
    pub fn new(spec: PolicySpec) -> Result<Self> {
        let curve = build_influence_curve(&spec)?;
        Ok(Self { spec, curve })
    }

    /// Same shape, different trigger; reuses the curve.
    pub fn retriggered(&self, trigger_time: f64) -> Self {
        Self {
            spec: self.spec.with_trigger(trigger_time),
            curve: self.curve.clone(),
        }
    }

    pub fn influence(&self, t: f64) -> f64 {
        influence_at(&self.curve, t, self.spec.trigger_time)
    }
}

/// Base parameters plus the summed influence of every active policy at `t`,
/// clamped to each parameter's valid range.
pub fn effective_params(base: &PandemicParams, policies: &[Policy], t: f64) -> PandemicParams {
    effective_params_with(base, policies.iter().map(|p| (p.spec.target, p.influence(t))))
}

pub(crate) fn effective_params_with(
    base: &PandemicParams,
    offsets: impl IntoIterator<Item = (ParamId, f64)>,
) -> PandemicParams {
    let mut out = *base;
    let mut touched = [false; ParamId::ALL.len()];
    for (target, delta) in offsets {
        if delta != 0.0 {
            *out.get_mut(target) += delta;
            touched[target as usize] = true;
        }
    }
    for id in ParamId::ALL {
        if touched[id as usize] {
            let v = out.get_mut(id);
            *v = if id.is_probability() {
                v.clamp(0.0, 1.0)
            } else {
                v.max(0.0)
            };
        }
    }
    out
}
