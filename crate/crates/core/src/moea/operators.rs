//! Simulated binary crossover and polynomial mutation.

use rand::Rng;

use super::Decision;
use crate::simulator::Bounds;

/// SBX on each variable, children clamped to `bounds`.
///
/// With probability `1 - p_c` the parents are returned unchanged. Otherwise
/// each variable is spread around the parents' midpoint with a random sign,
/// and left as-is (per variable) with probability 1/2.
pub fn sbx_crossover<R: Rng + ?Sized>(
    p1: &Decision,
    p2: &Decision,
    eta_c: f64,
    p_c: f64,
    bounds: Bounds,
    rng: &mut R,
) -> (Decision, Decision) {
    let mut c1 = *p1;
    let mut c2 = *p2;
    if rng.gen::<f64>() >= p_c {
        return (c1, c2);
    }
    for k in 0..p1.len() {
        let mu: f64 = rng.gen();
        let mut beta = if mu <= 0.5 {
            (2.0 * mu).powf(1.0 / (eta_c + 1.0))
        } else {
            (2.0 - 2.0 * mu).powf(-1.0 / (eta_c + 1.0))
        };
        if rng.gen::<bool>() {
            beta = -beta;
        }
        if rng.gen::<f64>() > 0.5 {
            beta = 1.0;
        }
        let mid = 0.5 * (p1[k] + p2[k]);
        let half = 0.5 * (p1[k] - p2[k]);
        c1[k] = bounds.clamp(mid + beta * half);
        c2[k] = bounds.clamp(mid - beta * half);
    }
    (c1, c2)
}

/// Bounded polynomial mutation applied to each variable with probability `p_m`.
pub fn polynomial_mutation<R: Rng + ?Sized>(
    x: &Decision,
    eta_m: f64,
    p_m: f64,
    bounds: Bounds,
    rng: &mut R,
) -> Decision {
    let mut out = *x;
    let width = bounds.width();
    let exp = eta_m + 1.0;
    for v in out.iter_mut() {
        if rng.gen::<f64>() >= p_m {
            continue;
        }
        let mu: f64 = rng.gen();
        let delta = if mu <= 0.5 {
            let d1 = (*v - bounds.lower) / width;
            (2.0 * mu + (1.0 - 2.0 * mu) * (1.0 - d1).powf(exp)).powf(1.0 / exp) - 1.0
        } else {
            let d2 = (bounds.upper - *v) / width;
            1.0 - (2.0 * (1.0 - mu) + 2.0 * (mu - 0.5) * (1.0 - d2).powf(exp)).powf(1.0 / exp)
        };
        *v = bounds.clamp(*v + delta * width);
    }
    out
}
