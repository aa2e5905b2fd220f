use rand::Rng;

use super::{standard_normal, unit_f64};
use crate::error::{domain, Result};
use crate::geometry::{is_connected, slacks_to_positions, Configuration, ThresholdProfile};

/// Burn-in and thinning for [`hit_and_run_connected`]; `None` picks the
/// defaults `1000 n` and `n`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChainSettings {
    pub burn_in: Option<u64>,
    pub thin: Option<u64>,
}

/// Approximately uniform samples of slack vectors from the connected region
/// `{x >= 0, Σ x = s, x_i <= d_i}` by hit-and-run.
///
/// Directions are Gaussian vectors projected onto the sum-zero subspace;
/// the chord is cut by the box `0 <= x_i <= min(d_i, s)` and the next point
/// drawn uniformly on it. The chain starts at `x_i = u_i s / Σ u`, with
/// `u_i = min(d_i, s)`, which is interior exactly when `Σ u > s`. Every
/// emitted vector is the slack vector of a configuration that passes the
/// connectivity test; a step whose rounding breaks that is discarded.
pub fn hit_and_run_connected<R: Rng + ?Sized>(
    s: f64,
    profile: &ThresholdProfile<f64>,
    n: usize,
    settings: ChainSettings,
    count: usize,
    rng: &mut R,
) -> Result<Vec<Vec<f64>>> {
    if !(s > 0.0) {
        return domain("boundary length must be positive");
    }
    let upper: Vec<f64> = profile.expand(n + 1)?.into_iter().map(|d| d.min(s)).collect();
    let reach: f64 = upper.iter().sum();
    if n == 0 {
        if upper[0] < s {
            return domain("connected region is empty");
        }
        return Ok(vec![vec![s]; count]);
    }
    if reach <= s {
        return domain("connected region has empty interior");
    }
    let burn_in = settings.burn_in.unwrap_or(1000 * n as u64);
    let thin = settings.thin.unwrap_or(n as u64).max(1);
    let mut x: Vec<f64> = upper.iter().map(|u| u * s / reach).collect();
    let mut dir = vec![0.0; n + 1];
    let mut step = |x: &mut Vec<f64>, rng: &mut R| {
        dir.iter_mut().for_each(|z| *z = standard_normal(rng));
        let mean = dir.iter().sum::<f64>() / (n + 1) as f64;
        dir.iter_mut().for_each(|z| *z -= mean);
        let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
        for i in 0..=n {
            let z = dir[i];
            if z > 0.0 {
                lo = lo.max(-x[i] / z);
                hi = hi.min((upper[i] - x[i]) / z);
            } else if z < 0.0 {
                lo = lo.max((upper[i] - x[i]) / z);
                hi = hi.min(-x[i] / z);
            }
        }
        if !(lo < hi) {
            return;
        }
        let t = lo + (hi - lo) * unit_f64(rng);
        let mut next: Vec<f64> = x.iter().zip(&dir).map(|(xi, z)| xi + t * z).collect();
        next.iter_mut().zip(&upper).for_each(|(v, u)| *v = v.clamp(0.0, *u));
        let drift = next.iter().sum::<f64>() - s;
        if drift.abs() > 1e-12 * s {
            let fix = drift / (n + 1) as f64;
            next.iter_mut().for_each(|v| *v -= fix);
        }
        if next.iter().zip(&upper).all(|(v, u)| *v >= 0.0 && v <= u) {
            *x = next;
        }
    };
    for _ in 0..burn_in {
        step(&mut x, rng);
    }
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        for _ in 0..thin {
            step(&mut x, rng);
        }
        let mut positions = slacks_to_positions(&x);
        positions.iter_mut().for_each(|p| *p = p.clamp(0.0, s));
        let config = Configuration::from_length(s, positions)?;
        if is_connected(&config, profile)? {
            out.push(config.slacks());
        }
    }
    Ok(out)
}
