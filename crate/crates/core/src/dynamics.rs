//! Time evolution: sequential attachment until the network connects, a
//! size estimate from the expected longest slack, and the two-state
//! attach/detach population balance.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Result};
use crate::exact::pcon_uniform;
use crate::montecarlo::{Estimate, MonteCarlo};
use crate::parents::ParentDistribution;
use crate::scalar::{Rational, Scalar};

/// Connectivity probabilities `p_0, p_1, ...` indexed by robot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PconSequence {
    probs: Vec<f64>,
}

impl PconSequence {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return domain("sequence is empty");
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return domain("probabilities must lie in [0, 1]");
        }
        if probs.windows(2).any(|w| w[1] < w[0]) {
            return domain("probabilities must be nondecreasing in the robot count");
        }
        Ok(Self { probs })
    }

    /// `p_i` for the uniform parent, `i = 0..len`, evaluated exactly.
    pub fn uniform(s: &Rational, d: &Rational, len: usize) -> Result<Self> {
        let probs = (0..len).map(|i| pcon_uniform(s, d, i).map(|p| p.to_f64())).collect::<Result<_>>()?;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// First robot count with nonzero connectivity probability.
    pub fn n_min(&self) -> Option<usize> {
        self.probs.iter().position(|p| *p > 0.0)
    }
}

/// `τ_0..τ_horizon` with `τ_i = (1 - p_{i-1}) p_i` from `n_min` on and zero
/// before; `τ_0 = p_0`. Not normalized: the product treats the steps as
/// independent, so the terms need not sum to one.
pub fn stopping_pmf_formula(p: &PconSequence, horizon: usize) -> Result<Vec<f64>> {
    if horizon >= p.probs.len() {
        return domain(format!("horizon {horizon} needs p up to index {horizon}, have {}", p.probs.len() - 1));
    }
    let n_min = p.n_min().unwrap_or(usize::MAX);
    Ok((0..=horizon)
        .map(|i| match i {
            _ if i < n_min => 0.0,
            0 => p.probs[0],
            _ => (1.0 - p.probs[i - 1]) * p.probs[i],
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingReport {
    pub pmf: Vec<f64>,
    /// `Σ i τ_i` up to the horizon.
    pub expected: f64,
    /// `Σ τ_i` up to the horizon.
    pub mass: f64,
    pub n_min: Option<usize>,
    /// `1 / p_{n_min}`.
    pub geometric_bound: Option<f64>,
    /// Mean of a geometric count of trials with success `p_{n_min}`,
    /// started at `n_min`: `n_min - 1 + 1 / p_{n_min}`.
    pub geometric_mean: Option<f64>,
    /// Set when `mass < 0.999`, i.e. the horizon cuts off visible mass.
    pub truncated: bool,
}

pub fn expected_stopping_time_formula(p: &PconSequence, horizon: usize) -> Result<StoppingReport> {
    let pmf = stopping_pmf_formula(p, horizon)?;
    let expected = pmf.iter().enumerate().map(|(i, t)| i as f64 * t).sum();
    let mass: f64 = pmf.iter().sum();
    let n_min = p.n_min();
    let first = n_min.map(|k| p.probs[k]);
    Ok(StoppingReport {
        expected,
        mass,
        n_min,
        geometric_bound: first.map(|q| 1.0 / q),
        geometric_mean: n_min.zip(first).map(|(k, q)| k as f64 - 1.0 + 1.0 / q),
        truncated: mass < 0.999,
        pmf,
    })
}

/// Adds one draw of `parent` per step to a growing configuration and
/// returns the first robot count at which it is connected (0 if the bare
/// boundary already is).
pub fn simulate_sequential_attachment<R: Rng + ?Sized>(
    parent: &ParentDistribution,
    s: f64,
    d: f64,
    cap: u64,
    rng: &mut R,
) -> Result<u64> {
    if !(s > 0.0) || !(d >= 0.0) {
        return domain("need s > 0 and d >= 0");
    }
    if parent.support_f64() > s {
        return domain(format!("parent support {} exceeds boundary {s}", parent.support_f64()));
    }
    let mut cuts = vec![0.0, s];
    let mut long = usize::from(s > d);
    let mut robots = 0;
    while long > 0 {
        if robots == cap {
            return capacity(format!("not connected after {cap} robots"));
        }
        let x = parent.sample(rng);
        let at = cuts.partition_point(|c| *c <= x).clamp(1, cuts.len() - 1);
        let (a, b) = (cuts[at - 1], cuts[at]);
        long = long - usize::from(b - a > d) + usize::from(x - a > d) + usize::from(b - x > d);
        cuts.insert(at, x);
        robots += 1;
    }
    Ok(robots)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StoppingTimeEstimate {
    pub mean: Estimate,
    /// `P(τ = i)` for `i = 0..=horizon`.
    pub pmf: Vec<Estimate>,
}

pub fn estimate_stopping_time(
    parent: &ParentDistribution,
    s: f64,
    d: f64,
    horizon: usize,
    cap: u64,
    mc: &MonteCarlo,
) -> Result<StoppingTimeEstimate> {
    let est = mc.run(horizon + 2, |rng, out| {
        let tau = simulate_sequential_attachment(parent, s, d, cap, rng)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        out[0] = tau as f64;
        if let Some(slot) = out.get_mut(tau as usize + 1) {
            *slot = 1.0;
        }
        Ok(())
    })?;
    Ok(StoppingTimeEstimate { mean: est[0], pmf: est[1..].to_vec() })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConnectivitySize {
    /// Robot count `y - 1`.
    pub n: f64,
    /// Root `y >= e` of `ln y / y = d / s`, by bisection.
    pub y: f64,
    /// `exp(-W_{-1}(-d / s))`, the same root in closed form.
    pub lambert_y: f64,
}

/// Robot count at which the expected longest slack, approximated by
/// `s ln(n+1) / (n+1)`, reaches `d`. For `d / s >= 1/e` the curve never
/// exceeds the ratio and the tangency point `y = e` is returned.
pub fn estimate_n_for_connectivity(d_over_s: f64) -> Result<ConnectivitySize> {
    let c = d_over_s;
    if !(c > 0.0 && c < 1.0) {
        return domain("d / s must lie in (0, 1)");
    }
    let e = std::f64::consts::E;
    let g = |y: f64| y.ln() / y - c;
    let y = if c >= 1.0 / e {
        e
    } else {
        let (mut lo, mut hi) = (e, 2.0 * e);
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
        }
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    Ok(ConnectivitySize { n: y - 1.0, y, lambert_y: (-lambert_w_minus1(-c.min(1.0 / e))).exp() })
}

/// Lower real branch of the Lambert W function on `[-1/e, 0)`, by Halley
/// iteration from a branch-point or logarithmic starting guess.
pub fn lambert_w_minus1(x: f64) -> f64 {
    let e = std::f64::consts::E;
    if !(x >= -1.0 / e && x < 0.0) {
        return f64::NAN;
    }
    let q = 2.0 * (1.0 + e * x);
    if q <= 0.0 {
        return -1.0;
    }
    let mut w = if x < -0.25 {
        let p = -q.sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else {
        let l = (-x).ln();
        l - (-l).ln()
    };
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - x;
        let step = f / (ew * (w + 1.0) - (w + 2.0) * f / (2.0 * w + 2.0));
        w -= step;
        if !step.is_finite() || step.abs() <= 1e-15 * w.abs() {
            break;
        }
    }
    w
}

/// Attached and detached population counts with the switching rates
/// `A -> D` (`r_ad`) and `D -> A` (`r_da`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationState<T> {
    pub attached: T,
    pub detached: T,
    pub r_ad: T,
    pub r_da: T,
}

impl<T: Scalar> PopulationState<T> {
    pub fn new(attached: T, detached: T, r_ad: T, r_da: T) -> Result<Self> {
        let zero = T::zero();
        if !(attached >= zero) || !(detached >= zero) {
            return domain("populations must be nonnegative");
        }
        if !(r_ad > zero) || !(r_da > zero) {
            return domain("switching rates must be positive");
        }
        Ok(Self { attached, detached, r_ad, r_da })
    }

    pub fn total(&self) -> T {
        self.attached.clone() + self.detached.clone()
    }
}

/// Fixed point of the balance: `N_A = total r_da / (r_ad + r_da)`.
pub fn equilibrium<T: Scalar>(total: T, r_ad: T, r_da: T) -> Result<PopulationState<T>> {
    if !(total >= T::zero()) {
        return domain("total population must be nonnegative");
    }
    let attached = total.clone() * r_da.clone() / (r_ad.clone() + r_da.clone());
    let detached = total - attached.clone();
    PopulationState::new(attached, detached, r_ad, r_da)
}

/// State at time `t`: the attached count relaxes to equilibrium as
/// `exp(-(r_ad + r_da) t)`; the total is conserved.
pub fn population_trajectory(state: &PopulationState<f64>, t: f64) -> Result<PopulationState<f64>> {
    if !(t >= 0.0) {
        return domain("time must be nonnegative");
    }
    let total = state.total();
    let eq = equilibrium(total, state.r_ad, state.r_da)?;
    let attached = eq.attached + (state.attached - eq.attached) * (-(state.r_ad + state.r_da) * t).exp();
    PopulationState::new(attached, total - attached, state.r_ad, state.r_da)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::RngSpec;
    use crate::scalar::{int, rat};

    #[test]
    fn pmf_examples() {
        let p = PconSequence::new(vec![0.0, 0.0, 0.5, 0.8, 1.0]).unwrap();
        let tau = stopping_pmf_formula(&p, 4).unwrap();
        assert_eq!(tau[..3], [0.0, 0.0, 0.5]);
        assert!((tau[3] - 0.4).abs() < 1e-15);
        assert!((tau[4] - 0.2).abs() < 1e-15);
        let ones = PconSequence::new(vec![0.0, 0.0, 0.0, 1.0, 1.0, 1.0]).unwrap();
        assert_eq!(stopping_pmf_formula(&ones, 5).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let report = expected_stopping_time_formula(&ones, 5).unwrap();
        assert_eq!(report.expected, 3.0);
        assert!(!report.truncated);
        assert!(stopping_pmf_formula(&ones, 6).is_err());
        assert!(PconSequence::new(vec![0.0, 0.6, 0.5]).is_err());
        assert!(PconSequence::new(vec![0.0, 1.5]).is_err());
    }

    #[test]
    fn geometric_reference() {
        let q = 0.3;
        let mut probs = vec![0.0, 0.0];
        probs.extend(std::iter::repeat_n(q, 60));
        let report = expected_stopping_time_formula(&PconSequence::new(probs).unwrap(), 40).unwrap();
        assert_eq!(report.n_min, Some(2));
        assert_eq!(report.geometric_bound, Some(1.0 / q));
        let series: f64 = (0..2000).map(|k| (2 + k) as f64 * (1.0 - q).powi(k) * q).sum();
        assert!((report.geometric_mean.unwrap() - series).abs() < 1e-9);
        let short = expected_stopping_time_formula(&PconSequence::new(vec![0.0, 0.1, 0.2]).unwrap(), 2).unwrap();
        assert!(short.truncated);
    }

    #[test]
    fn uniform_sequence() {
        let p = PconSequence::uniform(&int(1), &rat(3, 5), 4).unwrap();
        assert_eq!(p.n_min(), Some(1));
        assert!((p.probs()[1] - 0.2).abs() < 1e-15);
        let full = PconSequence::uniform(&int(1), &int(1), 3).unwrap();
        assert_eq!(stopping_pmf_formula(&full, 2).unwrap(), vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn sequential_attachment() {
        let parent = ParentDistribution::uniform(int(1)).unwrap();
        let mut rng = RngSpec::new(1, 0).rng();
        assert_eq!(simulate_sequential_attachment(&parent, 1.0, 1.0, 10, &mut rng).unwrap(), 0);
        assert!(simulate_sequential_attachment(&parent, 1.0, 0.01, 5, &mut rng).is_err());
        let mc = MonteCarlo::new(100_000, RngSpec::new(2, 0)).with_workers(2);
        let est = estimate_stopping_time(&parent, 1.0, 0.6, 8, 10_000, &mc).unwrap();
        assert!(est.pmf[0].mean == 0.0);
        assert!(est.pmf[1].within(0.2, 3.0), "{:?}", est.pmf[1]);
        let total: f64 = est.pmf.iter().map(|e| e.mean).sum();
        assert!(total <= 1.0 + 1e-12);
    }

    #[test]
    fn attachment_matches_fresh_configuration_check() {
        use crate::geometry::{is_connected, Configuration, ThresholdProfile};
        let parent = ParentDistribution::uniform(int(2)).unwrap();
        let profile = ThresholdProfile::homogeneous(0.3).unwrap();
        for seed in 0..50 {
            let tau = simulate_sequential_attachment(&parent, 2.0, 0.3, 100_000, &mut RngSpec::new(seed, 0).rng()).unwrap() as usize;
            let mut rng = RngSpec::new(seed, 0).rng();
            let draws: Vec<f64> = (0..tau).map(|_| parent.sample(&mut rng)).collect();
            let connected = |k: usize| is_connected(&Configuration::from_unsorted(2.0, draws[..k].to_vec()).unwrap(), &profile).unwrap();
            assert!(connected(tau));
            assert!(!connected(tau - 1));
        }
    }

    #[test]
    fn connectivity_size() {
        let r = estimate_n_for_connectivity(3f64.ln() / 3.0).unwrap();
        assert!((r.n - 2.0).abs() < 1e-9, "{r:?}");
        let r = estimate_n_for_connectivity(10f64.ln() / 10.0).unwrap();
        assert!((r.n - 9.0).abs() < 1e-9);
        assert!((r.lambert_y - r.y).abs() < 1e-9 * r.y);
        let r = estimate_n_for_connectivity(1.0 / std::f64::consts::E).unwrap();
        assert!((r.n - (std::f64::consts::E - 1.0)).abs() < 1e-12);
        assert!((r.lambert_y - std::f64::consts::E).abs() < 1e-6);
        for c in [1e-6, 1e-3, 0.05, 0.2, 0.3, 0.36] {
            let r = estimate_n_for_connectivity(c).unwrap();
            assert!((r.y.ln() / r.y - c).abs() <= 1e-10);
            assert!(r.y >= std::f64::consts::E);
            assert!((r.lambert_y - r.y).abs() <= 1e-8 * r.y, "{c}: {r:?}");
        }
        for c in [0.0, -0.1, 1.0, f64::NAN] {
            assert!(estimate_n_for_connectivity(c).is_err());
        }
    }

    #[test]
    fn lambert_identity() {
        for x in [-0.3678, -0.3, -0.2, -0.1, -1e-3, -1e-10] {
            let w = lambert_w_minus1(x);
            assert!(w <= -1.0);
            assert!((w * w.exp() - x).abs() <= 1e-14 * x.abs().max(1e-3), "{x}: {w}");
        }
        assert_eq!(lambert_w_minus1(-1.0 / std::f64::consts::E), -1.0);
        assert!(lambert_w_minus1(0.1).is_nan());
    }

    #[test]
    fn populations() {
        let eq = equilibrium(100.0, 1.0, 1.0).unwrap();
        assert_eq!((eq.attached, eq.detached), (50.0, 50.0));
        let eq = equilibrium(100.0, 1.0, 3.0).unwrap();
        assert_eq!((eq.attached, eq.detached), (75.0, 25.0));
        let exact = equilibrium(int(100), int(1), int(3)).unwrap();
        assert_eq!((exact.attached, exact.detached), (int(75), int(25)));
        assert!(equilibrium(-1.0, 1.0, 1.0).is_err());
        assert!(equilibrium(1.0, 0.0, 1.0).is_err());
        let start = PopulationState::new(10.0, 90.0, 1.0, 3.0).unwrap();
        let mut prev = start.attached;
        let mut fit = vec![];
        for k in 0..=40 {
            let t = k as f64 * 0.05;
            let now = population_trajectory(&start, t).unwrap();
            assert!((now.total() - 100.0).abs() <= 1e-12);
            assert!(now.attached >= prev && now.attached <= 75.0);
            prev = now.attached;
            fit.push((t, (75.0 - now.attached).ln()));
        }
        let n = fit.len() as f64;
        let (mt, my) = (fit.iter().map(|p| p.0).sum::<f64>() / n, fit.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = fit.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum::<f64>() / fit.iter().map(|p| (p.0 - mt).powi(2)).sum::<f64>();
        assert!((-slope - 4.0).abs() <= 4e-6, "{slope}");
        assert!(population_trajectory(&start, -1.0).is_err());
    }
}
