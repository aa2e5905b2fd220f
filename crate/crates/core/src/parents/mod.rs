//! Attachment (parent) distributions on `[0, s]`.
//!
//! Every variant offers `f64` pdf/cdf/inverse-cdf for simulation; all but
//! the truncated Gaussian also offer an exact rational pdf and cdf.

mod order_stats;

pub use order_stats::*;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{domain, Result};
use crate::polynomial::RationalPolynomial;
use crate::scalar::{binomial, factorial, rational_pow, serde_rational, Rational, Scalar};

/// Points where a polynomial density is evaluated exactly during the
/// nonnegativity check (`k s / 256`, `k = 0..=256`).
const POLY_SIGN_GRID: u32 = 256;
/// Float subintervals scanned for local minima of a polynomial density.
const POLY_MIN_SCAN: usize = 4096;
/// Absolute stopping width for bisection-based inverse cdfs.
const INVERSE_TOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct ParentDistribution {
    support: Rational,
    support_f: f64,
    shape: Shape,
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Uniform,
    PiecewiseUniform(Pieces),
    Polynomial(PolyDensity),
    Triangular { mode: Rational, mode_f: f64 },
    TruncatedGaussian(Gaussian),
}

#[derive(Debug, Clone, PartialEq)]
struct Pieces {
    breakpoints: Vec<Rational>,
    densities: Vec<Rational>,
    cumulative: Vec<Rational>,
    breakpoints_f: Vec<f64>,
    densities_f: Vec<f64>,
    cumulative_f: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct PolyDensity {
    density: Vec<Rational>,
    cdf: Vec<Rational>,
    density_f: Vec<f64>,
    cdf_f: Vec<f64>,
    beta: Option<(u32, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
struct Gaussian {
    mu: f64,
    sigma: f64,
    lower: f64,
    mass: f64,
}

fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn horner(coeffs: &[f64], t: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * t + c)
}

fn horner_exact(coeffs: &[Rational], t: &Rational) -> Rational {
    coeffs.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
}

fn positive_support(s: &Rational) -> Result<()> {
    if !s.is_positive() {
        return domain(format!("support length must be positive, got {s}"));
    }
    Ok(())
}

impl ParentDistribution {
    pub fn uniform(s: Rational) -> Result<Self> {
        positive_support(&s)?;
        Ok(Self::build(s, Shape::Uniform))
    }

    /// Densities `p_i` on `[L_{i-1}, L_i]`, with `L_0 = 0` and the last
    /// breakpoint the support length. Total mass must be exactly one.
    pub fn piecewise_uniform(breakpoints: Vec<Rational>, densities: Vec<Rational>) -> Result<Self> {
        if breakpoints.len() < 2 || densities.len() + 1 != breakpoints.len() {
            return domain("need k+1 breakpoints for k densities (k >= 1)");
        }
        if !breakpoints[0].is_zero() {
            return domain("first breakpoint must be 0");
        }
        if breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return domain("breakpoints must be strictly increasing");
        }
        if densities.iter().any(|p| p.is_negative()) {
            return domain("densities must be nonnegative");
        }
        let mut cumulative = vec![Rational::zero()];
        for (i, p) in densities.iter().enumerate() {
            let next = cumulative[i].clone() + p * (&breakpoints[i + 1] - &breakpoints[i]);
            cumulative.push(next);
        }
        if !cumulative.last().expect("nonempty").is_one() {
            return domain(format!(
                "piecewise-uniform mass is {}, not 1",
                cumulative.last().expect("nonempty")
            ));
        }
        let s = breakpoints.last().expect("nonempty").clone();
        let to_f = |v: &[Rational]| v.iter().map(Scalar::to_f64).collect::<Vec<_>>();
        let pieces = Pieces {
            breakpoints_f: to_f(&breakpoints),
            densities_f: to_f(&densities),
            cumulative_f: to_f(&cumulative),
            breakpoints,
            densities,
            cumulative,
        };
        Ok(Self::build(s, Shape::PiecewiseUniform(pieces)))
    }

    /// Univariate polynomial density on `[0, s]`. With `normalize` the
    /// polynomial is rescaled to unit mass; otherwise mass must already be
    /// exactly one.
    pub fn polynomial(density: &RationalPolynomial, s: Rational, normalize: bool) -> Result<Self> {
        Self::polynomial_inner(density, s, normalize, None)
    }

    fn polynomial_inner(
        density: &RationalPolynomial,
        s: Rational,
        normalize: bool,
        beta: Option<(u32, u32)>,
    ) -> Result<Self> {
        positive_support(&s)?;
        if density.vars() != 1 {
            return domain("a polynomial density must have exactly one variable");
        }
        let mut coeffs = density.dense_coefficients()?;
        let mass = horner_exact(&density.antiderivative()?.dense_coefficients()?, &s);
        if normalize {
            if !mass.is_positive() {
                return domain("cannot normalize a polynomial with nonpositive mass");
            }
            coeffs.iter_mut().for_each(|c| *c /= &mass);
        } else if !mass.is_one() {
            return domain(format!("polynomial density has mass {mass}, not 1"));
        }
        check_nonnegative(&coeffs, &s)?;
        let cdf = RationalPolynomial::univariate(&coeffs)
            .antiderivative()?
            .dense_coefficients()?;
        let poly = PolyDensity {
            density_f: coeffs.iter().map(Scalar::to_f64).collect(),
            cdf_f: cdf.iter().map(Scalar::to_f64).collect(),
            density: coeffs,
            cdf,
            beta,
        };
        Ok(Self::build(s, Shape::Polynomial(poly)))
    }

    /// Beta(a, b) with integer parameters, rescaled to `[0, s]`.
    pub fn beta_int(a: u32, b: u32, s: Rational) -> Result<Self> {
        let poly = beta_to_polynomial(a, b, &s)?;
        Self::polynomial_inner(&poly, s, false, Some((a, b)))
    }

    pub fn triangular(mode: Rational, s: Rational) -> Result<Self> {
        positive_support(&s)?;
        if mode.is_negative() || mode > s {
            return domain(format!("mode {mode} outside [0, {s}]"));
        }
        let mode_f = mode.to_f64();
        Ok(Self::build(s, Shape::Triangular { mode, mode_f }))
    }

    /// Gaussian `N(mu, sigma^2)` conditioned on `[0, s]`. Float-only.
    pub fn truncated_gaussian(mu: f64, sigma: f64, s: Rational) -> Result<Self> {
        positive_support(&s)?;
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return domain("truncated Gaussian needs finite mu and positive finite sigma");
        }
        let sf = s.to_f64();
        let lower = std_normal_cdf((0.0 - mu) / sigma);
        let mass = std_normal_cdf((sf - mu) / sigma) - lower;
        if !(mass > 0.0) {
            return domain("truncated Gaussian has no mass on the support");
        }
        Ok(Self::build(s, Shape::TruncatedGaussian(Gaussian { mu, sigma, lower, mass })))
    }

    fn build(support: Rational, shape: Shape) -> Self {
        let support_f = support.to_f64();
        Self { support, support_f, shape }
    }

    pub fn support(&self) -> &Rational {
        &self.support
    }

    pub fn support_f64(&self) -> f64 {
        self.support_f
    }

    pub fn family(&self) -> &'static str {
        match &self.shape {
            Shape::Uniform => "uniform",
            Shape::PiecewiseUniform(_) => "pwu",
            Shape::Polynomial(p) if p.beta.is_some() => "beta",
            Shape::Polynomial(_) => "poly",
            Shape::Triangular { .. } => "triangular",
            Shape::TruncatedGaussian(_) => "gaussian",
        }
    }

    /// Whether exact rational pdf/cdf are available.
    pub fn is_exact(&self) -> bool {
        !matches!(self.shape, Shape::TruncatedGaussian(_))
    }

    pub fn is_uniform(&self) -> bool {
        matches!(self.shape, Shape::Uniform)
    }

    /// The density as a polynomial on `[0, s]`, when it is one.
    pub fn as_polynomial(&self) -> Option<RationalPolynomial> {
        match &self.shape {
            Shape::Uniform => Some(RationalPolynomial::univariate(&[Rational::one() / &self.support])),
            Shape::Polynomial(p) => Some(RationalPolynomial::univariate(&p.density)),
            _ => None,
        }
    }

    fn check_point(&self, t: f64) -> Result<()> {
        if !(0.0..=self.support_f).contains(&t) {
            return domain(format!("t = {t} outside support [0, {}]", self.support_f));
        }
        Ok(())
    }

    fn check_point_exact(&self, t: &Rational) -> Result<()> {
        if t.is_negative() || *t > self.support {
            return domain(format!("t = {t} outside support [0, {}]", self.support));
        }
        Ok(())
    }

    pub fn pdf_at(&self, t: f64) -> Result<f64> {
        self.check_point(t)?;
        Ok(self.pdf_unchecked(t))
    }

    pub fn cdf_at(&self, t: f64) -> Result<f64> {
        self.check_point(t)?;
        Ok(self.cdf_unchecked(t))
    }

    pub(crate) fn pdf_unchecked(&self, t: f64) -> f64 {
        let s = self.support_f;
        match &self.shape {
            Shape::Uniform => 1.0 / s,
            Shape::PiecewiseUniform(p) => p.densities_f[p.piece_of(t)],
            Shape::Polynomial(p) => horner(&p.density_f, t).max(0.0),
            Shape::Triangular { mode_f: m, .. } => {
                if t < *m || (t == *m && *m == s) {
                    2.0 * t / (s * m)
                } else {
                    2.0 * (s - t) / (s * (s - m))
                }
            }
            Shape::TruncatedGaussian(g) => {
                let z = (t - g.mu) / g.sigma;
                (-0.5 * z * z).exp() / (g.sigma * (2.0 * std::f64::consts::PI).sqrt() * g.mass)
            }
        }
    }

    /// Cdf extended by 0 below the support and 1 above it.
    pub(crate) fn cdf_unchecked(&self, t: f64) -> f64 {
        let s = self.support_f;
        if t <= 0.0 {
            return 0.0;
        }
        if t >= s {
            return 1.0;
        }
        let v = match &self.shape {
            Shape::Uniform => t / s,
            Shape::PiecewiseUniform(p) => {
                let i = p.piece_of(t);
                p.cumulative_f[i] + p.densities_f[i] * (t - p.breakpoints_f[i])
            }
            Shape::Polynomial(p) => horner(&p.cdf_f, t),
            Shape::Triangular { mode_f: m, .. } => {
                if t <= *m {
                    t * t / (s * m)
                } else {
                    1.0 - (s - t) * (s - t) / (s * (s - m))
                }
            }
            Shape::TruncatedGaussian(g) => (std_normal_cdf((t - g.mu) / g.sigma) - g.lower) / g.mass,
        };
        v.clamp(0.0, 1.0)
    }

    /// Smallest `t` with `cdf(t) >= u`; a cdf plateau maps to its left end.
    pub fn inverse_cdf(&self, u: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&u) {
            return domain(format!("u = {u} outside [0, 1]"));
        }
        Ok(self.inverse_unchecked(u))
    }

    pub(crate) fn inverse_unchecked(&self, u: f64) -> f64 {
        let s = self.support_f;
        if u <= 0.0 {
            return 0.0;
        }
        match &self.shape {
            Shape::Uniform => (u * s).min(s),
            Shape::PiecewiseUniform(p) => {
                for i in 0..p.densities_f.len() {
                    if p.densities_f[i] > 0.0 && p.cumulative_f[i + 1] >= u {
                        let t = p.breakpoints_f[i] + (u - p.cumulative_f[i]) / p.densities_f[i];
                        return t.clamp(p.breakpoints_f[i], p.breakpoints_f[i + 1]);
                    }
                }
                // Rounding left u above the last cumulative value.
                let last = (0..p.densities_f.len())
                    .rev()
                    .find(|i| p.densities_f[*i] > 0.0)
                    .expect("mass one implies a positive piece");
                p.breakpoints_f[last + 1]
            }
            Shape::Triangular { mode_f: m, .. } => {
                if u * s <= *m {
                    (u * s * m).sqrt()
                } else {
                    s - ((1.0 - u) * s * (s - m)).sqrt()
                }
            }
            Shape::Polynomial(_) | Shape::TruncatedGaussian(_) => self.bisect_inverse(u),
        }
    }

    fn bisect_inverse(&self, u: f64) -> f64 {
        let (mut lo, mut hi) = (0.0, self.support_f);
        for _ in 0..200 {
            if hi - lo <= INVERSE_TOL {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if self.cdf_unchecked(mid) >= u {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    /// One inverse-cdf draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u = crate::montecarlo::unit_f64(rng);
        self.inverse_unchecked(u)
    }

    pub fn pdf_exact(&self, t: &Rational) -> Result<Rational> {
        self.check_point_exact(t)?;
        let s = &self.support;
        Ok(match &self.shape {
            Shape::Uniform => Rational::one() / s,
            Shape::PiecewiseUniform(p) => p.densities[p.piece_of_exact(t)].clone(),
            Shape::Polynomial(p) => horner_exact(&p.density, t),
            Shape::Triangular { mode: m, .. } => {
                if t < m || (t == m && m == s) {
                    Rational::from_integer(2.into()) * t / (s * m)
                } else {
                    Rational::from_integer(2.into()) * (s - t) / (s * (s - m))
                }
            }
            Shape::TruncatedGaussian(_) => return domain("truncated Gaussian has no exact pdf"),
        })
    }

    pub fn cdf_exact(&self, t: &Rational) -> Result<Rational> {
        self.check_point_exact(t)?;
        self.cdf_exact_clamped(t)
    }

    /// Exact cdf extended by 0 below and 1 above the support.
    pub(crate) fn cdf_exact_clamped(&self, t: &Rational) -> Result<Rational> {
        let s = &self.support;
        if !t.is_positive() {
            return if self.is_exact() { Ok(Rational::zero()) } else { domain("truncated Gaussian has no exact cdf") };
        }
        if t >= s {
            return if self.is_exact() { Ok(Rational::one()) } else { domain("truncated Gaussian has no exact cdf") };
        }
        Ok(match &self.shape {
            Shape::Uniform => t / s,
            Shape::PiecewiseUniform(p) => {
                let i = p.piece_of_exact(t);
                &p.cumulative[i] + &p.densities[i] * (t - &p.breakpoints[i])
            }
            Shape::Polynomial(p) => horner_exact(&p.cdf, t),
            Shape::Triangular { mode: m, .. } => {
                if t <= m {
                    t * t / (s * m)
                } else {
                    Rational::one() - (s - t) * (s - t) / (s * (s - m))
                }
            }
            Shape::TruncatedGaussian(_) => return domain("truncated Gaussian has no exact cdf"),
        })
    }
}

impl Pieces {
    fn piece_of(&self, t: f64) -> usize {
        let k = self.densities_f.len();
        self.breakpoints_f[1..k].partition_point(|b| *b <= t)
    }

    fn piece_of_exact(&self, t: &Rational) -> usize {
        let k = self.densities.len();
        self.breakpoints[1..k].partition_point(|b| b <= t)
    }
}

/// Nonnegativity on `[0, s]`: exact evaluation on a 257-point grid, then a
/// float search for interior local minima (sign changes of the derivative
/// on a 4096-cell scan, refined by bisection).
fn check_nonnegative(coeffs: &[Rational], s: &Rational) -> Result<()> {
    for k in 0..=POLY_SIGN_GRID {
        let t = s * Rational::new(k.into(), POLY_SIGN_GRID.into());
        let v = horner_exact(coeffs, &t);
        if v.is_negative() {
            return domain(format!("polynomial density is negative at t = {t}"));
        }
    }
    let f: Vec<f64> = coeffs.iter().map(Scalar::to_f64).collect();
    let df: Vec<f64> = f.iter().enumerate().skip(1).map(|(k, c)| k as f64 * c).collect();
    let sf = s.to_f64();
    let scale = f.iter().map(|c| c.abs()).fold(0.0, f64::max).max(1.0);
    let step = sf / POLY_MIN_SCAN as f64;
    for i in 0..POLY_MIN_SCAN {
        let (mut lo, mut hi) = (i as f64 * step, (i + 1) as f64 * step);
        if !(horner(&df, lo) < 0.0 && horner(&df, hi) >= 0.0) {
            continue;
        }
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if horner(&df, mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let t = 0.5 * (lo + hi);
        if horner(&f, t) < -1e-12 * scale {
            return domain(format!("polynomial density is negative near t = {t}"));
        }
    }
    Ok(())
}

/// Exact monomial expansion of the Beta(a, b) density rescaled to `[0, s]`:
/// `x^{a-1} (s-x)^{b-1} / (s^{a+b-1} B(a, b))`.
pub fn beta_to_polynomial(a: u32, b: u32, s: &Rational) -> Result<RationalPolynomial> {
    if a == 0 || b == 0 {
        return domain("Beta parameters must be positive integers");
    }
    positive_support(s)?;
    let (a64, b64) = (a as u64, b as u64);
    // 1 / B(a, b) = (a+b-1)! / ((a-1)! (b-1)!)
    let inv_beta = Rational::new(factorial(a64 + b64 - 1), factorial(a64 - 1) * factorial(b64 - 1));
    let z = inv_beta / rational_pow(s, a64 + b64 - 1);
    let mut coeffs = vec![Rational::zero(); (a + b - 1) as usize];
    for j in 0..b64 {
        let sign = if j % 2 == 0 { Rational::one() } else { -Rational::one() };
        let c = &z * Rational::from_integer(binomial(b64 - 1, j)) * rational_pow(s, b64 - 1 - j) * sign;
        coeffs[(a64 - 1 + j) as usize] += c;
    }
    Ok(RationalPolynomial::univariate(&coeffs))
}

/// JSON form of a parent: `{"type": "pwu", "breakpoints": [...], ...}` with
/// rationals as `"p/q"` strings.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ParentSpec {
    Uniform {
        #[serde(with = "serde_rational")]
        s: Rational,
    },
    Pwu {
        #[serde(with = "serde_rational::vec")]
        breakpoints: Vec<Rational>,
        #[serde(with = "serde_rational::vec")]
        densities: Vec<Rational>,
    },
    Poly {
        #[serde(with = "serde_rational")]
        s: Rational,
        #[serde(with = "serde_rational::vec")]
        coeffs: Vec<Rational>,
        #[serde(default)]
        normalize: bool,
    },
    Beta {
        a: u32,
        b: u32,
        #[serde(with = "serde_rational")]
        s: Rational,
    },
    Triangular {
        #[serde(with = "serde_rational")]
        mode: Rational,
        #[serde(with = "serde_rational")]
        s: Rational,
    },
    Gaussian {
        mu: f64,
        sigma: f64,
        #[serde(with = "serde_rational")]
        s: Rational,
    },
}

impl TryFrom<ParentSpec> for ParentDistribution {
    type Error = crate::error::Error;

    fn try_from(spec: ParentSpec) -> Result<Self> {
        match spec {
            ParentSpec::Uniform { s } => Self::uniform(s),
            ParentSpec::Pwu { breakpoints, densities } => Self::piecewise_uniform(breakpoints, densities),
            ParentSpec::Poly { s, coeffs, normalize } => {
                Self::polynomial(&RationalPolynomial::univariate(&coeffs), s, normalize)
            }
            ParentSpec::Beta { a, b, s } => Self::beta_int(a, b, s),
            ParentSpec::Triangular { mode, s } => Self::triangular(mode, s),
            ParentSpec::Gaussian { mu, sigma, s } => Self::truncated_gaussian(mu, sigma, s),
        }
    }
}

impl From<&ParentDistribution> for ParentSpec {
    fn from(p: &ParentDistribution) -> Self {
        let s = p.support.clone();
        match &p.shape {
            Shape::Uniform => ParentSpec::Uniform { s },
            Shape::PiecewiseUniform(pw) => ParentSpec::Pwu {
                breakpoints: pw.breakpoints.clone(),
                densities: pw.densities.clone(),
            },
            Shape::Polynomial(poly) => match poly.beta {
                Some((a, b)) => ParentSpec::Beta { a, b, s },
                None => ParentSpec::Poly { s, coeffs: poly.density.clone(), normalize: false },
            },
            Shape::Triangular { mode, .. } => ParentSpec::Triangular { mode: mode.clone(), s },
            Shape::TruncatedGaussian(g) => ParentSpec::Gaussian { mu: g.mu, sigma: g.sigma, s },
        }
    }
}

impl Serialize for ParentDistribution {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ParentSpec::from(self).serialize(ser)
    }
}

impl<'de> Deserialize<'de> for ParentDistribution {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        ParentSpec::deserialize(de)?.try_into().map_err(serde::de::Error::custom)
    }
}
