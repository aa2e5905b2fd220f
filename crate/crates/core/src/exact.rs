//! Exact rational closed forms for uniform parents: connectivity
//! probabilities, halfspace/box volumes and graph-functional expectations.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Result};
use crate::geometry::{d_regime, Regime};
use crate::scalar::{binomial, factorial, rational_pow, serde_rational, Rational};

/// Largest dimension for which signed subset sums are enumerated.
pub const MAX_SUBSET_DIM: usize = 24;

fn require_positive(name: &str, v: &Rational) -> Result<()> {
    if !v.is_positive() {
        return domain(format!("{name} must be positive, got {v}"));
    }
    Ok(())
}

fn require_nonnegative(name: &str, v: &Rational) -> Result<()> {
    if v.is_negative() {
        return domain(format!("{name} must be nonnegative, got {v}"));
    }
    Ok(())
}

/// Full-dimensional volume `s^n / n!` of the slack simplex.
pub fn relative_simplex_volume(s: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    Ok(rational_pow(s, n as u64) / Rational::from_integer(factorial(n as u64)))
}

/// Probability that n iid uniform robots on `[0, s]` form a connected
/// network with threshold `d`.
pub fn pcon_uniform(s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    require_positive("d", d)?;
    match d_regime(s, d, n) {
        Regime::Full => return Ok(Rational::one()),
        Regime::Empty => return Ok(Rational::zero()),
        Regime::Partial => {}
    }
    let ratio = d / s;
    let n_min = (s / d).floor().to_integer();
    let mut k = BigInt::one();
    let mut sum = Rational::zero();
    let mut kk = 1u64;
    while k <= n_min {
        let base = Rational::one() - Rational::from_integer(k.clone()) * &ratio;
        let term = Rational::from_integer(binomial(n as u64 + 1, kk)) * rational_pow(&base, n as u64);
        if kk % 2 == 1 {
            sum += term;
        } else {
            sum -= term;
        }
        k += 1;
        kk += 1;
    }
    Ok(Rational::one() - sum)
}

/// The same alternating sum evaluated in `f64`.
pub fn pcon_uniform_f64(s: f64, d: f64, n: usize) -> f64 {
    if d >= s {
        return 1.0;
    }
    if d * (n as f64 + 1.0) <= s {
        return 0.0;
    }
    let n_min = (s / d).floor() as u64;
    let mut sum = 0.0;
    let mut c = 1.0;
    for k in 1..=n_min {
        c *= (n as u64 + 2 - k) as f64 / k as f64;
        let term = c * (1.0 - k as f64 * d / s).powi(n as i32);
        sum += if k % 2 == 1 { term } else { -term };
    }
    1.0 - sum
}

/// Signed histogram of subset sums below `limit`: maps each sum to
/// `Σ (-1)^{|V|}` over subsets `V` with that sum. Subsets whose sum reaches
/// `limit` are pruned (their terms vanish).
fn signed_subset_sums(weights: &[Rational], limit: &Rational) -> BTreeMap<Rational, BigInt> {
    let mut hist = BTreeMap::new();
    hist.insert(Rational::zero(), BigInt::one());
    for w in weights {
        let mut next = hist.clone();
        for (sum, count) in &hist {
            let extended = sum + w;
            if extended < *limit {
                *next.entry(extended).or_insert_with(BigInt::zero) -= count;
            }
        }
        next.retain(|_, c| !c.is_zero());
        hist = next;
    }
    hist
}

/// Connectivity probability for uniform robots with one threshold per
/// slack (`thresholds.len() = n + 1`), by inclusion-exclusion over the
/// slacks that exceed their threshold.
pub fn pcon_per_slack_uniform(s: &Rational, thresholds: &[Rational]) -> Result<Rational> {
    require_positive("s", s)?;
    if thresholds.is_empty() {
        return domain("need one threshold per slack (n + 1 >= 1)");
    }
    for d in thresholds {
        require_positive("threshold", d)?;
    }
    let n = thresholds.len() - 1;
    if n > MAX_SUBSET_DIM {
        return capacity(format!("per-slack inclusion-exclusion limited to n <= {MAX_SUBSET_DIM}, got {n}"));
    }
    let mut total = Rational::zero();
    for (sum, count) in signed_subset_sums(thresholds, s) {
        let base = Rational::one() - sum / s;
        total += Rational::from_integer(count) * rational_pow(&base, n as u64);
    }
    Ok(total)
}

/// Float evaluation of [`pcon_per_slack_uniform`] by direct subset
/// enumeration.
pub fn pcon_per_slack_uniform_f64(s: f64, thresholds: &[f64]) -> Result<f64> {
    let n = thresholds.len().saturating_sub(1);
    if thresholds.is_empty() || n > MAX_SUBSET_DIM {
        return domain("threshold count out of range");
    }
    let mut total = 0.0;
    for mask in 0u64..(1u64 << thresholds.len()) {
        let sum: f64 = (0..thresholds.len()).filter(|i| mask >> i & 1 == 1).map(|i| thresholds[i]).sum();
        if sum < s {
            let term = (1.0 - sum / s).powi(n as i32);
            total += if mask.count_ones() % 2 == 0 { term } else { -term };
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Halfspace {
    #[serde(with = "serde_rational::vec")]
    a: Vec<Rational>,
    #[serde(with = "serde_rational")]
    b: Rational,
}

impl Halfspace {
    /// `{x : a·x <= b}` with positive `a` and `b`.
    pub fn new(a: Vec<Rational>, b: Rational) -> Result<Self> {
        if a.iter().any(|ai| !ai.is_positive()) {
            return domain("halfspace normal must be positive");
        }
        require_positive("b", &b)?;
        Ok(Self { a, b })
    }

    pub fn normal(&self) -> &[Rational] {
        &self.a
    }

    pub fn offset(&self) -> &Rational {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }
}

/// The box `Π [0, c_i]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Hypercuboid {
    #[serde(with = "serde_rational::vec")]
    upper: Vec<Rational>,
}

impl Hypercuboid {
    pub fn new(upper: Vec<Rational>) -> Result<Self> {
        if upper.iter().any(|c| !c.is_positive()) {
            return domain("cuboid bounds must be positive");
        }
        Ok(Self { upper })
    }

    pub fn unit(n: usize) -> Self {
        Self { upper: vec![Rational::one(); n] }
    }

    pub fn upper(&self) -> &[Rational] {
        &self.upper
    }

    pub fn dim(&self) -> usize {
        self.upper.len()
    }

    pub fn volume(&self) -> Rational {
        self.upper.iter().fold(Rational::one(), |acc, c| acc * c)
    }
}

/// Volume of `{x in cuboid : a·x <= b}`:
/// `Σ_v (-1)^{|v|} max(b - Σ_{i in v} a_i c_i, 0)^n / (n! Π a_i)`.
pub fn halfspace_cuboid_volume(hs: &Halfspace, cuboid: &Hypercuboid) -> Result<Rational> {
    let n = hs.dim();
    if cuboid.dim() != n {
        return domain(format!("halfspace has dimension {n}, cuboid {}", cuboid.dim()));
    }
    if n > MAX_SUBSET_DIM {
        return capacity(format!("halfspace volume limited to n <= {MAX_SUBSET_DIM}, got {n}"));
    }
    let scaled: Vec<Rational> = hs.a.iter().zip(&cuboid.upper).map(|(a, c)| a * c).collect();
    let mut total = Rational::zero();
    for (sum, count) in signed_subset_sums(&scaled, &hs.b) {
        total += Rational::from_integer(count) * rational_pow(&(&hs.b - sum), n as u64);
    }
    let norm = hs.a.iter().fold(Rational::from_integer(factorial(n as u64)), |acc, a| acc * a);
    Ok(total / norm)
}

/// `Q(b) = Σ_{v in {0,1}^n} (-1)^{|v|} max(b - a·v, 0)^n`, enumerated vertex
/// by vertex. For positive `a` it equals `n! Π a_i` times the volume of
/// `{a·x <= b}` in the unit cube.
pub fn q_sum(a: &[u64], b: &Rational) -> Result<Rational> {
    let n = a.len();
    if n > MAX_SUBSET_DIM {
        return capacity(format!("q_sum limited to n <= {MAX_SUBSET_DIM}, got {n}"));
    }
    let mut total = Rational::zero();
    for mask in 0u64..(1u64 << n) {
        let dot: u64 = (0..n).filter(|i| mask >> i & 1 == 1).map(|i| a[i]).sum();
        let rest = b - Rational::from_integer(dot.into());
        if rest.is_positive() {
            let term = rational_pow(&rest, n as u64);
            if mask.count_ones() % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
    }
    Ok(total)
}

/// `P(slack > d)` for a single slack of n uniform robots: `(1 - d/s)^n`
/// when `d < s`, else 0.
fn slack_exceeds(s: &Rational, d: &Rational, n: usize) -> Rational {
    if d >= s {
        Rational::zero()
    } else {
        rational_pow(&(Rational::one() - d / s), n as u64)
    }
}

/// `E[components] = 1 + (n+1) (1 - d/s)^n` (zero excess when `d >= s`).
pub fn expected_components_uniform(s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    require_nonnegative("d", d)?;
    Ok(Rational::one() + Rational::from_integer((n as u64 + 1).into()) * slack_exceeds(s, d, n))
}

/// `E[coverage] = s (1 - (1 - d/s)^{n+1})`, or `s` when `d >= s`.
pub fn expected_coverage_uniform(s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    require_nonnegative("d", d)?;
    Ok(s * (Rational::one() - slack_exceeds(s, d, n + 1)))
}

/// `E[edges] = C(n,2) (1 - (1 - d/s)^2)`, or `C(n,2)` when `d >= s`.
pub fn expected_edges_uniform(s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    require_nonnegative("d", d)?;
    let pairs = Rational::from_integer(binomial(n as u64, 2));
    Ok(pairs * (Rational::one() - slack_exceeds(s, d, 2)))
}

/// Thresholds of the free-slack problem for n robots of diameter `r`:
/// `d` for the two end gaps, `d - r` for the inner ones.
pub fn cf_slack_thresholds(d: &Rational, r: &Rational, n: usize) -> Vec<Rational> {
    (0..=n)
        .map(|i| if i == 0 || i == n { d.clone() } else { d - r })
        .collect()
}

/// Connectivity probability for n collision-free robots of diameter `r`,
/// uniform over all collision-free configurations on `[0, s]`.
pub fn pcon_cf_uniform(s: &Rational, d: &Rational, r: &Rational, n: usize) -> Result<Rational> {
    require_positive("s", s)?;
    require_positive("d", d)?;
    require_nonnegative("r", r)?;
    if r.is_zero() {
        return pcon_uniform(s, d, n);
    }
    let free = s - r * Rational::from_integer((n as u64).into());
    if free.is_negative() {
        return domain(format!("{n} robots of diameter {r} do not fit on length {s}"));
    }
    if free.is_zero() {
        // The packed configuration: end gaps 0, inner free gaps 0.
        return Ok(if n <= 1 || d >= r { Rational::one() } else { Rational::zero() });
    }
    if n >= 2 && d <= r {
        return Ok(Rational::zero());
    }
    pcon_per_slack_uniform(&free, &cf_slack_thresholds(d, r, n))
}

/// Per-slack thresholds for robots with individual communication ranges:
/// an inner slack is bridged only if it is within the range of both
/// neighbours (bidirectional links), so it gets the smaller range; each end
/// slack gets the range of its single adjacent robot.
pub fn hetero_slack_thresholds(ranges: &[Rational]) -> Result<Vec<Rational>> {
    if ranges.is_empty() {
        return domain("need at least one robot range");
    }
    if ranges.iter().any(|d| !d.is_positive()) {
        return domain("ranges must be positive");
    }
    let n = ranges.len();
    let mut out = Vec::with_capacity(n + 1);
    out.push(ranges[0].clone());
    for w in ranges.windows(2) {
        out.push(if w[0] <= w[1] { w[0].clone() } else { w[1].clone() });
    }
    out.push(ranges[n - 1].clone());
    Ok(out)
}

/// Largest team for which [`pcon_heterogeneous_uniform`] averages over
/// all orderings.
pub const MAX_HETERO_ROBOTS: usize = 8;

/// Connectivity for robots with individual ranges, each placed uniformly
/// and independently on `[0, s]`. The left-to-right order of the robots is
/// a uniform permutation independent of the slacks, so the result is the
/// mean of [`pcon_per_slack_uniform`] over all orderings of `ranges`.
pub fn pcon_heterogeneous_uniform(s: &Rational, ranges: &[Rational]) -> Result<Rational> {
    require_positive("s", s)?;
    let n = ranges.len();
    if n > MAX_HETERO_ROBOTS {
        return capacity(format!("{n} robots exceed the ordering limit {MAX_HETERO_ROBOTS}"));
    }
    hetero_slack_thresholds(ranges)?;
    let mut order = ranges.to_vec();
    let mut seen: BTreeMap<Vec<Rational>, Rational> = BTreeMap::new();
    let mut total = Rational::zero();
    // Heap's algorithm: each step swaps one pair, visiting all n! orderings.
    let mut counters = vec![0usize; n];
    let mut visit = |order: &[Rational]| -> Result<()> {
        let thresholds = hetero_slack_thresholds(order)?;
        let p = match seen.get(&thresholds) {
            Some(p) => p.clone(),
            None => {
                let p = pcon_per_slack_uniform(s, &thresholds)?;
                seen.insert(thresholds, p.clone());
                p
            }
        };
        total += p;
        Ok(())
    };
    visit(&order)?;
    let mut i = 1;
    while i < n {
        if counters[i] < i {
            let j = if i % 2 == 0 { 0 } else { counters[i] };
            order.swap(j, i);
            visit(&order)?;
            counters[i] += 1;
            i = 1;
        } else {
            counters[i] = 0;
            i += 1;
        }
    }
    Ok(total / Rational::from_integer(factorial(n as u64)))
}
