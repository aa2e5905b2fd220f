//! Boundaries, configurations, threshold profiles and the per-configuration
//! graph functionals (component count, covered length, edge count).
//!
//! Everything here is generic over [`Scalar`], so each predicate exists in an
//! exact-rational flavor (used as the test oracle) and an `f64` flavor (used
//! by the simulators).

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{serde_rational, Rational, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct Boundary<T> {
    length: T,
}

impl<T: Scalar> Boundary<T> {
    pub fn new(length: T) -> Result<Self> {
        if length <= T::zero() {
            return domain(format!("boundary length must be positive, got {length:?}"));
        }
        Ok(Self { length })
    }

    /// Zero-length boundaries only arise from the free-slack transform of a
    /// saturated collision-free configuration.
    fn allowing_zero(length: T) -> Result<Self> {
        if length < T::zero() {
            return domain(format!("boundary length must be nonnegative, got {length:?}"));
        }
        Ok(Self { length })
    }

    pub fn length(&self) -> &T {
        &self.length
    }
}

/// Sorted robot positions on `[0, s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration<T> {
    boundary: Boundary<T>,
    positions: Vec<T>,
}

impl<T: Scalar> Configuration<T> {
    /// Validates that positions are sorted and inside the boundary.
    pub fn new(boundary: Boundary<T>, positions: Vec<T>) -> Result<Self> {
        check_positions(boundary.length(), &positions)?;
        Ok(Self { boundary, positions })
    }

    pub fn from_length(s: T, positions: Vec<T>) -> Result<Self> {
        Self::new(Boundary::new(s)?, positions)
    }

    /// Builds a configuration from unsorted draws.
    pub fn from_unsorted(s: T, mut positions: Vec<T>) -> Result<Self> {
        if positions.iter().any(|p| p.partial_cmp(p).is_none()) {
            return domain("position is not comparable (NaN)");
        }
        positions.sort_by(|a, b| a.partial_cmp(b).expect("checked comparable"));
        Self::from_length(s, positions)
    }

    pub fn boundary(&self) -> &Boundary<T> {
        &self.boundary
    }

    pub fn length(&self) -> &T {
        self.boundary.length()
    }

    pub fn positions(&self) -> &[T] {
        &self.positions
    }

    pub fn robots(&self) -> usize {
        self.positions.len()
    }

    /// The `n + 1` gaps between consecutive positions, with artificial
    /// robots at `0` and `s`.
    pub fn slacks(&self) -> Vec<T> {
        positions_to_slacks(self.length(), &self.positions)
    }
}

fn check_positions<T: Scalar>(s: &T, positions: &[T]) -> Result<()> {
    let mut prev = T::zero();
    for (i, p) in positions.iter().enumerate() {
        if p.partial_cmp(p).is_none() {
            return domain(format!("position {i} is NaN"));
        }
        if *p < T::zero() || p > s {
            return domain(format!("position {i} = {p:?} outside [0, {s:?}]"));
        }
        if *p < prev {
            return domain(format!("positions not sorted at index {i}"));
        }
        prev = p.clone();
    }
    Ok(())
}

pub(crate) fn positions_to_slacks<T: Scalar>(s: &T, positions: &[T]) -> Vec<T> {
    let mut slacks = Vec::with_capacity(positions.len() + 1);
    let mut prev = T::zero();
    for p in positions {
        slacks.push(p.clone() - prev);
        prev = p.clone();
    }
    slacks.push(s.clone() - prev);
    slacks
}

/// Slack vector of a configuration given as raw positions. Errors if the
/// positions are unsorted or leave `[0, s]`.
pub fn slacks_of<T: Scalar>(s: &T, positions: &[T]) -> Result<Vec<T>> {
    check_positions(s, positions)?;
    Ok(positions_to_slacks(s, positions))
}

/// Inverse of [`positions_to_slacks`]: cumulative sums of the first `n` slacks.
pub fn slacks_to_positions<T: Scalar>(slacks: &[T]) -> Vec<T> {
    let mut acc = T::zero();
    let n = slacks.len().saturating_sub(1);
    slacks[..n]
        .iter()
        .map(|g| {
            acc = acc.clone() + g.clone();
            acc.clone()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThresholdProfile<T> {
    Homogeneous(T),
    PerSlack(Vec<T>),
}

impl<T: Scalar> ThresholdProfile<T> {
    pub fn homogeneous(d: T) -> Result<Self> {
        if d <= T::zero() {
            return domain(format!("threshold must be positive, got {d:?}"));
        }
        Ok(Self::Homogeneous(d))
    }

    pub fn per_slack(d: Vec<T>) -> Result<Self> {
        if let Some((i, v)) = d.iter().enumerate().find(|(_, v)| **v <= T::zero()) {
            return domain(format!("threshold {i} must be positive, got {v:?}"));
        }
        Ok(Self::PerSlack(d))
    }

    pub fn threshold(&self, i: usize) -> &T {
        match self {
            Self::Homogeneous(d) => d,
            Self::PerSlack(d) => &d[i],
        }
    }

    /// Checks the profile fits a configuration with `slack_count` slacks.
    pub fn check_len(&self, slack_count: usize) -> Result<()> {
        match self {
            Self::PerSlack(d) if d.len() != slack_count => domain(format!(
                "threshold profile has {} entries but there are {slack_count} slacks",
                d.len()
            )),
            _ => Ok(()),
        }
    }

    /// Expands to one threshold per slack.
    pub fn expand(&self, slack_count: usize) -> Result<Vec<T>> {
        self.check_len(slack_count)?;
        Ok((0..slack_count).map(|i| self.threshold(i).clone()).collect())
    }
}

/// True iff every slack is at most its threshold (closed inequality).
pub fn slacks_connected<T: Scalar>(slacks: &[T], profile: &ThresholdProfile<T>) -> Result<bool> {
    profile.check_len(slacks.len())?;
    Ok(slacks.iter().enumerate().all(|(i, g)| g <= profile.threshold(i)))
}

pub fn is_connected<T: Scalar>(config: &Configuration<T>, profile: &ThresholdProfile<T>) -> Result<bool> {
    slacks_connected(&config.slacks(), profile)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphStats<T> {
    pub connected: bool,
    pub components: usize,
    pub coverage: T,
    pub edges: usize,
}

/// Component count, covered length and robot-robot edge count for a
/// homogeneous threshold `d`.
///
/// Each slack longer than `d` splits off a new component; endpoints take
/// part in connectivity but not in the edge count.
pub fn graph_stats<T: Scalar>(config: &Configuration<T>, d: &T) -> GraphStats<T> {
    let slacks = config.slacks();
    let mut broken = 0usize;
    let mut uncovered = T::zero();
    for g in &slacks {
        if g > d {
            broken += 1;
            uncovered = uncovered + (g.clone() - d.clone());
        }
    }
    GraphStats {
        connected: broken == 0,
        components: 1 + broken,
        coverage: config.length().clone() - uncovered,
        edges: count_edges(config.positions(), d),
    }
}

/// Pairs `i < j` with `x_j - x_i <= d`, by a two-pointer sweep over sorted
/// positions.
pub(crate) fn count_edges<T: Scalar>(positions: &[T], d: &T) -> usize {
    let mut edges = 0usize;
    let mut lo = 0usize;
    for (j, xj) in positions.iter().enumerate() {
        while xj.clone() - positions[lo].clone() > *d {
            lo += 1;
        }
        edges += j - lo;
    }
    edges
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    /// `d <= s/(n+1)`: connectivity impossible (up to measure zero).
    Empty,
    Partial,
    /// `d >= s`: always connected.
    Full,
}

/// Classifies `(s, d, n)`. `Full` is checked first so that `n = 0, d = s`
/// (a single slack equal to `d`) counts as connected.
pub fn d_regime<T: Scalar>(s: &T, d: &T, n: usize) -> Regime {
    if d >= s {
        Regime::Full
    } else if d.clone() * T::from_u64(n as u64 + 1) <= *s {
        Regime::Empty
    } else {
        Regime::Partial
    }
}

/// Robots of diameter `r` occupy `[x_i, x_i + r]`; collision-free means they
/// stay inside the boundary and never overlap.
pub fn is_collision_free<T: Scalar>(config: &Configuration<T>, r: &T) -> bool {
    let x = config.positions();
    let Some(last) = x.last() else {
        return true;
    };
    if x[0] < T::zero() || last.clone() > config.length().clone() - r.clone() {
        return false;
    }
    x.windows(2).all(|w| w[1].clone() - w[0].clone() >= *r)
}

/// Maps a collision-free configuration to point robots on a boundary of
/// length `s - n r` by `x_i -> x_i - (i-1) r`. Inner gaps shrink by `r`; the
/// two end gaps keep their physical free length.
pub fn free_slack_transform<T: Scalar>(config: &Configuration<T>, r: &T) -> Result<Configuration<T>> {
    if *r < T::zero() {
        return domain("robot diameter must be nonnegative");
    }
    if !is_collision_free(config, r) {
        return domain("configuration is not collision-free for this diameter");
    }
    let n = config.robots();
    let reduced = config.length().clone() - r.clone() * T::from_u64(n as u64);
    let positions = config
        .positions()
        .iter()
        .enumerate()
        .map(|(i, x)| x.clone() - r.clone() * T::from_u64(i as u64))
        .collect();
    let boundary = Boundary::allowing_zero(reduced)?;
    Configuration::new_unchecked_len(boundary, positions)
}

/// Inverse of [`free_slack_transform`].
pub fn restore_from_free_slack<T: Scalar>(free: &Configuration<T>, r: &T) -> Result<Configuration<T>> {
    if *r < T::zero() {
        return domain("robot diameter must be nonnegative");
    }
    let n = free.robots();
    let s = free.length().clone() + r.clone() * T::from_u64(n as u64);
    let positions = free
        .positions()
        .iter()
        .enumerate()
        .map(|(i, x)| x.clone() + r.clone() * T::from_u64(i as u64))
        .collect();
    Configuration::new_unchecked_len(Boundary::allowing_zero(s)?, positions)
}

impl<T: Scalar> Configuration<T> {
    fn new_unchecked_len(boundary: Boundary<T>, positions: Vec<T>) -> Result<Self> {
        check_positions(boundary.length(), &positions)?;
        Ok(Self { boundary, positions })
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigurationJson {
    #[serde(with = "serde_rational")]
    s: Rational,
    #[serde(with = "serde_rational::vec")]
    positions: Vec<Rational>,
}

impl Serialize for Configuration<Rational> {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ConfigurationJson {
            s: self.length().clone(),
            positions: self.positions.clone(),
        }
        .serialize(ser)
    }
}

impl<'de> Deserialize<'de> for Configuration<Rational> {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let raw = ConfigurationJson::deserialize(de)?;
        Configuration::from_length(raw.s, raw.positions).map_err(serde::de::Error::custom)
    }
}
