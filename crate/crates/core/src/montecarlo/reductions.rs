//! Instance constructions that relate piecewise-uniform connectivity to
//! independent non-identical parents and to halfspace volumes. They are
//! checked by simulation rather than assumed.

use num_traits::{One, Signed, Zero};

use super::{sample_inid_config, Estimate, MonteCarlo};
use crate::error::{domain, Result};
use crate::geometry::{is_connected, Configuration, ThresholdProfile};
use crate::parents::{InidFamily, ParentDistribution};
use crate::scalar::Rational;

fn int(v: usize) -> Rational {
    Rational::from_integer(v.into())
}

/// Piecewise-uniform parent with density `p_i` on `[i-1, i]`,
/// `i = 1..=k`; the `p_i` must sum to one.
pub fn unit_piece_parent(densities: &[Rational]) -> Result<ParentDistribution> {
    let breakpoints = (0..=densities.len()).map(int).collect();
    ParentDistribution::piecewise_uniform(breakpoints, densities.to_vec())
}

/// From a piecewise-uniform instance on `[0, n+1]` with unit pieces of
/// density `p_1..p_{n+1}`, builds n independent parents on `[0, n+2]`:
/// robot i has density `p_i` on `[i-1, i]` and `1 - p_i` on `[n+1, n+2]`.
pub fn inid_from_pwu(densities: &[Rational]) -> Result<InidFamily> {
    if densities.len() < 2 {
        return domain("need at least two pieces (one robot)");
    }
    if densities.iter().any(|p| p.is_negative() || *p > Rational::one()) {
        return domain("piece densities must lie in [0, 1]");
    }
    let n = densities.len() - 1;
    let parents = (1..=n)
        .map(|i| {
            let mut breakpoints = vec![Rational::zero()];
            let mut pieces = vec![];
            if i > 1 {
                breakpoints.push(int(i - 1));
                pieces.push(Rational::zero());
            }
            breakpoints.extend([int(i), int(n + 1), int(n + 2)]);
            pieces.extend([densities[i - 1].clone(), Rational::zero(), Rational::one() - &densities[i - 1]]);
            ParentDistribution::piecewise_uniform(breakpoints, pieces)
        })
        .collect::<Result<Vec<_>>>()?;
    InidFamily::new(int(n + 2), parents)
}

/// Connectivity of the robots that land in `[0, window]`, judged on that
/// window alone; robots beyond it are ignored.
pub fn estimate_pcon_windowed(
    family: &InidFamily,
    window: f64,
    profile: &ThresholdProfile<f64>,
    mc: &MonteCarlo,
) -> Result<Estimate> {
    mc.run_scalar(|rng| {
        let config = sample_inid_config(family, rng)?;
        let kept: Vec<f64> = config.positions().iter().copied().filter(|x| *x <= window).collect();
        let restricted = Configuration::from_length(window, kept)?;
        let profile = match profile {
            ThresholdProfile::Homogeneous(_) => profile.clone(),
            ThresholdProfile::PerSlack(_) => return domain("windowed connectivity needs a homogeneous threshold"),
        };
        Ok(if is_connected(&restricted, &profile)? { 1.0 } else { 0.0 })
    })
}

/// Connectivity instance built from a box `Π [0, l_i]` (`i = 1..=n+1`) and
/// a budget `b`: n robots, boundary `s = b / L`, threshold 1, and parent
/// density `l_i / L` on `[i-1, i]`, where `L = Σ l_i`. The parent must fit
/// on the boundary, i.e. `b / L >= n + 1`.
pub fn pwu_from_halfspace(lengths: &[Rational], b: &Rational) -> Result<(ParentDistribution, Rational, Rational)> {
    if lengths.len() < 2 || lengths.iter().any(|l| !l.is_positive()) {
        return domain("need at least two positive box lengths");
    }
    let total: Rational = lengths.iter().sum();
    let densities: Vec<Rational> = lengths.iter().map(|l| l / &total).collect();
    let s = b / &total;
    if s < int(lengths.len()) {
        return domain(format!("boundary {s} is shorter than the parent support {}", lengths.len()));
    }
    let parent = unit_piece_parent(&densities)?;
    Ok((parent, s, Rational::one()))
}
