use rand::Rng;

use super::{exponential, rejection};
use crate::error::{domain, Result};
use crate::geometry::Configuration;
use crate::parents::{InidFamily, ParentDistribution};
use crate::scalar::Scalar;

/// Attempts allowed per collision-free configuration before giving up.
pub const CF_REJECTION_CAP: u64 = 10_000_000;

fn check_support(parent: &ParentDistribution, s: f64) -> Result<()> {
    if parent.support_f64() > s {
        return domain(format!("parent support {} exceeds boundary {s}", parent.support_f64()));
    }
    Ok(())
}

/// n iid inverse-cdf draws on the boundary `[0, s]`, sorted.
pub fn sample_iid_config<R: Rng + ?Sized>(
    parent: &ParentDistribution,
    s: f64,
    n: usize,
    rng: &mut R,
) -> Result<Configuration<f64>> {
    check_support(parent, s)?;
    let positions = (0..n).map(|_| parent.sample(rng)).collect();
    Configuration::from_unsorted(s, positions)
}

/// One draw per parent of the family, sorted.
pub fn sample_inid_config<R: Rng + ?Sized>(family: &InidFamily, rng: &mut R) -> Result<Configuration<f64>> {
    let positions = family.parents().iter().map(|p| p.sample(rng)).collect();
    Configuration::from_unsorted(family.boundary().to_f64(), positions)
}

/// Slacks of n robots uniform on `[0, s]`: n+1 standard exponentials scaled
/// to sum to `s`. The last slack is the complement of the others.
pub fn sample_uniform_slacks<R: Rng + ?Sized>(s: f64, n: usize, rng: &mut R) -> Vec<f64> {
    let mut slacks: Vec<f64> = (0..=n).map(|_| exponential(rng)).collect();
    let total: f64 = slacks.iter().sum();
    let mut partial = 0.0;
    for x in slacks.iter_mut().take(n) {
        *x = s * *x / total;
        partial += *x;
    }
    slacks[n] = (s - partial).max(0.0);
    slacks
}

/// Collision-free configuration of n robots of diameter `r` (left
/// endpoints in `[0, s - r]`), by rejection from iid draws of `parent`,
/// which must live on `[0, s - r]`.
pub fn sample_cf_config<R: Rng + ?Sized>(
    parent: &ParentDistribution,
    s: f64,
    r: f64,
    n: usize,
    rng: &mut R,
) -> Result<Configuration<f64>> {
    if !(r >= 0.0) {
        return domain("robot diameter must be nonnegative");
    }
    if n == 0 {
        return Configuration::from_length(s, vec![]);
    }
    check_support(parent, s - r)?;
    rejection(
        rng,
        CF_REJECTION_CAP,
        |rng| {
            let mut x: Vec<f64> = (0..n).map(|_| parent.sample(rng)).collect();
            x.sort_by(f64::total_cmp);
            x
        },
        |x| x.windows(2).all(|w| w[1] - w[0] >= r),
    )
    .and_then(|x| Configuration::from_length(s, x))
}
