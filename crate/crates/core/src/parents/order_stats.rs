use num_traits::{One, Zero};

use super::ParentDistribution;
use crate::error::{domain, Result};
use crate::scalar::{Rational, Scalar};

/// `P(Binomial(n, p) >= k)`.
pub fn binomial_tail<T: Scalar>(p: &T, n: u64, k: u64) -> T {
    let q = T::one() - p.clone();
    let mut coeff = T::one();
    let mut total = T::zero();
    for i in 0..=n {
        if i >= k {
            let term = coeff.clone() * pow(p, i) * pow(&q, n - i);
            total = total + term;
        }
        coeff = coeff * T::from_u64(n - i) / T::from_u64(i + 1);
    }
    total
}

fn pow<T: Scalar>(base: &T, e: u64) -> T {
    (0..e).fold(T::one(), |acc, _| acc * base.clone())
}

/// `P(at least k of the independent events with probabilities ps occur)`,
/// by the O(n^2) convolution over the success count.
pub fn poisson_binomial_tail<T: Scalar>(ps: &[T], k: usize) -> T {
    let mut dist = vec![T::one()];
    for p in ps {
        let q = T::one() - p.clone();
        let mut next = vec![T::zero(); dist.len() + 1];
        for (j, mass) in dist.iter().enumerate() {
            next[j] = next[j].clone() + mass.clone() * q.clone();
            next[j + 1] = next[j + 1].clone() + mass.clone() * p.clone();
        }
        dist = next;
    }
    dist.into_iter().skip(k).fold(T::zero(), |acc, m| acc + m)
}

fn check_rank(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return domain(format!("order-statistic rank {k} outside 1..={n}"));
    }
    Ok(())
}

/// Cdf of the k-th smallest of n iid draws from `parent`.
pub fn order_statistic_cdf(parent: &ParentDistribution, n: usize, k: usize, t: f64) -> Result<f64> {
    check_rank(n, k)?;
    let f = parent.cdf_at(t)?;
    Ok(binomial_tail(&f, n as u64, k as u64).clamp(0.0, 1.0))
}

pub fn order_statistic_cdf_exact(parent: &ParentDistribution, n: usize, k: usize, t: &Rational) -> Result<Rational> {
    check_rank(n, k)?;
    let f = parent.cdf_exact(t)?;
    Ok(binomial_tail(&f, n as u64, k as u64))
}

/// Independent, not necessarily identical, parents: one per robot, all
/// supported within a common boundary `[0, s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InidFamily {
    s: Rational,
    parents: Vec<ParentDistribution>,
}

impl InidFamily {
    pub fn new(s: Rational, parents: Vec<ParentDistribution>) -> Result<Self> {
        if s <= Rational::zero() {
            return domain("boundary length must be positive");
        }
        if let Some(p) = parents.iter().find(|p| *p.support() > s) {
            return domain(format!("parent support {} exceeds boundary {s}", p.support()));
        }
        Ok(Self { s, parents })
    }

    pub fn boundary(&self) -> &Rational {
        &self.s
    }

    pub fn parents(&self) -> &[ParentDistribution] {
        &self.parents
    }

    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    fn check_point(&self, t: f64) -> Result<()> {
        if !(0.0..=self.s.to_f64()).contains(&t) {
            return domain(format!("t = {t} outside [0, {}]", self.s));
        }
        Ok(())
    }
}

pub fn order_statistic_cdf_inid(family: &InidFamily, k: usize, t: f64) -> Result<f64> {
    check_rank(family.len(), k)?;
    family.check_point(t)?;
    let ps: Vec<f64> = family.parents.iter().map(|p| p.cdf_unchecked(t)).collect();
    Ok(poisson_binomial_tail(&ps, k).clamp(0.0, 1.0))
}

pub fn order_statistic_cdf_inid_exact(family: &InidFamily, k: usize, t: &Rational) -> Result<Rational> {
    check_rank(family.len(), k)?;
    if *t < Rational::zero() || *t > family.s {
        return domain(format!("t = {t} outside [0, {}]", family.s));
    }
    let ps = family
        .parents
        .iter()
        .map(|p| p.cdf_exact_clamped(t))
        .collect::<Result<Vec<_>>>()?;
    Ok(poisson_binomial_tail(&ps, k))
}

fn factorial_f64(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Joint density of the order statistics with ranks `indices` (1-based,
/// strictly increasing) at the nondecreasing `points`, for n iid draws.
pub fn joint_orderstat_density_at_indices(
    parent: &ParentDistribution,
    n: usize,
    indices: &[usize],
    points: &[f64],
) -> Result<f64> {
    if indices.len() != points.len() || indices.is_empty() {
        return domain("indices and points must be nonempty and of equal length");
    }
    if indices.windows(2).any(|w| w[0] >= w[1]) || indices[0] == 0 || *indices.last().expect("nonempty") > n {
        return domain(format!("indices must be strictly increasing within 1..={n}"));
    }
    if points.windows(2).any(|w| w[0] > w[1]) {
        return domain("points must be nondecreasing");
    }
    let mut value = factorial_f64(n);
    let (mut prev_rank, mut prev_cdf) = (0usize, 0.0);
    for (&rank, &t) in indices.iter().zip(points) {
        let cdf = parent.cdf_at(t)?;
        value *= parent.pdf_unchecked(t);
        let gap = rank - prev_rank - 1;
        value *= (cdf - prev_cdf).max(0.0).powi(gap as i32) / factorial_f64(gap);
        prev_rank = rank;
        prev_cdf = cdf;
    }
    let gap = n - prev_rank;
    value *= (1.0 - prev_cdf).max(0.0).powi(gap as i32) / factorial_f64(gap);
    Ok(value)
}

/// Joint density `n! Π f(x_i)` of a sorted configuration.
pub fn janossy_density(parent: &ParentDistribution, positions: &[f64]) -> Result<f64> {
    if positions.windows(2).any(|w| w[0] > w[1]) {
        return domain("positions must be sorted");
    }
    let mut value = factorial_f64(positions.len());
    for &x in positions {
        value *= parent.pdf_at(x)?;
    }
    Ok(value)
}

/// Expected number of n iid points falling in `[a, b]`.
pub fn interval_mass(parent: &ParentDistribution, n: usize, a: f64, b: f64) -> Result<f64> {
    if a > b {
        return domain(format!("interval [{a}, {b}] is reversed"));
    }
    Ok(n as f64 * (parent.cdf_at(b)? - parent.cdf_at(a)?))
}

/// Mean of the i-th smallest of the n+1 slacks of n uniform robots on
/// `[0, s]`: `(s/(n+1)) Σ_{j=n+2-i}^{n+1} 1/j`.
pub fn uniform_slack_orderstat_mean(s: &Rational, n: usize, i: usize) -> Result<Rational> {
    if i == 0 || i > n + 1 {
        return domain(format!("slack rank {i} outside 1..={}", n + 1));
    }
    let harmonic_tail = (n + 2 - i..=n + 1).fold(Rational::zero(), |acc, j| acc + Rational::one() / Rational::from_u64(j as u64));
    Ok(s / Rational::from_u64(n as u64 + 1) * harmonic_tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parents::tests::pwu_example;
    use crate::scalar::{int, rat};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn iid_examples() {
        let u = ParentDistribution::uniform(int(1)).unwrap();
        assert!((order_statistic_cdf(&u, 2, 2, 0.5).unwrap() - 0.25).abs() < 1e-15);
        assert!((order_statistic_cdf(&u, 2, 1, 0.5).unwrap() - 0.75).abs() < 1e-15);
        assert_eq!(order_statistic_cdf_exact(&u, 2, 1, &rat(1, 2)).unwrap(), rat(3, 4));
        for p in [u.clone(), pwu_example(), ParentDistribution::beta_int(2, 5, int(1)).unwrap()] {
            assert_eq!(order_statistic_cdf(&p, 4, 1, 1.0).unwrap(), 1.0);
        }
        assert!(order_statistic_cdf(&u, 2, 0, 0.5).is_err());
        assert!(order_statistic_cdf(&u, 2, 3, 0.5).is_err());
    }

    #[test]
    fn monotone_in_t_and_rank() {
        let p = pwu_example();
        for k in 1..=5 {
            let mut prev = 0.0;
            for j in 0..=100 {
                let t = j as f64 / 100.0;
                let c = order_statistic_cdf(&p, 5, k, t).unwrap();
                assert!(c >= prev - 1e-15);
                if k > 1 {
                    assert!(c <= order_statistic_cdf(&p, 5, k - 1, t).unwrap() + 1e-15);
                }
                prev = c;
            }
        }
    }

    #[test]
    fn inid_examples() {
        let fam = InidFamily::new(
            int(2),
            vec![ParentDistribution::uniform(int(1)).unwrap(), ParentDistribution::uniform(int(2)).unwrap()],
        )
        .unwrap();
        assert!((order_statistic_cdf_inid(&fam, 1, 0.5).unwrap() - 0.625).abs() < 1e-15);
        assert_eq!(order_statistic_cdf_inid_exact(&fam, 1, &rat(1, 2)).unwrap(), rat(5, 8));
        assert_eq!(order_statistic_cdf_inid(&fam, 2, 2.0).unwrap(), 1.0);
        assert!(order_statistic_cdf_inid(&fam, 3, 1.0).is_err());
        assert!(InidFamily::new(int(1), vec![ParentDistribution::uniform(int(2)).unwrap()]).is_err());
    }

    #[test]
    fn identical_inid_reduces_to_iid_exactly() {
        let p = pwu_example();
        let fam = InidFamily::new(int(1), vec![p.clone(); 5]).unwrap();
        for k in 1..=5 {
            for j in 0..=20 {
                let t = rat(j, 20);
                assert_eq!(
                    order_statistic_cdf_inid_exact(&fam, k, &t).unwrap(),
                    order_statistic_cdf_exact(&p, 5, k, &t).unwrap()
                );
            }
        }
    }

    #[test]
    fn joint_density_examples() {
        let u = ParentDistribution::uniform(int(1)).unwrap();
        assert!((joint_orderstat_density_at_indices(&u, 1, &[1], &[0.3]).unwrap() - 1.0).abs() < 1e-15);
        assert!((joint_orderstat_density_at_indices(&u, 2, &[1, 2], &[0.2, 0.7]).unwrap() - 2.0).abs() < 1e-15);
        assert!((joint_orderstat_density_at_indices(&u, 2, &[1], &[0.25]).unwrap() - 1.5).abs() < 1e-15);
        assert!(joint_orderstat_density_at_indices(&u, 2, &[2, 1], &[0.2, 0.7]).is_err());
        assert!(joint_orderstat_density_at_indices(&u, 2, &[1, 2], &[0.7, 0.2]).is_err());
    }

    #[test]
    fn janossy_examples() {
        let u1 = ParentDistribution::uniform(int(1)).unwrap();
        let u2 = ParentDistribution::uniform(int(2)).unwrap();
        let b = ParentDistribution::beta_int(2, 1, int(1)).unwrap();
        assert!((janossy_density(&u1, &[0.2, 0.7]).unwrap() - 2.0).abs() < 1e-15);
        assert!((janossy_density(&u2, &[0.5]).unwrap() - 0.5).abs() < 1e-15);
        assert!((janossy_density(&b, &[0.5, 0.8]).unwrap() - 3.2).abs() < 1e-12);
        assert!(janossy_density(&u1, &[0.7, 0.2]).is_err());
    }

    #[test]
    fn full_index_set_matches_janossy() {
        let parents = [pwu_example(), ParentDistribution::beta_int(3, 2, int(1)).unwrap()];
        for p in &parents {
            let xs = [0.1, 0.35, 0.6, 0.9];
            let a = joint_orderstat_density_at_indices(p, 4, &[1, 2, 3, 4], &xs).unwrap();
            let b = janossy_density(p, &xs).unwrap();
            assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }

    #[test]
    fn interval_mass_examples() {
        let u = ParentDistribution::uniform(int(1)).unwrap();
        assert!((interval_mass(&u, 10, 0.0, 0.3).unwrap() - 3.0).abs() < 1e-12);
        assert!((interval_mass(&pwu_example(), 10, 0.0, 0.5).unwrap() - 8.0).abs() < 1e-12);
        assert_eq!(interval_mass(&pwu_example(), 7, 0.0, 1.0).unwrap(), 7.0);
        assert!(interval_mass(&u, 3, 0.5, 0.2).is_err());
    }

    #[test]
    fn slack_means() {
        assert_eq!(uniform_slack_orderstat_mean(&int(1), 1, 1).unwrap(), rat(1, 4));
        assert_eq!(uniform_slack_orderstat_mean(&int(1), 1, 2).unwrap(), rat(3, 4));
        for n in 0..8 {
            let s = rat(7, 3);
            let total = (1..=n + 1).fold(Rational::zero(), |acc, i| acc + uniform_slack_orderstat_mean(&s, n, i).unwrap());
            assert_eq!(total, s);
        }
        assert!(uniform_slack_orderstat_mean(&int(1), 2, 4).is_err());
        assert!(uniform_slack_orderstat_mean(&int(1), 2, 0).is_err());
    }

    #[test]
    fn slack_means_match_simulation() {
        let (n, trials) = (4usize, 40_000);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = ParentDistribution::uniform(int(1)).unwrap();
        let mut sums = vec![0.0; n + 1];
        for _ in 0..trials {
            let mut xs: Vec<f64> = (0..n).map(|_| u.sample(&mut rng)).collect();
            xs.sort_by(f64::total_cmp);
            let mut slacks: Vec<f64> = std::iter::once(0.0)
                .chain(xs.iter().copied())
                .zip(xs.iter().copied().chain(std::iter::once(1.0)))
                .map(|(a, b)| b - a)
                .collect();
            slacks.sort_by(f64::total_cmp);
            sums.iter_mut().zip(&slacks).for_each(|(acc, v)| *acc += v);
        }
        for (i, total) in sums.iter().enumerate() {
            let expected = uniform_slack_orderstat_mean(&int(1), n, i + 1).unwrap().to_f64();
            assert!((total / trials as f64 - expected).abs() < 0.005, "rank {}", i + 1);
        }
    }

    #[test]
    fn kolmogorov_smirnov_against_sorted_samples() {
        let (n, k, samples) = (5usize, 2usize, 100_000usize);
        for p in [pwu_example(), ParentDistribution::truncated_gaussian(0.4, 0.3, int(1)).unwrap()] {
            let mut rng = ChaCha8Rng::seed_from_u64(5);
            let mut draws: Vec<f64> = (0..samples)
                .map(|_| {
                    let mut xs: Vec<f64> = (0..n).map(|_| p.sample(&mut rng)).collect();
                    xs.sort_by(f64::total_cmp);
                    xs[k - 1]
                })
                .collect();
            draws.sort_by(f64::total_cmp);
            let mut ks: f64 = 0.0;
            for (i, x) in draws.iter().enumerate() {
                let c = order_statistic_cdf(&p, n, k, *x).unwrap();
                ks = ks.max((c - i as f64 / samples as f64).abs()).max((c - (i + 1) as f64 / samples as f64).abs());
            }
            assert!(ks <= 0.02, "{}: KS = {ks}", p.family());
        }
    }
}
