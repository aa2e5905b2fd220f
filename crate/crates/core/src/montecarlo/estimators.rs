use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{sample_cf_config, sample_iid_config, sample_inid_config, standard_normal, Estimate, MonteCarlo};
use crate::error::{capacity, domain, Result};
use crate::geometry::{graph_stats, is_connected, slacks_connected, Configuration, ThresholdProfile};
use crate::parents::{InidFamily, ParentDistribution};
use crate::scalar::Scalar;

/// Smallest collision-free acceptance rate the rejection sampler accepts.
pub const MIN_CF_ACCEPTANCE: f64 = 1e-6;

/// How robot positions are generated.
#[derive(Debug, Clone, PartialEq)]
pub enum Scenario {
    /// n iid draws from one parent.
    Iid(ParentDistribution),
    /// One draw per parent; n is the family size.
    Inid(InidFamily),
    /// n robots of the given diameter, iid from `parent` on `[0, s - diameter]`
    /// conditioned on being collision-free.
    CollisionFree { parent: ParentDistribution, diameter: f64 },
}

/// Probability that n iid uniform left endpoints on `[0, s - r]` are
/// collision-free: `((s - n r) / (s - r))^n`.
pub fn cf_acceptance_uniform(s: f64, r: f64, n: usize) -> f64 {
    if n <= 1 {
        return 1.0;
    }
    let free = s - n as f64 * r;
    if free <= 0.0 {
        return 0.0;
    }
    (free / (s - r)).powi(n as i32)
}

fn sample_scenario(scenario: &Scenario, s: f64, n: usize, rng: &mut ChaCha8Rng) -> Result<Configuration<f64>> {
    match scenario {
        Scenario::Iid(parent) => sample_iid_config(parent, s, n, rng),
        Scenario::Inid(family) => sample_inid_config(family, rng),
        Scenario::CollisionFree { parent, diameter } => sample_cf_config(parent, s, *diameter, n, rng),
    }
}

/// Connectivity of a collision-free configuration: end gaps are measured
/// to the robot bodies, so the slacks are those of the left endpoints on
/// `[0, s - r]` (with no robots the single gap is the whole boundary).
fn cf_connected(config: &Configuration<f64>, r: f64, profile: &ThresholdProfile<f64>) -> Result<bool> {
    if config.robots() == 0 {
        return is_connected(config, profile);
    }
    let reduced = Configuration::from_length(config.length() - r, config.positions().to_vec())?;
    is_connected(&reduced, profile)
}

/// Fraction of connected configurations.
pub fn estimate_pcon(
    scenario: &Scenario,
    s: f64,
    profile: &ThresholdProfile<f64>,
    n: usize,
    mc: &MonteCarlo,
) -> Result<Estimate> {
    profile.check_len(n + 1)?;
    match scenario {
        Scenario::Inid(family) => {
            if family.len() != n {
                return domain(format!("family has {} parents but n = {n}", family.len()));
            }
            if family.boundary().to_f64() != s {
                return domain("family boundary differs from s");
            }
        }
        Scenario::CollisionFree { parent, diameter } => {
            if s < n as f64 * diameter {
                return domain(format!("{n} robots of diameter {diameter} do not fit on length {s}"));
            }
            if parent.is_uniform() && cf_acceptance_uniform(s, *diameter, n) < MIN_CF_ACCEPTANCE {
                return capacity(format!(
                    "collision-free acceptance {:e} below {MIN_CF_ACCEPTANCE:e}",
                    cf_acceptance_uniform(s, *diameter, n)
                ));
            }
        }
        Scenario::Iid(_) => {}
    }
    mc.run_scalar(|rng| {
        let config = sample_scenario(scenario, s, n, rng)?;
        let connected = match scenario {
            Scenario::CollisionFree { diameter, .. } => cf_connected(&config, *diameter, profile)?,
            _ => is_connected(&config, profile)?,
        };
        Ok(if connected { 1.0 } else { 0.0 })
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GraphStatsEstimate {
    pub components: Estimate,
    pub coverage: Estimate,
    pub edges: Estimate,
}

pub fn estimate_graph_stats(
    parent: &ParentDistribution,
    s: f64,
    d: f64,
    n: usize,
    mc: &MonteCarlo,
) -> Result<GraphStatsEstimate> {
    let est = mc.run(3, |rng, out| {
        let config = sample_iid_config(parent, s, n, rng)?;
        let st = graph_stats(&config, &d);
        out[0] = st.components as f64;
        out[1] = st.coverage;
        out[2] = st.edges as f64;
        Ok(())
    })?;
    Ok(GraphStatsEstimate { components: est[0], coverage: est[1], edges: est[2] })
}

/// Connectivity with one communication range per robot. Robot i draws its
/// position from `parent`; after sorting, each slack is bridged when it is
/// within the range of both robots it separates (end slacks: of the one
/// adjacent robot).
pub fn estimate_pcon_heterogeneous(
    parent: &ParentDistribution,
    ranges: &[f64],
    s: f64,
    mc: &MonteCarlo,
) -> Result<Estimate> {
    if ranges.is_empty() || ranges.iter().any(|d| !(*d > 0.0)) {
        return domain("need at least one positive range");
    }
    if parent.support_f64() > s {
        return domain("parent support exceeds boundary");
    }
    mc.run_scalar(|rng| {
        let mut robots: Vec<(f64, f64)> = ranges.iter().map(|d| (parent.sample(rng), *d)).collect();
        robots.sort_by(|a, b| a.0.total_cmp(&b.0));
        let positions: Vec<f64> = robots.iter().map(|r| r.0).collect();
        let slacks = Configuration::from_length(s, positions)?.slacks();
        let n = robots.len();
        let mut thresholds = Vec::with_capacity(n + 1);
        thresholds.push(robots[0].1);
        thresholds.extend(robots.windows(2).map(|w| w[0].1.min(w[1].1)));
        thresholds.push(robots[n - 1].1);
        let connected = slacks_connected(&slacks, &ThresholdProfile::per_slack(thresholds)?)?;
        Ok(if connected { 1.0 } else { 0.0 })
    })
}

/// Robots travel from 0 towards `destinations`; each lands at its
/// destination plus a zero-mean Gaussian error with variance
/// `noise_scale * destination` (travel distance), clamped to `[0, s]`.
pub fn noisy_attachment_pcon(
    destinations: &Configuration<f64>,
    d: f64,
    noise_scale: f64,
    mc: &MonteCarlo,
) -> Result<Estimate> {
    if !(noise_scale >= 0.0) {
        return domain("noise scale must be nonnegative");
    }
    let profile = ThresholdProfile::homogeneous(d)?;
    let s = *destinations.length();
    mc.run_scalar(|rng| {
        let landed: Vec<f64> = destinations
            .positions()
            .iter()
            .map(|x| (x + (noise_scale * x).sqrt() * standard_normal(rng)).clamp(0.0, s))
            .collect();
        let config = Configuration::from_unsorted(s, landed)?;
        Ok(if is_connected(&config, &profile)? { 1.0 } else { 0.0 })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{expected_components_uniform, expected_coverage_uniform, expected_edges_uniform, pcon_cf_uniform};
    use crate::montecarlo::RngSpec;
    use crate::scalar::{int, rat};

    fn uniform(s: i64) -> ParentDistribution {
        ParentDistribution::uniform(int(s)).unwrap()
    }

    fn mc(trials: u64, seed: u64) -> MonteCarlo {
        MonteCarlo::new(trials, RngSpec::new(seed, 0)).with_workers(4)
    }

    #[test]
    fn pcon_matches_exact() {
        let p = ThresholdProfile::homogeneous(0.4).unwrap();
        let est = estimate_pcon(&Scenario::Iid(uniform(1)), 1.0, &p, 2, &mc(200_000, 1)).unwrap();
        assert!(est.within(0.04, 3.0), "{est:?}");
    }

    #[test]
    fn full_regime_is_exactly_one() {
        let p = ThresholdProfile::homogeneous(1.0).unwrap();
        let est = estimate_pcon(&Scenario::Iid(uniform(1)), 1.0, &p, 5, &mc(10_000, 2)).unwrap();
        assert_eq!(est.mean, 1.0);
        let st = estimate_graph_stats(&uniform(1), 1.0, 1.5, 4, &mc(10_000, 2)).unwrap();
        assert_eq!((st.components.mean, st.coverage.mean, st.edges.mean), (1.0, 1.0, 6.0));
    }

    #[test]
    fn graph_stats_match_closed_forms() {
        for (d, n) in [(0.5, 1usize), (0.5, 2), (0.25, 3)] {
            let st = estimate_graph_stats(&uniform(1), 1.0, d, n, &mc(100_000, 3)).unwrap();
            let dr = rat((d * 100.0) as i64, 100);
            let comp = expected_components_uniform(&int(1), &dr, n).unwrap().to_f64();
            let cov = expected_coverage_uniform(&int(1), &dr, n).unwrap().to_f64();
            let edg = expected_edges_uniform(&int(1), &dr, n).unwrap().to_f64();
            // Components are deterministic for n = 1, d = 1/2.
            assert!(st.components.within(comp, 3.0) || st.components.stderr == 0.0 && st.components.mean == comp);
            assert!(st.coverage.within(cov, 3.0), "{st:?}");
            assert!(st.edges.within(edg, 3.0) || st.edges.stderr == 0.0 && st.edges.mean == edg);
        }
    }

    #[test]
    fn cf_matches_exact() {
        let p = ThresholdProfile::homogeneous(1.4).unwrap();
        let sc = Scenario::CollisionFree { parent: uniform(2), diameter: 1.0 };
        let est = estimate_pcon(&sc, 3.0, &p, 2, &mc(200_000, 4)).unwrap();
        let exact = pcon_cf_uniform(&int(3), &rat(7, 5), &int(1), 2).unwrap().to_f64();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn cf_capacity_error() {
        let p = ThresholdProfile::homogeneous(1.0).unwrap();
        let sc = Scenario::CollisionFree { parent: ParentDistribution::uniform(rat(99, 10)).unwrap(), diameter: 1.0 };
        let err = estimate_pcon(&sc, 10.9, &p, 10, &mc(100, 4)).unwrap_err();
        assert!(matches!(err, crate::Error::Capacity(_)));
    }

    #[test]
    fn inid_identical_matches_iid() {
        let p = ThresholdProfile::homogeneous(0.5).unwrap();
        let fam = InidFamily::new(int(1), vec![uniform(1); 3]).unwrap();
        let est = estimate_pcon(&Scenario::Inid(fam), 1.0, &p, 3, &mc(100_000, 5)).unwrap();
        let exact = crate::exact::pcon_uniform(&int(1), &rat(1, 2), 3).unwrap().to_f64();
        assert!(est.within(exact, 3.0));
    }

    #[test]
    fn hetero_equal_ranges_match_uniform() {
        let est = estimate_pcon_heterogeneous(&uniform(1), &[0.6, 0.6], 1.0, &mc(100_000, 6)).unwrap();
        let exact = crate::exact::pcon_uniform(&int(1), &rat(3, 5), 2).unwrap().to_f64();
        assert!(est.within(exact, 3.0));
    }

    /// Robots get a random permutation of the ranges, so the exact value
    /// averages the per-slack formula over all orderings.
    #[test]
    fn hetero_matches_permutation_average() {
        let ranges = [rat(1, 2), rat(3, 5), rat(4, 5)];
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let exact: f64 = perms
            .iter()
            .map(|p| {
                let ordered: Vec<_> = p.iter().map(|&i| ranges[i].clone()).collect();
                let t = crate::exact::hetero_slack_thresholds(&ordered).unwrap();
                crate::exact::pcon_per_slack_uniform(&int(1), &t).unwrap().to_f64()
            })
            .sum::<f64>()
            / 6.0;
        let est = estimate_pcon_heterogeneous(&uniform(1), &[0.5, 0.6, 0.8], 1.0, &mc(200_000, 7)).unwrap();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
        let four = [rat(1, 5), rat(2, 5), rat(1, 2), rat(7, 10)];
        let exact = crate::exact::pcon_heterogeneous_uniform(&int(1), &four).unwrap().to_f64();
        let est = estimate_pcon_heterogeneous(&uniform(1), &[0.2, 0.4, 0.5, 0.7], 1.0, &mc(200_000, 8)).unwrap();
        assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
    }

    #[test]
    fn noisy_limits_and_determinism() {
        let dest = Configuration::from_length(1.0, vec![0.2, 0.4, 0.6, 0.8]).unwrap();
        let quiet = noisy_attachment_pcon(&dest, 0.25, 0.0, &mc(1000, 8)).unwrap();
        assert_eq!(quiet.mean, 1.0);
        let tiny = noisy_attachment_pcon(&dest, 0.25, 1e-8, &mc(1000, 8)).unwrap();
        assert_eq!(tiny.mean, 1.0);
        let single = Configuration::from_length(1.0, vec![0.5]).unwrap();
        assert_eq!(noisy_attachment_pcon(&single, 1.0, 1.0, &mc(1000, 8)).unwrap().mean, 1.0);
        let five = Configuration::from_length(1.0, vec![1.0 / 6.0, 2.0 / 6.0, 0.5, 4.0 / 6.0, 5.0 / 6.0]).unwrap();
        let a = noisy_attachment_pcon(&five, 0.25, 0.01, &mc(20_000, 9)).unwrap();
        let b = noisy_attachment_pcon(&five, 0.25, 0.01, &mc(20_000, 9).with_workers(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.mean < 1.0 && a.mean > 0.0);
    }
}
