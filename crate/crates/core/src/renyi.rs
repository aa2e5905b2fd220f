//! Rényi parking (random sequential adsorption) on a segment.
//!
//! Cars of length `r` arrive one at a time, each uniform over every
//! currently admissible left endpoint, until no gap can take another car.
//! A gap of length `g` admits left endpoints on a set of measure
//! `max(g - r, 0)`; the open gaps live in a segment tree keyed by that
//! measure so one arrival costs O(log N).

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Result};
use crate::geometry::{restore_from_free_slack, slacks_to_positions, Configuration};
use crate::montecarlo::{sample_uniform_slacks, Estimate, MonteCarlo};
use crate::scalar::{Rational, Scalar};

/// Float gaps whose admissible measure is at most this (relative to `r`)
/// count as jammed unless they fit a car exactly.
pub const JAM_TOLERANCE: f64 = 1e-12;
/// Largest `s / r` the exact rational simulator accepts.
pub const MAX_EXACT_PARKING_LENGTH: u64 = 50;
/// Largest `s / r` any simulator accepts.
pub const MAX_PARKING_CARS: u64 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParkingResult<T> {
    pub s: T,
    pub diameter: T,
    /// Sorted left endpoints.
    pub positions: Vec<T>,
    pub count: usize,
    /// `count * diameter / s`.
    pub density: f64,
}

/// Sum tree over gap slots. Leaves hold admissible measures; internal
/// nodes are recomputed from their children so no rounding accumulates.
struct GapTree<T> {
    leaves: usize,
    sums: Vec<T>,
    gaps: Vec<(T, T)>,
}

impl<T: Scalar> GapTree<T> {
    fn new(capacity: usize) -> Self {
        let leaves = capacity.next_power_of_two();
        Self { leaves, sums: vec![T::zero(); 2 * leaves], gaps: Vec::with_capacity(capacity) }
    }

    fn set(&mut self, slot: usize, weight: T) {
        let mut i = slot + self.leaves;
        self.sums[i] = weight;
        while i > 1 {
            i /= 2;
            self.sums[i] = self.sums[2 * i].clone() + self.sums[2 * i + 1].clone();
        }
    }

    fn total(&self) -> &T {
        &self.sums[1]
    }

    /// Slot whose cumulative range contains `target`, and the offset into
    /// it. Zero-weight subtrees are never entered.
    fn find(&self, mut target: T) -> (usize, T) {
        let mut i = 1;
        while i < self.leaves {
            let (left, right) = (&self.sums[2 * i], &self.sums[2 * i + 1]);
            let zero = T::zero();
            if *left > zero && (target < *left || *right <= zero) {
                i *= 2;
            } else {
                target = target - left.clone();
                i = 2 * i + 1;
            }
        }
        let slot = i - self.leaves;
        let weight = self.sums[i].clone();
        let offset = if target < T::zero() {
            T::zero()
        } else if target > weight {
            weight
        } else {
            target
        };
        (slot, offset)
    }
}

fn park<T: Scalar, R: RngCore + ?Sized>(s: T, r: T, tol: T, rng: &mut R) -> Result<ParkingResult<T>> {
    if !(s > T::zero()) {
        return domain("boundary length must be positive");
    }
    if !(r > T::zero()) {
        return domain("car length must be positive");
    }
    let ratio = (s.to_f64() / r.to_f64()).floor();
    if !(ratio < MAX_PARKING_CARS as f64) {
        return capacity(format!("s / r = {ratio} exceeds {MAX_PARKING_CARS}"));
    }
    let max_cars = ratio as usize + 1;
    let admissible = |start: &T, end: &T| {
        let room = end.clone() - start.clone() - r.clone();
        if room > tol {
            room
        } else {
            T::zero()
        }
    };
    let mut tree = GapTree::new(max_cars + 1);
    tree.gaps.push((T::zero(), s.clone()));
    tree.set(0, admissible(&T::zero(), &s));
    let mut cars = Vec::with_capacity(max_cars);
    while *tree.total() > T::zero() {
        let target = tree.total().clone() * T::from_unit_bits(rng.next_u64());
        let (slot, offset) = tree.find(target);
        let (start, end) = tree.gaps[slot].clone();
        let car = start.clone() + offset;
        let right_start = car.clone() + r.clone();
        tree.set(slot, admissible(&start, &car));
        tree.gaps[slot] = (start, car.clone());
        let new_slot = tree.gaps.len();
        if new_slot >= tree.leaves {
            return capacity("gap table overflow");
        }
        tree.set(new_slot, admissible(&right_start, &end));
        tree.gaps.push((right_start, end));
        cars.push(car);
    }
    // Gaps that fit a car with no room to spare have measure zero above
    // but still take one car.
    for (start, end) in &tree.gaps {
        if end.clone() - start.clone() >= r {
            cars.push(start.clone());
        }
    }
    cars.sort_by(|a, b| a.partial_cmp(b).expect("positions are ordered"));
    let count = cars.len();
    let density = count as f64 * r.to_f64() / s.to_f64();
    Ok(ParkingResult { s, diameter: r, positions: cars, count, density })
}

/// One parking run in floating point.
pub fn simulate_parking<R: RngCore + ?Sized>(s: f64, r: f64, rng: &mut R) -> Result<ParkingResult<f64>> {
    park(s, r, JAM_TOLERANCE * r, rng)
}

/// One parking run in exact rationals; positions are exact functions of
/// the random bits drawn. Limited to `s / r <= 50`.
pub fn simulate_parking_exact<R: RngCore + ?Sized>(s: &Rational, r: &Rational, rng: &mut R) -> Result<ParkingResult<Rational>> {
    if r > &Rational::from_u64(0) && s / r > Rational::from_u64(MAX_EXACT_PARKING_LENGTH) {
        return capacity(format!("exact parking is limited to s / r <= {MAX_EXACT_PARKING_LENGTH}"));
    }
    park(s.clone(), r.clone(), Rational::from_u64(0), rng)
}

/// Mean of `count * r / s` over independent runs.
pub fn jamming_density_estimate(s: f64, r: f64, mc: &MonteCarlo) -> Result<Estimate> {
    mc.run_scalar(|rng| Ok(simulate_parking(s, r, rng)?.density))
}

/// Uniform sample of n non-overlapping cars of length `r` on `[0, s]`:
/// n uniform points on `[0, s - n r]` shifted right by `(i-1) r`.
pub fn n_parking_sample<R: Rng + ?Sized>(s: f64, r: f64, n: usize, rng: &mut R) -> Result<Configuration<f64>> {
    if !(r >= 0.0) {
        return domain("car length must be nonnegative");
    }
    let free = s - n as f64 * r;
    if !(free >= 0.0) {
        return domain(format!("{n} cars of length {r} do not fit on {s}"));
    }
    let mut x: Vec<f64> = if free == 0.0 {
        (0..n).map(|i| i as f64 * r).collect()
    } else {
        let slacks = sample_uniform_slacks(free, n, rng);
        let mut points = slacks_to_positions(&slacks);
        points.iter_mut().for_each(|p| *p = p.clamp(0.0, free));
        let reduced = Configuration::from_length(free, points)?;
        restore_from_free_slack(&reduced, &r)?.positions().to_vec()
    };
    // Undo rounding so the spacing holds exactly in f64.
    for i in 1..x.len() {
        if x[i] - x[i - 1] < r {
            x[i] = x[i - 1] + r;
            while x[i] - x[i - 1] < r {
                x[i] = x[i].next_up();
            }
        }
    }
    if let Some(last) = x.last_mut() {
        *last = last.min(s - r);
    }
    for i in (0..x.len().saturating_sub(1)).rev() {
        if x[i + 1] - x[i] < r {
            x[i] = x[i + 1] - r;
            while x[i + 1] - x[i] < r {
                x[i] = x[i].next_down();
            }
        }
    }
    if x.first().is_some_and(|x0| *x0 < 0.0) {
        return domain("cars do not fit in floating point at this length");
    }
    Configuration::from_length(s, x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PositionHistogram {
    /// Bins split `[0, s - r]` evenly.
    pub bin_width: f64,
    /// Mean fraction of cars whose left endpoint falls in each bin.
    pub mass: Vec<f64>,
    pub stderr: Vec<f64>,
    pub trials: u64,
}

/// Occupancy histogram of left endpoints over independent parking runs.
/// Each run contributes its own normalized histogram, so the masses sum to one.
pub fn empirical_position_histogram(s: f64, r: f64, bins: usize, mc: &MonteCarlo) -> Result<PositionHistogram> {
    if bins == 0 {
        return domain("need at least one bin");
    }
    let range = (s - r).max(0.0);
    let est = mc.run(bins, |rng, out| {
        let run = simulate_parking(s, r, rng)?;
        out.iter_mut().for_each(|v| *v = 0.0);
        let share = 1.0 / run.count as f64;
        for x in &run.positions {
            let bin = if range > 0.0 { ((x / range) * bins as f64) as usize } else { 0 };
            out[bin.min(bins - 1)] += share;
        }
        Ok(())
    })?;
    Ok(PositionHistogram {
        bin_width: range / bins as f64,
        mass: est.iter().map(|e| e.mean).collect(),
        stderr: est.iter().map(|e| e.stderr).collect(),
        trials: mc.trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::is_collision_free;
    use crate::montecarlo::RngSpec;
    use crate::scalar::{int, rat};

    fn assert_jammed(run: &ParkingResult<f64>) {
        let (s, r) = (run.s, run.diameter);
        let x = &run.positions;
        assert!(x.windows(2).all(|w| w[1] - w[0] >= r));
        assert!(x[0] >= 0.0 && *x.last().unwrap() <= s - r);
        let mut gaps = vec![x[0]];
        gaps.extend(x.windows(2).map(|w| w[1] - w[0] - r));
        gaps.push(s - x.last().unwrap() - r);
        assert!(gaps.iter().all(|g| *g < r), "a car still fits: {gaps:?}");
        assert!(2.0 * run.count as f64 * r >= s - r);
        assert!(run.count as f64 <= (s / r).floor());
    }

    #[test]
    fn unit_segment_holds_one_car() {
        let mut rng = RngSpec::new(1, 0).rng();
        let run = simulate_parking(1.0, 1.0, &mut rng).unwrap();
        assert_eq!(run.positions, vec![0.0]);
        assert_eq!(run.density, 1.0);
        let exact = simulate_parking_exact(&int(1), &int(1), &mut rng).unwrap();
        assert_eq!(exact.positions, vec![int(0)]);
    }

    #[test]
    fn two_lengths_hold_one_car() {
        let mut rng = RngSpec::new(2, 0).rng();
        for _ in 0..2000 {
            assert_eq!(simulate_parking(2.0, 1.0, &mut rng).unwrap().count, 1);
        }
    }

    #[test]
    fn runs_are_jammed() {
        let mut rng = RngSpec::new(3, 0).rng();
        for s in [1.5, 3.0, 7.25, 40.0, 333.3] {
            for r in [1.0, 0.3] {
                assert_jammed(&simulate_parking(s, r, &mut rng).unwrap());
            }
        }
    }

    #[test]
    fn exact_runs_are_jammed() {
        let mut rng = RngSpec::new(4, 0).rng();
        for s in [rat(7, 2), int(12), int(50)] {
            let run = simulate_parking_exact(&s, &int(1), &mut rng).unwrap();
            let x = &run.positions;
            assert!(x.windows(2).all(|w| &w[1] - &w[0] >= int(1)));
            let mut gaps = vec![x[0].clone()];
            gaps.extend(x.windows(2).map(|w| &w[1] - &w[0] - int(1)));
            gaps.push(&s - x.last().unwrap() - int(1));
            assert!(gaps.iter().all(|g| *g < int(1)));
        }
        assert!(simulate_parking_exact(&int(51), &int(1), &mut rng).is_err());
    }

    #[test]
    fn bad_lengths_rejected() {
        let mut rng = RngSpec::new(5, 0).rng();
        assert!(simulate_parking(0.0, 1.0, &mut rng).is_err());
        assert!(simulate_parking(2.0, 0.0, &mut rng).is_err());
        assert!(simulate_parking(1e12, 1.0, &mut rng).is_err());
    }

    #[test]
    fn density_approaches_constant_from_below() {
        let est = |s: f64| jamming_density_estimate(s, 1.0, &MonteCarlo::new(2000, RngSpec::new(6, s as u64))).unwrap();
        let (a, b, c) = (est(10.0), est(100.0), est(1000.0));
        assert!(a.mean < b.mean && b.mean < c.mean, "{a:?} {b:?} {c:?}");
        assert!(c.within(0.7476, 4.0), "{c:?}");
    }

    #[test]
    fn n_parking_is_collision_free() {
        let mut rng = RngSpec::new(7, 0).rng();
        for (s, r, n) in [(10.0, 1.0, 5), (3.0, 0.7, 4), (1.0, 0.1, 9), (5.0, 1.0, 5)] {
            for _ in 0..200 {
                let c = n_parking_sample(s, r, n, &mut rng).unwrap();
                assert_eq!(c.robots(), n);
                assert!(is_collision_free(&c, &r), "{c:?}");
            }
        }
        let packed = n_parking_sample(4.0, 1.0, 4, &mut rng).unwrap();
        assert_eq!(packed.positions(), &[0.0, 1.0, 2.0, 3.0]);
        assert!(n_parking_sample(3.0, 1.0, 4, &mut rng).is_err());
        assert!(n_parking_sample(1.0, 0.1, 10, &mut rng).is_err());
        let points = n_parking_sample(1.0, 0.0, 3, &mut rng).unwrap();
        assert!(points.positions().windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn n_parking_matches_exact_cf_pcon() {
        use crate::exact::pcon_cf_uniform;
        use crate::geometry::{is_connected, ThresholdProfile};
        for (s, d, n) in [(int(3), rat(7, 5), 2), (int(5), rat(3, 2), 3)] {
            let exact = pcon_cf_uniform(&s, &d, &int(1), n).unwrap().to_f64();
            let (s, d) = (s.to_f64(), d.to_f64());
            let profile = ThresholdProfile::homogeneous(d).unwrap();
            let est = MonteCarlo::new(200_000, RngSpec::new(9, n as u64))
                .run_scalar(|rng| {
                    let c = n_parking_sample(s, 1.0, n, rng)?;
                    let ends = Configuration::from_length(s - 1.0, c.positions().to_vec())?;
                    Ok(if is_connected(&ends, &profile)? { 1.0 } else { 0.0 })
                })
                .unwrap();
            assert!(est.within(exact, 3.0), "{est:?} vs {exact}");
        }
    }

    #[test]
    fn histogram_mass_and_symmetry() {
        let mc = MonteCarlo::new(4000, RngSpec::new(8, 0));
        let h = empirical_position_histogram(20.0, 1.0, 10, &mc).unwrap();
        assert!((h.mass.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for j in 0..5 {
            let (a, b) = (h.mass[j], h.mass[9 - j]);
            let se = (h.stderr[j].powi(2) + h.stderr[9 - j].powi(2)).sqrt();
            assert!((a - b).abs() <= 3.0 * se, "bin {j}: {a} vs {b} ± {se}");
        }
        let unit = empirical_position_histogram(1.0, 1.0, 4, &MonteCarlo::new(10, RngSpec::new(8, 1))).unwrap();
        assert_eq!(unit.mass, vec![1.0, 0.0, 0.0, 0.0]);
    }
}
