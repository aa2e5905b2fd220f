use super::{exponential, unit_f64, Estimate, MonteCarlo};
use crate::error::{domain, Result};
use crate::exact::{Halfspace, Hypercuboid};
use crate::polynomial::RationalPolynomial;
use crate::scalar::Scalar;
use crate::simplex::SimplexND;

/// Volume of `{x in cuboid : a·x <= b}` as cuboid volume times the hit rate
/// of uniform points.
pub fn estimate_halfspace_volume(hs: &Halfspace, cuboid: &Hypercuboid, mc: &MonteCarlo) -> Result<Estimate> {
    if hs.dim() != cuboid.dim() {
        return domain("halfspace and cuboid dimensions differ");
    }
    let a: Vec<f64> = hs.normal().iter().map(Scalar::to_f64).collect();
    let c: Vec<f64> = cuboid.upper().iter().map(Scalar::to_f64).collect();
    let b = hs.offset().to_f64();
    let vol = cuboid.volume().to_f64();
    mc.run_scalar(|rng| {
        let dot: f64 = a.iter().zip(&c).map(|(ai, ci)| ai * ci * unit_f64(rng)).sum();
        Ok(if dot <= b { vol } else { 0.0 })
    })
}

/// Integral of `poly` over `simplex` as volume times the mean of `poly` at
/// uniform points (flat Dirichlet barycentric weights).
pub fn estimate_simplex_integral(poly: &RationalPolynomial, simplex: &SimplexND, mc: &MonteCarlo) -> Result<Estimate> {
    let n = simplex.dim();
    if poly.vars() != n {
        return domain("polynomial and simplex dimensions differ");
    }
    let vertices: Vec<Vec<f64>> = simplex.vertices().iter().map(|v| v.iter().map(Scalar::to_f64).collect()).collect();
    let vol = simplex.volume().to_f64();
    mc.run_scalar(|rng| {
        let weights: Vec<f64> = (0..=n).map(|_| exponential(rng)).collect();
        let total: f64 = weights.iter().sum();
        let point: Vec<f64> = (0..n)
            .map(|j| vertices.iter().zip(&weights).map(|(v, w)| v[j] * w / total).sum())
            .collect();
        Ok(vol * poly.eval_f64(&point))
    })
}
