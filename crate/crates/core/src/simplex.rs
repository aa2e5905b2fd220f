//! Exact integration over simplices and the exact connectivity probability
//! for polynomial parent densities.

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{capacity, domain, Result};
use crate::geometry::{d_regime, Regime};
use crate::parents::{beta_to_polynomial, ParentDistribution};
use crate::polynomial::RationalPolynomial;
use crate::scalar::{factorial, rational_pow, Rational};

/// Largest robot count accepted by the polynomial-parent pipeline.
pub const MAX_POLY_ROBOTS: usize = 10;
/// Largest total degree `n * deg(f)` of the joint density integrand.
pub const MAX_POLY_DEGREE: u32 = 40;

/// Simplex given by `dim + 1` rational vertices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimplexND {
    #[serde(with = "vertex_list")]
    vertices: Vec<Vec<Rational>>,
}

mod vertex_list {
    use super::Rational;
    use crate::scalar::{format_rational, parse_rational};
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let text: Vec<Vec<String>> = v.iter().map(|row| row.iter().map(format_rational).collect()).collect();
        text.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let text = Vec::<Vec<String>>::deserialize(d)?;
        text.iter()
            .map(|row| row.iter().map(|t| parse_rational(t).map_err(serde::de::Error::custom)).collect())
            .collect()
    }
}

impl SimplexND {
    pub fn new(vertices: Vec<Vec<Rational>>) -> Result<Self> {
        let Some(first) = vertices.first() else {
            return domain("a simplex needs at least one vertex");
        };
        let dim = first.len();
        if vertices.len() != dim + 1 || vertices.iter().any(|v| v.len() != dim) {
            return domain(format!("a {dim}-simplex needs {} vertices of length {dim}", dim + 1));
        }
        Ok(Self { vertices })
    }

    /// `{x >= 0, Σ x <= scale}`.
    pub fn canonical(dim: usize, scale: &Rational) -> Self {
        let mut vertices = vec![vec![Rational::zero(); dim]];
        for i in 0..dim {
            let mut v = vec![Rational::zero(); dim];
            v[i] = scale.clone();
            vertices.push(v);
        }
        Self { vertices }
    }

    pub fn dim(&self) -> usize {
        self.vertices.len() - 1
    }

    pub fn vertices(&self) -> &[Vec<Rational>] {
        &self.vertices
    }

    /// Columns `v_i - v_{n+1}` for `i = 1..n`, as rows of a matrix.
    fn edge_matrix(&self) -> Vec<Vec<Rational>> {
        let apex = self.vertices.last().expect("nonempty");
        self.vertices[..self.dim()]
            .iter()
            .map(|v| v.iter().zip(apex).map(|(a, b)| a - b).collect())
            .collect()
    }

    pub fn volume(&self) -> Rational {
        determinant(self.edge_matrix()).abs() / Rational::from_integer(factorial(self.dim() as u64))
    }
}

/// Exact determinant by fraction-valued Gaussian elimination.
pub fn determinant(mut m: Vec<Vec<Rational>>) -> Rational {
    let n = m.len();
    let mut det = Rational::one();
    for col in 0..n {
        let Some(pivot) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rational::zero();
        };
        if pivot != col {
            m.swap(pivot, col);
            det = -det;
        }
        let p = m[col][col].clone();
        det *= &p;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let factor = &m[r][col] / &p;
            for c in col..n {
                let delta = &factor * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    det
}

/// Exact integral of `poly` over `simplex`, via the affine map
/// `x = v_{n+1} + Σ λ_i (v_i - v_{n+1})` onto the canonical simplex.
pub fn integrate_over_simplex(poly: &RationalPolynomial, simplex: &SimplexND) -> Result<Rational> {
    let n = simplex.dim();
    if poly.vars() != n {
        return domain(format!("polynomial has {} variables, simplex dimension {n}", poly.vars()));
    }
    let edges = simplex.edge_matrix();
    let det = determinant(edges.clone()).abs();
    if det.is_zero() {
        return Ok(Rational::zero());
    }
    let apex = simplex.vertices.last().expect("nonempty");
    let subs: Vec<RationalPolynomial> = (0..n)
        .map(|j| {
            let linear: Vec<Rational> = edges.iter().map(|e| e[j].clone()).collect();
            RationalPolynomial::affine(apex[j].clone(), &linear)
        })
        .collect();
    let pulled = if n == 0 { poly.clone() } else { poly.compose(&subs)? };
    Ok(pulled.integrate_canonical_simplex() * det)
}

fn dense_mul(a: &[Rational], b: &[Rational]) -> Vec<Rational> {
    let mut out = vec![Rational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn dense_eval(a: &[Rational], t: &Rational) -> Rational {
    a.iter().rev().fold(Rational::zero(), |acc, c| acc * t + c)
}

/// Coefficients in `u` of `f(base + h u)`.
fn shifted(f: &[Rational], base: &Rational, h: &Rational) -> Vec<Rational> {
    let line = [base.clone(), h.clone()];
    let mut out = vec![Rational::zero()];
    for c in f.iter().rev() {
        out = dense_mul(&out, &line);
        out[0] += c;
    }
    out
}

fn validated_density(density: &RationalPolynomial, s: &Rational, d: &Rational, n: usize) -> Result<Vec<Rational>> {
    if !d.is_positive() {
        return domain("threshold must be positive");
    }
    // Validates one variable, exact unit mass and nonnegativity.
    ParentDistribution::polynomial(density, s.clone(), false)?;
    if n > MAX_POLY_ROBOTS {
        return capacity(format!("polynomial-parent pcon limited to n <= {MAX_POLY_ROBOTS}, got {n}"));
    }
    let degree = density.total_degree() * n as u32;
    if degree > MAX_POLY_DEGREE {
        return capacity(format!("joint density degree {degree} exceeds {MAX_POLY_DEGREE}"));
    }
    density.dense_coefficients()
}

/// Base slacks `d v_i` (first n slacks) and scale `s - d |v|` of the
/// compatible simplex for the exceedance pattern `mask` over the n+1
/// slacks, or `None` when it is empty.
fn compatible_simplex(mask: u64, s: &Rational, d: &Rational, n: usize) -> Option<(Vec<Rational>, Rational)> {
    let h = s - d * Rational::from_integer(mask.count_ones().into());
    if !h.is_positive() {
        return None;
    }
    let base = (0..n).map(|i| if mask >> i & 1 == 1 { d.clone() } else { Rational::zero() }).collect();
    Some((base, h))
}

fn sign(mask: u64) -> Rational {
    if mask.count_ones() % 2 == 0 {
        Rational::one()
    } else {
        -Rational::one()
    }
}

/// Exact connectivity probability for n iid robots with polynomial parent
/// density on `[0, s]`: inclusion-exclusion over the slacks exceeding `d`,
/// each term the joint density integrated over a compatible simplex.
///
/// Each simplex integral is computed in position coordinates as an ordered
/// iterated integral `n! h^n ∫_{0<=μ_1<=...<=μ_n<=1} Π f(B_i + h μ_i)`.
pub fn pcon_polynomial_parent(density: &RationalPolynomial, s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    let f = validated_density(density, s, d, n)?;
    match d_regime(s, d, n) {
        Regime::Full => return Ok(Rational::one()),
        Regime::Empty => return Ok(Rational::zero()),
        Regime::Partial => {}
    }
    let n_fact = Rational::from_integer(factorial(n as u64));
    let mut unfavorable = Rational::zero();
    let mut total = Rational::zero();
    for mask in 0u64..(1u64 << (n + 1)) {
        let Some((base, h)) = compatible_simplex(mask, s, d, n) else {
            continue;
        };
        let mut g = vec![Rational::one()];
        let mut offset = Rational::zero();
        for b in &base {
            offset += b;
            let integrand = dense_mul(&shifted(&f, &offset, &h), &g);
            g = std::iter::once(Rational::zero())
                .chain(integrand.iter().enumerate().map(|(k, c)| c / Rational::from_integer((k as u64 + 1).into())))
                .collect();
        }
        let mass = &n_fact * rational_pow(&h, n as u64) * dense_eval(&g, &Rational::one());
        if mask == 0 {
            total = mass;
        } else {
            unfavorable -= sign(mask) * mass;
        }
    }
    Ok(Rational::one() - unfavorable / total)
}

/// The same probability computed by expanding the joint density in slack
/// coordinates, `J(s) = n! Π f(s_1 + ... + s_i)`, and integrating it with
/// [`integrate_over_simplex`] over every compatible simplex. Much slower;
/// an independent route to [`pcon_polynomial_parent`].
pub fn pcon_polynomial_parent_expanded(
    density: &RationalPolynomial,
    s: &Rational,
    d: &Rational,
    n: usize,
) -> Result<Rational> {
    validated_density(density, s, d, n)?;
    match d_regime(s, d, n) {
        Regime::Full => return Ok(Rational::one()),
        Regime::Empty => return Ok(Rational::zero()),
        Regime::Partial => {}
    }
    let mut joint = RationalPolynomial::constant(n, Rational::from_integer(factorial(n as u64)));
    for i in 0..n {
        let prefix: Vec<Rational> = (0..n).map(|j| if j <= i { Rational::one() } else { Rational::zero() }).collect();
        let position = RationalPolynomial::affine(Rational::zero(), &prefix);
        joint = &joint * &density.compose(&[position])?;
    }
    let integrate = |base: &[Rational], h: &Rational| -> Result<Rational> {
        let mut vertices = vec![base.to_vec()];
        for i in 0..n {
            let mut v = base.to_vec();
            v[i] += h;
            vertices.push(v);
        }
        integrate_over_simplex(&joint, &SimplexND::new(vertices)?)
    };
    let total = integrate(&vec![Rational::zero(); n], s)?;
    let mut unfavorable = Rational::zero();
    for mask in 1u64..(1u64 << (n + 1)) {
        if let Some((base, h)) = compatible_simplex(mask, s, d, n) {
            unfavorable -= sign(mask) * integrate(&base, &h)?;
        }
    }
    Ok(Rational::one() - unfavorable / total)
}

/// Exact pcon for a Beta(a, b) parent rescaled to `[0, s]`.
pub fn beta_pcon(a: u32, b: u32, s: &Rational, d: &Rational, n: usize) -> Result<Rational> {
    pcon_polynomial_parent(&beta_to_polynomial(a, b, s)?, s, d, n)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::pcon_uniform;
    use crate::polynomial::monomial_canonical_integral;
    use crate::scalar::{int, rat};
    use proptest::prelude::*;

    fn unit_triangle() -> SimplexND {
        SimplexND::new(vec![vec![int(0), int(0)], vec![int(1), int(0)], vec![int(0), int(1)]]).unwrap()
    }

    #[test]
    fn monomial_table() {
        assert_eq!(monomial_canonical_integral(&[0, 0]), rat(1, 2));
        assert_eq!(monomial_canonical_integral(&[1, 1]), rat(1, 24));
        assert_eq!(monomial_canonical_integral(&[2, 0]), rat(1, 12));
    }

    #[test]
    fn triangle_examples() {
        let t = unit_triangle();
        assert_eq!(integrate_over_simplex(&RationalPolynomial::one(2), &t).unwrap(), rat(1, 2));
        assert_eq!(integrate_over_simplex(&RationalPolynomial::variable(2, 0), &t).unwrap(), rat(1, 6));
        let flat = SimplexND::new(vec![vec![int(0), int(0)], vec![int(1), int(1)], vec![int(1), int(1)]]).unwrap();
        let p = RationalPolynomial::affine(int(3), &[int(1), int(-2)]);
        assert_eq!(integrate_over_simplex(&p, &flat).unwrap(), int(0));
        assert!(integrate_over_simplex(&RationalPolynomial::one(3), &t).is_err());
        assert!(SimplexND::new(vec![vec![int(0)], vec![int(1)], vec![int(2)]]).is_err());
    }

    #[test]
    fn determinant_examples() {
        assert_eq!(determinant(vec![]), int(1));
        assert_eq!(determinant(vec![vec![int(0), int(1)], vec![int(1), int(0)]]), int(-1));
        assert_eq!(
            determinant(vec![vec![int(2), int(0), int(1)], vec![int(1), int(3), int(2)], vec![int(1), int(1), int(2)]]),
            int(6)
        );
    }

    /// Ordered iterated integral in one variable per coordinate, used as
    /// an oracle for the general simplex integral in two dimensions:
    /// `∫_0^1 ∫_0^{1-x} x^a y^b dy dx`.
    #[test]
    fn canonical_vs_iterated_two_dim() {
        for a in 0..5u32 {
            for b in 0..5u32 {
                // ∫ x^a (1-x)^{b+1}/(b+1) dx = a! (b+1)! / ((a+b+2)! (b+1))
                let expected = Rational::new(
                    factorial(a as u64) * factorial(b as u64 + 1),
                    factorial((a + b + 2) as u64) * num_bigint::BigInt::from(b + 1),
                );
                assert_eq!(monomial_canonical_integral(&[a, b]), expected);
            }
        }
    }

    #[test]
    fn pipeline_examples() {
        for n in 0..=6usize {
            for (s, d) in [(int(1), rat(2, 5)), (int(2), rat(3, 4)), (rat(3, 2), rat(1, 3))] {
                let uniform = RationalPolynomial::univariate(&[Rational::one() / &s]);
                assert_eq!(pcon_polynomial_parent(&uniform, &s, &d, n).unwrap(), pcon_uniform(&s, &d, n).unwrap());
            }
        }
        let two_x = RationalPolynomial::univariate(&[int(0), int(2)]);
        assert_eq!(pcon_polynomial_parent(&two_x, &int(1), &int(1), 4).unwrap(), int(1));
        assert_eq!(pcon_polynomial_parent(&two_x, &int(1), &rat(3, 5), 1).unwrap(), rat(1, 5));
        assert_eq!(beta_pcon(2, 1, &int(1), &rat(3, 5), 1).unwrap(), rat(1, 5));
        assert_eq!(beta_pcon(2, 2, &int(1), &int(1), 3).unwrap(), int(1));
        for n in 1..=4 {
            assert_eq!(beta_pcon(1, 1, &int(2), &rat(4, 5), n).unwrap(), pcon_uniform(&int(2), &rat(4, 5), n).unwrap());
        }
    }

    #[test]
    fn pipeline_errors() {
        let half = RationalPolynomial::univariate(&[rat(1, 2)]);
        assert!(matches!(pcon_polynomial_parent(&half, &int(1), &rat(1, 2), 2), Err(crate::Error::Domain(_))));
        let one = RationalPolynomial::univariate(&[int(1)]);
        assert!(matches!(pcon_polynomial_parent(&one, &int(1), &rat(1, 2), 11), Err(crate::Error::Capacity(_))));
        let quintic = crate::parents::beta_to_polynomial(6, 1, &int(1)).unwrap();
        assert!(matches!(pcon_polynomial_parent(&quintic, &int(1), &rat(1, 2), 9), Err(crate::Error::Capacity(_))));
        assert!(pcon_polynomial_parent(&quintic, &int(1), &rat(1, 2), 8).is_ok());
    }

    /// Single robot: connected iff `x ∈ [s - d, d]`, so pcon is the parent
    /// mass of that interval.
    #[test]
    fn single_robot_is_interval_mass() {
        let p = crate::parents::beta_to_polynomial(3, 2, &int(2)).unwrap();
        let cdf = p.antiderivative().unwrap().dense_coefficients().unwrap();
        for d in [rat(6, 5), rat(3, 2), rat(19, 10)] {
            let expected = dense_eval(&cdf, &d) - dense_eval(&cdf, &(int(2) - &d));
            assert_eq!(pcon_polynomial_parent(&p, &int(2), &d, 1).unwrap(), expected);
        }
    }

    #[test]
    fn routes_agree() {
        let densities = [
            crate::parents::beta_to_polynomial(2, 3, &int(1)).unwrap(),
            crate::parents::beta_to_polynomial(3, 1, &rat(3, 2)).unwrap(),
            RationalPolynomial::univariate(&[rat(1, 2), int(0), rat(3, 2)]),
        ];
        let supports = [int(1), rat(3, 2), int(1)];
        for (f, s) in densities.iter().zip(&supports) {
            for n in 1..=4usize {
                for d in [s * rat(1, 3), s * rat(3, 5), s * rat(7, 8)] {
                    assert_eq!(
                        pcon_polynomial_parent(f, s, &d, n).unwrap(),
                        pcon_polynomial_parent_expanded(f, s, &d, n).unwrap(),
                        "n={n} d={d}"
                    );
                }
            }
        }
    }

    fn rational() -> impl Strategy<Value = Rational> {
        (-6i64..7, 1i64..5).prop_map(|(p, q)| rat(p, q))
    }

    fn simplex(dim: usize) -> impl Strategy<Value = SimplexND> {
        prop::collection::vec(prop::collection::vec(rational(), dim), dim + 1)
            .prop_map(|v| SimplexND::new(v).unwrap())
    }

    fn poly(dim: usize) -> impl Strategy<Value = RationalPolynomial> {
        prop::collection::vec((prop::collection::vec(0u32..3, dim), rational()), 1..5)
            .prop_map(move |terms| RationalPolynomial::from_terms(dim, terms).unwrap())
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn constant_integrates_to_volume(t in (1usize..7).prop_flat_map(simplex)) {
            let dim = t.dim();
            prop_assert_eq!(integrate_over_simplex(&RationalPolynomial::one(dim), &t).unwrap(), t.volume());
        }

        #[test]
        fn integral_is_linear(t in simplex(3), p in poly(3), q in poly(3)) {
            let lhs = integrate_over_simplex(&(&p + &q), &t).unwrap();
            let rhs = integrate_over_simplex(&p, &t).unwrap() + integrate_over_simplex(&q, &t).unwrap();
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn canonical_vertices_match_direct(p in poly(4)) {
            let t = SimplexND::canonical(4, &int(1));
            prop_assert_eq!(integrate_over_simplex(&p, &t).unwrap(), p.integrate_canonical_simplex());
        }

        #[test]
        fn vertex_order_is_irrelevant(t in simplex(2), p in poly(2)) {
            let mut v = t.vertices().to_vec();
            v.rotate_left(1);
            let rotated = SimplexND::new(v).unwrap();
            prop_assert_eq!(integrate_over_simplex(&p, &t).unwrap(), integrate_over_simplex(&p, &rotated).unwrap());
        }
    }
}
