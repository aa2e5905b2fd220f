//! Sparse multivariate polynomials with exact rational coefficients.

use std::collections::BTreeMap;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::scalar::{factorial, serde_rational, Rational};

pub type Exponents = Vec<u32>;

/// Map from exponent vector to nonzero coefficient. Every key has exactly
/// `vars` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RationalPolynomial {
    vars: usize,
    terms: BTreeMap<Exponents, Rational>,
}

impl RationalPolynomial {
    pub fn zero(vars: usize) -> Self {
        Self { vars, terms: BTreeMap::new() }
    }

    pub fn constant(vars: usize, c: Rational) -> Self {
        let mut p = Self::zero(vars);
        p.add_term(vec![0; vars], c);
        p
    }

    pub fn one(vars: usize) -> Self {
        Self::constant(vars, Rational::one())
    }

    /// The coordinate function `x_var`.
    pub fn variable(vars: usize, var: usize) -> Self {
        let mut exp = vec![0; vars];
        exp[var] = 1;
        Self::monomial(exp, Rational::one())
    }

    pub fn monomial(exp: Exponents, coef: Rational) -> Self {
        let mut p = Self::zero(exp.len());
        p.add_term(exp, coef);
        p
    }

    /// `c_0 + c_1 x + ...` in one variable.
    pub fn univariate(coeffs: &[Rational]) -> Self {
        let mut p = Self::zero(1);
        for (k, c) in coeffs.iter().enumerate() {
            p.add_term(vec![k as u32], c.clone());
        }
        p
    }

    /// `c + sum_i a_i x_i`.
    pub fn affine(constant: Rational, linear: &[Rational]) -> Self {
        let vars = linear.len();
        let mut p = Self::constant(vars, constant);
        for (i, a) in linear.iter().enumerate() {
            let mut exp = vec![0; vars];
            exp[i] = 1;
            p.add_term(exp, a.clone());
        }
        p
    }

    pub fn from_terms(vars: usize, terms: impl IntoIterator<Item = (Exponents, Rational)>) -> Result<Self> {
        let mut p = Self::zero(vars);
        for (exp, c) in terms {
            if exp.len() != vars {
                return domain(format!("exponent vector {exp:?} does not have {vars} entries"));
            }
            p.add_term(exp, c);
        }
        Ok(p)
    }

    pub fn vars(&self) -> usize {
        self.vars
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Exponents, &Rational)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coefficient(&self, exp: &[u32]) -> Rational {
        self.terms.get(exp).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn total_degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, var: usize) -> u32 {
        self.terms.keys().map(|e| e[var]).max().unwrap_or(0)
    }

    fn add_term(&mut self, exp: Exponents, c: Rational) {
        debug_assert_eq!(exp.len(), self.vars);
        if c.is_zero() {
            return;
        }
        match self.terms.entry(exp) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return Self::zero(self.vars);
        }
        Self {
            vars: self.vars,
            terms: self.terms.iter().map(|(e, v)| (e.clone(), v * c)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut acc = Self::one(self.vars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                acc = &acc * &base;
            }
            k >>= 1;
            if k > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    pub fn eval(&self, point: &[Rational]) -> Rational {
        assert_eq!(point.len(), self.vars, "evaluation point has wrong dimension");
        self.terms
            .iter()
            .map(|(e, c)| {
                e.iter()
                    .zip(point)
                    .fold(c.clone(), |acc, (k, x)| acc * num_traits::pow(x.clone(), *k as usize))
            })
            .fold(Rational::zero(), |a, b| a + b)
    }

    pub fn eval_f64(&self, point: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let c = crate::scalar::Scalar::to_f64(c);
                e.iter().zip(point).fold(c, |acc, (k, x)| acc * x.powi(*k as i32))
            })
            .sum()
    }

    /// Substitutes `x_i -> subs[i]`; all substitutes share one variable
    /// count. Powers of each substitute are computed once and reused.
    pub fn compose(&self, subs: &[RationalPolynomial]) -> Result<Self> {
        if subs.len() != self.vars {
            return domain(format!("need {} substitutes, got {}", self.vars, subs.len()));
        }
        let out_vars = subs.first().map_or(0, |p| p.vars);
        if subs.iter().any(|p| p.vars != out_vars) {
            return domain("substitutes disagree on variable count");
        }
        let mut tables: Vec<PowerTable> = subs.iter().map(PowerTable::new).collect();
        let mut out = Self::zero(out_vars);
        for (exp, c) in &self.terms {
            let mut term = Self::constant(out_vars, c.clone());
            for (var, k) in exp.iter().enumerate() {
                if *k > 0 {
                    term = &term * tables[var].power(*k);
                }
            }
            out = &out + &term;
        }
        Ok(out)
    }

    /// Exact integral over the canonical simplex
    /// `{x >= 0, x_1 + ... + x_n <= 1}`.
    pub fn integrate_canonical_simplex(&self) -> Rational {
        let n = self.vars as u64;
        let mut cache: BTreeMap<u64, num_bigint::BigInt> = BTreeMap::new();
        let mut fact = |k: u64| cache.entry(k).or_insert_with(|| factorial(k)).clone();
        let mut total = Rational::zero();
        for (exp, c) in &self.terms {
            let num = exp.iter().fold(num_bigint::BigInt::one(), |acc, m| acc * fact(*m as u64));
            let deg: u64 = exp.iter().map(|m| *m as u64).sum();
            total += c * Rational::new(num, fact(n + deg));
        }
        total
    }

    /// Univariate antiderivative vanishing at zero.
    pub fn antiderivative(&self) -> Result<Self> {
        if self.vars != 1 {
            return domain("antiderivative is only defined for univariate polynomials");
        }
        let mut out = Self::zero(1);
        for (e, c) in &self.terms {
            out.add_term(vec![e[0] + 1], c / Rational::from_integer((e[0] + 1).into()));
        }
        Ok(out)
    }

    /// Dense coefficient list of a univariate polynomial.
    pub fn dense_coefficients(&self) -> Result<Vec<Rational>> {
        if self.vars != 1 {
            return domain("dense coefficients need a univariate polynomial");
        }
        let mut out = vec![Rational::zero(); self.degree_in(0) as usize + 1];
        for (e, c) in &self.terms {
            out[e[0] as usize] = c.clone();
        }
        Ok(out)
    }
}

/// Lazily extended list of powers `p^0, p^1, ...`.
struct PowerTable {
    powers: Vec<RationalPolynomial>,
}

impl PowerTable {
    fn new(p: &RationalPolynomial) -> Self {
        Self { powers: vec![RationalPolynomial::one(p.vars), p.clone()] }
    }

    fn power(&mut self, k: u32) -> &RationalPolynomial {
        while self.powers.len() <= k as usize {
            let next = &self.powers[self.powers.len() - 1] * &self.powers[1];
            self.powers.push(next);
        }
        &self.powers[k as usize]
    }
}

/// Exact factor `prod m_i! / (n + sum m_i)!` for a monomial over the
/// canonical `n`-simplex.
pub fn monomial_canonical_integral(exponents: &[u32]) -> Rational {
    let num = exponents
        .iter()
        .fold(num_bigint::BigInt::one(), |acc, m| acc * factorial(*m as u64));
    let deg: u64 = exponents.iter().map(|m| *m as u64).sum();
    Rational::new(num, factorial(exponents.len() as u64 + deg))
}

impl Add for &RationalPolynomial {
    type Output = RationalPolynomial;
    fn add(self, rhs: Self) -> RationalPolynomial {
        assert_eq!(self.vars, rhs.vars, "variable count mismatch");
        let mut out = self.clone();
        for (e, c) in &rhs.terms {
            out.add_term(e.clone(), c.clone());
        }
        out
    }
}

impl Neg for &RationalPolynomial {
    type Output = RationalPolynomial;
    fn neg(self) -> RationalPolynomial {
        self.scale(&-Rational::one())
    }
}

impl Sub for &RationalPolynomial {
    type Output = RationalPolynomial;
    fn sub(self, rhs: Self) -> RationalPolynomial {
        self + &(-rhs)
    }
}

impl Mul for &RationalPolynomial {
    type Output = RationalPolynomial;
    fn mul(self, rhs: Self) -> RationalPolynomial {
        assert_eq!(self.vars, rhs.vars, "variable count mismatch");
        let mut out = RationalPolynomial::zero(self.vars);
        for (ea, ca) in &self.terms {
            for (eb, cb) in &rhs.terms {
                let exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                out.add_term(exp, ca * cb);
            }
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermJson {
    exp: Vec<u32>,
    #[serde(with = "serde_rational")]
    coef: Rational,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolynomialJson {
    vars: usize,
    terms: Vec<TermJson>,
}

impl Serialize for RationalPolynomial {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PolynomialJson {
            vars: self.vars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| TermJson { exp: e.clone(), coef: c.clone() })
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RationalPolynomial {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = PolynomialJson::deserialize(d)?;
        RationalPolynomial::from_terms(raw.vars, raw.terms.into_iter().map(|t| (t.exp, t.coef)))
            .map_err(serde::de::Error::custom)
    }
}
