//! Sparse multivariate polynomials with real coefficients.
//!
//! A [`Polynomial`] stores a map from exponent vectors ([`MultiIndex`]) to
//! nonzero coefficients. Zero coefficients are never stored, so the empty map
//! is the zero polynomial. Variable indices are zero-based throughout.
//!
//! The structural quantities used by the regularity bounds are:
//! - [`Polynomial::degree`], the maximal total degree `d[f]`;
//! - [`Polynomial::leading_magnitude`], the largest absolute coefficient
//!   among the top-degree monomials `a[f]`, with a witness monomial;
//! - [`Polynomial::max_var_power`], the largest power of any single variable.

use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Exponent vector `(j_1, ..., j_n)` of a monomial.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        MultiIndex(exponents)
    }

    pub fn zero(n: usize) -> Self {
        MultiIndex(vec![0; n])
    }

    /// Unit vector `e_i`.
    pub fn unit(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        MultiIndex(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total_degree(&self) -> usize {
        self.0.iter().map(|&j| j as usize).sum()
    }

    pub fn max_power(&self) -> u32 {
        self.0.iter().copied().max().unwrap_or(0)
    }

    /// Product of the factorials of the exponents.
    pub fn factorial_product(&self) -> f64 {
        self.0
            .iter()
            .map(|&j| (1..=j).map(f64::from).product::<f64>())
            .product()
    }

    fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    fn without(&self, i: usize) -> MultiIndex {
        let mut e = self.0.clone();
        e.remove(i);
        MultiIndex(e)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

/// Sparse polynomial in `n` real variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialDoc", into = "PolynomialDoc")]
pub struct Polynomial {
    n: usize,
    terms: BTreeMap<MultiIndex, f64>,
}

/// On-disk shape: `{"n": 2, "terms": [{"exp": [1, 2], "coef": 3.0}]}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct PolynomialDoc {
    n: usize,
    terms: Vec<TermDoc>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct TermDoc {
    exp: Vec<u32>,
    coef: f64,
}

impl TryFrom<PolynomialDoc> for Polynomial {
    type Error = Error;

    fn try_from(doc: PolynomialDoc) -> Result<Self> {
        Polynomial::new(doc.n, doc.terms.into_iter().map(|t| (t.exp, t.coef)))
    }
}

impl From<Polynomial> for PolynomialDoc {
    fn from(p: Polynomial) -> Self {
        PolynomialDoc {
            n: p.n,
            terms: p
                .terms
                .into_iter()
                .map(|(e, c)| TermDoc { exp: e.0, coef: c })
                .collect(),
        }
    }
}

impl Polynomial {
    /// Builds a polynomial from `(exponents, coefficient)` pairs. Repeated
    /// exponent vectors are summed and zero coefficients dropped.
    pub fn new<I, E>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (E, f64)>,
        E: Into<Vec<u32>>,
    {
        if n == 0 {
            return Err(Error::invalid("polynomial dimension must be positive"));
        }
        let mut p = Polynomial::zero(n);
        for (exp, coef) in terms {
            let exp: Vec<u32> = exp.into();
            if exp.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: exp.len(),
                });
            }
            if !coef.is_finite() {
                return Err(Error::invalid(format!("non-finite coefficient {coef}")));
            }
            p.add_term(MultiIndex(exp), coef);
        }
        Ok(p)
    }

    pub fn zero(n: usize) -> Self {
        Polynomial {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(n: usize, c: f64) -> Self {
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::zero(n), c);
        p
    }

    /// The coordinate polynomial `x_i`.
    pub fn var(n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let mut p = Polynomial::zero(n);
        p.add_term(MultiIndex::unit(n, i), 1.0);
        Ok(p)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("polynomial serialization is infallible")
    }

    fn add_term(&mut self, exp: MultiIndex, coef: f64) {
        if coef == 0.0 {
            return;
        }
        match self.terms.entry(exp) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    /// Terms in increasing lexicographic order of exponents.
    pub fn terms(&self) -> impl Iterator<Item = (&MultiIndex, f64)> {
        self.terms.iter().map(|(e, &c)| (e, c))
    }

    pub fn coefficient(&self, exp: &[u32]) -> f64 {
        self.terms
            .get(&MultiIndex(exp.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total degree `d[f]`.
    pub fn degree(&self) -> Result<usize> {
        self.terms
            .keys()
            .map(MultiIndex::total_degree)
            .max()
            .ok_or(Error::ZeroPolynomial)
    }

    /// `a[f]` together with a monomial attaining it. Among several maximizers
    /// the lexicographically largest exponent vector is returned.
    pub fn leading_magnitude(&self) -> Result<(f64, MultiIndex)> {
        let d = self.degree()?;
        let mut best: Option<(f64, &MultiIndex)> = None;
        // BTreeMap iterates in increasing order, so `>=` keeps the largest key on ties.
        for (e, &c) in &self.terms {
            if e.total_degree() != d {
                continue;
            }
            match best {
                Some((b, _)) if c.abs() < b => {}
                _ => best = Some((c.abs(), e)),
            }
        }
        let (a, e) = best.expect("a nonzero polynomial has a top-degree term");
        Ok((a, e.clone()))
    }

    /// Largest power with which any single variable enters.
    pub fn max_var_power(&self) -> Result<usize> {
        self.terms
            .keys()
            .map(|e| e.max_power() as usize)
            .max()
            .ok_or(Error::ZeroPolynomial)
    }

    /// Whether `f` is non-constant and belongs to the class with per-variable
    /// powers at most `m` and degree at most `d`.
    pub fn in_class(&self, params: &ClassParams) -> bool {
        self.n == params.n
            && matches!(self.degree(), Ok(deg) if deg >= 1 && deg <= params.d)
            && matches!(self.max_var_power(), Ok(p) if p <= params.m)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        Ok(self
            .terms
            .iter()
            .map(|(e, &c)| {
                c * e
                    .0
                    .iter()
                    .zip(x)
                    .map(|(&j, &xi)| xi.powi(j as i32))
                    .product::<f64>()
            })
            .sum())
    }

    pub fn scale(&self, alpha: f64) -> Result<Polynomial> {
        if alpha == 0.0 {
            return Err(Error::ZeroScale);
        }
        if !alpha.is_finite() {
            return Err(Error::invalid("scale factor must be finite"));
        }
        let mut out = Polynomial::zero(self.n);
        for (e, &c) in &self.terms {
            out.add_term(e.clone(), alpha * c);
        }
        Ok(out)
    }

    pub fn add(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut out = self.clone();
        for (e, &c) in &other.terms {
            out.add_term(e.clone(), c);
        }
        Ok(out)
    }

    pub fn multiply(&self, other: &Polynomial) -> Result<Polynomial> {
        self.check_dim(other)?;
        let mut acc: BTreeMap<MultiIndex, f64> = BTreeMap::new();
        for (ea, &ca) in &self.terms {
            for (eb, &cb) in &other.terms {
                *acc.entry(ea.add(eb)).or_insert(0.0) += ca * cb;
            }
        }
        acc.retain(|_, c| *c != 0.0);
        Ok(Polynomial {
            n: self.n,
            terms: acc,
        })
    }

    /// Formal derivative with respect to `x_i`.
    pub fn partial_derivative(&self, i: usize) -> Result<Polynomial> {
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        let mut out = Polynomial::zero(self.n);
        for (e, &c) in &self.terms {
            let j = e.0[i];
            if j == 0 {
                continue;
            }
            let mut de = e.clone();
            de.0[i] -= 1;
            out.add_term(de, c * f64::from(j));
        }
        Ok(out)
    }

    /// Writes `f(x) = sum_j f_j(x without x_i) * x_i^j` and returns
    /// `(f_0, ..., f_p)` with `p` the largest power of `x_i`. Every `f_j`
    /// lives in `n - 1` variables; some may be zero.
    pub fn restrict_var(&self, i: usize) -> Result<Vec<Polynomial>> {
        if self.n < 2 {
            return Err(Error::DimensionTooSmall { n: self.n });
        }
        if i >= self.n {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n,
            });
        }
        let top = self.terms.keys().map(|e| e.0[i]).max().unwrap_or(0) as usize;
        let mut parts = vec![Polynomial::zero(self.n - 1); top + 1];
        for (e, &c) in &self.terms {
            parts[e.0[i] as usize].add_term(e.without(i), c);
        }
        Ok(parts)
    }

    fn check_dim(&self, other: &Polynomial) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: other.n,
            });
        }
        Ok(())
    }

    /// Flattened form for fast repeated evaluation.
    pub fn compile(&self) -> CompiledPolynomial {
        let max_pow = self.terms.keys().map(|e| e.max_power()).max().unwrap_or(0) as usize;
        let terms = self
            .terms
            .iter()
            .map(|(e, &c)| {
                let factors = e
                    .0
                    .iter()
                    .enumerate()
                    .filter(|(_, &j)| j > 0)
                    .map(|(v, &j)| (v, j as usize))
                    .collect();
                (c, factors)
            })
            .collect();
        CompiledPolynomial {
            n: self.n,
            max_pow,
            terms,
        }
    }
}

impl fmt::Display for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (e, &c)) in self.terms.iter().rev().enumerate() {
            if k > 0 {
                write!(f, " {} ", if c < 0.0 { '-' } else { '+' })?;
            } else if c < 0.0 {
                write!(f, "-")?;
            }
            let mono: Vec<String> = e
                .0
                .iter()
                .enumerate()
                .filter(|(_, &j)| j > 0)
                .map(|(v, &j)| {
                    if j == 1 {
                        format!("x{}", v + 1)
                    } else {
                        format!("x{}^{}", v + 1, j)
                    }
                })
                .collect();
            if mono.is_empty() {
                write!(f, "{}", c.abs())?;
            } else if c.abs() == 1.0 {
                write!(f, "{}", mono.join("*"))?;
            } else {
                write!(f, "{}*{}", c.abs(), mono.join("*"))?;
            }
        }
        Ok(())
    }
}

/// Term list with precomputed variable/power pairs.
#[derive(Clone, Debug)]
pub struct CompiledPolynomial {
    n: usize,
    max_pow: usize,
    terms: Vec<(f64, Vec<(usize, usize)>)>,
}

impl CompiledPolynomial {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Evaluates at `x`; `powers` is scratch space reused across calls.
    pub fn eval_with(&self, x: &[f64], powers: &mut Vec<f64>) -> f64 {
        let stride = self.max_pow + 1;
        powers.resize(self.n * stride, 1.0);
        for (v, &xv) in x.iter().enumerate() {
            let row = &mut powers[v * stride..(v + 1) * stride];
            row[0] = 1.0;
            for k in 1..stride {
                row[k] = row[k - 1] * xv;
            }
        }
        self.terms
            .iter()
            .map(|(c, factors)| {
                factors
                    .iter()
                    .fold(*c, |acc, &(v, j)| acc * powers[v * stride + j])
            })
            .sum()
    }
}

/// The polynomial class: `n` variables, each to power at most `m`, total
/// degree at most `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassParams {
    pub n: usize,
    pub m: usize,
    pub d: usize,
}

impl ClassParams {
    pub fn new(n: usize, m: usize, d: usize) -> Result<Self> {
        let p = ClassParams { n, m, d };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::invalid("class dimension n must be at least 1"));
        }
        if self.m == 0 || self.m > self.d {
            return Err(Error::invalid(format!(
                "class needs 1 <= m <= d, got m = {}, d = {}",
                self.m, self.d
            )));
        }
        Ok(())
    }

    /// Largest degree reachable in the class, `min(d, n m)`.
    pub fn reachable_degree(&self) -> usize {
        self.d.min(self.n * self.m)
    }
}

/// How [`random_in_class`] draws coefficients.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientLaw {
    /// Coefficients are uniform on `[-spread, spread]` before normalization.
    pub spread: f64,
    /// Upper bound on the number of monomials drawn.
    pub max_terms: usize,
    /// Rescale so that `a[f] = 1`.
    pub normalize: bool,
}

impl Default for CoefficientLaw {
    fn default() -> Self {
        CoefficientLaw {
            spread: 1.0,
            max_terms: 6,
            normalize: true,
        }
    }
}

/// Draws a non-constant polynomial from the class. Always contains at least
/// one monomial of the largest reachable degree; deterministic in `seed`.
pub fn random_in_class(params: &ClassParams, seed: u64, law: &CoefficientLaw) -> Result<Polynomial> {
    params.validate()?;
    if law.max_terms == 0 || !(law.spread > 0.0) {
        return Err(Error::invalid("coefficient law needs max_terms >= 1 and spread > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let top = params.reachable_degree();
    loop {
        let extra = rng.random_range(0..law.max_terms);
        let mut terms = Vec::with_capacity(extra + 1);
        terms.push((random_monomial(params, top, &mut rng), draw_coef(law, &mut rng)));
        for _ in 0..extra {
            let k = rng.random_range(0..=top);
            terms.push((random_monomial(params, k, &mut rng), draw_coef(law, &mut rng)));
        }
        let p = Polynomial::new(params.n, terms)?;
        // Collisions can cancel the forced top-degree term; redraw in that case.
        if p.degree().map_or(true, |d| d == 0) {
            continue;
        }
        if law.normalize {
            let (a, _) = p.leading_magnitude()?;
            return p.scale(1.0 / a);
        }
        return Ok(p);
    }
}

fn draw_coef(law: &CoefficientLaw, rng: &mut ChaCha8Rng) -> f64 {
    loop {
        let c = rng.random_range(-law.spread..=law.spread);
        // keep away from zero so normalization stays well conditioned
        if c.abs() >= 0.05 * law.spread {
            return c;
        }
    }
}

/// Spreads `k` units over `n` variables, each capped at `m`.
fn random_monomial(params: &ClassParams, k: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut e = vec![0u32; params.n];
    let mut order: Vec<usize> = (0..params.n).collect();
    for _ in 0..k {
        order.shuffle(rng);
        if let Some(&v) = order.iter().find(|&&v| (e[v] as usize) < params.m) {
            e[v] += 1;
        }
    }
    e
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(n: usize, terms: &[(&[u32], f64)]) -> Polynomial {
        Polynomial::new(n, terms.iter().map(|(e, c)| (e.to_vec(), *c))).unwrap()
    }

    #[test]
    fn degree_examples() {
        let f = p(2, &[(&[2, 1], 3.0), (&[1, 2], 1.0), (&[0, 1], -5.0)]);
        assert_eq!(f.degree().unwrap(), 3);
        assert_eq!(Polynomial::constant(3, 7.0).degree().unwrap(), 0);
        assert_eq!(p(3, &[(&[1, 1, 1], 1.0)]).degree().unwrap(), 3);
        assert!(matches!(Polynomial::zero(2).degree(), Err(Error::ZeroPolynomial)));
    }

    #[test]
    fn leading_magnitude_examples() {
        let f = p(2, &[(&[2, 1], 3.0), (&[1, 2], 1.0), (&[0, 1], -5.0)]);
        let (a, w) = f.leading_magnitude().unwrap();
        assert_eq!(a, 3.0);
        assert_eq!(w.exponents(), &[2, 1]);

        let g = p(2, &[(&[1, 0], 1.0), (&[0, 1], -1.0)]);
        let (a, w) = g.leading_magnitude().unwrap();
        assert_eq!(a, 1.0);
        assert_eq!(w.exponents(), &[1, 0]);

        let h = p(1, &[(&[3], 0.5), (&[1], 10.0)]);
        let (a, w) = h.leading_magnitude().unwrap();
        assert_eq!(a, 0.5);
        assert_eq!(w.exponents(), &[3]);

        let (a, w) = Polynomial::constant(2, -4.0).leading_magnitude().unwrap();
        assert_eq!(a, 4.0);
        assert_eq!(w.exponents(), &[0, 0]);
    }

    #[test]
    fn max_var_power_examples() {
        assert_eq!(p(2, &[(&[2, 1], 1.0)]).max_var_power().unwrap(), 2);
        assert_eq!(p(3, &[(&[1, 1, 1], 1.0)]).max_var_power().unwrap(), 1);
        assert_eq!(Polynomial::constant(2, 1.0).max_var_power().unwrap(), 0);
    }

    #[test]
    fn evaluate_examples() {
        assert_eq!(p(2, &[(&[1, 2], 1.0)]).evaluate(&[2.0, 3.0]).unwrap(), 18.0);
        let f = p(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0), (&[0, 0], 4.5)]);
        assert_eq!(f.evaluate(&[0.0, 0.0]).unwrap(), 4.5);
        let g = p(2, &[(&[2, 0], 1.0), (&[0, 2], 1.0)]);
        assert_eq!(g.evaluate(&[3.0, 4.0]).unwrap(), 25.0);
        assert!(matches!(
            g.evaluate(&[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
    }

    #[test]
    fn scale_examples() {
        let f = p(2, &[(&[1, 1], 1.0)]);
        let g = f.scale(2.0).unwrap();
        assert_eq!(g.coefficient(&[1, 1]), 2.0);
        assert_eq!(g.leading_magnitude().unwrap().0, 2.0);
        assert_eq!(f.scale(1.0).unwrap(), f);
        let h = p(1, &[(&[2], 1.0), (&[0], -1.0)]).scale(-1.0).unwrap();
        assert_eq!(h, p(1, &[(&[0], 1.0), (&[2], -1.0)]));
        assert_eq!(h.leading_magnitude().unwrap().0, 1.0);
        assert!(matches!(f.scale(0.0), Err(Error::ZeroScale)));
    }

    #[test]
    fn multiply_examples() {
        let x1 = p(1, &[(&[1], 1.0)]);
        assert_eq!(x1.multiply(&x1).unwrap(), p(1, &[(&[2], 1.0)]));
        let a = p(2, &[(&[1, 0], 1.0), (&[0, 1], 1.0)]);
        let b = p(2, &[(&[1, 0], 1.0), (&[0, 1], -1.0)]);
        // the cross terms cancel and must not be stored
        let prod = a.multiply(&b).unwrap();
        assert_eq!(prod, p(2, &[(&[2, 0], 1.0), (&[0, 2], -1.0)]));
        assert_eq!(prod.num_terms(), 2);
        assert_eq!(a.multiply(&Polynomial::constant(2, 1.0)).unwrap(), a);
        assert!(a.multiply(&x1).is_err());
    }

    #[test]
    fn derivative_examples() {
        let f = p(2, &[(&[2, 1], 1.0)]);
        assert_eq!(f.partial_derivative(0).unwrap(), p(2, &[(&[1, 1], 2.0)]));
        assert!(p(2, &[(&[0, 3], 1.0)]).partial_derivative(0).unwrap().is_zero());
        let g = p(2, &[(&[2, 1], 3.0)]);
        let full = g
            .partial_derivative(0)
            .and_then(|h| h.partial_derivative(0))
            .and_then(|h| h.partial_derivative(1))
            .unwrap();
        assert_eq!(full, Polynomial::constant(2, 6.0));
        let (a, w) = g.leading_magnitude().unwrap();
        assert_eq!(full.coefficient(&[0, 0]), w.factorial_product() * a);
        assert!(matches!(g.partial_derivative(2), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn restriction_examples() {
        let f = p(2, &[(&[1, 2], 1.0), (&[2, 0], 1.0)]);
        let parts = f.restrict_var(1).unwrap();
        assert_eq!(parts.len(), 3);
        assert_eq!(parts[0], p(1, &[(&[2], 1.0)]));
        assert!(parts[1].is_zero());
        assert_eq!(parts[2], p(1, &[(&[1], 1.0)]));

        let g = p(2, &[(&[1, 1], 1.0)]);
        let parts = g.restrict_var(1).unwrap();
        assert!(parts[0].is_zero());
        assert_eq!(parts[1], p(1, &[(&[1], 1.0)]));
        assert_eq!(parts[1].leading_magnitude().unwrap().0, 1.0);

        let h = p(2, &[(&[2, 1], 3.0), (&[0, 3], 1.0)]);
        let (a, w) = h.leading_magnitude().unwrap();
        assert_eq!((a, w.exponents()), (3.0, &[2u32, 1][..]));
        let parts = h.restrict_var(1).unwrap();
        assert_eq!(parts.len(), 4);
        assert_eq!(parts[1], p(1, &[(&[2], 3.0)]));
        assert_eq!(parts[3], Polynomial::constant(1, 1.0));
        assert_eq!(parts[1].leading_magnitude().unwrap().0, a);
        assert!(parts[1].degree().unwrap() <= h.degree().unwrap() - 1);

        assert!(matches!(
            p(1, &[(&[1], 1.0)]).restrict_var(0),
            Err(Error::DimensionTooSmall { n: 1 })
        ));
        assert!(matches!(h.restrict_var(5), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn random_draws_are_deterministic_and_in_class() {
        let params = ClassParams::new(2, 1, 2).unwrap();
        let law = CoefficientLaw::default();
        let a = random_in_class(&params, 17, &law).unwrap();
        let b = random_in_class(&params, 17, &law).unwrap();
        assert_eq!(a, b);
        for seed in 0..200 {
            let params = ClassParams::new(1 + (seed as usize % 4), 1 + (seed as usize % 3), 6).unwrap();
            let f = random_in_class(&params, seed, &law).unwrap();
            assert!(f.in_class(&params), "{f} not in {params:?}");
            assert!((f.leading_magnitude().unwrap().0 - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn class_params_validation() {
        assert!(ClassParams::new(0, 1, 1).is_err());
        assert!(ClassParams::new(2, 3, 2).is_err());
        assert!(ClassParams::new(2, 0, 2).is_err());
    }

    #[test]
    fn json_format() {
        let f = Polynomial::from_json(r#"{"n": 2, "terms": [{"exp": [1, 2], "coef": 3.0}, {"exp": [0, 0], "coef": -1}]}"#)
            .unwrap();
        assert_eq!(f.coefficient(&[1, 2]), 3.0);
        assert_eq!(Polynomial::from_json(&f.to_json()).unwrap(), f);
        assert!(Polynomial::from_json(r#"{"n": 2, "terms": [{"exp": [1], "coef": 1.0}]}"#).is_err());
        assert!(Polynomial::from_json(r#"{"n": 2, "terms": [{"exp": [1, -1], "coef": 1.0}]}"#).is_err());
    }

    #[test]
    fn compiled_matches_evaluate() {
        let f = p(3, &[(&[2, 1, 0], 3.0), (&[0, 0, 3], -0.5), (&[0, 0, 0], 2.0)]);
        let c = f.compile();
        let mut scratch = Vec::new();
        let x = [0.3, -1.7, 2.2];
        assert!((c.eval_with(&x, &mut scratch) - f.evaluate(&x).unwrap()).abs() < 1e-12);
    }
}
