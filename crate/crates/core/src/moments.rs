//! Exact moments of `f(X)` for a standard Gaussian vector `X`.
//!
//! Two independent routes compute the variance: expanding `f^2` into
//! monomials and applying Gaussian moments coordinate-wise, and changing
//! basis to orthonormal Hermite polynomials where the variance is the sum
//! of squared non-constant coefficients.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::poly::{MultiIndex, Polynomial};

/// `E[Z^k]` for `Z ~ N(0, 1)`: `(k - 1)!!` for even `k`, zero otherwise.
pub fn gaussian_moment(k: u32) -> f64 {
    if k % 2 == 1 {
        return 0.0;
    }
    (1..k).step_by(2).map(f64::from).product()
}

pub fn expectation(f: &Polynomial) -> f64 {
    f.terms()
        .map(|(e, c)| {
            c * e
                .exponents()
                .iter()
                .map(|&j| gaussian_moment(j))
                .product::<f64>()
        })
        .sum()
}

/// Raw values of `E f^2 - (E f)^2` slightly below zero are treated as roundoff.
const ROUNDOFF_FLOOR: f64 = -1e-9;

/// Variance by the moment method, clipped at zero.
pub fn variance(f: &Polynomial) -> f64 {
    let mean = expectation(f);
    let sq = f.multiply(f).expect("a polynomial has its own dimension");
    let raw = expectation(&sq) - mean * mean;
    if raw < 0.0 {
        if raw < ROUNDOFF_FLOOR * (1.0 + expectation(&sq).abs()) {
            eprintln!("warning: variance {raw:e} is negative beyond roundoff; clipping to 0");
        }
        return 0.0;
    }
    raw
}

/// Coefficients of `f` in the basis `prod_i h_{k_i}(x_i)` with
/// `h_k = He_k / sqrt(k!)` the orthonormal probabilists' Hermite polynomials.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HermiteExpansion {
    pub n: usize,
    pub coeffs: BTreeMap<MultiIndex, f64>,
}

impl HermiteExpansion {
    pub fn mean(&self) -> f64 {
        self.coeffs
            .get(&MultiIndex::zero(self.n))
            .copied()
            .unwrap_or(0.0)
    }

    /// `E f^2` by Parseval.
    pub fn second_moment(&self) -> f64 {
        self.coeffs.values().map(|c| c * c).sum()
    }

    pub fn variance(&self) -> f64 {
        self.coeffs
            .iter()
            .filter(|(k, _)| k.total_degree() > 0)
            .map(|(_, c)| c * c)
            .sum()
    }

    pub fn coefficient(&self, k: &[u32]) -> f64 {
        self.coeffs
            .get(&MultiIndex::new(k.to_vec()))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: x.len(),
            });
        }
        let top = self.coeffs.keys().map(MultiIndex::max_power).max().unwrap_or(0);
        let tables: Vec<Vec<f64>> = x.iter().map(|&xi| hermite_values(xi, top)).collect();
        Ok(self
            .coeffs
            .iter()
            .map(|(k, c)| {
                c * k
                    .exponents()
                    .iter()
                    .zip(&tables)
                    .map(|(&j, t)| t[j as usize])
                    .product::<f64>()
            })
            .sum())
    }
}

/// `h_0(x), ..., h_top(x)` via `sqrt(k+1) h_{k+1} = x h_k - sqrt(k) h_{k-1}`.
pub fn hermite_values(x: f64, top: u32) -> Vec<f64> {
    let top = top as usize;
    let mut h = Vec::with_capacity(top + 1);
    h.push(1.0);
    if top >= 1 {
        h.push(x);
    }
    for k in 1..top {
        let kf = k as f64;
        let next = (x * h[k] - kf.sqrt() * h[k - 1]) / (kf + 1.0).sqrt();
        h.push(next);
    }
    h
}

/// Row `j` holds the coefficients of `x^j` in `h_0, ..., h_j`, built by
/// repeated multiplication with `x h_k = sqrt(k+1) h_{k+1} + sqrt(k) h_{k-1}`.
fn power_to_hermite_table(top: usize) -> Vec<Vec<f64>> {
    let mut rows = vec![vec![1.0]];
    for j in 0..top {
        let prev = &rows[j];
        let mut next = vec![0.0; j + 2];
        for (k, &c) in prev.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            next[k + 1] += c * ((k + 1) as f64).sqrt();
            if k > 0 {
                next[k - 1] += c * (k as f64).sqrt();
            }
        }
        rows.push(next);
    }
    rows
}

pub fn hermite_expand(f: &Polynomial) -> HermiteExpansion {
    let n = f.dim();
    let top = f.terms().map(|(e, _)| e.max_power()).max().unwrap_or(0) as usize;
    let table = power_to_hermite_table(top);
    let mut coeffs: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (e, c) in f.terms() {
        // tensor product of the per-coordinate expansions
        let mut partial: Vec<(Vec<u32>, f64)> = vec![(Vec::with_capacity(n), c)];
        for &j in e.exponents() {
            let row = &table[j as usize];
            let mut grown = Vec::with_capacity(partial.len() * row.len());
            for (idx, w) in &partial {
                for (k, &rk) in row.iter().enumerate() {
                    if rk == 0.0 {
                        continue;
                    }
                    let mut idx2 = idx.clone();
                    idx2.push(k as u32);
                    grown.push((idx2, w * rk));
                }
            }
            partial = grown;
        }
        for (idx, w) in partial {
            *coeffs.entry(MultiIndex::new(idx)).or_insert(0.0) += w;
        }
    }
    coeffs.retain(|_, c| *c != 0.0);
    HermiteExpansion { n, coeffs }
}

pub fn variance_via_hermite(f: &Polynomial) -> f64 {
    hermite_expand(f).variance()
}

/// `(1/m) E[g'(X)^2]` for a univariate `g` of degree at most `m`; a lower
/// bound for the variance of `g(X)`.
pub fn variance_lower_bound_1d(g: &Polynomial, m: usize) -> Result<f64> {
    if g.dim() != 1 {
        return Err(Error::DimensionMismatch {
            expected: 1,
            got: g.dim(),
        });
    }
    if m == 0 {
        return Err(Error::invalid("power cap m must be at least 1"));
    }
    let degree = g.degree()?;
    if degree > m {
        return Err(Error::DegreeExceedsM { degree, m });
    }
    let dg = g.partial_derivative(0)?;
    let sq = dg.multiply(&dg)?;
    Ok(expectation(&sq) / m as f64)
}

/// Gram matrix `G[j][k] = j k E[X^{j+k-2}] / m` of the quadratic form
/// `(1/m) E[g'(X)^2]` in the coefficients `a_1, ..., a_m`.
fn derivative_gram(m: usize) -> Vec<Vec<f64>> {
    (1..=m)
        .map(|j| {
            (1..=m)
                .map(|k| (j * k) as f64 * gaussian_moment((j + k - 2) as u32) / m as f64)
                .collect()
        })
        .collect()
}

/// `c_2(m) = min (1/m) E[g'(X)^2]` over `g(s) = sum_{j=1}^m a_j s^j` with
/// `max_j |a_j| = 1`.
///
/// The form is convex, so on each face `a_i = 1` (the sign is irrelevant by
/// symmetry) projected coordinate descent over the box `[-1, 1]^{m-1}`
/// converges to the face minimum; the constant is the least face minimum.
pub fn c2_constant(m: usize) -> f64 {
    assert!(m >= 1, "c2 is defined for m >= 1");
    let gram = derivative_gram(m);
    let form = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for j in 0..m {
            for k in 0..m {
                s += gram[j][k] * a[j] * a[k];
            }
        }
        s
    };
    let mut best = f64::INFINITY;
    for face in 0..m {
        let mut a = vec![0.0; m];
        a[face] = 1.0;
        for _sweep in 0..10_000 {
            let mut moved = 0.0f64;
            for j in (0..m).filter(|&j| j != face) {
                // minimize over a_j with others fixed: G_jj a_j + sum_{k != j} G_jk a_k = 0
                let off: f64 = (0..m).filter(|&k| k != j).map(|k| gram[j][k] * a[k]).sum();
                let target = (-off / gram[j][j]).clamp(-1.0, 1.0);
                moved = moved.max((target - a[j]).abs());
                a[j] = target;
            }
            if moved < 1e-15 {
                break;
            }
        }
        best = best.min(form(&a));
    }
    best
}
