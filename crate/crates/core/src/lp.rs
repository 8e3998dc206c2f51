//! Linear programs over Lipschitz chains.
//!
//! Both the dual modulus and the bounded-Lipschitz distance reduce to
//!
//! ```text
//! maximize   sum_j w_j phi_j
//! subject to |phi_j| <= B,   |phi_{j+1} - phi_j| <= L
//! ```
//!
//! [`ChainLp::solve`] exploits the vertex structure: at a vertex every
//! connected run of tight difference constraints contains a tight bound, so
//! each coordinate equals `+-B -+ k L` for an integer `k < K`. A dynamic
//! program over that finite value set with sliding-window maxima recovers
//! the LP optimum exactly in `O(K |S|)`.
//!
//! [`BoundedLp`] is a general dense bounded-variable primal simplex
//! (two-phase, Bland's rule). It solves the same chain program in its
//! telescoped equality form and serves as an independent route.

use std::collections::VecDeque;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct ChainLp {
    pub weights: Vec<f64>,
    pub bound: f64,
    pub max_step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
}

impl ChainLp {
    pub fn new(weights: Vec<f64>, bound: f64, max_step: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("chain program needs at least one variable"));
        }
        if !(bound >= 0.0) || !bound.is_finite() {
            return Err(Error::invalid(format!("bound must be finite and >= 0, got {bound}")));
        }
        if !(max_step > 0.0) || !max_step.is_finite() {
            return Err(Error::invalid(format!("step bound must be finite and > 0, got {max_step}")));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("chain weights must be finite"));
        }
        Ok(ChainLp {
            weights,
            bound,
            max_step,
        })
    }

    pub fn objective(&self, phi: &[f64]) -> f64 {
        self.weights.iter().zip(phi).map(|(w, p)| w * p).sum()
    }

    /// Candidate vertex coordinates, sorted and deduplicated.
    fn lattice(&self) -> Vec<f64> {
        let (b, l) = (self.bound, self.max_step);
        if b == 0.0 {
            return vec![0.0];
        }
        let k_max = ((2.0 * b / l).floor() as usize).min(self.weights.len() - 1);
        let mut s: Vec<f64> = (0..=k_max)
            .flat_map(|k| [-b + k as f64 * l, b - k as f64 * l])
            .filter(|v| v.abs() <= b)
            .collect();
        s.sort_by(f64::total_cmp);
        let tol = 1e-12 * b.max(l);
        s.dedup_by(|a, b| (*a - *b).abs() <= tol);
        s
    }

    /// Exact optimum by dynamic programming over the vertex lattice.
    pub fn solve(&self) -> LpSolution {
        let s = self.lattice();
        let k = self.weights.len();
        let reach = self.max_step * (1.0 + 1e-12);
        // window [lo_t, hi_t] of predecessors for every target value
        let mut lo_idx = Vec::with_capacity(s.len());
        let mut hi_idx = Vec::with_capacity(s.len());
        let (mut lo, mut hi) = (0usize, 0usize);
        for &v in &s {
            while s[lo] < v - reach {
                lo += 1;
            }
            while hi + 1 < s.len() && s[hi + 1] <= v + reach {
                hi += 1;
            }
            lo_idx.push(lo);
            hi_idx.push(hi);
        }

        let mut value: Vec<f64> = s.iter().map(|v| self.weights[0] * v).collect();
        let mut choice: Vec<Vec<u32>> = Vec::with_capacity(k);
        let mut next = vec![0.0; s.len()];
        for j in 1..k {
            let mut arg = vec![0u32; s.len()];
            let mut deque: VecDeque<usize> = VecDeque::new();
            let mut pushed = 0usize;
            for t in 0..s.len() {
                while pushed <= hi_idx[t] {
                    while deque.back().is_some_and(|&b| value[b] <= value[pushed]) {
                        deque.pop_back();
                    }
                    deque.push_back(pushed);
                    pushed += 1;
                }
                while deque.front().is_some_and(|&f| f < lo_idx[t]) {
                    deque.pop_front();
                }
                let best = *deque.front().expect("every value reaches itself");
                arg[t] = best as u32;
                next[t] = value[best] + self.weights[j] * s[t];
            }
            std::mem::swap(&mut value, &mut next);
            choice.push(arg);
        }

        let (mut at, best) = value
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
        let mut x = vec![0.0; k];
        x[k - 1] = s[at];
        for j in (1..k).rev() {
            at = choice[j - 1][at] as usize;
            x[j - 1] = s[at];
        }
        LpSolution { value: best, x }
    }

    /// Telescoped equality form: variables `phi_0..phi_{K-1}` then slacks
    /// `s_j = phi_{j+1} - phi_j` in `[-L, L]`.
    pub fn to_bounded_lp(&self) -> BoundedLp {
        let k = self.weights.len();
        let cols = 2 * k - 1;
        let mut objective = self.weights.clone();
        objective.resize(cols, 0.0);
        let rows = (0..k - 1)
            .map(|j| {
                let mut r = vec![0.0; cols];
                r[j] = -1.0;
                r[j + 1] = 1.0;
                r[k + j] = -1.0;
                r
            })
            .collect();
        let mut lower = vec![-self.bound; k];
        lower.resize(cols, -self.max_step);
        let mut upper = vec![self.bound; k];
        upper.resize(cols, self.max_step);
        BoundedLp {
            objective,
            rows,
            rhs: vec![0.0; k - 1],
            lower,
            upper,
        }
    }

    /// Optimum through the general simplex. Dense; meant for small chains.
    pub fn solve_simplex(&self) -> Result<LpSolution> {
        let k = self.weights.len();
        let mut sol = self.to_bounded_lp().solve()?;
        sol.x.truncate(k);
        Ok(sol)
    }
}

/// `maximize c x  s.t.  A x = b,  lower <= x <= upper` with finite bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundedLp {
    pub objective: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-11;

struct Tableau {
    /// `B^{-1} A` over structural and artificial columns.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    x: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    is_basic: Vec<bool>,
}

impl Tableau {
    /// One simplex run on `cost`; returns `Err` on unboundedness.
    fn optimize(&mut self, cost: &[f64]) -> Result<()> {
        let cols = cost.len();
        let max_iter = 50_000 + 100 * cols * cols;
        for _ in 0..max_iter {
            // reduced costs, Bland's rule for the entering column
            let mut entering = None;
            for j in 0..cols {
                if self.is_basic[j] || self.upper[j] - self.lower[j] <= 0.0 {
                    continue;
                }
                let dj = cost[j]
                    - self
                        .basis
                        .iter()
                        .enumerate()
                        .map(|(i, &b)| cost[b] * self.t[i][j])
                        .sum::<f64>();
                let at_lower = self.x[j] <= self.lower[j];
                if (at_lower && dj > COST_TOL) || (!at_lower && dj < -COST_TOL) {
                    entering = Some((j, if at_lower { 1.0 } else { -1.0 }));
                    break;
                }
            }
            let Some((j, dir)) = entering else {
                return Ok(());
            };

            // ratio test; basic i moves by -t[i][j] * dir per unit step
            let mut limit = self.upper[j] - self.lower[j];
            let mut leaving: Option<(usize, bool)> = None;
            for (i, row) in self.t.iter().enumerate() {
                let rate = -row[j] * dir;
                if rate.abs() <= PIVOT_TOL {
                    continue;
                }
                let b = self.basis[i];
                let (room, to_upper) = if rate > 0.0 {
                    ((self.upper[b] - self.x[b]) / rate, true)
                } else {
                    ((self.x[b] - self.lower[b]) / -rate, false)
                };
                let room = room.max(0.0);
                let better = match leaving {
                    None => room < limit,
                    Some((li, _)) => {
                        room < limit - 1e-15 || (room <= limit + 1e-15 && b < self.basis[li])
                    }
                };
                if better {
                    limit = room;
                    leaving = Some((i, to_upper));
                }
            }
            if !limit.is_finite() {
                return Err(Error::invalid("linear program is unbounded"));
            }

            for (i, row) in self.t.iter().enumerate() {
                let b = self.basis[i];
                self.x[b] -= row[j] * dir * limit;
            }
            self.x[j] += dir * limit;

            match leaving {
                None => {
                    // bound flip
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                }
                Some((r, to_upper)) => {
                    let out = self.basis[r];
                    self.x[out] = if to_upper { self.upper[out] } else { self.lower[out] };
                    self.pivot(r, j);
                }
            }
        }
        Err(Error::invalid("simplex iteration limit reached"))
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let p = self.t[r][j];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[j];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.is_basic[self.basis[r]] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
    }
}

impl BoundedLp {
    pub fn solve(&self) -> Result<LpSolution> {
        let n = self.objective.len();
        let m = self.rows.len();
        if self.lower.len() != n || self.upper.len() != n || self.rhs.len() != m {
            return Err(Error::invalid("inconsistent linear program dimensions"));
        }
        if self.rows.iter().any(|r| r.len() != n) {
            return Err(Error::invalid("constraint row has the wrong length"));
        }
        if self
            .lower
            .iter()
            .zip(&self.upper)
            .any(|(l, u)| !l.is_finite() || !u.is_finite() || l > u)
        {
            return Err(Error::invalid("variable bounds must be finite with lower <= upper"));
        }

        // phase 1: structural variables at their lower bounds, one artificial
        // per row absorbing the residual
        let mut x: Vec<f64> = self.lower.clone();
        let mut t = Vec::with_capacity(m);
        let mut lower = self.lower.clone();
        let mut upper = self.upper.clone();
        for (i, row) in self.rows.iter().enumerate() {
            let residual = self.rhs[i] - row.iter().zip(&x).map(|(a, v)| a * v).sum::<f64>();
            let sign = if residual < 0.0 { -1.0 } else { 1.0 };
            let mut tr: Vec<f64> = row.iter().map(|a| a * sign).collect();
            tr.resize(n + m, 0.0);
            tr[n + i] = 1.0;
            t.push(tr);
            x.push(residual.abs());
            lower.push(0.0);
            upper.push(f64::INFINITY);
        }
        let mut is_basic = vec![false; n + m];
        for b in &mut is_basic[n..] {
            *b = true;
        }
        let mut tab = Tableau {
            t,
            basis: (n..n + m).collect(),
            x,
            lower,
            upper,
            is_basic,
        };
        let mut phase1 = vec![0.0; n + m];
        for c in &mut phase1[n..] {
            *c = -1.0;
        }
        tab.optimize(&phase1)?;
        let infeasibility: f64 = tab.x[n..].iter().sum();
        let scale = 1.0 + self.rhs.iter().map(|v| v.abs()).sum::<f64>();
        if infeasibility > 1e-9 * scale {
            return Err(Error::invalid("linear program is infeasible"));
        }
        for a in n..n + m {
            tab.upper[a] = 0.0;
            tab.x[a] = 0.0;
        }

        let mut cost = self.objective.clone();
        cost.resize(n + m, 0.0);
        tab.optimize(&cost)?;
        let x: Vec<f64> = tab.x[..n].to_vec();
        let value = self.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        Ok(LpSolution { value, x })
    }
}
