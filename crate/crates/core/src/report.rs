//! Shared result plumbing: probe reports, modulus curves, error budgets and
//! probe grids.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::density::{histogram_on, GriddedDensity, SampleSet};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn passed(self) -> bool {
        self == Verdict::Pass
    }
}

/// One evaluation point of an inequality `lhs <= rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub eps: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl Probe {
    pub fn new(eps: f64, lhs: f64, rhs: f64, budget: f64) -> Self {
        Probe {
            eps,
            lhs,
            rhs,
            budget,
            label: None,
        }
    }

    pub fn labeled(mut self, label: &str) -> Self {
        self.label = Some(label.to_string());
        self
    }

    pub fn slack(&self) -> f64 {
        self.rhs - self.lhs
    }
}

/// Outcome of one numeric check. `verdict` is pass iff
/// `margin >= -error_budget`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub id: String,
    pub probes: Vec<Probe>,
    pub fitted_constant: Option<f64>,
    pub margin: f64,
    pub error_budget: f64,
    pub verdict: Verdict,
    #[serde(default)]
    pub diagnostics: BTreeMap<String, f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Inequality report: margin is the smallest `rhs - lhs` over the probes.
    /// An empty probe set passes vacuously.
    pub fn from_probes(id: &str, probes: Vec<Probe>, budget: f64) -> Self {
        let margin = probes
            .iter()
            .map(Probe::slack)
            .fold(f64::INFINITY, f64::min);
        let margin = if probes.is_empty() { 0.0 } else { margin };
        let verdict = Verdict::from_bool(!margin.is_nan() && margin >= -budget);
        BoundReport {
            id: id.to_string(),
            probes,
            fitted_constant: None,
            margin,
            error_budget: budget,
            verdict,
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    /// Trend report: the verdict is decided by a slack computed elsewhere
    /// (for example a slope minus its threshold); probes carry the data.
    pub fn from_slack(id: &str, probes: Vec<Probe>, slack: f64) -> Self {
        BoundReport {
            id: id.to_string(),
            probes,
            fitted_constant: None,
            margin: slack,
            error_budget: 0.0,
            verdict: Verdict::from_bool(slack >= 0.0),
            diagnostics: BTreeMap::new(),
            notes: Vec::new(),
        }
    }

    pub fn with_constant(mut self, c: f64) -> Self {
        self.fitted_constant = Some(c);
        self
    }

    pub fn diagnostic(mut self, key: &str, value: f64) -> Self {
        self.diagnostics.insert(key.to_string(), value);
        self
    }

    pub fn note(mut self, text: impl Into<String>) -> Self {
        self.notes.push(text.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict.passed()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// `(eps, value)` table of a modulus of continuity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusCurve {
    entries: Vec<(f64, f64)>,
}

impl ModulusCurve {
    pub fn new(entries: Vec<(f64, f64)>) -> Result<Self> {
        for &(e, v) in &entries {
            if !(e > 0.0) || !e.is_finite() || !(v >= 0.0) || !v.is_finite() {
                return Err(Error::invalid(format!("bad curve entry ({e}, {v})")));
            }
        }
        if entries.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::invalid("curve eps values must be strictly increasing"));
        }
        Ok(ModulusCurve { entries })
    }

    pub fn entries(&self) -> &[(f64, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn eps(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.0).collect()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.1).collect()
    }

    pub fn is_nondecreasing(&self, tol: f64) -> bool {
        self.entries.windows(2).all(|w| w[1].1 >= w[0].1 - tol)
    }

    /// Entries with `lo <= eps <= hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> ModulusCurve {
        ModulusCurve {
            entries: self
                .entries
                .iter()
                .copied()
                .filter(|&(e, _)| e >= lo && e <= hi)
                .collect(),
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("eps,value\n");
        for (e, v) in &self.entries {
            let _ = writeln!(out, "{e},{v}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }
}

/// Additive tolerance attached to every density-level verdict.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorBudget {
    /// Mass of the law outside the grid.
    pub truncation: f64,
    /// `step * total variation` of the grid values.
    pub bin_bias: f64,
    /// Half the L1 gap between histograms of the two sample halves.
    pub mc_noise: f64,
}

impl ErrorBudget {
    /// Budget of a density known without sampling noise.
    pub fn exact(rho: &GriddedDensity) -> Self {
        ErrorBudget {
            truncation: rho.truncated_mass,
            bin_bias: rho.step * rho.total_variation(),
            mc_noise: 0.0,
        }
    }

    /// Budget of a density estimated from `samples`.
    pub fn from_samples(rho: &GriddedDensity, samples: &SampleSet) -> Self {
        let (a, b) = samples.halves();
        let mut budget = ErrorBudget::exact(rho);
        if !a.is_empty() && !b.is_empty() {
            let ha = histogram_on(a, rho.grid());
            let hb = histogram_on(b, rho.grid());
            let l1: f64 = ha.values.iter().zip(&hb.values).map(|(x, y)| (x - y).abs()).sum();
            budget.mc_noise = 0.5 * rho.step * l1;
        }
        budget
    }

    pub fn total(&self) -> f64 {
        2.0 * self.truncation + self.bin_bias + self.mc_noise
    }

    pub fn combine(&self, other: &ErrorBudget) -> ErrorBudget {
        ErrorBudget {
            truncation: self.truncation + other.truncation,
            bin_bias: self.bin_bias + other.bin_bias,
            mc_noise: self.mc_noise + other.mc_noise,
        }
    }
}

/// Geometric grid from `lo` to `hi` inclusive with at least `per_decade`
/// points per decade.
pub fn geometric_grid(lo: f64, hi: f64, per_decade: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi >= lo) || !hi.is_finite() || per_decade == 0 {
        return Err(Error::invalid(format!(
            "geometric grid needs 0 < lo <= hi and per_decade >= 1 (lo = {lo}, hi = {hi})"
        )));
    }
    if hi == lo {
        return Ok(vec![lo]);
    }
    let decades = (hi / lo).log10();
    let intervals = ((decades * per_decade as f64) - 1e-9).ceil().max(1.0) as usize;
    let ratio = (hi / lo).ln() / intervals as f64;
    let mut grid: Vec<f64> = (0..=intervals).map(|k| lo * (ratio * k as f64).exp()).collect();
    grid[intervals] = hi;
    Ok(grid)
}

pub const EPS_PER_DECADE: usize = 12;
pub const EPS_FLOOR: f64 = 1e-3;
pub const T_PER_DECADE: usize = 16;

/// Default modulus probes: `[max(2 step, 1e-3), 1]`, 12 per decade.
pub fn default_eps_grid(step: f64) -> Result<Vec<f64>> {
    let lo = (2.0 * step).max(EPS_FLOOR);
    if lo >= 1.0 {
        return Err(Error::EpsilonBelowResolution { eps: 1.0, min: lo });
    }
    geometric_grid(lo, 1.0, EPS_PER_DECADE)
}

/// Default frequency probes: `[0.1, 1000]`, 16 per decade.
pub fn default_t_grid() -> Vec<f64> {
    geometric_grid(0.1, 1000.0, T_PER_DECADE).expect("static grid")
}

/// Least-squares slope of `y` against `x`; `None` with fewer than two
/// distinct abscissae.
pub fn ls_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Slope of `ln y` against `ln x` over the points with both coordinates
/// positive.
pub fn log_log_slope(points: &[(f64, f64)]) -> Option<f64> {
    let logs: Vec<(f64, f64)> = points
        .iter()
        .filter(|p| p.0 > 0.0 && p.1 > 0.0)
        .map(|p| (p.0.ln(), p.1.ln()))
        .collect();
    ls_slope(&logs)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_grid_density_and_ends() {
        let g = geometric_grid(1e-3, 1.0, 12).unwrap();
        assert_eq!(g.len(), 37);
        assert_eq!(g[0], 1e-3);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
        let t = default_t_grid();
        assert_eq!(t.len(), 65);
        assert!(geometric_grid(0.0, 1.0, 3).is_err());
        assert_eq!(geometric_grid(2.0, 2.0, 3).unwrap(), vec![2.0]);
    }

    #[test]
    fn eps_grid_respects_resolution() {
        let g = default_eps_grid(0.01).unwrap();
        assert_eq!(g[0], 0.02);
        assert!(matches!(default_eps_grid(0.6), Err(Error::EpsilonBelowResolution { .. })));
    }

    #[test]
    fn report_verdict_matches_margin() {
        let probes = vec![Probe::new(0.1, 1.0, 0.95, 0.1), Probe::new(0.2, 0.5, 1.0, 0.1)];
        let r = BoundReport::from_probes("x", probes.clone(), 0.1);
        assert!((r.margin + 0.05).abs() < 1e-12);
        assert!(r.passed());
        let r = BoundReport::from_probes("x", probes, 0.01);
        assert!(!r.passed());
        assert!(BoundReport::from_probes("empty", vec![], 0.0).passed());
        let json = r.to_json().unwrap();
        assert!(json.contains("\"verdict\": \"fail\""));
        let back: BoundReport = serde_json::from_str(&json).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn curve_validation_and_csv() {
        assert!(ModulusCurve::new(vec![(0.1, 0.2), (0.1, 0.3)]).is_err());
        assert!(ModulusCurve::new(vec![(0.1, -0.2)]).is_err());
        let c = ModulusCurve::new(vec![(0.1, 0.2), (0.2, 0.3)]).unwrap();
        assert_eq!(c.to_csv(), "eps,value\n0.1,0.2\n0.2,0.3\n");
        assert!(c.is_nondecreasing(0.0));
        assert_eq!(c.restrict(0.15, 1.0).len(), 1);
    }

    #[test]
    fn slopes() {
        let pts: Vec<(f64, f64)> = (1..10).map(|k| (k as f64, 3.0 * (k as f64).powf(0.5))).collect();
        assert!((log_log_slope(&pts).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(ls_slope(&[(1.0, 1.0)]), None);
    }
}
