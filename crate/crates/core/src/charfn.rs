//! Empirical characteristic functions and their decay.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::SampleSet;
use crate::error::{Error, Result};
use crate::functionals::EnvelopeParams;
use crate::report::{log_log_slope, BoundReport, Probe};

pub const MIN_SAMPLES: usize = 10_000;
/// Moduli below this many standard errors are treated as noise.
pub const NOISE_FLOOR: f64 = 5.0;
/// Largest allowed upward drift of the log ratio per unit of `ln t`.
pub const CF_TREND_TOL: f64 = 0.1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfPoint {
    pub t: f64,
    pub modulus: f64,
    pub stderr: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CfCurve {
    pub entries: Vec<CfPoint>,
}

impl CfCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,modulus,stderr\n");
        for p in &self.entries {
            let _ = writeln!(out, "{},{},{}", p.t, p.modulus, p.stderr);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Points whose modulus clears the noise floor.
    pub fn above_floor(&self) -> impl Iterator<Item = &CfPoint> {
        self.entries.iter().filter(|p| p.modulus > NOISE_FLOOR * p.stderr)
    }
}

/// `|N^{-1} sum_k exp(i t v_k)|` at every `t`.
pub fn ecf_modulus(s: &SampleSet, ts: &[f64]) -> Result<CfCurve> {
    if s.len() < MIN_SAMPLES {
        return Err(Error::invalid(format!(
            "characteristic function needs at least {MIN_SAMPLES} samples, got {}",
            s.len()
        )));
    }
    if let Some(t) = ts.iter().find(|t| !t.is_finite()) {
        return Err(Error::invalid(format!("frequency {t} is not finite")));
    }
    let n = s.len() as f64;
    let stderr = 1.0 / n.sqrt();
    let entries = ts
        .par_iter()
        .map(|&t| {
            let (mut re, mut im) = (0.0, 0.0);
            for &v in s.values() {
                let (sin, cos) = (t * v).sin_cos();
                re += cos;
                im += sin;
            }
            CfPoint {
                t,
                modulus: (re * re + im * im).sqrt() / n,
                stderr,
            }
        })
        .collect();
    Ok(CfCurve { entries })
}

/// `|a t|^{-1/m} (|ln |a t||^{d-m} + 1)`.
pub fn cf_envelope(p: &EnvelopeParams, t: f64) -> f64 {
    let x = (p.a * t).abs();
    x.powf(-p.power()) * p.log_factor(x)
}

/// Ratios of the modulus to the unit-constant envelope must not trend
/// upward in `t`. Only points with `|a t| >= 1` above the noise floor count.
pub fn cf_envelope_check(curve: &CfCurve, p: &EnvelopeParams) -> Result<BoundReport> {
    let usable: Vec<&CfPoint> = curve
        .above_floor()
        .filter(|q| (p.a * q.t).abs() >= 1.0)
        .collect();
    if usable.is_empty() {
        return Err(Error::InsufficientDecay);
    }
    let ratios: Vec<(f64, f64)> = usable.iter().map(|q| (q.t, q.modulus / cf_envelope(p, q.t))).collect();
    let constant = ratios.iter().map(|r| r.1).fold(0.0, f64::max);
    let probes = usable
        .iter()
        .map(|q| Probe::new(q.t, q.modulus, constant * cf_envelope(p, q.t), NOISE_FLOOR * q.stderr))
        .collect();
    let slope = log_log_slope(&ratios);
    let slack = slope.map_or(0.0, |s| CF_TREND_TOL - s);
    let t_min = usable.first().map_or(0.0, |q| q.t);
    let t_max = usable.last().map_or(0.0, |q| q.t);
    let mut report = BoundReport::from_slack("cf_envelope", probes, slack)
        .with_constant(constant)
        .diagnostic("t_min", t_min)
        .diagnostic("t_max", t_max)
        .diagnostic("usable_points", usable.len() as f64);
    if let Some(s) = slope {
        report = report.diagnostic("ratio_slope", s);
    } else {
        report = report.note("single usable frequency; trend not assessed");
    }
    if t_max < 10.0 * t_min {
        report = report.note("usable frequencies span less than a decade");
    }
    Ok(report)
}

/// Decay exponents in `t`: the one implied by the envelope, `d - m` as the
/// power of the logarithm, and the earlier dimension-dependent exponent
/// `(3n - d/m)/2 - 1`.
pub fn alpha_comparison(p: &EnvelopeParams, n: usize) -> (f64, f64) {
    let (m, d) = (p.m as f64, p.d as f64);
    (d - m, 0.5 * (3.0 * n as f64 - d / m) - 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::sample;
    use crate::Polynomial;

    #[test]
    fn alpha_values() {
        let p = EnvelopeParams::new(1, 2, 1.0).unwrap();
        assert_eq!(alpha_comparison(&p, 2), (1.0, 1.0));
        let p = EnvelopeParams::new(3, 3, 1.0).unwrap();
        assert_eq!(alpha_comparison(&p, 4), (0.0, 4.5));
        let p = EnvelopeParams::new(1, 3, 1.0).unwrap();
        assert_eq!(alpha_comparison(&p, 10), (2.0, 12.5));
    }

    #[test]
    fn ecf_gaussian_and_errors() {
        let f = Polynomial::var(1, 0).unwrap();
        let s = sample(&f, 40_000, 5).unwrap();
        let c = ecf_modulus(&s, &[1e-6, 1.0]).unwrap();
        assert!((c.entries[0].modulus - 1.0).abs() < 1e-9);
        assert!((c.entries[1].modulus - (-0.5f64).exp()).abs() < 4.0 * c.entries[1].stderr);
        let small = sample(&f, 100, 5).unwrap();
        assert!(ecf_modulus(&small, &[1.0]).is_err());
    }

    #[test]
    fn insufficient_decay() {
        let p = EnvelopeParams::new(1, 1, 1.0).unwrap();
        let curve = CfCurve {
            entries: vec![CfPoint { t: 10.0, modulus: 0.001, stderr: 0.01 }],
        };
        assert!(matches!(cf_envelope_check(&curve, &p), Err(Error::InsufficientDecay)));
    }
}
