//! Subcommand implementations. Each returns the ids of failed checks; data
//! files go through [`Outputs`] so the manifest lists all of them.

use std::collections::BTreeMap;

use polyreg::charfn::{alpha_comparison, cf_envelope, cf_envelope_check, ecf_modulus, CfCurve};
use polyreg::density::{histogram_density, histogram_on, quantile_grid, sample, GriddedDensity, RangePolicy, SampleSet, TAIL_QUANTILE};
use polyreg::functionals::{
    corollary_check, corollary_epsilon, corollary_rhs, degree_fallback_check, envelope_check, envelope_rhs, kr_distance,
    omega_curve, sandwich_check, sigma_curve, small_set_check, tv_distance, tv_kr_inequality_check, DistancePoint,
    EnvelopeParams,
};
use polyreg::moments::{expectation, variance, variance_via_hermite};
use polyreg::report::{BoundReport, ErrorBudget, ModulusCurve};
use polyreg::Polynomial;
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{family_seed, ExperimentConfig, PolySpec};
use crate::output::Outputs;
use crate::svg::{line_chart, Axes, Series};
use crate::{is_resolution, CliError, EXIT_INPUT, EXIT_RESOLUTION};

const SAMPLE_SALT: u64 = 0x5EED_5A17_0000_0001;
/// Relative tolerance between the two exact variance routes.
pub const EXACT_VARIANCE_TOL: f64 = 1e-9;
/// Monte Carlo agreement band in standard errors.
pub const MC_SIGMAS: f64 = 4.0;
/// Small-set interval widths, in grid cells.
pub const SMALL_SET_CELLS: [f64; 4] = [2.0, 5.0, 20.0, 80.0];
pub const CHECK_FAMILIES: [&str; 6] = ["sandwich", "small_set", "envelope", "degree_fallback", "cf", "distance"];

/// One polynomial under study.
#[derive(Clone, Debug)]
pub struct Case {
    pub label: String,
    pub poly: Polynomial,
    pub sample_seed: u64,
}

pub fn cases(cfg: &ExperimentConfig) -> Result<Vec<Case>, CliError> {
    let random = matches!(cfg.polynomial, None | Some(PolySpec::Random(_)));
    Ok(cfg
        .polynomials()?
        .into_iter()
        .enumerate()
        .map(|(k, (label, poly))| Case {
            label,
            poly,
            sample_seed: if random { family_seed(cfg.seed ^ SAMPLE_SALT, k) } else { cfg.seed },
        })
        .collect())
}

/// SHA-256 of the sample values in little-endian byte order.
pub fn sample_digest(s: &SampleSet) -> String {
    let mut h = Sha256::new();
    for v in s.values() {
        h.update(v.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn poly_text(f: &Polynomial) -> serde_json::Value {
    serde_json::to_value(f).expect("polynomial serializes")
}

fn exact_sd(f: &Polynomial) -> f64 {
    variance(f).max(0.0).sqrt()
}

fn require_variance(f: &Polynomial) -> Result<(), CliError> {
    if !(variance(f) > 1e-12 * (1.0 + expectation(f).powi(2))) {
        return Err(polyreg::Error::ZeroVariance.into());
    }
    Ok(())
}

fn envelope_params(cfg: &ExperimentConfig, f: &Polynomial) -> Result<EnvelopeParams, CliError> {
    let mut p = EnvelopeParams::for_polynomial(f)?;
    p.power_override = cfg.test_hooks.envelope_exponent;
    Ok(p)
}

/// Samples, histogram and modulus curves of one polynomial.
pub struct Analysis {
    pub samples: SampleSet,
    pub rho: GriddedDensity,
    pub budget: ErrorBudget,
    pub eps: Vec<f64>,
    pub omega: ModulusCurve,
    pub sigma: ModulusCurve,
}

impl Analysis {
    pub fn run(cfg: &ExperimentConfig, case: &Case) -> Result<Self, CliError> {
        require_variance(&case.poly)?;
        let samples = sample(&case.poly, cfg.samples, case.sample_seed)?;
        let rho = histogram_density(&samples, cfg.grid, RangePolicy::default())?;
        let budget = ErrorBudget::from_samples(&rho, &samples);
        let eps = cfg.eps_grid(rho.step)?;
        let omega = omega_curve(&rho, &eps)?;
        let sigma = sigma_curve(&rho, &eps)?;
        Ok(Analysis {
            samples,
            rho,
            budget,
            eps,
            omega,
            sigma,
        })
    }

    /// Probes in the small-scale regime used for exponent fits.
    pub fn fit_range(&self, cfg: &ExperimentConfig, f: &Polynomial) -> (f64, f64) {
        (self.eps[0], cfg.fit_scale * exact_sd(f))
    }
}

fn curve_svg(title: &str, curves: &[(&str, &ModulusCurve)]) -> String {
    let owned: Vec<(&str, Vec<(f64, f64)>)> = curves.iter().map(|(n, c)| (*n, c.entries().to_vec())).collect();
    let series: Vec<Series> = owned.iter().map(|(n, p)| Series { name: n, points: p }).collect();
    line_chart(
        Axes {
            title,
            x_label: "eps",
            y_label: "modulus",
            log_x: true,
            log_y: true,
        },
        &series,
    )
}

fn pairs_csv(header: &str, rows: &[(f64, f64)]) -> String {
    let mut s = format!("{header}\n");
    for (a, b) in rows {
        s.push_str(&format!("{a},{b}\n"));
    }
    s
}

#[derive(Serialize)]
struct GridInfo {
    lo: f64,
    step: f64,
    cells: usize,
    truncated_mass: f64,
}

impl From<&GriddedDensity> for GridInfo {
    fn from(r: &GriddedDensity) -> Self {
        GridInfo {
            lo: r.lo,
            step: r.step,
            cells: r.len(),
            truncated_mass: r.truncated_mass,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct VarianceRow {
    pub label: String,
    pub polynomial: serde_json::Value,
    pub moments: f64,
    pub hermite: f64,
    pub monte_carlo: f64,
    pub mc_stderr: f64,
    pub samples: usize,
    pub sample_seed: u64,
    pub exact_agree: bool,
    pub mc_agree: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

/// Variance by both exact routes and by simulation, with its standard error.
pub fn variance_row(cfg: &ExperimentConfig, case: &Case) -> Result<VarianceRow, CliError> {
    let f = &case.poly;
    let moments = variance(f);
    let hermite = variance_via_hermite(f);
    let s = sample(f, cfg.samples, case.sample_seed)?;
    let mean = s.mean();
    let n = s.len() as f64;
    let (m2, m4) = s.values().iter().fold((0.0, 0.0), |(a, b), &v| {
        let c = (v - mean) * (v - mean);
        (a + c, b + c * c)
    });
    let (m2, m4) = (m2 / n, m4 / n);
    let mc_stderr = ((m4 - m2 * m2).max(0.0) / n).sqrt();
    let monte_carlo = s.sample_variance();
    let scale = 1.0 + moments.abs().max(hermite.abs());
    let exact_agree = (moments - hermite).abs() <= EXACT_VARIANCE_TOL * scale;
    let mc_agree = (monte_carlo - moments).abs() <= MC_SIGMAS * mc_stderr + 1e-12 * scale;
    let mut warnings = Vec::new();
    if moments.abs() <= 1e-12 * (1.0 + expectation(f).powi(2)) {
        warnings.push("variance is zero: the polynomial is constant in law".into());
    }
    Ok(VarianceRow {
        label: case.label.clone(),
        polynomial: poly_text(f),
        moments,
        hermite,
        monte_carlo,
        mc_stderr,
        samples: s.len(),
        sample_seed: case.sample_seed,
        exact_agree,
        mc_agree,
        warnings,
    })
}

pub fn cmd_variance(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let cs = cases(cfg)?;
    let rows = out.timed("variance", || cs.iter().map(|c| variance_row(cfg, c)).collect::<Result<Vec<_>, _>>())?;
    let mut failing = Vec::new();
    println!("{:<8} {:>14} {:>14} {:>14} {:>10}  verdict", "case", "moments", "hermite", "monte_carlo", "stderr");
    for r in &rows {
        let ok = r.exact_agree && r.mc_agree;
        println!(
            "{:<8} {:>14.8} {:>14.8} {:>14.8} {:>10.2e}  {}",
            r.label,
            r.moments,
            r.hermite,
            r.monte_carlo,
            r.mc_stderr,
            if ok { "pass" } else { "fail" }
        );
        for w in &r.warnings {
            println!("warning [{}]: {w}", r.label);
        }
        if !ok {
            failing.push(format!("{}/variance", r.label));
        }
    }
    out.write_json(
        "variance.json",
        &serde_json::json!({ "seed": cfg.seed, "cases": rows, "failing": failing }),
    )?;
    Ok(failing)
}

#[derive(Serialize)]
struct ModulusDoc<'a> {
    label: &'a str,
    polynomial: serde_json::Value,
    sample_seed: u64,
    samples: usize,
    grid: GridInfo,
    budget: ErrorBudget,
    envelope: EnvelopeParams,
    fit_range: (f64, f64),
    reports: Vec<BoundReport>,
}

pub fn cmd_modulus(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let mut failing = Vec::new();
    for case in cases(cfg)? {
        let a = out.timed(&format!("{}/curves", case.label), || Analysis::run(cfg, &case))?;
        let params = envelope_params(cfg, &case.poly)?;
        let (lo, hi) = a.fit_range(cfg, &case.poly);
        let fit_omega = a.omega.restrict(lo, hi);
        let fit_sigma = a.sigma.restrict(lo, hi);
        let reports = vec![
            sandwich_check(&a.rho, &a.eps, &a.budget)?,
            envelope_check(&fit_omega, &params),
            degree_fallback_check(&case.poly, &fit_sigma)?,
        ];
        let l = &case.label;
        out.write(&format!("{l}/omega.csv"), &a.omega.to_csv())?;
        out.write(&format!("{l}/sigma.csv"), &a.sigma.to_csv())?;
        let ratios: Vec<(f64, f64)> = a.omega.entries().iter().map(|&(e, v)| (e, v / envelope_rhs(&params, e))).collect();
        out.write(&format!("{l}/envelope_ratio.csv"), &pairs_csv("eps,ratio", &ratios))?;
        if cfg.svg {
            out.write(&format!("{l}/modulus.svg"), &curve_svg(&format!("modulus of {l}"), &[("omega", &a.omega), ("sigma", &a.sigma)]))?;
        }
        println!("{l}: grid step {:.4e}, budget {:.4e}, fit range [{lo:.3e}, {hi:.3e}]", a.rho.step, a.budget.total());
        for r in &reports {
            print_report(l, r);
            if !r.passed() {
                failing.push(format!("{l}/{}", r.id));
            }
        }
        out.write_json(
            &format!("{l}/modulus_report.json"),
            &ModulusDoc {
                label: l,
                polynomial: poly_text(&case.poly),
                sample_seed: case.sample_seed,
                samples: a.samples.len(),
                grid: (&a.rho).into(),
                budget: a.budget,
                envelope: params,
                fit_range: (lo, hi),
                reports,
            },
        )?;
    }
    Ok(failing)
}

fn print_report(label: &str, r: &BoundReport) {
    let c = r.fitted_constant.map_or(String::new(), |c| format!(", constant {c:.4}"));
    println!(
        "  {label}/{:<16} {}  margin {:+.4e}, budget {:.3e}{c}",
        r.id,
        if r.passed() { "pass" } else { "FAIL" },
        r.margin,
        r.error_budget
    );
    for n in &r.notes {
        println!("    note: {n}");
    }
}

#[derive(Serialize)]
pub struct AlphaRow {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    /// Power of `|t|` in the polynomial-class envelope.
    pub class_power: f64,
    /// Power of the logarithm in the polynomial-class envelope.
    pub log_power: f64,
    /// The dimension-dependent exponent it is compared against.
    pub dimension_exponent: f64,
}

pub fn alpha_row(f: &Polynomial, p: &EnvelopeParams) -> AlphaRow {
    let (log_power, dimension_exponent) = alpha_comparison(p, f.dim());
    AlphaRow {
        n: f.dim(),
        m: p.m,
        d: p.d,
        class_power: p.power(),
        log_power,
        dimension_exponent,
    }
}

pub fn cf_report(cfg: &ExperimentConfig, case: &Case, s: &SampleSet) -> Result<(CfCurve, BoundReport), CliError> {
    let params = envelope_params(cfg, &case.poly)?;
    let curve = ecf_modulus(s, &cfg.t_grid()?)?;
    let report = cf_envelope_check(&curve, &params)?;
    Ok((curve, report))
}

pub fn cmd_cf(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let mut failing = Vec::new();
    for case in cases(cfg)? {
        require_variance(&case.poly)?;
        let l = &case.label;
        let s = out.timed(&format!("{l}/sample"), || sample(&case.poly, cfg.samples, case.sample_seed))?;
        let params = envelope_params(cfg, &case.poly)?;
        let alpha = alpha_row(&case.poly, &params);
        println!("{l}: n = {}, m = {}, d = {}", alpha.n, alpha.m, alpha.d);
        println!("  decay |t|^-{:.4} |ln t|^{:.0}  vs  |t|^-{:.4}", alpha.class_power, alpha.log_power, alpha.dimension_exponent);
        let (curve, report) = out.timed(&format!("{l}/cf"), || cf_report(cfg, &case, &s))?;
        out.write(&format!("{l}/cf.csv"), &curve.to_csv())?;
        let ratios: Vec<(f64, f64)> = curve
            .entries
            .iter()
            .filter(|q| (params.a * q.t).abs() >= 1.0)
            .map(|q| (q.t, q.modulus / cf_envelope(&params, q.t)))
            .collect();
        out.write(&format!("{l}/cf_ratio.csv"), &pairs_csv("t,ratio", &ratios))?;
        if cfg.svg {
            let pts: Vec<(f64, f64)> = curve.entries.iter().map(|q| (q.t, q.modulus)).collect();
            let floor: Vec<(f64, f64)> = curve.entries.iter().map(|q| (q.t, polyreg::charfn::NOISE_FLOOR * q.stderr)).collect();
            let svg = line_chart(
                Axes {
                    title: &format!("|cf| of {l}"),
                    x_label: "t",
                    y_label: "modulus",
                    log_x: true,
                    log_y: true,
                },
                &[
                    Series { name: "modulus", points: &pts },
                    Series { name: "noise floor", points: &floor },
                ],
            );
            out.write(&format!("{l}/cf.svg"), &svg)?;
        }
        print_report(l, &report);
        if !report.passed() {
            failing.push(format!("{l}/{}", report.id));
        }
        out.write_json(
            &format!("{l}/cf_report.json"),
            &serde_json::json!({
                "label": l,
                "polynomial": poly_text(&case.poly),
                "sample_seed": case.sample_seed,
                "samples": s.len(),
                "alpha": alpha,
                "report": report,
            }),
        )?;
    }
    Ok(failing)
}

#[derive(Clone, Debug, Serialize)]
pub struct DistanceRow {
    pub delta: Option<f64>,
    pub tv: f64,
    pub kr: f64,
    pub noise: f64,
    pub eps_star: Option<f64>,
    pub ratio: Option<f64>,
}

pub struct DistanceOutcome {
    pub rows: Vec<DistanceRow>,
    pub reports: Vec<BoundReport>,
    pub corollary: Option<BoundReport>,
}

impl DistanceOutcome {
    pub fn all_reports(&self) -> impl Iterator<Item = &BoundReport> {
        self.reports.iter().chain(self.corollary.as_ref())
    }
}

/// Compares `f` with each `g` on a shared grid, sampling both from the same
/// Gaussian draws.
pub fn distance_family(
    cfg: &ExperimentConfig,
    f: &Polynomial,
    seed: u64,
    others: &[(Option<f64>, Polynomial)],
) -> Result<DistanceOutcome, CliError> {
    require_variance(f)?;
    let m = f.max_var_power()?;
    let d = f.degree()?;
    let sf = sample(f, cfg.samples, seed)?;
    let mut rows = Vec::new();
    let mut reports = Vec::new();
    for (delta, g) in others {
        require_variance(g)?;
        if g.dim() != f.dim() {
            return Err(CliError::Input(format!("polynomials live in dimensions {} and {}", f.dim(), g.dim())));
        }
        let sg = sample(g, cfg.samples, seed)?;
        let grid = quantile_grid(&[sf.values(), sg.values()], cfg.grid, TAIL_QUANTILE)?;
        let (rf, rg) = (histogram_on(sf.values(), grid), histogram_on(sg.values(), grid));
        let budget = ErrorBudget::from_samples(&rf, &sf).combine(&ErrorBudget::from_samples(&rg, &sg));
        let tv = tv_distance(&rf, &rg)?;
        let kr = kr_distance(&rf, &rg)?;
        let mut eps = cfg.eps_grid(grid.step)?;
        let eps_star = corollary_epsilon(kr, m, d).ok();
        if let Some(e) = eps_star.filter(|&e| e >= 2.0 * grid.step && e < 1.0) {
            eps.push(e);
        }
        let mut report = tv_kr_inequality_check(&rf, &rg, &eps, &budget)?;
        if let Some(e) = eps_star {
            report = report.diagnostic("eps_star", e);
        }
        if let Some(dl) = delta {
            report = report.diagnostic("delta", *dl);
        }
        rows.push(DistanceRow {
            delta: *delta,
            tv,
            kr,
            noise: budget.total(),
            eps_star,
            ratio: corollary_rhs(kr, m, d).ok().map(|r| tv / r),
        });
        reports.push(report);
    }
    let points: Vec<DistancePoint> = rows
        .iter()
        .filter_map(|r| {
            Some(DistancePoint {
                delta: r.delta?,
                tv: r.tv,
                kr: r.kr,
                noise: r.noise,
            })
        })
        .filter(|p| p.kr > 0.0)
        .collect();
    let corollary = if points.len() >= 2 { Some(corollary_check(&points, m, d)?) } else { None };
    Ok(DistanceOutcome {
        rows,
        reports,
        corollary,
    })
}

fn rows_csv(rows: &[DistanceRow]) -> String {
    let opt = |v: Option<f64>| v.map_or(String::new(), |x| x.to_string());
    let mut s = String::from("delta,tv,kr,noise,eps_star,ratio\n");
    for r in rows {
        s.push_str(&format!("{},{},{},{},{},{}\n", opt(r.delta), r.tv, r.kr, r.noise, opt(r.eps_star), opt(r.ratio)));
    }
    s
}

fn probes_csv(reports: &[BoundReport]) -> String {
    let mut s = String::from("delta,eps,lhs,rhs,budget\n");
    for r in reports {
        let delta = r.diagnostics.get("delta").map_or(String::new(), |d| d.to_string());
        for p in &r.probes {
            s.push_str(&format!("{delta},{},{},{},{}\n", p.eps, p.lhs, p.rhs, p.budget));
        }
    }
    s
}

/// The comparison targets: `other` when given, else `f + delta * direction`.
pub fn distance_targets(cfg: &ExperimentConfig, f: &Polynomial) -> Result<Vec<(Option<f64>, Polynomial)>, CliError> {
    if let Some(spec) = &cfg.other {
        let g = first(cfg.resolve(spec)?)?;
        return Ok(vec![(None, g)]);
    }
    let dir = match &cfg.direction {
        Some(spec) => first(cfg.resolve(spec)?)?,
        None => Polynomial::var(f.dim(), 0)?,
    };
    cfg.deltas
        .iter()
        .map(|&dl| Ok((Some(dl), f.add(&dir.scale(dl)?)?)))
        .collect()
}

fn first(v: Vec<(String, Polynomial)>) -> Result<Polynomial, CliError> {
    v.into_iter()
        .next()
        .map(|(_, p)| p)
        .ok_or_else(|| CliError::Input("polynomial family is empty".into()))
}

pub fn cmd_distance(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<Vec<String>, CliError> {
    let mut failing = Vec::new();
    for case in cases(cfg)? {
        let l = &case.label;
        let targets = distance_targets(cfg, &case.poly)?;
        let res = out.timed(&format!("{l}/distance"), || distance_family(cfg, &case.poly, case.sample_seed, &targets))?;
        println!("{l}: {:>8} {:>12} {:>12} {:>12} {:>12}", "delta", "tv", "kr", "eps*", "ratio");
        for r in &res.rows {
            let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4e}"));
            println!(
                "{:w$}  {:>8} {:>12.4e} {:>12.4e} {:>12} {:>12}",
                "",
                r.delta.map_or("other".into(), |d| d.to_string()),
                r.tv,
                r.kr,
                opt(r.eps_star),
                opt(r.ratio),
                w = l.len()
            );
        }
        for r in res.all_reports() {
            print_report(l, r);
            if !r.passed() {
                failing.push(format!("{l}/{}", r.id));
            }
        }
        out.write(&format!("{l}/distance.csv"), &rows_csv(&res.rows))?;
        out.write(&format!("{l}/tv_kr_probes.csv"), &probes_csv(&res.reports))?;
        out.write_json(
            &format!("{l}/distance_report.json"),
            &serde_json::json!({
                "label": l,
                "polynomial": poly_text(&case.poly),
                "targets": targets.iter().map(|(d, g)| serde_json::json!({"delta": d, "polynomial": poly_text(g)})).collect::<Vec<_>>(),
                "sample_seed": case.sample_seed,
                "rows": res.rows,
                "reports": res.reports,
                "corollary": res.corollary,
            }),
        )?;
    }
    failing.dedup();
    Ok(failing)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip)]
    pub exit: i32,
}

#[derive(Serialize)]
pub struct CaseSummary {
    pub label: String,
    pub polynomial: serde_json::Value,
    pub sample_seed: u64,
    pub sample_sha256: Option<String>,
    pub checks: BTreeMap<String, CheckResult>,
    #[serde(skip)]
    pub artifacts: Vec<(String, String)>,
}

#[derive(Debug, Default, Serialize)]
pub struct FamilySummary {
    pub runs: usize,
    pub passed: usize,
    pub worst_margin: Option<f64>,
    pub worst_case: Option<String>,
}

#[derive(Serialize)]
pub struct Summary {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub count: usize,
    pub samples: usize,
    pub grid: usize,
    pub passed: bool,
    pub failing: Vec<String>,
    pub checks: BTreeMap<String, FamilySummary>,
    pub cases: Vec<CaseSummary>,
}

fn from_reports<'a>(reports: impl IntoIterator<Item = &'a BoundReport>) -> CheckResult {
    let mut passed = true;
    let mut margin = f64::INFINITY;
    for r in reports {
        passed &= r.passed();
        margin = margin.min(r.margin);
    }
    CheckResult {
        passed,
        margin: margin.is_finite().then_some(margin),
        error: None,
        exit: 0,
    }
}

fn from_error(e: CliError) -> CheckResult {
    let exit = match &e {
        CliError::Core(c) if is_resolution(c) => EXIT_RESOLUTION,
        _ => EXIT_INPUT,
    };
    CheckResult {
        passed: false,
        margin: None,
        error: Some(e.to_string()),
        exit,
    }
}

/// Small intervals centered on the histogram mode.
pub fn small_set_intervals(rho: &GriddedDensity) -> Vec<(f64, f64)> {
    let mode = (0..rho.len())
        .max_by(|&i, &j| rho.values[i].total_cmp(&rho.values[j]).then(j.cmp(&i)))
        .map_or(0.0, |i| rho.center(i));
    let mut v = vec![(mode, mode)];
    v.extend(SMALL_SET_CELLS.iter().map(|c| (mode - 0.5 * c * rho.step, mode + 0.5 * c * rho.step)));
    v
}

/// All six check families on one polynomial, with the case's data files.
pub fn verify_case(cfg: &ExperimentConfig, case: &Case) -> CaseSummary {
    let mut checks = BTreeMap::new();
    let mut reports: BTreeMap<&str, Vec<BoundReport>> = BTreeMap::new();
    let mut artifacts = Vec::new();
    let mut digest = None;
    let mut record = |fam: &'static str, r: Result<Vec<BoundReport>, CliError>| {
        let result = match r {
            Ok(rs) => {
                let c = from_reports(&rs);
                reports.insert(fam, rs);
                c
            }
            Err(e) => from_error(e),
        };
        checks.insert(fam.to_string(), result);
    };
    match Analysis::run(cfg, case) {
        Err(e) => {
            let msg = e.to_string();
            let exit = e.exit_code();
            for fam in CHECK_FAMILIES {
                record(fam, Err(CliError::Input(msg.clone())));
            }
            for r in checks.values_mut() {
                r.exit = exit;
            }
        }
        Ok(a) => {
            digest = Some(sample_digest(&a.samples));
            let f = &case.poly;
            let (lo, hi) = a.fit_range(cfg, f);
            record("sandwich", sandwich_check(&a.rho, &a.eps, &a.budget).map(|r| vec![r]).map_err(Into::into));
            record(
                "small_set",
                small_set_check(&a.samples, &a.rho, &small_set_intervals(&a.rho), &a.budget)
                    .map(|r| vec![r])
                    .map_err(Into::into),
            );
            record("envelope", envelope_params(cfg, f).map(|p| vec![envelope_check(&a.omega.restrict(lo, hi), &p)]));
            record(
                "degree_fallback",
                degree_fallback_check(f, &a.sigma.restrict(lo, hi)).map(|r| vec![r]).map_err(Into::into),
            );
            record("cf", cf_report(cfg, case, &a.samples).map(|(_, r)| vec![r]));
            let l = &case.label;
            artifacts.push((format!("cases/{l}/omega.csv"), a.omega.to_csv()));
            artifacts.push((format!("cases/{l}/sigma.csv"), a.sigma.to_csv()));
            if cfg.svg {
                artifacts.push((
                    format!("cases/{l}/modulus.svg"),
                    curve_svg(&format!("modulus of {l}"), &[("omega", &a.omega), ("sigma", &a.sigma)]),
                ));
            }
            drop(a);
            record(
                "distance",
                distance_targets(cfg, f)
                    .and_then(|t| distance_family(cfg, f, case.sample_seed, &t))
                    .map(|o| o.reports.into_iter().chain(o.corollary).collect()),
            );
        }
    }
    let mut doc = serde_json::to_string_pretty(&serde_json::json!({
        "label": case.label,
        "polynomial": poly_text(&case.poly),
        "sample_seed": case.sample_seed,
        "sample_sha256": digest,
        "reports": reports,
    }))
    .expect("reports serialize");
    doc.push('\n');
    artifacts.push((format!("cases/{}/reports.json", case.label), doc));
    CaseSummary {
        label: case.label.clone(),
        polynomial: poly_text(&case.poly),
        sample_seed: case.sample_seed,
        sample_sha256: digest,
        checks,
        artifacts,
    }
}

/// Runs every case and aggregates. The returned code is 0 when everything
/// passed, else the verdict or error code of the failures.
pub fn verify_all(cfg: &ExperimentConfig) -> Result<(Summary, i32), CliError> {
    let cs = cases(cfg)?;
    let results: Vec<CaseSummary> = cs.par_iter().map(|c| verify_case(cfg, c)).collect();
    let mut checks: BTreeMap<String, FamilySummary> = BTreeMap::new();
    let mut failing = Vec::new();
    let mut code = 0;
    for c in &results {
        for (fam, r) in &c.checks {
            let s = checks.entry(fam.clone()).or_default();
            s.runs += 1;
            if r.passed {
                s.passed += 1;
            } else {
                failing.push(format!("{}/{fam}", c.label));
                code = match (code, r.exit) {
                    (_, 0) => crate::EXIT_VERDICT,
                    (crate::EXIT_VERDICT, _) => crate::EXIT_VERDICT,
                    (_, e) => e,
                };
            }
            if let Some(m) = r.margin {
                if s.worst_margin.is_none_or(|w| m < w) {
                    s.worst_margin = Some(m);
                    s.worst_case = Some(c.label.clone());
                }
            }
        }
    }
    let summary = Summary {
        command: "verify-all".into(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        count: results.len(),
        samples: cfg.samples,
        grid: cfg.grid,
        passed: failing.is_empty(),
        failing,
        checks,
        cases: results,
    };
    Ok((summary, code))
}

pub fn cmd_verify_all(cfg: &ExperimentConfig, out: &mut Outputs) -> Result<i32, CliError> {
    if let Some(spec) = &cfg.polynomial {
        if !matches!(spec, PolySpec::Random(_)) {
            return Err(CliError::Input("verify-all needs a random-family polynomial spec".into()));
        }
    }
    let (summary, code) = out.timed("verify-all", || verify_all(cfg))?;
    println!("{:<16} {:>6} {:>6} {:>14}  worst case", "check", "runs", "passed", "worst margin");
    for (fam, s) in &summary.checks {
        println!(
            "{:<16} {:>6} {:>6} {:>14}  {}",
            fam,
            s.runs,
            s.passed,
            s.worst_margin.map_or("-".into(), |m| format!("{m:+.4e}")),
            s.worst_case.as_deref().unwrap_or("-")
        );
    }
    for c in &summary.cases {
        for (fam, r) in &c.checks {
            if let Some(e) = &r.error {
                println!("{}/{fam}: error: {e}", c.label);
            }
        }
    }
    if !summary.failing.is_empty() {
        println!("failing: {}", summary.failing.join(", "));
    }
    for c in &summary.cases {
        for (path, content) in &c.artifacts {
            out.write(path, content)?;
        }
    }
    out.write_json("summary.json", &summary)?;
    Ok(code)
}
