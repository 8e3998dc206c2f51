//! Monte Carlo realizations of `f(X)` and gridded density estimates.
//!
//! Sampling splits the output into fixed chunks of [`CHUNK`] values. Chunk
//! `c` draws from a ChaCha8 generator seeded with the run seed and switched
//! to stream `c`; normals come from the ziggurat sampler of `rand_distr`.
//! The result therefore depends only on `(f, N, seed)`, never on how many
//! worker threads process the chunks.
//!
//! A [`GriddedDensity`] is a piecewise-constant function on `G` equal cells
//! `[lo + i step, lo + (i+1) step)`, zero outside. All functionals treat it
//! as that exact function.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};
use crate::poly::Polynomial;

/// Samples per deterministic substream.
pub const CHUNK: usize = 1 << 14;

/// Default tail quantile cut per side.
pub const TAIL_QUANTILE: f64 = 1e-4;

/// Allowed mass deficit of a density grid.
pub const MASS_TOL: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    values: Vec<f64>,
    seed: u64,
    polynomial: Polynomial,
}

#[derive(Serialize, Deserialize)]
struct SampleSidecar {
    seed: u64,
    #[serde(rename = "N")]
    count: usize,
    polynomial: Polynomial,
}

impl SampleSet {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn polynomial(&self) -> &Polynomial {
        &self.polynomial
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Unbiased sample variance.
    pub fn sample_variance(&self) -> f64 {
        let n = self.values.len();
        if n < 2 {
            return 0.0;
        }
        let mean = self.mean();
        self.values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64
    }

    /// Two disjoint halves. They come from distinct substreams, hence are
    /// independent of each other.
    pub fn halves(&self) -> (&[f64], &[f64]) {
        self.values.split_at(self.values.len() / 2)
    }

    /// Writes little-endian `f64` values to `path` and the JSON sidecar
    /// `{seed, N, polynomial}` next to it with extension `json`.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        w.flush()?;
        let sidecar = SampleSidecar {
            seed: self.seed,
            count: self.values.len(),
            polynomial: self.polynomial.clone(),
        };
        fs::write(path.with_extension("json"), serde_json::to_string_pretty(&sidecar)?)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let sidecar: SampleSidecar = serde_json::from_str(&fs::read_to_string(path.with_extension("json"))?)?;
        let bytes = fs::read(path)?;
        if bytes.len() != 8 * sidecar.count {
            return Err(Error::invalid(format!(
                "sample file holds {} bytes, sidecar announces {} values",
                bytes.len(),
                sidecar.count
            )));
        }
        let values = bytes
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8-byte chunk")))
            .collect();
        Ok(SampleSet {
            values,
            seed: sidecar.seed,
            polynomial: sidecar.polynomial,
        })
    }
}

/// `count` i.i.d. realizations of `f(X)`, using the ambient rayon pool.
pub fn sample(f: &Polynomial, count: usize, seed: u64) -> Result<SampleSet> {
    if count == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    let compiled = f.compile();
    let n = f.dim();
    let mut values = vec![0.0; count];
    values
        .par_chunks_mut(CHUNK)
        .enumerate()
        .for_each(|(chunk, out)| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(chunk as u64);
            let mut x = vec![0.0; n];
            let mut scratch = Vec::new();
            for slot in out.iter_mut() {
                for xi in x.iter_mut() {
                    *xi = rng.sample(StandardNormal);
                }
                *slot = compiled.eval_with(&x, &mut scratch);
            }
        });
    Ok(SampleSet {
        values,
        seed,
        polynomial: f.clone(),
    })
}

/// Same as [`sample`] on a dedicated pool of `workers` threads.
pub fn sample_with_workers(f: &Polynomial, count: usize, seed: u64, workers: usize) -> Result<SampleSet> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::invalid(format!("cannot build thread pool: {e}")))?;
    pool.install(|| sample(f, count, seed))
}

/// Uniform cell layout `[lo + i step, lo + (i+1) step)`, `i < cells`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub lo: f64,
    pub step: f64,
    pub cells: usize,
}

impl GridSpec {
    pub fn new(lo: f64, step: f64, cells: usize) -> Result<Self> {
        if !(step > 0.0) || !step.is_finite() || !lo.is_finite() || cells == 0 {
            return Err(Error::invalid(format!(
                "grid needs finite lo, step > 0 and cells >= 1 (lo = {lo}, step = {step}, cells = {cells})"
            )));
        }
        Ok(GridSpec { lo, step, cells })
    }

    /// `cells` cells covering `[lo, hi]`.
    pub fn covering(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        GridSpec::new(lo, (hi - lo) / cells as f64, cells)
    }

    pub fn hi(&self) -> f64 {
        self.lo + self.step * self.cells as f64
    }

    pub fn edge(&self, i: usize) -> f64 {
        self.lo + self.step * i as f64
    }

    pub fn center(&self, i: usize) -> f64 {
        self.lo + self.step * (i as f64 + 0.5)
    }

    fn cell_of(&self, v: f64) -> Option<usize> {
        let pos = ((v - self.lo) / self.step).floor();
        (pos >= 0.0 && pos < self.cells as f64).then_some(pos as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GriddedDensity {
    pub lo: f64,
    pub step: f64,
    pub values: Vec<f64>,
    /// Mass of the underlying law that falls outside the grid.
    pub truncated_mass: f64,
    /// Kernel bandwidth, for kernel estimates.
    pub bandwidth: Option<f64>,
}

impl GriddedDensity {
    pub fn new(lo: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        GridSpec::new(lo, step, values.len())?;
        if let Some(bad) = values.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::invalid(format!("density value {bad} is not finite and nonnegative")));
        }
        let mass = step * values.iter().sum::<f64>();
        Ok(GriddedDensity {
            lo,
            step,
            values,
            truncated_mass: (1.0 - mass).max(0.0),
            bandwidth: None,
        })
    }

    pub fn grid(&self) -> GridSpec {
        GridSpec {
            lo: self.lo,
            step: self.step,
            cells: self.values.len(),
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn hi(&self) -> f64 {
        self.grid().hi()
    }

    pub fn center(&self, i: usize) -> f64 {
        self.grid().center(i)
    }

    pub fn mass(&self) -> f64 {
        self.step * self.values.iter().sum::<f64>()
    }

    /// `step * mass <= 1` and at least `1 - tol`.
    pub fn check_mass(&self, tol: f64) -> Result<()> {
        let mass = self.mass();
        if mass > 1.0 + 1e-9 || mass < 1.0 - tol {
            return Err(Error::invalid(format!("density mass {mass} outside [1 - {tol}, 1]")));
        }
        Ok(())
    }

    /// Total variation of the step function, jumps at both ends included.
    pub fn total_variation(&self) -> f64 {
        let inner: f64 = self.values.windows(2).map(|w| (w[1] - w[0]).abs()).sum();
        inner + self.values.first().copied().unwrap_or(0.0) + self.values.last().copied().unwrap_or(0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.grid().cell_of(x).map_or(0.0, |i| self.values[i])
    }

    /// Density of `alpha W + beta` when `self` is the density of `W`.
    pub fn affine_image(&self, alpha: f64, beta: f64) -> Result<GriddedDensity> {
        if alpha == 0.0 || !alpha.is_finite() || !beta.is_finite() {
            return Err(Error::invalid("affine image needs finite alpha != 0 and finite beta"));
        }
        let scale = alpha.abs();
        let mut values: Vec<f64> = self.values.iter().map(|v| v / scale).collect();
        let lo = if alpha > 0.0 {
            alpha * self.lo + beta
        } else {
            values.reverse();
            alpha * self.hi() + beta
        };
        Ok(GriddedDensity {
            lo,
            step: self.step * scale,
            values,
            truncated_mass: self.truncated_mass,
            bandwidth: self.bandwidth.map(|h| h * scale),
        })
    }

    /// Two-column CSV `x,density` at cell centers.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(fs::File::create(path)?);
        writeln!(w, "x,density")?;
        for (i, v) in self.values.iter().enumerate() {
            writeln!(w, "{},{}", self.center(i), v)?;
        }
        w.flush()?;
        Ok(())
    }

    /// L1 distance to an oracle law: cell-wise against exact cell averages,
    /// plus the oracle mass outside the grid.
    pub fn l1_to_oracle(&self, oracle: &Oracle) -> f64 {
        let grid = self.grid();
        let mut inside = 0.0;
        let mut l1 = 0.0;
        let mut prev = oracle.cdf(grid.edge(0));
        for (i, v) in self.values.iter().enumerate() {
            let next = oracle.cdf(grid.edge(i + 1));
            let cell = next - prev;
            inside += cell;
            l1 += (v * self.step - cell).abs();
            prev = next;
        }
        l1 + (1.0 - inside).max(0.0)
    }
}

/// How a histogram chooses its range.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum RangePolicy {
    /// Sample quantiles `[q, 1 - q]`, padded by two cells on each side.
    Quantile(f64),
    Fixed { lo: f64, hi: f64 },
}

impl Default for RangePolicy {
    fn default() -> Self {
        RangePolicy::Quantile(TAIL_QUANTILE)
    }
}

fn quantile_pair(values: &[f64], q: f64) -> (f64, f64) {
    let mut buf = values.to_vec();
    let n = buf.len();
    let lo_idx = ((q * (n - 1) as f64).floor() as usize).min(n - 1);
    let hi_idx = (((1.0 - q) * (n - 1) as f64).ceil() as usize).min(n - 1);
    let (_, lo, _) = buf.select_nth_unstable_by(lo_idx, f64::total_cmp);
    let lo = *lo;
    let (_, hi, _) = buf.select_nth_unstable_by(hi_idx, f64::total_cmp);
    (lo, *hi)
}

/// Quantile range of the pooled samples, padded by two cells on each side,
/// split into `bins` cells.
pub fn quantile_grid(samples: &[&[f64]], bins: usize, q: f64) -> Result<GridSpec> {
    if bins < 16 {
        return Err(Error::invalid(format!("histogram needs at least 16 bins, got {bins}")));
    }
    if !(0.0..0.5).contains(&q) {
        return Err(Error::invalid(format!("tail quantile {q} outside [0, 0.5)")));
    }
    let pooled: Vec<f64> = samples.iter().flat_map(|s| s.iter().copied()).collect();
    if pooled.is_empty() {
        return Err(Error::invalid("no samples"));
    }
    let (mut lo, mut hi) = quantile_pair(&pooled, q);
    if hi <= lo {
        let (min, max) = pooled
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
        lo = min;
        hi = max;
    }
    if !(hi > lo) {
        return Err(Error::DegenerateRange);
    }
    let step = (hi - lo) / (bins - 4) as f64;
    GridSpec::new(lo - 2.0 * step, step, bins)
}

/// Normalized counts of `values` on `grid`. Values outside the grid count as
/// truncated mass.
pub fn histogram_on(values: &[f64], grid: GridSpec) -> GriddedDensity {
    let mut counts = vec![0u64; grid.cells];
    let mut inside = 0u64;
    for &v in values {
        if let Some(i) = grid.cell_of(v) {
            counts[i] += 1;
            inside += 1;
        }
    }
    let norm = 1.0 / (values.len() as f64 * grid.step);
    GriddedDensity {
        lo: grid.lo,
        step: grid.step,
        values: counts.iter().map(|&c| c as f64 * norm).collect(),
        truncated_mass: 1.0 - inside as f64 / values.len() as f64,
        bandwidth: None,
    }
}

pub fn histogram_density(s: &SampleSet, bins: usize, policy: RangePolicy) -> Result<GriddedDensity> {
    if s.len() < 10 * bins {
        return Err(Error::invalid(format!(
            "histogram with {bins} bins needs at least {} samples, got {}",
            10 * bins,
            s.len()
        )));
    }
    let grid = match policy {
        RangePolicy::Quantile(q) => quantile_grid(&[s.values()], bins, q)?,
        RangePolicy::Fixed { lo, hi } => {
            if bins < 16 {
                return Err(Error::invalid(format!("histogram needs at least 16 bins, got {bins}")));
            }
            if !(hi > lo) {
                return Err(Error::DegenerateRange);
            }
            GridSpec::covering(lo, hi, bins)?
        }
    };
    Ok(histogram_on(s.values(), grid))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Bandwidth {
    /// `0.9 min(sd, IQR / 1.34) N^{-1/5}`.
    Silverman,
    Fixed(f64),
}

pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0).max(1.0)).sqrt();
    let (q1, q3) = quantile_pair(values, 0.25);
    let iqr = q3 - q1;
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * n.powf(-0.2)
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// Gaussian kernel estimate on a uniform grid of `cells` cells. Samples are
/// binned on the output grid (extended by four bandwidths on each side) and
/// the kernel is integrated exactly over each output cell, so the mass never
/// exceeds one.
pub fn kde_density(s: &SampleSet, cells: usize, bandwidth: Bandwidth) -> Result<GriddedDensity> {
    if s.len() < 10 * cells {
        return Err(Error::invalid(format!(
            "kernel estimate on {cells} cells needs at least {} samples, got {}",
            10 * cells,
            s.len()
        )));
    }
    let h = match bandwidth {
        Bandwidth::Silverman => silverman_bandwidth(s.values()),
        Bandwidth::Fixed(h) => h,
    };
    if !(h > 0.0) || !h.is_finite() {
        return Err(if matches!(bandwidth, Bandwidth::Silverman) {
            Error::DegenerateRange
        } else {
            Error::invalid(format!("bandwidth must be positive, got {h}"))
        });
    }
    let core = quantile_grid(&[s.values()], cells.max(16), TAIL_QUANTILE)?;
    let (lo, hi) = (core.lo - 4.0 * h, core.hi() + 4.0 * h);
    let grid = GridSpec::covering(lo, hi, cells)?;
    let pad = (4.0 * h / grid.step).ceil() as usize;
    let ext = GridSpec::new(grid.lo - pad as f64 * grid.step, grid.step, cells + 2 * pad)?;
    let mut counts = vec![0u64; ext.cells];
    for &v in s.values() {
        if let Some(i) = ext.cell_of(v) {
            counts[i] += 1;
        }
    }
    // weight[k]: mass that a unit at an extended cell center puts into an
    // output cell whose center sits k cells to the right of it
    let span = ext.cells as isize;
    let weight = |k: isize| -> f64 {
        let a = (k as f64 - 0.5) * grid.step / h;
        let b = (k as f64 + 0.5) * grid.step / h;
        normal_cdf(b) - normal_cdf(a)
    };
    let table: Vec<f64> = (-span..=span).map(weight).collect();
    let norm = 1.0 / (s.len() as f64 * grid.step);
    let values = (0..cells)
        .map(|j| {
            let jj = (j + pad) as isize;
            counts
                .iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(|(i, &c)| c as f64 * table[(jj - i as isize + span) as usize])
                .sum::<f64>()
                * norm
        })
        .collect::<Vec<f64>>();
    let mut out = GriddedDensity::new(grid.lo, grid.step, values)?;
    out.bandwidth = Some(h);
    Ok(out)
}

/// Closed-form laws used to validate estimators.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Oracle {
    Normal { mean: f64, sd: f64 },
    /// Law of `X^2`.
    Chisq1,
    /// Law of `X_1 X_2`.
    ProductNormal,
    /// Law of `X_1 (X_2 + shift)`.
    ShiftedProductNormal { shift: f64 },
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

fn gauss(u: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * u * u).exp()
}

impl Oracle {
    pub fn parse(name: &str) -> Result<Oracle> {
        match name {
            "normal" => Ok(Oracle::Normal { mean: 0.0, sd: 1.0 }),
            "chisq1" => Ok(Oracle::Chisq1),
            "product_normal" => Ok(Oracle::ProductNormal),
            other => Err(Error::UnsupportedKind(other.to_string())),
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Oracle::Normal { mean, sd } if !(sd > 0.0) || !mean.is_finite() || !sd.is_finite() => Err(
                Error::invalid(format!("normal oracle needs finite mean and sd > 0, got ({mean}, {sd})")),
            ),
            Oracle::ShiftedProductNormal { shift } if !shift.is_finite() => {
                Err(Error::invalid(format!("shift must be finite, got {shift}")))
            }
            _ => Ok(()),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            Oracle::Normal { mean, sd } => gauss((x - mean) / sd) / sd,
            Oracle::Chisq1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    (-0.5 * x).exp() / (2.0 * std::f64::consts::PI * x).sqrt()
                }
            }
            Oracle::ProductNormal => product_normal_pdf(x),
            Oracle::ShiftedProductNormal { shift } => shifted_product_pdf(x, shift),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Oracle::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Oracle::Chisq1 => {
                if x <= 0.0 {
                    0.0
                } else {
                    1.0 - erfc((0.5 * x).sqrt())
                }
            }
            Oracle::ProductNormal => {
                if x == f64::INFINITY {
                    return 1.0;
                }
                if x == f64::NEG_INFINITY {
                    return 0.0;
                }
                0.5 + 0.5 * x.signum() * product_normal_abs_cdf(x.abs())
            }
            Oracle::ShiftedProductNormal { shift } => shifted_product_cdf(x, shift),
        }
    }
}

/// Integration cut-off for the standard normal factor.
const GAUSS_TAIL: f64 = 40.0;

/// `int gamma(u) gamma(x/u) / |u| du`. The integrand of the half-line form is
/// invariant under `u -> |x|/u`, so the integral is four times the piece
/// over `[sqrt|x|, inf)`, where it is smooth.
fn product_normal_pdf(x: f64) -> f64 {
    let ax = x.abs();
    if ax == 0.0 {
        return f64::INFINITY;
    }
    let root = ax.sqrt();
    let integrand = |u: f64| gauss(u) * gauss(ax / u) / u;
    4.0 * quadrature::integrate(integrand, root, root + GAUSS_TAIL, 1e-14).integral
}

/// `P(|X_1 X_2| <= t) = 2 int_0^inf gamma(u) (2 Phi(t/u) - 1) du`.
fn product_normal_abs_cdf(t: f64) -> f64 {
    if t == 0.0 {
        return 0.0;
    }
    let inner = |u: f64| {
        if u == 0.0 {
            gauss(0.0)
        } else {
            gauss(u) * (1.0 - erfc(t / u / std::f64::consts::SQRT_2))
        }
    };
    let root = t.sqrt();
    let a = quadrature::integrate(inner, 0.0, root, 1e-14).integral;
    let b = quadrature::integrate(inner, root, root + GAUSS_TAIL, 1e-14).integral;
    (2.0 * (a + b)).min(1.0)
}

/// Splits `[0, inf)` at `sqrt|x|`, where the integrands below change scale.
fn half_line(x: f64, f: impl Fn(f64) -> f64) -> f64 {
    let root = x.abs().sqrt();
    let a = if root > 0.0 { quadrature::integrate(&f, 0.0, root, 1e-14).integral } else { 0.0 };
    a + quadrature::integrate(&f, root, root + GAUSS_TAIL, 1e-14).integral
}

/// `int_0^inf gamma(u) (gamma(x/u - s) + gamma(x/u + s)) / u du`.
fn shifted_product_pdf(x: f64, shift: f64) -> f64 {
    if x == 0.0 {
        return f64::INFINITY;
    }
    half_line(x, |u| {
        if u == 0.0 {
            0.0
        } else {
            gauss(u) * (gauss(x / u - shift) + gauss(x / u + shift)) / u
        }
    })
}

/// `P(X_1 (X_2 + s) <= x) = int_0^inf gamma(u) (Phi(x/u - s) + Phi(x/u + s)) du`.
fn shifted_product_cdf(x: f64, shift: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    let v = half_line(x, |u| {
        let ratio = if u == 0.0 { x.signum() * f64::INFINITY } else { x / u };
        gauss(u) * (normal_cdf(ratio - shift) + normal_cdf(ratio + shift))
    });
    v.clamp(0.0, 1.0)
}

/// Exact cell averages of an oracle law on `grid`.
pub fn oracle_density(oracle: &Oracle, grid: GridSpec) -> Result<GriddedDensity> {
    oracle.validate()?;
    let grid = GridSpec::new(grid.lo, grid.step, grid.cells)?;
    let edges: Vec<f64> = (0..=grid.cells).map(|i| oracle.cdf(grid.edge(i))).collect();
    let values = edges.windows(2).map(|w| ((w[1] - w[0]) / grid.step).max(0.0)).collect();
    GriddedDensity::new(grid.lo, grid.step, values)
}

/// Right-continuous empirical distribution function.
#[derive(Clone, Debug)]
pub struct Ecdf {
    sorted: Vec<f64>,
}

impl Ecdf {
    pub fn new(s: &SampleSet) -> Self {
        Ecdf::from_values(s.values())
    }

    pub fn from_values(values: &[f64]) -> Self {
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ecdf { sorted }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.sorted.len() as f64
    }

    /// Empirical probability of `(a, b]`.
    pub fn interval(&self, a: f64, b: f64) -> f64 {
        if b <= a {
            return 0.0;
        }
        self.eval(b) - self.eval(a)
    }
}

pub fn ecdf(s: &SampleSet) -> Ecdf {
    Ecdf::new(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn x1() -> Polynomial {
        Polynomial::var(1, 0).unwrap()
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = Polynomial::new(2, vec![(vec![1, 1], 1.0), (vec![2, 0], 0.5)]).unwrap();
        let a = sample(&f, 50_000, 9).unwrap();
        let b = sample(&f, 50_000, 9).unwrap();
        assert_eq!(a, b);
        let c = sample(&f, 50_000, 10).unwrap();
        assert_ne!(a.values(), c.values());
        // a prefix of a longer run is the shorter run
        let d = sample(&f, 70_000, 9).unwrap();
        assert_eq!(&d.values()[..50_000], a.values());
    }

    #[test]
    fn worker_count_does_not_matter() {
        let f = Polynomial::new(3, vec![(vec![1, 1, 0], 1.0), (vec![0, 0, 2], -1.0)]).unwrap();
        let one = sample_with_workers(&f, 100_000, 3, 1).unwrap();
        let eight = sample_with_workers(&f, 100_000, 3, 8).unwrap();
        assert_eq!(one, eight);
    }

    #[test]
    fn sample_persistence() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.bin");
        let s = sample(&x1(), 1000, 4).unwrap();
        s.save(&path).unwrap();
        assert_eq!(SampleSet::load(&path).unwrap(), s);
        assert_eq!(fs::metadata(&path).unwrap().len(), 8000);
        let side: serde_json::Value = serde_json::from_str(&fs::read_to_string(path.with_extension("json")).unwrap()).unwrap();
        assert_eq!(side["N"], 1000);
        assert_eq!(side["seed"], 4);
    }

    #[test]
    fn histogram_rejects_constants_and_small_inputs() {
        let c = sample(&Polynomial::constant(1, 2.0), 10_000, 1).unwrap();
        assert!(matches!(histogram_density(&c, 100, RangePolicy::default()), Err(Error::DegenerateRange)));
        let s = sample(&x1(), 100, 1).unwrap();
        assert!(histogram_density(&s, 100, RangePolicy::default()).is_err());
        assert!(histogram_density(&s, 8, RangePolicy::default()).is_err());
    }

    #[test]
    fn histogram_mass_invariant() {
        let s = sample(&x1(), 200_000, 2).unwrap();
        let h = histogram_density(&s, 400, RangePolicy::default()).unwrap();
        assert!(h.mass() >= 0.999 && h.mass() <= 1.0 + 1e-12);
        assert_relative_eq!(h.mass() + h.truncated_mass, 1.0, epsilon = 1e-12);
        h.check_mass(MASS_TOL).unwrap();
    }

    #[test]
    fn oracle_point_values() {
        let normal = Oracle::Normal { mean: 0.0, sd: 1.0 };
        assert_relative_eq!(normal.pdf(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_relative_eq!(Oracle::Chisq1.pdf(1.0), (-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt(), epsilon = 1e-15);
        assert!((Oracle::Chisq1.pdf(1.0) - 0.2420).abs() < 1e-4);
        assert!(matches!(Oracle::parse("cauchy"), Err(Error::UnsupportedKind(_))));
        assert!(oracle_density(&Oracle::Normal { mean: 0.0, sd: -1.0 }, GridSpec::new(0.0, 0.1, 10).unwrap()).is_err());
    }

    /// `(1/pi) K_0(|x|)` by its power series, independent of the quadrature.
    fn k0_over_pi(x: f64) -> f64 {
        let euler = 0.577_215_664_901_532_9;
        let y = 0.25 * x * x;
        let mut term = 1.0;
        let mut harmonic = 0.0;
        let mut sum = -((0.5 * x).ln() + euler);
        for k in 1..60 {
            term *= y / (k * k) as f64;
            harmonic += 1.0 / k as f64;
            sum += term * (harmonic - (0.5 * x).ln() - euler);
        }
        sum / std::f64::consts::PI
    }

    #[test]
    fn shifted_product_reduces_and_differentiates() {
        let zero = Oracle::ShiftedProductNormal { shift: 0.0 };
        for x in [-3.0, -0.4, 0.0, 0.01, 1.5] {
            assert!((zero.cdf(x) - Oracle::ProductNormal.cdf(x)).abs() < 1e-10, "x={x}");
        }
        let o = Oracle::ShiftedProductNormal { shift: 0.3 };
        let h = 1e-5;
        for x in [-2.0, -0.5, 0.2, 1.0, 4.0] {
            let numeric = (o.cdf(x + h) - o.cdf(x - h)) / (2.0 * h);
            assert!((numeric - o.pdf(x)).abs() < 1e-6 * (1.0 + o.pdf(x)), "x={x}");
        }
        let grid = GridSpec::covering(-30.0, 30.0, 3000).unwrap();
        let rho = oracle_density(&o, grid).unwrap();
        assert!((rho.mass() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn product_normal_matches_bessel_series() {
        for &x in &[0.01, 0.1, 0.5, 1.0, 2.0, 4.0, -1.5] {
            let want = k0_over_pi(f64::abs(x));
            assert!((Oracle::ProductNormal.pdf(x) - want).abs() < 1e-10 * want.max(1.0), "x = {x}");
        }
        assert!((Oracle::ProductNormal.pdf(1.0) - 0.134_016).abs() < 1e-5);
        // cdf differences against midpoint integration of the series
        let (a, b) = (0.5, 1.5);
        let steps = 20_000;
        let mid: f64 = (0..steps)
            .map(|i| k0_over_pi(a + (b - a) * (i as f64 + 0.5) / steps as f64))
            .sum::<f64>()
            * (b - a)
            / steps as f64;
        let diff = Oracle::ProductNormal.cdf(b) - Oracle::ProductNormal.cdf(a);
        assert!((diff - mid).abs() < 1e-8);
        assert_relative_eq!(Oracle::ProductNormal.cdf(0.0), 0.5, epsilon = 1e-15);
        assert!(Oracle::ProductNormal.cdf(30.0) > 1.0 - 1e-10);
    }

    #[test]
    fn oracle_grid_has_exact_mass() {
        let g = oracle_density(&Oracle::Chisq1, GridSpec::covering(0.0, 20.0, 400).unwrap()).unwrap();
        assert!((g.mass() + g.truncated_mass - 1.0).abs() < 1e-12);
        assert!(g.truncated_mass < 1e-4);
        g.check_mass(MASS_TOL).unwrap();
    }

    #[test]
    fn affine_image_relocates_grid() {
        let g = oracle_density(&Oracle::Chisq1, GridSpec::covering(0.0, 10.0, 100).unwrap()).unwrap();
        let img = g.affine_image(-2.0, 1.0).unwrap();
        assert_relative_eq!(img.hi(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(img.lo, -19.0, epsilon = 1e-12);
        assert_relative_eq!(img.mass(), g.mass(), epsilon = 1e-12);
        assert_relative_eq!(img.eval(0.9), g.eval(0.05) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn kde_tiny_bandwidth_keeps_mass() {
        let s = sample(&x1(), 400, 5).unwrap();
        let k = kde_density(&s, 32, Bandwidth::Fixed(1e-6)).unwrap();
        assert!(k.mass() <= 1.0 + 1e-12 && k.mass() >= 1.0 - MASS_TOL);
        assert_eq!(k.bandwidth, Some(1e-6));
        let auto = kde_density(&s, 32, Bandwidth::Silverman).unwrap();
        assert!(auto.bandwidth.unwrap() > 0.0);
        let c = sample(&Polynomial::constant(1, 1.0), 1000, 1).unwrap();
        assert!(matches!(kde_density(&c, 32, Bandwidth::Silverman), Err(Error::DegenerateRange)));
    }

    #[test]
    fn ecdf_edges() {
        let s = sample(&x1(), 10_000, 6).unwrap();
        let e = ecdf(&s);
        assert_eq!(e.eval(-100.0), 0.0);
        assert_eq!(e.eval(100.0), 1.0);
        assert!((e.eval(0.0) - 0.5).abs() <= 4.0 / (2.0 * (10_000f64).sqrt()));
        assert_eq!(e.interval(0.3, 0.3), 0.0);
        assert_relative_eq!(e.interval(-100.0, 100.0), 1.0);
    }
}
