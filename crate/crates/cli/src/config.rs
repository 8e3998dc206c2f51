//! Experiment configuration: one JSON document, with command-line flags
//! overriding its top-level fields.

use std::path::{Path, PathBuf};

use polyreg::report::{default_eps_grid, default_t_grid, geometric_grid};
use polyreg::{random_in_class, ClassParams, CoefficientLaw, Polynomial};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::CliError;

/// Where the polynomial under study comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolySpec {
    /// `{"n": .., "terms": [{"exp": [..], "coef": ..}]}`.
    Inline(Polynomial),
    /// Path to a JSON file in the inline format, relative to the config.
    File(PathBuf),
    /// A seeded draw of `count` polynomials from a class.
    Random(RandomFamily),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RandomFamily {
    pub n: usize,
    pub m: usize,
    pub d: usize,
    #[serde(default = "default_count")]
    pub count: usize,
    /// Defaults to the master seed.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub law: CoefficientLaw,
}

fn default_count() -> usize {
    10
}

impl Default for RandomFamily {
    fn default() -> Self {
        RandomFamily {
            n: 3,
            m: 1,
            d: 3,
            count: default_count(),
            seed: None,
            law: CoefficientLaw::default(),
        }
    }
}

/// A geometric grid or an explicit list of points.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ProbeSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lo: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub per_decade: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TestHooks {
    /// Replaces `1/m` in the modulus envelope.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub envelope_exponent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub polynomial: Option<PolySpec>,
    /// Second polynomial for `distance`.
    #[serde(default)]
    pub other: Option<PolySpec>,
    /// Perturbation direction for `distance`: `g = f + delta * direction`.
    #[serde(default)]
    pub direction: Option<PolySpec>,
    #[serde(default = "default_deltas")]
    pub deltas: Vec<f64>,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default)]
    pub eps: ProbeSpec,
    #[serde(default)]
    pub t: ProbeSpec,
    /// Envelope and degree fits use `eps <= fit_scale * sd(f)`.
    #[serde(default = "default_fit_scale")]
    pub fit_scale: f64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub workers: Option<usize>,
    #[serde(default)]
    pub svg: bool,
    #[serde(default)]
    pub test_hooks: TestHooks,
    /// Directory that relative file paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn default_deltas() -> Vec<f64> {
    vec![0.02, 0.05, 0.1, 0.2]
}
fn default_samples() -> usize {
    1_000_000
}
fn default_grid() -> usize {
    400
}
fn default_fit_scale() -> f64 {
    0.25
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_seed() -> u64 {
    1
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields have defaults")
    }
}

/// Command-line overrides of top-level fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub d: Option<usize>,
    pub samples: Option<usize>,
    pub grid: Option<usize>,
    pub workers: Option<usize>,
    pub count: Option<usize>,
    pub svg: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::Input(format!("bad config {}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.seed = s;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
        if let Some(s) = o.samples {
            self.samples = s;
        }
        if let Some(g) = o.grid {
            self.grid = g;
        }
        if o.workers.is_some() {
            self.workers = o.workers;
        }
        if o.svg {
            self.svg = true;
        }
        if o.n.is_some() || o.m.is_some() || o.d.is_some() || o.count.is_some() {
            let mut fam = match &self.polynomial {
                Some(PolySpec::Random(f)) => f.clone(),
                _ => RandomFamily::default(),
            };
            fam.n = o.n.unwrap_or(fam.n);
            fam.m = o.m.unwrap_or(fam.m);
            fam.d = o.d.unwrap_or(fam.d);
            fam.count = o.count.unwrap_or(fam.count);
            self.polynomial = Some(PolySpec::Random(fam));
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.samples == 0 {
            return Err(CliError::Input("samples must be positive".into()));
        }
        if self.grid < 16 {
            return Err(CliError::Input(format!("grid needs at least 16 cells, got {}", self.grid)));
        }
        if !(self.fit_scale > 0.0) {
            return Err(CliError::Input("fit_scale must be positive".into()));
        }
        if self.workers == Some(0) {
            return Err(CliError::Input("workers must be positive".into()));
        }
        if self.deltas.iter().any(|d| !d.is_finite() || *d == 0.0) {
            return Err(CliError::Input("deltas must be finite and nonzero".into()));
        }
        for spec in [&self.polynomial, &self.other, &self.direction].into_iter().flatten() {
            if let PolySpec::File(p) = spec {
                let full = self.base_dir.join(p);
                if !full.exists() {
                    return Err(CliError::Input(format!("polynomial file {} does not exist", full.display())));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the effective configuration, leaving out the fields that
    /// cannot change results (output directory, worker count).
    pub fn hash(&self) -> String {
        let mut canon = self.clone();
        canon.out = PathBuf::new();
        canon.workers = None;
        let json = serde_json::to_string(&canon).expect("config serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    /// Polynomials named by `spec`, labeled for reports.
    pub fn resolve(&self, spec: &PolySpec) -> Result<Vec<(String, Polynomial)>, CliError> {
        match spec {
            PolySpec::Inline(p) => Ok(vec![("f".into(), p.clone())]),
            PolySpec::File(path) => {
                let full = self.base_dir.join(path);
                let text = std::fs::read_to_string(&full)
                    .map_err(|e| CliError::Input(format!("cannot read {}: {e}", full.display())))?;
                Ok(vec![("f".into(), Polynomial::from_json(&text)?)])
            }
            PolySpec::Random(fam) => {
                let class = ClassParams::new(fam.n, fam.m, fam.d)?;
                let seed = fam.seed.unwrap_or(self.seed);
                (0..fam.count)
                    .map(|k| {
                        let p = random_in_class(&class, family_seed(seed, k), &fam.law)?;
                        Ok((format!("f{k:03}"), p))
                    })
                    .collect()
            }
        }
    }

    pub fn polynomials(&self) -> Result<Vec<(String, Polynomial)>, CliError> {
        let spec = self
            .polynomial
            .clone()
            .unwrap_or_else(|| PolySpec::Random(RandomFamily::default()));
        self.resolve(&spec)
    }

    /// The `eps` probes for a density of cell width `step`.
    pub fn eps_grid(&self, step: f64) -> Result<Vec<f64>, CliError> {
        let min = 2.0 * step;
        let grid = match (&self.eps.values, self.eps.lo, self.eps.hi, self.eps.per_decade) {
            (Some(v), ..) => v.clone(),
            (None, None, None, None) => default_eps_grid(step)?,
            (None, lo, hi, per) => {
                let lo = lo.unwrap_or((2.0 * step).max(polyreg::report::EPS_FLOOR));
                geometric_grid(lo, hi.unwrap_or(1.0), per.unwrap_or(polyreg::report::EPS_PER_DECADE))?
            }
        };
        if let Some(&bad) = grid.iter().find(|&&e| !(e >= min * (1.0 - 1e-9))) {
            return Err(polyreg::Error::EpsilonBelowResolution { eps: bad, min }.into());
        }
        Ok(grid)
    }

    pub fn t_grid(&self) -> Result<Vec<f64>, CliError> {
        Ok(match (&self.t.values, self.t.lo, self.t.hi, self.t.per_decade) {
            (Some(v), ..) => v.clone(),
            (None, None, None, None) => default_t_grid(),
            (None, lo, hi, per) => geometric_grid(
                lo.unwrap_or(0.1),
                hi.unwrap_or(1000.0),
                per.unwrap_or(polyreg::report::T_PER_DECADE),
            )?,
        })
    }
}

/// Seed of the `k`-th member of a random family (SplitMix64 step).
pub fn family_seed(seed: u64, k: usize) -> u64 {
    let mut z = seed.wrapping_add((k as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_overrides() {
        let mut c = ExperimentConfig::default();
        assert_eq!(c.samples, 1_000_000);
        assert_eq!(c.grid, 400);
        c.apply(&Overrides {
            n: Some(2),
            seed: Some(9),
            ..Default::default()
        });
        assert_eq!(c.seed, 9);
        match &c.polynomial {
            Some(PolySpec::Random(f)) => assert_eq!((f.n, f.m, f.d, f.count), (2, 1, 3, 10)),
            other => panic!("{other:?}"),
        }
        assert_eq!(c.polynomials().unwrap().len(), 10);
    }

    #[test]
    fn parses_inline_polynomial() {
        let c: ExperimentConfig = serde_json::from_str(
            r#"{"polynomial": {"inline": {"n": 2, "terms": [{"exp": [1, 1], "coef": 1.0}]}}, "samples": 1000}"#,
        )
        .unwrap();
        let ps = c.polynomials().unwrap();
        assert_eq!(ps[0].1.degree().unwrap(), 2);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn eps_below_resolution_is_rejected() {
        let mut c = ExperimentConfig::default();
        c.eps.values = Some(vec![0.001, 0.1]);
        assert!(matches!(
            c.eps_grid(0.01),
            Err(CliError::Core(polyreg::Error::EpsilonBelowResolution { .. }))
        ));
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.workers = Some(8);
        b.out = PathBuf::from("elsewhere");
        assert_eq!(a.hash(), b.hash());
        b.seed = 2;
        assert_ne!(a.hash(), b.hash());
    }
}
