//! Experiment configuration: TOML (comments allowed) or JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, ZkError};
use crate::grid::Grid;
use crate::harness::estimates::{EnsembleSpec, EstimateId, EstimateParams};
use crate::measure::{QueryFamily, Variant};
use crate::projectors::Dyadic;
use crate::solver::EvolutionConfig;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    #[serde(rename = "Lx")]
    pub lx: f64,
    #[serde(rename = "Nx")]
    pub nx: usize,
    #[serde(rename = "Ny")]
    pub ny: usize,
    #[serde(rename = "Tw")]
    pub tw: f64,
    #[serde(rename = "Nt")]
    pub nt: usize,
}

impl GridSection {
    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.lx, self.nx, self.ny, self.tw, self.nt).map_err(|e| ZkError::config("grid", e.to_string()))
    }

    /// `Nx,Ny,Nt,Lx,Tw`
    pub fn parse_flag(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        let bad = || ZkError::config("grid", format!("expected Nx,Ny,Nt,Lx,Tw, got `{s}`"));
        if parts.len() != 5 {
            return Err(bad());
        }
        let int = |i: usize| parts[i].parse::<usize>().map_err(|_| bad());
        let real = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
        Ok(Self { nx: int(0)?, ny: int(1)?, nt: int(2)?, lx: real(3)?, tw: real(4)? })
    }
}

impl From<Grid> for GridSection {
    fn from(g: Grid) -> Self {
        Self { lx: g.lx, nx: g.nx, ny: g.ny, tw: g.tw, nt: g.nt }
    }
}

fn default_b() -> Vec<f64> {
    vec![0.55]
}

fn default_eps() -> Vec<f64> {
    vec![0.05]
}

fn default_t() -> f64 {
    1.0
}

/// One estimate and the parameter lists swept for it. Absent optional lists
/// leave the parameter unset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSection {
    pub id: EstimateId,
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    pub samples: usize,
    #[serde(default = "default_b")]
    pub b: Vec<f64>,
    #[serde(default = "default_eps")]
    pub eps: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub s: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<Vec<u32>>,
    #[serde(rename = "T", default = "default_t")]
    pub t: f64,
    #[serde(default)]
    pub ensemble: EnsembleSpec,
}

fn opt_list<T: Copy>(v: &Option<Vec<T>>) -> Vec<Option<T>> {
    match v {
        Some(l) => l.iter().map(|&x| Some(x)).collect(),
        None => vec![None],
    }
}

impl EstimateSection {
    pub fn new(id: EstimateId, n: Vec<u64>, samples: usize) -> Self {
        Self {
            id,
            n,
            samples,
            b: default_b(),
            eps: default_eps(),
            s: None,
            p: None,
            alpha: None,
            k: None,
            t: default_t(),
            ensemble: EnsembleSpec::default(),
        }
    }

    /// Cartesian product of the parameter lists, in (s, b, eps, p, alpha, k) order.
    pub fn combinations(&self) -> Vec<EstimateParams> {
        let mut out = Vec::new();
        for s in opt_list(&self.s) {
            for &b in &self.b {
                for &eps in &self.eps {
                    for p in opt_list(&self.p) {
                        for alpha in opt_list(&self.alpha) {
                            for k in opt_list(&self.k) {
                                out.push(EstimateParams { eps, b, p, alpha, k, s, t: self.t });
                            }
                        }
                    }
                }
            }
        }
        out
    }

    pub fn shells(&self) -> Result<Vec<Dyadic>> {
        self.n.iter().map(|&n| Dyadic::new(n)).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FamilySpec {
    /// "default" or "random"
    Named(String),
    Custom(QueryFamily),
}

fn default_measure_eps() -> Vec<f64> {
    vec![0.1]
}

fn default_count() -> usize {
    200
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSection {
    pub variant: Variant,
    #[serde(default = "default_measure_eps")]
    pub eps: Vec<f64>,
    pub family: FamilySpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Queries drawn by the "random" family.
    #[serde(default = "default_count")]
    pub count: usize,
    /// Monte Carlo cross-check samples per query; 0 skips it.
    #[serde(default)]
    pub mc_samples: usize,
}

fn default_counter_b() -> f64 {
    0.55
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleSection {
    pub s: Vec<f64>,
    #[serde(default = "default_counter_b")]
    pub b: f64,
    #[serde(rename = "N")]
    pub n: Vec<u64>,
    /// Also evaluate the sampled field on its grid.
    #[serde(default)]
    pub grid_check: bool,
}

fn default_amplitude() -> f64 {
    0.5
}

fn default_stride() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub k: u32,
    #[serde(default = "one_sign")]
    pub sign: i8,
    pub dt: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dealias_pad: Option<f64>,
    /// Write every recorded state as a field file.
    #[serde(default)]
    pub write_fields: bool,
}

fn one_sign() -> i8 {
    1
}

impl SimulateSection {
    pub fn evolution(&self) -> EvolutionConfig {
        let mut c = EvolutionConfig::new(self.k, self.sign, self.dt, self.t);
        if let Some(p) = self.dealias_pad {
            c.dealias_pad = p;
        }
        c.sample_stride = self.stride.max(1);
        c
    }
}

fn thousand() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdentitiesSection {
    #[serde(default = "thousand")]
    pub samples: usize,
}

fn sixty_four() -> u64 {
    64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSection {
    #[serde(default = "thousand")]
    pub samples: usize,
    /// Frequencies are drawn from |xi|, |q| <= N.
    #[serde(rename = "N", default = "sixty_four")]
    pub n: u64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub estimate: Vec<EstimateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<MeasureSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<CounterexampleSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulate: Option<SimulateSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub identities: Option<IdentitiesSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonance: Option<ResonanceSection>,
}

fn nonempty<T>(v: &[T], field: &str) -> Result<()> {
    if v.is_empty() {
        Err(ZkError::config(field, "sweep list is empty"))
    } else {
        Ok(())
    }
}

fn nonempty_opt<T>(v: &Option<Vec<T>>, field: &str) -> Result<()> {
    v.as_deref().map_or(Ok(()), |l| nonempty(l, field))
}

impl ExperimentConfig {
    /// TOML unless the text starts with `{`.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = if text.trim_start().starts_with('{') {
            serde_json::from_str(text).map_err(|e| ZkError::config("<json>", e.to_string()))?
        } else {
            toml::from_str(text).map_err(|e| ZkError::config("<toml>", e.to_string().trim_end().to_string()))?
        };
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| ZkError::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes to JSON")
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| ZkError::config("seed", "a seed is required"))
    }

    pub fn grid(&self) -> Result<Grid> {
        self.grid.map_or(Ok(Grid::default()), |g| g.grid())
    }

    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        self.grid()?;
        if self.workers == Some(0) {
            return Err(ZkError::config("workers", "must be at least 1"));
        }
        for (i, e) in self.estimate.iter().enumerate() {
            let f = |name: &str| format!("estimate[{i}].{name}");
            nonempty(&e.n, &f("N"))?;
            nonempty(&e.b, &f("b"))?;
            nonempty(&e.eps, &f("eps"))?;
            nonempty_opt(&e.s, &f("s"))?;
            nonempty_opt(&e.p, &f("p"))?;
            nonempty_opt(&e.alpha, &f("alpha"))?;
            nonempty_opt(&e.k, &f("k"))?;
            if e.samples == 0 {
                return Err(ZkError::config(f("samples"), "must be at least 1"));
            }
            e.shells().map_err(|err| ZkError::config(f("N"), err.to_string()))?;
            Dyadic::new(e.ensemble.l).map_err(|err| ZkError::config(f("ensemble.L"), err.to_string()))?;
            for p in e.combinations() {
                p.check(e.id).map_err(|err| ZkError::config(f("params"), err.to_string()))?;
            }
        }
        if let Some(m) = &self.measure {
            nonempty(&m.eps, "measure.eps")?;
            match &m.family {
                FamilySpec::Named(n) if n == "default" || n == "random" => {}
                FamilySpec::Named(n) => return Err(ZkError::config("measure.family", format!("unknown family `{n}`"))),
                FamilySpec::Custom(f) => {
                    nonempty(&f.xi, "measure.family.xi")?;
                    nonempty(&f.q, "measure.family.q")?;
                    nonempty(&f.c, "measure.family.c")?;
                    nonempty(&f.k, "measure.family.K")?;
                    nonempty(&f.n, "measure.family.n")?;
                    nonempty(&f.h, "measure.family.h")?;
                }
            }
            if (m.variant == Variant::Alpha) != m.alpha.is_some() {
                return Err(ZkError::config("measure.alpha", "set exactly when variant = \"alpha\""));
            }
        }
        if let Some(c) = &self.counterexample {
            nonempty(&c.s, "counterexample.s")?;
            nonempty(&c.n, "counterexample.N")?;
            if c.n.iter().any(|&n| n < 2) {
                return Err(ZkError::config("counterexample.N", "every N must be at least 2"));
            }
        }
        if let Some(s) = &self.simulate {
            s.evolution().validate().map_err(|e| match e {
                ZkError::Config { field, message } => ZkError::config(format!("simulate.{field}"), message),
                other => other,
            })?;
        }
        if let Some(r) = &self.resonance {
            if r.samples == 0 || r.n == 0 {
                return Err(ZkError::config("resonance", "samples and N must be positive"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# comment
seed = 11

[grid]
Lx = 16.0
Nx = 32
Ny = 16
Tw = 6.283185307179586
Nt = 8

[[estimate]]
id = "L4-main"
N = [4, 8]
samples = 3
s = [0.05, -0.25]

[measure]
variant = "lin"
family = "random"
count = 10

[counterexample]
s = [-0.5, 0.0]
N = [4, 8]
"#;

    #[test]
    fn toml_round_trip() {
        let c = ExperimentConfig::parse(SAMPLE).unwrap();
        c.validate().unwrap();
        assert_eq!(c.estimate[0].combinations().len(), 2);
        let again = ExperimentConfig::parse(&c.to_toml()).unwrap();
        assert_eq!(again, c);
        assert_eq!(ExperimentConfig::parse(&c.to_json()).unwrap(), c);
    }

    #[test]
    fn empty_sweep_names_field() {
        let text = SAMPLE.replace("N = [4, 8]\nsamples", "N = []\nsamples");
        let err = ExperimentConfig::parse(&text).unwrap().validate().unwrap_err();
        assert!(matches!(err, ZkError::Config { ref field, .. } if field == "estimate[0].N"), "{err}");
    }

    #[test]
    fn seed_is_mandatory() {
        let c = ExperimentConfig::parse(&SAMPLE.replace("seed = 11", "")).unwrap();
        assert!(matches!(c.validate(), Err(ZkError::Config { ref field, .. }) if field == "seed"));
    }

    #[test]
    fn unknown_id_and_key_rejected() {
        assert!(ExperimentConfig::parse(&SAMPLE.replace("L4-main", "L7-main")).is_err());
        let err = ExperimentConfig::parse(&SAMPLE.replace("samples = 3", "samples = 3\nbogus = 1")).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn grid_flag() {
        let g = GridSection::parse_flag("32,16,8,16.0,6.5").unwrap();
        assert_eq!((g.nx, g.ny, g.nt, g.lx, g.tw), (32, 16, 8, 16.0, 6.5));
        assert!(GridSection::parse_flag("32,16").is_err());
    }
}
