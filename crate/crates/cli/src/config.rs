//! Run configuration: sectioned `key = value` text or the equivalent JSON.
//! The accepted keys are documented in `docs/config.md`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ghft::dynamics::FlowOptions;
use ghft::excitation::SpectrumOptions;
use ghft::hubbard::spectrum::DispersionOptions;
use ghft::hubbard::ti::{default_seeds, Seed, TiOptions};
use ghft::hubbard::{HubbardParams, MuConvention};
use ghft::verify::{VerifyConfig, VerifyTolerances};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KSelection {
    Grid,
    Path,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CmFormat {
    Binary,
    Csv,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub t: f64,
    pub u: f64,
    pub mu: f64,
    pub lx: usize,
    pub ly: usize,
    pub mu_convention: MuConvention,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection { t: 1.0, u: -4.0, mu: 1.0, lx: 31, ly: 31, mu_convention: MuConvention::Add }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSection {
    /// `None` selects `0.05 / ‖h6‖_max`.
    pub dtau: Option<f64>,
    pub tol: f64,
    pub max_iter: usize,
    /// `None` selects the default seeds (pairing 1e-2 for u < 0, none otherwise).
    pub seed_pairing: Option<f64>,
    pub seed_magnetic: f64,
}

impl Default for SolverSection {
    fn default() -> Self {
        SolverSection { dtau: None, tol: 1e-10, max_iter: 200_000, seed_pairing: None, seed_magnetic: 0.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumSection {
    /// `None` selects `1e-6` times the block's spectral scale.
    pub zero_tol: Option<f64>,
    pub degeneracy_tol: f64,
    pub presence_threshold: f64,
    pub flat_tol: f64,
    pub gap_threshold: f64,
    pub kset: KSelection,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        let d = DispersionOptions::default();
        SpectrumSection {
            zero_tol: None,
            degeneracy_tol: d.spectrum.degeneracy_tol,
            presence_threshold: d.presence_threshold,
            flat_tol: d.flat_tol,
            gap_threshold: d.gap_threshold,
            kset: KSelection::Both,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub prefix: String,
    pub cm_format: CmFormat,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection { dir: PathBuf::from("out"), prefix: "run".into(), cm_format: CmFormat::Binary }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySection {
    pub rng_seed: u64,
    pub instances: usize,
    pub steps: usize,
    pub dt: f64,
    pub tolerances: VerifyTolerances,
}

impl Default for VerifySection {
    fn default() -> Self {
        let v = VerifyConfig::default();
        VerifySection { rng_seed: v.rng_seed, instances: v.instances, steps: v.steps, dt: v.dt, tolerances: v.tolerances }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub u: Vec<f64>,
    pub mu: Vec<f64>,
    pub dispersion: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    pub solver: SolverSection,
    pub spectrum: SpectrumSection,
    pub output: OutputSection,
    pub verify: VerifySection,
    pub sweep: SweepSection,
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{name} must be positive, got {v}")))
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let cfg = if path.extension().is_some_and(|e| e == "json") {
            serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        } else {
            Self::parse_kv(&text).map_err(|e| match e {
                CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
                other => other,
            })?
        };
        Ok(cfg)
    }

    /// Parses the sectioned text form. Unknown sections or keys are errors.
    pub fn parse_kv(text: &str) -> Result<Self, CliError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = |m: String| CliError::Config(format!("line {}: {m}", n + 1));
            if let Some(name) = line.strip_prefix('[') {
                section = name
                    .strip_suffix(']')
                    .ok_or_else(|| at(format!("unterminated section header '{line}'")))?
                    .trim()
                    .to_string();
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| at(format!("expected key = value, got '{line}'")))?;
            let key = if section.is_empty() { key.trim().to_string() } else { format!("{section}.{}", key.trim()) };
            cfg.set(&key, value.trim()).map_err(|e| at(e.to_string()))?;
        }
        Ok(cfg)
    }

    /// Sets one dotted key, e.g. `model.u` or `verify.tolerances.wick`.
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, CliError> {
            v.parse().map_err(|_| CliError::Config(format!("{key}: cannot parse '{v}'")))
        }
        fn opt(key: &str, v: &str) -> Result<Option<f64>, CliError> {
            if v == "auto" {
                Ok(None)
            } else {
                num(key, v).map(Some)
            }
        }
        fn list(key: &str, v: &str) -> Result<Vec<f64>, CliError> {
            v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| num(key, s)).collect()
        }
        let bad = |what: &str| CliError::Config(format!("{key}: expected {what}, got '{value}'"));
        match key {
            "model.t" => self.model.t = num(key, value)?,
            "model.u" => self.model.u = num(key, value)?,
            "model.mu" => self.model.mu = num(key, value)?,
            "model.lx" => self.model.lx = num(key, value)?,
            "model.ly" => self.model.ly = num(key, value)?,
            "model.mu_convention" => {
                self.model.mu_convention = match value {
                    "add" => MuConvention::Add,
                    "subtract" => MuConvention::Subtract,
                    _ => return Err(bad("add or subtract")),
                }
            }
            "solver.dtau" => self.solver.dtau = opt(key, value)?,
            "solver.tol" => self.solver.tol = num(key, value)?,
            "solver.max_iter" => self.solver.max_iter = num(key, value)?,
            "solver.seed_pairing" => self.solver.seed_pairing = opt(key, value)?,
            "solver.seed_magnetic" => self.solver.seed_magnetic = num(key, value)?,
            "spectrum.zero_tol" => self.spectrum.zero_tol = opt(key, value)?,
            "spectrum.degeneracy_tol" => self.spectrum.degeneracy_tol = num(key, value)?,
            "spectrum.presence_threshold" => self.spectrum.presence_threshold = num(key, value)?,
            "spectrum.flat_tol" => self.spectrum.flat_tol = num(key, value)?,
            "spectrum.gap_threshold" => self.spectrum.gap_threshold = num(key, value)?,
            "spectrum.kset" => {
                self.spectrum.kset = match value {
                    "grid" => KSelection::Grid,
                    "path" => KSelection::Path,
                    "both" => KSelection::Both,
                    _ => return Err(bad("grid, path or both")),
                }
            }
            "output.dir" => self.output.dir = PathBuf::from(value),
            "output.prefix" => {
                if value.is_empty() || value.contains(['/', '\\']) {
                    return Err(bad("a file-name prefix"));
                }
                self.output.prefix = value.to_string()
            }
            "output.cm_format" => {
                self.output.cm_format = match value {
                    "binary" => CmFormat::Binary,
                    "csv" => CmFormat::Csv,
                    _ => return Err(bad("binary or csv")),
                }
            }
            "verify.rng_seed" => self.verify.rng_seed = num(key, value)?,
            "verify.instances" => self.verify.instances = num(key, value)?,
            "verify.steps" => self.verify.steps = num(key, value)?,
            "verify.dt" => self.verify.dt = num(key, value)?,
            "sweep.u" => self.sweep.u = list(key, value)?,
            "sweep.mu" => self.sweep.mu = list(key, value)?,
            "sweep.dispersion" => self.sweep.dispersion = num(key, value)?,
            _ => {
                let tol = &mut self.verify.tolerances;
                let slot = match key.strip_prefix("verify.tolerances.") {
                    Some("wick") => &mut tol.wick,
                    Some("gradient") => &mut tol.gradient,
                    Some("roundtrip") => &mut tol.roundtrip,
                    Some("anticommutator") => &mut tol.anticommutator,
                    Some("reduction") => &mut tol.reduction,
                    Some("free_reduction") => &mut tol.free_reduction,
                    Some("flow_equivalence") => &mut tol.flow_equivalence,
                    Some("purity") => &mut tol.purity,
                    Some("energy_drift") => &mut tol.energy_drift,
                    _ => return Err(CliError::Config(format!("unknown key '{key}'"))),
                };
                *slot = num(key, value)?;
            }
        }
        Ok(())
    }

    /// The sectioned text form; `parse_kv(to_kv())` reproduces `self`.
    pub fn to_kv(&self) -> String {
        let o = |v: Option<f64>| v.map_or("auto".to_string(), |x| format!("{x:?}"));
        let l = |v: &[f64]| v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(", ");
        let m = &self.model;
        let s = &self.solver;
        let sp = &self.spectrum;
        let tol = &self.verify.tolerances;
        let mut out = String::new();
        let conv = match m.mu_convention {
            MuConvention::Add => "add",
            MuConvention::Subtract => "subtract",
        };
        let kset = match sp.kset {
            KSelection::Grid => "grid",
            KSelection::Path => "path",
            KSelection::Both => "both",
        };
        let fmt = match self.output.cm_format {
            CmFormat::Binary => "binary",
            CmFormat::Csv => "csv",
        };
        let _ = write!(
            out,
            "[model]\nt = {:?}\nu = {:?}\nmu = {:?}\nlx = {}\nly = {}\nmu_convention = {conv}\n\n",
            m.t, m.u, m.mu, m.lx, m.ly
        );
        let _ = write!(
            out,
            "[solver]\ndtau = {}\ntol = {:?}\nmax_iter = {}\nseed_pairing = {}\nseed_magnetic = {:?}\n\n",
            o(s.dtau),
            s.tol,
            s.max_iter,
            o(s.seed_pairing),
            s.seed_magnetic
        );
        let _ = write!(
            out,
            "[spectrum]\nzero_tol = {}\ndegeneracy_tol = {:?}\npresence_threshold = {:?}\nflat_tol = {:?}\ngap_threshold = {:?}\nkset = {kset}\n\n",
            o(sp.zero_tol),
            sp.degeneracy_tol,
            sp.presence_threshold,
            sp.flat_tol,
            sp.gap_threshold
        );
        let _ = write!(
            out,
            "[output]\ndir = {}\nprefix = {}\ncm_format = {fmt}\n\n",
            self.output.dir.display(),
            self.output.prefix
        );
        let v = &self.verify;
        let _ = write!(out, "[verify]\nrng_seed = {}\ninstances = {}\nsteps = {}\ndt = {:?}\n", v.rng_seed, v.instances, v.steps, v.dt);
        for (k, x) in [
            ("wick", tol.wick),
            ("gradient", tol.gradient),
            ("roundtrip", tol.roundtrip),
            ("anticommutator", tol.anticommutator),
            ("reduction", tol.reduction),
            ("free_reduction", tol.free_reduction),
            ("flow_equivalence", tol.flow_equivalence),
            ("purity", tol.purity),
            ("energy_drift", tol.energy_drift),
        ] {
            let _ = writeln!(out, "tolerances.{k} = {x:?}");
        }
        let _ = write!(
            out,
            "\n[sweep]\nu = {}\nmu = {}\ndispersion = {}\n",
            l(&self.sweep.u),
            l(&self.sweep.mu),
            self.sweep.dispersion
        );
        out
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.params().validate().map_err(|e| CliError::Config(e.to_string()))?;
        positive("solver.tol", self.solver.tol)?;
        if let Some(d) = self.solver.dtau {
            positive("solver.dtau", d)?;
        }
        if self.solver.max_iter == 0 {
            return Err(CliError::Config("solver.max_iter must be positive".into()));
        }
        if let Some(z) = self.spectrum.zero_tol {
            positive("spectrum.zero_tol", z)?;
        }
        positive("spectrum.degeneracy_tol", self.spectrum.degeneracy_tol)?;
        positive("spectrum.presence_threshold", self.spectrum.presence_threshold)?;
        positive("spectrum.flat_tol", self.spectrum.flat_tol)?;
        positive("spectrum.gap_threshold", self.spectrum.gap_threshold)?;
        positive("verify.dt", self.verify.dt)?;
        Ok(())
    }

    pub fn params(&self) -> HubbardParams {
        let m = &self.model;
        HubbardParams::new(m.t, m.u, m.mu, m.lx, m.ly).with_convention(m.mu_convention)
    }

    pub fn ti_options(&self) -> TiOptions {
        let s = &self.solver;
        let mut seeds = match s.seed_pairing {
            Some(d) => vec![Seed::pairing(d)],
            None => default_seeds(self.model.u),
        };
        for seed in &mut seeds {
            seed.magnetic = s.seed_magnetic;
        }
        TiOptions {
            flow: FlowOptions { dtau: s.dtau, tol: s.tol, max_iter: s.max_iter, record_history: false },
            seeds: Some(seeds),
        }
    }

    pub fn dispersion_options(&self) -> DispersionOptions {
        let sp = &self.spectrum;
        DispersionOptions {
            spectrum: SpectrumOptions { zero_tol: sp.zero_tol, degeneracy_tol: sp.degeneracy_tol, dump_dir: None },
            presence_threshold: sp.presence_threshold,
            flat_tol: sp.flat_tol,
            gap_threshold: sp.gap_threshold,
        }
    }

    pub fn verify_config(&self) -> VerifyConfig {
        let v = &self.verify;
        VerifyConfig {
            params: self.params(),
            rng_seed: v.rng_seed,
            instances: v.instances,
            steps: v.steps,
            dt: v.dt,
            tolerances: v.tolerances.clone(),
        }
    }
}
