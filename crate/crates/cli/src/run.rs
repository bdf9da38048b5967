//! Subcommand implementations. Every output file carries the parameter hash
//! of the model it was computed for.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use ghft::hubbard::spectrum::{dispersion, Channel, DispersionData, KSet};
use ghft::hubbard::ti::{ground_state_of, BlockState, GroundState, Seed, TiModel};
use ghft::io::{read_matrix, write_matrix, MatrixFormat};
use ghft::verify::run_suite;
use ghft::Antisym;
use log::{info, warn};
use ndarray::{s, Array2};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{CmFormat, KSelection, RunConfig};
use crate::error::CliError;

/// Hex SHA-256 of the model parameters in a fixed textual form.
pub fn param_hash(cfg: &RunConfig) -> String {
    let m = &cfg.model;
    let canonical = format!(
        "t={:?};u={:?};mu={:?};lx={};ly={};mu_convention={:?}",
        m.t, m.u, m.mu, m.lx, m.ly, m.mu_convention
    );
    hex::encode(Sha256::digest(canonical.as_bytes()))
}

/// 12 significant digits.
fn num(v: f64) -> String {
    format!("{v:.11e}")
}

fn path_for(cfg: &RunConfig, suffix: &str) -> PathBuf {
    cfg.output.dir.join(format!("{}.{suffix}", cfg.output.prefix))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

#[derive(Debug, Serialize)]
pub struct GroundSummary {
    pub u: f64,
    pub mu: f64,
    pub t: f64,
    #[serde(rename = "Lx")]
    pub lx: usize,
    #[serde(rename = "Ly")]
    pub ly: usize,
    pub n: f64,
    pub p: f64,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub p_onsite: f64,
    pub energy_per_site: f64,
    pub mu_convention: ghft::hubbard::MuConvention,
    pub seed: Seed,
    pub param_hash: String,
}

fn summary(cfg: &RunConfig, gs: &GroundState) -> GroundSummary {
    let m = &cfg.model;
    let o = &gs.observables;
    GroundSummary {
        u: m.u,
        mu: m.mu,
        t: m.t,
        lx: m.lx,
        ly: m.ly,
        n: o.n,
        p: o.p,
        energy: o.energy,
        residual: gs.report.residual,
        iterations: gs.report.iterations,
        converged: gs.report.converged,
        p_onsite: o.p_onsite,
        energy_per_site: o.energy_per_site,
        mu_convention: m.mu_convention,
        seed: gs.seed,
        param_hash: param_hash(cfg),
    }
}

/// Blocks stacked vertically, each padded to 8×8 (self-paired blocks are 4×4).
fn save_blocks(path: &Path, cfg: &RunConfig, blocks: &BlockState) -> Result<(), CliError> {
    let mut a = Array2::<f64>::zeros((8 * blocks.len(), 8));
    for (i, b) in blocks.iter().enumerate() {
        let d = b.dim();
        a.slice_mut(s![8 * i..8 * i + d, ..d]).assign(b.as_array());
    }
    let mut meta = BTreeMap::new();
    meta.insert("kind".to_string(), "ti-blocks".to_string());
    meta.insert("param_hash".to_string(), param_hash(cfg));
    let format = match cfg.output.cm_format {
        CmFormat::Binary => MatrixFormat::Binary,
        CmFormat::Csv => MatrixFormat::Csv,
    };
    write_matrix(path, &a, format, &meta)?;
    Ok(())
}

fn load_blocks(path: &Path, cfg: &RunConfig, model: &TiModel) -> Result<BlockState, CliError> {
    let (header, a) = read_matrix(path)?;
    let expected = param_hash(cfg);
    let found = header.meta.get("param_hash").cloned().unwrap_or_default();
    if found != expected {
        return Err(CliError::HashMismatch { expected, found });
    }
    if header.meta.get("kind").map(String::as_str) != Some("ti-blocks")
        || a.ncols() != 8
        || a.nrows() != 8 * model.blocks.len()
    {
        return Err(CliError::Io(format!("{}: not a block covariance file for this lattice", path.display())));
    }
    model
        .blocks
        .iter()
        .enumerate()
        .map(|(i, b)| {
            let d = b.dim();
            Antisym::try_from_matrix(a.slice(s![8 * i..8 * i + d, ..d]).to_owned(), 1e-12).map_err(CliError::from)
        })
        .collect()
}

pub struct GroundOutcome {
    pub model: TiModel,
    pub state: GroundState,
    pub summary: GroundSummary,
}

/// Ground state, summary JSON and covariance file. Outputs are written even
/// when the flow did not converge; the caller decides the exit status.
pub fn run_ground(cfg: &RunConfig) -> Result<GroundOutcome, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.dir)?;
    let model = TiModel::new(&cfg.params())?;
    info!("ground state of {}x{} lattice, u = {}, mu = {}", cfg.model.lx, cfg.model.ly, cfg.model.u, cfg.model.mu);
    let state = ground_state_of(&model, &cfg.ti_options())?;
    let summary = summary(cfg, &state);
    save_blocks(&path_for(cfg, "cm"), cfg, &state.blocks)?;
    write_json(&path_for(cfg, "ground.json"), &summary)?;
    Ok(GroundOutcome { model, state, summary })
}

pub fn require_converged(s: &GroundSummary) -> Result<(), CliError> {
    if s.converged {
        Ok(())
    } else {
        Err(CliError::NotConverged { residual: s.residual, iterations: s.iterations })
    }
}

#[derive(Debug, Serialize)]
struct ClassRowJson {
    branches: Vec<usize>,
    present: Vec<&'static str>,
    magnitudes: BTreeMap<&'static str, f64>,
    max_splitting: f64,
}

#[derive(Debug, Serialize)]
pub struct Classification {
    param_hash: String,
    kset: &'static str,
    pub branch_count: usize,
    pub gap: f64,
    gap_threshold: f64,
    pub gapless: bool,
    /// 1-based.
    pub flat_branches: Vec<usize>,
    scale: f64,
    max_real_residual: f64,
    pairing_defect: f64,
    table: Vec<ClassRowJson>,
}

fn classification(cfg: &RunConfig, d: &DispersionData, kset: &'static str) -> Classification {
    let table = d
        .table
        .iter()
        .map(|row| ClassRowJson {
            branches: row.branches.clone(),
            present: row.present.iter().map(|c| c.name()).collect(),
            magnitudes: Channel::ALL.iter().map(|&c| (c.name(), row.magnitudes.get(c))).collect(),
            max_splitting: row.max_splitting,
        })
        .collect();
    Classification {
        param_hash: param_hash(cfg),
        kset,
        branch_count: d.branch_count,
        gap: d.gap,
        gap_threshold: d.gap_threshold,
        gapless: d.gapless,
        flat_branches: d.flat_branches.iter().map(|j| j + 1).collect(),
        scale: d.scale,
        max_real_residual: d.max_real_residual,
        pairing_defect: d.pairing_defect,
        table,
    }
}

fn write_csv(path: &Path, hash: &str, d: &DispersionData) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(fs::File::create(path)?);
    writeln!(w, "# param_hash={hash}")?;
    let channels: Vec<&str> = Channel::ALL.iter().map(|c| c.name()).collect();
    writeln!(w, "kx_index,ky_index,kx,ky,branch,omega,real_residual,{}", channels.join(","))?;
    for p in &d.points {
        for (j, b) in d.analysis(p).branches.iter().enumerate() {
            let ch: Vec<String> = Channel::ALL.iter().map(|&c| num(b.channels.get(c))).collect();
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                p.k.0,
                p.k.1,
                num(p.momentum.0),
                num(p.momentum.1),
                j + 1,
                num(b.omega),
                num(b.real_residual),
                ch.join(",")
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Dispersion CSVs and the classification JSON for a ground state.
pub fn dispersion_outputs(cfg: &RunConfig, model: &TiModel, state: &BlockState) -> Result<Classification, CliError> {
    let opts = cfg.dispersion_options();
    let hash = param_hash(cfg);
    let mut result = None;
    if matches!(cfg.spectrum.kset, KSelection::Path | KSelection::Both) {
        let d = dispersion(model, state, &KSet::Path, &opts)?;
        write_csv(&path_for(cfg, "dispersion.path.csv"), &hash, &d)?;
        result = Some(classification(cfg, &d, "path"));
    }
    if matches!(cfg.spectrum.kset, KSelection::Grid | KSelection::Both) {
        let d = dispersion(model, state, &KSet::Grid, &opts)?;
        write_csv(&path_for(cfg, "dispersion.grid.csv"), &hash, &d)?;
        result = Some(classification(cfg, &d, "grid"));
    }
    let c = result.expect("kset selects at least one set");
    write_json(&path_for(cfg, "classification.json"), &c)?;
    Ok(c)
}

pub fn run_dispersion(cfg: &RunConfig, cm: Option<&Path>) -> Result<Classification, CliError> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.output.dir)?;
    let default = path_for(cfg, "cm");
    let cm = cm.unwrap_or(&default);
    let model = TiModel::new(&cfg.params())?;
    let state = load_blocks(cm, cfg, &model)?;
    let residual = model.residual(&state);
    if residual > 10.0 * cfg.solver.tol {
        warn!("covariance residual {residual:.3e} exceeds 10x the solver tolerance; real parts of eigenvalues lose meaning");
    }
    dispersion_outputs(cfg, &model, &state)
}

#[derive(Debug, Serialize)]
struct PropertyJson {
    name: String,
    passed: bool,
    error: f64,
    tolerance: f64,
    detail: String,
}

#[derive(Debug, Serialize)]
struct VerifyJson {
    param_hash: String,
    passed: bool,
    properties: Vec<PropertyJson>,
}

/// Runs the oracle suite and writes its report; timings go to the log only
/// so that the report is reproducible.
pub fn run_verify(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    let vc = cfg.verify_config();
    vc.validate().map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(&cfg.output.dir)?;
    let report = run_suite(&vc)?;
    for p in &report.properties {
        info!("{}: {} ({:.2}s)", p.name, if p.passed { "pass" } else { "FAIL" }, p.seconds);
    }
    let json = VerifyJson {
        param_hash: param_hash(cfg),
        passed: report.passed,
        properties: report
            .properties
            .iter()
            .map(|p| PropertyJson {
                name: p.name.clone(),
                passed: p.passed,
                error: p.error,
                tolerance: p.tolerance,
                detail: p.detail.clone(),
            })
            .collect(),
    };
    write_json(&path_for(cfg, "verify.json"), &json)?;
    for p in &json.properties {
        println!("{} {} error {:.3e} tolerance {:.3e}", if p.passed { "PASS" } else { "FAIL" }, p.name, p.error, p.tolerance);
    }
    if report.passed {
        Ok(())
    } else {
        Err(CliError::Verification(report.failed().join(", ")))
    }
}

/// Ground states (and optionally dispersions) over the cartesian product of
/// `sweep.u × sweep.mu`, one after another, plus a summary CSV.
pub fn run_sweep(cfg: &RunConfig) -> Result<(), CliError> {
    cfg.validate()?;
    if cfg.sweep.u.is_empty() || cfg.sweep.mu.is_empty() {
        return Err(CliError::Config("sweep.u and sweep.mu must both be non-empty".into()));
    }
    fs::create_dir_all(&cfg.output.dir)?;
    let path = path_for(cfg, "sweep.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "u,mu,n,p,energy,residual,iterations,converged,branch_count,gap,param_hash")?;
    let mut unconverged = Vec::new();
    for &u in &cfg.sweep.u {
        for &mu in &cfg.sweep.mu {
            let mut c = cfg.clone();
            c.model.u = u;
            c.model.mu = mu;
            c.output.prefix = format!("{}_u{u}_mu{mu}", cfg.output.prefix);
            let out = run_ground(&c)?;
            let s = &out.summary;
            let (branches, gap) = if cfg.sweep.dispersion {
                let cl = dispersion_outputs(&c, &out.model, &out.state.blocks)?;
                (cl.branch_count.to_string(), num(cl.gap))
            } else {
                (String::new(), String::new())
            };
            if !s.converged {
                unconverged.push(format!("(u={u}, mu={mu})"));
            }
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{branches},{gap},{}",
                num(u),
                num(mu),
                num(s.n),
                num(s.p),
                num(s.energy),
                num(s.residual),
                s.iterations,
                s.converged,
                s.param_hash
            )?;
        }
    }
    w.flush()?;
    if unconverged.is_empty() {
        Ok(())
    } else {
        Err(CliError::SweepNotConverged(unconverged.join(", ")))
    }
}
