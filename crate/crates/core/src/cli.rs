//! Command-line front end. Every command reads one JSON file and writes one
//! JSON report; exit code 0 means every check passed, 1 that a check failed
//! and 2 that the input was invalid or degenerate.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use thiserror::Error;

use crate::atlas::{verify_atlas, AtlasError, AtlasOptions, ConnectionAtlas, OverlapResidual};
use crate::companion::{
    solve_accessory, stability_det, verify_apparency, CompanionError, CompanionForm, N_APPARENT,
};
use crate::coords::{inverse_map, p_closed_form, p_residue_path, CanonicalCoords, CanonicalPoint, CoordsError};
use crate::curve::{CurvePoint, CurveError};
use crate::io::{CoordsFile, InputError, Problem, ProblemFile, Report, Tolerances, SCHEMA_VERSION};
use crate::numeric::{Complex, DEFAULT_WINDOW};
use crate::sample::DEFAULT_SEED;
use crate::spectral::{solve_residue_params, SpectralError};
use crate::symplectic::{verify_symplectomorphism, SymplecticError, SymplecticOptions, SymplecticReport};

/// Environment variable consulted when `--seed` is absent.
pub const SEED_ENV: &str = "DARBOUX_CONN_SEED";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "darboux-conn", version, about = "Companion forms, atlases and canonical coordinates of rank-2 connections on a Legendre curve")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Solve the companion form and check its residue and apparency conditions.
    Solve(IoArgs),
    /// Glue the atlas and check gluing, trace, holomorphy and pole data.
    Verify(VerifyArgs),
    /// Compute the canonical coordinates (q_j, p_j).
    Coords(IoArgs),
    /// Reconstruct the apparent data from canonical coordinates.
    Invert(IoArgs),
    /// Compare the residue pairing with sum dp ^ dq on random direction pairs.
    SympCheck(SympArgs),
}

#[derive(Debug, Clone, Args)]
pub struct IoArgs {
    /// Input JSON file.
    #[arg(long)]
    pub input: PathBuf,
    /// Report destination; stdout when absent.
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Overrides the command's primary tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Seed for the gluing sample points.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SympArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// Number of random direction pairs.
    #[arg(long, default_value_t = 10)]
    pub pairs: usize,
    /// Comma-separated finite-difference steps.
    #[arg(long, value_delimiter = ',', conflicts_with = "fd_step")]
    pub steps: Option<Vec<f64>>,
    /// Finest finite-difference step; the coarse step is ten times larger.
    #[arg(long)]
    pub fd_step: Option<f64>,
    /// Seed for the direction pairs.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("invalid {SEED_ENV}: {0:?}")]
    SeedEnv(String),
    #[error("invalid option: {0}")]
    Options(String),
    #[error(transparent)]
    Input(#[from] InputError),
    #[error(transparent)]
    Companion(#[from] CompanionError),
    #[error(transparent)]
    Coords(#[from] CoordsError),
    #[error(transparent)]
    Symplectic(#[from] SymplecticError),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Atlas(#[from] AtlasError),
}

/// A finished command: the report text and whether every check passed.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub report: String,
    pub pass: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            EXIT_PASS
        } else {
            EXIT_FAIL
        }
    }
}

fn seed_from(flag: Option<u64>, env: Option<String>) -> Result<u64, CliError> {
    match (flag, env) {
        (Some(s), _) => Ok(s),
        (None, Some(v)) => v.trim().parse().map_err(|_| CliError::SeedEnv(v)),
        (None, None) => Ok(DEFAULT_SEED),
    }
}

fn render<I: Serialize, R: Serialize>(report: &Report<I, R>) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports serialise");
    s.push('\n');
    s
}

fn with_tol(mut t: Tolerances, tol: Option<f64>, set: impl FnOnce(&mut Tolerances, f64)) -> Result<Tolerances, CliError> {
    if let Some(v) = tol {
        if !(v > 0.0 && v.is_finite()) {
            return Err(CliError::Options(format!("--tol must be positive, got {v}")));
        }
        set(&mut t, v);
    }
    Ok(t)
}

/// Companion form with its accessory parameters, assembled without the
/// invariant checks so that violations end up in the report.
fn companion(p: &Problem) -> Result<CompanionForm, CliError> {
    let params = solve_residue_params(&p.curve, &p.spectral)?;
    let accessory = solve_accessory(&p.curve, &p.spectral, &p.config)?;
    Ok(CompanionForm::assemble(&p.curve, &p.spectral, &p.config, params, accessory))
}

#[derive(Debug, Serialize)]
pub struct CompanionParams {
    pub a1: Complex,
    pub a2: Complex,
    pub a3: Complex,
    pub a4: Complex,
    pub b1: Complex,
    pub b2: Complex,
    pub b3: Complex,
}

impl CompanionParams {
    pub fn of(form: &CompanionForm) -> Self {
        let p = &form.params;
        Self { a1: p.a1, a2: p.a2, a3: form.a3, a4: form.a4, b1: p.b1, b2: p.b2, b3: form.b3 }
    }
}

#[derive(Debug, Serialize)]
pub struct SolveResults {
    pub params: CompanionParams,
    pub stability_det: Complex,
    pub apparency_residuals: [f64; N_APPARENT],
    /// Residue matrix of the companion form at each `q_j`.
    pub residue_q: Vec<[[Complex; 2]; 2]>,
    /// Distance of each residue matrix from `[[0, zeta_j], [0, 1]]`.
    pub residue_q_residuals: [f64; N_APPARENT],
    pub res_infinity_omega22: Complex,
    pub pole_eigen_max_error: f64,
}

fn cmd_solve(text: &str, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file = ProblemFile::from_json(text)?;
    let p = file.problem()?;
    let tolerances = with_tol(p.tolerances, tol, |t, v| t.apparency = v)?;
    let form = companion(&p)?;
    let apparency = verify_apparency(&form)?;
    let mut residue_q = Vec::with_capacity(N_APPARENT);
    let mut residue_q_residuals = [0.0; N_APPARENT];
    for (j, r) in residue_q_residuals.iter_mut().enumerate() {
        let m = form.residue_matrix(&p.config.point(j))?;
        let zeta = p.config.points[j].zeta;
        *r = [m[0][0].norm(), (m[0][1] - zeta).norm(), m[1][0].norm(), (m[1][1] - 1.0).norm()]
            .into_iter()
            .fold(0.0, f64::max);
        residue_q.push(m);
    }
    let res_infinity_omega22 = p.curve.form_residue(&form.omega22, &CurvePoint::infinity())?;
    let pole_eigen_max_error = form.pole_eigen_data(DEFAULT_WINDOW)?.iter().map(|e| e.max_error()).fold(0.0, f64::max);
    let pass = apparency.residuals.iter().chain(&residue_q_residuals).all(|r| *r < tolerances.apparency)
        && (res_infinity_omega22 + 2.0).norm() < tolerances.apparency
        && pole_eigen_max_error < tolerances.eigen;
    let results = SolveResults {
        params: CompanionParams::of(&form),
        stability_det: stability_det(&p.config),
        apparency_residuals: apparency.residuals,
        residue_q,
        residue_q_residuals,
        res_infinity_omega22,
        pole_eigen_max_error,
    };
    let report = Report { schema_version: SCHEMA_VERSION, command: "solve", input: file, seed: None, tolerances, results, pass };
    Ok(Outcome { report: render(&report), pass })
}

#[derive(Debug, Serialize)]
pub struct VerifyResults {
    pub gluing: Vec<OverlapResidual>,
    pub gluing_warnings: Vec<String>,
    pub trace_residuals: Vec<f64>,
    pub holomorphy: Vec<f64>,
    pub det_degree: f64,
    pub pole_eigen_max_error: f64,
}

fn cmd_verify(text: &str, tol: Option<f64>, seed: u64) -> Result<Outcome, CliError> {
    let file = ProblemFile::from_json(text)?;
    let p = file.problem()?;
    let tolerances = with_tol(p.tolerances, tol, |t, v| t.gluing = v)?;
    let form = companion(&p)?;
    let atlas = ConnectionAtlas::assemble(&form);
    let opts = AtlasOptions { seed, ..AtlasOptions::default() };
    let rep = verify_atlas(&atlas, &opts)?;
    let eigen_tol = if p.spectral.is_irregular() { tolerances.eigen.max(1e-8) } else { tolerances.eigen };
    let pole_eigen_max_error = rep.pole_eigen.iter().map(|e| e.max_error()).fold(0.0, f64::max);
    let pass = rep.gluing.overlaps.iter().all(|o| o.max_residual < tolerances.gluing)
        && rep.trace_residuals.iter().all(|r| *r < tolerances.holomorphy)
        && rep.holomorphy.iter().all(|r| *r < tolerances.holomorphy)
        && (rep.det_degree - 1.0).abs() < 1e-8
        && pole_eigen_max_error < eigen_tol;
    let results = VerifyResults {
        gluing: rep.gluing.overlaps,
        gluing_warnings: rep.gluing.warnings,
        trace_residuals: rep.trace_residuals,
        holomorphy: rep.holomorphy,
        det_degree: rep.det_degree,
        pole_eigen_max_error,
    };
    let report = Report { schema_version: SCHEMA_VERSION, command: "verify", input: file, seed: Some(seed), tolerances, results, pass };
    Ok(Outcome { report: render(&report), pass })
}

#[derive(Debug, Serialize)]
pub struct CoordsResults {
    /// Feed this object to `invert`.
    pub coords: CoordsFile,
    pub p_residue_path: Vec<Complex>,
    pub dual_path_gaps: Vec<f64>,
}

fn cmd_coords(text: &str, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file = ProblemFile::from_json(text)?;
    let p = file.problem()?;
    let tolerances = with_tol(p.tolerances, tol, |t, v| t.dual_path = v)?;
    let form = companion(&p)?;
    let atlas = ConnectionAtlas::assemble(&form);
    let closed = p_closed_form(&form);
    let residue = p_residue_path(&atlas)?;
    let gaps: Vec<f64> = closed.iter().zip(&residue).map(|(a, b)| (a - b).norm() / a.norm().max(1.0)).collect();
    let pass = gaps.iter().all(|g| *g < tolerances.dual_path);
    let coords = CanonicalCoords {
        points: std::array::from_fn(|j| CanonicalPoint { u: p.config.points[j].u, v: p.config.points[j].v, p: closed[j] }),
    };
    let results = CoordsResults {
        coords: CoordsFile::new(&p.curve, &p.spectral, &coords, p.tolerances),
        p_residue_path: residue.to_vec(),
        dual_path_gaps: gaps,
    };
    let report = Report { schema_version: SCHEMA_VERSION, command: "coords", input: file, seed: None, tolerances, results, pass };
    Ok(Outcome { report: render(&report), pass })
}

#[derive(Debug, Serialize)]
pub struct InvertResults {
    /// A problem file for the reconstructed configuration.
    pub problem: ProblemFile,
    pub accessory: [Complex; 3],
    pub reconstruction_det: Complex,
    /// Relative gaps between the input `p` and the forward map of the result.
    pub roundtrip_gaps: Vec<f64>,
}

/// Accepts a bare coordinate file or the report written by `coords`.
fn coords_input(text: &str) -> Result<CoordsFile, CliError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(InputError::from)?;
    let inner = match value.get("command").and_then(|c| c.as_str()) {
        Some("coords") => value.get("results").and_then(|r| r.get("coords")).cloned().unwrap_or(serde_json::Value::Null),
        _ => value,
    };
    let file: CoordsFile = serde_json::from_value(inner).map_err(InputError::from)?;
    if file.schema_version != SCHEMA_VERSION {
        return Err(InputError::SchemaVersion { found: file.schema_version, expected: SCHEMA_VERSION }.into());
    }
    Ok(file)
}

fn cmd_invert(text: &str, tol: Option<f64>) -> Result<Outcome, CliError> {
    let file = coords_input(text)?;
    let (curve, spectral, coords) = file.parts()?;
    let tolerances = with_tol(file.tolerances, tol, |t, v| t.roundtrip = v)?;
    let hints = coords.points.map(|p| p.v);
    let rec = inverse_map(&curve, &spectral, &coords, hints)?;
    let problem = Problem { curve, spectral: spectral.clone(), config: rec.config.clone(), tolerances: file.tolerances };
    let forward = p_closed_form(&companion(&problem)?);
    let roundtrip_gaps: Vec<f64> =
        coords.points.iter().zip(&forward).map(|(c, p)| (c.p - p).norm() / c.p.norm().max(1.0)).collect();
    let pass = roundtrip_gaps.iter().all(|g| *g < tolerances.roundtrip);
    let results = InvertResults {
        problem: ProblemFile::from_problem(&problem),
        accessory: rec.accessory,
        reconstruction_det: rec.det,
        roundtrip_gaps,
    };
    let report = Report { schema_version: SCHEMA_VERSION, command: "invert", input: file, seed: None, tolerances, results, pass };
    Ok(Outcome { report: render(&report), pass })
}

fn cmd_symp_check(text: &str, args: &SympArgs, seed: u64) -> Result<Outcome, CliError> {
    let file = ProblemFile::from_json(text)?;
    let p = file.problem()?;
    let tolerances = with_tol(p.tolerances, args.io.tol, |t, v| t.pairing = v)?;
    let steps = match (&args.steps, args.fd_step) {
        (Some(s), _) => s.clone(),
        (None, Some(h)) => vec![10.0 * h, h],
        (None, None) => SymplecticOptions::default().steps,
    };
    let opts = SymplecticOptions { pairs: args.pairs, steps, seed };
    let mut rep: SymplecticReport = verify_symplectomorphism(&p.curve, &p.spectral, &p.config, &opts)?;
    rep.apply_tolerances(tolerances.pairing, tolerances.min_order);
    let pass = rep.pass;
    let report = Report { schema_version: SCHEMA_VERSION, command: "symp-check", input: file, seed: Some(seed), tolerances, results: rep, pass };
    Ok(Outcome { report: render(&report), pass })
}

/// Runs `command` on the given input text. `seed_env` is the value of
/// [`SEED_ENV`], if set.
pub fn execute(command: &Command, input: &str, seed_env: Option<String>) -> Result<Outcome, CliError> {
    match command {
        Command::Solve(a) => cmd_solve(input, a.tol),
        Command::Verify(a) => cmd_verify(input, a.io.tol, seed_from(a.seed, seed_env)?),
        Command::Coords(a) => cmd_coords(input, a.tol),
        Command::Invert(a) => cmd_invert(input, a.tol),
        Command::SympCheck(a) => cmd_symp_check(input, a, seed_from(a.seed, seed_env)?),
    }
}

impl Command {
    pub fn io(&self) -> &IoArgs {
        match self {
            Command::Solve(a) | Command::Coords(a) | Command::Invert(a) => a,
            Command::Verify(a) => &a.io,
            Command::SympCheck(a) => &a.io,
        }
    }
}

/// Reads the input, runs the command and writes the report.
pub fn run_command(command: &Command, seed_env: Option<String>) -> Result<Outcome, CliError> {
    let io = command.io();
    let text = std::fs::read_to_string(&io.input).map_err(|source| CliError::Read { path: io.input.clone(), source })?;
    let outcome = execute(command, &text, seed_env)?;
    match &io.output {
        Some(path) => std::fs::write(path, &outcome.report).map_err(|source| CliError::Write { path: path.clone(), source })?,
        None => print!("{}", outcome.report),
    }
    Ok(outcome)
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match run_command(&cli.command, std::env::var(SEED_ENV).ok()) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seed_precedence() {
        assert_eq!(seed_from(Some(3), Some("9".into())).unwrap(), 3);
        assert_eq!(seed_from(None, Some(" 9 ".into())).unwrap(), 9);
        assert_eq!(seed_from(None, None).unwrap(), DEFAULT_SEED);
        assert!(matches!(seed_from(None, Some("x".into())), Err(CliError::SeedEnv(_))));
    }

    #[test]
    fn steps_and_fd_step_conflict() {
        let r = Cli::try_parse_from(["darboux-conn", "symp-check", "--input", "a", "--steps", "1e-3,1e-4", "--fd-step", "1e-4"]);
        assert!(r.is_err());
        let ok = Cli::try_parse_from(["darboux-conn", "symp-check", "--input", "a", "--steps", "1e-3,1e-4"]).unwrap();
        match ok.command {
            Command::SympCheck(a) => assert_eq!(a.steps, Some(vec![1e-3, 1e-4])),
            _ => unreachable!(),
        }
    }
}
