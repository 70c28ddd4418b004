use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use homogmart::config::SpaceConfig;
use homogmart::homog::{martingale_criterion, CriterionOptions, CriterionReport, QuadraticReading, ANTIPODAL_TOL, LIFT_TOL, PROJECTION_TOL, VERTICAL_TOL};
use homogmart::io::{read_ensemble, write_ensemble};
use homogmart::sphere::{analyze, Process, SphereAnalysis, SphereSpec, LIFT_MATCH_TOL, TANGENTIAL_WINDOW};
use homogmart::stoch::{DriftPolicy, GeneratedEnsemble, PathSource, TimeGrid, Verdict};
use rayon::prelude::*;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, ExitStatus};
use crate::run::RunConfig;

pub const PATHS_FILE: &str = "paths.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const REPORT_FILE: &str = "report.json";
const DEFAULT_OUT: &str = "out";
const WRITE_CHUNK: usize = 256;

#[derive(Serialize)]
struct Tool {
    name: &'static str,
    version: &'static str,
}

const TOOL: Tool = Tool {
    name: "homogmart",
    version: env!("CARGO_PKG_VERSION"),
};

#[derive(Serialize)]
struct GridMeta {
    t0: f64,
    dt: f64,
    steps: usize,
    #[serde(rename = "T")]
    horizon: f64,
}

impl From<TimeGrid> for GridMeta {
    fn from(g: TimeGrid) -> Self {
        Self {
            t0: g.t0,
            dt: g.dt,
            steps: g.steps,
            horizon: g.horizon(),
        }
    }
}

#[derive(Serialize)]
struct FileDigest {
    name: String,
    sha256: String,
}

#[derive(Serialize)]
struct Manifest {
    tool: Tool,
    space: String,
    process: String,
    seed: u64,
    n_paths: usize,
    grid: GridMeta,
    files: Vec<FileDigest>,
    checksum: String,
}

/// Writer that hashes everything passing through it.
struct HashingWriter<W> {
    inner: W,
    hasher: Sha256,
}

impl<W: Write> Write for HashingWriter<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hasher.update(&buf[..n]);
        Ok(n)
    }

    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn sphere_of(space: &SpaceConfig, what: &str) -> Result<SphereSpec, CliError> {
    space
        .sphere()
        .cloned()
        .ok_or_else(|| CliError::Usage(format!("{what} needs a sphere:n space; process generators are defined on spheres")))
}

fn process_of(cfg: &RunConfig) -> Result<Process, CliError> {
    let name = cfg.process.as_deref().ok_or_else(|| CliError::Usage("no process given (use --process)".into()))?;
    Process::parse(name).map_err(|e| CliError::Usage(e.to_string()))
}

fn generated(sphere: &SphereSpec, process: Process, cfg: &RunConfig) -> GeneratedEnsemble<impl Fn(u64, u64) -> homogmart::Result<homogmart::stoch::CoordPath> + Sync> {
    let n = sphere.n();
    let grid = cfg.grid;
    GeneratedEnsemble::new(cfg.paths, grid, cfg.seed, move |seed, i| process.generate(n, grid, seed, i))
}

/// Generates an ensemble and writes `paths.csv` with `manifest.json`.
pub fn simulate(cfg: &RunConfig) -> Result<(ExitStatus, String), CliError> {
    let space = cfg.space.resolve()?;
    let sphere = sphere_of(&space, "simulate")?;
    let process = process_of(cfg)?;
    let source = generated(&sphere, process, cfg);
    let dir = cfg.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT));
    std::fs::create_dir_all(&dir).map_err(|e| io_err(&dir, e))?;
    let csv_path = dir.join(PATHS_FILE);
    let file = File::create(&csv_path).map_err(|e| io_err(&csv_path, e))?;
    let mut out = HashingWriter {
        inner: BufWriter::new(file),
        hasher: Sha256::new(),
    };
    // generate in parallel chunks, write in path order
    let mut paths_written = Vec::new();
    for start in (0..cfg.paths).step_by(WRITE_CHUNK) {
        let end = (start + WRITE_CHUNK).min(cfg.paths);
        let chunk = (start..end)
            .into_par_iter()
            .map(|i| source.path(i))
            .collect::<homogmart::Result<Vec<_>>>()?;
        paths_written.push(chunk);
    }
    write_ensemble(&mut out, paths_written.into_iter().flatten()).map_err(|e| match e {
        homogmart::io::IoError::Io(io) => io_err(&csv_path, io),
        other => CliError::from(other),
    })?;
    out.flush().map_err(|e| io_err(&csv_path, e))?;
    let digest = hex::encode(out.hasher.finalize());
    let manifest = Manifest {
        tool: TOOL,
        space: sphere.spec().name().to_string(),
        process: process.name().to_string(),
        seed: cfg.seed,
        n_paths: cfg.paths,
        grid: cfg.grid.into(),
        files: vec![FileDigest {
            name: PATHS_FILE.into(),
            sha256: digest.clone(),
        }],
        checksum: digest,
    };
    let json = to_json(&manifest);
    let manifest_path = dir.join(MANIFEST_FILE);
    std::fs::write(&manifest_path, &json).map_err(|e| io_err(&manifest_path, e))?;
    Ok((ExitStatus::Pass, json))
}

#[derive(Serialize)]
struct Thresholds {
    lift_residual: f64,
    projection: f64,
    vertical_increment: f64,
    antipodal: f64,
    sphere_lift_match: f64,
    tangential_window: usize,
}

const THRESHOLDS: Thresholds = Thresholds {
    lift_residual: LIFT_TOL,
    projection: PROJECTION_TOL,
    vertical_increment: VERTICAL_TOL,
    antipodal: ANTIPODAL_TOL,
    sphere_lift_match: LIFT_MATCH_TOL,
    tangential_window: TANGENTIAL_WINDOW,
};

#[derive(Serialize)]
struct RunMeta {
    space: String,
    process: String,
    seed: u64,
    n_paths: usize,
    grid: GridMeta,
    checkpoints: Vec<f64>,
    reading: QuadraticReading,
    policy: DriftPolicy,
    thresholds: Thresholds,
    #[serde(skip_serializing_if = "Option::is_none")]
    input: Option<FileDigest>,
}

#[derive(Serialize)]
struct CriterionOutput {
    tool: Tool,
    run: RunMeta,
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    classification: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    analysis: Option<SphereAnalysis>,
    #[serde(skip_serializing_if = "Option::is_none")]
    criterion: Option<CriterionReport>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

/// Runs the criterion and, on spheres, both oracles and the coordinate experiment.
pub fn criterion(cfg: &RunConfig) -> Result<(ExitStatus, String), CliError> {
    let space = cfg.space.resolve()?;
    let options = CriterionOptions {
        reading: cfg.reading,
        policy: cfg.policy,
    };
    let (label, source, input): (String, Box<dyn PathSource>, Option<FileDigest>) = match &cfg.input {
        Some(path) => {
            let bytes = std::fs::read(path).map_err(|e| io_err(path, e))?;
            let ens = read_ensemble(bytes.as_slice(), cfg.seed)?;
            let digest = FileDigest {
                name: path.display().to_string(),
                sha256: hex::encode(Sha256::digest(&bytes)),
            };
            let label = cfg.process.clone().unwrap_or_else(|| "input".into());
            (label, Box::new(ens), Some(digest))
        }
        None => {
            let sphere = sphere_of(&space, "criterion without --input")?;
            let process = process_of(cfg)?;
            (process.name().to_string(), Box::new(generated(&sphere, process, cfg)), None)
        }
    };
    let grid = source.grid();
    let checkpoints = cfg.checkpoints.clone().unwrap_or_else(|| grid.default_checkpoints());
    let run = RunMeta {
        space: space.spec().name().to_string(),
        process: label.clone(),
        seed: cfg.seed,
        n_paths: source.len(),
        grid: grid.into(),
        checkpoints: checkpoints.clone(),
        reading: cfg.reading,
        policy: cfg.policy,
        thresholds: THRESHOLDS,
        input,
    };
    let output = match space.sphere() {
        Some(sphere) => {
            let mut a = analyze(sphere, &label, source.as_ref(), &checkpoints, &options)?;
            a.criterion.process = Some(label.clone());
            CriterionOutput {
                tool: TOOL,
                run,
                verdict: a.criterion.verdict,
                classification: Some(a.classification.clone()),
                analysis: Some(a),
                criterion: None,
            }
        }
        None => {
            let mut r = martingale_criterion(source.as_ref(), space.spec(), &checkpoints, &options)?;
            r.process = Some(label);
            CriterionOutput {
                tool: TOOL,
                run,
                verdict: r.verdict,
                classification: None,
                analysis: None,
                criterion: Some(r),
            }
        }
    };
    let json = to_json(&output);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        let path = dir.join(REPORT_FILE);
        std::fs::write(&path, &json).map_err(|e| io_err(&path, e))?;
    }
    let status = if output.verdict.is_pass() { ExitStatus::Pass } else { ExitStatus::Fail };
    Ok((status, json))
}
