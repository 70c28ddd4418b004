//! The sphere `Sⁿ = SO(n+1)/SO(n)` with base point `e₀`, its process
//! battery, and the frame-integral, tangential and raw-coordinate oracles.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_sde::GroupPath;
use crate::homog::{
    checkpoint_indices, CanonicalConnection, CriterionOptions, CriterionReport, HomogSpaceSpec,
    LiftDiagnostics, LiftSolver, LiftedPath, SpaceModel,
};
use crate::lie::{e_ij, Matrix, Vector};
use crate::stoch::{
    coord_names, drift_test_samples, path_rng, standard_normal, CoordPath, DriftReport,
    DriftSamples, PathSource, SpacePath, TimeGrid,
};

/// Window, in steps, of the tangential drift oracle.
pub const TANGENTIAL_WINDOW: usize = 10;
/// Tolerance of `π(Y_k) = X_k` in [`criterion_integrals`].
pub const LIFT_MATCH_TOL: f64 = 1e-8;

/// `Sⁿ` as a reductive homogeneous space of `SO(n+1)`.
#[derive(Clone, Debug)]
pub struct SphereSpec {
    n: usize,
    connection: CanonicalConnection,
    spec: HomogSpaceSpec,
}

impl SphereSpec {
    /// `β = 0` (canonical connection of the second kind).
    pub fn new(n: usize) -> Result<Self> {
        Self::with_connection(n, CanonicalConnection::SecondKind)
    }

    pub fn with_connection(n: usize, connection: CanonicalConnection) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidDimension(format!("sphere dimension must be >= 2, got {n}")));
        }
        let m = n + 1;
        let m_basis: Vec<Matrix> = (1..m).map(|l| e_ij(m, 0, l)).collect();
        let mut h_basis = Vec::new();
        for i in 1..m {
            for j in i + 1..m {
                h_basis.push(e_ij(m, i, j));
            }
        }
        let mut base = Vector::zeros(m);
        base[0] = 1.0;
        let spec = HomogSpaceSpec::with_connection(
            format!("sphere:{n}"),
            m,
            h_basis,
            m_basis,
            connection,
            SpaceModel::Orbit { base },
            LiftSolver::SphereClosedForm,
        )?;
        if !spec.beta().is_zero() {
            return Err(Error::InvalidSpec("the sphere connection should have beta = 0".into()));
        }
        Ok(Self { n, connection, spec })
    }

    /// Parses `sphere:n`.
    pub fn parse(s: &str) -> Result<Self> {
        let n = s
            .strip_prefix("sphere:")
            .and_then(|d| d.parse::<usize>().ok())
            .ok_or_else(|| Error::InvalidSpec(format!("unknown space preset `{s}` (expected sphere:n)")))?;
        Self::new(n)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn ambient_dim(&self) -> usize {
        self.n + 1
    }

    pub fn connection(&self) -> CanonicalConnection {
        self.connection
    }

    pub fn spec(&self) -> &HomogSpaceSpec {
        &self.spec
    }

    pub fn into_spec(self) -> HomogSpaceSpec {
        self.spec
    }

    pub fn north_pole(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.ambient_dim()];
        x[0] = 1.0;
        x
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `x ← cos|v|·x + sin|v|·v/|v|` for tangent `v`.
fn geodesic_step(x: &mut [f64], v: &[f64]) {
    let r = dot(v, v).sqrt();
    if r == 0.0 {
        return;
    }
    let (s, c) = r.sin_cos();
    for (xi, vi) in x.iter_mut().zip(v) {
        *xi = c * *xi + s * vi / r;
    }
}

/// Standard Gaussian projected on the tangent space at `x`.
fn tangent_gaussian<R: rand::Rng + ?Sized>(rng: &mut R, x: &[f64], out: &mut [f64]) {
    for o in out.iter_mut() {
        *o = standard_normal(rng);
    }
    let p = dot(out, x);
    for (o, xi) in out.iter_mut().zip(x) {
        *o -= p * xi;
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidDimension(format!("sphere dimension must be >= 2, got {n}")));
    }
    Ok(())
}

/// Brownian motion on `Sⁿ` from `e₀` by geodesic random walk.
pub fn sphere_bm(n: usize, grid: TimeGrid, seed: u64) -> Result<SpacePath> {
    sphere_bm_path(n, grid, seed, 0)
}

/// Path `index` of the seeded Brownian ensemble.
pub fn sphere_bm_path(n: usize, grid: TimeGrid, seed: u64, index: u64) -> Result<SpacePath> {
    Process::Bm.generate(n, grid, seed, index)
}

/// Processes of the verification battery; all start at `e₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Process {
    /// Brownian motion.
    Bm,
    /// `e₀` for all time.
    Constant,
    /// `cos t·e₀ + sin t·e₁`.
    GreatCircle,
    /// Great circle at phase `t + 0.3 sin 2t`.
    GreatCircleVariable,
    /// Brownian motion at rate `1 + ½ sin(2πt/T)`.
    TimeChangedBm,
    /// Brownian motion plus the drift `½·P_X e₁/|P_X e₁|`.
    TangentialDrift,
    /// Brownian motion with speed `1 + ½X₁²`.
    SpeedChange,
}

impl Process {
    /// The six battery processes.
    pub const BATTERY: [Process; 6] = [
        Process::Bm,
        Process::GreatCircle,
        Process::GreatCircleVariable,
        Process::TimeChangedBm,
        Process::TangentialDrift,
        Process::SpeedChange,
    ];

    pub const ALL: [Process; 7] = [
        Process::Bm,
        Process::Constant,
        Process::GreatCircle,
        Process::GreatCircleVariable,
        Process::TimeChangedBm,
        Process::TangentialDrift,
        Process::SpeedChange,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Process::Bm => "bm",
            Process::Constant => "constant",
            Process::GreatCircle => "great-circle",
            Process::GreatCircleVariable => "great-circle-variable",
            Process::TimeChangedBm => "time-changed-bm",
            Process::TangentialDrift => "tangential-drift",
            Process::SpeedChange => "speed-change",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| {
                let names: Vec<&str> = Self::ALL.iter().map(|p| p.name()).collect();
                Error::InvalidInput(format!("unknown process `{s}` (known: {})", names.join(", ")))
            })
    }

    /// Whether the process is a martingale of the sphere connection.
    pub fn is_martingale(self) -> bool {
        matches!(
            self,
            Process::Bm | Process::Constant | Process::TimeChangedBm | Process::SpeedChange
        )
    }

    pub fn is_deterministic(self) -> bool {
        matches!(self, Process::Constant | Process::GreatCircle | Process::GreatCircleVariable)
    }

    /// Path `index` of the ensemble with base seed `seed` on `Sⁿ`.
    pub fn generate(self, n: usize, grid: TimeGrid, seed: u64, index: u64) -> Result<SpacePath> {
        check_n(n)?;
        let d = n + 1;
        let mut data = vec![0.0; grid.len() * d];
        match self {
            Process::Constant => {
                for k in 0..grid.len() {
                    data[k * d] = 1.0;
                }
            }
            Process::GreatCircle | Process::GreatCircleVariable => {
                for k in 0..grid.len() {
                    let t = grid.time(k);
                    let phase = if self == Process::GreatCircle {
                        t
                    } else {
                        t + 0.3 * (2.0 * t).sin()
                    };
                    data[k * d] = phase.cos();
                    data[k * d + 1] = phase.sin();
                }
            }
            _ => {
                let mut rng = path_rng(seed, index);
                let mut x = vec![0.0; d];
                x[0] = 1.0;
                data[..d].copy_from_slice(&x);
                let mut v = vec![0.0; d];
                let span = grid.horizon() - grid.t0;
                for k in 0..grid.steps {
                    tangent_gaussian(&mut rng, &x, &mut v);
                    let scale = match self {
                        Process::TimeChangedBm => {
                            let rate = 1.0 + 0.5 * (2.0 * std::f64::consts::PI * (grid.time(k) - grid.t0) / span).sin();
                            (rate * grid.dt).sqrt()
                        }
                        Process::SpeedChange => (1.0 + 0.5 * x[0] * x[0]) * grid.dt.sqrt(),
                        _ => grid.dt.sqrt(),
                    };
                    for vi in v.iter_mut() {
                        *vi *= scale;
                    }
                    if self == Process::TangentialDrift {
                        // P_X e₁ = e₁ − x₁·x (second ambient coordinate)
                        let mut u: Vec<f64> = x.iter().map(|xi| -x[1] * xi).collect();
                        u[1] += 1.0;
                        let un = dot(&u, &u).sqrt();
                        if un >= 1e-12 {
                            for (vi, ui) in v.iter_mut().zip(&u) {
                                *vi += 0.5 * grid.dt * ui / un;
                            }
                        }
                    }
                    geodesic_step(&mut x, &v);
                    data[(k + 1) * d..(k + 2) * d].copy_from_slice(&x);
                }
            }
        }
        CoordPath::new(grid, d, data)
    }
}

/// `ω^{1l} = Σ_k (Y)_{kl}·(ΔY)_{k1}` for `l = 2..n+1`, i.e. the first column of `YᵀΔY` below the diagonal.
pub fn maurer_cartan_components(y: &Matrix, dy: &Matrix) -> Vector {
    let m = y.nrows();
    Vector::from_iterator(
        m - 1,
        (1..m).map(|l| (0..m).map(|k| y[(k, l)] * dy[(k, 0)]).sum::<f64>()),
    )
}

/// Left-point frame integrals `Σ_k Σ_m (Y_k)_{ml}·ΔX_m(k)` for `l = 2..n+1`.
pub fn criterion_integrals(x: &SpacePath, y: &GroupPath) -> Result<CoordPath> {
    let d = x.dim();
    if y.len() != x.len() || y.matrix_dim() != d {
        return Err(Error::Shape("lift does not match the space path".into()));
    }
    for k in 0..x.len() {
        let yk = y.values()[k].matrix();
        let r = (0..d).map(|i| (yk[(i, 0)] - x.row(k)[i]).powi(2)).sum::<f64>().sqrt();
        if r > LIFT_MATCH_TOL {
            return Err(Error::InconsistentLift { step: k, residual: r });
        }
    }
    let n = d - 1;
    let mut acc = vec![0.0; n];
    let mut data = Vec::with_capacity(x.len() * n);
    data.extend_from_slice(&acc);
    for k in 0..x.grid().steps {
        let yk = y.values()[k].matrix();
        let (a, b) = (x.row(k), x.row(k + 1));
        for (l, s) in acc.iter_mut().enumerate() {
            *s += (0..d).map(|m| yk[(m, l + 1)] * (b[m] - a[m])).sum::<f64>();
        }
        data.extend_from_slice(&acc);
    }
    CoordPath::new(*x.grid(), n, data)
}

/// `Z_k = Σ_w P_{X_w}(X_{w+W} − X_w)` over complete windows before `k`,
/// plus the projected partial window ending at `k`.
pub fn tangential_process(x: &SpacePath, window: usize) -> CoordPath {
    let d = x.dim();
    let mut data = Vec::with_capacity(x.len() * d);
    let mut done = vec![0.0; d];
    let mut row = vec![0.0; d];
    for k in 0..x.len() {
        let w = (k / window) * window;
        let xs = x.row(w);
        let xk = x.row(k);
        let incr: Vec<f64> = xk.iter().zip(xs).map(|(a, b)| a - b).collect();
        let p = dot(&incr, xs);
        for i in 0..d {
            row[i] = done[i] + incr[i] - p * xs[i];
        }
        data.extend_from_slice(&row);
        if (k + 1) % window == 0 && k + 1 < x.len() {
            let xe = x.row(k + 1);
            let incr: Vec<f64> = xe.iter().zip(xs).map(|(a, b)| a - b).collect();
            let p = dot(&incr, xs);
            for i in 0..d {
                done[i] += incr[i] - p * xs[i];
            }
        }
    }
    CoordPath::new(*x.grid(), d, data).expect("tangential process has grid shape")
}

fn sample_into(values: &mut Vec<f64>, path: &CoordPath, indices: &[usize]) {
    for &k in indices {
        values.extend_from_slice(path.row(k));
    }
}

/// Raw-coordinate drift test of `X₁, …, X_{n+1}`.
pub fn coordinate_drift_report(source: &dyn PathSource, checkpoints: &[f64], options: &CriterionOptions) -> Result<DriftReport> {
    single_oracle(source, checkpoints, options, |x| Ok(x.clone()))
}

/// Drift test of the tangential projection of windowed increments.
pub fn tangential_drift_oracle(source: &dyn PathSource, checkpoints: &[f64], options: &CriterionOptions) -> Result<DriftReport> {
    single_oracle(source, checkpoints, options, |x| Ok(tangential_process(x, TANGENTIAL_WINDOW)))
}

fn single_oracle(
    source: &dyn PathSource,
    checkpoints: &[f64],
    options: &CriterionOptions,
    transform: impl Fn(&CoordPath) -> Result<CoordPath> + Sync,
) -> Result<DriftReport> {
    let n = source.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let grid = source.grid();
    let indices = checkpoint_indices(&grid, checkpoints)?;
    let rows: Vec<Result<(Vec<f64>, Vec<f64>)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let z = transform(&source.path(i)?)?;
            let mut v = Vec::with_capacity(indices.len() * z.dim());
            sample_into(&mut v, &z, &indices);
            Ok((z.row(0).to_vec(), v))
        })
        .collect();
    let mut samples: Option<DriftSamples> = None;
    for r in rows {
        let (init, vals) = r?;
        let s = samples.get_or_insert_with(|| {
            DriftSamples::new(indices.iter().map(|k| grid.time(*k)).collect(), coord_names(init.len()))
        });
        s.push(&init, &vals)?;
    }
    let mut report = drift_test_samples(&samples.expect("non-empty ensemble"), &options.policy)?;
    report.seed = Some(source.base_seed());
    report.dt = Some(grid.dt);
    Ok(report)
}

/// Every verdict of the sphere experiment on one ensemble.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereAnalysis {
    pub process: String,
    pub space: String,
    pub seed: u64,
    pub n_paths: usize,
    pub dt: f64,
    pub criterion: CriterionReport,
    pub frame_integrals: DriftReport,
    pub tangential: DriftReport,
    pub coordinates: DriftReport,
    /// `criterion-{pass|fail}/coordinates-{martingale|drift}`.
    pub classification: String,
    /// Whether the criterion, frame-integral and tangential verdicts coincide.
    pub oracles_agree: bool,
}

struct PathRows {
    d_init: Vec<f64>,
    d_vals: Vec<f64>,
    i_vals: Vec<f64>,
    t_init: Vec<f64>,
    t_vals: Vec<f64>,
    x_init: Vec<f64>,
    x_vals: Vec<f64>,
    residual: f64,
    vertical: f64,
}

/// One pass over `source`: lift each path once and feed the criterion, the
/// frame integrals, the tangential oracle and the raw coordinates.
pub fn analyze(
    sphere: &SphereSpec,
    process: &str,
    source: &dyn PathSource,
    checkpoints: &[f64],
    options: &CriterionOptions,
) -> Result<SphereAnalysis> {
    let n_paths = source.len();
    if n_paths == 0 {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let spec = sphere.spec();
    let grid = source.grid();
    let indices = checkpoint_indices(&grid, checkpoints)?;
    let rows: Vec<Result<PathRows>> = (0..n_paths)
        .into_par_iter()
        .map(|i| {
            let x = source.path(i)?;
            if x.dim() != sphere.ambient_dim() {
                return Err(Error::Shape(format!(
                    "path {i} has {} coordinates, {} expects {}",
                    x.dim(),
                    spec.name(),
                    sphere.ambient_dim()
                )));
            }
            let lifted = LiftedPath::new(&x, spec)?;
            let d = lifted.criterion_process(spec, options.reading);
            let integrals = criterion_integrals(&x, &lifted.lift)?;
            let tang = tangential_process(&x, TANGENTIAL_WINDOW);
            let mut r = PathRows {
                d_init: d.row(0).to_vec(),
                d_vals: Vec::new(),
                i_vals: Vec::new(),
                t_init: tang.row(0).to_vec(),
                t_vals: Vec::new(),
                x_init: x.row(0).to_vec(),
                x_vals: Vec::new(),
                residual: lifted.max_projection_residual,
                vertical: lifted.max_vertical_increment,
            };
            sample_into(&mut r.d_vals, &d, &indices);
            sample_into(&mut r.i_vals, &integrals, &indices);
            sample_into(&mut r.t_vals, &tang, &indices);
            sample_into(&mut r.x_vals, &x, &indices);
            Ok(r)
        })
        .collect();
    let times: Vec<f64> = indices.iter().map(|k| grid.time(*k)).collect();
    let n = sphere.n();
    let mut d_s = DriftSamples::new(times.clone(), coord_names(n));
    let mut i_s = DriftSamples::new(times.clone(), coord_names(n));
    let mut t_s = DriftSamples::new(times.clone(), coord_names(n + 1));
    let mut x_s = DriftSamples::new(times, coord_names(n + 1));
    let mut diag = LiftDiagnostics::new();
    let zeros = vec![0.0; n];
    for r in rows {
        match r {
            Ok(r) => {
                diag.max_projection_residual = diag.max_projection_residual.max(r.residual);
                diag.max_vertical_increment = diag.max_vertical_increment.max(r.vertical);
                d_s.push(&r.d_init, &r.d_vals)?;
                i_s.push(&zeros, &r.i_vals)?;
                t_s.push(&r.t_init, &r.t_vals)?;
                x_s.push(&r.x_init, &r.x_vals)?;
            }
            Err(e @ (Error::Shape(_) | Error::InvalidInput(_))) => return Err(e),
            Err(_) => diag.aborted_paths += 1,
        }
    }
    diag.check_aborts(n_paths)?;
    let seed = source.base_seed();
    let space = spec.name().to_string();
    let tag = |mut r: DriftReport| {
        r = r.with_meta(process, &space, seed, grid.dt);
        r
    };
    let criterion = CriterionReport::from_parts(tag(drift_test_samples(&d_s, &options.policy)?), diag, options.reading);
    let frame_integrals = tag(drift_test_samples(&i_s, &options.policy)?);
    let tangential = tag(drift_test_samples(&t_s, &options.policy)?);
    let coordinates = tag(drift_test_samples(&x_s, &options.policy)?);
    let classification = format!(
        "criterion-{}/coordinates-{}",
        criterion.verdict,
        if coordinates.verdict.is_pass() { "martingale" } else { "drift" }
    );
    let oracles_agree = criterion.verdict == frame_integrals.verdict && criterion.verdict == tangential.verdict;
    Ok(SphereAnalysis {
        process: process.to_string(),
        space,
        seed,
        n_paths,
        dt: grid.dt,
        criterion,
        frame_integrals,
        tangential,
        coordinates,
        classification,
        oracles_agree,
    })
}
