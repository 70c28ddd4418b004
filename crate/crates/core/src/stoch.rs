//! Discretized semimartingales: time grids, paths, left-point (Itô) and
//! midpoint (Stratonovich) integrals, quadratic covariation, and the
//! ensemble drift test used as the statistical surrogate for "local
//! martingale".

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{AlgebraElement, Basis, Vector};

/// Uniform time grid `t0, t0 + dt, …, t0 + steps·dt`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub dt: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, dt: f64, steps: usize) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
        }
        if steps == 0 {
            return Err(Error::InvalidInput("grid needs at least one step".into()));
        }
        Ok(Self { t0, dt, steps })
    }

    /// Grid on `[0, horizon]`; `horizon/dt` must be an integer to within 1e-12.
    pub fn with_horizon(dt: f64, horizon: f64) -> Result<Self> {
        if !(dt > 0.0) || !(horizon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dt and horizon must be positive (dt={dt}, T={horizon})"
            )));
        }
        let steps = (horizon / dt).round();
        if (steps * dt - horizon).abs() > 1e-12 * horizon.max(1.0) || steps < 1.0 {
            return Err(Error::InvalidInput(format!(
                "horizon {horizon} is not a whole number of steps of {dt}"
            )));
        }
        Self::new(0.0, dt, steps as usize)
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.dt
    }

    pub fn horizon(&self) -> f64 {
        self.time(self.steps)
    }

    /// Grid index of `t`; `t` must lie within the grid and on a grid point
    /// to within `1e-9·dt`.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = (t - self.t0) / self.dt;
        let k = x.round();
        if k < 0.0 || k > self.steps as f64 || (x - k).abs() > 1e-6 {
            return Err(Error::InvalidInput(format!(
                "time {t} is not a grid point of [{}, {}] with dt {}",
                self.t0,
                self.horizon(),
                self.dt
            )));
        }
        Ok(k as usize)
    }

    /// `{¼T, ½T, ¾T, T}` snapped to the grid.
    pub fn default_checkpoints(&self) -> Vec<f64> {
        [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|f| {
                let k = ((self.steps as f64) * f).round() as usize;
                self.time(k.max(1))
            })
            .collect()
    }

    pub fn same_as(&self, other: &TimeGrid) -> bool {
        self.steps == other.steps
            && (self.dt - other.dt).abs() <= 1e-15 * self.dt.abs()
            && (self.t0 - other.t0).abs() <= 1e-15 * (1.0 + self.t0.abs())
    }
}

fn check_grids(a: &TimeGrid, b: &TimeGrid) -> Result<()> {
    if !a.same_as(b) {
        return Err(Error::Shape(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// Scalar path sampled on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct RealPath {
    grid: TimeGrid,
    values: Vec<f64>,
}

impl RealPath {
    pub fn new(grid: TimeGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "path has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Self {
        let values = (0..grid.len()).map(|k| f(grid.time(k))).collect();
        Self { grid, values }
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
        }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn last(&self) -> f64 {
        *self.values.last().expect("non-empty path")
    }

    pub fn increments(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.windows(2).map(|w| w[1] - w[0])
    }

    /// Pointwise map.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| f(*v)).collect(),
        }
    }
}

/// Multi-coordinate path stored row-major, one row of `dim` values per grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordPath {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

/// Points of `G/H` in its declared model (for `Sⁿ`: unit vectors).
pub type SpacePath = CoordPath;

impl CoordPath {
    pub fn new(grid: TimeGrid, dim: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() * dim {
            return Err(Error::Shape(format!(
                "expected {} values ({} points x {dim}), got {}",
                grid.len() * dim,
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, dim, data })
    }

    pub fn from_rows(grid: TimeGrid, rows: &[Vector]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            if r.len() != dim {
                return Err(Error::Shape("ragged rows".into()));
            }
            data.extend_from_slice(r.as_slice());
        }
        Self::new(grid, dim, data)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn point(&self, k: usize) -> Vector {
        Vector::from_column_slice(self.row(k))
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn coordinate(&self, j: usize) -> RealPath {
        RealPath {
            grid: self.grid,
            values: (0..self.len()).map(|k| self.data[k * self.dim + j]).collect(),
        }
    }

    pub fn coordinates(&self) -> Vec<RealPath> {
        (0..self.dim).map(|j| self.coordinate(j)).collect()
    }

    pub fn from_coordinates(paths: &[RealPath]) -> Result<Self> {
        let first = paths
            .first()
            .ok_or_else(|| Error::InvalidInput("no coordinates".into()))?;
        for p in paths {
            check_grids(first.grid(), p.grid())?;
        }
        let dim = paths.len();
        let n = first.grid.len();
        let mut data = Vec::with_capacity(n * dim);
        for k in 0..n {
            for p in paths {
                data.push(p.values[k]);
            }
        }
        Self::new(first.grid, dim, data)
    }
}

/// Path in a matrix Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraPath {
    grid: TimeGrid,
    values: Vec<AlgebraElement>,
}

impl AlgebraPath {
    pub fn new(grid: TimeGrid, values: Vec<AlgebraElement>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "algebra path has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(first) = values.first() {
            if values.iter().any(|v| v.dim() != first.dim()) {
                return Err(Error::Shape("algebra path mixes matrix sizes".into()));
            }
        }
        Ok(Self { grid, values })
    }

    /// Lifts coordinates in `basis` to matrices.
    pub fn from_coords(basis: &Basis, coords: &CoordPath) -> Result<Self> {
        if coords.dim() != basis.len() {
            return Err(Error::Shape(format!(
                "coordinate path has {} components, basis has {}",
                coords.dim(),
                basis.len()
            )));
        }
        let values = (0..coords.len())
            .map(|k| AlgebraElement::from_coords(basis, Vector::from_column_slice(coords.row(k))))
            .collect::<Result<Vec<_>>>()?;
        Self::new(*coords.grid(), values)
    }

    /// Coordinates of every value in `basis`.
    pub fn to_coords(&self, basis: &Basis) -> Result<CoordPath> {
        let mut data = Vec::with_capacity(self.values.len() * basis.len());
        for v in &self.values {
            let c = match v.coords() {
                Some(c) if c.len() == basis.len() => c.clone(),
                _ => basis.coords(v.matrix())?,
            };
            data.extend_from_slice(c.as_slice());
        }
        CoordPath::new(self.grid, basis.len(), data)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[AlgebraElement] {
        &self.values
    }

    pub fn matrix_dim(&self) -> usize {
        self.values.first().map_or(0, |v| v.dim())
    }
}

/// Paths sharing one grid; path `i` is a deterministic function of `(base_seed, i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Ensemble<P> {
    pub paths: Vec<P>,
    pub base_seed: u64,
}

impl<P> Ensemble<P> {
    pub fn new(paths: Vec<P>, base_seed: u64) -> Self {
        Self { paths, base_seed }
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }
}

/// Ensemble whose paths can be produced one at a time, stored or generated.
pub trait PathSource: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn grid(&self) -> TimeGrid;
    fn base_seed(&self) -> u64;
    fn path(&self, index: usize) -> Result<CoordPath>;
}

impl PathSource for Ensemble<CoordPath> {
    fn len(&self) -> usize {
        self.paths.len()
    }

    fn grid(&self) -> TimeGrid {
        self.paths
            .first()
            .map_or(TimeGrid { t0: 0.0, dt: 1.0, steps: 1 }, |p| *p.grid())
    }

    fn base_seed(&self) -> u64 {
        self.base_seed
    }

    fn path(&self, index: usize) -> Result<CoordPath> {
        let p = self
            .paths
            .get(index)
            .ok_or_else(|| Error::InvalidInput(format!("no path {index}")))?;
        if !p.grid().same_as(&self.grid()) {
            return Err(Error::Shape(format!("path {index} is on a different grid")));
        }
        Ok(p.clone())
    }
}

/// Lazily generated ensemble: path `i` is `generate(base_seed, i)`.
pub struct GeneratedEnsemble<F> {
    n_paths: usize,
    grid: TimeGrid,
    base_seed: u64,
    generate: F,
}

impl<F> GeneratedEnsemble<F>
where
    F: Fn(u64, u64) -> Result<CoordPath> + Sync,
{
    pub fn new(n_paths: usize, grid: TimeGrid, base_seed: u64, generate: F) -> Self {
        Self {
            n_paths,
            grid,
            base_seed,
            generate,
        }
    }

    /// Materializes every path.
    pub fn collect(&self) -> Result<Ensemble<CoordPath>> {
        let paths = (0..self.n_paths)
            .map(|i| self.path(i))
            .collect::<Result<Vec<_>>>()?;
        Ok(Ensemble::new(paths, self.base_seed))
    }
}

impl<F> PathSource for GeneratedEnsemble<F>
where
    F: Fn(u64, u64) -> Result<CoordPath> + Sync,
{
    fn len(&self) -> usize {
        self.n_paths
    }

    fn grid(&self) -> TimeGrid {
        self.grid
    }

    fn base_seed(&self) -> u64 {
        self.base_seed
    }

    fn path(&self, index: usize) -> Result<CoordPath> {
        (self.generate)(self.base_seed, index as u64)
    }
}

/// Counter-based stream for path `index` of an ensemble seeded with `base_seed`.
pub fn path_rng(base_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed);
    rng.set_stream(index);
    rng
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

/// `dim`-dimensional Brownian motion from the origin: independent
/// `N(0, dt)` increments per coordinate.
pub fn sample_bm(dim: usize, grid: TimeGrid, seed: u64) -> Result<CoordPath> {
    sample_bm_path(dim, grid, seed, 0)
}

/// Path `index` of the Brownian ensemble with base seed `seed`.
pub fn sample_bm_path(dim: usize, grid: TimeGrid, seed: u64, index: u64) -> Result<CoordPath> {
    if dim == 0 {
        return Err(Error::InvalidDimension("Brownian motion needs dim >= 1".into()));
    }
    let mut rng = path_rng(seed, index);
    let sd = grid.dt.sqrt();
    let mut data = vec![0.0; grid.len() * dim];
    for k in 1..grid.len() {
        for j in 0..dim {
            data[k * dim + j] = data[(k - 1) * dim + j] + sd * standard_normal(&mut rng);
        }
    }
    CoordPath::new(grid, dim, data)
}

pub fn brownian_ensemble(dim: usize, grid: TimeGrid, seed: u64, n: usize) -> Result<Ensemble<CoordPath>> {
    let paths = (0..n as u64)
        .map(|i| sample_bm_path(dim, grid, seed, i))
        .collect::<Result<Vec<_>>>()?;
    Ok(Ensemble::new(paths, seed))
}

/// `Σ_{k<j} θ(t_k)·ΔX_k`.
pub fn ito_integral(theta: &RealPath, x: &RealPath) -> Result<RealPath> {
    check_grids(theta.grid(), x.grid())?;
    let mut out = Vec::with_capacity(x.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..x.grid.steps {
        acc += theta.values[k] * (x.values[k + 1] - x.values[k]);
        out.push(acc);
    }
    RealPath::new(x.grid, out)
}

/// `Σ_{k<j} ½(θ(t_k) + θ(t_{k+1}))·ΔX_k`.
pub fn stratonovich_integral(theta: &RealPath, x: &RealPath) -> Result<RealPath> {
    check_grids(theta.grid(), x.grid())?;
    let mut out = Vec::with_capacity(x.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..x.grid.steps {
        acc += 0.5 * (theta.values[k] + theta.values[k + 1]) * (x.values[k + 1] - x.values[k]);
        out.push(acc);
    }
    RealPath::new(x.grid, out)
}

/// `Σ_{k<j} ΔX_k·ΔY_k`.
pub fn quadratic_covariation(x: &RealPath, y: &RealPath) -> Result<RealPath> {
    check_grids(x.grid(), y.grid())?;
    let mut out = Vec::with_capacity(x.values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for k in 0..x.grid.steps {
        acc += (x.values[k + 1] - x.values[k]) * (y.values[k + 1] - y.values[k]);
        out.push(acc);
    }
    RealPath::new(x.grid, out)
}

/// Thresholds of the drift verdict.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftPolicy {
    /// Largest admissible `|z|` for stochastic ensembles.
    pub z_max: f64,
    /// Absolute drift tolerance, scaled by `1 + max|Z₀|`.
    pub abs_tol: f64,
    /// Smallest ensemble for which z-scores are computed.
    pub min_paths: usize,
}

impl Default for DriftPolicy {
    fn default() -> Self {
        Self {
            z_max: 4.0,
            abs_tol: 1e-8,
            min_paths: 100,
        }
    }
}

/// Values of an ensemble at its initial time and at each checkpoint:
/// `at[(path·checkpoints + c)·dim + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSamples {
    pub times: Vec<f64>,
    pub coords: Vec<String>,
    pub initial: Vec<f64>,
    pub at: Vec<f64>,
    pub n_paths: usize,
}

impl DriftSamples {
    pub fn new(times: Vec<f64>, coords: Vec<String>) -> Self {
        Self {
            times,
            coords,
            initial: Vec::new(),
            at: Vec::new(),
            n_paths: 0,
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Appends one path: `initial` has `dim` values, `values` has `checkpoints·dim`.
    pub fn push(&mut self, initial: &[f64], values: &[f64]) -> Result<()> {
        let d = self.dim();
        if initial.len() != d || values.len() != d * self.times.len() {
            return Err(Error::Shape("drift sample row has the wrong length".into()));
        }
        self.initial.extend_from_slice(initial);
        self.at.extend_from_slice(values);
        self.n_paths += 1;
        Ok(())
    }

    /// Samples `path` at the checkpoint indices.
    pub fn push_path(&mut self, path: &CoordPath, indices: &[usize]) -> Result<()> {
        let mut values = Vec::with_capacity(indices.len() * path.dim());
        for &k in indices {
            values.extend_from_slice(path.row(k));
        }
        self.push(path.row(0), &values)
    }
}

/// Names `c1, …, c_dim`.
pub fn coord_names(dim: usize) -> Vec<String> {
    (1..=dim).map(|j| format!("c{j}")).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl Verdict {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    }

    pub fn is_pass(self) -> bool {
        self == Verdict::Pass
    }

    pub fn and(self, other: Verdict) -> Verdict {
        Verdict::from_pass(self.is_pass() && other.is_pass())
    }
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DriftMode {
    /// `|mean/stderr| ≤ z_max`.
    Z,
    /// `|mean| ≤ abs_tol·(1 + max|Z₀|)`, used when the ensemble has no spread.
    Absolute,
}

/// Statistic of one coordinate at one checkpoint.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub coord: String,
    pub mean: f64,
    pub stderr: f64,
    pub z: Option<f64>,
    pub mode: DriftMode,
    pub pass: bool,
}

/// Per-coordinate, per-checkpoint drift statistics with verdict and provenance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    pub process: Option<String>,
    pub space: Option<String>,
    pub seed: Option<u64>,
    pub n_paths: usize,
    pub dt: Option<f64>,
    pub checkpoints: Vec<CheckpointStat>,
    pub verdict: Verdict,
    pub policy: DriftPolicy,
}

impl DriftReport {
    pub fn with_meta(mut self, process: &str, space: &str, seed: u64, dt: f64) -> Self {
        self.process = Some(process.to_string());
        self.space = Some(space.to_string());
        self.seed = Some(seed);
        self.dt = Some(dt);
        self
    }

    /// Largest `|z|` over stochastic checkpoints.
    pub fn max_abs_z(&self) -> f64 {
        self.checkpoints
            .iter()
            .filter_map(|c| c.z)
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn stats_at(&self, t: f64) -> impl Iterator<Item = &CheckpointStat> {
        self.checkpoints.iter().filter(move |c| (c.t - t).abs() < 1e-12)
    }

    pub fn stat(&self, t: f64, coord: &str) -> Option<&CheckpointStat> {
        self.stats_at(t).find(|c| c.coord == coord)
    }
}

/// Drift test over stored paths at the given checkpoint times.
pub fn drift_test(ens: &Ensemble<CoordPath>, checkpoints: &[f64]) -> Result<DriftReport> {
    let first = ens
        .paths
        .first()
        .ok_or_else(|| Error::InvalidInput("empty ensemble".into()))?;
    let grid = *first.grid();
    let indices = checkpoints
        .iter()
        .map(|t| grid.index_of(*t))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = DriftSamples::new(
        indices.iter().map(|k| grid.time(*k)).collect(),
        coord_names(first.dim()),
    );
    for p in &ens.paths {
        check_grids(&grid, p.grid())?;
        if p.dim() != first.dim() {
            return Err(Error::Shape("ensemble mixes path dimensions".into()));
        }
        samples.push_path(p, &indices)?;
    }
    let mut report = drift_test_samples(&samples, &DriftPolicy::default())?;
    report.seed = Some(ens.base_seed);
    report.dt = Some(grid.dt);
    Ok(report)
}

/// Drift test of `E[Z_t − Z_0] = 0` at every checkpoint and coordinate.
pub fn drift_test_samples(samples: &DriftSamples, policy: &DriftPolicy) -> Result<DriftReport> {
    let n = samples.n_paths;
    if n == 0 {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let d = samples.dim();
    let nc = samples.times.len();
    let mut stats = Vec::with_capacity(nc * d);
    let mut all_pass = true;
    for (c, &t) in samples.times.iter().enumerate() {
        for j in 0..d {
            let incr = |p: usize| samples.at[(p * nc + c) * d + j] - samples.initial[p * d + j];
            let mean = (0..n).map(incr).sum::<f64>() / n as f64;
            let stderr = if n > 1 {
                let ss = (0..n).map(|p| (incr(p) - mean).powi(2)).sum::<f64>();
                (ss / (n - 1) as f64 / n as f64).sqrt()
            } else {
                0.0
            };
            let z0 = (0..n)
                .map(|p| samples.initial[p * d + j].abs())
                .fold(0.0, f64::max);
            let tol = policy.abs_tol * (1.0 + z0);
            let (mode, z, pass) = if stderr <= tol {
                (DriftMode::Absolute, None, mean.abs() <= tol)
            } else {
                if n < policy.min_paths {
                    return Err(Error::InvalidInput(format!(
                        "z-scores need at least {} paths, got {n}",
                        policy.min_paths
                    )));
                }
                let z = mean / stderr;
                (DriftMode::Z, Some(z), z.abs() <= policy.z_max)
            };
            all_pass &= pass;
            stats.push(CheckpointStat {
                t,
                coord: samples.coords[j].clone(),
                mean,
                stderr,
                z,
                mode,
                pass,
            });
        }
    }
    Ok(DriftReport {
        process: None,
        space: None,
        seed: None,
        n_paths: n,
        dt: None,
        checkpoints: stats,
        verdict: Verdict::from_pass(all_pass),
        policy: *policy,
    })
}
