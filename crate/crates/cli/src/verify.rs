//! Invariant suites run by `homogmart verify`, at fixed seeds.

use homogmart::group_sde::{
    ito_exponential_signed, stochastic_logarithm, strat_exponential, vertical_log_components, GroupPath,
    LeftInvariantConnection,
};
use homogmart::homog::{check_reductive, translate_process, HomogSpaceSpec, LiftSolver, LiftedPath, SpaceModel, CriterionOptions, martingale_criterion};
use homogmart::lie::{
    bracket, e_ij, exp_matrix, inner, log_matrix, orthogonality_defect, polar_projection, so_basis, AlgebraElement,
    Basis, GroupElement, Matrix, Vector,
};
use homogmart::sphere::{analyze, Process, SphereSpec};
use homogmart::stoch::{
    brownian_ensemble, drift_test, ito_integral, path_rng, quadratic_covariation, standard_normal, stratonovich_integral,
    AlgebraPath, CoordPath, Ensemble, GeneratedEnsemble, RealPath, TimeGrid,
};
use rand::Rng;

/// Outcome of one invariant: pass flag and a short measurement.
pub struct CheckResult {
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn within(value: f64, limit: f64, what: &str) -> Self {
        Self {
            pass: value <= limit,
            detail: format!("{what} {value:.3e} (limit {limit:.0e})"),
        }
    }

    fn error(e: impl std::fmt::Display) -> Self {
        Self {
            pass: false,
            detail: format!("error: {e}"),
        }
    }
}

type CheckFn = fn(&VerifyOptions) -> homogmart::Result<CheckResult>;

pub struct Check {
    pub suite: &'static str,
    pub name: &'static str,
    run: CheckFn,
}

/// Knobs that only exist to prove the suite notices a broken build.
#[derive(Clone, Copy, Debug)]
pub struct VerifyOptions {
    pub ito_correction: f64,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self { ito_correction: -0.5 }
    }
}

pub const CHECKS: &[Check] = &[
    Check { suite: "lie", name: "metric-orthonormal-basis", run: metric_orthonormal_basis },
    Check { suite: "lie", name: "exp-log-roundtrip", run: exp_log_roundtrip },
    Check { suite: "lie", name: "one-parameter-closed-form", run: one_parameter_closed_form },
    Check { suite: "lie", name: "bracket-antisymmetry-jacobi", run: bracket_identities },
    Check { suite: "lie", name: "polar-projection-retracts", run: polar_retracts },
    Check { suite: "stoch", name: "strat-ito-covariation-identity", run: strat_ito_identity },
    Check { suite: "stoch", name: "brownian-quadratic-variation", run: brownian_qv },
    Check { suite: "stoch", name: "drift-test-modes", run: drift_modes },
    Check { suite: "group-sde", name: "ito-exponential-refinement", run: ito_refinement },
    Check { suite: "group-sde", name: "strat-log-roundtrip", run: strat_log_roundtrip },
    Check { suite: "group-sde", name: "left-invariance", run: left_invariance },
    Check { suite: "group-sde", name: "membership-preserved", run: membership_preserved },
    Check { suite: "homog", name: "sphere-specs-reductive", run: sphere_specs_reductive },
    Check { suite: "homog", name: "skewed-complement-rejected", run: skewed_complement_rejected },
    Check { suite: "homog", name: "lift-fidelity", run: lift_fidelity },
    Check { suite: "homog", name: "vertical-log-components-small", run: vertical_components_small },
    Check { suite: "homog", name: "translation-invariant-verdict", run: translation_invariance },
    Check { suite: "sphere", name: "bm-criterion-pass", run: bm_criterion_pass },
    Check { suite: "sphere", name: "great-circle-criterion-fail", run: great_circle_fail },
    Check { suite: "sphere", name: "oracles-agree-on-battery", run: oracles_agree },
    Check { suite: "sphere", name: "coordinate-drift-discrepancy", run: coordinate_drift },
];

impl Check {
    pub fn id(&self) -> String {
        format!("{}/{}", self.suite, self.name)
    }

    pub fn selected_by(&self, filter: Option<&str>) -> bool {
        filter.is_none_or(|f| self.suite == f || self.name == f || self.id().starts_with(f))
    }

    pub fn run(&self, options: &VerifyOptions) -> CheckResult {
        (self.run)(options).unwrap_or_else(CheckResult::error)
    }
}

/// Runs the selected checks and renders one line per check plus a summary.
pub fn run_suites(filter: Option<&str>, options: &VerifyOptions) -> (bool, String) {
    let selected: Vec<&Check> = CHECKS.iter().filter(|c| c.selected_by(filter)).collect();
    let mut out = String::new();
    let mut failed = 0;
    for c in &selected {
        let r = c.run(options);
        if !r.pass {
            failed += 1;
        }
        out.push_str(&format!(
            "{:<10} {:<32} {}  {}\n",
            c.suite,
            c.name,
            if r.pass { "PASS" } else { "FAIL" },
            r.detail
        ));
    }
    out.push_str(&format!("{} checks, {} passed, {} failed\n", selected.len(), selected.len() - failed, failed));
    (failed == 0 && !selected.is_empty(), out)
}

fn random_algebra<R: Rng>(rng: &mut R, m: usize, scale: f64) -> Matrix {
    let mut a = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i + 1..m {
            let c = scale * standard_normal(rng);
            a[(i, j)] = -c;
            a[(j, i)] = c;
        }
    }
    a
}

fn brownian_driver(basis: &Basis, coords_used: usize, grid: TimeGrid, seed: u64, index: u64) -> homogmart::Result<AlgebraPath> {
    let mut rng = path_rng(seed, index);
    let sd = grid.dt.sqrt();
    let mut c = vec![0.0; basis.len()];
    let mut values = vec![AlgebraElement::zero(basis.matrix_dim())];
    for _ in 0..grid.steps {
        for x in c.iter_mut().take(coords_used) {
            *x += sd * standard_normal(&mut rng);
        }
        values.push(AlgebraElement::new(basis.combine(&c)));
    }
    AlgebraPath::new(grid, values)
}

fn metric_orthonormal_basis(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for m in 2..=7 {
        let b = so_basis(m)?;
        for (i, u) in b.iter().enumerate() {
            for (j, v) in b.iter().enumerate() {
                let delta = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((inner(u, v) - delta).abs());
            }
        }
    }
    Ok(CheckResult::within(worst, 1e-12, "max |<Eij,Ekl> - delta|, m<=7:"))
}

fn exp_log_roundtrip(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut rng = path_rng(11, 0);
    let mut worst: f64 = 0.0;
    for m in 3..=5 {
        for _ in 0..100 {
            let a = random_algebra(&mut rng, m, 0.5);
            let g = exp_matrix(&a);
            worst = worst.max((log_matrix(&g)? - &a).amax());
            let h = polar_projection(&exp_matrix(&random_algebra(&mut rng, m, 0.7)));
            worst = worst.max((exp_matrix(&log_matrix(&h)?) - &h).amax());
        }
    }
    Ok(CheckResult::within(worst, 1e-9, "sup error:"))
}

fn one_parameter_closed_form(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut worst: f64 = 0.0;
    for m in [3, 4, 6] {
        for k in 0..=40 {
            let t = -3.0 + 0.15 * k as f64;
            let g = exp_matrix(&(e_ij(m, 0, 1) * t));
            let mut r = Matrix::identity(m, m);
            r[(0, 0)] = t.cos();
            r[(1, 1)] = t.cos();
            r[(0, 1)] = -t.sin();
            r[(1, 0)] = t.sin();
            worst = worst.max((g - r).amax());
        }
    }
    Ok(CheckResult::within(worst, 1e-10, "sup error:"))
}

fn bracket_identities(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut rng = path_rng(12, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let [x, y, z] = [0, 1, 2].map(|_| AlgebraElement::new(random_algebra(&mut rng, 4, 1.0)));
        let xy = bracket(&x, &y)?;
        let yx = bracket(&y, &x)?;
        worst = worst.max((xy.matrix() + yx.matrix()).amax());
        let j = bracket(&x, &bracket(&y, &z)?)?.matrix().clone()
            + bracket(&y, &bracket(&z, &x)?)?.matrix()
            + bracket(&z, &bracket(&x, &y)?)?.matrix();
        worst = worst.max(j.amax());
    }
    Ok(CheckResult::within(worst, 1e-12, "max residual:"))
}

fn polar_retracts(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut rng = path_rng(13, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let g = exp_matrix(&random_algebra(&mut rng, 4, 1.0));
        let noise = Matrix::from_fn(4, 4, |_, _| 1e-6 * standard_normal(&mut rng));
        let p = polar_projection(&(&g + noise));
        worst = worst.max(orthogonality_defect(&p));
        worst = worst.max((polar_projection(&p) - &p).amax());
    }
    Ok(CheckResult::within(worst, 1e-12, "orthogonality/idempotence:"))
}

fn strat_ito_identity(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(1e-3, 1.0)?;
    let ens = brownian_ensemble(2, grid, 21, 100)?;
    let mut worst: f64 = 0.0;
    for p in &ens.paths {
        let (x, theta) = (p.coordinate(0), p.coordinate(1).map(|v| v.sin()));
        let s = stratonovich_integral(&theta, &x)?;
        let i = ito_integral(&theta, &x)?;
        let q = quadratic_covariation(&theta, &x)?;
        for k in 0..grid.len() {
            worst = worst.max((s.values()[k] - i.values()[k] - 0.5 * q.values()[k]).abs());
        }
    }
    Ok(CheckResult::within(worst, 1e-13, "max |S - I - QV/2| over 100 paths:"))
}

fn brownian_qv(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(1e-3, 1.0)?;
    let ens = brownian_ensemble(1, grid, 22, 50)?;
    let mut mean = 0.0;
    for p in &ens.paths {
        let b = p.coordinate(0);
        mean += quadratic_covariation(&b, &b)?.last() / 50.0;
    }
    Ok(CheckResult::within((mean - 1.0).abs(), 0.05, "|mean [B,B]_1 - 1|:"))
}

fn drift_modes(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(0.01, 1.0)?;
    let cps = grid.default_checkpoints();
    let constant = Ensemble::new(vec![CoordPath::from_coordinates(&[RealPath::constant(grid, 0.3)])?; 10], 0);
    let drifting = Ensemble::new(vec![CoordPath::from_coordinates(&[RealPath::from_fn(grid, |t| 0.3 + t)])?; 10], 0);
    let noise = brownian_ensemble(1, grid, 23, 2000)?;
    let a = drift_test(&constant, &cps)?.verdict.is_pass();
    let b = !drift_test(&drifting, &cps)?.verdict.is_pass();
    let c = drift_test(&noise, &cps)?.verdict.is_pass();
    Ok(CheckResult {
        pass: a && b && c,
        detail: format!("constant passes: {a}, linear drift fails: {b}, brownian passes: {c}"),
    })
}

/// Mean sup-distance between the Itô exponential on a coarse grid and a fine
/// Stratonovich reference of `N_t - 1.5 t C`.
pub fn ito_reference_error(correction: f64, coarse_dt: f64, seeds: u64) -> homogmart::Result<f64> {
    let basis = Basis::from_elements(&so_basis(3)?, 3)?;
    let c = e_ij(3, 1, 2) * 0.8;
    let conn = LeftInvariantConnection::metric_times(basis.clone(), &c)?;
    let fine_factor = 100;
    let mut total = 0.0;
    for s in 0..seeds {
        let steps = (1.0 / coarse_dt).round() as usize * fine_factor;
        let fine = TimeGrid::new(0.0, coarse_dt / fine_factor as f64, steps)?;
        let n = brownian_driver(&basis, 3, fine, 17, s)?;
        let shifted: Vec<AlgebraElement> = n
            .values()
            .iter()
            .enumerate()
            .map(|(k, v)| AlgebraElement::new(v.matrix() - &c * (1.5 * fine.time(k))))
            .collect();
        let reference = strat_exponential(&AlgebraPath::new(fine, shifted)?, &GroupElement::identity(3))?;
        let coarse_grid = TimeGrid::new(0.0, coarse_dt, steps / fine_factor)?;
        let coarse = AlgebraPath::new(coarse_grid, n.values().iter().step_by(fine_factor).cloned().collect())?;
        let y = ito_exponential_signed(&coarse, &conn, &GroupElement::identity(3), correction)?;
        let err = y
            .values()
            .iter()
            .zip(reference.values().iter().step_by(fine_factor))
            .map(|(a, b)| (a.matrix() - b.matrix()).amax())
            .fold(0.0, f64::max);
        total += err;
    }
    Ok(total / seeds as f64)
}

fn ito_refinement(o: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let coarse = ito_reference_error(o.ito_correction, 0.02, 4)?;
    let fine = ito_reference_error(o.ito_correction, 0.005, 4)?;
    Ok(CheckResult {
        pass: fine < 0.5 * coarse && fine < 0.15,
        detail: format!("error {coarse:.3e} at dt=2e-2 -> {fine:.3e} at dt=5e-3 (must at least halve, stay below 0.15)"),
    })
}

fn smooth_driver(grid: TimeGrid) -> homogmart::Result<AlgebraPath> {
    let b = so_basis(3)?;
    let values = (0..grid.len())
        .map(|k| {
            let t = grid.time(k);
            AlgebraElement::new(b[0].matrix() * t.sin() + b[1].matrix() * (0.5 * t * t) + b[2].matrix() * (0.3 * t))
        })
        .collect();
    AlgebraPath::new(grid, values)
}

fn strat_log_roundtrip(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(1e-3, 2.0)?;
    let m = smooth_driver(grid)?;
    let y = strat_exponential(&m, &GroupElement::identity(3))?;
    let l = stochastic_logarithm(&y)?;
    let worst = l
        .values()
        .iter()
        .zip(m.values())
        .map(|(a, b)| (a.matrix() - b.matrix()).amax())
        .fold(0.0, f64::max);
    Ok(CheckResult::within(worst, 1e-9, "sup |log(exp M) - M|:"))
}

fn left_invariance(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::new(0.0, 0.01, 200)?;
    let basis = Basis::from_elements(&so_basis(3)?, 3)?;
    let m = brownian_driver(&basis, 3, grid, 2, 0)?;
    let g0 = GroupElement::new_unchecked(exp_matrix(&(e_ij(3, 0, 2) * 0.9 + e_ij(3, 1, 2) * 0.2)));
    let a = strat_exponential(&m, &g0)?;
    let b = strat_exponential(&m, &GroupElement::identity(3))?.left_translated(&g0);
    Ok(CheckResult::within(a.sup_distance(&b)?, 1e-12, "sup |exp(g0; M) - g0 exp(M)|:"))
}

fn membership_preserved(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::new(0.0, 1e-3, 5000)?;
    let basis = Basis::from_elements(&so_basis(4)?, 4)?;
    let m = brownian_driver(&basis, basis.len(), grid, 9, 0)?;
    let y: GroupPath = strat_exponential(&m, &GroupElement::identity(4))?;
    Ok(CheckResult::within(y.max_membership_violation(), 1e-10, "max |Y^T Y - I|:"))
}

fn sphere_specs_reductive(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut worst: f64 = 0.0;
    let mut all = true;
    for n in 2..=4 {
        let r = check_reductive(SphereSpec::new(n)?.spec());
        all &= r.reductive;
        worst = worst.max(r.max_violation);
    }
    Ok(CheckResult {
        pass: all,
        detail: format!("sphere:2..4 reductive, max violation {worst:.3e}"),
    })
}

fn skewed_complement_rejected(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    // m₁ = E₁₂ + E₂₃ is not Ad(H)-stable for H generated by E₂₃
    let spec = HomogSpaceSpec::unchecked(
        "skewed",
        3,
        vec![e_ij(3, 1, 2)],
        vec![e_ij(3, 0, 1) + e_ij(3, 1, 2), e_ij(3, 0, 2)],
        homogmart::lie::BilinearForm::zero(2, 2),
        homogmart::lie::BilinearForm::zero(3, 3),
        SpaceModel::Orbit { base: Vector::from_vec(vec![1.0, 0.0, 0.0]) },
        LiftSolver::Newton,
    )?;
    let r = check_reductive(&spec);
    Ok(CheckResult {
        pass: !r.reductive,
        detail: format!("reductive = {}, violation {:.3e}", r.reductive, r.max_violation),
    })
}

fn lift_fidelity(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(1e-2, 1.0)?;
    let (mut res, mut vert): (f64, f64) = (0.0, 0.0);
    for n in [2, 3] {
        let sphere = SphereSpec::new(n)?;
        for p in Process::ALL {
            for i in 0..3 {
                let x = p.generate(n, grid, 31, i)?;
                let l = LiftedPath::new(&x, sphere.spec())?;
                res = res.max(l.max_projection_residual);
                vert = vert.max(l.max_vertical_increment);
            }
        }
    }
    Ok(CheckResult {
        pass: res <= 1e-9 && vert <= 1e-12,
        detail: format!("projection residual {res:.3e} (limit 1e-9), vertical increment {vert:.3e} (limit 1e-12)"),
    })
}

fn vertical_components_small(o: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let sphere = SphereSpec::new(2)?;
    let spec = sphere.spec();
    let conn = LeftInvariantConnection::from_spec(spec);
    let grid = TimeGrid::with_horizon(1e-3, 1.0)?;
    let n_m = spec.m_basis().len();
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let n = brownian_driver(spec.g_basis(), n_m, grid, 41, i)?;
        let y = ito_exponential_signed(&n, &conn, &GroupElement::identity(3), o.ito_correction)?;
        let v = vertical_log_components(&y, spec)?;
        worst = worst.max(v.data().iter().fold(0.0, |a, b| a.max(b.abs())));
    }
    let limit = 5.0 * grid.dt * grid.horizon();
    Ok(CheckResult {
        pass: worst <= limit,
        detail: format!("max vertical log component {worst:.3e} (limit {limit:.0e})"),
    })
}

fn translation_invariance(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let sphere = SphereSpec::new(2)?;
    let spec = sphere.spec();
    let grid = TimeGrid::with_horizon(1e-2, 1.0)?;
    let g = GroupElement::new_unchecked(exp_matrix(&(e_ij(3, 0, 1) * 0.7 + e_ij(3, 1, 2) * -0.4)));
    let opts = CriterionOptions::default();
    let cps = grid.default_checkpoints();
    let mut same = true;
    let mut verdicts = Vec::new();
    for p in [Process::Bm, Process::GreatCircle] {
        let base = GeneratedEnsemble::new(400, grid, 51, move |s, i| p.generate(2, grid, s, i));
        let moved = GeneratedEnsemble::new(400, grid, 51, |s, i| translate_process(&p.generate(2, grid, s, i)?, &g, spec));
        let a = martingale_criterion(&base, spec, &cps, &opts)?.verdict;
        let b = martingale_criterion(&moved, spec, &cps, &opts)?.verdict;
        same &= a == b;
        verdicts.push(format!("{}: {a}/{b}", p.name()));
    }
    Ok(CheckResult {
        pass: same,
        detail: verdicts.join(", "),
    })
}

fn sphere_criterion(p: Process, n_paths: usize, dt: f64) -> homogmart::Result<homogmart::sphere::SphereAnalysis> {
    let sphere = SphereSpec::new(2)?;
    let grid = TimeGrid::with_horizon(dt, 1.0)?;
    let source = GeneratedEnsemble::new(n_paths, grid, 61, move |s, i| p.generate(2, grid, s, i));
    analyze(&sphere, p.name(), &source, &grid.default_checkpoints(), &CriterionOptions::default())
}

fn bm_criterion_pass(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let a = sphere_criterion(Process::Bm, 2000, 1e-2)?;
    Ok(CheckResult {
        pass: a.criterion.verdict.is_pass(),
        detail: format!("verdict {}, max |z| {:.2}", a.criterion.verdict, a.criterion.drift_report().max_abs_z()),
    })
}

fn great_circle_fail(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let a = sphere_criterion(Process::GreatCircle, 10, 1e-2)?;
    Ok(CheckResult {
        pass: !a.criterion.verdict.is_pass(),
        detail: format!("verdict {} (expected fail)", a.criterion.verdict),
    })
}

fn oracles_agree(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let mut ok = true;
    let mut parts = Vec::new();
    for p in Process::BATTERY {
        let n = if p.is_deterministic() { 10 } else { 1000 };
        let a = sphere_criterion(p, n, 1e-2)?;
        let expected = p.is_martingale();
        ok &= a.oracles_agree && a.criterion.verdict.is_pass() == expected;
        parts.push(format!("{}={}", p.name(), a.criterion.verdict));
    }
    Ok(CheckResult { pass: ok, detail: parts.join(" ") })
}

fn coordinate_drift(_: &VerifyOptions) -> homogmart::Result<CheckResult> {
    let grid = TimeGrid::with_horizon(2e-3, 1.0)?;
    let n = 4000;
    let finals: Vec<f64> = (0..n as u64)
        .map(|i| Process::Bm.generate(2, grid, 71, i).map(|x| x.row(grid.steps)[0]))
        .collect::<homogmart::Result<_>>()?;
    let mean = finals.iter().sum::<f64>() / n as f64;
    let var = finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let se = (var / n as f64).sqrt();
    let z = (mean - (-1.0f64).exp()) / se;
    Ok(CheckResult {
        pass: z.abs() <= 4.0,
        detail: format!("mean X1(1) = {mean:.4} vs e^-1 = {:.4}, z = {z:.2}", (-1.0f64).exp()),
    })
}
