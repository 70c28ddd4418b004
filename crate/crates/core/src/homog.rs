//! Reductive homogeneous spaces `G/H` with `G = SO(m)`: specification,
//! vertical Maurer–Cartan form, horizontal lifts and the stochastic
//! logarithm martingale criterion.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group_sde::{GroupPath, STEP_LIMIT};
use crate::lie::{
    algebra_norm, commutator, exp_matrix, log_matrix, polar_projection, skew_violation,
    so_dimension, AlgebraElement, Basis, BilinearForm, GroupElement, Matrix, Vector,
    ALGEBRA_TOL,
};
use crate::stoch::{
    coord_names, drift_test_samples, standard_normal, CoordPath, DriftPolicy, DriftReport,
    DriftSamples, PathSource, RealPath, SpacePath, TimeGrid, Verdict,
};

/// Tolerance of `check_reductive` and of the `Ad(H)`-invariance of `β`.
pub const REDUCTIVE_TOL: f64 = 1e-9;
/// Residual target of the lift solvers.
pub const LIFT_TOL: f64 = 1e-10;
/// Admissible `‖π(Y_k) − X_k‖` along a lift.
pub const PROJECTION_TOL: f64 = 1e-9;
/// Admissible `𝔥`-component of a lifted increment.
pub const VERTICAL_TOL: f64 = 1e-12;
/// Consecutive sphere points with `⟨x, x'⟩ ≤ −1 + ANTIPODAL_TOL` have no unique lift.
pub const ANTIPODAL_TOL: f64 = 1e-8;
const NEWTON_MAX_ITER: usize = 50;
const REDUCTIVE_SEED: u64 = 0x5eed_0001;
const REDUCTIVE_RANDOM_SAMPLES: usize = 20;

/// Model of `G/H` in which space paths are expressed.
#[derive(Clone, Debug, PartialEq)]
pub enum SpaceModel {
    /// Orbit `g ↦ g·base` of a vector in `ℝᵐ`.
    Orbit { base: Vector },
    /// `H = {e}`: points are group elements, stored row-major.
    Identity,
}

impl SpaceModel {
    /// Number of coordinates of a model point.
    pub fn point_dim(&self, group_dim: usize) -> usize {
        match self {
            SpaceModel::Orbit { base } => base.len(),
            SpaceModel::Identity => group_dim * group_dim,
        }
    }
}

/// Solver for the horizontal increment of one lift step.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LiftSolver {
    /// Rotation in the plane of consecutive sphere points.
    SphereClosedForm,
    /// Damped Gauss–Newton on `𝔪`-coordinates with a numerical Jacobian.
    Newton,
}

/// The two canonical invariant connections.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CanonicalConnection {
    /// `β(A,B) = ½[A,B]_𝔪`, `α(A,B) = ½[A,B]`.
    FirstKind,
    /// `β = 0`, `α = 0`.
    SecondKind,
}

/// Reductive pair `(G, H)` with connection data and coset model.
///
/// The `𝔤`-basis lists the `𝔪`-basis first, then the `𝔥`-basis.
#[derive(Clone, Debug)]
pub struct HomogSpaceSpec {
    name: String,
    group_dim: usize,
    h_basis: Basis,
    m_basis: Basis,
    g_basis: Basis,
    beta: BilinearForm,
    alpha: BilinearForm,
    model: SpaceModel,
    solver: LiftSolver,
}

impl HomogSpaceSpec {
    /// Builds and validates a specification.
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: impl Into<String>,
        group_dim: usize,
        h: Vec<Matrix>,
        m: Vec<Matrix>,
        beta: BilinearForm,
        alpha: BilinearForm,
        model: SpaceModel,
        solver: LiftSolver,
    ) -> Result<Self> {
        let spec = Self::unchecked(name, group_dim, h, m, beta, alpha, model, solver)?;
        spec.validate()?;
        Ok(spec)
    }

    /// Builds a specification with one of the canonical connections.
    pub fn with_connection(
        name: impl Into<String>,
        group_dim: usize,
        h: Vec<Matrix>,
        m: Vec<Matrix>,
        connection: CanonicalConnection,
        model: SpaceModel,
        solver: LiftSolver,
    ) -> Result<Self> {
        let (beta, alpha) = canonical_forms(group_dim, &h, &m, connection)?;
        Self::new(name, group_dim, h, m, beta, alpha, model, solver)
    }

    /// Builds the bases without checking reductivity or connection compatibility.
    #[allow(clippy::too_many_arguments)]
    pub fn unchecked(
        name: impl Into<String>,
        group_dim: usize,
        h: Vec<Matrix>,
        m: Vec<Matrix>,
        beta: BilinearForm,
        alpha: BilinearForm,
        model: SpaceModel,
        solver: LiftSolver,
    ) -> Result<Self> {
        if group_dim < 2 {
            return Err(Error::InvalidDimension(format!(
                "SO(m) needs m >= 2, got {group_dim}"
            )));
        }
        let h_basis = Basis::new(h.clone(), group_dim)?;
        let m_basis = Basis::new(m.clone(), group_dim)?;
        let mut all = m;
        all.extend(h);
        let g_basis = Basis::new(all, group_dim)?;
        Ok(Self {
            name: name.into(),
            group_dim,
            h_basis,
            m_basis,
            g_basis,
            beta,
            alpha,
            model,
            solver,
        })
    }

    /// Checks every structural invariant of the specification.
    pub fn validate(&self) -> Result<()> {
        let m = self.group_dim;
        for e in self.g_basis.elements() {
            let r = skew_violation(e);
            if r > ALGEBRA_TOL {
                return Err(Error::InvalidSpec(format!(
                    "basis element is not in so({m}) (skew residual {r:.3e})"
                )));
            }
        }
        if self.g_basis.len() != so_dimension(m) {
            return Err(Error::InvalidSpec(format!(
                "h and m bases have {} elements together, so({m}) has dimension {}",
                self.g_basis.len(),
                so_dimension(m)
            )));
        }
        let nm = self.m_basis.len();
        let ng = self.g_basis.len();
        if self.beta.domain_dim() != nm || self.beta.codomain_dim() != nm {
            return Err(Error::InvalidSpec(format!("beta must be a {nm}x{nm}->{nm} table")));
        }
        if self.alpha.domain_dim() != ng || self.alpha.codomain_dim() != ng {
            return Err(Error::InvalidSpec(format!("alpha must be a {ng}x{ng}->{ng} table")));
        }
        let check = check_reductive(self);
        if !check.reductive {
            return Err(Error::InvalidSpec(format!(
                "Ad(H) does not preserve m (violation {:.3e})",
                check.max_violation
            )));
        }
        for i in 0..nm {
            for j in 0..nm {
                for k in 0..nm {
                    let d = (self.alpha.get(i, j, k) - self.beta.get(i, j, k)).abs();
                    if d > ALGEBRA_TOL {
                        return Err(Error::InvalidSpec(format!(
                            "alpha does not extend beta at ({i},{j},{k}): difference {d:.3e}"
                        )));
                    }
                }
            }
        }
        let inv = beta_invariance_violation(self);
        if inv > REDUCTIVE_TOL {
            return Err(Error::InvalidSpec(format!(
                "beta is not Ad(H)-invariant (violation {inv:.3e})"
            )));
        }
        match &self.model {
            SpaceModel::Orbit { base } => {
                if base.len() != m || base.norm() == 0.0 {
                    return Err(Error::InvalidSpec(format!(
                        "orbit base must be a nonzero vector of length {m}"
                    )));
                }
                for e in self.h_basis.elements() {
                    if (e * base).amax() > 1e-10 {
                        return Err(Error::InvalidSpec("h does not fix the orbit base point".into()));
                    }
                }
                for e in self.m_basis.elements() {
                    if (e * base).amax() <= 1e-10 {
                        return Err(Error::InvalidSpec(
                            "an m-basis element fixes the base point; the orbit map would not be a submersion".into(),
                        ));
                    }
                }
            }
            SpaceModel::Identity => {
                if !self.h_basis.is_empty() {
                    return Err(Error::InvalidSpec("the identity model needs an empty h basis".into()));
                }
            }
        }
        if self.solver == LiftSolver::SphereClosedForm {
            let SpaceModel::Orbit { base } = &self.model else {
                return Err(Error::InvalidSpec("the sphere lift needs an orbit model".into()));
            };
            let mut e0 = Vector::zeros(m);
            e0[0] = 1.0;
            if (base - e0).amax() > 1e-15 {
                return Err(Error::InvalidSpec("the sphere lift needs base point e0".into()));
            }
            let first_row_only = self.m_basis.elements().iter().all(|e| {
                (0..m).all(|i| (0..m).all(|j| i == 0 || j == 0 || e[(i, j)] == 0.0))
            });
            if nm != m - 1 || !first_row_only {
                return Err(Error::InvalidSpec(
                    "the sphere lift needs m spanned by the first-row generators".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn group_dim(&self) -> usize {
        self.group_dim
    }

    pub fn h_basis(&self) -> &Basis {
        &self.h_basis
    }

    pub fn m_basis(&self) -> &Basis {
        &self.m_basis
    }

    /// `𝔪`-basis followed by `𝔥`-basis.
    pub fn g_basis(&self) -> &Basis {
        &self.g_basis
    }

    pub fn beta(&self) -> &BilinearForm {
        &self.beta
    }

    pub fn alpha(&self) -> &BilinearForm {
        &self.alpha
    }

    pub fn model(&self) -> &SpaceModel {
        &self.model
    }

    pub fn lift_solver(&self) -> LiftSolver {
        self.solver
    }

    pub fn point_dim(&self) -> usize {
        self.model.point_dim(self.group_dim)
    }

    /// Coset projection `π(g)`.
    pub fn project(&self, g: &Matrix) -> Vector {
        match &self.model {
            SpaceModel::Orbit { base } => g * base,
            SpaceModel::Identity => {
                let m = self.group_dim;
                Vector::from_iterator(m * m, (0..m).flat_map(|i| (0..m).map(move |j| g[(i, j)])))
            }
        }
    }

    /// Model action `τ_g(x)`.
    pub fn act(&self, g: &Matrix, x: &[f64]) -> Vector {
        match &self.model {
            SpaceModel::Orbit { .. } => g * Vector::from_column_slice(x),
            SpaceModel::Identity => {
                let m = self.group_dim;
                let p = g * Matrix::from_row_slice(m, m, x);
                Vector::from_iterator(m * m, p.transpose().iter().copied())
            }
        }
    }

    /// A group element over `x`: `π(frame) = x`.
    pub fn initial_frame(&self, x: &[f64]) -> Result<GroupElement> {
        let m = self.group_dim;
        match &self.model {
            SpaceModel::Orbit { base } => {
                if x.len() != m {
                    return Err(Error::Shape(format!("point has {} coordinates, expected {m}", x.len())));
                }
                let target = Vector::from_column_slice(x);
                if (target.norm() - base.norm()).abs() > 1e-10 * base.norm() {
                    return Err(Error::InvalidInput("point is not on the orbit of the base".into()));
                }
                Ok(GroupElement::new_unchecked(frame_between(base, &target)))
            }
            SpaceModel::Identity => {
                if x.len() != m * m {
                    return Err(Error::Shape(format!("point has {} coordinates, expected {}", x.len(), m * m)));
                }
                GroupElement::special_orthogonal(Matrix::from_row_slice(m, m, x))
            }
        }
    }
}

/// Rotation taking `from` to `to` (equal norms): two reflections, the
/// first across `from − to`, the second across a direction orthogonal to `from`.
fn frame_between(from: &Vector, to: &Vector) -> Matrix {
    let m = from.len();
    let eye = Matrix::identity(m, m);
    let d = from - to;
    if d.norm() <= 1e-15 * from.norm() {
        return eye;
    }
    let v = &d / d.norm();
    let h1 = &eye - (&v * v.transpose()) * 2.0;
    // unit vector orthogonal to `from`, chosen deterministically
    let u = from / from.norm();
    let axis = (0..m)
        .min_by(|a, b| u[*a].abs().total_cmp(&u[*b].abs()))
        .unwrap_or(0);
    let mut w = Vector::zeros(m);
    w[axis] = 1.0;
    w -= &u * u[axis];
    let w = &w / w.norm();
    let h2 = &eye - (&w * w.transpose()) * 2.0;
    h1 * h2
}

fn canonical_forms(
    group_dim: usize,
    h: &[Matrix],
    m: &[Matrix],
    connection: CanonicalConnection,
) -> Result<(BilinearForm, BilinearForm)> {
    let nm = m.len();
    let ng = nm + h.len();
    match connection {
        CanonicalConnection::SecondKind => Ok((BilinearForm::zero(nm, nm), BilinearForm::zero(ng, ng))),
        CanonicalConnection::FirstKind => {
            let m_basis = Basis::new(m.to_vec(), group_dim)?;
            let mut all = m.to_vec();
            all.extend(h.iter().cloned());
            let g_basis = Basis::new(all, group_dim)?;
            let alpha = BilinearForm::from_fn(&g_basis, &g_basis, |a, b| commutator(a, b) * 0.5)?;
            let mut beta = BilinearForm::zero(nm, nm);
            for i in 0..nm {
                for j in 0..nm {
                    let c = g_basis.coords(&(commutator(m_basis.element(i), m_basis.element(j)) * 0.5))?;
                    for k in 0..nm {
                        beta.set(i, j, k, c[k]);
                    }
                }
            }
            Ok((beta, alpha))
        }
    }
}

/// Outcome of [`check_reductive`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReductiveCheck {
    pub reductive: bool,
    pub max_violation: f64,
}

/// `exp(tH_j)` for `t ∈ {±0.1, ±1}` and every `𝔥`-basis element, plus 20
/// seeded random elements `exp(Σ c_j H_j)` with standard normal `c_j`.
pub fn ad_sample_set(h_basis: &Basis) -> Vec<Matrix> {
    let mut out = Vec::new();
    if h_basis.is_empty() {
        return out;
    }
    for e in h_basis.elements() {
        for t in [0.1, -0.1, 1.0, -1.0] {
            out.push(exp_matrix(&(e * t)));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(REDUCTIVE_SEED);
    for _ in 0..REDUCTIVE_RANDOM_SAMPLES {
        let c: Vec<f64> = (0..h_basis.len()).map(|_| standard_normal(&mut rng)).collect();
        out.push(exp_matrix(&h_basis.combine(&c)));
    }
    out
}

/// Samples `Ad(h)A = hAh⁻¹` on [`ad_sample_set`] for every `𝔪`-basis
/// element `A` and reports the largest `𝔥`-component.
pub fn check_reductive(spec: &HomogSpaceSpec) -> ReductiveCheck {
    check_reductive_bases(&spec.h_basis, &spec.m_basis, &spec.g_basis)
}

fn check_reductive_bases(h: &Basis, m: &Basis, g: &Basis) -> ReductiveCheck {
    let nm = m.len();
    let mut worst: f64 = 0.0;
    for s in ad_sample_set(h) {
        for a in m.elements() {
            let ad = &s * a * s.transpose();
            let (c, residual) = g.project(&ad);
            worst = worst.max(residual);
            for j in nm..g.len() {
                worst = worst.max(c[j].abs());
            }
        }
    }
    ReductiveCheck {
        reductive: worst <= REDUCTIVE_TOL,
        max_violation: worst,
    }
}

/// Largest `|Ad(h)β(A,B) − β(Ad(h)A, Ad(h)B)|` over basis pairs and the sample set.
fn beta_invariance_violation(spec: &HomogSpaceSpec) -> f64 {
    let nm = spec.m_basis.len();
    let mut worst: f64 = 0.0;
    if spec.beta.is_zero() {
        return 0.0;
    }
    for s in ad_sample_set(&spec.h_basis) {
        let ad_m: Vec<Vec<f64>> = spec
            .m_basis
            .elements()
            .iter()
            .map(|a| {
                let c = spec.g_basis.project(&(&s * a * s.transpose())).0;
                c.as_slice()[..nm].to_vec()
            })
            .collect();
        for i in 0..nm {
            for j in 0..nm {
                let mut unit_i = vec![0.0; nm];
                let mut unit_j = vec![0.0; nm];
                unit_i[i] = 1.0;
                unit_j[j] = 1.0;
                let b = spec.m_basis.combine(spec.beta.eval(&unit_i, &unit_j).as_slice());
                let lhs_c = spec.g_basis.project(&(&s * b * s.transpose())).0;
                let rhs = spec.beta.eval(&ad_m[i], &ad_m[j]);
                for k in 0..nm {
                    worst = worst.max((lhs_c[k] - rhs[k]).abs());
                }
            }
        }
    }
    worst
}

/// `v = h_part + m_part` with `h_part ∈ 𝔥`, `m_part ∈ 𝔪`, each carrying its coordinates.
pub fn reductive_split(v: &AlgebraElement, spec: &HomogSpaceSpec) -> Result<(AlgebraElement, AlgebraElement)> {
    let c = spec.g_basis.coords(v.matrix())?;
    let nm = spec.m_basis.len();
    let mc = Vector::from_column_slice(&c.as_slice()[..nm]);
    let hc = Vector::from_column_slice(&c.as_slice()[nm..]);
    let m_part = AlgebraElement::from_coords(&spec.m_basis, mc)?;
    let h_part = AlgebraElement::from_coords(&spec.h_basis, hc)?;
    Ok((h_part, m_part))
}

/// `𝔥`-part of `g⁻¹v` for a tangent vector `v` at `g`.
pub fn vertical_form(g: &GroupElement, v: &Matrix, spec: &HomogSpaceSpec) -> Result<AlgebraElement> {
    if v.nrows() != g.dim() || v.ncols() != g.dim() {
        return Err(Error::Shape("tangent vector has the wrong size".into()));
    }
    let a = g.matrix().tr_mul(v);
    let (c, residual) = spec.g_basis.project(&a);
    if residual > 1e-10 * (1.0 + a.norm()) {
        return Err(Error::NotTangent { residual });
    }
    let nm = spec.m_basis.len();
    AlgebraElement::from_coords(&spec.h_basis, Vector::from_column_slice(&c.as_slice()[nm..]))
}

/// Horizontal increment `A ∈ 𝔪` with `π(Y·exp(A)) = x'`.
fn lift_step(spec: &HomogSpaceSpec, y: &Matrix, next: &[f64], step: usize) -> Result<Matrix> {
    match spec.solver {
        LiftSolver::SphereClosedForm => sphere_lift_step(y, next, step),
        LiftSolver::Newton => newton_lift_step(spec, y, next, step),
    }
}

/// `u = Yᵀx'` in the current frame; the increment is the rotation by
/// `atan2(|u_⊥|, u₁)` in the plane of `e₀` and `u_⊥`.
fn sphere_lift_step(y: &Matrix, next: &[f64], step: usize) -> Result<Matrix> {
    let m = y.nrows();
    let mut u = vec![0.0; m];
    for (l, ul) in u.iter_mut().enumerate() {
        let mut s = 0.0;
        for (k, xk) in next.iter().enumerate() {
            s += y[(k, l)] * xk;
        }
        *ul = s;
    }
    if u[0] <= -1.0 + ANTIPODAL_TOL {
        return Err(Error::LiftStep {
            step,
            reason: format!("consecutive points are antipodal (inner product {:.12})", u[0]),
        });
    }
    let perp = u[1..].iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut a = Matrix::zeros(m, m);
    if perp == 0.0 {
        return Ok(a);
    }
    let angle = perp.atan2(u[0]);
    for l in 1..m {
        let c = angle * u[l] / perp;
        a[(0, l)] = -c;
        a[(l, 0)] = c;
    }
    Ok(a)
}

fn newton_lift_step(spec: &HomogSpaceSpec, y: &Matrix, next: &[f64], step: usize) -> Result<Matrix> {
    let nm = spec.m_basis.len();
    let target = Vector::from_column_slice(next);
    let residual_at = |a: &[f64]| -> Vector {
        let g = y * exp_matrix(&spec.m_basis.combine(a));
        spec.project(&g) - &target
    };
    let scale = 1.0 + target.norm();
    let mut a = vec![0.0; nm];
    let mut r = residual_at(&a);
    let h = 1e-7;
    for _ in 0..NEWTON_MAX_ITER {
        let rn = r.norm();
        if rn <= LIFT_TOL * scale {
            return Ok(spec.m_basis.combine(&a));
        }
        let mut jac = Matrix::zeros(r.len(), nm);
        for i in 0..nm {
            let mut ap = a.clone();
            let mut am = a.clone();
            ap[i] += h;
            am[i] -= h;
            let col = (residual_at(&ap) - residual_at(&am)) / (2.0 * h);
            jac.set_column(i, &col);
        }
        let svd = jac.svd(true, true);
        let delta = svd
            .solve(&(-&r), 1e-12)
            .map_err(|e| Error::LiftStep { step, reason: e.to_string() })?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..20 {
            let trial: Vec<f64> = a.iter().zip(delta.iter()).map(|(x, d)| x + t * d).collect();
            let rt = residual_at(&trial);
            if rt.norm() < rn {
                a = trial;
                r = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    if r.norm() <= LIFT_TOL * scale {
        return Ok(spec.m_basis.combine(&a));
    }
    Err(Error::LiftStep {
        step,
        reason: format!("Newton solver stalled at residual {:.3e}", r.norm()),
    })
}

/// Horizontal lift of `x` starting at `y0` with `π(y0) = x(0)`.
pub fn horizontal_lift(x: &SpacePath, y0: &GroupElement, spec: &HomogSpaceSpec) -> Result<GroupPath> {
    Ok(lift_with_diagnostics(x, y0, spec)?.0)
}

/// Lift plus its largest projection residual.
fn lift_with_diagnostics(x: &SpacePath, y0: &GroupElement, spec: &HomogSpaceSpec) -> Result<(GroupPath, f64)> {
    if x.dim() != spec.point_dim() {
        return Err(Error::Shape(format!(
            "space path has {} coordinates, the model has {}",
            x.dim(),
            spec.point_dim()
        )));
    }
    if y0.dim() != spec.group_dim {
        return Err(Error::Shape("initial frame has the wrong size".into()));
    }
    let r0 = (spec.project(y0.matrix()) - x.point(0)).norm();
    if r0 > PROJECTION_TOL {
        return Err(Error::InconsistentLift { step: 0, residual: r0 });
    }
    let mut values = Vec::with_capacity(x.len());
    let mut y = y0.matrix().clone();
    values.push(y0.clone());
    let mut worst = r0;
    for k in 0..x.grid().steps {
        let a = lift_step(spec, &y, x.row(k + 1), k)?;
        if algebra_norm(&a) > STEP_LIMIT {
            return Err(Error::LiftStep {
                step: k,
                reason: format!("increment norm {:.3e} exceeds {STEP_LIMIT}", algebra_norm(&a)),
            });
        }
        y = polar_projection(&(&y * exp_matrix(&a)));
        let r = (spec.project(&y) - x.point(k + 1)).norm();
        worst = worst.max(r);
        values.push(GroupElement::new_unchecked(y.clone()));
    }
    Ok((GroupPath::from_parts(*x.grid(), values), worst))
}

/// How the quadratic term of `D_t = L_t + ½∫β` is discretized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QuadraticReading {
    /// `½ Σ β(ΔL_k, ΔL_k)`.
    #[default]
    Covariation,
    /// `½ Σ β(L_k, L_k)·dt`.
    Literal,
}

/// A lifted path with its log increments in `𝔤`-coordinates.
#[derive(Clone, Debug)]
pub struct LiftedPath {
    pub lift: GroupPath,
    /// `𝔤`-coordinates (𝔪 first) of `log(Y_k⁻¹Y_{k+1})`.
    pub increments: Vec<Vector>,
    pub max_projection_residual: f64,
    pub max_vertical_increment: f64,
}

impl LiftedPath {
    /// Lifts `x` from [`HomogSpaceSpec::initial_frame`] and takes log increments.
    pub fn new(x: &SpacePath, spec: &HomogSpaceSpec) -> Result<Self> {
        let y0 = spec.initial_frame(x.row(0))?;
        Self::from_frame(x, &y0, spec)
    }

    pub fn from_frame(x: &SpacePath, y0: &GroupElement, spec: &HomogSpaceSpec) -> Result<Self> {
        let (lift, max_projection_residual) = lift_with_diagnostics(x, y0, spec)?;
        let nm = spec.m_basis.len();
        let mut increments = Vec::with_capacity(x.grid().steps);
        let mut max_vertical_increment: f64 = 0.0;
        for (k, w) in lift.values().windows(2).enumerate() {
            let rel = w[0].matrix().tr_mul(w[1].matrix());
            let b = log_matrix(&rel).map_err(|e| Error::LiftStep { step: k, reason: e.to_string() })?;
            let c = spec.g_basis.coords(&b)?;
            for v in &c.as_slice()[nm..] {
                max_vertical_increment = max_vertical_increment.max(v.abs());
            }
            increments.push(c);
        }
        Ok(Self {
            lift,
            increments,
            max_projection_residual,
            max_vertical_increment,
        })
    }

    /// `D_k = L_k + ½ Σ_{j<k} β(·,·)` in `𝔪`-coordinates.
    pub fn criterion_process(&self, spec: &HomogSpaceSpec, reading: QuadraticReading) -> CoordPath {
        let nm = spec.m_basis.len();
        let grid = *self.lift.grid();
        let flat = spec.beta.is_zero();
        let mut l = vec![0.0; nm];
        let mut d = vec![0.0; nm];
        let mut data = Vec::with_capacity(grid.len() * nm);
        data.extend_from_slice(&d);
        for inc in &self.increments {
            let dl = &inc.as_slice()[..nm];
            if !flat {
                let q = match reading {
                    QuadraticReading::Covariation => spec.beta.eval(dl, dl),
                    QuadraticReading::Literal => spec.beta.eval(&l, &l) * grid.dt,
                };
                for j in 0..nm {
                    d[j] += 0.5 * q[j];
                }
            }
            for j in 0..nm {
                l[j] += dl[j];
                d[j] += dl[j];
            }
            data.extend_from_slice(&d);
        }
        CoordPath::new(grid, nm, data).expect("criterion process has grid shape")
    }
}

/// Lift diagnostics reported next to the criterion drift test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftDiagnostics {
    pub max_projection_residual: f64,
    pub max_vertical_increment: f64,
    pub aborted_paths: usize,
    pub projection_tol: f64,
    pub vertical_tol: f64,
}

impl LiftDiagnostics {
    pub fn new() -> Self {
        Self {
            max_projection_residual: 0.0,
            max_vertical_increment: 0.0,
            aborted_paths: 0,
            projection_tol: PROJECTION_TOL,
            vertical_tol: VERTICAL_TOL,
        }
    }

    pub fn absorb(&mut self, p: &LiftedPath) {
        self.max_projection_residual = self.max_projection_residual.max(p.max_projection_residual);
        self.max_vertical_increment = self.max_vertical_increment.max(p.max_vertical_increment);
    }

    pub fn within_tolerance(&self) -> bool {
        self.max_projection_residual <= self.projection_tol && self.max_vertical_increment <= self.vertical_tol
    }

    /// Fails with [`Error::UnreliableReport`] when more than 1% of paths aborted.
    pub fn check_aborts(&self, total: usize) -> Result<()> {
        if self.aborted_paths * 100 > total || self.aborted_paths == total {
            return Err(Error::UnreliableReport {
                aborted: self.aborted_paths,
                total,
            });
        }
        Ok(())
    }
}

impl Default for LiftDiagnostics {
    fn default() -> Self {
        Self::new()
    }
}

/// Drift test of `D = L + ½∫β` per `𝔪`-coordinate plus lift diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub process: Option<String>,
    pub space: Option<String>,
    pub seed: Option<u64>,
    pub n_paths: usize,
    pub dt: Option<f64>,
    pub checkpoints: Vec<crate::stoch::CheckpointStat>,
    pub drift_verdict: Verdict,
    pub lift_diagnostics: LiftDiagnostics,
    pub reading: QuadraticReading,
    pub policy: DriftPolicy,
    pub verdict: Verdict,
}

impl CriterionReport {
    pub fn from_parts(drift: DriftReport, lift: LiftDiagnostics, reading: QuadraticReading) -> Self {
        let verdict = drift.verdict.and(Verdict::from_pass(lift.within_tolerance()));
        Self {
            process: drift.process,
            space: drift.space,
            seed: drift.seed,
            n_paths: drift.n_paths,
            dt: drift.dt,
            checkpoints: drift.checkpoints,
            drift_verdict: drift.verdict,
            lift_diagnostics: lift,
            reading,
            policy: drift.policy,
            verdict,
        }
    }

    pub fn drift_report(&self) -> DriftReport {
        DriftReport {
            process: self.process.clone(),
            space: self.space.clone(),
            seed: self.seed,
            n_paths: self.n_paths,
            dt: self.dt,
            checkpoints: self.checkpoints.clone(),
            verdict: self.drift_verdict,
            policy: self.policy,
        }
    }
}

/// Settings of [`martingale_criterion`].
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CriterionOptions {
    pub reading: QuadraticReading,
    pub policy: DriftPolicy,
}

/// Per-path result of the criterion pass: checkpoint samples of `D`.
struct PathOutcome {
    initial: Vec<f64>,
    values: Vec<f64>,
    lifted_residual: f64,
    lifted_vertical: f64,
}

/// Lifts every path, forms `D = L + ½∫β(dL,dL)` and drift-tests its
/// `𝔪`-coordinates at `checkpoints`. Paths whose lift or logarithm fails
/// are counted as aborted.
pub fn martingale_criterion(
    source: &dyn PathSource,
    spec: &HomogSpaceSpec,
    checkpoints: &[f64],
    options: &CriterionOptions,
) -> Result<CriterionReport> {
    let n = source.len();
    if n == 0 {
        return Err(Error::InvalidInput("empty ensemble".into()));
    }
    let grid = source.grid();
    let indices = checkpoint_indices(&grid, checkpoints)?;
    let outcomes: Vec<Result<PathOutcome>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let x = source.path(i)?;
            let lifted = LiftedPath::new(&x, spec)?;
            let d = lifted.criterion_process(spec, options.reading);
            let mut values = Vec::with_capacity(indices.len() * d.dim());
            for &k in &indices {
                values.extend_from_slice(d.row(k));
            }
            Ok(PathOutcome {
                initial: d.row(0).to_vec(),
                values,
                lifted_residual: lifted.max_projection_residual,
                lifted_vertical: lifted.max_vertical_increment,
            })
        })
        .collect();
    let mut samples = DriftSamples::new(indices.iter().map(|k| grid.time(*k)).collect(), coord_names(spec.m_basis.len()));
    let mut diag = LiftDiagnostics::new();
    for o in outcomes {
        match o {
            Ok(o) => {
                diag.max_projection_residual = diag.max_projection_residual.max(o.lifted_residual);
                diag.max_vertical_increment = diag.max_vertical_increment.max(o.lifted_vertical);
                samples.push(&o.initial, &o.values)?;
            }
            Err(Error::InvalidInput(msg)) | Err(Error::Shape(msg)) => return Err(Error::InvalidInput(msg)),
            Err(_) => diag.aborted_paths += 1,
        }
    }
    diag.check_aborts(n)?;
    let mut drift = drift_test_samples(&samples, &options.policy)?;
    drift.seed = Some(source.base_seed());
    drift.dt = Some(grid.dt);
    drift.space = Some(spec.name.clone());
    Ok(CriterionReport::from_parts(drift, diag, options.reading))
}

pub(crate) fn checkpoint_indices(grid: &TimeGrid, checkpoints: &[f64]) -> Result<Vec<usize>> {
    if checkpoints.is_empty() {
        return Err(Error::InvalidInput("no checkpoints".into()));
    }
    checkpoints.iter().map(|t| grid.index_of(*t)).collect()
}

/// Which group-side discretization [`pullback_consistency`] compares against.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GroupChart {
    /// Itô sums of the pulled-back form against the left-invariant
    /// connection `α`, using log increments.
    #[default]
    Connection,
    /// Plain left-point sums `Σ π*θ(Y_k)·ΔY_k` in the global matrix chart.
    FlatCoordinates,
}

/// Both discretized Itô integrals and their sup-difference.
#[derive(Clone, Debug, PartialEq)]
pub struct PullbackResidual {
    pub space_side: RealPath,
    pub group_side: RealPath,
    pub residual: f64,
}

/// Compares `∫θ d^{∇}X` along `X = π(Y)` with `∫(π*θ) d^{∇G}Y` along a
/// horizontal `Y`. `theta` maps a model point to its covector in model
/// coordinates.
///
/// On an orbit model with `β = 0` the space side is the Levi-Civita Itô sum
/// `Σ θ(X_k)·(ΔX_k + ½|ΔX_k|²X_k/|X|²)` of the round sphere of radius `|X|`.
/// On the identity model it is the matrix-chart sum with
/// `Γ_Y(U,V) = Yα(Y⁻¹U, Y⁻¹V) − UY⁻¹V`.
pub fn pullback_consistency(
    y: &GroupPath,
    theta: &dyn Fn(&[f64]) -> Vector,
    spec: &HomogSpaceSpec,
    chart: GroupChart,
) -> Result<PullbackResidual> {
    let grid = *y.grid();
    let conn = crate::group_sde::LeftInvariantConnection::from_spec(spec);
    let xs: Vec<Vector> = y.values().iter().map(|g| spec.project(g.matrix())).collect();
    let mut space = vec![0.0];
    let mut group = vec![0.0];
    let (mut s_acc, mut g_acc) = (0.0, 0.0);
    for k in 0..grid.steps {
        let yk = y.values()[k].matrix();
        let yk1 = y.values()[k + 1].matrix();
        let th = theta(xs[k].as_slice());
        if th.len() != xs[k].len() {
            return Err(Error::Shape("form has the wrong number of components".into()));
        }
        let dx = &xs[k + 1] - &xs[k];
        let space_dx = match spec.model() {
            SpaceModel::Orbit { .. } => {
                if !spec.beta.is_zero() {
                    return Err(Error::Unsupported(
                        "pullback consistency on orbit models needs beta = 0".into(),
                    ));
                }
                let r2 = xs[k].norm_squared();
                &dx + &xs[k] * (0.5 * dx.norm_squared() / r2)
            }
            SpaceModel::Identity => {
                let du = yk1 - yk;
                let a = yk.tr_mul(&du);
                let q = conn.quadratic_coords(spec.g_basis.project(&a).0.as_slice());
                let gamma = yk * q - &du * &a;
                let corrected = &du + gamma * 0.5;
                spec.project(&corrected)
            }
        };
        let group_dx = match chart {
            GroupChart::FlatCoordinates => spec.project(&(yk1 - yk)),
            GroupChart::Connection => {
                let b = log_matrix(&yk.tr_mul(yk1))?;
                let q = conn.quadratic(&b)?;
                let v = yk * (b + q * 0.5);
                match spec.model() {
                    SpaceModel::Orbit { base } => &v * base,
                    SpaceModel::Identity => spec.project(&v),
                }
            }
        };
        s_acc += th.dot(&space_dx);
        g_acc += th.dot(&group_dx);
        space.push(s_acc);
        group.push(g_acc);
    }
    let residual = space
        .iter()
        .zip(&group)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(PullbackResidual {
        space_side: RealPath::new(grid, space)?,
        group_side: RealPath::new(grid, group)?,
        residual,
    })
}

/// Pointwise `τ_g(X_k)`.
pub fn translate_process(x: &SpacePath, g: &GroupElement, spec: &HomogSpaceSpec) -> Result<SpacePath> {
    if x.dim() != spec.point_dim() || g.dim() != spec.group_dim {
        return Err(Error::Shape("path or element does not match the space".into()));
    }
    let mut data = Vec::with_capacity(x.data().len());
    for k in 0..x.len() {
        data.extend_from_slice(spec.act(g.matrix(), x.row(k)).as_slice());
    }
    CoordPath::new(*x.grid(), x.dim(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group_sde::{ito_exponential, stochastic_logarithm, vertical_log_components, LeftInvariantConnection};
    use crate::lie::{e_ij, mat_exp, so_basis};
    use crate::stoch::{path_rng, Ensemble, TimeGrid};

    fn sphere2() -> HomogSpaceSpec {
        crate::sphere::SphereSpec::new(2).unwrap().into_spec()
    }

    fn e0(m: usize) -> Vector {
        let mut v = Vector::zeros(m);
        v[0] = 1.0;
        v
    }

    fn so3_elements() -> Vec<Matrix> {
        so_basis(3).unwrap().into_iter().map(|e| e.into_matrix()).collect()
    }

    #[test]
    fn split_on_sphere() {
        let spec = sphere2();
        let (h, m) = reductive_split(&AlgebraElement::new(e_ij(3, 0, 2)), &spec).unwrap();
        assert_eq!(h.matrix().amax(), 0.0);
        assert_eq!(m.matrix(), &e_ij(3, 0, 2));
        let (h, m) = reductive_split(&AlgebraElement::new(e_ij(3, 1, 2)), &spec).unwrap();
        assert_eq!(h.matrix(), &e_ij(3, 1, 2));
        assert_eq!(m.matrix().amax(), 0.0);
        let v = e_ij(3, 0, 1) * 0.7 + e_ij(3, 1, 2) * -1.3;
        let (h, m) = reductive_split(&AlgebraElement::new(v.clone()), &spec).unwrap();
        assert!((h.matrix() - e_ij(3, 1, 2) * -1.3).amax() < 1e-15);
        assert!((m.matrix() - e_ij(3, 0, 1) * 0.7).amax() < 1e-15);
        assert_eq!(h.matrix() + m.matrix(), v);
        // projection pair
        let (hh, hm) = reductive_split(&h, &spec).unwrap();
        assert_eq!(hh.matrix(), h.matrix());
        assert_eq!(hm.matrix().amax(), 0.0);
    }

    #[test]
    fn split_rejects_non_algebra() {
        let spec = sphere2();
        let sym = Matrix::identity(3, 3);
        assert!(matches!(
            reductive_split(&AlgebraElement::new(sym), &spec),
            Err(Error::NotInAlgebra { .. })
        ));
    }

    #[test]
    fn spheres_are_reductive() {
        for n in 2..=4 {
            let s = crate::sphere::SphereSpec::new(n).unwrap();
            let c = check_reductive(s.spec());
            assert!(c.reductive && c.max_violation < 1e-12, "n={n}: {c:?}");
        }
    }

    #[test]
    fn trivial_subgroup_is_reductive() {
        let spec = HomogSpaceSpec::with_connection(
            "so3",
            3,
            vec![],
            so3_elements(),
            CanonicalConnection::SecondKind,
            SpaceModel::Identity,
            LiftSolver::Newton,
        )
        .unwrap();
        assert!(check_reductive(&spec).reductive);
    }

    fn swapped(m: Vec<Matrix>) -> HomogSpaceSpec {
        HomogSpaceSpec::unchecked(
            "swapped",
            3,
            vec![e_ij(3, 0, 1)],
            m,
            BilinearForm::zero(2, 2),
            BilinearForm::zero(3, 3),
            SpaceModel::Orbit { base: Vector::from_column_slice(&[0.0, 0.0, 1.0]) },
            LiftSolver::Newton,
        )
        .unwrap()
    }

    #[test]
    fn swapped_sphere_basis_is_still_reductive() {
        // 𝔥 = span{E12} stabilizes e3 and 𝔪 = span{E13, E23} is its complement
        let spec = swapped(vec![e_ij(3, 0, 2), e_ij(3, 1, 2)]);
        let c = check_reductive(&spec);
        assert!(c.reductive, "{c:?}");
        assert!(spec.validate().is_ok());
    }

    #[test]
    fn skewed_complement_is_not_reductive() {
        // Ad(exp tE12)(E12 + E13) has 𝔥-component 1 - cos t against this 𝔪
        let spec = swapped(vec![e_ij(3, 0, 1) + e_ij(3, 0, 2), e_ij(3, 1, 2)]);
        let c = check_reductive(&spec);
        assert!(!c.reductive);
        let oracle = 1.0 - 1.0f64.cos();
        assert!(c.max_violation >= 0.1 && c.max_violation >= oracle - 1e-12, "{c:?}");
        assert!(matches!(spec.validate(), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn validation_catches_bad_specs() {
        // missing generator
        let r = HomogSpaceSpec::with_connection(
            "bad",
            3,
            vec![e_ij(3, 1, 2)],
            vec![e_ij(3, 0, 1)],
            CanonicalConnection::SecondKind,
            SpaceModel::Orbit { base: e0(3) },
            LiftSolver::Newton,
        );
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
        // dependent basis
        let r = HomogSpaceSpec::with_connection(
            "bad",
            3,
            vec![e_ij(3, 1, 2)],
            vec![e_ij(3, 0, 1), e_ij(3, 0, 1) * 2.0],
            CanonicalConnection::SecondKind,
            SpaceModel::Orbit { base: e0(3) },
            LiftSolver::Newton,
        );
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
        // alpha not extending beta
        let mut beta = BilinearForm::zero(2, 2);
        beta.set(0, 1, 0, 1.0);
        let r = HomogSpaceSpec::new(
            "bad",
            3,
            vec![e_ij(3, 1, 2)],
            vec![e_ij(3, 0, 1), e_ij(3, 0, 2)],
            beta,
            BilinearForm::zero(3, 3),
            SpaceModel::Orbit { base: e0(3) },
            LiftSolver::Newton,
        );
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
        // base not fixed by H
        let r = HomogSpaceSpec::with_connection(
            "bad",
            3,
            vec![e_ij(3, 1, 2)],
            vec![e_ij(3, 0, 1), e_ij(3, 0, 2)],
            CanonicalConnection::SecondKind,
            SpaceModel::Orbit { base: Vector::from_column_slice(&[0.0, 1.0, 0.0]) },
            LiftSolver::Newton,
        );
        assert!(matches!(r, Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn non_invariant_beta_is_rejected() {
        // β(E12, E12) = E12 is not Ad(SO(2))-equivariant
        let mut beta = BilinearForm::zero(2, 2);
        beta.set(0, 0, 0, 1.0);
        let mut alpha = BilinearForm::zero(3, 3);
        alpha.set(0, 0, 0, 1.0);
        let r = HomogSpaceSpec::new(
            "bad",
            3,
            vec![e_ij(3, 1, 2)],
            vec![e_ij(3, 0, 1), e_ij(3, 0, 2)],
            beta,
            alpha,
            SpaceModel::Orbit { base: e0(3) },
            LiftSolver::Newton,
        );
        assert!(matches!(r, Err(Error::InvalidSpec(msg)) if msg.contains("invariant")));
    }

    #[test]
    fn first_kind_on_sphere_has_vanishing_beta() {
        let s = crate::sphere::SphereSpec::with_connection(3, CanonicalConnection::FirstKind).unwrap();
        assert!(s.spec().beta().is_zero());
        assert!(!s.spec().alpha().is_zero());
    }

    #[test]
    fn vertical_form_examples() {
        let spec = sphere2();
        let g = mat_exp(&AlgebraElement::new(e_ij(3, 0, 1) * 0.4 + e_ij(3, 1, 2) * 0.9));
        let a = e_ij(3, 0, 2) * 0.6;
        let b = e_ij(3, 1, 2) * -0.25;
        let w = vertical_form(&g, &(g.matrix() * &a), &spec).unwrap();
        assert!(w.matrix().amax() < 1e-15);
        let w = vertical_form(&g, &(g.matrix() * &b), &spec).unwrap();
        assert!((w.matrix() - &b).amax() < 1e-15);
        let w = vertical_form(&g, &(g.matrix() * (&a + &b)), &spec).unwrap();
        assert!((w.matrix() - &b).amax() < 1e-15);
        assert!(matches!(
            vertical_form(&g, &Matrix::identity(3, 3), &spec),
            Err(Error::NotTangent { .. })
        ));
    }

    fn great_circle(grid: TimeGrid) -> SpacePath {
        let rows: Vec<Vector> = (0..grid.len())
            .map(|k| {
                let t = grid.time(k);
                Vector::from_column_slice(&[t.cos(), t.sin(), 0.0])
            })
            .collect();
        CoordPath::from_rows(grid, &rows).unwrap()
    }

    fn smooth_curve(grid: TimeGrid) -> SpacePath {
        let rows: Vec<Vector> = (0..grid.len())
            .map(|k| {
                let t = grid.time(k);
                let v = Vector::from_column_slice(&[1.0, t, 0.5 * t * t - 0.2 * t]);
                &v / v.norm()
            })
            .collect();
        CoordPath::from_rows(grid, &rows).unwrap()
    }

    #[test]
    fn constant_path_lifts_to_constant_frame() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.01, 20).unwrap();
        let x = CoordPath::from_rows(g, &vec![e0(3); g.len()]).unwrap();
        let y = horizontal_lift(&x, &GroupElement::identity(3), &spec).unwrap();
        assert!(y.values().iter().all(|v| v == &GroupElement::identity(3)));
    }

    #[test]
    fn great_circle_lift_is_rotation_subgroup() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.001, 1000).unwrap();
        let y = horizontal_lift(&great_circle(g), &GroupElement::identity(3), &spec).unwrap();
        let exact = GroupPath::one_parameter(g, &GroupElement::identity(3), &e_ij(3, 0, 1));
        assert!(y.sup_distance(&exact).unwrap() < 1e-10);
    }

    #[test]
    fn lift_contract_on_smooth_curve_both_solvers() {
        let closed = sphere2();
        let newton = HomogSpaceSpec::with_connection(
            "sphere:2/newton",
            3,
            closed.h_basis().elements().to_vec(),
            closed.m_basis().elements().to_vec(),
            CanonicalConnection::SecondKind,
            SpaceModel::Orbit { base: e0(3) },
            LiftSolver::Newton,
        )
        .unwrap();
        let g = TimeGrid::new(0.0, 0.01, 150).unwrap();
        let x = smooth_curve(g);
        let a = LiftedPath::new(&x, &closed).unwrap();
        let b = LiftedPath::new(&x, &newton).unwrap();
        for p in [&a, &b] {
            assert!(p.max_projection_residual <= 1e-9);
            assert!(p.max_vertical_increment <= 1e-12, "{}", p.max_vertical_increment);
        }
        assert!(a.lift.sup_distance(&b.lift).unwrap() < 1e-8);
        let v = vertical_log_components(&a.lift, &closed).unwrap();
        assert!(v.data().iter().all(|c| c.abs() <= 1e-12));
    }

    #[test]
    fn antipodal_step_is_an_error() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let x = CoordPath::from_rows(g, &[e0(3), -e0(3)]).unwrap();
        assert!(matches!(
            horizontal_lift(&x, &GroupElement::identity(3), &spec),
            Err(Error::LiftStep { step: 0, .. })
        ));
    }

    #[test]
    fn lift_requires_matching_start() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let x = CoordPath::from_rows(g, &[e0(3), e0(3)]).unwrap();
        let y0 = mat_exp(&AlgebraElement::new(e_ij(3, 0, 1) * 0.5));
        assert!(matches!(
            horizontal_lift(&x, &y0, &spec),
            Err(Error::InconsistentLift { step: 0, .. })
        ));
    }

    #[test]
    fn vertical_perturbation_of_initial_frame() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let x = smooth_curve(g);
        let y = horizontal_lift(&x, &GroupElement::identity(3), &spec).unwrap();
        let again = horizontal_lift(&x, &GroupElement::identity(3), &spec).unwrap();
        assert_eq!(y, again);
        let h = mat_exp(&AlgebraElement::new(e_ij(3, 1, 2) * 0.7));
        let yh = horizontal_lift(&x, &h, &spec).unwrap();
        for k in 0..g.len() {
            let p = spec.project(yh.values()[k].matrix()) - x.point(k);
            assert!(p.norm() <= 1e-9);
            // the perturbed lift is Y_k·h up to conjugation of the increments
            let expected = y.values()[k].matrix() * h.matrix();
            assert!((yh.values()[k].matrix() - expected).amax() < 1e-9);
        }
    }

    #[test]
    fn initial_frame_projects_to_point() {
        let spec = sphere2();
        for p in [[0.0, 0.0, 1.0], [-1.0, 0.0, 0.0], [0.6, -0.48, 0.64], [1.0, 0.0, 0.0]] {
            let f = spec.initial_frame(&p).unwrap();
            assert!(f.membership_violation() < 1e-12);
            let x = spec.project(f.matrix());
            assert!((x - Vector::from_column_slice(&p)).amax() < 1e-14);
        }
    }

    fn brownian_m_driver(spec: &HomogSpaceSpec, grid: TimeGrid, seed: u64, index: u64) -> crate::stoch::AlgebraPath {
        let mut rng = path_rng(seed, index);
        let sd = grid.dt.sqrt();
        let mut c = vec![0.0; spec.m_basis().len()];
        let mut values = vec![AlgebraElement::zero(spec.group_dim())];
        for _ in 0..grid.steps {
            for x in c.iter_mut() {
                *x += sd * standard_normal(&mut rng);
            }
            values.push(AlgebraElement::new(spec.m_basis().combine(&c)));
        }
        crate::stoch::AlgebraPath::new(grid, values).unwrap()
    }

    #[test]
    fn projected_ito_exponential_passes_criterion() {
        let spec = sphere2();
        let g = TimeGrid::with_horizon(0.01, 1.0).unwrap();
        let conn = LeftInvariantConnection::from_spec(&spec);
        let paths: Vec<SpacePath> = (0..400)
            .map(|i| {
                let y = ito_exponential(&brownian_m_driver(&spec, g, 21, i), &conn, &GroupElement::identity(3)).unwrap();
                let rows: Vec<Vector> = y.values().iter().map(|v| spec.project(v.matrix())).collect();
                CoordPath::from_rows(g, &rows).unwrap()
            })
            .collect();
        let ens = Ensemble::new(paths, 21);
        let r = martingale_criterion(&ens, &spec, &g.default_checkpoints(), &CriterionOptions::default()).unwrap();
        assert!(r.verdict.is_pass(), "{r:?}");
        // the re-lift recovers an 𝔪-valued logarithm
        let lifted = LiftedPath::new(&ens.paths[0], &spec).unwrap();
        let l = stochastic_logarithm(&lifted.lift).unwrap();
        assert!(l.to_coords(spec.g_basis()).is_ok());
    }

    #[test]
    fn criterion_on_deterministic_paths() {
        let spec = sphere2();
        let g = TimeGrid::with_horizon(0.001, 1.0).unwrap();
        let circle = Ensemble::new(vec![great_circle(g)], 0);
        let r = martingale_criterion(&circle, &spec, &g.default_checkpoints(), &CriterionOptions::default()).unwrap();
        assert_eq!(r.verdict, Verdict::Fail);
        for t in g.default_checkpoints() {
            let s = r.checkpoints.iter().find(|c| c.t == t && c.coord == "c1").unwrap();
            assert!((s.mean - t).abs() < 1e-9);
        }
        let constant = Ensemble::new(vec![CoordPath::from_rows(g, &vec![e0(3); g.len()]).unwrap()], 0);
        let r = martingale_criterion(&constant, &spec, &g.default_checkpoints(), &CriterionOptions::default()).unwrap();
        assert!(r.verdict.is_pass());
    }

    #[test]
    fn aborted_paths_make_the_report_unreliable() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let good = CoordPath::from_rows(g, &[e0(3), e0(3)]).unwrap();
        let bad = CoordPath::from_rows(g, &[e0(3), -e0(3)]).unwrap();
        let mut paths = vec![good; 50];
        paths.push(bad);
        let ens = Ensemble::new(paths, 0);
        let r = martingale_criterion(&ens, &spec, &[0.1], &CriterionOptions::default());
        assert!(matches!(r, Err(Error::UnreliableReport { aborted: 1, total: 51 })));
    }

    #[test]
    fn literal_reading_differs_only_when_beta_is_nonzero() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let p = LiftedPath::new(&smooth_curve(g), &spec).unwrap();
        assert_eq!(
            p.criterion_process(&spec, QuadraticReading::Covariation),
            p.criterion_process(&spec, QuadraticReading::Literal)
        );
    }

    #[test]
    fn quadratic_readings_on_a_nonzero_beta() {
        // SO(3) itself with a symmetric β(A,B) = ⟨A,B⟩C has no H to violate
        let basis = Basis::new(so3_elements(), 3).unwrap();
        let c = e_ij(3, 0, 1);
        let beta = BilinearForm::from_fn(&basis, &basis, |a, b| &c * crate::lie::trace_inner(a, b)).unwrap();
        let spec = HomogSpaceSpec::new("so3", 3, vec![], so3_elements(), beta.clone(), beta, SpaceModel::Identity, LiftSolver::Newton).unwrap();
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let a = e_ij(3, 1, 2) * 0.5;
        let y = GroupPath::one_parameter(g, &GroupElement::identity(3), &a);
        let rows: Vec<Vector> = y.values().iter().map(|v| spec.project(v.matrix())).collect();
        let x = CoordPath::from_rows(g, &rows).unwrap();
        let p = LiftedPath::new(&x, &spec).unwrap();
        let cov = p.criterion_process(&spec, QuadraticReading::Covariation);
        let lit = p.criterion_process(&spec, QuadraticReading::Literal);
        // covariation: ½Σ|ΔL|² = ½·0.25·dt·T ; literal: ½Σ|L_k|²dt ≈ ½·0.25·T³/3
        let cov_c1 = cov.row(g.steps)[0];
        let lit_c1 = lit.row(g.steps)[0];
        assert!((cov_c1 - 0.5 * 0.25 * 0.01).abs() < 1e-10, "{cov_c1}");
        assert!((lit_c1 - 0.5 * 0.25 / 3.0).abs() < 1e-2, "{lit_c1}");
    }

    #[test]
    fn pullback_with_zero_form_vanishes() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let y = horizontal_lift(&smooth_curve(g), &GroupElement::identity(3), &spec).unwrap();
        let zero = |_: &[f64]| Vector::zeros(3);
        for chart in [GroupChart::Connection, GroupChart::FlatCoordinates] {
            assert_eq!(pullback_consistency(&y, &zero, &spec, chart).unwrap().residual, 0.0);
        }
    }

    fn smooth_form(x: &[f64]) -> Vector {
        Vector::from_column_slice(&[x[1] + 0.3, x[0].sin(), x[0] * x[2] - 0.5])
    }

    #[test]
    fn pullback_residual_shrinks_on_deterministic_lifts() {
        let spec = sphere2();
        let mut res = Vec::new();
        for &dt in &[4e-3, 2e-3, 1e-3] {
            let g = TimeGrid::with_horizon(dt, 1.0).unwrap();
            let y = horizontal_lift(&smooth_curve(g), &GroupElement::identity(3), &spec).unwrap();
            res.push(pullback_consistency(&y, &smooth_form, &spec, GroupChart::Connection).unwrap().residual);
        }
        assert!(res[0] > res[1] && res[1] > res[2], "{res:?}");
        assert!(res[2] < 1e-6, "{res:?}");
    }

    #[test]
    fn pullback_residual_on_brownian_lifts() {
        let spec = sphere2();
        let coord = |x: &[f64]| {
            let _ = x;
            Vector::from_column_slice(&[0.0, 1.0, 0.0])
        };
        let mut ms = Vec::new();
        for &dt in &[4e-3, 1e-3] {
            let g = TimeGrid::with_horizon(dt, 1.0).unwrap();
            let mut acc = 0.0;
            for i in 0..20 {
                let x = crate::sphere::sphere_bm_path(2, g, 5, i).unwrap();
                let y = horizontal_lift(&x, &GroupElement::identity(3), &spec).unwrap();
                acc += pullback_consistency(&y, &coord, &spec, GroupChart::Connection).unwrap().residual.powi(2);
            }
            ms.push(acc / 20.0);
        }
        assert!(ms[1] < ms[0], "{ms:?}");
    }

    #[test]
    fn pullback_on_identity_model_is_second_order() {
        let basis = so3_elements();
        let spec = HomogSpaceSpec::with_connection("so3", 3, vec![], basis, CanonicalConnection::FirstKind, SpaceModel::Identity, LiftSolver::Newton).unwrap();
        let form = |x: &[f64]| Vector::from_iterator(9, x.iter().enumerate().map(|(i, v)| (v * (i as f64 + 1.0)).cos()));
        let mut res = Vec::new();
        for &dt in &[4e-3, 2e-3] {
            let g = TimeGrid::with_horizon(dt, 1.0).unwrap();
            let values: Vec<GroupElement> = (0..g.len())
                .map(|k| {
                    let t = g.time(k);
                    mat_exp(&AlgebraElement::new(e_ij(3, 0, 1) * t.sin() + e_ij(3, 1, 2) * (0.5 * t * t)))
                })
                .collect();
            let y = GroupPath::new(g, values).unwrap();
            res.push(pullback_consistency(&y, &form, &spec, GroupChart::Connection).unwrap().residual);
        }
        assert!(res[1] < res[0] && res[1] < 1e-5, "{res:?}");
    }

    #[test]
    fn pullback_rejects_nonzero_beta_on_orbits() {
        let spec = sphere2();
        let mut beta = BilinearForm::zero(2, 2);
        beta.set(0, 0, 0, 1.0);
        let odd = HomogSpaceSpec::unchecked(
            "odd",
            3,
            spec.h_basis().elements().to_vec(),
            spec.m_basis().elements().to_vec(),
            beta,
            BilinearForm::zero(3, 3),
            spec.model().clone(),
            LiftSolver::SphereClosedForm,
        )
        .unwrap();
        let g = TimeGrid::new(0.0, 0.1, 2).unwrap();
        let y = GroupPath::one_parameter(g, &GroupElement::identity(3), &e_ij(3, 0, 1));
        assert!(matches!(
            pullback_consistency(&y, &smooth_form, &odd, GroupChart::Connection),
            Err(Error::Unsupported(_))
        ));
    }

    #[test]
    fn translation_properties() {
        let spec = sphere2();
        let g = TimeGrid::new(0.0, 0.01, 50).unwrap();
        let x = smooth_curve(g);
        assert_eq!(translate_process(&x, &GroupElement::identity(3), &spec).unwrap(), x);
        let r = mat_exp(&AlgebraElement::new(e_ij(3, 0, 1) * 0.3 + e_ij(3, 0, 2) * -1.1 + e_ij(3, 1, 2) * 0.4));
        let there = translate_process(&x, &r, &spec).unwrap();
        let back = translate_process(&there, &r.inverse(), &spec).unwrap();
        for (a, b) in x.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}
