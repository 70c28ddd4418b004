//! Stochastic exponentials and logarithms on `SO(m)`.
//!
//! All integrators are geometric Euler schemes with exponential updates,
//! re-orthonormalized by polar projection after every step.

use crate::error::{Error, Result};
use crate::homog::HomogSpaceSpec;
use crate::lie::{
    algebra_norm, commutator, exp_matrix, log_matrix, polar_projection, trace_inner,
    AlgebraElement, Basis, BilinearForm, GroupElement, Matrix, MEMBERSHIP_TOL,
};
use crate::stoch::{AlgebraPath, CoordPath, TimeGrid};

/// Largest admissible increment norm `√(½Σaᵢⱼ²)` before exp/log.
pub const STEP_LIMIT: f64 = 1.0;

/// Discretized path in `SO(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupPath {
    grid: TimeGrid,
    values: Vec<GroupElement>,
}

impl GroupPath {
    /// Checks grid length and group membership of every value.
    pub fn new(grid: TimeGrid, values: Vec<GroupElement>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::Shape(format!(
                "group path has {} values, grid has {} points",
                values.len(),
                grid.len()
            )));
        }
        for (k, g) in values.iter().enumerate() {
            let v = g.membership_violation();
            if v > MEMBERSHIP_TOL {
                return Err(Error::InvalidInput(format!(
                    "value {k} is off the group (violation {v:.3e})"
                )));
            }
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_parts(grid: TimeGrid, values: Vec<GroupElement>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    /// One-parameter path `t ↦ g0·exp(tA)` evaluated in closed form.
    pub fn one_parameter(grid: TimeGrid, g0: &GroupElement, a: &Matrix) -> Self {
        let values = (0..grid.len())
            .map(|k| {
                let t = grid.time(k) - grid.t0;
                GroupElement::new_unchecked(g0.matrix() * exp_matrix(&(a * t)))
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn values(&self) -> &[GroupElement] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn matrix_dim(&self) -> usize {
        self.values[0].dim()
    }

    /// `g·Y_k` for every `k`.
    pub fn left_translated(&self, g: &GroupElement) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|y| g.compose(y)).collect(),
        }
    }

    /// Largest membership violation along the path.
    pub fn max_membership_violation(&self) -> f64 {
        self.values
            .iter()
            .map(GroupElement::membership_violation)
            .fold(0.0, f64::max)
    }

    /// Largest entrywise distance to another path on the same grid.
    pub fn sup_distance(&self, other: &GroupPath) -> Result<f64> {
        if self.len() != other.len() {
            return Err(Error::Shape("group paths differ in length".into()));
        }
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a.matrix() - b.matrix()).amax())
            .fold(0.0, f64::max))
    }
}

/// Left-invariant connection on `G` given by its connection function `α` on `𝔤`.
#[derive(Clone, Debug)]
pub struct LeftInvariantConnection {
    basis: Basis,
    alpha: BilinearForm,
}

impl LeftInvariantConnection {
    pub fn new(basis: Basis, alpha: BilinearForm) -> Result<Self> {
        if alpha.domain_dim() != basis.len() || alpha.codomain_dim() != basis.len() {
            return Err(Error::Shape(format!(
                "connection table is {}→{}, basis has {} elements",
                alpha.domain_dim(),
                alpha.codomain_dim(),
                basis.len()
            )));
        }
        Ok(Self { basis, alpha })
    }

    /// Canonical connection of the second kind, `α = 0`.
    pub fn zero(basis: Basis) -> Self {
        let n = basis.len();
        Self {
            basis,
            alpha: BilinearForm::zero(n, n),
        }
    }

    /// Canonical connection of the first kind, `α(A,B) = ½[A,B]`.
    pub fn first_kind(basis: Basis) -> Result<Self> {
        let alpha = BilinearForm::from_fn(&basis, &basis, |a, b| commutator(a, b) * 0.5)?;
        Self::new(basis, alpha)
    }

    /// Symmetric form `α(A,B) = ⟨A,B⟩·C`.
    pub fn metric_times(basis: Basis, c: &Matrix) -> Result<Self> {
        let alpha = BilinearForm::from_fn(&basis, &basis, |a, b| c * trace_inner(a, b))?;
        Self::new(basis, alpha)
    }

    /// The connection `α` of a homogeneous-space specification.
    pub fn from_spec(spec: &HomogSpaceSpec) -> Self {
        Self {
            basis: spec.g_basis().clone(),
            alpha: spec.alpha().clone(),
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn alpha(&self) -> &BilinearForm {
        &self.alpha
    }

    pub fn is_zero(&self) -> bool {
        self.alpha.is_zero()
    }

    /// `α(A, A)` as a matrix.
    pub fn quadratic(&self, a: &Matrix) -> Result<Matrix> {
        let c = self.basis.coords(a)?;
        Ok(self.quadratic_coords(c.as_slice()))
    }

    pub(crate) fn quadratic_coords(&self, c: &[f64]) -> Matrix {
        let v = self.alpha.eval(c, c);
        self.basis.combine(v.as_slice())
    }
}

fn check_driver(m: &AlgebraPath, g0: &GroupElement) -> Result<()> {
    if m.matrix_dim() != g0.dim() {
        return Err(Error::Shape(format!(
            "driver is {0}x{0}, initial point is {1}x{1}",
            m.matrix_dim(),
            g0.dim()
        )));
    }
    let start = algebra_norm(m.values()[0].matrix());
    if start > 0.0 {
        return Err(Error::InvalidInput(format!(
            "driver must start at 0 (norm {start:.3e})"
        )));
    }
    Ok(())
}

fn guard(step: usize, a: &Matrix) -> Result<()> {
    let norm = algebra_norm(a);
    if norm > STEP_LIMIT || !norm.is_finite() {
        return Err(Error::StepSize {
            step,
            norm,
            limit: STEP_LIMIT,
        });
    }
    Ok(())
}

/// `g_{k+1} = polar(g_k·exp(ΔM_k))`, `g_0 = g0`.
pub fn strat_exponential(m: &AlgebraPath, g0: &GroupElement) -> Result<GroupPath> {
    check_driver(m, g0)?;
    let mut values = Vec::with_capacity(m.values().len());
    let mut g = g0.matrix().clone();
    values.push(g0.clone());
    for (k, w) in m.values().windows(2).enumerate() {
        let delta = w[1].matrix() - w[0].matrix();
        guard(k, &delta)?;
        g = polar_projection(&(&g * exp_matrix(&delta)));
        values.push(GroupElement::new_unchecked(g.clone()));
    }
    Ok(GroupPath::from_parts(*m.grid(), values))
}

/// Itô exponential relative to `conn`:
/// `g_{k+1} = polar(g_k·exp(ΔN_k − ½α(ΔN_k, ΔN_k)))`.
pub fn ito_exponential(
    n: &AlgebraPath,
    conn: &LeftInvariantConnection,
    g0: &GroupElement,
) -> Result<GroupPath> {
    ito_exponential_signed(n, conn, g0, -0.5)
}

/// [`ito_exponential`] with the correction coefficient exposed, so checks
/// can confirm they notice a wrong one.
#[doc(hidden)]
pub fn ito_exponential_signed(
    n: &AlgebraPath,
    conn: &LeftInvariantConnection,
    g0: &GroupElement,
    correction: f64,
) -> Result<GroupPath> {
    check_driver(n, g0)?;
    let mut values = Vec::with_capacity(n.values().len());
    let mut g = g0.matrix().clone();
    values.push(g0.clone());
    let flat = conn.is_zero();
    for (k, w) in n.values().windows(2).enumerate() {
        let mut delta = w[1].matrix() - w[0].matrix();
        guard(k, &delta)?;
        if !flat {
            let q = conn.quadratic(&delta)?;
            delta += q * correction;
            guard(k, &delta)?;
        }
        g = polar_projection(&(&g * exp_matrix(&delta)));
        values.push(GroupElement::new_unchecked(g.clone()));
    }
    Ok(GroupPath::from_parts(*n.grid(), values))
}

/// `log(Y_k⁻¹Y_{k+1})` for every step.
pub fn log_increments(y: &GroupPath) -> Result<Vec<Matrix>> {
    y.values()
        .windows(2)
        .enumerate()
        .map(|(k, w)| {
            let rel = w[0].matrix().tr_mul(w[1].matrix());
            let b = log_matrix(&rel).map_err(|_| Error::StepSize {
                step: k,
                norm: f64::NAN,
                limit: STEP_LIMIT,
            })?;
            guard(k, &b)?;
            Ok(b)
        })
        .collect()
}

/// `L_0 = 0`, `L_{k+1} = L_k + log(Y_k⁻¹Y_{k+1})`.
pub fn stochastic_logarithm(y: &GroupPath) -> Result<AlgebraPath> {
    let m = y.matrix_dim();
    let mut acc = Matrix::zeros(m, m);
    let mut values = Vec::with_capacity(y.len());
    values.push(AlgebraElement::new(acc.clone()));
    for b in log_increments(y)? {
        acc += b;
        values.push(AlgebraElement::new(acc.clone()));
    }
    AlgebraPath::new(*y.grid(), values)
}

/// Cumulative `𝔥`-coordinates of the log increments `log(Y_k⁻¹Y_{k+1})`.
pub fn vertical_log_components(y: &GroupPath, spec: &HomogSpaceSpec) -> Result<CoordPath> {
    let nh = spec.h_basis().len();
    let nm = spec.m_basis().len();
    let mut acc = vec![0.0; nh];
    let mut data = Vec::with_capacity(y.len() * nh);
    data.extend_from_slice(&acc);
    for b in log_increments(y)? {
        let c = spec.g_basis().coords(&b)?;
        for (j, a) in acc.iter_mut().enumerate() {
            *a += c[nm + j];
        }
        data.extend_from_slice(&acc);
    }
    CoordPath::new(*y.grid(), nh, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::{e_ij, mat_exp, so_basis, Vector};
    use crate::stoch::{path_rng, standard_normal};
    use proptest::prelude::*;

    fn so3() -> Basis {
        Basis::from_elements(&so_basis(3).unwrap(), 3).unwrap()
    }

    fn linear_driver(grid: TimeGrid, a: &Matrix) -> AlgebraPath {
        let values = (0..grid.len())
            .map(|k| AlgebraElement::new(a * (grid.time(k) - grid.t0)))
            .collect();
        AlgebraPath::new(grid, values).unwrap()
    }

    /// Brownian motion in `basis` coordinates.
    fn brownian_driver(basis: &Basis, grid: TimeGrid, seed: u64, index: u64) -> AlgebraPath {
        let mut rng = path_rng(seed, index);
        let sd = grid.dt.sqrt();
        let mut c = vec![0.0; basis.len()];
        let mut values = vec![AlgebraElement::zero(basis.matrix_dim())];
        for _ in 0..grid.steps {
            for x in c.iter_mut() {
                *x += sd * standard_normal(&mut rng);
            }
            values.push(AlgebraElement::new(basis.combine(&c)));
        }
        AlgebraPath::new(grid, values).unwrap()
    }

    fn subsample(p: &AlgebraPath, every: usize) -> AlgebraPath {
        let g = p.grid();
        let coarse = TimeGrid::new(g.t0, g.dt * every as f64, g.steps / every).unwrap();
        let values = p.values().iter().step_by(every).cloned().collect();
        AlgebraPath::new(coarse, values).unwrap()
    }

    fn smooth_driver(grid: TimeGrid) -> AlgebraPath {
        let b = so_basis(3).unwrap();
        let values = (0..grid.len())
            .map(|k| {
                let t = grid.time(k);
                let m = b[0].matrix() * t.sin() + b[1].matrix() * (0.5 * t * t) + b[2].matrix() * (0.3 * t);
                AlgebraElement::new(m)
            })
            .collect();
        AlgebraPath::new(grid, values).unwrap()
    }

    #[test]
    fn zero_driver_gives_constant_path() {
        let g = TimeGrid::new(0.0, 0.01, 50).unwrap();
        let g0 = mat_exp(&AlgebraElement::new(e_ij(3, 0, 1) * 0.7));
        let m = linear_driver(g, &Matrix::zeros(3, 3));
        let s = strat_exponential(&m, &g0).unwrap();
        assert!(s.values().iter().all(|v| v == &g0));
        let conn = LeftInvariantConnection::metric_times(so3(), &e_ij(3, 1, 2)).unwrap();
        let i = ito_exponential(&m, &conn, &g0).unwrap();
        assert!(i.values().iter().all(|v| v == &g0));
    }

    #[test]
    fn linear_driver_matches_one_parameter_subgroup() {
        let g = TimeGrid::new(0.0, 0.01, 200).unwrap();
        let a = e_ij(3, 0, 1) * 0.8 + e_ij(3, 1, 2) * -0.4;
        let g0 = mat_exp(&AlgebraElement::new(e_ij(3, 0, 2) * 0.3));
        let s = strat_exponential(&linear_driver(g, &a), &g0).unwrap();
        let exact = GroupPath::one_parameter(g, &g0, &a);
        assert!(s.sup_distance(&exact).unwrap() <= 1e-10);
    }

    #[test]
    fn roundtrip_on_smooth_driver() {
        let g = TimeGrid::new(0.0, 0.001, 2000).unwrap();
        let m = smooth_driver(g);
        let y = strat_exponential(&m, &GroupElement::identity(3)).unwrap();
        let l = stochastic_logarithm(&y).unwrap();
        let err = m
            .values()
            .iter()
            .zip(l.values())
            .map(|(a, b)| (a.matrix() - b.matrix()).amax())
            .fold(0.0, f64::max);
        assert!(err <= 1e-9, "err {err}");
    }

    #[test]
    fn roundtrip_on_brownian_driver_is_per_step_exact() {
        let g = TimeGrid::new(0.0, 0.001, 1000).unwrap();
        let m = brownian_driver(&so3(), g, 5, 0);
        let y = strat_exponential(&m, &GroupElement::identity(3)).unwrap();
        let l = stochastic_logarithm(&y).unwrap();
        let err = m
            .values()
            .iter()
            .zip(l.values())
            .map(|(a, b)| (a.matrix() - b.matrix()).amax())
            .fold(0.0, f64::max);
        assert!(err <= 1e-9, "err {err}");
    }

    #[test]
    fn logarithm_of_one_parameter_subgroup() {
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let a = e_ij(3, 0, 1) * 1.2 + e_ij(3, 0, 2) * 0.5;
        let y = GroupPath::one_parameter(g, &GroupElement::identity(3), &a);
        let l = stochastic_logarithm(&y).unwrap();
        for (k, v) in l.values().iter().enumerate() {
            assert!((v.matrix() - &a * g.time(k)).amax() <= 1e-10);
        }
    }

    #[test]
    fn constant_path_has_zero_logarithm() {
        let g = TimeGrid::new(0.0, 0.1, 10).unwrap();
        let y = GroupPath::one_parameter(g, &GroupElement::identity(4), &Matrix::zeros(4, 4));
        let l = stochastic_logarithm(&y).unwrap();
        assert!(l.values().iter().all(|v| v.matrix().amax() == 0.0));
    }

    #[test]
    fn logarithm_matches_midpoint_maurer_cartan_sums() {
        // Σ ½(Y_k + Y_{k+1})ᵀ ΔY_k converges to L at first order in dt
        let g0 = TimeGrid::new(0.0, 0.02, 50).unwrap();
        let mut errs = Vec::new();
        for r in [1usize, 2, 4] {
            let g = TimeGrid::new(0.0, g0.dt / r as f64, g0.steps * r).unwrap();
            let y = strat_exponential(&smooth_driver(g), &GroupElement::identity(3)).unwrap();
            let l = stochastic_logarithm(&y).unwrap();
            let mut acc = Matrix::zeros(3, 3);
            for w in y.values().windows(2) {
                let mid = (w[0].matrix() + w[1].matrix()) * 0.5;
                acc += mid.tr_mul(&(w[1].matrix() - w[0].matrix()));
            }
            errs.push((acc - l.values().last().unwrap().matrix()).amax());
        }
        assert!(errs[0] > errs[1] && errs[1] > errs[2], "{errs:?}");
    }

    #[test]
    fn step_guard_rejects_large_increments() {
        let g = TimeGrid::new(0.0, 1.0, 2).unwrap();
        let m = linear_driver(g, &(e_ij(3, 0, 1) * 1.5));
        assert!(matches!(
            strat_exponential(&m, &GroupElement::identity(3)),
            Err(Error::StepSize { step: 0, .. })
        ));
        let y = GroupPath::one_parameter(g, &GroupElement::identity(3), &(e_ij(3, 0, 1) * 2.0));
        assert!(matches!(stochastic_logarithm(&y), Err(Error::StepSize { .. })));
    }

    #[test]
    fn driver_must_start_at_zero() {
        let g = TimeGrid::new(0.0, 0.1, 2).unwrap();
        let a = e_ij(3, 0, 1);
        let values = vec![AlgebraElement::new(a.clone()); 3];
        let m = AlgebraPath::new(g, values).unwrap();
        assert!(strat_exponential(&m, &GroupElement::identity(3)).is_err());
    }

    #[test]
    fn zero_and_first_kind_connections_reproduce_stratonovich_bitwise() {
        let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
        let m = brownian_driver(&so3(), g, 1, 0);
        let e = GroupElement::identity(3);
        let s = strat_exponential(&m, &e).unwrap();
        let zero = ito_exponential(&m, &LeftInvariantConnection::zero(so3()), &e).unwrap();
        assert_eq!(s, zero);
        let first = LeftInvariantConnection::first_kind(so3()).unwrap();
        assert!(first.alpha().is_alternating(0.0));
        // ½α(ΔN,ΔN) vanishes identically, so the increment is unchanged
        let q = first.quadratic(&(e_ij(3, 0, 1) * 0.3 + e_ij(3, 1, 2))).unwrap();
        assert_eq!(q.amax(), 0.0);
        let i = ito_exponential(&m, &first, &e).unwrap();
        assert_eq!(s, i);
    }

    #[test]
    fn metric_connection_quadratic_form() {
        let c = e_ij(3, 1, 2);
        let conn = LeftInvariantConnection::metric_times(so3(), &c).unwrap();
        let a = e_ij(3, 0, 1) * 2.0 + e_ij(3, 0, 2);
        let q = conn.quadratic(&a).unwrap();
        assert!((q - &c * 5.0).amax() < 1e-14);
    }

    /// Sup-distance between the Itô exponential on a coarse grid and a fine
    /// Stratonovich reference of `N_t − ½·3t·C` (the quadratic variation of
    /// standard Brownian coordinates in `so(3)` is `3t` under `⟨·,·⟩`).
    fn ito_reference_error(correction: f64, coarse_dt: f64, seeds: u64) -> f64 {
        let basis = so3();
        let c = e_ij(3, 1, 2) * 0.8;
        let conn = LeftInvariantConnection::metric_times(basis.clone(), &c).unwrap();
        let fine_factor = 100;
        let horizon = 1.0;
        let mut total = 0.0;
        for s in 0..seeds {
            let steps = (horizon / coarse_dt).round() as usize * fine_factor;
            let fine = TimeGrid::new(0.0, coarse_dt / fine_factor as f64, steps).unwrap();
            let n = brownian_driver(&basis, fine, 17, s);
            let shifted: Vec<AlgebraElement> = n
                .values()
                .iter()
                .enumerate()
                .map(|(k, v)| AlgebraElement::new(v.matrix() - &c * (1.5 * fine.time(k))))
                .collect();
            let reference =
                strat_exponential(&AlgebraPath::new(fine, shifted).unwrap(), &GroupElement::identity(3)).unwrap();
            let coarse_n = subsample(&n, fine_factor);
            let y = ito_exponential_signed(&coarse_n, &conn, &GroupElement::identity(3), correction).unwrap();
            let err = y
                .values()
                .iter()
                .zip(reference.values().iter().step_by(fine_factor))
                .map(|(a, b)| (a.matrix() - b.matrix()).amax())
                .fold(0.0, f64::max);
            total += err;
        }
        total / seeds as f64
    }

    #[test]
    fn ito_exponential_converges_to_fine_reference() {
        let e1 = ito_reference_error(-0.5, 0.02, 4);
        let e2 = ito_reference_error(-0.5, 0.005, 4);
        assert!(e2 < e1, "{e1} -> {e2}");
        assert!(e2 < 0.1, "{e2}");
        // flipping the correction leaves an O(1) offset
        let bad = ito_reference_error(0.5, 0.005, 4);
        assert!(bad > 5.0 * e2, "flipped {bad} vs {e2}");
    }

    #[test]
    fn ito_logarithm_identity() {
        // L + ½Σα(ΔL,ΔL) recovers N under refinement
        let basis = so3();
        let c = e_ij(3, 0, 1);
        let conn = LeftInvariantConnection::metric_times(basis.clone(), &c).unwrap();
        let mut errs = Vec::new();
        for &dt in &[0.01, 0.0025] {
            let g = TimeGrid::with_horizon(dt, 1.0).unwrap();
            let n = brownian_driver(&basis, g, 3, 0);
            let y = ito_exponential(&n, &conn, &GroupElement::identity(3)).unwrap();
            let mut acc = Matrix::zeros(3, 3);
            let mut err: f64 = 0.0;
            for (k, b) in log_increments(&y).unwrap().into_iter().enumerate() {
                acc += &b + conn.quadratic(&b).unwrap() * 0.5;
                err = err.max((&acc - n.values()[k + 1].matrix()).amax());
            }
            errs.push(err);
        }
        // residual ½Σ(α(ΔL,ΔL) − α(ΔN,ΔN)) is a sum of centred O(dt^{3/2}) terms
        assert!(errs[1] < 0.5 * errs[0] && errs[1] < 0.03, "{errs:?}");
    }

    #[test]
    fn left_invariance() {
        let g = TimeGrid::new(0.0, 0.01, 200).unwrap();
        let m = brownian_driver(&so3(), g, 2, 0);
        let g0 = mat_exp(&AlgebraElement::new(e_ij(3, 0, 2) * 0.9 + e_ij(3, 1, 2) * 0.2));
        let a = strat_exponential(&m, &g0).unwrap();
        let b = strat_exponential(&m, &GroupElement::identity(3)).unwrap().left_translated(&g0);
        assert!(a.sup_distance(&b).unwrap() <= 1e-12);
    }

    #[test]
    fn membership_stays_tight_over_long_runs() {
        let g = TimeGrid::new(0.0, 1e-3, 20_000).unwrap();
        let b4 = Basis::from_elements(&so_basis(4).unwrap(), 4).unwrap();
        let m = brownian_driver(&b4, g, 9, 0);
        let y = strat_exponential(&m, &GroupElement::identity(4)).unwrap();
        assert!(y.max_membership_violation() <= 1e-10);
        assert!(GroupPath::new(*y.grid(), y.values().to_vec()).is_ok());
    }

    #[test]
    fn group_path_rejects_off_group_values() {
        let g = TimeGrid::new(0.0, 0.1, 1).unwrap();
        let bad = GroupElement::new_unchecked(Matrix::identity(3, 3) * 1.01);
        assert!(GroupPath::new(g, vec![GroupElement::identity(3), bad]).is_err());
    }

    proptest! {
        #[test]
        fn per_step_log_exp_inverse(c in proptest::collection::vec(-0.28f64..0.28, 3)) {
            let a = so3().combine(&c);
            let y = exp_matrix(&a);
            let l = log_matrix(&y).unwrap();
            prop_assert!((l - a).amax() <= 1e-12);
        }

        #[test]
        fn strat_exponential_stays_on_group(seed in 0u64..10_000) {
            let g = TimeGrid::new(0.0, 0.01, 100).unwrap();
            let m = brownian_driver(&so3(), g, seed, 0);
            let y = strat_exponential(&m, &GroupElement::identity(3)).unwrap();
            prop_assert!(y.max_membership_violation() <= 1e-10);
            let x0 = Vector::from_column_slice(&[1.0, 0.0, 0.0]);
            for v in y.values() {
                prop_assert!(((v.matrix() * &x0).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
