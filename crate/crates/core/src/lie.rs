//! Matrix Lie group and Lie algebra arithmetic.
//!
//! Algebra elements are real `m×m` matrices, optionally carrying their
//! coefficients in a declared [`Basis`]. Group elements are special
//! orthogonal matrices. The exponential uses scaling and squaring around a
//! truncated Taylor series; the logarithm uses inverse scaling (repeated
//! Denman–Beavers square roots) around the Cayley/`atanh` series.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Truncation threshold for the exp/log power series.
pub const SERIES_TOL: f64 = 1e-14;
/// Tolerance for `A + Aᵀ = 0` and for basis reconstruction.
pub const ALGEBRA_TOL: f64 = 1e-12;
/// Tolerance for `gᵀg = I` and `det g = 1`.
pub const MEMBERSHIP_TOL: f64 = 1e-10;
/// Residual above which an element is not in the span of a basis.
pub const SPAN_TOL: f64 = 1e-10;

/// Element of a matrix Lie algebra.
#[derive(Clone, Debug, PartialEq)]
pub struct AlgebraElement {
    matrix: Matrix,
    coords: Option<Vector>,
}

impl AlgebraElement {
    /// Wraps a square matrix without checking membership.
    pub fn new(matrix: Matrix) -> Self {
        debug_assert!(matrix.is_square());
        Self { matrix, coords: None }
    }

    /// Wraps a matrix, requiring it to lie in `so(m)`.
    pub fn skew(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape(format!(
                "algebra element must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        let residual = skew_violation(&matrix);
        if residual > ALGEBRA_TOL {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(Self { matrix, coords: None })
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            matrix: Matrix::zeros(dim, dim),
            coords: None,
        }
    }

    /// Builds `Σ cᵢ·basisᵢ` and remembers the coefficients.
    pub fn from_coords(basis: &Basis, coords: Vector) -> Result<Self> {
        if coords.len() != basis.len() {
            return Err(Error::Shape(format!(
                "expected {} coefficients, got {}",
                basis.len(),
                coords.len()
            )));
        }
        Ok(Self {
            matrix: basis.combine(coords.as_slice()),
            coords: Some(coords),
        })
    }

    /// Attaches coordinates in `basis`, failing if the matrix is outside its span.
    pub fn in_basis(mut self, basis: &Basis) -> Result<Self> {
        self.coords = Some(basis.coords(&self.matrix)?);
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    pub fn coords(&self) -> Option<&Vector> {
        self.coords.as_ref()
    }

    /// `√(½ tr(AᵀA))`: for `θ·E_ij` this is `|θ|`.
    pub fn norm(&self) -> f64 {
        algebra_norm(&self.matrix)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            matrix: &self.matrix * s,
            coords: self.coords.as_ref().map(|c| c * s),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        let coords = match (&self.coords, &other.coords) {
            (Some(a), Some(b)) if a.len() == b.len() => Some(a + b),
            _ => None,
        };
        Ok(Self {
            matrix: &self.matrix + &other.matrix,
            coords,
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.add(&other.scaled(-1.0))
    }
}

/// Element of `SO(m)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GroupElement {
    matrix: Matrix,
}

impl GroupElement {
    pub fn identity(dim: usize) -> Self {
        Self {
            matrix: Matrix::identity(dim, dim),
        }
    }

    /// Wraps a matrix without checking membership.
    pub fn new_unchecked(matrix: Matrix) -> Self {
        Self { matrix }
    }

    /// Wraps a matrix, requiring `gᵀg = I` and `det g = 1` to [`MEMBERSHIP_TOL`].
    pub fn special_orthogonal(matrix: Matrix) -> Result<Self> {
        if !matrix.is_square() {
            return Err(Error::Shape("group element must be square".into()));
        }
        let g = Self { matrix };
        let v = g.membership_violation();
        if v > MEMBERSHIP_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not in SO(m): violation {v:.3e}"
            )));
        }
        Ok(g)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> Matrix {
        self.matrix
    }

    /// Inverse of an orthogonal matrix.
    pub fn inverse(&self) -> Self {
        Self {
            matrix: self.matrix.transpose(),
        }
    }

    pub fn compose(&self, other: &Self) -> Self {
        Self {
            matrix: &self.matrix * &other.matrix,
        }
    }

    /// `g⁻¹h`, computed as `gᵀh`.
    pub fn relative(&self, other: &Self) -> Self {
        Self {
            matrix: self.matrix.tr_mul(&other.matrix),
        }
    }

    /// `Ad(g)A = gAg⁻¹`.
    pub fn adjoint(&self, a: &Matrix) -> Matrix {
        &self.matrix * a * self.matrix.transpose()
    }

    pub fn act(&self, x: &Vector) -> Vector {
        &self.matrix * x
    }

    /// `max(‖gᵀg − I‖_max, |det g − 1|)`.
    pub fn membership_violation(&self) -> f64 {
        let n = self.dim();
        let gram = self.matrix.tr_mul(&self.matrix);
        let orth = (gram - Matrix::identity(n, n)).amax();
        let det = (self.matrix.determinant() - 1.0).abs();
        orth.max(det)
    }

    /// Polar projection back onto the orthogonal group.
    pub fn reorthonormalized(&self) -> Self {
        Self {
            matrix: polar_projection(&self.matrix),
        }
    }
}

/// A declared ordered basis of a matrix subspace, with the Frobenius Gram
/// inverse cached for coordinate extraction.
#[derive(Clone, Debug)]
pub struct Basis {
    dim: usize,
    elements: Vec<Matrix>,
    gram_inv: Matrix,
}

impl Basis {
    pub fn new(elements: Vec<Matrix>, dim: usize) -> Result<Self> {
        for e in &elements {
            if e.nrows() != dim || e.ncols() != dim {
                return Err(Error::Shape(format!(
                    "basis element is {}x{}, expected {dim}x{dim}",
                    e.nrows(),
                    e.ncols()
                )));
            }
        }
        let d = elements.len();
        let gram = Matrix::from_fn(d, d, |i, j| elements[i].dot(&elements[j]));
        let gram_inv = if d == 0 {
            Matrix::zeros(0, 0)
        } else {
            let svd = gram.clone().svd(false, false);
            let smax = svd.singular_values.max();
            let smin = svd.singular_values.min();
            if smin <= 1e-12 * smax.max(1.0) {
                return Err(Error::InvalidSpec(
                    "basis elements are linearly dependent".into(),
                ));
            }
            gram.try_inverse().ok_or_else(|| {
                Error::InvalidSpec("basis Gram matrix is singular".into())
            })?
        };
        Ok(Self {
            dim,
            elements,
            gram_inv,
        })
    }

    pub fn from_elements(elements: &[AlgebraElement], dim: usize) -> Result<Self> {
        Self::new(elements.iter().map(|e| e.matrix().clone()).collect(), dim)
    }

    /// Concatenation `self ∪ other`, in that order.
    pub fn concat(&self, other: &Basis) -> Result<Self> {
        same_dim(self.dim, other.dim)?;
        let mut v = self.elements.clone();
        v.extend(other.elements.iter().cloned());
        Self::new(v, self.dim)
    }

    /// Matrix size `m`.
    pub fn matrix_dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, i: usize) -> &Matrix {
        &self.elements[i]
    }

    pub fn elements(&self) -> &[Matrix] {
        &self.elements
    }

    pub fn combine(&self, coords: &[f64]) -> Matrix {
        let mut out = Matrix::zeros(self.dim, self.dim);
        for (c, e) in coords.iter().zip(&self.elements) {
            if *c != 0.0 {
                out += e * *c;
            }
        }
        out
    }

    /// Least-squares coefficients and the reconstruction residual (Frobenius).
    pub fn project(&self, m: &Matrix) -> (Vector, f64) {
        let rhs = Vector::from_iterator(self.len(), self.elements.iter().map(|e| e.dot(m)));
        let coords = if self.is_empty() {
            Vector::zeros(0)
        } else {
            &self.gram_inv * rhs
        };
        let mut r2 = 0.0;
        for (idx, v) in m.iter().enumerate() {
            let mut s = *v;
            for (c, e) in coords.iter().zip(&self.elements) {
                s -= c * e.as_slice()[idx];
            }
            r2 += s * s;
        }
        (coords, r2.sqrt())
    }

    /// Coefficients of `m`, failing if `m` is outside the span by more than [`SPAN_TOL`].
    pub fn coords(&self, m: &Matrix) -> Result<Vector> {
        if m.nrows() != self.dim || m.ncols() != self.dim {
            return Err(Error::Shape(format!(
                "expected {0}x{0} matrix, got {1}x{2}",
                self.dim,
                m.nrows(),
                m.ncols()
            )));
        }
        let (coords, residual) = self.project(m);
        if residual > SPAN_TOL * (1.0 + m.norm()) {
            return Err(Error::NotInAlgebra { residual });
        }
        Ok(coords)
    }
}

/// Bilinear map between spans of two bases, stored as coefficients:
/// `form(bᵢ, bⱼ) = Σₖ table[i][j][k]·cₖ`.
#[derive(Clone, Debug, PartialEq)]
pub struct BilinearForm {
    domain_dim: usize,
    codomain_dim: usize,
    table: Vec<f64>,
}

impl BilinearForm {
    pub fn zero(domain_dim: usize, codomain_dim: usize) -> Self {
        Self {
            domain_dim,
            codomain_dim,
            table: vec![0.0; domain_dim * domain_dim * codomain_dim],
        }
    }

    /// Tabulates `f` on pairs of domain basis elements, expressing results in `codomain`.
    pub fn from_fn<F>(domain: &Basis, codomain: &Basis, f: F) -> Result<Self>
    where
        F: Fn(&Matrix, &Matrix) -> Matrix,
    {
        let d = domain.len();
        let c = codomain.len();
        let mut form = Self::zero(d, c);
        for i in 0..d {
            for j in 0..d {
                let value = f(domain.element(i), domain.element(j));
                let coords = codomain.coords(&value)?;
                for k in 0..c {
                    form.set(i, j, k, coords[k]);
                }
            }
        }
        Ok(form)
    }

    pub fn domain_dim(&self) -> usize {
        self.domain_dim
    }

    pub fn codomain_dim(&self) -> usize {
        self.codomain_dim
    }

    fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.domain_dim + j) * self.codomain_dim + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.table[self.index(i, j, k)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, value: f64) {
        let idx = self.index(i, j, k);
        self.table[idx] = value;
    }

    pub fn is_zero(&self) -> bool {
        self.table.iter().all(|v| *v == 0.0)
    }

    /// Evaluates the form on coefficient vectors.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Vector {
        let mut out = Vector::zeros(self.codomain_dim);
        for (i, xi) in x.iter().enumerate().take(self.domain_dim) {
            if *xi == 0.0 {
                continue;
            }
            for (j, yj) in y.iter().enumerate().take(self.domain_dim) {
                let w = xi * yj;
                if w == 0.0 {
                    continue;
                }
                let base = self.index(i, j, 0);
                for k in 0..self.codomain_dim {
                    out[k] += w * self.table[base + k];
                }
            }
        }
        out
    }

    /// True iff `form(x, x) = 0` for all `x`, i.e. the table is alternating.
    pub fn is_alternating(&self, tol: f64) -> bool {
        for i in 0..self.domain_dim {
            for j in i..self.domain_dim {
                for k in 0..self.codomain_dim {
                    let s = self.get(i, j, k) + self.get(j, i, k);
                    if s.abs() > tol {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// `{E_ij : i < j}` in lexicographic order; `E_ij` has `−1` at `(i,j)` and `+1` at `(j,i)`.
pub fn so_basis(m: usize) -> Result<Vec<AlgebraElement>> {
    if m < 2 {
        return Err(Error::InvalidDimension(format!(
            "so(m) needs m >= 2, got {m}"
        )));
    }
    let mut out = Vec::with_capacity(m * (m - 1) / 2);
    for i in 0..m {
        for j in (i + 1)..m {
            out.push(AlgebraElement::new(e_ij(m, i, j)));
        }
    }
    Ok(out)
}

/// `E_ij` with zero-based indices.
pub fn e_ij(m: usize, i: usize, j: usize) -> Matrix {
    let mut e = Matrix::zeros(m, m);
    e[(i, j)] = -1.0;
    e[(j, i)] = 1.0;
    e
}

/// Position of `E_ij` (zero-based, `i < j`) in [`so_basis`].
pub fn so_index(m: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < m);
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

pub fn so_dimension(m: usize) -> usize {
    m * (m.saturating_sub(1)) / 2
}

/// Commutator `AB − BA`.
pub fn bracket(a: &AlgebraElement, b: &AlgebraElement) -> Result<AlgebraElement> {
    same_dim(a.dim(), b.dim())?;
    Ok(AlgebraElement::new(commutator(a.matrix(), b.matrix())))
}

pub fn commutator(a: &Matrix, b: &Matrix) -> Matrix {
    a * b - b * a
}

/// `⟨U,V⟩ = −½ tr(UV)`.
pub fn inner(a: &AlgebraElement, b: &AlgebraElement) -> f64 {
    trace_inner(a.matrix(), b.matrix())
}

pub fn trace_inner(a: &Matrix, b: &Matrix) -> f64 {
    let n = a.nrows();
    let mut tr = 0.0;
    for i in 0..n {
        for k in 0..n {
            tr += a[(i, k)] * b[(k, i)];
        }
    }
    -0.5 * tr
}

/// `√(½ Σ aᵢⱼ²)`.
pub fn algebra_norm(a: &Matrix) -> f64 {
    (0.5 * a.norm_squared()).sqrt()
}

pub fn skew_violation(a: &Matrix) -> f64 {
    let n = a.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((a[(i, j)] + a[(j, i)]).abs());
        }
    }
    worst
}

fn one_norm(a: &Matrix) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential of an algebra element.
pub fn mat_exp(a: &AlgebraElement) -> GroupElement {
    GroupElement::new_unchecked(exp_matrix(a.matrix()))
}

/// Scaling and squaring: `exp(A) = (T(A/2ˢ))^(2ˢ)` with `‖A/2ˢ‖₁ ≤ ½`, and
/// the Taylor polynomial `T` truncated once a term drops below [`SERIES_TOL`].
/// Exactly skew `3×3` input goes through the Rodrigues closed form.
pub fn exp_matrix(a: &Matrix) -> Matrix {
    let n = a.nrows();
    if n == 3 && skew_violation(a) == 0.0 {
        return rodrigues_exp(a);
    }
    exp_taylor(a)
}

fn exp_taylor(a: &Matrix) -> Matrix {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = if squarings > 0 {
        a * 0.5f64.powi(squarings)
    } else {
        a.clone()
    };
    let mut result = Matrix::identity(n, n);
    let mut term = Matrix::identity(n, n);
    let mut next = Matrix::zeros(n, n);
    for k in 1..=40 {
        term.mul_to(&scaled, &mut next);
        next /= k as f64;
        std::mem::swap(&mut term, &mut next);
        result += &term;
        if one_norm(&term) <= SERIES_TOL {
            break;
        }
    }
    for _ in 0..squarings {
        result.mul_to(&result.clone(), &mut next);
        std::mem::swap(&mut result, &mut next);
    }
    result
}

/// Principal matrix logarithm of a rotation.
pub fn mat_log(g: &GroupElement) -> Result<AlgebraElement> {
    log_matrix(g.matrix()).map(AlgebraElement::new)
}

/// Inverse scaling and squaring. The matrix is square-rooted until
/// `Z = (X − I)(X + I)⁻¹` satisfies `‖Z‖₁ ≤ ¼`, then
/// `log X = 2 Σ Z²ᵏ⁺¹/(2k+1)`. For orthogonal `X`, `Z` is exactly skew and so
/// is every partial sum. Rotations of `ℝ³` by less than `π/2` use the
/// Rodrigues closed form.
pub fn log_matrix(g: &Matrix) -> Result<Matrix> {
    let n = g.nrows();
    if n == 3 {
        if let Some(l) = rodrigues_log(g) {
            return Ok(l);
        }
    }
    log_inverse_scaling(g)
}

fn log_inverse_scaling(g: &Matrix) -> Result<Matrix> {
    let n = g.nrows();
    let eye = Matrix::identity(n, n);
    let mut x = g.clone();
    let mut roots = 0;
    let z = loop {
        let plus = &x + &eye;
        let inv = plus.try_inverse().ok_or_else(|| {
            Error::LogDomain("eigenvalue at -1 (rotation by pi)".into())
        })?;
        if one_norm(&inv) > 1e8 {
            return Err(Error::LogDomain(
                "eigenvalue within 1e-8 of -1 (rotation near pi)".into(),
            ));
        }
        let z = (&x - &eye) * inv;
        if one_norm(&z) <= 0.25 {
            break z;
        }
        if roots >= 40 {
            return Err(Error::LogDomain("inverse scaling did not converge".into()));
        }
        x = sqrt_denman_beavers(&x)?;
        roots += 1;
    };
    let z2 = &z * &z;
    let mut power = z.clone();
    let mut sum = z;
    let mut next = Matrix::zeros(n, n);
    for k in 1..=60 {
        power.mul_to(&z2, &mut next);
        std::mem::swap(&mut power, &mut next);
        let term = &power / (2 * k + 1) as f64;
        sum += &term;
        if one_norm(&term) <= SERIES_TOL {
            break;
        }
    }
    Ok(sum * (2.0 * f64::from(1u32 << roots)))
}

/// `exp(A) = I + (sin θ/θ)A + ((1 − cos θ)/θ²)A²` for skew `3×3` `A`, `θ = ‖A‖`.
fn rodrigues_exp(a: &Matrix) -> Matrix {
    let (x, y, z) = (a[(2, 1)], a[(0, 2)], a[(1, 0)]);
    let t2 = x * x + y * y + z * z;
    let (s, c) = if t2 < 1e-8 {
        // Taylor coefficients to well below rounding at this size
        (1.0 - t2 / 6.0 + t2 * t2 / 120.0, 0.5 - t2 / 24.0 + t2 * t2 / 720.0)
    } else {
        let t = t2.sqrt();
        (t.sin() / t, (1.0 - t.cos()) / t2)
    };
    let mut out = Matrix::identity(3, 3);
    let a2 = [
        [-(y * y + z * z), x * y, x * z],
        [x * y, -(x * x + z * z), y * z],
        [x * z, y * z, -(x * x + y * y)],
    ];
    for i in 0..3 {
        for j in 0..3 {
            out[(i, j)] += s * a[(i, j)] + c * a2[i][j];
        }
    }
    out
}

/// `log R = (θ/sin θ)·(R − Rᵀ)/2` with `θ = atan2(|v|, (tr R − 1)/2)`, where
/// `v` is the axial vector of `(R − Rᵀ)/2`. Used for rotations by less than
/// `π/2`, where the formula is well conditioned.
fn rodrigues_log(r: &Matrix) -> Option<Matrix> {
    let cos = 0.5 * (r[(0, 0)] + r[(1, 1)] + r[(2, 2)] - 1.0);
    if cos <= 0.0 {
        return None;
    }
    let orth = (0..3).all(|i| {
        (0..3).all(|j| {
            let g: f64 = (0..3).map(|k| r[(k, i)] * r[(k, j)]).sum();
            (g - if i == j { 1.0 } else { 0.0 }).abs() <= 1e-12
        })
    });
    if !orth {
        return None;
    }
    let x = 0.5 * (r[(2, 1)] - r[(1, 2)]);
    let y = 0.5 * (r[(0, 2)] - r[(2, 0)]);
    let z = 0.5 * (r[(1, 0)] - r[(0, 1)]);
    let sin = (x * x + y * y + z * z).sqrt();
    let theta = sin.atan2(cos);
    let f = if sin < 1e-8 { 1.0 + theta * theta / 6.0 } else { theta / sin };
    let (x, y, z) = (f * x, f * y, f * z);
    Some(Matrix::from_row_slice(3, 3, &[0.0, -z, y, z, 0.0, -x, -y, x, 0.0]))
}

fn sqrt_denman_beavers(a: &Matrix) -> Result<Matrix> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = Matrix::identity(n, n);
    for _ in 0..100 {
        let yi = y
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::LogDomain("singular square-root iterate".into()))?;
        let zi = z
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::LogDomain("singular square-root iterate".into()))?;
        let y_next = (&y + zi) * 0.5;
        let z_next = (&z + yi) * 0.5;
        let delta = one_norm(&(&y_next - &y));
        y = y_next;
        z = z_next;
        if delta <= 1e-15 * one_norm(&y).max(1.0) {
            return Ok(y);
        }
    }
    Err(Error::LogDomain("square root did not converge".into()))
}

/// Orthogonal polar factor of a near-orthogonal matrix. Newton–Schulz
/// iterations `X ← ½X(3I − XᵀX)` are used while `‖XᵀX − I‖` is small; far
/// from the group the SVD factor `UVᵀ` is used.
pub fn polar_projection(m: &Matrix) -> Matrix {
    let mut x = m.clone();
    if orthogonality_defect(&x) <= 4.0 * f64::EPSILON {
        return x;
    }
    let n = m.nrows();
    let eye = Matrix::identity(n, n);
    for _ in 0..8 {
        if orthogonality_defect(&x) <= 4.0 * f64::EPSILON {
            return x;
        }
        let gram = x.tr_mul(&x);
        let dev = (&gram - &eye).amax();
        if dev > 0.5 {
            let svd = x.clone().svd(true, true);
            let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
                return x;
            };
            return u * v_t;
        }
        let corr = &eye * 3.0 - gram;
        x = (&x * corr) * 0.5;
    }
    x
}

/// `‖XᵀX − I‖_max` without temporaries.
pub fn orthogonality_defect(x: &Matrix) -> f64 {
    let n = x.ncols();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let ci = x.column(i);
        for j in i..n {
            let g = ci.dot(&x.column(j));
            worst = worst.max((g - if i == j { 1.0 } else { 0.0 }).abs());
        }
    }
    worst
}

/// Largest `|aᵢⱼ − bᵢⱼ|`.
pub fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    (a - b).amax()
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::Shape(format!("dimension mismatch: {a} vs {b}")));
    }
    Ok(())
}
