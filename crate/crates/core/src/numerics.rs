//! Dense complex linear algebra used throughout the crate.
//!
//! Everything here works on `nalgebra` dynamic matrices. Operators are
//! vectorized by column stacking, which is also nalgebra's storage order, so
//! `vec` and `devec` are plain reinterpretations of the column-major buffer.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Default relative singular-value threshold for rank decisions.
pub const RANK_TOL: f64 = 1e-10;
/// Hermiticity tolerance accepted by [`hermitian_eig`].
pub const HERMITIAN_TOL: f64 = 1e-10;

const EIG_EPS: f64 = 1e-15;
const EIG_MAX_ITER: usize = 10_000;

#[inline]
pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn frobenius(a: &CMatrix) -> f64 {
    a.norm()
}

pub fn trace(a: &CMatrix) -> C64 {
    a.trace()
}

pub fn hermitian_part(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()) * re(0.5)
}

/// `‖A − A†‖_F`.
pub fn hermiticity_residual(a: &CMatrix) -> f64 {
    (a - a.adjoint()).norm()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

/// Rank-one operator `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Column-stacking vectorization.
pub fn vec_op(x: &CMatrix) -> CVector {
    CVector::from_column_slice(x.as_slice())
}

pub fn devec(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_column_slice(d, d, v.as_slice())
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Singular values in descending order.
pub fn singular_values(a: &CMatrix) -> Vec<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Vec::new();
    }
    let mut s = jacobi_svd(a).sigma;
    s.truncate(a.nrows().min(a.ncols()));
    s
}

pub fn spectral_norm(a: &CMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

/// Thin singular value decomposition `A = U Σ V†`, singular values
/// descending. `u` is `m × n`; its columns for zero singular values are zero.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: CMatrix,
    pub sigma: Vec<f64>,
    pub v: CMatrix,
}

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 80;

/// One-sided (Hestenes) Jacobi SVD. Columns of `A` are rotated pairwise
/// until mutually orthogonal; the rotations accumulate into `V`.
///
/// Used instead of `nalgebra`'s bidiagonal SVD, whose left singular vectors
/// are wrong for some complex rank-deficient inputs.
pub fn jacobi_svd(a: &CMatrix) -> Svd {
    let (m, n) = (a.nrows(), a.ncols());
    let mut w = a.clone();
    let mut v = CMatrix::identity(n, n);
    if m == 0 || n == 0 {
        return Svd { u: w, sigma: vec![0.0; n], v };
    }
    let mut norms: Vec<f64> = (0..n).map(|j| w.column(j).norm_squared()).collect();
    // Columns below 1e-30 of the largest are numerically zero; rotating them
    // only amplifies underflow noise.
    let tiny = norms.iter().copied().fold(0.0, f64::max) * 1e-60;
    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let alpha = norms[p];
                let beta = norms[q];
                if alpha <= tiny || beta <= tiny {
                    continue;
                }
                let gamma = w.column(p).dotc(&w.column(q));
                let g = gamma.norm();
                if g <= JACOBI_EPS * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let phase = phase / phase.norm(); // e^{iφ}
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // [p q] ← [p q]·[[c, s], [−s e^{-iφ}, c e^{-iφ}]]
                let e = phase.conj();
                rotate_columns(&mut w, p, q, c, s, e);
                rotate_columns(&mut v, p, q, c, s, e);
                norms[p] = w.column(p).norm_squared();
                norms[q] = w.column(q).norm_squared();
            }
        }
        if !rotated {
            break;
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    let sig: Vec<f64> = norms.iter().map(|x| x.sqrt()).collect();
    order.sort_by(|&i, &j| sig[j].total_cmp(&sig[i]));
    let sigma: Vec<f64> = order.iter().map(|&i| sig[i]).collect();
    let u = CMatrix::from_fn(m, n, |r, c| {
        let j = order[c];
        if sig[j] > 0.0 {
            w[(r, j)] / sig[j]
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let v = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Svd { u, sigma, v }
}

fn rotate_columns(x: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    for r in 0..x.nrows() {
        let xp = x[(r, p)];
        let xq = x[(r, q)] * e;
        x[(r, p)] = xp * c - xq * s;
        x[(r, q)] = xp * s + xq * c;
    }
}

/// Cyclic Jacobi eigensolver for Hermitian matrices (ascending eigenvalues).
pub fn jacobi_eigh(a: &CMatrix) -> Result<HermitianEigen> {
    let n = a.nrows();
    let mut h = hermitian_part(a);
    let mut v = CMatrix::identity(n, n);
    let scale = h.norm().max(f64::MIN_POSITIVE);
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| h[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= JACOBI_EPS * scale {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| h[(i, i)].re.total_cmp(&h[(j, j)].re));
            let values = order.iter().map(|&i| h[(i, i)].re).collect();
            let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
            return Ok(HermitianEigen { values, vectors });
        }
        for p in 0..n.saturating_sub(1) {
            for q in p + 1..n {
                let apq = h[(p, q)];
                let g = apq.norm();
                if g <= JACOBI_EPS * scale * 1e-3 {
                    continue;
                }
                let e = (apq / g).conj();
                let zeta = (h[(q, q)].re - h[(p, p)].re) / (2.0 * g);
                let t = if zeta == 0.0 { 1.0 } else { zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt()) };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                // Q = [[c, s], [−s e^{-iφ}, c e^{-iφ}]] on (p, q); H ← Q†HQ.
                rotate_columns(&mut h, p, q, c, s, e);
                rotate_rows_adjoint(&mut h, p, q, c, s, e);
                rotate_columns(&mut v, p, q, c, s, e);
            }
        }
    }
    Err(Error::NoConvergence("Jacobi eigensolver".into()))
}

fn rotate_rows_adjoint(x: &mut CMatrix, p: usize, q: usize, c: f64, s: f64, e: C64) {
    let ec = e.conj();
    for col in 0..x.ncols() {
        let xp = x[(p, col)];
        let xq = x[(q, col)] * ec;
        x[(p, col)] = xp * c - xq * s;
        x[(q, col)] = xp * s + xq * c;
    }
}

#[derive(Debug, Clone)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors as columns, ordered like `values`.
    pub vectors: CMatrix,
}

/// Eigen-decomposition of a Hermitian matrix. The input is symmetrized as
/// `(A + A†)/2` first; asymmetry beyond `1e-10·max(1, ‖A‖_F)` is rejected.
pub fn hermitian_eig(a: &CMatrix) -> Result<HermitianEigen> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let asym = hermiticity_residual(a);
    if asym > HERMITIAN_TOL * a.norm().max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(HermitianEigen { values: vec![], vectors: CMatrix::zeros(0, 0) });
    }
    let h = hermitian_part(a);
    let Some(eig) = h.clone().try_symmetric_eigen(EIG_EPS, EIG_MAX_ITER) else {
        return jacobi_eigh(&h);
    };
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    // Guard against a silently wrong decomposition.
    let lambda = CMatrix::from_diagonal(&CVector::from_iterator(n, values.iter().map(|&x| re(x))));
    let resid = (&h * &vectors - &vectors * lambda).norm();
    let orth = (vectors.adjoint() * &vectors - CMatrix::identity(n, n)).norm();
    if !(resid <= 1e-12 * h.norm().max(1.0) * (n as f64).sqrt() && orth <= 1e-12 * (n as f64)) {
        return jacobi_eigh(&h);
    }
    Ok(HermitianEigen { values, vectors })
}

pub fn hermitian_eigvals(a: &CMatrix) -> Result<Vec<f64>> {
    Ok(hermitian_eig(a)?.values)
}

/// Eigenvalues of a general square matrix via the complex Schur form.
pub fn eigenvalues_general(a: &CMatrix) -> Result<Vec<C64>> {
    if a.nrows() == 0 {
        return Ok(vec![]);
    }
    let schur = a
        .clone()
        .try_schur(EIG_EPS, EIG_MAX_ITER)
        .ok_or_else(|| Error::NoConvergence("Schur decomposition".into()))?;
    let (q, t) = schur.unpack();
    let resid = (&q * &t * q.adjoint() - a).norm();
    if !(resid <= 1e-9 * a.norm().max(1.0)) {
        return Err(Error::NoConvergence(format!("Schur residual {resid:.3e}")));
    }
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Trace norm of a (numerically) Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm(a: &CMatrix) -> f64 {
    let h = hermitian_part(a);
    match hermitian_eig(&h) {
        Ok(e) => e.values.iter().map(|v| v.abs()).sum(),
        Err(_) => singular_values(a).iter().sum(),
    }
}

pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    trace_norm(&(a - b))
}

// ---------------------------------------------------------------------------
// Matrix exponential

const PADE3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const PADE5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const PADE7: [f64; 8] = [17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0];
const PADE9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA: [(usize, f64); 4] = [
    (3, 1.495585217958292e-2),
    (5, 2.539398330063230e-1),
    (7, 9.504178996162932e-1),
    (9, 2.097847961257068e0),
];
const THETA13: f64 = 5.371920351148152e0;

fn one_norm(a: &CMatrix) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `e^{tA}` by scaling and squaring with a diagonal Padé approximant
/// (degree 3, 5, 7, 9 or 13 picked from the 1-norm).
pub fn matrix_exp(a: &CMatrix, t: f64) -> Result<CMatrix> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::ShapeMismatch {
            expected: "square matrix".into(),
            got: format!("{}x{}", a.nrows(), a.ncols()),
        });
    }
    let at = a * re(t);
    let norm = one_norm(&at);
    if !norm.is_finite() {
        return Err(Error::Overflow("non-finite input to matrix_exp".into()));
    }
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    let eye = CMatrix::identity(n, n);

    for &(m, theta) in &THETA {
        if norm <= theta {
            let coeffs: &[f64] = match m {
                3 => &PADE3,
                5 => &PADE5,
                7 => &PADE7,
                _ => &PADE9,
            };
            let a2 = &at * &at;
            let mut u = &eye * re(coeffs[1]);
            let mut v = &eye * re(coeffs[0]);
            let mut power = eye.clone();
            for k in 1..=m / 2 {
                power = &power * &a2;
                u += &power * re(coeffs[2 * k + 1]);
                v += &power * re(coeffs[2 * k]);
            }
            let u = &at * u;
            return pade_solve(&u, &v).and_then(check_finite);
        }
    }

    let s = if norm > THETA13 { (norm / THETA13).log2().ceil() as i32 } else { 0 };
    let scaled = &at * re(2f64.powi(-s));
    let b = &PADE13;
    let a2 = &scaled * &scaled;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let u_inner = &a6 * (&a6 * re(b[13]) + &a4 * re(b[11]) + &a2 * re(b[9]))
        + &a6 * re(b[7])
        + &a4 * re(b[5])
        + &a2 * re(b[3])
        + &eye * re(b[1]);
    let u = &scaled * u_inner;
    let v = &a6 * (&a6 * re(b[12]) + &a4 * re(b[10]) + &a2 * re(b[8]))
        + &a6 * re(b[6])
        + &a4 * re(b[4])
        + &a2 * re(b[2])
        + &eye * re(b[0]);
    let mut r = pade_solve(&u, &v)?;
    for _ in 0..s {
        r = &r * &r;
    }
    check_finite(r)
}

fn pade_solve(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let p = v + u;
    let q = v - u;
    q.lu()
        .solve(&p)
        .ok_or_else(|| Error::Overflow("singular Padé denominator".into()))
}

fn check_finite(m: CMatrix) -> Result<CMatrix> {
    if m.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(m)
    } else {
        Err(Error::Overflow("matrix exponential entries exceed f64 range".into()))
    }
}

// ---------------------------------------------------------------------------
// Subspaces

/// Orthonormal basis of a subspace of `ℂ^ambient_dim`, stored as columns.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    basis: CMatrix,
}

impl SubspaceBasis {
    pub fn empty(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: CMatrix::zeros(ambient_dim, 0) }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Self { ambient_dim, basis: CMatrix::identity(ambient_dim, ambient_dim) }
    }

    /// Wraps columns that are already orthonormal. Fails if the Gram matrix
    /// deviates from the identity by more than `1e-10`.
    pub fn from_orthonormal(basis: CMatrix) -> Result<Self> {
        let k = basis.ncols();
        let gram = basis.adjoint() * &basis;
        let dev = (gram - CMatrix::identity(k, k)).norm();
        if dev > 1e-10 {
            return Err(Error::ClosedFormMismatch {
                what: "basis is not orthonormal".into(),
                residual: dev,
            });
        }
        Ok(Self { ambient_dim: basis.nrows(), basis })
    }

    /// Orthonormal basis of the column span of `m`; singular values at or
    /// below `tol·max(1, σ_max)` are treated as zero.
    pub fn span_of_columns(m: &CMatrix, tol: f64) -> Self {
        let d = m.nrows();
        if m.ncols() == 0 || d == 0 {
            return Self::empty(d);
        }
        let svd = jacobi_svd(m);
        let smax = svd.sigma.first().copied().unwrap_or(0.0);
        let cut = tol * smax.max(1.0);
        let keep = svd.sigma.iter().take_while(|&&x| x > cut).count();
        let basis = svd.u.columns(0, keep).into_owned();
        Self { ambient_dim: d, basis }
    }

    pub fn from_vectors(ambient_dim: usize, vectors: &[CVector], tol: f64) -> Self {
        if vectors.is_empty() {
            return Self::empty(ambient_dim);
        }
        let m = CMatrix::from_columns(vectors);
        Self::span_of_columns(&m, tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.dim() == 0
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.basis
    }

    pub fn vector(&self, i: usize) -> CVector {
        self.basis.column(i).into_owned()
    }

    pub fn vectors(&self) -> Vec<CVector> {
        (0..self.dim()).map(|i| self.vector(i)).collect()
    }

    /// Orthogonal projector onto the subspace.
    pub fn projector(&self) -> CMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn project(&self, v: &CVector) -> CVector {
        &self.basis * (self.basis.adjoint() * v)
    }

    /// Orthogonal complement in the ambient space.
    pub fn complement(&self) -> Self {
        if self.is_empty() {
            return Self::full(self.ambient_dim);
        }
        null_space(&self.basis.adjoint(), RANK_TOL)
    }

    /// Span of the union of two subspaces.
    pub fn join(&self, other: &Self) -> Result<Self> {
        check_ambient(self, other)?;
        let mut cols = self.vectors();
        cols.extend(other.vectors());
        Ok(Self::from_vectors(self.ambient_dim, &cols, RANK_TOL))
    }

    /// `self ⊖ other`: the part of `self` orthogonal to `other`.
    pub fn minus(&self, other: &Self) -> Result<Self> {
        check_ambient(self, other)?;
        if other.is_empty() || self.is_empty() {
            return Ok(self.clone());
        }
        let residual = &self.basis - other.projector() * &self.basis;
        Ok(Self::span_of_columns(&residual, RANK_TOL))
    }

    /// Image `A·S` of the subspace under a linear map, re-orthonormalized.
    pub fn image(&self, a: &CMatrix) -> Self {
        Self::span_of_columns(&(a * &self.basis), RANK_TOL)
    }

    /// Norm of the component of `v` outside the subspace.
    pub fn leakage(&self, v: &CVector) -> f64 {
        (v - self.project(v)).norm()
    }
}

fn check_ambient(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<()> {
    if a.ambient_dim != b.ambient_dim {
        return Err(Error::AmbientMismatch(a.ambient_dim, b.ambient_dim));
    }
    Ok(())
}

/// Orthonormal basis of `{x : A x ≈ 0}`: right singular vectors whose
/// singular values are at most `rel_tol·σ_max`. A zero matrix has the whole
/// space as its null space.
pub fn null_space(a: &CMatrix, rel_tol: f64) -> SubspaceBasis {
    null_space_with_rank(a, rel_tol).0
}

/// Null space together with the numerical rank from the same SVD and the
/// sorted (descending) singular values.
pub fn null_space_with_rank(a: &CMatrix, rel_tol: f64) -> (SubspaceBasis, usize, Vec<f64>) {
    let n = a.ncols();
    if n == 0 {
        return (SubspaceBasis::empty(0), 0, vec![]);
    }
    let svd = jacobi_svd(a);
    let smax = svd.sigma.first().copied().unwrap_or(0.0);
    let rank = if smax == 0.0 { 0 } else { svd.sigma.iter().take_while(|&&x| x > rel_tol * smax).count() };
    let basis = svd.v.columns(rank, n - rank).into_owned();
    let sorted = svd.sigma;
    (SubspaceBasis { ambient_dim: n, basis }, rank, sorted)
}

/// Principal angles between two subspaces, ascending. Small angles come from
/// the sine route (residual of `B` off `A`), large ones from the cosines of
/// the cross-Gram matrix.
pub fn principal_angles(a: &SubspaceBasis, b: &SubspaceBasis) -> Result<Vec<f64>> {
    check_ambient(a, b)?;
    let k = a.dim().min(b.dim());
    if k == 0 {
        return Ok(vec![]);
    }
    // Put the smaller subspace second so the residual carries the angles.
    let (big, small) = if a.dim() >= b.dim() { (a, b) } else { (b, a) };
    let gram = big.matrix().adjoint() * small.matrix();
    let mut cos = singular_values(&gram);
    cos.truncate(k);
    let residual = small.matrix() - big.projector() * small.matrix();
    let mut sin = singular_values(&residual);
    sin.truncate(k);
    sin.reverse();
    let angles = (0..k)
        .map(|i| {
            let c = cos[i].min(1.0);
            if c * c < 0.5 {
                c.acos()
            } else {
                sin.get(i).copied().unwrap_or(0.0).clamp(0.0, 1.0).asin()
            }
        })
        .collect();
    Ok(angles)
}

/// Largest angle between vectors of `inner` and the subspace `outer`;
/// zero iff `inner ⊆ outer`.
pub fn containment_angle(inner: &SubspaceBasis, outer: &SubspaceBasis) -> Result<f64> {
    check_ambient(inner, outer)?;
    if inner.is_empty() {
        return Ok(0.0);
    }
    if outer.is_empty() {
        return Ok(std::f64::consts::FRAC_PI_2);
    }
    let residual = inner.matrix() - outer.projector() * inner.matrix();
    Ok(spectral_norm(&residual).clamp(0.0, 1.0).asin())
}

/// Whether two subspaces coincide: equal dimension and largest principal
/// angle at most `tol`. The angle is returned as a diagnostic; subspaces of
/// different dimension report `π/2`.
pub fn subspace_equal(a: &SubspaceBasis, b: &SubspaceBasis, tol: f64) -> Result<(bool, f64)> {
    check_ambient(a, b)?;
    if a.dim() != b.dim() {
        return Ok((false, std::f64::consts::FRAC_PI_2));
    }
    let angle = principal_angles(a, b)?.into_iter().fold(0.0, f64::max);
    Ok((angle <= tol, angle))
}

/// Range of a positive semidefinite matrix: eigenvectors whose eigenvalue
/// exceeds `threshold`.
pub fn psd_range(a: &CMatrix, threshold: f64) -> Result<SubspaceBasis> {
    let eig = hermitian_eig(&hermitian_part(a))?;
    let keep: Vec<usize> = (0..eig.values.len()).filter(|&i| eig.values[i] > threshold).collect();
    let d = a.nrows();
    let basis = CMatrix::from_fn(d, keep.len(), |r, c| eig.vectors[(r, keep[c])]);
    Ok(SubspaceBasis { ambient_dim: d, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    fn basis_vec(d: usize, i: usize) -> CVector {
        let mut v = CVector::zeros(d);
        v[i] = re(1.0);
        v
    }

    fn pseudo_random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut s = seed;
        let mut next = move || {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let m = CMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        &m + m.adjoint()
    }

    #[test]
    fn eig_identity_and_diagonal() {
        let e = hermitian_eig(&identity(3)).unwrap();
        assert_eq!(e.values.len(), 3);
        for v in e.values {
            assert!((v - 1.0).abs() < 1e-14);
        }
        let d = CMatrix::from_diagonal(&CVector::from_vec(vec![re(2.0), re(-1.0)]));
        let e = hermitian_eig(&d).unwrap();
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn eig_reconstructs_random_hermitian() {
        let a = pseudo_random_hermitian(9, 7);
        let e = hermitian_eig(&a).unwrap();
        let lambda = CMatrix::from_diagonal(&CVector::from_iterator(9, e.values.iter().map(|&x| re(x))));
        let rebuilt = &e.vectors * lambda * e.vectors.adjoint();
        assert!((rebuilt - &a).norm() < 1e-10);
        let gram = e.vectors.adjoint() * &e.vectors;
        assert!((gram - identity(9)).norm() < 1e-10);
        for i in 0..9 {
            let v = e.vectors.column(i);
            let r = &a * v - v * re(e.values[i]);
            assert!(r.norm() < 1e-9 * a.norm());
        }
    }

    #[test]
    fn jacobi_svd_on_structured_rank_one_input() {
        // Tiny leading entries on top of a rank-one block.
        let mut x = CMatrix::zeros(9, 2);
        x[(0, 0)] = C64::new(3.2e-16, 0.0);
        x[(1, 1)] = C64::new(1.7e-16, -1.1e-16);
        let col = [C64::new(-0.32, 0.32), C64::new(0.64, 0.0), C64::new(-0.32, -0.32)];
        let phase = C64::new(0.3, 0.7);
        for (i, z) in col.iter().enumerate() {
            x[(2 + i, 0)] += *z;
            x[(2 + i, 1)] += *z * phase;
        }
        let svd = jacobi_svd(&x);
        let sig = CMatrix::from_diagonal(&CVector::from_iterator(2, svd.sigma.iter().map(|&s| re(s))));
        assert!((&svd.u * sig * svd.v.adjoint() - &x).norm() < 1e-14);
        let span = SubspaceBasis::span_of_columns(&x, RANK_TOL);
        assert_eq!(span.dim(), 1);
        let expected = CVector::from_iterator(9, (0..9).map(|i| if (2..5).contains(&i) { col[i - 2] } else { re(0.0) }));
        assert!(span.leakage(&expected.normalize()) < 1e-12);
    }

    #[test]
    fn jacobi_svd_matches_random_reconstruction() {
        for (m, n, seed) in [(7, 4, 1), (4, 7, 2), (12, 12, 3)] {
            let a = CMatrix::from_fn(m, n, |i, j| {
                let x = ((i * 31 + j * 17 + seed) as f64).sin();
                C64::new(x, (x * 3.0).cos())
            });
            let svd = jacobi_svd(&a);
            let sig = CMatrix::from_diagonal(&CVector::from_iterator(n, svd.sigma.iter().map(|&s| re(s))));
            assert!((&svd.u * sig * svd.v.adjoint() - &a).norm() < 1e-12 * a.norm());
            let orth = (svd.v.adjoint() * &svd.v - identity(n)).norm();
            assert!(orth < 1e-12, "{m}x{n}: {orth:e} {:?}", svd.sigma);
            assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn jacobi_eigh_matches_reconstruction() {
        let a = pseudo_random_hermitian(8, 21);
        let e = jacobi_eigh(&a).unwrap();
        let lambda = CMatrix::from_diagonal(&CVector::from_iterator(8, e.values.iter().map(|&x| re(x))));
        assert!((&e.vectors * lambda * e.vectors.adjoint() - &a).norm() < 1e-12);
        let reference = hermitian_eig(&a).unwrap();
        for (x, y) in e.values.iter().zip(reference.values.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let mut a = identity(2);
        a[(0, 1)] = re(1.0);
        assert!(matches!(hermitian_eig(&a), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn expm_basic_cases() {
        let z = CMatrix::zeros(3, 3);
        assert!((matrix_exp(&z, 4.0).unwrap() - identity(3)).norm() < 1e-15);

        let a = CMatrix::from_element(1, 1, re(-1.0));
        let e = matrix_exp(&a, 1.0).unwrap();
        assert!((e[(0, 0)].re - (-1f64).exp()).abs() < 1e-15);

        let mut shift = CMatrix::zeros(2, 2);
        shift[(0, 1)] = re(1.0);
        let e = matrix_exp(&shift, 1.0).unwrap();
        assert!((e - (identity(2) + &shift)).norm() < 1e-14);
    }

    #[test]
    fn expm_semigroup_property() {
        let a = pseudo_random_hermitian(6, 3) * C64::new(0.3, 1.1);
        for (s, t) in [(0.1, 0.2), (1.0, 2.5), (3.0, 7.0)] {
            let lhs = matrix_exp(&a, s + t).unwrap();
            let rhs = matrix_exp(&a, s).unwrap() * matrix_exp(&a, t).unwrap();
            assert!((&lhs - rhs).norm() <= 1e-9 * lhs.norm());
        }
    }

    #[test]
    fn expm_matches_eigendecomposition_for_hermitian() {
        let h = pseudo_random_hermitian(5, 11);
        let e = hermitian_eig(&h).unwrap();
        for t in [0.01, 0.7, 5.0] {
            let diag = CVector::from_iterator(5, e.values.iter().map(|&x| re((x * t).exp())));
            let expected = &e.vectors * CMatrix::from_diagonal(&diag) * e.vectors.adjoint();
            let got = matrix_exp(&h, t).unwrap();
            assert!((got - &expected).norm() <= 1e-11 * expected.norm());
        }
    }

    #[test]
    fn expm_overflow() {
        let a = CMatrix::from_element(1, 1, re(1.0));
        assert!(matches!(matrix_exp(&a, 1e6), Err(Error::Overflow(_))));
    }

    #[test]
    fn null_space_extremes() {
        assert_eq!(null_space(&CMatrix::zeros(4, 4), RANK_TOL).dim(), 4);
        assert_eq!(null_space(&identity(4), RANK_TOL).dim(), 0);
        let a = pseudo_random_hermitian(6, 5);
        let (ns, rank, _) = null_space_with_rank(&a, RANK_TOL);
        assert_eq!(ns.dim() + rank, 6);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        // One equation in three unknowns: x0 + x1 = 0.
        let a = CMatrix::from_row_slice(1, 3, &[re(1.0), re(1.0), re(0.0)]);
        let (ns, rank, _) = null_space_with_rank(&a, RANK_TOL);
        assert_eq!(rank, 1);
        assert_eq!(ns.dim(), 2);
        assert!((&a * ns.matrix()).norm() < 1e-14);
    }

    #[test]
    fn subspace_comparisons() {
        let a = SubspaceBasis::from_vectors(3, &[basis_vec(3, 0)], RANK_TOL);
        let b = SubspaceBasis::from_vectors(3, &[basis_vec(3, 1)], RANK_TOL);
        assert_eq!(subspace_equal(&a, &a, 1e-12).unwrap(), (true, 0.0));
        let (eq, angle) = subspace_equal(&a, &b, 1e-12).unwrap();
        assert!(!eq);
        assert!((angle - FRAC_PI_2).abs() < 1e-12);

        let s = 1.0 / 2f64.sqrt();
        let plus = (basis_vec(3, 0) + basis_vec(3, 1)) * re(s);
        let minus = (basis_vec(3, 0) - basis_vec(3, 1)) * re(s);
        let rotated = SubspaceBasis::from_vectors(3, &[plus, minus], RANK_TOL);
        let canon = SubspaceBasis::from_vectors(3, &[basis_vec(3, 0), basis_vec(3, 1)], RANK_TOL);
        let (eq, angle) = subspace_equal(&rotated, &canon, 1e-12).unwrap();
        assert!(eq, "angle {angle}");

        let other = SubspaceBasis::empty(4);
        assert!(matches!(subspace_equal(&a, &other, 1e-12), Err(Error::AmbientMismatch(3, 4))));
    }

    #[test]
    fn tiny_angles_are_resolved() {
        let eps = 1e-11;
        let v = CVector::from_vec(vec![re(1.0), re(eps), re(0.0)]).normalize();
        let a = SubspaceBasis::from_vectors(3, &[v], RANK_TOL);
        let b = SubspaceBasis::from_vectors(3, &[basis_vec(3, 0)], RANK_TOL);
        let angle = principal_angles(&a, &b).unwrap()[0];
        assert!((angle - eps).abs() < 1e-15, "{angle}");
    }

    #[test]
    fn complement_and_minus() {
        let a = SubspaceBasis::from_vectors(4, &[basis_vec(4, 0), basis_vec(4, 2)], RANK_TOL);
        let c = a.complement();
        assert_eq!(c.dim(), 2);
        assert!(containment_angle(&c, &a).unwrap() > 1.5);
        let full = SubspaceBasis::full(4);
        let rest = full.minus(&a).unwrap();
        assert!(subspace_equal(&rest, &c, 1e-12).unwrap().0);
        assert_eq!(a.join(&c).unwrap().dim(), 4);
    }

    #[test]
    fn vec_devec_column_stacking() {
        let x = CMatrix::from_fn(3, 3, |r, c| C64::new(r as f64, c as f64));
        let v = vec_op(&x);
        assert_eq!(v[1], x[(1, 0)]);
        assert_eq!(v[3], x[(0, 1)]);
        assert_eq!(devec(&v, 3), x);
        // vec(AXB) = (Bᵀ ⊗ A) vec(X)
        let a = pseudo_random_hermitian(3, 1) * C64::new(1.0, 0.5);
        let b = pseudo_random_hermitian(3, 2) * C64::new(0.2, -1.0);
        let lhs = vec_op(&(&a * &x * &b));
        let rhs = b.transpose().kronecker(&a) * &v;
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn trace_norm_of_difference() {
        let p = CMatrix::from_diagonal(&CVector::from_vec(vec![re(1.0), re(0.0)]));
        let q = CMatrix::from_diagonal(&CVector::from_vec(vec![re(0.0), re(1.0)]));
        assert!((trace_distance(&p, &q) - 2.0).abs() < 1e-14);
    }
}
