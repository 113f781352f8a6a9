//! The GKSL generator, its dual, and their vectorized matrix forms.
//!
//! Vectorization is column stacking: the map `X ↦ AXB` is represented by
//! `Bᵀ ⊗ A` acting on `vec X`.

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::numerics::{
    commutator, devec, hermitian_eig, hermitian_part, hermiticity_residual, identity, outer, re, vec_op,
    CMatrix, CVector, C64,
};
use crate::transport::TransportOps;

/// Tolerance used when checking the defining properties of a state.
pub const STATE_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    matrix: CMatrix,
}

impl DensityMatrix {
    /// Accepts `m` if it is Hermitian, PSD and of unit trace within
    /// [`STATE_TOL`]; the stored matrix is the Hermitian part of `m`.
    pub fn new(m: CMatrix) -> Result<Self> {
        Self::with_tolerance(m, STATE_TOL)
    }

    pub fn with_tolerance(m: CMatrix, tol: f64) -> Result<Self> {
        if m.nrows() != m.ncols() || m.nrows() == 0 {
            return Err(Error::ShapeMismatch {
                expected: "non-empty square matrix".into(),
                got: format!("{}x{}", m.nrows(), m.ncols()),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NotAState("non-finite entries".into()));
        }
        let asym = hermiticity_residual(&m);
        if asym > tol {
            return Err(Error::NotAState(format!("not Hermitian (residual {asym:.3e})")));
        }
        let h = hermitian_part(&m);
        let tr = h.trace().re;
        if (tr - 1.0).abs() > tol {
            return Err(Error::NotAState(format!("trace {tr} != 1")));
        }
        let min = hermitian_eig(&h)?.values.first().copied().unwrap_or(0.0);
        if min < -tol {
            return Err(Error::NotAState(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(Self { matrix: h })
    }

    /// Projects an approximately positive matrix onto the state space:
    /// symmetrizes, clips eigenvalues below zero and renormalizes the trace.
    pub fn from_psd_clipped(m: &CMatrix) -> Result<Self> {
        let eig = hermitian_eig(&hermitian_part(m))?;
        let d = m.nrows();
        let mut out = CMatrix::zeros(d, d);
        for (i, &lam) in eig.values.iter().enumerate() {
            if lam > 0.0 {
                let v = eig.vectors.column(i);
                out += v * v.adjoint() * re(lam);
            }
        }
        let tr = out.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotAState("no positive part to normalize".into()));
        }
        Ok(Self { matrix: out / re(tr) })
    }

    /// `|v⟩⟨v| / ‖v‖²`.
    pub fn pure(v: &CVector) -> Result<Self> {
        let n = v.norm();
        if n == 0.0 {
            return Err(Error::ZeroVector);
        }
        let u = v / re(n);
        Ok(Self { matrix: outer(&u, &u) })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { matrix: identity(d) / re(d as f64) }
    }

    /// Normalized `P/tr P` for a nonzero projector-like positive matrix.
    pub fn normalized(m: &CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::NotAState(format!("trace {tr} is not positive")));
        }
        Self::new(m / re(tr))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        hermitian_eig(&self.matrix).map(|e| e.values).unwrap_or_default()
    }
}

/// A linear map on `d × d` matrices stored as its `d² × d²` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    pub dim: usize,
    pub matrix: CMatrix,
}

impl Superoperator {
    pub fn apply(&self, x: &CMatrix) -> Result<CMatrix> {
        check_shape(self.dim, x)?;
        Ok(devec(&(&self.matrix * vec_op(x)), self.dim))
    }

    /// Superoperator of `X ↦ AXB`.
    pub fn sandwich(a: &CMatrix, b: &CMatrix) -> Self {
        Self { dim: a.nrows(), matrix: b.transpose().kronecker(a) }
    }
}

fn check_shape(d: usize, x: &CMatrix) -> Result<()> {
    if x.nrows() != d || x.ncols() != d {
        return Err(Error::ShapeMismatch {
            expected: format!("{d}x{d}"),
            got: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(())
}

/// `L_{−,k} = √Γ_{−,k} Z_k` and `L_{+,k} = √Γ_{+,k} Z_k†`, labelled
/// `"-,k"` and `"+,k"`, for k = 0..N. `L_{+,N}` is the zero matrix.
pub fn kraus_operators(spec: &ModelSpec) -> Vec<(String, CMatrix)> {
    let ops = TransportOps::new(spec);
    let mut out = Vec::with_capacity(2 * (spec.n + 1));
    for k in 0..=spec.n {
        out.push((format!("-,{k}"), &ops.zs[k] * re(spec.gamma_minus[k].sqrt())));
        out.push((format!("+,{k}"), ops.zs[k].adjoint() * re(spec.gamma_plus[k].sqrt())));
    }
    out
}

/// `H_eff = Σ_k γ_{−,k} Z_k†Z_k − γ_{+,k} Z_kZ_k†`.
pub fn effective_hamiltonian(spec: &ModelSpec) -> CMatrix {
    let ops = TransportOps::new(spec);
    effective_hamiltonian_from(spec, &ops)
}

fn effective_hamiltonian_from(spec: &ModelSpec, ops: &TransportOps) -> CMatrix {
    let mut h = CMatrix::zeros(spec.d, spec.d);
    for k in 0..=spec.n {
        let z = &ops.zs[k];
        h += z.adjoint() * z * re(spec.shift_minus[k]) - z * z.adjoint() * re(spec.shift_plus[k]);
    }
    h
}

/// The generator in the form `L(ρ) = Gρ + ρG† + Σ r_j J_j ρ J_j†`, where
///
/// `G = n_1η̄_{−,0}P_0 + n_1η_{+,0}P_{φ_{0_1}} + Σ_{j=1}^N (η̄_{−,j}|Z_j| + η_{+,j}P_{j+1})`.
#[derive(Debug, Clone)]
pub struct Generator {
    pub spec: ModelSpec,
    pub ops: TransportOps,
    /// Left multiplier `G`.
    pub g: CMatrix,
    /// Jump operators with their rates.
    pub jumps: Vec<(f64, CMatrix)>,
    pub h_eff: CMatrix,
    /// `P_{φ_{0_1}}`.
    pub bright: CMatrix,
}

impl Generator {
    pub fn new(spec: &ModelSpec) -> Self {
        let ops = TransportOps::new(spec);
        let n1 = spec.dims[1] as f64;
        let phi = spec.entangled_vector(1, 0).expect("level 1 exists").entries;
        let bright = outer(&phi, &phi);

        let mut g = &ops.projectors[0] * (spec.eta_minus[0].conj() * n1) + &bright * (spec.eta_plus[0] * n1);
        for j in 1..=spec.n {
            g += ops.abs(j) * spec.eta_minus[j].conj() + &ops.projectors[j + 1] * spec.eta_plus[j];
        }

        let mut jumps = Vec::new();
        for k in 0..=spec.n {
            jumps.push((spec.gamma_minus[k], ops.zs[k].clone()));
            if spec.gamma_plus[k] != 0.0 {
                jumps.push((spec.gamma_plus[k], ops.zs[k].adjoint()));
            }
        }
        let h_eff = effective_hamiltonian_from(spec, &ops);
        Self { spec: spec.clone(), ops, g, jumps, h_eff, bright }
    }

    pub fn dim(&self) -> usize {
        self.spec.d
    }

    /// `L(ρ)` in the rewritten form.
    pub fn apply(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_shape(self.dim(), rho)?;
        let mut out = &self.g * rho + rho * self.g.adjoint();
        for (r, j) in &self.jumps {
            out += j * rho * j.adjoint() * re(*r);
        }
        Ok(out)
    }

    /// `L(ρ)` assembled directly from the Kraus operators and `H_eff`:
    /// `−i[H_eff, ρ] + Σ (LρL† − ½{L†L, ρ})`.
    pub fn apply_raw(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_shape(self.dim(), rho)?;
        let mut out = commutator(&self.h_eff, rho) * C64::new(0.0, -1.0);
        for (_, l) in kraus_operators(&self.spec) {
            let ll = l.adjoint() * &l;
            out += &l * rho * l.adjoint() - (&ll * rho + rho * &ll) * re(0.5);
        }
        Ok(out)
    }

    /// Heisenberg-picture generator `L*(x) = G†x + xG + Σ r_j J_j† x J_j`.
    pub fn apply_dual(&self, x: &CMatrix) -> Result<CMatrix> {
        check_shape(self.dim(), x)?;
        let mut out = self.g.adjoint() * x + x * &self.g;
        for (r, j) in &self.jumps {
            out += j.adjoint() * x * j * re(*r);
        }
        Ok(out)
    }

    /// `‖L(ρ)‖_F`.
    pub fn residual(&self, rho: &CMatrix) -> Result<f64> {
        Ok(self.apply(rho)?.norm())
    }

    /// Matrix of `L` on column-stacked operators:
    /// `I⊗G + Ḡ⊗I + Σ r (J̄⊗J)`.
    pub fn liouvillian(&self) -> Superoperator {
        let d = self.dim();
        let eye = identity(d);
        let mut m = eye.kronecker(&self.g) + self.g.conjugate().kronecker(&eye);
        for (r, j) in &self.jumps {
            m += j.conjugate().kronecker(j) * re(*r);
        }
        Superoperator { dim: d, matrix: m }
    }

    /// Matrix of `L*`: `I⊗G† + Gᵀ⊗I + Σ r (Jᵀ⊗J†)`.
    pub fn dual_liouvillian(&self) -> Superoperator {
        let d = self.dim();
        let eye = identity(d);
        let mut m = eye.kronecker(&self.g.adjoint()) + self.g.transpose().kronecker(&eye);
        for (r, j) in &self.jumps {
            m += j.transpose().kronecker(&j.adjoint()) * re(*r);
        }
        Superoperator { dim: d, matrix: m }
    }

    /// `φ(ρ) = n_1(Γ_{+,0} PρP + η_{+,0} Pρ + η̄_{+,0} ρP)` with `P = P_{φ_{0_1}}`.
    pub fn phi_map(&self, rho: &CMatrix) -> Result<CMatrix> {
        check_shape(self.dim(), rho)?;
        let p = &self.bright;
        let eta = self.spec.eta_plus[0];
        let n1 = self.spec.dims[1] as f64;
        Ok((p * rho * p * re(self.spec.gamma_plus[0]) + p * rho * eta + rho * p * eta.conj()) * re(n1))
    }

    /// `δ_H^n(X)` with `δ_H(X) = [H_eff, X]`.
    pub fn iterated_commutator(&self, x: &CMatrix, n: usize) -> Result<CMatrix> {
        check_shape(self.dim(), x)?;
        let mut out = x.clone();
        for _ in 0..n {
            out = commutator(&self.h_eff, &out);
        }
        Ok(out)
    }
}

pub fn apply_generator(spec: &ModelSpec, rho: &CMatrix) -> Result<CMatrix> {
    Generator::new(spec).apply(rho)
}

pub fn apply_dual(spec: &ModelSpec, x: &CMatrix) -> Result<CMatrix> {
    Generator::new(spec).apply_dual(x)
}

pub fn liouvillian_matrix(spec: &ModelSpec) -> Superoperator {
    Generator::new(spec).liouvillian()
}

pub fn phi_map(spec: &ModelSpec, rho: &CMatrix) -> Result<CMatrix> {
    Generator::new(spec).phi_map(rho)
}

pub fn iterated_commutator(spec: &ModelSpec, x: &CMatrix, n: usize) -> Result<CMatrix> {
    Generator::new(spec).iterated_commutator(x, n)
}

/// Choi matrix `Σ_{ij} |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)` of a superoperator.
pub fn choi_matrix(s: &Superoperator) -> CMatrix {
    let d = s.dim;
    let mut c = CMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            // vec(|i⟩⟨j|) is the basis vector i + j·d.
            let col = s.matrix.column(i + j * d);
            for a in 0..d {
                for b in 0..d {
                    c[(i * d + a, j * d + b)] = col[a + b * d];
                }
            }
        }
    }
    c
}
