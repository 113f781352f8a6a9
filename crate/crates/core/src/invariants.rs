//! Structural subspaces, construction and decomposition of invariant
//! states, and the numerical steady-state oracle.

use crate::error::{Error, Result};
use crate::lindblad::{DensityMatrix, Generator};
use crate::model::{ModelSpec, StateVector};
use crate::numerics::{
    commutator, devec, hermitian_eig, hermitian_part, identity, null_space, null_space_with_rank, outer,
    psd_range, re, singular_values, vec_op, CMatrix, CVector, SubspaceBasis, RANK_TOL,
};
use crate::transport::TransportOps;

/// Support tolerance for states that must live in a given subspace.
pub const SUPPORT_TOL: f64 = 1e-9;
/// Default generator-residual tolerance for invariance.
pub const INVARIANCE_TOL: f64 = 1e-10;
/// Residual above which the transported sum is reported as not invariant.
pub const TRANSPORT_TOL: f64 = 1e-9;
/// Eigenvalue threshold for the oracle support.
pub const ORACLE_SUPPORT_TOL: f64 = 1e-9;
/// Minimal separation of the zero eigenvalue required by the oracle.
pub const ORACLE_GAP_TOL: f64 = 1e-8;
/// Darkness threshold for `⟨φ_{0_1}, ρφ_{0_1}⟩`.
pub const DARK_TOL: f64 = 1e-12;

/// `W = span{φ_{a_1}}_{a = n_2}^{n_1 − 1}`.
pub fn interaction_free_subspace(spec: &ModelSpec) -> SubspaceBasis {
    let vs: Vec<CVector> = (spec.dims[2]..spec.dims[1])
        .map(|a| spec.entangled_vector(1, a).expect("index in range").entries)
        .collect();
    SubspaceBasis::from_vectors(spec.d, &vs, RANK_TOL)
}

/// The vectors whose orthogonal complement is `V`: `Z^n|0_0⟩`,
/// `Z†^n|0_{N+1}⟩` for 0 ≤ n ≤ N, and `Z†^s φ_{0_{2m+1}}` for
/// 1 ≤ m ≤ (N−1)/2, 1 ≤ s ≤ 2m.
pub fn removed_vectors(spec: &ModelSpec, ops: &TransportOps) -> Vec<CVector> {
    let n = spec.n;
    let ground = spec.canonical_vector(0, 0).expect("level 0").entries;
    let sink = spec.canonical_vector(n + 1, 0).expect("sink").entries;
    let mut out = Vec::new();
    for p in 0..=n {
        out.push(&ops.powers[p] * &ground);
        out.push(ops.powers[p].adjoint() * &sink);
    }
    for m in 1..=(n.saturating_sub(1)) / 2 {
        let phi = spec.entangled_vector(2 * m + 1, 0).expect("level exists").entries;
        for s in 1..=2 * m {
            out.push(ops.powers[s].adjoint() * &phi);
        }
    }
    out
}

/// `V`: orthogonal complement of the span of [`removed_vectors`].
pub fn harmonic_subspace_v(spec: &ModelSpec) -> SubspaceBasis {
    let ops = TransportOps::new(spec);
    harmonic_from(spec, &ops)
}

fn harmonic_from(spec: &ModelSpec, ops: &TransportOps) -> SubspaceBasis {
    SubspaceBasis::from_vectors(spec.d, &removed_vectors(spec, ops), RANK_TOL).complement()
}

/// `V_k = P_k V`, re-orthonormalized, for 1 ≤ k ≤ N.
pub fn v_level(spec: &ModelSpec, k: usize) -> Result<SubspaceBasis> {
    if k == 0 || k > spec.n {
        return Err(Error::IndexOutOfRange(format!("V_{k} needs 1 <= k <= {}", spec.n)));
    }
    let v = harmonic_subspace_v(spec);
    Ok(v.image(&spec.level_projector(k)?))
}

pub fn v1_subspace(spec: &ModelSpec) -> SubspaceBasis {
    v_level(spec, 1).expect("N >= 1")
}

/// `V_1 ⊖ W`.
pub fn v1_minus_w(spec: &ModelSpec) -> SubspaceBasis {
    Structure::new(spec).v1_minus_w
}

/// `R_L = V ⊕ ℂ|0_{N+1}⟩`.
pub fn fast_recurrent_subspace(spec: &ModelSpec) -> SubspaceBasis {
    Structure::new(spec).fast_recurrent
}

/// All structural subspaces of a model.
#[derive(Debug, Clone)]
pub struct Structure {
    pub w: SubspaceBasis,
    pub v: SubspaceBasis,
    /// `V_1 … V_N` (index k − 1).
    pub v_levels: Vec<SubspaceBasis>,
    pub v1_minus_w: SubspaceBasis,
    pub fast_recurrent: SubspaceBasis,
}

impl Structure {
    pub fn new(spec: &ModelSpec) -> Self {
        let ops = TransportOps::new(spec);
        Self::with_ops(spec, &ops)
    }

    pub fn with_ops(spec: &ModelSpec, ops: &TransportOps) -> Self {
        let w = interaction_free_subspace(spec);
        let v = harmonic_from(spec, ops);
        let v_levels: Vec<SubspaceBasis> = (1..=spec.n).map(|k| v.image(&ops.projectors[k])).collect();
        let v1_minus_w = v_levels[0].minus(&w).expect("same ambient");
        let sink = SubspaceBasis::from_vectors(
            spec.d,
            &[spec.canonical_vector(spec.n + 1, 0).expect("sink").entries],
            RANK_TOL,
        );
        let fast_recurrent = v.join(&sink).expect("same ambient");
        Self { w, v, v_levels, v1_minus_w, fast_recurrent }
    }
}

/// Frobenius norm of the part of `x` outside `P x P`.
pub fn support_leakage(x: &CMatrix, p: &CMatrix) -> f64 {
    (x - p * x * p).norm()
}

/// `ρ = c Σ_{n=0}^{N−1} e^{β_0+…+β_n} Z^n τ Z†^n` with `c` fixing the trace.
///
/// The input must be supported in `V_1 ⊖ W`. The result is checked against
/// the generator; a residual above [`TRANSPORT_TOL`] (possible when the
/// dimension hypothesis fails) is reported as `TransportDefect`.
pub fn build_invariant_from_tau(spec: &ModelSpec, tau: &DensityMatrix) -> Result<DensityMatrix> {
    let gen = Generator::new(spec);
    let s = Structure::with_ops(spec, &gen.ops);
    build_with(&gen, &s, tau)
}

pub(crate) fn build_with(gen: &Generator, s: &Structure, tau: &DensityMatrix) -> Result<DensityMatrix> {
    let spec = &gen.spec;
    check_dim(spec, tau.matrix())?;
    let p = s.v1_minus_w.projector();
    let leak = support_leakage(tau.matrix(), &p);
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(leak));
    }
    let raw = transport_sum(spec, &gen.ops, tau.matrix());
    let tr = raw.trace().re;
    let rho = raw / re(tr);
    let residual = gen.residual(&rho)?;
    if residual > TRANSPORT_TOL {
        return Err(Error::TransportDefect(residual));
    }
    DensityMatrix::new(rho)
}

/// `Σ_{n=0}^{N−1} e^{β_0+…+β_n} Z^n X Z†^n` (unnormalized).
pub fn transport_sum(spec: &ModelSpec, ops: &TransportOps, x: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(spec.d, spec.d);
    for n in 0..spec.n {
        let zn = &ops.powers[n];
        out += zn * x * zn.adjoint() * re(spec.cumulative_weight(n));
    }
    out
}

pub(crate) fn check_dim(spec: &ModelSpec, x: &CMatrix) -> Result<()> {
    if x.nrows() != spec.d || x.ncols() != spec.d {
        return Err(Error::ShapeMismatch {
            expected: format!("{0}x{0}", spec.d),
            got: format!("{}x{}", x.nrows(), x.ncols()),
        });
    }
    Ok(())
}

/// Extremal invariant state `Σ e^{Σβ} Z^n|u⟩⟨u|Z†^n`, normalized.
pub fn extremal_invariant_from_vector(spec: &ModelSpec, u: &StateVector) -> Result<DensityMatrix> {
    if u.len() != spec.d {
        return Err(Error::ShapeMismatch { expected: format!("vector of length {}", spec.d), got: u.len().to_string() });
    }
    let norm = u.norm();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    let unit = &u.entries / re(norm);
    let gen = Generator::new(spec);
    let s = Structure::with_ops(spec, &gen.ops);
    let leak = s.v1_minus_w.leakage(&unit);
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(leak));
    }
    build_with(&gen, &s, &DensityMatrix::pure(&unit)?)
}

/// `ρ = α·(transported τ) + β·η + λ·P_{N+1}`.
#[derive(Debug, Clone)]
pub struct InvariantDecomposition {
    pub alpha: f64,
    pub beta: f64,
    pub lambda: f64,
    /// Level-1 state supported in `V_1 ⊖ W` (absent when α = 0).
    pub tau: Option<DensityMatrix>,
    /// State supported in `W` (absent when β = 0).
    pub eta: Option<DensityMatrix>,
    /// `α⁻¹ tr(ρ|Z_1|)` (absent when α = 0).
    pub c: Option<f64>,
    /// `‖ρ − reassembled‖_F`.
    pub residual: f64,
}

/// Weights below this are treated as absent components.
pub const WEIGHT_TOL: f64 = 1e-10;
const DECOMPOSE_INVARIANCE_TOL: f64 = 1e-9;
const RECONSTRUCTION_TOL: f64 = 1e-9;

/// Splits an invariant state into its transported, interaction-free and
/// sink components.
pub fn decompose_invariant(spec: &ModelSpec, rho: &DensityMatrix) -> Result<InvariantDecomposition> {
    let gen = Generator::new(spec);
    let s = Structure::with_ops(spec, &gen.ops);
    decompose_with(&gen, &s, rho)
}

pub(crate) fn decompose_with(gen: &Generator, s: &Structure, rho: &DensityMatrix) -> Result<InvariantDecomposition> {
    let spec = &gen.spec;
    let r = rho.matrix();
    check_dim(spec, r)?;
    let residual = gen.residual(r)?;
    if residual > DECOMPOSE_INVARIANCE_TOL {
        return Err(Error::NotInvariant(residual));
    }
    let sink = spec.offsets[spec.n + 1];
    let lambda = r[(sink, sink)].re;
    let pw = s.w.projector();
    let beta = (r * &pw).trace().re;
    let alpha = (1.0 - beta - lambda).max(0.0);

    let mut rebuilt = &gen.ops.projectors[spec.n + 1] * re(lambda);
    let eta = if beta > WEIGHT_TOL {
        let e = DensityMatrix::with_tolerance(&pw * r * &pw / re(beta), SUPPORT_TOL)?;
        rebuilt += e.matrix() * re(beta);
        Some(e)
    } else {
        None
    };
    let (tau, c) = if alpha > WEIGHT_TOL {
        let pu = s.v1_minus_w.projector();
        let block = &pu * r * &pu;
        let weight = block.trace().re;
        if weight <= 0.0 {
            return Err(Error::ReconstructionFailure(alpha));
        }
        let t = DensityMatrix::with_tolerance(block / re(weight), SUPPORT_TOL)?;
        let transported = build_with(gen, s, &t)?;
        rebuilt += transported.matrix() * re(alpha);
        let c = (r * gen.ops.abs(1)).trace().re / alpha;
        (Some(t), Some(c))
    } else {
        (None, None)
    };
    let recon = (r - rebuilt).norm();
    if recon > RECONSTRUCTION_TOL {
        return Err(Error::ReconstructionFailure(recon));
    }
    Ok(InvariantDecomposition { alpha, beta, lambda, tau, eta, c, residual: recon })
}

/// `‖L(ρ)‖_F ≤ tol`.
pub fn is_invariant(spec: &ModelSpec, rho: &CMatrix, tol: f64) -> bool {
    Generator::new(spec).residual(rho).map(|r| r <= tol).unwrap_or(false)
}

/// `‖ρZ_k − e^{β_k}Z_kρ‖_F` for k = 1..N−1.
pub fn detailed_balance_check(spec: &ModelSpec, rho: &CMatrix) -> Vec<f64> {
    let ops = TransportOps::new(spec);
    (1..spec.n)
        .map(|k| (rho * &ops.zs[k] - &ops.zs[k] * rho * re(spec.beta[k].exp())).norm())
        .collect()
}

/// `‖ρP_{k+1} − e^{β_k}Z_kρZ_k†‖_F` for k = 1..N−1.
pub fn balance_state_residuals(spec: &ModelSpec, ops: &TransportOps, rho: &CMatrix) -> Vec<f64> {
    (1..spec.n)
        .map(|k| {
            let z = &ops.zs[k];
            (rho * &ops.projectors[k + 1] - z * rho * z.adjoint() * re(spec.beta[k].exp())).norm()
        })
        .collect()
}

/// Largest of `‖[ρ, P_k]‖_F` (k = 1..N+1) and `‖[ρ, |Z_k|]‖_F` (k = 1..N−1).
pub fn commutation_residual(spec: &ModelSpec, ops: &TransportOps, rho: &CMatrix) -> f64 {
    let mut worst: f64 = 0.0;
    for k in 1..=spec.n + 1 {
        worst = worst.max(commutator(rho, &ops.projectors[k]).norm());
    }
    for k in 1..spec.n {
        worst = worst.max(commutator(rho, &ops.abs(k)).norm());
    }
    worst
}

/// Largest of `‖ρZ^n|0_0⟩‖` and `‖ρZ†^n|0_{N+1}⟩‖`, n = 0..N.
pub fn kernel_annihilation_residual(spec: &ModelSpec, ops: &TransportOps, rho: &CMatrix) -> f64 {
    let ground = spec.canonical_vector(0, 0).expect("level 0").entries;
    let sink = spec.canonical_vector(spec.n + 1, 0).expect("sink").entries;
    (0..=spec.n)
        .flat_map(|p| {
            [
                (rho * (&ops.powers[p] * &ground)).norm(),
                (rho * (ops.powers[p].adjoint() * &sink)).norm(),
            ]
        })
        .fold(0.0, f64::max)
}

/// `⟨φ_{0_1}, ρφ_{0_1}⟩ ≤ 1e-12`.
pub fn is_dark(spec: &ModelSpec, rho: &CMatrix) -> bool {
    bright_population(spec, rho) <= DARK_TOL
}

pub fn bright_population(spec: &ModelSpec, rho: &CMatrix) -> f64 {
    let phi = spec.entangled_vector(1, 0).expect("level 1").entries;
    (phi.adjoint() * rho * &phi)[(0, 0)].re
}

/// Kernel dimension of the Liouvillian predicted by the invariant-state
/// structure for models with `n_2 = … = n_N` and generic shifts:
/// `(n_1 − n_2)² + 1 + dim(V_1⊖W)²`, plus `2(n_1 − n_2)` coherences between
/// `W` and the sink when `γ_{+,N} = 0`.
pub fn expected_kernel_dim(spec: &ModelSpec) -> Result<usize> {
    spec.require_dh()?;
    let w = spec.dims[1] - spec.dims[2];
    let u = Structure::new(spec).v1_minus_w.dim();
    let coherences = if spec.shift_plus[spec.n] == 0.0 { 2 * w } else { 0 };
    Ok(w * w + 1 + u * u + coherences)
}

/// Output of the numerical steady-state oracle.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub state: DensityMatrix,
    /// Kernel of the Liouvillian (vectorized operators, ambient `d²`).
    pub kernel: SubspaceBasis,
    /// Eigenvectors of `state` with eigenvalue above [`ORACLE_SUPPORT_TOL`].
    pub support: SubspaceBasis,
    /// Smallest nonzero singular value of the Liouvillian.
    pub gap: f64,
}

/// Spectral projector of the Liouvillian onto eigenvalue 0 applied to
/// `I/d`: `P₀ = R (L_f†R)⁻¹ L_f†` with `R`, `L_f` the right and left kernels.
pub fn numeric_steady_state(spec: &ModelSpec) -> Result<SteadyState> {
    let gen = Generator::new(spec);
    let l = gen.liouvillian().matrix;
    let d = spec.d;
    let (right, rank, sigma) = null_space_with_rank(&l, RANK_TOL);
    let left = null_space(&l.adjoint(), RANK_TOL);
    let gap = if rank > 0 { sigma[rank - 1] } else { 0.0 };
    if right.dim() == 0 {
        return Err(Error::ProjectorFailure("trivial kernel".into()));
    }
    if right.dim() != left.dim() {
        return Err(Error::ProjectorFailure(format!(
            "left/right kernel dimensions differ ({} vs {}), gap {gap:.3e}",
            left.dim(),
            right.dim()
        )));
    }
    if gap < ORACLE_GAP_TOL {
        return Err(Error::ProjectorFailure(format!("zero not separated: gap {gap:.3e}")));
    }
    let pairing = left.matrix().adjoint() * right.matrix();
    let cond = singular_values(&pairing).last().copied().unwrap_or(0.0);
    if cond < ORACLE_GAP_TOL {
        return Err(Error::ProjectorFailure(format!(
            "kernel pairing singular (smallest singular value {cond:.3e}, gap {gap:.3e})"
        )));
    }
    let start = vec_op(&(identity(d) / re(d as f64)));
    let coeffs = pairing
        .lu()
        .solve(&(left.matrix().adjoint() * start))
        .ok_or_else(|| Error::ProjectorFailure("kernel pairing not invertible".into()))?;
    let projected = devec(&(right.matrix() * coeffs), d);

    let eig = hermitian_eig(&hermitian_part(&projected))?;
    let mut clipped = CMatrix::zeros(d, d);
    for (i, &lam) in eig.values.iter().enumerate() {
        if lam >= -1e-12 {
            let v = eig.vectors.column(i).into_owned();
            clipped += outer(&v, &v) * re(lam);
        }
    }
    let state = DensityMatrix::normalized(&hermitian_part(&clipped))?;
    let support = psd_range(state.matrix(), ORACLE_SUPPORT_TOL)?;
    Ok(SteadyState { state, kernel: right, support, gap })
}

/// Frobenius-orthonormal basis (as vectorized operators) of
/// `{X : [X, Z_k] = [X, Z_k†] = 0, k = 0..N}`.
pub fn commutant_c0(spec: &ModelSpec) -> SubspaceBasis {
    let ops = TransportOps::new(spec);
    let d = spec.d;
    let eye = identity(d);
    let blocks: Vec<CMatrix> = ops
        .zs
        .iter()
        .flat_map(|z| {
            let zd = z.adjoint();
            // vec([X, A]) = (Aᵀ⊗I − I⊗A) vec X
            [
                z.transpose().kronecker(&eye) - eye.kronecker(z),
                zd.transpose().kronecker(&eye) - eye.kronecker(&zd),
            ]
        })
        .collect();
    let rows = blocks.len() * d * d;
    let mut stacked = CMatrix::zeros(rows, d * d);
    for (i, b) in blocks.iter().enumerate() {
        stacked.view_mut((i * d * d, 0), (d * d, d * d)).copy_from(b);
    }
    null_space(&stacked, RANK_TOL)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawModel;
    use crate::numerics::{principal_angles, subspace_equal};

    fn chain(dims: &[usize], gm: Vec<f64>, gp: Vec<f64>) -> ModelSpec {
        let n = dims.len() - 2;
        RawModel {
            format: None,
            n: Some(n),
            dims: Some(dims.to_vec()),
            energies: Some((0..n + 2).map(|k| ((n + 1 - k) * (n + 2 - k)) as f64 / 2.0).collect()),
            gamma_minus: Some(gm),
            gamma_plus: Some(gp),
            shift_minus: Some(vec![0.1; n + 1]),
            shift_plus: Some(vec![0.1; n + 1]),
        }
        .validate()
        .unwrap()
    }

    fn m1() -> ModelSpec {
        chain(&[1, 4, 3, 1], vec![1.0; 3], vec![0.5, 0.5, 0.0])
    }

    fn kv(n1: usize) -> ModelSpec {
        chain(&[1, n1, 1], vec![1.0; 2], vec![0.5, 0.0])
    }

    fn u_m1(m: &ModelSpec) -> CVector {
        let a = m.entangled_vector(1, 1).unwrap().entries;
        let b = m.entangled_vector(1, 2).unwrap().entries;
        (a - b) * re(1.0 / 2f64.sqrt())
    }

    #[test]
    fn w_dimensions() {
        assert_eq!(interaction_free_subspace(&m1()).dim(), 1);
        assert_eq!(interaction_free_subspace(&kv(3)).dim(), 2);
        assert_eq!(interaction_free_subspace(&chain(&[1, 3, 3, 1], vec![1.0; 3], vec![0.5, 0.5, 0.0])).dim(), 0);
    }

    #[test]
    fn kv_subspaces() {
        let m = kv(3);
        let s = Structure::new(&m);
        assert!(subspace_equal(&s.v, &s.w, 1e-10).unwrap().0);
        assert_eq!(s.fast_recurrent.dim(), 3);
        let m = kv(1);
        let s = Structure::new(&m);
        assert_eq!(s.v.dim(), 0);
        assert_eq!(s.fast_recurrent.dim(), 1);
    }

    #[test]
    fn m1_subspaces_match_generators() {
        let m = m1();
        let s = Structure::new(&m);
        assert_eq!(s.v.dim(), 3);
        assert_eq!(s.fast_recurrent.dim(), 4);
        assert_eq!(s.v_levels[0].dim(), 2);
        assert_eq!(s.v_levels[1].dim(), 1);
        let u = u_m1(&m);
        let u2 = (m.entangled_vector(2, 1).unwrap().entries - m.entangled_vector(2, 2).unwrap().entries)
            * re(1.0 / 2f64.sqrt());
        let generated = SubspaceBasis::from_vectors(9, &[u.clone(), u2, m.entangled_vector(1, 3).unwrap().entries], RANK_TOL);
        assert!(subspace_equal(&s.v, &generated, 1e-10).unwrap().0);
        let w_in_v1 = principal_angles(&s.w, &s.v_levels[0]).unwrap();
        assert!(w_in_v1.iter().all(|&a| a < 1e-12));
        assert!(s.v1_minus_w.leakage(&u) < 1e-12);
        // Z maps V_1 ⊖ W into V_2.
        let ops = TransportOps::new(&m);
        let image = s.v1_minus_w.image(&ops.z);
        assert!(subspace_equal(&image, &s.v_levels[1], 1e-10).unwrap().0);
    }

    #[test]
    fn extremal_state_on_m1() {
        let m = m1();
        let u = u_m1(&m);
        let rho = extremal_invariant_from_vector(&m, &StateVector::new(u.clone())).unwrap();
        let ev: Vec<f64> = rho.eigenvalues().into_iter().filter(|&x| x > 1e-12).collect();
        assert_eq!(ev.len(), 2);
        assert!((ev[0] - 1.0 / 3.0).abs() < 1e-12 && (ev[1] - 2.0 / 3.0).abs() < 1e-12);
        let gen = Generator::new(&m);
        assert!(gen.residual(rho.matrix()).unwrap() < 1e-12);
        assert!((rho.matrix() * &u - &u * re(1.0 / 3.0)).norm() < 1e-12);
        let tau = DensityMatrix::pure(&u).unwrap();
        let built = build_invariant_from_tau(&m, &tau).unwrap();
        assert!((built.matrix() - rho.matrix()).norm() < 1e-14);
        for r in detailed_balance_check(&m, rho.matrix()) {
            assert!(r < 1e-10);
        }
        assert!(is_dark(&m, rho.matrix()));
    }

    #[test]
    fn support_and_zero_errors() {
        let m = m1();
        let bright = m.entangled_vector(1, 0).unwrap();
        assert!(matches!(extremal_invariant_from_vector(&m, &bright), Err(Error::SupportViolation(_))));
        let zero = StateVector::new(CVector::zeros(9));
        assert!(matches!(extremal_invariant_from_vector(&m, &zero), Err(Error::ZeroVector)));
        let w = m.entangled_vector(1, 3).unwrap();
        assert!(matches!(extremal_invariant_from_vector(&m, &w), Err(Error::SupportViolation(_))));
    }

    #[test]
    fn decompositions() {
        let m = m1();
        let sink = m.level_projector(3).unwrap();
        let d = decompose_invariant(&m, &DensityMatrix::new(sink.clone()).unwrap()).unwrap();
        assert_eq!((d.alpha, d.beta, d.lambda), (0.0, 0.0, 1.0));
        let w = m.entangled_vector(1, 3).unwrap().entries;
        let pw = DensityMatrix::pure(&w).unwrap();
        let d = decompose_invariant(&m, &pw).unwrap();
        assert!(d.alpha.abs() < 1e-12 && (d.beta - 1.0).abs() < 1e-12 && d.lambda.abs() < 1e-12);
        assert!((d.eta.unwrap().matrix() - pw.matrix()).norm() < 1e-12);

        let u = u_m1(&m);
        let ext = extremal_invariant_from_vector(&m, &StateVector::new(u.clone())).unwrap();
        let mix = DensityMatrix::new((ext.matrix() + &sink) * re(0.5)).unwrap();
        let d = decompose_invariant(&m, &mix).unwrap();
        assert!((d.alpha - 0.5).abs() < 1e-12 && d.beta.abs() < 1e-12 && (d.lambda - 0.5).abs() < 1e-12);
        let tau = d.tau.unwrap();
        assert!((tau.matrix() - outer(&u, &u)).norm() < 1e-10);
        assert!((d.c.unwrap() - 1.0 / 3.0).abs() < 1e-12);

        let bright = DensityMatrix::pure(&m.entangled_vector(1, 0).unwrap().entries).unwrap();
        assert!(matches!(decompose_invariant(&m, &bright), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn invariance_predicates() {
        let m = m1();
        let mixed = DensityMatrix::maximally_mixed(9);
        assert!(!is_invariant(&m, mixed.matrix(), INVARIANCE_TOL));
        assert!(Generator::new(&m).residual(mixed.matrix()).unwrap() > 1e-3);
        let phi = m.entangled_vector(1, 0).unwrap().entries;
        assert!(!is_invariant(&m, &outer(&phi, &phi), INVARIANCE_TOL));
        assert!(!is_dark(&m, &outer(&phi, &phi)));
        assert!(is_dark(&m, &m.level_projector(3).unwrap()));
    }

    #[test]
    fn oracle_on_m1_and_kv() {
        let m = m1();
        let ss = numeric_steady_state(&m).unwrap();
        assert_eq!(ss.support.dim(), 4);
        assert_eq!(ss.kernel.dim(), expected_kernel_dim(&m).unwrap());
        let s = Structure::new(&m);
        let (eq, angle) = subspace_equal(&ss.support, &s.fast_recurrent, 1e-7).unwrap();
        assert!(eq, "angle {angle}");
        assert!(Generator::new(&m).residual(ss.state.matrix()).unwrap() < 1e-9);
        assert!(is_dark(&m, ss.state.matrix()));

        let k1 = kv(1);
        let ss = numeric_steady_state(&k1).unwrap();
        assert_eq!(ss.support.dim(), 1);
        assert!((ss.state.matrix() - k1.level_projector(2).unwrap()).norm() < 1e-10);
    }

    #[test]
    fn commutant_elements_are_fixed() {
        let m = kv(3);
        let c0 = commutant_c0(&m);
        assert!(c0.dim() >= 5);
        let gen = Generator::new(&m);
        let eye = vec_op(&identity(m.d));
        assert!(c0.leakage(&eye) < 1e-10);
        for x in c0.vectors() {
            let xm = devec(&x, m.d);
            assert!(gen.apply_dual(&xm).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn off_dh_transport_defect_is_reported() {
        let m = chain(&[1, 5, 5, 3, 1], vec![1.0; 4], vec![0.5, 0.5, 0.5, 0.0]);
        let s = Structure::new(&m);
        assert!(s.v1_minus_w.dim() > 0);
        let u = s
            .v1_minus_w
            .vectors()
            .iter()
            .enumerate()
            .fold(CVector::zeros(m.d), |acc, (i, v)| acc + v * crate::numerics::C64::new(1.0, 0.3 * i as f64));
        match build_invariant_from_tau(&m, &DensityMatrix::pure(&u).unwrap()) {
            Err(Error::TransportDefect(r)) => assert!(r > TRANSPORT_TOL),
            other => panic!("expected TransportDefect, got {other:?}"),
        }
    }
}
