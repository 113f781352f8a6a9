//! Closed-form spectra of invariant states and their normalization constants.

use crate::error::{Error, Result};
use crate::invariants::{decompose_with, support_leakage, Structure, SUPPORT_TOL};
use crate::lindblad::{DensityMatrix, Generator};
use crate::model::{ModelSpec, StateVector};
use crate::numerics::{hermitian_eig, re, CVector};
use crate::transport::TransportOps;

/// Relative threshold for the nonzero eigenpairs of τ.
pub const TAU_EIG_TOL: f64 = 1e-12;
/// Tolerance for multiset comparison of spectra.
pub const SPECTRUM_TOL: f64 = 1e-10;
/// Eigenvalues of ρ at or below this count as zero.
pub const ZERO_EIG_TOL: f64 = 1e-10;

/// One closed-form eigenpair `(c λ_k ‖Z^n u_k‖² e^{Σβ}, Z^n u_k/‖Z^n u_k‖)`.
#[derive(Debug, Clone)]
pub struct SpectralPair {
    pub value: f64,
    /// Transport step n.
    pub level: usize,
    /// Index k of the eigenpair of τ.
    pub tau_index: usize,
    pub vector: StateVector,
}

struct TauChain {
    /// `(k, n, λ_k‖Z^n u_k‖² e^{Σβ}, Z^n u_k)`
    terms: Vec<(usize, usize, f64, CVector)>,
}

fn tau_chain(spec: &ModelSpec, ops: &TransportOps, s: &Structure, tau: &DensityMatrix) -> Result<TauChain> {
    let leak = support_leakage(tau.matrix(), &s.v1_minus_w.projector());
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(leak));
    }
    let eig = hermitian_eig(tau.matrix())?;
    let lmax = eig.values.iter().copied().fold(0.0, f64::max);
    let mut terms = Vec::new();
    let mut k = 0;
    for (i, &lam) in eig.values.iter().enumerate().rev() {
        if lam <= TAU_EIG_TOL * lmax {
            continue;
        }
        let u = eig.vectors.column(i).into_owned();
        for n in 0..spec.n {
            let zu = &ops.powers[n] * &u;
            let nrm2 = zu.norm_squared();
            if nrm2 > 0.0 {
                terms.push((k, n, lam * nrm2 * spec.cumulative_weight(n), zu));
            }
        }
        k += 1;
    }
    Ok(TauChain { terms })
}

/// Closed-form nonzero eigenpairs of the invariant state built from τ.
pub fn invariant_spectrum_from_tau(spec: &ModelSpec, tau: &DensityMatrix) -> Result<Vec<SpectralPair>> {
    let ops = TransportOps::new(spec);
    let s = Structure::with_ops(spec, &ops);
    let chain = tau_chain(spec, &ops, &s, tau)?;
    let c = 1.0 / chain.terms.iter().map(|t| t.2).sum::<f64>();
    Ok(chain
        .terms
        .into_iter()
        .map(|(k, n, w, v)| {
            let nrm = v.norm();
            SpectralPair {
                value: c * w,
                level: n,
                tau_index: k,
                vector: StateVector::labeled(v / re(nrm), format!("Z^{n} u_{k}")),
            }
        })
        .collect())
}

/// `c = (Σ_{k,n} λ_k ‖Z^n u_k‖² e^{Σβ})⁻¹`.
pub fn normalization_constant(spec: &ModelSpec, tau: &DensityMatrix) -> Result<f64> {
    let ops = TransportOps::new(spec);
    let s = Structure::with_ops(spec, &ops);
    let chain = tau_chain(spec, &ops, &s, tau)?;
    Ok(1.0 / chain.terms.iter().map(|t| t.2).sum::<f64>())
}

/// `c_β = (Σ_{n=0}^{N−1} e^{β_0+…+β_n})⁻¹`, valid when `n_2 = … = n_N`.
pub fn c_beta(spec: &ModelSpec) -> Result<f64> {
    spec.require_dh()?;
    Ok(1.0 / (0..spec.n).map(|n| spec.cumulative_weight(n)).sum::<f64>())
}

/// Comparison of the predicted and the directly computed spectrum of an
/// invariant state.
#[derive(Debug, Clone)]
pub struct SpectrumReport {
    /// Predicted eigenvalues (ascending, padded with zeros to `d`).
    pub predicted: Vec<f64>,
    /// Eigenvalues of ρ (ascending).
    pub observed: Vec<f64>,
    pub deviation: f64,
    pub zero_multiplicity: usize,
    /// `dim V⊥ − 1`.
    pub zero_bound: usize,
    pub passed: bool,
}

/// Predicts `σ(ρ) = α·(τ-chain) ∪ β·σ(η) ∪ {λ} ∪ {0}` from the decomposition
/// of ρ and compares with a direct eigensolve. Also checks that zero has
/// multiplicity at least `dim V⊥ − 1`.
pub fn spectrum_decomposition_check(spec: &ModelSpec, rho: &DensityMatrix) -> Result<SpectrumReport> {
    let gen = Generator::new(spec);
    let s = Structure::with_ops(spec, &gen.ops);
    let dec = decompose_with(&gen, &s, rho)?;
    let d = spec.d;

    let mut predicted = Vec::new();
    if let Some(tau) = &dec.tau {
        let chain = tau_chain(spec, &gen.ops, &s, tau)?;
        let c = 1.0 / chain.terms.iter().map(|t| t.2).sum::<f64>();
        predicted.extend(chain.terms.iter().map(|t| dec.alpha * c * t.2));
    }
    if let Some(eta) = &dec.eta {
        predicted.extend(eta.eigenvalues().into_iter().filter(|&x| x > TAU_EIG_TOL).map(|x| dec.beta * x));
    }
    if dec.lambda > 0.0 {
        predicted.push(dec.lambda);
    }
    let observed = rho.eigenvalues();
    let deviation = if predicted.len() > d {
        f64::INFINITY
    } else {
        predicted.resize(d, 0.0);
        predicted.sort_by(f64::total_cmp);
        predicted
            .iter()
            .zip(observed.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    };
    let zero_multiplicity = observed.iter().filter(|x| x.abs() <= ZERO_EIG_TOL).count();
    let zero_bound = (d - s.v.dim()).saturating_sub(1);
    let passed = deviation <= SPECTRUM_TOL && zero_multiplicity >= zero_bound;
    Ok(SpectrumReport { predicted, observed, deviation, zero_multiplicity, zero_bound, passed })
}
