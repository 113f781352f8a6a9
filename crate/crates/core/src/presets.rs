//! Ready-made chain models: the one-level (KV) and two-level (AVK) models,
//! the reference models used in tests, and the closed-form AVK limits.

use crate::error::{Error, Result};
use crate::invariants::{Structure, SUPPORT_TOL};
use crate::lindblad::DensityMatrix;
use crate::model::{ModelSpec, RawModel, StateVector};
use crate::numerics::{outer, re, CMatrix};
use crate::transport::TransportOps;

/// Jump rates `Γ_{−,k}`, `Γ_{+,k}` for k = 0..N.
#[derive(Debug, Clone, PartialEq)]
pub struct Rates {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

impl Rates {
    /// `Γ_− = 1`, `Γ_+ = 0.5` (and `Γ_{+,N} = 0`), so every `e^{β_k} = 2`.
    pub fn standard(n: usize) -> Self {
        Self::with_ratio(n, 2.0)
    }

    /// `Γ_− = 1`, `Γ_+ = 1/ratio` (and `Γ_{+,N} = 0`).
    pub fn with_ratio(n: usize, ratio: f64) -> Self {
        let mut plus = vec![1.0 / ratio; n + 1];
        plus[n] = 0.0;
        Self { minus: vec![1.0; n + 1], plus }
    }
}

/// Hamiltonian shifts `γ_{−,k}`, `γ_{+,k}` for k = 0..N.
#[derive(Debug, Clone, PartialEq)]
pub struct Shifts {
    pub minus: Vec<f64>,
    pub plus: Vec<f64>,
}

impl Shifts {
    pub fn uniform(n: usize, value: f64) -> Self {
        Self { minus: vec![value; n + 1], plus: vec![value; n + 1] }
    }

    /// All shifts 0.1.
    pub fn standard(n: usize) -> Self {
        Self::uniform(n, 0.1)
    }
}

/// Energies with gaps `(N+1, N, …, 1)` ending at 0, so the Bohr
/// frequencies are distinct. For N = 2 this is `(6, 3, 1, 0)`.
pub fn preset_energies(n: usize) -> Vec<f64> {
    (0..n + 2).map(|k| ((n + 1 - k) * (n + 2 - k)) as f64 / 2.0).collect()
}

/// Chain model with the given inner dimensions `(n_1, …, n_N)` and the
/// preset energies.
pub fn chain_model(inner: &[usize], rates: &Rates, shifts: &Shifts) -> Result<ModelSpec> {
    let n = inner.len();
    let mut dims = vec![1];
    dims.extend_from_slice(inner);
    dims.push(1);
    RawModel {
        format: Some(1),
        n: Some(n),
        dims: Some(dims),
        energies: Some(preset_energies(n)),
        gamma_minus: Some(rates.minus.clone()),
        gamma_plus: Some(rates.plus.clone()),
        shift_minus: Some(shifts.minus.clone()),
        shift_plus: Some(shifts.plus.clone()),
    }
    .validate()
}

/// One-level model, dims `(1, n_1, 1)`.
pub fn kv_model(n1: usize, rates: &Rates, shifts: &Shifts) -> Result<ModelSpec> {
    chain_model(&[n1], rates, shifts)
}

/// Two-level model, dims `(1, n_1, n_2, 1)`.
pub fn avk_model(n1: usize, n2: usize, rates: &Rates, shifts: &Shifts) -> Result<ModelSpec> {
    chain_model(&[n1, n2], rates, shifts)
}

/// Reference model M1: dims `(1,4,3,1)`, energies `(6,3,1,0)`, standard rates.
pub fn m1() -> ModelSpec {
    avk_model(4, 3, &Rates::standard(2), &Shifts::standard(2)).expect("valid preset")
}

/// Three-level model with dims `(1,4,3,3,1)` and standard rates.
pub fn n3_model() -> ModelSpec {
    chain_model(&[4, 3, 3], &Rates::standard(3), &Shifts::standard(3)).expect("valid preset")
}

/// Resolves a preset by name: `m1`, `n3`, `kv` (needs `n1`), `avk` (needs
/// `n1`, `n2`), with standard rates and shifts.
pub fn by_name(name: &str, n1: Option<usize>, n2: Option<usize>) -> Result<ModelSpec> {
    let need = |v: Option<usize>, what: &str| {
        v.ok_or_else(|| Error::InvalidArgument(format!("preset {name} needs --{what}")))
    };
    match name {
        "m1" => Ok(m1()),
        "n3" => Ok(n3_model()),
        "kv" => kv_model(need(n1, "n1")?, &Rates::standard(1), &Shifts::standard(1)),
        "avk" => avk_model(need(n1, "n1")?, need(n2, "n2")?, &Rates::standard(2), &Shifts::standard(2)),
        other => Err(Error::InvalidArgument(format!("unknown preset {other:?} (expected m1, n3, kv, avk)"))),
    }
}

/// Spanning vectors `φ_{a_1} − φ_{(a+1)_1}` and `φ_{a_2} − φ_{(a+1)_2}`,
/// a = 1..=n_2−2, of `V ⊖ W` for a two-level model (not orthonormalized).
pub fn avk_v_generators(spec: &ModelSpec) -> Result<Vec<crate::numerics::CVector>> {
    if spec.n != 2 {
        return Err(Error::InvalidArgument(format!("two-level model expected, got N = {}", spec.n)));
    }
    let n2 = spec.dims[2];
    let mut out = Vec::new();
    for k in 1..=2 {
        for a in 1..n2.saturating_sub(1) {
            out.push(spec.entangled_vector(k, a)?.entries - spec.entangled_vector(k, a + 1)?.entries);
        }
    }
    Ok(out)
}

/// Which closed-form limit display to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AvkVariant {
    /// Initial state `|u_1⟩⟨u_1|` with `u_1` on level 1.
    Level1,
    /// Initial state `|u_2⟩⟨u_2|` with `u_2` on level 2.
    Level2,
}

const NORM_TOL: f64 = 1e-10;

/// Closed-form long-time limit of the pure state `|u⟩⟨u|/‖u‖²` for the
/// two-level model, for `u` in `V_1 ⊖ W` (level 1) or `V_2` (level 2) with
/// `‖u‖² = (1+e^{β_1})⁻¹`:
///
/// * level 1: `|u⟩⟨u| + e^{β_1} Z_1|u⟩⟨u|Z_1†`
/// * level 2: `e^{β_1}|u⟩⟨u| + Z_1†|u⟩⟨u|Z_1`
pub fn avk_limit_formulas(spec: &ModelSpec, variant: AvkVariant, u: &StateVector) -> Result<DensityMatrix> {
    if spec.n != 2 {
        return Err(Error::InvalidArgument(format!("two-level model expected, got N = {}", spec.n)));
    }
    if u.len() != spec.d {
        return Err(Error::ShapeMismatch { expected: format!("vector of length {}", spec.d), got: u.len().to_string() });
    }
    let ops = TransportOps::new(spec);
    let s = Structure::with_ops(spec, &ops);
    let e1 = spec.beta[1].exp();
    let v = &u.entries;
    let leak = match variant {
        AvkVariant::Level1 => s.v1_minus_w.leakage(v),
        AvkVariant::Level2 => s.v_levels[1].leakage(v),
    };
    if leak > SUPPORT_TOL {
        return Err(Error::SupportViolation(leak));
    }
    let expected = 1.0 / (1.0 + e1);
    let got = v.norm_squared();
    if (got - expected).abs() > NORM_TOL {
        return Err(Error::NormViolation { got, expected });
    }
    let p = outer(v, v);
    let z1 = &ops.zs[1];
    let m: CMatrix = match variant {
        AvkVariant::Level1 => &p + z1 * &p * z1.adjoint() * re(e1),
        AvkVariant::Level2 => &p * re(e1) + z1.adjoint() * &p * z1,
    };
    DensityMatrix::new(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::{expected_kernel_dim, extremal_invariant_from_vector, harmonic_subspace_v};
    use crate::lindblad::Generator;
    use crate::numerics::{subspace_equal, SubspaceBasis, RANK_TOL};

    #[test]
    fn m1_matches_reference_parameters() {
        let m = m1();
        assert_eq!(m.dims, vec![1, 4, 3, 1]);
        assert_eq!(m.energies, vec![6.0, 3.0, 1.0, 0.0]);
        assert!((m.beta[1] - 2f64.ln()).abs() < 1e-15);
        assert_eq!(preset_energies(1), vec![3.0, 1.0, 0.0]);
        assert_eq!(by_name("avk", Some(4), Some(3)).unwrap(), m);
        assert!(matches!(by_name("kv", None, None), Err(Error::InvalidArgument(_))));
        assert!(by_name("nope", None, None).is_err());
    }

    #[test]
    fn kv_structure() {
        let kv3 = kv_model(3, &Rates::standard(1), &Shifts::standard(1)).unwrap();
        let s = Structure::new(&kv3);
        assert_eq!(s.fast_recurrent.dim(), 3);
        assert!(subspace_equal(&s.v, &s.w, 1e-10).unwrap().0);
        let kv1 = kv_model(1, &Rates::standard(1), &Shifts::standard(1)).unwrap();
        let s1 = Structure::new(&kv1);
        assert_eq!(s1.v.dim(), 0);
        assert_eq!(s1.fast_recurrent.dim(), 1);
        assert_eq!(expected_kernel_dim(&kv1).unwrap(), 1);
    }

    #[test]
    fn avk_v_description() {
        for (n1, n2) in [(4, 3), (5, 4), (6, 4), (5, 5)] {
            let m = avk_model(n1, n2, &Rates::standard(2), &Shifts::standard(2)).unwrap();
            let s = Structure::new(&m);
            let generated = SubspaceBasis::from_vectors(m.d, &avk_v_generators(&m).unwrap(), RANK_TOL)
                .join(&s.w)
                .unwrap();
            let (eq, angle) = subspace_equal(&harmonic_subspace_v(&m), &generated, 1e-10).unwrap();
            assert!(eq, "({n1},{n2}): angle {angle}");
            assert_eq!(s.fast_recurrent.dim(), 2 * (n2 - 2) + (n1 - n2) + 1);
        }
    }

    #[test]
    fn avk_extremal_eigenpairs() {
        for ratio in [2.0, 5.0, 10.0] {
            let m = avk_model(4, 3, &Rates::with_ratio(2, ratio), &Shifts::standard(2)).unwrap();
            let u = Structure::new(&m).v1_minus_w.vector(0);
            let rho = extremal_invariant_from_vector(&m, &StateVector::new(u.clone())).unwrap();
            let z1u = &TransportOps::new(&m).zs[1] * &u;
            let a = 1.0 / (1.0 + ratio);
            assert!((rho.matrix() * &u - &u * re(a)).norm() < 1e-12);
            assert!((rho.matrix() * &z1u - &z1u * re(ratio * a)).norm() < 1e-12);
        }
    }

    #[test]
    fn limit_displays_are_invariant() {
        let m = m1();
        let e1: f64 = 2.0;
        let s = Structure::new(&m);
        let u1 = s.v1_minus_w.vector(0) * re((1.0 / (1.0 + e1)).sqrt());
        let u2 = &TransportOps::new(&m).zs[1] * &u1;
        let gen = Generator::new(&m);
        for (variant, u) in [(AvkVariant::Level1, &u1), (AvkVariant::Level2, &u2)] {
            let rho = avk_limit_formulas(&m, variant, &StateVector::new(u.clone())).unwrap();
            assert!(gen.residual(rho.matrix()).unwrap() < 1e-10);
        }
        let unit = StateVector::new(s.v1_minus_w.vector(0));
        assert!(matches!(avk_limit_formulas(&m, AvkVariant::Level1, &unit), Err(Error::NormViolation { .. })));
        let bright = StateVector::new(m.entangled_vector(1, 0).unwrap().entries * re(0.5f64.sqrt()));
        assert!(matches!(avk_limit_formulas(&m, AvkVariant::Level1, &bright), Err(Error::SupportViolation(_))));
    }
}
