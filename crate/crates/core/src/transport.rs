//! Transition operators `Z_k`, the transport operator `Z` and the
//! partial-isometry projectors `|Z_k|`, `|Z_k|⊥`.

use crate::error::{Error, Result};
use crate::model::{root_of_unity, ModelSpec, StateVector};
use crate::numerics::{re, CMatrix, CVector};

/// Tolerance for the closed-form check in [`transport_power_on_zero`].
pub const CLOSED_FORM_TOL: f64 = 1e-12;

/// `Z_k : E_k → E_{k+1}` with `⟨a_{k+1}|Z_k|b_k⟩ = ζ_k^{ab}/√n_k`, embedded
/// in the total space.
pub fn transition_operator(spec: &ModelSpec, k: usize) -> Result<CMatrix> {
    if k > spec.n {
        return Err(Error::IndexOutOfRange(format!("transition Z_{k} needs k <= {}", spec.n)));
    }
    let nk = spec.dims[k];
    let scale = 1.0 / (nk as f64).sqrt();
    let mut z = CMatrix::zeros(spec.d, spec.d);
    for a in 0..spec.dims[k + 1] {
        for b in 0..nk {
            z[(spec.offsets[k + 1] + a, spec.offsets[k] + b)] = root_of_unity(nk, (a * b) as i64) * scale;
        }
    }
    Ok(z)
}

/// `Z = Σ_{k=0}^{N} Z_k`.
pub fn transport_operator(spec: &ModelSpec) -> CMatrix {
    (0..=spec.n)
        .map(|k| transition_operator(spec, k).expect("k in range"))
        .fold(CMatrix::zeros(spec.d, spec.d), |acc, z| acc + z)
}

fn check_abs_index(spec: &ModelSpec, k: usize) -> Result<()> {
    if k == 0 || k > spec.n {
        return Err(Error::IndexOutOfRange(format!(
            "|Z_{k}| is defined for 1 <= k <= {}",
            spec.n
        )));
    }
    Ok(())
}

/// `|Z_k| = Z_k†Z_k`, the projector onto `span{φ_{a_k}}_{a < n_{k+1}}`.
pub fn abs_z(spec: &ModelSpec, k: usize) -> Result<CMatrix> {
    check_abs_index(spec, k)?;
    let z = transition_operator(spec, k)?;
    Ok(z.adjoint() * z)
}

/// `|Z_k|⊥ = P_k − |Z_k|`.
pub fn abs_z_perp(spec: &ModelSpec, k: usize) -> Result<CMatrix> {
    Ok(spec.level_projector(k)? - abs_z(spec, k)?)
}

/// `Z^p` by repeated multiplication.
pub fn matrix_power(z: &CMatrix, p: usize) -> CMatrix {
    let mut out = CMatrix::identity(z.nrows(), z.ncols());
    for _ in 0..p {
        out = z * out;
    }
    out
}

fn check_power_range(spec: &ModelSpec, k: usize, p: usize) -> Result<()> {
    if k == 0 || k > spec.n || p == 0 || k + p > spec.n + 1 {
        return Err(Error::IndexOutOfRange(format!(
            "Z^{p}|0_{k}> needs 1 <= k <= {}, p >= 1, k + p <= {}",
            spec.n,
            spec.n + 1
        )));
    }
    Ok(())
}

/// Closed form of `Z^p|0_k⟩`: the product of `√(n_{k+2j+1}/n_{k+2j})` over
/// completed pairs times `φ_{0_{k+p}}` (odd p) or `|0_{k+p}⟩` (even p).
pub fn power_on_zero_closed_form(spec: &ModelSpec, k: usize, p: usize) -> Result<CVector> {
    check_power_range(spec, k, p)?;
    let pairs = p.div_ceil(2);
    let coeff: f64 = (0..pairs)
        .map(|j| (spec.dims[k + 2 * j + 1] as f64 / spec.dims[k + 2 * j] as f64).sqrt())
        .product();
    let target = if p % 2 == 1 {
        spec.entangled_vector(k + p, 0)?.entries
    } else {
        spec.canonical_vector(k + p, 0)?.entries
    };
    Ok(target * re(coeff))
}

/// `Z^p|0_k⟩`, computed by matrix application and checked against
/// [`power_on_zero_closed_form`].
pub fn transport_power_on_zero(spec: &ModelSpec, k: usize, p: usize) -> Result<StateVector> {
    check_power_range(spec, k, p)?;
    let z = transport_operator(spec);
    let start = spec.canonical_vector(k, 0)?.entries;
    let direct = matrix_power(&z, p) * start;
    let closed = power_on_zero_closed_form(spec, k, p)?;
    let residual = (&direct - &closed).norm();
    if residual > CLOSED_FORM_TOL {
        return Err(Error::ClosedFormMismatch {
            what: format!("Z^{p}|0_{k}>"),
            residual,
        });
    }
    Ok(StateVector::labeled(direct, format!("Z^{p} 0_{k}")))
}

/// All transport-related operators of a model, computed once.
#[derive(Debug, Clone)]
pub struct TransportOps {
    /// `Z_0 … Z_N`.
    pub zs: Vec<CMatrix>,
    pub z: CMatrix,
    /// `Z^0 … Z^{N+1}`.
    pub powers: Vec<CMatrix>,
    /// `P_0 … P_{N+1}`.
    pub projectors: Vec<CMatrix>,
}

impl TransportOps {
    pub fn new(spec: &ModelSpec) -> Self {
        let zs: Vec<CMatrix> = (0..=spec.n)
            .map(|k| transition_operator(spec, k).expect("k in range"))
            .collect();
        let z = zs.iter().fold(CMatrix::zeros(spec.d, spec.d), |acc, x| acc + x);
        let mut powers = vec![CMatrix::identity(spec.d, spec.d)];
        for p in 1..=spec.n + 1 {
            let next = &z * &powers[p - 1];
            powers.push(next);
        }
        let projectors = (0..spec.levels())
            .map(|k| spec.level_projector(k).expect("k in range"))
            .collect();
        Self { zs, z, powers, projectors }
    }

    /// `|Z_k|` for 1 ≤ k ≤ N.
    pub fn abs(&self, k: usize) -> CMatrix {
        self.zs[k].adjoint() * &self.zs[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::RawModel;
    use crate::numerics::C64;

    fn spec(dims: &[usize]) -> ModelSpec {
        let n = dims.len() - 2;
        let energies = (0..n + 2)
            .map(|k| ((n + 1 - k) * (n + 2 - k)) as f64 / 2.0)
            .collect();
        let mut gp = vec![0.5; n + 1];
        gp[n] = 0.0;
        RawModel {
            format: None,
            n: Some(n),
            dims: Some(dims.to_vec()),
            energies: Some(energies),
            gamma_minus: Some(vec![1.0; n + 1]),
            gamma_plus: Some(gp),
            shift_minus: Some(vec![0.1; n + 1]),
            shift_plus: Some(vec![0.1; n + 1]),
        }
        .validate()
        .unwrap()
    }

    #[test]
    fn z0_maps_ground_to_bright_vector() {
        let m = spec(&[1, 4, 3, 1]);
        let z0 = transition_operator(&m, 0).unwrap();
        let phi = m.entangled_vector(1, 0).unwrap().entries;
        let e0 = m.canonical_vector(0, 0).unwrap().entries;
        let expected = &phi * e0.adjoint() * re(2.0);
        assert!((&z0 - expected).norm() < 1e-15);
        assert!((&z0 * &e0 - &phi * re(2.0)).norm() < 1e-15);
    }

    #[test]
    fn z1_entry_on_m1() {
        let m = spec(&[1, 4, 3, 1]);
        let z1 = transition_operator(&m, 1).unwrap();
        // ⟨1_2|Z_1|1_1⟩ = ζ_4/2 = i/2.
        let v = z1[(m.coord(2, 1).unwrap(), m.coord(1, 1).unwrap())];
        assert!((v - C64::new(0.0, 0.5)).norm() < 1e-15);
        assert!(transition_operator(&m, 3).is_err());
    }

    #[test]
    fn co_isometry_and_partial_isometry() {
        let m = spec(&[1, 5, 3, 2, 1]);
        for k in 1..=m.n {
            let z = transition_operator(&m, k).unwrap();
            let p = m.level_projector(k + 1).unwrap();
            assert!((&z * z.adjoint() - p).norm() < 1e-12);
            let a = abs_z(&m, k).unwrap();
            assert!((&a * &a - &a).norm() < 1e-12);
            assert!((&a * z.adjoint() - z.adjoint()).norm() < 1e-12);
            let ap = abs_z_perp(&m, k).unwrap();
            assert!((&ap * &ap - &ap).norm() < 1e-12);
            assert!((ap.trace().re - (m.dims[k] - m.dims[k + 1]) as f64).abs() < 1e-12);
        }
        assert!(matches!(abs_z(&m, 0), Err(Error::IndexOutOfRange(_))));
    }

    #[test]
    fn abs_z_traces_on_m1() {
        let m = spec(&[1, 4, 3, 1]);
        assert!((abs_z(&m, 1).unwrap().trace().re - 3.0).abs() < 1e-12);
        assert!((abs_z_perp(&m, 1).unwrap().trace().re - 1.0).abs() < 1e-12);
        assert!((abs_z_perp(&m, 2).unwrap().trace().re - 2.0).abs() < 1e-12);
        let eq = spec(&[1, 3, 3, 1]);
        assert!(abs_z_perp(&eq, 1).unwrap().norm() < 1e-12);
    }

    #[test]
    fn transport_on_entangled_basis() {
        let m = spec(&[1, 4, 3, 3, 1]);
        let z = transport_operator(&m);
        for k in 1..=m.n {
            for a in 0..m.dims[k + 1] {
                let phi = m.entangled_vector(k, a).unwrap().entries;
                let can = m.canonical_vector(k + 1, a).unwrap().entries;
                assert!((&z * &phi - &can).norm() < 1e-12);
                assert!((z.adjoint() * &can - &phi).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn z_dagger_z_and_z_z_dagger() {
        let m = spec(&[1, 4, 3, 3, 1]);
        let ops = TransportOps::new(&m);
        let n1 = m.dims[1] as f64;
        let mut expected = &ops.projectors[0] * re(n1);
        for k in 1..=m.n {
            expected += ops.abs(k);
        }
        assert!((ops.z.adjoint() * &ops.z - expected).norm() < 1e-12);

        let phi = m.entangled_vector(1, 0).unwrap().entries;
        let mut expected = &phi * phi.adjoint() * re(n1);
        for k in 2..=m.n + 1 {
            expected += &ops.projectors[k];
        }
        assert!((&ops.z * ops.z.adjoint() - expected).norm() < 1e-12);
    }

    #[test]
    fn z_cubed_on_ground_level() {
        let m = spec(&[1, 4, 3, 1]);
        let ops = TransportOps::new(&m);
        let lhs = &ops.powers[3] * &ops.projectors[0];
        let rhs = &ops.zs[2] * &ops.zs[1] * &ops.zs[0];
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn power_formulas() {
        let m = spec(&[1, 4, 3, 3, 1]);
        let v = transport_power_on_zero(&m, 1, 1).unwrap().entries;
        let phi = m.entangled_vector(2, 0).unwrap().entries;
        assert!((v - phi * re(0.75f64.sqrt())).norm() < 1e-12);
        let v = transport_power_on_zero(&m, 1, 2).unwrap().entries;
        let e = m.canonical_vector(3, 0).unwrap().entries;
        assert!((v - e * re(0.75f64.sqrt())).norm() < 1e-12);
        transport_power_on_zero(&m, 1, 3).unwrap();
        assert!(transport_power_on_zero(&m, 2, 3).is_err());

        let eq = spec(&[1, 3, 3, 3, 3, 1]);
        for p in 1..=3 {
            let v = transport_power_on_zero(&eq, 1, p).unwrap();
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn isometry_on_range_of_abs() {
        let m = spec(&[1, 5, 3, 2, 1]);
        for k in 1..=m.n {
            let z = transition_operator(&m, k).unwrap();
            for a in 0..m.dims[k + 1] {
                let v = m.entangled_vector(k, a).unwrap().entries;
                assert!(((&z * &v).norm() - 1.0).abs() < 1e-12);
            }
        }
    }
}
