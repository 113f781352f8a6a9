//! Seeded random models, matrices and states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::lindblad::DensityMatrix;
use crate::model::{ModelSpec, RawModel};
use crate::numerics::{hermitian_part, CMatrix, CVector, SubspaceBasis, C64};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Bounds for [`random_spec`].
#[derive(Debug, Clone, Copy)]
pub struct SpecBounds {
    pub max_levels: usize,
    pub max_n1: usize,
    /// Reject draws whose total dimension exceeds this.
    pub max_total_dim: usize,
    /// Force `n_2 = … = n_N`.
    pub dh: bool,
}

impl Default for SpecBounds {
    fn default() -> Self {
        Self { max_levels: 4, max_n1: 5, max_total_dim: usize::MAX, dh: false }
    }
}

fn complex(rng: &mut SeededRng) -> C64 {
    C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
}

/// Random valid model: N in 1..=max_levels, non-increasing inner dimensions
/// starting at n_1 ≤ max_n1, random decreasing energies, rates and shifts.
pub fn random_spec(rng: &mut SeededRng, bounds: SpecBounds) -> ModelSpec {
    loop {
        let n = rng.random_range(1..=bounds.max_levels);
        let mut dims = vec![1, rng.random_range(1..=bounds.max_n1)];
        for k in 2..=n {
            let next = if bounds.dh && k > 2 { dims[k - 1] } else { rng.random_range(1..=dims[k - 1]) };
            dims.push(next);
        }
        dims.push(1);
        if dims.iter().sum::<usize>() > bounds.max_total_dim {
            continue;
        }
        let gaps: Vec<f64> = (0..=n).map(|_| rng.random_range(0.5..3.0)).collect();
        let mut energies = vec![0.0; n + 2];
        for k in (0..=n).rev() {
            energies[k] = energies[k + 1] + gaps[k];
        }
        let gamma_minus: Vec<f64> = (0..=n).map(|_| rng.random_range(0.5..2.0)).collect();
        let mut gamma_plus: Vec<f64> = (0..=n).map(|_| rng.random_range(0.1..1.0)).collect();
        gamma_plus[n] = 0.0;
        let shift_minus = (0..=n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let shift_plus = (0..=n).map(|_| rng.random_range(-0.5..0.5)).collect();
        let raw = RawModel {
            format: Some(1),
            n: Some(n),
            dims: Some(dims),
            energies: Some(energies),
            gamma_minus: Some(gamma_minus),
            gamma_plus: Some(gamma_plus),
            shift_minus: Some(shift_minus),
            shift_plus: Some(shift_plus),
        };
        if let Ok(spec) = raw.validate() {
            return spec;
        }
    }
}

/// Matrix with independent entries uniform in the unit square.
pub fn random_matrix(rng: &mut SeededRng, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex(rng))
}

pub fn random_hermitian(rng: &mut SeededRng, d: usize) -> CMatrix {
    hermitian_part(&random_matrix(rng, d, d))
}

pub fn random_vector(rng: &mut SeededRng, d: usize) -> CVector {
    CVector::from_fn(d, |_, _| complex(rng))
}

/// Full-rank random state `GG†/tr(GG†)`.
pub fn random_state(rng: &mut SeededRng, d: usize) -> Result<DensityMatrix> {
    let g = random_matrix(rng, d, d);
    DensityMatrix::normalized(&(&g * g.adjoint()))
}

/// Random state supported in `s` with full rank on it.
pub fn random_state_on(rng: &mut SeededRng, s: &SubspaceBasis) -> Result<DensityMatrix> {
    let k = s.dim();
    let g = random_matrix(rng, k, k);
    let q = s.matrix();
    DensityMatrix::normalized(&(q * &g * g.adjoint() * q.adjoint()))
}

/// Random pure state on `s`.
pub fn random_pure_on(rng: &mut SeededRng, s: &SubspaceBasis) -> Result<DensityMatrix> {
    let c = random_vector(rng, s.dim());
    DensityMatrix::pure(&(s.matrix() * c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_draws() {
        let a = random_spec(&mut seeded(7), SpecBounds::default());
        let b = random_spec(&mut seeded(7), SpecBounds::default());
        assert_eq!(a, b);
        let mut r1 = seeded(3);
        let mut r2 = seeded(3);
        assert_eq!(random_matrix(&mut r1, 3, 2), random_matrix(&mut r2, 3, 2));
    }

    #[test]
    fn bounds_are_respected() {
        let mut rng = seeded(11);
        for _ in 0..50 {
            let s = random_spec(&mut rng, SpecBounds { max_total_dim: 12, dh: true, ..Default::default() });
            assert!(s.n <= 4 && s.dims[1] <= 5 && s.d <= 12);
            assert!(s.satisfies_dh());
        }
    }

    #[test]
    fn states_live_on_their_subspace() {
        let mut rng = seeded(5);
        let s = SubspaceBasis::from_vectors(4, &[random_vector(&mut rng, 4), random_vector(&mut rng, 4)], 1e-10);
        let rho = random_state_on(&mut rng, &s).unwrap();
        let p = s.projector();
        assert!((rho.matrix() - &p * rho.matrix() * &p).norm() < 1e-14);
        assert!(random_state(&mut rng, 5).unwrap().eigenvalues()[0] > 0.0);
        let pure = random_pure_on(&mut rng, &s).unwrap();
        assert!((pure.matrix() - &p * pure.matrix() * &p).norm() < 1e-14);
    }
}
