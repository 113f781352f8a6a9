use proptest::prelude::*;

use qtransport::evolution::{u_z_subspace, Propagator};
use qtransport::invariants::{
    build_invariant_from_tau, decompose_invariant, numeric_steady_state, support_leakage, Structure,
};
use qtransport::io::{state_from_json, state_to_json};
use qtransport::lindblad::{choi_matrix, Generator, Superoperator};
use qtransport::model::ModelSpec;
use qtransport::numerics::{
    hermitian_eigvals, jacobi_svd, matrix_exp, principal_angles, re, subspace_equal, CMatrix,
    SubspaceBasis, RANK_TOL,
};
use qtransport::presets::{avk_model, m1, Rates, Shifts};
use qtransport::sampling::{
    random_hermitian, random_matrix, random_spec, random_state, random_state_on, random_vector, seeded, SpecBounds,
};
use qtransport::spectrum::invariant_spectrum_from_tau;
use qtransport::transport::TransportOps;

fn spec_from(seed: u64, dh: bool, max_total_dim: usize) -> ModelSpec {
    random_spec(&mut seeded(seed), SpecBounds { dh, max_total_dim, ..Default::default() })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn transport_identities(seed in any::<u64>()) {
        let spec = spec_from(seed, false, usize::MAX);
        let ops = TransportOps::new(&spec);
        for k in 1..=spec.n {
            prop_assert!((&ops.zs[k] * ops.zs[k].adjoint() - &ops.projectors[k + 1]).norm() < 1e-11);
            let a = ops.abs(k);
            prop_assert!((&a * &a - &a).norm() < 1e-11);
        }
        let total: CMatrix = ops.projectors.iter().fold(CMatrix::zeros(spec.d, spec.d), |acc, p| acc + p);
        prop_assert!((total - CMatrix::identity(spec.d, spec.d)).norm() < 1e-14);
    }

    #[test]
    fn generator_preserves_trace_and_hermiticity(seed in any::<u64>()) {
        let spec = spec_from(seed, false, 20);
        let mut rng = seeded(seed ^ 0x5eed);
        let gen = Generator::new(&spec);
        let x = random_hermitian(&mut rng, spec.d);
        let lx = gen.apply(&x).unwrap();
        prop_assert!(lx.trace().norm() < 1e-10);
        prop_assert!((&lx - lx.adjoint()).norm() < 1e-10);
        prop_assert!((&lx - gen.apply_raw(&x).unwrap()).norm() < 1e-10);
        let y = random_hermitian(&mut rng, spec.d);
        let lhs = (lx.adjoint() * &y).trace();
        let rhs = (x.adjoint() * gen.apply_dual(&y).unwrap()).trace();
        prop_assert!((lhs - rhs).norm() < 1e-10);
    }

    #[test]
    fn liouvillian_matches_direct_application(seed in any::<u64>()) {
        let spec = spec_from(seed, false, 14);
        let mut rng = seeded(seed ^ 1);
        let gen = Generator::new(&spec);
        let l = gen.liouvillian();
        let x = random_matrix(&mut rng, spec.d, spec.d);
        prop_assert!((l.apply(&x).unwrap() - gen.apply(&x).unwrap()).norm() < 1e-11);
        let dual = gen.dual_liouvillian();
        prop_assert!((dual.apply(&x).unwrap() - gen.apply_dual(&x).unwrap()).norm() < 1e-11);
    }

    #[test]
    fn propagator_is_completely_positive(seed in any::<u64>(), t in 0.05f64..2.0) {
        let spec = spec_from(seed, false, 10);
        let gen = Generator::new(&spec);
        let step = matrix_exp(&gen.liouvillian().matrix, t).unwrap();
        let choi = choi_matrix(&Superoperator { dim: spec.d, matrix: step });
        prop_assert!(hermitian_eigvals(&choi).unwrap()[0] > -1e-8);
    }

    #[test]
    fn trajectories_stay_states(seed in any::<u64>()) {
        let spec = spec_from(seed, false, 12);
        let mut rng = seeded(seed ^ 2);
        let rho = random_state(&mut rng, spec.d).unwrap();
        let trace = Propagator::new(&spec).trajectory(&rho, 5.0, 10, None).unwrap();
        for row in &trace.rows {
            prop_assert!((row.trace - 1.0).abs() < 1e-9);
            prop_assert!(row.min_eig > -1e-8);
        }
    }

    #[test]
    fn populations_outside_the_fast_recurrent_subspace_decay(seed in any::<u64>()) {
        let spec = spec_from(seed, false, 12);
        let mut rng = seeded(seed ^ 3);
        let rho = random_state(&mut rng, spec.d).unwrap();
        let perp = Structure::new(&spec).fast_recurrent.complement().projector();
        let t = 2000.0 / spec.min_rate();
        let late = Propagator::new(&spec).evolve(&rho, t).unwrap();
        prop_assert!((&perp * late.matrix() * &perp).trace().re < 1e-9);
    }

    #[test]
    fn steady_state_support_is_the_fast_recurrent_subspace(seed in any::<u64>()) {
        let spec = spec_from(seed, false, 12);
        let ss = numeric_steady_state(&spec).unwrap();
        let rl = Structure::new(&spec).fast_recurrent;
        let (same, angle) = subspace_equal(&rl, &ss.support, 1e-7).unwrap();
        prop_assert!(same, "dims {:?}, angle {angle}", spec.dims);
    }

    #[test]
    fn build_and_decompose_round_trip(seed in any::<u64>()) {
        let spec = spec_from(seed, true, 20);
        let s = Structure::new(&spec);
        prop_assume!(s.v1_minus_w.dim() > 0);
        let mut rng = seeded(seed ^ 4);
        let tau = random_state_on(&mut rng, &s.v1_minus_w).unwrap();
        let rho = build_invariant_from_tau(&spec, &tau).unwrap();
        prop_assert!(Generator::new(&spec).residual(rho.matrix()).unwrap() < 1e-11);
        prop_assert!(support_leakage(rho.matrix(), &s.v.projector()) < 1e-10);
        let dec = decompose_invariant(&spec, &rho).unwrap();
        prop_assert!((dec.alpha - 1.0).abs() < 1e-9);
        prop_assert!((dec.tau.unwrap().matrix() - tau.matrix()).norm() < 1e-9);
    }

    #[test]
    fn closed_form_spectrum(seed in any::<u64>()) {
        let spec = spec_from(seed, true, 20);
        let s = Structure::new(&spec);
        prop_assume!(s.v1_minus_w.dim() > 0);
        let mut rng = seeded(seed ^ 5);
        let tau = random_state_on(&mut rng, &s.v1_minus_w).unwrap();
        let pairs = invariant_spectrum_from_tau(&spec, &tau).unwrap();
        let sum: f64 = pairs.iter().map(|p| p.value).sum();
        prop_assert!((sum - 1.0).abs() < 1e-10);
        for p in &pairs {
            prop_assert!(p.value >= 0.0 && p.value <= 1.0);
        }
        for (i, a) in pairs.iter().enumerate() {
            for b in &pairs[i + 1..] {
                prop_assert!(a.vector.entries.dotc(&b.vector.entries).norm() < 1e-10);
            }
        }
    }

    #[test]
    fn u_z_has_full_chain_dimension(seed in any::<u64>()) {
        let spec = spec_from(seed, true, 20);
        let s = Structure::new(&spec);
        prop_assume!(s.v1_minus_w.dim() > 0);
        let uz = u_z_subspace(&spec, &s.v1_minus_w).unwrap();
        prop_assert_eq!(uz.dim(), spec.n * s.v1_minus_w.dim());
        prop_assert!((s.w.matrix().adjoint() * uz.matrix()).norm() < 1e-10);
    }

    #[test]
    fn avk_fast_recurrent_dimension(n1 in 2usize..7, n2 in 2usize..7) {
        prop_assume!(n1 >= n2);
        let spec = avk_model(n1, n2, &Rates::standard(2), &Shifts::standard(2)).unwrap();
        let s = Structure::new(&spec);
        prop_assert_eq!(s.fast_recurrent.dim(), 2 * (n2 - 2) + (n1 - n2) + 1);
    }

    #[test]
    fn jacobi_svd_reconstructs(seed in any::<u64>(), rows in 1usize..9, cols in 1usize..9) {
        let mut rng = seeded(seed);
        let a = random_matrix(&mut rng, rows, cols);
        let svd = jacobi_svd(&a);
        let k = svd.sigma.len();
        let mut s = CMatrix::zeros(k, k);
        for i in 0..k {
            s[(i, i)] = re(svd.sigma[i]);
        }
        prop_assert!((&svd.u * s * svd.v.adjoint() - &a).norm() < 1e-12 * (1.0 + a.norm()));
        prop_assert!(svd.sigma.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn principal_angles_are_symmetric(seed in any::<u64>(), d in 3usize..8) {
        let mut rng = seeded(seed);
        let a = SubspaceBasis::from_vectors(d, &[random_vector(&mut rng, d), random_vector(&mut rng, d)], RANK_TOL);
        let b = SubspaceBasis::from_vectors(d, &[random_vector(&mut rng, d)], RANK_TOL);
        let ab = principal_angles(&a, &b).unwrap();
        let ba = principal_angles(&b, &a).unwrap();
        prop_assert!((ab[0] - ba[0]).abs() < 1e-12);
        prop_assert!(principal_angles(&a, &a).unwrap().iter().all(|x| *x < 1e-7));
    }

    #[test]
    fn matrix_exp_semigroup(seed in any::<u64>(), s in 0.0f64..3.0, t in 0.0f64..3.0) {
        let mut rng = seeded(seed);
        let a = random_matrix(&mut rng, 5, 5);
        let lhs = matrix_exp(&a, s + t).unwrap();
        let rhs = matrix_exp(&a, s).unwrap() * matrix_exp(&a, t).unwrap();
        prop_assert!((&lhs - rhs).norm() < 1e-9 * (1.0 + lhs.norm()));
    }

    #[test]
    fn state_files_round_trip(seed in any::<u64>()) {
        let spec = m1();
        let rho = random_state(&mut seeded(seed), spec.d).unwrap();
        let back = state_from_json(&state_to_json(&rho)).unwrap();
        prop_assert_eq!(back.matrix(), rho.matrix());
    }

    #[test]
    fn monotone_approach_on_the_hereditary_subalgebra(seed in any::<u64>()) {
        let spec = m1();
        let s = Structure::new(&spec);
        let uz = u_z_subspace(&spec, &s.v1_minus_w).unwrap();
        let mut rng = seeded(seed);
        let rho = random_state_on(&mut rng, &uz).unwrap();
        let lim = qtransport::evolution::limit_state(&spec, &rho, &s.v1_minus_w).unwrap();
        let trace = Propagator::new(&spec).trajectory(&rho, 20.0, 40, Some(&lim)).unwrap();
        let d: Vec<f64> = trace.rows.iter().map(|r| r.dist_to_limit.unwrap()).collect();
        for w in d.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
