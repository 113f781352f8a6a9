use qtransport::evolution::{
    attraction_domain_check, default_t_max, limit_occupations, limit_state, limit_state_numeric, occupations,
    u_z_subspace, Propagator, CONVERGENCE_TOL,
};
use qtransport::invariants::{build_invariant_from_tau, Structure};
use qtransport::lindblad::{DensityMatrix, Generator};
use qtransport::numerics::{re, trace_distance, CMatrix};
use qtransport::presets::{avk_model, m1, n3_model, Rates, Shifts};
use qtransport::sampling::{random_state_on, seeded};
use qtransport::spectrum::spectrum_decomposition_check;
use qtransport::transport::TransportOps;

fn sink(d: usize) -> CMatrix {
    let mut m = CMatrix::zeros(d, d);
    m[(d - 1, d - 1)] = re(1.0);
    m
}

#[test]
fn zero_eigenvalue_multiplicity_on_m1() {
    let spec = m1();
    let s = Structure::new(&spec);
    let mut rng = seeded(101);
    for i in 0..10 {
        let tau = random_state_on(&mut rng, &s.v1_minus_w).unwrap();
        let chain = build_invariant_from_tau(&spec, &tau).unwrap();
        let w = random_state_on(&mut rng, &s.w).unwrap();
        let weights = [0.2 + 0.05 * i as f64, 0.3, 0.5 - 0.05 * i as f64];
        let m = chain.matrix() * re(weights[0]) + w.matrix() * re(weights[1]) + sink(spec.d) * re(weights[2]);
        let rho = DensityMatrix::new(m).unwrap();
        assert!(Generator::new(&spec).residual(rho.matrix()).unwrap() < 1e-11);
        let report = spectrum_decomposition_check(&spec, &rho).unwrap();
        assert!(report.passed, "case {i}: deviation {:e}", report.deviation);
        assert!(report.zero_multiplicity >= report.zero_bound, "case {i}");
    }
}

#[test]
fn numeric_limit_matches_closed_form_on_u_z() {
    for spec in [m1(), n3_model(), avk_model(5, 4, &Rates::with_ratio(2, 3.0), &Shifts::uniform(2, 0.2)).unwrap()] {
        let s = Structure::new(&spec);
        let uz = u_z_subspace(&spec, &s.v1_minus_w).unwrap();
        let mut rng = seeded(202);
        for _ in 0..3 {
            let rho0 = random_state_on(&mut rng, &uz).unwrap();
            let analytic = limit_state(&spec, &rho0, &s.v1_minus_w).unwrap();
            let (numeric, _) = limit_state_numeric(&spec, &rho0, default_t_max(&spec), CONVERGENCE_TOL).unwrap();
            let dist = trace_distance(analytic.matrix(), numeric.matrix());
            assert!(dist < 1e-7, "dims {:?}: {dist:e}", spec.dims);
        }
    }
}

#[test]
fn attraction_domain_on_random_avk_states() {
    let spec = avk_model(5, 4, &Rates::standard(2), &Shifts::standard(2)).unwrap();
    let s = Structure::new(&spec);
    let uz = u_z_subspace(&spec, &s.v1_minus_w).unwrap();
    assert_eq!(s.v1_minus_w.dim(), 2);
    let mut rng = seeded(303);
    let ops = TransportOps::new(&spec);
    let (z1, abs1) = (&ops.zs[1], ops.abs(1));
    // η = |Z_1|ρ|Z_1| + Z_1†ρZ_1 for the two-level model.
    let eta = |rho: &CMatrix| &abs1 * rho * &abs1 + z1.adjoint() * rho * z1;
    for i in 0..10 {
        let rho0 = random_state_on(&mut rng, &uz).unwrap();
        let target = limit_state(&spec, &rho0, &s.v1_minus_w).unwrap();
        let verdict = attraction_domain_check(&spec, &rho0, &target, &s.v1_minus_w).unwrap();
        assert!(verdict.in_domain, "case {i}: {:?}", verdict.diagnostic);
        assert!((eta(rho0.matrix()) - eta(target.matrix())).norm() < 1e-9, "case {i}");

        let other = random_state_on(&mut rng, &uz).unwrap();
        let verdict = attraction_domain_check(&spec, &other, &target, &s.v1_minus_w).unwrap();
        assert!(!verdict.in_domain, "case {i}");
        assert!(verdict.diagnostic.unwrap().contains("eta mismatch"));
        assert!((eta(other.matrix()) - eta(target.matrix())).norm() > 1e-6, "case {i}");
    }
}

#[test]
fn u_z_states_flow_to_limit_occupations() {
    let spec = n3_model();
    let s = Structure::new(&spec);
    let uz = u_z_subspace(&spec, &s.v1_minus_w).unwrap();
    let rho0 = random_state_on(&mut seeded(505), &uz).unwrap();
    let late = Propagator::new(&spec).evolve(&rho0, 500.0).unwrap();
    let occ = occupations(&spec, late.matrix());
    let expected = limit_occupations(&spec).unwrap();
    assert!(occ[0].abs() < 1e-12 && occ[spec.n + 1].abs() < 1e-12, "{occ:?}");
    for (a, b) in occ[1..=spec.n].iter().zip(&expected) {
        assert!((a - b).abs() < 1e-8, "{occ:?} vs {expected:?}");
    }
}

#[test]
fn invariant_states_have_flat_trajectories() {
    let spec = m1();
    let s = Structure::new(&spec);
    let tau = random_state_on(&mut seeded(404), &s.v1_minus_w).unwrap();
    let rho = build_invariant_from_tau(&spec, &tau).unwrap();
    let trace = Propagator::new(&spec).trajectory(&rho, 10.0, 20, Some(&rho)).unwrap();
    for row in &trace.rows {
        assert!(row.dist_to_limit.unwrap() < 1e-10);
    }
    let csv = trace.to_csv();
    assert_eq!(csv.lines().count(), trace.rows.len() + 1);
    assert!(csv.starts_with("t,occ_0,occ_1,occ_2,occ_3,trace,min_eig,dist_to_limit"));
}
