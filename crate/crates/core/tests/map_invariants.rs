use csm_core::couplings::CouplingSet;
use csm_core::density::{ginibre, random_density, random_hermitian};
use csm_core::linalg::{frobenius, hermiticity_defect, max_abs_diff};
use csm_core::model::{DEFAULT_GAMMA, DEFAULT_T_REP};
use csm_core::oracle::one_period_reference;
use csm_core::{BasisTag, DensityMatrix, ModelParams, PulsedSystem};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params(couplings: Vec<f64>, h: f64, z: f64) -> ModelParams {
    ModelParams::new(CouplingSet::explicit(couplings).unwrap(), h, z, DEFAULT_GAMMA, DEFAULT_T_REP).unwrap()
}

fn couplings_strategy() -> impl Strategy<Value = Vec<f64>> {
    prop_oneof![
        Just(vec![]),
        (0.005f64..0.05).prop_map(|a| vec![a]),
        (0.005f64..0.05, 0.005f64..0.05).prop_map(|(a, b)| vec![a, b]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(24) })]

    #[test]
    fn map_is_a_quantum_channel(js in couplings_strategy(), h in 0.0f64..6.0, z in 1e-4f64..0.2, seed in any::<u64>()) {
        let p = params(js, h, z);
        let s = PulsedSystem::new(&p).unwrap();
        let d = p.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let c = ginibre(&mut rng, d, d);
        prop_assert!(s.map.trace_defect(&c) <= 1e-10 * frobenius(c.as_ref()));

        let hrm = random_hermitian(&mut rng, d);
        prop_assert!(hermiticity_defect(s.map.apply_operator(&hrm).as_ref()) <= 1e-10 * frobenius(hrm.as_ref()));

        let rho = DensityMatrix::new(random_density(&mut rng, d), s.tag());
        let out = s.map.apply_map(&rho).unwrap();
        prop_assert!(out.min_eigenvalue().unwrap() >= -1e-9);
        prop_assert!((out.trace() - 1.0).norm() <= 1e-10);
    }

    #[test]
    fn map_matches_integrator_for_random_parameters(a in 0.005f64..0.05, h in 0.2f64..3.0, z in 1e-3f64..0.1, seed in any::<u64>()) {
        let p = params(vec![a], h, z);
        let s = PulsedSystem::new(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = DensityMatrix::new(random_density(&mut rng, p.dim()), BasisTag::XProduct);
        let reference = one_period_reference(&rho, &p, 2e-3).unwrap().rho;
        let mapped = s.to_x_product(&s.map.apply_map(&s.to_eigen(&rho).unwrap()).unwrap()).unwrap();
        prop_assert!(max_abs_diff(reference.matrix.as_ref(), mapped.matrix.as_ref()) <= 1e-6);
    }
}

#[test]
fn coupling_order_does_not_change_the_physics() {
    let a = PulsedSystem::new(&params(vec![0.011, 0.017], 2.2, 1e-3)).unwrap();
    let b = PulsedSystem::new(&params(vec![0.017, 0.011], 2.2, 1e-3)).unwrap();
    let mut ea: Vec<f64> = a.map.entries.eigenvalues().unwrap().iter().map(|l| l.norm()).collect();
    let mut eb: Vec<f64> = b.map.entries.eigenvalues().unwrap().iter().map(|l| l.norm()).collect();
    ea.sort_by(f64::total_cmp);
    eb.sort_by(f64::total_cmp);
    for (x, y) in ea.iter().zip(&eb) {
        assert!((x - y).abs() < 1e-10);
    }
}
