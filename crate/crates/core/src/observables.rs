//! Entropy and polarization of density matrices.

use faer::{Mat, MatRef};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::density::{BasisTag, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, trace};
use crate::operators::SpinOperators;
use crate::pulse_map::PulsedSystem;

/// Eigenvalues below this are treated as exact zeros.
const CLAMP: f64 = 1e-14;
/// Eigenvalues below this are a positivity failure rather than round-off.
const NEGATIVE_LIMIT: f64 = -1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObservableSet {
    /// von Neumann entropy in units of `k_B`.
    pub entropy: f64,
    /// `(2/N) sum_i <I^x_i>`; NaN for a lone central spin.
    pub bath_polarization_x: f64,
    /// `(2<S^x>, 2<S^y>, 2<S^z>)`.
    pub central_polarization: [f64; 3],
    /// `(S - (N+1) ln 2) / (N+1)`.
    pub entropy_reduction_per_spin: f64,
}

/// `S = -Tr(rho ln rho)` with natural log.
pub fn von_neumann_entropy(rho: MatRef<'_, c64>) -> Result<f64> {
    let ev = hermitian_eigenvalues(rho)?;
    entropy_from_spectrum(&ev)
}

pub fn entropy_from_spectrum(ev: &[f64]) -> Result<f64> {
    let mut s = 0.0;
    for &p in ev {
        if p < NEGATIVE_LIMIT {
            return Err(Error::Positivity { min_eigenvalue: p });
        }
        if p > CLAMP {
            s -= p * p.ln();
        }
    }
    Ok(s)
}

/// Maximal entropy `(N+1) ln 2` of the completely disordered start.
pub fn initial_entropy(n: usize) -> f64 {
    (n + 1) as f64 * std::f64::consts::LN_2
}

fn expectation(rho: MatRef<'_, c64>, op: MatRef<'_, c64>) -> c64 {
    trace((rho * op).as_ref())
}

/// `(2/N) Tr(rho sum_i I^x_i)` for a state in the x-product basis.
pub fn bath_polarization_x(rho_x: MatRef<'_, c64>, ops: &SpinOperators) -> Result<f64> {
    if ops.n == 0 {
        return Err(Error::UndefinedObservable("bath polarization needs N >= 1".into()));
    }
    // I^x_i are diagonal in the x-product basis
    let mut s = c64::new(0.0, 0.0);
    for ix in &ops.ix {
        for k in 0..ops.d {
            s += rho_x[(k, k)] * ix[(k, k)];
        }
    }
    Ok(2.0 * s.re / ops.n as f64)
}

/// Imaginary part of `Tr(rho sum_i I^x_i)`; zero for Hermitian states.
pub fn bath_polarization_x_imag(rho_x: MatRef<'_, c64>, ops: &SpinOperators) -> f64 {
    let mut s = c64::new(0.0, 0.0);
    for ix in &ops.ix {
        s += expectation(rho_x, ix.as_ref());
    }
    s.im
}

pub fn central_polarization(rho_x: MatRef<'_, c64>, ops: &SpinOperators) -> [f64; 3] {
    [
        2.0 * expectation(rho_x, ops.sx.as_ref()).re,
        2.0 * expectation(rho_x, ops.sy.as_ref()).re,
        2.0 * expectation(rho_x, ops.sz.as_ref()).re,
    ]
}

/// Observables of a state in the x-product basis.
pub fn observe_x(rho_x: MatRef<'_, c64>, ops: &SpinOperators) -> Result<ObservableSet> {
    let entropy = von_neumann_entropy(rho_x)?;
    let bath = if ops.n == 0 { f64::NAN } else { bath_polarization_x(rho_x, ops)? };
    let n_spins = (ops.n + 1) as f64;
    Ok(ObservableSet {
        entropy,
        bath_polarization_x: bath,
        central_polarization: central_polarization(rho_x, ops),
        entropy_reduction_per_spin: (entropy - initial_entropy(ops.n)) / n_spins,
    })
}

/// Observables of a tagged state, converting to the x-product basis as needed.
pub fn observe(system: &PulsedSystem, rho: &DensityMatrix) -> Result<ObservableSet> {
    let x: Mat<c64> = match rho.basis {
        BasisTag::XProduct => rho.matrix.clone(),
        _ => system.to_x_product(rho)?.matrix,
    };
    observe_x(x.as_ref(), &system.ops)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::{random_density, random_unitary};
    use crate::linalg::{ONE, ZERO};
    use crate::model::ModelParams;
    use crate::operators::build_spin_operators;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(values: &[f64]) -> Mat<c64> {
        let d = values.len();
        Mat::from_fn(d, d, |i, j| if i == j { c64::new(values[i], 0.0) } else { ZERO })
    }

    #[test]
    fn entropy_examples() {
        assert!(von_neumann_entropy(diag(&[1.0, 0.0, 0.0, 0.0]).as_ref()).unwrap().abs() < 1e-15);
        let mixed = von_neumann_entropy(diag(&[1.0 / 16.0; 16]).as_ref()).unwrap();
        assert!((mixed - 4.0 * std::f64::consts::LN_2).abs() < 1e-12);
        assert!((mixed - 2.77259).abs() < 1e-5);
        let half = von_neumann_entropy(diag(&[0.5, 0.0, 0.5]).as_ref()).unwrap();
        assert!((half - 0.693147).abs() < 1e-6);
    }

    #[test]
    fn entropy_clamps_round_off_but_rejects_negative_states() {
        let s = entropy_from_spectrum(&[1.0 + 1e-10, -1e-10]).unwrap();
        assert!(s.abs() < 1e-9);
        assert!(matches!(entropy_from_spectrum(&[1.1, -0.1]), Err(Error::Positivity { .. })));
    }

    #[test]
    fn polarizations_of_simple_states() {
        let p = ModelParams::defaults(2, 1.0).unwrap();
        let ops = build_spin_operators(&p).unwrap();
        // x-product index 0 is all spins along +x
        let mut pure = Mat::<c64>::zeros(8, 8);
        pure[(0, 0)] = ONE;
        assert!((bath_polarization_x(pure.as_ref(), &ops).unwrap() - 1.0).abs() < 1e-15);
        let c = central_polarization(pure.as_ref(), &ops);
        assert!((c[0] - 1.0).abs() < 1e-15 && c[1].abs() < 1e-15 && c[2].abs() < 1e-15);

        let mixed = diag(&[1.0 / 8.0; 8]);
        assert!(bath_polarization_x(mixed.as_ref(), &ops).unwrap().abs() < 1e-15);
        assert!(central_polarization(mixed.as_ref(), &ops).iter().all(|x| x.abs() < 1e-15));

        // |up_z> (x) bath-mixed: central is (|+x> + |-x>)/sqrt2
        let up = &ops.s_plus * &ops.s_minus;
        let rho = Mat::from_fn(8, 8, |i, j| up[(i, j)] / 4.0);
        let c = central_polarization(rho.as_ref(), &ops);
        assert!((c[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn lone_spin_has_no_bath_polarization() {
        let p = ModelParams::defaults(0, 1.0).unwrap();
        let ops = build_spin_operators(&p).unwrap();
        let rho = diag(&[0.5, 0.5]);
        assert!(matches!(bath_polarization_x(rho.as_ref(), &ops), Err(Error::UndefinedObservable(_))));
        assert!(observe_x(rho.as_ref(), &ops).unwrap().bath_polarization_x.is_nan());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn entropy_is_unitarily_invariant(seed in any::<u64>(), d in 2usize..9) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rho = random_density(&mut rng, d);
            let u = random_unitary(&mut rng, d);
            let rotated = &u * &rho * u.adjoint();
            let a = von_neumann_entropy(rho.as_ref()).unwrap();
            let b = von_neumann_entropy(rotated.as_ref()).unwrap();
            prop_assert!((a - b).abs() < 1e-10);
            prop_assert!(a >= 0.0 && a <= (d as f64).ln() + 1e-9);
        }
    }
}
