//! Brute-force reference: the full Lindblad dynamics with the trion kept
//! explicitly, integrated with classic fixed-step RK4.
//!
//! Everything here is built independently of the closed-form map, in the
//! z-product basis. The central degree of freedom has three states ordered
//! `{up, down, T}` and is the most significant tensor factor; the spin-only
//! subspace is therefore the leading `2^(N+1)` block.

use std::io::Write;
use std::path::Path;

use faer::{Mat, MatRef};
use num_complex::Complex64 as c64;
use serde::Serialize;

use crate::couplings::CouplingSet;
use crate::density::{BasisTag, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{kron, kron_all, trace, ONE, ZERO};
use crate::model::ModelParams;
use crate::observables::{observe, ObservableSet};
use crate::pulse_map::PulsedSystem;

pub const DEFAULT_DT: f64 = 1e-3;
/// Largest residual trion population tolerated after one period.
pub const MAX_TRION_RESIDUAL: f64 = 1e-8;
const MAX_STEPS: u64 = 1 << 32;

const I: c64 = c64::new(0.0, 1.0);
const UP: usize = 0;
const DOWN: usize = 1;
const TRION: usize = 2;

/// Hamiltonian and jump operator on the `3 * 2^N` dimensional space.
#[derive(Debug, Clone)]
pub struct FullSpaceModel {
    pub n: usize,
    pub gamma: f64,
    /// `H_spin + eps |T><T|`; spin operators vanish on the trion block.
    pub hamiltonian: Mat<c64>,
    /// `c = |up><T|`.
    pub jump: Mat<c64>,
    /// `H - i gamma c^dagger c`.
    effective: Mat<c64>,
    bath_zeeman: Mat<c64>,
}

fn pauli_halves() -> [Mat<c64>; 3] {
    let h = c64::new(0.5, 0.0);
    [
        Mat::from_fn(2, 2, |i, j| if i != j { h } else { ZERO }),
        Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => -0.5 * I,
            (1, 0) => 0.5 * I,
            _ => ZERO,
        }),
        Mat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 0) => h,
            (1, 1) => -h,
            _ => ZERO,
        }),
    ]
}

fn ket_bra(a: usize, b: usize) -> Mat<c64> {
    Mat::from_fn(3, 3, |i, j| if i == a && j == b { ONE } else { ZERO })
}

fn bath_site(op: &Mat<c64>, site: usize, n: usize) -> Mat<c64> {
    let id = Mat::<c64>::identity(2, 2);
    let factors: Vec<_> = (0..n).map(|k| if k == site { op.as_ref() } else { id.as_ref() }).collect();
    kron_all(&factors)
}

impl FullSpaceModel {
    /// No regime checks: `gamma = 0` or unresolved decay are allowed here.
    pub fn new(couplings: &CouplingSet, h: f64, z: f64, gamma: f64, epsilon: f64) -> Result<Self> {
        if gamma < 0.0 {
            return Err(Error::InvalidParameter("gamma must be non-negative".into()));
        }
        let n = couplings.values.len();
        let nb = 1usize << n;
        let halves = pauli_halves();
        let central: [Mat<c64>; 3] = std::array::from_fn(|k| {
            Mat::from_fn(3, 3, |i, j| if i < 2 && j < 2 { halves[k][(i, j)] } else { ZERO })
        });

        let id_b = Mat::<c64>::identity(nb, nb);
        let id_3 = Mat::<c64>::identity(3, 3);
        let big = 3 * nb;
        let mut hamiltonian = Mat::<c64>::zeros(big, big);
        let mut bath_zeeman = Mat::<c64>::zeros(nb, nb);
        for (i, &j_i) in couplings.values.iter().enumerate() {
            for k in 0..3 {
                let ik = bath_site(&halves[k], i, n);
                hamiltonian += j_i * kron(central[k].as_ref(), ik.as_ref());
                if k == 0 {
                    bath_zeeman += (z * h) * &ik;
                }
            }
        }
        hamiltonian += h * kron(central[0].as_ref(), id_b.as_ref());
        hamiltonian += kron(id_3.as_ref(), bath_zeeman.as_ref());
        hamiltonian += epsilon * kron(ket_bra(TRION, TRION).as_ref(), id_b.as_ref());

        let jump = kron(ket_bra(UP, TRION).as_ref(), id_b.as_ref());
        let trion_projector = kron(ket_bra(TRION, TRION).as_ref(), id_b.as_ref());
        let effective = Mat::from_fn(big, big, |i, j| hamiltonian[(i, j)] - I * gamma * trion_projector[(i, j)]);
        Ok(Self { n, gamma, hamiltonian, jump, effective, bath_zeeman })
    }

    pub fn from_params(params: &ModelParams) -> Result<Self> {
        Self::new(&params.couplings, params.h, params.z, params.gamma, params.epsilon)
    }

    pub fn bath_dim(&self) -> usize {
        1 << self.n
    }

    pub fn dim(&self) -> usize {
        3 * self.bath_dim()
    }

    /// `-i [H, rho] - gamma (c^dag c rho + rho c^dag c - 2 c rho c^dag)`.
    pub fn rhs(&self, rho: MatRef<'_, c64>) -> Mat<c64> {
        let k = &self.effective;
        let k_rho = k * rho;
        let rho_kdag = rho * k.adjoint();
        let feed = &self.jump * rho * self.jump.adjoint();
        Mat::from_fn(rho.nrows(), rho.ncols(), |i, j| {
            -I * (k_rho[(i, j)] - rho_kdag[(i, j)]) + (2.0 * self.gamma) * feed[(i, j)]
        })
    }

    /// Bath Zeeman term `z h sum_i I^x_i` on the bath alone.
    pub fn bath_zeeman(&self) -> &Mat<c64> {
        &self.bath_zeeman
    }
}

#[derive(Debug, Clone)]
pub struct FullStateDensity {
    pub n: usize,
    pub matrix: Mat<c64>,
}

impl FullStateDensity {
    /// Embeds a spin-only state (z-product basis, `2^(N+1)` square).
    pub fn from_spin_block(rho_s: MatRef<'_, c64>, n: usize) -> Self {
        let d = rho_s.nrows();
        let big = 3 * (1 << n);
        let matrix = Mat::from_fn(big, big, |i, j| if i < d && j < d { rho_s[(i, j)] } else { ZERO });
        Self { n, matrix }
    }

    fn nb(&self) -> usize {
        1 << self.n
    }

    fn block(&self, a: usize, b: usize) -> Mat<c64> {
        let nb = self.nb();
        Mat::from_fn(nb, nb, |i, j| self.matrix[(a * nb + i, b * nb + j)])
    }

    /// Spin block `rho_S` (central spin without the trion).
    pub fn spin_block(&self) -> Mat<c64> {
        let d = 2 * self.nb();
        Mat::from_fn(d, d, |i, j| self.matrix[(i, j)])
    }

    /// `rho_TT = <T|rho|T>`, a bath operator.
    pub fn trion_block(&self) -> Mat<c64> {
        self.block(TRION, TRION)
    }

    pub fn central_block(&self, a: usize, b: usize) -> Mat<c64> {
        self.block(a, b)
    }

    pub fn trion_population(&self) -> f64 {
        trace(self.trion_block().as_ref()).re
    }

    pub fn trace(&self) -> c64 {
        trace(self.matrix.as_ref())
    }
}

/// The pulse unitary `c^dag + c + |down><down|` on the full space.
pub fn pulse_unitary(n: usize) -> Mat<c64> {
    let u3 = &ket_bra(TRION, UP) + &ket_bra(UP, TRION) + &ket_bra(DOWN, DOWN);
    kron(u3.as_ref(), Mat::<c64>::identity(1 << n, 1 << n).as_ref())
}

pub fn apply_pulse_full(rho: &FullStateDensity) -> FullStateDensity {
    let u = pulse_unitary(rho.n);
    FullStateDensity { n: rho.n, matrix: &u * &rho.matrix * u.adjoint() }
}

/// Largest residual of the post-pulse block identities for a spin-only input:
/// `rho_TT(+) = <up|rho_S(-)|up>`, `rho_S(+) = |down><down| rho_S(-) |down><down|`.
pub fn pulse_identity_residual(before: &FullStateDensity, after: &FullStateDensity) -> f64 {
    let nb = before.nb();
    let mut worst: f64 = 0.0;
    let up_up = before.central_block(UP, UP);
    let tt = after.trion_block();
    worst = worst.max(crate::linalg::max_abs_diff(up_up.as_ref(), tt.as_ref()));
    let d = 2 * nb;
    let s_after = after.spin_block();
    for i in 0..d {
        for j in 0..d {
            let both_down = i >= nb && j >= nb;
            let expect = if both_down { before.matrix[(i, j)] } else { ZERO };
            worst = worst.max((s_after[(i, j)] - expect).norm());
        }
    }
    worst
}

/// Fixed-step RK4 over `duration`; the step is shrunk so it divides the interval.
pub fn evolve_lindblad(rho: &FullStateDensity, duration: f64, model: &FullSpaceModel, dt: f64) -> Result<FullStateDensity> {
    if !(duration > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidParameter("duration and dt must be positive".into()));
    }
    let steps = (duration / dt).ceil();
    if !steps.is_finite() || steps > MAX_STEPS as f64 {
        return Err(Error::Capacity(format!("{steps} integration steps requested")));
    }
    let steps = steps as u64;
    let h = duration / steps as f64;
    let mut x = rho.matrix.clone();
    for _ in 0..steps {
        x = rk4_step(x.as_ref(), h, model);
    }
    Ok(FullStateDensity { n: rho.n, matrix: x })
}

fn rk4_step(x: MatRef<'_, c64>, h: f64, model: &FullSpaceModel) -> Mat<c64> {
    let k1 = model.rhs(x);
    let x2 = x + (0.5 * h) * &k1;
    let k2 = model.rhs(x2.as_ref());
    let x3 = x + (0.5 * h) * &k2;
    let k3 = model.rhs(x3.as_ref());
    let x4 = x + h * &k3;
    let k4 = model.rhs(x4.as_ref());
    x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
}

/// `W = H^{(x) (N+1)}`: columns are x-product states in z-product coordinates.
pub fn x_to_z_transform(n_sites: usize) -> Mat<c64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let had = Mat::from_fn(2, 2, |i, j| c64::new(if i == 1 && j == 1 { -s } else { s }, 0.0));
    let factors: Vec<_> = (0..n_sites).map(|_| had.as_ref()).collect();
    kron_all(&factors)
}

#[derive(Debug, Clone)]
pub struct OneShotResult {
    /// Spin state just before the next pulse, x-product basis.
    pub rho: DensityMatrix,
    pub trion_residual: f64,
    pub trace_drift: f64,
}

/// One period by brute force: pulse, then `T_rep` of Lindblad evolution.
pub fn one_period_reference(rho_s: &DensityMatrix, params: &ModelParams, dt: f64) -> Result<OneShotResult> {
    let model = FullSpaceModel::from_params(params)?;
    one_period_with_model(rho_s, &model, params.t_rep, dt)
}

pub fn one_period_with_model(rho_s: &DensityMatrix, model: &FullSpaceModel, t_rep: f64, dt: f64) -> Result<OneShotResult> {
    if rho_s.basis != BasisTag::XProduct {
        return Err(Error::BasisMismatch("reference integrator expects an x-product state".into()));
    }
    let n = model.n;
    let d = 2 << n;
    if rho_s.dim() != d {
        return Err(Error::BasisMismatch(format!("state dimension {} vs {d}", rho_s.dim())));
    }
    let w = x_to_z_transform(n + 1);
    let rho_z = &w * &rho_s.matrix * w.adjoint();
    let full = FullStateDensity::from_spin_block(rho_z.as_ref(), n);
    let start_trace = full.trace();
    let pulsed = apply_pulse_full(&full);
    let evolved = evolve_lindblad(&pulsed, t_rep, model, dt)?;

    let trion_residual = evolved.trion_population();
    if trion_residual > MAX_TRION_RESIDUAL {
        return Err(Error::RegimeViolation(trion_residual));
    }
    let trace_drift = (evolved.trace() - start_trace).norm();
    let spin_z = evolved.spin_block();
    let spin_x = w.adjoint() * &spin_z * &w;
    Ok(OneShotResult { rho: DensityMatrix::new(spin_x, BasisTag::XProduct), trion_residual, trace_drift })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrajectoryPoint {
    pub pulse_index: u64,
    pub entropy: f64,
    pub bath_px: f64,
    pub central_px: f64,
    pub central_py: f64,
    pub central_pz: f64,
    pub trion_residual: f64,
}

impl TrajectoryPoint {
    fn new(pulse_index: u64, obs: &ObservableSet, trion_residual: f64) -> Self {
        let [px, py, pz] = obs.central_polarization;
        Self {
            pulse_index,
            entropy: obs.entropy,
            bath_px: obs.bath_polarization_x,
            central_px: px,
            central_py: py,
            central_pz: pz,
            trion_residual,
        }
    }
}

/// How a period is propagated when iterating pulses.
#[derive(Debug, Clone, Copy)]
pub enum Propagator {
    /// The closed-form superoperator.
    Map,
    /// Brute-force integration with the given step.
    Reference { dt: f64 },
}

pub const MAX_PULSES: u64 = 1_000_000;

/// Applies `n` pulses to `rho0`, sampling observables every `stride` pulses
/// (plus the final one).
pub fn iterate_pulses(
    system: &PulsedSystem,
    rho0: &DensityMatrix,
    n: u64,
    stride: u64,
    propagator: Propagator,
) -> Result<(Vec<TrajectoryPoint>, DensityMatrix)> {
    if n > MAX_PULSES {
        return Err(Error::Capacity(format!("{n} pulses exceeds the desk-scale limit {MAX_PULSES}")));
    }
    let stride = stride.max(1);
    let mut rho = match propagator {
        Propagator::Map => system.to_eigen(rho0)?,
        Propagator::Reference { .. } => system.to_x_product(rho0)?,
    };
    let model = match propagator {
        Propagator::Reference { .. } => Some(FullSpaceModel::from_params(&system.params)?),
        Propagator::Map => None,
    };
    let mut points = vec![TrajectoryPoint::new(0, &observe(system, &rho)?, 0.0)];
    for k in 1..=n {
        let mut residual = 0.0;
        rho = match (propagator, &model) {
            (Propagator::Reference { dt }, Some(m)) => {
                let r = one_period_with_model(&rho, m, system.params.t_rep, dt)?;
                residual = r.trion_residual;
                r.rho
            }
            _ => system.map.apply_map(&rho)?,
        };
        if k % stride == 0 || k == n {
            points.push(TrajectoryPoint::new(k, &observe(system, &rho)?, residual));
        }
    }
    Ok((points, rho))
}

pub fn write_trajectory_csv(points: &[TrajectoryPoint], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_trajectory_csv_to<W: Write>(points: &[TrajectoryPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::random_density;
    use crate::linalg::{frobenius, max_abs_diff};
    use crate::operators::{build_spin_operators, site_x, site_y, site_z};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn hadamard_maps_x_basis_operators_to_z_basis() {
        let w = x_to_z_transform(1);
        let z_ops = pauli_halves();
        for (x_op, z_op) in [site_x(), site_y(), site_z()].iter().zip(z_ops.iter()) {
            let back = w.adjoint() * z_op * &w;
            assert!(max_abs_diff(back.as_ref(), x_op.as_ref()) < 1e-15);
        }
    }

    #[test]
    fn spin_hamiltonian_matches_spin_model() {
        let p = ModelParams::defaults(2, 2.7).unwrap();
        let ops = build_spin_operators(&p).unwrap();
        let m = FullSpaceModel::from_params(&p).unwrap();
        let d = ops.d;
        let hz = Mat::from_fn(d, d, |i, j| m.hamiltonian[(i, j)]);
        let w = x_to_z_transform(3);
        let hx = w.adjoint() * &hz * &w;
        assert!(max_abs_diff(hx.as_ref(), ops.h_spin.as_ref()) < 1e-14);
    }

    #[test]
    fn pulse_actions() {
        let n = 1;
        let bath = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(0.5, 0.0) } else { ZERO });
        let up = FullStateDensity { n, matrix: kron(ket_bra(UP, UP).as_ref(), bath.as_ref()) };
        let out = apply_pulse_full(&up);
        let t = kron(ket_bra(TRION, TRION).as_ref(), bath.as_ref());
        assert!(max_abs_diff(out.matrix.as_ref(), t.as_ref()) < 1e-15);

        let down = FullStateDensity { n, matrix: kron(ket_bra(DOWN, DOWN).as_ref(), bath.as_ref()) };
        assert!(max_abs_diff(apply_pulse_full(&down).matrix.as_ref(), down.matrix.as_ref()) < 1e-15);

        let u = pulse_unitary(2);
        let uu = &u * &u;
        assert!(max_abs_diff(uu.as_ref(), Mat::<c64>::identity(12, 12).as_ref()) < 1e-15);
    }

    #[test]
    fn pulse_block_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rho = random_density(&mut rng, 8);
        let before = FullStateDensity::from_spin_block(rho.as_ref(), 2);
        let after = apply_pulse_full(&before);
        assert!(pulse_identity_residual(&before, &after) < 1e-15);
    }

    #[test]
    fn larmor_precession_period() {
        let h = 1.7;
        let m = FullSpaceModel::new(&CouplingSet::explicit(vec![]).unwrap(), h, 1e-3, 0.0, 0.0).unwrap();
        // |+z> in the 3-level space
        let mut rho = Mat::<c64>::zeros(3, 3);
        rho[(0, 0)] = ONE;
        let start = FullStateDensity { n: 0, matrix: rho.clone() };
        let period = 2.0 * std::f64::consts::PI / h;
        let end = evolve_lindblad(&start, period, &m, DEFAULT_DT).unwrap();
        assert!(max_abs_diff(end.matrix.as_ref(), rho.as_ref()) < 1e-8);
        let half = evolve_lindblad(&start, period / 2.0, &m, DEFAULT_DT).unwrap();
        // half a turn about x sends up to down
        assert!((half.matrix[(1, 1)].re - 1.0).abs() < 1e-8);
    }

    #[test]
    fn trion_decay_matches_closed_form() {
        let p = ModelParams::defaults(2, 3.0).unwrap();
        let m = FullSpaceModel::from_params(&p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let rho_tt0 = random_density(&mut rng, 4);
        let mut matrix = Mat::<c64>::zeros(12, 12);
        for i in 0..4 {
            for j in 0..4 {
                matrix[(8 + i, 8 + j)] = rho_tt0[(i, j)];
            }
        }
        let start = FullStateDensity { n: 2, matrix };
        let t = 1.3;
        let end = evolve_lindblad(&start, t, &m, DEFAULT_DT).unwrap();
        // e^{-2 gamma t} e^{-i H_nZ t} rho e^{i H_nZ t}; H_nZ is diagonal-free here, use eigen
        let (vals, vecs) = crate::linalg::hermitian_eigen(m.bath_zeeman().as_ref()).unwrap();
        let phase = Mat::from_fn(4, 4, |i, j| if i == j { c64::from_polar(1.0, -vals[i] * t) } else { ZERO });
        let u = &vecs * &phase * vecs.adjoint();
        let decay = (-2.0 * p.gamma * t).exp();
        let expect = Mat::from_fn(4, 4, |i, j| decay * (&u * &rho_tt0 * u.adjoint())[(i, j)]);
        assert!(max_abs_diff(end.trion_block().as_ref(), expect.as_ref()) < 1e-8);

        let full_period = evolve_lindblad(&start, p.t_rep, &m, DEFAULT_DT).unwrap();
        let expect = (-2.0 * p.gamma * p.t_rep).exp();
        assert!((expect - 2.3e-14).abs() < 1e-15);
        assert!((full_period.trion_population() - expect).abs() < 1e-9 * expect);
        assert!((full_period.trace() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn one_period_preserves_trace() {
        let p = ModelParams::defaults(1, 2.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rho = DensityMatrix::new(random_density(&mut rng, 4), BasisTag::XProduct);
        let r = one_period_reference(&rho, &p, DEFAULT_DT).unwrap();
        assert!(r.trace_drift < 1e-9);
        assert!((r.rho.trace() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn decoupled_bath_spin_returns_after_commensurate_period() {
        // z h T_rep = 2 pi: the bath spin makes exactly one Larmor turn per period
        let z = 0.1;
        let t_rep = 4.0 * std::f64::consts::PI;
        let h = 2.0 * std::f64::consts::PI / (z * t_rep);
        let p = ModelParams::new(CouplingSet::decoupled(1), h, z, 1.25, t_rep).unwrap();
        let w = x_to_z_transform(1);
        // bath spin along +z (not an I^x eigenstate), central spin maximally mixed
        let bath_z = Mat::from_fn(2, 2, |i, j| if i == 0 && j == 0 { ONE } else { ZERO });
        let bath_x = w.adjoint() * &bath_z * &w;
        let central = Mat::from_fn(2, 2, |i, j| if i == j { c64::new(0.5, 0.0) } else { ZERO });
        let rho = DensityMatrix::new(kron(central.as_ref(), bath_x.as_ref()), BasisTag::XProduct);
        let out = one_period_reference(&rho, &p, DEFAULT_DT).unwrap();
        let reduced = Mat::from_fn(2, 2, |i, j| out.rho.matrix[(i, j)] + out.rho.matrix[(2 + i, 2 + j)]);
        assert!(max_abs_diff(reduced.as_ref(), bath_x.as_ref()) < 1e-8, "{:?}", reduced);
    }

    #[test]
    fn reference_matches_closed_form_map() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for (n, h) in [(0, 0.9), (1, 2.3), (2, 1.1)] {
            let p = ModelParams::defaults(n, h).unwrap();
            let sys = PulsedSystem::new(&p).unwrap();
            for _ in 0..3 {
                let rho = DensityMatrix::new(random_density(&mut rng, p.dim()), BasisTag::XProduct);
                let reference = one_period_reference(&rho, &p, DEFAULT_DT).unwrap().rho;
                let mapped = sys.to_x_product(&sys.map.apply_map(&sys.to_eigen(&rho).unwrap()).unwrap()).unwrap();
                let err = frobenius((&reference.matrix - &mapped.matrix).as_ref());
                assert!(err <= 1e-6, "N={n}: {err:e}");
            }
        }
    }

    #[test]
    fn trion_energy_is_irrelevant() {
        let mut p = ModelParams::defaults(1, 1.4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let rho = DensityMatrix::new(random_density(&mut rng, 4), BasisTag::XProduct);
        let a = one_period_reference(&rho, &p, DEFAULT_DT).unwrap();
        p.epsilon = 1000.0;
        let b = one_period_reference(&rho, &p, DEFAULT_DT).unwrap();
        let diff = &a.rho.matrix - &b.rho.matrix;
        assert!(frobenius(diff.as_ref()) <= 1e-8);
    }
}
