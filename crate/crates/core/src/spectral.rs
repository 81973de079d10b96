//! Stationary state, spectrum and convergence analysis of the pulse map.

use std::path::Path;

use faer::linalg::solvers::Solve;
use faer::{Col, Mat};
use num_complex::Complex64 as c64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::density::{ginibre, random_density, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermitize, trace, unvectorize, vec_norm, vectorize, ZERO};
use crate::pulse_map::{PulseSuperoperator, PulsedSystem};

/// An eigenvalue within this distance of 1 satisfies the unit-eigenvalue check.
pub const UNIT_WINDOW: f64 = 1e-9;
/// Eigenvalues within this distance of 1 count towards the fixed-point degeneracy.
/// Slow bath modes reach `1 - |lambda| ~ 1e-12`, while exact degeneracies come
/// out of the eigensolver within a few `1e-15`.
pub const DEGENERACY_WINDOW: f64 = 1e-13;
/// Default shift offset for inverse iteration.
pub const DEFAULT_SHIFT: f64 = 1e-8;
/// Guard on `|alpha_j|` and `1 - |lambda_j|` for the pulse-count estimate.
pub const MODE_GUARD: f64 = 1e-14;
/// Largest eigenvector condition number accepted as diagonalizable.
pub const MAX_EIGENVECTOR_CONDITION: f64 = 1e12;
/// Condition estimate of the bordered system above which the fixed point is
/// treated as degenerate; it scales like the inverse spectral gap.
pub const DEGENERACY_CONDITION: f64 = 1e14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StationaryMethod {
    /// Solve `(M - I) v = 0` with one balance equation replaced by `Tr v = 1`.
    TraceConstrained,
    /// Inverse iteration with shift `1 + offset`, started from the maximally mixed state.
    InverseIteration { offset: f64, max_iter: usize, tol: f64 },
}

impl Default for StationaryMethod {
    fn default() -> Self {
        StationaryMethod::TraceConstrained
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DegeneratePolicy {
    #[default]
    Error,
    /// Return the long-time limit of the maximally mixed start, i.e. its
    /// projection onto the unit eigenspace.
    ProjectMaximallyMixed,
}

#[derive(Debug, Clone)]
pub struct StationaryState {
    /// Trace-one, Hermitian fixed point in the map's eigenbasis.
    pub v0: DensityMatrix,
    /// `1 - max_{j >= 1} |lambda_j|`, when a spectrum is available.
    pub gap: Option<f64>,
    /// Number of unit eigenvalues (1 unless the fixed point is degenerate).
    pub degeneracy_count: usize,
    /// Estimated condition number of the bordered kernel system.
    pub condition_estimate: f64,
    /// `||M v0 - v0||_F`.
    pub residual: f64,
}

fn bordered_system(map: &PulseSuperoperator) -> Mat<c64> {
    let d = map.d;
    let big_d = map.dim();
    let mut b = Mat::from_fn(big_d, big_d, |i, j| {
        let m = map.entries[(i, j)];
        if i == j {
            m - 1.0
        } else {
            m
        }
    });
    // Row (0,0) of M - I is minus the sum of the other diagonal rows, since M
    // preserves the trace. Replace it by the trace functional.
    for j in 0..big_d {
        b[(0, j)] = if j % (d + 1) == 0 { c64::new(1.0, 0.0) } else { ZERO };
    }
    b
}

fn col_from(v: &[c64]) -> Col<c64> {
    Col::from_fn(v.len(), |i| v[i])
}

fn col_to_vec(c: &Col<c64>) -> Vec<c64> {
    (0..c.nrows()).map(|i| c[i]).collect()
}

fn finish(map: &PulseSuperoperator, system_tag: crate::density::BasisTag, raw: &[c64]) -> Result<(DensityMatrix, f64)> {
    let d = map.d;
    let v = unvectorize(raw, d);
    let v = hermitize(v.as_ref());
    let tr = trace(v.as_ref());
    if !(tr.norm() > 0.0) || !tr.re.is_finite() {
        return Err(Error::Numerical("fixed point has vanishing trace".into()));
    }
    let v = Mat::from_fn(d, d, |i, j| v[(i, j)] / tr.re);
    let mv = map.apply_operator(&v);
    let residual = crate::linalg::frobenius((&mv - &v).as_ref());
    Ok((DensityMatrix::new(v, system_tag), residual))
}

pub fn stationary_state(system: &PulsedSystem, method: StationaryMethod, policy: DegeneratePolicy) -> Result<StationaryState> {
    let map = &system.map;
    let big_d = map.dim();
    let b = bordered_system(map);
    let lu = b.partial_piv_lu();

    // Condition estimate of the bordered system from a few random solves.
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut inv_norm: f64 = 0.0;
    let mut probe = ginibre(&mut rng, big_d, 1);
    for _ in 0..3 {
        let n = (0..big_d).map(|i| probe[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        let x = Mat::from_fn(big_d, 1, |i, _| probe[(i, 0)] / n);
        let y = lu.solve(&x);
        let ny = (0..big_d).map(|i| y[(i, 0)].norm_sqr()).sum::<f64>().sqrt();
        inv_norm = inv_norm.max(if ny.is_finite() { ny } else { f64::INFINITY });
        probe = y;
        if !inv_norm.is_finite() {
            break;
        }
    }
    let b_norm = crate::linalg::frobenius(b.as_ref()) / (big_d as f64).sqrt();
    let condition_estimate = b_norm * inv_norm;
    let degenerate = !(condition_estimate < DEGENERACY_CONDITION);

    if degenerate {
        let count = count_unit_modes_hint(map).max(2);
        return match policy {
            DegeneratePolicy::Error => Err(Error::DegenerateFixedPoint { count }),
            DegeneratePolicy::ProjectMaximallyMixed => {
                let spec = full_spectrum(system, &system.maximally_mixed(), &crate::model::Budget::large())?;
                let units = spec.unit_indices();
                let mut p = Mat::<c64>::zeros(map.d, map.d);
                for &j in &units {
                    let v = spec.eigenoperator(j);
                    p += Mat::from_fn(map.d, map.d, |a, b| spec.alphas[j] * v[(a, b)]);
                }
                let (v0, residual) = finish(map, system.tag(), &vectorize(p.as_ref()))?;
                Ok(StationaryState { v0, gap: Some(spec.gap()), degeneracy_count: units.len(), condition_estimate, residual })
            }
        };
    }

    let raw = match method {
        StationaryMethod::TraceConstrained => {
            let mut rhs = Col::<c64>::zeros(big_d);
            rhs[0] = c64::new(1.0, 0.0);
            col_to_vec(&lu.solve(&rhs))
        }
        StationaryMethod::InverseIteration { offset, max_iter, tol } => inverse_iteration(map, offset, max_iter, tol)?,
    };
    if raw.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::DegenerateFixedPoint { count: 2 });
    }
    let (v0, residual) = finish(map, system.tag(), &raw)?;
    let min_ev = hermitian_eigenvalues(v0.matrix.as_ref())?[0];
    if min_ev < -1e-6 {
        return Err(Error::Positivity { min_eigenvalue: min_ev });
    }
    Ok(StationaryState { v0, gap: None, degeneracy_count: 1, condition_estimate, residual })
}

/// Counts unit eigenvalues through the full spectrum for small maps; larger
/// maps report the minimum of 2.
fn count_unit_modes_hint(map: &PulseSuperoperator) -> usize {
    if map.dim() > 256 {
        return 2;
    }
    match map.entries.eigenvalues() {
        Ok(ev) => ev.iter().filter(|l| (**l - 1.0).norm() <= DEGENERACY_WINDOW).count(),
        Err(_) => 2,
    }
}

fn inverse_iteration(map: &PulseSuperoperator, offset: f64, max_iter: usize, tol: f64) -> Result<Vec<c64>> {
    let big_d = map.dim();
    let d = map.d;
    let shift = 1.0 + offset;
    let a = Mat::from_fn(big_d, big_d, |i, j| if i == j { map.entries[(i, j)] - shift } else { map.entries[(i, j)] });
    let lu = a.partial_piv_lu();
    let mut x: Vec<c64> = (0..big_d).map(|mu| if mu % (d + 1) == 0 { c64::new(1.0 / d as f64, 0.0) } else { ZERO }).collect();
    for _ in 0..max_iter {
        let y = col_to_vec(&lu.solve(&col_from(&x)));
        let n = vec_norm(&y);
        if !n.is_finite() || n == 0.0 {
            return Err(Error::Numerical("inverse iteration broke down".into()));
        }
        let y: Vec<c64> = y.iter().map(|z| z / n).collect();
        // align the phase with the previous iterate before comparing
        let overlap: c64 = x.iter().zip(&y).map(|(a, b)| a.conj() * b).sum();
        let phase = if overlap.norm() > 0.0 { overlap.conj() / overlap.norm() } else { c64::new(1.0, 0.0) };
        let y: Vec<c64> = y.iter().map(|z| z * phase).collect();
        let xn = vec_norm(&x);
        let change = x.iter().zip(&y).map(|(a, b)| (a / xn - b).norm_sqr()).sum::<f64>().sqrt();
        x = y;
        if change < tol {
            break;
        }
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct SpectralDecomposition {
    pub d: usize,
    /// `lambda_0` is the eigenvalue closest to 1; the rest by `|lambda|` descending.
    pub eigenvalues: Vec<c64>,
    /// Column `j` is `vec(v_j)`, Frobenius-normalized.
    pub eigenvectors: Mat<c64>,
    /// Expansion coefficients of the initial state.
    pub alphas: Vec<c64>,
    /// `||V a - vec(rho_0)||`.
    pub expansion_residual: f64,
    /// 2-norm condition number of the eigenvector matrix.
    pub condition: f64,
}

pub fn full_spectrum(system: &PulsedSystem, rho0: &DensityMatrix, budget: &crate::model::Budget) -> Result<SpectralDecomposition> {
    budget.check_spectrum(system.params.n())?;
    let rho0 = system.to_eigen(rho0)?;
    let map = &system.map;
    let big_d = map.dim();
    let evd = map.entries.eigen().map_err(|e| Error::Numerical(format!("eigendecomposition failed: {e:?}")))?;
    let raw_vals: Vec<c64> = (0..big_d).map(|i| evd.S()[i]).collect();

    let mut order: Vec<usize> = (0..big_d).collect();
    let unit = (0..big_d)
        .min_by(|&a, &b| (raw_vals[a] - 1.0).norm().total_cmp(&(raw_vals[b] - 1.0).norm()))
        .unwrap_or(0);
    order.retain(|&i| i != unit);
    order.sort_by(|&a, &b| raw_vals[b].norm().total_cmp(&raw_vals[a].norm()).then(a.cmp(&b)));
    order.insert(0, unit);

    let u = evd.U();
    let eigenvalues: Vec<c64> = order.iter().map(|&i| raw_vals[i]).collect();
    let mut eigenvectors = Mat::<c64>::zeros(big_d, big_d);
    for (j, &src) in order.iter().enumerate() {
        let n = (0..big_d).map(|i| u[(i, src)].norm_sqr()).sum::<f64>().sqrt();
        for i in 0..big_d {
            eigenvectors[(i, j)] = u[(i, src)] / n;
        }
    }

    let sv = eigenvectors.singular_values().map_err(|e| Error::Numerical(format!("svd failed: {e:?}")))?;
    let condition = sv[0] / sv[sv.len() - 1];
    if !(condition <= MAX_EIGENVECTOR_CONDITION) {
        return Err(Error::Defective { condition });
    }

    let target = vectorize(rho0.matrix.as_ref());
    let a = eigenvectors.partial_piv_lu().solve(&col_from(&target));
    let alphas = col_to_vec(&a);
    let recon = &eigenvectors * &a;
    let expansion_residual = (0..big_d).map(|i| (recon[i] - target[i]).norm_sqr()).sum::<f64>().sqrt();

    Ok(SpectralDecomposition { d: map.d, eigenvalues, eigenvectors, alphas, expansion_residual, condition })
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenoperator(&self, j: usize) -> Mat<c64> {
        let big_d = self.eigenvectors.nrows();
        let v: Vec<c64> = (0..big_d).map(|i| self.eigenvectors[(i, j)]).collect();
        unvectorize(&v, self.d)
    }

    pub fn eigenoperator_trace(&self, j: usize) -> c64 {
        (0..self.d).map(|a| self.eigenvectors[(a * self.d + a, j)]).sum()
    }

    pub fn unit_indices(&self) -> Vec<usize> {
        (0..self.dim()).filter(|&j| (self.eigenvalues[j] - 1.0).norm() <= DEGENERACY_WINDOW).collect()
    }

    pub fn degeneracy_count(&self) -> usize {
        self.unit_indices().len()
    }

    /// `1 - max_{j >= 1} |lambda_j|`.
    pub fn gap(&self) -> f64 {
        1.0 - self.eigenvalues.iter().skip(1).map(|l| l.norm()).fold(0.0, f64::max)
    }

    /// `alpha_0 v_0`, the fixed point carrying the full trace of `rho_0`.
    pub fn stationary_operator(&self) -> Mat<c64> {
        let v = self.eigenoperator(0);
        let a = self.alphas[0];
        Mat::from_fn(self.d, self.d, |i, j| a * v[(i, j)])
    }

    /// `rho_n = sum_j alpha_j lambda_j^n v_j`, skipping `j = 0` when `exclude_fixed` is set.
    pub fn mode_sum(&self, n: f64, exclude_fixed: bool) -> Mat<c64> {
        let start = usize::from(exclude_fixed);
        let weights: Vec<c64> = (0..self.dim())
            .map(|j| if j < start { ZERO } else { self.alphas[j] * pow_real(self.eigenvalues[j], n) })
            .collect();
        let w = col_from(&weights);
        let v = &self.eigenvectors * &w;
        unvectorize(&col_to_vec(&v), self.d)
    }
}

/// `lambda^n` for real `n >= 0`, through the polar form.
fn pow_real(lambda: c64, n: f64) -> c64 {
    if n == 0.0 {
        return c64::new(1.0, 0.0);
    }
    let r = lambda.norm();
    if r == 0.0 {
        return ZERO;
    }
    c64::from_polar((n * ln_abs(lambda)).exp(), n * lambda.arg())
}

/// `ln |lambda|`, accurate both near the unit circle and for small `|lambda|`.
pub fn ln_abs(lambda: c64) -> f64 {
    let m = (lambda.re - 1.0) * (lambda.re + 1.0) + lambda.im * lambda.im;
    if m.abs() < 0.5 {
        0.5 * m.ln_1p()
    } else {
        lambda.norm().ln()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyCheck {
    pub name: String,
    pub pass: bool,
    pub detail: String,
    pub value: f64,
    /// Observations are informational and do not fail the report.
    pub informational: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub checks: Vec<PropertyCheck>,
    pub degeneracy_count: usize,
}

impl PropertyReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().filter(|c| !c.informational).all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&PropertyCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn check(name: &str, pass: bool, value: f64, detail: String, informational: bool) -> PropertyCheck {
    PropertyCheck { name: name.to_string(), pass, detail, value, informational }
}

/// Evaluates the general properties of a trace-preserving Lindblad period map
/// on a computed spectrum, plus model-specific observations.
///
/// The fixed-point checks use `stationary` when given; otherwise `alpha_0 v_0`
/// from the spectrum, which is contaminated by slow modes when the gap is tiny.
pub fn verify_map_properties(system: &PulsedSystem, spec: &SpectralDecomposition, stationary: Option<&DensityMatrix>, seed: u64) -> PropertyReport {
    let big_d = spec.dim();
    let unit = spec.unit_indices();
    let mut checks = Vec::new();

    let closest = (spec.eigenvalues[0] - 1.0).norm();
    checks.push(check(
        "unit_eigenvalue",
        closest <= UNIT_WINDOW,
        closest,
        format!("min |lambda - 1| = {closest:.3e}"),
        false,
    ));

    let worst_trace = (0..big_d)
        .into_par_iter()
        .filter(|&j| !unit.contains(&j))
        .map(|j| spec.eigenoperator_trace(j).norm())
        .reduce(|| 0.0, f64::max);
    checks.push(check(
        "traceless_nonunit",
        worst_trace <= 1e-8,
        worst_trace,
        format!("max |Tr v_j| over non-unit modes = {worst_trace:.3e}"),
        false,
    ));

    let unit_trace = unit.iter().map(|&j| spec.eigenoperator_trace(j).norm()).fold(0.0, f64::max);
    checks.push(check(
        "unit_trace_finite",
        unit_trace > 1e-6,
        unit_trace,
        format!("max |Tr v| over {} unit modes = {unit_trace:.3e}", unit.len()),
        false,
    ));

    let max_abs = spec.eigenvalues.iter().map(|l| l.norm()).fold(0.0, f64::max);
    checks.push(check(
        "spectral_radius",
        max_abs <= 1.0 + 1e-10,
        max_abs,
        format!("max |lambda| = {:.15}", max_abs),
        false,
    ));

    let pairing = (0..big_d)
        .into_par_iter()
        .map(|j| {
            let target = spec.eigenvalues[j].conj();
            spec.eigenvalues.iter().map(|l| (l - target).norm()).fold(f64::INFINITY, f64::min)
        })
        .reduce(|| 0.0, f64::max);
    checks.push(check(
        "conjugate_pairs",
        pairing <= 1e-9,
        pairing,
        format!("max distance of conj(lambda) to the spectrum = {pairing:.3e}"),
        false,
    ));

    let herm = unit_subspace_hermiticity(spec, &unit);
    checks.push(check(
        "unit_hermitizable",
        herm <= 1e-8,
        herm,
        format!("max ||v^dagger - P_unit v^dagger|| = {herm:.3e}"),
        false,
    ));

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trace_defect: f64 = 0.0;
    for _ in 0..5 {
        let c = ginibre(&mut rng, spec.d, spec.d);
        let scale = crate::linalg::frobenius(c.as_ref());
        trace_defect = trace_defect.max(system.map.trace_defect(&c) / scale);
    }
    checks.push(check(
        "trace_conservation",
        trace_defect <= 1e-10,
        trace_defect,
        format!("max |Tr(MC) - Tr(C)| / ||C|| over random C = {trace_defect:.3e}"),
        false,
    ));

    // Observations specific to this model.
    checks.push(check(
        "diagonalizable",
        spec.condition <= MAX_EIGENVECTOR_CONDITION,
        spec.condition,
        format!("eigenvector condition number {:.3e}", spec.condition),
        true,
    ));
    checks.push(check(
        "unit_nondegenerate",
        unit.len() == 1,
        unit.len() as f64,
        format!("{} unit eigenvalues", unit.len()),
        true,
    ));
    let v0 = match stationary.and_then(|s| system.to_eigen(s).ok()) {
        Some(s) => s.matrix,
        None => hermitize(spec.stationary_operator().as_ref()),
    };
    let herm_v0 = crate::linalg::hermiticity_defect(v0.as_ref());
    let min_ev = hermitian_eigenvalues(v0.as_ref()).map(|e| e[0]).unwrap_or(f64::NAN);
    let tr = trace(v0.as_ref()).re;
    checks.push(check(
        "unit_nonnegative",
        min_ev >= -1e-9 && (tr - 1.0).abs() <= 1e-10 && herm_v0 <= 1e-10,
        min_ev,
        format!("V0: min eigenvalue {min_ev:.3e}, trace {tr:.12}, hermiticity defect {herm_v0:.1e}"),
        true,
    ));
    let gap = spec.gap();
    checks.push(check("no_other_unimodular", gap > 0.0, gap, format!("gap 1 - max|lambda_j>0| = {gap:.3e}"), true));
    let max_im = spec.eigenvalues.iter().map(|l| l.im.abs()).fold(0.0, f64::max);
    checks.push(check("complex_eigenvalues", max_im > 1e-9, max_im, format!("max |Im lambda| = {max_im:.3e}"), true));

    PropertyReport { checks, degeneracy_count: unit.len() }
}

/// Largest distance of `v^dagger` from the span of the unit eigenoperators.
fn unit_subspace_hermiticity(spec: &SpectralDecomposition, unit: &[usize]) -> f64 {
    if unit.is_empty() {
        return f64::INFINITY;
    }
    let big_d = spec.dim();
    let basis = Mat::from_fn(big_d, unit.len(), |i, k| spec.eigenvectors[(i, unit[k])]);
    let q = basis.qr().compute_thin_Q();
    let mut worst: f64 = 0.0;
    for &j in unit {
        let v = spec.eigenoperator(j);
        let vd = vectorize(crate::linalg::dagger(v.as_ref()).as_ref());
        let w = col_from(&vd);
        let coeff = q.adjoint() * &w;
        let proj = &q * &coeff;
        let r = (0..big_d).map(|i| (w[i] - proj[i]).norm_sqr()).sum::<f64>().sqrt();
        worst = worst.max(r);
    }
    worst
}

/// `M` in the orthonormal Hermitian basis `{E_kk, (E_kl + E_lk)/sqrt2, i(E_kl - E_lk)/sqrt2}`.
///
/// Returns the real representation and the largest imaginary residue.
pub fn hermitian_basis_representation(map: &PulseSuperoperator) -> (Mat<f64>, f64) {
    let d = map.d;
    let big_d = map.dim();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let mut basis: Vec<Mat<c64>> = Vec::with_capacity(big_d);
    for k in 0..d {
        basis.push(Mat::from_fn(d, d, |i, j| if i == k && j == k { c64::new(1.0, 0.0) } else { ZERO }));
    }
    for k in 0..d {
        for l in k + 1..d {
            basis.push(Mat::from_fn(d, d, |i, j| {
                if (i, j) == (k, l) || (i, j) == (l, k) {
                    c64::new(s, 0.0)
                } else {
                    ZERO
                }
            }));
            basis.push(Mat::from_fn(d, d, |i, j| {
                if (i, j) == (k, l) {
                    c64::new(0.0, s)
                } else if (i, j) == (l, k) {
                    c64::new(0.0, -s)
                } else {
                    ZERO
                }
            }));
        }
    }
    let images: Vec<Mat<c64>> = basis.iter().map(|b| map.apply_operator(b)).collect();
    let mut real = Mat::<f64>::zeros(big_d, big_d);
    let mut worst: f64 = 0.0;
    for (m, bm) in basis.iter().enumerate() {
        for (n, img) in images.iter().enumerate() {
            // (B_m | M B_n) = Tr(B_m^dagger M B_n)
            let mut acc = ZERO;
            for i in 0..d {
                for j in 0..d {
                    acc += bm[(i, j)].conj() * img[(i, j)];
                }
            }
            real[(m, n)] = acc.re;
            worst = worst.max(acc.im.abs());
        }
    }
    (real, worst)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeCount {
    pub j: usize,
    pub n_j: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceEstimate {
    pub p_thresh: f64,
    pub n_j: Vec<ModeCount>,
    pub n_puls: u64,
    /// Index of the mode that sets `n_puls`.
    pub slowest_mode: Option<usize>,
    pub excluded_modes: usize,
}

/// `n_j = 1 + trunc(ln|p alpha_0 / alpha_j| / ln|lambda_j|)`, clamped to at least 1.
pub fn mode_pulse_count(p_thresh: f64, alpha0: c64, alpha_j: c64, lambda_j: c64) -> u64 {
    let ratio = (p_thresh * alpha0.norm() / alpha_j.norm()).ln() / ln_abs(lambda_j);
    let t = ratio.trunc();
    if !(t > 0.0) {
        1
    } else if t >= u64::MAX as f64 {
        u64::MAX
    } else {
        1 + t as u64
    }
}

pub fn convergence_pulses(spec: &SpectralDecomposition, p_thresh: f64) -> Result<ConvergenceEstimate> {
    if !(p_thresh > 0.0) {
        return Err(Error::InvalidParameter(format!("p_thresh must be positive, got {p_thresh}")));
    }
    let alpha0 = spec.alphas[0];
    let mut n_j = Vec::new();
    let mut excluded = 0;
    for j in 1..spec.dim() {
        let (a, l) = (spec.alphas[j], spec.eigenvalues[j]);
        if a.norm() <= MODE_GUARD {
            excluded += 1;
            continue;
        }
        if l.norm() >= 1.0 - MODE_GUARD {
            return Err(Error::NonConvergentMode { index: j, abs_lambda: l.norm(), abs_alpha: a.norm() });
        }
        n_j.push(ModeCount { j, n_j: mode_pulse_count(p_thresh, alpha0, a, l) });
    }
    let slow = n_j.iter().max_by_key(|m| m.n_j);
    let n_puls = slow.map(|m| m.n_j).unwrap_or(1);
    let slowest_mode = slow.map(|m| m.j);
    Ok(ConvergenceEstimate { p_thresh, n_j, n_puls, slowest_mode, excluded_modes: excluded })
}

/// Checks `||rho_n - V0|| <= p_thresh ||V0||` through the spectral mode sum.
pub fn verify_convergence(spec: &SpectralDecomposition, n: f64, p_thresh: f64) -> bool {
    convergence_distance(spec, n) <= p_thresh
}

/// `||rho_n - V0|| / ||V0||` from the mode sum, with `V0 = alpha_0 v_0`.
pub fn convergence_distance(spec: &SpectralDecomposition, n: f64) -> f64 {
    let dev = spec.mode_sum(n, true);
    let v0 = spec.stationary_operator();
    crate::linalg::frobenius(dev.as_ref()) / crate::linalg::frobenius(v0.as_ref())
}

/// The same criterion by applying the map `n` times to `rho0`.
pub fn verify_convergence_by_iteration(system: &PulsedSystem, rho0: &DensityMatrix, v0: &DensityMatrix, n: u64, p_thresh: f64) -> Result<bool> {
    let mut rho = system.to_eigen(rho0)?;
    let v0 = system.to_eigen(v0)?;
    for _ in 0..n {
        rho = system.map.apply_map(&rho)?;
    }
    let dev = crate::linalg::frobenius((&rho.matrix - &v0.matrix).as_ref());
    Ok(dev <= p_thresh * crate::linalg::frobenius(v0.matrix.as_ref()))
}

#[derive(Debug, Clone, Serialize)]
struct SpectrumRow {
    j: usize,
    re_lambda: f64,
    im_lambda: f64,
    abs_lambda: f64,
    abs_alpha: f64,
    trace_re: f64,
    trace_im: f64,
    n_j: Option<u64>,
}

pub fn write_spectrum_csv<W: std::io::Write>(spec: &SpectralDecomposition, conv: Option<&ConvergenceEstimate>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for j in 0..spec.dim() {
        let l = spec.eigenvalues[j];
        let tr = spec.eigenoperator_trace(j);
        let n_j = conv.and_then(|c| c.n_j.iter().find(|m| m.j == j).map(|m| m.n_j));
        w.serialize(SpectrumRow {
            j,
            re_lambda: l.re,
            im_lambda: l.im,
            abs_lambda: l.norm(),
            abs_alpha: spec.alphas[j].norm(),
            trace_re: tr.re,
            trace_im: tr.im,
            n_j,
        })?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum_csv_file(spec: &SpectralDecomposition, conv: Option<&ConvergenceEstimate>, path: &Path) -> Result<()> {
    write_spectrum_csv(spec, conv, std::fs::File::create(path)?)
}

/// Random trace-one state in the system's eigenbasis, for tests and validation.
pub fn random_state(system: &PulsedSystem, rng: &mut ChaCha8Rng) -> DensityMatrix {
    DensityMatrix::new(random_density(rng, system.map.d), system.tag())
}
