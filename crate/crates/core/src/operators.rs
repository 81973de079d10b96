//! Spin operators and the spin Hamiltonian in the x-product basis.
//!
//! Site 0 is the central spin, sites `1..=N` are the bath spins; the central
//! spin is the most significant tensor factor. On every site, basis state 0 is
//! `|+x>` and state 1 is `|-x>`, so `S^x`, every `I^x_i` and the total x-spin
//! are diagonal from the outset.

use faer::Mat;
use num_complex::Complex64 as c64;

use crate::error::Result;
use crate::linalg::{commutator, frobenius, kron_all, ONE, ZERO};
use crate::model::{Budget, ModelParams};

const I: c64 = c64::new(0.0, 1.0);

/// Single spin-1/2 operators in the `{|+x>, |-x>}` basis.
pub(crate) fn site_x() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 0) => c64::new(0.5, 0.0),
        (1, 1) => c64::new(-0.5, 0.0),
        _ => ZERO,
    })
}

pub(crate) fn site_y() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => 0.5 * I,
        (1, 0) => -0.5 * I,
        _ => ZERO,
    })
}

pub(crate) fn site_z() -> Mat<c64> {
    Mat::from_fn(2, 2, |i, j| if i != j { c64::new(0.5, 0.0) } else { ZERO })
}

fn embed(op: &Mat<c64>, site: usize, n_sites: usize) -> Mat<c64> {
    let id = Mat::<c64>::identity(2, 2);
    let factors: Vec<_> = (0..n_sites)
        .map(|k| if k == site { op.as_ref() } else { id.as_ref() })
        .collect();
    kron_all(&factors)
}

#[derive(Debug, Clone)]
pub struct SpinOperators {
    pub n: usize,
    pub d: usize,
    pub sx: Mat<c64>,
    pub sy: Mat<c64>,
    pub sz: Mat<c64>,
    /// Raising operator of the central spin along z, `|up><down|`.
    pub s_plus: Mat<c64>,
    pub s_minus: Mat<c64>,
    /// `I^x_i` for each bath spin.
    pub ix: Vec<Mat<c64>>,
    /// `S^x + sum_i I^x_i`.
    pub ix_total: Mat<c64>,
    /// Overhauser field components `A^k = sum_i J_i I^k_i`.
    pub overhauser: [Mat<c64>; 3],
    pub h_spin: Mat<c64>,
}

pub fn build_spin_operators(params: &ModelParams) -> Result<SpinOperators> {
    build_spin_operators_with(params, &Budget::default())
}

pub fn build_spin_operators_with(params: &ModelParams, budget: &Budget) -> Result<SpinOperators> {
    params.validate()?;
    let n = params.n();
    budget.check_map(n)?;
    let n_sites = n + 1;
    let d = 1usize << n_sites;

    let (x, y, z) = (site_x(), site_y(), site_z());
    let sx = embed(&x, 0, n_sites);
    let sy = embed(&y, 0, n_sites);
    let sz = embed(&z, 0, n_sites);
    let s_plus = Mat::from_fn(d, d, |i, j| sx[(i, j)] + I * sy[(i, j)]);
    let s_minus = Mat::from_fn(d, d, |i, j| sx[(i, j)] - I * sy[(i, j)]);

    let mut ix = Vec::with_capacity(n);
    let mut overhauser = [Mat::<c64>::zeros(d, d), Mat::zeros(d, d), Mat::zeros(d, d)];
    for (i, &j_i) in params.couplings.values.iter().enumerate() {
        let site = i + 1;
        let bx = embed(&x, site, n_sites);
        let by = embed(&y, site, n_sites);
        let bz = embed(&z, site, n_sites);
        overhauser[0] += j_i * &bx;
        overhauser[1] += j_i * &by;
        overhauser[2] += j_i * &bz;
        ix.push(bx);
    }

    let mut bath_x = Mat::<c64>::zeros(d, d);
    for b in &ix {
        bath_x += b;
    }
    let ix_total = &sx + &bath_x;

    let h_cs = &sx * &overhauser[0] + &sy * &overhauser[1] + &sz * &overhauser[2];
    let h_spin = h_cs + params.h * &sx + (params.z * params.h) * &bath_x;

    Ok(SpinOperators { n, d, sx, sy, sz, s_plus, s_minus, ix, ix_total, overhauser, h_spin })
}

impl SpinOperators {
    /// `||[H_spin, I^x_tot]|| / ||H_spin||` (zero for a vanishing Hamiltonian).
    pub fn symmetry_defect(&self) -> f64 {
        let c = commutator(self.h_spin.as_ref(), self.ix_total.as_ref());
        let norm = frobenius(self.h_spin.as_ref());
        if norm == 0.0 {
            frobenius(c.as_ref())
        } else {
            frobenius(c.as_ref()) / norm
        }
    }

    /// Total x-spin eigenvalue of an x-product basis state.
    pub fn m_of_basis_state(&self, index: usize) -> f64 {
        self.ix_total[(index, index)].re
    }

    pub fn identity(&self) -> Mat<c64> {
        Mat::from_fn(self.d, self.d, |i, j| if i == j { ONE } else { ZERO })
    }
}
