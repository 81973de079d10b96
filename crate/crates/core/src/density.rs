//! Density matrices tagged with the basis they are expressed in.

use faer::Mat;
use num_complex::Complex64 as c64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::basis::EigenBasis;
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigenvalues, hermiticity_defect, trace};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BasisTag {
    /// Product of `S^x`/`I^x_i` eigenstates.
    XProduct,
    /// Joint eigenbasis built for the parameters with this fingerprint.
    Eigen(String),
}

#[derive(Debug, Clone)]
pub struct DensityMatrix {
    pub matrix: Mat<c64>,
    pub basis: BasisTag,
}

impl DensityMatrix {
    pub fn new(matrix: Mat<c64>, basis: BasisTag) -> Self {
        Self { matrix, basis }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn maximally_mixed(d: usize, basis: BasisTag) -> Self {
        let inv = 1.0 / d as f64;
        Self::new(Mat::from_fn(d, d, |i, j| if i == j { c64::new(inv, 0.0) } else { c64::new(0.0, 0.0) }), basis)
    }

    pub fn trace(&self) -> c64 {
        trace(self.matrix.as_ref())
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(hermitian_eigenvalues(self.matrix.as_ref())?[0])
    }

    /// Checks Hermiticity, unit trace (both to 1e-10) and `lambda_min >= -1e-9`.
    pub fn check(&self) -> Result<()> {
        let herm = hermiticity_defect(self.matrix.as_ref());
        if herm > 1e-10 {
            return Err(Error::Numerical(format!("density matrix not Hermitian ({herm:e})")));
        }
        let tr = self.trace();
        if (tr - 1.0).norm() > 1e-10 {
            return Err(Error::Numerical(format!("density matrix trace {tr}")));
        }
        let min = self.min_eigenvalue()?;
        if min < -1e-9 {
            return Err(Error::Positivity { min_eigenvalue: min });
        }
        Ok(())
    }

    pub fn to_eigenbasis(&self, basis: &EigenBasis, params_hash: &str) -> Result<Self> {
        match &self.basis {
            BasisTag::XProduct => Ok(Self::new(basis.to_eigen(self.matrix.as_ref()), BasisTag::Eigen(params_hash.to_string()))),
            BasisTag::Eigen(h) if h == params_hash => Ok(self.clone()),
            BasisTag::Eigen(h) => Err(Error::BasisMismatch(format!("state is in eigenbasis {h}, expected {params_hash}"))),
        }
    }

    pub fn to_x_product(&self, basis: &EigenBasis, params_hash: &str) -> Result<Self> {
        match &self.basis {
            BasisTag::XProduct => Ok(self.clone()),
            BasisTag::Eigen(h) if h == params_hash => Ok(Self::new(basis.from_eigen(self.matrix.as_ref()), BasisTag::XProduct)),
            BasisTag::Eigen(h) => Err(Error::BasisMismatch(format!("state is in eigenbasis {h}, expected {params_hash}"))),
        }
    }
}

pub fn ginibre<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> Mat<c64> {
    Mat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c64::new(re, im)
    })
}

/// Full-rank random state `G G^dagger / Tr(G G^dagger)`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat<c64> {
    let g = ginibre(rng, d, d);
    let rho = &g * g.adjoint();
    let tr = trace(rho.as_ref()).re;
    Mat::from_fn(d, d, |i, j| rho[(i, j)] / tr)
}

pub fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat<c64> {
    let g = ginibre(rng, d, d);
    Mat::from_fn(d, d, |i, j| (g[(i, j)] + g[(j, i)].conj()) * 0.5)
}

/// Haar-ish random unitary from the QR factor of a Ginibre matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, d: usize) -> Mat<c64> {
    ginibre(rng, d, d).qr().compute_Q()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_states_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for d in [2, 4, 8] {
            let rho = DensityMatrix::new(random_density(&mut rng, d), BasisTag::XProduct);
            rho.check().unwrap();
            assert!(rho.min_eigenvalue().unwrap() > 0.0);
        }
    }

    #[test]
    fn random_unitary_is_unitary() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let u = random_unitary(&mut rng, 6);
        let p = u.adjoint() * &u;
        assert!(crate::linalg::max_abs_diff(p.as_ref(), Mat::<c64>::identity(6, 6).as_ref()) < 1e-13);
    }

    #[test]
    fn check_flags_bad_trace() {
        let rho = DensityMatrix::maximally_mixed(4, BasisTag::XProduct);
        rho.check().unwrap();
        let doubled = DensityMatrix::new(Mat::from_fn(4, 4, |i, j| rho.matrix[(i, j)] * 2.0), BasisTag::XProduct);
        assert!(doubled.check().is_err());
    }
}
