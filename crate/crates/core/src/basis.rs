//! Joint eigenbasis of `H_spin` and the total x-spin.

use std::path::Path;

use faer::{Mat, MatRef};
use num_complex::Complex64 as c64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{frobenius, hermitian_eigen};
use crate::operators::SpinOperators;

/// Off-sector weight of `H_spin` (relative) above which the sector split fails.
const SECTOR_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub n: usize,
    pub d: usize,
    /// `E_alpha`, ascending within each sector.
    pub energies: Vec<f64>,
    /// `m_alpha`, ascending.
    pub m_values: Vec<f64>,
    /// Columns are the eigenvectors `|alpha>` in the x-product basis.
    pub unitary: Mat<c64>,
    /// Sector of `alpha`, counted from the lowest `m`; equals the number of `+x` spins.
    pub sector_index: Vec<usize>,
}

pub fn joint_eigenbasis(ops: &SpinOperators) -> Result<EigenBasis> {
    let d = ops.d;
    let n_sites = ops.n + 1;
    let h = &ops.h_spin;

    let m_of: Vec<f64> = (0..d).map(|s| ops.m_of_basis_state(s)).collect();
    let sector_of = |s: usize| -> usize { (m_of[s] + 0.5 * n_sites as f64).round() as usize };

    let mut off = 0.0;
    for j in 0..d {
        for i in 0..d {
            if sector_of(i) != sector_of(j) {
                off += h[(i, j)].norm_sqr();
            }
        }
    }
    let scale = frobenius(h.as_ref()).max(f64::MIN_POSITIVE);
    if off.sqrt() > SECTOR_TOLERANCE * scale {
        return Err(Error::Diagonalization(format!(
            "H_spin mixes total x-spin sectors (off-sector norm {:e})",
            off.sqrt()
        )));
    }

    let mut energies = Vec::with_capacity(d);
    let mut m_values = Vec::with_capacity(d);
    let mut sector_index = Vec::with_capacity(d);
    let mut unitary = Mat::<c64>::zeros(d, d);

    let mut col = 0;
    for sector in 0..=n_sites {
        let members: Vec<usize> = (0..d).filter(|&s| sector_of(s) == sector).collect();
        if members.is_empty() {
            continue;
        }
        let k = members.len();
        let block = Mat::from_fn(k, k, |a, b| h[(members[a], members[b])]);
        let (vals, vecs) = hermitian_eigen(block.as_ref())?;
        let m = sector as f64 - 0.5 * n_sites as f64;
        for (c, e) in vals.iter().enumerate() {
            for (r, &s) in members.iter().enumerate() {
                unitary[(s, col)] = vecs[(r, c)];
            }
            energies.push(*e);
            m_values.push(m);
            sector_index.push(sector);
            col += 1;
        }
    }

    let basis = EigenBasis { n: ops.n, d, energies, m_values, unitary, sector_index };
    let residual = basis.diagonal_residual(h.as_ref());
    if residual > SECTOR_TOLERANCE * scale.max(1.0) {
        return Err(Error::Diagonalization(format!("residual off-diagonal norm {residual:e}")));
    }
    Ok(basis)
}

impl EigenBasis {
    /// `U^dagger A U`.
    pub fn to_eigen(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        self.unitary.adjoint() * a * &self.unitary
    }

    /// `U A U^dagger`.
    pub fn from_eigen(&self, a: MatRef<'_, c64>) -> Mat<c64> {
        &self.unitary * a * self.unitary.adjoint()
    }

    /// Frobenius norm of the off-diagonal part of `U^dagger A U`.
    pub fn diagonal_residual(&self, a: MatRef<'_, c64>) -> f64 {
        let t = self.to_eigen(a);
        let mut s = 0.0;
        for j in 0..self.d {
            for i in 0..self.d {
                if i != j {
                    s += t[(i, j)].norm_sqr();
                }
            }
        }
        s.sqrt()
    }

    pub fn sector_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n + 2];
        for &s in &self.sector_index {
            sizes[s] += 1;
        }
        sizes
    }

    pub fn dump(&self, couplings: &[f64]) -> BasisDump {
        let rows = |f: fn(c64) -> f64| -> Vec<Vec<f64>> {
            (0..self.d).map(|i| (0..self.d).map(|j| f(self.unitary[(i, j)])).collect()).collect()
        };
        BasisDump {
            energies: self.energies.clone(),
            m_values: self.m_values.clone(),
            unitary_re: rows(|z| z.re),
            unitary_im: rows(|z| z.im),
            couplings: couplings.to_vec(),
        }
    }

    pub fn write_json(&self, couplings: &[f64], path: &Path) -> Result<()> {
        let file = std::fs::File::create(path)?;
        serde_json::to_writer_pretty(std::io::BufWriter::new(file), &self.dump(couplings))?;
        Ok(())
    }
}

/// Debug dump of an eigenbasis; `unitary_*` are row-major `d x d` arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDump {
    pub energies: Vec<f64>,
    pub m_values: Vec<f64>,
    pub unitary_re: Vec<Vec<f64>>,
    pub unitary_im: Vec<Vec<f64>>,
    pub couplings: Vec<f64>,
}
