//! The pulse-to-pulse superoperator `M` in closed form.
//!
//! `M` maps `rho(n T_rep -)` to `rho((n+1) T_rep -)`: an instantaneous pulse
//! `|up> <-> |T>` followed by trion decay and free precession until the next
//! pulse. Trions are assumed to have fully decayed by then, so the decay
//! integral runs to infinity and each matrix element is a product of two
//! single-index operator elements times a phase and a Lorentzian-like weight
//! [`g_factor`].
//!
//! Indices are pairs `mu = (alpha, beta)` of joint eigenbasis labels, flattened
//! row-major as `alpha * d + beta`.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::{Col, Mat};
use num_complex::Complex64 as c64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::basis::{joint_eigenbasis, EigenBasis};
use crate::density::{BasisTag, DensityMatrix};
use crate::error::{Error, Result};
use crate::linalg::{trace, unvectorize, vectorize};
use crate::model::{Budget, ModelParams};
use crate::operators::{build_spin_operators_with, SpinOperators};

/// `gamma / (2 gamma - i [E_a - E_b + z h (m_b - m_a + tau)])`.
pub fn g_factor(alpha: usize, beta: usize, tau: i32, basis: &EigenBasis, params: &ModelParams) -> c64 {
    g_raw(
        basis.energies[alpha] - basis.energies[beta],
        basis.m_values[beta] - basis.m_values[alpha],
        tau,
        params.z * params.h,
        params.gamma,
    )
}

#[inline]
fn g_raw(de: f64, dm: f64, tau: i32, zh: f64, gamma: f64) -> c64 {
    let denom = c64::new(2.0 * gamma, -(de + zh * (dm + tau as f64)));
    gamma / denom
}

#[derive(Debug, Clone)]
pub struct PulseSuperoperator {
    pub d: usize,
    /// `D x D` with `D = d^2`.
    pub entries: Mat<c64>,
    pub basis: Arc<EigenBasis>,
    pub params_hash: String,
}

/// Ingredient operators in the eigenbasis, flattened row-major.
struct Ingredients {
    d: usize,
    /// `S^- S^+ = |down><down|`
    down: Vec<c64>,
    /// `S^+ S^- = |up><up|`
    up: Vec<c64>,
    s_minus: Vec<c64>,
    s_plus: Vec<c64>,
    /// `(S^+ + 1) S^-`
    p: Vec<c64>,
    /// `(S^+ - 1) S^-`
    q: Vec<c64>,
}

impl Ingredients {
    fn new(ops: &SpinOperators, basis: &EigenBasis) -> Self {
        let eig = |m: &Mat<c64>| vectorize(basis.to_eigen(m.as_ref()).as_ref());
        let id = ops.identity();
        let down = &ops.s_minus * &ops.s_plus;
        let up = &ops.s_plus * &ops.s_minus;
        let p = (&ops.s_plus + &id) * &ops.s_minus;
        let q = (&ops.s_plus - &id) * &ops.s_minus;
        Self {
            d: ops.d,
            down: eig(&down),
            up: eig(&up),
            s_minus: eig(&ops.s_minus),
            s_plus: eig(&ops.s_plus),
            p: eig(&p),
            q: eig(&q),
        }
    }

    #[inline]
    fn at(&self, m: &[c64], i: usize, j: usize) -> c64 {
        m[i * self.d + j]
    }
}

pub fn build_pulse_map(params: &ModelParams, basis: &Arc<EigenBasis>, ops: &SpinOperators) -> Result<PulseSuperoperator> {
    build_pulse_map_with(params, basis, ops, &Budget::default())
}

pub fn build_pulse_map_with(
    params: &ModelParams,
    basis: &Arc<EigenBasis>,
    ops: &SpinOperators,
    budget: &Budget,
) -> Result<PulseSuperoperator> {
    params.validate()?;
    budget.check_map(params.n())?;
    let d = basis.d;
    if ops.d != d || params.dim() != d {
        return Err(Error::BasisMismatch(format!("operator dimension {} vs basis dimension {d}", ops.d)));
    }
    let big_d = d * d;
    let ing = Ingredients::new(ops, basis);

    let zh = params.z * params.h;
    let mut phase = Vec::with_capacity(big_d);
    let mut g = Vec::with_capacity(big_d);
    for a in 0..d {
        for b in 0..d {
            let de = basis.energies[a] - basis.energies[b];
            let dm = basis.m_values[b] - basis.m_values[a];
            phase.push(c64::from_polar(1.0, -de * params.t_rep));
            g.push([
                g_raw(de, dm, -1, zh, params.gamma),
                g_raw(de, dm, 0, zh, params.gamma),
                g_raw(de, dm, 1, zh, params.gamma),
            ]);
        }
    }

    let mut entries = Mat::<c64>::zeros(big_d, big_d);
    entries.par_col_iter_mut().enumerate().for_each(|(mu, mut col)| {
        let (a, b) = (mu / d, mu % d);
        for a2 in 0..d {
            let down_aa = ing.at(&ing.down, a2, a);
            let up_aa = ing.at(&ing.up, a2, a);
            let sm_aa = ing.at(&ing.s_minus, a2, a);
            let p_aa = ing.at(&ing.p, a2, a);
            let q_aa = ing.at(&ing.q, a2, a);
            for b2 in 0..d {
                let mu2 = a2 * d + b2;
                let [g_m, g_0, g_p] = g[mu2];
                let reset = 2.0 * down_aa * ing.at(&ing.down, b, b2);
                let direct = 2.0 * g_0 * (up_aa * ing.at(&ing.up, b, b2) + sm_aa * ing.at(&ing.s_plus, b, b2));
                let precessing = g_p * p_aa * ing.at(&ing.q, b2, b).conj() + g_m * q_aa * ing.at(&ing.p, b2, b).conj();
                col[mu2] = 0.5 * phase[mu2] * (reset + direct + precessing);
            }
        }
    });

    Ok(PulseSuperoperator { d, entries, basis: Arc::clone(basis), params_hash: params.params_hash() })
}

/// Spin operators, eigenbasis and pulse map for one parameter point.
#[derive(Debug, Clone)]
pub struct PulsedSystem {
    pub params: ModelParams,
    pub ops: SpinOperators,
    pub basis: Arc<EigenBasis>,
    pub map: PulseSuperoperator,
}

impl PulsedSystem {
    pub fn new(params: &ModelParams) -> Result<Self> {
        Self::with_budget(params, &Budget::default())
    }

    pub fn with_budget(params: &ModelParams, budget: &Budget) -> Result<Self> {
        let ops = build_spin_operators_with(params, budget)?;
        let basis = Arc::new(joint_eigenbasis(&ops)?);
        let map = build_pulse_map_with(params, &basis, &ops, budget)?;
        Ok(Self { params: params.clone(), ops, basis, map })
    }

    pub fn tag(&self) -> BasisTag {
        BasisTag::Eigen(self.map.params_hash.clone())
    }

    pub fn to_eigen(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.to_eigenbasis(&self.basis, &self.map.params_hash)
    }

    pub fn to_x_product(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        rho.to_x_product(&self.basis, &self.map.params_hash)
    }

    /// Maximally mixed state tagged with this system's eigenbasis.
    pub fn maximally_mixed(&self) -> DensityMatrix {
        DensityMatrix::maximally_mixed(self.map.d, self.tag())
    }
}

impl PulseSuperoperator {
    pub fn dim(&self) -> usize {
        self.d * self.d
    }

    pub fn apply_vec(&self, v: &[c64]) -> Vec<c64> {
        let big_d = self.dim();
        assert_eq!(v.len(), big_d);
        let x = Col::from_fn(big_d, |i| v[i]);
        let y = &self.entries * &x;
        (0..big_d).map(|i| y[i]).collect()
    }

    /// `M` applied to an arbitrary operator given in the eigenbasis.
    pub fn apply_operator(&self, c: &Mat<c64>) -> Mat<c64> {
        unvectorize(&self.apply_vec(&vectorize(c.as_ref())), self.d)
    }

    pub fn apply_map(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        match &rho.basis {
            BasisTag::Eigen(h) if *h == self.params_hash => {}
            other => {
                return Err(Error::BasisMismatch(format!(
                    "pulse map expects eigenbasis {}, state is tagged {other:?}",
                    self.params_hash
                )))
            }
        }
        if rho.dim() != self.d {
            return Err(Error::BasisMismatch(format!("state dimension {} vs map dimension {}", rho.dim(), self.d)));
        }
        Ok(DensityMatrix::new(self.apply_operator(&rho.matrix), rho.basis.clone()))
    }

    /// `|Tr(M C) - Tr(C)|` for an operator in the eigenbasis.
    pub fn trace_defect(&self, c: &Mat<c64>) -> f64 {
        (trace(self.apply_operator(c).as_ref()) - trace(c.as_ref())).norm()
    }

    /// Raw dump: row-major `(re, im)` pairs of little-endian `f64`, plus a
    /// JSON sidecar at `<path>.json`.
    pub fn write_binary(&self, params: &ModelParams, path: &Path) -> Result<()> {
        let big_d = self.dim();
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        for i in 0..big_d {
            for j in 0..big_d {
                let z = self.entries[(i, j)];
                out.write_all(&z.re.to_le_bytes())?;
                out.write_all(&z.im.to_le_bytes())?;
            }
        }
        out.flush()?;
        let sidecar = MapSidecar { d: self.d, params: params.clone(), params_hash: self.params_hash.clone() };
        let side_path = sidecar_path(path);
        serde_json::to_writer_pretty(std::fs::File::create(side_path)?, &sidecar)?;
        Ok(())
    }

    pub fn read_binary_entries(path: &Path) -> Result<(MapSidecar, Mat<c64>)> {
        let sidecar: MapSidecar = serde_json::from_reader(std::fs::File::open(sidecar_path(path))?)?;
        let bytes = std::fs::read(path)?;
        let big_d = sidecar.d * sidecar.d;
        if bytes.len() != big_d * big_d * 16 {
            return Err(Error::Numerical(format!("dump has {} bytes, expected {}", bytes.len(), big_d * big_d * 16)));
        }
        let f = |k: usize| f64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().unwrap());
        let m = Mat::from_fn(big_d, big_d, |i, j| {
            let k = 2 * (i * big_d + j);
            c64::new(f(k), f(k + 1))
        });
        Ok((sidecar, m))
    }
}

fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    s.into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapSidecar {
    pub d: usize,
    pub params: ModelParams,
    pub params_hash: String,
}
