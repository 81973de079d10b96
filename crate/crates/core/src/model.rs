//! Physical parameters of the pulsed central spin model, in units of `J_Q`.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::couplings::{generate_couplings, CouplingKind, CouplingSet};
use crate::error::{Error, Result};

pub const DEFAULT_T_REP: f64 = 4.0 * std::f64::consts::PI;
/// Trion decay rate is `2 gamma = 2.5 J_Q`.
pub const DEFAULT_GAMMA: f64 = 1.25;
pub const DEFAULT_Z: f64 = 1e-3;
pub const DEFAULT_J_MAX: f64 = 0.02;

/// Smallest admissible `2 gamma T_rep`: trions must have decayed before the next pulse.
pub const MIN_DECAY_PRODUCT: f64 = 20.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    pub couplings: CouplingSet,
    /// Electronic Zeeman energy `g mu_B B`.
    pub h: f64,
    /// Nuclear-to-electronic Zeeman ratio.
    pub z: f64,
    pub gamma: f64,
    pub t_rep: f64,
    /// Trion energy. Only the full-space integrator sees it.
    #[serde(default)]
    pub epsilon: f64,
}

impl ModelParams {
    pub fn new(couplings: CouplingSet, h: f64, z: f64, gamma: f64, t_rep: f64) -> Result<Self> {
        let p = Self { couplings, h, z, gamma, t_rep, epsilon: 0.0 };
        p.validate()?;
        Ok(p)
    }

    /// Uniform couplings with `J_max = 0.02`, `z = 1e-3`, `T_rep = 4 pi`, `2 gamma = 2.5`.
    pub fn defaults(n: usize, h: f64) -> Result<Self> {
        let couplings = if n == 0 {
            CouplingSet::explicit(Vec::new())?
        } else {
            generate_couplings(CouplingKind::Uniform, n, DEFAULT_J_MAX, 0.0)?
        };
        Self::new(couplings, h, DEFAULT_Z, DEFAULT_GAMMA, DEFAULT_T_REP)
    }

    pub fn with_h(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return bad(format!("gamma must be positive, got {}", self.gamma));
        }
        if !(self.t_rep > 0.0) || !self.t_rep.is_finite() {
            return bad(format!("t_rep must be positive, got {}", self.t_rep));
        }
        if 2.0 * self.gamma * self.t_rep < MIN_DECAY_PRODUCT {
            return bad(format!(
                "2 gamma t_rep = {} is below {MIN_DECAY_PRODUCT}; trions would survive to the next pulse",
                2.0 * self.gamma * self.t_rep
            ));
        }
        if !(self.z > 0.0) || !self.z.is_finite() {
            return bad(format!("z must be positive, got {}", self.z));
        }
        if !self.h.is_finite() || !self.epsilon.is_finite() {
            return bad("h and epsilon must be finite".into());
        }
        if self.couplings.n != self.couplings.values.len() {
            return bad("coupling count does not match N".into());
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.couplings.values.len()
    }

    /// Hilbert dimension of central spin plus bath, `2^(N+1)`.
    pub fn dim(&self) -> usize {
        1 << (self.n() + 1)
    }

    /// Stable fingerprint of every parameter that enters the pulse map.
    pub fn params_hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update((self.n() as u64).to_le_bytes());
        for j in &self.couplings.values {
            hasher.update(j.to_bits().to_le_bytes());
        }
        for x in [self.h, self.z, self.gamma, self.t_rep] {
            hasher.update(x.to_bits().to_le_bytes());
        }
        let digest = hasher.finalize();
        hex::encode(&digest[..8])
    }
}

/// Size limits for dense objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Largest bath for which the `D x D` pulse map is assembled.
    pub max_n: usize,
    /// Largest bath for which the full spectrum of the map is computed.
    pub max_spectrum_n: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Self { max_n: 6, max_spectrum_n: 4 }
    }
}

impl Budget {
    pub fn large() -> Self {
        Self { max_n: usize::MAX, max_spectrum_n: 5 }
    }

    pub fn check_map(&self, n: usize) -> Result<()> {
        if n > self.max_n {
            return Err(Error::Capacity(format!(
                "N = {n} exceeds the configured limit N <= {} (pass --allow-large-N to override)",
                self.max_n
            )));
        }
        Ok(())
    }

    pub fn check_spectrum(&self, n: usize) -> Result<()> {
        if n > self.max_spectrum_n {
            return Err(Error::Capacity(format!(
                "full spectrum at N = {n} exceeds the dense limit N <= {}",
                self.max_spectrum_n
            )));
        }
        Ok(())
    }
}
