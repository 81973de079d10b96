//! Hyperfine coupling distributions for the nuclear bath.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CouplingKind {
    /// Equidistant between `J_max (sqrt5 - 2) sqrt5` and `J_max`, increasing in `i`.
    Uniform,
    /// `J_max exp(-alpha (i-1)/(N-1))`.
    Exponential,
    /// `J_max exp(-alpha ((i-1)/(N-1))^2)`.
    Gaussian,
}

impl std::str::FromStr for CouplingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" | "equidistant" => Ok(Self::Uniform),
            "exponential" | "expo" => Ok(Self::Exponential),
            "gaussian" | "gaus" => Ok(Self::Gaussian),
            other => Err(Error::InvalidParameter(format!("unknown coupling kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouplingSet {
    pub kind: CouplingKind,
    pub n: usize,
    pub j_max: f64,
    /// Decay parameter; ignored for [`CouplingKind::Uniform`].
    pub alpha: f64,
    pub values: Vec<f64>,
}

/// Builds the `N` couplings of the requested distribution.
///
/// For `N = 1` every kind yields `[j_max]`.
pub fn generate_couplings(kind: CouplingKind, n: usize, j_max: f64, alpha: f64) -> Result<CouplingSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("bath size N must be at least 1".into()));
    }
    if !(j_max > 0.0) || !j_max.is_finite() {
        return Err(Error::InvalidParameter(format!("j_max must be positive, got {j_max}")));
    }
    if kind != CouplingKind::Uniform && (!(alpha > 0.0) || !alpha.is_finite()) {
        return Err(Error::InvalidParameter(format!("alpha must be positive, got {alpha}")));
    }

    let values = if n == 1 {
        vec![j_max]
    } else {
        let span = (n - 1) as f64;
        let sqrt5 = 5f64.sqrt();
        (0..n)
            .map(|i| {
                let x = i as f64 / span;
                match kind {
                    CouplingKind::Uniform => j_max * (sqrt5 - 2.0) * (sqrt5 + 2.0 * x),
                    CouplingKind::Exponential => j_max * (-alpha * x).exp(),
                    CouplingKind::Gaussian => j_max * (-alpha * x * x).exp(),
                }
            })
            .collect()
    };

    Ok(CouplingSet { kind, n, j_max, alpha, values })
}

impl CouplingSet {
    /// Explicit coupling list, e.g. for deliberately degenerate baths. An
    /// empty list describes a lone central spin.
    pub fn explicit(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|&j| !(j >= 0.0) || !j.is_finite()) {
            return Err(Error::InvalidParameter("couplings must be finite and non-negative".into()));
        }
        let j_max = values.iter().cloned().fold(0.0, f64::max);
        Ok(Self { kind: CouplingKind::Uniform, n: values.len(), j_max, alpha: 0.0, values })
    }

    /// Bath without hyperfine coupling to the central spin.
    pub fn decoupled(n: usize) -> Self {
        Self { kind: CouplingKind::Uniform, n, j_max: 0.0, alpha: 0.0, values: vec![0.0; n] }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// True when no two couplings coincide within `rel_tol * j_max`.
    pub fn pairwise_distinct(&self, rel_tol: f64) -> bool {
        let scale = self.j_max.abs().max(f64::MIN_POSITIVE);
        for (i, a) in self.values.iter().enumerate() {
            for b in &self.values[i + 1..] {
                if (a - b).abs() <= rel_tol * scale {
                    return false;
                }
            }
        }
        true
    }
}

/// Saturated Overhauser field `A_max = (1/2) sum_i J_i`.
pub fn overhauser_max(couplings: &CouplingSet) -> f64 {
    0.5 * couplings.values.iter().sum::<f64>()
}
