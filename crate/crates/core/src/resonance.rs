//! Resonance positions and searches for entropy dips.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::Budget;
use crate::sweep::{evaluate_point, with_sequential_linalg, ModelTemplate, Quantity};

/// Field spacing `2 pi / T_rep` of the electronic resonances.
pub fn electronic_spacing(t_rep: f64) -> f64 {
    2.0 * PI / t_rep
}

pub fn electronic_resonance(k: i64, t_rep: f64) -> f64 {
    k as f64 * electronic_spacing(t_rep)
}

/// Field spacing `2 pi / (z T_rep)` of the nuclear resonances.
pub fn nuclear_spacing(z: f64, t_rep: f64) -> f64 {
    2.0 * PI / (z * t_rep)
}

pub fn nuclear_resonance(k: i64, z: f64, t_rep: f64) -> f64 {
    k as f64 * nuclear_spacing(z, t_rep)
}

/// Estimated displacement `J_max / (2z)` of the nuclear resonance.
pub fn knight_shift(j_max: f64, z: f64) -> f64 {
    j_max / (2.0 * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Dip {
    pub h: f64,
    pub entropy: f64,
    pub bath_px: f64,
    pub central_pz: f64,
}

fn entropy_or_inf(template: &ModelTemplate, h: f64, budget: &Budget) -> (f64, Dip) {
    let row = evaluate_point(template, h, &[Quantity::Entropy], 0.01, budget);
    let s = if row.flag == "ok" && row.entropy.is_finite() { row.entropy } else { f64::INFINITY };
    (s, Dip { h, entropy: row.entropy, bath_px: row.bath_px, central_pz: row.central_pz })
}

/// Grid scan of `[lo, hi]` with `points` fields, then golden-section refinement
/// of the lowest bracket down to `tol`.
pub fn locate_dip(template: &ModelTemplate, lo: f64, hi: f64, points: usize, tol: f64, budget: &Budget) -> Result<Dip> {
    if !(lo < hi) || points < 3 {
        return Err(Error::InvalidParameter(format!("bad dip window [{lo}, {hi}] with {points} points")));
    }
    with_sequential_linalg(|| {
        let step = (hi - lo) / (points - 1) as f64;
        let scan: Vec<(f64, Dip)> = (0..points)
            .into_par_iter()
            .map(|i| entropy_or_inf(template, lo + i as f64 * step, budget))
            .collect();
        let best = scan
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .0.total_cmp(&b.1 .0))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if !scan[best].0.is_finite() {
            return Err(Error::Numerical(format!("no valid stationary state in [{lo}, {hi}]")));
        }
        let (mut a, mut b) = (scan[best].1.h - step, scan[best].1.h + step);
        let g = 0.5 * (5f64.sqrt() - 1.0);
        let mut c = b - g * (b - a);
        let mut d = a + g * (b - a);
        let mut fc = entropy_or_inf(template, c, budget);
        let mut fd = entropy_or_inf(template, d, budget);
        while b - a > tol {
            if fc.0 < fd.0 {
                b = d;
                d = c;
                fd = fc;
                c = b - g * (b - a);
                fc = entropy_or_inf(template, c, budget);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + g * (b - a);
                fd = entropy_or_inf(template, d, budget);
            }
        }
        let mut out = scan[best];
        for cand in [fc, fd] {
            if cand.0 < out.0 {
                out = cand;
            }
        }
        Ok(out.1)
    })
}

/// Deepest dip within `half_width` of each electronic resonance in `[h_lo, h_hi]`.
pub fn resonance_dips(template: &ModelTemplate, h_lo: f64, h_hi: f64, half_width: f64, points: usize, budget: &Budget) -> Result<Vec<Dip>> {
    let spacing = electronic_spacing(template.t_rep);
    let k_lo = (h_lo / spacing).ceil() as i64;
    let k_hi = (h_hi / spacing).floor() as i64;
    (k_lo..=k_hi)
        .map(|k| {
            let e = electronic_resonance(k, template.t_rep);
            locate_dip(template, e - half_width, e + half_width, points, 1e-6, budget)
        })
        .collect()
}

/// Vertex of the parabola through the lowest dip and its two neighbours; the
/// lowest dip itself when it sits at either end of the list.
pub fn envelope_minimum(dips: &[Dip]) -> Option<f64> {
    let i = dips
        .iter()
        .enumerate()
        .filter(|(_, d)| d.entropy.is_finite())
        .min_by(|a, b| a.1.entropy.total_cmp(&b.1.entropy))?
        .0;
    if i == 0 || i + 1 == dips.len() {
        return Some(dips[i].h);
    }
    let (x0, x1, x2) = (dips[i - 1].h, dips[i].h, dips[i + 1].h);
    let (y0, y1, y2) = (dips[i - 1].entropy, dips[i].entropy, dips[i + 1].entropy);
    let denom = (x0 - x1) * (x0 - x2) * (x1 - x2);
    let a = (x2 * (y1 - y0) + x1 * (y0 - y2) + x0 * (y2 - y1)) / denom;
    let b = (x2 * x2 * (y0 - y1) + x1 * x1 * (y2 - y0) + x0 * x0 * (y1 - y2)) / denom;
    if !(a > 0.0) {
        return Some(x1);
    }
    Some(-b / (2.0 * a))
}
