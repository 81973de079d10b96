//! Named sweep scenarios for the standard figure panels.
//!
//! Grids are thinned to desk scale: zoom windows use steps of at most `2e-3`,
//! overview panels are coarser.

use serde::{Deserialize, Serialize};

use crate::couplings::CouplingKind;
use crate::error::{Error, Result};
use crate::resonance::{knight_shift, nuclear_resonance};
use crate::sweep::{FieldGrid, ModelTemplate, Quantity, SweepConfig, DEFAULT_P_THRESH};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PresetRun {
    pub label: String,
    pub config: SweepConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: String,
    pub description: String,
    /// Runs beyond the default size budget or taking hours on one core.
    pub slow: bool,
    pub runs: Vec<PresetRun>,
}

fn config(model: ModelTemplate, h_min: f64, h_max: f64, step: f64, quantities: &[Quantity]) -> SweepConfig {
    SweepConfig {
        model,
        field_grid: FieldGrid::Range { h_min, h_max, step },
        quantities: quantities.to_vec(),
        p_thresh: DEFAULT_P_THRESH,
        parallelism: None,
        output_path: None,
    }
}

fn run(label: impl Into<String>, config: SweepConfig) -> PresetRun {
    PresetRun { label: label.into(), config }
}

fn kind_label(kind: CouplingKind) -> &'static str {
    match kind {
        CouplingKind::Uniform => "uniform",
        CouplingKind::Exponential => "expo",
        CouplingKind::Gaussian => "gaus",
    }
}

const OBSERVABLES: [Quantity; 3] = [Quantity::Entropy, Quantity::BathPx, Quantity::CentralPz];

pub fn preset_scenarios() -> Vec<Preset> {
    let mut out = Vec::new();

    out.push(Preset {
        name: "fig1_overview".into(),
        description: "N = 3, entropy over the nuclear resonance at h = 500 and its shifted flanks; \
                      step 0.01 under-resolves individual electronic dips"
            .into(),
        slow: false,
        runs: vec![run("n3", config(ModelTemplate::defaults(3), 470.0, 530.0, 0.01, &OBSERVABLES))],
    });

    out.push(Preset {
        name: "fig1b_zoom".into(),
        description: "N = 3, electronic dips around the lowest entropies; dashed lines belong at k/2 +- A_max".into(),
        slow: false,
        runs: vec![run("n3", config(ModelTemplate::defaults(3), 489.5, 491.5, 1e-3, &OBSERVABLES))],
    });

    out.push(Preset {
        name: "fig2_sizes".into(),
        description: "entropy and bath polarization at the lowest dip for N = 3..6; the dense map at N = 6 takes about 4.3 GB".into(),
        slow: true,
        runs: (3..=6)
            .map(|n| run(format!("n{n}"), config(ModelTemplate::defaults(n), 490.9, 491.1, 1e-3, &OBSERVABLES)))
            .collect(),
    });

    out.push(Preset {
        name: "fig3_npulses".into(),
        description: "pulses needed for 1% convergence near the lowest dips, N = 3 and 4".into(),
        slow: false,
        runs: (3..=4)
            .map(|n| run(format!("n{n}"), config(ModelTemplate::defaults(n), 490.9, 491.1, 2e-3, &[Quantity::Entropy, Quantity::NPuls])))
            .collect(),
    });

    out.push(Preset {
        name: "fig5_fast".into(),
        description: "J_max = 0.1, z = 0.1 near the tenth nuclear resonance (h = 50)".into(),
        slow: false,
        runs: [CouplingKind::Uniform, CouplingKind::Exponential, CouplingKind::Gaussian]
            .into_iter()
            .map(|kind| {
                let model = ModelTemplate { coupling_kind: kind, j_max: 0.1, z: 0.1, alpha: 1.0, ..ModelTemplate::defaults(3) };
                run(kind_label(kind), config(model, 49.5, 51.0, 1e-3, &[Quantity::Entropy, Quantity::NPuls]))
            })
            .collect(),
    });

    out.push(Preset {
        name: "appC_shift".into(),
        description: "N = 3 around the first nuclear resonance 2 pi / (z T_rep) for z = 1/1000, 1/500, 1/250, \
                      spanning twice the estimated shift J_max / (2z) on either side"
            .into(),
        slow: false,
        runs: [1000.0, 500.0, 250.0]
            .into_iter()
            .map(|inv_z: f64| {
                let model = ModelTemplate { z: 1.0 / inv_z, ..ModelTemplate::defaults(3) };
                let res = nuclear_resonance(1, model.z, model.t_rep);
                let span = 2.0 * knight_shift(model.j_max, model.z);
                run(format!("z1_{inv_z}"), config(model, res - span, res + span, 2e-3, &[Quantity::Entropy]))
            })
            .collect(),
    });

    out.push(Preset {
        name: "appD_expo_gaus".into(),
        description: "exponential and Gaussian couplings with alpha = 0.5 and 1 for N = 3 and 4".into(),
        slow: false,
        runs: [CouplingKind::Exponential, CouplingKind::Gaussian]
            .into_iter()
            .flat_map(|kind| {
                [0.5, 1.0].into_iter().flat_map(move |alpha| {
                    (3..=4).map(move |n| {
                        let model = ModelTemplate { coupling_kind: kind, alpha, ..ModelTemplate::defaults(n) };
                        run(format!("{}_a{alpha}_n{n}", kind_label(kind)), config(model, 490.8, 491.2, 1e-3, &OBSERVABLES))
                    })
                })
            })
            .collect(),
    });

    out
}

pub fn find_preset(name: &str) -> Result<Preset> {
    preset_scenarios()
        .into_iter()
        .find(|p| p.name == name)
        .ok_or_else(|| Error::Config(format!("unknown preset '{name}'")))
}
