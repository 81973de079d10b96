use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use csm_core::couplings::{generate_couplings, CouplingKind};
use csm_core::linalg::frobenius;
use csm_core::observables::observe;
use csm_core::presets::{find_preset, preset_scenarios};
use csm_core::spectral::{
    convergence_distance, convergence_pulses, full_spectrum, stationary_state, write_spectrum_csv_file, DegeneratePolicy,
    StationaryMethod, DEFAULT_SHIFT,
};
use csm_core::sweep::{run_sweep, write_sweep_csv, write_sweep_csv_file, ModelTemplate, SweepConfig};
use csm_core::validate::validate;
use csm_core::{Budget, Error, ModelParams, PulsedSystem, Result};

#[derive(Parser)]
#[command(name = "csm", version, about = "Pulsed dissipative central spin model: stationary states, spectra and field sweeps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the hyperfine couplings of a distribution.
    Couplings {
        #[arg(long, default_value = "uniform")]
        kind: CouplingKind,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0.02)]
        j_max: f64,
        #[arg(long, default_value_t = 1.0)]
        alpha: f64,
    },
    /// Full spectrum of the pulse map, written as CSV.
    Spectrum {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 0.01)]
        p_thresh: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Stationary state and its observables.
    Stationary {
        #[command(flatten)]
        point: PointArgs,
        /// Use inverse iteration instead of the trace-constrained solve.
        #[arg(long)]
        inverse_iteration: bool,
        /// Return the long-time limit of the mixed start when the fixed point is degenerate.
        #[arg(long)]
        project_degenerate: bool,
        /// Write V0 (x-product basis) as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Field sweep from a config file or a preset.
    Sweep {
        #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
        config: Option<PathBuf>,
        #[arg(long)]
        preset: Option<String>,
        /// Output CSV for a config, output directory for a preset.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long = "allow-large-N")]
        allow_large_n: bool,
    },
    /// Pulses needed to come within p_thresh of the stationary state.
    Converge {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 0.01)]
        p_thresh: f64,
    },
    /// Self-check report as JSON.
    Validate {
        #[command(flatten)]
        point: PointArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// List the preset scenarios, or print one in full.
    Presets {
        #[arg(long)]
        preset: Option<String>,
    },
}

/// Model point given by flags or by a JSON file `{"model": {...}, "h": ...}`.
#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    n: usize,
    #[arg(long, default_value_t = 1.37)]
    h: f64,
    #[arg(long, default_value = "uniform")]
    kind: CouplingKind,
    #[arg(long, default_value_t = 0.02)]
    j_max: f64,
    #[arg(long, default_value_t = 1.0)]
    alpha: f64,
    #[arg(long, default_value_t = 1e-3)]
    z: f64,
    #[arg(long, default_value_t = 1.25)]
    gamma: f64,
    #[arg(long, default_value_t = 4.0 * std::f64::consts::PI)]
    t_rep: f64,
    #[arg(long = "allow-large-N")]
    allow_large_n: bool,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct PointConfig {
    model: ModelTemplate,
    h: f64,
}

impl PointArgs {
    fn budget(&self) -> Budget {
        if self.allow_large_n {
            Budget::large()
        } else {
            Budget::default()
        }
    }

    fn params(&self) -> Result<ModelParams> {
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)?;
            let cfg: PointConfig = serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?;
            return cfg.model.params(cfg.h);
        }
        let template = ModelTemplate {
            n: self.n,
            coupling_kind: self.kind,
            j_max: self.j_max,
            alpha: self.alpha,
            couplings: None,
            z: self.z,
            gamma: self.gamma,
            t_rep: self.t_rep,
            epsilon: 0.0,
        };
        template.params(self.h)
    }

    fn system(&self) -> Result<PulsedSystem> {
        PulsedSystem::with_budget(&self.params()?, &self.budget())
    }
}

fn print_json<T: Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

#[derive(Serialize)]
struct MatrixJson {
    basis: &'static str,
    re: Vec<Vec<f64>>,
    im: Vec<Vec<f64>>,
}

fn run_sweep_to(config: &SweepConfig, budget: &Budget, out: Option<&Path>) -> Result<usize> {
    let rows = run_sweep(config, budget)?;
    let target = out.map(Path::to_path_buf).or_else(|| config.output_path.clone());
    match target {
        Some(path) => write_sweep_csv_file(config, &rows, &path)?,
        None => write_sweep_csv(config, &rows, std::io::stdout().lock())?,
    }
    Ok(rows.iter().filter(|r| r.flag != "ok").count())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Couplings { kind, n, j_max, alpha } => print_json(&generate_couplings(kind, n, j_max, alpha)?),
        Command::Spectrum { point, p_thresh, out } => {
            let system = point.system()?;
            let spec = full_spectrum(&system, &system.maximally_mixed(), &point.budget())?;
            let conv = convergence_pulses(&spec, p_thresh);
            if let Some(path) = out {
                write_spectrum_csv_file(&spec, conv.as_ref().ok(), &path)?;
            }
            print_json(&serde_json::json!({
                "dimension": spec.dim(),
                "gap": spec.gap(),
                "degeneracy": spec.degeneracy_count(),
                "eigenvector_condition": spec.condition,
                "expansion_residual": spec.expansion_residual,
                "n_puls": conv.as_ref().ok().map(|c| c.n_puls),
                "convergence_error": conv.as_ref().err().map(|e| e.to_string()),
            }))
        }
        Command::Stationary { point, inverse_iteration, project_degenerate, out } => {
            let system = point.system()?;
            let method = if inverse_iteration {
                StationaryMethod::InverseIteration { offset: DEFAULT_SHIFT, max_iter: 200, tol: 1e-13 }
            } else {
                StationaryMethod::TraceConstrained
            };
            let policy = if project_degenerate { DegeneratePolicy::ProjectMaximallyMixed } else { DegeneratePolicy::Error };
            let st = stationary_state(&system, method, policy)?;
            let obs = observe(&system, &st.v0)?;
            if let Some(path) = out {
                let x = system.to_x_product(&st.v0)?.matrix;
                let d = x.nrows();
                let m = MatrixJson {
                    basis: "x_product",
                    re: (0..d).map(|i| (0..d).map(|j| x[(i, j)].re).collect()).collect(),
                    im: (0..d).map(|i| (0..d).map(|j| x[(i, j)].im).collect()).collect(),
                };
                std::fs::write(&path, serde_json::to_string(&m)?)?;
            }
            print_json(&serde_json::json!({
                "h": system.params.h,
                "observables": obs,
                "degeneracy": st.degeneracy_count,
                "condition_estimate": st.condition_estimate,
                "residual": st.residual,
            }))
        }
        Command::Sweep { config, preset, out, workers, allow_large_n } => {
            let budget = if allow_large_n { Budget::large() } else { Budget::default() };
            if let Some(path) = config {
                let mut cfg = SweepConfig::from_file(&path)?;
                if workers.is_some() {
                    cfg.parallelism = workers;
                }
                let flagged = run_sweep_to(&cfg, &budget, out.as_deref())?;
                if flagged > 0 {
                    eprintln!("{flagged} grid points flagged");
                }
                return Ok(());
            }
            let preset = find_preset(preset.as_deref().unwrap_or_default())?;
            let dir = out.unwrap_or_else(|| PathBuf::from("."));
            std::fs::create_dir_all(&dir)?;
            for r in &preset.runs {
                let mut cfg = r.config.clone();
                cfg.parallelism = workers;
                let path = dir.join(format!("{}_{}.csv", preset.name, r.label));
                let flagged = run_sweep_to(&cfg, &budget, Some(&path))?;
                eprintln!("{} ({} flagged)", path.display(), flagged);
            }
            Ok(())
        }
        Command::Converge { point, p_thresh } => {
            let system = point.system()?;
            let spec = full_spectrum(&system, &system.maximally_mixed(), &point.budget())?;
            let est = convergence_pulses(&spec, p_thresh)?;
            let n = est.n_puls as f64;
            let at = convergence_distance(&spec, n);
            let before = convergence_distance(&spec, (n / 2.0).floor());
            let v0 = spec.stationary_operator();
            print_json(&serde_json::json!({
                "p_thresh": p_thresh,
                "n_puls": est.n_puls,
                "slowest_mode": est.slowest_mode,
                "slowest_lambda": est.slowest_mode.map(|j| [spec.eigenvalues[j].re, spec.eigenvalues[j].im]),
                "excluded_modes": est.excluded_modes,
                "relative_distance_at_n_puls": at,
                "relative_distance_at_half": before,
                "criterion_met": at <= p_thresh,
                "v0_norm": frobenius(v0.as_ref()),
            }))
        }
        Command::Validate { point, seed } => {
            let params = point.params()?;
            print_json(&validate(&params, &point.budget(), seed))
        }
        Command::Presets { preset } => match preset {
            Some(name) => print_json(&find_preset(&name)?),
            None => {
                for p in preset_scenarios() {
                    let slow = if p.slow { " [slow]" } else { "" };
                    println!("{}{}: {} ({} runs)", p.name, slow, p.description, p.runs.len());
                }
                Ok(())
            }
        },
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
