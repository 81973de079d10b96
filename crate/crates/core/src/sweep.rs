//! Field sweeps of stationary-state observables.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::couplings::{generate_couplings, overhauser_max, CouplingKind, CouplingSet};
use crate::error::{Error, Result};
use crate::model::{Budget, ModelParams, DEFAULT_GAMMA, DEFAULT_J_MAX, DEFAULT_T_REP, DEFAULT_Z};
use crate::observables::observe;
use crate::pulse_map::PulsedSystem;
use crate::spectral::{convergence_pulses, full_spectrum, stationary_state, DegeneratePolicy, StationaryMethod};

pub const CSV_HEADER: &str = "h,entropy,bath_px,central_pz,n_puls,gap,flag";
pub const DEFAULT_P_THRESH: f64 = 0.01;

fn default_kind() -> CouplingKind {
    CouplingKind::Uniform
}
fn default_j_max() -> f64 {
    DEFAULT_J_MAX
}
fn default_alpha() -> f64 {
    1.0
}
fn default_z() -> f64 {
    DEFAULT_Z
}
fn default_gamma() -> f64 {
    DEFAULT_GAMMA
}
fn default_t_rep() -> f64 {
    DEFAULT_T_REP
}
fn default_p_thresh() -> f64 {
    DEFAULT_P_THRESH
}

/// Model parameters without the field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelTemplate {
    pub n: usize,
    #[serde(default = "default_kind")]
    pub coupling_kind: CouplingKind,
    #[serde(default = "default_j_max")]
    pub j_max: f64,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    /// Explicit couplings; overrides `coupling_kind`, `j_max` and `alpha`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub couplings: Option<Vec<f64>>,
    #[serde(default = "default_z")]
    pub z: f64,
    #[serde(default = "default_gamma")]
    pub gamma: f64,
    #[serde(default = "default_t_rep")]
    pub t_rep: f64,
    #[serde(default)]
    pub epsilon: f64,
}

impl ModelTemplate {
    pub fn defaults(n: usize) -> Self {
        Self {
            n,
            coupling_kind: CouplingKind::Uniform,
            j_max: DEFAULT_J_MAX,
            alpha: 1.0,
            couplings: None,
            z: DEFAULT_Z,
            gamma: DEFAULT_GAMMA,
            t_rep: DEFAULT_T_REP,
            epsilon: 0.0,
        }
    }

    pub fn coupling_set(&self) -> Result<CouplingSet> {
        match &self.couplings {
            Some(values) => {
                if values.len() != self.n {
                    return Err(Error::Config(format!("{} explicit couplings given for N = {}", values.len(), self.n)));
                }
                CouplingSet::explicit(values.clone())
            }
            None if self.n == 0 => CouplingSet::explicit(Vec::new()),
            None => generate_couplings(self.coupling_kind, self.n, self.j_max, self.alpha),
        }
    }

    pub fn params(&self, h: f64) -> Result<ModelParams> {
        let mut p = ModelParams::new(self.coupling_set()?, h, self.z, self.gamma, self.t_rep)?;
        p.epsilon = self.epsilon;
        p.validate()?;
        Ok(p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum FieldGrid {
    Range { h_min: f64, h_max: f64, step: f64 },
    List(Vec<f64>),
}

impl FieldGrid {
    pub fn validate(&self) -> Result<()> {
        match self {
            FieldGrid::Range { h_min, h_max, step } => {
                if !(h_min < h_max) {
                    return Err(Error::Config(format!("field grid needs h_min < h_max, got {h_min} and {h_max}")));
                }
                if !(*step > 0.0) || !step.is_finite() {
                    return Err(Error::Config(format!("field step must be positive, got {step}")));
                }
                if (h_max - h_min) / step > 1e8 {
                    return Err(Error::Config("field grid has more than 1e8 points".into()));
                }
            }
            FieldGrid::List(v) => {
                if v.is_empty() {
                    return Err(Error::Config("field list is empty".into()));
                }
                if v.iter().any(|h| !h.is_finite()) {
                    return Err(Error::Config("field list contains non-finite values".into()));
                }
            }
        }
        Ok(())
    }

    /// Grid points; a range includes both ends when `step` divides the span.
    pub fn points(&self) -> Vec<f64> {
        match self {
            FieldGrid::Range { h_min, h_max, step } => {
                let count = ((h_max - h_min) / step + 1e-9).floor() as usize + 1;
                (0..count).map(|i| h_min + i as f64 * step).collect()
            }
            FieldGrid::List(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quantity {
    Entropy,
    BathPx,
    CentralPz,
    NPuls,
    Gap,
}

impl Quantity {
    pub fn needs_spectrum(self) -> bool {
        matches!(self, Quantity::NPuls | Quantity::Gap)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelTemplate,
    pub field_grid: FieldGrid,
    pub quantities: Vec<Quantity>,
    #[serde(default = "default_p_thresh")]
    pub p_thresh: f64,
    /// Worker threads; `None` uses all cores.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parallelism: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_path: Option<PathBuf>,
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn validate(&self, budget: &Budget) -> Result<()> {
        self.field_grid.validate()?;
        if self.quantities.is_empty() {
            return Err(Error::Config("no quantities requested".into()));
        }
        if !(self.p_thresh > 0.0) {
            return Err(Error::Config(format!("p_thresh must be positive, got {}", self.p_thresh)));
        }
        if self.parallelism == Some(0) {
            return Err(Error::Config("parallelism must be at least 1".into()));
        }
        if self.model.n == 0 && self.quantities.contains(&Quantity::BathPx) {
            return Err(Error::Config("bath_px needs N >= 1".into()));
        }
        budget.check_map(self.model.n)?;
        if self.quantities.iter().any(|q| q.needs_spectrum()) {
            budget.check_spectrum(self.model.n)?;
        }
        // parameter checks at the first grid point
        self.model.params(self.field_grid.points()[0])?;
        Ok(())
    }

    fn wants(&self, q: Quantity) -> bool {
        self.quantities.contains(&q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub entropy: f64,
    pub bath_px: f64,
    pub central_pz: f64,
    pub n_puls: Option<f64>,
    pub gap: Option<f64>,
    pub flag: String,
}

impl SweepRow {
    fn failed(h: f64, flag: String) -> Self {
        Self { h, entropy: f64::NAN, bath_px: f64::NAN, central_pz: f64::NAN, n_puls: None, gap: None, flag }
    }
}

fn error_flag(e: &Error) -> String {
    match e {
        Error::DegenerateFixedPoint { .. } => "degenerate".into(),
        Error::Positivity { .. } => "positivity".into(),
        Error::NonConvergentMode { .. } => "nonconvergent".into(),
        Error::Defective { .. } => "defective".into(),
        other => format!("error: {}", other.to_string().replace([',', '\n'], ";")),
    }
}

/// Stationary observables and, if requested, spectral quantities at one field.
pub fn evaluate_point(template: &ModelTemplate, h: f64, quantities: &[Quantity], p_thresh: f64, budget: &Budget) -> SweepRow {
    let params = match template.params(h) {
        Ok(p) => p,
        Err(e) => return SweepRow::failed(h, error_flag(&e)),
    };
    let system = match PulsedSystem::with_budget(&params, budget) {
        Ok(s) => s,
        Err(e) => return SweepRow::failed(h, error_flag(&e)),
    };
    let mut flag = "ok".to_string();
    let st = match stationary_state(&system, StationaryMethod::default(), DegeneratePolicy::Error) {
        Ok(st) => st,
        Err(Error::DegenerateFixedPoint { .. }) if budget.check_spectrum(params.n()).is_ok() => {
            flag = "degenerate".into();
            match stationary_state(&system, StationaryMethod::default(), DegeneratePolicy::ProjectMaximallyMixed) {
                Ok(st) => st,
                Err(e) => return SweepRow::failed(h, error_flag(&e)),
            }
        }
        Err(e) => return SweepRow::failed(h, error_flag(&e)),
    };
    let obs = match observe(&system, &st.v0) {
        Ok(o) => o,
        Err(e) => return SweepRow::failed(h, error_flag(&e)),
    };
    let mut row = SweepRow {
        h,
        entropy: obs.entropy,
        bath_px: obs.bath_polarization_x,
        central_pz: obs.central_polarization[2],
        n_puls: None,
        gap: None,
        flag,
    };
    if quantities.iter().any(|q| q.needs_spectrum()) {
        match full_spectrum(&system, &system.maximally_mixed(), budget) {
            Ok(spec) => {
                if quantities.contains(&Quantity::Gap) {
                    row.gap = Some(spec.gap());
                }
                if quantities.contains(&Quantity::NPuls) {
                    match convergence_pulses(&spec, p_thresh) {
                        Ok(c) => row.n_puls = Some(c.n_puls as f64),
                        Err(e) => {
                            row.n_puls = Some(f64::NAN);
                            if row.flag == "ok" {
                                row.flag = error_flag(&e);
                            }
                        }
                    }
                }
            }
            Err(e) => {
                if row.flag == "ok" {
                    row.flag = error_flag(&e);
                }
            }
        }
    }
    row
}

/// Runs `f` with faer's internal parallelism switched off, so results do not
/// depend on the size of the surrounding worker pool.
pub fn with_sequential_linalg<T>(f: impl FnOnce() -> T) -> T {
    let saved = faer::get_global_parallelism();
    faer::set_global_parallelism(faer::Par::Seq);
    let out = f();
    faer::set_global_parallelism(saved);
    out
}

/// Evaluates every grid point; rows come back in grid order.
pub fn run_sweep(config: &SweepConfig, budget: &Budget) -> Result<Vec<SweepRow>> {
    config.validate(budget)?;
    let points = config.field_grid.points();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(k) = config.parallelism {
        builder = builder.num_threads(k);
    }
    let pool = builder.build().map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let rows = with_sequential_linalg(|| {
        pool.install(|| {
            points
                .par_iter()
                .map(|&h| evaluate_point(&config.model, h, &config.quantities, config.p_thresh, budget))
                .collect::<Vec<_>>()
        })
    });
    Ok(rows)
}

/// Metadata recorded in the first line of every sweep CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepMetadata {
    pub model: ModelTemplate,
    pub couplings: Vec<f64>,
    pub a_max: f64,
    pub field_grid: FieldGrid,
    pub quantities: Vec<Quantity>,
    pub p_thresh: f64,
    pub version: String,
}

impl SweepMetadata {
    pub fn new(config: &SweepConfig) -> Result<Self> {
        let couplings = config.model.coupling_set()?;
        Ok(Self {
            model: config.model.clone(),
            a_max: overhauser_max(&couplings),
            couplings: couplings.values,
            field_grid: config.field_grid.clone(),
            quantities: config.quantities.clone(),
            p_thresh: config.p_thresh,
            version: env!("CARGO_PKG_VERSION").to_string(),
        })
    }
}

fn fmt_value(out: &mut String, x: f64) {
    if x.is_nan() {
        out.push_str("nan");
    } else {
        let _ = write!(out, "{x:.16e}");
    }
}

/// Writes the `# params:` line, the header and one line per row.
///
/// Quantities that were not requested are left empty.
pub fn write_sweep_csv<W: Write>(config: &SweepConfig, rows: &[SweepRow], mut out: W) -> Result<()> {
    let meta = SweepMetadata::new(config)?;
    writeln!(out, "# params: {}", serde_json::to_string(&meta)?)?;
    writeln!(out, "{CSV_HEADER}")?;
    let mut line = String::new();
    for r in rows {
        line.clear();
        fmt_value(&mut line, r.h);
        for (q, v) in [(Quantity::Entropy, r.entropy), (Quantity::BathPx, r.bath_px), (Quantity::CentralPz, r.central_pz)] {
            line.push(',');
            if config.wants(q) {
                fmt_value(&mut line, v);
            }
        }
        for (q, v) in [(Quantity::NPuls, r.n_puls), (Quantity::Gap, r.gap)] {
            line.push(',');
            if config.wants(q) {
                fmt_value(&mut line, v.unwrap_or(f64::NAN));
            }
        }
        line.push(',');
        line.push_str(&r.flag);
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_sweep_csv_file(config: &SweepConfig, rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_sweep_csv(config, rows, file)
}

fn parse_cell(s: &str) -> Result<Option<f64>> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>().map(Some).map_err(|e| Error::Config(format!("bad number '{s}': {e}")))
}

/// Reads a sweep CSV back; returns the metadata and the rows.
pub fn read_sweep_csv(text: &str) -> Result<(SweepMetadata, Vec<SweepRow>)> {
    let mut lines = text.lines();
    let first = lines.next().ok_or_else(|| Error::Config("empty sweep file".into()))?;
    let json = first
        .strip_prefix("# params: ")
        .ok_or_else(|| Error::Config("missing '# params:' line".into()))?;
    let meta: SweepMetadata = serde_json::from_str(json)?;
    let header = lines.next().unwrap_or_default();
    if header != CSV_HEADER {
        return Err(Error::Config(format!("unexpected header '{header}'")));
    }
    let rest: String = lines.collect::<Vec<_>>().join("\n");
    let mut reader = csv::ReaderBuilder::new().has_headers(false).from_reader(rest.as_bytes());
    let mut rows = Vec::new();
    for rec in reader.records() {
        let rec = rec?;
        if rec.len() != 7 {
            return Err(Error::Config(format!("expected 7 columns, got {}", rec.len())));
        }
        let num = |i: usize| parse_cell(&rec[i]);
        rows.push(SweepRow {
            h: num(0)?.unwrap_or(f64::NAN),
            entropy: num(1)?.unwrap_or(f64::NAN),
            bath_px: num(2)?.unwrap_or(f64::NAN),
            central_pz: num(3)?.unwrap_or(f64::NAN),
            n_puls: num(4)?,
            gap: num(5)?,
            flag: rec[6].to_string(),
        });
    }
    Ok((meta, rows))
}
