use std::path::PathBuf;

use csm_core::couplings::overhauser_max;
use csm_core::observables::observe;
use csm_core::presets::preset_scenarios;
use csm_core::resonance::{electronic_resonance, electronic_spacing, locate_dip};
use csm_core::spectral::{full_spectrum, stationary_state, DegeneratePolicy, StationaryMethod};
use csm_core::sweep::{read_sweep_csv, run_sweep, write_sweep_csv, write_sweep_csv_file, FieldGrid, ModelTemplate, Quantity, SweepConfig};
use csm_core::{Budget, PulsedSystem};

fn config(model: ModelTemplate, grid: FieldGrid, quantities: Vec<Quantity>, workers: usize) -> SweepConfig {
    SweepConfig { model, field_grid: grid, quantities, p_thresh: 0.01, parallelism: Some(workers), output_path: None }
}

fn csv_bytes(cfg: &SweepConfig) -> Vec<u8> {
    let rows = run_sweep(cfg, &Budget::default()).unwrap();
    let mut out = Vec::new();
    write_sweep_csv(cfg, &rows, &mut out).unwrap();
    out
}

#[test]
fn output_does_not_depend_on_worker_count() {
    let grid = FieldGrid::Range { h_min: 490.95, h_max: 491.0, step: 5e-3 };
    let all = vec![Quantity::Entropy, Quantity::BathPx, Quantity::CentralPz, Quantity::NPuls, Quantity::Gap];
    let one = csv_bytes(&config(ModelTemplate::defaults(2), grid.clone(), all.clone(), 1));
    let three = csv_bytes(&config(ModelTemplate::defaults(2), grid, all, 3));
    assert_eq!(one, three);
}

#[test]
fn single_point_sweep_matches_direct_evaluation() {
    let h = 490.9765;
    let cfg = config(ModelTemplate::defaults(3), FieldGrid::List(vec![h]), vec![Quantity::Entropy, Quantity::BathPx, Quantity::CentralPz, Quantity::Gap], 1);
    let row = &run_sweep(&cfg, &Budget::default()).unwrap()[0];
    assert_eq!(row.flag, "ok");

    let s = PulsedSystem::new(&cfg.model.params(h).unwrap()).unwrap();
    let st = stationary_state(&s, StationaryMethod::default(), DegeneratePolicy::Error).unwrap();
    let o = observe(&s, &st.v0).unwrap();
    assert!((row.entropy - o.entropy).abs() < 1e-10);
    assert!((row.bath_px - o.bath_polarization_x).abs() < 1e-10);
    assert!((row.central_pz - o.central_polarization[2]).abs() < 1e-10);
    let spec = full_spectrum(&s, &s.maximally_mixed(), &Budget::default()).unwrap();
    assert!((row.gap.unwrap() - spec.gap()).abs() < 1e-12);
}

#[test]
fn degenerate_points_are_flagged_and_the_sweep_continues() {
    let model = ModelTemplate { couplings: Some(vec![0.02, 0.02]), ..ModelTemplate::defaults(2) };
    let cfg = config(model, FieldGrid::List(vec![1.0, 1.37]), vec![Quantity::Entropy], 1);
    let rows = run_sweep(&cfg, &Budget::default()).unwrap();
    assert_eq!(rows.len(), 2);
    // degenerate points report the long-time limit of the mixed start
    assert!(rows.iter().all(|r| r.flag == "degenerate" && r.entropy.is_finite()));
}

#[test]
fn dips_repeat_with_the_pulse_frequency() {
    let t = ModelTemplate::defaults(1);
    let a = overhauser_max(&t.coupling_set().unwrap());
    let spacing = electronic_spacing(t.t_rep);
    assert!((spacing - 0.5).abs() < 1e-15);
    let dips: Vec<f64> = (4..8)
        .map(|k| {
            let e = electronic_resonance(k, t.t_rep);
            locate_dip(&t, e - 2.0 * a, e, 41, 1e-7, &Budget::default()).unwrap().h
        })
        .collect();
    for w in dips.windows(2) {
        assert!((w[1] - w[0] - spacing).abs() < 2e-3, "{dips:?}");
    }
}

#[test]
fn csv_round_trips_through_a_file() {
    let cfg = config(
        ModelTemplate::defaults(1),
        FieldGrid::Range { h_min: 1.0, h_max: 1.02, step: 0.01 },
        vec![Quantity::Entropy, Quantity::NPuls],
        1,
    );
    let rows = run_sweep(&cfg, &Budget::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.csv");
    write_sweep_csv_file(&cfg, &rows, &path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("# params: {"));
    let (meta, back) = read_sweep_csv(&text).unwrap();
    assert_eq!(meta.quantities, cfg.quantities);
    assert_eq!(back.len(), 3);
    for (a, b) in rows.iter().zip(&back) {
        assert_eq!(a.h.to_bits(), b.h.to_bits());
        assert_eq!(a.entropy.to_bits(), b.entropy.to_bits());
        assert_eq!(a.n_puls, b.n_puls);
        assert!(b.bath_px.is_nan() && b.gap.is_none());
    }
}

fn snapshot_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/snapshots/presets.json")
}

/// Set `UPDATE_SNAPSHOTS=1` to regenerate after an intended preset change.
#[test]
fn preset_table_matches_snapshot() {
    let current = serde_json::to_string_pretty(&preset_scenarios()).unwrap() + "\n";
    let path = snapshot_path();
    if std::env::var_os("UPDATE_SNAPSHOTS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, &current).unwrap();
    }
    let stored = std::fs::read_to_string(&path).expect("missing snapshot, rerun with UPDATE_SNAPSHOTS=1");
    assert_eq!(stored, current);
}

#[test]
fn config_files_reject_unknown_keys() {
    let good = r#"{"model": {"n": 2}, "field_grid": {"h_min": 1.0, "h_max": 1.1, "step": 0.05}, "quantities": ["entropy"]}"#;
    assert!(SweepConfig::from_json(good).is_ok());
    let bad = r#"{"model": {"n": 2, "b_field": 3}, "field_grid": [1.0], "quantities": ["entropy"]}"#;
    assert!(matches!(SweepConfig::from_json(bad), Err(csm_core::Error::Config(_))));
}
