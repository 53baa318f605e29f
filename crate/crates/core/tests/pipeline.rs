//! Config text through integration to on-disk artifacts, on a tiny grid.

use approx::assert_relative_eq;
use tornado::integrator::{self, heat, Termination};
use tornado::io::{self, parse_config_file};
use tornado::{build_initial_data, Method};

const TINY: &str = r#"
[grid]
nx = 8
ny = 8
nz = 24
h = 0.75
origin = [-3.0, -3.0, 0.75]

[init]
R = 5.0
D = 2
amplitude = 1.0
lambda = [[[0.3, -0.2], [0.5, 0.1], [-0.4, 0.7]],
          [[0.9, 0.0], [-0.6, 0.2], [0.1, -0.3]],
          [[-0.2, 0.8], [0.4, -0.5], [0.6, 0.05]]]

[time]
dt = 0.001
t_max = 0.01

[output]
snapshot_every = 4
"#;

#[test]
fn tiny_run_round_trips_through_disk() {
    let cfg = parse_config_file::<f64>(TINY).unwrap().run;
    let mut snaps = Vec::new();
    let out = integrator::run(&cfg, &mut |s| {
        snaps.push((s.step, s.field.clone(), s.t));
        Ok(())
    })
    .unwrap();
    assert_eq!(out.termination, Termination::Horizon);
    assert_eq!(out.trace.len(), 11);
    let first = out.trace.records()[0];
    assert_eq!(first.t, 0.0);
    assert_relative_eq!(first.mynorm, 1.0, max_relative = 1e-14);
    assert_eq!(snaps.iter().map(|s| s.0).collect::<Vec<_>>(), vec![0, 4, 8, 10]);

    let dir = tempfile::tempdir().unwrap();
    let trace_path = dir.path().join("energy.csv");
    io::write_energy_csv(&out.trace, &trace_path).unwrap();
    assert_eq!(io::read_energy_csv::<f64>(&trace_path).unwrap(), out.trace);

    let (step, field, t) = snaps.last().unwrap();
    assert_eq!(*step, 10);
    let snap_path = dir.path().join("final.bin");
    io::write_snapshot(field, *t, &snap_path).unwrap();
    let (back, t_back) = io::read_snapshot(&snap_path).unwrap();
    assert_eq!(t_back.to_bits(), t.to_bits());
    for c in 0..3 {
        assert!(back.component(c).iter().zip(field.component(c)).all(|(a, b)| a.to_bits() == b.to_bits()));
    }
}

#[test]
fn disabled_nonlinearity_is_pure_heat_flow() {
    let mut cfg = parse_config_file::<f64>(TINY).unwrap().run;
    cfg.method = Method::Disabled;
    let v0 = build_initial_data(&cfg.init, &cfg.grid).unwrap();
    let out = integrator::run(&cfg, &mut integrator::no_snapshots).unwrap();
    let exact = heat(&v0, out.final_t);
    assert!(out.final_field.distance(&exact).unwrap() <= 1e-12 * exact.norm());
}

#[test]
fn f32_and_f64_runs_agree_to_single_precision() {
    let cfg = parse_config_file::<f64>(TINY).unwrap().run;
    let cfg32 = parse_config_file::<f32>(TINY).unwrap().run;
    let a = integrator::run(&cfg, &mut integrator::no_snapshots).unwrap();
    let b = integrator::run(&cfg32, &mut integrator::no_snapshots).unwrap();
    let diff = a.final_field.distance(&b.final_field.cast::<f64>()).unwrap();
    assert!(diff <= 1e-5 * a.final_field.norm(), "{diff}");
}

#[test]
fn shipped_configs_parse() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            let text = std::fs::read_to_string(&path).unwrap();
            let cfg = parse_config_file::<f64>(&text).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            cfg.run.validate().unwrap();
            seen += 1;
        }
    }
    assert_eq!(seen, 4);
}
