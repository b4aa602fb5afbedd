use std::process::Command;

use glvx_cli::config::ExperimentConfig;
use glvx_cli::experiment::{run_experiment, ExperimentOutcome};

fn config(text: &str) -> ExperimentConfig {
    ExperimentConfig::from_toml(text).unwrap()
}

#[test]
fn effective_pair_separates_monotonically() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        r#"
model = "effective_gf"
lambda = 2.0
[[vortices]]
x = -3.0
y = 0.0
n = 1
[[vortices]]
x = 3.0
y = 0.0
n = 1
[run]
t_end = 40.0
effective_dt = 0.05
"#,
    );
    run_experiment(&c, Some(dir.path())).unwrap();
    let text = std::fs::read_to_string(dir.path().join("effective.csv")).unwrap();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let (x0, x1) = (
        header.iter().position(|h| *h == "x_0").unwrap(),
        header.iter().position(|h| *h == "x_1").unwrap(),
    );
    let separations: Vec<f64> = lines
        .map(|l| {
            let cells: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            cells[x1] - cells[x0]
        })
        .collect();
    assert_eq!(separations.len(), 801);
    assert!(separations.windows(2).all(|w| w[1] > w[0]));
}

#[test]
fn static_vortex_stays_put_under_gradient_flow() {
    let c = config(
        r#"
model = "gradient_flow"
lambda = 1.0
[[vortices]]
x = 0.3
y = -0.2
n = 1
[lattice]
spacing = 0.25
[run]
t_end = 5.0
snapshot_every = 20
"#,
    );
    let ExperimentOutcome::Lattice(run) = run_experiment(&c, None).unwrap() else {
        panic!("lattice outcome expected")
    };
    let track = &run.trajectory.tracks.tracks[0];
    let start = track.observations[0].position;
    let drift = track
        .observations
        .iter()
        .map(|o| (o.position[0] - start[0]).hypot(o.position[1] - start[1]))
        .fold(0.0, f64::max);
    assert!(drift <= 2.0 * 0.25, "drift {drift}");
}

#[test]
fn maxwell_higgs_conserves_energy_and_writes_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let c = config(
        r#"
model = "maxwell_higgs"
lambda = 2.0
[[vortices]]
x = -3.0
y = 0.0
n = 1
px = 0.05
[[vortices]]
x = 3.0
y = 0.0
n = 1
px = -0.05
[lattice]
spacing = 0.25
[run]
t_end = 10.0
snapshot_every = 8
"#,
    );
    let ExperimentOutcome::Lattice(run) = run_experiment(&c, Some(dir.path())).unwrap() else {
        panic!("lattice outcome expected")
    };
    assert!(run.summary.max_relative_energy_change <= 1e-4);
    for name in ["diagnostics.csv", "tracks.csv", "initial.glvx", "final.glvx", "run.json"] {
        assert!(dir.path().join(name).is_file(), "{name} missing");
    }
    let tracks = std::fs::read_to_string(dir.path().join("tracks.csv")).unwrap();
    assert!(tracks.starts_with("t,vortex_id,charge,x,y,core_value"));
}

fn glvx(args: &[&str]) -> i32 {
    Command::new(env!("CARGO_BIN_EXE_glvx"))
        .args(args)
        .output()
        .unwrap()
        .status
        .code()
        .unwrap()
}

#[test]
fn binary_reports_configuration_errors() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "model = \"gradient_flow\"\nlambda = 1.0\n[[vortices]]\nx = 9.0\ny = 0.0\nn = 1\n[lattice]\nspacing = 0.25\nextent = 12.0\n[run]\nt_end = 1.0\n",
    )
    .unwrap();
    assert_eq!(glvx(&["glue", "--config", path.to_str().unwrap()]), 2);
    assert_eq!(glvx(&["glue"]), 2);
    assert_eq!(glvx(&["--threads", "0", "verify-asymptotics", "--out", dir.path().to_str().unwrap()]), 2);
}

#[test]
fn binary_runs_glue_and_effective() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("pair.toml");
    std::fs::write(
        &path,
        "model = \"gradient_flow\"\nlambda = 2.0\n[[vortices]]\nx = -4.0\ny = 0.0\nn = 1\n[[vortices]]\nx = 4.0\ny = 0.0\nn = 1\n[lattice]\nspacing = 0.25\n[run]\nt_end = 2.0\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let (cfg, out_s) = (path.to_str().unwrap(), out.to_str().unwrap());
    assert_eq!(glvx(&["glue", "--config", cfg, "--out", out_s, "--threads", "2"]), 0);
    assert!(out.join("initial.glvx").is_file() && out.join("glue.json").is_file());
    assert_eq!(glvx(&["effective", "--config", cfg, "--out", out_s]), 0);
    assert!(out.join("effective.csv").is_file());
    assert_eq!(glvx(&["profile", "--config", cfg, "--out", out_s]), 0);
    assert_eq!(glvx(&["verify-asymptotics", "--out", out_s]), 0);
    assert!(out.join("asymptotics.csv").is_file());
}
