use std::fs;
use std::path::Path;
use std::process::Command;

use levyfield::drift::drift_poisson_closed;
use levyfield_cli::{parse_config, run, Overrides, Subcommand};

const EXAMPLE_ONE: &str = r#"
schema = "levyfield/1"

[model]
measure = { type = "poisson", z = 1.0 }
initial_curve = { type = "floor" }
horizon = { s_max = 2.0, t_max = 2.0 }
drift_mode = "ClosedForm"

[run]
n_paths = 400
seed = 7

[run.price]
points = [[0.5, 2.0], [1.0, 2.0]]

[run.validate.martingale]
t = 2.0
s = [0.5, 1.0, 1.5]
"#;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyfield"))
}

fn write_config(dir: &Path, text: &str) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, text).unwrap();
    path
}

fn overrides(out: &Path, workers: usize) -> Overrides {
    Overrides {
        out: Some(out.to_path_buf()),
        workers: Some(workers),
        ..Overrides::default()
    }
}

#[test]
fn drift_table_reproduces_poisson_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(Subcommand::DriftTable, EXAMPLE_ONE, &overrides(dir.path(), 1)).unwrap();
    let csv = fs::read_to_string(outcome.artifact).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "s,t,mu0_t,jump_increment,gaussian_correction,mu_s_t"
    );
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        let (s, t) = (v[0], v[1]);
        assert!(s <= t);
        assert!((v[3] - drift_poisson_closed(1.0, s, t)).abs() <= 1e-12 * (1.0 + v[3].abs()));
        assert_eq!(v[2], t * t);
        assert!((v[5] - (v[2] + v[3])).abs() <= 1e-12 * v[5].abs().max(1.0));
        rows += 1;
    }
    assert_eq!(rows, 20 * 21 / 2);
}

#[test]
fn outputs_are_byte_identical_across_worker_counts() {
    for command in [Subcommand::Simulate, Subcommand::Price, Subcommand::Validate] {
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let one = run(command, EXAMPLE_ONE, &overrides(a.path(), 1)).unwrap();
        let eight = run(command, EXAMPLE_ONE, &overrides(b.path(), 8)).unwrap();
        assert_eq!(
            fs::read(one.artifact).unwrap(),
            fs::read(eight.artifact).unwrap(),
            "{command:?}"
        );
    }
}

#[test]
fn writes_only_inside_the_output_directory() {
    let root = tempfile::tempdir().unwrap();
    let out = root.path().join("nested").join("out");
    run(Subcommand::Price, EXAMPLE_ONE, &overrides(&out, 1)).unwrap();
    let mut names: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names, ["prices.csv", "resolved.toml"]);
    assert_eq!(fs::read_dir(root.path()).unwrap().count(), 1);
    let echoed = fs::read_to_string(out.join("resolved.toml")).unwrap();
    let resolved = parse_config(&echoed).unwrap();
    assert_eq!(resolved.run.workers, 1);
    assert_eq!(resolved.run.out.as_deref(), Some(out.as_path()));
}

#[test]
fn price_rows_are_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(Subcommand::Price, EXAMPLE_ONE, &overrides(dir.path(), 1)).unwrap();
    let csv = fs::read_to_string(outcome.artifact).unwrap();
    assert!(csv.starts_with("path_id,s,t,F_s_t,R_s,P_s_t,Z_s_t\n"));
    assert_eq!(csv.lines().count(), 1 + 400 * 2);
    for line in csv.lines().skip(1) {
        let v: Vec<f64> = line.split(',').map(|f| f.parse().unwrap()).collect();
        assert!(v[3] >= 0.0 && v[4] >= 0.0);
        assert!(v[5] > 0.0 && v[5] <= 1.0 && v[6] <= v[5]);
    }
}

#[test]
fn precision_flag_shortens_floats() {
    let dir = tempfile::tempdir().unwrap();
    let mut o = overrides(dir.path(), 1);
    o.precision = Some(4);
    let outcome = run(Subcommand::DriftTable, EXAMPLE_ONE, &o).unwrap();
    let csv = fs::read_to_string(outcome.artifact).unwrap();
    let last = csv.lines().last().unwrap();
    assert_eq!(last.split(',').next().unwrap(), "2.000e0");
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), EXAMPLE_ONE);
    let output = binary()
        .args(["validate", "--config"])
        .arg(&good)
        .arg("--out")
        .arg(dir.path().join("good"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));

    let control = EXAMPLE_ONE.replace("\"ClosedForm\"", "\"Disabled\"");
    let path = write_config(dir.path(), &control);
    let output = binary()
        .args(["validate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("control"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&output.stdout).contains("FAIL"));

    let below = EXAMPLE_ONE.replace(
        "{ type = \"floor\" }",
        "{ type = \"table\", knots = [[0.0, 0.0], [2.0, 2.0]] }",
    ) + "\n[run.validate.positivity]\nnodes = 10\n";
    let path = write_config(dir.path(), &below);
    let output = binary()
        .args(["validate", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("below"))
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("positivity floor"));
}

#[test]
fn environment_overrides_mirror_flags() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), EXAMPLE_ONE);
    let out = dir.path().join("env");
    let output = binary()
        .arg("simulate")
        .env("LEVYFIELD_CONFIG", &config)
        .env("LEVYFIELD_OUT", &out)
        .env("LEVYFIELD_N_PATHS", "3")
        .env("LEVYFIELD_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0));
    let resolved = parse_config(&fs::read_to_string(out.join("resolved.toml")).unwrap()).unwrap();
    assert_eq!((resolved.run.n_paths, resolved.run.seed), (3, 99));
    let csv = fs::read_to_string(out.join("atoms.csv")).unwrap();
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| ["0,", "1,", "2,"].iter().any(|p| l.starts_with(p))));
}

#[test]
fn malformed_config_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), &EXAMPLE_ONE.replace("horizon", "horizn"));
    let output = binary()
        .args(["drift-table", "--config"])
        .arg(&path)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&output.stderr).contains("line"));
}
