use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cmrac_core::config::{load, ConfigFile, BENCHMARK, BENCHMARK_UNMATCHED};
use tempfile::TempDir;

fn cmrac(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmrac"))
        .args(args)
        .env("CMRAC_OUT_DIR", out)
        .output()
        .expect("spawn cmrac")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_config(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn short_benchmark(t_end: f64) -> String {
    BENCHMARK.replace("t_end = 40.0", &format!("t_end = {t_end:?}"))
}

/// Scalar plant with P = 1 and xi' = 0.1, so the barrier set is easy to place.
const SCALAR: &str = r#"
[plant]
a = [[1.0]]
b = [[1.0]]

[reference]
a = [[-1.0]]
b = [[1.0]]

[constraints]
x_bar = 6.5
u_bar = 20.0
xa_bar = 6.4
d_bar = 0.0
kx_bar = 2.5
kr_bar = 1.5

[gains]
q = [[2.0]]
gamma_x = [[1.0]]
gamma_r = [[1.0]]

[controller]
law = "blf"
aux_variant = "state_bound"

[signals.reference]
channels = [[]]

[signals.disturbance]
cap = 0.0
channels = [[]]

[sim]
x0 = [0.0]
xr0 = [0.0]
t_end = 0.01
dt = 0.001
"#;

#[test]
fn feasibility_report_for_benchmark() {
    let tmp = TempDir::new().unwrap();
    let o = cmrac(&["feasibility", "--preset", "benchmark"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("alpha          = 1.593143"), "{s}");
    assert!(s.contains("beta           = 1.192414"), "{s}");
    assert!(s.contains("C1             = feasible"), "{s}");
    assert!(s.contains("case           = case_2_1"), "{s}");
}

#[test]
fn feasibility_flags_tight_input_bound() {
    let tmp = TempDir::new().unwrap();
    let text = BENCHMARK
        .replace("u_bar = 12.0", "u_bar = 11.0")
        .replace("d_bar = 1.2", "d_bar = 1.0")
        .replace("cap = 1.2", "cap = 1.0");
    let cfg = write_config(&tmp, "tight.toml", &text);
    let o = cmrac(&["feasibility", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    let s = stdout(&o);
    assert!(s.contains("C1             = infeasible"), "{s}");
    assert!(s.contains("min u_bar      = 11.49"), "{s}");
}

#[test]
fn degenerate_preset_has_unbounded_state_region() {
    let tmp = TempDir::new().unwrap();
    let o = cmrac(&["feasibility", "--preset", "degenerate"], tmp.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("alpha          = -"), "{s}");
    assert!(s.contains("max x_bar      = unbounded"), "{s}");
}

#[test]
fn region_artifacts() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("region");
    let o = cmrac(
        &[
            "feasibility",
            "--preset",
            "benchmark",
            "--region",
            "--alpha",
            "1",
            "--beta",
            "1",
            "--u-range",
            "1:12",
            "--x-range",
            "1:6",
            "--resolution",
            "12",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("region.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 144);
    assert!(csv
        .lines()
        .any(|l| l.starts_with("1.00000000000000000e0,1.00000000000000000e0,0")));
    assert!(fs::read_to_string(out.join("region.svg"))
        .unwrap()
        .contains("feasible"));
}

#[test]
fn malformed_config_exits_2_with_location() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        &tmp,
        "bad.toml",
        &BENCHMARK.replace("x_bar = 6.5", "x_bar = [6.5"),
    );
    let o = cmrac(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line"), "{}", stderr(&o));

    let cfg = write_config(
        &tmp,
        "missing.toml",
        &BENCHMARK.replace("kr_bar = 0.6\n", ""),
    );
    let o = cmrac(&["feasibility", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("kr_bar"), "{}", stderr(&o));

    let o = cmrac(&["simulate", "/nonexistent/config.toml"], tmp.path());
    assert_eq!(code(&o), 2);
    let o = cmrac(&["simulate", "--preset", "nope"], tmp.path());
    assert_eq!(code(&o), 2);
}

#[test]
fn simulate_writes_artifacts_and_manifest_round_trips() {
    let tmp = TempDir::new().unwrap();
    let text = short_benchmark(1.0);
    let cfg_path = write_config(&tmp, "short.toml", &text);
    let out = tmp.path().join("run");
    let o = cmrac(
        &[
            "simulate",
            cfg_path.to_str().unwrap(),
            "--plots",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in [
        "manifest.toml",
        "trajectory.csv",
        "metrics.txt",
        "summary.txt",
        "x_norm.svg",
        "u_norm.svg",
        "e_norm.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }

    let manifest: toml::Table =
        toml::from_str(&fs::read_to_string(out.join("manifest.toml")).unwrap()).unwrap();
    let run = manifest["run"].as_table().unwrap();
    assert_eq!(run["config_sha256"].as_str().unwrap().len(), 64);
    assert_eq!(
        run["toolkit_version"].as_str().unwrap(),
        env!("CARGO_PKG_VERSION")
    );
    let config_text = toml::to_string(manifest["config"].as_table().unwrap()).unwrap();
    let reparsed = ConfigFile::parse(&config_text).unwrap().resolve().unwrap();
    assert_eq!(reparsed, load(&text).unwrap());

    let metrics = fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(metrics.contains("state_constraint_ok=true"));
    assert!(metrics.contains("input_constraint_ok=true"));
    assert!(metrics.contains("\nsteps=1000\n"));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x_1,x_2,x_3,x_4,xr_1,"));
    // stride 10 over 1000 steps
    assert_eq!(csv.lines().count(), 1 + 101);
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "short.toml", &short_benchmark(0.5));
    let mut dumps = Vec::new();
    for k in 0..2 {
        let out = tmp.path().join(format!("run{k}"));
        let o = cmrac(
            &[
                "simulate",
                cfg.to_str().unwrap(),
                "--plots",
                "--out",
                out.to_str().unwrap(),
            ],
            tmp.path(),
        );
        assert_eq!(code(&o), 0);
        let files: Vec<Vec<u8>> = [
            "trajectory.csv",
            "metrics.txt",
            "x_norm.svg",
            "u_norm.svg",
            "e_norm.svg",
        ]
        .iter()
        .map(|f| fs::read(out.join(f)).unwrap())
        .collect();
        dumps.push(files);
    }
    assert_eq!(dumps[0], dumps[1]);
}

#[test]
fn out_dir_comes_from_environment() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "short.toml", &short_benchmark(0.05));
    let env_out = tmp.path().join("from-env");
    let o = cmrac(&["simulate", cfg.to_str().unwrap()], &env_out);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(env_out.join("trajectory.csv").exists());
}

#[test]
fn infeasible_blf_requires_override() {
    let tmp = TempDir::new().unwrap();
    let text = short_benchmark(0.2).replace("u_bar = 12.0", "u_bar = 11.0");
    let cfg = write_config(&tmp, "tight.toml", &text);
    let out = tmp.path().join("o");
    let args = [
        "simulate",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    let o = cmrac(&args, tmp.path());
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(
        out.join("manifest.toml").exists(),
        "manifest precedes the run"
    );

    let o = cmrac(
        &[&args[..], &["--override-feasibility"]].concat(),
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));

    let o = cmrac(&[&args[..], &["--law", "classical"]].concat(), tmp.path());
    assert_eq!(code(&o), 0, "baseline is never gated: {}", stderr(&o));
}

#[test]
fn initial_error_outside_barrier_is_a_config_error() {
    let tmp = TempDir::new().unwrap();
    let text = SCALAR.replace("x0 = [0.0]", "x0 = [0.2]");
    let cfg = write_config(&tmp, "scalar.toml", &text);
    let o = cmrac(&["simulate", cfg.to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(stderr(&o).contains("barrier"), "{}", stderr(&o));
}

#[test]
fn state_violation_in_blf_run_exits_4() {
    // x_a = x_r = 6.45 is not clipped under the state-bound variant; e(0) =
    // 0.07 is inside the barrier set but ||x(0)|| = 6.52 exceeds x_bar.
    let tmp = TempDir::new().unwrap();
    let text = SCALAR
        .replace("x0 = [0.0]", "x0 = [6.52]")
        .replace("xr0 = [0.0]", "xr0 = [6.45]");
    let cfg = write_config(&tmp, "scalar.toml", &text);
    let out = tmp.path().join("o");
    let o = cmrac(
        &[
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 4, "{}{}", stdout(&o), stderr(&o));
    let metrics = fs::read_to_string(out.join("metrics.txt")).unwrap();
    assert!(metrics.contains("state_constraint_ok=false"));
    assert!(metrics.contains("omega_e_ok=true"));
}

#[test]
fn barrier_abort_exits_5_with_partial_log() {
    let tmp = TempDir::new().unwrap();
    let text = BENCHMARK_UNMATCHED
        .replace("onset = 20.0", "onset = 0.5")
        .replace("t_end = 40.0", "t_end = 2.0");
    let cfg = write_config(&tmp, "unmatched.toml", &text);
    let out = tmp.path().join("o");
    let o = cmrac(
        &[
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 5, "{}{}", stdout(&o), stderr(&o));
    let csv = fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(csv.lines().last().unwrap().starts_with("# aborted at t="));
    assert!(fs::read_to_string(out.join("metrics.txt"))
        .unwrap()
        .contains("aborted=true"));

    let o = cmrac(
        &[
            "simulate",
            cfg.to_str().unwrap(),
            "--law",
            "classical",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn compare_tabulates_both_runs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "short.toml", &short_benchmark(2.0));
    let out = tmp.path().join("cmp");
    let o = cmrac(
        &[
            "compare",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(out.join("comparison.txt")).unwrap();
    for key in [
        "max ||x||",
        "max ||u||",
        "blf",
        "classical",
        "state constraint",
    ] {
        assert!(table.contains(key), "{key}\n{table}");
    }
    assert!(!table.contains("no external disturbance"));
    for f in [
        "blf/trajectory.csv",
        "classical/trajectory.csv",
        "blf/manifest.toml",
        "comparison.csv",
        "x_norm.svg",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let blf_metrics = fs::read_to_string(out.join("blf/metrics.txt")).unwrap();
    let cl_metrics = fs::read_to_string(out.join("classical/metrics.txt")).unwrap();
    assert_ne!(blf_metrics, cl_metrics);
    let manifest = fs::read_to_string(out.join("classical/manifest.toml")).unwrap();
    assert!(manifest.contains("law = \"classical\""));
    assert!(
        manifest.contains("[[15.0, 0.0], [0.0, 15.0]]"),
        "baseline gains applied"
    );

    let undisturbed = write_config(
        &tmp,
        "quiet.toml",
        &short_benchmark(0.5).replace("cap = 1.2", "cap = 0.0"),
    );
    let out = tmp.path().join("cmp2");
    let o = cmrac(
        &[
            "compare",
            undisturbed.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    assert!(fs::read_to_string(out.join("comparison.txt"))
        .unwrap()
        .contains("no external disturbance"));
}

#[test]
fn sweep_feasibility_grid() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("sw");
    let o = cmrac(
        &[
            "sweep",
            "--preset",
            "benchmark",
            "--axis",
            "u_bar=10:14:5",
            "--axis",
            "x_bar=6.45:7.45:3",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(rows.len(), 15);
    assert!(csv.starts_with("u_bar,x_bar,c1_feasible"));
    // at u_bar = 12 the largest admissible x_bar is about 6.78; u_bar = 10 never suffices
    assert!(rows[6].contains(",1,"), "{}", rows[6]);
    assert!(rows[7].contains(",0,"), "{}", rows[7]);
    assert!(rows[..3].iter().all(|r| r.split(',').nth(2) == Some("0")));
    assert!(out.join("sweep_c1_margin.svg").exists());
}

#[test]
fn larger_adaptation_gain_costs_more_input() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("gamma");
    let o = cmrac(
        &[
            "sweep",
            "--preset",
            "benchmark",
            "--axis",
            "gamma_scale=0.5:4:3",
            "--simulate",
            "--out",
            out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let col = header.iter().position(|h| *h == "max_u_norm").unwrap();
    let max_u: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|r| r.split(',').nth(col).unwrap().parse().unwrap())
        .collect();
    assert_eq!(max_u.len(), 3);
    assert!(max_u.windows(2).all(|w| w[1] > w[0]), "{max_u:?}");
}

#[test]
fn single_cell_sweep_matches_simulate() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(&tmp, "short.toml", &short_benchmark(1.0));
    let sim_out = tmp.path().join("sim");
    let o = cmrac(
        &[
            "simulate",
            cfg.to_str().unwrap(),
            "--out",
            sim_out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0);
    let sw_out = tmp.path().join("sw");
    let o = cmrac(
        &[
            "sweep",
            cfg.to_str().unwrap(),
            "--axis",
            "u_bar=12",
            "--simulate",
            "--out",
            sw_out.to_str().unwrap(),
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let metrics = fs::read_to_string(sim_out.join("metrics.txt")).unwrap();
    let get = |k: &str| -> f64 {
        metrics
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{k}=")))
            .unwrap()
            .parse()
            .unwrap()
    };
    let csv = fs::read_to_string(sw_out.join("sweep.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    for k in ["max_x_norm", "max_u_norm", "max_e_norm"] {
        let idx = header.iter().position(|h| *h == k).unwrap();
        assert_eq!(row[idx].parse::<f64>().unwrap(), get(k), "{k}");
    }
}

#[test]
fn usage_errors() {
    let tmp = TempDir::new().unwrap();
    let o = cmrac(
        &["sweep", "--preset", "benchmark", "--axis", "speed=1:2:3"],
        tmp.path(),
    );
    assert_ne!(code(&o), 0);
    let o = cmrac(&["presets"], tmp.path());
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("benchmark_unmatched"));
}
