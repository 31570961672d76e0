use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn slk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_slk"))
        .args(args)
        .env_remove("SLK_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn first_line(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn assert_same_tree(a: &Path, b: &Path) {
    let mut names: Vec<_> = walk(a);
    names.sort();
    let mut other: Vec<_> = walk(b);
    other.sort();
    assert_eq!(names, other);
    for rel in names {
        assert!(
            fs::read(a.join(&rel)).unwrap() == fs::read(b.join(&rel)).unwrap(),
            "{rel} differs"
        );
    }
}

fn walk(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_string_lossy().into_owned());
            }
        }
    }
    out
}

#[test]
fn list_presets_names_every_preset() {
    let out = slk(&["list-presets"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in [
        "toy1",
        "toy2",
        "bloch-free",
        "bloch-tilt",
        "bloch-friction",
        "anderson-free",
        "anderson-friction",
    ] {
        assert!(text.lines().any(|l| l.starts_with(name)), "{name} missing");
    }
}

#[test]
fn toy1_preset_writes_series_and_snapshots() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().join("toy1");
    let out = slk(&["run", "--preset", "toy1", "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(first_line(&dir.join("series.csv")), "t,norm,energy,overlap");
    assert_eq!(first_line(&dir.join("snapshots/t_50.000000.csv")), "x,rho,S,V,W");
    assert_eq!(first_line(&dir.join("potential.csv")), "x,V");
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert!(files.contains(&"series.csv"));
    assert_eq!(manifest["config"]["continuous"]["beta"], 0.5);
    assert!(manifest["config"].get("output_dir").is_none());
}

#[test]
fn bloch_run_writes_density_map() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slk(&["run", "--preset", "bloch-free", "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(first_line(&tmp.path().join("density_map.csv")), "t,x,rho");
    assert_eq!(first_line(&tmp.path().join("series.csv")), "t,norm,energy,arrival_prob");
    let text = fs::read_to_string(tmp.path().join("density_map.csv")).unwrap();
    assert!(!text.contains('\r'));
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    for dir in [&a, &b] {
        let out = slk(&[
            "run",
            "--preset",
            "anderson-friction",
            "--set",
            "lattice.t_max=200",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    assert_same_tree(&a, &b);
}

#[test]
fn manifest_round_trips_as_config() {
    let tmp = tempfile::tempdir().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = slk(&[
        "run",
        "--preset",
        "bloch-friction",
        "--set",
        "lattice.t_max=50",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let manifest = a.join("manifest.json");
    let out = slk(&[
        "run",
        "--config",
        manifest.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_same_tree(&a, &b);
}

#[test]
fn non_integer_k_is_a_config_error_citing_k() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"kind": "bloch", "lattice": {"epsilon": 17, "k": 7.5}}"#).unwrap();
    let out = slk(&["validate-config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("lattice.k"), "{}", stderr(&out));

    fs::write(&bad, r#"{"kind": "bloch", "lattice": {"epsilon": 16}}"#).unwrap();
    let out = slk(&["validate-config", bad.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("lattice.k"));
}

#[test]
fn validate_config_prints_resolved_values() {
    let out = slk(&["validate-config", "--preset", "anderson-free"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"seed\": 42"));
    assert!(text.contains("\"t_max\": 2000.0"));
}

#[test]
fn unknown_keys_and_bad_syntax_are_config_errors() {
    let out = slk(&["validate-config", "--preset", "toy1", "--set", "continuous.betta=1"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("betta"), "{}", stderr(&out));

    let tmp = tempfile::tempdir().unwrap();
    let bad = tmp.path().join("broken.json");
    fs::write(&bad, "{\"kind\": ").unwrap();
    assert_eq!(code(&slk(&["validate-config", bad.to_str().unwrap()])), 1);
    assert_eq!(code(&slk(&["validate-config", "/nonexistent/config.json"])), 1);
    assert_eq!(code(&slk(&["run"])), 1);
    assert_eq!(code(&slk(&["frobnicate"])), 1);
}

#[test]
fn unwritable_output_is_a_runtime_error() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("plain-file");
    fs::write(&file, "x").unwrap();
    let target = file.join("sub");
    let out = slk(&[
        "run",
        "--preset",
        "bloch-free",
        "--set",
        "lattice.t_max=1",
        "--out",
        target.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
}

#[test]
fn spectrum_preset_emits_eigenvalues() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slk(&[
        "spectrum",
        "--preset",
        "toy2",
        "--count",
        "5",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = fs::read_to_string(tmp.path().join("spectrum.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "index,eigenvalue");
    assert_eq!(lines.len(), 6);
    let e: Vec<f64> = lines[1..]
        .iter()
        .map(|l| l.split(',').nth(1).unwrap().parse().unwrap())
        .collect();
    assert!(e.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(first_line(&tmp.path().join("ground_state.csv")), "x,amplitude");
}

#[test]
fn ensemble_writes_curves_and_quartiles() {
    let tmp = tempfile::tempdir().unwrap();
    let out = slk(&[
        "ensemble",
        "--preset",
        "anderson-free",
        "-n",
        "3",
        "--set",
        "lattice.t_max=100",
        "--out",
        tmp.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(
        first_line(&tmp.path().join("ensemble_curves.csv")),
        "t,seed_42,seed_43,seed_44"
    );
    assert_eq!(first_line(&tmp.path().join("ensemble_stats.csv")), "t,median,q25,q75");
    assert!(tmp.path().join("manifest.json").exists());
}

#[test]
fn output_dir_falls_back_to_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_slk"))
        .args(["run", "--preset", "bloch-tilt", "--set", "lattice.t_max=2"])
        .env("SLK_OUTPUT_DIR", tmp.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(tmp.path().join("series.csv").exists());
}

#[test]
fn custom_lattice_potential_from_file() {
    let tmp = tempfile::tempdir().unwrap();
    let pot = tmp.path().join("v.csv");
    let mut text = String::from("x,V\n");
    for x in 1..=40 {
        text.push_str(&format!("{x},{}\n", -0.01 * x as f64));
    }
    fs::write(&pot, text).unwrap();
    let cfg = tmp.path().join("custom.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"kind": "custom",
                "custom": {{"potential_file": "{}", "domain": "lattice",
                           "initial": {{"sine_packet": {{"epsilon": 5, "k": 2}}}}}},
                "lattice": {{"beta": 0.02, "t_max": 20}}}}"#,
            pot.display()
        ),
    )
    .unwrap();
    let dir = tmp.path().join("out");
    let out = slk(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(first_line(&dir.join("density_map.csv")), "t,x,rho");
}
