use std::fs;
use std::process::{Command, Output};

fn kobalab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kobalab"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn classify_sqrt_profile() {
    let out = kobalab(&[
        "classify",
        "--profile",
        "exp-power",
        "--alpha",
        "0.5",
        "--c",
        "1",
        "--point",
        "0,0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(
        stdout(&out).contains("weakly goldilocks"),
        "{}",
        stdout(&out)
    );
}

#[test]
fn classify_json_output_parses() {
    let out = kobalab(&["classify", "--alpha", "2", "--json"]);
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["is_strongly_non_goldilocks"], "yes");
}

#[test]
fn classify_off_boundary_is_invalid_input() {
    let out = kobalab(&["classify", "--point", "0.3,1.0"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn geodesic_reaches_and_certifies() {
    let out = kobalab(&[
        "geodesic",
        "--alpha",
        "1",
        "--c",
        "1",
        "--f0",
        "1e-6",
        "--certify",
        "4.2",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("Certified"), "{text}");
    assert!(text.contains("terminal depth:  6.2"), "{text}");
}

#[test]
fn geodesic_escapes_in_convergent_regime() {
    let out = kobalab(&[
        "geodesic",
        "--alpha",
        "0.5",
        "--c",
        "1",
        "--f0",
        "1e-9",
        "--depth-cap",
        "0.25",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("escaped"));
}

#[test]
fn kdist_on_flat_profile() {
    let out = kobalab(&["kdist", "--profile", "flat", "--from", "0,1", "--to", "0,2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let value = |key: &str| -> f64 {
        text.lines()
            .find_map(|l| l.strip_prefix(key))
            .unwrap()
            .trim()
            .parse()
            .unwrap()
    };
    let (lower, upper) = (value("lower"), value("upper"));
    assert!((lower - 0.5 * 2f64.ln()).abs() < 1e-12, "{lower}");
    assert!(upper >= lower);
}

#[test]
fn kdist_with_grid() {
    let out = kobalab(&[
        "kdist",
        "--alpha",
        "1",
        "--from",
        "0,0,0.5,0",
        "--to",
        "0,0.5,0.1,0",
        "--grid",
        "0.1",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn visibility_run_writes_reports() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("control.toml");
    fs::write(
        &config,
        "version = 1\nalpha = 0.5\ndepth_cap = 0.25\ngromov = false\nf0 = [1e-6, 1e-9]\n",
    )
    .unwrap();
    let out_dir = dir.path().join("out");
    let out = kobalab(&[
        "visibility-run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    for name in ["report.json", "curves.csv", "gromov.csv", "classify.csv"] {
        assert!(out_dir.join(name).exists(), "{name}");
    }
    let curves = fs::read_to_string(out_dir.join("curves.csv")).unwrap();
    assert_eq!(curves.lines().filter(|l| l.contains("escaped")).count(), 2);
}

#[test]
fn counterexample_run_writes_faces() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("suite.toml");
    fs::write(
        &config,
        "version = 1\nprofile = \"mollified\"\nalpha = 0.5\nf0 = []\nchords = [2, 4]\n",
    )
    .unwrap();
    let out = kobalab(&[
        "counterexample",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let faces = fs::read_to_string(dir.path().join("faces.csv")).unwrap();
    assert_eq!(faces.lines().count(), 4);
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    fs::write(&config, "version = 1\nf0 = [1e-3, 1e-2]\n").unwrap();
    let out = kobalab(&["visibility-run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_config_exits_4() {
    let out = kobalab(&["visibility-run", "--config", "/nonexistent/kobalab.toml"]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("control.toml");
    fs::write(
        &config,
        "version = 1\nalpha = 0.5\ndepth_cap = 0.25\ngromov = false\nf0 = [1e-6]\n",
    )
    .unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "").unwrap();
    let out_dir = blocker.join("out");
    let out = kobalab(&[
        "visibility-run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn unknown_flag_exits_2() {
    assert_eq!(kobalab(&["classify", "--bogus"]).status.code(), Some(2));
}
