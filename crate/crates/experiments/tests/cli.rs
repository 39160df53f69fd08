use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn qillum(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qillum"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("QILLUM_CACHE_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

#[test]
fn usage_and_config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path();
    let bad_toml = out.join("bad.toml");
    fs::write(&bad_toml, "epsilon = \"x\"\n").unwrap();
    let cases: Vec<Vec<&str>> = vec![
        vec!["frobnicate"],
        vec!["show-config", "--no-such-flag"],
        vec!["show-config", "--config", "/definitely/missing.toml"],
        vec!["show-config", "--config", bad_toml.to_str().unwrap()],
        vec!["show-config", "--epsilon", "1"],
        vec!["show-config", "--nbar", "-0.5"],
        vec!["sweep", "--axis", "epsilon", "--grid", "0:1:x"],
        vec!["sweep", "--axis", "epsilon", "--grid", "0.1,1.0"],
        vec!["sweep", "--axis", "sideways", "--grid", "0.1"],
        vec!["sweep", "--axis", "t", "--grid", "0.5", "--quantities", "chi_q"],
        vec!["perturb", "--keep", "0"],
    ];
    for args in cases {
        let o = qillum(&args, out);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn show_config_layers_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "epsilon = 0.2\nprobe = \"coherent\"\nnbar_probe = 0.9\n").unwrap();
    let o = qillum(&["show-config", "--config", cfg.to_str().unwrap(), "--nbar", "0.3"], dir.path());
    assert!(o.status.success());
    let text = stdout(&o);
    let parsed: toml::Table = toml::from_str(&text).unwrap();
    assert_eq!(parsed["epsilon"].as_float(), Some(0.2));
    assert_eq!(parsed["nbar_probe"].as_float(), Some(0.3));
    assert_eq!(parsed["nbar_env"].as_float(), Some(4.0));
    assert_eq!(parsed["probe"].as_str(), Some("coherent"));
}

#[test]
fn transparent_object_gives_zero_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let o = qillum(&["sweep", "--axis", "epsilon", "--grid", "0", "--nbar", "0.01", "--no-cache"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = read_csv(&dir.path().join("sweep_epsilon.csv"));
    assert_eq!(
        header,
        ["epsilon", "chi_q", "chi_s", "A_q_lower", "A_q_upper", "A_s_lower", "A_s_upper", "dims", "flags"]
    );
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][8], "ok");
    for v in &rows[0][1..7] {
        assert!(v.parse::<f64>().unwrap().abs() < 1e-12, "{header:?} {:?}", rows[0]);
    }
    for q in ["chi_q", "chi_s", "A_q_bounds", "A_s_bounds"] {
        assert!(dir.path().join(format!("sweep_epsilon_{q}.svg")).exists());
    }
}

#[test]
fn sweeps_are_deterministic_and_cached() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["sweep", "--axis", "nbar_probe", "--grid", "0.01,0.02", "--probe", "coherent", "--quantities", "chi_s"];
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let mut v = args.to_vec();
        v.push("--no-cache");
        assert!(qillum(&v, out).status.success());
    }
    let csv_a = fs::read(a.join("sweep_nbar_probe.csv")).unwrap();
    assert_eq!(csv_a, fs::read(b.join("sweep_nbar_probe.csv")).unwrap());

    let c = dir.path().join("c");
    let first = qillum(&args, &c);
    assert!(stdout(&first).contains("2 points (0 from cache)"), "{}", stdout(&first));
    let fresh = fs::read(c.join("sweep_nbar_probe.csv")).unwrap();
    let second = qillum(&args, &c);
    assert!(stdout(&second).contains("2 points (2 from cache)"), "{}", stdout(&second));
    assert_eq!(fresh, fs::read(c.join("sweep_nbar_probe.csv")).unwrap());
    assert_eq!(fresh, csv_a);

    let (_, rows) = read_csv(&c.join("sweep_nbar_probe.csv"));
    let chi: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(chi[0] > 0.0 && chi[1] > chi[0]);
}

#[test]
fn theorem1_reports_a_residual_and_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = qillum(&["theorem1", "--epsilon", "0.1", "--nbar", "0.5", "--nenv", "4"], dir.path());
    let text = stdout(&o);
    assert_eq!(o.status.code(), Some(0), "{text}");
    let residual: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("residual"))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap()
        .parse()
        .unwrap();
    assert!(residual <= 5e-4);
    assert!(text.lines().any(|l| l == "PASS"));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("theorem1.json")).unwrap()).unwrap();
    assert_eq!(json["status"], "Pass");
}
