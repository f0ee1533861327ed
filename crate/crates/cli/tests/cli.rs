use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_loewner-lab"))
}

fn run(out: &Path, args: &[&str]) -> Output {
    bin().arg("--out").arg(out).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read(p: impl AsRef<Path>) -> String {
    std::fs::read_to_string(p).unwrap()
}

fn json(p: impl AsRef<Path>) -> serde_json::Value {
    serde_json::from_str(&read(p)).unwrap()
}

/// Default plant samples, approximant and LDDC controller, built once.
struct Artifacts {
    _dir: tempfile::TempDir,
    root: PathBuf,
}

fn artifacts() -> &'static Artifacts {
    static CELL: OnceLock<Artifacts> = OnceLock::new();
    CELL.get_or_init(|| {
        let dir = tempfile::tempdir().unwrap();
        let root = dir.path().to_path_buf();
        assert_eq!(code(&run(&root, &["sample"])), 0);
        let data = root.join("plant.csv");
        assert_eq!(code(&run(&root, &["approximate", data.to_str().unwrap(), "--svd-tol", "1e-13"])), 0);
        assert_eq!(code(&run(&root, &["lddc", data.to_str().unwrap(), "--reference", "m2"])), 0);
        Artifacts { _dir: dir, root }
    })
}

#[test]
fn sample_writes_requested_grid() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["sample", "--n", "200", "--wmin", "0.0628", "--wmax", "6.2832"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let csv = read(dir.path().join("plant.csv"));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega_rad_s,re,im");
    assert_eq!(lines.len(), 201);
    assert!(lines[1].starts_with("6.2799999999999995e-2,"));
}

#[test]
fn outputs_are_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        assert_eq!(code(&run(d.path(), &["sample", "--grid-n", "80"])), 0);
        let csv = d.path().join("plant.csv");
        assert_eq!(code(&run(d.path(), &["approximate", csv.to_str().unwrap()])), 0);
    }
    for f in ["plant.csv", "realization.json", "approximation.json"] {
        assert_eq!(read(a.path().join(f)), read(b.path().join(f)), "{f} differs");
    }
}

#[test]
fn approximate_reports_order_33_on_default_data() {
    let a = artifacts();
    let summary = json(a.root.join("approximation.json"));
    assert_eq!(summary["order"], 33);
    assert!(summary["max_relative_residual"].as_f64().unwrap() < 1e-6);
    let rlz = json(a.root.join("realization.json"));
    assert_eq!(rlz["order"], 33);
    assert_eq!(rlz["E"].as_array().unwrap().len(), 33);
    assert_eq!(rlz["B"].as_array().unwrap().len(), 33);
    assert_eq!(rlz["C"].as_array().unwrap()[0].as_array().unwrap().len(), 33);
}

#[test]
fn lddc_exports_first_order_controller() {
    let a = artifacts();
    let k = json(a.root.join("controller.json"));
    assert_eq!(k["order"], 1);
    let d = k["D"][0][0].as_f64().unwrap();
    assert!((d - 0.191).abs() < 0.191 * 0.02, "kp = {d}");
    let sweep = read(a.root.join("sweep.csv"));
    assert!(sweep.starts_with("order,error,gamma_inverse,verdict\n"));
    assert_eq!(sweep.lines().count(), 21);
    let summary = json(a.root.join("lddc.json"));
    assert_eq!(summary["exported_order"], 1);
}

#[test]
fn mfsa_with_lddc_controller_is_stable_at_4_6() {
    let a = artifacts();
    let dir = tempfile::tempdir().unwrap();
    let k = a.root.join("controller.json");
    let o = run(dir.path(), &["mfsa", "--plant", "builtin", "--controller", k.to_str().unwrap(), "--tau", "4.6"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = json(dir.path().join("stability.json"));
    assert_eq!(r["verdict"], "stable");
    assert!(r["stab_tag"].as_f64().unwrap() < 1e-10);
}

#[test]
fn mfsa_flags_unstable_plant() {
    let dir = tempfile::tempdir().unwrap();
    // 1/(s - 1)
    let rlz = r#"{"order":1,"E":[[1.0]],"A":[[1.0]],"B":[[1.0]],"C":[[1.0]],"D":[[0.0]]}"#;
    let p = dir.path().join("unstable.json");
    std::fs::write(&p, rlz).unwrap();
    let o = run(dir.path(), &["mfsa", "--plant", p.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = json(dir.path().join("stability.json"));
    assert_eq!(r["verdict"], "unstable");
    assert!((r["stab_tag"].as_f64().unwrap() - 1.0).abs() < 0.01);
}

#[test]
fn synth_writes_gains_and_sensitivities() {
    let a = artifacts();
    let dir = tempfile::tempdir().unwrap();
    let rlz = a.root.join("realization.json");
    let o = run(dir.path(), &["synth", rlz.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let pi = json(dir.path().join("pi.json"));
    assert!(pi["gamma"].as_f64().unwrap() <= pi["start_gamma"].as_f64().unwrap());
    assert_eq!(pi["stable"], true);
    for f in ["sensitivity_model.csv", "sensitivity_oracle.csv"] {
        let csv = read(dir.path().join(f));
        assert!(csv.starts_with("omega_rad_s,s_re,s_im,t_re,t_im\n"));
        assert_eq!(csv.lines().count(), 201);
    }
}

#[test]
fn delay_sweep_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["delay-sweep", "--grid-n", "60", "--tau-min", "0.5", "--tau-max", "1", "--tau-n", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let sweep = read(dir.path().join("sweep.csv"));
    let lines: Vec<&str> = sweep.lines().collect();
    assert_eq!(lines[0], "tau_s,stab_tag,verdict");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].ends_with(",stable"), "{}", lines[1]);
    let nyq = read(dir.path().join("nyquist.csv"));
    assert!(nyq.starts_with("omega_rad_s,re,im,tau_s\n"));
    assert_eq!(nyq.lines().count(), 1 + 2 * (4 * 59 + 1));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases: &[&[&str]] = &[
        &["sample", "--bogus"],
        &["frobnicate"],
        &["approximate", "missing.csv"],
        &["sample", "--grid-n", "1"],
        &["sample", "--wmin", "2", "--wmax", "1"],
        &["sample", "--x-m", "9"],
        &["mfsa", "--epsilon", "-1"],
        &["mfsa", "--svd-tol", "2"],
        &["mfsa", "--controller", "pi:1"],
        &["mfsa", "--tau", "-1", "--controller", "pi:1,1"],
        &["delay-sweep", "--tau-min", "2", "--tau-max", "1"],
    ];
    for args in cases {
        let o = run(dir.path(), args);
        assert_eq!(code(&o), 2, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn domain_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "omega_rad_s,re,im\n1.0,abc,0\n").unwrap();
    let o = run(dir.path(), &["approximate", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 2"));
    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "not json").unwrap();
    assert_eq!(code(&run(dir.path(), &["mfsa", "--plant", junk.to_str().unwrap()])), 1);
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let bad = bin().env("LOEWNER_LAB_THREADS", "zero").arg("--out").arg(dir.path()).arg("sample").output().unwrap();
    assert_eq!(code(&bad), 2);
    let ok = bin().env("LOEWNER_LAB_THREADS", "2").arg("--out").arg(dir.path()).arg("sample").output().unwrap();
    assert_eq!(code(&ok), 0);
}

#[test]
fn help_exits_0() {
    assert_eq!(code(&bin().arg("--help").output().unwrap()), 0);
}
