use std::path::Path;
use std::process::{Command, Output};

fn fpp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fpp"))
        .args(args)
        .env_remove("FPP_THREADS")
        .output()
        .expect("spawn fpp")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_point_mass(out: &Path) -> Output {
    fpp(&[
        "run",
        "--quantity",
        "a0n",
        "--dist",
        "point_mass:c=1",
        "--n",
        "8,16",
        "--replicas",
        "4",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ])
}

#[test]
fn point_mass_run_gives_mean_n() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_point_mass(dir.path());
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["kind"], "ensemble");
    assert_eq!(v["config"]["seed"], 7);
    for e in v["entries"].as_array().unwrap() {
        assert_eq!(e["mean"].as_f64(), e["n"].as_f64());
        assert_eq!(e["N"], 4);
    }
    let csv = std::fs::read_to_string(dir.path().join("ensemble.csv")).unwrap();
    assert!(csv.starts_with("quantity,n,replica,seed,value,path_len,max_edge\n"));
    assert!(dir.path().join("plot.gp").exists());
}

#[test]
fn rerun_is_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let args = |d: &Path| {
        vec![
            "run".to_string(),
            "--quantity".into(),
            "s0n".into(),
            "--dist".into(),
            "exponential:rate=1".into(),
            "--n".into(),
            "8,12".into(),
            "--replicas".into(),
            "16".into(),
            "--seed".into(),
            "11".into(),
            "--out".into(),
            d.to_str().unwrap().into(),
        ]
    };
    let one = Command::new(env!("CARGO_BIN_EXE_fpp")).args(args(a.path())).env("FPP_THREADS", "1").output().unwrap();
    let two = Command::new(env!("CARGO_BIN_EXE_fpp")).args(args(b.path())).env("FPP_THREADS", "3").output().unwrap();
    assert_eq!(code(&one), 0, "{}", stderr(&one));
    assert_eq!(code(&two), 0, "{}", stderr(&two));
    let x = std::fs::read(a.path().join("ensemble.csv")).unwrap();
    let y = std::fs::read(b.path().join("ensemble.csv")).unwrap();
    assert_eq!(x, y);
}

#[test]
fn heavy_tailed_pareto_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let o = fpp(&["run", "--dist", "pareto:alpha=0.9,scale=1", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("alpha"), "{}", stderr(&o));
}

#[test]
fn invalid_values_exit_2() {
    assert_eq!(code(&fpp(&["run", "--epsilon", "4", "--m", "3"])), 2);
    assert_eq!(code(&fpp(&["run", "--delta", "1.5"])), 2);
    assert_eq!(code(&fpp(&["run", "--quantity", "zz"])), 2);
    assert_eq!(code(&fpp(&["run", "--replicas", "1", "--n", "4"])), 2);
    assert_eq!(code(&fpp(&["frobnicate"])), 2);
}

#[test]
fn unknown_suite_exits_2() {
    let o = fpp(&["verify", "lemma4"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn lemma1_on_point_mass_is_all_skip() {
    let o = fpp(&["verify", "lemma1", "--dist", "point_mass:c=1", "--n", "8", "--replicas", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("ALL-SKIP"), "{out}");
    assert!(out.contains("0 pass, 0 fail, 5 skip"), "{out}");
}

#[test]
fn sandwich_suite_passes() {
    let o = fpp(&[
        "verify",
        "sandwich",
        "--n",
        "12",
        "--replicas",
        "20",
        "--box-scale",
        "1",
        "--dist",
        "exponential:rate=1",
    ]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(stdout(&o).contains("20 pass, 0 fail, 0 skip -> PASS"));
}

#[test]
fn capacity_exits_3() {
    let o = fpp(&["run", "--dim", "3", "--n", "400", "--replicas", "2"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}

#[test]
fn config_file_and_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.conf");
    let out = dir.path().join("out");
    std::fs::write(
        &cfg,
        format!(
            "# point mass sweep\nquantity = b0n\ndist = point_mass:c=2\nn = 6\nreplicas = 3\nout = {}\n",
            out.display()
        ),
    )
    .unwrap();
    let o = fpp(&["run", "--config", cfg.to_str().unwrap(), "--n", "5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(v["entries"][0]["n"], 5);
    assert_eq!(v["entries"][0]["mean"], 10.0);

    std::fs::write(&cfg, "colour = blue\n").unwrap();
    let o = fpp(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("colour"));
}

#[test]
fn report_flows() {
    let dir = tempfile::tempdir().unwrap();
    let empty = fpp(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&empty), 2);

    assert_eq!(code(&run_point_mass(dir.path())), 0);
    let o = fpp(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("## Variance scaling"));
    assert!(md.contains("zero variance"));

    std::fs::write(dir.path().join("zz_bad.json"), "[1, 2").unwrap();
    let o = fpp(&["report", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("zz_bad.json"));
}

#[test]
fn verify_and_martingale_feed_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = fpp(&["verify", "lemma5", "--n", "8", "--replicas", "4", "--box-scale", "1", "--out", d]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    let o = fpp(&[
        "martingale",
        "--n",
        "10",
        "--replicas",
        "2",
        "--inner-replicas",
        "3",
        "--box-scale",
        "1",
        "--padding",
        "2",
        "--out",
        d,
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = fpp(&["report", d]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let md = std::fs::read_to_string(dir.path().join("report.md")).unwrap();
    assert!(md.contains("## Martingale differences"));
    assert!(md.contains("| verify_lemma5.json | lemma5 | 8 |"));
}
