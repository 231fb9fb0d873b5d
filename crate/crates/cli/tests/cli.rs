use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("eulerprod-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(dir: &PathBuf, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eulerprod"))
        .current_dir(dir)
        .args(args)
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn demo_run_writes_all_files() {
    let dir = scratch("demo");
    let o = run(&dir, &["approximate", "-o", "run"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["manifest.txt", "phases.txt", "trace.txt", "heatmap.txt", "report.txt"] {
        assert!(dir.join("run").join(f).exists(), "{f}");
    }
    let report = fs::read_to_string(dir.join("run/report.txt")).unwrap();
    assert!(report.contains("rng = ChaCha8"));
    let err: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("max_error = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(err <= 0.1);
}

#[test]
fn same_seed_same_phase_table() {
    let dir = scratch("determinism");
    assert_eq!(code(&run(&dir, &["approximate", "-o", "a", "--p-max", "30000"])), 0);
    assert_eq!(code(&run(&dir, &["approximate", "-o", "b", "--p-max", "30000"])), 0);
    assert_eq!(
        fs::read(dir.join("a/phases.txt")).unwrap(),
        fs::read(dir.join("b/phases.txt")).unwrap()
    );
}

#[test]
fn invalid_radius_is_rejected_by_name() {
    let dir = scratch("invalid");
    fs::write(dir.join("bad.cfg"), "# too wide\nsigma0 = 0.75\nr = 0.3\n").unwrap();
    let o = run(&dir, &["approximate", "-c", "bad.cfg"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("r < r0"));
    let o = run(&dir, &["approximate", "--set", "lambda=0.2"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("2 lambda"));
}

#[test]
fn unreachable_tolerance_reports_stall() {
    let dir = scratch("stall");
    let o = run(
        &dir,
        &[
            "approximate",
            "-o",
            "s",
            "--eps",
            "1e-9",
            "--p-max",
            "2000",
            "--max-steps",
            "5",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(dir.join("s/report.txt").exists());
}

#[test]
fn hypothesis_exit_codes() {
    let dir = scratch("hyp");
    assert_eq!(code(&run(&dir, &["check-hypothesis", "-o", "h"])), 4);
    assert_eq!(
        code(&run(
            &dir,
            &[
                "check-hypothesis",
                "-o",
                "h2",
                "--h-list",
                "1e19",
                "--hyp-lambda",
                "0.2"
            ]
        )),
        0
    );
}

#[test]
fn replay_reproduces_outputs() {
    let dir = scratch("replay");
    assert_eq!(
        code(&run(
            &dir,
            &[
                "approximate",
                "-o",
                "r",
                "--p-max",
                "20000",
                "--phase-grid",
                "continuous"
            ]
        )),
        0
    );
    let o = run(&dir, &["report", "r", "--verify"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stdout));
    assert!(String::from_utf8_lossy(&o.stdout).contains("verify phases.txt: identical"));
}

#[test]
fn refine_and_torus_and_zero_scan() {
    let dir = scratch("misc");
    let o = run(&dir, &["refine", "-o", "f", "--p-max", "3000", "--stages", "2"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(dir.join("f/trace.txt")).unwrap().lines().count() == 3);
    let o = run(
        &dir,
        &["torus", "-o", "t", "--torus-samples", "50000", "--torus-n", "3"],
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("pass"));
    let o = run(
        &dir,
        &["zero-scan", "-o", "z", "--zero-primes", "50", "--zero-radius", "0.1"],
    );
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("zeros = 0"));
}

#[test]
fn custom_spec_and_product_target() {
    let dir = scratch("custom");
    fs::write(
        dir.join("f.spec"),
        "# f_p(z) = 1 + z/2 for a few primes\nc_eps 1 1\n2 1 0.5 0\n3 1 0.5 0\n5 1 0.5 0\n7 1 0.5 0\n",
    )
    .unwrap();
    fs::write(dir.join("target.phases"), "t0 0\n2 0\n3 0\n5 0.5\n").unwrap();
    let o = run(
        &dir,
        &[
            "approximate",
            "-o",
            "c",
            "--spec",
            "custom:f.spec",
            "--target",
            "product:target.phases",
            "--y",
            "3",
            "--p-max",
            "7",
        ],
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
}
