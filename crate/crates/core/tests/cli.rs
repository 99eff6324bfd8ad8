use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_nonexpansive");

const XY: &str = "[problem]\na = 0\nb = 1\nkernel = x*y\nf = x\n";

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let path = dir.join("run.ini");
    std::fs::write(&path, config).unwrap();
    Command::new(BIN)
        .args(args)
        .arg("--config")
        .arg(&path)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn keyvalue(o: &Output) -> Vec<(String, String)> {
    String::from_utf8(o.stdout.clone())
        .unwrap()
        .lines()
        .map(|l| {
            let (k, v) = l.split_once(" = ").expect("key = value line");
            (k.to_string(), v.to_string())
        })
        .collect()
}

fn lookup<'a>(kv: &'a [(String, String)], key: &str) -> &'a str {
    &kv.iter().find(|(k, _)| k == key).unwrap_or_else(|| panic!("missing {key}")).1
}

#[test]
fn check_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(dir.path(), &format!("{XY}lambda = 1\n"), &["check", "--format", "keyvalue"]);
    assert_eq!(code(&ok), 0);
    let kv = keyvalue(&ok);
    assert_eq!(lookup(&kv, "conditions.l2_ok"), "true");
    assert_eq!(lookup(&kv, "conditions.banach_ok"), "false");
    let r: f64 = lookup(&kv, "conditions.r_min").parse().unwrap();
    assert!((r - 3f64.sqrt() / 2.0).abs() < 1e-4);

    let violated = run(dir.path(), &format!("{XY}lambda = 4\n"), &["check"]);
    assert_eq!(code(&violated), 2);

    let missing = run(dir.path(), XY, &["check"]);
    assert_eq!(code(&missing), 4);
    assert!(String::from_utf8_lossy(&missing.stderr).contains("problem.lambda"));
}

#[test]
fn solve_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(dir.path(), &format!("{XY}lambda = 1\n"), &["solve", "--format", "keyvalue"]);
    assert_eq!(code(&ok), 0);
    let kv = keyvalue(&ok);
    let node = |i: usize, c: &str| -> f64 { lookup(&kv, &format!("solution.{c}.{i}")).parse().unwrap() };
    for i in 0..64 {
        assert!((node(i, "u") - 1.5 * node(i, "x")).abs() < 1e-8);
    }

    let zero = "[problem]\na = 0\nb = 1\nlambda = 1\nkernel = 1\nf = 0\n[solver]\nmethod = km\n";
    assert_eq!(code(&run(dir.path(), zero, &["solve"])), 4);
    let with_radius = format!("{zero}radius = 2\ninitial = x\ntol = 1e-8\n");
    assert_eq!(code(&run(dir.path(), &with_radius, &["solve"])), 0);

    assert_eq!(code(&run(dir.path(), &format!("{XY}lambda = 4\n"), &["solve"])), 2);
    let capped = format!("{XY}lambda = 1\n[solver]\nmax_iters = 3\n");
    assert_eq!(code(&run(dir.path(), &capped, &["solve"])), 3);
    assert_eq!(code(&run(dir.path(), "[problem\n", &["solve"])), 4);
}

#[test]
fn override_flag_attempts_solve() {
    let dir = tempfile::tempdir().unwrap();
    // Neither condition holds; the solve runs anyway and reports its outcome.
    let cfg = format!("{XY}lambda = 4\n[solver]\nmethod = km\nradius = 10\nmax_iters = 50\n");
    let o = run(dir.path(), &cfg, &["solve", "--override-conditions", "--format", "keyvalue"]);
    assert!(matches!(code(&o), 0 | 3), "unexpected exit {}", code(&o));
    assert_eq!(lookup(&keyvalue(&o), "method"), "km");
}

#[test]
fn scenarios_through_solve_vi_and_kkm() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), "[problem]\nscenario = rotation\n", &["solve", "--format", "keyvalue"]);
    assert_eq!(code(&o), 0);
    let kv = keyvalue(&o);
    for key in ["solution.x.0", "solution.x.1"] {
        assert!(lookup(&kv, key).parse::<f64>().unwrap().abs() < 1e-6);
    }
    let o = run(dir.path(), "[problem]\nscenario = identity\n", &["vi"]);
    assert_eq!(code(&o), 0);
    let o = run(dir.path(), "[problem]\nscenario = threshold-negative\n", &["kkm"]);
    assert_eq!(code(&o), 2);
    let o = run(dir.path(), "[problem]\nscenario = p-mapping-rotation\n[grid]\nm = 20\n[solver]\ntol = 1e-8\n", &["kkm"]);
    assert_eq!(code(&o), 0);
    let o = run(dir.path(), "[problem]\nscenario = unknown\n", &["kkm"]);
    assert_eq!(code(&o), 4);
}

#[test]
fn keyvalue_is_deterministic_and_finite() {
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (format!("{XY}lambda = 1\n"), "solve"),
        (format!("{XY}lambda = 0.5\n[grid]\nrule = trapezoid\nn = 17\n"), "check"),
        ("[problem]\nscenario = rotation\nangle = 0.7\n".to_string(), "vi"),
        ("[problem]\nscenario = canonical\n".to_string(), "kkm"),
    ];
    for (cfg, cmd) in &configs {
        let a = run(dir.path(), cfg, &[cmd, "--seed", "11", "--format", "keyvalue"]);
        let b = run(dir.path(), cfg, &[cmd, "--seed", "11", "--format", "keyvalue"]);
        assert_eq!(a.stdout, b.stdout, "{cmd} output differs between runs");
        for (k, v) in keyvalue(&a) {
            let numeric = v.starts_with(|c: char| c.is_ascii_digit() || c == '-') && !k.ends_with(".subset");
            if numeric {
                let x: f64 = v.parse().unwrap_or_else(|_| panic!("{k} = {v} is not a real"));
                assert!(x.is_finite(), "{k} = {v}");
            }
        }
    }
}

#[test]
fn output_flag_and_config_report_path() {
    let dir = tempfile::tempdir().unwrap();
    let target = dir.path().join("flag.txt");
    let o = run(
        dir.path(),
        &format!("{XY}lambda = 1\n"),
        &["check", "--format", "keyvalue", "--output", target.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());
    assert!(std::fs::read_to_string(&target).unwrap().contains("conditions.l2_ok = true"));

    let cfg = format!("{XY}lambda = 1\n[output]\nreport = from-config.txt\nformat = keyvalue\n");
    assert_eq!(code(&run(dir.path(), &cfg, &["check"])), 0);
    assert!(dir.path().join("from-config.txt").exists());
}

#[test]
fn usage_errors_exit_4() {
    let o = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(code(&o), 4);
    let o = Command::new(BIN).arg("check").output().unwrap();
    assert_eq!(code(&o), 4);
    let o = Command::new(BIN).args(["vi", "--format", "yaml"]).output().unwrap();
    assert_eq!(code(&o), 4);
}

#[test]
fn bundled_configs_run() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    for (file, cmd) in [("weakened.ini", "solve"), ("boundary.ini", "solve"), ("rotation-vi.ini", "vi")] {
        let o = Command::new(BIN).args([cmd, "--config"]).arg(dir.join(file)).output().unwrap();
        assert_eq!(code(&o), 0, "{file}: {}", String::from_utf8_lossy(&o.stderr));
    }
}
