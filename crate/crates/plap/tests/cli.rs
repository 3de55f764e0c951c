use std::path::{Path, PathBuf};
use std::process::Command;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
    dir: tempfile::TempDir,
}

impl Run {
    fn file(&self, name: &str) -> String {
        std::fs::read_to_string(self.dir.path().join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
    }

    fn summary_value(&self, key: &str) -> String {
        let summary = self.file("summary.txt");
        summary
            .lines()
            .find_map(|l| l.strip_prefix(&format!("{key} = ")))
            .unwrap_or_else(|| panic!("no `{key}` in summary:\n{summary}"))
            .to_string()
    }
}

fn plap(command: &str, config: &Path, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_plap"))
        .args([command, "--config"])
        .arg(config)
        .arg("--out")
        .arg(dir.path())
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
        dir,
    }
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn ko_check_reports_closed_form() {
    let run = plap("ko-check", &configs().join("ko_check.toml"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.summary_value("converges"), "true");
    let total: f64 = run.summary_value("total").parse().unwrap();
    assert!((total - 2.0 * 3f64.sqrt()).abs() < 0.01 * 2.0 * 3f64.sqrt());
    assert!(run.stdout.contains("converges"));
}

#[test]
fn ko_check_divergent_is_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "k.toml", "p = 2.0\n[nonlinearity]\nspec = \"power(1, 1)\"\n");
    let run = plap("ko-check", &cfg, &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert_eq!(run.summary_value("converges"), "false");
}

#[test]
fn solve_linear_matches_cosh() {
    let run = plap("solve", &configs().join("solve_linear.toml"), &["--quiet"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.stdout.is_empty());
    let csv = run.file("solution_1.csv");
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("node_index,x,dist_boundary,value"));
    let mut worst = 0f64;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let exact = (cols[1] - 0.5).cosh() / 0.5f64.cosh();
        worst = worst.max((cols[3] - exact).abs());
    }
    assert!(worst <= 1e-4, "max error {worst}");
    let manifest = run.file("manifest.txt");
    for name in ["config.toml", "energy_trace.csv", "solution_1.csv", "summary.txt"] {
        assert!(manifest.contains(name), "{manifest}");
    }
}

#[test]
fn blowup_three_levels_tight_stall_is_status_two() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("blowup_p2.toml"))
        .unwrap()
        .replace("max_levels = 8", "max_levels = 3")
        .replace("stall_tol = 1e-6", "stall_tol = 1e-14");
    let cfg = write_config(tmp.path(), "b.toml", &text);
    let run = plap("blowup", &cfg, &[]);
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert_eq!(run.summary_value("stabilized"), "false");
    assert_eq!(run.summary_value("levels"), "3");
    assert_eq!(run.summary_value("monotone"), "true");
    let summary = run.file("escalation_summary.csv");
    assert!(summary.starts_with("level,boundary_value,core_delta,residual_sup,converged,A_1,beta_1,ring_min_1\n"));
    assert_eq!(summary.lines().count(), 4);
    for k in 1..=3 {
        run.file(&format!("level_{k}_u_1.csv"));
    }
}

#[test]
fn two_levels_rejected_with_status_one() {
    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("blowup_p2.toml"))
        .unwrap()
        .replace("max_levels = 8", "max_levels = 2");
    let cfg = write_config(tmp.path(), "b.toml", &text);
    let run = plap("blowup", &cfg, &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("schedule.max_levels"), "{}", run.stderr);
    assert!(!run.dir.path().join("manifest.txt").exists());
}

#[test]
fn load_errors_are_status_one() {
    let run = plap("solve", Path::new("/nonexistent/plap.toml"), &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("cannot read"), "{}", run.stderr);

    let tmp = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(configs().join("solve_linear.toml"))
        .unwrap()
        .replace("[boundary]", "[solver]\ntolerence = 1e-9\n\n[boundary]");
    let cfg = write_config(tmp.path(), "s.toml", &text);
    let run = plap("solve", &cfg, &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("tolerence"), "{}", run.stderr);
    assert!(run.stderr.contains("line 16"), "{}", run.stderr);

    let text = std::fs::read_to_string(configs().join("blowup_p2.toml"))
        .unwrap()
        .replace("power(1, 3)", "power(1, 1)");
    let cfg = write_config(tmp.path(), "b.toml", &text);
    let run = plap("blowup", &cfg, &[]);
    assert_eq!(run.code, 1);
    assert!(run.stderr.contains("Keller-Osserman"), "{}", run.stderr);
}

#[test]
fn mixed_benchmark_holds_fixed_component() {
    let run = plap("mixed", &configs().join("mixed.toml"), &[]);
    // u1 also grows in the core for this coupling, so the run cannot stabilize.
    assert_eq!(run.code, 2, "{}", run.stderr);
    assert_eq!(run.summary_value("excess_ok"), "true");
    let dev: f64 = run.summary_value("ring_deviation").parse().unwrap();
    assert!(dev <= 1e-3);
    assert_eq!(run.summary_value("monotone"), "true");
}

#[test]
fn entire_closed_form_is_status_zero() {
    let run = plap("entire", &configs().join("entire.toml"), &[]);
    assert_eq!(run.code, 0, "{}{}", run.stdout, run.stderr);
    assert_eq!(run.summary_value("lower_bound_ok"), "true");
    assert_eq!(run.summary_value("upper_bound_ok"), "true");
    let summary = run.file("exhaustion_summary.csv");
    assert_eq!(summary.lines().count(), 4);
    let ball = run.file("ball_3.csv");
    assert!(ball.starts_with("r,z,w,u_1\n"));
    for line in ball.lines().skip(1) {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let r = cols[0];
        assert!((cols[1] - 1.0 / (1.0 + r * r).sqrt()).abs() < 1e-4);
        assert!((cols[2] - (1.0 + r * r).sqrt()).abs() < 1e-4);
        assert!(cols[3] >= cols[2] - 1e-7);
    }
}

#[test]
fn verify_checks_pass() {
    let run = plap("verify", &configs().join("verify.toml"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(run.summary_value("ordered_1"), "true");
    assert_eq!(run.summary_value("passed"), "true");
}

#[test]
fn reruns_reproduce_manifest() {
    for name in ["solve_coupled.toml", "blowup_p2.toml"] {
        let cfg = configs().join(name);
        let command = if name.starts_with("solve") { "solve" } else { "blowup" };
        let a = plap(command, &cfg, &[]);
        let b = plap(command, &cfg, &[]);
        assert_eq!(a.code, 0, "{}", a.stderr);
        assert_eq!(a.file("manifest.txt"), b.file("manifest.txt"));
    }
}

#[test]
fn output_dir_from_config_when_flag_absent() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("from-config");
    let text = format!(
        "output_dir = {:?}\n{}",
        out.to_str().unwrap(),
        std::fs::read_to_string(configs().join("ko_check.toml")).unwrap()
    );
    let cfg = write_config(tmp.path(), "k.toml", &text);
    let status = Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(["ko-check", "--quiet", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(out.join("manifest.txt").exists());
}
