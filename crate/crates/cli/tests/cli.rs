use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use squeezelax::figures::{Fig3a, Fig3b};
use squeezelax_core::moments::gardiner_rhs;
use squeezelax_core::{
    evolve, spin_coherent_state, BlochAngles, CollectiveOps, DickeSpace, IntegratorConfig,
    Liouvillian, SpinMoments, SqueezingParams,
};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_squeezelax"));
    c.env_remove("SQUEEZELAX_MAX_DIM");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn run_to(dir: &Path, name: &str, args: &[&str]) -> String {
    let path = dir.join(name);
    let mut full: Vec<&str> = args.to_vec();
    let p = path.to_str().unwrap().to_string();
    full.extend(["--out", &p]);
    let out = run(&full);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    std::fs::read_to_string(path).unwrap()
}

/// Header and numeric rows of an emitted CSV.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

#[test]
fn figure_csvs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cases: [(&str, &[&str]); 4] = [
        ("fig3a", &["fig3a", "--spins", "1,3", "--t-final", "0.5"]),
        ("fig3b", &["fig3b", "--spins", "1,5"]),
        ("fig4a", &["fig4a"]),
        ("fig4b", &["fig4b", "--spins", "1..12"]),
    ];
    for (name, args) in cases {
        let mut a = args.to_vec();
        a.extend(["--jobs", "1"]);
        let first = run_to(dir.path(), &format!("{name}-1.csv"), &a);
        let mut b = args.to_vec();
        b.extend(["--jobs", "4"]);
        let second = run_to(dir.path(), &format!("{name}-2.csv"), &b);
        assert_eq!(first, second, "{name} differs between runs");
        assert!(first.starts_with(&format!("# figure: {name}\n")));
        let side = dir.path().join(format!("{name}-1.csv.meta.json"));
        let meta: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(side).unwrap()).unwrap();
        assert!(meta["runtime_seconds"].as_f64().unwrap() >= 0.0);
        assert_eq!(meta["scenario"]["command"], name);
    }
}

#[test]
fn fig4a_single_spin_matches_gardiner() {
    let out = run(&["fig4a", "--spins", "1", "--theta", "0.55,0.75,0.87,0.99"]);
    assert!(out.status.success());
    let (h, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    let p = SqueezingParams::minimal(0.05, 1.0).unwrap();
    let d = gardiner_rhs(&SpinMoments::from_means(1.0, 1.0, 0.0), &p);
    for r in rows {
        assert!((r[col(&h, "gamma_x")] + d.x).abs() < 1e-12);
        assert!((r[col(&h, "gamma_y")] + d.y).abs() < 1e-12);
    }
}

#[test]
fn fig4_series_are_monotone_in_n() {
    for fig in ["fig4a", "fig4b"] {
        let out = run(&[fig, "--spins", "1..30"]);
        assert!(out.status.success());
        let (h, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
        let th = col(&h, "theta_over_pi");
        let cols: &[&str] = if fig == "fig4a" {
            &["gamma_x", "gamma_y"]
        } else {
            &["dvar_x", "dvar_y"]
        };
        for theta in [0.55, 0.75, 0.87, 0.99] {
            let series: Vec<&Vec<f64>> = rows.iter().filter(|r| r[th] == theta).collect();
            assert_eq!(series.len(), 30);
            for name in cols {
                let c = col(&h, name);
                let diffs: Vec<f64> = series.windows(2).map(|w| w[1][c] - w[0][c]).collect();
                if fig == "fig4a" {
                    assert!(diffs.iter().all(|d| *d > 0.0), "{fig} {name} theta {theta}");
                } else {
                    let up = diffs.iter().all(|d| *d > 0.0);
                    let down = diffs.iter().all(|d| *d < 0.0);
                    assert!(up || down, "{fig} {name} theta {theta}");
                }
            }
        }
    }
}

#[test]
fn fig4b_single_spin_pole_is_stationary() {
    let out = run(&["fig4b", "--spins", "1", "--theta", "1"]);
    let (h, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert!(rows[0][col(&h, "dvar_x")].abs() < 1e-12 && rows[0][col(&h, "dvar_y")].abs() < 1e-12);
    let out = run(&["fig4b", "--spins", "60", "--theta", "0.999"]);
    let (h, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert!(rows[0][col(&h, "dvar_y")] < 0.0 && 0.0 < rows[0][col(&h, "dvar_x")]);
}

#[test]
fn fig3a_arrows_match_oracle_difference() {
    let cfg = Fig3a {
        spins: vec![1],
        guide_theta: vec![],
        ..Fig3a::default()
    };
    let ds = cfg.run().unwrap();
    let dt = 1e-4;
    let space = DickeSpace::new(1).unwrap();
    let ops = CollectiveOps::new(space);
    let l = Liouvillian::collective(&ops, cfg.params);
    for r in ds.filter("panel", 0.0).into_iter().step_by(7) {
        let state = spin_coherent_state(space, BlochAngles::new(r[3] * PI, r[4]).unwrap());
        let traj = evolve(
            &l,
            &state.density_matrix(),
            dt,
            &IntegratorConfig::rk45(1e-13, 1e-15),
        )
        .unwrap();
        let m = traj.spin_moments(&ops).unwrap();
        let last = m.last().unwrap();
        let fd = [
            (last.mean_x - m[0].mean_x) / dt,
            (last.mean_y - m[0].mean_y) / dt,
        ];
        for (a, b) in fd.iter().zip([r[8], r[9]]) {
            if b.abs() > 1e-8 {
                assert!(((a - b) / b).abs() < 1e-3, "{a} vs {b}");
            }
        }
    }
}

#[test]
fn fig3b_single_spin_covariance_follows_means() {
    let ds = Fig3b {
        spins: vec![1],
        ..Fig3b::default()
    }
    .run()
    .unwrap();
    for r in ds.filter("panel", 0.0) {
        let (mx, my, vx, vy, c) = (r[7], r[8], r[9], r[10], r[11]);
        assert!((vx - (1.0 - mx * mx)).abs() < 1e-9);
        assert!((vy - (1.0 - my * my)).abs() < 1e-9);
        assert!((c + mx * my).abs() < 1e-9);
    }
    let pole = Fig3b {
        spins: vec![1],
        theta: vec![1.0],
        phi: vec![0.0],
        ..Fig3b::default()
    }
    .run()
    .unwrap();
    for r in pole.filter("stage", 1.0) {
        if r[0] == 0.0 {
            assert!(((r[12] - r[13]) / r[12]).abs() < 1e-3);
        }
    }
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(run(&["fig4a", "--theta", "1.5"]).status.code(), Some(2));
    assert_eq!(
        run(&["fig4a", "--squeezing-n", "1", "--squeezing-m", "9"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["fig3a", "--theta", "0.3"]).status.code(), Some(2));
    assert_eq!(run(&["fig4b", "--phi", "0,1"]).status.code(), Some(2));
    assert_eq!(run(&["oscillator", "--cutoff", "1"]).status.code(), Some(2));
    assert_eq!(run(&["fig4a", "--bogus"]).status.code(), Some(2));
    let capped = bin()
        .env("SQUEEZELAX_MAX_DIM", "5")
        .args(["fig4b", "--spins", "5"])
        .output()
        .unwrap();
    assert_eq!(capped.status.code(), Some(2));
    let bad = bin()
        .env("SQUEEZELAX_MAX_DIM", "lots")
        .args(["fig4a"])
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn integrator_failure_exits_4() {
    let out = run(&[
        "oscillator",
        "--cutoff",
        "4",
        "--squeezing-n",
        "2",
        "--t-final",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn json_format() {
    let out = run(&["fig4a", "--spins", "1..3", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["figure"], "fig4a");
    assert_eq!(v["rows"].as_array().unwrap().len(), 12);
}

#[test]
fn runs_emit_datasets() {
    let out = run(&["single-spin", "--squeezing-n", "2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let fitted: f64 = text
        .lines()
        .find_map(|l| l.strip_prefix("# fitted_gamma_x: "))
        .unwrap()
        .parse()
        .unwrap();
    let expected = 2.0 + 6f64.sqrt() + 0.5;
    assert!(((fitted - expected) / expected).abs() < 1e-6);

    let out = run(&["steady-state", "--spins", "2", "--squeezing-n", "0.5"]);
    let (h, rows) = parse_csv(&String::from_utf8(out.stdout).unwrap());
    assert!(rows[0][col(&h, "purity")] > 1.0 - 1e-6);

    let out = run(&["oscillator", "--t-final", "2", "--dt", "1"]);
    assert!(out.status.success());
}

#[test]
fn verify_reports_json() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["verify", "--seed", "5", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    assert!(v["checks"].as_array().unwrap().len() >= 9);
    assert!(v["max_positivity_violation"].as_f64().unwrap() < 1e-7);
}
