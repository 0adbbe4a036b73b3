use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn relaynet(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_relaynet"))
        .args(args)
        .current_dir(dir)
        .env_remove("RELAYNET_WORKERS")
        .output()
        .expect("binary runs")
}

const SMALL: &str = r#"
[[experiment]]
name = "small"
schemes = ["NC", "RC", "IRC"]
objectives = ["simulated", "analytic"]
trials = 200
seed = 5

[experiment.sweep]
axis = "p"
values = [0.05, 0.1]

[experiment.fixed]
alpha = 4.0
R = 2.0
M = 2
"#;

#[test]
fn out_of_range_p_is_a_validation_error_with_a_line() {
    let dir = tempfile::tempdir().unwrap();
    let spec = SMALL.replace("values = [0.05, 0.1]", "values = [0.05, 1.5]");
    fs::write(dir.path().join("bad.toml"), spec).unwrap();
    let out = relaynet(&["run", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 11"), "{err}");
    assert!(err.contains("1.5"), "{err}");
    assert!(!dir.path().join("results").exists());
}

#[test]
fn unknown_subcommand_and_missing_file_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(relaynet(&["frobnicate"], dir.path()).status.code(), Some(1));
    assert_eq!(relaynet(&["run", "absent.toml"], dir.path()).status.code(), Some(1));
    assert_eq!(relaynet(&["suite", "fig9"], dir.path()).status.code(), Some(1));
}

#[test]
fn runs_are_byte_identical_for_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    let mut outputs = Vec::new();
    for (out_dir, workers) in [("a", "1"), ("b", "3")] {
        let out = relaynet(
            &["run", "small.toml", "--out-dir", out_dir, "--workers", workers],
            dir.path(),
        );
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let summary = String::from_utf8_lossy(&out.stdout).into_owned();
        assert!(summary.contains("IRC: max"), "{summary}");
        outputs.push(summary);
    }
    assert_eq!(outputs[0], outputs[1]);
    for scheme in ["NC", "RC", "IRC"] {
        for objective in ["simulated", "analytic"] {
            let name = format!("small_{scheme}_{objective}.csv");
            let a = fs::read(dir.path().join("a").join(&name)).unwrap();
            let b = fs::read(dir.path().join("b").join(&name)).unwrap();
            assert_eq!(a, b, "{name}");
        }
    }
    let nc = fs::read_to_string(dir.path().join("a/small_NC_simulated.csv")).unwrap();
    // NC rows report M = 1 whatever the fixed section says.
    assert!(nc.lines().skip(1).all(|l| l.split(',').nth(12) == Some("1")));
}

#[test]
fn seed_override_changes_simulated_output_only() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), SMALL).unwrap();
    for (out_dir, seed) in [("a", "1"), ("b", "2")] {
        let out = relaynet(&["run", "small.toml", "--out-dir", out_dir, "--seed", seed], dir.path());
        assert!(out.status.success());
    }
    let read = |d: &str, f: &str| fs::read_to_string(dir.path().join(d).join(f)).unwrap();
    assert_ne!(
        read("a", "small_IRC_simulated.csv"),
        read("b", "small_IRC_simulated.csv")
    );
    let strip_seed = |s: String| {
        s.lines()
            .map(|l| {
                l.split(',')
                    .enumerate()
                    .filter(|(i, _)| *i != 7)
                    .map(|(_, f)| f.to_owned())
                    .collect::<Vec<_>>()
                    .join(",")
            })
            .collect::<Vec<_>>()
    };
    assert_eq!(
        strip_seed(read("a", "small_IRC_analytic.csv")),
        strip_seed(read("b", "small_IRC_analytic.csv"))
    );
}

#[test]
fn analytic_table_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = relaynet(&["analytic-table", "--M", "2", "--p", "0.3", "--R", "3"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "m,d_tilde,cell_area,c");
    assert_eq!(lines.len(), 3);
    let area: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((area - 0.8020655).abs() < 1e-6, "{area}");
    let bad = relaynet(&["analytic-table", "--scheme", "NC", "--M", "2"], dir.path());
    assert_eq!(bad.status.code(), Some(1));
}
