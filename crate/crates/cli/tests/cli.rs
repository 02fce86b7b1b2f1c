use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn netbandit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netbandit"))
        .args(args)
        .env_remove("NETBANDIT_OUTPUT_DIR")
        .output()
        .expect("spawn netbandit")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Every file under `dir` except timing, as (relative path, bytes).
fn snapshot(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else if p.file_name().unwrap() != "timing.csv" {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn runs_are_byte_identical_across_thread_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let common = ["run", "--rounds", "150", "--seeds", "1,2,3", "--alpha", "0.1,0.3", "--graph-noise", "0,50", "--dim", "4"];
    let oa = netbandit(&[&common[..], &["--jobs", "1", "--out", s(&a)]].concat());
    assert_eq!(code(&oa), 0, "{}", String::from_utf8_lossy(&oa.stderr));
    let ob = netbandit(&[&common[..], &["--jobs", "4", "--out", s(&b)]].concat());
    assert_eq!(code(&ob), 0);
    let (sa, sb) = (snapshot(&a), snapshot(&b));
    // 2 graph noises × 3 algorithms × 2 alphas × 3 seeds, plus config, summary, best.
    assert_eq!(sa.len(), 36 + 3);
    // The echoed config differs only in `jobs` and the output directory.
    let differing: Vec<_> = sa.iter().zip(&sb).filter(|(x, y)| x != y).map(|(x, _)| x.0.clone()).collect();
    assert_eq!(differing, [PathBuf::from("config.toml")]);
}

#[test]
fn output_dir_comes_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("env");
    let o = Command::new(env!("CARGO_BIN_EXE_netbandit"))
        .args(["run", "--rounds", "20", "--alpha", "0.3", "--algorithms", "goblin"])
        .env("NETBANDIT_OUTPUT_DIR", &out)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(out.join("gn_0/pn_0/goblin/alpha_0.3/seed_1.csv").is_file());
}

#[test]
fn config_file_is_read_and_echoed() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("exp.toml");
    std::fs::write(
        &cfg,
        "[dataset]\nclique_size = 5\ndim = 4\n\n[policy]\nalpha = [0.2]\n\n[run]\nalgorithms = [\"goblin\", \"goblin-macro-2\"]\nrounds = 30\nseeds = [7]\n",
    )
    .unwrap();
    let out = tmp.path().join("r");
    let o = netbandit(&["run", "--config", s(&cfg), "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("gn_0/pn_0/goblin-macro-2/alpha_0.2/seed_7.csv").is_file());
    let echoed = std::fs::read_to_string(out.join("config.toml")).unwrap();
    assert!(echoed.contains("clique_size = 5"));

    std::fs::write(&cfg, "[run]\nroundz = 3\n").unwrap();
    assert_eq!(code(&netbandit(&["run", "--config", s(&cfg), "--out", s(&out)])), 1);
}

#[test]
fn invalid_arguments_exit_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&netbandit(&["run", "--rounds", "0", "--out", s(&out)])), 1);
    assert_eq!(code(&netbandit(&["run", "--algorithms", "nope", "--out", s(&out)])), 1);
    assert_eq!(code(&netbandit(&["frobnicate"])), 1);
    assert_eq!(code(&netbandit(&["prepare", "--input", "/definitely/missing", "--out", s(&out)])), 1);
    assert_eq!(code(&netbandit(&["--help"])), 0);
}

#[test]
fn verify_passes_and_detects_injected_fault() {
    let ok = netbandit(&["verify"]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stdout));
    let stdout = String::from_utf8_lossy(&ok.stdout);
    assert!(stdout.lines().all(|l| l.starts_with("PASS")), "{stdout}");

    let bad = netbandit(&["verify", "--inject-fault"]);
    assert_eq!(code(&bad), 3);
    let stdout = String::from_utf8_lossy(&bad.stdout);
    assert!(stdout.contains("FAIL lifted identities"), "{stdout}");
    assert!(stdout.contains("(a)"));
}

#[test]
fn prepare_hits_cache_and_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let args = |out: &Path| vec!["prepare".to_owned(), "--fixture".into(), "--fixture-users".into(), "30".into(), "--out".into(), s(out).into()];
    let run = |out: &Path| {
        let v = args(out);
        netbandit(&v.iter().map(String::as_str).collect::<Vec<_>>())
    };
    let first = run(&a);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert!(String::from_utf8_lossy(&first.stdout).contains("kept_nodes\t30"));
    let second = run(&a);
    assert_eq!(code(&second), 0);
    assert!(String::from_utf8_lossy(&second.stdout).starts_with("cache hit"));
    assert_eq!(code(&run(&b)), 0);
    assert_eq!(snapshot(&a), snapshot(&b));

    // A different option invalidates the cache.
    let v = [args(&a), vec!["--pca-dim".into(), "5".into()]].concat();
    let third = netbandit(&v.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(!String::from_utf8_lossy(&third.stdout).starts_with("cache hit"));
}

#[test]
fn prepared_data_runs_and_clusters() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    assert_eq!(code(&netbandit(&["prepare", "--fixture", "--fixture-users", "30", "--out", s(&data)])), 0);
    let out = tmp.path().join("r");
    let o = netbandit(&[
        "run", "--prepared", s(&data), "--rounds", "40", "--alpha", "0.3", "--algorithms", "goblin,goblin-block-3", "--out", s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    // No ground truth on real data: regret and bound columns stay empty.
    assert!(summary.lines().nth(1).unwrap().ends_with(",,"));

    let part = tmp.path().join("part.tsv");
    let c = netbandit(&["cluster", "--prepared", s(&data), "--clusters", "3", "--out", s(&part)]);
    assert_eq!(code(&c), 0);
    assert!(std::fs::read_to_string(&part).unwrap().lines().count() >= 30);
}

#[test]
fn report_aggregates_and_rejects_empty_input() {
    let tmp = tempfile::tempdir().unwrap();
    let empty = tmp.path().join("empty");
    std::fs::create_dir(&empty).unwrap();
    assert_eq!(code(&netbandit(&["report", "--results", s(&empty)])), 1);

    // Two copies of the same run: the group has two seeds' worth of files
    // with identical curves, so stderr is exactly zero.
    let res = tmp.path().join("res");
    for copy in ["1", "2"] {
        let o = netbandit(&["run", "--rounds", "60", "--seeds", "4", "--alpha", "0.3", "--algorithms", "goblin", "--out", s(&res.join(copy))]);
        assert_eq!(code(&o), 0);
    }
    let o = netbandit(&["report", "--results", s(&res)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let report = res.join("report");
    for f in ["curves.csv", "final.csv", "grid.csv", "cell_gn_0_pn_0.svg"] {
        assert!(report.join(f).is_file(), "{f} missing");
    }
    let finals = std::fs::read_to_string(report.join("final.csv")).unwrap();
    let row: Vec<&str> = finals.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[4], "2");
    assert_eq!(row[6], "0");
    assert_eq!(row[7], "1");

    // Rerunning the report skips its own output directory.
    let again = netbandit(&["report", "--results", s(&res)]);
    assert!(String::from_utf8_lossy(&again.stdout).starts_with("2 runs"));
}

#[test]
fn guide_config_example_parses() {
    let guide = include_str!("../../../book/src/cli.md");
    let start = guide.find("```toml\n").expect("toml block") + "```toml\n".len();
    let body = &guide[start..start + guide[start..].find("```").unwrap()];
    let c = netbandit_cli::config::ExperimentConfig::from_toml(body).unwrap();
    c.validate().unwrap();
    assert_eq!(c.dataset.graph_noise, [0.0, 100.0, 500.0]);
    assert_eq!(c.run.seeds.len(), 10);
}
