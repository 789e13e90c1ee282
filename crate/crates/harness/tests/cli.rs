use std::path::Path;
use std::process::{Command, Output};

const HEADER: &str = "method,outer_iter,total_inner_iters,prox_evals,oracle_calls,elapsed_seconds,gap";

fn pdbundle(args: &[&str], out_dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pdbundle"))
        .args(args)
        .env("PDBUNDLE_OUT_DIR", out_dir)
        .output()
        .expect("binary runs")
}

fn small_run<'a>(method: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["run", "--method", method, "--m", "12", "--n", "10", "--density", "0.5", "--eps-bar", "1e-3"];
    v.extend_from_slice(extra);
    v
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_header_into_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdbundle(&small_run("pb-spp-2cut", &[]), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("pb-spp-2cut.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(HEADER));
    let first: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&first[..5], ["pb-spp-2cut", "0", "0", "0", "0"]);
    let last: Vec<&str> = text.lines().last().unwrap().split(',').collect();
    assert!(last[6].parse::<f64>().unwrap() <= 1e-3);
}

#[test]
fn runs_are_deterministic_apart_from_timing() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["cs-spp", "pb-spp-multicut-5", "pdpb", "pds", "cg-adaptive"] {
        let mut traces = Vec::new();
        for rep in ["a.csv", "b.csv"] {
            let path = dir.path().join(rep);
            let o = pdbundle(&small_run(method, &["--max-iters", "3000", "-o", path.to_str().unwrap()]), dir.path());
            assert!(matches!(o.status.code(), Some(0 | 3)), "{method}: {}", stderr(&o));
            let text = std::fs::read_to_string(&path).unwrap();
            let stripped: Vec<String> = text
                .lines()
                .map(|l| {
                    let mut f: Vec<&str> = l.split(',').collect();
                    f.remove(5);
                    f.join(",")
                })
                .collect();
            traces.push(stripped);
        }
        assert!(traces[0].len() > 1, "{method}");
        assert_eq!(traces[0], traces[1], "{method}");
    }
}

#[test]
fn zero_budget_gives_initial_row_and_budget_code() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["cs-spp", "pb-spp-1cut", "pdpb", "pds", "cg-open-loop"] {
        let o = pdbundle(&small_run(method, &["--max-iters", "0"]), dir.path());
        assert_eq!(o.status.code(), Some(3), "{method}: {}", stderr(&o));
        let text = std::fs::read_to_string(dir.path().join(format!("{method}.csv"))).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 2, "{method}");
        assert!(lines[1].starts_with(&format!("{method},0,0,0,0,")), "{method}: {}", lines[1]);
    }
}

#[test]
fn malformed_instance_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "this is not a game\n").unwrap();
    let o = pdbundle(&["run", "--method", "pds", "--instance", bad.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("instance"), "{}", stderr(&o));
    assert!(!dir.path().join("pds.csv").exists());
}

#[test]
fn generated_instance_file_round_trips_through_run() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("game.txt");
    let o = pdbundle(&["generate", "--m", "12", "--n", "10", "--density", "0.5", "-o", inst.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let from_file = dir.path().join("file.csv");
    let generated = dir.path().join("gen.csv");
    let base = ["run", "--method", "pb-spp-1cut", "--eps-bar", "1e-3"];
    let a = pdbundle(&[&base[..], &["--instance", inst.to_str().unwrap(), "-o", from_file.to_str().unwrap()]].concat(), dir.path());
    let b = pdbundle(
        &[&base[..], &["--m", "12", "--n", "10", "--density", "0.5", "-o", generated.to_str().unwrap()]].concat(),
        dir.path(),
    );
    assert_eq!((a.status.code(), b.status.code()), (Some(0), Some(0)));
    let gaps = |p: &Path| -> Vec<String> {
        std::fs::read_to_string(p).unwrap().lines().map(|l| l.rsplit(',').next().unwrap().to_string()).collect()
    };
    assert_eq!(gaps(&from_file), gaps(&generated));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# small game\nmethod = pds\nm = 6\nn = 6\ndensity = 0.5\nmax_iters = 50\nlog_every = 10\n").unwrap();
    let o = pdbundle(&["run", "--config", cfg.to_str().unwrap(), "--log-every", "25"], dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("pds.csv")).unwrap();
    let iters: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap()).collect();
    assert_eq!(iters, ["0", "25", "50"]);

    std::fs::write(&cfg, "method = pds\nm: 6\n").unwrap();
    let o = pdbundle(&["run", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"), "{}", stderr(&o));
}

#[test]
fn report_rejects_missing_column() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    std::fs::write(&p, "method,outer_iter,total_inner_iters,prox_evals,oracle_calls,elapsed_seconds\npds,0,0,0,0,0\n").unwrap();
    let o = pdbundle(&["report", p.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("missing column `gap`"), "{}", stderr(&o));
}

#[test]
fn report_of_single_run_passes_series_through() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdbundle(&small_run("cg-line-search", &["--max-iters", "200"]), dir.path());
    assert!(matches!(o.status.code(), Some(0 | 3)), "{}", stderr(&o));
    let trace = dir.path().join("cg-line-search.csv");
    let out = dir.path().join("plots");
    let o = pdbundle(&["report", trace.to_str().unwrap(), "--out-dir", out.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(std::fs::read(&trace).unwrap(), std::fs::read(out.join("series.csv")).unwrap());
    for view in ["gap_vs_time.csv", "gap_vs_prox_evals.csv", "gap_vs_iterations.csv"] {
        for line in std::fs::read_to_string(out.join(view)).unwrap().lines().skip(1) {
            assert!(line.rsplit(',').next().unwrap().parse::<f64>().unwrap() >= 1e-16);
        }
    }
    assert!(String::from_utf8_lossy(&o.stdout).contains("cg-line-search"));
}

#[test]
fn check_with_no_seeds_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdbundle(&["check", "--suite", "duality", "--seeds", ""], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["passed"], true);
    assert_eq!(report["suite"], "duality");
}

#[test]
fn check_exact_solver_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdbundle(&["check", "--suite", "exact-solver", "--seeds", "0..3", "--max-dim", "8"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn unknown_suite_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = pdbundle(&["check", "--suite", "speed"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown suite"), "{}", stderr(&o));
}
