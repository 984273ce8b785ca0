use std::process::{Command, Output};

use tempfile::TempDir;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_amgr-anneal")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn p(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_string_lossy().into_owned()
}

fn json(path: &str) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn generate_writes_matrix_market() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "a.mtx");
    let o = run(&["generate", "--problem", "fd5", "--n", "32", "-o", &out]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("%%MatrixMarket matrix coordinate real"));
    let size = text.lines().find(|l| !l.starts_with('%')).unwrap();
    assert!(size.starts_with("1024 1024 "), "{size}");
}

#[test]
fn generated_matrix_reads_back_as_problem() {
    let dir = TempDir::new().unwrap();
    let mtx = p(&dir, "a.mtx");
    assert_eq!(code(&run(&["generate", "--problem", "fd5", "--n", "16", "-o", &mtx])), 0);
    let o = run(&["coarsen", "--matrix", &mtx, "--method", "greedy"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("|F| 158"), "{}", stdout(&o));
}

#[test]
fn jittered_mesh_written_alongside_matrix() {
    let dir = TempDir::new().unwrap();
    let (mtx, mesh) = (p(&dir, "a.mtx"), p(&dir, "a.mesh"));
    let o = run(&[
        "generate", "--problem", "jittered-mesh", "--m", "6", "--jitter", "0.3", "--mesh-seed", "2", "-o", &mtx,
        "--mesh-out", &mesh,
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&["coarsen", "--mesh", &mesh, "--method", "greedy"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("n 25 "), "{}", stdout(&o));
}

#[test]
fn greedy_coarsen_ratio_and_file() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "s.json");
    let o = run(&["coarsen", "--problem", "fd5", "--n", "32", "--method", "greedy", "-o", &out]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("|F|/|Omega| 0.5605"), "{}", stdout(&o));
    assert!(stdout(&o).contains("feasible yes"));
    let v = json(&out);
    assert_eq!(v["format_version"], 1);
    assert_eq!(v["n"], 1024);
    assert_eq!(v["method"], "greedy");
    assert_eq!(v["f_indices"].as_array().unwrap().len(), 574);
}

#[test]
fn by_hand_ratio() {
    let o = run(&["coarsen", "--problem", "fd5", "--n", "32", "--method", "by-hand"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("by-hand-fd"));
    assert!(stdout(&o).contains("|F|/|Omega| 0.8047"), "{}", stdout(&o));
}

#[test]
fn by_hand_on_unstructured_problem_is_usage_error() {
    let o = run(&["coarsen", "--problem", "jittered-mesh", "--m", "4", "--method", "by-hand"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn sa_files_are_byte_identical_for_equal_seeds() {
    let dir = TempDir::new().unwrap();
    let files: Vec<String> = ["a.json", "b.json"].iter().map(|n| p(&dir, n)).collect();
    let traces: Vec<String> = ["a.csv", "b.csv"].iter().map(|n| p(&dir, n)).collect();
    for (f, t) in files.iter().zip(&traces) {
        let o = run(&[
            "coarsen", "--problem", "fd5", "--n", "12", "--method", "sa", "--seed", "7", "--steps-per-dof", "100",
            "-o", f, "--trace", t,
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&files[0]).unwrap(), std::fs::read(&files[1]).unwrap());
    assert_eq!(std::fs::read(&traces[0]).unwrap(), std::fs::read(&traces[1]).unwrap());
    let trace = std::fs::read_to_string(&traces[0]).unwrap();
    assert_eq!(trace.lines().next().unwrap(), "global_step,temperature,best_f_size,sweep");
    assert_eq!(json(&files[0])["seed"], 7);
}

#[test]
fn strict_requires_seed() {
    let o = run(&["--strict", "coarsen", "--problem", "fd5", "--n", "8", "--method", "sa"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("--seed"));
    let o = run(&["--strict", "solve", "--problem", "fd5", "--n", "8", "--method", "greedy"]);
    assert_eq!(code(&o), 2);
    // Deterministic coarsening needs no seed.
    let o = run(&["--strict", "coarsen", "--problem", "fd5", "--n", "8", "--method", "greedy"]);
    assert_eq!(code(&o), 0);
    let o = run(&["--strict", "coarsen", "--problem", "fd5", "--n", "8", "--method", "sa", "--seed", "1"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn oracle_examples() {
    let o = run(&["oracle", "--problem", "identity", "--n", "4"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("optimal |F| 4"), "{}", stdout(&o));

    let dir = TempDir::new().unwrap();
    let out = p(&dir, "o.json");
    let o = run(&["oracle", "--problem", "fd5", "--n", "3", "-o", &out]);
    assert_eq!(code(&o), 0);
    let v = json(&out);
    assert_eq!(v["n"], 9);
    assert_eq!(v["optimal_f"].as_u64().unwrap() as usize, v["f_indices"].as_array().unwrap().len());
}

#[test]
fn oracle_refuses_large_problems() {
    let o = run(&["oracle", "--problem", "fd5", "--n", "5"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn solve_writes_report() {
    let dir = TempDir::new().unwrap();
    let out = p(&dir, "r.json");
    let o = run(&["solve", "--problem", "fd5", "--n", "16", "--method", "greedy", "--seed", "1", "-o", &out]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let v = json(&out);
    assert_eq!(v["format_version"], 1);
    let rho = v["rho"].as_f64().unwrap();
    assert!(rho > 0.0 && rho <= 0.977, "{rho}");
    assert_eq!(v["levels"].as_array().unwrap().len(), 2);
    assert!(v["c_grid"].as_f64().unwrap() > 1.0 && v["c_op"].as_f64().unwrap() > 1.0);
}

#[test]
fn solve_identity_has_trivial_coarse_grid() {
    let o = run(&["solve", "--problem", "identity", "--n", "4", "--method", "greedy", "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("levels [4, 0]"), "{}", stdout(&o));
}

#[test]
fn solve_uses_given_splitting_and_checks_it() {
    let dir = TempDir::new().unwrap();
    let s = p(&dir, "s.json");
    assert_eq!(code(&run(&["coarsen", "--problem", "fd5", "--n", "16", "--method", "by-hand", "-o", &s])), 0);
    let o = run(&["solve", "--problem", "fd5", "--n", "16", "--splitting", &s, "--seed", "1"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("file:by-hand-fd"));

    // Wrong size.
    let o = run(&["solve", "--problem", "fd5", "--n", "8", "--splitting", &s, "--seed", "1"]);
    assert_eq!(code(&o), 2);

    // Infeasible: all points in F.
    let mut v = json(&s);
    v["f_indices"] = (0..256).collect::<Vec<_>>().into();
    std::fs::write(&s, v.to_string()).unwrap();
    let o = run(&["solve", "--problem", "fd5", "--n", "16", "--splitting", &s, "--seed", "1"]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn all_coarse_splitting_stalls() {
    let dir = TempDir::new().unwrap();
    let s = p(&dir, "s.json");
    assert_eq!(code(&run(&["coarsen", "--problem", "fd5", "--n", "4", "--method", "greedy", "-o", &s])), 0);
    let mut v = json(&s);
    v["f_indices"] = serde_json::Value::Array(vec![]);
    std::fs::write(&s, v.to_string()).unwrap();
    let o = run(&["solve", "--problem", "fd5", "--n", "4", "--splitting", &s, "--seed", "1"]);
    assert_eq!(code(&o), 4, "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn config_file_with_flag_override() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "run.toml");
    let emitted = p(&dir, "emitted.toml");
    std::fs::write(
        &cfg,
        "theta = 0.56\nseed = 3\n\n[problem]\nkind = \"fd5\"\nn = 16\n\n[coarsener]\nmethod = \"sa\"\nsteps_per_dof = 50\n",
    )
    .unwrap();
    let o = run(&["coarsen", "--config", &cfg, "--method", "greedy", "--emit-config", &emitted]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("fd5:16 greedy"));
    let text = std::fs::read_to_string(&emitted).unwrap();
    assert!(text.contains("method = \"greedy\""), "{text}");
    // The emitted file reproduces the run.
    let again = run(&["coarsen", "--config", &emitted]);
    assert_eq!(stdout(&again), stdout(&o));
}

#[test]
fn unknown_config_key_is_usage_error() {
    let dir = TempDir::new().unwrap();
    let cfg = p(&dir, "bad.toml");
    std::fs::write(&cfg, "theta = 0.56\nthetta = 0.5\n").unwrap();
    let o = run(&["coarsen", "--config", &cfg]);
    assert_eq!(code(&o), 2);
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(code(&run(&["coarsen", "--problem", "fd5", "--n", "8", "--method", "nope"])), 2);
    assert_eq!(code(&run(&["coarsen", "--problem", "fd5", "--n", "8", "--theta", "0.4"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);
    assert_eq!(code(&run(&["coarsen", "--matrix", "/nonexistent.mtx"])), 2);
}

#[test]
fn compare_is_thread_count_independent() {
    let dir = TempDir::new().unwrap();
    let (a, b) = (p(&dir, "a.csv"), p(&dir, "b.csv"));
    let base = ["compare", "--problem", "fd5", "--n", "12", "--seed", "2", "--steps-per-dof", "100"];
    let mut one = vec!["--threads", "1"];
    one.extend(base);
    one.extend(["-o", a.as_str()]);
    let mut three = vec!["--threads", "3"];
    three.extend(base);
    three.extend(["-o", b.as_str()]);
    assert_eq!(code(&run(&one)), 0);
    assert_eq!(code(&run(&three)), 0);
    let csv = std::fs::read_to_string(&a).unwrap();
    assert_eq!(csv, std::fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "problem,method,f_ratio,rho,c_grid,c_op");
    assert_eq!(lines.len(), 4);
}
