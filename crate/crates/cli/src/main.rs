mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use amgr_anneal::amgr::{build_hierarchy, AmgrHierarchy, CycleKind, DffRule, InterpolationKind};
use amgr_anneal::anneal::Exchange;
use amgr_anneal::coarsen::{CoarsenContext, CoarsenOutput, CoarsenerParams, CoarsenerRegistry, LevelCoarseners};
use amgr_anneal::metrics::{asymptotic_rho, comparison_csv, ComparisonRow, SolveReport};
use amgr_anneal::mmio::write_matrix_market;
use amgr_anneal::partition::brute_force_optimal_f;
use amgr_anneal::problems::{square_mesh, ProblemSpec};
use amgr_anneal::splitting::{check_feasible, SplittingFile};
use amgr_anneal::{CfSplitting, CsrMatrix};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use config::{ProblemArgs, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "amgr-anneal", version, about = "Coarse/fine splittings and AMGr solves")]
struct Cli {
    /// Reject randomized runs without an explicit --seed.
    #[arg(long, global = true)]
    strict: bool,
    /// Worker threads for independent runs.
    #[arg(long, global = true, default_value_t = 1)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a test operator as Matrix Market.
    Generate(GenerateArgs),
    /// Compute a C/F splitting.
    Coarsen(CoarsenArgs),
    /// Build a hierarchy and measure convergence and complexities.
    Solve(SolveArgs),
    /// Exhaustive optimum on a tiny operator.
    Oracle(OracleArgs),
    /// Side-by-side solves for several coarseners.
    Compare(CompareArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the generated mesh (jittered-mesh only).
    #[arg(long)]
    mesh_out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct RunFlags {
    /// TOML run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// greedy, sa, by-hand, by-hand-fd or by-hand-fe.
    #[arg(long)]
    method: Option<String>,
    /// global, geometric:BxB or lloyd:AVG.
    #[arg(long)]
    subdomains: Option<String>,
    #[arg(long)]
    steps_per_dof: Option<u64>,
    #[arg(long)]
    steps_per_dof_per_sweep: Option<u64>,
    #[arg(long)]
    t_initial: Option<f64>,
    #[arg(long)]
    t_final_fraction: Option<f64>,
    #[arg(long, value_parser = parse_exchange)]
    exchange: Option<Exchange>,
    /// Write the effective configuration as TOML.
    #[arg(long)]
    emit_config: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct SolverFlags {
    #[arg(long)]
    levels: Option<usize>,
    #[arg(long, value_parser = parse_cycle)]
    cycle: Option<CycleKind>,
    #[arg(long)]
    nu: Option<usize>,
    /// Augment C with the Ruge–Stüben second pass.
    #[arg(long)]
    second_pass: bool,
    /// Strength threshold of the second pass and classical interpolation.
    #[arg(long)]
    strength: Option<f64>,
    #[arg(long, value_parser = parse_interpolation)]
    interpolation: Option<InterpolationKind>,
    #[arg(long, value_parser = parse_dff)]
    dff: Option<DffRule>,
    /// Cycles used to measure the convergence factor.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    rho_seed: Option<u64>,
}

#[derive(Args, Debug)]
struct CoarsenArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Splitting JSON to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    /// Best-|F| trace CSV (SA only).
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    run: RunFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Use this splitting on the finest level instead of coarsening.
    #[arg(long)]
    splitting: Option<PathBuf>,
    /// Report JSON to write.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct OracleArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.56)]
    theta: f64,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CompareArgs {
    #[command(flatten)]
    run: RunFlags,
    #[command(flatten)]
    solver: SolverFlags,
    /// Comma-separated coarseners.
    #[arg(long, value_delimiter = ',', default_value = "greedy,sa,by-hand")]
    methods: Vec<String>,
    /// CSV with one row per method.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

fn parse_cycle(s: &str) -> Result<CycleKind> {
    match s.to_ascii_lowercase().as_str() {
        "v" => Ok(CycleKind::V),
        "w" => Ok(CycleKind::W),
        _ => bail!("cycle must be v or w"),
    }
}

fn parse_interpolation(s: &str) -> Result<InterpolationKind> {
    match s {
        "amgr" => Ok(InterpolationKind::Amgr),
        "classical" => Ok(InterpolationKind::Classical),
        _ => bail!("interpolation must be amgr or classical"),
    }
}

fn parse_dff(s: &str) -> Result<DffRule> {
    match s {
        "uniform" => Ok(DffRule::Uniform),
        "row-dominance" => Ok(DffRule::RowDominance),
        _ => bail!("dff must be uniform or row-dominance"),
    }
}

fn parse_exchange(s: &str) -> Result<Exchange> {
    match s {
        "multiplicative" => Ok(Exchange::Multiplicative),
        "additive" => Ok(Exchange::Additive),
        _ => bail!("exchange must be multiplicative or additive"),
    }
}

/// A failed correctness check on produced data (exit 3).
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct CheckFailed(String);

fn exit_code(e: &anyhow::Error) -> u8 {
    use amgr_anneal::Error as E;
    for cause in e.chain() {
        if cause.downcast_ref::<CheckFailed>().is_some() {
            return 3;
        }
        if let Some(err) = cause.downcast_ref::<E>() {
            return match err {
                E::Stalled { .. } => 4,
                E::Infeasible { .. }
                | E::Singular
                | E::NonpositiveDiagonal { .. }
                | E::ZeroDiagonal(_)
                | E::Dimension(_)
                | E::Unfinalized(_) => 3,
                _ => 2,
            };
        }
    }
    2
}

fn merge(run: &RunFlags, solver: Option<&SolverFlags>) -> Result<RunConfig> {
    let mut c = match &run.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if run.problem.is_set() {
        c.problem = Some(run.problem.spec()?);
    }
    macro_rules! set {
        ($dst:expr, $src:expr) => {
            if let Some(v) = $src.clone() {
                $dst = v;
            }
        };
    }
    set!(c.theta, run.theta);
    if run.seed.is_some() {
        c.seed = run.seed;
    }
    set!(c.coarsener.method, run.method);
    set!(c.coarsener.subdomains, run.subdomains);
    set!(c.coarsener.steps_per_dof, run.steps_per_dof);
    set!(c.coarsener.steps_per_dof_per_sweep, run.steps_per_dof_per_sweep);
    set!(c.coarsener.t_initial, run.t_initial);
    set!(c.coarsener.t_final_fraction, run.t_final_fraction);
    set!(c.coarsener.exchange, run.exchange);
    if let Some(s) = solver {
        set!(c.solver.levels, s.levels);
        set!(c.solver.cycle, s.cycle);
        set!(c.solver.nu, s.nu);
        c.solver.second_pass |= s.second_pass;
        set!(c.solver.strength, s.strength);
        set!(c.solver.interpolation, s.interpolation);
        set!(c.solver.dff, s.dff);
        set!(c.measure.k, s.k);
        if s.rho_seed.is_some() {
            c.measure.rho_seed = s.rho_seed;
        }
    }
    c.validate()?;
    if let Some(p) = &run.emit_config {
        std::fs::write(p, c.to_toml()?).with_context(|| format!("writing {}", p.display()))?;
    }
    Ok(c)
}

fn require_seed(strict: bool, c: &RunConfig, why: &str) -> Result<()> {
    if strict && c.seed.is_none() {
        bail!("--strict: {why} needs an explicit --seed");
    }
    Ok(())
}

fn registry_params(c: &RunConfig) -> CoarsenerParams {
    CoarsenerParams { anneal: c.anneal(), subdomains: c.coarsener.subdomains.clone() }
}

fn write_splitting(path: &Path, a: &CsrMatrix, s: &CfSplitting, c: &RunConfig, method: &str) -> Result<()> {
    check_feasible(a, s, c.theta).map_err(|e| CheckFailed(format!("refusing to write an infeasible splitting: {e}")))?;
    let mut file = SplittingFile::new(s, c.theta, method, c.seed);
    if let Some(p) = &c.problem {
        file.provenance.insert("problem".into(), serde_json::to_value(p)?);
    }
    if method == "sa" {
        file.provenance.insert("anneal".into(), serde_json::to_value(c.anneal())?);
        file.provenance.insert("subdomains".into(), c.coarsener.subdomains.clone().into());
    }
    file.write(path)?;
    Ok(())
}

fn write_trace(path: Option<&PathBuf>, out: &CoarsenOutput) -> Result<()> {
    if let Some(p) = path {
        let t = out.trace.as_ref().ok_or_else(|| anyhow!("--trace is only available for SA"))?;
        std::fs::write(p, t.to_csv())?;
    }
    Ok(())
}

fn cmd_generate(strict: bool, g: &GenerateArgs) -> Result<()> {
    let spec = g.problem.spec()?;
    if let ProblemSpec::JitteredMesh { m, jitter, seed, .. } = &spec {
        if strict && *jitter > 0.0 && g.problem.mesh_seed.is_none() {
            bail!("--strict: a jittered mesh needs an explicit --mesh-seed");
        }
        if let Some(p) = &g.mesh_out {
            square_mesh(*m, *jitter, *seed)?.write(p)?;
        }
    } else if g.mesh_out.is_some() {
        bail!("--mesh-out only applies to jittered-mesh");
    }
    let a = spec.build()?;
    write_matrix_market(&a, &g.output)?;
    println!("{}: n {} nnz {} -> {}", spec.label(), a.n_rows(), a.nnz(), g.output.display());
    Ok(())
}

fn cmd_coarsen(strict: bool, args: &CoarsenArgs) -> Result<()> {
    let c = merge(&args.run, None)?;
    let method = c.method()?;
    let reg = CoarsenerRegistry::default();
    let coarsener = reg.build(&method, &registry_params(&c))?;
    if coarsener.randomized() {
        require_seed(strict, &c, "SA coarsening")?;
    }
    let spec = c.problem()?;
    let a = spec.build()?;
    let out = coarsener.coarsen(&a, c.theta, c.seed.unwrap_or(0), &CoarsenContext { grid_size: spec.grid_size() })?;
    let s = &out.splitting;
    let feasible = check_feasible(&a, s, c.theta);
    println!(
        "{} {method}: n {} |F| {} |F|/|Omega| {:.4} feasible {}",
        spec.label(),
        s.len(),
        s.n_f(),
        s.f_ratio(),
        if feasible.is_ok() { "yes" } else { "NO" }
    );
    if let Some(st) = &out.stats {
        println!(
            "sa: steps {} accepted {}+{} rejected {} guard skips {} splices {}",
            st.steps, st.accepted_downhill, st.accepted_uphill, st.rejected, st.guard_skips, st.splices
        );
    }
    feasible.map_err(|e| CheckFailed(format!("coarsener produced an infeasible splitting: {e}")))?;
    if let Some(p) = args.output.as_ref().or(c.output.splitting.as_ref()) {
        write_splitting(p, &a, s, &c, &method)?;
    }
    write_trace(args.trace.as_ref().or(c.output.trace.as_ref()), &out)?;
    Ok(())
}

struct Solved {
    a: CsrMatrix,
    h: AmgrHierarchy,
    outputs: Vec<CoarsenOutput>,
    report: SolveReport,
}

fn solve(c: &RunConfig, method: &str, given: Option<CfSplitting>, label: &str) -> Result<Solved> {
    let spec = c.problem()?;
    let a = spec.build()?;
    let reg = CoarsenerRegistry::default();
    let params = registry_params(c);
    let finest = reg.build(method, &params)?;
    let deeper = reg.build_deeper(method, &params)?;
    let seed = c.seed.unwrap_or(0);
    let mut lc = LevelCoarseners {
        finest: finest.as_ref(),
        deeper: deeper.as_ref(),
        theta: c.theta,
        seed,
        ctx: CoarsenContext { grid_size: spec.grid_size() },
        given,
        outputs: Vec::new(),
    };
    let h = build_hierarchy(a.clone(), &mut lc, &c.amgr_options())?;
    let rho_seed = c.measure.rho_seed.unwrap_or(seed);
    let rho = asymptotic_rho(&h, c.measure.k, rho_seed)?;
    let report = SolveReport::new(&h, rho, &spec.label(), label, c.theta, seed);
    Ok(Solved { a, h, outputs: lc.outputs, report })
}

fn cmd_solve(strict: bool, args: &SolveArgs) -> Result<()> {
    let c = merge(&args.run, Some(&args.solver))?;
    require_seed(strict, &c, "measuring rho from a random start")?;
    let a_n = c.problem()?.build()?.n_rows();
    let (given, label) = match &args.splitting {
        Some(p) => {
            let f = SplittingFile::read(p)?;
            if f.n != a_n {
                bail!("splitting has {} points, matrix {}", f.n, a_n);
            }
            (Some(f.splitting()?), format!("file:{}", f.method))
        }
        None => (None, c.method()?),
    };
    let method = c.method()?;
    let solved = solve(&c, &method, given, &label)?;
    let r = &solved.report;
    println!(
        "{} {}: levels {:?} rho {:.4}{} C_grid {:.3} C_op {:.3} |F|/|Omega| {:.4}",
        r.problem,
        r.method,
        solved.h.level_sizes(),
        r.rho,
        if r.diverged { " (diverged)" } else { "" },
        r.c_grid,
        r.c_op,
        r.f_ratio
    );
    if let Some(before) = solved.h.levels[0].n_f_before_second_pass {
        println!("second pass: |F| {} -> {}, |C| {} -> {}", before, r.levels[0].n_f, a_n - before, a_n - r.levels[0].n_f);
    }
    if let Some(p) = &c.output.splitting {
        write_splitting(p, &solved.a, &solved.outputs[0].splitting, &c, &method)?;
    }
    if let Some(p) = args.trace.as_ref().or(c.output.trace.as_ref()) {
        write_trace(Some(p), &solved.outputs[0])?;
    }
    if let Some(p) = args.output.as_ref().or(c.output.report.as_ref()) {
        std::fs::write(p, r.to_json()? + "\n")?;
    }
    Ok(())
}

#[derive(serde::Serialize)]
struct OracleReport {
    format_version: u32,
    problem: String,
    theta: f64,
    n: usize,
    optimal_f: usize,
    f_indices: Vec<usize>,
    feasible_sets: u64,
}

fn cmd_oracle(args: &OracleArgs) -> Result<()> {
    let spec = args.problem.spec()?;
    let a = spec.build()?;
    let r = brute_force_optimal_f(&a, args.theta)?;
    println!("{}: n {} optimal |F| {} F {:?} ({} feasible sets)", spec.label(), a.n_rows(), r.best_size, r.best_f, r.feasible_count);
    if let Some(p) = &args.output {
        let rep = OracleReport {
            format_version: 1,
            problem: spec.label(),
            theta: args.theta,
            n: a.n_rows(),
            optimal_f: r.best_size,
            f_indices: r.best_f,
            feasible_sets: r.feasible_count,
        };
        std::fs::write(p, serde_json::to_string_pretty(&rep)? + "\n")?;
    }
    Ok(())
}

fn cmd_compare(strict: bool, threads: usize, args: &CompareArgs) -> Result<()> {
    let c = merge(&args.run, Some(&args.solver))?;
    require_seed(strict, &c, "compare")?;
    let methods: Vec<String> = args
        .methods
        .iter()
        .map(|m| {
            let mut mc = c.clone();
            mc.coarsener.method = m.clone();
            mc.method()
        })
        .collect::<Result<_>>()?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build()?;
    let reports: Vec<Result<SolveReport>> =
        pool.install(|| methods.par_iter().map(|m| solve(&c, m, None, m).map(|s| s.report)).collect());
    let rows: Vec<ComparisonRow> =
        reports.into_iter().map(|r| r.map(|r| ComparisonRow::from(&r))).collect::<Result<_>>()?;
    let csv = comparison_csv(&rows);
    match &args.output {
        Some(p) => std::fs::write(p, &csv)?,
        None => print!("{csv}"),
    }
    if args.output.is_some() {
        for r in &rows {
            println!("{:<12} |F|/|Omega| {:.4} rho {:.3} C_grid {:.3} C_op {:.3}", r.method, r.f_ratio, r.rho, r.c_grid, r.c_op);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Generate(g) => cmd_generate(cli.strict, g),
        Command::Coarsen(a) => cmd_coarsen(cli.strict, a),
        Command::Solve(a) => cmd_solve(cli.strict, a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Compare(a) => cmd_compare(cli.strict, cli.threads, a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
