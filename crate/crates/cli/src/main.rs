use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tbls_cli::bench::{default_algorithms, run_bench, Algorithm, BenchConfig, Grid};
use tbls_cli::{parse_kind, CliError, OUTPUT_DIR_ENV};
use tbls_core::format::{emit_instance, emit_matching, parse_instance, parse_matching};
use tbls_core::gen::{generate, GenConfig, TieLength};
use tbls_core::oracle::{all_blocking_pairs, max_weakly_stable, RankBasis};
use tbls_core::{tbls, Instance, SolverParams, Threshold};

#[derive(Parser)]
#[command(
    name = "tbls",
    version,
    about = "Maximum weakly stable matchings for SMTI and HRT"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve an instance file.
    Solve(SolveArgs),
    /// Generate random instance files.
    Gen(GenArgs),
    /// Check a matching file for weak stability.
    Verify(VerifyArgs),
    /// Compute the exact maximum weakly stable size of a small instance.
    Oracle(OracleArgs),
    /// Run a benchmark grid and report per-configuration means.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgoArg {
    Tbls,
    TblsE,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    input: PathBuf,
    /// Matching file; defaults to `$TBLS_OUTPUT_DIR/<input stem>.matching`,
    /// or stdout when the variable is unset.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Run report (CSV).
    #[arg(long)]
    report: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "tbls")]
    algo: AlgoArg,
    #[arg(long, default_value_t = 3000)]
    max_iters: u64,
    /// Disruption probability.
    #[arg(long, default_value_t = 0.05)]
    pd: f64,
    /// Ratio for the minimum-size estimate.
    #[arg(long, default_value_t = 0.9)]
    c: f64,
    /// Agents re-shuffled per disruption on the U side [default: by size].
    #[arg(long)]
    ku: Option<usize>,
    /// Agents re-shuffled per disruption on the W side [default: by size].
    #[arg(long)]
    kw: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Wall-clock limit for each blocking-pair removal pass.
    #[arg(long, conflicts_with_all = ["step_threshold", "measured_threshold"])]
    time_threshold_ms: Option<u64>,
    /// Step limit for each removal pass [default: proposals of the initial base run].
    #[arg(long, conflicts_with = "measured_threshold")]
    step_threshold: Option<u64>,
    /// Use the wall time of the initial base run as the removal limit
    /// (not reproducible across machines).
    #[arg(long)]
    measured_threshold: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value = "smti", value_parser = parse_kind)]
    kind: tbls_core::Kind,
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Hospitals (HRT only).
    #[arg(long, default_value_t = 10)]
    m: usize,
    #[arg(long, default_value_t = 0.0)]
    p1: f64,
    #[arg(long, default_value_t = 0.0)]
    p2: f64,
    /// Tie-length distribution: geom-p2 or geom-1-p2.
    #[arg(long, default_value = "geom-p2")]
    g: TieLength,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Defaults to `$TBLS_OUTPUT_DIR`, then the current directory.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    allow_empty_lists: bool,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    matching: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(long)]
    input: PathBuf,
    /// Write one optimal matching here.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    /// smti-small, smti-large, hrt-small or hrt-large.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// TOML grid description.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    instances: Option<usize>,
    #[arg(long)]
    max_iters: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated subset of tbls, tbls-e, gs.
    #[arg(long, value_delimiter = ',')]
    algos: Option<Vec<String>>,
    /// CSV destination; defaults to `$TBLS_OUTPUT_DIR/bench.csv`, or stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

fn load_instance(path: &Path) -> Result<Instance, CliError> {
    parse_instance(&read(path)?).map_err(|e| CliError::parse(path, e))
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn output_dir() -> Option<PathBuf> {
    std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from)
}

fn emit(path: Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => write(&p, text),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn solve(args: SolveArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let defaults = SolverParams::for_instance(&inst);
    let threshold = match (
        args.time_threshold_ms,
        args.step_threshold,
        args.measured_threshold,
    ) {
        (Some(ms), _, _) => Threshold::Wall(Duration::from_millis(ms)),
        (_, Some(steps), _) => Threshold::Steps(steps),
        (_, _, true) => Threshold::MeasuredWall,
        _ => Threshold::Auto,
    };
    let params = SolverParams {
        max_iters: args.max_iters,
        disruption_prob: args.pd,
        estimate_ratio: args.c,
        k_u: args.ku.unwrap_or(defaults.k_u),
        k_w: args.kw.unwrap_or(defaults.k_w),
        threshold,
        equity_mode: matches!(args.algo, AlgoArg::TblsE),
        seed: args.seed,
    };
    let sol = tbls::run(&inst, &params)?;
    if inst.n_u() * inst.n_w() <= tbls_core::oracle::MAX_SCAN_PAIRS
        && !all_blocking_pairs(&inst, &sol.matching, RankBasis::Original)?.is_empty()
    {
        return Err(CliError::Internal(
            "solver output is not weakly stable".into(),
        ));
    }

    let output = args.output.or_else(|| {
        let stem = args.input.file_stem()?.to_owned();
        output_dir().map(|d| d.join(stem).with_extension("matching"))
    });
    emit(output, &emit_matching(&inst, &sol.matching))?;

    let r = &sol.report;
    if let Some(path) = args.report {
        let algo = if params.equity_mode { "tbls-e" } else { "tbls" };
        let mut w = csv::Writer::from_writer(Vec::new());
        let row = [
            ("algorithm", algo.to_string()),
            ("seed", r.seed.to_string()),
            ("matching_size", r.matching_size.to_string()),
            ("unmatched_u", r.unmatched_u.to_string()),
            ("unmatched_w", r.unmatched_w.to_string()),
            ("unassigned_positions", r.unassigned_positions.to_string()),
            (
                "sex_equality_cost",
                r.sex_equality_cost
                    .map(|c| c.to_string())
                    .unwrap_or_default(),
            ),
            ("iterations", r.iterations.to_string()),
        ];
        let io = |e: csv::Error| CliError::Io(e.to_string());
        w.write_record(row.iter().map(|(k, _)| k)).map_err(io)?;
        w.write_record(row.iter().map(|(_, v)| v)).map_err(io)?;
        let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        write(&path, &String::from_utf8_lossy(&bytes))?;
    }
    eprintln!(
        "size {} of {} possible, {} iterations, {:.1} ms",
        r.matching_size,
        inst.capacity_bound(),
        r.iterations,
        r.elapsed.as_secs_f64() * 1000.0
    );
    Ok(())
}

fn gen(args: GenArgs) -> Result<(), CliError> {
    let config = GenConfig {
        kind: args.kind,
        n: args.n,
        m: args.m,
        p1: args.p1,
        p2: args.p2,
        tie_length: args.g,
        seed: args.seed,
        count: args.count,
        allow_empty_lists: args.allow_empty_lists,
    };
    config.validate()?;
    let dir = args
        .out_dir
        .or_else(output_dir)
        .unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    let prefix = config.kind.to_string().to_ascii_lowercase();
    for i in 0..config.count {
        let inst = generate(&config, i)?;
        let path = dir.join(format!("{prefix}-{:04}.txt", i));
        write(&path, &emit_instance(&inst))?;
    }
    eprintln!("wrote {} instance(s) to {}", config.count, dir.display());
    Ok(())
}

/// Exit status 0 when stable, 1 when blocking pairs exist.
fn verify(args: VerifyArgs) -> Result<ExitCode, CliError> {
    let inst = load_instance(&args.input)?;
    let m = parse_matching(&inst, &read(&args.matching)?)
        .map_err(|e| CliError::parse(&args.matching, e))?;
    let bps = all_blocking_pairs(&inst, &m, RankBasis::Original)?;
    if bps.is_empty() {
        println!("weakly stable, size {}", m.size());
        return Ok(ExitCode::SUCCESS);
    }
    println!("not weakly stable: {} blocking pair(s)", bps.len());
    for (u, w) in bps {
        println!("{} {}", inst.agent_ref(u), inst.agent_ref(w));
    }
    Ok(ExitCode::from(1))
}

fn oracle(args: OracleArgs) -> Result<(), CliError> {
    let inst = load_instance(&args.input)?;
    let r = max_weakly_stable(&inst)?;
    println!("max_stable_size {}", r.max_stable_size);
    println!("optimal_matchings {}", r.optimal_matchings.len());
    println!("total_weakly_stable {}", r.total_weakly_stable);
    if let (Some(path), Some(m)) = (args.output, r.optimal_matchings.first()) {
        write(&path, &emit_matching(&inst, m))?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<(), CliError> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => BenchConfig::from_toml(&read(path)?)?,
        (None, preset) => {
            let grid = Grid::preset(preset.as_deref().unwrap_or("smti-small"))?;
            BenchConfig {
                algorithms: default_algorithms(grid.kind),
                grid,
                instances: 100,
                params: SolverParams::default(),
                seed: 0,
            }
        }
    };
    if let Some(n) = args.instances {
        config.instances = n;
    }
    if let Some(n) = args.max_iters {
        config.params.max_iters = n;
    }
    if let Some(s) = args.seed {
        config.seed = s;
    }
    if let Some(algos) = &args.algos {
        config.algorithms = algos
            .iter()
            .map(|a| a.parse::<Algorithm>())
            .collect::<Result<_, _>>()?;
    }
    let report = run_bench(&config)?;
    match args
        .output
        .or_else(|| output_dir().map(|d| d.join("bench.csv")))
    {
        Some(path) => report.write_csv_file(&path)?,
        None => report.write_csv(std::io::stdout().lock())?,
    }
    eprint!("{}", report.summary());
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.command {
        Command::Solve(a) => solve(a).map(|_| ExitCode::SUCCESS),
        Command::Gen(a) => gen(a).map(|_| ExitCode::SUCCESS),
        Command::Verify(a) => verify(a),
        Command::Oracle(a) => oracle(a).map(|_| ExitCode::SUCCESS),
        Command::Bench(a) => bench(a).map(|_| ExitCode::SUCCESS),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
