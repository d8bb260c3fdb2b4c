//! Command-line surface: algebra validation, normal ordering, ellipticity
//! checks, covering/partition construction, and lattice estimate probes.
//!
//! Exit codes: 0 on success, 1 when a checked property is violated, 2 on
//! input errors. Reports are JSON (plus CSV for probe sweeps) under the
//! output directory; existing JSON reports are never overwritten without
//! `--force`, and CSV sweeps append.

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use nilharmonic::algebra::GradedLieAlgebra;
use nilharmonic::covering::{self, BumpSpec, PartitionOfUnity};
use nilharmonic::io;
use nilharmonic::lattice::{self, Grid, LatticeContext, ProbeMode};
use nilharmonic::repr;
use nilharmonic::uea::{UeaElement, Word};

#[derive(Parser)]
#[command(
    name = "nilharmonic",
    version,
    about = "Calculus and desk-scale numerics on graded nilpotent Lie groups"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Seed for every randomized sample in this run.
    #[arg(long, global = true, default_value_t = 42)]
    seed: u64,

    /// Tolerance for the pass/fail judgements.
    #[arg(long, global = true, default_value_t = 1e-10)]
    tol: f64,

    /// Output directory for reports.
    #[arg(long, global = true, default_value = "reports")]
    out: PathBuf,

    /// Overwrite existing JSON reports.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Inspect or validate an algebra (builtin name or JSON file).
    Algebra {
        #[command(subcommand)]
        action: AlgebraAction,
    },
    /// Enveloping-algebra utilities.
    Uea {
        #[command(subcommand)]
        action: UeaAction,
    },
    /// Representation-theoretic ellipticity checks.
    Rockland {
        #[command(subcommand)]
        action: RocklandAction,
    },
    /// Covering nets and partitions of unity.
    Partition {
        #[command(subcommand)]
        action: PartitionAction,
    },
    /// Lattice estimate probes.
    Estimate {
        #[command(subcommand)]
        action: EstimateAction,
    },
    /// Positivity-transfer instance check for a constant-coefficient operator.
    Positivity(PositivityArgs),
}

#[derive(Subcommand)]
enum AlgebraAction {
    /// Check the structural invariants; exit 1 if any is violated.
    Validate { spec: String },
    /// Print dimensions, degrees, and generators.
    Info { spec: String },
}

#[derive(Subcommand)]
enum UeaAction {
    /// Straighten a generator word into the PBW basis.
    NormalOrder { algebra: String, word: String },
}

#[derive(Subcommand)]
enum RocklandAction {
    /// Compute the ellipticity constant of an operator.
    Check(RocklandArgs),
}

#[derive(Args)]
struct RocklandArgs {
    /// Operator JSON file.
    op: String,
    /// Highest oscillator level in the enumeration.
    #[arg(long = "n-max", default_value_t = 200)]
    n_max: usize,
    /// Truncation size for the matrix route.
    #[arg(long = "N", default_value_t = 60)]
    n_size: usize,
    /// Sample box for coefficient freezing, as lo,hi per axis or one pair.
    #[arg(long = "box", default_value = "-4,4")]
    sample_box: String,
    /// Number of coefficient sample points.
    #[arg(long, default_value_t = 128)]
    samples: usize,
}

#[derive(Subcommand)]
enum PartitionAction {
    /// Build a greedy net and partition, dump centers and statistics.
    Build(PartitionArgs),
    /// Build and check coverage, the square-sum identity, and overlaps.
    Verify(PartitionArgs),
}

#[derive(Args)]
struct PartitionArgs {
    /// Algebra (builtin name or JSON file).
    algebra: String,
    /// Net separation radius.
    #[arg(long, default_value_t = 1.0)]
    eps: f64,
    /// Region box, as lo,hi per axis or one pair for all axes.
    #[arg(long = "box", default_value = "-4,4")]
    region: String,
    /// Support radius multiplier N (support in B(g_n, N eps)).
    #[arg(long = "n-mult", default_value_t = 2)]
    n_mult: u32,
    /// Verification sample count.
    #[arg(long, default_value_t = 10000)]
    samples: usize,
    /// Candidate budget for the greedy net.
    #[arg(long, default_value_t = 400000)]
    budget: usize,
}

#[derive(Subcommand)]
enum EstimateAction {
    Forward(EstimateArgs),
    Backward(EstimateArgs),
    Localize(EstimateArgs),
}

#[derive(Args)]
struct EstimateArgs {
    /// Operator JSON file.
    op: String,
    /// Grid points per axis.
    #[arg(long, default_value_t = 16)]
    grid: usize,
    /// Sobolev index s.
    #[arg(long, default_value_t = 0.0)]
    s: f64,
    /// Comma-separated list of imaginary shifts c.
    #[arg(long, default_value = "10")]
    c: String,
    /// Coordinate box, one lo,hi pair for all axes.
    #[arg(long = "box", default_value = "-4,4")]
    region: String,
    /// Number of test functions.
    #[arg(long, default_value_t = 12)]
    tests: usize,
    /// Partition separation radius (localization mode).
    #[arg(long, default_value_t = 1.2)]
    eps: f64,
}

#[derive(Args)]
struct PositivityArgs {
    /// Operator JSON file (constant coefficients; frozen at the origin).
    op: String,
    /// Oscillator truncation size.
    #[arg(long = "N", default_value_t = 40)]
    n_size: usize,
    /// Lattice points per axis for the group-side form.
    #[arg(long, default_value_t = 10)]
    grid: usize,
    /// Coordinate box.
    #[arg(long = "box", default_value = "-4,4")]
    region: String,
    /// Number of test functions.
    #[arg(long, default_value_t = 16)]
    tests: usize,
}

/// Everything needed to reproduce a run; embedded in every JSON report.
#[derive(Clone, Debug, Serialize)]
struct RunConfig {
    seed: u64,
    tol: f64,
    args: Vec<String>,
}

#[derive(Serialize)]
struct Report<T: Serialize> {
    config: RunConfig,
    #[serde(flatten)]
    body: T,
}

enum Outcome {
    Ok,
    CheckFailed,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = RunConfig {
        seed: cli.seed,
        tol: cli.tol,
        args: std::env::args().collect(),
    };
    match run(&cli, &config) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: &Cli, config: &RunConfig) -> anyhow::Result<Outcome> {
    match &cli.command {
        Command::Algebra { action } => run_algebra(cli, config, action),
        Command::Uea { action } => run_uea(action),
        Command::Rockland { action } => run_rockland(cli, config, action),
        Command::Partition { action } => run_partition(cli, config, action),
        Command::Estimate { action } => run_estimate(cli, config, action),
        Command::Positivity(args) => run_positivity(cli, config, args),
    }
}

fn parse_box(spec: &str, dim: usize) -> anyhow::Result<(Vec<f64>, Vec<f64>)> {
    let parts: Vec<f64> = spec
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("malformed box {spec:?}: {e}"))?;
    match parts.len() {
        2 => Ok((vec![parts[0]; dim], vec![parts[1]; dim])),
        n if n == 2 * dim => {
            let lo = parts.iter().step_by(2).copied().collect();
            let hi = parts.iter().skip(1).step_by(2).copied().collect();
            Ok((lo, hi))
        }
        _ => anyhow::bail!("box {spec:?} needs one lo,hi pair or one pair per axis"),
    }
}

fn write_json<T: Serialize>(cli: &Cli, name: &str, report: &T) -> anyhow::Result<PathBuf> {
    std::fs::create_dir_all(&cli.out)?;
    let path = cli.out.join(name);
    if path.exists() && !cli.force {
        anyhow::bail!(
            "report {} already exists; pass --force to overwrite",
            path.display()
        );
    }
    std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
    Ok(path)
}

fn run_algebra(cli: &Cli, config: &RunConfig, action: &AlgebraAction) -> anyhow::Result<Outcome> {
    match action {
        AlgebraAction::Validate { spec } => {
            let alg = io::load_algebra(spec)?;
            let violations: Vec<String> = alg.validate().iter().map(|v| v.to_string()).collect();
            #[derive(Serialize)]
            struct Body {
                algebra: String,
                valid: bool,
                violations: Vec<String>,
            }
            let body = Body {
                algebra: spec.clone(),
                valid: violations.is_empty(),
                violations: violations.clone(),
            };
            let path = write_json(
                cli,
                "algebra_validate.json",
                &Report {
                    config: config.clone(),
                    body,
                },
            )?;
            println!(
                "{} violations; report at {}",
                violations.len(),
                path.display()
            );
            for v in &violations {
                println!("  - {v}");
            }
            Ok(if violations.is_empty() {
                Outcome::Ok
            } else {
                Outcome::CheckFailed
            })
        }
        AlgebraAction::Info { spec } => {
            let alg = io::load_algebra(spec)?;
            println!("basis: {}", alg.labels().join(", "));
            println!("degrees: {:?}", alg.degrees());
            println!(
                "generators: {}",
                alg.generators()
                    .iter()
                    .map(|&g| alg.labels()[g].as_str())
                    .collect::<Vec<_>>()
                    .join(", ")
            );
            println!("step: {}", alg.step());
            println!("homogeneous dimension: {}", alg.homogeneous_dimension());
            println!("lcm of generator degrees: {}", alg.lcm_generator_degree());
            Ok(Outcome::Ok)
        }
    }
}

fn run_uea(action: &UeaAction) -> anyhow::Result<Outcome> {
    match action {
        UeaAction::NormalOrder { algebra, word } => {
            let alg = io::load_algebra(algebra)?;
            let w = Word::parse(&alg, word)?;
            let el = UeaElement::normal_order(alg, &w);
            println!("{el}");
            Ok(Outcome::Ok)
        }
    }
}

fn run_rockland(cli: &Cli, config: &RunConfig, action: &RocklandAction) -> anyhow::Result<Outcome> {
    let RocklandAction::Check(args) = action;
    let text = std::fs::read_to_string(&args.op)?;
    let op = io::diffop_from_json(&text, None)?;
    let dim = op.algebra().dim();
    let (lo, hi) = parse_box(&args.sample_box, dim)?;
    let points = sample_points(&lo, &hi, args.samples, cli.seed);
    let report = repr::rockland_constant_at_points(&op, &points, args.n_size, args.n_max)?;
    let path = write_json(
        cli,
        "rockland_check.json",
        &Report {
            config: config.clone(),
            body: &report,
        },
    )?;
    println!(
        "c_P = {:.12e}, elliptic: {}, tail_ok: {} ({})",
        report.c_p,
        report.elliptic,
        report.tail_ok,
        path.display()
    );
    Ok(if report.elliptic {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}

fn sample_points(lo: &[f64], hi: &[f64], n: usize, seed: u64) -> Vec<Vec<f64>> {
    use rand::prelude::*;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            lo.iter()
                .zip(hi)
                .map(|(&a, &b)| if b > a { rng.gen_range(a..b) } else { a })
                .collect()
        })
        .collect()
}

fn run_partition(
    cli: &Cli,
    config: &RunConfig,
    action: &PartitionAction,
) -> anyhow::Result<Outcome> {
    let (args, verify) = match action {
        PartitionAction::Build(a) => (a, false),
        PartitionAction::Verify(a) => (a, true),
    };
    let alg = io::load_algebra(&args.algebra)?;
    let (lo, hi) = parse_box(&args.region, alg.dim())?;
    let centers = covering::greedy_net(&alg, &lo, &hi, args.eps, args.budget, cli.seed)?;
    let pou = PartitionOfUnity::build(
        alg.clone(),
        centers,
        BumpSpec {
            eps: args.eps,
            n_mult: args.n_mult,
        },
    );
    let stats = covering::verify_partition(&pou, &lo, &hi, args.samples, cli.seed + 1)?;
    #[derive(Serialize)]
    struct Body<'a> {
        algebra: String,
        eps: f64,
        n_mult: u32,
        region_lo: Vec<f64>,
        region_hi: Vec<f64>,
        centers: Vec<&'a [f64]>,
        stats: &'a covering::PartitionStats,
    }
    let body = Body {
        algebra: args.algebra.clone(),
        eps: args.eps,
        n_mult: args.n_mult,
        region_lo: lo.clone(),
        region_hi: hi.clone(),
        centers: pou.centers().iter().map(|c| c.coords.as_slice()).collect(),
        stats: &stats,
    };
    let name = if verify {
        "partition_verify.json"
    } else {
        "partition_build.json"
    };
    let path = write_json(
        cli,
        name,
        &Report {
            config: config.clone(),
            body,
        },
    )?;
    println!(
        "{} centers, coverage {:.4}, partition defect {:.3e}, theta^2 in [{:.3}, {:.3}], max overlap {} (bound {}) -> {}",
        stats.n_centers,
        stats.coverage_fraction,
        stats.partition_defect,
        stats.theta_sq_min,
        stats.theta_sq_max,
        stats.overlap_max,
        stats.overlap_bound,
        path.display()
    );
    if verify {
        let ok = stats.partition_defect < cli.tol
            && stats.theta_sq_min >= 1.0 - cli.tol
            && (stats.overlap_max as f64) <= stats.overlap_bound;
        Ok(if ok { Outcome::Ok } else { Outcome::CheckFailed })
    } else {
        Ok(Outcome::Ok)
    }
}

fn run_estimate(cli: &Cli, config: &RunConfig, action: &EstimateAction) -> anyhow::Result<Outcome> {
    let (args, mode) = match action {
        EstimateAction::Forward(a) => (a, ProbeMode::Forward),
        EstimateAction::Backward(a) => (a, ProbeMode::Backward),
        EstimateAction::Localize(a) => (a, ProbeMode::Localization),
    };
    let text = std::fs::read_to_string(&args.op)?;
    let op = io::diffop_from_json(&text, None)?;
    let alg = op.algebra().clone();
    let (lo, hi) = parse_box(&args.region, alg.dim())?;
    let grid = Grid::new(
        lo.clone(),
        hi.clone(),
        vec![args.grid; alg.dim()],
        vec![true; alg.dim()],
    )?;
    let ctx = LatticeContext::new(alg.clone(), grid)?;
    let c_values: Vec<f64> = args
        .c
        .split(',')
        .map(|p| p.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| anyhow::anyhow!("malformed c list {:?}: {e}", args.c))?;
    let tests = ctx.interior_test_functions(args.tests, cli.seed);
    let partition = if mode == ProbeMode::Localization {
        let margin: Vec<f64> = lo.iter().zip(&hi).map(|(&a, &b)| 0.1 * (b - a)).collect();
        let plo: Vec<f64> = lo.iter().zip(&margin).map(|(a, m)| a + m).collect();
        let phi: Vec<f64> = hi.iter().zip(&margin).map(|(b, m)| b - m).collect();
        let centers = covering::greedy_net(&alg, &plo, &phi, args.eps, 400000, cli.seed)?;
        Some(PartitionOfUnity::build(
            alg.clone(),
            centers,
            BumpSpec {
                eps: args.eps,
                n_mult: 2,
            },
        ))
    } else {
        None
    };

    let mut reports = Vec::new();
    for &c in &c_values {
        let rep = lattice::estimate_probe(&ctx, mode, &op, args.s, c, partition.as_ref(), &tests)?;
        println!(
            "{} s={} c={} grid={} min_ratio={:.12e} max_ratio={:.12e}",
            rep.mode, rep.s, rep.c, args.grid, rep.min_ratio, rep.max_ratio
        );
        reports.push(rep);
    }

    // CSV sweep rows (append-only, deterministic body).
    std::fs::create_dir_all(&cli.out)?;
    let csv_path = cli.out.join("estimate.csv");
    let mut body = String::new();
    if !csv_path.exists() {
        body.push_str("mode,s,c,grid,min_ratio,max_ratio\n");
    }
    for rep in &reports {
        writeln!(
            body,
            "{},{:.12e},{:.12e},{},{:.12e},{:.12e}",
            rep.mode, rep.s, rep.c, args.grid, rep.min_ratio, rep.max_ratio
        )?;
    }
    use std::io::Write;
    std::fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&csv_path)?
        .write_all(body.as_bytes())?;

    let name = format!("estimate_{}.json", mode.tag());
    let path = write_json(
        cli,
        &name,
        &Report {
            config: config.clone(),
            body: &reports,
        },
    )?;
    println!(
        "rows appended to {}, report at {}",
        csv_path.display(),
        path.display()
    );
    let ok = reports.iter().all(|r| r.min_ratio > 0.0);
    Ok(if ok { Outcome::Ok } else { Outcome::CheckFailed })
}

fn run_positivity(cli: &Cli, config: &RunConfig, args: &PositivityArgs) -> anyhow::Result<Outcome> {
    let text = std::fs::read_to_string(&args.op)?;
    let op = io::diffop_from_json(&text, None)?;
    let alg: Arc<GradedLieAlgebra> = op.algebra().clone();
    let origin = vec![0.0; alg.dim()];
    let d = op.freeze(&origin)?;
    let (lo, hi) = parse_box(&args.region, alg.dim())?;
    let grid = Grid::new(lo, hi, vec![args.grid; alg.dim()], vec![true; alg.dim()])?;
    let ctx = LatticeContext::new(alg, grid)?;
    let report =
        repr::positivity_transfer_check(&d, args.n_size, &ctx, args.tests, cli.seed, cli.tol)?;
    let path = write_json(
        cli,
        "positivity.json",
        &Report {
            config: config.clone(),
            body: &report,
        },
    )?;
    println!(
        "group_side_min = {:.6e}, rep_side_min = {:.6e}, consistent: {} ({})",
        report.group_side_min, report.rep_side_min, report.consistent,
        path.display()
    );
    Ok(if report.consistent {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}
