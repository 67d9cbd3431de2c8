//! `qslab`: exact and Monte Carlo analysis of quicksort comparison counts.
//!
//! Every subcommand is deterministic; the Monte Carlo ones require an
//! explicit `--seed` (there is no implicit entropy anywhere). Exit status is
//! 0 on success, 1 on a failed verification check, 2 on usage errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use qslab::exact::{
    mean_comparisons, variance_comparisons, ComparisonPmf, MuTable, PmfTable, Scaling,
};
use qslab::ledger::{build_ledger, certify_d2};
use qslab::metrics::{ks_distance, wasserstein_p, DiscreteDistribution};
use qslab::mgf::{
    exact_mgf, large_dev_bound, large_dev_bound_auto, scaled_bound_ln, PiecewiseMgfBound,
    LAMBDA_GRID,
};
use qslab::rational::{format_rat, to_f64};
use qslab::simulate::{
    default_grid, delta_star, density_window, fixed_point_residual, local_limit_probe,
    sample_path_lengths, EmpiricalCdf, SampleBudget,
};
use qslab::toll::{b_n_rows, c_discrete, c_limit};
use qslab::verify::{all_passed, run_suite, CheckKind, Suite, VerifyConfig};
use qslab::{Error, Parallelism};

#[derive(Parser)]
#[command(
    name = "qslab",
    version,
    about = "Exact distributions, certified rate bounds, coupling metrics, and seeded Monte Carlo for the quicksort comparison count"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    format: Format,

    /// Significant digits for floats in table and csv output.
    #[arg(long, global = true, default_value_t = 17)]
    digits: usize,

    /// Cap of the exact pmf recursion.
    #[arg(long, global = true, default_value_t = 50)]
    n_max: usize,

    /// Directory for bit-exact pmf cache files.
    #[arg(long, global = true, env = "QSLAB_CACHE_DIR")]
    cache_dir: Option<PathBuf>,

    /// Force the sequential kernels even when the parallel feature is on.
    #[arg(long, global = true)]
    sequential: bool,

    /// Monte Carlo work budget in n*reps units.
    #[arg(long, global = true, default_value_t = 4_000_000_000u128)]
    budget: u128,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
    Table,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MatrixKind {
    /// Exact squared 2-Wasserstein entries as num/den.
    D2sq,
    /// Kolmogorov-Smirnov entries as decimals.
    Ks,
}

#[derive(Subcommand)]
enum Command {
    /// Exact probability mass function of the comparison count.
    Pmf {
        #[arg(long)]
        n: usize,
    },
    /// Exact mean and variance of the comparison count.
    Moments {
        #[arg(long)]
        n: usize,
    },
    /// Discrete toll values C_n(i) next to the limit toll C(i/n).
    Toll {
        #[arg(long)]
        n: usize,
    },
    /// Table of L2 toll errors b_n with the 6.63/n bound.
    Bn {
        #[arg(long, default_value_t = 100)]
        max_n: usize,
    },
    /// The recursive upper-bound table for d_2(Y_n, Y).
    Ledger {
        #[arg(long, default_value_t = 100)]
        max_n: usize,
    },
    /// Run the full d_2 < 2/sqrt(n) certificate pipeline.
    CertifyD2 {
        /// Table size.
        #[arg(long = "N", default_value_t = 100)]
        n: usize,
        /// Seed coefficient; must close the induction analytically.
        #[arg(long, default_value_t = 8.0)]
        seed_a: f64,
        /// Write the certificate JSON here as well.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Coupling distances between normalized laws Y_n and Y_m.
    Dist {
        #[arg(long, required_unless_present = "matrix_max")]
        n: Option<usize>,
        #[arg(long, required_unless_present = "matrix_max")]
        m: Option<usize>,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Emit the full pairwise matrix over 2..=matrix_max instead.
        #[arg(long)]
        matrix_max: Option<usize>,
        #[arg(long, value_enum, default_value_t = MatrixKind::D2sq)]
        matrix_kind: MatrixKind,
    },
    /// Sample comparison counts through random binary search trees.
    Simulate {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Also write the batch JSON here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Window estimate of the limit density from a seeded batch.
    Density {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Window width; defaults to the error-balancing optimum.
        #[arg(long)]
        delta: Option<f64>,
        /// Density sup bound entering the error term.
        #[arg(long, default_value_t = 16.0)]
        mbar: f64,
        /// Density-derivative sup bound entering the error term.
        #[arg(long, default_value_t = 2466.0)]
        mprime: f64,
        #[arg(long, default_value_t = -1.5)]
        grid_min: f64,
        #[arg(long, default_value_t = 3.0)]
        grid_max: f64,
        #[arg(long, default_value_t = 451)]
        points: usize,
    },
    /// Monte Carlo residual of the limit fixed-point identity.
    FixedPoint {
        /// Size of the exact surrogate law.
        #[arg(long)]
        n: usize,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Diagnostic for the open local-limit question.
    LocalLimit {
        /// Size whose exact pmf is probed.
        #[arg(long)]
        n: usize,
        /// Batch size behind the density estimate.
        #[arg(long, default_value_t = 10_000)]
        density_n: usize,
        #[arg(long, default_value_t = 100_000)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 16.0)]
        mbar: f64,
        #[arg(long, default_value_t = 2466.0)]
        mprime: f64,
    },
    /// Exact MGF of Y_n against its piecewise upper bounds.
    Mgf {
        #[arg(long)]
        n: usize,
        /// Grid of lambda values (defaults to the versioned suite grid).
        #[arg(long = "lambda", value_delimiter = ',', num_args = 1..)]
        lambdas: Option<Vec<f64>>,
    },
    /// Large-deviation bound for the comparison count.
    Ldp {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        eps: f64,
        /// Fixed Chernoff parameter; omit to use lambda = ln ln n.
        #[arg(long)]
        lambda: Option<f64>,
    },
    /// Run a named verification suite.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
        /// Required by the Monte Carlo suites.
        #[arg(long)]
        seed: Option<u64>,
        /// Sweep limit for exact-law, metric, and MGF checks.
        #[arg(long, default_value_t = 40)]
        sweep: usize,
        #[arg(long, default_value_t = 1000)]
        toll_max: usize,
        #[arg(long, default_value_t = 100_000)]
        mc_reps: u64,
        #[arg(long, default_value_t = 10_000)]
        density_n: usize,
        #[arg(long, default_value_t = 100_000)]
        density_reps: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::PmfCapExceeded { .. }
        | Error::HarmonicZero
        | Error::OutOfRange { .. }
        | Error::IndexOutOfRange { .. }
        | Error::InvalidOrder(_)
        | Error::InvalidCoefficient { .. }
        | Error::AutoLambdaRange
        | Error::MissingSeed
        | Error::BadRational(_)
        | Error::BudgetExceeded { .. }
        | Error::InvalidDistribution(_) => 2,
        _ => 1,
    }
}

struct Out {
    format: Format,
    digits: usize,
}

impl Out {
    fn float(&self, x: f64) -> String {
        format!("{:.*e}", self.digits.saturating_sub(1), x)
    }

    fn json<T: Serialize>(&self, value: &T) -> qslab::Result<()> {
        println!("{}", serde_json::to_string_pretty(value)?);
        Ok(())
    }
}

fn run(cli: &Cli) -> qslab::Result<bool> {
    let out = Out {
        format: cli.format,
        digits: cli.digits.clamp(3, 17),
    };
    let mode = if cli.sequential {
        Parallelism::Sequential
    } else {
        Parallelism::Auto
    };
    let budget = SampleBudget(cli.budget);
    let mut table = PmfTable::with_options(cli.n_max, mode, cli.cache_dir.clone());

    match &cli.command {
        Command::Pmf { n } => cmd_pmf(&out, &mut table, *n),
        Command::Moments { n } => cmd_moments(&out, *n),
        Command::Toll { n } => cmd_toll(&out, *n),
        Command::Bn { max_n } => cmd_bn(&out, *max_n, mode),
        Command::Ledger { max_n } => cmd_ledger(&out, *max_n, mode),
        Command::CertifyD2 { n, seed_a, out: path } => {
            cmd_certify(&out, *n, *seed_a, path.as_deref(), mode)
        }
        Command::Dist {
            n,
            m,
            p,
            matrix_max,
            matrix_kind,
        } => cmd_dist(&out, &mut table, *n, *m, *p, *matrix_max, *matrix_kind, mode),
        Command::Simulate { n, reps, seed, out: path } => {
            cmd_simulate(&out, *n, *reps, *seed, path.as_deref(), budget, mode)
        }
        Command::Density {
            n,
            reps,
            seed,
            delta,
            mbar,
            mprime,
            grid_min,
            grid_max,
            points,
        } => cmd_density(
            &out, *n, *reps, *seed, *delta, *mbar, *mprime, *grid_min, *grid_max, *points,
            budget, mode,
        ),
        Command::FixedPoint { n, reps, seed } => {
            cmd_fixed_point(&out, &mut table, *n, *reps, *seed, budget)
        }
        Command::LocalLimit {
            n,
            density_n,
            reps,
            seed,
            mbar,
            mprime,
        } => cmd_local_limit(
            &out, &mut table, *n, *density_n, *reps, *seed, *mbar, *mprime, budget, mode,
        ),
        Command::Mgf { n, lambdas } => cmd_mgf(&out, &mut table, *n, lambdas.as_deref()),
        Command::Ldp { n, eps, lambda } => cmd_ldp(&out, &mut table, *n, *eps, *lambda),
        Command::Verify {
            suite,
            seed,
            sweep,
            toll_max,
            mc_reps,
            density_n,
            density_reps,
        } => cmd_verify(
            &out,
            suite,
            *seed,
            VerifyConfig {
                n_max: *sweep,
                pmf_cap: cli.n_max.max(*sweep),
                toll_max_n: *toll_max,
                seed: *seed,
                mode,
                density_n: *density_n,
                density_reps: *density_reps,
                mc_reps: *mc_reps,
                budget,
            },
        ),
    }
}

// ---------------------------------------------------------------------------
// subcommands
// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct PmfRecord<'a> {
    anchor: &'static str,
    mode: &'static str,
    pmf: &'a ComparisonPmf,
}

fn cmd_pmf(out: &Out, table: &mut PmfTable, n: usize) -> qslab::Result<bool> {
    let pmf = table.pmf(n)?;
    match out.format {
        Format::Json => out.json(&PmfRecord {
            anchor: "core.pmf",
            mode: "exact",
            pmf,
        })?,
        Format::Csv => {
            println!("k,mass");
            for (k, mass) in pmf.iter() {
                println!("{k},{}", format_rat(mass));
            }
        }
        Format::Table => {
            println!("law of the comparison count at n = {n} (exact)");
            for (k, mass) in pmf.iter() {
                println!("  P(X = {k:>5}) = {}", format_rat(mass));
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct MomentsRecord {
    anchor: &'static str,
    mode: &'static str,
    n: usize,
    mean: String,
    variance: String,
    mean_f64: f64,
    variance_f64: f64,
}

fn cmd_moments(out: &Out, n: usize) -> qslab::Result<bool> {
    let mean = mean_comparisons(n);
    let variance = variance_comparisons(n);
    let record = MomentsRecord {
        anchor: "core.moments",
        mode: "exact",
        n,
        mean: format_rat(&mean),
        variance: format_rat(&variance),
        mean_f64: to_f64(&mean),
        variance_f64: to_f64(&variance),
    };
    match out.format {
        Format::Json => out.json(&record)?,
        Format::Csv => {
            println!("n,mean,variance");
            println!("{n},{},{}", record.mean, record.variance);
        }
        Format::Table => {
            println!("n        = {n}");
            println!("mean     = {} ({})", record.mean, out.float(record.mean_f64));
            println!(
                "variance = {} ({})",
                record.variance,
                out.float(record.variance_f64)
            );
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct TollRow {
    i: usize,
    discrete: String,
    discrete_f64: f64,
    limit_at_midpoint: f64,
}

#[derive(Serialize)]
struct TollRecord {
    anchor: &'static str,
    mode: &'static str,
    n: usize,
    rows: Vec<TollRow>,
}

fn cmd_toll(out: &Out, n: usize) -> qslab::Result<bool> {
    let mu = MuTable::new(n.max(1));
    let rows: Vec<TollRow> = (1..=n)
        .map(|i| {
            let exact = c_discrete(&mu, n, i)?;
            Ok(TollRow {
                i,
                discrete_f64: to_f64(&exact),
                discrete: format_rat(&exact),
                limit_at_midpoint: c_limit(i as f64 / n as f64)?,
            })
        })
        .collect::<qslab::Result<_>>()?;
    let record = TollRecord {
        anchor: "toll.discrete",
        mode: "exact",
        n,
        rows,
    };
    match out.format {
        Format::Json => out.json(&record)?,
        Format::Csv => {
            println!("i,discrete,limit_at_i_over_n");
            for row in &record.rows {
                println!("{},{},{}", row.i, row.discrete, out.float(row.limit_at_midpoint));
            }
        }
        Format::Table => {
            println!("discrete toll at n = {n} (exact) vs limit toll");
            for row in &record.rows {
                println!(
                    "  i = {:>4}: {} ~ {}  |  C(i/n) = {}",
                    row.i,
                    row.discrete,
                    out.float(row.discrete_f64),
                    out.float(row.limit_at_midpoint)
                );
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct BnRecord {
    anchor: &'static str,
    mode: &'static str,
    rows: Vec<BnRow>,
}

#[derive(Serialize)]
struct BnRow {
    n: usize,
    b_n: f64,
    bound: f64,
}

fn cmd_bn(out: &Out, max_n: usize, mode: Parallelism) -> qslab::Result<bool> {
    let mu = MuTable::new(max_n.max(1));
    let rows: Vec<BnRow> = b_n_rows(&mu, max_n, mode)?
        .iter()
        .map(|r| BnRow {
            n: r.n,
            b_n: r.b_n(),
            bound: 6.63 / r.n as f64,
        })
        .collect();
    match out.format {
        Format::Json => out.json(&BnRecord {
            anchor: "toll.bn-table",
            mode: "float",
            rows,
        })?,
        _ => {
            println!("n,b_n,6.63/n");
            for row in &rows {
                println!("{},{},{}", row.n, out.float(row.b_n), out.float(row.bound));
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct LedgerRecord {
    anchor: &'static str,
    mode: &'static str,
    rows: Vec<LedgerRowOut>,
    vbar: f64,
    w: f64,
}

#[derive(Serialize)]
struct LedgerRowOut {
    n: usize,
    b_n: f64,
    abar: f64,
    sqrt_n_abar: f64,
}

fn cmd_ledger(out: &Out, max_n: usize, mode: Parallelism) -> qslab::Result<bool> {
    let mu = MuTable::new(max_n.max(1));
    let ledger = build_ledger(&mu, max_n, mode)?;
    let rows: Vec<LedgerRowOut> = ledger
        .rows()
        .iter()
        .map(|r| LedgerRowOut {
            n: r.n,
            b_n: r.b_n_squared.sqrt(),
            abar: r.abar,
            sqrt_n_abar: r.sqrt_n_abar(),
        })
        .collect();
    let (vbar, w) = ledger.partial_sums(max_n)?;
    match out.format {
        Format::Json => out.json(&LedgerRecord {
            anchor: "bounds.ledger",
            mode: "float",
            rows,
            vbar,
            w,
        })?,
        _ => {
            println!("n,b_n,abar_n,sqrt_n_abar_n");
            for row in &rows {
                println!(
                    "{},{},{},{}",
                    row.n,
                    out.float(row.b_n),
                    out.float(row.abar),
                    out.float(row.sqrt_n_abar)
                );
            }
            if out.format == Format::Table {
                println!("# Vbar_{max_n} = {}, W_{max_n} = {}", out.float(vbar), out.float(w));
            }
        }
    }
    Ok(true)
}

fn cmd_certify(
    out: &Out,
    n: usize,
    seed_a: f64,
    path: Option<&std::path::Path>,
    mode: Parallelism,
) -> qslab::Result<bool> {
    let mu = MuTable::new(n.max(1));
    let certificate = certify_d2(&mu, n, seed_a, mode)?;
    let json = serde_json::to_string_pretty(&certificate)?;
    if let Some(path) = path {
        std::fs::write(path, &json)?;
    }
    match out.format {
        Format::Json | Format::Csv => println!("{json}"),
        Format::Table => {
            println!("certificate at table size N = {n}, seed A = {seed_a}");
            println!(
                "  iterations: {}",
                certificate
                    .iterations
                    .iter()
                    .map(|a| format!("{a:.4}"))
                    .collect::<Vec<_>>()
                    .join(" -> ")
            );
            println!("  Vbar_N = {}", out.float(certificate.vbar_n));
            println!("  W_N    = {}", out.float(certificate.w_n));
            println!("  final A = {}", out.float(certificate.final_a));
            for check in &certificate.checks {
                println!(
                    "  [{}] {} (lhs {:.6}, rhs {:.6}, margin {:.6})",
                    if check.passed { "pass" } else { "FAIL" },
                    check.name,
                    check.lhs,
                    check.rhs,
                    check.margin
                );
            }
            println!(
                "  rate d_2(Y_n, Y) < 2/sqrt(n) established: {}",
                certificate.rate_established()
            );
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct DistRecord {
    anchor: &'static str,
    mode: &'static str,
    n: usize,
    m: usize,
    p: f64,
    dp: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    dp_power_exact: Option<String>,
    ks: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_exact: Option<String>,
}

#[allow(clippy::too_many_arguments)]
fn cmd_dist(
    out: &Out,
    table: &mut PmfTable,
    n: Option<usize>,
    m: Option<usize>,
    p: f64,
    matrix_max: Option<usize>,
    matrix_kind: MatrixKind,
    mode: Parallelism,
) -> qslab::Result<bool> {
    if let Some(max) = matrix_max {
        return dist_matrix(out, table, max, matrix_kind, mode);
    }
    let (n, m) = (n.expect("clap enforces"), m.expect("clap enforces"));
    let yn = DiscreteDistribution::from_normalized(&table.normalized(n, Scaling::Y)?);
    let ym = DiscreteDistribution::from_normalized(&table.normalized(m, Scaling::Y)?);
    let w = wasserstein_p(&yn, &ym, p)?;
    let ks = ks_distance(&yn, &ym);
    let record = DistRecord {
        anchor: "metrics.pair-distance",
        mode: if w.power_exact.is_some() { "exact" } else { "float" },
        n,
        m,
        p,
        dp: w.value,
        dp_power_exact: w.power_exact.as_ref().map(format_rat),
        ks: ks.value,
        ks_exact: ks.exact.as_ref().map(format_rat),
    };
    match out.format {
        Format::Json => out.json(&record)?,
        Format::Csv => {
            println!("n,m,p,dp,dp_power_exact,ks,ks_exact");
            println!(
                "{n},{m},{p},{},{},{},{}",
                out.float(record.dp),
                record.dp_power_exact.as_deref().unwrap_or(""),
                out.float(record.ks),
                record.ks_exact.as_deref().unwrap_or("")
            );
        }
        Format::Table => {
            println!("distances between Y_{n} and Y_{m}:");
            match &record.dp_power_exact {
                Some(exact) => println!("  d_{p}^{p} = {exact} (d_{p} = {})", out.float(record.dp)),
                None => println!("  d_{p} = {}", out.float(record.dp)),
            }
            match &record.ks_exact {
                Some(exact) => println!("  ks = {exact} ({})", out.float(record.ks)),
                None => println!("  ks = {}", out.float(record.ks)),
            }
        }
    }
    Ok(true)
}

fn dist_matrix(
    out: &Out,
    table: &mut PmfTable,
    max: usize,
    kind: MatrixKind,
    mode: Parallelism,
) -> qslab::Result<bool> {
    let sizes: Vec<usize> = (2..=max).collect();
    let laws: Vec<DiscreteDistribution> = sizes
        .iter()
        .map(|&n| Ok(DiscreteDistribution::from_normalized(&table.normalized(n, Scaling::Y)?)))
        .collect::<qslab::Result<_>>()?;
    let header = sizes
        .iter()
        .map(|n| n.to_string())
        .collect::<Vec<_>>()
        .join(",");
    match kind {
        MatrixKind::D2sq => {
            let matrix = qslab::metrics::pairwise_d2_squared(&laws, mode)?;
            println!("d2sq,{header}");
            for (i, row) in matrix.iter().enumerate() {
                let cells = row.iter().map(format_rat).collect::<Vec<_>>().join(",");
                println!("{},{cells}", sizes[i]);
            }
        }
        MatrixKind::Ks => {
            let matrix = qslab::metrics::pairwise_ks(&laws, mode);
            println!("ks,{header}");
            for (i, row) in matrix.iter().enumerate() {
                let cells = row
                    .iter()
                    .map(|v| out.float(*v))
                    .collect::<Vec<_>>()
                    .join(",");
                println!("{},{cells}", sizes[i]);
            }
        }
    }
    Ok(true)
}

fn cmd_simulate(
    out: &Out,
    n: usize,
    reps: u64,
    seed: u64,
    path: Option<&std::path::Path>,
    budget: SampleBudget,
    mode: Parallelism,
) -> qslab::Result<bool> {
    let batch = sample_path_lengths(n, reps, seed, budget, mode)?;
    let record = batch.record();
    let json = serde_json::to_string_pretty(&record)?;
    if let Some(path) = path {
        std::fs::write(path, &json)?;
    }
    match out.format {
        Format::Json | Format::Csv => println!("{json}"),
        Format::Table => {
            println!("batch n = {n}, reps = {reps}, seed = {seed} ({})", record.generator_name);
            println!("  mean count = {}", out.float(batch.mean()));
            println!(
                "  support    = [{}, {}]",
                batch.counts.iter().min().unwrap(),
                batch.counts.iter().max().unwrap()
            );
            println!("  distinct   = {}", record.counts_histogram.len());
        }
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_density(
    out: &Out,
    n: usize,
    reps: u64,
    seed: u64,
    delta: Option<f64>,
    mbar: f64,
    mprime: f64,
    grid_min: f64,
    grid_max: f64,
    points: usize,
    budget: SampleBudget,
    mode: Parallelism,
) -> qslab::Result<bool> {
    if n == 0 {
        return Err(Error::IndexOutOfRange {
            name: "n",
            value: 0,
            lo: 1,
            hi: usize::MAX,
        });
    }
    let batch = sample_path_lengths(n, reps, seed, budget, mode)?;
    let cdf = EmpiricalCdf::from_batch(&batch);
    let delta = match delta {
        Some(d) => d,
        None => delta_star(n, mbar, mprime)?,
    };
    let grid: Vec<f64> = if points < 2 {
        vec![grid_min]
    } else {
        (0..points)
            .map(|i| grid_min + (grid_max - grid_min) * i as f64 / (points as f64 - 1.0))
            .collect()
    };
    let estimate = density_window(&cdf, &grid, delta, mbar, mprime)?;
    match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct DensityRecord<'a> {
                anchor: &'static str,
                mode: &'static str,
                seed: u64,
                reps: u64,
                integral: f64,
                max_value: f64,
                estimate: &'a qslab::simulate::DensityEstimate,
            }
            out.json(&DensityRecord {
                anchor: "density.window",
                mode: "monte-carlo",
                seed,
                reps,
                integral: estimate.integral(),
                max_value: estimate.max_value(),
                estimate: &estimate,
            })?;
        }
        _ => {
            println!("x,f_hat,error_bound,delta,n,reps,seed");
            for (x, v) in estimate.grid.iter().zip(&estimate.values) {
                println!(
                    "{},{},{},{},{n},{reps},{seed}",
                    out.float(*x),
                    out.float(*v),
                    out.float(estimate.error_bound),
                    out.float(delta)
                );
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct FixedPointRecord {
    anchor: &'static str,
    mode: &'static str,
    surrogate_n: usize,
    reps: u64,
    seed: u64,
    residual: f64,
}

fn cmd_fixed_point(
    out: &Out,
    table: &mut PmfTable,
    n: usize,
    reps: u64,
    seed: u64,
    budget: SampleBudget,
) -> qslab::Result<bool> {
    let surrogate = DiscreteDistribution::from_normalized(&table.normalized(n, Scaling::Y)?);
    let residual = fixed_point_residual(&surrogate, reps, seed, budget)?;
    let record = FixedPointRecord {
        anchor: "fixedpoint.residual",
        mode: "monte-carlo",
        surrogate_n: n,
        reps,
        seed,
        residual,
    };
    match out.format {
        Format::Json => out.json(&record)?,
        Format::Csv => {
            println!("surrogate_n,reps,seed,residual");
            println!("{n},{reps},{seed},{}", out.float(residual));
        }
        Format::Table => println!(
            "fixed-point residual at surrogate Y_{n} (reps {reps}, seed {seed}): {}",
            out.float(residual)
        ),
    }
    Ok(true)
}

#[allow(clippy::too_many_arguments)]
fn cmd_local_limit(
    out: &Out,
    table: &mut PmfTable,
    n: usize,
    density_n: usize,
    reps: u64,
    seed: u64,
    mbar: f64,
    mprime: f64,
    budget: SampleBudget,
    mode: Parallelism,
) -> qslab::Result<bool> {
    let batch = sample_path_lengths(density_n, reps, seed, budget, mode)?;
    let cdf = EmpiricalCdf::from_batch(&batch);
    let delta = delta_star(density_n, mbar, mprime)?;
    let estimate = density_window(&cdf, &default_grid(), delta, mbar, mprime)?;
    let probe = local_limit_probe(table.pmf(n)?, &estimate);
    match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct ProbeRecord<'a> {
                anchor: &'static str,
                mode: &'static str,
                seed: u64,
                density_n: usize,
                probe: &'a qslab::simulate::LocalLimitProbe,
            }
            out.json(&ProbeRecord {
                anchor: "limit.local-limit-probe",
                mode: "monte-carlo",
                seed,
                density_n,
                probe: &probe,
            })?;
        }
        _ => {
            println!("k,scaled_mass,density_value,gap");
            for row in &probe.rows {
                println!(
                    "{},{},{},{}",
                    row.k,
                    out.float(row.scaled_mass),
                    out.float(row.density_value),
                    out.float(row.gap)
                );
            }
            if out.format == Format::Table {
                println!("# max |gap| = {} (diagnostic only)", out.float(probe.max_abs_gap));
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct MgfRow {
    lambda: f64,
    n: usize,
    exact_mgf: f64,
    limit_bound_ln: f64,
    scaled_bound_ln: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    direct_bound_ln: Option<f64>,
    ln_margin: f64,
}

fn cmd_mgf(
    out: &Out,
    table: &mut PmfTable,
    n: usize,
    lambdas: Option<&[f64]>,
) -> qslab::Result<bool> {
    let grid: Vec<f64> = lambdas
        .map(|l| l.to_vec())
        .unwrap_or_else(|| LAMBDA_GRID.to_vec());
    let yn = table.normalized(n, Scaling::Y)?;
    let limit_bound = PiecewiseMgfBound::limit_law();
    let direct_bound = PiecewiseMgfBound::unscaled_finite_n();
    let rows: Vec<MgfRow> = grid
        .iter()
        .map(|&lambda| {
            let value = exact_mgf(&yn, lambda)?;
            let scaled = scaled_bound_ln(&limit_bound, n, lambda);
            Ok(MgfRow {
                lambda,
                n,
                exact_mgf: value,
                limit_bound_ln: limit_bound.ln_value(lambda),
                scaled_bound_ln: scaled,
                direct_bound_ln: (lambda >= -0.58).then(|| direct_bound.ln_value(lambda)),
                ln_margin: scaled - value.ln(),
            })
        })
        .collect::<qslab::Result<_>>()?;
    match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct MgfRecord {
                anchor: &'static str,
                mode: &'static str,
                rows: Vec<MgfRow>,
            }
            out.json(&MgfRecord {
                anchor: "mgf.curve",
                mode: "float",
                rows,
            })?;
        }
        _ => {
            println!("lambda,n,exact_mgf,limit_bound_ln,scaled_bound_ln,direct_bound_ln,ln_margin");
            for row in &rows {
                println!(
                    "{},{},{},{},{},{},{}",
                    row.lambda,
                    row.n,
                    out.float(row.exact_mgf),
                    out.float(row.limit_bound_ln),
                    out.float(row.scaled_bound_ln),
                    row.direct_bound_ln
                        .map(|v| out.float(v))
                        .unwrap_or_default(),
                    out.float(row.ln_margin)
                );
            }
        }
    }
    Ok(true)
}

#[derive(Serialize)]
struct LdpRecord {
    anchor: &'static str,
    mode: &'static str,
    n: usize,
    eps: f64,
    lambda: f64,
    bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact_tail: Option<f64>,
}

fn cmd_ldp(
    out: &Out,
    table: &mut PmfTable,
    n: usize,
    eps: f64,
    lambda: Option<f64>,
) -> qslab::Result<bool> {
    let (lambda, bound) = match lambda {
        Some(l) => (l, large_dev_bound(n, eps, l)?),
        None => ((n as f64).ln().ln(), large_dev_bound_auto(n, eps)?),
    };
    let exact_tail = if n <= table.n_max() {
        Some(to_f64(&table.pmf(n)?.tail_two_sided(eps)))
    } else {
        None
    };
    let record = LdpRecord {
        anchor: "mgf.large-deviation",
        mode: "float",
        n,
        eps,
        lambda,
        bound,
        exact_tail,
    };
    match out.format {
        Format::Json => out.json(&record)?,
        Format::Csv => {
            println!("n,eps,lambda,bound,exact_tail");
            println!(
                "{n},{eps},{lambda},{},{}",
                out.float(bound),
                exact_tail.map(|t| out.float(t)).unwrap_or_default()
            );
        }
        Format::Table => {
            println!("tail bound P(|X_n - mu_n| >= eps mu_n) at n = {n}, eps = {eps}:");
            println!("  lambda = {}", out.float(lambda));
            println!("  bound  = {}", out.float(bound));
            if let Some(tail) = exact_tail {
                println!("  exact  = {} (from the pmf)", out.float(tail));
            }
        }
    }
    Ok(true)
}

fn cmd_verify(
    out: &Out,
    suite: &str,
    seed: Option<u64>,
    cfg: VerifyConfig,
) -> qslab::Result<bool> {
    let suite: Suite = suite.parse()?;
    let results = run_suite(suite, &cfg)?;
    let passed = all_passed(&results);
    match out.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Report<'a> {
                anchor: &'static str,
                suite: String,
                passed: bool,
                #[serde(skip_serializing_if = "Option::is_none")]
                seed: Option<u64>,
                checks: &'a [qslab::verify::CheckResult],
            }
            out.json(&Report {
                anchor: "verify.report",
                suite: suite.to_string(),
                passed,
                seed,
                checks: &results,
            })?;
        }
        Format::Csv => {
            println!("id,kind,passed,mode,seed,observed,requirement");
            for r in &results {
                println!(
                    "{},{:?},{},{},{},{},{}",
                    r.id,
                    r.kind,
                    r.passed,
                    r.mode,
                    r.seed.map(|s| s.to_string()).unwrap_or_default(),
                    csv_escape(&r.observed),
                    csv_escape(&r.requirement)
                );
            }
        }
        Format::Table => {
            for r in &results {
                let tag = match (r.kind, r.passed) {
                    (CheckKind::Diagnostic, _) => "info",
                    (CheckKind::Assert, true) => "pass",
                    (CheckKind::Assert, false) => "FAIL",
                };
                println!("[{tag}] {:<42} {} ({})", r.id, r.observed, r.requirement);
            }
            println!(
                "suite '{suite}': {} checks, {}",
                results.len(),
                if passed { "all assertions passed" } else { "FAILURES present" }
            );
        }
    }
    Ok(passed)
}

fn csv_escape(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
