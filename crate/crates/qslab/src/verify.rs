//! Named verification checks over every module, grouped into suites.
//!
//! Each check pins its tolerance in code and reports an observed value, a
//! requirement, and an evaluation mode. `Assert` checks gate the acceptance
//! suite and the CLI exit status; `Diagnostic` checks are reported only
//! (open questions and conjectures stay non-failing by design).

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::consts::{sigma, toll_error_coefficient, toll_error_coefficient_sq, SIGMA_SQ};
use crate::error::Error;
use crate::exact::{
    harmonic, mean_comparisons, mean_sandwich_violation, variance_comparisons,
    variance_expansion_excess, HarmonicTable, MuTable, PmfTable, Scaling,
};
use crate::ledger::{build_ledger, build_ledger_with, certify_d2, Recursion};
use crate::metrics::{
    convolve, integer_mass_lower, ks_distance, ks_from_dp, lattice_ks_lower, moment_norm,
    wasserstein_p, DiscreteDistribution,
};
use crate::mgf::{
    exact_mgf, global_envelope_ln, large_dev_bound, mean_ratio_lower_holds, mgf_curve,
    mgf_rate_bound, scaled_bound_ln, solve_l0, solve_l0_in, PiecewiseMgfBound, LAMBDA_GRID,
};
use crate::rational::{self, to_f64, to_f64_bounds, BigRational};
use crate::simulate::{
    default_grid, delta_star, density_error_terms, density_window, exhaustive_law,
    fixed_point_residual, local_limit_probe, martingale_increment_check, sample_path_lengths,
    EmpiricalCdf, SampleBudget,
};
use crate::toll::{b_n_rows, c_discrete};
use crate::{quad, Parallelism, Result};

/// Largest observed `n |Var Y_n - sigma^2 + 2 ln n / n|`; the sweep tends to
/// `17 - 2 gamma - 4 pi^2 / 3 ~= 2.69` from below, frozen with headroom.
pub const VARIANCE_EXPANSION_BAND: f64 = 3.0;

/// Frozen band for `n (sigma - sd Y_n) - ln n / sigma`; the sweep drifts from
/// -0.22 at n = 3 toward about -2.07.
pub const VARIANCE_GAP_BAND: (f64, f64) = (-2.5, 0.0);

/// Check suites, mirroring the CLI `verify --suite` argument.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Core,
    Bounds,
    Metrics,
    Limit,
    Mgf,
    All,
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "bounds" => Ok(Suite::Bounds),
            "metrics" => Ok(Suite::Metrics),
            "limit" => Ok(Suite::Limit),
            "mgf" => Ok(Suite::Mgf),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidDistribution(format!(
                "unknown suite '{other}' (expected core|bounds|metrics|limit|mgf|all)"
            ))),
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Suite::Core => "core",
            Suite::Bounds => "bounds",
            Suite::Metrics => "metrics",
            Suite::Limit => "limit",
            Suite::Mgf => "mgf",
            Suite::All => "all",
        };
        write!(f, "{name}")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvalMode {
    Exact,
    Float,
    MonteCarlo,
}

impl fmt::Display for EvalMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalMode::Exact => write!(f, "exact"),
            EvalMode::Float => write!(f, "float"),
            EvalMode::MonteCarlo => write!(f, "monte-carlo"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    Assert,
    Diagnostic,
}

/// Outcome of a single named check.
#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub id: String,
    pub kind: CheckKind,
    pub passed: bool,
    pub observed: String,
    pub requirement: String,
    pub mode: EvalMode,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl CheckResult {
    fn assert(id: &str, mode: EvalMode, passed: bool, observed: String, requirement: &str) -> Self {
        CheckResult {
            id: id.to_string(),
            kind: CheckKind::Assert,
            passed,
            observed,
            requirement: requirement.to_string(),
            mode,
            seed: None,
        }
    }

    fn diagnostic(id: &str, mode: EvalMode, observed: String, requirement: &str) -> Self {
        CheckResult {
            id: id.to_string(),
            kind: CheckKind::Diagnostic,
            passed: true,
            observed,
            requirement: requirement.to_string(),
            mode,
            seed: None,
        }
    }

    fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

/// True when every `Assert` check passed.
pub fn all_passed(results: &[CheckResult]) -> bool {
    results
        .iter()
        .all(|r| r.kind == CheckKind::Diagnostic || r.passed)
}

/// Configuration for a verification run; defaults match the acceptance
/// criteria.
#[derive(Clone, Debug)]
pub struct VerifyConfig {
    /// Sweep limit for the exact-law, metric, and MGF checks.
    pub n_max: usize,
    /// Cap of the pmf table (also the surrogate size for the KS ladder).
    pub pmf_cap: usize,
    /// Sweep limit for the toll-error bound.
    pub toll_max_n: usize,
    /// Required for the Monte Carlo suite; no implicit entropy.
    pub seed: Option<u64>,
    pub mode: Parallelism,
    pub density_n: usize,
    pub density_reps: u64,
    pub mc_reps: u64,
    pub budget: SampleBudget,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            n_max: 40,
            pmf_cap: 50,
            toll_max_n: 1000,
            seed: None,
            mode: Parallelism::Auto,
            density_n: 10_000,
            density_reps: 100_000,
            mc_reps: 100_000,
            budget: SampleBudget::default(),
        }
    }
}

struct Ctx<'a> {
    cfg: &'a VerifyConfig,
    table: PmfTable,
    mu: MuTable,
}

impl<'a> Ctx<'a> {
    fn new(cfg: &'a VerifyConfig) -> Self {
        Ctx {
            cfg,
            table: PmfTable::with_options(cfg.pmf_cap.max(cfg.n_max), cfg.mode, None),
            mu: MuTable::new(cfg.toll_max_n.max(100)),
        }
    }

    fn y_law(&mut self, n: usize) -> Result<DiscreteDistribution> {
        Ok(DiscreteDistribution::from_normalized(
            &self.table.normalized(n, Scaling::Y)?,
        ))
    }
}

/// Runs one suite and returns its check results.
pub fn run_suite(suite: Suite, cfg: &VerifyConfig) -> Result<Vec<CheckResult>> {
    let mut ctx = Ctx::new(cfg);
    let mut out = Vec::new();
    match suite {
        Suite::Core => core_suite(&mut ctx, &mut out)?,
        Suite::Bounds => bounds_suite(&mut ctx, &mut out)?,
        Suite::Metrics => metrics_suite(&mut ctx, &mut out)?,
        Suite::Limit => limit_suite(&mut ctx, &mut out)?,
        Suite::Mgf => mgf_suite(&mut ctx, &mut out)?,
        Suite::All => {
            core_suite(&mut ctx, &mut out)?;
            bounds_suite(&mut ctx, &mut out)?;
            metrics_suite(&mut ctx, &mut out)?;
            limit_suite(&mut ctx, &mut out)?;
            mgf_suite(&mut ctx, &mut out)?;
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// core: the exact law
// ---------------------------------------------------------------------------

fn core_suite(ctx: &mut Ctx, out: &mut Vec<CheckResult>) -> Result<()> {
    let n_max = ctx.cfg.n_max;

    let mut mass_ok = true;
    let mut mean_ok = true;
    let mut var_ok = true;
    let mut support_ok = true;
    let mut sd_ok = true;
    for n in 1..=n_max {
        let pmf = ctx.table.pmf(n)?;
        mass_ok &= pmf.mass_sum() == rational::rat_int(1);
        mean_ok &= pmf.mean() == mean_comparisons(n);
        var_ok &= pmf.variance() == variance_comparisons(n);
        support_ok &= pmf.k_max() <= (n * n.saturating_sub(1) / 2) as u64;
        let var_y = variance_comparisons(n) / rational::rat_int((n * n) as i64);
        sd_ok &= to_f64_bounds(&var_y).1 < SIGMA_SQ;
    }
    out.push(CheckResult::assert(
        "core.mass-sum",
        EvalMode::Exact,
        mass_ok,
        format!("all n <= {n_max}"),
        "pmf masses sum to exactly 1",
    ));
    out.push(CheckResult::assert(
        "core.mean-closed-form",
        EvalMode::Exact,
        mean_ok,
        format!("all n <= {n_max}"),
        "pmf mean equals 2(n+1)H_n - 4n exactly",
    ));
    out.push(CheckResult::assert(
        "core.variance-closed-form",
        EvalMode::Exact,
        var_ok,
        format!("all n <= {n_max}"),
        "pmf variance equals 7n^2 - 4(n+1)^2 H2_n - 2(n+1)H_n + 13n exactly",
    ));
    out.push(CheckResult::assert(
        "core.support-range",
        EvalMode::Exact,
        support_ok,
        format!("all n <= {n_max}"),
        "support contained in [0, n(n-1)/2]",
    ));
    out.push(CheckResult::assert(
        "core.sd-below-sigma",
        EvalMode::Float,
        sd_ok,
        format!("all n <= {n_max}"),
        "sd(Y_n) strictly below sigma",
    ));

    let (h100, _) = harmonic(100)?;
    let (h_lo, h_hi) = to_f64_bounds(&h100);
    let window_lo = 100.0f64.ln() + crate::consts::EULER_GAMMA;
    out.push(CheckResult::assert(
        "core.harmonic-log-window",
        EvalMode::Float,
        h_hi >= window_lo && h_lo <= window_lo + 1.0 / 200.0,
        format!("H_100 = {}", to_f64(&h100)),
        "ln n + gamma <= H_n <= ln n + gamma + 1/(2n) at n = 100",
    ));

    let table = HarmonicTable::new(n_max + 1);
    let shifted_form_ok = (1..=n_max).all(|n| {
        let alt = rational::rat_int(2) * rational::rat_int(n as i64 + 1) * table.h(n + 1)
            - rational::rat_int(4 * n as i64)
            - rational::rat_int(2);
        mean_comparisons(n) == alt
    });
    out.push(CheckResult::assert(
        "core.mean-shifted-form",
        EvalMode::Exact,
        shifted_form_ok,
        format!("all n <= {n_max}"),
        "2(n+1)H_n - 4n equals 2(n+1)H_{n+1} - 4n - 2",
    ));

    let sandwich = mean_sandwich_violation(10_000, 1e-9);
    out.push(CheckResult::assert(
        "core.mean-sandwich",
        EvalMode::Float,
        sandwich.is_none(),
        match sandwich {
            None => "no violation for n <= 10^4".to_string(),
            Some(n) => format!("violated at n = {n}"),
        },
        "logarithmic sandwich bounds on mu_n and mu_{n-1}, slack 1e-9",
    ));

    let excess = variance_expansion_excess(n_max);
    out.push(CheckResult::assert(
        "core.variance-expansion-band",
        EvalMode::Float,
        excess <= VARIANCE_EXPANSION_BAND,
        format!("max n|Var Y_n - sigma^2 + 2 ln n / n| = {excess:.4}"),
        "stays below the frozen band 3.0",
    ));

    Ok(())
}

// ---------------------------------------------------------------------------
// bounds: toll errors and the rate certificate
// ---------------------------------------------------------------------------

fn bounds_suite(ctx: &mut Ctx, out: &mut Vec<CheckResult>) -> Result<()> {
    let toll_max = ctx.cfg.toll_max_n;

    // quadrature identities behind the toll-error bound, tolerance 1e-8
    let quad_cases: [(&str, f64, f64); 4] = [
        (
            "toll.quad-log-square",
            quad::integrate_01(|x, _| x.ln() * x.ln(), 1e-10),
            2.0,
        ),
        (
            "toll.quad-log-cross",
            quad::integrate_01(|x, omx| x.ln() * omx.ln(), 1e-10),
            2.0 - std::f64::consts::PI.powi(2) / 6.0,
        ),
        (
            "toll.quad-toll-derivative-square",
            quad::integrate_01(
                |x, omx| {
                    let d = 2.0 * x.ln() - 2.0 * omx.ln();
                    d * d
                },
                1e-10,
            ),
            4.0 * std::f64::consts::PI.powi(2) / 3.0,
        ),
        (
            "toll.quad-toll-square",
            quad::integrate_01(
                |x, omx| {
                    let c = 2.0 * x * x.ln() + 2.0 * omx * omx.ln() + 1.0;
                    c * c
                },
                1e-10,
            ),
            SIGMA_SQ / 3.0,
        ),
    ];
    for (id, got, want) in quad_cases {
        out.push(CheckResult::assert(
            id,
            EvalMode::Float,
            (got - want).abs() <= 1e-8,
            format!("quadrature {got:.12} vs {want:.12}"),
            "agreement to 1e-8",
        ));
    }

    let rows = b_n_rows(&ctx.mu, toll_max, ctx.cfg.mode)?;
    let coeff = toll_error_coefficient();
    let worst = rows
        .iter()
        .map(|r| r.n as f64 * r.b_n())
        .fold(0.0, f64::max);
    out.push(CheckResult::assert(
        "toll.lemma-bound",
        EvalMode::Float,
        rows.iter().all(|r| r.b_n() <= r.lemma_bound),
        format!("max n b_n = {worst:.4} over n <= {toll_max}"),
        "n b_n <= 3 + 2 pi / sqrt(3) < 6.63",
    ));
    let _ = coeff;

    let mut toll_sym = true;
    for n in 1..=100usize {
        let mut sum = BigRational::from_integer(0.into());
        for i in 1..=n {
            let c = c_discrete(&ctx.mu, n, i)?;
            toll_sym &= c == c_discrete(&ctx.mu, n, n + 1 - i)?;
            sum += c;
        }
        toll_sym &= sum == rational::rat_int(0);
    }
    out.push(CheckResult::assert(
        "toll.symmetry-and-mean-zero",
        EvalMode::Exact,
        toll_sym,
        "all n <= 100".to_string(),
        "C_n(i) = C_n(n+1-i) and sum_i C_n(i) = 0 exactly",
    ));

    // the certificate pipeline at table size 100
    let ledger = build_ledger(&ctx.mu, 100, ctx.cfg.mode)?;
    let (vbar, w) = ledger.partial_sums(100)?;
    out.push(CheckResult::assert(
        "bounds.vbar-100",
        EvalMode::Float,
        (vbar - 1.1995).abs() <= 5e-5,
        format!("Vbar_100 = {vbar:.6}"),
        "1.1995 within 5e-5",
    ));
    out.push(CheckResult::assert(
        "bounds.w-100",
        EvalMode::Float,
        (w - 0.3466).abs() <= 5e-5,
        format!("W_100 = {w:.6}"),
        "0.3466 within 5e-5",
    ));
    let refined_8 = ledger.refine_constant(100, 8.0)?;
    out.push(CheckResult::assert(
        "bounds.refine-from-8",
        EvalMode::Float,
        (refined_8 - 2.3332).abs() <= 5e-5,
        format!("refined = {refined_8:.6}"),
        "2.3332 within 5e-5",
    ));
    let refined_234 = ledger.refine_constant(100, 2.34)?;
    out.push(CheckResult::assert(
        "bounds.refine-from-2.34",
        EvalMode::Float,
        (refined_234 - 1.9976).abs() <= 5e-5,
        format!("refined = {refined_234:.6}"),
        "1.9976 within 5e-5",
    ));
    let last = ledger.rows()[99].sqrt_n_abar();
    out.push(CheckResult::assert(
        "bounds.sqrt100-abar",
        EvalMode::Float,
        (last - 1.6018).abs() <= 1e-4,
        format!("sqrt(100) abar_100 = {last:.6}"),
        "1.6018 within 1e-4",
    ));
    let cap = ledger.max_sqrt_n_abar();
    out.push(CheckResult::assert(
        "bounds.abar-cap",
        EvalMode::Float,
        cap < 1.7,
        format!("max sqrt(n) abar_n = {cap:.6}"),
        "below 1.7 for n <= 100",
    ));

    let cert = certify_d2(&ctx.mu, 100, 8.0, ctx.cfg.mode)?;
    out.push(CheckResult::assert(
        "bounds.certificate-rate",
        EvalMode::Float,
        cert.rate_established(),
        format!(
            "final A = {:.6} after {} refinements",
            cert.final_a,
            cert.iterations.len() - 1
        ),
        "final coefficient below 2, certifying d_2(Y_n, Y) < 2/sqrt(n)",
    ));

    let alt = build_ledger_with(&ctx.mu, 200.min(toll_max), ctx.cfg.mode, Recursion::Raw)?;
    let main = build_ledger(&ctx.mu, 200.min(toll_max), ctx.cfg.mode)?;
    let max_gap = main
        .rows()
        .iter()
        .zip(alt.rows())
        .map(|(a, b)| (a.abar - b.abar).abs())
        .fold(0.0, f64::max);
    out.push(CheckResult::assert(
        "bounds.recursion-equivalence",
        EvalMode::Float,
        max_gap <= 1e-12,
        format!("max |abar difference| = {max_gap:.2e}"),
        "raw and telescoped recursions agree to 1e-12",
    ));

    out.push(CheckResult::assert(
        "bounds.toll-coefficient-sq",
        EvalMode::Float,
        toll_error_coefficient_sq() < 44.0,
        format!("(3 + 2 pi/sqrt 3)^2 = {:.6}", toll_error_coefficient_sq()),
        "strictly below 44",
    ));

    // table soundness against brute force: abar_n + 2/sqrt(m) dominates the
    // computable d_2(Y_n, Y_m) through the triangle inequality
    let mut sound = true;
    let mut worst_margin = f64::INFINITY;
    for n in 1..=12usize {
        let yn = ctx.y_law(n)?;
        for m in 1..=ctx.cfg.pmf_cap {
            let ym = ctx.y_law(m)?;
            let d2 = wasserstein_p(&yn, &ym, 2.0)?.value;
            let allowance = ledger.abar(n) + 2.0 / (m as f64).sqrt();
            worst_margin = worst_margin.min(allowance - d2);
            sound &= d2 <= allowance;
        }
    }
    out.push(CheckResult::assert(
        "bounds.table-vs-bruteforce",
        EvalMode::Float,
        sound,
        format!("min margin = {worst_margin:.4}"),
        "abar_n + 2/sqrt(m) >= d_2(Y_n, Y_m) for n <= 12, m <= cap",
    ));

    Ok(())
}

// ---------------------------------------------------------------------------
// metrics: couplings and the KS ladder
// ---------------------------------------------------------------------------

fn metrics_suite(ctx: &mut Ctx, out: &mut Vec<CheckResult>) -> Result<()> {
    let n_max = ctx.cfg.n_max;
    let cap = ctx.cfg.pmf_cap;

    let y3 = ctx.y_law(3)?;
    let y4 = ctx.y_law(4)?;
    let d2_sq = wasserstein_p(&y3, &y4, 2.0)?.power_exact.unwrap();
    out.push(CheckResult::assert(
        "metrics.d2-y3-y4",
        EvalMode::Exact,
        d2_sq == rational::rat(149, 5184),
        format!("d_2(Y_3, Y_4)^2 = {}", rational::format_rat(&d2_sq)),
        "equals 149/5184 exactly",
    ));

    let y2 = ctx.y_law(2)?;
    let mut second_moment_ok = true;
    for m in 1..=n_max {
        let ym = ctx.y_law(m)?;
        let d = wasserstein_p(&y2, &ym, 2.0)?.power_exact.unwrap();
        let variance = ctx.table.normalized(m, Scaling::Y)?.variance();
        second_moment_ok &= d == variance;
    }
    out.push(CheckResult::assert(
        "metrics.d2-vs-point-mass",
        EvalMode::Exact,
        second_moment_ok,
        format!("all m <= {n_max}"),
        "d_2(Y_2, Y_m)^2 equals Var Y_m exactly",
    ));

    let mut monotone_ok = true;
    for n in 2..=12usize {
        let yn = ctx.y_law(n)?;
        for m in 2..=12usize {
            let ym = ctx.y_law(m)?;
            let mut prev = 0.0;
            for p in [1.0, 2.0, 3.0, 4.0] {
                let value = wasserstein_p(&yn, &ym, p)?.value;
                monotone_ok &= value >= prev - 1e-12;
                prev = value;
            }
        }
    }
    out.push(CheckResult::assert(
        "metrics.dp-monotone-in-p",
        EvalMode::Float,
        monotone_ok,
        "pairs n, m <= 12, p in {1,2,3,4}".to_string(),
        "d_p nondecreasing in p",
    ));

    // triangle inequalities on the exact laws
    let laws: Vec<DiscreteDistribution> =
        (1..=12).map(|n| ctx.y_law(n)).collect::<Result<_>>()?;
    let mut d2_matrix = vec![vec![0.0f64; laws.len()]; laws.len()];
    let mut ks_matrix: Vec<Vec<BigRational>> =
        vec![vec![rational::rat_int(0); laws.len()]; laws.len()];
    for i in 0..laws.len() {
        for j in 0..laws.len() {
            d2_matrix[i][j] = wasserstein_p(&laws[i], &laws[j], 2.0)?.value;
            ks_matrix[i][j] = ks_distance(&laws[i], &laws[j]).exact.unwrap();
        }
    }
    let mut triangle_d2 = true;
    let mut triangle_ks = true;
    for i in 0..laws.len() {
        for j in 0..laws.len() {
            for k in 0..laws.len() {
                triangle_d2 &= d2_matrix[i][j] <= d2_matrix[i][k] + d2_matrix[k][j] + 1e-12;
                let sum = &ks_matrix[i][k] + &ks_matrix[k][j];
                triangle_ks &= ks_matrix[i][j] <= sum;
            }
        }
    }
    out.push(CheckResult::assert(
        "metrics.triangle-d2",
        EvalMode::Float,
        triangle_d2,
        "all triples n, m, l <= 12".to_string(),
        "d_2 triangle inequality",
    ));
    out.push(CheckResult::assert(
        "metrics.triangle-ks",
        EvalMode::Exact,
        triangle_ks,
        "all triples n, m, l <= 12".to_string(),
        "KS triangle inequality in exact arithmetic",
    ));

    // independent three-term moment bound, brute-forced by convolution
    let small: Vec<DiscreteDistribution> =
        (2..=4).map(|n| ctx.y_law(n)).collect::<Result<_>>()?;
    let mut three_term = true;
    for z1 in &small {
        for z2 in &small {
            for z3 in &small {
                let sum_law = convolve(&convolve(z1, z2), z3);
                for p in [2.0f64, 3.0, 4.0] {
                    let lhs = moment_norm(&sum_law, p)?.powf(p);
                    let rhs = moment_norm(z1, p)?.powf(p)
                        + moment_norm(z2, p)?.powf(p)
                        + (moment_norm(z1, p - 1.0)?
                            + moment_norm(z2, p - 1.0)?
                            + moment_norm(z3, p)?)
                        .powf(p);
                    three_term &= lhs <= rhs + 1e-9 * rhs;
                }
            }
        }
    }
    out.push(CheckResult::assert(
        "metrics.three-term-moment-bound",
        EvalMode::Float,
        three_term,
        "triples from {Y_2, Y_3, Y_4}, p in {2,3,4}".to_string(),
        "E|Z1+Z2+Z3|^p below the independence bound (convolution oracle)",
    ));

    let c_star_lower = sigma() * 2.0f64.sqrt();
    out.push(CheckResult::assert(
        "metrics.rate-constant-lower",
        EvalMode::Float,
        c_star_lower > 0.9168,
        format!("sigma sqrt(2) = {c_star_lower:.6}"),
        "exceeds 0.9168, so the rate constant 2 is within about 2x of optimal",
    ));

    let mut band_lo = f64::INFINITY;
    let mut band_hi = f64::NEG_INFINITY;
    for n in 3..=n_max {
        let var_y = to_f64(&variance_comparisons(n)) / (n * n) as f64;
        let dev = n as f64 * (sigma() - var_y.sqrt()) - (n as f64).ln() / sigma();
        band_lo = band_lo.min(dev);
        band_hi = band_hi.max(dev);
    }
    out.push(CheckResult::assert(
        "metrics.variance-gap-band",
        EvalMode::Float,
        band_lo >= VARIANCE_GAP_BAND.0 && band_hi <= VARIANCE_GAP_BAND.1,
        format!("n(sigma - sd Y_n) - ln n / sigma in [{band_lo:.3}, {band_hi:.3}]"),
        "stays in the frozen band [-2.5, 0] for 3 <= n <= n_max",
    ));

    // KS ladder against the largest exact surrogate
    let surrogate = ctx.y_law(cap)?;
    let tail_allowance = 15.0 / (cap as f64).powf(1.0 / 3.0);
    let mut ladder_ok = true;
    let mut lower_ok = true;
    for n in 1..=cap {
        let yn = ctx.y_law(n)?;
        let ks = ks_distance(&yn, &surrogate).value;
        ladder_ok &= ks <= 15.0 / (n as f64).powf(1.0 / 3.0) + tail_allowance;
        if n <= 25 {
            lower_ok &= ks > 1.0 / (8.0 * (n as f64 + 1.0)) - tail_allowance;
        }
    }
    out.push(CheckResult::assert(
        "ks.rate-ladder",
        EvalMode::Float,
        ladder_ok,
        format!("all n <= {cap} vs surrogate Y_{cap}"),
        "KS(Y_n, Y_cap) <= 15 n^{-1/3} + 15 cap^{-1/3}",
    ));
    out.push(CheckResult::assert(
        "ks.lower-vs-surrogate",
        EvalMode::Float,
        lower_ok,
        "n <= 25".to_string(),
        "KS(Y_n, Y_cap) above 1/(8(n+1)) minus the surrogate allowance",
    ));

    let mut mass_ok = true;
    for n in 1..=n_max {
        let pmf = ctx.table.pmf(n)?;
        let sd = to_f64(&variance_comparisons(n)).sqrt();
        let bound = integer_mass_lower(sd)?;
        mass_ok &= to_f64_bounds(pmf.max_mass()).1 >= bound;
    }
    out.push(CheckResult::assert(
        "ks.integer-mass-lemma",
        EvalMode::Float,
        mass_ok,
        format!("all n <= {n_max}"),
        "max_k P(X_n = k) >= 1/(6 sd(X_n) + 4)",
    ));

    out.push(CheckResult::assert(
        "ks.twelve-sigma",
        EvalMode::Float,
        12.0 * sigma() < 8.0,
        format!("12 sigma = {:.4}", 12.0 * sigma()),
        "below 8, as the lattice lower bound needs",
    ));

    let mut lattice_ok = true;
    for n in 1..=25usize.min(cap) {
        let sd_y = ctx.table.normalized(n, Scaling::Y)?.sd_f64();
        let bound = lattice_ks_lower(n as f64, sd_y)?;
        lattice_ok &= bound > 1.0 / (8.0 * (n as f64 + 1.0));
    }
    out.push(CheckResult::assert(
        "ks.lattice-lower-instances",
        EvalMode::Float,
        lattice_ok,
        "n <= 25 with exact sd(Y_n)".to_string(),
        "1/(12 n sd(Y_n) + 8) exceeds 1/(8(n+1))",
    ));

    let ks2_constant = 3072.0f64.powf(1.0 / 3.0);
    out.push(CheckResult::assert(
        "ks.conversion-constant",
        EvalMode::Float,
        (ks_from_dp(16.0, 2.0, 2.0)? - ks2_constant).abs() < 1e-12 && ks2_constant < 15.0,
        format!("(3072)^(1/3) = {ks2_constant:.4}"),
        "KS conversion at (M, d_2) = (16, 2/sqrt n) gives (3072/n)^{1/3} < 15 n^{-1/3}",
    ));

    // open-ended continuum comparison, reported only
    let mut values = Vec::new();
    for n in [10usize, 20, 30].into_iter().filter(|&n| n < cap) {
        let yn = ctx.y_law(n)?;
        let d2 = wasserstein_p(&yn, &surrogate, 2.0)?.value;
        values.push(format!("n={n}: {:.3}", n as f64 * d2));
    }
    out.push(CheckResult::diagnostic(
        "metrics.continuum-rate-diagnostic",
        EvalMode::Float,
        format!(
            "n d_2(Y_n, Y_cap) = [{}] vs (1/2)(p+1)^{{-1/p}} = {:.4}",
            values.join(", "),
            0.5 / 3.0f64.sqrt()
        ),
        "lattice lower-bound constant; continuum statement, reported only",
    ));

    Ok(())
}

// ---------------------------------------------------------------------------
// limit: Monte Carlo, density windows, fixed point
// ---------------------------------------------------------------------------

fn limit_suite(ctx: &mut Ctx, out: &mut Vec<CheckResult>) -> Result<()> {
    let seed = ctx.cfg.seed.ok_or(Error::MissingSeed)?;
    let mode = ctx.cfg.mode;
    let budget = ctx.cfg.budget;

    let mut exhaustive_ok = true;
    for n in 0..=6usize {
        exhaustive_ok &= &exhaustive_law(n)? == ctx.table.pmf(n)?;
    }
    out.push(CheckResult::assert(
        "mc.exhaustive-matches-exact",
        EvalMode::Exact,
        exhaustive_ok,
        "n <= 6, all n! insertion orders".to_string(),
        "exhaustive enumeration reproduces the pmf recursion exactly",
    ));

    let n = 50usize;
    let reps = ctx.cfg.mc_reps;
    let batch = sample_path_lengths(n, reps, seed, budget, mode)?;
    let mu = to_f64(&mean_comparisons(n));
    let sd = to_f64(&variance_comparisons(n)).sqrt();
    let band = 4.0 * sd / (reps as f64).sqrt();
    out.push(
        CheckResult::assert(
            "mc.mean-confidence",
            EvalMode::MonteCarlo,
            (batch.mean() - mu).abs() <= band,
            format!("sample mean {:.3} vs mu_50 {:.3}", batch.mean(), mu),
            "within 4 sd / sqrt(reps)",
        )
        .with_seed(seed),
    );

    let exact_counts = DiscreteDistribution::float(
        ctx.table
            .pmf(n)?
            .iter()
            .map(|(k, m)| (k as f64, to_f64(m)))
            .collect(),
    )?;
    let ks = ks_distance(&batch.count_distribution()?, &exact_counts).value;
    let dkw = (f64::ln(2.0 / 1e-3) / (2.0 * reps as f64)).sqrt();
    out.push(
        CheckResult::assert(
            "mc.dkw-band",
            EvalMode::MonteCarlo,
            ks <= dkw,
            format!("KS = {ks:.5}"),
            &format!("below the 99.9% DKW radius {dkw:.5} at reps = {reps}"),
        )
        .with_seed(seed),
    );

    for m_size in [10usize, 25] {
        let report = martingale_increment_check(m_size, reps, seed, budget, mode)?;
        out.push(
            CheckResult::assert(
                &format!("mc.martingale-{m_size}"),
                EvalMode::MonteCarlo,
                report.within_tolerance,
                format!("mean {:.2e}, stderr {:.2e}", report.mean, report.stderr),
                "increment mean within 4 standard errors of zero",
            )
            .with_seed(seed),
        );
    }

    // literal-quicksort cross check of the BST sampler
    let qs = crate::simulate::sample_quicksort_counts(100, 20_000.min(reps), seed, budget, mode)?;
    let mu_100 = to_f64(&mean_comparisons(100));
    let sd_100 = to_f64(&variance_comparisons(100)).sqrt();
    let qs_band = 4.0 * sd_100 / (qs.reps as f64).sqrt();
    out.push(
        CheckResult::assert(
            "mc.quicksort-oracle",
            EvalMode::MonteCarlo,
            (qs.mean() - mu_100).abs() <= qs_band,
            format!("literal quicksort mean {:.2} vs mu_100 {:.2}", qs.mean(), mu_100),
            "pivoting counter agrees with the closed-form mean (4 sigma)",
        )
        .with_seed(seed),
    );

    // fixed-point residual of the limit identity
    // The size-50 surrogate sits at KS ~ 0.058 from the limit law, and the
    // map contracts that to a residual of ~ 0.031; an empirical surrogate
    // from n = 2000 already lands near 0.003. The threshold brackets the
    // measured value while still separating good surrogates from bad ones.
    let surrogate = ctx.y_law(ctx.cfg.pmf_cap)?;
    let residual = fixed_point_residual(&surrogate, reps, seed, budget)?;
    out.push(
        CheckResult::assert(
            "fixedpoint.residual-surrogate",
            EvalMode::MonteCarlo,
            residual < 0.05,
            format!("residual = {residual:.4}"),
            "KS residual of Y = UY + (1-U)Y* + C(U) below 0.05 at the cap surrogate",
        )
        .with_seed(seed),
    );

    let point = DiscreteDistribution::point_mass_at_zero();
    let degenerate = fixed_point_residual(&point, reps, seed, budget)?;
    out.push(
        CheckResult::assert(
            "fixedpoint.point-mass",
            EvalMode::MonteCarlo,
            degenerate >= 0.5,
            format!("residual = {degenerate:.4}"),
            "a point mass is far from the fixed point (residual >= 0.5)",
        )
        .with_seed(seed),
    );

    let stability_reps = (reps / 5).max(1);
    let mut residuals = Vec::new();
    for offset in 0..10u64 {
        residuals.push(fixed_point_residual(
            &surrogate,
            stability_reps,
            seed.wrapping_add(1 + offset),
            budget,
        )?);
    }
    let spread = residuals.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
        - residuals.iter().fold(f64::INFINITY, |a, &b| a.min(b));
    let allowed = 3.0 / (stability_reps as f64).sqrt();
    out.push(
        CheckResult::assert(
            "fixedpoint.seed-stability",
            EvalMode::MonteCarlo,
            spread <= allowed,
            format!("spread {spread:.4} over 10 seeds"),
            &format!("within 3/sqrt(reps) = {allowed:.4}"),
        )
        .with_seed(seed),
    );

    // density window at the large-n batch
    let dn = ctx.cfg.density_n;
    let dreps = ctx.cfg.density_reps;
    let dens_batch = sample_path_lengths(dn, dreps, seed, budget, mode)?;
    let cdf = EmpiricalCdf::from_batch(&dens_batch);
    let delta = delta_star(dn, 16.0, 2466.0)?;
    let estimate = density_window(&cdf, &default_grid(), delta, 16.0, 2466.0)?;
    out.push(
        CheckResult::assert(
            "density.nonnegative",
            EvalMode::MonteCarlo,
            estimate.values.iter().all(|&v| v >= 0.0),
            format!("{} grid points", estimate.values.len()),
            "window estimates are nonnegative",
        )
        .with_seed(seed),
    );
    let integral = estimate.integral();
    out.push(
        CheckResult::assert(
            "density.unit-mass",
            EvalMode::MonteCarlo,
            (integral - 1.0).abs() <= 0.02,
            format!("integral over [-1.5, 3] = {integral:.4}"),
            "1 within 0.02",
        )
        .with_seed(seed),
    );
    let max_value = estimate.max_value();
    out.push(
        CheckResult::assert(
            "density.bounded-by-16",
            EvalMode::MonteCarlo,
            max_value < 16.0,
            format!("max estimate = {max_value:.4}"),
            "below the certified density bound 16",
        )
        .with_seed(seed),
    );
    let (term_a, term_b) = density_error_terms(dn, delta, 16.0, 2466.0);
    out.push(CheckResult::assert(
        "density.terms-balance",
        EvalMode::Float,
        (term_a - term_b).abs() <= 1e-12 * term_a.max(term_b),
        format!("terms {term_a:.6e} vs {term_b:.6e} at delta* = {delta:.4}"),
        "the two error terms coincide at the optimal window (1e-12)",
    ));
    let pinned_268 = (96.0f64 * 256.0 * 2466.0f64.powi(3)).powf(1.0 / 6.0);
    let pinned_303 = (96.0f64 * 8.0).powf(1.0 / 6.0);
    out.push(CheckResult::assert(
        "density.error-constants",
        EvalMode::Float,
        (pinned_268 - 268.0).abs() < 0.5 && (pinned_303 - 3.03).abs() < 0.005,
        format!("constants {pinned_268:.2} and {pinned_303:.4}"),
        "published window-error constants 268 and 3.03 at the two (M, M') choices",
    ));

    // open local-limit question: diagnostic table at the cap
    let probe_pmf = ctx.table.pmf(ctx.cfg.pmf_cap)?.clone();
    let probe = local_limit_probe(&probe_pmf, &estimate);
    let finite = probe.rows.iter().all(|r| r.gap.is_finite());
    out.push(CheckResult::diagnostic(
        "limit.local-limit-probe",
        EvalMode::MonteCarlo,
        format!(
            "max |n P(X_n=k) - f((k-mu)/n)| = {:.4} at n = {} ({} finite rows: {finite})",
            probe.max_abs_gap,
            probe.n,
            probe.rows.len(),
        ),
        "open question; reported, never asserted",
    ));

    Ok(())
}

// ---------------------------------------------------------------------------
// mgf
// ---------------------------------------------------------------------------

fn mgf_suite(ctx: &mut Ctx, out: &mut Vec<CheckResult>) -> Result<()> {
    let n_max = ctx.cfg.n_max;

    let l0 = solve_l0();
    out.push(CheckResult::assert(
        "mgf.l0-value",
        EvalMode::Float,
        (l0 - 5.018).abs() <= 5e-4,
        format!("L0 = {l0:.6}"),
        "largest root of e^L = 6 L^2 is 5.018 within 5e-4",
    ));
    out.push(CheckResult::assert(
        "mgf.l0-residual",
        EvalMode::Float,
        (l0.exp() - 6.0 * l0 * l0).abs() < 1e-8
            && (solve_l0_in(4.4, 5.6) - l0).abs() < 1e-10
            && 6.0f64.exp() - 216.0 > 0.0
            && 4.5f64.exp() - 121.5 < 0.0,
        format!("|e^L0 - 6 L0^2| = {:.2e}", (l0.exp() - 6.0 * l0 * l0).abs()),
        "root residual below 1e-8, bracket signs correct, stable to 1e-10",
    ));

    let limit_bound = PiecewiseMgfBound::limit_law();
    let finite_n_bound = PiecewiseMgfBound::unscaled_finite_n();

    let mut monotone = true;
    let mut dominated_hat = true;
    let mut dominated_yn = true;
    let mut dominated_direct = true;
    let mut convex = true;
    let mut prev_hat = vec![1.0f64; LAMBDA_GRID.len()];
    for n in 1..=n_max {
        let hat = ctx.table.normalized(n, Scaling::YHat)?;
        let yn = ctx.table.normalized(n, Scaling::Y)?;
        for (j, &lambda) in LAMBDA_GRID.iter().enumerate() {
            let hat_value = exact_mgf(&hat, lambda)?;
            monotone &= hat_value >= prev_hat[j] - 1e-12;
            prev_hat[j] = hat_value;
            dominated_hat &= hat_value.ln() <= limit_bound.ln_value(lambda) + 1e-12;

            let yn_value = exact_mgf(&yn, lambda)?;
            dominated_yn &= yn_value.ln() <= scaled_bound_ln(&limit_bound, n, lambda) + 1e-12;
            let stretch = (n as f64 + 1.0) / n as f64;
            dominated_yn &= yn_value.ln() <= global_envelope_ln(stretch * lambda) + 1e-12;
            if lambda >= -0.58 {
                dominated_direct &= yn_value.ln() <= finite_n_bound.ln_value(lambda) + 1e-12;
            }
        }
        convex &= mgf_curve(&hat, &LAMBDA_GRID)?.convexity_defect() >= -1e-9;
    }
    out.push(CheckResult::assert(
        "mgf.hat-monotone-in-n",
        EvalMode::Float,
        monotone,
        format!("all n <= {n_max} on the versioned grid"),
        "E e^{lambda Y_hat_n} nondecreasing in n (martingale + Jensen)",
    ));
    out.push(CheckResult::assert(
        "mgf.hat-dominated-by-limit-bound",
        EvalMode::Float,
        dominated_hat,
        format!("all n <= {n_max}"),
        "E e^{lambda Y_hat_n} below the five-piece limit bound",
    ));
    out.push(CheckResult::assert(
        "mgf.yn-dominated-by-scaled-bound",
        EvalMode::Float,
        dominated_yn,
        format!("all n <= {n_max}"),
        "E e^{lambda Y_n} below the (n+1)/n-rescaled bound and its global envelope",
    ));
    out.push(CheckResult::assert(
        "mgf.yn-dominated-by-direct-bound",
        EvalMode::Float,
        dominated_direct,
        format!("all n <= {n_max}, lambda >= -0.58"),
        "E e^{lambda Y_n} below the stated n-free bound table",
    ));
    out.push(CheckResult::assert(
        "mgf.convexity",
        EvalMode::Float,
        convex,
        format!("all n <= {n_max}"),
        "second divided differences above -1e-9 on the grid",
    ));

    // Chernoff bound versus the exact two-sided tail
    let mut chernoff_ok = true;
    let eps_grid: Vec<f64> = (1..=10).map(|k| k as f64 * 0.05).collect();
    for n in 1..=n_max {
        let pmf = ctx.table.pmf(n)?;
        for &eps in &eps_grid {
            let tail = to_f64(&pmf.tail_two_sided(eps));
            for lambda in [0.5, 1.0, 2.0] {
                chernoff_ok &= large_dev_bound(n, eps, lambda)? >= tail;
            }
        }
    }
    out.push(CheckResult::assert(
        "mgf.large-dev-dominates-exact-tail",
        EvalMode::Float,
        chernoff_ok,
        format!("n <= {n_max}, eps in 0.05..0.5, lambda in {{0.5, 1, 2}}"),
        "Chernoff bound above the exact tail probability",
    ));

    let mut dec_ok = true;
    let mut prev = f64::INFINITY;
    for n in [3usize, 10, 30, 100, 1000] {
        let b = large_dev_bound(n, 0.2, 1.0)?;
        dec_ok &= b <= prev;
        prev = b;
    }
    out.push(CheckResult::assert(
        "mgf.large-dev-monotone-in-n",
        EvalMode::Float,
        dec_ok,
        "n in {3, 10, 30, 100, 1000} at (eps, lambda) = (0.2, 1)".to_string(),
        "only the n^{-2 eps lambda} factor varies",
    ));

    out.push(CheckResult::assert(
        "mgf.mean-ratio-lower",
        EvalMode::Float,
        mean_ratio_lower_holds(10_000),
        "n <= 10^4".to_string(),
        "mu_n / (n+1) >= 2 ln n - 3",
    ));

    // MGF convergence-rate bound: triangle consistency through the limit
    let rate_grid = [-0.5, 0.0, 0.5, 1.0];
    let mut cached: Vec<Vec<f64>> = Vec::with_capacity(n_max);
    for n in 1..=n_max {
        let yn = ctx.table.normalized(n, Scaling::Y)?;
        cached.push(
            rate_grid
                .iter()
                .map(|&l| exact_mgf(&yn, l))
                .collect::<Result<_>>()?,
        );
    }
    let mut rate_ok = true;
    for n in 1..=n_max {
        for m in 1..=n_max {
            for (j, &lambda) in rate_grid.iter().enumerate() {
                let gap = (cached[n - 1][j] - cached[m - 1][j]).abs();
                let allowance = mgf_rate_bound(n, lambda)? + mgf_rate_bound(m, lambda)?;
                rate_ok &= gap <= allowance + 1e-12;
            }
        }
    }
    out.push(CheckResult::assert(
        "mgf.rate-triangle",
        EvalMode::Float,
        rate_ok,
        format!("pairs n, m <= {n_max}, lambda in [-0.5, 1]"),
        "|E e^{lambda Y_n} - E e^{lambda Y_m}| within the two rate allowances",
    ));

    // conjectured monotonicity of the unscaled MGFs: recorded, never asserted
    let mut violations = 0usize;
    let mut points = 0usize;
    let mut prev_yn: Option<Vec<f64>> = None;
    for n in 1..=n_max {
        let yn = ctx.table.normalized(n, Scaling::Y)?;
        let values: Vec<f64> = LAMBDA_GRID
            .iter()
            .map(|&l| exact_mgf(&yn, l))
            .collect::<Result<_>>()?;
        if let Some(prev) = prev_yn {
            for (a, b) in prev.iter().zip(&values) {
                points += 1;
                if *b < *a - 1e-12 {
                    violations += 1;
                }
            }
        }
        prev_yn = Some(values);
    }
    out.push(CheckResult::diagnostic(
        "mgf.unscaled-monotonicity-conjecture",
        EvalMode::Float,
        format!("{violations} violations out of {points} grid points"),
        "conjectured E e^{lambda Y_n} monotone in n; observed only",
    ));

    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_config() -> VerifyConfig {
        VerifyConfig {
            n_max: 10,
            pmf_cap: 14,
            toll_max_n: 120,
            seed: Some(7),
            density_n: 400,
            density_reps: 4_000,
            mc_reps: 4_000,
            ..VerifyConfig::default()
        }
    }

    #[test]
    fn suite_names_round_trip() {
        for suite in [
            Suite::Core,
            Suite::Bounds,
            Suite::Metrics,
            Suite::Limit,
            Suite::Mgf,
            Suite::All,
        ] {
            assert_eq!(suite.to_string().parse::<Suite>().unwrap(), suite);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn core_suite_passes_at_reduced_size() {
        let cfg = quick_config();
        let results = run_suite(Suite::Core, &cfg).unwrap();
        assert!(!results.is_empty());
        for r in &results {
            assert!(r.passed, "{} failed: {}", r.id, r.observed);
        }
    }

    #[test]
    fn bounds_suite_passes_at_reduced_size() {
        let cfg = quick_config();
        let results = run_suite(Suite::Bounds, &cfg).unwrap();
        assert!(all_passed(&results));
    }

    #[test]
    fn metrics_suite_passes_at_reduced_size() {
        let cfg = quick_config();
        let results = run_suite(Suite::Metrics, &cfg).unwrap();
        for r in &results {
            if r.kind == CheckKind::Assert {
                assert!(r.passed, "{} failed: {}", r.id, r.observed);
            }
        }
    }

    #[test]
    fn mgf_suite_passes_at_reduced_size() {
        let cfg = quick_config();
        let results = run_suite(Suite::Mgf, &cfg).unwrap();
        assert!(all_passed(&results));
    }

    #[test]
    fn limit_suite_passes_at_reduced_reps() {
        // the residual threshold is pinned to the size-50 surrogate, so only
        // the replicate counts shrink here
        let cfg = VerifyConfig {
            n_max: 10,
            pmf_cap: 50,
            toll_max_n: 120,
            seed: Some(7),
            density_n: 400,
            density_reps: 4_000,
            mc_reps: 20_000,
            ..VerifyConfig::default()
        };
        let results = run_suite(Suite::Limit, &cfg).unwrap();
        for r in &results {
            if r.kind == CheckKind::Assert {
                assert!(r.passed, "{} failed: {}", r.id, r.observed);
            }
        }
    }

    #[test]
    fn limit_suite_requires_seed() {
        let mut cfg = quick_config();
        cfg.seed = None;
        match run_suite(Suite::Limit, &cfg) {
            Err(Error::MissingSeed) => {}
            other => panic!("expected MissingSeed, got {other:?}"),
        }
    }

    #[test]
    fn check_results_serialize_with_seed_field() {
        let check = CheckResult::assert("x.y", EvalMode::MonteCarlo, true, "v".into(), "r")
            .with_seed(3);
        let json = serde_json::to_string(&check).unwrap();
        assert!(json.contains("\"seed\":3"));
        assert!(json.contains("\"monte-carlo\""));
    }
}
