//! Exact rational computation of the law of the comparison count `X_n`.
//!
//! Everything in this module is big-integer exact: harmonic numbers, the
//! closed-form mean and variance, the pmf obtained from the pivot-mixture
//! recurrence, and the normalized atom lists of `Y_n` and `Y_hat_n`.
//! Quantities that involve `ln` or `pi` live in [`crate::consts`] instead.
//!
//! Internally a pmf is carried as integer permutation counts over the
//! denominator `n!`; the mixture step then needs no gcd work at all, and the
//! public [`ComparisonPmf`] reduces to lowest terms only when materialized.

use std::collections::BTreeMap;
use std::path::PathBuf;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::consts::{EULER_GAMMA, SIGMA_SQ};
use crate::error::Error;
use crate::rational::{self, BigRational};
use crate::{Parallelism, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Default cap on the pmf recursion. Support size is `n(n-1)/2` and the
/// mixture cost grows like `n^5`, so larger caps are opt-in.
pub const DEFAULT_N_MAX: usize = 50;

// ---------------------------------------------------------------------------
// harmonic numbers
// ---------------------------------------------------------------------------

/// Exact partial sums `H_n = sum 1/k` and `H2_n = sum 1/k^2`.
pub fn harmonic(n: usize) -> Result<(BigRational, BigRational)> {
    if n == 0 {
        return Err(Error::HarmonicZero);
    }
    let table = HarmonicTable::new(n);
    Ok((table.h(n).clone(), table.h2(n).clone()))
}

/// Cached exact harmonic numbers `H_k` and `H^(2)_k` for `k <= max_n`.
#[derive(Clone, Debug)]
pub struct HarmonicTable {
    h: Vec<BigRational>,
    h2: Vec<BigRational>,
}

impl HarmonicTable {
    pub fn new(max_n: usize) -> Self {
        let mut h = Vec::with_capacity(max_n + 1);
        let mut h2 = Vec::with_capacity(max_n + 1);
        h.push(BigRational::zero());
        h2.push(BigRational::zero());
        for k in 1..=max_n {
            let kk = BigInt::from(k);
            h.push(&h[k - 1] + BigRational::new(BigInt::one(), kk.clone()));
            h2.push(&h2[k - 1] + BigRational::new(BigInt::one(), &kk * &kk));
        }
        HarmonicTable { h, h2 }
    }

    pub fn max_n(&self) -> usize {
        self.h.len() - 1
    }

    pub fn h(&self, n: usize) -> &BigRational {
        &self.h[n]
    }

    pub fn h2(&self, n: usize) -> &BigRational {
        &self.h2[n]
    }
}

/// `H_n` in floating point via compensated summation; for the sweeps where
/// exact rationals would be needlessly slow (n up to 10^4 and beyond).
pub fn harmonic_f64(n: usize) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for k in 1..=n {
        let y = 1.0 / k as f64 - c;
        let t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
    sum
}

// ---------------------------------------------------------------------------
// closed-form moments
// ---------------------------------------------------------------------------

/// Exact mean `mu_n = 2(n+1) H_n - 4n`, with `mu_0 = 0`.
pub fn mean_comparisons(n: usize) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let table = HarmonicTable::new(n);
    mean_from_table(&table, n)
}

fn mean_from_table(table: &HarmonicTable, n: usize) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let np1 = rational::rat_int(n as i64 + 1);
    rational::rat_int(2) * np1 * table.h(n) - rational::rat_int(4 * n as i64)
}

/// Exact variance
/// `Var X_n = 7n^2 - 4(n+1)^2 H2_n - 2(n+1) H_n + 13n`.
pub fn variance_comparisons(n: usize) -> BigRational {
    let table = HarmonicTable::new(n);
    variance_from_table(&table, n)
}

fn variance_from_table(table: &HarmonicTable, n: usize) -> BigRational {
    if n == 0 {
        return BigRational::zero();
    }
    let n_i = n as i64;
    let np1 = rational::rat_int(n_i + 1);
    rational::rat_int(7 * n_i * n_i)
        - rational::rat_int(4) * &np1 * &np1 * table.h2(n)
        - rational::rat_int(2) * np1 * table.h(n)
        + rational::rat_int(13 * n_i)
}

/// `mu_n` in floating point (compensated harmonic sum); accurate to roughly
/// `1e-11` absolute at `n = 10^4`.
pub fn mean_f64(n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    2.0 * (n as f64 + 1.0) * harmonic_f64(n) - 4.0 * n as f64
}

// ---------------------------------------------------------------------------
// exact mean table over a common denominator
// ---------------------------------------------------------------------------

/// Exact `mu_k` for all `k <= max_n`, stored as integers over the common
/// denominator `lcm(1..=max_n)`.
///
/// The toll computations sum `O(n)` discrete toll values per `n`; keeping a
/// single denominator turns those sums into plain integer arithmetic.
#[derive(Clone, Debug)]
pub struct MuTable {
    max_n: usize,
    q: BigInt,
    m: Vec<BigInt>,
    mu_f64: Vec<f64>,
}

impl MuTable {
    pub fn new(max_n: usize) -> Self {
        let mut q = BigInt::one();
        for k in 2..=max_n.max(1) {
            q = q.lcm(&BigInt::from(k));
        }
        let mut m = Vec::with_capacity(max_n + 1);
        let mut mu_f64 = Vec::with_capacity(max_n + 1);
        m.push(BigInt::zero());
        mu_f64.push(0.0);
        let mut hq = BigInt::zero(); // H_k * q, exactly
        for k in 1..=max_n {
            hq += &q / BigInt::from(k);
            let mk = BigInt::from(2) * BigInt::from(k + 1) * &hq - BigInt::from(4 * k) * &q;
            mu_f64.push(rational::big_ratio_to_f64(&mk, &q));
            m.push(mk);
        }
        MuTable {
            max_n,
            q,
            m,
            mu_f64,
        }
    }

    pub fn max_n(&self) -> usize {
        self.max_n
    }

    /// Exact `mu_k` in lowest terms.
    pub fn mu(&self, k: usize) -> BigRational {
        BigRational::new(self.m[k].clone(), self.q.clone())
    }

    /// Nearest-f64 image of the exact `mu_k`.
    pub fn mu_f64(&self, k: usize) -> f64 {
        self.mu_f64[k]
    }

    /// Numerators of the discrete toll `C_n(i)`, `i = 1..=n`, over the
    /// denominator `n * q`.
    pub(crate) fn toll_numerators(&self, n: usize) -> (Vec<BigInt>, BigInt) {
        let base = BigInt::from(n as i64 - 1) * &self.q;
        let numerators = (1..=n)
            .map(|i| &base + &self.m[i - 1] + &self.m[n - i] - &self.m[n])
            .collect();
        (numerators, BigInt::from(n) * &self.q)
    }

    /// `C_n(i)` in floating point, from the exact-to-nearest `mu` values.
    pub(crate) fn toll_f64(&self, n: usize, i: usize) -> f64 {
        ((n as f64 - 1.0) + self.mu_f64[i - 1] + self.mu_f64[n - i] - self.mu_f64[n]) / n as f64
    }
}

// ---------------------------------------------------------------------------
// the exact pmf
// ---------------------------------------------------------------------------

/// Exact law of the comparison count `X_n`: rational masses on the integer
/// support `k_min..k_min + masses.len()`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComparisonPmf {
    n: usize,
    k_min: u64,
    #[serde(with = "rational::rat_vec_serde")]
    masses: Vec<BigRational>,
}

impl ComparisonPmf {
    pub(crate) fn from_parts(n: usize, k_min: u64, masses: Vec<BigRational>) -> Self {
        debug_assert!(!masses.is_empty());
        ComparisonPmf { n, k_min, masses }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_min(&self) -> u64 {
        self.k_min
    }

    pub fn k_max(&self) -> u64 {
        self.k_min + self.masses.len() as u64 - 1
    }

    pub fn masses(&self) -> &[BigRational] {
        &self.masses
    }

    /// `(k, mass)` pairs in increasing `k`.
    pub fn iter(&self) -> impl Iterator<Item = (u64, &BigRational)> {
        self.masses
            .iter()
            .enumerate()
            .map(move |(i, m)| (self.k_min + i as u64, m))
    }

    pub fn mass_at(&self, k: u64) -> BigRational {
        if k < self.k_min || k > self.k_max() {
            BigRational::zero()
        } else {
            self.masses[(k - self.k_min) as usize].clone()
        }
    }

    /// Exact total mass; equals one for every law this crate constructs.
    pub fn mass_sum(&self) -> BigRational {
        self.masses.iter().sum()
    }

    /// Exact mean straight from the atoms.
    pub fn mean(&self) -> BigRational {
        self.iter()
            .map(|(k, m)| rational::rat_int(k as i64) * m)
            .sum()
    }

    /// Exact central second moment straight from the atoms.
    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        self.iter()
            .map(|(k, m)| {
                let d = rational::rat_int(k as i64) - &mean;
                &d * &d * m
            })
            .sum()
    }

    pub fn max_mass(&self) -> &BigRational {
        self.masses
            .iter()
            .max()
            .expect("pmf always has at least one atom")
    }

    /// Exact two-sided tail `P(|X_n - mu_n| >= eps * mu_n)`.
    ///
    /// `eps` is interpreted exactly as the binary rational the caller's f64
    /// denotes, so the comparison is unambiguous.
    pub fn tail_two_sided(&self, eps: f64) -> BigRational {
        let mu = mean_comparisons(self.n);
        let threshold = BigRational::from_float(eps).expect("finite eps") * &mu;
        self.iter()
            .filter(|(k, _)| {
                let dev = (rational::rat_int(*k as i64) - &mu).abs();
                dev >= threshold
            })
            .map(|(_, m)| m)
            .sum()
    }

    /// Centered, scaled atom list.
    pub fn normalize(&self, scaling: Scaling) -> NormalizedAtoms {
        let mu = mean_comparisons(self.n);
        let divisor = match scaling {
            Scaling::Y => rational::rat_int(self.n as i64),
            Scaling::YHat => rational::rat_int(self.n as i64 + 1),
        };
        let atoms = self
            .iter()
            .filter(|(_, m)| !m.is_zero())
            .map(|(k, m)| {
                let loc = (rational::rat_int(k as i64) - &mu) / &divisor;
                (loc, m.clone())
            })
            .collect();
        NormalizedAtoms {
            n: self.n,
            scaling,
            atoms,
        }
    }
}

/// Divisor choice when centering `X_n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Scaling {
    /// `Y_n = (X_n - mu_n) / n`
    Y,
    /// `Y_hat_n = (X_n - mu_n) / (n + 1)`, the martingale scaling
    YHat,
}

impl std::fmt::Display for Scaling {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Scaling::Y => write!(f, "y"),
            Scaling::YHat => write!(f, "y-hat"),
        }
    }
}

/// Sorted exact atom list of a normalized comparison-count law; zero mean by
/// construction.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NormalizedAtoms {
    n: usize,
    scaling: Scaling,
    atoms: Vec<(BigRational, BigRational)>,
}

impl NormalizedAtoms {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn scaling(&self) -> Scaling {
        self.scaling
    }

    pub fn atoms(&self) -> &[(BigRational, BigRational)] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Exact mean; zero for every law produced by [`ComparisonPmf::normalize`].
    pub fn mean(&self) -> BigRational {
        self.atoms.iter().map(|(x, m)| x * m).sum()
    }

    /// Exact variance.
    pub fn variance(&self) -> BigRational {
        let mean = self.mean();
        self.atoms
            .iter()
            .map(|(x, m)| {
                let d = x - &mean;
                &d * &d * m
            })
            .sum()
    }

    pub fn sd_f64(&self) -> f64 {
        rational::to_f64(&self.variance()).sqrt()
    }

    /// Atom list as floats (exact-to-nearest conversions).
    pub fn atoms_f64(&self) -> Vec<(f64, f64)> {
        self.atoms
            .iter()
            .map(|(x, m)| (rational::to_f64(x), rational::to_f64(m)))
            .collect()
    }
}

// ---------------------------------------------------------------------------
// pmf construction
// ---------------------------------------------------------------------------

/// Integer permutation counts over the denominator `n!`.
#[derive(Clone, Debug)]
struct CountsPmf {
    k_min: u64,
    counts: Vec<BigInt>,
}

impl CountsPmf {
    fn point(k: u64) -> Self {
        CountsPmf {
            k_min: k,
            counts: vec![BigInt::one()],
        }
    }
}

/// Bottom-up pmf table, memoized by `n` (the law is canonical, so nothing
/// else keys the cache). Construction for a given `n` happens exactly once;
/// the per-pivot convolutions inside one step run in parallel and are merged
/// by an exact, order-independent integer sum.
#[derive(Clone)]
pub struct PmfTable {
    n_max: usize,
    mode: Parallelism,
    cache_dir: Option<PathBuf>,
    factorial: Vec<BigInt>,
    counts: Vec<CountsPmf>,
    pmfs: Vec<ComparisonPmf>,
}

impl PmfTable {
    pub fn new(n_max: usize) -> Self {
        Self::with_options(n_max, Parallelism::Auto, None)
    }

    pub fn with_options(n_max: usize, mode: Parallelism, cache_dir: Option<PathBuf>) -> Self {
        let mut factorial = Vec::with_capacity(n_max + 1);
        factorial.push(BigInt::one());
        for k in 1..=n_max {
            let next = &factorial[k - 1] * BigInt::from(k);
            factorial.push(next);
        }
        PmfTable {
            n_max,
            mode,
            cache_dir,
            factorial,
            counts: Vec::new(),
            pmfs: Vec::new(),
        }
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn set_mode(&mut self, mode: Parallelism) {
        self.mode = mode;
    }

    /// Largest `n` whose law has been built so far.
    pub fn built(&self) -> Option<usize> {
        self.counts.len().checked_sub(1)
    }

    /// Builds (bottom-up) every law up to `n`.
    pub fn ensure(&mut self, n: usize) -> Result<()> {
        if n > self.n_max {
            return Err(Error::PmfCapExceeded {
                n,
                n_max: self.n_max,
            });
        }
        while self.counts.len() <= n {
            let next = self.counts.len();
            let (counts, pmf) = self.build_one(next)?;
            self.counts.push(counts);
            self.pmfs.push(pmf);
        }
        Ok(())
    }

    /// The exact law of `X_n`.
    pub fn pmf(&mut self, n: usize) -> Result<&ComparisonPmf> {
        self.ensure(n)?;
        Ok(&self.pmfs[n])
    }

    /// Normalized atoms of `Y_n` or `Y_hat_n`.
    pub fn normalized(&mut self, n: usize, scaling: Scaling) -> Result<NormalizedAtoms> {
        Ok(self.pmf(n)?.normalize(scaling))
    }

    fn build_one(&mut self, n: usize) -> Result<(CountsPmf, ComparisonPmf)> {
        if let Some(pmf) = self.load_cached(n)? {
            let counts = self.counts_from_pmf(&pmf);
            return Ok((counts, pmf));
        }
        let counts = match n {
            0 | 1 => CountsPmf::point(0),
            _ => self.mixture(n),
        };
        let total: BigInt = counts.counts.iter().sum();
        assert_eq!(
            total, self.factorial[n],
            "pmf counts for n = {n} must sum to n!"
        );
        let pmf = self.materialize(n, &counts);
        self.store_cached(&pmf)?;
        Ok((counts, pmf))
    }

    /// One step of the pivot-mixture recurrence in integer counts:
    /// `count_n(k) = sum_i binom(n-1, i-1) * (counts_{i-1} conv counts_{n-i})(k - (n-1))`.
    /// The pivot terms for `i` and `n+1-i` coincide, so only the lower half is
    /// convolved and doubled.
    fn mixture(&self, n: usize) -> CountsPmf {
        // below this size the per-pivot grains are so small that allocator
        // contention outweighs the parallel win (bench-measured crossover)
        const PARALLEL_THRESHOLD: usize = 64;

        let binom = binomial_row(n - 1);
        let half = n.div_ceil(2);
        let pivots: Vec<usize> = (1..=half).collect();
        let make_term = |&i: &usize| {
            let weight = if i != n + 1 - i {
                &binom[i - 1] * 2
            } else {
                binom[i - 1].clone()
            };
            self.pivot_term(n, i, &weight)
        };

        #[cfg(feature = "parallel")]
        let terms: Vec<(u64, Vec<BigInt>)> = if self.mode.is_parallel() && n >= PARALLEL_THRESHOLD
        {
            pivots.par_iter().map(make_term).collect()
        } else {
            pivots.iter().map(make_term).collect()
        };
        #[cfg(not(feature = "parallel"))]
        let terms: Vec<(u64, Vec<BigInt>)> = pivots.iter().map(make_term).collect();

        accumulate_terms(terms)
    }

    /// The (weighted) contribution of pivot rank `i`: the convolution of the
    /// two subproblem laws, shifted by the `n - 1` partition comparisons.
    fn pivot_term(&self, n: usize, i: usize, weight: &BigInt) -> (u64, Vec<BigInt>) {
        let left = &self.counts[i - 1];
        let right = &self.counts[n - i];
        let offset = left.k_min + right.k_min + (n as u64 - 1);
        let scaled: Vec<BigInt> = left.counts.iter().map(|c| c * weight).collect();
        (offset, convolve(&scaled, &right.counts))
    }

    fn materialize(&self, n: usize, counts: &CountsPmf) -> ComparisonPmf {
        let denom = &self.factorial[n];
        let masses = counts
            .counts
            .iter()
            .map(|c| BigRational::new(c.clone(), denom.clone()))
            .collect();
        ComparisonPmf {
            n,
            k_min: counts.k_min,
            masses,
        }
    }

    fn counts_from_pmf(&self, pmf: &ComparisonPmf) -> CountsPmf {
        let denom = &self.factorial[pmf.n];
        let counts = pmf
            .masses
            .iter()
            .map(|m| {
                let scaled = m * BigRational::from(denom.clone());
                assert!(
                    scaled.is_integer(),
                    "cached mass does not have denominator dividing n!"
                );
                scaled.to_integer()
            })
            .collect();
        CountsPmf {
            k_min: pmf.k_min,
            counts,
        }
    }

    fn cache_path(&self, n: usize) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| d.join(format!("pmf-{n}.json")))
    }

    fn load_cached(&self, n: usize) -> Result<Option<ComparisonPmf>> {
        let Some(path) = self.cache_path(n) else {
            return Ok(None);
        };
        if !path.exists() {
            return Ok(None);
        }
        let text = std::fs::read_to_string(&path)?;
        let pmf: ComparisonPmf = serde_json::from_str(&text)?;
        if pmf.n != n {
            return Err(Error::CacheMismatch {
                path: path.display().to_string(),
                reason: format!("expected n = {n}, found n = {}", pmf.n),
            });
        }
        if pmf.mass_sum() != BigRational::one() {
            return Err(Error::CacheMismatch {
                path: path.display().to_string(),
                reason: "masses do not sum to one".into(),
            });
        }
        Ok(Some(pmf))
    }

    fn store_cached(&self, pmf: &ComparisonPmf) -> Result<()> {
        let Some(path) = self.cache_path(pmf.n) else {
            return Ok(());
        };
        if path.exists() {
            return Ok(());
        }
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, serde_json::to_string(pmf)?)?;
        Ok(())
    }
}

/// Serializes a pmf to the canonical JSON form
/// `{"n": .., "k_min": .., "masses": ["num/den", ..]}`; bit-exact across
/// platforms.
pub fn pmf_to_json(pmf: &ComparisonPmf) -> String {
    serde_json::to_string(pmf).expect("pmf serialization cannot fail")
}

pub fn pmf_from_json(text: &str) -> Result<ComparisonPmf> {
    Ok(serde_json::from_str(text)?)
}

fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    row.push(BigInt::one());
    for i in 1..=n {
        let next = &row[i - 1] * BigInt::from(n - i + 1) / BigInt::from(i);
        row.push(next);
    }
    row
}

fn convolve(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            if !y.is_zero() {
                out[i + j] += x * y;
            }
        }
    }
    out
}

fn accumulate_terms(terms: Vec<(u64, Vec<BigInt>)>) -> CountsPmf {
    let k_min = terms.iter().map(|(o, _)| *o).min().expect("n >= 2");
    let k_max = terms
        .iter()
        .map(|(o, v)| o + v.len() as u64 - 1)
        .max()
        .unwrap();
    let mut counts = vec![BigInt::zero(); (k_max - k_min + 1) as usize];
    for (offset, vector) in terms {
        let base = (offset - k_min) as usize;
        for (j, value) in vector.into_iter().enumerate() {
            counts[base + j] += value;
        }
    }
    CountsPmf { k_min, counts }
}

// ---------------------------------------------------------------------------
// mean sandwich bounds
// ---------------------------------------------------------------------------

/// Floating-point check of the logarithmic sandwich bounds on `mu_n` and
/// `mu_{n-1}`; returns the first violating `n`, if any. `slack` absorbs the
/// f64 harmonic summation error.
pub fn mean_sandwich_violation(max_n: usize, slack: f64) -> Option<usize> {
    let mut h = 0.0f64;
    let mut c = 0.0f64;
    let mut mu_prev = 0.0f64;
    for n in 1..=max_n {
        let y = 1.0 / n as f64 - c;
        let t = h + y;
        c = (t - h) - y;
        h = t;
        let nf = n as f64;
        let mu = 2.0 * (nf + 1.0) * h - 4.0 * nf;
        let ln_n = nf.ln();
        let lower = 2.0 * (nf + 1.0) * ln_n + (2.0 * EULER_GAMMA - 4.0) * nf + 2.0 * EULER_GAMMA;
        let upper = lower + (nf + 1.0) / nf;
        if mu < lower - slack || mu > upper + slack {
            return Some(n);
        }
        if n >= 2 {
            let lower_prev = 2.0 * nf * ln_n + (2.0 * EULER_GAMMA - 4.0) * nf + 2.0;
            let upper_prev = lower_prev + 1.0;
            if mu_prev < lower_prev - slack || mu_prev > upper_prev + slack {
                return Some(n);
            }
        }
        mu_prev = mu;
    }
    None
}

/// Largest observed `n * |Var Y_n - sigma^2 + 2 ln n / n|` over `3..=max_n`;
/// the variance expansion says this stays bounded.
pub fn variance_expansion_excess(max_n: usize) -> f64 {
    let table = HarmonicTable::new(max_n);
    let mut worst = 0.0f64;
    for n in 3..=max_n {
        let var = rational::to_f64(&variance_from_table(&table, n));
        let nf = n as f64;
        let var_y = var / (nf * nf);
        let dev = nf * (var_y - SIGMA_SQ + 2.0 * nf.ln() / nf).abs();
        if dev > worst {
            worst = dev;
        }
    }
    worst
}

/// Histogram form of a pmf's support useful for diagnostics.
pub fn support_histogram(pmf: &ComparisonPmf) -> BTreeMap<u64, f64> {
    pmf.iter()
        .map(|(k, m)| (k, rational::to_f64(m)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int, to_f64_bounds};

    /// Comparison count of quicksort on `v` with the first element as pivot;
    /// over all permutations this enumerates the uniform-pivot law exactly.
    fn qsort_count(v: &[u32]) -> u64 {
        if v.len() <= 1 {
            return 0;
        }
        let pivot = v[0];
        let less: Vec<u32> = v[1..].iter().copied().filter(|&x| x < pivot).collect();
        let greater: Vec<u32> = v[1..].iter().copied().filter(|&x| x > pivot).collect();
        (v.len() as u64 - 1) + qsort_count(&less) + qsort_count(&greater)
    }

    fn permutations(n: usize) -> Vec<Vec<u32>> {
        let mut items: Vec<u32> = (0..n as u32).collect();
        let mut out = Vec::new();
        heap_permute(&mut items, n, &mut out);
        out
    }

    fn heap_permute(items: &mut Vec<u32>, k: usize, out: &mut Vec<Vec<u32>>) {
        if k <= 1 {
            out.push(items.clone());
            return;
        }
        for i in 0..k {
            heap_permute(items, k - 1, out);
            if k.is_multiple_of(2) {
                items.swap(i, k - 1);
            } else {
                items.swap(0, k - 1);
            }
        }
    }

    /// Brute-force law of `X_n` by enumerating all `n!` insertion orders.
    fn enumerated_law(n: usize) -> BTreeMap<u64, u64> {
        let mut hist = BTreeMap::new();
        for perm in permutations(n) {
            *hist.entry(qsort_count(&perm)).or_insert(0u64) += 1;
        }
        hist
    }

    #[test]
    fn harmonic_examples() {
        assert!(matches!(harmonic(0), Err(Error::HarmonicZero)));
        assert_eq!(harmonic(1).unwrap(), (rat_int(1), rat_int(1)));
        assert_eq!(harmonic(3).unwrap(), (rat(11, 6), rat(49, 36)));

        // log sandwich at n = 100
        let (h100, _) = harmonic(100).unwrap();
        let (lo, hi) = to_f64_bounds(&h100);
        let lower = 100.0f64.ln() + EULER_GAMMA;
        assert!(hi >= lower && lo <= lower + 1.0 / 200.0);
    }

    #[test]
    fn harmonic_increments_are_exact() {
        let table = HarmonicTable::new(20);
        for n in 1..=20 {
            assert_eq!(table.h(n) - table.h(n - 1), rat(1, n as i64));
            assert_eq!(table.h2(n) - table.h2(n - 1), rat(1, (n * n) as i64));
        }
    }

    #[test]
    fn mean_examples() {
        assert_eq!(mean_comparisons(0), rat_int(0));
        assert_eq!(mean_comparisons(1), rat_int(0));
        assert_eq!(mean_comparisons(2), rat_int(1));
        assert_eq!(mean_comparisons(4), rat(29, 6));
    }

    #[test]
    fn mean_matches_shifted_form() {
        // 2(n+1) H_n - 4n == 2(n+1) H_{n+1} - 4n - 2
        let table = HarmonicTable::new(61);
        for n in 1..=60usize {
            let alt = rat_int(2) * rat_int(n as i64 + 1) * table.h(n + 1)
                - rat_int(4 * n as i64)
                - rat_int(2);
            assert_eq!(mean_from_table(&table, n), alt);
        }
    }

    #[test]
    fn variance_examples() {
        assert_eq!(variance_comparisons(1), rat_int(0));
        assert_eq!(variance_comparisons(3), rat(2, 9));

        // Var Y_50 < sigma^2
        let v = variance_comparisons(50) / rat_int(2500);
        let (_, hi) = to_f64_bounds(&v);
        assert!(hi < SIGMA_SQ);
    }

    #[test]
    fn pmf_small_cases() {
        let mut table = PmfTable::new(8);
        let p2 = table.pmf(2).unwrap();
        assert_eq!(p2.k_min(), 1);
        assert_eq!(p2.masses(), &[rat_int(1)]);

        let p3 = table.pmf(3).unwrap().clone();
        assert_eq!(p3.k_min(), 2);
        assert_eq!(p3.masses(), &[rat(1, 3), rat(2, 3)]);

        let p4 = table.pmf(4).unwrap().clone();
        assert_eq!(p4.k_min(), 4);
        assert_eq!(p4.masses(), &[rat(1, 2), rat(1, 6), rat(1, 3)]);
        assert_eq!(p4.mean(), rat(29, 6));
    }

    #[test]
    fn pmf_matches_enumeration() {
        let mut table = PmfTable::new(7);
        for n in 0..=7usize {
            let pmf = table.pmf(n).unwrap();
            let hist = enumerated_law(n);
            let factorial: u64 = (1..=n as u64).product::<u64>().max(1);
            assert_eq!(pmf.masses().len(), hist.len(), "support size at n = {n}");
            for (k, count) in hist {
                assert_eq!(
                    pmf.mass_at(k),
                    rat(count as i64, factorial as i64),
                    "mass at n = {n}, k = {k}"
                );
            }
        }
    }

    #[test]
    fn pmf_moments_match_closed_forms() {
        let mut table = PmfTable::new(14);
        for n in 1..=14usize {
            let pmf = table.pmf(n).unwrap();
            assert_eq!(pmf.mass_sum(), rat_int(1), "mass sum at n = {n}");
            assert_eq!(pmf.mean(), mean_comparisons(n), "mean at n = {n}");
            assert_eq!(
                pmf.variance(),
                variance_comparisons(n),
                "variance at n = {n}"
            );
            assert!(pmf.k_max() <= (n * (n - 1) / 2) as u64);
        }
    }

    #[test]
    fn pivot_branches_are_mirror_images() {
        let mut table = PmfTable::new(11);
        table.ensure(11).unwrap();
        let one = BigInt::one();
        for n in [5usize, 8, 11] {
            for i in 1..=n {
                let (off_a, term_a) = table.pivot_term(n, i, &one);
                let (off_b, term_b) = table.pivot_term(n, n + 1 - i, &one);
                assert_eq!(off_a, off_b);
                assert_eq!(term_a, term_b);
            }
        }
    }

    #[test]
    fn cap_is_enforced() {
        let mut table = PmfTable::new(5);
        match table.pmf(6) {
            Err(Error::PmfCapExceeded { n: 6, n_max: 5 }) => {}
            other => panic!("expected cap error, got {other:?}"),
        }
    }

    #[test]
    fn normalize_examples() {
        let mut table = PmfTable::new(4);

        let y2 = table.normalized(2, Scaling::Y).unwrap();
        assert_eq!(y2.atoms(), &[(rat_int(0), rat_int(1))]);

        let y3 = table.normalized(3, Scaling::Y).unwrap();
        assert_eq!(
            y3.atoms(),
            &[(rat(-2, 9), rat(1, 3)), (rat(1, 9), rat(2, 3))]
        );

        let y3_hat = table.normalized(3, Scaling::YHat).unwrap();
        assert_eq!(
            y3_hat.atoms(),
            &[(rat(-1, 6), rat(1, 3)), (rat(1, 12), rat(2, 3))]
        );
    }

    #[test]
    fn normalized_laws_have_zero_mean_and_small_sd() {
        let mut table = PmfTable::new(16);
        for n in 1..=16usize {
            let y = table.normalized(n, Scaling::Y).unwrap();
            assert_eq!(y.mean(), rat_int(0), "mean at n = {n}");
            let (_, hi) = to_f64_bounds(&y.variance());
            assert!(hi < SIGMA_SQ, "variance below sigma^2 at n = {n}");
        }
    }

    #[test]
    fn mu_table_agrees_with_closed_form() {
        let table = MuTable::new(60);
        for k in 0..=60usize {
            assert_eq!(table.mu(k), mean_comparisons(k));
            let f = table.mu_f64(k);
            let exact = rational::to_f64(&mean_comparisons(k));
            assert!((f - exact).abs() <= exact.abs() * 1e-15);
        }
    }

    #[test]
    fn mean_f64_tracks_exact() {
        for n in [1usize, 10, 100, 1000] {
            let exact = rational::to_f64(&mean_comparisons(n));
            assert!((mean_f64(n) - exact).abs() < 1e-9 * exact.max(1.0));
        }
    }

    #[test]
    fn sandwich_holds_up_to_2000() {
        assert_eq!(mean_sandwich_violation(2000, 1e-9), None);
    }

    #[test]
    fn pmf_json_round_trip() {
        let mut table = PmfTable::new(6);
        let pmf = table.pmf(6).unwrap();
        let text = pmf_to_json(pmf);
        let back = pmf_from_json(&text).unwrap();
        assert_eq!(&back, pmf);
        assert!(text.contains("\"k_min\""));
    }

    #[test]
    fn disk_cache_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut table =
            PmfTable::with_options(6, Parallelism::Auto, Some(dir.path().to_path_buf()));
        let direct = table.pmf(6).unwrap().clone();
        assert!(dir.path().join("pmf-6.json").exists());

        let mut reloaded =
            PmfTable::with_options(6, Parallelism::Sequential, Some(dir.path().to_path_buf()));
        assert_eq!(reloaded.pmf(6).unwrap(), &direct);
    }

    #[test]
    fn parallel_and_sequential_agree() {
        let mut seq = PmfTable::with_options(12, Parallelism::Sequential, None);
        let mut auto = PmfTable::with_options(12, Parallelism::Auto, None);
        assert_eq!(seq.pmf(12).unwrap(), auto.pmf(12).unwrap());
    }

    #[test]
    fn tail_probability_is_exact() {
        let mut table = PmfTable::new(3);
        let p3 = table.pmf(3).unwrap();
        // mu_3 = 8/3; |2 - 8/3| = 2/3 >= 0.25 * 8/3 exactly
        let tail = p3.tail_two_sided(0.25);
        assert_eq!(tail, rat(1, 3));
    }
}
