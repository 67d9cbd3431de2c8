use thiserror::Error;

/// Errors raised by the analysis routines.
///
/// Argument and range violations are reported eagerly, before any heavy
/// computation starts.
#[derive(Debug, Error)]
pub enum Error {
    /// The pmf recursion refuses to run past the configured cap: support size
    /// grows as `n(n-1)/2` and the convolution cost superlinearly, so raising
    /// the cap is a deliberate choice.
    #[error("n = {n} exceeds the configured pmf cap n_max = {n_max}; raise the cap to accept the O(n^2) support and convolution cost")]
    PmfCapExceeded { n: usize, n_max: usize },

    /// Harmonic numbers start at n = 1.
    #[error("harmonic numbers are defined for n >= 1")]
    HarmonicZero,

    /// A scalar argument fell outside its documented domain.
    #[error("{name} = {value} outside [{lo}, {hi}]")]
    OutOfRange {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    /// An index argument fell outside its documented range.
    #[error("{name} = {value} outside {lo}..={hi}")]
    IndexOutOfRange {
        name: &'static str,
        value: usize,
        lo: usize,
        hi: usize,
    },

    /// Wasserstein / moment orders must satisfy p >= 1 and be finite.
    #[error("order p = {0} must be finite and >= 1")]
    InvalidOrder(f64),

    /// A candidate global rate coefficient failed the table check.
    #[error("coefficient A = {a} fails abar_k <= A/sqrt(k), first at k = {k} where sqrt(k)*abar_k = {observed}")]
    InvalidCoefficient { a: f64, k: usize, observed: f64 },

    /// A soundness inequality inside the certificate pipeline failed; this
    /// indicates an implementation bug, not a defect of the bound itself.
    #[error("certificate check '{name}' failed: lhs = {lhs}, rhs = {rhs}")]
    CertificateCheck { name: String, lhs: f64, rhs: f64 },

    /// MGF evaluation would overflow.
    #[error("mgf exponent |lambda * x| = {0} exceeds the overflow guard 700")]
    MgfOverflow(f64),

    /// Monte Carlo work estimate exceeded the configured budget.
    #[error("sampling budget exceeded: n * reps = {requested} > {budget}")]
    BudgetExceeded { requested: u128, budget: u128 },

    /// The automatic lambda = ln ln n choice needs n >= 3.
    #[error("automatic lambda = ln ln n requires n >= 3")]
    AutoLambdaRange,

    /// A distribution failed validation.
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    /// A Monte Carlo operation was invoked without a seed.
    #[error("monte carlo checks require an explicit seed")]
    MissingSeed,

    /// A cached pmf file disagreed with the requested parameters.
    #[error("pmf cache file {path} is inconsistent: {reason}")]
    CacheMismatch { path: String, reason: String },

    #[error("malformed rational literal '{0}': expected 'numerator/denominator'")]
    BadRational(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
