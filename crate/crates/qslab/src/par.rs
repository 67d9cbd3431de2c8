/// Execution mode for the data-parallel kernels (pmf mixtures, Monte Carlo
/// replicates, pairwise distance matrices).
///
/// `Auto` uses rayon when the `parallel` feature is enabled and falls back to
/// sequential execution otherwise. Every kernel produces bit-identical output
/// in both modes; the benches compare their throughput.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    #[default]
    Auto,
}

impl Parallelism {
    pub fn is_parallel(self) -> bool {
        matches!(self, Parallelism::Auto) && cfg!(feature = "parallel")
    }
}
