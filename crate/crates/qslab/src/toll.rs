//! The toll functions of the comparison-count recurrence.
//!
//! `C(u) = 2u ln u + 2(1-u) ln(1-u) + 1` is the limit toll, `C_n(i)` its
//! discrete counterpart, and `b_n` the L2 distance between the two under the
//! coupling `u -> ceil(n u)`. `b_n^2` decomposes into exact-rational toll
//! sums plus transcendental integrals of the antiderivative `F`; the rational
//! part stays exact until the final combination, which kills the cancellation
//! between the two O(1) terms.

use num_bigint::BigInt;
use num_traits::Zero;

use crate::consts::{toll_error_coefficient, SIGMA_SQ};
use crate::error::Error;
use crate::exact::MuTable;
use crate::rational::{self, BigRational};
use crate::{Parallelism, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Limit toll `C(u)`, with the continuous extension `C(0) = C(1) = 1`.
pub fn c_limit(u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&u) {
        return Err(Error::OutOfRange {
            name: "u",
            value: u,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(c_limit_unchecked(u))
}

pub(crate) fn c_limit_unchecked(u: f64) -> f64 {
    if u == 0.0 || u == 1.0 {
        return 1.0;
    }
    2.0 * u * u.ln() + 2.0 * (1.0 - u) * (1.0 - u).ln() + 1.0
}

/// Exact discrete toll `C_n(i) = (n-1)/n + (mu_{i-1} + mu_{n-i} - mu_n)/n`.
pub fn c_discrete(mu: &MuTable, n: usize, i: usize) -> Result<BigRational> {
    if n < 1 || n > mu.max_n() {
        return Err(Error::IndexOutOfRange {
            name: "n",
            value: n,
            lo: 1,
            hi: mu.max_n(),
        });
    }
    if i < 1 || i > n {
        return Err(Error::IndexOutOfRange {
            name: "i",
            value: i,
            lo: 1,
            hi: n,
        });
    }
    let num = rational::rat_int(n as i64 - 1) + mu.mu(i - 1) + mu.mu(n - i) - mu.mu(n);
    Ok(num / rational::rat_int(n as i64))
}

/// Antiderivative `F(u) = u^2 ln u - (1-u)^2 ln(1-u)` with `F' = C` on (0,1)
/// and the limit values `F(0) = F(1) = 0`.
pub fn toll_antiderivative(u: f64) -> f64 {
    let first = if u == 0.0 { 0.0 } else { u * u * u.ln() };
    let v = 1.0 - u;
    let second = if v == 0.0 { 0.0 } else { v * v * v.ln() };
    first - second
}

/// One row of the toll-error table.
#[derive(Clone, Copy, Debug, serde::Serialize)]
pub struct TollErrorRow {
    pub n: usize,
    /// `b_n^2`, the squared L2 toll error.
    pub b_n_squared: f64,
    /// `(3 + 2 pi / sqrt 3) / n`, the certified upper bound on `b_n`.
    pub lemma_bound: f64,
}

impl TollErrorRow {
    pub fn b_n(&self) -> f64 {
        self.b_n_squared.sqrt()
    }
}

/// Exact-core evaluation of `b_n^2 = sigma^2/3 - 2 sum_i C_n(i) (F(i/n) -
/// F((i-1)/n)) + (1/n) sum_i C_n(i)^2`.
///
/// The last sum is computed in big integers over the common denominator of
/// the mean table; only the `F` factors and the final combination are
/// floating point.
pub fn b_n_exact(mu: &MuTable, n: usize) -> Result<TollErrorRow> {
    if n < 1 || n > mu.max_n() {
        return Err(Error::IndexOutOfRange {
            name: "n",
            value: n,
            lo: 1,
            hi: mu.max_n(),
        });
    }
    let (numerators, denom) = mu.toll_numerators(n);
    let sum_sq: BigInt = numerators.iter().map(|a| a * a).sum();
    let toll_square_term = if sum_sq.is_zero() {
        0.0
    } else {
        // (1/n) * sum C_n(i)^2 = sum a_i^2 / (n * denom^2)
        rational::big_ratio_to_f64(&sum_sq, &(&denom * &denom * BigInt::from(n)))
    };

    let mut cross_term = 0.0f64;
    let mut f_prev = 0.0f64; // F(0)
    for i in 1..=n {
        let f_cur = toll_antiderivative(i as f64 / n as f64);
        cross_term += mu.toll_f64(n, i) * (f_cur - f_prev);
        f_prev = f_cur;
    }

    let b_n_squared = (SIGMA_SQ / 3.0 - 2.0 * cross_term + toll_square_term).max(0.0);
    Ok(TollErrorRow {
        n,
        b_n_squared,
        lemma_bound: toll_error_coefficient() / n as f64,
    })
}

/// The toll-error table for `1..=max_n`; rows are independent and computed in
/// parallel under [`Parallelism::Auto`].
pub fn b_n_rows(mu: &MuTable, max_n: usize, mode: Parallelism) -> Result<Vec<TollErrorRow>> {
    if max_n > mu.max_n() {
        return Err(Error::IndexOutOfRange {
            name: "max_n",
            value: max_n,
            lo: 1,
            hi: mu.max_n(),
        });
    }
    let ns: Vec<usize> = (1..=max_n).collect();
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return ns.par_iter().map(|&n| b_n_exact(mu, n)).collect();
    }
    let _ = mode;
    ns.iter().map(|&n| b_n_exact(mu, n)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_01;
    use crate::rational::{rat, rat_int, to_f64};
    use num_traits::Zero;
    use proptest::prelude::*;

    #[test]
    fn limit_toll_examples() {
        assert_eq!(c_limit(0.0).unwrap(), 1.0);
        assert_eq!(c_limit(1.0).unwrap(), 1.0);
        let mid = c_limit(0.5).unwrap();
        assert!((mid - (1.0 - 2.0 * 2.0f64.ln())).abs() < 1e-15);
        // symmetric up to the rounding of 1 - u
        assert!((c_limit(0.3).unwrap() - c_limit(0.7).unwrap()).abs() < 1e-14);
        assert!(c_limit(-0.1).is_err());
        assert!(c_limit(1.1).is_err());
    }

    #[test]
    fn limit_toll_range_and_minimum() {
        let min = 1.0 - 2.0 * 2.0f64.ln();
        for k in 0..=1000 {
            let u = k as f64 / 1000.0;
            let c = c_limit(u).unwrap();
            assert!(c <= 1.0 + 1e-15 && c >= min - 1e-15);
            assert!(c >= c_limit(0.5).unwrap() - 1e-15);
        }
    }

    #[test]
    fn discrete_toll_examples() {
        let mu = MuTable::new(40);
        assert_eq!(c_discrete(&mu, 1, 1).unwrap(), rat_int(0));
        assert_eq!(c_discrete(&mu, 2, 1).unwrap(), rat_int(0));
        assert_eq!(c_discrete(&mu, 3, 1).unwrap(), rat(1, 9));
        assert_eq!(c_discrete(&mu, 3, 2).unwrap(), rat(-2, 9));
        assert!(c_discrete(&mu, 3, 0).is_err());
        assert!(c_discrete(&mu, 3, 4).is_err());
    }

    #[test]
    fn discrete_toll_symmetric_and_mean_zero() {
        let mu = MuTable::new(30);
        for n in 1..=30usize {
            let mut sum = BigRational::zero();
            for i in 1..=n {
                let c = c_discrete(&mu, n, i).unwrap();
                assert_eq!(c, c_discrete(&mu, n, n + 1 - i).unwrap());
                sum += c;
            }
            assert!(sum.is_zero(), "sum C_{n}(i) must vanish");
        }
    }

    #[test]
    fn discrete_toll_converges_to_limit() {
        let mu = MuTable::new(2000);
        for u in [0.1, 0.33, 0.5, 0.72] {
            let n = 2000;
            let i = (u * n as f64).ceil() as usize;
            let discrete = to_f64(&c_discrete(&mu, n, i).unwrap());
            assert!((discrete - c_limit(u).unwrap()).abs() < 0.02);
        }
    }

    #[test]
    fn antiderivative_endpoints_and_midpoint() {
        assert_eq!(toll_antiderivative(0.0), 0.0);
        assert_eq!(toll_antiderivative(1.0), 0.0);
        assert!(toll_antiderivative(0.5).abs() < 1e-16);
    }

    #[test]
    fn antiderivative_differentiates_to_toll() {
        let h = 1e-6;
        for u in [0.37, 0.12, 0.81] {
            let fd = (toll_antiderivative(u + h) - toll_antiderivative(u - h)) / (2.0 * h);
            assert!((fd - c_limit(u).unwrap()).abs() < 1e-6, "at u = {u}");
        }
    }

    #[test]
    fn b_one_squared_is_sigma_sq_third() {
        let mu = MuTable::new(4);
        let row = b_n_exact(&mu, 1).unwrap();
        assert_eq!(row.b_n_squared, SIGMA_SQ / 3.0);
        assert!((row.b_n() - 0.3743).abs() < 1e-3);
    }

    /// Piecewise quadrature oracle for `b_n^2`, independent of the
    /// closed-form decomposition used by `b_n_exact`.
    fn b_n_by_quadrature(mu: &MuTable, n: usize) -> f64 {
        (1..=n)
            .map(|i| {
                let c_i = to_f64(&c_discrete(mu, n, i).unwrap());
                let lo = (i - 1) as f64 / n as f64;
                // map (0,1) -> ((i-1)/n, i/n)
                integrate_01(
                    |x, _| {
                        let u = lo + x / n as f64;
                        let d = c_limit_unchecked(u) - c_i;
                        d * d
                    },
                    1e-12,
                ) / n as f64
            })
            .sum()
    }

    #[test]
    fn b_n_matches_quadrature_oracle() {
        let mu = MuTable::new(8);
        for n in [2usize, 3, 5, 8] {
            let row = b_n_exact(&mu, n).unwrap();
            let oracle = b_n_by_quadrature(&mu, n);
            assert!(
                (row.b_n_squared - oracle).abs() < 1e-8,
                "n = {n}: exact {} vs quadrature {oracle}",
                row.b_n_squared
            );
        }
    }

    #[test]
    fn lemma_bound_holds_small_n() {
        let mu = MuTable::new(100);
        let rows = b_n_rows(&mu, 100, Parallelism::Auto).unwrap();
        for row in rows {
            assert!(
                row.b_n() <= row.lemma_bound,
                "n = {}: b_n = {} exceeds {}",
                row.n,
                row.b_n(),
                row.lemma_bound
            );
        }
    }

    #[test]
    fn rows_parallel_matches_sequential() {
        let mu = MuTable::new(60);
        let seq = b_n_rows(&mu, 60, Parallelism::Sequential).unwrap();
        let auto = b_n_rows(&mu, 60, Parallelism::Auto).unwrap();
        for (a, b) in seq.iter().zip(&auto) {
            assert_eq!(a.b_n_squared, b.b_n_squared);
        }
    }

    proptest! {
        #[test]
        fn limit_toll_symmetry(u in 0.0f64..=1.0) {
            let diff = (c_limit(u).unwrap() - c_limit(1.0 - u).unwrap()).abs();
            prop_assert!(diff < 1e-13);
        }
    }
}
