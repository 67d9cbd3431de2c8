//! Minimal-coupling distances between discrete distributions.
//!
//! Two modes share one generic core: exact big-rational atoms (the laws of
//! `Y_n`) and floating-point atoms (empirical laws). The quantile coupling of
//! two discrete laws is a finite segmentation of the common uniform
//! parameter, and it attains `d_p` for every `p` simultaneously, so all
//! Wasserstein orders ride on the same merge. The Kolmogorov-Smirnov sup is
//! reached at an atom and falls out of a linear CDF scan.

use num_traits::{One, Signed, Zero};

use crate::error::Error;
use crate::exact::NormalizedAtoms;
use crate::rational::{self, BigRational};
use crate::{Parallelism, Result};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

// ---------------------------------------------------------------------------
// scalar abstraction
// ---------------------------------------------------------------------------

/// Arithmetic needed by the coupling kernels; implemented by `f64` and
/// `BigRational`.
pub trait Scalar: Clone + PartialOrd + std::fmt::Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn abs_val(&self) -> Self;
    fn as_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn one() -> Self {
        1.0
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs_val(&self) -> Self {
        self.abs()
    }
    fn as_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        <BigRational as Zero>::zero()
    }
    fn one() -> Self {
        <BigRational as One>::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn abs_val(&self) -> Self {
        Signed::abs(self)
    }
    fn as_f64(&self) -> f64 {
        rational::to_f64(self)
    }
}

// ---------------------------------------------------------------------------
// distributions
// ---------------------------------------------------------------------------

/// A discrete probability distribution: strictly increasing locations with
/// positive masses. Exact mode keeps everything rational; floating mode
/// tolerates `|sum - 1| < 1e-12` (checked with compensated summation).
#[derive(Clone, Debug, PartialEq)]
pub enum DiscreteDistribution {
    Exact(Vec<(BigRational, BigRational)>),
    Float(Vec<(f64, f64)>),
}

impl DiscreteDistribution {
    /// Validates, sorts, merges duplicate locations, and drops zero masses.
    pub fn exact(mut atoms: Vec<(BigRational, BigRational)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if atoms.iter().any(|(_, m)| m.is_negative()) {
            return Err(Error::InvalidDistribution("negative mass".into()));
        }
        atoms.sort_by(|a, b| a.0.cmp(&b.0));
        let mut merged: Vec<(BigRational, BigRational)> = Vec::with_capacity(atoms.len());
        for (loc, mass) in atoms {
            if mass.is_zero() {
                continue;
            }
            match merged.last_mut() {
                Some((prev, m)) if *prev == loc => *m += mass,
                _ => merged.push((loc, mass)),
            }
        }
        let total: BigRational = merged.iter().map(|(_, m)| m).sum();
        if !total.is_one() {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {}, not 1",
                rational::format_rat(&total)
            )));
        }
        Ok(DiscreteDistribution::Exact(merged))
    }

    pub fn float(mut atoms: Vec<(f64, f64)>) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidDistribution("no atoms".into()));
        }
        if atoms
            .iter()
            .any(|(x, m)| !x.is_finite() || !m.is_finite() || *m < 0.0)
        {
            return Err(Error::InvalidDistribution(
                "non-finite atom or negative mass".into(),
            ));
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (loc, mass) in atoms {
            if mass == 0.0 {
                continue;
            }
            match merged.last_mut() {
                Some((prev, m)) if *prev == loc => *m += mass,
                _ => merged.push((loc, mass)),
            }
        }
        // compensated total so the tolerance reflects the masses, not the sum order
        let mut total = 0.0f64;
        let mut comp = 0.0f64;
        for (_, m) in &merged {
            let y = *m - comp;
            let t = total + y;
            comp = (t - total) - y;
            total = t;
        }
        if (total - 1.0).abs() >= 1e-12 {
            return Err(Error::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(DiscreteDistribution::Float(merged))
    }

    /// Empirical law of a sample, each point carrying mass `1/len`.
    pub fn from_samples(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidDistribution("empty sample".into()));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let mass = 1.0 / values.len() as f64;
        let mut atoms: Vec<(f64, f64)> = Vec::new();
        for v in sorted {
            match atoms.last_mut() {
                Some((prev, m)) if *prev == v => *m += mass,
                _ => atoms.push((v, mass)),
            }
        }
        Self::float(atoms)
    }

    /// The exact law of a normalized comparison count.
    pub fn from_normalized(atoms: &NormalizedAtoms) -> Self {
        DiscreteDistribution::Exact(atoms.atoms().to_vec())
    }

    /// Exact point mass at zero (the degenerate laws `Y_1`, `Y_2`).
    pub fn point_mass_at_zero() -> Self {
        DiscreteDistribution::Exact(vec![(
            <BigRational as Zero>::zero(),
            <BigRational as One>::one(),
        )])
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, DiscreteDistribution::Exact(_))
    }

    pub fn len(&self) -> usize {
        match self {
            DiscreteDistribution::Exact(a) => a.len(),
            DiscreteDistribution::Float(a) => a.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Atom list as floats regardless of mode.
    pub fn atoms_f64(&self) -> Vec<(f64, f64)> {
        match self {
            DiscreteDistribution::Exact(a) => a
                .iter()
                .map(|(x, m)| (rational::to_f64(x), rational::to_f64(m)))
                .collect(),
            DiscreteDistribution::Float(a) => a.clone(),
        }
    }
}

// ---------------------------------------------------------------------------
// quantile coupling
// ---------------------------------------------------------------------------

/// One segment of the common-uniform quantile coupling.
#[derive(Clone, Debug, PartialEq)]
pub struct Segment<T> {
    pub width: T,
    pub x: T,
    pub y: T,
}

/// Merged quantile segmentation of two discrete laws; at most
/// `|atoms_1| + |atoms_2| - 1` segments.
#[derive(Clone, Debug)]
pub enum CouplingSegments {
    Exact(Vec<Segment<BigRational>>),
    Float(Vec<Segment<f64>>),
}

impl CouplingSegments {
    pub fn len(&self) -> usize {
        match self {
            CouplingSegments::Exact(s) => s.len(),
            CouplingSegments::Float(s) => s.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn widths_f64(&self) -> Vec<f64> {
        match self {
            CouplingSegments::Exact(s) => s.iter().map(|seg| seg.width.as_f64()).collect(),
            CouplingSegments::Float(s) => s.iter().map(|seg| seg.width).collect(),
        }
    }
}

fn merge_segments<T: Scalar>(a: &[(T, T)], b: &[(T, T)]) -> Vec<Segment<T>> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut cum_a = a[0].1.clone();
    let mut cum_b = b[0].1.clone();
    let mut consumed = T::zero();
    loop {
        let a_last = ia + 1 == a.len();
        let b_last = ib + 1 == b.len();
        if a_last && b_last {
            let width = T::one().sub(&consumed);
            if width > T::zero() {
                out.push(Segment {
                    width,
                    x: a[ia].0.clone(),
                    y: b[ib].0.clone(),
                });
            }
            return out;
        }
        let (advance_a, advance_b) = if a_last {
            (false, true)
        } else if b_last || cum_a < cum_b {
            (true, false)
        } else if cum_b < cum_a {
            (false, true)
        } else {
            (true, true)
        };
        let next = if advance_a { cum_a.clone() } else { cum_b.clone() };
        let width = next.sub(&consumed);
        if width > T::zero() {
            out.push(Segment {
                width,
                x: a[ia].0.clone(),
                y: b[ib].0.clone(),
            });
        }
        consumed = next;
        if advance_a {
            ia += 1;
            cum_a = cum_a.add(&a[ia].1);
        }
        if advance_b {
            ib += 1;
            cum_b = cum_b.add(&b[ib].1);
        }
    }
}

/// The quantile coupling of two laws: pair the `u`-quantiles of both over a
/// shared uniform `u`. Exact when both inputs are exact.
pub fn quantile_coupling(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> CouplingSegments {
    match (d1, d2) {
        (DiscreteDistribution::Exact(a), DiscreteDistribution::Exact(b)) => {
            CouplingSegments::Exact(merge_segments(a, b))
        }
        _ => CouplingSegments::Float(merge_segments(&d1.atoms_f64(), &d2.atoms_f64())),
    }
}

// ---------------------------------------------------------------------------
// Wasserstein distances
// ---------------------------------------------------------------------------

/// A `d_p` value. `power_exact` carries the exact rational `d_p^p` when `p`
/// is an even integer and both inputs are exact; every other case evaluates
/// `|x - y|^p` in floating point on the exact segmentation.
#[derive(Clone, Debug)]
pub struct WassersteinDistance {
    pub p: f64,
    pub value: f64,
    pub power_exact: Option<BigRational>,
}

fn even_integer(p: f64) -> Option<u32> {
    if p.fract() == 0.0 && p >= 2.0 && p <= u32::MAX as f64 && (p as u64).is_multiple_of(2) {
        Some(p as u32)
    } else {
        None
    }
}

/// Minimal `L^p` distance between two laws, computed on the quantile
/// coupling (which is optimal for every `p >= 1` at once).
pub fn wasserstein_p(
    d1: &DiscreteDistribution,
    d2: &DiscreteDistribution,
    p: f64,
) -> Result<WassersteinDistance> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    if let (Some(even), DiscreteDistribution::Exact(a), DiscreteDistribution::Exact(b)) =
        (even_integer(p), d1, d2)
    {
        let segments = merge_segments(a, b);
        let mut power = <BigRational as Zero>::zero();
        for seg in &segments {
            let diff = &seg.x - &seg.y;
            let mut term = <BigRational as One>::one();
            for _ in 0..even {
                term *= &diff;
            }
            power += term * &seg.width;
        }
        let value = rational::to_f64(&power).powf(1.0 / p);
        return Ok(WassersteinDistance {
            p,
            value,
            power_exact: Some(power),
        });
    }
    let segments = merge_segments(&d1.atoms_f64(), &d2.atoms_f64());
    let power: f64 = segments
        .iter()
        .map(|seg| seg.width * (seg.x - seg.y).abs().powf(p))
        .sum();
    Ok(WassersteinDistance {
        p,
        value: power.powf(1.0 / p),
        power_exact: None,
    })
}

// ---------------------------------------------------------------------------
// Kolmogorov-Smirnov distance
// ---------------------------------------------------------------------------

/// A KS distance; exact rational when both inputs are exact.
#[derive(Clone, Debug)]
pub struct KsDistance {
    pub value: f64,
    pub exact: Option<BigRational>,
}

fn ks_scan<T: Scalar>(a: &[(T, T)], b: &[(T, T)]) -> T {
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut fa = T::zero();
    let mut fb = T::zero();
    let mut best = T::zero();
    // the sup of |F1 - F2| over a merged scan; both one-sided limits at each
    // atom are covered because the pre-jump difference is the post-jump
    // difference of the previous event
    while ia < a.len() || ib < b.len() {
        let next_a = a.get(ia).map(|(x, _)| x.clone());
        let next_b = b.get(ib).map(|(x, _)| x.clone());
        let at = match (&next_a, &next_b) {
            (Some(x), Some(y)) => {
                if x < y {
                    x.clone()
                } else {
                    y.clone()
                }
            }
            (Some(x), None) => x.clone(),
            (None, Some(y)) => y.clone(),
            (None, None) => unreachable!(),
        };
        while ia < a.len() && a[ia].0 == at {
            fa = fa.add(&a[ia].1);
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == at {
            fb = fb.add(&b[ib].1);
            ib += 1;
        }
        let gap = fa.sub(&fb).abs_val();
        if gap > best {
            best = gap;
        }
    }
    best
}

/// `sup_x |F1(x) - F2(x)|`, evaluated by a linear merge of the atoms.
pub fn ks_distance(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> KsDistance {
    match (d1, d2) {
        (DiscreteDistribution::Exact(a), DiscreteDistribution::Exact(b)) => {
            let exact = ks_scan(a, b);
            KsDistance {
                value: rational::to_f64(&exact),
                exact: Some(exact),
            }
        }
        _ => {
            let value = ks_scan(&d1.atoms_f64(), &d2.atoms_f64());
            KsDistance { value, exact: None }
        }
    }
}

// ---------------------------------------------------------------------------
// norms and scalar bounds
// ---------------------------------------------------------------------------

/// `(E |X|^q)^{1/q}` for the law `d`.
pub fn moment_norm(d: &DiscreteDistribution, q: f64) -> Result<f64> {
    if !q.is_finite() || q < 1.0 {
        return Err(Error::InvalidOrder(q));
    }
    let power: f64 = d
        .atoms_f64()
        .iter()
        .map(|(x, m)| m * x.abs().powf(q))
        .sum();
    Ok(power.powf(1.0 / q))
}

/// KS upper bound from a `d_p` bound against a law with density bounded by
/// `M`: `(p+1)^{1/(p+1)} (M d_p)^{p/(p+1)}`.
pub fn ks_from_dp(m: f64, dp_value: f64, p: f64) -> Result<f64> {
    if !p.is_finite() || p < 1.0 {
        return Err(Error::InvalidOrder(p));
    }
    if m < 0.0 || dp_value < 0.0 {
        return Err(Error::OutOfRange {
            name: "m or dp",
            value: m.min(dp_value),
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok((p + 1.0).powf(1.0 / (p + 1.0)) * (m * dp_value).powf(p / (p + 1.0)))
}

/// KS lower bound between a continuous law and a law supported on a lattice
/// of spacing `1/a`: `1 / (12 a sigma_z + 8)`.
pub fn lattice_ks_lower(a: f64, sigma_z: f64) -> Result<f64> {
    if !(a > 0.0) {
        return Err(Error::OutOfRange {
            name: "a",
            value: a,
            lo: f64::MIN_POSITIVE,
            hi: f64::INFINITY,
        });
    }
    if sigma_z < 0.0 {
        return Err(Error::OutOfRange {
            name: "sigma_z",
            value: sigma_z,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(1.0 / (12.0 * a * sigma_z + 8.0))
}

/// Guaranteed maximal point mass of an integer-valued law with standard
/// deviation `sigma_z`: `1 / (6 sigma_z + 4)`.
pub fn integer_mass_lower(sigma_z: f64) -> Result<f64> {
    if sigma_z < 0.0 {
        return Err(Error::OutOfRange {
            name: "sigma_z",
            value: sigma_z,
            lo: 0.0,
            hi: f64::INFINITY,
        });
    }
    Ok(1.0 / (6.0 * sigma_z + 4.0))
}

// ---------------------------------------------------------------------------
// convolution (for brute-force moment checks)
// ---------------------------------------------------------------------------

/// Law of the sum of two independent draws.
pub fn convolve(d1: &DiscreteDistribution, d2: &DiscreteDistribution) -> DiscreteDistribution {
    match (d1, d2) {
        (DiscreteDistribution::Exact(a), DiscreteDistribution::Exact(b)) => {
            let mut sums: std::collections::BTreeMap<BigRational, BigRational> =
                std::collections::BTreeMap::new();
            for (xa, ma) in a {
                for (xb, mb) in b {
                    let loc = xa + xb;
                    let mass = ma * mb;
                    sums.entry(loc)
                        .and_modify(|m| *m += &mass)
                        .or_insert(mass);
                }
            }
            DiscreteDistribution::Exact(sums.into_iter().collect())
        }
        _ => {
            let a = d1.atoms_f64();
            let b = d2.atoms_f64();
            let mut atoms = Vec::with_capacity(a.len() * b.len());
            for (xa, ma) in &a {
                for (xb, mb) in &b {
                    atoms.push((xa + xb, ma * mb));
                }
            }
            atoms.sort_by(|p, q| p.0.total_cmp(&q.0));
            let mut merged: Vec<(f64, f64)> = Vec::new();
            for (x, m) in atoms {
                match merged.last_mut() {
                    Some((prev, pm)) if *prev == x => *pm += m,
                    _ => merged.push((x, m)),
                }
            }
            DiscreteDistribution::Float(merged)
        }
    }
}

// ---------------------------------------------------------------------------
// pairwise matrices
// ---------------------------------------------------------------------------

/// Exact `d_2^2` for every pair; rows run in parallel under
/// [`Parallelism::Auto`]. All inputs must be exact.
pub fn pairwise_d2_squared(
    laws: &[DiscreteDistribution],
    mode: Parallelism,
) -> Result<Vec<Vec<BigRational>>> {
    if let Some(bad) = laws.iter().position(|d| !d.is_exact()) {
        return Err(Error::InvalidDistribution(format!(
            "law at index {bad} is not exact"
        )));
    }
    let row = |i: usize| -> Result<Vec<BigRational>> {
        (0..laws.len())
            .map(|j| {
                Ok(wasserstein_p(&laws[i], &laws[j], 2.0)?
                    .power_exact
                    .expect("even order on exact laws"))
            })
            .collect()
    };
    let indices: Vec<usize> = (0..laws.len()).collect();
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return indices.par_iter().map(|&i| row(i)).collect();
    }
    let _ = mode;
    indices.iter().map(|&i| row(i)).collect()
}

/// KS distance for every pair; rows run in parallel under
/// [`Parallelism::Auto`].
pub fn pairwise_ks(laws: &[DiscreteDistribution], mode: Parallelism) -> Vec<Vec<f64>> {
    let row = |i: usize| -> Vec<f64> {
        (0..laws.len())
            .map(|j| ks_distance(&laws[i], &laws[j]).value)
            .collect()
    };
    let indices: Vec<usize> = (0..laws.len()).collect();
    #[cfg(feature = "parallel")]
    if mode.is_parallel() {
        return indices.par_iter().map(|&i| row(i)).collect();
    }
    let _ = mode;
    indices.iter().map(|&i| row(i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{PmfTable, Scaling};
    use crate::rational::{rat, rat_int};
    use proptest::prelude::*;

    fn y_law(table: &mut PmfTable, n: usize) -> DiscreteDistribution {
        DiscreteDistribution::from_normalized(&table.normalized(n, Scaling::Y).unwrap())
    }

    #[test]
    fn coupling_of_identical_laws_is_diagonal() {
        let mut table = PmfTable::new(6);
        let d = y_law(&mut table, 5);
        match quantile_coupling(&d, &d) {
            CouplingSegments::Exact(segs) => {
                for seg in segs {
                    assert_eq!(seg.x, seg.y);
                }
            }
            _ => panic!("expected exact segments"),
        }
    }

    #[test]
    fn coupling_y2_y3() {
        let mut table = PmfTable::new(3);
        let d2 = y_law(&mut table, 2);
        let d3 = y_law(&mut table, 3);
        match quantile_coupling(&d2, &d3) {
            CouplingSegments::Exact(segs) => {
                assert_eq!(segs.len(), 2);
                assert_eq!(segs[0].width, rat(1, 3));
                assert_eq!(segs[1].width, rat(2, 3));
                assert!(segs.iter().all(|s| s.x == rat_int(0)));
            }
            _ => panic!("expected exact segments"),
        }
    }

    #[test]
    fn coupling_y3_y4() {
        let mut table = PmfTable::new(4);
        let d3 = y_law(&mut table, 3);
        let d4 = y_law(&mut table, 4);
        match quantile_coupling(&d3, &d4) {
            CouplingSegments::Exact(segs) => {
                let widths: Vec<_> = segs.iter().map(|s| s.width.clone()).collect();
                assert_eq!(widths, vec![rat(1, 3), rat(1, 6), rat(1, 6), rat(1, 3)]);
            }
            _ => panic!("expected exact segments"),
        }
    }

    #[test]
    fn d2_squared_y3_y4_hand_value() {
        let mut table = PmfTable::new(4);
        let d3 = y_law(&mut table, 3);
        let d4 = y_law(&mut table, 4);
        let w = wasserstein_p(&d3, &d4, 2.0).unwrap();
        assert_eq!(w.power_exact.unwrap(), rat(149, 5184));
        assert!((w.value - (149.0f64 / 5184.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn d2_against_point_mass_is_second_moment() {
        let mut table = PmfTable::new(12);
        let d2 = y_law(&mut table, 2);
        for m in 3..=12usize {
            let dm = y_law(&mut table, m);
            let w = wasserstein_p(&d2, &dm, 2.0).unwrap();
            let variance = table.normalized(m, Scaling::Y).unwrap().variance();
            assert_eq!(w.power_exact.unwrap(), variance, "m = {m}");
        }
    }

    #[test]
    fn degenerate_pair_has_zero_distance() {
        let mut table = PmfTable::new(2);
        let d1 = y_law(&mut table, 1);
        let d2 = y_law(&mut table, 2);
        let w = wasserstein_p(&d1, &d2, 2.0).unwrap();
        assert_eq!(w.value, 0.0);
        assert_eq!(ks_distance(&d1, &d2).value, 0.0);
    }

    #[test]
    fn ks_examples() {
        let mut table = PmfTable::new(4);
        let d2 = y_law(&mut table, 2);
        let d3 = y_law(&mut table, 3);
        let d4 = y_law(&mut table, 4);
        assert_eq!(ks_distance(&d3, &d3).exact.unwrap(), rat_int(0));
        assert_eq!(ks_distance(&d2, &d3).exact.unwrap(), rat(2, 3));
        assert_eq!(ks_distance(&d3, &d4).exact.unwrap(), rat(1, 3));
    }

    #[test]
    fn moment_norm_examples() {
        let mut table = PmfTable::new(10);
        let d2 = y_law(&mut table, 2);
        assert_eq!(moment_norm(&d2, 1.0).unwrap(), 0.0);
        assert_eq!(moment_norm(&d2, 3.5).unwrap(), 0.0);

        let d3 = y_law(&mut table, 3);
        let expected = 2.0f64.sqrt() / 9.0;
        assert!((moment_norm(&d3, 2.0).unwrap() - expected).abs() < 1e-15);

        // Lyapunov: the norm is nondecreasing in q
        let d10 = y_law(&mut table, 10);
        let mut prev = 0.0;
        for q in [1.0, 1.5, 2.0, 3.0, 4.0, 6.0] {
            let norm = moment_norm(&d10, q).unwrap();
            assert!(norm >= prev - 1e-12, "q = {q}");
            prev = norm;
        }

        assert!(moment_norm(&d3, 0.5).is_err());
    }

    #[test]
    fn order_below_one_rejected() {
        let mut table = PmfTable::new(3);
        let d = y_law(&mut table, 3);
        assert!(matches!(
            wasserstein_p(&d, &d, 0.5),
            Err(Error::InvalidOrder(_))
        ));
        assert!(wasserstein_p(&d, &d, f64::INFINITY).is_err());
    }

    #[test]
    fn ks_conversion_examples() {
        // (M, d_p, p) = (16, 2/sqrt(n), 2) gives (3072/n)^{1/3}
        let n = 7.0f64;
        let bound = ks_from_dp(16.0, 2.0 / n.sqrt(), 2.0).unwrap();
        assert!((bound - (3072.0 / n).powf(1.0 / 3.0)).abs() < 1e-12);
        assert!((3072.0f64).powf(1.0 / 3.0) < 15.0);

        // degenerate density bound
        assert_eq!(ks_from_dp(0.0, 0.3, 2.0).unwrap(), 0.0);
    }

    #[test]
    fn staircase_against_uniform() {
        // atoms at i/n with mass 1/n: d_1 to unif(0,1) is 1/(2n), true KS is 1/n
        let n = 20usize;
        let stairs: Vec<(f64, f64)> = (1..=n)
            .map(|i| (i as f64 / n as f64, 1.0 / n as f64))
            .collect();
        let d = DiscreteDistribution::float(stairs).unwrap();
        let bound = ks_from_dp(1.0, 1.0 / (2.0 * n as f64), 1.0).unwrap();
        assert!((bound - 1.0 / (n as f64).sqrt()).abs() < 1e-12);

        // direct CDF scan against the continuous uniform
        let mut true_ks = 0.0f64;
        let mut cum = 0.0;
        for (x, m) in d.atoms_f64() {
            true_ks = true_ks.max((cum - x).abs());
            cum += m;
            true_ks = true_ks.max((cum - x).abs());
        }
        assert!((true_ks - 1.0 / n as f64).abs() < 1e-12);
        assert!(true_ks <= bound);
    }

    #[test]
    fn lattice_and_integer_mass_bounds() {
        assert_eq!(lattice_ks_lower(1.0, 0.0).unwrap(), 0.125);
        assert!(lattice_ks_lower(0.0, 1.0).is_err());
        assert!((integer_mass_lower(0.0).unwrap() - 0.25).abs() < 1e-15);

        // X_3: sd = sqrt(2/9), actual max mass 2/3 dominates the bound
        let sd = (2.0f64 / 9.0).sqrt();
        let bound = integer_mass_lower(sd).unwrap();
        assert!((bound - 0.14645).abs() < 5e-6);
        assert!(2.0 / 3.0 >= bound);
    }

    #[test]
    fn three_term_moment_bound() {
        // E|Z1+Z2+Z3|^p <= E|Z1|^p + E|Z2|^p
        //                   + (||Z1||_{p-1} + ||Z2||_{p-1} + ||Z3||_p)^p
        // for independent variables; brute-force convolution on the left
        let mut table = PmfTable::new(4);
        let laws: Vec<_> = (2..=4).map(|n| y_law(&mut table, n)).collect();
        for z1 in &laws {
            for z2 in &laws {
                for z3 in &laws {
                    let sum = convolve(&convolve(z1, z2), z3);
                    for p in [2.0f64, 3.0, 4.0] {
                        let lhs = moment_norm(&sum, p).unwrap().powf(p);
                        let rhs = moment_norm(z1, p).unwrap().powf(p)
                            + moment_norm(z2, p).unwrap().powf(p)
                            + (moment_norm(z1, p - 1.0).unwrap()
                                + moment_norm(z2, p - 1.0).unwrap()
                                + moment_norm(z3, p).unwrap())
                            .powf(p);
                        assert!(lhs <= rhs + 1e-9 * rhs.abs(), "p = {p}");
                    }
                }
            }
        }
    }

    #[test]
    fn pairwise_matrices_parallel_match() {
        let mut table = PmfTable::new(8);
        let laws: Vec<_> = (2..=8).map(|n| y_law(&mut table, n)).collect();
        let seq = pairwise_d2_squared(&laws, Parallelism::Sequential).unwrap();
        let auto = pairwise_d2_squared(&laws, Parallelism::Auto).unwrap();
        assert_eq!(seq, auto);
        for (i, row) in seq.iter().enumerate() {
            assert!(row[i].is_zero());
            for (j, v) in row.iter().enumerate() {
                assert_eq!(*v, seq[j][i], "symmetry at ({i},{j})");
            }
        }
        let ks_seq = pairwise_ks(&laws, Parallelism::Sequential);
        let ks_auto = pairwise_ks(&laws, Parallelism::Auto);
        assert_eq!(ks_seq, ks_auto);
    }

    #[test]
    fn float_mode_mass_tolerance() {
        // 1e5 equal masses survive the compensated validation
        let atoms: Vec<(f64, f64)> = (0..100_000).map(|i| (i as f64, 1e-5)).collect();
        assert!(DiscreteDistribution::float(atoms).is_ok());
        assert!(DiscreteDistribution::float(vec![(0.0, 0.5), (1.0, 0.6)]).is_err());
    }

    fn arb_exact_dist() -> impl Strategy<Value = DiscreteDistribution> {
        proptest::collection::btree_map(-40i64..40, 1i64..20, 1..6).prop_map(|m| {
            let total: i64 = m.values().sum();
            let atoms = m
                .into_iter()
                .map(|(loc, w)| (rat_int(loc), rat(w, total)))
                .collect();
            DiscreteDistribution::exact(atoms).unwrap()
        })
    }

    proptest! {
        #[test]
        fn wasserstein_identity_and_symmetry(d1 in arb_exact_dist(), d2 in arb_exact_dist()) {
            let self_dist = wasserstein_p(&d1, &d1, 2.0).unwrap();
            prop_assert!(self_dist.power_exact.unwrap().is_zero());
            let a = wasserstein_p(&d1, &d2, 2.0).unwrap().power_exact.unwrap();
            let b = wasserstein_p(&d2, &d1, 2.0).unwrap().power_exact.unwrap();
            prop_assert_eq!(a, b);
        }

        #[test]
        fn ks_is_a_metric_sample(d1 in arb_exact_dist(), d2 in arb_exact_dist(), d3 in arb_exact_dist()) {
            let ab = ks_distance(&d1, &d2).exact.unwrap();
            let ba = ks_distance(&d2, &d1).exact.unwrap();
            prop_assert_eq!(&ab, &ba);
            prop_assert!(ab >= rat_int(0) && ab <= rat_int(1));
            let ac = ks_distance(&d1, &d3).exact.unwrap();
            let cb = ks_distance(&d3, &d2).exact.unwrap();
            prop_assert!(ab <= ac + cb);
        }

        #[test]
        fn coupling_segment_budget(d1 in arb_exact_dist(), d2 in arb_exact_dist()) {
            let segments = quantile_coupling(&d1, &d2);
            prop_assert!(segments.len() < d1.len() + d2.len());
            let widths = segments.widths_f64();
            prop_assert!((widths.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }
}
