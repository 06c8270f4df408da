//! Renewal functions under a Dirichlet-process mixing measure.
//!
//! Under `DP(alpha, H)` the first `n` inter-arrival times take `K` distinct
//! values, and the occupancy vector `V` (with `v_j` values seen exactly `j`
//! times) follows the Ewens sampling formula. Given `V`, `S_n` is a sum of
//! independent `j X` terms with `X ~ H`. For `H = Exp(lambda)` that sum is
//! hypoexponential, and its CDF is a signed Erlang mixture with partial
//! fraction coefficients that do not depend on `lambda`.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distributions::{BaseDistribution, ErlangComponent, SignedErlangMixture};
use crate::error::{ensure, Error, Result};
use crate::rng::StreamSeed;
use crate::special::{ln_factorial, ln_pochhammer};

pub const DEFAULT_N_MAX: usize = 40;

/// Coefficients above this magnitude are refused by [`partial_fraction_mixture`].
pub const ILL_CONDITIONED_COEFFICIENT: f64 = 1e12;

/// Occupancy encoding of an integer partition of `n`: `v[j - 1]` parts equal to `j`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PartitionVector {
    v: Vec<u32>,
}

impl PartitionVector {
    pub fn new(v: Vec<u32>) -> Result<Self> {
        ensure(!v.is_empty(), || "partition vector must be nonempty".into())?;
        let n: usize = v.iter().enumerate().map(|(j, &c)| (j + 1) * c as usize).sum();
        ensure(n == v.len(), || format!("sum j v_j = {n} does not match length {}", v.len()))?;
        Ok(Self { v })
    }

    /// From the parts themselves, e.g. `[2, 1]` for `3 = 2 + 1`.
    pub fn from_parts(parts: &[usize]) -> Result<Self> {
        let n: usize = parts.iter().sum();
        ensure(n >= 1 && parts.iter().all(|&p| p >= 1), || "parts must be positive".into())?;
        let mut v = vec![0u32; n];
        for &p in parts {
            v[p - 1] += 1;
        }
        Ok(Self { v })
    }

    pub fn n(&self) -> usize {
        self.v.len()
    }

    pub fn counts(&self) -> &[u32] {
        &self.v
    }

    /// Number of distinct values `K = sum_j v_j`.
    pub fn blocks(&self) -> u32 {
        self.v.iter().sum()
    }

    /// `(j, v_j)` for the nonzero entries, ascending in `j`.
    pub fn occupied(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.v.iter().enumerate().filter(|(_, c)| **c > 0).map(|(j, &c)| (j + 1, c))
    }
}

/// All partitions of `n` (at most [`DEFAULT_N_MAX`]) in lexicographic order of `v`.
pub fn enumerate_partitions(n: usize) -> Result<Vec<PartitionVector>> {
    enumerate_partitions_capped(n, DEFAULT_N_MAX)
}

pub fn enumerate_partitions_capped(n: usize, n_max: usize) -> Result<Vec<PartitionVector>> {
    ensure(n >= 1, || "n must be >= 1".into())?;
    if n > n_max {
        return Err(Error::PartitionCap { n, n_max });
    }
    let mut out = Vec::new();
    let mut v = vec![0u32; n];
    fill_partitions(n, n, &mut v, &mut out);
    out.sort();
    Ok(out)
}

fn fill_partitions(remaining: usize, largest: usize, v: &mut Vec<u32>, out: &mut Vec<PartitionVector>) {
    if remaining == 0 {
        out.push(PartitionVector { v: v.clone() });
        return;
    }
    for part in (1..=largest.min(remaining)).rev() {
        v[part - 1] += 1;
        fill_partitions(remaining - part, part, v, out);
        v[part - 1] -= 1;
    }
}

/// Rising factorial `(alpha)_n = Gamma(alpha + n) / Gamma(alpha)`.
pub fn pochhammer(alpha: f64, n: usize) -> f64 {
    ln_pochhammer(alpha, n).exp()
}

fn ln_ewens_base(v: &PartitionVector) -> f64 {
    let mut s = ln_factorial(v.n());
    for (j, c) in v.occupied() {
        s -= c as f64 * (j as f64).ln() + ln_factorial(c as usize);
    }
    s
}

/// Ewens sampling formula `P(V = v) = n!/(alpha)_n prod_j alpha^{v_j} / (j^{v_j} v_j!)`.
pub fn ewens_probability(v: &PartitionVector, alpha: f64) -> Result<f64> {
    ensure(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    Ok(ln_ewens_weight(v, alpha).exp())
}

fn ln_ewens_weight(v: &PartitionVector, alpha: f64) -> f64 {
    ln_ewens_base(v) + v.blocks() as f64 * alpha.ln() - ln_pochhammer(alpha, v.n())
}

/// Partitions of `n` up to this size get exact rational coefficients; larger
/// ones use the same recurrence in `f64`.
pub const EXACT_COEFFICIENT_MAX_N: usize = 20;

/// Arithmetic needed by the coefficient recurrence.
trait Field: Clone + std::ops::AddAssign + std::ops::Mul<Output = Self> + std::ops::Div<Output = Self> {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn from_int(x: i64) -> Self;
    fn ratio(a: i64, b: i64) -> Self {
        Self::from_int(a) / Self::from_int(b)
    }
}

impl Field for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn from_int(x: i64) -> Self {
        BigRational::from_integer(BigInt::from(x))
    }
    fn ratio(a: i64, b: i64) -> Self {
        BigRational::new(BigInt::from(a), BigInt::from(b))
    }
}

impl Field for f64 {
    fn zero() -> Self {
        0.0
    }
    fn is_zero(&self) -> bool {
        *self == 0.0
    }
    fn from_int(x: i64) -> Self {
        x as f64
    }
}

/// Partial fraction coefficients of `prod_j (1 + j x)^{-v_j}`:
/// `(j, k, c)` with `sum c (1 + j x)^{-k}` equal to the product.
///
/// Around the pole of part `i`, put `y = 1 + i x`. The other factors become
/// `(i / (i - l))^{v_l} (1 + l y / (i - l))^{-v_l}`, whose Taylor coefficients
/// `a_0, a_1, ...` in `y` give `c_{i,k} = a_{v_i - k}`.
fn coefficients<F: Field>(v: &PartitionVector) -> Vec<(usize, u32, F)> {
    let parts: Vec<(usize, u32)> = v.occupied().collect();
    let mut out = Vec::new();
    for &(i, vi) in &parts {
        let order = vi as usize;
        let mut series = vec![F::zero(); order];
        series[0] = F::from_int(1);
        let mut prefactor = F::from_int(1);
        for &(l, vl) in &parts {
            if l == i {
                continue;
            }
            let diff = i as i64 - l as i64;
            let ratio = F::ratio(i as i64, diff);
            for _ in 0..vl {
                prefactor = prefactor * ratio.clone();
            }
            // (1 + b y)^{-v} = sum_k C(v + k - 1, k) (-b)^k y^k
            let neg_b = F::ratio(-(l as i64), diff);
            let mut factor = Vec::with_capacity(order);
            let mut coef = F::from_int(1);
            for k in 0..order {
                factor.push(coef.clone());
                coef = coef * neg_b.clone() * F::from_int(vl as i64 + k as i64) / F::from_int(k as i64 + 1);
            }
            let mut next = vec![F::zero(); order];
            for (p, a) in series.iter().enumerate() {
                if a.is_zero() {
                    continue;
                }
                for (q, b) in factor.iter().enumerate().take(order - p) {
                    next[p + q] += a.clone() * b.clone();
                }
            }
            series = next;
        }
        for k in 1..=vi {
            let c = prefactor.clone() * series[(vi - k) as usize].clone();
            if !c.is_zero() {
                out.push((i, k, c));
            }
        }
    }
    out
}

fn exact_coefficients(v: &PartitionVector) -> Vec<(usize, u32, BigRational)> {
    coefficients(v)
}

fn float_coefficients(v: &PartitionVector) -> Vec<(usize, u32, f64)> {
    if v.n() <= EXACT_COEFFICIENT_MAX_N {
        exact_coefficients(v)
            .into_iter()
            .map(|(j, k, c)| (j, k, c.to_f64().unwrap_or(f64::NAN)))
            .collect()
    } else {
        coefficients(v)
    }
}

/// One partial-fraction term: `coefficient * ErlangCDF(t; shape, lambda / part)`.
#[derive(Debug, Clone, Copy, PartialEq)]
struct PfTerm {
    coefficient: f64,
    shape: u32,
    part: u32,
}

#[derive(Debug)]
struct PartitionTerms {
    partition: PartitionVector,
    ln_base: f64,
    terms: Vec<PfTerm>,
    abs_sum: f64,
}

fn build_terms(v: PartitionVector) -> PartitionTerms {
    let terms: Vec<PfTerm> = float_coefficients(&v)
        .into_iter()
        .map(|(part, shape, coefficient)| PfTerm { coefficient, shape, part: part as u32 })
        .collect();
    let abs_sum = terms.iter().map(|t| t.coefficient.abs()).sum();
    PartitionTerms { ln_base: ln_ewens_base(&v), partition: v, terms, abs_sum }
}

type TermTable = Arc<Vec<PartitionTerms>>;

/// Partial fractions for every partition of `n`, built once per process.
fn partition_table(n: usize) -> TermTable {
    static CACHE: OnceLock<Mutex<HashMap<usize, TermTable>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(t) = cache.lock().expect("partition cache poisoned").get(&n) {
        return t.clone();
    }
    let mut parts = Vec::new();
    let mut v = vec![0u32; n];
    fill_partitions(n, n, &mut v, &mut parts);
    parts.sort();
    let table: TermTable = Arc::new(parts.into_par_iter().map(build_terms).collect());
    cache.lock().expect("partition cache poisoned").entry(n).or_insert(table).clone()
}

fn mixture_from_terms(terms: &[PfTerm], lambda: f64) -> SignedErlangMixture {
    SignedErlangMixture {
        components: terms
            .iter()
            .map(|t| ErlangComponent { coefficient: t.coefficient, shape: t.shape, rate: lambda / t.part as f64 })
            .collect(),
    }
}

/// The law of `S_n | V = v` for an `Exp(lambda)` base as a signed Erlang mixture.
pub fn partial_fraction_mixture(v: &PartitionVector, lambda: f64) -> Result<SignedErlangMixture> {
    ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
    let built = build_terms(v.clone());
    let mixture = mixture_from_terms(&built.terms, lambda);
    let max = mixture.max_abs_coefficient();
    if !(max <= ILL_CONDITIONED_COEFFICIENT) {
        return Err(Error::IllConditioned { max_coefficient: max });
    }
    Ok(mixture)
}

/// `P(S_n <= t)` with a bound on the floating-point error of the partial
/// fraction evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnProbability {
    pub value: f64,
    pub rounding_bound: f64,
}

fn check_dp_args(t: f64, n: usize, alpha: f64, lambda: f64, n_max: usize) -> Result<()> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t must be finite and nonnegative, got {t}"))?;
    ensure(n >= 1, || "n must be >= 1".into())?;
    ensure(alpha > 0.0 && alpha.is_finite(), || format!("alpha must be positive, got {alpha}"))?;
    ensure(lambda > 0.0 && lambda.is_finite(), || format!("lambda must be positive, got {lambda}"))?;
    if n > n_max {
        return Err(Error::PartitionCap { n, n_max });
    }
    Ok(())
}

fn sn_cdf_table(t: f64, alpha: f64, lambda: f64, table: &[PartitionTerms]) -> Result<SnProbability> {
    let ln_poch = ln_pochhammer(alpha, table[0].partition.n());
    let ln_alpha = alpha.ln();
    let pieces: Vec<(f64, f64)> = table
        .par_iter()
        .map(|p| {
            let w = (p.ln_base + p.partition.blocks() as f64 * ln_alpha - ln_poch).exp();
            let (cdf, rounding) = mixture_from_terms(&p.terms, lambda).cdf_with_rounding(t)?;
            Ok((w * cdf, w * (rounding + 4.0 * f64::EPSILON * p.abs_sum)))
        })
        .collect::<Result<_>>()?;
    let value: f64 = pieces.iter().map(|p| p.0).sum();
    let rounding_bound: f64 = pieces.iter().map(|p| p.1).sum();
    Ok(SnProbability { value: value.clamp(0.0, 1.0), rounding_bound })
}

/// `P(S_n <= t)` under `DP(alpha, Exp(lambda))`: the Ewens-weighted sum of the
/// conditional hypoexponential CDFs.
pub fn sn_cdf(t: f64, n: usize, alpha: f64, lambda: f64) -> Result<f64> {
    Ok(sn_cdf_detailed(t, n, alpha, lambda, DEFAULT_N_MAX)?.value)
}

pub fn sn_cdf_detailed(t: f64, n: usize, alpha: f64, lambda: f64, n_max: usize) -> Result<SnProbability> {
    check_dp_args(t, n, alpha, lambda, n_max)?;
    if t == 0.0 {
        return Ok(SnProbability { value: 0.0, rounding_bound: 0.0 });
    }
    sn_cdf_table(t, alpha, lambda, &partition_table(n))
}

/// How an `S_n` probability was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum SnMethod {
    PartialFractions { rounding_bound: f64 },
    /// Monte Carlo fallback for non-exponential bases.
    MonteCarlo { stderr: f64, replicates: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnCdf {
    pub value: f64,
    pub method: SnMethod,
}

/// Draws one occupancy configuration from the Ewens law by the Chinese restaurant.
pub fn sample_block_sizes<R: Rng + ?Sized>(n: usize, alpha: f64, rng: &mut R) -> Vec<u32> {
    let mut sizes: Vec<u32> = Vec::new();
    for i in 0..n {
        let u = rng.random::<f64>() * (alpha + i as f64);
        if u < alpha {
            sizes.push(1);
        } else {
            // join block b with probability size_b / (alpha + i)
            let mut acc = alpha;
            let mut chosen = sizes.len() - 1;
            for (b, &s) in sizes.iter().enumerate() {
                acc += s as f64;
                if u < acc {
                    chosen = b;
                    break;
                }
            }
            sizes[chosen] += 1;
        }
    }
    sizes
}

/// `P(S_n <= t)` for an arbitrary base: partial fractions when the base is
/// exponential, Monte Carlo over urn configurations otherwise.
pub fn sn_cdf_base(t: f64, n: usize, alpha: f64, base: &BaseDistribution, replicates: usize, seed: StreamSeed) -> Result<SnCdf> {
    if let Some(lambda) = base.exponential_rate() {
        let p = sn_cdf_detailed(t, n, alpha, lambda, DEFAULT_N_MAX)?;
        return Ok(SnCdf { value: p.value, method: SnMethod::PartialFractions { rounding_bound: p.rounding_bound } });
    }
    ensure(replicates >= 100, || format!("need at least 100 replicates, got {replicates}"))?;
    ensure(t >= 0.0 && n >= 1 && alpha > 0.0, || "invalid arguments".into())?;
    let hits: usize = (0..replicates)
        .into_par_iter()
        .filter(|&r| {
            let mut rng = seed.rng(r as u64);
            let sizes = sample_block_sizes(n, alpha, &mut rng);
            let s: f64 = sizes.iter().map(|&k| k as f64 * base.sample(&mut rng)).sum();
            s <= t
        })
        .count();
    let p = hits as f64 / replicates as f64;
    let stderr = (p * (1.0 - p) / replicates as f64).sqrt();
    Ok(SnCdf { value: p, method: SnMethod::MonteCarlo { stderr, replicates } })
}

/// A truncated Dirichlet renewal series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DpRenewal {
    pub value: f64,
    /// Tail estimate plus accumulated rounding bounds.
    pub error_estimate: f64,
    pub n_used: usize,
}

/// `U(t) = sum_n P(S_n <= t)` under `DP(alpha, Exp(lambda))`, with at most
/// [`DEFAULT_N_MAX`] terms.
pub fn dp_renewal_function(t: f64, alpha: f64, lambda: f64, tol: f64) -> Result<DpRenewal> {
    dp_renewal_function_capped(t, alpha, lambda, tol, DEFAULT_N_MAX)
}

/// As [`dp_renewal_function`] with an explicit cap on `n`.
///
/// Summation stops once the extrapolated tail falls below `tol`; reaching
/// `n_max` first is an error. Under small `alpha` the terms decay only like
/// `n^{-(alpha + 1)}`.
pub fn dp_renewal_function_capped(t: f64, alpha: f64, lambda: f64, tol: f64, n_max: usize) -> Result<DpRenewal> {
    check_dp_args(t, 1, alpha, lambda, n_max)?;
    ensure(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
    if t == 0.0 {
        return Ok(DpRenewal { value: 0.0, error_estimate: 0.0, n_used: 0 });
    }
    let mut value = 0.0;
    let mut rounding = 0.0;
    let mut prev = f64::NAN;
    for n in 1..=n_max {
        let p = sn_cdf_table(t, alpha, lambda, &partition_table(n))?;
        value += p.value;
        rounding += p.rounding_bound;
        let term = p.value;
        if term == 0.0 {
            return Ok(DpRenewal { value, error_estimate: rounding, n_used: n });
        }
        if n >= 2 {
            if let Some(tail) = tail_estimate(n, prev, term) {
                if tail < tol {
                    return Ok(DpRenewal { value, error_estimate: tail + rounding, n_used: n });
                }
            }
        }
        prev = term;
    }
    Err(Error::NonConvergence { terms: n_max, last_term: prev })
}

/// Tail `sum_{k > n} term_k` extrapolated from the last two terms, taking the
/// larger of a geometric fit `r / (1 - r)` and a power-law fit
/// `term_k ~ C k^{-p}`, which gives `n / (p - 1)` in units of the last term.
/// `None` when either fit has not yet started to decay.
fn tail_estimate(n: usize, prev: f64, term: f64) -> Option<f64> {
    let r = term / prev;
    if !(r < 1.0) {
        return None;
    }
    let geometric = term * r / (1.0 - r);
    let p = (prev / term).ln() / (n as f64 / (n - 1) as f64).ln();
    if !(p > 1.0) {
        return None;
    }
    Some(geometric.max(term * n as f64 / (p - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partition_counts() {
        assert_eq!(enumerate_partitions(1).unwrap(), vec![PartitionVector::new(vec![1]).unwrap()]);
        let counts: Vec<usize> = (1..=12).map(|n| enumerate_partitions(n).unwrap().len()).collect();
        assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]);
        assert!(matches!(enumerate_partitions(41), Err(Error::PartitionCap { .. })));
        let p = enumerate_partitions(4).unwrap();
        assert!(p.windows(2).all(|w| w[0] < w[1]));
        assert!(p.iter().all(|v| v.counts().iter().enumerate().map(|(j, c)| (j + 1) * *c as usize).sum::<usize>() == 4));
    }

    #[test]
    fn pochhammer_examples() {
        assert_eq!(pochhammer(3.7, 0), 1.0);
        assert!((pochhammer(1.0, 5) - 120.0).abs() < 1e-10);
        assert!((pochhammer(2.5, 3) - 39.375).abs() < 1e-11);
    }

    #[test]
    fn ewens_small_cases() {
        let one = PartitionVector::new(vec![1]).unwrap();
        assert!((ewens_probability(&one, 0.3).unwrap() - 1.0).abs() < 1e-14);
        let distinct = PartitionVector::new(vec![2, 0]).unwrap();
        let same = PartitionVector::new(vec![0, 1]).unwrap();
        assert!((ewens_probability(&distinct, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!((ewens_probability(&same, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }

    #[test]
    fn all_distinct_is_plain_erlang() {
        let v = PartitionVector::from_parts(&[1, 1, 1, 1]).unwrap();
        let m = partial_fraction_mixture(&v, 2.0).unwrap();
        assert_eq!(m.components, vec![ErlangComponent { coefficient: 1.0, shape: 4, rate: 2.0 }]);
    }

    #[test]
    fn two_pole_coefficients() {
        // (1 + x)^{-1} (1 + 2x)^{-1} = -1/(1 + x) + 2/(1 + 2x)
        let v = PartitionVector::from_parts(&[1, 2]).unwrap();
        let c = exact_coefficients(&v);
        let f: Vec<(usize, u32, f64)> = c.iter().map(|(j, k, c)| (*j, *k, c.to_f64().unwrap())).collect();
        assert_eq!(f, vec![(1, 1, -1.0), (2, 1, 2.0)]);
    }

    #[test]
    fn coefficients_sum_to_one_and_reproduce_the_product() {
        for n in 1..=10 {
            for v in enumerate_partitions(n).unwrap() {
                let c = exact_coefficients(&v);
                let total: BigRational = c.iter().map(|(_, _, c)| c.clone()).sum();
                assert!(num_traits::One::is_one(&total), "{v:?}");
                for &x in &[0.3, 1.7] {
                    let lhs: f64 = v.occupied().map(|(j, k)| (1.0 + j as f64 * x).powi(-(k as i32))).product();
                    let rhs: f64 = c
                        .iter()
                        .map(|(j, k, c)| c.to_f64().unwrap() * (1.0 + *j as f64 * x).powi(-(*k as i32)))
                        .sum();
                    assert!((lhs - rhs).abs() < 1e-12 * lhs.max(1e-300) + 1e-14, "{v:?} x={x}");
                }
            }
        }
    }

    #[test]
    fn float_coefficients_track_exact_ones() {
        for n in [14, 18, 20] {
            for v in enumerate_partitions(n).unwrap() {
                let exact: Vec<f64> = exact_coefficients(&v).iter().map(|c| c.2.to_f64().unwrap()).collect();
                let float: Vec<f64> = coefficients::<f64>(&v).iter().map(|c| c.2).collect();
                assert_eq!(exact.len(), float.len());
                let scale = exact.iter().fold(1.0f64, |m, c| m.max(c.abs()));
                for (e, f) in exact.iter().zip(&float) {
                    assert!((e - f).abs() <= 1e-11 * scale, "{v:?}: {e} vs {f}");
                }
            }
        }
    }

    #[test]
    fn mixtures_are_normalised() {
        for n in 1..=12 {
            for v in enumerate_partitions(n).unwrap() {
                let m = partial_fraction_mixture(&v, 1.5).unwrap();
                assert_eq!(m.cdf_raw(0.0).unwrap(), 0.0);
                let tail = m.cdf_raw(1e6 / 1.5).unwrap();
                assert!((tail - 1.0).abs() <= 1e-6, "{v:?}: {tail}");
            }
        }
    }

    #[test]
    fn sn_cdf_first_term_is_base() {
        for &t in &[0.1, 1.0, 4.0] {
            assert!((sn_cdf(t, 1, 0.7, 2.0).unwrap() + (-2.0 * t).exp_m1()).abs() < 1e-14);
        }
        assert_eq!(sn_cdf(0.0, 3, 2.0, 1.0).unwrap(), 0.0);
        assert!(matches!(sn_cdf(1.0, 41, 2.0, 1.0), Err(Error::PartitionCap { .. })));
    }

    #[test]
    fn block_sampler_preserves_n() {
        let mut rng = StreamSeed::new(5).rng(0);
        for _ in 0..100 {
            let s = sample_block_sizes(9, 1.3, &mut rng);
            assert_eq!(s.iter().sum::<u32>(), 9);
        }
    }

    #[test]
    fn dp_renewal_origin() {
        let r = dp_renewal_function(0.0, 2.0, 1.0, 1e-6).unwrap();
        assert_eq!((r.value, r.n_used), (0.0, 0));
    }
}
