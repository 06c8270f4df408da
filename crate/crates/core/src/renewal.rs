//! Counting processes and mixed renewal functions.
//!
//! `U(t) = E[N(t)]` is evaluated three ways for the Erlang–Gamma model: the
//! roots-of-unity closed form, the series `sum_n P(S_n <= t)` through the
//! incomplete beta function, and Monte Carlo over simulated paths. The module
//! also carries the lower bound, the Laplace transform, and the covariance
//! structure of conditionally exponential models together with the
//! non-homogeneous Poisson comparator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exchangeable::{ModelSpec, Sequence};
use crate::inference::SequenceSet;
use crate::latent::ConditionalErlang;
use crate::rng::StreamSeed;
use crate::special::reg_beta;

/// Hard cap on simulated events per Monte Carlo replicate.
pub const DEFAULT_MAX_EVENTS: usize = 10_000_000;

/// A function of time sampled on a grid, with optional Monte Carlo standard errors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenewalCurve {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl RenewalCurve {
    pub fn new(grid: Vec<f64>, values: Vec<f64>, stderr: Option<Vec<f64>>) -> Result<Self> {
        check_grid(&grid)?;
        ensure(values.len() == grid.len(), || "curve values must match the grid".into())?;
        if let Some(se) = &stderr {
            ensure(se.len() == grid.len(), || "standard errors must match the grid".into())?;
        }
        Ok(Self { grid, values, stderr })
    }

    pub fn from_fn<F: FnMut(f64) -> Result<f64>>(grid: &[f64], mut f: F) -> Result<Self> {
        let values = grid.iter().map(|&t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(grid.to_vec(), values, None)
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn is_nondecreasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0])
    }

    pub fn last_value(&self) -> Option<f64> {
        self.values.last().copied()
    }
}

pub(crate) fn check_grid(grid: &[f64]) -> Result<()> {
    ensure(!grid.is_empty(), || "grid must be nonempty".into())?;
    ensure(grid.iter().all(|t| *t >= 0.0 && t.is_finite()), || "grid points must be finite and nonnegative".into())?;
    ensure(grid.windows(2).all(|w| w[1] > w[0]), || "grid must be strictly increasing".into())
}

/// `start, start + step, ...` up to `stop` (inclusive within rounding).
pub fn uniform_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    ensure(step > 0.0 && step.is_finite(), || format!("grid step must be positive, got {step}"))?;
    ensure(start >= 0.0 && stop >= start, || format!("invalid grid range [{start}, {stop}]"))?;
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

/// `N(t) = sup{n : S_n <= t}` for an observed sequence.
pub fn count_events(seq: &Sequence, t: f64) -> usize {
    count_in(seq.times(), t)
}

fn count_in(times: &[f64], t: f64) -> usize {
    let mut total = 0.0;
    let mut n = 0;
    for &x in times {
        total += x;
        if total > t {
            break;
        }
        n += 1;
    }
    n
}

/// Counts `N(t)` at every grid point for one path, the grid being increasing.
fn counts_on_grid(times: &[f64], grid: &[f64], out: &mut [u64]) {
    let mut n = 0usize;
    let mut epoch = times.first().copied().unwrap_or(f64::INFINITY);
    for (slot, &t) in out.iter_mut().zip(grid) {
        while epoch <= t {
            n += 1;
            epoch = if n < times.len() { epoch + times[n] } else { f64::INFINITY };
        }
        *slot = n as u64;
    }
}

/// Monte Carlo run configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub replicates: usize,
    pub seed: StreamSeed,
    pub max_events: usize,
}

impl McConfig {
    pub fn new(replicates: usize, seed: u64) -> Self {
        Self { replicates, seed: StreamSeed::new(seed), max_events: DEFAULT_MAX_EVENTS }
    }
}

const MC_CHUNK: usize = 1024;

/// Monte Carlo estimate of `U(t)` on `grid` with pointwise standard errors.
///
/// Replicate `r` uses stream `r` of the configured seed. Counts are summed as
/// integers, so the result does not depend on the number of worker threads.
pub fn mc_renewal_function(model: &ModelSpec, grid: &[f64], cfg: &McConfig) -> Result<RenewalCurve> {
    model.validate()?;
    check_grid(grid)?;
    ensure(model.renewal_finiteness(), || format!("U(t) is infinite for {model:?}"))?;
    ensure(cfg.replicates >= 100, || format!("need at least 100 replicates, got {}", cfg.replicates))?;
    let horizon = *grid.last().expect("grid is nonempty");
    let g = grid.len();
    let chunks: Vec<(Vec<u64>, Vec<u128>)> = (0..cfg.replicates.div_ceil(MC_CHUNK))
        .into_par_iter()
        .map(|c| {
            let mut sum = vec![0u64; g];
            let mut sumsq = vec![0u128; g];
            let mut counts = vec![0u64; g];
            let end = ((c + 1) * MC_CHUNK).min(cfg.replicates);
            for r in c * MC_CHUNK..end {
                let mut rng = cfg.seed.rng(r as u64);
                let times = model.sample_until(horizon, cfg.max_events, &mut rng)?;
                counts_on_grid(&times, grid, &mut counts);
                for j in 0..g {
                    sum[j] += counts[j];
                    sumsq[j] += (counts[j] as u128) * (counts[j] as u128);
                }
            }
            Ok((sum, sumsq))
        })
        .collect::<Result<_>>()?;
    let mut sum = vec![0u64; g];
    let mut sumsq = vec![0u128; g];
    for (s, q) in chunks {
        for j in 0..g {
            sum[j] += s[j];
            sumsq[j] += q[j];
        }
    }
    let r = cfg.replicates as f64;
    let values: Vec<f64> = sum.iter().map(|&s| s as f64 / r).collect();
    let stderr = sum
        .iter()
        .zip(&sumsq)
        .map(|(&s, &q)| {
            let s = s as f64;
            let var = ((q as f64) - s * s / r).max(0.0) / (r - 1.0);
            (var / r).sqrt()
        })
        .collect();
    RenewalCurve::new(grid.to_vec(), values, Some(stderr))
}

/// Monte Carlo estimate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Monte Carlo estimate of `Cov(N(t), N(t + s))`.
///
/// The standard error is that of the mean of the centred products, which is
/// the first-order (influence-function) error of the sample covariance.
pub fn mc_count_covariance(model: &ModelSpec, t: f64, s: f64, cfg: &McConfig) -> Result<McEstimate> {
    ensure(t >= 0.0 && s >= 0.0, || "t and s must be nonnegative".into())?;
    let grid = if s > 0.0 { vec![t, t + s] } else { vec![t] };
    let pairs: Vec<(f64, f64)> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let mut rng = cfg.seed.rng(r as u64);
            let times = model.sample_until(t + s, cfg.max_events, &mut rng)?;
            let mut counts = [0u64; 2];
            counts_on_grid(&times, &grid, &mut counts[..grid.len()]);
            let y = if s > 0.0 { counts[1] } else { counts[0] };
            Ok((counts[0] as f64, y as f64))
        })
        .collect::<Result<_>>()?;
    let n = pairs.len() as f64;
    ensure(n >= 2.0, || "need at least two replicates".into())?;
    let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
    let products: Vec<f64> = pairs.iter().map(|(x, y)| (x - mx) * (y - my)).collect();
    let cov = products.iter().sum::<f64>() / (n - 1.0);
    let mean_p = products.iter().sum::<f64>() / n;
    let var_p = products.iter().map(|p| (p - mean_p).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(McEstimate { value: cov, stderr: (var_p / n).sqrt() })
}

/// A roots-of-unity evaluation: real value and the imaginary residue of the
/// unfolded complex sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootsSum {
    pub value: f64,
    pub imag_residue: f64,
}

/// `1 - e^{-w}` without cancellation for small `|w|`.
fn one_minus_exp_neg(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        // w - w^2/2 + w^3/6 - ...
        let mut term = w;
        let mut sum = w;
        for k in 2..24 {
            term = -term * w / k as f64;
            sum += term;
        }
        sum
    } else {
        Complex64::new(1.0, 0.0) - (-w).exp()
    }
}

/// `ln(1 + w)` without cancellation for small `|w|`.
fn ln_1p(w: Complex64) -> Complex64 {
    if w.norm() < 0.1 {
        let mut pow = w;
        let mut sum = w;
        for k in 2..30 {
            pow = -pow * w;
            sum += pow / k as f64;
        }
        sum
    } else {
        (Complex64::new(1.0, 0.0) + w).ln()
    }
}

/// `(1/m) sum_{k=1}^{m-1} z^k / (1 - z^k) g(1 - z^k)` with `z = e^{2 pi i / m}`,
/// folding conjugate pairs `k, m - k` so the result is real by construction.
fn roots_of_unity_sum<G: Fn(Complex64) -> Complex64>(m: u32, g: G) -> f64 {
    let mf = m as f64;
    let mut sum = 0.0;
    for k in 1..=(m - 1) / 2 {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / mf);
        let one_minus_z = Complex64::new(1.0, 0.0) - z;
        sum += 2.0 * (z / one_minus_z * g(one_minus_z)).re;
    }
    if m % 2 == 0 {
        // z = -1: z / (1 - z) = -1/2
        sum += -0.5 * g(Complex64::new(2.0, 0.0)).re;
    }
    sum / mf
}

/// The same sum evaluated term by term in complex arithmetic.
fn roots_of_unity_sum_naive<G: Fn(Complex64) -> Complex64>(m: u32, g: G) -> Complex64 {
    let mf = m as f64;
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 1..m {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / mf);
        let one_minus_z = Complex64::new(1.0, 0.0) - z;
        sum += z / one_minus_z * g(one_minus_z);
    }
    sum / mf
}

fn check_erlang_args(t: f64, m: u32, rate_or_shape: f64) -> Result<()> {
    ensure(t >= 0.0 && t.is_finite(), || format!("t must be finite and nonnegative, got {t}"))?;
    ensure(m >= 1, || "m must be >= 1".into())?;
    ensure(rate_or_shape > 0.0 && rate_or_shape.is_finite(), || format!("parameter must be positive, got {rate_or_shape}"))
}

/// Renewal function of i.i.d. `Erlang(m, lambda)` inter-arrivals:
/// `lambda t / m + (1/m) sum_k z^k/(1 - z^k) (1 - e^{-lambda t (1 - z^k)})`.
pub fn erlang_conditional_renewal(t: f64, m: u32, lambda: f64) -> Result<f64> {
    check_erlang_args(t, m, lambda)?;
    let x = lambda * t;
    Ok(x / m as f64 + roots_of_unity_sum(m, |w| one_minus_exp_neg(w * x)))
}

/// [`erlang_conditional_renewal`] by the unfolded complex sum.
pub fn erlang_conditional_renewal_naive(t: f64, m: u32, lambda: f64) -> Result<RootsSum> {
    check_erlang_args(t, m, lambda)?;
    let x = lambda * t;
    let s = roots_of_unity_sum_naive(m, |w| one_minus_exp_neg(w * x));
    Ok(RootsSum { value: x / m as f64 + s.re, imag_residue: s.im.abs() })
}

/// Mixed renewal function of the Erlang–Gamma model:
/// `alpha t / m + (1/m) sum_k z^k/(1 - z^k) (1 - (1 + t (1 - z^k))^{-alpha})`.
pub fn erlang_gamma_mixed_renewal(t: f64, m: u32, alpha: f64) -> Result<f64> {
    check_erlang_args(t, m, alpha)?;
    Ok(alpha * t / m as f64 + roots_of_unity_sum(m, |w| one_minus_exp_neg(ln_1p(w * t) * alpha)))
}

/// [`erlang_gamma_mixed_renewal`] by the unfolded complex sum.
pub fn erlang_gamma_mixed_renewal_naive(t: f64, m: u32, alpha: f64) -> Result<RootsSum> {
    check_erlang_args(t, m, alpha)?;
    let s = roots_of_unity_sum_naive(m, |w| one_minus_exp_neg(ln_1p(w * t) * alpha));
    Ok(RootsSum { value: alpha * t / m as f64 + s.re, imag_residue: s.im.abs() })
}

/// A truncated series with its tail estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesValue {
    pub value: f64,
    pub error_estimate: f64,
    pub terms: usize,
}

pub const MAX_SERIES_TERMS: usize = 1_000_000;

/// `P(S_n <= t)` under the Erlang–Gamma model: `S_n | lambda ~ Gamma(n m, lambda)`
/// with `lambda ~ Gamma(alpha, 1)` makes `S_n / (1 + S_n) ~ Beta(n m, alpha)`.
pub fn erlang_gamma_sum_cdf(t: f64, n: usize, m: u32, alpha: f64) -> f64 {
    reg_beta((n as u64 * m as u64) as f64, alpha, t / (1.0 + t))
}

/// `U(t) = sum_{n>=1} P(S_n <= t)` for the Erlang–Gamma model.
///
/// Summation stops once the geometric tail estimate `term r / (1 - r)`, with
/// `r` the ratio of the last two terms, falls below `tol`; that estimate is
/// reported as the error.
pub fn series_mixed_renewal(t: f64, m: u32, alpha: f64, tol: f64) -> Result<SeriesValue> {
    check_erlang_args(t, m, alpha)?;
    ensure(tol > 0.0, || format!("tolerance must be positive, got {tol}"))?;
    if t == 0.0 {
        return Ok(SeriesValue { value: 0.0, error_estimate: 0.0, terms: 0 });
    }
    let mut sum = 0.0;
    let mut prev = f64::NAN;
    for n in 1..=MAX_SERIES_TERMS {
        let term = erlang_gamma_sum_cdf(t, n, m, alpha);
        sum += term;
        if term == 0.0 {
            return Ok(SeriesValue { value: sum, error_estimate: 0.0, terms: n });
        }
        if n >= 2 {
            let r = term / prev;
            if r < 1.0 {
                let tail = term * r / (1.0 - r);
                if tail < tol {
                    return Ok(SeriesValue { value: sum, error_estimate: tail, terms: n });
                }
            }
        }
        prev = term;
    }
    Err(Error::NonConvergence { terms: MAX_SERIES_TERMS, last_term: prev })
}

fn conditional_model(model: &ModelSpec) -> Result<ConditionalErlang> {
    model.validate()?;
    model
        .conditional_erlang()
        .ok_or_else(|| Error::UnsupportedVariant(format!("{} has no conditionally Erlang form", model.name())))
}

/// The closed-form mixed renewal function where one exists.
pub fn closed_form_renewal(model: &ModelSpec, t: f64) -> Result<f64> {
    match *model {
        ModelSpec::ErlangGamma { m, alpha } => erlang_gamma_mixed_renewal(t, m, alpha),
        ModelSpec::ExpUniform { lambda } => {
            ensure(t >= 0.0, || "t must be nonnegative".into())?;
            Ok(lambda * t)
        }
        _ => Err(Error::UnsupportedVariant(format!("no closed form renewal function for {}", model.name()))),
    }
}

impl ConditionalErlang {
    /// `U(t) = E[U(t | theta)]` by latent quadrature.
    pub fn mixed_renewal(&self, t: f64, nodes: usize) -> Result<f64> {
        let m = self.shape;
        let mut total = 0.0;
        for (theta, w) in self.latent.quadrature(nodes) {
            total += w * erlang_conditional_renewal(t, m, theta)?;
        }
        Ok(total)
    }

    /// `E[t / E[T_1 | theta]] - 1 = t E[theta] / m - 1`.
    pub fn renewal_lower_bound(&self, t: f64) -> f64 {
        t * self.latent.mean() / self.shape as f64 - 1.0
    }

    /// `E[L(s) / (1 - L(s))]`, the Laplace–Stieltjes transform
    /// `int e^{-st} dU(t)`, with `L` the conditional Erlang transform.
    pub fn renewal_lst(&self, s: f64, nodes: usize) -> Result<f64> {
        ensure(s > 0.0, || format!("s must be positive, got {s}"))?;
        let m = self.shape as f64;
        let mut total = 0.0;
        for (theta, w) in self.latent.quadrature(nodes) {
            let log_l = -m * (s / theta).ln_1p();
            let l = log_l.exp();
            let one_minus = -log_l.exp_m1();
            if !(one_minus > 0.0) || !(l / one_minus).is_finite() {
                return Err(Error::DivergentIntegrand(format!("L_F(s) = 1 at theta = {theta}, s = {s}")));
            }
            total += w * l / one_minus;
        }
        Ok(total)
    }

    /// `Cov(N(t), N(t + s)) = t E[theta] + t (t + s) Var[theta]` for
    /// conditionally exponential renewals.
    pub fn count_covariance(&self, t: f64, s: f64) -> Result<f64> {
        let (phi, sigma2) = self.exponential_moments()?;
        ensure(t >= 0.0 && s >= 0.0, || "t and s must be nonnegative".into())?;
        Ok(t * phi + t * (t + s) * sigma2)
    }

    /// Correlation of `N(t)` and `N(t + s)` for conditionally exponential renewals.
    pub fn count_correlation(&self, t: f64, s: f64) -> Result<f64> {
        let (phi, sigma2) = self.exponential_moments()?;
        ensure(t > 0.0 && s >= 0.0, || "need t > 0 and s >= 0".into())?;
        let u = t + s;
        Ok(t * (phi + u * sigma2) / ((t * u).sqrt() * ((phi + t * sigma2) * (phi + u * sigma2)).sqrt()))
    }

    fn exponential_moments(&self) -> Result<(f64, f64)> {
        if self.shape != 1 {
            return Err(Error::UnsupportedVariant(format!(
                "count covariance has no closed form for Erlang shape {}",
                self.shape
            )));
        }
        Ok((self.latent.mean(), self.latent.variance()))
    }
}

/// `int_D t / E[T_1 | F] mu(dF) - 1`, a lower bound on `U(t)`.
pub fn renewal_lower_bound(t: f64, model: &ModelSpec) -> Result<f64> {
    ensure(t >= 0.0, || "t must be nonnegative".into())?;
    Ok(conditional_model(model)?.renewal_lower_bound(t))
}

/// Laplace–Stieltjes transform `int_0^inf e^{-st} dU(t) = E_mu[L_F(s) / (1 - L_F(s))]`.
pub fn mixed_renewal_lst(s: f64, model: &ModelSpec, quad_nodes: usize) -> Result<f64> {
    conditional_model(model)?.renewal_lst(s, quad_nodes)
}

/// Ordinary Laplace transform `int_0^inf e^{-st} U(t) dt`, equal to the
/// Laplace–Stieltjes transform divided by `s` because `U(0) = 0`.
pub fn mixed_renewal_laplace(s: f64, model: &ModelSpec, quad_nodes: usize) -> Result<f64> {
    Ok(mixed_renewal_lst(s, model, quad_nodes)? / s)
}

pub fn mixed_covariance(t: f64, s: f64, model: &ModelSpec) -> Result<f64> {
    conditional_model(model)?.count_covariance(t, s)
}

pub fn mixed_correlation(t: f64, s: f64, model: &ModelSpec) -> Result<f64> {
    conditional_model(model)?.count_correlation(t, s)
}

/// The NHPP sharing the covariance structure of a conditionally exponential
/// mixed renewal process with latent mean `phi` and variance `sigma2`:
/// `(Lambda(t), lambda(t)) = (t / (phi + t sigma2), phi / (sigma2 t + phi)^2)`.
pub fn nhpp_equivalent(t: f64, phi: f64, sigma2: f64) -> Result<(f64, f64)> {
    ensure(phi > 0.0 && sigma2 >= 0.0, || format!("need phi > 0 and sigma2 >= 0, got {phi}, {sigma2}"))?;
    ensure(t >= 0.0, || "t must be nonnegative".into())?;
    let d = phi + t * sigma2;
    Ok((t / d, phi / (d * d)))
}

/// `Corr(N*(t), N*(t + s)) = sqrt(Lambda(t) / Lambda(t + s))` for an NHPP.
pub fn nhpp_correlation(cumulative_t: f64, cumulative_t_plus_s: f64) -> f64 {
    (cumulative_t / cumulative_t_plus_s).sqrt()
}

/// Pointwise mean of `N(t)` across the observed sequences.
pub fn empirical_renewal_curve(data: &SequenceSet, grid: &[f64]) -> Result<RenewalCurve> {
    check_grid(grid)?;
    let k = data.len() as f64;
    let mut totals = vec![0u64; grid.len()];
    let mut counts = vec![0u64; grid.len()];
    for seq in data.sequences() {
        counts_on_grid(seq.times(), grid, &mut counts);
        for (t, c) in totals.iter_mut().zip(&counts) {
            *t += c;
        }
    }
    RenewalCurve::new(grid.to_vec(), totals.iter().map(|&c| c as f64 / k).collect(), None)
}
