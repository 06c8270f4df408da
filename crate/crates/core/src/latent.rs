//! Mixing laws over the latent rate of conditionally Erlang renewals.
//!
//! A [`ConditionalErlang`] model says `T_i | theta ~ Erlang(m, theta)` i.i.d.
//! with `theta ~ latent`. Expectations over the latent rate are taken with
//! [`LatentLaw::quadrature`].

use serde::{Deserialize, Serialize};

use crate::distributions::{ErlangParams, GammaParams};
use crate::error::{ensure, Result};
use crate::quadrature::GaussLegendre;

pub const DEFAULT_LATENT_NODES: usize = 64;

const LOG_SPAN: f64 = 40.0;

/// Root of a function that is positive at `start` and decreasing beyond it,
/// searched on `[start, inf)` by doubling then bisection.
fn bisect_decreasing<F: Fn(f64) -> f64>(f: F, start: f64, step: f64) -> f64 {
    let mut lo = start;
    let mut hi = start + step;
    while f(hi) > 0.0 {
        lo = hi;
        hi = start + 2.0 * (hi - start);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-12 * hi.abs().max(1.0) {
            break;
        }
    }
    hi
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LatentLaw {
    /// Finitely many rates `values[i]` with probabilities `weights[i]`.
    Atoms { weights: Vec<f64>, values: Vec<f64> },
    Gamma(GammaParams),
    Uniform { lo: f64, hi: f64 },
}

impl LatentLaw {
    pub fn atoms(weights: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(!weights.is_empty() && weights.len() == values.len(), || {
            "atom weights and values must be nonempty and of equal length".into()
        })?;
        ensure(weights.iter().all(|&p| p > 0.0 && p <= 1.0), || "atom weights must lie in (0, 1]".into())?;
        ensure(values.iter().all(|&v| v > 0.0 && v.is_finite()), || "atom rates must be positive".into())?;
        let total: f64 = weights.iter().sum();
        ensure((total - 1.0).abs() <= 1e-12, || format!("atom weights must sum to 1, got {total}"))?;
        Ok(Self::Atoms { weights, values })
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        ensure(lo >= 0.0 && hi > lo && hi.is_finite(), || format!("invalid uniform range [{lo}, {hi}]"))?;
        Ok(Self::Uniform { lo, hi })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        Ok(Self::Gamma(GammaParams::new(shape, rate)?))
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Atoms { weights, values } => weights.iter().zip(values).map(|(p, v)| p * v).sum(),
            Self::Gamma(g) => g.mean(),
            Self::Uniform { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Atoms { weights, values } => {
                let mu = self.mean();
                weights.iter().zip(values).map(|(p, v)| p * (v - mu).powi(2)).sum()
            }
            Self::Gamma(g) => g.variance(),
            Self::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
        }
    }

    /// `(theta, weight)` pairs approximating expectations over the law.
    ///
    /// Atoms are returned exactly. The Gamma law uses Gauss–Legendre in
    /// `log theta` over the range carrying all but `e^-40` of the density,
    /// split at the mode (`2 * nodes` evaluations); the
    /// uniform law uses Gauss–Legendre on its support.
    pub fn quadrature(&self, nodes: usize) -> Vec<(f64, f64)> {
        match self {
            Self::Atoms { weights, values } => values.iter().copied().zip(weights.iter().copied()).collect(),
            Self::Uniform { lo, hi } => {
                let rule = GaussLegendre::new(nodes);
                let width = hi - lo;
                rule.mapped(*lo, *hi).map(|(x, w)| (x, w / width)).collect()
            }
            Self::Gamma(g) => {
                // theta = mean * e^y; the log-density alpha (y - e^y) + const is
                // smooth and unimodal at y = 0, so Gauss–Legendre is applied on
                // the y-range where it stays within LOG_SPAN of the mode.
                let rule = GaussLegendre::new(nodes);
                let c = g.mean();
                let a = g.shape;
                let drop = |y: f64| a * (y - y.exp_m1()) + LOG_SPAN;
                let lo = bisect_decreasing(|y| drop(-y), 0.0, 1.0);
                let hi = bisect_decreasing(drop, 0.0, 1.0);
                rule.mapped(-lo, 0.0)
                    .chain(rule.mapped(0.0, hi))
                    .map(|(y, w)| {
                        let theta = c * y.exp();
                        (theta, w * g.pdf(theta) * theta)
                    })
                    .filter(|&(theta, w)| theta.is_finite() && w.is_finite() && w > 0.0)
                    .collect()
            }
        }
    }

    /// `E[f(theta)]` by [`quadrature`](Self::quadrature).
    pub fn expect<F: Fn(f64) -> f64>(&self, nodes: usize, f: F) -> f64 {
        self.quadrature(nodes).into_iter().map(|(theta, w)| w * f(theta)).sum()
    }
}

/// `T_i | theta ~ Erlang(shape, theta)` i.i.d., `theta ~ latent`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalErlang {
    pub shape: u32,
    pub latent: LatentLaw,
}

impl ConditionalErlang {
    pub fn new(shape: u32, latent: LatentLaw) -> Result<Self> {
        ensure(shape >= 1, || "Erlang shape must be >= 1".into())?;
        Ok(Self { shape, latent })
    }

    /// Discrete mixture of exponentials: rate `rates[i]` with probability `weights[i]`.
    pub fn discrete_exponential(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        Self::new(1, LatentLaw::atoms(weights, rates)?)
    }

    /// Exponential renewals with a `Gamma(shape, rate)` mixing law on the rate.
    pub fn gamma_exponential(shape: f64, rate: f64) -> Result<Self> {
        Self::new(1, LatentLaw::gamma(shape, rate)?)
    }

    pub fn is_exponential(&self) -> bool {
        self.shape == 1
    }

    pub fn conditional(&self, theta: f64) -> Result<ErlangParams> {
        ErlangParams::new(self.shape, theta)
    }
}
