//! Elementary inter-arrival distributions.
//!
//! Erlang, Gamma and Lomax (Pareto on `[0, inf)`) laws with CDFs, densities,
//! Laplace transforms and seeded sampling, the closed-form marginals of the
//! parametric exchangeable hierarchies, and [`SignedErlangMixture`], the CDF
//! representation produced by partial-fraction expansion of products of
//! exponential transforms.

use rand::Rng;
use rand_distr::{Distribution, Gamma as GammaSampler, Open01};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::rng::StreamSeed;
use crate::special::{ln_gamma, reg_gamma_lower, reg_gamma_upper};

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")))
    }
}

/// Erlang law with integer shape `m` and rate `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangParams {
    pub shape: u32,
    pub rate: f64,
}

impl ErlangParams {
    pub fn new(shape: u32, rate: f64) -> Result<Self> {
        ensure(shape >= 1, || format!("Erlang shape must be >= 1, got {shape}"))?;
        ensure(rate > 0.0 && rate.is_finite(), || format!("Erlang rate must be positive, got {rate}"))?;
        Ok(Self { shape, rate })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::new(1, rate)
    }

    /// `P(T <= t) = 1 - sum_{u<m} e^{-rate t} (rate t)^u / u!`.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(reg_gamma_lower(self.shape as f64, self.rate * t))
    }

    /// Survival function `P(T > t)`, accurate in the upper tail.
    pub fn sf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(reg_gamma_upper(self.shape as f64, self.rate * t))
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let m = self.shape as f64;
        if t == 0.0 {
            return Ok(if self.shape == 1 { self.rate } else { 0.0 });
        }
        Ok((m * self.rate.ln() + (m - 1.0) * t.ln() - self.rate * t - ln_gamma(m)).exp())
    }

    /// Laplace–Stieltjes transform `(rate / (rate + s))^m`.
    pub fn laplace(&self, s: f64) -> Result<f64> {
        ensure(s >= 0.0, || format!("Laplace argument must be nonnegative, got {s}"))?;
        Ok((self.rate / (self.rate + s)).powi(self.shape as i32))
    }

    pub fn mean(&self) -> f64 {
        self.shape as f64 / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape as f64 / (self.rate * self.rate)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.shape == 1 {
            let u: f64 = Open01.sample(rng);
            return -u.ln() / self.rate;
        }
        GammaSampler::new(self.shape as f64, 1.0 / self.rate)
            .expect("validated Erlang parameters")
            .sample(rng)
    }
}

/// Gamma law with shape and rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaParams {
    pub shape: f64,
    pub rate: f64,
}

impl GammaParams {
    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        ensure(shape > 0.0 && shape.is_finite(), || format!("Gamma shape must be positive, got {shape}"))?;
        ensure(rate > 0.0 && rate.is_finite(), || format!("Gamma rate must be positive, got {rate}"))?;
        Ok(Self { shape, rate })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if x < 0.0 {
            return 0.0;
        }
        if x == 0.0 {
            return match self.shape.partial_cmp(&1.0) {
                Some(std::cmp::Ordering::Less) => f64::INFINITY,
                Some(std::cmp::Ordering::Equal) => self.rate,
                _ => 0.0,
            };
        }
        (self.shape * self.rate.ln() + (self.shape - 1.0) * x.ln() - self.rate * x - ln_gamma(self.shape)).exp()
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        check_time(x)?;
        Ok(reg_gamma_lower(self.shape, self.rate * x))
    }

    pub fn mean(&self) -> f64 {
        self.shape / self.rate
    }

    pub fn variance(&self) -> f64 {
        self.shape / (self.rate * self.rate)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        GammaSampler::new(self.shape, 1.0 / self.rate)
            .expect("validated Gamma parameters")
            .sample(rng)
    }
}

/// Lomax law: density `shape * scale^shape / (t + scale)^(shape + 1)` on `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LomaxParams {
    pub scale: f64,
    pub shape: f64,
}

impl LomaxParams {
    pub fn new(scale: f64, shape: f64) -> Result<Self> {
        ensure(scale > 0.0 && scale.is_finite(), || format!("Lomax scale must be positive, got {scale}"))?;
        ensure(shape > 0.0 && shape.is_finite(), || format!("Lomax shape must be positive, got {shape}"))?;
        Ok(Self { scale, shape })
    }

    pub fn pdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(self.shape / self.scale * (-(self.shape + 1.0) * (t / self.scale).ln_1p()).exp())
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        Ok(-(-self.shape * (t / self.scale).ln_1p()).exp_m1())
    }

    pub fn mean(&self) -> Result<f64> {
        if self.shape > 1.0 {
            Ok(self.scale / (self.shape - 1.0))
        } else {
            Err(Error::MomentUndefined(format!("Lomax mean needs shape > 1, got {}", self.shape)))
        }
    }

    pub fn variance(&self) -> Result<f64> {
        if self.shape > 2.0 {
            let a = self.shape;
            Ok(self.scale * self.scale * a / ((a - 1.0) * (a - 1.0) * (a - 2.0)))
        } else {
            Err(Error::MomentUndefined(format!("Lomax variance needs shape > 2, got {}", self.shape)))
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = Open01.sample(rng);
        self.scale * (-u.ln() / self.shape).exp_m1()
    }
}

/// A positive continuous law usable as a base measure or marginal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BaseDistribution {
    Erlang(ErlangParams),
    Gamma(GammaParams),
    Lomax(LomaxParams),
}

impl BaseDistribution {
    pub fn exponential(rate: f64) -> Result<Self> {
        Ok(Self::Erlang(ErlangParams::exponential(rate)?))
    }

    /// Rate of the base when it is exponential.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self {
            Self::Erlang(p) if p.shape == 1 => Some(p.rate),
            Self::Gamma(p) if p.shape == 1.0 => Some(p.rate),
            _ => None,
        }
    }

    pub fn cdf(&self, t: f64) -> Result<f64> {
        match self {
            Self::Erlang(p) => p.cdf(t),
            Self::Gamma(p) => p.cdf(t),
            Self::Lomax(p) => p.cdf(t),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Erlang(p) => Ok(p.mean()),
            Self::Gamma(p) => Ok(p.mean()),
            Self::Lomax(p) => p.mean(),
        }
    }

    pub fn variance(&self) -> Result<f64> {
        match self {
            Self::Erlang(p) => Ok(p.variance()),
            Self::Gamma(p) => Ok(p.variance()),
            Self::Lomax(p) => p.variance(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Self::Erlang(p) => p.sample(rng),
            Self::Gamma(p) => p.sample(rng),
            Self::Lomax(p) => p.sample(rng),
        }
    }

    /// Single draw from stream 0 of `seed`.
    pub fn sample_seeded(&self, seed: StreamSeed) -> f64 {
        self.sample(&mut seed.rng(0))
    }
}

/// Marginal density of `T` when `T | lambda ~ Erlang(m, lambda)` and
/// `lambda ~ Gamma(alpha, 1)`:
/// `Gamma(alpha + m) t^(m-1) / (Gamma(alpha) Gamma(m) (1 + t)^(m + alpha))`.
pub fn erlang_gamma_marginal_pdf(t: f64, m: u32, alpha: f64) -> Result<f64> {
    check_time(t)?;
    ensure(m >= 1, || "Erlang shape must be >= 1".into())?;
    ensure(alpha > 0.0, || format!("alpha must be positive, got {alpha}"))?;
    let mf = m as f64;
    if t == 0.0 {
        return Ok(if m == 1 { alpha } else { 0.0 });
    }
    let log = ln_gamma(alpha + mf) - ln_gamma(alpha) - ln_gamma(mf) + (mf - 1.0) * t.ln()
        - (mf + alpha) * t.ln_1p();
    Ok(log.exp())
}

/// Marginal density of `T` when `T | theta ~ Exp(theta)` and
/// `theta ~ Uniform(0, 2 lambda)`:
/// `(1 / (2 lambda)) t^-2 [1 - e^(-2 lambda t)(1 + 2 lambda t)]`, with the
/// limit `lambda` at `t = 0`.
pub fn exp_uniform_marginal_pdf(t: f64, lambda: f64) -> Result<f64> {
    check_time(t)?;
    ensure(lambda > 0.0, || format!("lambda must be positive, got {lambda}"))?;
    let c = 2.0 * lambda;
    let x = c * t;
    // 1 - e^{-x}(1 + x) = sum_{k>=2} (-1)^k (k-1) x^k / k!
    let ratio = if x < 0.05 {
        let mut sum = 0.0;
        let mut term = 0.5; // x^{k-2} (k-1)/k! at k = 2
        for k in 2..20u32 {
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * term;
            let kf = k as f64;
            term *= x * kf / ((kf - 1.0) * (kf + 1.0));
        }
        sum * c * c
    } else {
        (-(-x).exp_m1() - x * (-x).exp()) / (t * t)
    };
    Ok(ratio / c)
}

/// One term `coefficient * ErlangCDF(t; shape, rate)` of a signed mixture.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErlangComponent {
    pub coefficient: f64,
    pub shape: u32,
    pub rate: f64,
}

/// A CDF written as `sum_i c_i ErlangCDF(t; m_i, r_i)` with possibly negative `c_i`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SignedErlangMixture {
    pub components: Vec<ErlangComponent>,
}

impl SignedErlangMixture {
    pub fn new(components: Vec<ErlangComponent>) -> Result<Self> {
        for c in &components {
            ErlangParams::new(c.shape, c.rate)?;
            ensure(c.coefficient.is_finite(), || "mixture coefficient must be finite".into())?;
        }
        Ok(Self { components })
    }

    pub fn single(params: ErlangParams) -> Self {
        Self {
            components: vec![ErlangComponent { coefficient: 1.0, shape: params.shape, rate: params.rate }],
        }
    }

    /// Unclamped CDF. Chooses between `sum c P(m, r t)` and
    /// `sum c - sum c Q(m, r t)`, whichever accumulates less rounding.
    pub fn cdf_raw(&self, t: f64) -> Result<f64> {
        Ok(self.cdf_with_rounding(t)?.0)
    }

    /// Unclamped CDF together with a bound on its accumulated rounding error.
    pub fn cdf_with_rounding(&self, t: f64) -> Result<(f64, f64)> {
        check_time(t)?;
        if t == 0.0 {
            return Ok((0.0, 0.0));
        }
        let mut lower = 0.0;
        let mut lower_mag = 0.0;
        let mut upper = 0.0;
        let mut upper_mag = 0.0;
        let mut total = 0.0;
        for c in &self.components {
            let x = c.rate * t;
            let m = c.shape as f64;
            let (p, q) = if x < m {
                let p = reg_gamma_lower(m, x);
                (p, 1.0 - p)
            } else {
                let q = reg_gamma_upper(m, x);
                (1.0 - q, q)
            };
            lower += c.coefficient * p;
            lower_mag += (c.coefficient * p).abs();
            upper += c.coefficient * q;
            upper_mag += (c.coefficient * q).abs();
            total += c.coefficient;
        }
        let eps = 4.0 * f64::EPSILON;
        if lower_mag <= upper_mag {
            Ok((lower, eps * lower_mag))
        } else {
            Ok((total - upper, eps * (upper_mag + total.abs())))
        }
    }

    /// CDF clamped to `[0, 1]` for reporting.
    pub fn cdf(&self, t: f64) -> Result<f64> {
        Ok(self.cdf_raw(t)?.clamp(0.0, 1.0))
    }

    pub fn max_abs_coefficient(&self) -> f64 {
        self.components.iter().map(|c| c.coefficient.abs()).fold(0.0, f64::max)
    }

    pub fn total_weight(&self) -> f64 {
        self.components.iter().map(|c| c.coefficient).sum()
    }
}
