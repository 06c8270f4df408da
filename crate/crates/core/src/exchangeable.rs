//! Exchangeable inter-arrival hierarchies.
//!
//! Each [`ModelSpec`] variant stands in for a de Finetti mixing measure: the
//! parametric variants draw a latent rate once per sequence and then emit
//! conditionally i.i.d. times; the Dirichlet-process variant emits times
//! through the Pólya urn.

use rand::Rng;
use rand_distr::{Distribution, Open01};
use serde::{Deserialize, Serialize};

use crate::distributions::{BaseDistribution, ErlangParams, GammaParams};
use crate::error::{ensure, Error, Result};
use crate::latent::{ConditionalErlang, LatentLaw};
use crate::rng::{StreamRng, StreamSeed};

/// The exchangeable hierarchy driving a mixed renewal process.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelSpec {
    /// `T_i | lambda ~ Erlang(m, lambda)`, `lambda ~ Gamma(alpha, 1)`.
    ErlangGamma { m: u32, alpha: f64 },
    /// `T_i | theta ~ Exp(theta)`, `theta ~ Uniform(0, 2 lambda)`.
    ExpUniform { lambda: f64 },
    /// `T_i | delta ~ Gamma(2, delta)`, `delta ~ Pareto(k, alpha)` on `[k, inf)`.
    Gamma2Pareto { k: f64, alpha: f64 },
    /// `T_i | F ~ F`, `F ~ DP(alpha, base)`.
    DirichletProcess { alpha: f64, base: BaseDistribution },
}

impl ModelSpec {
    pub fn erlang_gamma(m: u32, alpha: f64) -> Result<Self> {
        let spec = Self::ErlangGamma { m, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn exp_uniform(lambda: f64) -> Result<Self> {
        let spec = Self::ExpUniform { lambda };
        spec.validate()?;
        Ok(spec)
    }

    pub fn gamma2_pareto(k: f64, alpha: f64) -> Result<Self> {
        let spec = Self::Gamma2Pareto { k, alpha };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dirichlet_process(alpha: f64, base: BaseDistribution) -> Result<Self> {
        let spec = Self::DirichletProcess { alpha, base };
        spec.validate()?;
        Ok(spec)
    }

    /// Dirichlet process with an exponential base of the given rate.
    pub fn dirichlet_exponential(alpha: f64, rate: f64) -> Result<Self> {
        Self::dirichlet_process(alpha, BaseDistribution::exponential(rate)?)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| ensure(v > 0.0 && v.is_finite(), || format!("{name} must be positive, got {v}"));
        match *self {
            Self::ErlangGamma { m, alpha } => {
                ensure(m >= 1, || "m must be >= 1".into())?;
                positive("alpha", alpha)
            }
            Self::ExpUniform { lambda } => positive("lambda", lambda),
            Self::Gamma2Pareto { k, alpha } => {
                positive("k", k)?;
                positive("alpha", alpha)
            }
            Self::DirichletProcess { alpha, ref base } => {
                positive("alpha", alpha)?;
                match base {
                    BaseDistribution::Erlang(p) => ErlangParams::new(p.shape, p.rate).map(|_| ()),
                    BaseDistribution::Gamma(p) => GammaParams::new(p.shape, p.rate).map(|_| ()),
                    BaseDistribution::Lomax(p) => crate::distributions::LomaxParams::new(p.scale, p.shape).map(|_| ()),
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::ErlangGamma { .. } => "erlang-gamma",
            Self::ExpUniform { .. } => "exp-uniform",
            Self::Gamma2Pareto { .. } => "gamma2-pareto",
            Self::DirichletProcess { .. } => "dirichlet-process",
        }
    }

    /// The conditionally Erlang form of the model, when it has one with a
    /// renewal-function evaluator.
    pub fn conditional_erlang(&self) -> Option<ConditionalErlang> {
        match *self {
            Self::ErlangGamma { m, alpha } => Some(ConditionalErlang {
                shape: m,
                latent: LatentLaw::Gamma(GammaParams { shape: alpha, rate: 1.0 }),
            }),
            Self::ExpUniform { lambda } => Some(ConditionalErlang {
                shape: 1,
                latent: LatentLaw::Uniform { lo: 0.0, hi: 2.0 * lambda },
            }),
            _ => None,
        }
    }

    /// Open an inter-arrival stream on `rng`. The latent parameter (if any) is
    /// drawn immediately.
    pub fn arrivals<R: Rng>(&self, rng: R) -> Arrivals<'_, R> {
        Arrivals::new(self, rng)
    }

    /// `n` exchangeable inter-arrival times from stream 0 of `seed`.
    pub fn sample_sequence(&self, n: usize, seed: StreamSeed) -> Result<SimulatedSequence> {
        ensure(n >= 1, || "sequence length must be >= 1".into())?;
        self.validate()?;
        let mut stream = self.arrivals(seed.rng(0));
        let times: Vec<f64> = (&mut stream).take(n).collect();
        Ok(SimulatedSequence { latent: stream.latent(), sequence: Sequence(times) })
    }

    /// Inter-arrival times until their cumulative sum first exceeds `horizon`.
    /// The overshooting time is included.
    pub fn sample_until(&self, horizon: f64, cap: usize, rng: &mut StreamRng) -> Result<Vec<f64>> {
        let mut stream = self.arrivals(rng);
        let mut times = Vec::new();
        let mut total = 0.0;
        while total <= horizon {
            if times.len() >= cap {
                return Err(Error::HorizonNotReached { horizon, cap });
            }
            let t = stream.next().expect("arrival streams are infinite");
            total += t;
            times.push(t);
        }
        Ok(times)
    }

    /// Marginal mean of an inter-arrival time.
    pub fn marginal_mean(&self) -> Result<f64> {
        match *self {
            Self::ErlangGamma { m, alpha } => {
                if alpha > 1.0 {
                    Ok(m as f64 / (alpha - 1.0))
                } else {
                    Err(Error::MomentUndefined(format!("E[T] needs alpha > 1, got {alpha}")))
                }
            }
            Self::ExpUniform { .. } => Err(Error::MomentUndefined(
                "E[T] is infinite under a uniform mixing law that reaches rate 0".into(),
            )),
            Self::Gamma2Pareto { k, alpha } => Ok(2.0 * alpha / (k * (alpha + 1.0))),
            Self::DirichletProcess { ref base, .. } => base.mean(),
        }
    }

    /// Marginal variance of an inter-arrival time.
    pub fn marginal_variance(&self) -> Result<f64> {
        match *self {
            Self::ErlangGamma { m, alpha } => {
                if alpha > 2.0 {
                    let m = m as f64;
                    Ok(m * (alpha + m - 1.0) / ((alpha - 2.0) * (alpha - 1.0).powi(2)))
                } else {
                    Err(Error::MomentUndefined(format!("Var(T) needs alpha > 2, got {alpha}")))
                }
            }
            Self::ExpUniform { .. } => Err(Error::MomentUndefined("Var(T) is infinite under a uniform mixing law".into())),
            Self::Gamma2Pareto { k, alpha } => {
                let (inv1, inv2) = pareto_inverse_moments(k, alpha);
                Ok(6.0 * inv2 - 4.0 * inv1 * inv1)
            }
            Self::DirichletProcess { ref base, .. } => base.variance(),
        }
    }

    /// `(E[T], Var(T))` of the marginal law.
    pub fn marginal_moments(&self) -> Result<(f64, f64)> {
        Ok((self.marginal_mean()?, self.marginal_variance()?))
    }

    /// `Corr(T_i, T_j)` for `i != j`.
    pub fn theoretical_correlation(&self) -> Result<f64> {
        match *self {
            Self::ErlangGamma { m, alpha } => {
                if alpha > 2.0 {
                    Ok(erlang_gamma_correlation(m, alpha))
                } else {
                    Err(Error::MomentUndefined(format!("correlation needs alpha > 2, got {alpha}")))
                }
            }
            Self::ExpUniform { .. } => self.marginal_variance(),
            Self::Gamma2Pareto { k, alpha } => {
                let (inv1, inv2) = pareto_inverse_moments(k, alpha);
                let cov = 4.0 * (inv2 - inv1 * inv1);
                Ok(cov / self.marginal_variance()?)
            }
            Self::DirichletProcess { alpha, ref base } => {
                base.variance()?;
                Ok(1.0 / (alpha + 1.0))
            }
        }
    }

    /// Whether `U(t) < inf` for all `t`.
    pub fn renewal_finiteness(&self) -> bool {
        !matches!(*self, Self::Gamma2Pareto { alpha, .. } if alpha <= 1.0)
    }
}

/// `m / (alpha + m - 1)`, the inter-arrival correlation of the Erlang–Gamma model.
pub fn erlang_gamma_correlation(m: u32, alpha: f64) -> f64 {
    m as f64 / (alpha + m as f64 - 1.0)
}

/// `(E[1/delta], E[1/delta^2])` for `delta ~ Pareto(k, alpha)`.
fn pareto_inverse_moments(k: f64, alpha: f64) -> (f64, f64) {
    (alpha / (k * (alpha + 1.0)), alpha / (k * k * (alpha + 2.0)))
}

/// Observed inter-arrival times of one sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sequence(Vec<f64>);

impl Sequence {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if let Some((i, t)) = times.iter().enumerate().find(|(_, t)| !(**t > 0.0 && t.is_finite())) {
            return Err(Error::Data(format!("inter-arrival time #{} is not positive and finite: {t}", i + 1)));
        }
        Ok(Self(times))
    }

    pub fn times(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    /// Arrival epochs `S_1, S_2, ...`.
    pub fn epochs(&self) -> Vec<f64> {
        self.0
            .iter()
            .scan(0.0, |acc, t| {
                *acc += t;
                Some(*acc)
            })
            .collect()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

/// A sampled sequence with the latent parameter that produced it
/// (`None` for the Dirichlet process).
#[derive(Debug, Clone, PartialEq)]
pub struct SimulatedSequence {
    pub sequence: Sequence,
    pub latent: Option<f64>,
}

enum ArrivalState {
    Erlang(ErlangParams),
    /// Gamma(2, delta), i.e. 2-stage Erlang at rate delta.
    GammaTwo(ErlangParams),
    Urn { alpha: f64, base: BaseDistribution, seen: Vec<f64> },
}

/// Infinite iterator over exchangeable inter-arrival times.
pub struct Arrivals<'a, R> {
    rng: R,
    state: ArrivalState,
    latent: Option<f64>,
    _model: std::marker::PhantomData<&'a ModelSpec>,
}

impl<'a, R: Rng> Arrivals<'a, R> {
    fn new(model: &'a ModelSpec, mut rng: R) -> Self {
        let (state, latent) = match *model {
            ModelSpec::ErlangGamma { m, alpha } => {
                let lambda = GammaParams { shape: alpha, rate: 1.0 }.sample(&mut rng).max(f64::MIN_POSITIVE);
                (ArrivalState::Erlang(ErlangParams { shape: m, rate: lambda }), Some(lambda))
            }
            ModelSpec::ExpUniform { lambda } => {
                let u: f64 = Open01.sample(&mut rng);
                let theta = 2.0 * lambda * u;
                (ArrivalState::Erlang(ErlangParams { shape: 1, rate: theta }), Some(theta))
            }
            ModelSpec::Gamma2Pareto { k, alpha } => {
                let u: f64 = Open01.sample(&mut rng);
                let delta = k * (-u.ln() / alpha).exp();
                (ArrivalState::GammaTwo(ErlangParams { shape: 2, rate: delta }), Some(delta))
            }
            ModelSpec::DirichletProcess { alpha, base } => {
                (ArrivalState::Urn { alpha, base, seen: Vec::new() }, None)
            }
        };
        Self { rng, state, latent, _model: std::marker::PhantomData }
    }

    pub fn latent(&self) -> Option<f64> {
        self.latent
    }
}

impl<R: Rng> Iterator for Arrivals<'_, R> {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        let rng = &mut self.rng;
        Some(match &mut self.state {
            ArrivalState::Erlang(p) | ArrivalState::GammaTwo(p) => p.sample(rng),
            ArrivalState::Urn { alpha, base, seen } => {
                let i = seen.len() as f64;
                let new_value = rng.random::<f64>() * (*alpha + i) < *alpha;
                let t = if new_value {
                    base.sample(rng)
                } else {
                    seen[rng.random_range(0..seen.len())]
                };
                seen.push(t);
                t
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation() {
        assert!(ModelSpec::erlang_gamma(0, 2.0).is_err());
        assert!(ModelSpec::erlang_gamma(2, -1.0).is_err());
        assert!(ModelSpec::exp_uniform(0.0).is_err());
        assert!(ModelSpec::dirichlet_exponential(0.0, 1.0).is_err());
        assert!(ModelSpec::dirichlet_exponential(1.0, 1.0).is_ok());
    }

    #[test]
    fn table_one_and_application_correlations() {
        let c = ModelSpec::erlang_gamma(40, 2.1).unwrap().theoretical_correlation().unwrap();
        assert!((c - 0.973).abs() < 5e-4, "{c}");
        let c = ModelSpec::erlang_gamma(1, 30.0).unwrap().theoretical_correlation().unwrap();
        assert!((c - 0.033).abs() < 5e-4, "{c}");
        let c = ModelSpec::erlang_gamma(1, 5.982).unwrap().theoretical_correlation().unwrap();
        assert!((c - 0.167).abs() < 5e-4, "{c}");
        let c = ModelSpec::erlang_gamma(1, 1e12).unwrap().theoretical_correlation().unwrap();
        assert!(c < 1e-11);
        assert!(matches!(
            ModelSpec::erlang_gamma(3, 2.0).unwrap().theoretical_correlation(),
            Err(Error::MomentUndefined(_))
        ));
        let d = ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap();
        assert!((d.theoretical_correlation().unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn erlang_gamma_moments() {
        let (mean, var) = ModelSpec::erlang_gamma(1, 3.0).unwrap().marginal_moments().unwrap();
        assert!((mean - 0.5).abs() < 1e-15 && (var - 0.75).abs() < 1e-15);
        let mean = ModelSpec::erlang_gamma(2, 2.5).unwrap().marginal_mean().unwrap();
        assert!((mean - 4.0 / 3.0).abs() < 1e-15);
        assert!(ModelSpec::erlang_gamma(2, 2.5).unwrap().marginal_variance().is_ok());
        assert!(ModelSpec::erlang_gamma(2, 1.5).unwrap().marginal_variance().is_err());
        assert!(ModelSpec::erlang_gamma(2, 0.9).unwrap().marginal_mean().is_err());
    }

    #[test]
    fn finiteness_predicate() {
        assert!(!ModelSpec::gamma2_pareto(1.0, 0.5).unwrap().renewal_finiteness());
        assert!(!ModelSpec::gamma2_pareto(1.0, 1.0).unwrap().renewal_finiteness());
        assert!(ModelSpec::gamma2_pareto(1.0, 2.0).unwrap().renewal_finiteness());
        assert!(ModelSpec::erlang_gamma(3, 0.4).unwrap().renewal_finiteness());
        assert!(ModelSpec::exp_uniform(2.0).unwrap().renewal_finiteness());
        assert!(ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap().renewal_finiteness());
    }

    #[test]
    fn sequences_are_reproducible_and_positive() {
        let model = ModelSpec::erlang_gamma(3, 2.0).unwrap();
        let a = model.sample_sequence(50, StreamSeed::new(1)).unwrap();
        let b = model.sample_sequence(50, StreamSeed::new(1)).unwrap();
        assert_eq!(a, b);
        assert!(a.latent.unwrap() > 0.0);
        assert!(a.sequence.times().iter().all(|&t| t > 0.0));
        assert!(model.sample_sequence(0, StreamSeed::new(1)).is_err());
    }

    #[test]
    fn urn_with_huge_precision_never_repeats() {
        let model = ModelSpec::dirichlet_exponential(1e6, 1.0).unwrap();
        let s = model.sample_sequence(100, StreamSeed::new(3)).unwrap();
        let mut t = s.sequence.into_inner();
        t.sort_by(f64::total_cmp);
        t.dedup();
        assert_eq!(t.len(), 100);
    }

    #[test]
    fn urn_repeats_with_small_precision() {
        let model = ModelSpec::dirichlet_exponential(0.5, 1.0).unwrap();
        let s = model.sample_sequence(200, StreamSeed::new(3)).unwrap();
        let mut t = s.sequence.into_inner();
        t.sort_by(f64::total_cmp);
        t.dedup();
        assert!(t.len() < 20);
    }

    #[test]
    fn sample_until_covers_horizon() {
        let model = ModelSpec::erlang_gamma(1, 2.0).unwrap();
        let mut rng = StreamSeed::new(9).rng(0);
        let times = model.sample_until(5.0, 1_000_000, &mut rng).unwrap();
        let total: f64 = times.iter().sum();
        assert!(total > 5.0);
        assert!(total - times.last().unwrap() <= 5.0);
        let slow = ModelSpec::exp_uniform(1e-9).unwrap();
        let mut rng = StreamSeed::new(9).rng(1);
        assert!(slow.sample_until(0.0, 0, &mut rng).is_err());
    }

    #[test]
    fn sequence_rejects_nonpositive_times() {
        assert!(Sequence::new(vec![1.0, 0.0]).is_err());
        assert!(Sequence::new(vec![1.0, f64::NAN]).is_err());
        let s = Sequence::new(vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(s.epochs(), vec![1.0, 3.0, 6.0]);
    }
}
