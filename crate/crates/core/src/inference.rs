//! Likelihood fitting of the Erlang–Gamma model to several sequences, the
//! fitted renewal curves, and a Monte Carlo harness comparing the
//! exchangeable fit with a pooled i.i.d. fit.

use std::ops::RangeInclusive;

use rayon::prelude::*;
use roots::{find_root_brent, Convergency};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exchangeable::{erlang_gamma_correlation, ModelSpec, Sequence};
use crate::renewal::{closed_form_renewal, erlang_conditional_renewal, erlang_gamma_mixed_renewal};
use crate::rng::StreamSeed;
use crate::special::{digamma, ln_gamma};

/// `k` observed inter-arrival sequences (partially exchangeable data).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceSet {
    sequences: Vec<Sequence>,
    ids: Vec<String>,
}

impl SequenceSet {
    pub fn new(sequences: Vec<Sequence>, ids: Vec<String>) -> Result<Self> {
        if sequences.is_empty() {
            return Err(Error::Data("a sequence set needs at least one sequence".into()));
        }
        if ids.len() != sequences.len() {
            return Err(Error::Data("one id per sequence is required".into()));
        }
        if let Some(i) = sequences.iter().position(|s| s.is_empty()) {
            return Err(Error::Data(format!("sequence '{}' is empty", ids[i])));
        }
        Ok(Self { sequences, ids })
    }

    /// Sequences labelled `1..=k`.
    pub fn unlabeled(sequences: Vec<Sequence>) -> Result<Self> {
        let ids = (1..=sequences.len()).map(|i| i.to_string()).collect();
        Self::new(sequences, ids)
    }

    pub fn sequences(&self) -> &[Sequence] {
        &self.sequences
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn len(&self) -> usize {
        self.sequences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequences.is_empty()
    }

    pub fn total_events(&self) -> usize {
        self.sequences.iter().map(Sequence::len).sum()
    }

    pub fn total_time(&self) -> f64 {
        self.sequences.iter().map(Sequence::total).sum()
    }
}

/// Maximum-likelihood fit of the Erlang–Gamma model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub m_hat: u32,
    pub alpha_hat: f64,
    pub loglik: f64,
    pub corr_hat: f64,
    pub profile: Vec<ProfilePoint>,
}

/// The profile maximum `alpha*(m)` and its log-likelihood.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfilePoint {
    pub m: u32,
    pub alpha: f64,
    pub loglik: f64,
}

impl FitResult {
    /// A fit with the given estimates and no profile, e.g. for published values.
    pub fn from_estimates(m_hat: u32, alpha_hat: f64) -> Result<Self> {
        let model = ModelSpec::erlang_gamma(m_hat, alpha_hat)?;
        model.validate()?;
        Ok(Self { m_hat, alpha_hat, loglik: f64::NAN, corr_hat: erlang_gamma_correlation(m_hat, alpha_hat), profile: Vec::new() })
    }

    pub fn model(&self) -> ModelSpec {
        ModelSpec::ErlangGamma { m: self.m_hat, alpha: self.alpha_hat }
    }
}

/// Sufficient statistics for the Erlang–Gamma likelihood.
#[derive(Debug, Clone, PartialEq)]
struct LikelihoodStats {
    /// `(n_i, ln(1 + sum_j t_ij))` per sequence
    per_sequence: Vec<(f64, f64)>,
    sum_log_t: f64,
    total_n: f64,
}

impl LikelihoodStats {
    fn new(data: &SequenceSet) -> Self {
        let per_sequence = data.sequences().iter().map(|s| (s.len() as f64, s.total().ln_1p())).collect();
        let sum_log_t = data.sequences().iter().flat_map(|s| s.times()).map(|t| t.ln()).sum();
        Self { per_sequence, sum_log_t, total_n: data.total_events() as f64 }
    }

    fn loglik(&self, m: u32, alpha: f64) -> f64 {
        let mf = m as f64;
        let k = self.per_sequence.len() as f64;
        let mut ll = -k * ln_gamma(alpha) - self.total_n * ln_gamma(mf) + (mf - 1.0) * self.sum_log_t;
        for &(n, log_s) in &self.per_sequence {
            ll += ln_gamma(alpha + n * mf) - (alpha + n * mf) * log_s;
        }
        ll
    }

    /// `d loglik / d alpha`
    fn score(&self, m: u32, alpha: f64) -> f64 {
        let mf = m as f64;
        self.per_sequence
            .iter()
            .map(|&(n, log_s)| digamma(alpha + n * mf) - digamma(alpha) - log_s)
            .sum()
    }
}

/// Log joint density of the sequences under the Erlang–Gamma model, each
/// sequence having its own latent rate:
/// `sum_i [ln Gamma(alpha + n_i m) - ln Gamma(alpha) - n_i ln Gamma(m) + (m - 1) sum_j ln t_ij
///  - (alpha + n_i m) ln(1 + sum_j t_ij)]`.
pub fn joint_log_density(data: &SequenceSet, m: u32, alpha: f64) -> Result<f64> {
    ModelSpec::erlang_gamma(m, alpha)?;
    Ok(LikelihoodStats::new(data).loglik(m, alpha))
}

/// Range of Erlang shapes searched by [`fit_mle`].
pub const DEFAULT_M_RANGE: RangeInclusive<u32> = 1..=200;
pub const MAX_M: u32 = 500;
/// Convergence tolerance in `ln alpha`.
pub const LOG_ALPHA_TOL: f64 = 1e-8;
const LOG_ALPHA_BOUND: f64 = 40.0;

struct LogTolerance;

impl Convergency<f64> for LogTolerance {
    fn is_root_found(&mut self, y: f64) -> bool {
        y == 0.0
    }
    fn is_converged(&mut self, x1: f64, x2: f64) -> bool {
        (x1 - x2).abs() < LOG_ALPHA_TOL
    }
    fn is_iteration_limit_reached(&mut self, iter: usize) -> bool {
        iter > 500
    }
}

/// Maximises the log-likelihood in `alpha` at fixed `m`.
///
/// The log-likelihood is strictly concave in `alpha` (its second derivative
/// is a sum of `psi'(alpha + n m) - psi'(alpha) < 0`), so the maximiser is
/// the unique root of the score. The root is bracketed by doubling outwards
/// in `ln alpha` and refined with Brent's method.
fn profile_alpha(stats: &LikelihoodStats, m: u32) -> Result<ProfilePoint> {
    // score in u = ln alpha, with the positive factor alpha dropped
    let g = |u: f64| stats.score(m, u.exp());
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut step = 2.0;
    while g(lo) <= 0.0 {
        lo -= step;
        step *= 2.0;
        if lo < -LOG_ALPHA_BOUND {
            return Err(Error::Optimization(format!("no bracket for alpha at m = {m}: score <= 0 as alpha -> 0")));
        }
    }
    step = 2.0;
    while g(hi) >= 0.0 {
        hi += step;
        step *= 2.0;
        if hi > LOG_ALPHA_BOUND {
            return Err(Error::Optimization(format!("no bracket for alpha at m = {m}: score >= 0 as alpha grows")));
        }
    }
    let u = find_root_brent(lo, hi, g, &mut LogTolerance)
        .map_err(|e| Error::Optimization(format!("Brent search failed at m = {m}: {e:?}")))?;
    let alpha = u.exp();
    Ok(ProfilePoint { m, alpha, loglik: stats.loglik(m, alpha) })
}

/// Profile-likelihood MLE of `(m, alpha)`: `alpha` is maximised for every `m`
/// in `m_range`, and the `m` with the largest maximum wins (ties go to the
/// smaller `m`).
pub fn fit_mle(data: &SequenceSet, m_range: RangeInclusive<u32>) -> Result<FitResult> {
    let (&lo, &hi) = (m_range.start(), m_range.end());
    ensure(lo >= 1 && lo <= hi && hi <= MAX_M, || format!("m range must lie within 1..={MAX_M}, got {lo}..={hi}"))?;
    let stats = LikelihoodStats::new(data);
    let mut profile = Vec::with_capacity((hi - lo + 1) as usize);
    let mut last_err = None;
    for m in m_range {
        match profile_alpha(&stats, m) {
            Ok(p) => profile.push(p),
            Err(e) => last_err = Some(e),
        }
    }
    let best = profile
        .iter()
        .fold(None::<&ProfilePoint>, |best, p| match best {
            Some(b) if b.loglik >= p.loglik => Some(b),
            _ => Some(p),
        })
        .copied();
    let best = match best {
        Some(b) => b,
        None => return Err(last_err.unwrap_or_else(|| Error::Optimization("empty m range".into()))),
    };
    Ok(FitResult {
        m_hat: best.m,
        alpha_hat: best.alpha,
        loglik: best.loglik,
        corr_hat: erlang_gamma_correlation(best.m, best.alpha),
        profile,
    })
}

/// `U(t)` of the fitted Erlang–Gamma model.
pub fn fitted_renewal_exchangeable(t: f64, fit: &FitResult) -> Result<f64> {
    erlang_gamma_mixed_renewal(t, fit.m_hat, fit.alpha_hat)
}

/// How the shape of the i.i.d. comparator is chosen.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IidShape {
    Fixed(u32),
    /// Maximise the pooled Erlang likelihood over this range.
    Profile { lo: u32, hi: u32 },
}

/// Pooled Erlang fit that ignores the dependence within sequences.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IidFit {
    pub m: u32,
    pub lambda: f64,
    pub loglik: f64,
}

impl IidFit {
    pub fn renewal(&self, t: f64) -> Result<f64> {
        erlang_conditional_renewal(t, self.m, self.lambda)
    }
}

/// Erlang(m, lambda) MLE over all pooled inter-arrival times:
/// `lambda = m N / sum t`.
pub fn fit_iid(data: &SequenceSet, shape: &IidShape) -> Result<IidFit> {
    let n = data.total_events() as f64;
    let total = data.total_time();
    let sum_log: f64 = data.sequences().iter().flat_map(|s| s.times()).map(|t| t.ln()).sum();
    let at = |m: u32| {
        let mf = m as f64;
        let lambda = mf * n / total;
        let loglik = n * (mf * lambda.ln() - ln_gamma(mf)) + (mf - 1.0) * sum_log - lambda * total;
        IidFit { m, lambda, loglik }
    };
    match *shape {
        IidShape::Fixed(m) => {
            ensure(m >= 1, || "m must be >= 1".into())?;
            Ok(at(m))
        }
        IidShape::Profile { lo, hi } => {
            ensure(lo >= 1 && lo <= hi && hi <= MAX_M, || format!("m range must lie within 1..={MAX_M}"))?;
            Ok((lo..=hi).map(at).fold(at(lo), |b, f| if f.loglik > b.loglik { f } else { b }))
        }
    }
}

/// `U(t)` under the pooled i.i.d. Erlang fit with shape `m`.
pub fn fitted_renewal_iid(t: f64, data: &SequenceSet, m: u32) -> Result<f64> {
    fit_iid(data, &IidShape::Fixed(m))?.renewal(t)
}

/// Simulates one sequence of each length in `lengths`, sequence `i` on stream `i`.
pub fn simulate_sequence_set(model: &ModelSpec, lengths: &[usize], seed: StreamSeed) -> Result<SequenceSet> {
    model.validate()?;
    ensure(!lengths.is_empty() && lengths.iter().all(|&n| n >= 1), || "sequence lengths must be >= 1".into())?;
    let sequences = lengths
        .iter()
        .enumerate()
        .map(|(i, &n)| Sequence::new(model.arrivals(seed.rng(i as u64)).take(n).collect()))
        .collect::<Result<Vec<_>>>()?;
    SequenceSet::unlabeled(sequences)
}

/// Pointwise median and 2.5% / 97.5% percentiles of a family of curves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bands {
    pub median: Vec<f64>,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl Bands {
    pub fn from_curves(curves: &[Vec<f64>]) -> Result<Self> {
        ensure(!curves.is_empty(), || "no curves to summarise".into())?;
        let g = curves[0].len();
        let mut median = Vec::with_capacity(g);
        let mut lo = Vec::with_capacity(g);
        let mut hi = Vec::with_capacity(g);
        let mut column = Vec::with_capacity(curves.len());
        for j in 0..g {
            column.clear();
            column.extend(curves.iter().map(|c| c[j]));
            column.sort_by(f64::total_cmp);
            median.push(quantile_sorted(&column, 0.5));
            lo.push(quantile_sorted(&column, 0.025));
            hi.push(quantile_sorted(&column, 0.975));
        }
        Ok(Self { median, lo, hi })
    }

    /// Fraction of points `j` with `lo[j] <= truth[j] <= hi[j]`.
    pub fn coverage(&self, truth: &[f64]) -> f64 {
        let inside = truth.iter().enumerate().filter(|&(j, &t)| self.lo[j] <= t && t <= self.hi[j]).count();
        inside as f64 / truth.len() as f64
    }
}

/// Linear-interpolation quantile (R's type 7) of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let i = h.floor() as usize;
    match sorted.get(i + 1) {
        Some(next) => sorted[i] + (h - i as f64) * (next - sorted[i]),
        None => sorted[i],
    }
}

/// Settings of a Monte Carlo study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyConfig {
    pub lengths: Vec<usize>,
    pub replicates: usize,
    pub grid: Vec<f64>,
    pub seed: u64,
    pub m_range: (u32, u32),
    pub iid_shape: Option<IidShape>,
}

/// One replicate of a study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReplicate {
    pub m_hat: u32,
    pub alpha_hat: f64,
    pub corr_hat: f64,
    pub iid: IidFit,
    pub exchangeable_curve: Vec<f64>,
    pub iid_curve: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub grid: Vec<f64>,
    pub true_curve: Vec<f64>,
    pub exchangeable: Bands,
    pub iid: Bands,
    pub replicates: Vec<StudyReplicate>,
    /// Indices of replicates whose fit failed, with the error message.
    pub failures: Vec<(usize, String)>,
}

impl StudyResult {
    pub fn median_m_hat(&self) -> f64 {
        let mut m: Vec<f64> = self.replicates.iter().map(|r| r.m_hat as f64).collect();
        m.sort_by(f64::total_cmp);
        quantile_sorted(&m, 0.5)
    }

    pub fn median_corr_hat(&self) -> f64 {
        let mut c: Vec<f64> = self.replicates.iter().map(|r| r.corr_hat).collect();
        c.sort_by(f64::total_cmp);
        quantile_sorted(&c, 0.5)
    }

    /// Fraction of replicates where the i.i.d. curve ends below the exchangeable one.
    pub fn iid_below_at_horizon(&self) -> f64 {
        let below = self
            .replicates
            .iter()
            .filter(|r| r.iid_curve.last() < r.exchangeable_curve.last())
            .count();
        below as f64 / self.replicates.len() as f64
    }
}

/// Maximum tolerated fraction of failed fits.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// Repeatedly simulates data from `true_model`, refits, and summarises the
/// fitted curves. Replicate `r` uses the child seed `r` of `cfg.seed`.
pub fn monte_carlo_study(true_model: &ModelSpec, cfg: &StudyConfig) -> Result<StudyResult> {
    ensure(cfg.replicates >= 1, || "need at least one replicate".into())?;
    crate::renewal::check_grid(&cfg.grid)?;
    let true_curve = cfg.grid.iter().map(|&t| closed_form_renewal(true_model, t)).collect::<Result<Vec<_>>>()?;
    let seed = StreamSeed::new(cfg.seed);
    let m_range = cfg.m_range.0..=cfg.m_range.1;
    let outcomes: Vec<Result<StudyReplicate>> = (0..cfg.replicates)
        .into_par_iter()
        .map(|r| {
            let data = simulate_sequence_set(true_model, &cfg.lengths, seed.child(r as u64))?;
            let fit = fit_mle(&data, m_range.clone())?;
            let shape = cfg.iid_shape.clone().unwrap_or(IidShape::Fixed(fit.m_hat));
            let iid = fit_iid(&data, &shape)?;
            let exchangeable_curve =
                cfg.grid.iter().map(|&t| fitted_renewal_exchangeable(t, &fit)).collect::<Result<Vec<_>>>()?;
            let iid_curve = cfg.grid.iter().map(|&t| iid.renewal(t)).collect::<Result<Vec<_>>>()?;
            Ok(StudyReplicate {
                m_hat: fit.m_hat,
                alpha_hat: fit.alpha_hat,
                corr_hat: fit.corr_hat,
                iid,
                exchangeable_curve,
                iid_curve,
            })
        })
        .collect();
    let mut replicates = Vec::with_capacity(cfg.replicates);
    let mut failures = Vec::new();
    for (r, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(rep) => replicates.push(rep),
            Err(e) => failures.push((r, e.to_string())),
        }
    }
    if failures.len() as f64 > MAX_FAILURE_RATE * cfg.replicates as f64 {
        return Err(Error::Optimization(format!(
            "{} of {} replicate fits failed; first: {}",
            failures.len(),
            cfg.replicates,
            failures[0].1
        )));
    }
    let ex: Vec<Vec<f64>> = replicates.iter().map(|r| r.exchangeable_curve.clone()).collect();
    let iid: Vec<Vec<f64>> = replicates.iter().map(|r| r.iid_curve.clone()).collect();
    Ok(StudyResult {
        grid: cfg.grid.clone(),
        true_curve,
        exchangeable: Bands::from_curves(&ex)?,
        iid: Bands::from_curves(&iid)?,
        replicates,
        failures,
    })
}
