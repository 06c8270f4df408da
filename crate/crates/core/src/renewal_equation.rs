//! The mixed renewal equation `A(t) = a(t) + E_mu[a * U(. | F)](t)`.
//!
//! Closed forms cover drifts `a(t) = 1 - e^{-beta t}` under discrete and Gamma
//! mixtures of exponentials. The numerical solver handles any bounded drift on
//! a uniform grid, and the i.i.d. comparator solves `A = a + F * A` for the
//! marginal `F` by forward substitution.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::exchangeable::ModelSpec;
use crate::latent::{ConditionalErlang, LatentLaw, DEFAULT_LATENT_NODES};
use crate::renewal::{erlang_conditional_renewal, RenewalCurve};

/// The forcing term `a(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DriftFunction {
    /// `1 - e^{-beta t}`
    ExpSaturating { beta: f64 },
    /// Piecewise linear through `(grid[i], values[i])`, constant past the last node.
    Tabulated { grid: Vec<f64>, values: Vec<f64> },
}

impl DriftFunction {
    pub fn exp_saturating(beta: f64) -> Result<Self> {
        let d = DriftFunction::ExpSaturating { beta };
        d.validate()?;
        Ok(d)
    }

    pub fn tabulated(grid: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let d = DriftFunction::Tabulated { grid, values };
        d.validate()?;
        Ok(d)
    }

    pub fn zero() -> Self {
        DriftFunction::Tabulated { grid: vec![0.0], values: vec![0.0] }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            DriftFunction::ExpSaturating { beta } => {
                ensure(*beta > 0.0 && beta.is_finite(), || format!("beta must be positive, got {beta}"))
            }
            DriftFunction::Tabulated { grid, values } => {
                ensure(!grid.is_empty() && grid.len() == values.len(), || {
                    "tabulated drift needs matching nonempty grid and values".into()
                })?;
                ensure(grid[0] == 0.0, || "tabulated drift must start at t = 0".into())?;
                ensure(grid.windows(2).all(|w| w[1] > w[0]), || "tabulated grid must be increasing".into())?;
                ensure(values.iter().all(|v| *v >= 0.0 && v.is_finite()), || {
                    "drift values must be finite and nonnegative".into()
                })
            }
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match self {
            DriftFunction::ExpSaturating { beta } => -(-beta * t).exp_m1(),
            DriftFunction::Tabulated { grid, values } => {
                if t <= grid[0] {
                    return values[0];
                }
                let i = grid.partition_point(|&x| x <= t);
                if i >= grid.len() {
                    return values[values.len() - 1];
                }
                let (x0, x1) = (grid[i - 1], grid[i]);
                values[i - 1] + (values[i] - values[i - 1]) * (t - x0) / (x1 - x0)
            }
        }
    }
}

/// Mixtures of exponential inter-arrival laws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum MixtureOfExponentialsModel {
    Discrete { weights: Vec<f64>, rates: Vec<f64> },
    /// Rate `theta ~ Gamma(shape, rate)`; the marginal is Lomax with scale `rate`.
    Gamma { shape: f64, rate: f64 },
}

impl MixtureOfExponentialsModel {
    pub fn discrete(weights: Vec<f64>, rates: Vec<f64>) -> Result<Self> {
        LatentLaw::atoms(weights.clone(), rates.clone())?;
        Ok(Self::Discrete { weights, rates })
    }

    pub fn gamma(shape: f64, rate: f64) -> Result<Self> {
        LatentLaw::gamma(shape, rate)?;
        Ok(Self::Gamma { shape, rate })
    }

    pub fn kernel(&self) -> Result<ConditionalErlang> {
        match self {
            Self::Discrete { weights, rates } => ConditionalErlang::discrete_exponential(weights.clone(), rates.clone()),
            Self::Gamma { shape, rate } => ConditionalErlang::gamma_exponential(*shape, *rate),
        }
    }

    /// Marginal CDF of one inter-arrival time.
    pub fn marginal_cdf(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        match self {
            Self::Discrete { weights, rates } => {
                weights.iter().zip(rates).map(|(p, r)| -p * (-r * t).exp_m1()).sum()
            }
            Self::Gamma { shape, rate } => -(-shape * (t / rate).ln_1p()).exp_m1(),
        }
    }

    pub fn mean_rate(&self) -> f64 {
        match self {
            Self::Discrete { weights, rates } => weights.iter().zip(rates).map(|(p, r)| p * r).sum(),
            Self::Gamma { shape, rate } => shape / rate,
        }
    }
}

/// `A(t) = 1 - e^{-beta t} + (t + (e^{-beta t} - 1) / beta) sum p_i alpha_i`.
pub fn solve_closed_discrete(t: f64, beta: f64, weights: &[f64], rates: &[f64]) -> Result<f64> {
    ensure(t >= 0.0 && beta > 0.0, || format!("need t >= 0 and beta > 0, got t = {t}, beta = {beta}"))?;
    let kernel = MixtureOfExponentialsModel::discrete(weights.to_vec(), rates.to_vec())?;
    Ok(closed_exp_saturating(t, beta, kernel.mean_rate()))
}

/// Closed form for `a(t) = 1 - e^{-beta t}` under `theta ~ Gamma(alpha, lambda)`:
/// `A(t) = -alpha/(beta lambda) + e^{-beta t} (alpha/(beta lambda) - 1) + (alpha/lambda) t + 1`.
pub fn solve_closed_continuous(t: f64, alpha: f64, beta: f64, lambda: f64) -> Result<f64> {
    ensure(t >= 0.0 && alpha > 0.0 && beta > 0.0 && lambda > 0.0, || {
        format!("need t >= 0 and positive parameters, got t = {t}, ({alpha}, {beta}, {lambda})")
    })?;
    Ok(closed_exp_saturating(t, beta, alpha / lambda))
}

fn closed_exp_saturating(t: f64, beta: f64, mean_rate: f64) -> f64 {
    let sat = -(-beta * t).exp_m1();
    sat + (t - sat / beta) * mean_rate
}

fn check_uniform_grid(grid: &[f64]) -> Result<f64> {
    crate::renewal::check_grid(grid)?;
    ensure(grid[0] == 0.0, || "solver grid must start at 0".into())?;
    ensure(grid.len() >= 2, || "solver grid needs at least two points".into())?;
    let h = grid[1] - grid[0];
    let uniform = grid.windows(2).all(|w| ((w[1] - w[0]) - h).abs() <= 1e-9 * h.max(grid[grid.len() - 1] * 1e-3));
    ensure(uniform, || "solver grid must be uniform".into())?;
    Ok(h)
}

/// `sum_j (a(t_i - x_j) + a(t_i - x_{j-1})) / 2 * dU_j`, the trapezoidal
/// Stieltjes convolution of `a` against increments `dU`.
fn stieltjes_convolve(a: &[f64], du: &[f64]) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| (1..=i).map(|j| 0.5 * (a[i - j] + a[i - j + 1]) * du[j]).sum())
        .collect()
}

/// Numerical solution `a(t) + E_mu[(a * U(. | theta))(t)]` on a uniform grid.
///
/// The latent expectation is taken first, giving the increments of the mixed
/// renewal function, and the convolution is then discretised with the
/// trapezoidal rule. For exponential kernels `U(t | theta) = theta t` and the
/// convolution reduces to `E[theta]` times the cumulative trapezoid of `a`.
pub fn solve_numeric(
    a: &DriftFunction,
    kernel: &ConditionalErlang,
    grid: &[f64],
    quad_nodes: usize,
) -> Result<RenewalCurve> {
    a.validate()?;
    let h = check_uniform_grid(grid)?;
    let av: Vec<f64> = grid.iter().map(|&t| a.eval(t)).collect();
    let values = if kernel.is_exponential() {
        let rate = kernel.latent.mean();
        let mut acc = 0.0;
        let mut out = Vec::with_capacity(av.len());
        out.push(av[0]);
        for i in 1..av.len() {
            acc += 0.5 * h * (av[i - 1] + av[i]);
            out.push(av[i] + rate * acc);
        }
        out
    } else {
        let nodes = kernel.latent.quadrature(quad_nodes);
        let mut u = vec![0.0; grid.len()];
        for (theta, w) in nodes {
            for (ui, &t) in u.iter_mut().zip(grid) {
                *ui += w * erlang_conditional_renewal(t, kernel.shape, theta)?;
            }
        }
        let mut du = vec![0.0; grid.len()];
        for j in 1..grid.len() {
            du[j] = u[j] - u[j - 1];
        }
        let conv = stieltjes_convolve(&av, &du);
        av.iter().zip(conv).map(|(a, c)| a + c).collect()
    };
    RenewalCurve::new(grid.to_vec(), values, None)
}

/// [`solve_numeric`] for a model with a conditionally Erlang representation.
pub fn solve_numeric_model(a: &DriftFunction, model: &ModelSpec, grid: &[f64], quad_nodes: usize) -> Result<RenewalCurve> {
    let kernel = model
        .conditional_erlang()
        .ok_or_else(|| Error::UnsupportedVariant(format!("{} has no conditional renewal evaluator", model.name())))?;
    solve_numeric(a, &kernel, grid, quad_nodes)
}

/// The conditional solution `A(t, {theta}) = a(t) + (a * U(. | theta))(t)`.
pub fn solve_conditional(a: &DriftFunction, shape: u32, theta: f64, grid: &[f64]) -> Result<RenewalCurve> {
    let atom = ConditionalErlang::new(shape, LatentLaw::atoms(vec![1.0], vec![theta])?)?;
    solve_numeric(a, &atom, grid, 1)
}

/// Solves `A_I = a + F * A_I` on a uniform grid, with `F` the inter-arrival CDF.
///
/// The trapezoidal Stieltjes sum involves `A_I(t_i)` itself through the first
/// increment of `F`; that term is moved to the left-hand side.
pub fn solve_iid_comparator<F: Fn(f64) -> f64>(a: &DriftFunction, marginal_cdf: F, grid: &[f64]) -> Result<RenewalCurve> {
    a.validate()?;
    check_uniform_grid(grid)?;
    let n = grid.len();
    let f: Vec<f64> = grid.iter().map(|&t| marginal_cdf(t)).collect();
    ensure(f.iter().all(|v| (0.0..=1.0).contains(v)), || "marginal CDF values must lie in [0, 1]".into())?;
    let df: Vec<f64> = (0..n).map(|j| if j == 0 { 0.0 } else { f[j] - f[j - 1] }).collect();
    let mut out = vec![0.0; n];
    out[0] = a.eval(grid[0]);
    for i in 1..n {
        let mut rhs = a.eval(grid[i]) + 0.5 * df[1] * out[i - 1];
        for j in 2..=i {
            rhs += 0.5 * (out[i - j] + out[i - j + 1]) * df[j];
        }
        out[i] = rhs / (1.0 - 0.5 * df[1]);
    }
    RenewalCurve::new(grid.to_vec(), out, None)
}

/// `max_t |A(t) - a(t) - E_mu[F_theta * A(., {theta})](t)|` on the curve's grid,
/// the conditional solutions being computed on the same grid.
pub fn fixed_point_residual(
    solution: &RenewalCurve,
    a: &DriftFunction,
    kernel: &ConditionalErlang,
    quad_nodes: usize,
) -> Result<f64> {
    let grid = &solution.grid;
    check_uniform_grid(grid)?;
    let n = grid.len();
    let mut rhs: Vec<f64> = grid.iter().map(|&t| a.eval(t)).collect();
    for (theta, w) in kernel.latent.quadrature(quad_nodes) {
        let cond = solve_conditional(a, kernel.shape, theta, grid)?;
        let f = kernel.conditional(theta)?;
        let fv = grid.iter().map(|&t| f.cdf(t)).collect::<Result<Vec<_>>>()?;
        let df: Vec<f64> = (0..n).map(|j| if j == 0 { 0.0 } else { fv[j] - fv[j - 1] }).collect();
        for (r, c) in rhs.iter_mut().zip(stieltjes_convolve(&cond.values, &df)) {
            *r += w * c;
        }
    }
    Ok(solution.values.iter().zip(&rhs).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max))
}

/// Observed convergence order of [`solve_numeric`] from steps `h`, `h/2`, `h/4`
/// on `[0, t_max]`: `log2(|A_h - A_{h/2}| / |A_{h/2} - A_{h/4}|)` in the max norm
/// over the coarse grid.
pub fn richardson_order(a: &DriftFunction, kernel: &ConditionalErlang, t_max: f64, h: f64) -> Result<f64> {
    ensure(h > 0.0 && t_max > h, || "need 0 < h < t_max".into())?;
    let n = (t_max / h).round() as usize;
    let solve = |k: usize| {
        let grid: Vec<f64> = (0..=n * k).map(|i| i as f64 * h / k as f64).collect();
        solve_numeric(a, kernel, &grid, DEFAULT_LATENT_NODES)
    };
    let (c1, c2, c4) = (solve(1)?, solve(2)?, solve(4)?);
    let mut d12: f64 = 0.0;
    let mut d24: f64 = 0.0;
    for i in 0..=n {
        d12 = d12.max((c1.values[i] - c2.values[2 * i]).abs());
        d24 = d24.max((c2.values[2 * i] - c4.values[4 * i]).abs());
    }
    ensure(d24 > 0.0, || "discretisation differences vanished; order is undefined".into())?;
    Ok((d12 / d24).log2())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::renewal::uniform_grid;

    fn grid(h: f64, t: f64) -> Vec<f64> {
        uniform_grid(0.0, t, h).unwrap()
    }

    #[test]
    fn closed_forms_vanish_at_origin() {
        assert_eq!(solve_closed_discrete(0.0, 0.9, &[0.5, 0.5], &[0.1, 10.0]).unwrap(), 0.0);
        assert!(solve_closed_continuous(0.0, 2.0, 4.0, 3.0).unwrap().abs() < 1e-15);
    }

    #[test]
    fn closed_form_slopes() {
        let d = |t| solve_closed_discrete(t, 0.9, &[0.5, 0.5], &[0.1, 10.0]).unwrap();
        assert!(((d(61.0) - d(60.0)) - 5.05).abs() < 1e-12);
        let c = |t| solve_closed_continuous(t, 2.0, 4.0, 3.0).unwrap();
        let h = 1e-4;
        let fd = (c(20.0 + h) - c(20.0 - h)) / (2.0 * h);
        assert!((fd - 2.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn continuous_form_matches_discrete_form_with_mean_rate() {
        for &t in &[0.1, 1.0, 7.5] {
            let c = solve_closed_continuous(t, 2.0, 4.0, 3.0).unwrap();
            let d = solve_closed_discrete(t, 4.0, &[1.0], &[2.0 / 3.0]).unwrap();
            assert!((c - d).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_drift_gives_zero() {
        let g = grid(0.01, 2.0);
        let k = ConditionalErlang::gamma_exponential(2.0, 3.0).unwrap();
        let a = DriftFunction::zero();
        assert!(solve_numeric(&a, &k, &g, 16).unwrap().values.iter().all(|v| *v == 0.0));
        let k2 = ConditionalErlang::new(3, LatentLaw::gamma(2.0, 1.0).unwrap()).unwrap();
        assert!(solve_numeric(&a, &k2, &g, 16).unwrap().values.iter().all(|v| *v == 0.0));
        assert!(solve_iid_comparator(&a, |t| 1.0 - (-t as f64).exp(), &g).unwrap().values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn iid_comparator_exponential_oracle() {
        // F = Exp(lambda): A = a + lambda int a
        let (beta, lambda) = (0.9, 1.7);
        let a = DriftFunction::exp_saturating(beta).unwrap();
        let g = grid(1e-3, 5.0);
        let got = solve_iid_comparator(&a, |t| -(-lambda * t).exp_m1(), &g).unwrap();
        let err = g
            .iter()
            .zip(&got.values)
            .map(|(&t, v)| (v - solve_closed_discrete(t, beta, &[1.0], &[lambda]).unwrap()).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-5, "max error {err}");
    }

    #[test]
    fn erlang_kernel_matches_conditional_route() {
        // Single atom with m = 2: general path vs. direct conditional convolution.
        let a = DriftFunction::exp_saturating(1.0).unwrap();
        let g = grid(0.005, 4.0);
        let k = ConditionalErlang::new(2, LatentLaw::atoms(vec![1.0], vec![1.5]).unwrap()).unwrap();
        let num = solve_numeric(&a, &k, &g, 8).unwrap();
        // iid comparator with Erlang(2, 1.5) marginal solves the same equation
        let f = crate::distributions::ErlangParams::new(2, 1.5).unwrap();
        let iid = solve_iid_comparator(&a, |t| f.cdf(t).unwrap(), &g).unwrap();
        let err = num.values.iter().zip(&iid.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(err < 1e-4, "max difference {err}");
    }

    #[test]
    fn tabulated_drift_interpolates() {
        let d = DriftFunction::tabulated(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 3.0]).unwrap();
        assert_eq!(d.eval(0.5), 1.0);
        assert_eq!(d.eval(1.5), 2.5);
        assert_eq!(d.eval(9.0), 3.0);
        assert!(DriftFunction::tabulated(vec![0.0, 1.0], vec![0.0, -1.0]).is_err());
    }

    #[test]
    fn unsupported_model_signals() {
        let a = DriftFunction::exp_saturating(1.0).unwrap();
        let dp = ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap();
        assert!(matches!(solve_numeric_model(&a, &dp, &grid(0.1, 1.0), 8), Err(Error::UnsupportedVariant(_))));
        assert!(solve_numeric(&a, &ConditionalErlang::gamma_exponential(2.0, 3.0).unwrap(), &[0.0, 0.1, 0.3], 8).is_err());
    }
}
