use std::io::Write as _;
use std::path::{Path, PathBuf};

use mixren::dirichlet::{dp_renewal_function_capped, enumerate_partitions_capped, ewens_probability, sn_cdf_detailed};
use mixren::distributions::BaseDistribution;
use mixren::exchangeable::ModelSpec;
use mixren::inference::{
    fit_iid, fit_mle, fitted_renewal_exchangeable, monte_carlo_study, simulate_sequence_set, IidShape, StudyConfig,
    DEFAULT_M_RANGE,
};
use mixren::renewal::{
    closed_form_renewal, empirical_renewal_curve, mc_renewal_function, series_mixed_renewal, McConfig,
};
use mixren::renewal_equation::{solve_iid_comparator, solve_numeric, DriftFunction, MixtureOfExponentialsModel};
use mixren::rng::StreamSeed;
use serde::Serialize;

use crate::config::{ExperimentConfig, GridSpec};
use crate::error::{usage, CliError, CliResult};
use crate::io::{read_sequences, write_sequences, write_table};
use crate::{
    Cli, Command, DpArgs, DpTable, FitArgs, McStudyArgs, Method, MixtureKind, ModelArgs, ModelKind, RenewalArgs,
    SimulateArgs, SolveArgs,
};

const DEFAULT_SEED: u64 = 1;
const DEFAULT_MC_REPLICATES: usize = 10_000;
const DEFAULT_STUDY_REPLICATES: usize = 200;
const DEFAULT_SERIES_TOL: f64 = 1e-8;
const DEFAULT_DP_TOL: f64 = 1e-2;
const FIT_GRID_POINTS: usize = 50;

struct Context {
    config: ExperimentConfig,
    seed: u64,
}

pub fn run(cli: Cli) -> CliResult<()> {
    let config = match &cli.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    let name = command_name(&cli.command);
    if let Some(w) = &config.workflow {
        if w != name {
            return Err(usage(format!("config is for workflow '{w}', not '{name}'")));
        }
    }
    let seed = cli.seed.or(config.seed).unwrap_or(DEFAULT_SEED);
    let ctx = Context { config, seed };
    match &cli.command {
        Command::Simulate(a) => simulate(&ctx, a),
        Command::Fit(a) => fit(&ctx, a),
        Command::Renewal(a) => renewal(&ctx, a),
        Command::Solve(a) => solve(&ctx, a),
        Command::McStudy(a) => mc_study(&ctx, a),
        Command::Dp(a) => dp(&ctx, a),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Simulate(_) => "simulate",
        Command::Fit(_) => "fit",
        Command::Renewal(_) => "renewal",
        Command::Solve(_) => "solve",
        Command::McStudy(_) => "mc-study",
        Command::Dp(_) => "dp",
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn kind_of(model: &ModelSpec) -> ModelKind {
    match model {
        ModelSpec::ErlangGamma { .. } => ModelKind::ErlangGamma,
        ModelSpec::ExpUniform { .. } => ModelKind::ExpUniform,
        ModelSpec::Gamma2Pareto { .. } => ModelKind::Gamma2Pareto,
        ModelSpec::DirichletProcess { .. } => ModelKind::Dp,
    }
}

/// The model from flags, falling back field by field on the config model
/// when it is of the same family.
fn resolve_model(args: &ModelArgs, config: Option<&ModelSpec>) -> CliResult<ModelSpec> {
    let kind = args
        .model
        .or_else(|| config.map(kind_of))
        .ok_or_else(|| usage("no model given (use --model or a [model] table in the config)"))?;
    let base = config.filter(|c| kind_of(c) == kind);
    let need = |flag: Option<f64>, from_config: Option<f64>, name: &str| {
        flag.or(from_config).ok_or_else(|| usage(format!("--{name} is required for this model")))
    };
    let model = match kind {
        ModelKind::ErlangGamma => {
            let (m0, a0) = match base {
                Some(ModelSpec::ErlangGamma { m, alpha }) => (Some(*m), Some(*alpha)),
                _ => (None, None),
            };
            let m = args.m.or(m0).ok_or_else(|| usage("--m is required for this model"))?;
            ModelSpec::erlang_gamma(m, need(args.alpha, a0, "alpha")?)?
        }
        ModelKind::ExpUniform => {
            let l0 = match base {
                Some(ModelSpec::ExpUniform { lambda }) => Some(*lambda),
                _ => None,
            };
            ModelSpec::exp_uniform(need(args.lambda, l0, "lambda")?)?
        }
        ModelKind::Gamma2Pareto => {
            let (k0, a0) = match base {
                Some(ModelSpec::Gamma2Pareto { k, alpha }) => (Some(*k), Some(*alpha)),
                _ => (None, None),
            };
            ModelSpec::gamma2_pareto(need(args.k, k0, "k")?, need(args.alpha, a0, "alpha")?)?
        }
        ModelKind::Dp => {
            let (a0, b0) = match base {
                Some(ModelSpec::DirichletProcess { alpha, base }) => (Some(*alpha), Some(base.clone())),
                _ => (None, None),
            };
            let alpha = need(args.alpha, a0, "alpha")?;
            let base = match (args.rate, b0) {
                (Some(r), _) => BaseDistribution::exponential(r)?,
                (None, Some(b)) => b,
                (None, None) => BaseDistribution::exponential(1.0)?,
            };
            ModelSpec::dirichlet_process(alpha, base)?
        }
    };
    Ok(model)
}

fn resolve_grid(flag: Option<GridSpec>, ctx: &Context) -> CliResult<Option<Vec<f64>>> {
    flag.or(ctx.config.grid).map(|g| g.points()).transpose()
}

fn require_grid(flag: Option<GridSpec>, ctx: &Context) -> CliResult<Vec<f64>> {
    resolve_grid(flag, ctx)?.ok_or_else(|| usage("no grid given (use --grid start:stop:step or a [grid] table)"))
}

fn resolve_lengths(flag: &Option<Vec<usize>>, ctx: &Context) -> CliResult<Vec<usize>> {
    let lengths = flag
        .clone()
        .or_else(|| ctx.config.lengths.clone())
        .ok_or_else(|| usage("no sequence lengths given (use --lengths)"))?;
    if lengths.is_empty() || lengths.contains(&0) {
        return Err(usage("sequence lengths must be positive"));
    }
    Ok(lengths)
}

fn output<'a>(flag: &'a Option<PathBuf>, ctx: &'a Context) -> Option<&'a Path> {
    flag.as_deref().or(ctx.config.output.as_deref())
}

fn m_range(lo: Option<u32>, hi: Option<u32>, ctx: &Context) -> (u32, u32) {
    let [c_lo, c_hi] = ctx.config.m_range.unwrap_or([*DEFAULT_M_RANGE.start(), *DEFAULT_M_RANGE.end()]);
    (lo.unwrap_or(c_lo), hi.unwrap_or(c_hi))
}

fn simulate(ctx: &Context, a: &SimulateArgs) -> CliResult<()> {
    let model = resolve_model(&a.model, ctx.config.model.as_ref())?;
    let lengths = resolve_lengths(&a.lengths, ctx)?;
    let data = simulate_sequence_set(&model, &lengths, StreamSeed::new(ctx.seed))?;
    write_sequences(output(&a.out, ctx), &data)
}

#[derive(Serialize)]
struct FitSummary<'a> {
    m_hat: u32,
    alpha_hat: f64,
    corr_hat: f64,
    loglik: f64,
    profile: &'a [mixren::inference::ProfilePoint],
    iid_m: u32,
    iid_lambda: f64,
}

fn fit(ctx: &Context, a: &FitArgs) -> CliResult<()> {
    let input = a
        .input
        .as_deref()
        .or(ctx.config.input.as_deref())
        .ok_or_else(|| usage("no input file given (use --input)"))?;
    let data = read_sequences(input)?;
    let (lo, hi) = m_range(a.m_min, a.m_max, ctx);
    let fit = fit_mle(&data, lo..=hi)?;
    let shape = if a.iid_profile { IidShape::Profile { lo, hi } } else { IidShape::Fixed(fit.m_hat) };
    let iid = fit_iid(&data, &shape)?;
    let summary = FitSummary {
        m_hat: fit.m_hat,
        alpha_hat: fit.alpha_hat,
        corr_hat: fit.corr_hat,
        loglik: fit.loglik,
        profile: &fit.profile,
        iid_m: iid.m,
        iid_lambda: iid.lambda,
    };
    let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Data(e.to_string()))?;
    let mut out = crate::io::open_output(a.json.as_deref())?;
    writeln!(out, "{json}").map_err(|e| CliError::Data(format!("write failed: {e}")))?;
    out.flush().map_err(|e| CliError::Data(format!("write failed: {e}")))?;

    let curves = a.curves.as_deref().or(ctx.config.output.as_deref());
    if let Some(path) = curves {
        let grid = match resolve_grid(a.grid, ctx)? {
            Some(g) => g,
            None => {
                let horizon = data.sequences().iter().map(|s| s.total()).fold(0.0, f64::max);
                (0..=FIT_GRID_POINTS).map(|i| horizon * i as f64 / FIT_GRID_POINTS as f64).collect()
            }
        };
        let empirical = empirical_renewal_curve(&data, &grid)?;
        let rows = grid
            .iter()
            .zip(&empirical.values)
            .map(|(&t, &e)| Ok(vec![num(t), num(fitted_renewal_exchangeable(t, &fit)?), num(iid.renewal(t)?), num(e)]))
            .collect::<CliResult<Vec<_>>>()?;
        write_table(Some(path), &["t", "U_exch", "U_iid", "U_empirical"], rows)?;
    }
    Ok(())
}

fn renewal(ctx: &Context, a: &RenewalArgs) -> CliResult<()> {
    let model = resolve_model(&a.model, ctx.config.model.as_ref())?;
    let grid = require_grid(a.grid, ctx)?;
    let out = output(&a.out, ctx);
    match a.method {
        Method::Closed => {
            let rows = grid
                .iter()
                .map(|&t| Ok(vec![num(t), num(closed_form_renewal(&model, t)?)]))
                .collect::<CliResult<Vec<_>>>()?;
            write_table(out, &["t", "value"], rows)
        }
        Method::Series => {
            let rows = match &model {
                ModelSpec::ErlangGamma { m, alpha } => {
                    let tol = positive_tol(a.tol.or(ctx.config.tolerance.series), DEFAULT_SERIES_TOL)?;
                    grid.iter()
                        .map(|&t| {
                            let s = series_mixed_renewal(t, *m, *alpha, tol)?;
                            Ok(vec![num(t), num(s.value), num(s.error_estimate), s.terms.to_string()])
                        })
                        .collect::<CliResult<Vec<_>>>()?
                }
                ModelSpec::DirichletProcess { alpha, base } => {
                    let lambda = base
                        .exponential_rate()
                        .ok_or_else(|| usage("the DP series needs an exponential base; use --method mc"))?;
                    let tol = positive_tol(a.tol.or(ctx.config.tolerance.dp), DEFAULT_DP_TOL)?;
                    grid.iter()
                        .map(|&t| {
                            let s = dp_renewal_function_capped(t, *alpha, lambda, tol, mixren::dirichlet::DEFAULT_N_MAX)?;
                            Ok(vec![num(t), num(s.value), num(s.error_estimate), s.n_used.to_string()])
                        })
                        .collect::<CliResult<Vec<_>>>()?
                }
                other => return Err(usage(format!("no series method for {}", other.name()))),
            };
            write_table(out, &["t", "value", "error_estimate", "terms"], rows)
        }
        Method::Mc => {
            let r = a.replicates.or(ctx.config.replicates).unwrap_or(DEFAULT_MC_REPLICATES);
            let curve = mc_renewal_function(&model, &grid, &McConfig::new(r, ctx.seed))?;
            let se = curve.stderr.clone().unwrap_or_default();
            let rows = (0..grid.len()).map(|i| vec![num(grid[i]), num(curve.values[i]), num(se[i])]);
            write_table(out, &["t", "value", "stderr"], rows)
        }
    }
}

fn positive_tol(value: Option<f64>, default: f64) -> CliResult<f64> {
    let tol = value.unwrap_or(default);
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(usage(format!("tolerance must be positive, got {tol}")));
    }
    Ok(tol)
}

fn solve(ctx: &Context, a: &SolveArgs) -> CliResult<()> {
    let beta = a.beta.ok_or_else(|| usage("--beta is required"))?;
    let drift = DriftFunction::exp_saturating(beta)?;
    let mixture = match a.mixture {
        MixtureKind::Discrete => {
            let w = a.weights.clone().ok_or_else(|| usage("--weights is required for a discrete mixture"))?;
            let r = a.rates.clone().ok_or_else(|| usage("--rates is required for a discrete mixture"))?;
            MixtureOfExponentialsModel::discrete(w, r)?
        }
        MixtureKind::Gamma => {
            let s = a.shape.ok_or_else(|| usage("--shape is required for a gamma mixture"))?;
            let r = a.rate.ok_or_else(|| usage("--rate is required for a gamma mixture"))?;
            MixtureOfExponentialsModel::gamma(s, r)?
        }
    };
    let grid = require_grid(a.grid, ctx)?;
    let ex = solve_numeric(&drift, &mixture.kernel()?, &grid, a.quad_nodes)?;
    let out = output(&a.out, ctx);
    if a.no_comparator {
        let rows = grid.iter().zip(&ex.values).map(|(t, v)| vec![num(*t), num(*v)]);
        return write_table(out, &["t", "A"], rows);
    }
    let iid = solve_iid_comparator(&drift, |t| mixture.marginal_cdf(t), &grid)?;
    let rows = (0..grid.len()).map(|i| vec![num(grid[i]), num(ex.values[i]), num(iid.values[i])]);
    write_table(out, &["t", "A", "A_iid"], rows)
}

fn mc_study(ctx: &Context, a: &McStudyArgs) -> CliResult<()> {
    let model = resolve_model(&a.model, ctx.config.model.as_ref())?;
    if !matches!(model, ModelSpec::ErlangGamma { .. }) {
        return Err(usage("mc-study simulates from an erlang-gamma model"));
    }
    let lengths = resolve_lengths(&a.lengths, ctx)?;
    let grid = require_grid(a.grid, ctx)?;
    let replicates = a.replicates.or(ctx.config.replicates).unwrap_or(DEFAULT_STUDY_REPLICATES);
    if replicates < 100 {
        eprintln!("mixren: warning: {replicates} replicates; percentile bands need at least 100");
    }
    let (lo, hi) = m_range(a.m_min, a.m_max, ctx);
    let cfg = StudyConfig {
        lengths,
        replicates,
        grid: grid.clone(),
        seed: ctx.seed,
        m_range: (lo, hi),
        iid_shape: a.iid_profile.then_some(IidShape::Profile { lo, hi }),
    };
    let s = monte_carlo_study(&model, &cfg)?;
    if !s.failures.is_empty() {
        eprintln!("mixren: {} replicate fits failed", s.failures.len());
    }
    let rows = (0..grid.len()).map(|i| {
        vec![
            num(grid[i]),
            num(s.true_curve[i]),
            num(s.exchangeable.median[i]),
            num(s.exchangeable.lo[i]),
            num(s.exchangeable.hi[i]),
            num(s.iid.median[i]),
            num(s.iid.lo[i]),
            num(s.iid.hi[i]),
        ]
    });
    write_table(
        output(&a.out, ctx),
        &["t", "true_U", "exch_median", "exch_lo", "exch_hi", "iid_median", "iid_lo", "iid_hi"],
        rows,
    )
}

fn dp(ctx: &Context, a: &DpArgs) -> CliResult<()> {
    let from_config = match &ctx.config.model {
        Some(ModelSpec::DirichletProcess { alpha, base }) => (Some(*alpha), base.exponential_rate()),
        _ => (None, None),
    };
    let alpha = a.alpha.or(from_config.0).ok_or_else(|| usage("--alpha is required"))?;
    let lambda = a.rate.or(from_config.1).unwrap_or(1.0);
    let out = output(&a.out, ctx);
    match a.table {
        DpTable::Weights => {
            let n = a.n.ok_or_else(|| usage("--n is required for the weights table"))?;
            if n == 0 {
                return Err(usage("--n must be >= 1"));
            }
            let rows = enumerate_partitions_capped(n, a.n_max)?
                .into_iter()
                .map(|v| {
                    let label = v.counts().iter().map(u32::to_string).collect::<Vec<_>>().join(" ");
                    Ok(vec![label, v.blocks().to_string(), num(ewens_probability(&v, alpha)?)])
                })
                .collect::<CliResult<Vec<_>>>()?;
            write_table(out, &["v", "blocks", "probability"], rows)
        }
        DpTable::Sn => {
            let n = a.n.ok_or_else(|| usage("--n is required for the sn table"))?;
            let grid = require_grid(a.grid, ctx)?;
            let rows = grid
                .iter()
                .map(|&t| {
                    let p = sn_cdf_detailed(t, n, alpha, lambda, a.n_max)?;
                    Ok(vec![num(t), num(p.value), num(p.rounding_bound)])
                })
                .collect::<CliResult<Vec<_>>>()?;
            write_table(out, &["t", "probability", "rounding_bound"], rows)
        }
        DpTable::Renewal => {
            let tol = positive_tol(a.tol.or(ctx.config.tolerance.dp), DEFAULT_DP_TOL)?;
            let grid = require_grid(a.grid, ctx)?;
            let rows = grid
                .iter()
                .map(|&t| {
                    let r = dp_renewal_function_capped(t, alpha, lambda, tol, a.n_max)?;
                    Ok(vec![num(t), num(r.value), num(r.error_estimate), r.n_used.to_string()])
                })
                .collect::<CliResult<Vec<_>>>()?;
            write_table(out, &["t", "value", "error_estimate", "terms"], rows)
        }
    }
}
