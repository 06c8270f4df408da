use mixren::distributions::{exp_uniform_marginal_pdf, BaseDistribution};
use mixren::exchangeable::ModelSpec;
use mixren::quadrature::adaptive;
use mixren::rng::StreamSeed;
use rayon::prelude::*;

const Z_99: f64 = 2.5758;

fn first_pairs(model: &ModelSpec, reps: u64, seed: u64) -> Vec<(f64, f64)> {
    let seed = StreamSeed::new(seed);
    (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut s = model.arrivals(seed.rng(r));
            (s.next().unwrap(), s.next().unwrap())
        })
        .collect()
}

fn correlation(pairs: &[(f64, f64)]) -> f64 {
    let n = pairs.len() as f64;
    let (mx, my) = pairs.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (a + x / n, b + y / n));
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pairs {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Correlation estimate and its batch-means standard error.
fn batched_correlation(pairs: &[(f64, f64)], batches: usize) -> (f64, f64) {
    let size = pairs.len() / batches;
    let cs: Vec<f64> = pairs.chunks(size).take(batches).map(correlation).collect();
    let mean = cs.iter().sum::<f64>() / batches as f64;
    let var = cs.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / (batches - 1) as f64;
    (mean, (var / batches as f64).sqrt())
}

/// McNemar-style z for the discordant counts `b` and `c`.
fn discordant_z(b: u64, c: u64) -> f64 {
    if b + c == 0 {
        return 0.0;
    }
    (b as f64 - c as f64) / ((b + c) as f64).sqrt()
}

fn check_exchangeable_pairs(model: &ModelSpec, seed: u64) {
    let pairs = first_pairs(model, 100_000, seed);
    let below = pairs.iter().filter(|(a, b)| a < b).count() as u64;
    let above = pairs.iter().filter(|(a, b)| a > b).count() as u64;
    assert!(discordant_z(below, above).abs() < Z_99, "{}: sign test {below} vs {above}", model.name());

    let mut xs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    xs.sort_by(f64::total_cmp);
    let q = |p: f64| xs[(p * (xs.len() - 1) as f64) as usize];
    for &(pa, pb) in &[(0.25, 0.5), (0.5, 0.75), (0.25, 0.9), (0.75, 0.25)] {
        let (a, b) = (q(pa), q(pb));
        let fwd = pairs.iter().filter(|&&(x, y)| x <= a && y > b).count() as u64;
        let rev = pairs.iter().filter(|&&(x, y)| y <= a && x > b).count() as u64;
        assert!(discordant_z(fwd, rev).abs() < Z_99, "{}: quadrant ({a},{b}) {fwd} vs {rev}", model.name());
    }
}

#[test]
fn first_two_times_are_exchangeable() {
    check_exchangeable_pairs(&ModelSpec::erlang_gamma(3, 2.5).unwrap(), 1);
    check_exchangeable_pairs(&ModelSpec::exp_uniform(1.0).unwrap(), 2);
    check_exchangeable_pairs(&ModelSpec::gamma2_pareto(1.0, 1.5).unwrap(), 3);
    check_exchangeable_pairs(&ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap(), 4);
}

#[test]
fn later_pairs_are_exchangeable_under_the_urn() {
    // (T_3, T_5) against (T_5, T_3)
    let model = ModelSpec::dirichlet_exponential(1.0, 1.0).unwrap();
    let seed = StreamSeed::new(9);
    let pairs: Vec<(f64, f64)> = (0..100_000u64)
        .into_par_iter()
        .map(|r| {
            let v: Vec<f64> = model.arrivals(seed.rng(r)).take(5).collect();
            (v[2], v[4])
        })
        .collect();
    let below = pairs.iter().filter(|(a, b)| a < b).count() as u64;
    let above = pairs.iter().filter(|(a, b)| a > b).count() as u64;
    assert!(discordant_z(below, above).abs() < Z_99);
    let ties = pairs.iter().filter(|(a, b)| a == b).count() as f64 / pairs.len() as f64;
    // P(T_3 = T_5) = 1/(alpha + 1) under the urn
    assert!((ties - 0.5).abs() < 0.01, "{ties}");
}

#[test]
fn empirical_correlation_converges_to_theory() {
    let models = [
        ModelSpec::erlang_gamma(2, 6.0).unwrap(),
        ModelSpec::erlang_gamma(1, 30.0).unwrap(),
        ModelSpec::gamma2_pareto(1.0, 2.0).unwrap(),
        ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap(),
        ModelSpec::dirichlet_exponential(0.5, 3.0).unwrap(),
    ];
    for (i, model) in models.iter().enumerate() {
        let pairs = first_pairs(model, 100_000, 100 + i as u64);
        let (est, se) = batched_correlation(&pairs, 50);
        let want = model.theoretical_correlation().unwrap();
        assert!((est - want).abs() <= 3.0 * se, "{}: {est} vs {want} (se {se})", model.name());
    }
}

#[test]
fn lag_correlation_for_example_two() {
    let model = ModelSpec::erlang_gamma(1, 30.0).unwrap();
    let pairs = first_pairs(&model, 10_000, 30);
    let est = correlation(&pairs);
    assert!((est - 0.033).abs() < 0.03, "{est}");
}

#[test]
fn distinct_values_match_ewens_expectation() {
    for &(alpha, n) in &[(0.5, 10usize), (2.0, 20), (10.0, 30)] {
        let model = ModelSpec::dirichlet_exponential(alpha, 1.0).unwrap();
        let seed = StreamSeed::new(77);
        let reps = 20_000u64;
        let counts: Vec<f64> = (0..reps)
            .into_par_iter()
            .map(|r| {
                let mut v: Vec<f64> = model.arrivals(seed.rng(r)).take(n).collect();
                v.sort_by(f64::total_cmp);
                v.dedup();
                v.len() as f64
            })
            .collect();
        let mean = counts.iter().sum::<f64>() / reps as f64;
        let var = counts.iter().map(|k| (k - mean).powi(2)).sum::<f64>() / (reps - 1) as f64;
        let se = (var / reps as f64).sqrt();
        let want: f64 = (1..=n).map(|i| alpha / (alpha + i as f64 - 1.0)).sum();
        assert!((mean - want).abs() <= 3.0 * se, "alpha={alpha}: {mean} vs {want} (se {se})");
    }
}

#[test]
fn huge_concentration_gives_no_repeats() {
    let model = ModelSpec::dirichlet_exponential(1e6, 1.0).unwrap();
    let s = model.sample_sequence(100, StreamSeed::new(5)).unwrap();
    let mut v = s.sequence.into_inner();
    v.sort_by(f64::total_cmp);
    v.dedup();
    assert!(v.len() >= 99);
}

#[test]
fn marginal_moments_by_monte_carlo() {
    let model = ModelSpec::erlang_gamma(1, 3.0).unwrap();
    let (mean, var) = model.marginal_moments().unwrap();
    assert_eq!((mean, var), (0.5, 0.75));
    // The latent rate has finite moments of every order; check the mean of the time.
    let seed = StreamSeed::new(12);
    let xs: Vec<f64> = (0..1_000_000u64)
        .into_par_iter()
        .map(|r| model.arrivals(seed.rng(r)).next().unwrap())
        .collect();
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    assert!((m - mean).abs() <= 3.0 * (var / n).sqrt(), "{m}");
}

#[test]
fn marginal_densities_normalize() {
    for &(m, alpha) in &[(1u32, 2.0), (4, 3.5)] {
        let total = adaptive(|t| mixren::distributions::erlang_gamma_marginal_pdf(t, m, alpha).unwrap(), 0.0, 1e4, 1e-12, 1e-10);
        assert!((total.value - 1.0).abs() < 1e-3);
    }
    // The uniform-mixed exponential has an infinite mean: its truncated mass still goes to 1.
    let mass = adaptive(|t| exp_uniform_marginal_pdf(t, 2.0).unwrap(), 0.0, 1e6, 1e-12, 1e-12);
    assert!((mass.value - 1.0).abs() < 1e-5);
}

#[test]
fn dirichlet_base_with_undefined_variance_is_signalled() {
    let model = ModelSpec::dirichlet_process(1.0, BaseDistribution::exponential(1.0).unwrap()).unwrap();
    assert!(model.theoretical_correlation().is_ok());
    assert!(ModelSpec::exp_uniform(1.0).unwrap().theoretical_correlation().is_err());
    assert!(ModelSpec::erlang_gamma(1, 2.0).unwrap().theoretical_correlation().is_err());
}
