use std::collections::BTreeMap;

use mixren::dirichlet::*;
use mixren::distributions::{BaseDistribution, ErlangParams};
use mixren::exchangeable::ModelSpec;
use mixren::quadrature::adaptive;
use mixren::rng::StreamSeed;
use proptest::prelude::*;
use rayon::prelude::*;

const ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 10.0];

/// Occupancy law of the urn after `n` draws, by walking every seating path.
fn urn_paths(n: usize, alpha: f64) -> BTreeMap<Vec<u32>, f64> {
    fn walk(tables: &mut Vec<u32>, i: usize, n: usize, alpha: f64, p: f64, out: &mut BTreeMap<Vec<u32>, f64>) {
        if i == n {
            let mut v = vec![0u32; n];
            for &c in tables.iter() {
                v[c as usize - 1] += 1;
            }
            *out.entry(v).or_insert(0.0) += p;
            return;
        }
        let denom = alpha + i as f64;
        for k in 0..tables.len() {
            let w = tables[k] as f64 / denom;
            tables[k] += 1;
            walk(tables, i + 1, n, alpha, p * w, out);
            tables[k] -= 1;
        }
        tables.push(1);
        walk(tables, i + 1, n, alpha, p * alpha / denom, out);
        tables.pop();
    }
    let mut out = BTreeMap::new();
    walk(&mut Vec::new(), 0, n, alpha, 1.0, &mut out);
    out
}

/// CDF of a sum of independent exponentials by uniformization of the phase chain.
fn hypoexponential_cdf(rates: &[f64], t: f64) -> f64 {
    let k = rates.len();
    let big = rates.iter().cloned().fold(0.0, f64::max);
    let mut pi = vec![0.0; k + 1];
    pi[0] = 1.0;
    let mut poisson = (-big * t).exp();
    let mut survive = 0.0;
    let mut mass = 0.0;
    for step in 0.. {
        survive += poisson * pi[..k].iter().sum::<f64>();
        mass += poisson;
        if 1.0 - mass < 1e-15 && step as f64 > big * t {
            break;
        }
        let mut next = vec![0.0; k + 1];
        for i in 0..k {
            let jump = rates[i] / big;
            next[i] += pi[i] * (1.0 - jump);
            next[i + 1] += pi[i] * jump;
        }
        next[k] += pi[k];
        pi = next;
        poisson *= big * t / (step + 1) as f64;
    }
    1.0 - survive
}

fn phase_rates(v: &PartitionVector, lambda: f64) -> Vec<f64> {
    v.occupied().flat_map(|(j, c)| std::iter::repeat_n(lambda / j as f64, c as usize)).collect()
}

#[test]
fn partition_counts() {
    let counts: Vec<usize> = (1..=12).map(|n| enumerate_partitions(n).unwrap().len()).collect();
    assert_eq!(counts, vec![1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77]);
    let p = enumerate_partitions(7).unwrap();
    assert!(p.windows(2).all(|w| w[0] < w[1]));
    assert!(p.iter().all(|v| v.n() == 7));
    assert!(enumerate_partitions(DEFAULT_N_MAX + 1).is_err());
}

#[test]
fn ewens_weights_sum_to_one() {
    for n in 1..=12 {
        for &a in &ALPHAS {
            let s: f64 = enumerate_partitions(n).unwrap().iter().map(|v| ewens_probability(v, a).unwrap()).sum();
            assert!((s - 1.0).abs() < 1e-12, "n={n} alpha={a}: {s}");
        }
    }
}

#[test]
fn ewens_matches_urn_paths() {
    for n in 1..=8 {
        for &a in &ALPHAS {
            let oracle = urn_paths(n, a);
            let parts = enumerate_partitions(n).unwrap();
            assert_eq!(oracle.len(), parts.len());
            for v in &parts {
                let want = oracle[v.counts()];
                let got = ewens_probability(v, a).unwrap();
                assert!((got - want).abs() < 1e-12, "n={n} alpha={a} v={:?}", v.counts());
            }
        }
    }
}

#[test]
fn small_ewens_examples() {
    let two = enumerate_partitions(2).unwrap();
    for v in &two {
        assert!((ewens_probability(v, 1.0).unwrap() - 0.5).abs() < 1e-14);
    }
    assert!((pochhammer(2.5, 3) - 39.375).abs() < 1e-12);
    assert_eq!(pochhammer(3.0, 0), 1.0);
    assert!((pochhammer(1.0, 6) - 720.0).abs() < 1e-9);
}

#[test]
fn partial_fractions_match_phase_type_oracle() {
    let lambda = 1.3;
    for n in 1..=6 {
        for v in enumerate_partitions(n).unwrap() {
            let mix = partial_fraction_mixture(&v, lambda).unwrap();
            let rates = phase_rates(&v, lambda);
            for &t in &[0.1, 0.7, 2.0, 5.0, 12.0] {
                let got = mix.cdf(t).unwrap();
                let want = hypoexponential_cdf(&rates, t);
                assert!((got - want).abs() < 1e-6, "v={:?} t={t}: {got} vs {want}", v.counts());
            }
        }
    }
}

#[test]
fn one_single_one_pair_matches_convolution_quadrature() {
    let lambda = 0.8;
    let v = PartitionVector::new(vec![1, 1, 0]).unwrap();
    let mix = partial_fraction_mixture(&v, lambda).unwrap();
    let e1 = ErlangParams::exponential(lambda).unwrap();
    let e2 = ErlangParams::exponential(lambda / 2.0).unwrap();
    for &t in &[0.2, 1.0, 3.0, 8.0] {
        let outer = adaptive(
            |x| {
                let inner = adaptive(|y| e2.pdf(y).unwrap(), 0.0, t - x, 1e-13, 1e-12).value;
                e1.pdf(x).unwrap() * inner
            },
            0.0,
            t,
            1e-12,
            1e-11,
        );
        assert!((mix.cdf(t).unwrap() - outer.value).abs() < 1e-8, "t={t}");
    }
}

#[test]
fn mixtures_are_normalized() {
    let lambda = 2.0;
    for n in 1..=12 {
        for v in enumerate_partitions(n).unwrap() {
            let mix = partial_fraction_mixture(&v, lambda).unwrap();
            assert!(mix.cdf(0.0).unwrap().abs() < 1e-12);
            assert!((mix.cdf(1e6 / lambda).unwrap() - 1.0).abs() <= 1e-6, "v={:?}", v.counts());
        }
    }
}

#[test]
fn all_distinct_partition_is_plain_erlang() {
    for n in 1..=10 {
        let mut counts = vec![0u32; n];
        counts[0] = n as u32;
        let mix = partial_fraction_mixture(&PartitionVector::new(counts).unwrap(), 1.7).unwrap();
        let erl = ErlangParams::new(n as u32, 1.7).unwrap();
        for &t in &[0.5, 3.0, 9.0] {
            assert!((mix.cdf(t).unwrap() - erl.cdf(t).unwrap()).abs() < 1e-13);
        }
    }
}

#[test]
fn sn_cdf_limits() {
    for &t in &[0.3, 1.0, 4.0] {
        assert!((sn_cdf(t, 1, 3.0, 1.5).unwrap() - (1.0 - (-1.5 * t).exp())).abs() < 1e-14);
        for n in 1..=8 {
            let erl = ErlangParams::new(n as u32, 1.0).unwrap().cdf(t).unwrap();
            assert!((sn_cdf(t, n, 1e6, 1.0).unwrap() - erl).abs() < 1e-3);
        }
    }
}

#[test]
fn sn_cdf_against_urn_monte_carlo() {
    let model = ModelSpec::dirichlet_exponential(2.0, 1.0).unwrap();
    let seed = StreamSeed::new(55);
    let reps = 1_000_000u64;
    let sums: Vec<f64> = (0..reps)
        .into_par_iter()
        .map(|r| model.arrivals(seed.rng(r)).take(5).sum())
        .collect();
    for &t in &[1.0, 3.0, 5.0, 8.0, 15.0] {
        let p_hat = sums.iter().filter(|&&s| s <= t).count() as f64 / reps as f64;
        let se = (p_hat * (1.0 - p_hat) / reps as f64).sqrt();
        let exact = sn_cdf(t, 5, 2.0, 1.0).unwrap();
        assert!((p_hat - exact).abs() <= 3.0 * se.max(1e-6), "t={t}: {p_hat} vs {exact}");
    }
}

#[test]
fn general_base_uses_flagged_monte_carlo() {
    let exp = BaseDistribution::exponential(1.0).unwrap();
    let closed = sn_cdf_base(2.0, 4, 1.5, &exp, 0, StreamSeed::new(1)).unwrap();
    assert!(matches!(closed.method, SnMethod::PartialFractions { .. }));
    let lomax = BaseDistribution::Lomax(mixren::distributions::LomaxParams::new(1.0, 3.0).unwrap());
    let mc = sn_cdf_base(2.0, 4, 1.5, &lomax, 20_000, StreamSeed::new(1)).unwrap();
    match mc.method {
        SnMethod::MonteCarlo { stderr, replicates } => {
            assert_eq!(replicates, 20_000);
            assert!(stderr > 0.0 && mc.value > 0.0 && mc.value < 1.0);
        }
        other => panic!("expected Monte Carlo, got {other:?}"),
    }
}

#[test]
fn dp_renewal_examples() {
    assert_eq!(dp_renewal_function(0.0, 2.0, 1.0, 1e-2).unwrap().value, 0.0);
    for &t in &[0.5, 1.0, 2.0, 3.0] {
        let r = dp_renewal_function(t, 1e6, 1.0, 1e-6).unwrap();
        assert!((r.value - t).abs() < 1e-2, "t={t}: {}", r.value);
    }
    assert!(dp_renewal_function_capped(3.0, 2.0, 1.0, 1e-8, 5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn sn_cdf_is_monotone(t in 0.01f64..6.0, dt in 0.0f64..3.0, n in 1usize..10, alpha in 0.2f64..8.0) {
        let a = sn_cdf(t, n, alpha, 1.0).unwrap();
        let b = sn_cdf(t + dt, n, alpha, 1.0).unwrap();
        let c = sn_cdf(t, n + 1, alpha, 1.0).unwrap();
        prop_assert!((0.0..=1.0 + 1e-12).contains(&a));
        prop_assert!(b >= a - 1e-12);
        prop_assert!(c <= a + 1e-12);
    }

    #[test]
    fn dp_renewal_is_nondecreasing(t in 0.0f64..1.5, dt in 0.0f64..0.5, alpha in 2.0f64..6.0) {
        let a = dp_renewal_function(t, alpha, 1.0, 1e-2).unwrap().value;
        let b = dp_renewal_function(t + dt, alpha, 1.0, 1e-2).unwrap().value;
        prop_assert!(b >= a - 1e-12);
    }
}
