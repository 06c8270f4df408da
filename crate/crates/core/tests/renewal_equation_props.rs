use mixren::latent::{ConditionalErlang, LatentLaw};
use mixren::renewal::uniform_grid;
use mixren::renewal_equation::*;

fn case_i() -> (DriftFunction, MixtureOfExponentialsModel) {
    (
        DriftFunction::exp_saturating(0.9).unwrap(),
        MixtureOfExponentialsModel::discrete(vec![0.5, 0.5], vec![0.1, 10.0]).unwrap(),
    )
}

fn case_ii() -> (DriftFunction, MixtureOfExponentialsModel) {
    (DriftFunction::exp_saturating(4.0).unwrap(), MixtureOfExponentialsModel::gamma(2.0, 3.0).unwrap())
}

#[test]
fn numeric_matches_closed_forms() {
    let g = uniform_grid(0.0, 10.0, 1e-3).unwrap();
    let (a, m) = case_i();
    let num = solve_numeric(&a, &m.kernel().unwrap(), &g, 64).unwrap();
    let err = g
        .iter()
        .zip(&num.values)
        .map(|(&t, v)| (v - solve_closed_discrete(t, 0.9, &[0.5, 0.5], &[0.1, 10.0]).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "case (i) error {err}");
    let (a, m) = case_ii();
    let num = solve_numeric(&a, &m.kernel().unwrap(), &g, 64).unwrap();
    let err = g
        .iter()
        .zip(&num.values)
        .map(|(&t, v)| (v - solve_closed_continuous(t, 2.0, 4.0, 3.0).unwrap()).abs())
        .fold(0.0, f64::max);
    assert!(err < 1e-5, "case (ii) error {err}");
}

#[test]
fn second_order_convergence() {
    for (a, m) in [case_i(), case_ii()] {
        let p = richardson_order(&a, &m.kernel().unwrap(), 10.0, 0.04).unwrap();
        assert!(p >= 1.9, "order {p}");
    }
    let erl = ConditionalErlang::new(3, LatentLaw::gamma(2.5, 1.0).unwrap()).unwrap();
    let p = richardson_order(&DriftFunction::exp_saturating(1.0).unwrap(), &erl, 5.0, 0.05).unwrap();
    assert!(p >= 1.9, "Erlang kernel order {p}");
}

const SOLVER_TOL: f64 = 1e-3;

#[test]
fn fixed_point_residual_is_small() {
    for (a, m) in [case_i(), case_ii()] {
        let k = m.kernel().unwrap();
        let residual = |h: f64| {
            let g = uniform_grid(0.0, 5.0, h).unwrap();
            let sol = solve_numeric(&a, &k, &g, 32).unwrap();
            fixed_point_residual(&sol, &a, &k, 32).unwrap()
        };
        let (r1, r2) = (residual(0.01), residual(0.005));
        assert!(r1 <= 5.0 * SOLVER_TOL, "residual {r1}");
        // consistent discretisation: the residual shrinks like h^2
        assert!(r1 / r2 > 3.5, "residual ratio {}", r1 / r2);
    }
}

#[test]
fn solutions_are_nondecreasing() {
    let g = uniform_grid(0.0, 10.0, 0.01).unwrap();
    for (a, m) in [case_i(), case_ii()] {
        assert!(solve_numeric(&a, &m.kernel().unwrap(), &g, 64).unwrap().is_nondecreasing());
        assert!(solve_iid_comparator(&a, |t| m.marginal_cdf(t), &g).unwrap().is_nondecreasing());
    }
}

#[test]
fn exchangeable_and_iid_solutions_differ() {
    let g = uniform_grid(0.0, 10.0, 0.01).unwrap();
    let (a, m) = case_i();
    let ex = solve_numeric(&a, &m.kernel().unwrap(), &g, 64).unwrap();
    let iid = solve_iid_comparator(&a, |t| m.marginal_cdf(t), &g).unwrap();
    let gap = ex.values.iter().zip(&iid.values).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(gap > 10.0 * 1e-3, "gap {gap}");
}
