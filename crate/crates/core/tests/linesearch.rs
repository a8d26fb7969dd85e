use lkqn::linalg::dot;
use lkqn::linesearch::{exact_quadratic_step, strong_wolfe, LineSearchParams, LineSearchStatus};
use lkqn::problems::{make_named_problem, make_quadratic, Problem, PROBLEM_NAMES};
use lkqn::solvers::{run, LineSearchKind, Method, SolverConfig};
use proptest::prelude::*;

fn wolfe_holds(p: &dyn Problem, x: &[f64], d: &[f64], x_new: &[f64], params: &LineSearchParams) -> (bool, bool) {
    let (f0, g0) = p.eval(x);
    let (f1, g1) = p.eval(x_new);
    let dg0 = dot(&g0, d);
    let lambda = x_new.iter().zip(x).zip(d).map(|((a, b), c)| (a - b) * c).sum::<f64>() / dot(d, d);
    let armijo = f1 <= f0 + params.ftol * lambda * dg0 + 1e-12 * f0.abs();
    let curvature = dot(&g1, d).abs() <= params.gtol * dg0.abs() * (1.0 + 1e-9);
    (armijo, curvature)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn converged_search_meets_strong_wolfe(
        name in prop::sample::select(PROBLEM_NAMES.to_vec()),
        shift in prop::collection::vec(-0.5..0.5f64, 10),
        gtol in prop::sample::select(vec![0.1, 0.5, 0.9]),
    ) {
        let p = make_named_problem(name, 10).unwrap();
        let x: Vec<f64> = p.x0().iter().zip(&shift).map(|(a, b)| a + b).collect();
        let (f0, g0) = p.eval(&x);
        let d: Vec<f64> = g0.iter().map(|v| -v).collect();
        prop_assume!(dot(&d, &d) > 1e-20);
        let params = LineSearchParams { gtol, ..Default::default() };
        let r = strong_wolfe(|z: &[f64]| p.eval(z), &x, &d, f0, &g0, &params).unwrap();
        if r.status == LineSearchStatus::Converged {
            let (armijo, curvature) = wolfe_holds(&p, &x, &d, &r.x, &params);
            prop_assert!(armijo && curvature);
        }
        prop_assert!(r.f <= f0);
    }
}

#[test]
fn every_solver_step_meets_the_wolfe_conditions() {
    let params = LineSearchParams::default();
    let mut wolfe_steps = 0;
    for name in PROBLEM_NAMES {
        let p = make_named_problem(name, 20).unwrap();
        for method in [Method::Lkqn, Method::LkqnQt, Method::BfgsDense, Method::Lbfgs] {
            let cfg = SolverConfig { record_trajectory: true, max_iters: 200, ..SolverConfig::for_method(method) };
            let r = run(&p, &p.x0(), &cfg).unwrap();
            let t = r.trajectory.unwrap();
            for (k, it) in r.iterations.iter().enumerate() {
                let (armijo, curvature) = wolfe_holds(&p, &t.xs[k], &t.ds[k], &t.xs[k + 1], &params);
                assert!(armijo, "{name} {method:?} step {k}: Armijo fails");
                if it.ls_status == Some(LineSearchStatus::Converged) {
                    assert!(curvature, "{name} {method:?} step {k}: curvature fails");
                    assert!(it.ys > 0.0);
                    wolfe_steps += 1;
                }
            }
        }
    }
    assert!(wolfe_steps > 100);
}

#[test]
fn exact_search_makes_gradient_orthogonal() {
    let q = make_quadratic(40, 1e3, 5).unwrap();
    let cfg = SolverConfig {
        line_search: LineSearchKind::Exact,
        record_trajectory: true,
        max_iters: 30,
        ..SolverConfig::for_method(Method::LkqnQt)
    };
    let r = run(&q, &q.x0(), &cfg).unwrap();
    let t = r.trajectory.unwrap();
    for k in 0..r.iterations.len() {
        let g1 = q.eval(&t.xs[k + 1]).1;
        let d = &t.ds[k];
        let g0 = q.eval(&t.xs[k]).1;
        assert!(dot(&g1, d).abs() <= 1e-10 * dot(&g0, d).abs());
    }
    let lam = exact_quadratic_step(|x| q.apply(x), &q.eval(&q.x0()).1, &t.ds[0]).unwrap();
    assert!(lam > 0.0);
}
