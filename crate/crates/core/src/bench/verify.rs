//! Self-check suite behind `lkqn-bench verify`: every structured fast path
//! against its dense oracle on seeded random instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::profile::{check_curve, performance_profile, Metric};
use super::BenchRecord;
use crate::algebra::{arnoldi2, build_algebra_eigvec, build_algebra_krylov2, build_algebra_qt, SpectralAlgebra};
use crate::linalg::{build_stack_mapping, HouseholderStack};
use crate::model::HessianModel;
use crate::oracle::{
    cg_reference, dense_from_model, dense_from_stack, dense_projection, fd_gradient_error,
    polynomial_preservation_check, DenseMatrix,
};
use crate::problems::{
    make_lowrank_problem, make_named_problem, make_quadratic, read_idx, write_idx, DataMatrix, IdxTensor, Problem,
    PROBLEM_NAMES,
};
use crate::solvers::{run, LineSearchKind, Method, RunStatus, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, worst: f64, tol: f64) -> Check {
    Check { name, passed: worst <= tol, detail: format!("worst {worst:.3e} (tol {tol:e})") }
}

fn rvec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Random pd model Φ(L, s, y, φ) on a random 1–3 reflector algebra.
fn random_model(rng: &mut ChaCha8Rng, n: usize, phi: f64) -> HessianModel {
    let refl = rng.gen_range(1..=3.min(n));
    let w: Vec<Vec<f64>> = (0..refl).map(|_| rvec(rng, n)).collect();
    let v: Vec<Vec<f64>> = w
        .iter()
        .map(|c| {
            let mut c = c.clone();
            c.reverse();
            c
        })
        .collect();
    let stack = build_stack_mapping(&w, &v).unwrap_or_else(|_| HouseholderStack::identity(n));
    let z: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..5.0)).collect();
    let base = SpectralAlgebra::new(stack, z).expect("positive eigenvalues");
    let s = rvec(rng, n);
    let mut y: Vec<f64> = s.iter().map(|v| v * rng.gen_range(0.5..3.0)).collect();
    for yi in y.iter_mut() {
        *yi += 0.1 * rng.gen_range(-1.0..1.0);
    }
    HessianModel::broyden_update(base.clone(), &s, &y, phi).unwrap_or_else(|_| HessianModel::from_algebra(base))
}

/// The algebra the adaptive methods would build for direction `s`.
fn adaptive_stack(rng: &mut ChaCha8Rng, m: &HessianModel, s: &[f64]) -> HouseholderStack {
    let kp = match arnoldi2(|x| m.matvec(x).expect("dim"), s, 1e-12) {
        Ok(kp) => kp,
        Err(_) => return build_algebra_eigvec(s, None).expect("nonzero s"),
    };
    if rng.gen_bool(0.5) {
        let mut g = rvec(rng, s.len());
        for v in [&kp.v1, &kp.v2] {
            for _ in 0..2 {
                let c: f64 = g.iter().zip(v.iter()).map(|(a, b)| a * b).sum();
                g.iter_mut().zip(v.iter()).for_each(|(a, b)| *a -= c * b);
            }
        }
        if let Ok(u) = build_algebra_qt(&kp, &g) {
            return u;
        }
    }
    build_algebra_krylov2(&kp).expect("Krylov stack")
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let d = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    d / b.iter().map(|x| x * x).sum::<f64>().sqrt().max(f64::MIN_POSITIVE)
}

fn stack_orthogonality(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for _ in 0..30 {
        let n = rng.gen_range(4..20);
        let m = random_model(rng, n, 0.0);
        let u = dense_from_stack(m.base().stack());
        worst = worst.max(u.transpose().matmul(&u).rel_diff(&DenseMatrix::identity(n)));
    }
    check("stack-orthogonality", worst, 1e-11)
}

fn projection_oracle(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for i in 0..100 {
        let n = [4, 8, 16, 50][i % 4];
        let m = random_model(rng, n, if i % 3 == 0 { 0.5 } else { 0.0 });
        let s = rvec(rng, n);
        let u = adaptive_stack(rng, &m, &s);
        let fast = m.project_onto(&u).expect("projection");
        let dense = dense_projection(&dense_from_model(&m).expect("dense"), &dense_from_stack(&u)).expect("oracle");
        worst = worst.max(rel_err(fast.eigenvalues(), &dense));
    }
    check("projection-vs-dense", worst, 1e-10)
}

fn update_oracle(rng: &mut ChaCha8Rng) -> Check {
    let mut worst = 0.0f64;
    for i in 0..40 {
        let n = [4, 8, 16, 50][i % 4];
        let m = random_model(rng, n, [0.0, 0.3, 0.9][i % 3]);
        let b = dense_from_model(&m).expect("dense");
        let x = rvec(rng, n);
        worst = worst.max(rel_err(&m.matvec(&x).expect("dim"), &b.matvec(&x)));
        worst = worst.max(((m.trace() - b.trace()) / b.trace()).abs());
        worst = worst.max((m.logdet() - b.logdet_pd().expect("pd")).abs() / b.logdet_pd().expect("pd").abs().max(1.0));
        let sol = m.solve(&x).expect("solve");
        worst = worst.max(rel_err(&b.matvec(&sol), &x));
    }
    check("broyden-update-vs-dense", worst, 1e-10)
}

fn conditions(rng: &mut ChaCha8Rng) -> Check {
    let (mut worst_dir, mut violations) = (0.0f64, 0);
    for i in 0..40 {
        let n = [4, 8, 16, 50][i % 4];
        let m = random_model(rng, n, 0.0);
        let s = rvec(rng, n);
        let u = adaptive_stack(rng, &m, &s);
        let l = m.project_onto(&u).expect("projection");
        let b = dense_from_model(&m).expect("dense");
        let logdet_b = b.logdet_pd().expect("pd");
        if l.trace() > b.trace() * (1.0 + 1e-9) || l.logdet() < logdet_b - 1e-10 * logdet_b.abs().max(1.0) {
            violations += 1;
        }
        worst_dir = worst_dir.max(rel_err(&l.matvec(&s).expect("dim"), &b.matvec(&s)));
    }
    let mut c = check("trace-det-direction-conditions", worst_dir, 1e-10);
    c.passed &= violations == 0;
    c.detail.push_str(&format!(", {violations} trace/det violations"));
    c
}

fn polynomial(rng: &mut ChaCha8Rng) -> Check {
    let (mut w2, mut w3) = (0.0f64, 0.0f64);
    for _ in 0..10 {
        let n = 8;
        let a = dense_from_model(&random_model(rng, n, 0.0)).expect("dense");
        let s = rvec(rng, n);
        w2 = w2.max(polynomial_preservation_check(&a, &s, 2).expect("check").max_residual);
        w3 = w3.max(polynomial_preservation_check(&a, &s, 3).expect("check").max_residual);
    }
    Check {
        name: "polynomial-preservation",
        passed: w2 <= 1e-10 && w3 <= 1e-9,
        detail: format!("m=2 worst {w2:.3e} (tol 1e-10), m=3 worst {w3:.3e} (tol 1e-9)"),
    }
}

fn quadratic_termination() -> Check {
    let mut worst = 0.0f64;
    let mut ok = true;
    for seed in 0..5 {
        let n = 20;
        let q = make_quadratic(n, 10.0, seed).expect("quadratic");
        let g0: f64 = q.eval(&q.x0()).1.iter().map(|v| v * v).sum::<f64>().sqrt();
        let cfg = SolverConfig {
            method: Method::LkqnQt,
            line_search: LineSearchKind::Exact,
            stop_tol: 1e-10 * g0 / n as f64,
            max_iters: n,
            rel_func_tol: 0.0,
            record_trajectory: true,
            ..Default::default()
        };
        let r = run(&q, &q.x0(), &cfg).expect("run");
        ok &= r.status == RunStatus::Converged;
        let a = DenseMatrix::new(n, q.dense()).expect("dense");
        let cg = cg_reference(&a, q.b(), &q.x0(), None, 1e-10).expect("cg");
        let xs = &r.trajectory.as_ref().expect("trajectory").xs;
        for (x, c) in xs.iter().zip(&cg).skip(1) {
            worst = worst.max(rel_err(x, c));
        }
    }
    let mut c = check("quadratic-termination-vs-cg", worst, 1e-6);
    c.passed &= ok;
    c
}

fn gradients(rng: &mut ChaCha8Rng) -> Check {
    let mut problems: Vec<Box<dyn Problem>> = PROBLEM_NAMES
        .iter()
        .map(|name| Box::new(make_named_problem(name, 12).expect("named")) as Box<dyn Problem>)
        .collect();
    problems.push(Box::new(make_quadratic(10, 100.0, 3).expect("quadratic")));
    let a = DataMatrix::synthetic_low_rank(6, 5, 2, 0.1, 1);
    problems.push(Box::new(make_lowrank_problem(a, 2).expect("lowrank")));
    let mut worst = 0.0f64;
    for p in &problems {
        for _ in 0..3 {
            let x: Vec<f64> = (0..p.dim()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            worst = worst.max(fd_gradient_error(p.as_ref(), &x, 1e-6));
        }
    }
    check("finite-difference-gradients", worst, 1e-5)
}

fn profile_example() -> Check {
    let rec = |p: &str, s: &str, iters: Option<usize>| {
        let mut r = BenchRecord::failed(p, s);
        if let Some(i) = iters {
            r.status = RunStatus::Converged;
            r.iters = i;
        }
        r
    };
    let recs = [rec("p1", "s1", Some(1)), rec("p1", "s2", Some(2)), rec("p2", "s1", None), rec("p2", "s2", Some(1))];
    let passed = match performance_profile(&recs, Metric::Iters) {
        Ok(p) => {
            p.curves.iter().all(|c| check_curve(c).is_ok())
                && p.curve("s1").map(|c| c.points.clone()) == Some(vec![(1.0, 0.5)])
                && p.curve("s2").map(|c| c.points.clone()) == Some(vec![(1.0, 0.5), (2.0, 1.0)])
        }
        Err(_) => false,
    };
    Check { name: "profile-hand-example", passed, detail: String::new() }
}

fn idx_round_trip(rng: &mut ChaCha8Rng) -> Check {
    let mut passed = true;
    for _ in 0..10 {
        let dims: Vec<u32> = (0..rng.gen_range(1..4)).map(|_| rng.gen_range(1..6)).collect();
        let count: usize = dims.iter().map(|d| *d as usize).product();
        let t = IdxTensor { dims, data: (0..count).map(|_| rng.gen()).collect() };
        passed &= write_idx(&t).and_then(|b| read_idx(&b)).is_ok_and(|back| back == t);
    }
    Check { name: "idx-round-trip", passed, detail: String::new() }
}

/// Runs every check with a fixed seed.
pub fn run_verify_suite() -> Vec<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(20240229);
    vec![
        stack_orthogonality(&mut rng),
        projection_oracle(&mut rng),
        update_oracle(&mut rng),
        conditions(&mut rng),
        polynomial(&mut rng),
        quadratic_termination(),
        gradients(&mut rng),
        profile_example(),
        idx_round_trip(&mut rng),
    ]
}
