use super::adaptive::SecantEngine;
use super::reference::DenseInverseBfgs;
use super::{drive, LineSearchKind, Method, RunResult, SolverConfig};
use crate::error::Result;
use crate::linalg::{dot, norm, sub};
use crate::problems::{Problem, Quadratic};

/// Choice of H̃_k in the quadratic BFGS-type iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HStrategy {
    /// H̃_k = (L^(k)_{B_k})⁻¹ with the three-reflector algebra.
    Adaptive,
    /// H̃_k = H_k (classical BFGS).
    Dense,
}

#[derive(Debug, Clone)]
pub struct QuadraticRun {
    pub result: RunResult,
    /// Entry k: max over j ≤ k of |g_{k+1}ᵀs_j| / (‖g_j‖‖s_j‖).
    pub gradient_orthogonality: Vec<f64>,
    /// Entry k: max over j ≤ k of |s_{k+1}ᵀAs_j| / (‖s_{k+1}‖_A‖s_j‖_A).
    pub conjugacy: Vec<f64>,
    /// ‖g_k‖ for every iterate, x_0 included.
    pub gnorms: Vec<f64>,
}

/// Exact-line-search BFGS-type iteration on ½xᵀAx − bᵀx with the inverse
/// update H_{k+1} = (I − ρsyᵀ)H̃_k(I − ρysᵀ) + ρssᵀ, H_0 = I. Stops when
/// ‖g‖ ≤ 1e-12‖g_0‖ or after 2n steps, and reports per iteration how far
/// the iterates are from mutual gradient orthogonality and A-conjugacy.
pub fn run_quadratic_bfgs_type(quad: &Quadratic, x0: &[f64], strategy: HStrategy) -> Result<QuadraticRun> {
    let n = quad.dim();
    let g0 = quad.eval(x0).1;
    let cfg = SolverConfig {
        method: Method::LkqnQt,
        line_search: LineSearchKind::Exact,
        stop_tol: (1e-12 * norm(&g0) / n as f64).max(f64::MIN_POSITIVE),
        max_iters: 2 * n,
        rel_func_tol: 0.0,
        record_trajectory: true,
        ..Default::default()
    };
    let result = match strategy {
        HStrategy::Adaptive => drive(quad, x0, &cfg, &mut SecantEngine::new(n, &cfg, true))?,
        HStrategy::Dense => drive(quad, x0, &cfg, &mut DenseInverseBfgs::new(n)?)?,
    };

    let traj = result.trajectory.as_ref().expect("trajectory requested");
    let steps: Vec<Vec<f64>> = traj.xs.windows(2).map(|w| sub(&w[1], &w[0])).collect();
    let a_steps: Vec<Vec<f64>> = steps.iter().map(|s| quad.apply(s)).collect();
    let gnorms: Vec<f64> = traj.xs.iter().map(|x| norm(&quad.eval(x).1)).collect();
    let mut ortho = Vec::with_capacity(steps.len());
    let mut conj = Vec::with_capacity(steps.len());
    for k in 0..steps.len() {
        let g = quad.eval(&traj.xs[k + 1]).1;
        let (mut o, mut c) = (0.0f64, 0.0f64);
        for j in 0..=k {
            o = o.max(dot(&g, &steps[j]).abs() / (gnorms[j] * norm(&steps[j])));
            if k + 1 < steps.len() {
                let (sk, sj) = (&steps[k + 1], &steps[j]);
                let an = (dot(sk, &a_steps[k + 1]) * dot(sj, &a_steps[j])).sqrt();
                c = c.max(dot(sk, &a_steps[j]).abs() / an);
            }
        }
        ortho.push(o);
        if k + 1 < steps.len() {
            conj.push(c);
        }
    }
    Ok(QuadraticRun { result, gradient_orthogonality: ortho, conjugacy: conj, gnorms })
}
