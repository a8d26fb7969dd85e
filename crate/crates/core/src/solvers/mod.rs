//! Optimization drivers. Every method shares one outer loop (line search,
//! termination, restart policy, diagnostics) and differs only in how it
//! turns a gradient into a search direction and how it absorbs a step.

mod adaptive;
mod quadratic;
mod reference;

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

pub use quadratic::{run_quadratic_bfgs_type, HStrategy, QuadraticRun};
pub use reference::LbfgsMemory;

use crate::error::{Error, Result};
use crate::linalg::{dot, norm, sub};
use crate::linesearch::{exact_step_from_ad, strong_wolfe, LineSearchParams, LineSearchStatus};
use crate::ops;
use crate::problems::Problem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Lkqn,
    LkqnQt,
    BfgsDense,
    Lbfgs,
    BroydenGeneric,
}

impl Method {
    pub const ALL: [Method; 5] =
        [Method::Lkqn, Method::LkqnQt, Method::BfgsDense, Method::Lbfgs, Method::BroydenGeneric];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Lkqn => "lkqn",
            Method::LkqnQt => "lkqn-qt",
            Method::BfgsDense => "bfgs-dense",
            Method::Lbfgs => "lbfgs",
            Method::BroydenGeneric => "broyden-generic",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown solver `{s}`")))
    }
}

/// Where the direction of the generic Broyden driver comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    /// From the updated B_{k+1}.
    Secant,
    /// From the projected B̃_{k+1}.
    NonSecant,
}

/// Choice of B̃_k in the generic Broyden driver.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Projection onto the adaptive two-reflector algebra.
    Adaptive,
    /// B̃_k = B_k held as a dense matrix (small n only).
    Dense,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchKind {
    Wolfe,
    /// Exact minimization along d; the problem must be quadratic.
    Exact,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    pub phi: f64,
    pub scaled: bool,
    pub variant: Variant,
    pub strategy: Strategy,
    pub toll_rel: f64,
    pub stop_tol: f64,
    pub max_iters: usize,
    pub max_fevals: usize,
    pub rel_func_tol: f64,
    pub lbfgs_memory: usize,
    pub ls: LineSearchParams,
    pub line_search: LineSearchKind,
    /// Keep every iterate and direction in [`RunResult::trajectory`].
    pub record_trajectory: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Lkqn,
            phi: 0.0,
            scaled: false,
            variant: Variant::Secant,
            strategy: Strategy::Adaptive,
            toll_rel: crate::algebra::DEFAULT_TOLL_REL,
            stop_tol: 1e-6,
            max_iters: 10_000,
            max_fevals: 50_000,
            rel_func_tol: 1e-20,
            lbfgs_memory: 5,
            ls: LineSearchParams::default(),
            line_search: LineSearchKind::Wolfe,
            record_trajectory: false,
        }
    }
}

impl SolverConfig {
    pub fn for_method(method: Method) -> Self {
        SolverConfig { method, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::InvalidArgument(m));
        if !(0.0..1.0).contains(&self.phi) {
            return fail(format!("phi = {} outside [0, 1)", self.phi));
        }
        if !(self.stop_tol > 0.0) {
            return fail(format!("stop_tol = {} must be positive", self.stop_tol));
        }
        if self.lbfgs_memory == 0 {
            return fail("L-BFGS memory must be at least 1".into());
        }
        if !(self.toll_rel >= 0.0) {
            return fail(format!("toll_rel = {} must be non-negative", self.toll_rel));
        }
        if self.scaled && self.phi != 0.0 {
            return fail("σ-scaling is defined for phi = 0 only".into());
        }
        if self.method == Method::LkqnQt && self.phi != 0.0 {
            return fail("lkqn-qt uses phi = 0".into());
        }
        self.ls.validate()
    }
}

/// How U_k was built.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// s_k was (numerically) an eigenvector of B_k.
    Eigvec,
    Krylov2,
    Qt3,
    /// B̃_k = B_k (dense generic driver).
    Dense,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::Eigvec => "eigvec",
            Branch::Krylov2 => "krylov2",
            Branch::Qt3 => "qt3",
            Branch::Dense => "dense",
        }
    }
}

/// Diagnostics of one accepted step. Algebra-related fields are `None` for
/// methods without an algebra and on steps whose update was skipped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationRecord {
    /// Index of the new iterate x_k.
    pub k: usize,
    pub f: f64,
    pub gnorm: f64,
    pub step: f64,
    pub ys: f64,
    pub trace_b: Option<f64>,
    pub logdet_b: Option<f64>,
    pub trace_l: Option<f64>,
    pub logdet_l: Option<f64>,
    /// ‖L s − B s‖/‖B s‖.
    pub cond2_residual: Option<f64>,
    /// ‖L ḡ − α ḡ‖/(α‖ḡ‖) for the fixed third column (lkqn-qt).
    pub qt_residual: Option<f64>,
    pub psi: Option<f64>,
    pub powell_ratio: Option<f64>,
    pub sigma: Option<f64>,
    /// logdet Φ(L, s, y, 0) without σ (σ-scaled runs only).
    pub logdet_b_unscaled: Option<f64>,
    /// logdet of the model actually used next.
    pub logdet_b_next: Option<f64>,
    /// ‖B̃ s − (−λg)‖/‖λg‖ in the non-secant driver.
    pub ns_residual: Option<f64>,
    pub n_fev: usize,
    pub branch: Option<Branch>,
    pub ls_status: Option<LineSearchStatus>,
    pub update_skipped: bool,
    pub reset: bool,
    /// Counted multiplications spent in this iteration.
    pub ops: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Converged,
    MaxIters,
    MaxFevals,
    LsFailure,
    NumericFailure,
    RelFuncTol,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Converged => "converged",
            RunStatus::MaxIters => "max-iters",
            RunStatus::MaxFevals => "max-fevals",
            RunStatus::LsFailure => "ls-failure",
            RunStatus::NumericFailure => "numeric-failure",
            RunStatus::RelFuncTol => "rel-func-tol",
        }
    }
}

impl fmt::Display for RunStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for RunStatus {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        use RunStatus::*;
        [Converged, MaxIters, MaxFevals, LsFailure, NumericFailure, RelFuncTol]
            .into_iter()
            .find(|st| st.as_str() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown status `{s}`")))
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    /// x_0, x_1, …
    pub xs: Vec<Vec<f64>>,
    /// d_0, d_1, …; one per line search.
    pub ds: Vec<Vec<f64>>,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub status: RunStatus,
    pub x_final: Vec<f64>,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub f0: f64,
    pub gnorm0: f64,
    pub iterations: Vec<IterationRecord>,
    pub wall_time: Duration,
    pub total_fev: usize,
    pub resets: usize,
    pub trajectory: Option<Trajectory>,
}

impl RunResult {
    pub fn iters(&self) -> usize {
        self.iterations.len()
    }

    pub fn converged(&self) -> bool {
        self.status == RunStatus::Converged
    }
}

/// Quantities handed to an engine after an accepted step.
pub(crate) struct Step<'a> {
    pub s: &'a [f64],
    pub y: &'a [f64],
    pub ys: f64,
    pub lambda: f64,
    pub g_old: &'a [f64],
    pub g_new: &'a [f64],
}

/// Direction generator plus update rule of one method.
pub(crate) trait Engine {
    /// d = −B⁻¹g for the current approximation.
    fn direction(&mut self, g: &[f64], rec: &mut IterationRecord) -> Result<Vec<f64>>;

    /// Absorbs an accepted step with yᵀs > 0.
    fn update(&mut self, step: &Step<'_>, rec: &mut IterationRecord) -> Result<()>;

    /// Back to B = I.
    fn reset(&mut self);

    fn is_identity(&self) -> bool;
}

fn stop_test(gnorm: f64, n: usize, tol: f64) -> bool {
    gnorm / n as f64 <= tol
}

pub(crate) fn drive(
    problem: &dyn Problem,
    x0: &[f64],
    cfg: &SolverConfig,
    engine: &mut dyn Engine,
) -> Result<RunResult> {
    cfg.validate()?;
    let n = problem.dim();
    if x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: x0.len() });
    }
    let quad = match cfg.line_search {
        LineSearchKind::Exact => Some(problem.quadratic().ok_or_else(|| {
            Error::InvalidArgument(format!("exact line search needs a quadratic, got {}", problem.name()))
        })?),
        LineSearchKind::Wolfe => None,
    };
    let start = Instant::now();
    let eval = |x: &[f64]| ops::paused(|| problem.eval(x));

    let mut x = x0.to_vec();
    let (mut f, mut g) = eval(&x);
    let mut total_fev = 1;
    let gnorm0 = ops::paused(|| norm(&g));
    let f0 = f;
    let mut gnorm = gnorm0;
    let mut iterations = Vec::new();
    let mut resets = 0;
    let mut traj = cfg.record_trajectory.then(|| Trajectory { xs: vec![x.clone()], ds: Vec::new() });

    let finish = |status, x: Vec<f64>, f, gnorm, iterations, total_fev, resets, trajectory| RunResult {
        status,
        x_final: x,
        f_final: f,
        gnorm_final: gnorm,
        f0,
        gnorm0,
        iterations,
        wall_time: start.elapsed(),
        total_fev,
        resets,
        trajectory,
    };

    if !(f.is_finite() && gnorm.is_finite()) {
        return Ok(finish(RunStatus::NumericFailure, x, f, gnorm, iterations, total_fev, resets, traj));
    }
    if stop_test(gnorm, n, cfg.stop_tol) {
        return Ok(finish(RunStatus::Converged, x, f, gnorm, iterations, total_fev, resets, traj));
    }

    let mut scratch = IterationRecord::default();
    let mut d = match engine.direction(&g, &mut scratch) {
        Ok(d) => d,
        Err(_) => {
            engine.reset();
            resets += 1;
            g.iter().map(|v| -v).collect()
        }
    };

    let mut status = RunStatus::MaxIters;
    let mut k = 0;
    while k < cfg.max_iters {
        let ops_start = ops::read();
        let mut rec = IterationRecord { k: k + 1, ..Default::default() };

        let dg = dot(&g, &d);
        if !(dg < 0.0) || !dg.is_finite() {
            engine.reset();
            resets += 1;
            rec.reset = true;
            d = g.iter().map(|v| -v).collect();
        }
        if let Some(t) = traj.as_mut() {
            t.ds.push(d.clone());
        }

        // Step along d.
        let (x_new, f_new, g_new, lambda, n_fev) = match quad {
            Some(q) => {
                let ad = ops::paused(|| q.apply(&d));
                let lambda = match exact_step_from_ad(&g, &d, &ad) {
                    Ok(l) => l,
                    Err(_) => {
                        status = RunStatus::NumericFailure;
                        break;
                    }
                };
                let mut xn = x.clone();
                crate::linalg::axpy(lambda, &d, &mut xn);
                let (fnew, gn) = eval(&xn);
                rec.ls_status = Some(LineSearchStatus::Converged);
                (xn, fnew, gn, lambda, 1)
            }
            None => {
                let r = strong_wolfe(eval, &x, &d, f, &g, &cfg.ls)?;
                total_fev += r.n_fev;
                rec.ls_status = Some(r.status);
                let dg0 = dot(&g, &d);
                if r.status != LineSearchStatus::Converged && !(r.step > 0.0 && r.armijo_holds(f, dg0, cfg.ls.ftol)) {
                    if engine.is_identity() {
                        status = RunStatus::LsFailure;
                        break;
                    }
                    engine.reset();
                    resets += 1;
                    d = g.iter().map(|v| -v).collect();
                    if let Some(t) = traj.as_mut() {
                        t.ds.pop();
                    }
                    if total_fev >= cfg.max_fevals {
                        status = RunStatus::MaxFevals;
                        break;
                    }
                    continue;
                }
                (r.x, r.f, r.g, r.step, r.n_fev)
            }
        };
        if quad.is_some() {
            total_fev += 1;
        }
        if !(f_new.is_finite() && g_new.iter().all(|v| v.is_finite())) {
            status = RunStatus::NumericFailure;
            break;
        }

        let s = sub(&x_new, &x);
        let y = sub(&g_new, &g);
        let ys = dot(&y, &s);
        rec.step = lambda;
        rec.ys = ys;
        rec.n_fev = n_fev;
        if ys > 0.0 {
            let step = Step { s: &s, y: &y, ys, lambda, g_old: &g, g_new: &g_new };
            if engine.update(&step, &mut rec).is_err() {
                engine.reset();
                resets += 1;
                rec.reset = true;
            }
        } else {
            rec.update_skipped = true;
        }

        let f_old = f;
        x = x_new;
        f = f_new;
        g = g_new;
        gnorm = ops::paused(|| norm(&g));
        rec.f = f;
        rec.gnorm = gnorm;
        if let Some(t) = traj.as_mut() {
            t.xs.push(x.clone());
        }
        k += 1;

        if stop_test(gnorm, n, cfg.stop_tol) {
            rec.ops = ops::read() - ops_start;
            iterations.push(rec);
            status = RunStatus::Converged;
            break;
        }
        d = match engine.direction(&g, &mut rec) {
            Ok(d) => d,
            Err(_) => {
                engine.reset();
                resets += 1;
                rec.reset = true;
                g.iter().map(|v| -v).collect()
            }
        };
        rec.ops = ops::read() - ops_start;
        iterations.push(rec);

        if total_fev >= cfg.max_fevals {
            status = RunStatus::MaxFevals;
            break;
        }
        if (f_old - f).abs() < cfg.rel_func_tol * f_old.abs() {
            status = RunStatus::RelFuncTol;
            break;
        }
    }
    Ok(finish(status, x, f, gnorm, iterations, total_fev, resets, traj))
}

/// Adaptive-algebra quasi-Newton: project B_k onto sd U_k (eigenvector or
/// two-step Krylov construction), then B_{k+1} = Φ(B̃_k, s_k, y_k, φ).
pub fn run_lkqn(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    let mut e = adaptive::SecantEngine::new(problem.dim(), cfg, false);
    drive(problem, x0, cfg, &mut e)
}

/// As [`run_lkqn`] with the new gradient's component outside the Krylov
/// space fixed as a third eigenvector; φ = 0.
pub fn run_lkqn_qt(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    let mut e = adaptive::SecantEngine::new(problem.dim(), cfg, true);
    drive(problem, x0, cfg, &mut e)
}

/// Generic Broyden-class driver in secant or non-secant form.
pub fn run_broyden_generic(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    let n = problem.dim();
    match (cfg.strategy, cfg.variant) {
        (Strategy::Adaptive, Variant::Secant) => {
            let mut e = adaptive::SecantEngine::new(n, cfg, false);
            drive(problem, x0, cfg, &mut e)
        }
        (Strategy::Adaptive, Variant::NonSecant) => {
            let mut e = adaptive::NonSecantEngine::new(n, cfg);
            drive(problem, x0, cfg, &mut e)
        }
        (Strategy::Dense, _) => {
            let mut e = reference::DenseBroyden::new(n, cfg.phi)?;
            drive(problem, x0, cfg, &mut e)
        }
    }
}

/// Full BFGS on the inverse, H_0 = I.
pub fn run_bfgs_dense(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    let mut e = reference::DenseInverseBfgs::new(problem.dim())?;
    drive(problem, x0, cfg, &mut e)
}

/// Limited-memory BFGS (two-loop recursion, γ-scaled initial matrix).
pub fn run_lbfgs(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    let mut e = reference::Lbfgs::new(problem.dim(), cfg.lbfgs_memory);
    drive(problem, x0, cfg, &mut e)
}

/// Dispatches on `cfg.method`.
pub fn run(problem: &dyn Problem, x0: &[f64], cfg: &SolverConfig) -> Result<RunResult> {
    match cfg.method {
        Method::Lkqn => run_lkqn(problem, x0, cfg),
        Method::LkqnQt => run_lkqn_qt(problem, x0, cfg),
        Method::BfgsDense => run_bfgs_dense(problem, x0, cfg),
        Method::Lbfgs => run_lbfgs(problem, x0, cfg),
        Method::BroydenGeneric => run_broyden_generic(problem, x0, cfg),
    }
}
