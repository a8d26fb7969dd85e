//! Test objectives: a native subset of the CUTEst unconstrained set,
//! seeded pd quadratics, low-rank matrix factorization, and IDX ingestion.

mod idx;
mod lowrank;
mod named;
mod quadratic;

pub use idx::{filter_columns, idx_load, idx_load_labels, idx_write, read_idx, write_idx, IdxTensor};
pub use lowrank::{make_lowrank_problem, DataMatrix, LowRankProblem, Provenance};
pub use named::{make_named_problem, NamedProblem, PROBLEM_NAMES};
pub use quadratic::{make_quadratic, Quadratic};

/// A smooth objective with analytic gradient. Implementations must be
/// callable concurrently from several threads.
pub trait Problem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// (f(x), ∇f(x)).
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>);

    /// Standard starting point.
    fn x0(&self) -> Vec<f64>;

    /// Known optimal value, when there is one.
    fn f_star(&self) -> Option<f64> {
        None
    }

    /// Present for f(x) = ½xᵀAx − bᵀx.
    fn quadratic(&self) -> Option<&Quadratic> {
        None
    }
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn name(&self) -> &str {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        (**self).eval(x)
    }
    fn x0(&self) -> Vec<f64> {
        (**self).x0()
    }
    fn f_star(&self) -> Option<f64> {
        (**self).f_star()
    }
    fn quadratic(&self) -> Option<&Quadratic> {
        (**self).quadratic()
    }
}
