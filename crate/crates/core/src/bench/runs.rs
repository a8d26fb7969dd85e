use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::problems::{
    filter_columns, idx_load, idx_load_labels, make_lowrank_problem, make_named_problem, make_quadratic, DataMatrix,
    Problem,
};
use crate::solvers::{run, LineSearchKind, Method, RunResult, SolverConfig, Strategy, Variant};

/// Where the matrix of a factorization problem comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// Rank-`rank` product plus uniform noise of amplitude `noise`.
    Synthetic { rows: usize, cols: usize, rank: usize, noise: f64, seed: u64 },
    /// IDX image file, optionally restricted to one class via a label file.
    Idx { images: PathBuf, labels: Option<PathBuf>, class: Option<u8> },
}

impl DataSource {
    pub fn synthetic(rows: usize, cols: usize, seed: u64) -> Self {
        DataSource::Synthetic { rows, cols, rank: 10, noise: 1e-2, seed }
    }

    pub fn load(&self) -> Result<DataMatrix> {
        match self {
            DataSource::Synthetic { rows, cols, rank, noise, seed } => {
                if *rows == 0 || *cols == 0 || *rank == 0 {
                    return Err(Error::InvalidArgument("synthetic data needs positive sizes".into()));
                }
                Ok(DataMatrix::synthetic_low_rank(*rows, *cols, *rank, *noise, *seed))
            }
            DataSource::Idx { images, labels, class } => {
                let a = idx_load(images)?;
                match (labels, class) {
                    (Some(l), Some(c)) => filter_columns(&a, &idx_load_labels(l)?, *c),
                    (None, Some(_)) => Err(Error::InvalidArgument("class filtering needs a label file".into())),
                    _ => Ok(a),
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    Named { name: String, n: usize },
    Quadratic { n: usize, cond: f64, seed: u64 },
    LowRank { data: DataSource, k: usize, seed: u64 },
}

impl ProblemSpec {
    pub fn build(&self) -> Result<Box<dyn Problem>> {
        Ok(match self {
            ProblemSpec::Named { name, n } => Box::new(make_named_problem(name, *n)?),
            ProblemSpec::Quadratic { n, cond, seed } => {
                if *n == 0 {
                    return Err(Error::InvalidArgument("quadratic needs n ≥ 1".into()));
                }
                Box::new(make_quadratic(*n, *cond, *seed)?)
            }
            ProblemSpec::LowRank { data, k, seed } => {
                Box::new(make_lowrank_problem(data.load()?, *k)?.with_seed(*seed))
            }
        })
    }

    /// Key identifying the problem in records and profiles.
    pub fn label(&self) -> String {
        match self {
            ProblemSpec::Named { name, n } => format!("{}-{n}", name.to_ascii_uppercase()),
            ProblemSpec::Quadratic { n, cond, seed } => format!("quad-n{n}-c{cond:e}-s{seed}"),
            ProblemSpec::LowRank { data, k, seed } => match data {
                DataSource::Synthetic { rows, cols, rank, seed: dseed, .. } => {
                    format!("lowrank-{rows}x{cols}-r{rank}-d{dseed}-k{k}-s{seed}")
                }
                DataSource::Idx { images, class, .. } => {
                    let stem = images.file_stem().and_then(|s| s.to_str()).unwrap_or("idx");
                    match class {
                        Some(c) => format!("idx-{stem}-c{c}-k{k}-s{seed}"),
                        None => format!("idx-{stem}-k{k}-s{seed}"),
                    }
                }
            },
        }
    }
}

/// One solver on one problem.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSpec {
    pub problem: ProblemSpec,
    pub config: SolverConfig,
}

impl RunSpec {
    /// Method name plus the options that distinguish variants of it.
    pub fn solver_label(&self) -> String {
        let c = &self.config;
        let mut s = c.method.as_str().to_string();
        if c.method == Method::BroydenGeneric {
            if c.strategy == Strategy::Dense {
                s.push_str("-dense");
            }
            if c.variant == Variant::NonSecant {
                s.push_str("-ns");
            }
        }
        if c.phi != 0.0 {
            s.push_str(&format!("-phi{}", c.phi));
        }
        if c.scaled {
            s.push_str("-scaled");
        }
        if c.method == Method::Lbfgs && c.lbfgs_memory != SolverConfig::default().lbfgs_memory {
            s.push_str(&format!("-m{}", c.lbfgs_memory));
        }
        if c.line_search == LineSearchKind::Exact {
            s.push_str("-exact");
        }
        s
    }

    /// Builds the problem and runs the solver from its standard x0.
    pub fn execute(&self) -> Result<(Box<dyn Problem>, RunResult)> {
        self.config.validate()?;
        let p = self.problem.build()?;
        let r = run(p.as_ref(), &p.x0(), &self.config)?;
        Ok((p, r))
    }
}
