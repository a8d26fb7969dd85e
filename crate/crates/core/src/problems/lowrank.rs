use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Problem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Synthetic,
    IdxFile,
}

/// Dense m×n matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<f64>,
    pub provenance: Provenance,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>, provenance: Provenance) -> Result<Self> {
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch { expected: rows * cols, got: entries.len() });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        Ok(DataMatrix { rows, cols, entries, provenance })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    /// G Hᵀ + noise·E with G (m×r), H (n×r) standard-uniform in [−1, 1]
    /// and E uniform in [−1, 1].
    pub fn synthetic_low_rank(m: usize, n: usize, rank: usize, noise: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g: Vec<f64> = (0..m * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let h: Vec<f64> = (0..n * rank).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut entries = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                let mut v = 0.0;
                for l in 0..rank {
                    v += g[i * rank + l] * h[j * rank + l];
                }
                entries[i * n + j] = v + noise * rng.gen_range(-1.0..1.0);
            }
        }
        DataMatrix { rows: m, cols: n, entries, provenance: Provenance::Synthetic }
    }
}

/// f(U, V) = ‖A − UVᵀ‖²_F over x = vec(U) ‖ vec(V), both row-major
/// (U is m×k, V is n×k).
#[derive(Debug, Clone)]
pub struct LowRankProblem {
    a: DataMatrix,
    k: usize,
    seed: u64,
    name: String,
}

pub fn make_lowrank_problem(a: DataMatrix, k: usize) -> Result<LowRankProblem> {
    if k == 0 || k > a.rows.min(a.cols) {
        return Err(Error::InvalidArgument(format!("rank {k} outside [1, {}]", a.rows.min(a.cols))));
    }
    let name = format!("lowrank-{}x{}-k{k}", a.rows, a.cols);
    Ok(LowRankProblem { a, k, seed: 0, name })
}

impl LowRankProblem {
    /// Seed of the random starting point (entries uniform in [−0.5, 0.5]).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn rank(&self) -> usize {
        self.k
    }

    pub fn matrix(&self) -> &DataMatrix {
        &self.a
    }

    /// A − UVᵀ, row-major.
    fn residual(&self, u: &[f64], v: &[f64]) -> Vec<f64> {
        let (m, n, k) = (self.a.rows, self.a.cols, self.k);
        let mut r = self.a.entries.clone();
        for i in 0..m {
            let ui = &u[i * k..(i + 1) * k];
            let row = &mut r[i * n..(i + 1) * n];
            for (j, rij) in row.iter_mut().enumerate() {
                let vj = &v[j * k..(j + 1) * k];
                *rij -= ui.iter().zip(vj).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        r
    }
}

impl Problem for LowRankProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        (self.a.rows + self.a.cols) * self.k
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(x.len(), self.dim(), "dimension mismatch in {}", self.name);
        let (m, n, k) = (self.a.rows, self.a.cols, self.k);
        let (u, v) = x.split_at(m * k);
        let r = self.residual(u, v);
        let f = r.iter().map(|e| e * e).sum();
        let mut g = vec![0.0; x.len()];
        let (gu, gv) = g.split_at_mut(m * k);
        // gU = −2RV, gV = −2RᵀU
        for i in 0..m {
            let row = &r[i * n..(i + 1) * n];
            let ui = &u[i * k..(i + 1) * k];
            let gui = &mut gu[i * k..(i + 1) * k];
            for (j, rij) in row.iter().enumerate() {
                let c = -2.0 * rij;
                let vj = &v[j * k..(j + 1) * k];
                let gvj = &mut gv[j * k..(j + 1) * k];
                for l in 0..k {
                    gui[l] += c * vj[l];
                    gvj[l] += c * ui[l];
                }
            }
        }
        (f, g)
    }

    fn x0(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        (0..self.dim()).map(|_| rng.gen_range(-0.5..0.5)).collect()
    }
}
