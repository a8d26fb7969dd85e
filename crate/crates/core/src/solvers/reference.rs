use super::{Branch, Engine, IterationRecord, Step};
use crate::error::{Error, Result};
use crate::linalg::dot;

/// Largest n accepted by the O(n²)-memory methods.
pub const DENSE_MAX_N: usize = 2000;

fn dense_guard(n: usize) -> Result<()> {
    if n > DENSE_MAX_N {
        return Err(Error::InvalidArgument(format!("dense methods are limited to n ≤ {DENSE_MAX_N}, got {n}")));
    }
    Ok(())
}

fn identity(n: usize) -> Vec<f64> {
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + i] = 1.0;
    }
    m
}

fn matvec(m: &[f64], x: &[f64]) -> Vec<f64> {
    m.chunks_exact(x.len()).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect()
}

/// BFGS on H ≈ ∇²f⁻¹: H⁺ = (I − ρsyᵀ)H(I − ρysᵀ) + ρssᵀ.
pub(crate) struct DenseInverseBfgs {
    n: usize,
    h: Vec<f64>,
    fresh: bool,
}

impl DenseInverseBfgs {
    pub fn new(n: usize) -> Result<Self> {
        dense_guard(n)?;
        Ok(DenseInverseBfgs { n, h: identity(n), fresh: true })
    }
}

impl Engine for DenseInverseBfgs {
    fn direction(&mut self, g: &[f64], _rec: &mut IterationRecord) -> Result<Vec<f64>> {
        Ok(matvec(&self.h, g).into_iter().map(|v| -v).collect())
    }

    fn update(&mut self, st: &Step<'_>, rec: &mut IterationRecord) -> Result<()> {
        let n = self.n;
        let rho = 1.0 / st.ys;
        let hy = matvec(&self.h, st.y);
        let yhy = dot(st.y, &hy);
        // H⁺ = H − ρ(s(Hy)ᵀ + (Hy)sᵀ) + (ρ²yᵀHy + ρ)ssᵀ
        let c = rho * rho * yhy + rho;
        for i in 0..n {
            for j in 0..n {
                self.h[i * n + j] += -rho * (st.s[i] * hy[j] + hy[i] * st.s[j]) + c * st.s[i] * st.s[j];
            }
        }
        rec.powell_ratio = Some(dot(st.y, st.y) / st.ys);
        self.fresh = false;
        Ok(())
    }

    fn reset(&mut self) {
        self.h = identity(self.n);
        self.fresh = true;
    }

    fn is_identity(&self) -> bool {
        self.fresh
    }
}

/// Broyden-class update with B̃_k = B_k held densely; Cholesky solves.
pub(crate) struct DenseBroyden {
    n: usize,
    b: Vec<f64>,
    phi: f64,
    fresh: bool,
}

impl DenseBroyden {
    pub fn new(n: usize, phi: f64) -> Result<Self> {
        dense_guard(n)?;
        Ok(DenseBroyden { n, b: identity(n), phi, fresh: true })
    }
}

/// Solves Ax = b for symmetric pd A (row-major) by Cholesky.
fn cholesky_solve(a: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut sum = a[i * n + j];
            for k in 0..j {
                sum -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(sum > 0.0) {
                    return Err(Error::PdLoss(format!("Cholesky pivot {i} = {sum:e}")));
                }
                l[i * n + i] = sum.sqrt();
            } else {
                l[i * n + j] = sum / l[j * n + j];
            }
        }
    }
    let mut z = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            z[i] -= l[i * n + k] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            z[i] -= l[k * n + i] * z[k];
        }
        z[i] /= l[i * n + i];
    }
    Ok(z)
}

impl Engine for DenseBroyden {
    fn direction(&mut self, g: &[f64], _rec: &mut IterationRecord) -> Result<Vec<f64>> {
        Ok(cholesky_solve(&self.b, g)?.into_iter().map(|v| -v).collect())
    }

    fn update(&mut self, st: &Step<'_>, rec: &mut IterationRecord) -> Result<()> {
        let n = self.n;
        let bs = matvec(&self.b, st.s);
        let sbs = dot(st.s, &bs);
        let v: Vec<f64> = st.y.iter().zip(&bs).map(|(y, b)| y / st.ys - b / sbs).collect();
        let w = self.phi * sbs;
        for i in 0..n {
            for j in 0..n {
                self.b[i * n + j] += -bs[i] * bs[j] / sbs + st.y[i] * st.y[j] / st.ys + w * v[i] * v[j];
            }
        }
        rec.branch = Some(Branch::Dense);
        rec.cond2_residual = Some(0.0);
        rec.powell_ratio = Some(dot(st.y, st.y) / st.ys);
        self.fresh = false;
        Ok(())
    }

    fn reset(&mut self) {
        self.b = identity(self.n);
        self.fresh = true;
    }

    fn is_identity(&self) -> bool {
        self.fresh
    }
}

/// Ring buffers of the last M pairs plus the two work vectors of the
/// two-loop recursion: 2M + 2 persistent vectors of length n.
#[derive(Debug, Clone)]
pub struct LbfgsMemory {
    n: usize,
    m: usize,
    s: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    rho: Vec<f64>,
    alpha: Vec<f64>,
    head: usize,
    len: usize,
    q: Vec<f64>,
    r: Vec<f64>,
}

impl LbfgsMemory {
    pub fn new(n: usize, m: usize) -> Self {
        LbfgsMemory {
            n,
            m,
            s: vec![vec![0.0; n]; m],
            y: vec![vec![0.0; n]; m],
            rho: vec![0.0; m],
            alpha: vec![0.0; m],
            head: 0,
            len: 0,
            q: vec![0.0; n],
            r: vec![0.0; n],
        }
    }

    /// Number of persistent length-n vectors held.
    pub fn stored_vectors(&self) -> usize {
        self.s.len() + self.y.len() + 2
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn push(&mut self, s: &[f64], y: &[f64], ys: f64) {
        let slot = (self.head + self.len) % self.m;
        self.s[slot].copy_from_slice(s);
        self.y[slot].copy_from_slice(y);
        self.rho[slot] = 1.0 / ys;
        if self.len < self.m {
            self.len += 1;
        } else {
            self.head = (self.head + 1) % self.m;
        }
    }

    pub fn clear(&mut self) {
        self.len = 0;
        self.head = 0;
    }

    /// H g via the two-loop recursion with H_0 = γI, γ = sᵀy/yᵀy of the
    /// newest pair (γ = 1 when empty).
    pub fn apply(&mut self, g: &[f64]) -> Vec<f64> {
        self.q.copy_from_slice(g);
        for i in (0..self.len).rev() {
            let slot = (self.head + i) % self.m;
            let a = self.rho[slot] * dot(&self.s[slot], &self.q);
            self.alpha[slot] = a;
            crate::linalg::axpy(-a, &self.y[slot], &mut self.q);
        }
        let gamma = if self.len > 0 {
            let slot = (self.head + self.len - 1) % self.m;
            1.0 / (self.rho[slot] * dot(&self.y[slot], &self.y[slot]))
        } else {
            1.0
        };
        for (ri, qi) in self.r.iter_mut().zip(&self.q) {
            *ri = gamma * qi;
        }
        for i in 0..self.len {
            let slot = (self.head + i) % self.m;
            let b = self.rho[slot] * dot(&self.y[slot], &self.r);
            crate::linalg::axpy(self.alpha[slot] - b, &self.s[slot], &mut self.r);
        }
        debug_assert_eq!(self.r.len(), self.n);
        self.r.clone()
    }
}

pub(crate) struct Lbfgs {
    mem: LbfgsMemory,
}

impl Lbfgs {
    pub fn new(n: usize, m: usize) -> Self {
        Lbfgs { mem: LbfgsMemory::new(n, m) }
    }
}

impl Engine for Lbfgs {
    fn direction(&mut self, g: &[f64], _rec: &mut IterationRecord) -> Result<Vec<f64>> {
        Ok(self.mem.apply(g).into_iter().map(|v| -v).collect())
    }

    fn update(&mut self, st: &Step<'_>, rec: &mut IterationRecord) -> Result<()> {
        self.mem.push(st.s, st.y, st.ys);
        rec.powell_ratio = Some(dot(st.y, st.y) / st.ys);
        Ok(())
    }

    fn reset(&mut self) {
        self.mem.clear();
    }

    fn is_identity(&self) -> bool {
        self.mem.is_empty()
    }
}
