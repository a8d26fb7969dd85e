use super::SpectralAlgebra;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{dot, HouseholderStack};
use crate::ops;

/// weight·x yᵀ, or weight·x xᵀ when `y` is `None`.
#[derive(Debug, Clone, Copy)]
pub struct RankOne<'a> {
    pub weight: f64,
    pub x: &'a [f64],
    pub y: Option<&'a [f64]>,
}

impl<'a> RankOne<'a> {
    pub fn symmetric(weight: f64, x: &'a [f64]) -> Self {
        RankOne { weight, x, y: None }
    }
}

/// Symmetric matrix to be projected onto sd U.
#[derive(Debug, Clone)]
pub enum ProjectionSource<'a> {
    /// A previous algebra plus a sum of rank-one terms.
    Structured { base: &'a SpectralAlgebra, terms: Vec<RankOne<'a>> },
    /// Row-major n×n entries.
    Dense { n: usize, entries: &'a [f64] },
}

impl ProjectionSource<'_> {
    fn dim(&self) -> usize {
        match self {
            ProjectionSource::Structured { base, .. } => base.dim(),
            ProjectionSource::Dense { n, .. } => *n,
        }
    }
}

/// Best approximation of B in sd U: z_i = (UᵀBU)_ii.
pub fn project(source: &ProjectionSource<'_>, u: &HouseholderStack) -> Result<SpectralAlgebra> {
    let n = source.dim();
    check_dim(n, u.dim())?;
    let z = match source {
        ProjectionSource::Structured { base, terms } => {
            let mut z = algebra_diagonal(base, u);
            for t in terms {
                add_rank_one(&mut z, t, u)?;
            }
            z
        }
        ProjectionSource::Dense { n, entries } => dense_diagonal(*n, entries, u)?,
    };
    SpectralAlgebra::new(u.clone(), z)
}

/// Adds weight·(Uᵀx)∘(Uᵀy) to z.
fn add_rank_one(z: &mut [f64], t: &RankOne<'_>, u: &HouseholderStack) -> Result<()> {
    check_dim(z.len(), t.x.len())?;
    let ux = u.apply_t(t.x)?;
    match t.y {
        None => {
            for (zi, a) in z.iter_mut().zip(&ux) {
                *zi += t.weight * a * a;
            }
        }
        Some(y) => {
            check_dim(z.len(), y.len())?;
            let uy = u.apply_t(y)?;
            for ((zi, a), b) in z.iter_mut().zip(&ux).zip(&uy) {
                *zi += t.weight * a * b;
            }
        }
    }
    ops::count(2 * z.len());
    Ok(())
}

/// diag(Uᵀ V d(z) Vᵀ U) for the base algebra V d(z) Vᵀ.
///
/// VᵀU e_i is e_i pushed through the reflectors r_1, …, r_P (those of U in
/// application order, then those of V reversed), so it equals
/// e_i − Σ c_m r_m with c_m = r_m[i] − Σ_{l<m} c_l ⟨r_m, r_l⟩. Hence
///
///   z_i' = z_i − 2 z_i Σ c_m r_m[i] + cᵀ G c,   G_ml = Σ_j z_j r_m[j] r_l[j],
///
/// an O(P²) evaluation per index once Γ = ⟨r_m, r_l⟩ and G are known.
fn algebra_diagonal(base: &SpectralAlgebra, u: &HouseholderStack) -> Vec<f64> {
    let n = base.dim();
    let z = base.eigenvalues();
    let r: Vec<&[f64]> =
        u.reflectors().iter().chain(base.stack().reflectors().iter().rev()).map(|h| h.vector()).collect();
    let p = r.len();
    if p == 0 {
        return z.to_vec();
    }

    let mut gamma = vec![0.0; p * p];
    let mut g = vec![0.0; p * p];
    let zr: Vec<Vec<f64>> = r.iter().map(|rm| crate::linalg::hadamard(z, rm)).collect();
    for m in 0..p {
        for l in 0..m {
            gamma[m * p + l] = dot(r[m], r[l]);
        }
        for l in 0..=m {
            let v = dot(&zr[m], r[l]);
            g[m * p + l] = v;
            g[l * p + m] = v;
        }
    }

    let mut c = vec![0.0; p];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut t = 0.0;
        for m in 0..p {
            let mut cm = r[m][i];
            for l in 0..m {
                cm -= c[l] * gamma[m * p + l];
            }
            c[m] = cm;
            t += cm * r[m][i];
        }
        let mut q = 0.0;
        for m in 0..p {
            let mut row = 0.5 * g[m * p + m] * c[m];
            for l in 0..m {
                row += g[m * p + l] * c[l];
            }
            q += c[m] * row;
        }
        out.push(z[i] * (1.0 - 2.0 * t) + 2.0 * q);
    }
    ops::count(n * (p * p + 2 * p + 2));
    out
}

/// Direct (UᵀBU)_ii for a dense B; O(n²) per entry.
fn dense_diagonal(n: usize, entries: &[f64], u: &HouseholderStack) -> Result<Vec<f64>> {
    if entries.len() != n * n {
        return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
    }
    let mut z = Vec::with_capacity(n);
    let mut e = vec![0.0; n];
    for i in 0..n {
        e.iter_mut().for_each(|x| *x = 0.0);
        e[i] = 1.0;
        u.apply_in_place(&mut e);
        let bu: Vec<f64> = entries.chunks_exact(n).map(|row| dot(row, &e)).collect();
        z.push(dot(&e, &bu));
    }
    Ok(z)
}
