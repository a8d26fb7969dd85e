//! Brute-force dense verifiers. Everything here is O(n²) to O(n³), built on
//! nalgebra, and shares no arithmetic with the structured fast paths.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linalg::HouseholderStack;
use crate::model::HessianModel;
use crate::problems::Problem;

/// Tolerance for the symmetry check on inputs that must be symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Square row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl DenseMatrix {
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        Ok(DenseMatrix { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, |i, j| (i == j) as u8 as f64)
    }

    pub fn diagonal(d: &[f64]) -> Self {
        Self::from_fn(d.len(), |i, j| if i == j { d[i] } else { 0.0 })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let entries = (0..n * n).map(|k| f(k / n, k % n)).collect();
        DenseMatrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    fn to_na(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.entries)
    }

    fn from_na(m: &DMatrix<f64>) -> Self {
        Self::from_fn(m.nrows(), |i, j| m[(i, j)])
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        (self.to_na() * DVector::from_column_slice(x)).as_slice().to_vec()
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        Self::from_na(&(self.to_na() * other.to_na()))
    }

    pub fn transpose(&self) -> DenseMatrix {
        Self::from_fn(self.n, |i, j| self.get(j, i))
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// Largest |a_ij − a_ji| relative to the largest entry.
    pub fn asymmetry(&self) -> f64 {
        let scale = self.entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..i {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst / scale
    }

    fn require_symmetric(&self) -> Result<()> {
        let a = self.asymmetry();
        if a > SYMMETRY_TOL {
            return Err(Error::InvalidArgument(format!("matrix not symmetric (relative asymmetry {a:e})")));
        }
        Ok(())
    }

    /// Eigenvalues of a symmetric matrix, ascending.
    pub fn symmetric_eigenvalues(&self) -> Result<Vec<f64>> {
        self.require_symmetric()?;
        let mut ev: Vec<f64> = SymmetricEigen::new(self.to_na()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        Ok(ev)
    }

    /// log det via Cholesky; `PdLoss` if not positive definite.
    pub fn logdet_pd(&self) -> Result<f64> {
        self.require_symmetric()?;
        let c = self.to_na().cholesky().ok_or_else(|| Error::PdLoss("dense Cholesky failed".into()))?;
        Ok(2.0 * c.l().diagonal().iter().map(|d| d.ln()).sum::<f64>())
    }

    /// ‖A − B‖_max / max(‖B‖_max, tiny).
    pub fn rel_diff(&self, other: &DenseMatrix) -> f64 {
        let scale = other.entries.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let d = self.entries.iter().zip(&other.entries).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
        d / scale
    }
}

/// U materialized column by column as U e_i.
pub fn dense_from_stack(u: &HouseholderStack) -> DenseMatrix {
    let n = u.dim();
    let mut out = vec![0.0; n * n];
    let mut e = vec![0.0; n];
    for j in 0..n {
        e.fill(0.0);
        e[j] = 1.0;
        let col = u.apply(&e).expect("unit vector has the stack dimension");
        for i in 0..n {
            out[i * n + j] = col[i];
        }
    }
    DenseMatrix { n, entries: out }
}

/// diag(UᵀBU) by the literal triple product.
pub fn dense_projection(b: &DenseMatrix, u: &DenseMatrix) -> Result<Vec<f64>> {
    if b.n != u.n {
        return Err(Error::DimensionMismatch { expected: b.n, got: u.n });
    }
    b.require_symmetric()?;
    let (bn, un) = (b.to_na(), u.to_na());
    let p = un.transpose() * bn * un;
    Ok(p.diagonal().iter().copied().collect())
}

/// U d(z) Uᵀ.
pub fn dense_from_spectral(u: &DenseMatrix, z: &[f64]) -> DenseMatrix {
    let un = u.to_na();
    let d = DMatrix::from_diagonal(&DVector::from_column_slice(z));
    DenseMatrix::from_na(&(&un * d * un.transpose()))
}

/// Φ(B̃, s, y, φ) = B̃ − B̃ssᵀB̃/sᵀB̃s + yyᵀ/yᵀs + φ·sᵀB̃s·vvᵀ,
/// v = y/yᵀs − B̃s/sᵀB̃s, evaluated entry by entry.
pub fn dense_phi_update(bt: &DenseMatrix, s: &[f64], y: &[f64], phi: f64) -> Result<DenseMatrix> {
    let n = bt.n;
    if s.len() != n || y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.len().min(y.len()) });
    }
    let ys: f64 = s.iter().zip(y).map(|(a, b)| a * b).sum();
    if !(ys > 0.0) {
        return Err(Error::Curvature(ys));
    }
    let bs = bt.matvec(s);
    let sbs: f64 = s.iter().zip(&bs).map(|(a, b)| a * b).sum();
    let v: Vec<f64> = (0..n).map(|i| y[i] / ys - bs[i] / sbs).collect();
    Ok(DenseMatrix::from_fn(n, |i, j| bt.get(i, j) - bs[i] * bs[j] / sbs + y[i] * y[j] / ys + phi * sbs * v[i] * v[j]))
}

/// The matrix a [`HessianModel`] stands for, rebuilt densely from its
/// stored factors.
pub fn dense_from_model(m: &HessianModel) -> Result<DenseMatrix> {
    let base = m.base();
    let l = dense_from_spectral(&dense_from_stack(base.stack()), base.eigenvalues());
    match (m.s(), m.y()) {
        (Some(s), Some(y)) => dense_phi_update(&l, s, y, m.phi()),
        _ => Ok(l),
    }
}

/// Textbook preconditioned CG from `x0` on Ax = b with preconditioner H0
/// (identity when `None`). Returns every iterate x_0, x_1, …; stops once
/// ‖r‖ ≤ rel_tol·‖r_0‖ or after 2n steps.
pub fn cg_reference(
    a: &DenseMatrix,
    b: &[f64],
    x0: &[f64],
    h0: Option<&DenseMatrix>,
    rel_tol: f64,
) -> Result<Vec<Vec<f64>>> {
    let n = a.n;
    if b.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: b.len().min(x0.len()) });
    }
    let an = a.to_na();
    let h = h0.map(|h| h.to_na());
    let precond = |r: &DVector<f64>| match &h {
        Some(h) => h * r,
        None => r.clone(),
    };
    let mut x = DVector::from_column_slice(x0);
    let mut r = DVector::from_column_slice(b) - &an * &x;
    let r0 = r.norm();
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = r.dot(&z);
    let mut iterates = vec![x0.to_vec()];
    for _ in 0..2 * n {
        if r.norm() <= rel_tol * r0 || r0 == 0.0 {
            break;
        }
        let ap = &an * &p;
        let pap = p.dot(&ap);
        if !(pap > 0.0) {
            return Err(Error::PdLoss(format!("CG curvature pᵀAp = {pap:e}")));
        }
        let alpha = rz / pap;
        x += alpha * &p;
        r -= alpha * &ap;
        iterates.push(x.as_slice().to_vec());
        z = precond(&r);
        let rz_new = r.dot(&z);
        p = &z + (rz_new / rz) * &p;
        rz = rz_new;
    }
    Ok(iterates)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialCheck {
    /// max_j ‖L_A^j s − A^j s‖/‖A^j s‖ over j < effective_m.
    pub max_residual: f64,
    /// dim K_m(A, s), which is below m when the Krylov space degenerates.
    pub effective_m: usize,
}

/// Builds U whose first m columns are the Ritz vectors of A on K_m(A, s)
/// (Arnoldi, then diagonalization of H_m), completes it to an orthonormal
/// basis, projects A onto sd U, and checks L_A^j s = A^j s for j < m.
pub fn polynomial_preservation_check(a: &DenseMatrix, s: &[f64], m: usize) -> Result<PolynomialCheck> {
    let n = a.n;
    if s.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: s.len() });
    }
    if m == 0 || m > n {
        return Err(Error::InvalidArgument(format!("need 1 ≤ m ≤ n, got m = {m}")));
    }
    a.require_symmetric()?;
    let an = a.to_na();
    let a_norm = an.norm();
    let s0 = DVector::from_column_slice(s);
    if s0.norm() == 0.0 {
        return Err(Error::InvalidArgument("s = 0".into()));
    }

    // Arnoldi with full reorthogonalization.
    let mut basis: Vec<DVector<f64>> = vec![&s0 / s0.norm()];
    let mut hm = DMatrix::<f64>::zeros(m, m);
    for j in 0..m {
        let mut w = &an * &basis[j];
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let c = v.dot(&w);
                hm[(i, j)] += c;
                w -= c * v;
            }
        }
        if j + 1 == m {
            break;
        }
        let h = w.norm();
        if h <= 1e-12 * a_norm {
            break;
        }
        hm[(j + 1, j)] = h;
        basis.push(w / h);
    }
    let k = basis.len();
    let h_k = hm.view((0, 0), (k, k)).into_owned();
    let h_sym = 0.5 * (&h_k + h_k.transpose());
    let eig = SymmetricEigen::new(h_sym);
    let v_k = DMatrix::from_columns(&basis);
    let ritz = &v_k * eig.eigenvectors;

    // Complete to an orthonormal basis of ℝⁿ with the standard vectors.
    let mut cols: Vec<DVector<f64>> = ritz.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut w = DVector::zeros(n);
        w[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&w);
                w -= d * c;
            }
        }
        let nw = w.norm();
        if nw > 1e-8 {
            cols.push(w / nw);
        }
    }
    let u = DMatrix::from_columns(&cols);
    let z = (u.transpose() * &an * &u).diagonal();
    let l = &u * DMatrix::from_diagonal(&z) * u.transpose();

    let mut worst = 0.0f64;
    let (mut ls, mut as_) = (s0.clone(), s0);
    for _ in 1..k {
        ls = &l * ls;
        as_ = &an * as_;
        worst = worst.max((&ls - &as_).norm() / as_.norm());
    }
    Ok(PolynomialCheck { max_residual: worst, effective_m: k })
}

/// Norm-wise relative error ‖g − g_fd‖/max(‖g‖, 1e-8) between the analytic
/// gradient and central differences with step h·(1 + |x_i|).
pub fn fd_gradient_error(problem: &dyn Problem, x: &[f64], h: f64) -> f64 {
    let g = problem.eval(x).1;
    let mut xp = x.to_vec();
    let mut err = 0.0;
    for i in 0..x.len() {
        let step = h * (1.0 + x[i].abs());
        xp[i] = x[i] + step;
        let fp = problem.eval(&xp).0;
        xp[i] = x[i] - step;
        let fm = problem.eval(&xp).0;
        xp[i] = x[i];
        let d = (fp - fm) / (2.0 * step) - g[i];
        err += d * d;
    }
    let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    err.sqrt() / gn.max(1e-8)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{HouseholderStack, Reflector};

    #[test]
    fn empty_stack_is_identity() {
        assert_eq!(dense_from_stack(&HouseholderStack::identity(4)), DenseMatrix::identity(4));
    }

    #[test]
    fn single_reflector_symmetric_orthogonal() {
        let r = Reflector::from_direction(vec![1.0, -2.0, 0.5, 3.0]);
        let u = dense_from_stack(&HouseholderStack::from_reflectors(4, vec![r]).unwrap());
        assert!(u.asymmetry() < 1e-15);
        assert!(u.matmul(&u).rel_diff(&DenseMatrix::identity(4)) < 1e-14);
    }

    #[test]
    fn worked_two_by_two_projection() {
        let b = DenseMatrix::new(2, vec![2.0, 1.0, 1.0, 2.0]).unwrap();
        let r = 0.5f64.sqrt();
        let u = DenseMatrix::new(2, vec![r, -r, r, r]).unwrap();
        let z = dense_projection(&b, &u).unwrap();
        assert!((z[0] - 3.0).abs() < 1e-14 && (z[1] - 1.0).abs() < 1e-14);
        assert_eq!(dense_projection(&b, &DenseMatrix::identity(2)).unwrap(), vec![2.0, 2.0]);
    }

    #[test]
    fn phi_zero_identity_noop() {
        // With B̃ = I and y = s the BFGS update returns I.
        let s = [1.0, 2.0, -1.0];
        let b = dense_phi_update(&DenseMatrix::identity(3), &s, &s, 0.0).unwrap();
        assert!(b.rel_diff(&DenseMatrix::identity(3)) < 1e-15);
        assert!(matches!(
            dense_phi_update(&DenseMatrix::identity(3), &s, &[-1.0, 0.0, 0.0], 0.0),
            Err(Error::Curvature(_))
        ));
    }

    #[test]
    fn phi_one_is_dfp() {
        let b =
            DenseMatrix::new(4, vec![4.0, 1.0, 0.0, 0.5, 1.0, 3.0, 0.2, 0.0, 0.0, 0.2, 2.0, 0.1, 0.5, 0.0, 0.1, 5.0])
                .unwrap();
        let s = [0.3, -1.0, 0.7, 0.2];
        let y = [1.0, -2.5, 1.9, 1.4];
        let rho = 1.0 / s.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>();
        // (I − ρysᵀ)B(I − ρsyᵀ) + ρyyᵀ
        let left = DenseMatrix::from_fn(4, |i, j| (i == j) as u8 as f64 - rho * y[i] * s[j]);
        let dfp = left.matmul(&b).matmul(&left.transpose());
        let dfp = DenseMatrix::from_fn(4, |i, j| dfp.get(i, j) + rho * y[i] * y[j]);
        assert!(dense_phi_update(&b, &s, &y, 1.0).unwrap().rel_diff(&dfp) < 1e-13);
    }

    #[test]
    fn cg_small_cases() {
        let it = cg_reference(&DenseMatrix::identity(3), &[1.0, 2.0, 3.0], &[0.0; 3], None, 1e-14).unwrap();
        assert_eq!(it.len(), 2);
        let a = DenseMatrix::diagonal(&[1.0, 2.0, 3.0]);
        let it = cg_reference(&a, &[1.0, 1.0, 1.0], &[0.0; 3], None, 1e-13).unwrap();
        assert!(it.len() <= 4);
        let x = it.last().unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 0.5).abs() < 1e-12 && (x[2] - 1.0 / 3.0).abs() < 1e-12);
        let bad = DenseMatrix::diagonal(&[1.0, -1.0]);
        assert!(cg_reference(&bad, &[0.0, 1.0], &[0.0; 2], None, 1e-12).is_err());
    }

    #[test]
    fn cg_residuals_orthogonal() {
        let a = DenseMatrix::from_fn(6, |i, j| if i == j { 4.0 + i as f64 } else { 1.0 / (1.0 + (i + j) as f64) });
        let b = [1.0, -1.0, 2.0, 0.5, 0.0, 3.0];
        let it = cg_reference(&a, &b, &[0.0; 6], None, 1e-13).unwrap();
        let res: Vec<Vec<f64>> =
            it.iter().map(|x| a.matvec(x).iter().zip(&b).map(|(ax, bi)| bi - ax).collect()).collect();
        for i in 0..res.len() {
            for j in 0..i {
                let d: f64 = res[i].iter().zip(&res[j]).map(|(p, q)| p * q).sum();
                let scale =
                    res[i].iter().map(|v| v * v).sum::<f64>().sqrt() * res[j].iter().map(|v| v * v).sum::<f64>().sqrt();
                let floor = 1e-12 * res[0].iter().map(|v| v * v).sum::<f64>();
                assert!(d.abs() <= 1e-8 * scale + floor, "r{i}·r{j} = {d:e}");
            }
        }
    }

    #[test]
    fn polynomial_preservation_orders() {
        let a =
            DenseMatrix::from_fn(
                8,
                |i, j| if i == j { 1.0 + i as f64 } else { 0.3 / (1.0 + (i as f64 - j as f64).abs()) },
            );
        let s: Vec<f64> = (0..8).map(|i| (i as f64 * 0.7).sin() + 0.1).collect();
        assert_eq!(polynomial_preservation_check(&a, &s, 1).unwrap().max_residual, 0.0);
        assert!(polynomial_preservation_check(&a, &s, 2).unwrap().max_residual <= 1e-10);
        assert!(polynomial_preservation_check(&a, &s, 3).unwrap().max_residual <= 1e-9);
        let e = [1.0, 0.0, 0.0];
        let r = polynomial_preservation_check(&DenseMatrix::diagonal(&[1.0, 2.0, 3.0]), &e, 3).unwrap();
        assert_eq!(r.effective_m, 1);
    }
}
