//! Matrix algebras sd U = {U d(z) Uᵀ} with U a product of Householder
//! reflectors, their Frobenius-best projections, and the adaptive choices of
//! U that keep the projection faithful along chosen directions.

mod krylov;
mod projection;

pub use krylov::{
    arnoldi2, arnoldi2_with, build_algebra_eigvec, build_algebra_krylov2, build_algebra_qt, KrylovPair,
    DEFAULT_TOLL_REL,
};
pub use projection::{project, ProjectionSource, RankOne};

use crate::error::{check_dim, Error, Result};
use crate::linalg::HouseholderStack;
use crate::ops;

/// Eigenvalues at or below `PD_EPS · max z` count as a loss of positive
/// definiteness.
pub const PD_EPS: f64 = 1e-14;

/// L = U d(z) Uᵀ.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralAlgebra {
    stack: HouseholderStack,
    z: Vec<f64>,
}

impl SpectralAlgebra {
    pub fn new(stack: HouseholderStack, z: Vec<f64>) -> Result<Self> {
        check_dim(stack.dim(), z.len())?;
        Ok(SpectralAlgebra { stack, z })
    }

    pub fn identity(n: usize) -> Self {
        SpectralAlgebra { stack: HouseholderStack::identity(n), z: vec![1.0; n] }
    }

    pub fn dim(&self) -> usize {
        self.z.len()
    }

    pub fn stack(&self) -> &HouseholderStack {
        &self.stack
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.z
    }

    /// σL, same algebra.
    pub fn scaled(&self, sigma: f64) -> Self {
        let z = crate::linalg::scaled(sigma, &self.z);
        SpectralAlgebra { stack: self.stack.clone(), z }
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        let mut out = x.to_vec();
        self.matvec_in_place(&mut out);
        Ok(out)
    }

    pub(crate) fn matvec_in_place(&self, x: &mut [f64]) {
        self.stack.apply_t_in_place(x);
        for (xi, zi) in x.iter_mut().zip(&self.z) {
            *xi *= zi;
        }
        ops::count(x.len());
        self.stack.apply_in_place(x);
    }

    pub fn solve(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.dim(), x.len())?;
        self.check_pd()?;
        let mut out = x.to_vec();
        self.stack.apply_t_in_place(&mut out);
        for (xi, zi) in out.iter_mut().zip(&self.z) {
            *xi /= zi;
        }
        ops::count(out.len());
        self.stack.apply_in_place(&mut out);
        Ok(out)
    }

    /// xᵀLx = Σ z_i (Uᵀx)_i²
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        let mut u = x.to_vec();
        self.stack.apply_t_in_place(&mut u);
        ops::count(2 * u.len());
        Ok(u.iter().zip(&self.z).map(|(a, z)| z * a * a).sum())
    }

    pub fn trace(&self) -> f64 {
        self.z.iter().sum()
    }

    /// Σ log z_i; −∞ or NaN when some z_i ≤ 0.
    pub fn logdet(&self) -> f64 {
        self.z.iter().map(|z| z.ln()).sum()
    }

    pub fn check_pd(&self) -> Result<()> {
        let zmax = self.z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let floor = PD_EPS * zmax;
        match self.z.iter().position(|&z| !(z > floor) || !z.is_finite()) {
            None if zmax > 0.0 => Ok(()),
            Some(i) => Err(Error::PdLoss(format!("eigenvalue z[{i}] = {:e}", self.z[i]))),
            None => Err(Error::PdLoss("no positive eigenvalue".into())),
        }
    }
}

/// Free-function forms of the [`SpectralAlgebra`] methods.
pub fn algebra_matvec(l: &SpectralAlgebra, x: &[f64]) -> Result<Vec<f64>> {
    l.matvec(x)
}

pub fn algebra_solve(l: &SpectralAlgebra, x: &[f64]) -> Result<Vec<f64>> {
    l.solve(x)
}

pub fn algebra_trace(l: &SpectralAlgebra) -> f64 {
    l.trace()
}

pub fn algebra_logdet(l: &SpectralAlgebra) -> f64 {
    l.logdet()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, norm, unit, Reflector};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_algebra(seed: u64, n: usize, p: usize) -> SpectralAlgebra {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let refl =
            (0..p).map(|_| Reflector::from_direction((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
        let z = (0..n).map(|_| rng.gen_range(0.5..4.0)).collect();
        SpectralAlgebra::new(HouseholderStack::from_reflectors(n, refl).unwrap(), z).unwrap()
    }

    #[test]
    fn identity_algebra_is_identity() {
        let l = SpectralAlgebra::identity(4);
        let x = [1.0, -2.0, 3.0, 0.5];
        assert_eq!(l.matvec(&x).unwrap(), x);
        assert_eq!(l.trace(), 4.0);
        assert_eq!(l.logdet(), 0.0);
    }

    #[test]
    fn solve_inverts_matvec() {
        let l = random_algebra(1, 9, 3);
        let x: Vec<f64> = (0..9).map(|i| (i as f64).sin()).collect();
        let back = l.solve(&l.matvec(&x).unwrap()).unwrap();
        assert!(dist(&back, &x) < 1e-13 * norm(&x));
    }

    #[test]
    fn trace_matches_dense() {
        let l = random_algebra(2, 10, 2);
        let dense_trace: f64 = (0..10).map(|i| l.matvec(&unit(10, i)).unwrap()[i]).sum();
        assert!((dense_trace - l.trace()).abs() < 1e-12 * l.trace());
    }

    #[test]
    fn solve_rejects_non_pd() {
        let l = SpectralAlgebra::new(HouseholderStack::identity(3), vec![1.0, 0.0, 2.0]).unwrap();
        assert!(matches!(l.solve(&[1.0, 1.0, 1.0]), Err(Error::PdLoss(_))));
    }
}
