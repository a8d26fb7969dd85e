//! Step-length selection: a Moré–Thuente strong-Wolfe search for general
//! objectives and the closed-form minimizer along a line for quadratics.

mod more_thuente;

pub use more_thuente::strong_wolfe;

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineSearchParams {
    /// Sufficient-decrease constant.
    pub ftol: f64,
    /// Curvature constant.
    pub gtol: f64,
    /// Relative width below which the bracketing interval is degenerate.
    pub xtol: f64,
    pub stpmin: f64,
    pub stpmax: f64,
    pub maxfev: usize,
}

impl Default for LineSearchParams {
    fn default() -> Self {
        LineSearchParams { ftol: 1e-4, gtol: 0.9, xtol: 1e-15, stpmin: 1e-15, stpmax: 1e15, maxfev: 20 }
    }
}

impl LineSearchParams {
    pub fn validate(&self) -> Result<()> {
        let ok = self.ftol > 0.0
            && self.ftol < 0.5
            && self.ftol < self.gtol
            && self.gtol < 1.0
            && self.xtol >= 0.0
            && self.stpmin >= 0.0
            && self.stpmin < self.stpmax
            && self.maxfev >= 1;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid line-search parameters {self:?}")))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LineSearchStatus {
    Converged,
    MaxFev,
    DegenerateInterval,
}

#[derive(Debug, Clone)]
pub struct LineSearchResult {
    pub step: f64,
    pub x: Vec<f64>,
    pub f: f64,
    pub g: Vec<f64>,
    pub n_fev: usize,
    pub status: LineSearchStatus,
}

impl LineSearchResult {
    /// f ≤ f0 + ftol·λ·g0ᵀd.
    pub fn armijo_holds(&self, f0: f64, dg0: f64, ftol: f64) -> bool {
        self.f <= f0 + ftol * self.step * dg0
    }
}

/// λ = −gᵀd / dᵀAd, minimizing ½xᵀAx − bᵀx along d.
pub fn exact_quadratic_step(a_action: impl Fn(&[f64]) -> Vec<f64>, g: &[f64], d: &[f64]) -> Result<f64> {
    let ad = a_action(d);
    exact_step_from_ad(g, d, &ad)
}

/// As [`exact_quadratic_step`] with Ad already available.
pub fn exact_step_from_ad(g: &[f64], d: &[f64], ad: &[f64]) -> Result<f64> {
    let dad = dot(d, ad);
    if !(dad > 0.0) {
        return Err(Error::NonConvexDirection(dad));
    }
    Ok(-dot(g, d) / dad)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_step_examples() {
        let lam = exact_quadratic_step(|x| x.to_vec(), &[1.0, -2.0], &[-1.0, 2.0]).unwrap();
        assert_eq!(lam, 1.0);
        let a = |x: &[f64]| vec![x[0], 2.0 * x[1]];
        let lam = exact_quadratic_step(a, &[1.0, 1.0], &[-1.0, -1.0]).unwrap();
        assert!((lam - 2.0 / 3.0).abs() < 1e-15);
        let neg = |x: &[f64]| vec![-x[0]];
        assert!(matches!(exact_quadratic_step(neg, &[1.0], &[-1.0]), Err(Error::NonConvexDirection(_))));
    }

    #[test]
    fn default_params_are_valid() {
        LineSearchParams::default().validate().unwrap();
        let bad = LineSearchParams { gtol: 1e-5, ..Default::default() };
        assert!(bad.validate().is_err());
    }
}
