//! Implicit Broyden-class Hessian approximations
//! B = Φ(L, s, y, φ) = L − Ls(Ls)ᵀ/sᵀLs + yyᵀ/yᵀs + φ·sᵀLs·vvᵀ,
//! v = y/yᵀs − Ls/sᵀLs, with L an algebra element.

use crate::algebra::{project, ProjectionSource, RankOne, SpectralAlgebra};
use crate::error::{check_dim, Error, Result};
use crate::linalg::HouseholderStack;
use crate::linalg::{axpy, dot};
use crate::ops;

/// Relative backward-error bound for the debug-build solve check.
#[cfg(debug_assertions)]
const SOLVE_RESIDUAL_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
struct RankTwo {
    s: Vec<f64>,
    y: Vec<f64>,
    phi: f64,
    ls: Vec<f64>,
    sls: f64,
    ys: f64,
    yy: f64,
    yls: f64,
    lsls: f64,
    /// φ > 0 only: v and L⁻¹y.
    v: Option<Vec<f64>>,
    linv_y: Option<Vec<f64>>,
}

/// B = Φ(L, s, y, φ), or just L when no update has been applied.
#[derive(Debug, Clone)]
pub struct HessianModel {
    base: SpectralAlgebra,
    update: Option<RankTwo>,
    trace_val: f64,
    logdet_val: f64,
}

impl HessianModel {
    pub fn identity(n: usize) -> Self {
        Self::from_algebra(SpectralAlgebra::identity(n))
    }

    pub fn from_algebra(base: SpectralAlgebra) -> Self {
        let trace_val = base.trace();
        let logdet_val = base.logdet();
        HessianModel { base, update: None, trace_val, logdet_val }
    }

    /// Φ(base, s, y, φ).
    pub fn broyden_update(base: SpectralAlgebra, s: &[f64], y: &[f64], phi: f64) -> Result<Self> {
        check_dim(base.dim(), s.len())?;
        let ls = base.matvec(s)?;
        Self::broyden_update_with_ls(base, s, y, phi, ls)
    }

    /// As [`HessianModel::broyden_update`] with `ls = base·s` supplied by the
    /// caller (it is often known without a product).
    pub fn broyden_update_with_ls(base: SpectralAlgebra, s: &[f64], y: &[f64], phi: f64, ls: Vec<f64>) -> Result<Self> {
        let n = base.dim();
        check_dim(n, s.len())?;
        check_dim(n, y.len())?;
        check_dim(n, ls.len())?;
        if !(0.0..1.0).contains(&phi) {
            return Err(Error::InvalidArgument(format!("phi = {phi} outside [0, 1)")));
        }
        let ys = dot(y, s);
        if !(ys > 0.0) {
            return Err(Error::Curvature(ys));
        }
        let sls = dot(s, &ls);
        if !(sls > 0.0) {
            return Err(Error::PdLoss(format!("sᵀLs = {sls:e}")));
        }
        let yy = dot(y, y);
        let yls = dot(y, &ls);
        let lsls = dot(&ls, &ls);

        let trace_val =
            base.trace() + yy / ys - (1.0 - phi) * lsls / sls + phi * (yy / ys) * (sls / ys) - 2.0 * phi * yls / ys;
        let mut logdet_val = base.logdet() + ys.ln() - sls.ln();

        let (v, linv_y) = if phi > 0.0 {
            let v = crate::linalg::lincomb(1.0 / ys, y, -1.0 / sls, &ls);
            let w = base.solve(y)?;
            let k = capacitance(phi, sls, ys, dot(y, &w));
            logdet_val = base.logdet() + det2(&k).ln();
            (Some(v), Some(w))
        } else {
            (None, None)
        };
        ops::count(12);

        let update = RankTwo { s: s.to_vec(), y: y.to_vec(), phi, ls, sls, ys, yy, yls, lsls, v, linv_y };
        Ok(HessianModel { base, update: Some(update), trace_val, logdet_val })
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    /// The algebra L the update was applied to.
    pub fn base(&self) -> &SpectralAlgebra {
        &self.base
    }

    pub fn is_updated(&self) -> bool {
        self.update.is_some()
    }

    pub fn phi(&self) -> f64 {
        self.update.as_ref().map_or(0.0, |u| u.phi)
    }

    pub fn s(&self) -> Option<&[f64]> {
        self.update.as_ref().map(|u| u.s.as_slice())
    }

    pub fn y(&self) -> Option<&[f64]> {
        self.update.as_ref().map(|u| u.y.as_slice())
    }

    /// L·s as cached at construction.
    pub fn ls(&self) -> Option<&[f64]> {
        self.update.as_ref().map(|u| u.ls.as_slice())
    }

    pub fn ys(&self) -> Option<f64> {
        self.update.as_ref().map(|u| u.ys)
    }

    pub fn sls(&self) -> Option<f64> {
        self.update.as_ref().map(|u| u.sls)
    }

    /// ‖y‖²/yᵀs.
    pub fn powell_ratio(&self) -> Option<f64> {
        self.update.as_ref().map(|u| u.yy / u.ys)
    }

    /// [ (‖y‖²/yᵀs)(sᵀLs/yᵀs) − 2yᵀLs/yᵀs ] · sᵀLs/‖Ls‖².
    pub fn psi(&self) -> Option<f64> {
        self.update.as_ref().map(|u| ((u.yy / u.ys) * (u.sls / u.ys) - 2.0 * u.yls / u.ys) * (u.sls / u.lsls))
    }

    pub fn trace(&self) -> f64 {
        self.trace_val
    }

    pub fn logdet(&self) -> f64 {
        self.logdet_val
    }

    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = self.base.matvec(x)?;
        if let Some(u) = &self.update {
            let a = dot(&u.ls, x) / u.sls;
            let b = dot(&u.y, x) / u.ys;
            axpy(-a, &u.ls, &mut out);
            axpy(b, &u.y, &mut out);
            if let Some(v) = &u.v {
                let c = u.phi * u.sls * dot(v, x);
                axpy(c, v, &mut out);
            }
            ops::count(3);
        }
        Ok(out)
    }

    /// xᵀBx without forming Bx.
    pub fn quad_form(&self, x: &[f64]) -> Result<f64> {
        let mut q = self.base.quad_form(x)?;
        if let Some(u) = &self.update {
            let a = dot(&u.ls, x);
            let b = dot(&u.y, x);
            q += b * b / u.ys - a * a / u.sls;
            if let Some(v) = &u.v {
                let c = dot(v, x);
                q += u.phi * u.sls * c * c;
            }
            ops::count(7);
        }
        Ok(q)
    }

    /// B⁻¹g.
    pub fn solve(&self, g: &[f64]) -> Result<Vec<f64>> {
        let out = match &self.update {
            None => self.base.solve(g)?,
            Some(u) if u.phi == 0.0 => {
                // (I − ρsyᵀ) L⁻¹ (I − ρysᵀ) g + ρssᵀg
                let rho = 1.0 / u.ys;
                let a = dot(&u.s, g);
                let mut q = g.to_vec();
                axpy(-rho * a, &u.y, &mut q);
                let mut r = self.base.solve(&q)?;
                let b = dot(&u.y, &r);
                axpy(rho * (a - b), &u.s, &mut r);
                ops::count(3);
                r
            }
            Some(u) => {
                // Woodbury over C = [Ls, y]; L⁻¹C = [s, L⁻¹y].
                let w = u.linv_y.as_deref().expect("φ > 0 caches L⁻¹y");
                let mut r = self.base.solve(g)?;
                let t = [dot(&u.s, g), dot(&u.y, &r)];
                let k = capacitance(u.phi, u.sls, u.ys, dot(&u.y, w));
                let m = middle(u.phi, u.sls, u.ys);
                let mt = [m[0][0] * t[0] + m[0][1] * t[1], m[1][0] * t[0] + m[1][1] * t[1]];
                let c = solve2(&k, mt)?;
                axpy(-c[0], &u.s, &mut r);
                axpy(-c[1], w, &mut r);
                ops::count(30);
                r
            }
        };
        #[cfg(debug_assertions)]
        self.check_solve_residual(g, &out)?;
        Ok(out)
    }

    #[cfg(debug_assertions)]
    fn check_solve_residual(&self, g: &[f64], x: &[f64]) -> Result<()> {
        ops::paused(|| {
            let bx = self.matvec(x)?;
            let res = crate::linalg::dist(&bx, g);
            let scale = self.trace_val.abs() * crate::linalg::norm(x) + crate::linalg::norm(g);
            if res > SOLVE_RESIDUAL_TOL * scale {
                return Err(Error::PdLoss(format!("solve residual {res:e} exceeds backward-error bound ({scale:e})")));
            }
            Ok(())
        })
    }

    /// B as an algebra plus symmetric rank-one terms.
    pub fn projection_source(&self) -> ProjectionSource<'_> {
        let mut terms = Vec::new();
        if let Some(u) = &self.update {
            terms.push(RankOne::symmetric(-1.0 / u.sls, &u.ls));
            terms.push(RankOne::symmetric(1.0 / u.ys, &u.y));
            if let Some(v) = &u.v {
                terms.push(RankOne::symmetric(u.phi * u.sls, v));
            }
        }
        ProjectionSource::Structured { base: &self.base, terms }
    }

    /// Best approximation of B in sd U.
    pub fn project_onto(&self, u: &HouseholderStack) -> Result<SpectralAlgebra> {
        project(&self.projection_source(), u)
    }

    /// (trace, logdet) from the update recursions.
    pub fn trace_det_report(&self) -> (f64, f64) {
        (self.trace_val, self.logdet_val)
    }
}

/// Coefficients of Φ − L in the basis C = [Ls, y].
fn middle(phi: f64, sls: f64, ys: f64) -> [[f64; 2]; 2] {
    let off = -phi / ys;
    [[(phi - 1.0) / sls, off], [off, 1.0 / ys + phi * sls / (ys * ys)]]
}

/// I + M·CᵀL⁻¹C with CᵀL⁻¹C = [[sᵀLs, yᵀs], [yᵀs, yᵀL⁻¹y]].
fn capacitance(phi: f64, sls: f64, ys: f64, ywy: f64) -> [[f64; 2]; 2] {
    let m = middle(phi, sls, ys);
    let g = [[sls, ys], [ys, ywy]];
    let mut k = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            k[i][j] = (i == j) as u8 as f64 + m[i][0] * g[0][j] + m[i][1] * g[1][j];
        }
    }
    k
}

fn det2(k: &[[f64; 2]; 2]) -> f64 {
    k[0][0] * k[1][1] - k[0][1] * k[1][0]
}

fn solve2(k: &[[f64; 2]; 2], b: [f64; 2]) -> Result<[f64; 2]> {
    let det = det2(k);
    let scale = k.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(det.abs() > 1e-14 * scale * scale) {
        return Err(Error::PdLoss(format!("singular capacitance matrix (det = {det:e})")));
    }
    Ok([(k[1][1] * b[0] - k[0][1] * b[1]) / det, (k[0][0] * b[1] - k[1][0] * b[0]) / det])
}

pub fn broyden_update(base: SpectralAlgebra, s: &[f64], y: &[f64], phi: f64) -> Result<HessianModel> {
    HessianModel::broyden_update(base, s, y, phi)
}

pub fn model_matvec(m: &HessianModel, x: &[f64]) -> Result<Vec<f64>> {
    m.matvec(x)
}

pub fn model_solve(m: &HessianModel, g: &[f64]) -> Result<Vec<f64>> {
    m.solve(g)
}

pub fn trace_det_report(m: &HessianModel) -> (f64, f64) {
    m.trace_det_report()
}

/// σ = max{ min{yᵀs/sᵀLs, 1}, exp((logdet B − logdet L)/n) }, clamped to 1.
pub fn sigma_scale(base: &SpectralAlgebra, s: &[f64], y: &[f64], logdet_b: f64) -> Result<f64> {
    check_dim(base.dim(), s.len())?;
    check_dim(base.dim(), y.len())?;
    let sls = base.quad_form(s)?;
    let ys = dot(y, s);
    if !(ys > 0.0) {
        return Err(Error::Curvature(ys));
    }
    Ok(sigma_from_parts(ys, sls, logdet_b, base.logdet(), base.dim()))
}

pub fn sigma_from_parts(ys: f64, sls: f64, logdet_b: f64, logdet_l: f64, n: usize) -> f64 {
    let ratio = (ys / sls).min(1.0);
    let det_term = ((logdet_b - logdet_l) / n as f64).exp();
    ratio.max(det_term).min(1.0)
}
