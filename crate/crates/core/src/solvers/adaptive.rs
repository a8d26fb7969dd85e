use super::{Branch, Engine, IterationRecord, SolverConfig, Step};
use crate::algebra::{arnoldi2_with, build_algebra_eigvec, build_algebra_krylov2, build_algebra_qt, SpectralAlgebra};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dist, dot, norm, scaled, HouseholderStack};
use crate::model::{sigma_from_parts, HessianModel};
use crate::ops;

/// ḡ below this fraction of ‖g‖ is treated as zero.
const GBAR_EPS: f64 = 1e-12;

/// U for the direction pair (w, Bw): Krylov construction, or the
/// eigenvector one when w is (numerically) an eigenvector of B. With
/// `g_extra`, the part of it orthogonal to the constructed columns is
/// fixed as a further eigenvector.
fn build_u(
    model: &HessianModel,
    w: &[f64],
    bw: &[f64],
    toll_rel: f64,
    g_extra: Option<&[f64]>,
) -> Result<(HouseholderStack, Branch, Option<Vec<f64>>)> {
    let kp = arnoldi2_with(w, bw, |v2| model.quad_form(v2).unwrap_or(f64::NAN), toll_rel);
    match kp {
        Ok(kp) => {
            if let Some(g) = g_extra {
                if let Some(gbar) = orthogonal_part(g, &[&kp.v1, &kp.v2]) {
                    let u = build_algebra_qt(&kp, &gbar)?;
                    return Ok((u, Branch::Qt3, Some(gbar)));
                }
            }
            Ok((build_algebra_krylov2(&kp)?, Branch::Krylov2, None))
        }
        Err(Error::KrylovBreakdown { .. }) => {
            let gbar = match g_extra {
                Some(g) => {
                    let nw = norm(w);
                    ops::count(1);
                    let v1 = scaled(1.0 / nw, w);
                    orthogonal_part(g, &[&v1])
                }
                None => None,
            };
            Ok((build_algebra_eigvec(w, gbar.as_deref())?, Branch::Eigvec, gbar))
        }
        Err(e) => Err(e),
    }
}

/// g minus its projection on the orthonormal `basis`, re-orthogonalized
/// once when cancellation is severe; `None` when it vanishes.
fn orthogonal_part(g: &[f64], basis: &[&[f64]]) -> Option<Vec<f64>> {
    let gn = norm(g);
    let mut r = g.to_vec();
    for v in basis {
        let c = dot(v, &r);
        axpy(-c, v, &mut r);
    }
    let mut rn = norm(&r);
    if rn < 0.5 * gn {
        for v in basis {
            let c = dot(v, &r);
            axpy(-c, v, &mut r);
        }
        rn = norm(&r);
    }
    (rn > GBAR_EPS * gn && rn.is_finite()).then_some(r)
}

/// ‖Lḡ − αḡ‖/(α‖ḡ‖) with α the Rayleigh quotient.
fn eigen_residual(l: &SpectralAlgebra, gbar: &[f64]) -> f64 {
    ops::paused(|| {
        let lg = l.matvec(gbar).expect("dimension checked");
        let nn = dot(gbar, gbar);
        let alpha = dot(gbar, &lg) / nn;
        let r: Vec<f64> = lg.iter().zip(gbar).map(|(a, b)| a - alpha * b).collect();
        norm(&r) / (alpha.abs() * nn.sqrt())
    })
}

/// Secant-form engine for the adaptive methods (and the generic driver's
/// secant variant): direction from B_{k+1} = Φ(L^(k)_{B_k}, s, y, φ).
pub(crate) struct SecantEngine {
    n: usize,
    model: HessianModel,
    phi: f64,
    scaled: bool,
    toll_rel: f64,
    qt: bool,
}

impl SecantEngine {
    pub fn new(n: usize, cfg: &SolverConfig, qt: bool) -> Self {
        SecantEngine {
            n,
            model: HessianModel::identity(n),
            phi: cfg.phi,
            scaled: cfg.scaled,
            toll_rel: cfg.toll_rel,
            qt,
        }
    }
}

impl Engine for SecantEngine {
    fn direction(&mut self, g: &[f64], _rec: &mut IterationRecord) -> Result<Vec<f64>> {
        let mut d = self.model.solve(g)?;
        d.iter_mut().for_each(|v| *v = -*v);
        Ok(d)
    }

    fn update(&mut self, st: &Step<'_>, rec: &mut IterationRecord) -> Result<()> {
        let bs = self.model.matvec(st.s)?;
        rec.trace_b = Some(self.model.trace());
        rec.logdet_b = Some(self.model.logdet());

        let g_extra = self.qt.then_some(st.g_new);
        let (u, branch, gbar) = build_u(&self.model, st.s, &bs, self.toll_rel, g_extra)?;
        rec.branch = Some(branch);
        let l = self.model.project_onto(&u)?;
        l.check_pd()?;
        rec.trace_l = Some(l.trace());
        rec.logdet_l = Some(l.logdet());
        rec.cond2_residual = Some(ops::paused(|| {
            let ls = l.matvec(st.s).expect("dimension checked");
            dist(&ls, &bs) / norm(&bs)
        }));
        if let Some(gb) = &gbar {
            rec.qt_residual = Some(eigen_residual(&l, gb));
        }

        let (l, ls) = if self.scaled {
            let sls = dot(st.s, &bs);
            let sigma = sigma_from_parts(st.ys, sls, self.model.logdet(), l.logdet(), self.n);
            rec.sigma = Some(sigma);
            rec.logdet_b_unscaled = Some(l.logdet() + st.ys.ln() - sls.ln());
            (l.scaled(sigma), scaled(sigma, &bs))
        } else {
            (l, bs)
        };
        let next = HessianModel::broyden_update_with_ls(l, st.s, st.y, self.phi, ls)?;
        rec.psi = next.psi();
        rec.powell_ratio = next.powell_ratio();
        rec.logdet_b_next = Some(next.logdet());
        self.model = next;
        Ok(())
    }

    fn reset(&mut self) {
        self.model = HessianModel::identity(self.n);
    }

    fn is_identity(&self) -> bool {
        !self.model.is_updated()
            && self.model.base().stack().is_empty()
            && self.model.base().eigenvalues().iter().all(|z| *z == 1.0)
    }
}

/// Non-secant engine: B_{k+1} = Φ(B̃_k, s, y, φ) is projected before use,
/// and the direction comes from the projection B̃_{k+1}. The algebra is
/// built on the Krylov space of the secant direction u = B_{k+1}⁻¹g, so
/// B̃_{k+1}u = g and both forms yield the same direction.
pub(crate) struct NonSecantEngine {
    n: usize,
    btilde: SpectralAlgebra,
    model: Option<HessianModel>,
    phi: f64,
    toll_rel: f64,
}

impl NonSecantEngine {
    pub fn new(n: usize, cfg: &SolverConfig) -> Self {
        NonSecantEngine { n, btilde: SpectralAlgebra::identity(n), model: None, phi: cfg.phi, toll_rel: cfg.toll_rel }
    }
}

impl Engine for NonSecantEngine {
    fn direction(&mut self, g: &[f64], rec: &mut IterationRecord) -> Result<Vec<f64>> {
        if let Some(model) = self.model.take() {
            let u_dir = model.solve(g)?;
            rec.trace_b = Some(model.trace());
            rec.logdet_b = Some(model.logdet());
            // Seed with d = −u: the secant form sees s = λd.
            let d: Vec<f64> = u_dir.iter().map(|v| -v).collect();
            let bd: Vec<f64> = g.iter().map(|v| -v).collect();
            let (u, branch, _) = build_u(&model, &d, &bd, self.toll_rel, None)?;
            rec.branch = Some(branch);
            let l = model.project_onto(&u)?;
            l.check_pd()?;
            rec.trace_l = Some(l.trace());
            rec.logdet_l = Some(l.logdet());
            rec.cond2_residual = Some(ops::paused(|| {
                let lu = l.matvec(&u_dir).expect("dimension checked");
                dist(&lu, g) / norm(g)
            }));
            self.btilde = l;
        }
        let mut d = self.btilde.solve(g)?;
        d.iter_mut().for_each(|v| *v = -*v);
        Ok(d)
    }

    fn update(&mut self, st: &Step<'_>, rec: &mut IterationRecord) -> Result<()> {
        let ls = self.btilde.matvec(st.s)?;
        rec.ns_residual = Some(ops::paused(|| {
            let target: Vec<f64> = st.g_old.iter().map(|v| -st.lambda * v).collect();
            dist(&ls, &target) / norm(&target)
        }));
        let next = HessianModel::broyden_update_with_ls(self.btilde.clone(), st.s, st.y, self.phi, ls)?;
        rec.psi = next.psi();
        rec.powell_ratio = next.powell_ratio();
        rec.logdet_b_next = Some(next.logdet());
        self.model = Some(next);
        Ok(())
    }

    fn reset(&mut self) {
        self.btilde = SpectralAlgebra::identity(self.n);
        self.model = None;
    }

    fn is_identity(&self) -> bool {
        self.model.is_none() && self.btilde.stack().is_empty() && self.btilde.eigenvalues().iter().all(|z| *z == 1.0)
    }
}
