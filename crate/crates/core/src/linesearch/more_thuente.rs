use super::{LineSearchParams, LineSearchResult, LineSearchStatus};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::ops;

const XTRAPL: f64 = 1.1;
const XTRAPU: f64 = 4.0;

/// Moré–Thuente search for λ satisfying the strong Wolfe conditions
/// f(x+λd) ≤ f0 + ftol·λ·g0ᵀd and |g(x+λd)ᵀd| ≤ gtol·|g0ᵀd|.
///
/// The first trial is λ = 1. `eval` is not counted by [`crate::ops`].
/// On `MaxFev` and `DegenerateInterval` the returned point is the best one
/// evaluated (lowest f among Armijo points, else lowest f overall).
pub fn strong_wolfe(
    eval: impl Fn(&[f64]) -> (f64, Vec<f64>),
    x: &[f64],
    d: &[f64],
    f0: f64,
    g0: &[f64],
    params: &LineSearchParams,
) -> Result<LineSearchResult> {
    params.validate()?;
    let dg0 = dot(g0, d);
    if !(dg0 < 0.0) {
        return Err(Error::InvalidArgument(format!("not a descent direction: g0ᵀd = {dg0:e}")));
    }
    let gtest = params.ftol * dg0;
    let trial = |stp: f64| {
        let xt: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + stp * di).collect();
        ops::count(x.len());
        let (f, g) = ops::paused(|| eval(&xt));
        let dg = dot(&g, d);
        Point { stp, x: xt, f, g, dg }
    };

    let mut s = Search {
        brackt: false,
        stage1: true,
        width: params.stpmax - params.stpmin,
        width1: 2.0 * (params.stpmax - params.stpmin),
        stx: 0.0,
        fx: f0,
        gx: dg0,
        sty: 0.0,
        fy: f0,
        gy: dg0,
        stmin: 0.0,
        stmax: 1.0 + XTRAPU,
    };
    let mut stp = 1.0f64.clamp(params.stpmin, params.stpmax);
    let mut best: Option<Point> = None;
    let mut n_fev = 0;

    loop {
        let mut p = trial(stp);
        n_fev += 1;
        // Non-finite values: retreat toward the best bracket end.
        while !(p.f.is_finite() && p.dg.is_finite()) && n_fev < params.maxfev {
            stp = s.stx + 0.5 * (stp - s.stx);
            p = trial(stp);
            n_fev += 1;
        }
        let ftest = f0 + stp * gtest;
        let armijo = p.f <= ftest;
        let finite = p.f.is_finite() && p.dg.is_finite();
        if finite {
            best = Some(match best.take() {
                None => p.clone(),
                Some(b) => {
                    let b_armijo = b.f <= f0 + b.stp * gtest;
                    if (armijo && !b_armijo) || (armijo == b_armijo && p.f < b.f) {
                        p.clone()
                    } else {
                        b
                    }
                }
            });
        }
        if finite && armijo && p.dg.abs() <= params.gtol * (-dg0) {
            return Ok(p.into_result(n_fev, LineSearchStatus::Converged));
        }
        let degenerate = !finite
            || (s.brackt && (stp <= s.stmin || stp >= s.stmax))
            || (s.brackt && s.stmax - s.stmin <= params.xtol * s.stmax)
            || (stp == params.stpmax && armijo && p.dg <= gtest)
            || (stp == params.stpmin && (!armijo || p.dg >= gtest));
        if degenerate {
            return Ok(finish(best, x, f0, g0, n_fev, LineSearchStatus::DegenerateInterval));
        }
        if n_fev >= params.maxfev {
            return Ok(finish(best, x, f0, g0, n_fev, LineSearchStatus::MaxFev));
        }

        if s.stage1 && armijo && p.dg >= 0.0 {
            s.stage1 = false;
        }
        if s.stage1 && p.f <= s.fx && !armijo {
            // Modified function ψ(λ) = f(λ) − f0 − λ·gtest.
            let mut fm = p.f - stp * gtest;
            let mut fxm = s.fx - s.stx * gtest;
            let mut fym = s.fy - s.sty * gtest;
            let gm = p.dg - gtest;
            let mut gxm = s.gx - gtest;
            let mut gym = s.gy - gtest;
            stp = dcstep(
                &mut s.stx,
                &mut fxm,
                &mut gxm,
                &mut s.sty,
                &mut fym,
                &mut gym,
                stp,
                &mut fm,
                gm,
                &mut s.brackt,
                s.stmin,
                s.stmax,
            );
            s.fx = fxm + s.stx * gtest;
            s.fy = fym + s.sty * gtest;
            s.gx = gxm + gtest;
            s.gy = gym + gtest;
        } else {
            let mut fp = p.f;
            stp = dcstep(
                &mut s.stx,
                &mut s.fx,
                &mut s.gx,
                &mut s.sty,
                &mut s.fy,
                &mut s.gy,
                stp,
                &mut fp,
                p.dg,
                &mut s.brackt,
                s.stmin,
                s.stmax,
            );
        }

        if s.brackt {
            if (s.sty - s.stx).abs() >= 0.66 * s.width1 {
                stp = s.stx + 0.5 * (s.sty - s.stx);
            }
            s.width1 = s.width;
            s.width = (s.sty - s.stx).abs();
            s.stmin = s.stx.min(s.sty);
            s.stmax = s.stx.max(s.sty);
        } else {
            s.stmin = stp + XTRAPL * (stp - s.stx);
            s.stmax = stp + XTRAPU * (stp - s.stx);
        }
        stp = stp.clamp(params.stpmin, params.stpmax);
        if s.brackt && (stp <= s.stmin || stp >= s.stmax || s.stmax - s.stmin <= params.xtol * s.stmax) {
            stp = s.stx;
        }
    }
}

#[derive(Debug, Clone)]
struct Point {
    stp: f64,
    x: Vec<f64>,
    f: f64,
    g: Vec<f64>,
    dg: f64,
}

impl Point {
    fn into_result(self, n_fev: usize, status: LineSearchStatus) -> LineSearchResult {
        LineSearchResult { step: self.stp, x: self.x, f: self.f, g: self.g, n_fev, status }
    }
}

fn finish(
    best: Option<Point>,
    x: &[f64],
    f0: f64,
    g0: &[f64],
    n_fev: usize,
    status: LineSearchStatus,
) -> LineSearchResult {
    match best {
        Some(p) => p.into_result(n_fev, status),
        None => LineSearchResult { step: 0.0, x: x.to_vec(), f: f0, g: g0.to_vec(), n_fev, status },
    }
}

struct Search {
    brackt: bool,
    stage1: bool,
    width: f64,
    width1: f64,
    stx: f64,
    fx: f64,
    gx: f64,
    sty: f64,
    fy: f64,
    gy: f64,
    stmin: f64,
    stmax: f64,
}

/// One safeguarded step of the Moré–Thuente interval update. Returns the
/// next trial step and updates the bracket [stx, sty] in place.
#[allow(clippy::too_many_arguments)]
fn dcstep(
    stx: &mut f64,
    fx: &mut f64,
    dx: &mut f64,
    sty: &mut f64,
    fy: &mut f64,
    dy: &mut f64,
    stp: f64,
    fp: &mut f64,
    dp: f64,
    brackt: &mut bool,
    stpmin: f64,
    stpmax: f64,
) -> f64 {
    let sgnd = dp * (*dx / dx.abs());
    let stpf;
    if *fp > *fx {
        // Higher function value: the minimum is bracketed.
        let theta = 3.0 * (*fx - *fp) / (stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if stp < *stx {
            gamma = -gamma;
        }
        let p = (gamma - *dx) + theta;
        let q = ((gamma - *dx) + gamma) + dp;
        let r = p / q;
        let stpc = *stx + r * (stp - *stx);
        let stpq = *stx + ((*dx / ((*fx - *fp) / (stp - *stx) + *dx)) / 2.0) * (stp - *stx);
        stpf = if (stpc - *stx).abs() < (stpq - *stx).abs() { stpc } else { stpc + (stpq - stpc) / 2.0 };
        *brackt = true;
    } else if sgnd < 0.0 {
        // Derivatives of opposite sign: the minimum is bracketed.
        let theta = 3.0 * (*fx - *fp) / (stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + *dx;
        let r = p / q;
        let stpc = stp + r * (*stx - stp);
        let stpq = stp + (dp / (dp - *dx)) * (*stx - stp);
        stpf = if (stpc - stp).abs() > (stpq - stp).abs() { stpc } else { stpq };
        *brackt = true;
    } else if dp.abs() < dx.abs() {
        // Same sign, derivative magnitude decreases.
        let theta = 3.0 * (*fx - *fp) / (stp - *stx) + *dx + dp;
        let s = theta.abs().max(dx.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dx / s) * (dp / s)).max(0.0).sqrt();
        if stp > *stx {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = (gamma + (*dx - dp)) + gamma;
        let r = p / q;
        let stpc = if r < 0.0 && gamma != 0.0 {
            stp + r * (*stx - stp)
        } else if stp > *stx {
            stpmax
        } else {
            stpmin
        };
        let stpq = stp + (dp / (dp - *dx)) * (*stx - stp);
        if *brackt {
            let f = if (stpc - stp).abs() < (stpq - stp).abs() { stpc } else { stpq };
            stpf = if stp > *stx { f.min(stp + 0.66 * (*sty - stp)) } else { f.max(stp + 0.66 * (*sty - stp)) };
        } else {
            let f = if (stpc - stp).abs() > (stpq - stp).abs() { stpc } else { stpq };
            stpf = f.clamp(stpmin, stpmax);
        }
    } else if *brackt {
        // Same sign, derivative magnitude does not decrease.
        let theta = 3.0 * (*fp - *fy) / (*sty - stp) + *dy + dp;
        let s = theta.abs().max(dy.abs()).max(dp.abs());
        let mut gamma = s * ((theta / s).powi(2) - (*dy / s) * (dp / s)).max(0.0).sqrt();
        if stp > *sty {
            gamma = -gamma;
        }
        let p = (gamma - dp) + theta;
        let q = ((gamma - dp) + gamma) + *dy;
        let r = p / q;
        stpf = stp + r * (*sty - stp);
    } else if stp > *stx {
        stpf = stpmax;
    } else {
        stpf = stpmin;
    }

    if *fp > *fx {
        *sty = stp;
        *fy = *fp;
        *dy = dp;
    } else {
        if sgnd < 0.0 {
            *sty = *stx;
            *fy = *fx;
            *dy = *dx;
        }
        *stx = stp;
        *fx = *fp;
        *dx = dp;
    }
    stpf
}

#[cfg(test)]
mod tests {
    use super::*;

    fn check_wolfe(
        eval: impl Fn(&[f64]) -> (f64, Vec<f64>),
        x: &[f64],
        d: &[f64],
        params: &LineSearchParams,
    ) -> LineSearchResult {
        let (f0, g0) = eval(x);
        let r = strong_wolfe(&eval, x, d, f0, &g0, params).unwrap();
        assert_eq!(r.status, LineSearchStatus::Converged);
        let dg0: f64 = g0.iter().zip(d).map(|(a, b)| a * b).sum();
        let xt: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + r.step * b).collect();
        let (ft, gt) = eval(&xt);
        let dgt: f64 = gt.iter().zip(d).map(|(a, b)| a * b).sum();
        assert!(ft <= f0 + params.ftol * r.step * dg0);
        assert!(dgt.abs() <= params.gtol * dg0.abs());
        assert!(r.n_fev <= params.maxfev);
        r
    }

    #[test]
    fn half_square() {
        let r = check_wolfe(|x| (0.5 * x[0] * x[0], vec![x[0]]), &[1.0], &[-1.0], &Default::default());
        assert_eq!(r.step, 1.0);
    }

    #[test]
    fn quartic() {
        check_wolfe(|x| (x[0].powi(4), vec![4.0 * x[0].powi(3)]), &[1.0], &[-1.0], &Default::default());
    }

    #[test]
    fn tight_curvature_and_long_steps() {
        let p = LineSearchParams { gtol: 0.1, ..Default::default() };
        check_wolfe(|x| (x[0].powi(4), vec![4.0 * x[0].powi(3)]), &[1.0], &[-1.0], &p);
        // Minimizer far along d forces extrapolation.
        check_wolfe(|x| ((x[0] - 100.0).powi(2), vec![2.0 * (x[0] - 100.0)]), &[0.0], &[1e-3], &p);
        // Very short minimizer forces interpolation.
        check_wolfe(|x| (1e6 * x[0] * x[0], vec![2e6 * x[0]]), &[1.0], &[-1.0], &p);
    }

    #[test]
    fn ascent_direction_rejected() {
        let e = |x: &[f64]| (x[0] * x[0], vec![2.0 * x[0]]);
        assert!(matches!(
            strong_wolfe(e, &[1.0], &[1.0], 1.0, &[2.0], &Default::default()),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn non_finite_values_retreat() {
        let e = |x: &[f64]| {
            if x[0] < 0.0 {
                (f64::INFINITY, vec![f64::NAN])
            } else {
                ((x[0] - 0.4).powi(2), vec![2.0 * (x[0] - 0.4)])
            }
        };
        check_wolfe(e, &[0.9], &[-1.0], &Default::default());
    }
}
