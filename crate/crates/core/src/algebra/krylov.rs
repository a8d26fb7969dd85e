use crate::error::{Error, Result};
use crate::linalg::{self, build_stack_fixing_columns, dot, norm, HouseholderStack};
use crate::ops;

/// Relative Arnoldi breakdown threshold: h21 ≤ toll·‖Bv1‖ selects the
/// eigenvector branch.
pub const DEFAULT_TOLL_REL: f64 = 1e-12;

/// Orthogonality tolerance for caller-supplied eigenvector columns.
const ORTHO_TOL: f64 = 1e-10;

/// Two-step Arnoldi factorization of K_2(B, s) together with the Jacobi
/// rotation that diagonalizes H_2 = V_2ᵀ B V_2.
#[derive(Debug, Clone, PartialEq)]
pub struct KrylovPair {
    pub v1: Vec<f64>,
    pub v2: Vec<f64>,
    pub h11: f64,
    pub h21: f64,
    pub h22: f64,
    /// Column-major [q1 | q2]; angle in (−π/4, π/4].
    pub rotation: [[f64; 2]; 2],
}

impl KrylovPair {
    fn new(v1: Vec<f64>, v2: Vec<f64>, h11: f64, h21: f64, h22: f64) -> Self {
        let theta = jacobi_angle(h11, h21, h22);
        let (sn, cs) = theta.sin_cos();
        KrylovPair { v1, v2, h11, h21, h22, rotation: [[cs, sn], [-sn, cs]] }
    }

    /// Eigenvalues of H_2 in rotation-column order.
    pub fn ritz_values(&self) -> [f64; 2] {
        let q = self.rotation;
        let rq = |c: [f64; 2]| c[0] * c[0] * self.h11 + 2.0 * c[0] * c[1] * self.h21 + c[1] * c[1] * self.h22;
        [rq(q[0]), rq(q[1])]
    }

    /// V_2 Q e_1 and V_2 Q e_2.
    pub fn rotated_basis(&self) -> (Vec<f64>, Vec<f64>) {
        let [q1, q2] = self.rotation;
        (linalg::lincomb(q1[0], &self.v1, q1[1], &self.v2), linalg::lincomb(q2[0], &self.v1, q2[1], &self.v2))
    }
}

/// Rotation angle θ ∈ (−π/4, π/4] zeroing the off-diagonal of
/// [[a, b], [b, c]] under QᵀHQ, Q = [[cos θ, −sin θ], [sin θ, cos θ]].
fn jacobi_angle(a: f64, b: f64, c: f64) -> f64 {
    use std::f64::consts::FRAC_PI_4;
    if b == 0.0 {
        return 0.0;
    }
    let diff = a - c;
    // Diagonal entries equal up to roundoff count as a tie.
    let tie = diff.abs() <= 4.0 * f64::EPSILON * (a.abs() + c.abs());
    let theta = if tie { FRAC_PI_4 } else { 0.5 * (2.0 * b / diff).atan() };
    if theta <= -FRAC_PI_4 {
        FRAC_PI_4
    } else {
        theta
    }
}

/// m = 2 Arnoldi with exactly two applications of `matvec`.
pub fn arnoldi2(matvec: impl Fn(&[f64]) -> Vec<f64>, s: &[f64], toll_rel: f64) -> Result<KrylovPair> {
    let bs = matvec(s);
    arnoldi2_with(s, &bs, |v2| dot(v2, &matvec(v2)), toll_rel)
}

/// Arnoldi from a precomputed Bs; `quad(v2)` must return v2ᵀBv2.
pub fn arnoldi2_with(s: &[f64], bs: &[f64], quad: impl FnOnce(&[f64]) -> f64, toll_rel: f64) -> Result<KrylovPair> {
    if s.len() != bs.len() {
        return Err(Error::DimensionMismatch { expected: s.len(), got: bs.len() });
    }
    let snorm = norm(s);
    if snorm == 0.0 || !snorm.is_finite() {
        return Err(Error::InvalidArgument("Arnoldi start vector is zero".into()));
    }
    let inv = 1.0 / snorm;
    ops::count(1);
    let v1 = linalg::scaled(inv, s);
    let mut h11 = dot(s, bs) * inv * inv;
    ops::count(2);
    // w = Bv1 − h11 v1
    let mut w = linalg::lincomb(inv, bs, -h11, &v1);
    let mut h21 = norm(&w);
    let bv1_norm = (h21 * h21 + h11 * h11).sqrt();
    ops::count(3);
    if !(h21 > toll_rel * bv1_norm) {
        return Err(Error::KrylovBreakdown { h21 });
    }
    if h21 < 0.5 * bv1_norm {
        // Second Gram–Schmidt pass; the correction belongs to h11.
        let c = dot(&v1, &w);
        linalg::axpy(-c, &v1, &mut w);
        h11 += c;
        h21 = norm(&w);
    }
    ops::count(1);
    let v2 = linalg::scaled(1.0 / h21, &w);
    let h22 = quad(&v2);
    Ok(KrylovPair::new(v1, v2, h11, h21, h22))
}

/// Stack with s/‖s‖ as first column, and `extra/‖extra‖` as the second
/// when given (used when s is an eigenvector of B).
pub fn build_algebra_eigvec(s: &[f64], extra: Option<&[f64]>) -> Result<HouseholderStack> {
    let n = s.len();
    let ns = norm(s);
    if ns == 0.0 {
        return Err(Error::InvalidArgument("s is zero".into()));
    }
    ops::count(1);
    let c1 = linalg::scaled(1.0 / ns, s);
    match extra {
        None => build_stack_fixing_columns(n, &[&c1]),
        Some(e) => {
            crate::error::check_dim(n, e.len())?;
            let ne = norm(e);
            if ne == 0.0 {
                return Err(Error::DegenerateColumn);
            }
            let cos = ops::paused(|| dot(&c1, e) / ne);
            if cos.abs() > ORTHO_TOL {
                return Err(Error::InvalidArgument(format!("extra column not orthogonal to s (cos = {cos:e})")));
            }
            ops::count(1);
            let c2 = linalg::scaled(1.0 / ne, e);
            build_stack_fixing_columns(n, &[&c1, &c2])
        }
    }
}

/// Two-reflector stack with columns V_2Qe_1, V_2Qe_2.
pub fn build_algebra_krylov2(kp: &KrylovPair) -> Result<HouseholderStack> {
    let (c1, c2) = kp.rotated_basis();
    build_stack_fixing_columns(kp.v1.len(), &[&c1, &c2])
}

/// Three-reflector stack with columns V_2Qe_1, V_2Qe_2, ḡ/‖ḡ‖.
///
/// Fails with [`Error::DegenerateColumn`] when ḡ vanishes; the caller then
/// falls back to [`build_algebra_krylov2`].
pub fn build_algebra_qt(kp: &KrylovPair, gbar: &[f64]) -> Result<HouseholderStack> {
    let n = kp.v1.len();
    crate::error::check_dim(n, gbar.len())?;
    let ng = norm(gbar);
    if !(ng > 0.0) || !ng.is_finite() {
        return Err(Error::DegenerateColumn);
    }
    let (c1_ortho, c2_ortho) = ops::paused(|| (dot(&kp.v1, gbar).abs() / ng, dot(&kp.v2, gbar).abs() / ng));
    if c1_ortho > ORTHO_TOL || c2_ortho > ORTHO_TOL {
        return Err(Error::InvalidArgument(format!(
            "ḡ not orthogonal to the Krylov basis ({c1_ortho:e}, {c2_ortho:e})"
        )));
    }
    let (c1, c2) = kp.rotated_basis();
    ops::count(1);
    let c3 = linalg::scaled(1.0 / ng, gbar);
    build_stack_fixing_columns(n, &[&c1, &c2, &c3])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, unit};

    fn diag_matvec(d: &'static [f64]) -> impl Fn(&[f64]) -> Vec<f64> {
        move |x: &[f64]| x.iter().zip(d).map(|(a, b)| a * b).collect()
    }

    #[test]
    fn identity_breaks_down() {
        let r = arnoldi2(|x| x.to_vec(), &[1.0, 2.0, 3.0], DEFAULT_TOLL_REL);
        assert!(matches!(r, Err(Error::KrylovBreakdown { .. })));
    }

    #[test]
    fn diag_1_2_worked_case() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let kp = arnoldi2(diag_matvec(&[1.0, 2.0]), &[h, h], DEFAULT_TOLL_REL).unwrap();
        assert!(dist(&kp.v2, &[-h, h]) < 1e-15);
        assert!((kp.h11 - 1.5).abs() < 1e-15);
        assert!((kp.h21 - 0.5).abs() < 1e-15);
        assert!((kp.h22 - 1.5).abs() < 1e-15);
        // Equal diagonal: the tie-break picks θ = π/4.
        let [q1, _] = kp.rotation;
        assert!((q1[0] - h).abs() < 1e-12 && (q1[1] - h).abs() < 1e-12, "{q1:?}");
        let mut ritz = kp.ritz_values();
        ritz.sort_by(f64::total_cmp);
        assert!((ritz[0] - 1.0).abs() < 1e-14 && (ritz[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn h2_matches_dense_congruence() {
        let d: &'static [f64] = &[1.0, 2.0, 3.0];
        let kp = arnoldi2(diag_matvec(d), &[1.0, 0.0, 1.0], DEFAULT_TOLL_REL).unwrap();
        let q = |a: &[f64], b: &[f64]| -> f64 { (0..3).map(|i| a[i] * d[i] * b[i]).sum() };
        assert!((kp.h11 - q(&kp.v1, &kp.v1)).abs() < 1e-14);
        assert!((kp.h21 - q(&kp.v2, &kp.v1)).abs() < 1e-14);
        assert!((kp.h22 - q(&kp.v2, &kp.v2)).abs() < 1e-14);
        assert!(dot(&kp.v1, &kp.v2).abs() < 1e-15);
    }

    #[test]
    fn zero_start_vector_rejected() {
        assert!(matches!(arnoldi2(|x| x.to_vec(), &[0.0, 0.0], DEFAULT_TOLL_REL), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn eigvec_columns() {
        let u = build_algebra_eigvec(&unit(4, 0), None).unwrap();
        let c = u.apply(&unit(4, 0)).unwrap();
        assert!(dist(&c, &unit(4, 0)) < 1e-15);

        let u = build_algebra_eigvec(&unit(4, 0), Some(&unit(4, 1))).unwrap();
        assert!(u.is_empty());

        let s = [0.3, -1.0, 2.0, 0.1];
        let u = build_algebra_eigvec(&s, None).unwrap();
        let c = u.apply(&unit(4, 0)).unwrap();
        let t: Vec<f64> = s.iter().map(|x| x / norm(&s)).collect();
        assert!(dist(&c, &t) < 1e-14);

        assert!(matches!(build_algebra_eigvec(&s, Some(&[1.0, 0.0, 0.0, 0.0])), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn qt_rejects_zero_gbar() {
        let kp = arnoldi2(diag_matvec(&[1.0, 2.0, 3.0]), &[1.0, 1.0, 1.0], 1e-12).unwrap();
        assert_eq!(build_algebra_qt(&kp, &[0.0; 3]), Err(Error::DegenerateColumn));
    }
}
