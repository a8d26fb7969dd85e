use std::sync::OnceLock;

use super::{dot, norm, norm_sq, scale};
use crate::error::{check_dim, Error, Result};
use crate::ops;

/// Relative size below which a reflector direction is treated as zero.
pub const DEGENERACY_EPS: f64 = 1e-13;

/// Relative tolerance for the WᵀW = VᵀV compatibility check.
pub const GRAM_TOL: f64 = 1e-10;

/// Householder reflector H(h) = I − hhᵀ with ‖h‖ = √2, or the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct Reflector {
    h: Vec<f64>,
    identity: bool,
}

impl Reflector {
    pub fn identity(n: usize) -> Self {
        Reflector { h: vec![0.0; n], identity: true }
    }

    /// Normalizes `p` to length √2. A zero `p` gives the identity.
    pub fn from_direction(mut p: Vec<f64>) -> Self {
        let nrm = norm(&p);
        if nrm == 0.0 || !nrm.is_finite() {
            return Reflector::identity(p.len());
        }
        scale(std::f64::consts::SQRT_2 / nrm, &mut p);
        ops::count(1);
        Reflector { h: p, identity: false }
    }

    pub fn dim(&self) -> usize {
        self.h.len()
    }

    pub fn is_identity(&self) -> bool {
        self.identity
    }

    pub fn vector(&self) -> &[f64] {
        &self.h
    }

    /// x ← x − (hᵀx)h
    pub fn apply_in_place(&self, x: &mut [f64]) {
        if self.identity {
            return;
        }
        let t = dot(&self.h, x);
        super::axpy(-t, &self.h, x);
    }
}

/// Builds the reflector with H v = (‖v‖/‖z‖) z from p = v − (‖v‖/‖z‖) z.
pub fn reflector_from_pair(v: &[f64], z: &[f64]) -> Result<Reflector> {
    check_dim(v.len(), z.len())?;
    let nz = norm(z);
    if nz == 0.0 {
        return Err(Error::InvalidArgument("target vector z is zero".into()));
    }
    let nv = norm(v);
    let ratio = nv / nz;
    ops::count(1);
    let p: Vec<f64> = v.iter().zip(z).map(|(a, b)| a - ratio * b).collect();
    ops::count(v.len());
    if norm(&p) <= DEGENERACY_EPS * nv {
        return Ok(Reflector::identity(v.len()));
    }
    Ok(Reflector::from_direction(p))
}

pub fn apply_reflector(r: &Reflector, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(r.dim(), x.len())?;
    let mut out = x.to_vec();
    r.apply_in_place(&mut out);
    Ok(out)
}

/// Orthogonal U = H(h_s)⋯H(h_1) stored as its reflectors.
#[derive(Debug, Default)]
pub struct HouseholderStack {
    n: usize,
    reflectors: Vec<Reflector>,
    gram: OnceLock<Vec<f64>>,
}

impl Clone for HouseholderStack {
    fn clone(&self) -> Self {
        let gram = OnceLock::new();
        if let Some(g) = self.gram.get() {
            let _ = gram.set(g.clone());
        }
        HouseholderStack { n: self.n, reflectors: self.reflectors.clone(), gram }
    }
}

impl PartialEq for HouseholderStack {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.reflectors == other.reflectors
    }
}

impl HouseholderStack {
    pub fn identity(n: usize) -> Self {
        HouseholderStack { n, reflectors: Vec::new(), gram: OnceLock::new() }
    }

    /// Identity reflectors are dropped; they do not change U.
    pub fn from_reflectors(n: usize, reflectors: Vec<Reflector>) -> Result<Self> {
        for r in &reflectors {
            check_dim(n, r.dim())?;
        }
        let reflectors = reflectors.into_iter().filter(|r| !r.is_identity()).collect();
        Ok(HouseholderStack { n, reflectors, gram: OnceLock::new() })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Non-identity reflectors, in application order h_1, …, h_s.
    pub fn reflectors(&self) -> &[Reflector] {
        &self.reflectors
    }

    pub fn len(&self) -> usize {
        self.reflectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reflectors.is_empty()
    }

    /// x ← Ux = H(h_s)⋯H(h_1)x
    pub fn apply_in_place(&self, x: &mut [f64]) {
        for r in &self.reflectors {
            r.apply_in_place(x);
        }
    }

    /// x ← Uᵀx = H(h_1)⋯H(h_s)x
    pub fn apply_t_in_place(&self, x: &mut [f64]) {
        for r in self.reflectors.iter().rev() {
            r.apply_in_place(x);
        }
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut out = x.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    pub fn apply_t(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.n, x.len())?;
        let mut out = x.to_vec();
        self.apply_t_in_place(&mut out);
        Ok(out)
    }

    /// Strict lower triangle of the reflector Gram matrix, row-major:
    /// entry (i, j), j < i, sits at i(i−1)/2 + j. Computed once.
    pub fn gram(&self) -> &[f64] {
        self.gram.get_or_init(|| {
            let s = self.reflectors.len();
            let mut g = Vec::with_capacity(s * (s.saturating_sub(1)) / 2);
            for i in 0..s {
                for j in 0..i {
                    g.push(dot(self.reflectors[i].vector(), self.reflectors[j].vector()));
                }
            }
            g
        })
    }
}

/// Builds U = H(h_s)⋯H(h_1) with U w_i = v_i, given WᵀW = VᵀV.
///
/// h̃_i = H(h_{i−1})⋯H(h_1)(w_i − w_{i−1}) − (v_i − v_{i−1}),
/// h_i = (√2/‖h̃_i‖) h̃_i, identity when h̃_i vanishes.
pub fn build_stack_mapping(w: &[Vec<f64>], v: &[Vec<f64>]) -> Result<HouseholderStack> {
    if w.len() != v.len() {
        return Err(Error::InvalidArgument(format!("{} source columns but {} target columns", w.len(), v.len())));
    }
    let Some(first) = w.first() else {
        return Err(Error::InvalidArgument("no columns given".into()));
    };
    let n = first.len();
    for col in w.iter().chain(v) {
        check_dim(n, col.len())?;
    }
    let s = w.len();
    if s > n {
        return Err(Error::InvalidArgument(format!("{s} columns exceed dimension {n}")));
    }

    // Input validation is not part of the construction cost.
    let scales = ops::paused(|| -> Result<Vec<f64>> {
        let mut scales = Vec::with_capacity(s);
        for i in 0..s {
            for j in 0..=i {
                let gw = dot(&w[i], &w[j]);
                let gv = dot(&v[i], &v[j]);
                let sc = (norm(&w[i]) * norm(&w[j])).max(norm(&v[i]) * norm(&v[j]));
                if (gw - gv).abs() > GRAM_TOL * sc.max(f64::MIN_POSITIVE) {
                    return Err(Error::InvalidArgument(format!(
                        "Gram mismatch at ({i},{j}): WᵀW = {gw:e}, VᵀV = {gv:e}"
                    )));
                }
            }
            let nv = norm(&v[i]);
            if nv == 0.0 {
                return Err(Error::InvalidArgument(format!("column {i} is zero")));
            }
            scales.push(nv);
        }
        Ok(scales)
    })?;

    let mut reflectors: Vec<Reflector> = Vec::with_capacity(s);
    let zero = vec![0.0; n];
    for i in 0..s {
        let (w_prev, v_prev) = if i == 0 { (&zero, &zero) } else { (&w[i - 1], &v[i - 1]) };
        let mut ht: Vec<f64> = w[i].iter().zip(w_prev).map(|(a, b)| a - b).collect();
        for r in &reflectors {
            r.apply_in_place(&mut ht);
        }
        for ((t, a), b) in ht.iter_mut().zip(&v[i]).zip(v_prev) {
            *t -= a - b;
        }
        let nrm = norm(&ht);
        if nrm <= DEGENERACY_EPS * scales[i] {
            reflectors.push(Reflector::identity(n));
        } else {
            scale(std::f64::consts::SQRT_2 / nrm, &mut ht);
            ops::count(1);
            reflectors.push(Reflector { h: ht, identity: false });
        }
    }
    HouseholderStack::from_reflectors(n, reflectors)
}

/// Builds U with U e_k = ±c_k for orthonormal columns c_1, …, c_s.
///
/// Uses the coordinate structure of e_k, so the first reflection of each
/// source column costs n rather than 2n multiplications. When the rotated
/// source is close to c_k the reflection targets −c_k instead; sd U only
/// sees columns up to sign, and this keeps ‖h̃_k‖ ≥ 0.1.
pub fn build_stack_fixing_columns(n: usize, cols: &[&[f64]]) -> Result<HouseholderStack> {
    let s = cols.len();
    if s > n {
        return Err(Error::InvalidArgument(format!("{s} columns exceed dimension {n}")));
    }
    for c in cols {
        check_dim(n, c.len())?;
    }
    let mut reflectors: Vec<Reflector> = Vec::with_capacity(s);
    for (k, c) in cols.iter().enumerate() {
        // a = U_{k−1} e_k
        let mut active = reflectors.iter().filter(|r| !r.is_identity());
        let mut a = match active.next() {
            Some(r) => {
                let t = r.h[k];
                let mut a: Vec<f64> = r.h.iter().map(|hi| -t * hi).collect();
                ops::count(n);
                a[k] += 1.0;
                for r in active {
                    r.apply_in_place(&mut a);
                }
                a
            }
            None => {
                let mut a = vec![0.0; n];
                a[k] = 1.0;
                a
            }
        };
        let mut p: Vec<f64> = a.iter().zip(c.iter()).map(|(x, y)| x - y).collect();
        let mut nsq = norm_sq(&p);
        if nsq < 1e-2 && nsq > DEGENERACY_EPS * DEGENERACY_EPS {
            for (ai, ci) in a.iter_mut().zip(c.iter()) {
                *ai += ci;
            }
            p = a;
            nsq = norm_sq(&p);
        }
        let nrm = nsq.sqrt();
        if nrm <= DEGENERACY_EPS {
            reflectors.push(Reflector::identity(n));
        } else {
            scale(std::f64::consts::SQRT_2 / nrm, &mut p);
            ops::count(1);
            reflectors.push(Reflector { h: p, identity: false });
        }
    }
    HouseholderStack::from_reflectors(n, reflectors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{dist, unit};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut impl Rng, n: usize) -> Vec<f64> {
        (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
    }

    /// Dense H = I − (2/‖p‖²)ppᵀ applied explicitly.
    fn dense_householder_apply(p: &[f64], x: &[f64]) -> Vec<f64> {
        let n = p.len();
        let pp: f64 = p.iter().map(|v| v * v).sum();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        let hij = if i == j { 1.0 } else { 0.0 } - 2.0 * p[i] * p[j] / pp;
                        hij * x[j]
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn axis_swap() {
        let r = reflector_from_pair(&[1.0, 0.0], &[0.0, 1.0]).unwrap();
        let h = r.vector();
        assert!((h[0] + h[1]).abs() < 1e-15 && (h[0].abs() - 1.0).abs() < 1e-15);
        let out = apply_reflector(&r, &[1.0, 0.0]).unwrap();
        assert!(dist(&out, &[0.0, 1.0]) < 1e-15);
    }

    #[test]
    fn coincident_pair_gives_identity() {
        let r = reflector_from_pair(&[1.0, 0.0, 0.0], &[1.0, 0.0, 0.0]).unwrap();
        assert!(r.is_identity());
    }

    #[test]
    fn maps_345_onto_axis() {
        let v = [3.0, 4.0, 0.0];
        let r = reflector_from_pair(&v, &[0.0, 0.0, 1.0]).unwrap();
        // Dense oracle with p = v − 5e3.
        let expected = dense_householder_apply(&[3.0, 4.0, -5.0], &v);
        let got = apply_reflector(&r, &v).unwrap();
        assert!(dist(&expected, &[0.0, 0.0, 5.0]) < 1e-12);
        assert!(dist(&got, &expected) < 1e-12 * 5.0);
    }

    #[test]
    fn zero_target_is_rejected() {
        assert!(matches!(reflector_from_pair(&[1.0, 2.0], &[0.0, 0.0]), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn reflection_basics() {
        let h = vec![1.0, 1.0, 0.0];
        let r = Reflector::from_direction(h.clone());
        let x = [1.0, -1.0, 3.0];
        assert!(dist(&apply_reflector(&r, &x).unwrap(), &x) < 1e-15);
        let xc = [2.0, 2.0, 0.0];
        assert!(dist(&apply_reflector(&r, &xc).unwrap(), &[-2.0, -2.0, 0.0]) < 1e-14);
        assert!(matches!(apply_reflector(&r, &[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn random_reflector_matches_dense() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = random_vec(&mut rng, 4);
        let x = random_vec(&mut rng, 4);
        let r = Reflector::from_direction(p.clone());
        assert!((norm(r.vector()) - 2f64.sqrt()).abs() < 1e-14);
        let got = apply_reflector(&r, &x).unwrap();
        assert!(dist(&got, &dense_householder_apply(&p, &x)) < 1e-14);
        let back = apply_reflector(&r, &got).unwrap();
        assert!(dist(&back, &x) < 1e-14);
    }

    #[test]
    fn stack_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let refl = (0..3).map(|_| Reflector::from_direction(random_vec(&mut rng, n))).collect();
        let u = HouseholderStack::from_reflectors(n, refl).unwrap();
        let x = random_vec(&mut rng, n);
        let back = u.apply_t(&u.apply(&x).unwrap()).unwrap();
        assert!(dist(&back, &x) < 1e-12 * norm(&x));

        let empty = HouseholderStack::identity(n);
        assert_eq!(empty.apply(&x).unwrap(), x);

        let r = Reflector::from_direction(random_vec(&mut rng, n));
        let single = HouseholderStack::from_reflectors(n, vec![r.clone()]).unwrap();
        assert_eq!(single.apply(&x).unwrap(), apply_reflector(&r, &x).unwrap());
    }

    #[test]
    fn mapping_identity_when_w_equals_v() {
        let w = vec![unit(5, 0), unit(5, 3)];
        let u = build_stack_mapping(&w, &w).unwrap();
        assert!(u.is_empty());
    }

    #[test]
    fn mapping_single_column() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let s = random_vec(&mut rng, 9);
        let t: Vec<f64> = s.iter().map(|x| x / norm(&s)).collect();
        let u = build_stack_mapping(&[unit(9, 0)], std::slice::from_ref(&t)).unwrap();
        assert!(dist(&u.apply(&unit(9, 0)).unwrap(), &t) < 1e-12);
    }

    #[test]
    fn mapping_rejects_incompatible_gram() {
        let w = vec![unit(3, 0)];
        let v = vec![vec![2.0, 0.0, 0.0]];
        assert!(matches!(build_stack_mapping(&w, &v), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn fixing_columns_handles_near_coincidence() {
        let n = 6;
        let eps = 1e-9;
        let mut c = unit(n, 0);
        c[1] = eps;
        let nc = norm(&c);
        c.iter_mut().for_each(|x| *x /= nc);
        let u = build_stack_fixing_columns(n, &[&c]).unwrap();
        let col = u.apply(&unit(n, 0)).unwrap();
        let err = dist(&col, &c).min(dist(&col, &c.iter().map(|x| -x).collect::<Vec<_>>()));
        assert!(err < 1e-14, "err = {err:e}");
    }
}
