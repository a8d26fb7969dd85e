//! Dense vector kernels and Householder machinery.
//!
//! Kernels report their multiplications to [`crate::ops`]. Additions and
//! subtractions are not counted.

mod householder;

pub use householder::{
    apply_reflector, build_stack_fixing_columns, build_stack_mapping, reflector_from_pair, HouseholderStack, Reflector,
    DEGENERACY_EPS, GRAM_TOL,
};

use crate::ops;

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    ops::count(a.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm_sq(a: &[f64]) -> f64 {
    dot(a, a)
}

#[inline]
pub fn norm(a: &[f64]) -> f64 {
    norm_sq(a).sqrt()
}

/// y ← y + αx
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    ops::count(x.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// x ← αx
#[inline]
pub fn scale(alpha: f64, x: &mut [f64]) {
    ops::count(x.len());
    for xi in x.iter_mut() {
        *xi *= alpha;
    }
}

/// Returns αx.
#[inline]
pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    ops::count(x.len());
    x.iter().map(|xi| alpha * xi).collect()
}

/// Returns a − b.
#[inline]
pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Returns αa + βb.
#[inline]
pub fn lincomb(alpha: f64, a: &[f64], beta: f64, b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    ops::count(2 * a.len());
    a.iter().zip(b).map(|(x, y)| alpha * x + beta * y).collect()
}

/// Entrywise product.
#[inline]
pub fn hadamard(a: &[f64], b: &[f64]) -> Vec<f64> {
    debug_assert_eq!(a.len(), b.len());
    ops::count(a.len());
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

pub fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut e = vec![0.0; n];
    e[i] = 1.0;
    e
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// ‖a − b‖ without touching the counter (diagnostics and tests).
pub fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}
