use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Problem;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{HouseholderStack, Reflector};

/// f(x) = ½xᵀAx − bᵀx with A = Q d(λ) Qᵀ, Q a reflector product.
#[derive(Debug, Clone)]
pub struct Quadratic {
    name: String,
    q: HouseholderStack,
    lambda: Vec<f64>,
    b: Vec<f64>,
    x0: Vec<f64>,
}

impl Quadratic {
    pub fn new(q: HouseholderStack, lambda: Vec<f64>, b: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        let n = q.dim();
        check_dim(n, lambda.len())?;
        check_dim(n, b.len())?;
        check_dim(n, x0.len())?;
        if let Some(l) = lambda.iter().find(|l| !(**l > 0.0)) {
            return Err(Error::InvalidArgument(format!("eigenvalue {l} is not positive")));
        }
        Ok(Quadratic { name: "quad".into(), q, lambda, b, x0 })
    }

    /// A = d(λ).
    pub fn diagonal(lambda: Vec<f64>, b: Vec<f64>, x0: Vec<f64>) -> Result<Self> {
        Self::new(HouseholderStack::identity(lambda.len()), lambda, b, x0)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambda
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// λ_max/λ_min.
    pub fn condition(&self) -> f64 {
        let (lo, hi) = self.lambda.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), l| (lo.min(*l), hi.max(*l)));
        hi / lo
    }

    /// Ax.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut v = x.to_vec();
        self.q.apply_t_in_place(&mut v);
        for (vi, li) in v.iter_mut().zip(&self.lambda) {
            *vi *= li;
        }
        self.q.apply_in_place(&mut v);
        v
    }

    /// A⁻¹b.
    pub fn minimizer(&self) -> Vec<f64> {
        let mut v = self.b.clone();
        self.q.apply_t_in_place(&mut v);
        for (vi, li) in v.iter_mut().zip(&self.lambda) {
            *vi /= li;
        }
        self.q.apply_in_place(&mut v);
        v
    }

    /// Row-major dense A.
    pub fn dense(&self) -> Vec<f64> {
        let n = self.lambda.len();
        let mut a = vec![0.0; n * n];
        for j in 0..n {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            let col = self.apply(&e);
            for i in 0..n {
                a[i * n + j] = col[i];
            }
        }
        a
    }
}

impl Problem for Quadratic {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.lambda.len()
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let ax = self.apply(x);
        let mut f = 0.0;
        let g: Vec<f64> = ax
            .iter()
            .zip(&self.b)
            .zip(x)
            .map(|((a, b), xi)| {
                f += xi * (0.5 * a - b);
                a - b
            })
            .collect();
        (f, g)
    }

    fn x0(&self) -> Vec<f64> {
        self.x0.clone()
    }

    fn f_star(&self) -> Option<f64> {
        let xs = self.minimizer();
        Some(-0.5 * xs.iter().zip(&self.b).map(|(a, b)| a * b).sum::<f64>())
    }

    fn quadratic(&self) -> Option<&Quadratic> {
        Some(self)
    }
}

/// Seeded pd quadratic with spectrum log-uniform in [1, cond] (both ends
/// attained when n ≥ 2), Q a product of min(n, 6) random reflectors,
/// b uniform in [−1, 1]ⁿ and x₀ = 0.
pub fn make_quadratic(n: usize, cond: f64, seed: u64) -> Result<Quadratic> {
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if !(cond >= 1.0) || !cond.is_finite() {
        return Err(Error::InvalidArgument(format!("condition number {cond} must be ≥ 1")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let log_c = cond.ln();
    let mut lambda: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * log_c).exp()).collect();
    if n >= 2 {
        lambda[0] = 1.0;
        lambda[n - 1] = cond;
    }
    let reflectors =
        (0..n.min(6)).map(|_| Reflector::from_direction((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())).collect();
    let q = HouseholderStack::from_reflectors(n, reflectors)?;
    let b = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    Ok(Quadratic::new(q, lambda, b, vec![0.0; n])?.with_name(format!("quad-n{n}-c{cond:e}-s{seed}")))
}
