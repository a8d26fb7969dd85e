use super::Problem;
use crate::error::{Error, Result};

/// Accepted names (case-insensitive; `BROYDN7D-LIKE` is an alias).
pub const PROBLEM_NAMES: [&str; 8] =
    ["BROYDN7D", "CHAINWOO", "GENHUMPS", "GENROSE", "MODBEALE", "NONCVXU2", "TESTQUAD", "TRIDIA"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Broydn7d,
    Chainwoo,
    Genhumps,
    Genrose,
    Modbeale,
    Noncvxu2,
    Testquad,
    Tridia,
}

/// One of the named test problems. Formulas (1-based indices):
///
/// * TRIDIA: (x₁ − 1)² + Σ_{i≥2} i(2x_i − x_{i−1})², x₀ = 1, f* = 0.
/// * GENROSE: 1 + Σ_{i≥2} [100(x_i − x_{i−1}²)² + (x_i − 1)²],
///   x₀ᵢ = i/(n+1), f* = 1.
/// * CHAINWOO (n even, ≥ 4): 1 + Σ_{j=2,4,…,n−2} [100(x_j − x_{j−1}²)² +
///   (1 − x_{j−1})² + 90(x_{j+2} − x_{j+1}²)² + (1 − x_{j+1})² +
///   10(x_j + x_{j+2} − 2)² + 0.1(x_j − x_{j+2})²],
///   x₀ = (−3, −1, −3, −1, …), f* = 1.
/// * TESTQUAD: Σ i·x_i², x₀ = 1, f* = 0.
/// * BROYDN7D (n even): Σ_i |(3 − 2x_i)x_i − x_{i−1} − 2x_{i+1} + 1|^{7/3} +
///   Σ_{i≤n/2} |x_i + x_{i+n/2}|^{7/3} with boundary values x_0 = x_{n+1} = 0, start −1.
/// * GENHUMPS: Σ_{i<n} [sin²(20x_i)sin²(20x_{i+1}) + 0.05(x_i² + x_{i+1}²)],
///   x₀ = (−506, 506.2, 506.2, …), f* = 0.
/// * NONCVXU2: Σ_i [t_i² + 4cos t_i], t_i = x_i + x_{(2i−1 mod n)+1} +
///   x_{(3i−1 mod n)+1}, x₀ᵢ = i.
/// * MODBEALE (n even, a variant of the CUTEst problem): Beale's function
///   on each pair (x_{2k−1}, x_{2k}),
///   Σ_{c∈(1.5, 2.25, 2.625), p=1..3} (c − x_{2k−1}(1 − x_{2k}^p))²,
///   coupled by Σ_{k<n/2} (1/50)(6.4(x_{2k} − 0.5) − x_{2k+1} + 3)²;
///   x₀ = 1, minimizer (3, 0.5, 3, 0.5, …), f* = 0.
#[derive(Debug, Clone)]
pub struct NamedProblem {
    kind: Kind,
    name: String,
    n: usize,
}

pub fn make_named_problem(name: &str, n: usize) -> Result<NamedProblem> {
    let upper = name.to_ascii_uppercase();
    let kind = match upper.as_str() {
        "BROYDN7D" | "BROYDN7D-LIKE" => Kind::Broydn7d,
        "CHAINWOO" => Kind::Chainwoo,
        "GENHUMPS" => Kind::Genhumps,
        "GENROSE" => Kind::Genrose,
        "MODBEALE" => Kind::Modbeale,
        "NONCVXU2" => Kind::Noncvxu2,
        "TESTQUAD" => Kind::Testquad,
        "TRIDIA" => Kind::Tridia,
        _ => return Err(Error::UnknownProblem(name.to_string())),
    };
    let (min_n, even) = match kind {
        Kind::Chainwoo => (4, true),
        Kind::Broydn7d | Kind::Modbeale => (2, true),
        Kind::Genrose | Kind::Genhumps | Kind::Tridia => (2, false),
        Kind::Noncvxu2 | Kind::Testquad => (1, false),
    };
    if n < min_n || (even && !n.is_multiple_of(2)) {
        return Err(Error::InvalidArgument(format!(
            "{upper} needs n ≥ {min_n}{}, got {n}",
            if even { " and even" } else { "" }
        )));
    }
    let name = if upper == "BROYDN7D-LIKE" { "BROYDN7D".to_string() } else { upper };
    Ok(NamedProblem { kind, name, n })
}

const SEVEN_THIRDS: f64 = 7.0 / 3.0;

/// |t|^{7/3} and its derivative.
fn pow73(t: f64) -> (f64, f64) {
    let a = t.abs();
    let v = a.powf(SEVEN_THIRDS);
    (v, SEVEN_THIRDS * a.powf(4.0 / 3.0) * t.signum())
}

impl Problem for NamedProblem {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn x0(&self) -> Vec<f64> {
        let n = self.n;
        match self.kind {
            Kind::Tridia | Kind::Testquad | Kind::Modbeale => vec![1.0; n],
            Kind::Genrose => (1..=n).map(|i| i as f64 / (n as f64 + 1.0)).collect(),
            Kind::Chainwoo => (0..n).map(|i| if i % 2 == 0 { -3.0 } else { -1.0 }).collect(),
            Kind::Broydn7d => vec![-1.0; n],
            Kind::Genhumps => (0..n).map(|i| if i == 0 { -506.0 } else { 506.2 }).collect(),
            Kind::Noncvxu2 => (1..=n).map(|i| i as f64).collect(),
        }
    }

    fn f_star(&self) -> Option<f64> {
        match self.kind {
            Kind::Tridia | Kind::Testquad | Kind::Genhumps | Kind::Modbeale => Some(0.0),
            Kind::Genrose | Kind::Chainwoo => Some(1.0),
            Kind::Broydn7d | Kind::Noncvxu2 => None,
        }
    }

    fn eval(&self, x: &[f64]) -> (f64, Vec<f64>) {
        assert_eq!(x.len(), self.n, "dimension mismatch in {}", self.name);
        let n = self.n;
        let mut g = vec![0.0; n];
        let mut f = 0.0;
        match self.kind {
            Kind::Tridia => {
                let r = x[0] - 1.0;
                f += r * r;
                g[0] += 2.0 * r;
                for i in 1..n {
                    let w = (i + 1) as f64;
                    let t = 2.0 * x[i] - x[i - 1];
                    f += w * t * t;
                    g[i] += 4.0 * w * t;
                    g[i - 1] -= 2.0 * w * t;
                }
            }
            Kind::Genrose => {
                f = 1.0;
                for i in 1..n {
                    let a = x[i] - x[i - 1] * x[i - 1];
                    let b = x[i] - 1.0;
                    f += 100.0 * a * a + b * b;
                    g[i] += 200.0 * a + 2.0 * b;
                    g[i - 1] -= 400.0 * a * x[i - 1];
                }
            }
            Kind::Chainwoo => {
                f = 1.0;
                // j is the 0-based index of x_j with j+1 even.
                let mut j = 1;
                while j + 2 < n {
                    let (a, b, c, d) = (x[j - 1], x[j], x[j + 1], x[j + 2]);
                    let t1 = b - a * a;
                    let t2 = 1.0 - a;
                    let t3 = d - c * c;
                    let t4 = 1.0 - c;
                    let t5 = b + d - 2.0;
                    let t6 = b - d;
                    f += 100.0 * t1 * t1 + t2 * t2 + 90.0 * t3 * t3 + t4 * t4 + 10.0 * t5 * t5 + 0.1 * t6 * t6;
                    g[j - 1] += -400.0 * t1 * a - 2.0 * t2;
                    g[j] += 200.0 * t1 + 20.0 * t5 + 0.2 * t6;
                    g[j + 1] += -360.0 * t3 * c - 2.0 * t4;
                    g[j + 2] += 180.0 * t3 + 20.0 * t5 - 0.2 * t6;
                    j += 2;
                }
            }
            Kind::Testquad => {
                for i in 0..n {
                    let w = (i + 1) as f64;
                    f += w * x[i] * x[i];
                    g[i] = 2.0 * w * x[i];
                }
            }
            Kind::Broydn7d => {
                for i in 0..n {
                    let prev = if i > 0 { x[i - 1] } else { 0.0 };
                    let next = if i + 1 < n { x[i + 1] } else { 0.0 };
                    let t = (3.0 - 2.0 * x[i]) * x[i] - prev - 2.0 * next + 1.0;
                    let (v, dv) = pow73(t);
                    f += v;
                    g[i] += dv * (3.0 - 4.0 * x[i]);
                    if i > 0 {
                        g[i - 1] -= dv;
                    }
                    if i + 1 < n {
                        g[i + 1] -= 2.0 * dv;
                    }
                }
                let h = n / 2;
                for i in 0..h {
                    let (v, dv) = pow73(x[i] + x[i + h]);
                    f += v;
                    g[i] += dv;
                    g[i + h] += dv;
                }
            }
            Kind::Genhumps => {
                const Z: f64 = 20.0;
                for i in 0..n - 1 {
                    let (sa, ca) = (Z * x[i]).sin_cos();
                    let (sb, cb) = (Z * x[i + 1]).sin_cos();
                    f += sa * sa * sb * sb + 0.05 * (x[i] * x[i] + x[i + 1] * x[i + 1]);
                    g[i] += 2.0 * Z * sa * ca * sb * sb + 0.1 * x[i];
                    g[i + 1] += 2.0 * Z * sb * cb * sa * sa + 0.1 * x[i + 1];
                }
            }
            Kind::Noncvxu2 => {
                for i in 0..n {
                    // 1-based: j = (2i−1 mod n)+1, k = (3i−1 mod n)+1.
                    let i1 = i + 1;
                    let j = (2 * i1 - 1) % n;
                    let k = (3 * i1 - 1) % n;
                    let t = x[i] + x[j] + x[k];
                    f += t * t + 4.0 * t.cos();
                    let dt = 2.0 * t - 4.0 * t.sin();
                    g[i] += dt;
                    g[j] += dt;
                    g[k] += dt;
                }
            }
            Kind::Modbeale => {
                const C: [f64; 3] = [1.5, 2.25, 2.625];
                for k in 0..n / 2 {
                    let (a, b) = (x[2 * k], x[2 * k + 1]);
                    let mut bp = 1.0;
                    for (p, c) in C.iter().enumerate() {
                        let dbp = (p + 1) as f64 * bp;
                        bp *= b;
                        let r = c - a * (1.0 - bp);
                        f += r * r;
                        g[2 * k] -= 2.0 * r * (1.0 - bp);
                        g[2 * k + 1] += 2.0 * r * a * dbp;
                    }
                    if 2 * k + 2 < n {
                        let t = 6.4 * (b - 0.5) - x[2 * k + 2] + 3.0;
                        f += t * t / 50.0;
                        g[2 * k + 1] += 2.0 * 6.4 * t / 50.0;
                        g[2 * k + 2] -= 2.0 * t / 50.0;
                    }
                }
            }
        }
        (f, g)
    }
}
