//! Gauss rules and composite Simpson weights.
//!
//! Gauss nodes come from the Golub–Welsch eigenvalue problem and are then
//! polished by Newton steps on the three-term recurrence, which also gives
//! the weights in closed form.

use std::f64::consts::PI;

use faer::{Mat, Side};

use crate::error::{invalid, Error, Result};

/// Nodes and weights of a quadrature rule.
#[derive(Clone, Debug)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Eigenvalues of the symmetric tridiagonal Jacobi matrix, ascending.
fn jacobi_nodes(diag: &[f64], off: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let j = Mat::<f64>::from_fn(n, n, |r, c| {
        if r == c {
            diag[r]
        } else if r == c + 1 {
            off[c]
        } else if c == r + 1 {
            off[r]
        } else {
            0.0
        }
    });
    let mut v = j.self_adjoint_eigenvalues(Side::Lower).map_err(|_| Error::Eigen)?;
    v.sort_by(f64::total_cmp);
    Ok(v)
}

fn polish(x0: f64, eval: impl Fn(f64) -> (f64, f64)) -> f64 {
    let mut x = x0;
    for _ in 0..8 {
        let (p, dp) = eval(x);
        if dp == 0.0 || !dp.is_finite() {
            break;
        }
        let step = p / dp;
        x -= step;
        if step.abs() <= 4.0 * f64::EPSILON * x.abs().max(1.0) {
            break;
        }
    }
    x
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("a quadrature rule needs at least one node"));
    }
    Ok(())
}

/// Legendre `P_n(x)` and `P_{n-1}(x)`.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss–Legendre on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    check_n(n)?;
    let off: Vec<f64> = (1..n).map(|k| k as f64 / ((4 * k * k - 1) as f64).sqrt()).collect();
    let guesses = jacobi_nodes(&vec![0.0; n], &off)?;
    let nf = n as f64;
    let deriv = |x: f64| {
        let (p, pm) = legendre(n, x);
        (p, nf * (x * p - pm) / (x * x - 1.0))
    };
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, &g) in guesses.iter().enumerate() {
        // exact symmetry keeps odd integrands exact
        let x = if i >= n.div_ceil(2) {
            -nodes[n - 1 - i]
        } else if n % 2 == 1 && i == n / 2 {
            0.0
        } else {
            polish(g, deriv)
        };
        let (_, dp) = deriv(x);
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre mapped onto `[a, b]`.
pub fn gauss_legendre_on(n: usize, a: f64, b: f64) -> Result<Rule> {
    let r = gauss_legendre(n)?;
    let (mid, half) = ((a + b) / 2.0, (b - a) / 2.0);
    Ok(Rule {
        nodes: r.nodes.iter().map(|x| mid + half * x).collect(),
        weights: r.weights.iter().map(|w| w * half).collect(),
    })
}

/// Laguerre `L_n(x)` and `L_{n-1}(x)`.
fn laguerre(n: usize, x: f64) -> (f64, f64) {
    let (mut l0, mut l1) = (1.0, 1.0 - x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let l2 = ((2.0 * kf - 1.0 - x) * l1 - (kf - 1.0) * l0) / kf;
        l0 = l1;
        l1 = l2;
    }
    (l1, l0)
}

/// Gauss–Laguerre for `∫₀^∞ e^{-x} f(x) dx`.
pub fn gauss_laguerre(n: usize) -> Result<Rule> {
    check_n(n)?;
    let diag: Vec<f64> = (0..n).map(|k| (2 * k + 1) as f64).collect();
    let off: Vec<f64> = (1..n).map(|k| k as f64).collect();
    let guesses = jacobi_nodes(&diag, &off)?;
    let nf = n as f64;
    let deriv = |x: f64| {
        let (l, lm) = laguerre(n, x);
        (l, nf * (l - lm) / x)
    };
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for &g in &guesses {
        let x = polish(g, deriv);
        let (_, dl) = deriv(x);
        nodes.push(x);
        weights.push(1.0 / (x * dl * dl));
    }
    Ok(Rule { nodes, weights })
}

/// Orthonormal Hermite functions `p_n(x)`, `p_{n-1}(x)` for weight `e^{-x²}`.
fn hermite(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 0.0;
    let mut p1 = PI.powf(-0.25);
    for j in 1..=n {
        let jf = j as f64;
        let p2 = x * (2.0 / jf).sqrt() * p1 - ((jf - 1.0) / jf).sqrt() * p0;
        p0 = p1;
        p1 = p2;
    }
    (p1, p0)
}

/// Gauss–Hermite for `∫ e^{-x²} f(x) dx`.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    check_n(n)?;
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let guesses = jacobi_nodes(&vec![0.0; n], &off)?;
    let nf = n as f64;
    let deriv = |x: f64| {
        let (p, pm) = hermite(n, x);
        (p, (2.0 * nf).sqrt() * pm)
    };
    let mut nodes: Vec<f64> = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for (i, &g) in guesses.iter().enumerate() {
        let x = if i >= n.div_ceil(2) {
            -nodes[n - 1 - i]
        } else if n % 2 == 1 && i == n / 2 {
            0.0
        } else {
            polish(g, deriv)
        };
        let (_, dp) = deriv(x);
        nodes.push(x);
        weights.push(2.0 / (dp * dp));
    }
    Ok(Rule { nodes, weights })
}

/// Composite Simpson weights for `n` equally spaced nodes on `[a, b]`.
pub fn simpson(n: usize, a: f64, b: f64) -> Result<Rule> {
    if n < 3 || n % 2 == 0 {
        return Err(invalid(format!("Simpson needs an odd node count >= 3, got {n}")));
    }
    let h = (b - a) / (n - 1) as f64;
    let nodes = (0..n).map(|k| a + h * k as f64).collect();
    let weights = (0..n)
        .map(|k| {
            let c = if k == 0 || k == n - 1 {
                1.0
            } else if k % 2 == 1 {
                4.0
            } else {
                2.0
            };
            c * h / 3.0
        })
        .collect();
    Ok(Rule { nodes, weights })
}
