//! Small numerical building blocks shared by the geometric modules.

pub mod dopri;
pub mod fit;
pub mod quad;
pub mod spline;
pub mod tridiag;

pub use fit::{fit_line, observed_order, LineFit};
pub use spline::CubicSpline;
pub use tridiag::solve_tridiagonal;

/// Generalized sine of a space form of curvature `k`.
pub fn sn(k: f64, x: f64) -> f64 {
    if k > 0.0 {
        let s = k.sqrt();
        (s * x).sin() / s
    } else if k < 0.0 {
        let s = (-k).sqrt();
        (s * x).sinh() / s
    } else {
        x
    }
}

/// Derivative of [`sn`].
pub fn sn_prime(k: f64, x: f64) -> f64 {
    if k > 0.0 {
        (k.sqrt() * x).cos()
    } else if k < 0.0 {
        ((-k).sqrt() * x).cosh()
    } else {
        1.0
    }
}

/// `sn'(x) / sn(x)`; the caller is responsible for avoiding x = 0.
pub fn cot_k(k: f64, x: f64) -> f64 {
    sn_prime(k, x) / sn(k, x)
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n)
            .map(|i| a + (b - a) * i as f64 / (n - 1) as f64)
            .collect(),
    }
}

pub fn logspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    let mut out: Vec<f64> = linspace(a.ln(), b.ln(), n).into_iter().map(f64::exp).collect();
    // exp(ln x) can land one ulp outside the requested range
    if let Some(first) = out.first_mut() {
        *first = a;
    }
    if n > 1 {
        out[n - 1] = b;
    }
    out
}
