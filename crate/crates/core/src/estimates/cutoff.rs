use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Side length of the measurement grid for the cutoff constants.
pub const MEASUREMENT_GRID: usize = 2048;

/// Smooth step `theta(y) = 1 / (1 + exp(1/y - 1/(1-y)))` with its first two
/// derivatives; 0 for `y <= 0` and 1 for `y >= 1`.
pub fn smooth_step(y: f64) -> (f64, f64, f64) {
    if y <= 0.0 {
        return (0.0, 0.0, 0.0);
    }
    if y >= 1.0 {
        return (1.0, 0.0, 0.0);
    }
    let z = 1.0 / y - 1.0 / (1.0 - y);
    let th = 1.0 / (1.0 + z.exp());
    let one_minus = 1.0 / (1.0 + (-z).exp());
    let w = 1.0 / (y * y) + 1.0 / ((1.0 - y) * (1.0 - y));
    let dw = -2.0 / (y * y * y) + 2.0 / ((1.0 - y) * (1.0 - y) * (1.0 - y));
    let p = th * one_minus;
    let d1 = p * w;
    let d2 = d1 * (1.0 - 2.0 * th) * w + p * dw;
    (th, d1, d2)
}

/// `phi(x) = (1 - theta((x - a) / (1 - a)))^8`, equal to 1 on `[0, a]` and 0 on `[1, inf)`.
/// Returns `(S, S', S'')` for the base `S = 1 - theta(...)` with derivatives in `x`.
fn base(x: f64, a: f64) -> (f64, f64, f64) {
    let k = 1.0 / (1.0 - a);
    let (th, d1, d2) = smooth_step((x - a) * k);
    (1.0 - th, -d1 * k, -d2 * k * k)
}

const POWER: f64 = 8.0;

/// One-dimensional factor with plateau `[0, a]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub plateau: f64,
}

impl Profile {
    /// `(phi, phi', phi'')`.
    pub fn eval(&self, x: f64) -> (f64, f64, f64) {
        let (s, s1, s2) = base(x, self.plateau);
        let p = POWER;
        (
            s.powf(p),
            p * s.powf(p - 1.0) * s1,
            p * (p - 1.0) * s.powf(p - 2.0) * s1 * s1 + p * s.powf(p - 1.0) * s2,
        )
    }

    /// `|phi'| phi^{-e}` and `|phi''| phi^{-e}` written through the base so
    /// that nothing is divided by a vanishing number; 0 where `phi = 0`.
    fn ratios(&self, x: f64, e: f64) -> (f64, f64) {
        let (s, s1, s2) = base(x, self.plateau);
        if s <= 0.0 {
            return (0.0, 0.0);
        }
        let p = POWER;
        let d1 = p * s.powf(p - 1.0 - p * e) * s1.abs();
        let d2 = (p * (p - 1.0) * s.powf(p - 2.0 - p * e) * s1 * s1 + p * s.powf(p - 1.0 - p * e) * s2).abs();
        (d1, d2)
    }
}

pub const RADIAL_PROFILE: Profile = Profile { plateau: 0.5 };
pub const TIME_PROFILE: Profile = Profile { plateau: 0.25 };

/// `psi(r, tau) = phi_1(r / R) phi_2(tau / T)` with the measured constants
/// `c_alpha = sup max(|psi_r| psi^{-alpha} R, |psi_rr| psi^{-alpha} R^2)` and
/// `c = sup |psi_tau| psi^{-1/2} T`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffFunction {
    #[serde(rename = "R")]
    pub r_window: f64,
    #[serde(rename = "T")]
    pub t_window: f64,
    pub alpha: f64,
    pub c_alpha: f64,
    #[serde(rename = "C")]
    pub c: f64,
}

pub fn build_cutoff(r_window: f64, t_window: f64, alpha: f64) -> Result<CutoffFunction> {
    if !(r_window > 0.0 && r_window.is_finite() && t_window > 0.0 && t_window.is_finite()) {
        return Err(Error::InvalidWindow(format!("R = {r_window}, T = {t_window}")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidWindow(format!("alpha = {alpha} outside (0, 1)")));
    }
    let (c_alpha, c) = measure(alpha, MEASUREMENT_GRID, 0.0);
    Ok(CutoffFunction {
        r_window,
        t_window,
        alpha,
        c_alpha,
        c,
    })
}

/// Suprema of the three ratios on an `n x n` grid of the unit square in the
/// scaled variables `(r / R, tau / T)`, offset by `shift` grid cells.
pub fn measure(alpha: f64, n: usize, shift: f64) -> (f64, f64) {
    let h = 1.0 / (n - 1) as f64;
    let xs: Vec<f64> = (0..n).map(|i| ((i as f64 + shift) * h).min(1.0)).collect();
    let radial: Vec<(f64, f64)> = xs.iter().map(|&x| RADIAL_PROFILE.ratios(x, alpha)).collect();
    let temporal: Vec<f64> = xs.iter().map(|&y| TIME_PROFILE.ratios(y, 0.5).0).collect();
    let phi1: Vec<f64> = xs.iter().map(|&x| RADIAL_PROFILE.eval(x).0).collect();
    let phi2: Vec<f64> = xs.iter().map(|&y| TIME_PROFILE.eval(y).0).collect();
    let mut c_alpha: f64 = 0.0;
    let mut c: f64 = 0.0;
    for j in 0..n {
        let (p2, t2) = (phi2[j], temporal[j]);
        let w = p2.powf(1.0 - alpha);
        for i in 0..n {
            let (r1, r2) = radial[i];
            c_alpha = c_alpha.max(r1 * w).max(r2 * w);
            c = c.max(t2 * phi1[i].powf(0.5));
        }
    }
    (c_alpha, c)
}

impl CutoffFunction {
    pub fn psi(&self, r: f64, tau: f64) -> f64 {
        RADIAL_PROFILE.eval(r / self.r_window).0 * TIME_PROFILE.eval(tau / self.t_window).0
    }

    /// `(psi, psi_r, psi_rr, psi_tau)`.
    pub fn derivatives(&self, r: f64, tau: f64) -> (f64, f64, f64, f64) {
        let (a, a1, a2) = RADIAL_PROFILE.eval(r / self.r_window);
        let (b, b1, _) = TIME_PROFILE.eval(tau / self.t_window);
        let (rw, tw) = (self.r_window, self.t_window);
        (a * b, a1 * b / rw, a2 * b / (rw * rw), a * b1 / tw)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_and_support() {
        let cut = build_cutoff(3.0, 2.0, 0.75).unwrap();
        assert_eq!(cut.psi(0.0, 0.0), 1.0);
        assert_eq!(cut.psi(1.5, 0.5), 1.0);
        for x in [0.0, 0.7, 2.9] {
            assert_eq!(cut.psi(3.0, x), 0.0);
            assert_eq!(cut.psi(x, 2.0), 0.0);
        }
        let mid = cut.psi(2.2, 1.0);
        assert!(mid > 0.0 && mid < 1.0);
    }

    #[test]
    fn radial_derivative_sign() {
        let cut = build_cutoff(1.0, 1.0, 0.75).unwrap();
        for i in 0..=200 {
            let r = i as f64 / 200.0 * 1.2;
            let (_, dr, _, _) = cut.derivatives(r, 0.1);
            assert!(dr <= 0.0);
            if r <= 0.5 {
                assert_eq!(dr, 0.0);
            }
        }
    }

    #[test]
    fn step_derivatives_match_differences() {
        for &y in &[0.2, 0.5, 0.8] {
            let h = 1e-5;
            let (_, d1, d2) = smooth_step(y);
            let fd1 = (smooth_step(y + h).0 - smooth_step(y - h).0) / (2.0 * h);
            let fd2 = (smooth_step(y + h).1 - smooth_step(y - h).1) / (2.0 * h);
            assert!((d1 - fd1).abs() < 1e-7 * (1.0 + d1.abs()));
            assert!((d2 - fd2).abs() < 1e-6 * (1.0 + d2.abs()));
        }
    }

    #[test]
    fn constants_are_scale_free() {
        let a = build_cutoff(1.0, 1.0, 0.75).unwrap();
        let b = build_cutoff(2.0, 5.0, 0.75).unwrap();
        assert!((a.c_alpha - b.c_alpha).abs() <= 1e-10 * a.c_alpha);
        assert!((a.c - b.c).abs() <= 1e-10 * a.c);
        assert!(a.c_alpha.is_finite() && a.c_alpha > 0.0 && a.c.is_finite() && a.c > 0.0);
    }
}
