//! Radial harmonic maps from flat space into the unit sphere.
//!
//! With `t = ln r` and `alpha = 2 rho` the profile equation becomes the damped
//! pendulum `alpha'' + (m - 2) alpha' - (m - 1) sin(alpha) = 0`, integrated here
//! as the first-order system `(alpha, beta)`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flows::ModelFlow;
use crate::maps::{EquivariantMap, TargetSpaceForm};
use crate::numerics::dopri::{integrate, DenseSolution, Dopri5Options};
use crate::numerics::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Roots {
    Real {
        lambda1: f64,
        lambda2: f64,
        #[serde(rename = "N1")]
        n1: f64,
        #[serde(rename = "N2")]
        n2: f64,
    },
    Complex {
        re: f64,
        im: f64,
    },
}

/// Roots of `lambda^2 + (m - 2) lambda + (m - 1) = 0`, the linearization at `(pi, 0)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootData {
    pub m: usize,
    pub discriminant: f64,
    pub roots: Roots,
}

impl RootData {
    pub fn is_real(&self) -> bool {
        matches!(self.roots, Roots::Real { .. })
    }

    pub fn n1(&self) -> Option<f64> {
        match self.roots {
            Roots::Real { n1, .. } => Some(n1),
            Roots::Complex { .. } => None,
        }
    }

    pub fn n2(&self) -> Option<f64> {
        match self.roots {
            Roots::Real { n2, .. } => Some(n2),
            Roots::Complex { .. } => None,
        }
    }

    pub fn lambdas(&self) -> Option<(f64, f64)> {
        match self.roots {
            Roots::Real { lambda1, lambda2, .. } => Some((lambda1, lambda2)),
            Roots::Complex { .. } => None,
        }
    }
}

pub fn characteristic_roots(m: usize) -> RootData {
    let mf = m as f64;
    let b = mf - 2.0;
    let disc = b * b - 4.0 * (mf - 1.0);
    let roots = if disc >= 0.0 {
        // the larger-magnitude root first, the other from the product m - 1
        let lambda2 = -(b + disc.sqrt()) / 2.0;
        let lambda1 = (mf - 1.0) / lambda2;
        Roots::Real {
            lambda1,
            lambda2,
            n1: -lambda1,
            n2: -lambda2,
        }
    } else {
        Roots::Complex {
            re: -b / 2.0,
            im: (-disc).sqrt() / 2.0,
        }
    };
    RootData {
        m,
        discriminant: disc,
        roots,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    NodeConvergent,
    SpiralCrossing,
    Undetermined,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PendulumTrajectory {
    pub m: usize,
    pub epsilon: f64,
    pub t_span: (f64, f64),
    /// `(t, alpha, beta)` on a uniform grid in `t`.
    pub samples: Vec<(f64, f64, f64)>,
    pub classification: Classification,
    /// First `t` with `alpha = pi`, if any.
    pub first_crossing: Option<f64>,
    #[serde(skip)]
    dense: Option<DenseSolution<2>>,
}

pub const DEFAULT_EPSILON: f64 = 1e-6;
pub const DEFAULT_T_SPAN: (f64, f64) = (-20.0, 20.0);
const SAMPLE_DT: f64 = 0.01;

fn pendulum(m: usize) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let mf = m as f64;
    move |_, y| [y[1], (2.0 - mf) * y[1] + (mf - 1.0) * y[0].sin()]
}

/// Integrates the pendulum system from an arbitrary state.
pub fn integrate_pendulum(m: usize, t0: f64, y0: [f64; 2], t1: f64, rtol: f64) -> Result<DenseSolution<2>> {
    let opts = Dopri5Options {
        rtol,
        atol: rtol * 1e-2,
        first_step: 1e-4,
        max_step: 0.05,
        max_steps: 2_000_000,
    };
    integrate(pendulum(m), t0, y0, t1, &opts).map_err(Error::ToleranceNotMet)
}

/// Launches from `(epsilon, epsilon)` along the unstable direction of `(0, 0)`.
pub fn su_solve(m: usize, epsilon: f64, t_span: (f64, f64), tol: f64) -> Result<PendulumTrajectory> {
    if m < 2 {
        return Err(Error::InvalidMap(format!("dimension {m} < 2")));
    }
    if !(epsilon > 0.0 && epsilon <= 0.1) {
        return Err(Error::InvalidMap(format!("epsilon {epsilon} outside (0, 0.1]")));
    }
    let (t0, t1) = t_span;
    let dense = integrate_pendulum(m, t0, [epsilon, epsilon], t1, tol)?;

    let mut first_crossing = None;
    let nodes = dense.nodes();
    for w in nodes.windows(2) {
        let (a, b) = (w[0].1[0] - PI, w[1].1[0] - PI);
        if a < 0.0 && b >= 0.0 {
            let (mut lo, mut hi) = (w[0].0, w[1].0);
            for _ in 0..100 {
                let mid = 0.5 * (lo + hi);
                if dense.eval(mid).unwrap()[0] < PI {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            first_crossing = Some(0.5 * (lo + hi));
            break;
        }
    }

    let n = ((t1 - t0) / SAMPLE_DT).round() as usize;
    let samples: Vec<(f64, f64, f64)> = (0..=n)
        .map(|i| {
            let t = if i == n { t1 } else { t0 + i as f64 * SAMPLE_DT };
            let y = dense.eval(t).unwrap();
            (t, y[0], y[1])
        })
        .collect();

    let monotone = nodes.windows(2).all(|w| w[1].1[0] >= w[0].1[0]);
    let end = nodes.last().unwrap().1[0];
    let classification = if first_crossing.is_some() {
        Classification::SpiralCrossing
    } else if monotone && (PI - end).abs() < 1e-3 {
        Classification::NodeConvergent
    } else {
        Classification::Undetermined
    };
    let conflict = match classification {
        Classification::SpiralCrossing => m >= 7,
        Classification::NodeConvergent => m <= 6,
        Classification::Undetermined => false,
    };
    if conflict {
        return Err(Error::ClassificationConflict {
            m,
            found: format!("{classification:?}"),
        });
    }
    Ok(PendulumTrajectory {
        m,
        epsilon,
        t_span,
        samples,
        classification,
        first_crossing,
        dense: Some(dense),
    })
}

/// Defaults: `epsilon = 1e-6`, `t in [-20, 20]`, relative tolerance `1e-12`.
pub fn su_solve_default(m: usize) -> Result<PendulumTrajectory> {
    su_solve(m, DEFAULT_EPSILON, DEFAULT_T_SPAN, 1e-12)
}

impl PendulumTrajectory {
    /// Radius of the first crossing of `rho = pi / 2`.
    pub fn crossing_radius(&self) -> Option<f64> {
        self.first_crossing.map(f64::exp)
    }

    /// `(alpha, beta)` at any `t` in the span, from the dense output when it is
    /// available and by linear interpolation of the samples otherwise.
    pub fn state(&self, t: f64) -> Option<[f64; 2]> {
        if let Some(d) = &self.dense {
            return d.eval(t);
        }
        let (t0, t1) = self.t_span;
        if t < t0 || t > t1 {
            return None;
        }
        let i = (((t - t0) / SAMPLE_DT).floor() as usize).min(self.samples.len() - 2);
        let (ta, aa, ba) = self.samples[i];
        let (tb, ab, bb) = self.samples[i + 1];
        let w = (t - ta) / (tb - ta);
        Some([aa + w * (ab - aa), ba + w * (bb - ba)])
    }

    /// `rho(r)` of the launched profile; radii below `e^{t_min}` use the linear regime.
    pub fn rho(&self, r: f64) -> Option<f64> {
        if r <= 0.0 {
            return Some(0.0);
        }
        let t = r.ln();
        if t < self.t_span.0 {
            return Some(0.5 * self.epsilon * (t - self.t_span.0).exp());
        }
        self.state(t).map(|y| 0.5 * y[0])
    }

    /// CSV with header `t,alpha,beta,r,rho`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,alpha,beta,r,rho\n");
        for &(t, a, b) in &self.samples {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}", t, a, b, t.exp(), 0.5 * a);
        }
        out
    }

    pub fn energy(&self, alpha: f64, beta: f64) -> f64 {
        0.5 * beta * beta + (self.m as f64 - 1.0) * (1.0 + alpha.cos())
    }
}

/// Which characteristic root a fitted decay rate matches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RootMatch {
    Slow,
    Fast,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentReport {
    pub m: usize,
    pub slope: f64,
    pub stderr: f64,
    #[serde(rename = "N1_formula")]
    pub n1_formula: f64,
    /// Growth order of `1 / cos(rho(r))`, which equals `-slope`.
    pub growth_order_of_v: f64,
    pub window: (f64, f64),
    pub samples: usize,
    pub matched_root: RootMatch,
}

/// Default window: samples with `pi - alpha` in `[1e-8, 1e-4]`.
pub const DEFAULT_FIT_BAND: (f64, f64) = (1e-8, 1e-4);

pub fn asymptotic_exponent(traj: &PendulumTrajectory, fit_window: Option<(f64, f64)>) -> Result<ExponentReport> {
    if traj.classification != Classification::NodeConvergent {
        return Err(Error::NotConvergent);
    }
    let roots = characteristic_roots(traj.m);
    let (lambda1, lambda2) = roots.lambdas().ok_or(Error::NotConvergent)?;
    let picked: Vec<(f64, f64)> = traj
        .samples
        .iter()
        .filter(|(t, a, _)| {
            let gap = PI - a;
            match fit_window {
                Some((ta, tb)) => *t >= ta && *t <= tb && gap > 0.0,
                None => gap >= DEFAULT_FIT_BAND.0 && gap <= DEFAULT_FIT_BAND.1,
            }
        })
        .map(|&(t, a, _)| (t, (PI - a).ln()))
        .collect();
    if picked.len() < 20 {
        return Err(Error::WindowTooNarrow(picked.len()));
    }
    let xs: Vec<f64> = picked.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = picked.iter().map(|p| p.1).collect();
    let fit = fit_line(&xs, &ys).ok_or(Error::WindowTooNarrow(picked.len()))?;
    let matched_root = if (fit.slope - lambda1).abs() <= (fit.slope - lambda2).abs() {
        RootMatch::Slow
    } else {
        RootMatch::Fast
    };
    Ok(ExponentReport {
        m: traj.m,
        slope: fit.slope,
        stderr: fit.stderr,
        n1_formula: -lambda1,
        growth_order_of_v: -fit.slope,
        window: (xs[0], *xs.last().unwrap()),
        samples: picked.len(),
        matched_root,
    })
}

/// Scale factor `mu` with `rho_SU(mu r)` having initial slope `slope`.
pub fn su_scale(traj: &PendulumTrajectory, slope: f64) -> f64 {
    2.0 * slope * traj.t_span.0.exp() / traj.epsilon
}

/// Static map from flat `R^m` into the unit sphere sampled from a
/// trajectory, rescaled so that `d rho / dr (0) = slope`.
pub fn su_equivariant_map(traj: &PendulumTrajectory, slope: f64, r_max: f64, nr: usize) -> Result<EquivariantMap> {
    let mu = su_scale(traj, slope);
    let t_end = traj.t_span.1;
    if (mu * r_max).ln() > t_end {
        return Err(Error::InvalidMap(format!(
            "r_max = {r_max} needs the trajectory beyond t = {t_end}"
        )));
    }
    let domain = ModelFlow::static_flat(traj.m);
    let target = TargetSpaceForm::unit_sphere(traj.m);
    EquivariantMap::stationary(domain, target, r_max, nr, |r| traj.rho(mu * r).unwrap_or(f64::NAN))
}
