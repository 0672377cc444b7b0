//! Forward-time integration of the equivariant heat flow
//! `rho_t = (1/c) [ f^{1-m} (f^{m-1} rho_r)_r - (m-1) sn(rho) sn'(rho) / f^2 ]`,
//! which is the backward flow `(Delta + d_tau) u = 0` relabelled by `t = -tau`.

use serde::{Deserialize, Serialize};

use super::equivariant::EquivariantMap;
use crate::error::{Error, Result};
use crate::numerics::{sn, solve_tridiagonal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// Linear part and `-(m-1) rho / f^2` implicit, the remainder of the
    /// target nonlinearity explicit.
    SemiImplicit,
    Explicit,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    pub scheme: Scheme,
    pub frame_stride: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self {
            scheme: Scheme::SemiImplicit,
            frame_stride: 8,
        }
    }
}

/// Evolves the last stored frame of `initial` from its time to `t1` with
/// step close to `dt` (the step is shrunk so that `t1` is hit exactly).
/// The radius grid of `initial` is kept; the value at `r_max` stays frozen.
pub fn hmhf_evolve(initial: &EquivariantMap, t1: f64, dt: f64, opts: EvolveOptions) -> Result<EquivariantMap> {
    let it0 = initial.times().len() - 1;
    let t0 = initial.times()[it0];
    if !(t1 > t0) || !(dt > 0.0) {
        return Err(Error::InvalidMap(format!("cannot evolve from {t0} to {t1} with dt = {dt}")));
    }
    let steps = ((t1 - t0) / dt - 1e-9).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    let stride = opts.frame_stride.max(1);

    let dr = initial.dr();
    let radii = initial.radii().to_vec();
    let n = radii.len() - 1;
    let m1 = initial.dimension() as f64 - 1.0;
    let k0 = initial.domain().k0();
    let target = *initial.target();

    let f: Vec<f64> = radii.iter().map(|&r| sn(k0, r)).collect();
    let vol: Vec<f64> = f.iter().map(|v| v.powf(m1)).collect();
    let w_half: Vec<f64> = (0..n).map(|i| sn(k0, (i as f64 + 0.5) * dr).powf(m1)).collect();

    let mut c_min = f64::INFINITY;
    for k in 0..=steps {
        c_min = c_min.min(initial.c_at(t0 + k as f64 * dt)?);
    }
    if opts.scheme == Scheme::Explicit {
        let limit = 0.25 * c_min * dr * dr;
        if dt > limit {
            return Err(Error::CflViolation { dt, limit });
        }
    }

    let mut rho = initial.frame(it0).to_vec();
    let mut times = vec![t0];
    let mut frames = vec![rho.clone()];
    let limit = target.regular_radius();

    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut rhs = vec![0.0; n - 1];

    for k in 1..=steps {
        let t = t0 + k as f64 * dt;
        match opts.scheme {
            Scheme::SemiImplicit => {
                let c = initial.c_at(t)?;
                let mu = dt / c;
                for i in 1..n {
                    let j = i - 1;
                    let wm = w_half[i - 1] / (dr * dr * vol[i]);
                    let wp = w_half[i] / (dr * dr * vol[i]);
                    let f2 = f[i] * f[i];
                    let explicit = -m1 * (target.sn(rho[i]) * target.sn_prime(rho[i]) - rho[i]) / f2;
                    lower[j] = -mu * wm;
                    upper[j] = -mu * wp;
                    diag[j] = 1.0 + mu * (wm + wp + m1 / f2);
                    rhs[j] = rho[i] + mu * explicit;
                }
                // rho_0 = 0 contributes nothing; the frozen outer value moves to the rhs
                rhs[n - 2] -= upper[n - 2] * rho[n];
                let sol = solve_tridiagonal(&lower, &diag, &upper, &rhs);
                rho[1..n].copy_from_slice(&sol);
            }
            Scheme::Explicit => {
                let c = initial.c_at(t - dt)?;
                let old = rho.clone();
                for i in 1..n {
                    let flux = (w_half[i] * (old[i + 1] - old[i]) - w_half[i - 1] * (old[i] - old[i - 1]))
                        / (dr * dr * vol[i]);
                    let react = m1 * target.sn(old[i]) * target.sn_prime(old[i]) / (f[i] * f[i]);
                    rho[i] = old[i] + dt / c * (flux - react);
                }
            }
        }
        let sup = rho.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if !sup.is_finite() || sup >= limit {
            return Err(Error::RegularBallExit { t, sup_rho: sup });
        }
        if k % stride == 0 || k == steps {
            times.push(t);
            frames.push(rho.clone());
        }
    }
    EquivariantMap::from_frames(
        initial.domain().clone(),
        target,
        initial.r_max(),
        times,
        frames,
    )
}
