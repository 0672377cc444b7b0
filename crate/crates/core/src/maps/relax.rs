//! Static equivariant harmonic maps with prescribed value at `r_max`,
//! obtained by Newton iteration on the centred-difference tension.

use super::equivariant::EquivariantMap;
use super::target::TargetSpaceForm;
use crate::error::{Error, Result};
use crate::flows::ModelFlow;
use crate::numerics::{cot_k, sn, solve_tridiagonal};

/// Solves `rho_rr + (m-1) cot(r) rho_r - (m-1) sn(rho) sn'(rho) / f^2 = 0`
/// on `nr` nodes of `[0, r_max]` with `rho(0) = 0`, `rho(r_max) = boundary`.
/// The initial guess is linear in `r`.
pub fn relax_harmonic(
    domain: ModelFlow,
    target: TargetSpaceForm,
    r_max: f64,
    nr: usize,
    boundary: f64,
) -> Result<EquivariantMap> {
    if !domain.is_static() {
        return Err(Error::InvalidMap("relaxation needs a static domain".into()));
    }
    target.check_regular(boundary)?;
    if nr < 5 {
        return Err(Error::InvalidMap(format!("{nr} nodes are too few")));
    }
    let n = nr - 1;
    let dr = r_max / n as f64;
    let m1 = domain.dimension() as f64 - 1.0;
    let k0 = domain.k0();
    let r: Vec<f64> = (0..nr).map(|i| i as f64 * dr).collect();
    let mut rho: Vec<f64> = r.iter().map(|x| boundary * x / r_max).collect();

    let mut lower = vec![0.0; n - 1];
    let mut diag = vec![0.0; n - 1];
    let mut upper = vec![0.0; n - 1];
    let mut res = vec![0.0; n - 1];
    let scale = 1.0 + boundary.abs() / (r_max * r_max);
    for _ in 0..100 {
        let mut worst: f64 = 0.0;
        for i in 1..n {
            let j = i - 1;
            let ct = cot_k(k0, r[i]);
            let f2 = sn(k0, r[i]).powi(2);
            let t = (rho[i + 1] - 2.0 * rho[i] + rho[i - 1]) / (dr * dr)
                + m1 * ct * (rho[i + 1] - rho[i - 1]) / (2.0 * dr)
                - m1 * target.sn(rho[i]) * target.sn_prime(rho[i]) / f2;
            res[j] = -t;
            worst = worst.max(t.abs());
            lower[j] = 1.0 / (dr * dr) - m1 * ct / (2.0 * dr);
            upper[j] = 1.0 / (dr * dr) + m1 * ct / (2.0 * dr);
            diag[j] = -2.0 / (dr * dr) - m1 * target.sn_sn_prime_derivative(rho[i]) / f2;
        }
        if worst < 1e-11 * scale {
            let map = EquivariantMap::from_frames(domain, target, r_max, vec![0.0], vec![rho])?;
            return Ok(map);
        }
        let delta = solve_tridiagonal(&lower, &diag, &upper, &res);
        for i in 1..n {
            rho[i] += delta[i - 1];
        }
        if let Some(bad) = rho.iter().find(|v| !v.is_finite() || target.check_regular(v.abs()).is_err()) {
            return Err(Error::OutsideRegularBall {
                rho: *bad,
                limit: target.regular_radius(),
            });
        }
    }
    Err(Error::NotConvergent)
}
