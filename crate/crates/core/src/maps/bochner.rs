//! Pointwise checks of the Bochner identity for `|du|^2` along the flow and of
//! the Hessian comparison inequalities for `rho^2` and `1 - cos(sqrt(kappa) rho)`.

use serde::{Deserialize, Serialize};

use super::equivariant::{deriv3, EquivariantMap};
use crate::error::{Error, Result};
use crate::numerics::{cot_k, observed_order};

/// Both sides of the Bochner identity at one node.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BochnerLevel {
    pub dr: f64,
    /// `(Delta + d_tau) |du|^2` by finite differences.
    pub lhs: f64,
    /// `2|nabla du|^2 + 2 (Ric - h)(du, du) - 2 (target curvature term)`.
    pub rhs: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BochnerReport {
    pub r: f64,
    pub t: f64,
    pub levels: Vec<BochnerLevel>,
    /// Fitted order of `|residual|` under halving of `dr`.
    pub order: Option<f64>,
}

/// `(Delta - d_t) F` at an interior node for a field `F` sampled per frame.
fn heat_operator(
    map: &EquivariantMap,
    field: &dyn Fn(usize, usize) -> Result<f64>,
    ir: usize,
    it: usize,
) -> Result<f64> {
    let nr = map.radii().len();
    if ir == 0 || ir + 1 >= nr {
        return Err(Error::BoundaryStencil(format!("radius index {ir}")));
    }
    let dr = map.dr();
    let r = map.radii()[ir];
    let c = map.c_at(map.times()[it])?;
    let m1 = map.dimension() as f64 - 1.0;
    let (fm, f0, fp) = (field(ir - 1, it)?, field(ir, it)?, field(ir + 1, it)?);
    let lap = ((fp - 2.0 * f0 + fm) / (dr * dr) + m1 * cot_k(map.domain().k0(), r) * (fp - fm) / (2.0 * dr)) / c;
    let k = map.times().len();
    let dt = if k == 1 {
        0.0
    } else if k == 2 {
        (field(ir, 1)? - field(ir, 0)?) / (map.times()[1] - map.times()[0])
    } else {
        let (base, at) = if it == 0 {
            (0, 0)
        } else if it == k - 1 {
            (k - 3, 2)
        } else {
            (it - 1, 1)
        };
        let ts = [map.times()[base], map.times()[base + 1], map.times()[base + 2]];
        let ys = [field(ir, base)?, field(ir, base + 1)?, field(ir, base + 2)?];
        deriv3(ts, ys, at)
    };
    Ok(lap - dt)
}

/// Both sides of the Bochner identity at grid node `(ir, it)`.
pub fn bochner_level(map: &EquivariantMap, ir: usize, it: usize) -> Result<BochnerLevel> {
    let j = map.jet(ir, it)?;
    let m1 = map.dimension() as f64 - 1.0;
    let energy = |i: usize, k: usize| map.energy_density(i, k);
    let lhs = heat_operator(map, &energy, ir, it)?;
    let e = j.energy_density;
    let pointwise_quartic = j.a.powi(4) + m1 * j.b.powi(4);
    let kappa = map.target().kappa();
    let rhs = 2.0 * j.hess_sq + 2.0 * map.ricci_minus_h(j.t)? * e - 2.0 * kappa * (e * e - pointwise_quartic);
    Ok(BochnerLevel {
        dr: map.dr(),
        lhs,
        rhs,
        residual: lhs - rhs,
    })
}

/// Bochner residual at physical point `(r, t)` for each map of a refinement
/// sequence. Every map must be a numerical solution: its flow residual at the
/// node may not exceed `solution_threshold`.
pub fn bochner_residual(
    levels: &[EquivariantMap],
    r: f64,
    t: f64,
    solution_threshold: f64,
) -> Result<BochnerReport> {
    let mut out = Vec::with_capacity(levels.len());
    for map in levels {
        let ir = map
            .radius_index(r)
            .ok_or_else(|| Error::InvalidMap(format!("radius {r} is not a grid node at dr = {}", map.dr())))?;
        let it = map
            .time_index(t)
            .ok_or_else(|| Error::InvalidMap(format!("time {t} is not a stored frame")))?;
        let flow_res = map.tension_energy(ir, it)?.flow_residual.abs();
        if flow_res > solution_threshold {
            return Err(Error::NotASolution {
                residual: flow_res,
                threshold: solution_threshold,
            });
        }
        out.push(bochner_level(map, ir, it)?);
    }
    let errors: Vec<f64> = out.iter().map(|l| l.residual.abs()).collect();
    let ratio = if out.len() >= 2 { out[0].dr / out[1].dr } else { 2.0 };
    Ok(BochnerReport {
        r,
        t,
        order: observed_order(&errors, ratio),
        levels: out,
    })
}

/// `(Delta + d_tau)` of the comparison function minus its lower bound:
/// `rho^2` against `2|du|^2` for `kappa <= 0`, and
/// `1 - cos(sqrt(kappa) rho)` against `kappa cos(sqrt(kappa) rho) |du|^2` for `kappa > 0`.
pub fn hessian_comparison_slack(map: &EquivariantMap, ir: usize, it: usize) -> Result<f64> {
    let kappa = map.target().kappa();
    let e = map.energy_density(ir, it)?;
    if kappa > 0.0 {
        let sk = kappa.sqrt();
        let phi = |i: usize, k: usize| Ok(1.0 - (sk * map.rho(i, k)).cos());
        let lhs = heat_operator(map, &phi, ir, it)?;
        Ok(lhs - kappa * (sk * map.rho(ir, it)).cos() * e)
    } else {
        let sq = |i: usize, k: usize| Ok(map.rho(i, k).powi(2));
        let lhs = heat_operator(map, &sq, ir, it)?;
        Ok(lhs - 2.0 * e)
    }
}

/// `(|nabla |du||^2, ((m-1)/m) |nabla du|^2)` at an interior node.
pub fn kato_pair(map: &EquivariantMap, ir: usize, it: usize) -> Result<(f64, f64)> {
    let j = map.jet(ir, it)?;
    let m = map.dimension() as f64;
    let norm = |i: usize| map.energy_density(i, it).map(f64::sqrt);
    let d = (norm(ir + 1)? - norm(ir - 1)?) / (2.0 * map.dr());
    Ok((d * d / j.c, (m - 1.0) / m * j.hess_sq))
}
