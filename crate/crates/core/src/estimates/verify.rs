use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

use super::constants::EstimateConstants;
use crate::error::{Error, Result};
use crate::flows::AssumptionReport;
use crate::maps::EquivariantMap;
use crate::numerics::{linspace, logspace};
use crate::reduced::frak_d;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Theorem {
    /// Estimate for targets with nonpositive sectional curvature.
    Gradient1,
    /// Estimate for maps into a geodesic ball of a positively curved target.
    Gradient2,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    Holds,
    Fails,
    Vacuous,
}

/// Parabolic window `Q_{R,T}` with curvature-lower-bound parameter `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Window {
    #[serde(rename = "R")]
    pub r: f64,
    #[serde(rename = "T")]
    pub t: f64,
    #[serde(rename = "K")]
    pub k: f64,
}

impl Window {
    pub fn new(r: f64, t: f64, k: f64) -> Result<Self> {
        if !(r > 0.0 && t > 0.0 && k >= 0.0) || !(r.is_finite() && t.is_finite() && k.is_finite()) {
            return Err(Error::InvalidWindow(format!("R = {r}, T = {t}, K = {k}")));
        }
        Ok(Self { r, t, k })
    }

    /// Lower time floor used for every window.
    pub fn theta(&self) -> f64 {
        1e-3 * self.t
    }

    /// `1/R + 1/sqrt(T) + sqrt(K)`.
    pub fn scale(&self) -> f64 {
        1.0 / self.r + 1.0 / self.t.sqrt() + self.k.sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub theorem: Theorem,
    pub window: Window,
    pub theta: f64,
    /// `A` of the theorem: `sup 2 rho` or `(1 + sup phi) / 2`.
    pub a: f64,
    /// `sup (1/cos(sqrt(kappa) rho))^2` over the window, positive targets only.
    pub sup_inv_cos_sq: Option<f64>,
    pub constant: f64,
    pub lhs_max: f64,
    /// `(r, tau)` of `lhs_max`.
    pub location: (f64, f64),
    pub rhs: f64,
    pub margin: f64,
    pub nodes_outer: usize,
    pub nodes_inner: usize,
    pub assumptions: AssumptionReport,
    pub verdict: Verdict,
}

/// Sample of the map at one grid node of the space-time window.
#[derive(Debug, Clone, Copy)]
pub(crate) struct WindowNode {
    pub ir: usize,
    pub it: usize,
    pub r: f64,
    pub tau: f64,
}

const STATIONARY_TAU_NODES: usize = 9;

/// `(frame index, tau)` pairs in `[theta, t_top]`. A single-frame map is a
/// stationary solution and is sampled on a fixed set of times; otherwise the
/// stored frames at `tau = -t` are used.
fn tau_samples(map: &EquivariantMap, theta: f64, t_top: f64) -> Vec<(usize, f64)> {
    if map.times().len() == 1 {
        return linspace(theta, t_top, STATIONARY_TAU_NODES).into_iter().map(|tau| (0, tau)).collect();
    }
    map.times()
        .iter()
        .enumerate()
        .filter_map(|(k, &t)| {
            let tau = -t;
            (tau >= theta && tau <= t_top).then_some((k, tau))
        })
        .collect()
}

/// Grid nodes with `d(r, tau) <= radius`, `theta <= tau <= t_top`.
pub(crate) fn window_nodes(map: &EquivariantMap, radius: f64, theta: f64, t_top: f64) -> Result<Vec<WindowNode>> {
    let flow = map.domain();
    if t_top > flow.tau_max() && !flow.is_static() {
        return Err(Error::WindowExceedsData(format!(
            "T = {t_top} beyond the flow horizon {}",
            flow.tau_max()
        )));
    }
    // a static flow does not depend on tau, so any admissible tau gives the same distance
    let probe = |tau: f64| if flow.is_static() { tau.min(flow.tau_max()) } else { tau };
    let taus = tau_samples(map, theta, t_top);
    if map.times().len() > 1 && taus.is_empty() {
        return Err(Error::WindowExceedsData(format!("no stored frame with tau in [{theta}, {t_top}]")));
    }
    let covers_space = flow.k0() > 0.0 && map.r_max() >= std::f64::consts::PI * (1.0 - 1e-12);
    let mut out = Vec::new();
    for &(it, tau) in &taus {
        if !covers_space && frak_d(flow, map.r_max(), probe(tau))? < radius * (1.0 - 1e-12) {
            return Err(Error::WindowExceedsData(format!(
                "distance window {radius} reaches past r_max = {}",
                map.r_max()
            )));
        }
        for (ir, &r) in map.radii().iter().enumerate() {
            let d = frak_d(flow, r, probe(tau))?;
            if d <= radius {
                out.push(WindowNode { ir, it, r, tau });
            }
        }
    }
    Ok(out)
}

fn gate(map: &EquivariantMap, window: &Window) -> Result<AssumptionReport> {
    let flow = map.domain();
    let top = window.t.min(flow.tau_max());
    let lo = window.theta().min(top);
    flow.assumption_gate(&logspace(lo, top, 32), window.k)
}

fn verdict(assumptions: &AssumptionReport, margin: f64) -> Verdict {
    if !assumptions.passes() {
        Verdict::Vacuous
    } else if margin >= 0.0 {
        Verdict::Holds
    } else {
        Verdict::Fails
    }
}

/// Checks `|du| / (A^2 - rho^2) <= (c_m^{1/4} / A) (1/R + 1/sqrt T + sqrt K)` on
/// `Q_{R/2, T/4}` with `A = sup 2 rho` over `Q_{R,T}`.
pub fn gradient_estimate_verify_npc(
    map: &EquivariantMap,
    window: Window,
    constants: &EstimateConstants,
) -> Result<EstimateReport> {
    let kappa = map.target().kappa();
    if kappa > 0.0 {
        return Err(Error::InvalidMap(format!("target curvature {kappa} is positive")));
    }
    let theta = window.theta();
    let outer = window_nodes(map, window.r, theta, window.t)?;
    let inner = window_nodes(map, window.r / 2.0, theta, window.t / 4.0)?;
    if inner.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let a = outer.iter().fold(0.0f64, |s, n| s.max(2.0 * map.rho(n.ir, n.it).abs()));
    let mut lhs_max = 0.0;
    let mut location = (inner[0].r, inner[0].tau);
    for n in &inner {
        let du = map.energy_density(n.ir, n.it)?.sqrt();
        if du == 0.0 {
            continue;
        }
        let rho = map.rho(n.ir, n.it);
        let value = du / (a * a - rho * rho);
        if value > lhs_max {
            lhs_max = value;
            location = (n.r, n.tau);
        }
    }
    let constant = constants.npc_factor();
    let rhs = if a > 0.0 { constant / a * window.scale() } else { f64::INFINITY };
    let margin = rhs - lhs_max;
    let assumptions = gate(map, &window)?;
    Ok(EstimateReport {
        theorem: Theorem::Gradient1,
        window,
        theta,
        a,
        sup_inv_cos_sq: None,
        constant,
        lhs_max,
        location,
        rhs,
        margin,
        nodes_outer: outer.len(),
        nodes_inner: inner.len(),
        verdict: verdict(&assumptions, margin),
        assumptions,
    })
}

/// Checks `|du| / (A - phi) <= (4 cbar^{1/4} / sqrt kappa) (1/R + 1/sqrt T + sqrt K) sup (1/cos)^2`
/// on `Q_{R/2, T/4}` with `phi = 1 - cos(sqrt(kappa) rho)` and `A = (1 + sup phi) / 2`.
pub fn gradient_estimate_verify_pos(
    map: &EquivariantMap,
    window: Window,
    constants: &EstimateConstants,
) -> Result<EstimateReport> {
    let target = *map.target();
    let kappa = target.kappa();
    if !(kappa > 0.0) {
        return Err(Error::InvalidMap(format!("target curvature {kappa} is not positive")));
    }
    let sk = kappa.sqrt();
    let theta = window.theta();
    let outer = window_nodes(map, window.r, theta, window.t)?;
    let inner = window_nodes(map, window.r / 2.0, theta, window.t / 4.0)?;
    if inner.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let mut sup_phi: f64 = 0.0;
    let mut sup_inv_cos_sq: f64 = 1.0;
    for n in &outer {
        let rho = map.rho(n.ir, n.it).abs();
        target.check_regular(rho)?;
        let cs = (sk * rho).cos();
        sup_phi = sup_phi.max(1.0 - cs);
        sup_inv_cos_sq = sup_inv_cos_sq.max(1.0 / (cs * cs));
    }
    let a = 0.5 * (1.0 + sup_phi);
    let mut lhs_max = 0.0;
    let mut location = (inner[0].r, inner[0].tau);
    for n in &inner {
        let du = map.energy_density(n.ir, n.it)?.sqrt();
        let phi = 1.0 - (sk * map.rho(n.ir, n.it)).cos();
        let value = du / (a - phi);
        if value > lhs_max {
            lhs_max = value;
            location = (n.r, n.tau);
        }
    }
    let constant = constants.pos_factor();
    let rhs = constant / sk * window.scale() * sup_inv_cos_sq;
    let margin = rhs - lhs_max;
    let assumptions = gate(map, &window)?;
    Ok(EstimateReport {
        theorem: Theorem::Gradient2,
        window,
        theta,
        a,
        sup_inv_cos_sq: Some(sup_inv_cos_sq),
        constant,
        lhs_max,
        location,
        rhs,
        margin,
        nodes_outer: outer.len(),
        nodes_inner: inner.len(),
        verdict: verdict(&assumptions, margin),
        assumptions,
    })
}

/// CSV with header `theorem,R,T,K,lhs_max,rhs,margin,verdict`.
pub fn summary_csv(reports: &[EstimateReport]) -> String {
    let mut out = String::from("theorem,R,T,K,lhs_max,rhs,margin,verdict\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{:?},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:?}",
            r.theorem, r.window.r, r.window.t, r.window.k, r.lhs_max, r.rhs, r.margin, r.verdict
        );
    }
    out
}
