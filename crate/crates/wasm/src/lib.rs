//! Three operations for the static demo page in `www/`. Each returns a JSON
//! string that the page parses; the plain functions without the `js_` prefix
//! carry the logic so they can be tested natively.

use hmhf_core::estimates::build_cutoff;
use hmhf_core::flows::ModelFlow;
use hmhf_core::numerics::linspace;
use hmhf_core::radial::{asymptotic_exponent, characteristic_roots, su_solve_default, Classification};
use hmhf_core::reduced::{Backend, ReducedField};
use serde_json::json;
use wasm_bindgen::prelude::*;

/// Keeps at most this many trajectory points for drawing.
const MAX_POINTS: usize = 2000;

/// Radial ODE trajectory for dimension `m`, with its roots and, when the
/// solution settles at the node, the fitted decay exponent.
pub fn su_trajectory(m: usize) -> Result<String, String> {
    if !(2..=60).contains(&m) {
        return Err(format!("dimension {m} outside 2..=60"));
    }
    let traj = su_solve_default(m).map_err(|e| e.to_string())?;
    let stride = traj.samples.len().div_ceil(MAX_POINTS).max(1);
    let picked: Vec<&(f64, f64, f64)> = traj.samples.iter().step_by(stride).collect();
    let fit = if traj.classification == Classification::NodeConvergent {
        asymptotic_exponent(&traj, None).ok()
    } else {
        None
    };
    Ok(json!({
        "m": m,
        "classification": traj.classification,
        "crossing_radius": traj.crossing_radius(),
        "roots": characteristic_roots(m),
        "t": picked.iter().map(|s| s.0).collect::<Vec<_>>(),
        "alpha": picked.iter().map(|s| s.1).collect::<Vec<_>>(),
        "fit": fit,
    })
    .to_string())
}

/// Radial slice of the space-time cutoff at `tau = tau_fraction * T`,
/// with the measured constants and the pointwise bound on `|psi_r|`.
pub fn cutoff_profile(r_window: f64, t_window: f64, tau_fraction: f64, n: usize) -> Result<String, String> {
    let cut = build_cutoff(r_window, t_window, 0.75).map_err(|e| e.to_string())?;
    let tau = tau_fraction.clamp(0.0, 1.0) * t_window;
    let r = linspace(0.0, r_window, n.clamp(2, 4000));
    let mut psi = Vec::with_capacity(r.len());
    let mut slope = Vec::with_capacity(r.len());
    let mut bound = Vec::with_capacity(r.len());
    for &x in &r {
        let (p, pr, _, _) = cut.derivatives(x, tau);
        psi.push(p);
        slope.push(pr.abs());
        bound.push(cut.c_alpha * p.powf(0.75) / r_window);
    }
    Ok(json!({
        "C34": cut.c_alpha,
        "C": cut.c,
        "tau": tau,
        "r": r,
        "psi": psi,
        "abs_psi_r": slope,
        "bound": bound,
    })
    .to_string())
}

/// Closed-form reduced distance `ell` and `frak_d` on an `nr x nt` grid.
/// `kind` is one of static_flat, static_sphere, static_hyperbolic,
/// shrinking_sphere.
pub fn reduced_field(kind: &str, m: usize, r_max: f64, tau_max: f64, nr: usize, nt: usize) -> Result<String, String> {
    if !(2..=12).contains(&m) || !(r_max > 0.0 && tau_max > 0.0) {
        return Err("need 2 <= m <= 12, r_max > 0 and tau_max > 0".into());
    }
    let flow = match kind {
        "static_flat" => ModelFlow::static_flat(m),
        "static_sphere" => ModelFlow::static_sphere(m),
        "static_hyperbolic" => ModelFlow::static_hyperbolic(m),
        "shrinking_sphere" => ModelFlow::shrinking_sphere(m, 1.0, tau_max).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown flow `{other}`")),
    };
    let r_cap = if kind.ends_with("sphere") { r_max.min(std::f64::consts::PI) } else { r_max };
    let radii = linspace(0.0, r_cap, nr.clamp(2, 400));
    let taus = linspace(tau_max / nt.clamp(2, 400) as f64, tau_max.min(flow.tau_max()), nt.clamp(2, 400));
    let field = ReducedField::compute(&flow, &radii, &taus, Backend::ClosedForm).map_err(|e| e.to_string())?;
    let mut ell = Vec::with_capacity(radii.len() * taus.len());
    let mut frak_d = Vec::with_capacity(radii.len() * taus.len());
    for it in 0..taus.len() {
        for ir in 0..radii.len() {
            let v = field.at(ir, it).value;
            ell.push(v.ell);
            frak_d.push(v.frak_d);
        }
    }
    Ok(json!({ "r": radii, "tau": taus, "ell": ell, "frak_d": frak_d }).to_string())
}

#[wasm_bindgen(js_name = suTrajectory)]
pub fn js_su_trajectory(m: usize) -> Result<String, JsError> {
    su_trajectory(m).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = cutoffProfile)]
pub fn js_cutoff_profile(r_window: f64, t_window: f64, tau_fraction: f64, n: usize) -> Result<String, JsError> {
    cutoff_profile(r_window, t_window, tau_fraction, n).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = reducedField)]
pub fn js_reduced_field(kind: &str, m: usize, r_max: f64, tau_max: f64, nr: usize, nt: usize) -> Result<String, JsError> {
    reduced_field(kind, m, r_max, tau_max, nr, nt).map_err(|e| JsError::new(&e))
}
