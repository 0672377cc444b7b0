//! Reduced geometry of a model flow: L-length of curves, the reduced distance
//! `ell`, `Lbar = 4 tau ell` and `frak_d = sqrt(Lbar)`.
//!
//! Everything is parametrized by `s = sqrt(tau)`. In that variable the
//! L-length of a radial curve becomes
//!
//! ```text
//! L(gamma) = int_0^sqrt(tau) [ 2 s^2 H(s^2) + (1/2) c(s^2) r_s^2 ] ds
//! ```
//!
//! which has no singular weight at the origin.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::flows::{AssumptionReport, ModelFlow};
use crate::numerics::quad::{integrate, GAUSS4_UNIT};
use crate::numerics::{cot_k, observed_order};

/// Radial space-time curve `(tau_i, r_i)` starting at the base point time 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeCurve {
    samples: Vec<(f64, f64)>,
}

impl SpaceTimeCurve {
    pub fn new(samples: Vec<(f64, f64)>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::DegenerateCurve(samples.len()));
        }
        if samples[0].0 != 0.0 {
            return Err(Error::CurveOutOfHorizon(format!(
                "curve must start at tau = 0, starts at {}",
                samples[0].0
            )));
        }
        for w in samples.windows(2) {
            if !(w[1].0 > w[0].0) {
                return Err(Error::CurveOutOfHorizon(format!(
                    "tau samples not increasing at {}",
                    w[1].0
                )));
            }
        }
        if let Some(&(t, r)) = samples.iter().find(|(_, r)| !(r.is_finite() && *r >= 0.0)) {
            return Err(Error::CurveOutOfHorizon(format!("radius {r} at tau = {t}")));
        }
        Ok(Self { samples })
    }

    /// Samples `r = f(tau)` at `n + 1` points uniform in `sqrt(tau)`.
    pub fn from_fn(tau_end: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let s_end = tau_end.sqrt();
        let samples = (0..=n)
            .map(|i| {
                let s = s_end * i as f64 / n.max(1) as f64;
                (s * s, f(s * s))
            })
            .collect();
        Self::new(samples)
    }

    pub fn samples(&self) -> &[(f64, f64)] {
        &self.samples
    }

    pub fn tau_end(&self) -> f64 {
        self.samples.last().map_or(0.0, |p| p.0)
    }
}

/// Integrand density `2 s^2 H(s^2)` of the mean-curvature part.
fn h_density(flow: &ModelFlow, s: f64) -> f64 {
    let (c, cp, _) = flow.scale_at(s * s);
    let h = flow.dimension() as f64 * cp / (2.0 * c);
    2.0 * s * s * h
}

/// L-length of a curve, piecewise linear in `s = sqrt(tau)` between samples.
pub fn l_length(flow: &ModelFlow, curve: &SpaceTimeCurve) -> Result<f64> {
    let tau_end = curve.tau_end();
    if tau_end > flow.tau_max() {
        return Err(Error::CurveOutOfHorizon(format!(
            "curve ends at tau = {tau_end} beyond {}",
            flow.tau_max()
        )));
    }
    if flow.base_curvature() == 1 {
        if let Some(&(t, r)) = curve.samples().iter().find(|(_, r)| *r > PI) {
            return Err(Error::CurveOutOfHorizon(format!(
                "radius {r} at tau = {t} exceeds the sphere diameter"
            )));
        }
    }
    let mut total = 0.0;
    for w in curve.samples().windows(2) {
        let (s0, s1) = (w[0].0.sqrt(), w[1].0.sqrt());
        let h = s1 - s0;
        let rs = (w[1].1 - w[0].1) / h;
        for (x, wt) in GAUSS4_UNIT {
            let s = s0 + h * x;
            let c = flow.scale_at(s * s).0;
            total += wt * h * (h_density(flow, s) + 0.5 * c * rs * rs);
        }
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    ClosedForm,
    Variational,
}

impl Backend {
    pub fn label(self) -> &'static str {
        match self {
            Backend::ClosedForm => "closed_form",
            Backend::Variational => "variational",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedValue {
    #[serde(rename = "L")]
    pub l: f64,
    pub ell: f64,
    #[serde(rename = "Lbar")]
    pub lbar: f64,
    pub frak_d: f64,
}

impl ReducedValue {
    fn from_l(l: f64, tau: f64) -> Self {
        let ell = l / (2.0 * tau.sqrt());
        let lbar = 4.0 * tau * ell;
        Self {
            l,
            ell,
            lbar,
            frak_d: lbar.max(0.0).sqrt(),
        }
    }
}

/// `int_0^tau sqrt(sigma) H dsigma` and `I(tau) = int_0^tau dsigma / (sqrt(sigma) c)`.
fn closed_form_parts(flow: &ModelFlow, tau: f64) -> (f64, f64) {
    let s_end = tau.sqrt();
    if flow.is_static() {
        let c0 = flow.scale_at(0.0).0;
        return (0.0, 2.0 * s_end / c0);
    }
    let p = integrate(|s| h_density(flow, s), 0.0, s_end, 1e-15);
    let i = integrate(|s| 2.0 / flow.scale_at(s * s).0, 0.0, s_end, 1e-15);
    (p, i)
}

fn check_query(flow: &ModelFlow, radius: f64, tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= flow.tau_max()) {
        return Err(Error::OutOfHorizon {
            tau,
            tau_max: flow.tau_max(),
        });
    }
    if !(radius >= 0.0 && radius.is_finite()) || (flow.base_curvature() == 1 && radius > PI) {
        return Err(Error::CurveOutOfHorizon(format!("radius {radius} is not a valid distance")));
    }
    Ok(())
}

pub fn reduced_distance(flow: &ModelFlow, radius: f64, tau: f64, backend: Backend) -> Result<ReducedValue> {
    check_query(flow, radius, tau)?;
    let l = match backend {
        Backend::ClosedForm => {
            let (p, i) = closed_form_parts(flow, tau);
            p + radius * radius / i
        }
        Backend::Variational => minimize_l_length(flow, radius, tau)?.l,
    };
    Ok(ReducedValue::from_l(l, tau))
}

/// Output of the discretized L-length minimization.
#[derive(Debug, Clone, PartialEq)]
pub struct VariationalSolution {
    pub l: f64,
    pub iterations: usize,
    /// Infinity norm of the discrete Euler-Lagrange residual.
    pub residual: f64,
    /// Minimizer at element vertices and midpoints, as `(tau, r)`.
    pub curve: Vec<(f64, f64)>,
}

pub const VARIATIONAL_ELEMENTS: usize = 64;
pub const VARIATIONAL_BUDGET: usize = 5000;

/// Quadratic-element discretization in `s`: the unknowns are the interior
/// vertices and all element midpoints of a uniform mesh on `[0, sqrt(tau)]`.
struct P2Problem {
    h: f64,
    /// `weight * c(s_q^2)` per element and Gauss point.
    wc: Vec<[f64; 4]>,
    r_end: f64,
    upper: f64,
    h_part: f64,
}

impl P2Problem {
    fn new(flow: &ModelFlow, radius: f64, tau: f64) -> Self {
        let n = VARIATIONAL_ELEMENTS;
        let s_end = tau.sqrt();
        let h = s_end / n as f64;
        let mut wc = Vec::with_capacity(n);
        let mut h_part = 0.0;
        for e in 0..n {
            let mut row = [0.0; 4];
            for (q, (x, w)) in GAUSS4_UNIT.iter().enumerate() {
                let s = h * (e as f64 + x);
                row[q] = w * flow.scale_at(s * s).0;
                h_part += w * h * h_density(flow, s);
            }
            wc.push(row);
        }
        let upper = if flow.base_curvature() == 1 { PI } else { f64::INFINITY };
        Self {
            h,
            wc,
            r_end: radius,
            upper,
            h_part,
        }
    }

    fn unknowns(&self) -> usize {
        2 * self.wc.len() - 1
    }

    /// Full nodal vector with the two fixed end values.
    fn full(&self, x: &[f64]) -> Vec<f64> {
        let mut u = Vec::with_capacity(x.len() + 2);
        u.push(0.0);
        u.extend_from_slice(x);
        u.push(self.r_end);
        u
    }

    /// Energy and nodal gradient. The slope `r_s` is formed from differences
    /// of neighbouring nodal values so that the energy carries no
    /// cancellation error of order `|r| / h`.
    fn energy_and_gradient(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let u = self.full(x);
        let mut grad = vec![0.0; u.len()];
        let mut energy = self.h_part;
        for (e, wc) in self.wc.iter().enumerate() {
            let d0 = u[2 * e + 1] - u[2 * e];
            let d1 = u[2 * e + 2] - u[2 * e];
            let (mut g0, mut g1) = (0.0, 0.0);
            for (q, (xq, _)) in GAUSS4_UNIT.iter().enumerate() {
                let (a, b) = (4.0 - 8.0 * xq, 4.0 * xq - 1.0);
                let rs = (a * d0 + b * d1) / self.h;
                energy += 0.5 * wc[q] * self.h * rs * rs;
                g0 += wc[q] * rs * a;
                g1 += wc[q] * rs * b;
            }
            grad[2 * e] -= g0 + g1;
            grad[2 * e + 1] += g0;
            grad[2 * e + 2] += g1;
        }
        (energy, grad[1..grad.len() - 1].to_vec())
    }

    fn project(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = v.clamp(0.0, self.upper);
        }
    }

    /// Gradient with components that push against an active bound removed.
    fn projected(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(g)
            .map(|(&xi, &gi)| {
                if (xi <= 0.0 && gi > 0.0) || (xi >= self.upper && gi < 0.0) {
                    0.0
                } else {
                    gi
                }
            })
            .collect()
    }
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Nodal values from nodal increments `y` (the last increment closes the curve at `R`).
fn increments_to_nodes(y: &[f64]) -> Vec<f64> {
    y.iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect()
}

fn nodes_to_increments(x: &[f64]) -> Vec<f64> {
    let mut prev = 0.0;
    x.iter()
        .map(|&v| {
            let d = v - prev;
            prev = v;
            d
        })
        .collect()
}

/// Chain rule from nodal gradient to increment gradient (suffix sums).
fn increment_gradient(g: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    let mut acc = 0.0;
    for i in (0..g.len()).rev() {
        acc += g[i];
        out[i] = acc;
    }
    out
}

/// Projected Polak-Ribiere conjugate gradient on the discretized L-length.
///
/// The iteration runs on nodal increments, in which the element stiffness
/// is block diagonal up to the rank-one endpoint coupling, so the mesh size
/// does not enter the conditioning. Bounds `0 <= r <= upper` are enforced by
/// clamping nodal values after every trial step.
pub fn minimize_l_length(flow: &ModelFlow, radius: f64, tau: f64) -> Result<VariationalSolution> {
    check_query(flow, radius, tau)?;
    let prob = P2Problem::new(flow, radius, tau);
    let nu = prob.unknowns();
    // start linear in tau, which is not the minimizer for any flow
    let mut x: Vec<f64> = (1..=nu)
        .map(|j| {
            let s = prob.h * j as f64 / 2.0;
            radius * s * s / tau
        })
        .collect();
    prob.project(&mut x);

    let eval = |x: &[f64]| {
        let (e, g) = prob.energy_and_gradient(x);
        let residual = inf_norm(&prob.projected(x, &g));
        (e, increment_gradient(&g), residual)
    };
    let mut y = nodes_to_increments(&x);
    let (mut e, mut g, mut residual) = eval(&x);
    let mut dir: Vec<f64> = g.iter().map(|v| -v).collect();
    let mut iterations = 0;

    while residual >= 1e-10 * (1.0 + e.abs()) {
        if iterations >= VARIATIONAL_BUDGET {
            return Err(Error::NoConvergence {
                iterations,
                best: e,
                residual,
            });
        }
        iterations += 1;
        let mut slope = dot(&g, &dir);
        let norms = dot(&g, &g).sqrt() * dot(&dir, &dir).sqrt();
        if slope >= -1e-8 * norms || iterations % nu == 0 {
            dir = g.iter().map(|v| -v).collect();
            slope = dot(&g, &dir);
        }
        // curvature along dir from a finite difference of the gradient
        let eps = 1e-6 / inf_norm(&dir).max(1e-300);
        let probe = increments_to_nodes(&y.iter().zip(&dir).map(|(a, d)| a + eps * d).collect::<Vec<_>>());
        let (_, gp, _) = eval(&probe);
        let curv = gp.iter().zip(&g).zip(&dir).map(|((a, b), d)| (a - b) * d).sum::<f64>() / eps;
        let mut step = if curv > 0.0 { -slope / curv } else { 1.0 };

        let noise = 16.0 * f64::EPSILON * e.abs().max(1.0);
        let (y_new, x_new, e_new, g_new, r_new) = loop {
            let mut trial_x = increments_to_nodes(&y.iter().zip(&dir).map(|(a, d)| a + step * d).collect::<Vec<_>>());
            prob.project(&mut trial_x);
            let (et, gt, rt) = eval(&trial_x);
            let armijo = et <= e + 1e-4 * step * slope;
            // below round-off in the energy, fall back to a curvature condition
            let flat = (et - e).abs() <= noise && dot(&gt, &dir).abs() <= 0.9 * slope.abs();
            if armijo || flat || step < 1e-20 {
                break (nodes_to_increments(&trial_x), trial_x, et, gt, rt);
            }
            step *= 0.5;
        };

        let beta = (dot(&g_new, &g_new) - dot(&g_new, &g)) / dot(&g, &g).max(1e-300);
        let beta = beta.max(0.0);
        dir = g_new.iter().zip(&dir).map(|(gn, d)| -gn + beta * d).collect();
        y = y_new;
        x = x_new;
        e = e_new;
        g = g_new;
        residual = r_new;
    }

    let u = prob.full(&x);
    let curve = u
        .iter()
        .enumerate()
        .map(|(j, &r)| {
            let s = prob.h * j as f64 / 2.0;
            (s * s, r)
        })
        .collect();
    Ok(VariationalSolution {
        l: e,
        iterations,
        residual,
        curve,
    })
}

/// `frak_d` from the closed-form backend, used for window membership.
pub fn frak_d(flow: &ModelFlow, radius: f64, tau: f64) -> Result<f64> {
    reduced_distance(flow, radius, tau, Backend::ClosedForm).map(|v| v.frak_d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedNode {
    pub r: f64,
    pub tau: f64,
    #[serde(flatten)]
    pub value: ReducedValue,
}

/// Reduced distance sampled on a radius-by-time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedField {
    pub flow: ModelFlow,
    pub radii: Vec<f64>,
    pub taus: Vec<f64>,
    /// Row-major in `taus`, then `radii`.
    pub nodes: Vec<ReducedNode>,
    pub backend: Backend,
}

impl ReducedField {
    pub fn compute(flow: &ModelFlow, radii: &[f64], taus: &[f64], backend: Backend) -> Result<Self> {
        if radii.is_empty() || taus.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut nodes = Vec::with_capacity(radii.len() * taus.len());
        for &tau in taus {
            for &r in radii {
                let value = reduced_distance(flow, r, tau, backend)?;
                nodes.push(ReducedNode { r, tau, value });
            }
        }
        Ok(Self {
            flow: flow.clone(),
            radii: radii.to_vec(),
            taus: taus.to_vec(),
            nodes,
            backend,
        })
    }

    pub fn at(&self, ir: usize, it: usize) -> &ReducedNode {
        &self.nodes[it * self.radii.len() + ir]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("r,tau,L,ell,Lbar,frak_d,backend\n");
        for n in &self.nodes {
            let v = &n.value;
            let _ = writeln!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}",
                n.r,
                n.tau,
                v.l,
                v.ell,
                v.lbar,
                v.frak_d,
                self.backend.label()
            );
        }
        out
    }
}

/// Finite-difference verdicts on the reduced heat and gradient lemmas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedEstimateReport {
    #[serde(rename = "K")]
    pub k: f64,
    pub assumptions: AssumptionReport,
    pub nodes: usize,
    /// Nodes whose Richardson ratios indicated a non-smooth `Lbar`.
    pub skipped_nonsmooth: usize,
    /// Max over nodes of `(Delta + d_tau) Lbar - 2m - 2K Lbar`.
    pub heat_max: f64,
    pub heat_location: (f64, f64),
    /// Max over nodes of `|grad frak_d|^2`.
    pub grad_max: f64,
    pub grad_location: (f64, f64),
    /// Largest Richardson error estimate of the heat operator.
    pub heat_discretization: f64,
    /// Observed order of the heat operator's finite-difference error at the node
    /// where it is largest; `None` when the error sits at round-off.
    pub heat_order: Option<f64>,
    pub heat_holds: bool,
    pub gradient_holds: bool,
}

/// Heat operator and squared gradient at one node with stencil steps `hr`, `ht`.
fn fd_operators(flow: &ModelFlow, r: f64, tau: f64, hr: f64, ht: f64) -> (f64, f64) {
    let lbar = |x: f64, t: f64| {
        let (p, i) = closed_form_parts(flow, t);
        2.0 * t.sqrt() * (p + x * x / i)
    };
    let m = flow.dimension() as f64;
    let c = flow.scale_at(tau).0;
    let k0 = flow.k0();
    let f0 = lbar(r, tau);
    // Lbar is even in r, so |r - hr| implements the parity ghost value
    let fp = lbar(r + hr, tau);
    let fm = lbar((r - hr).abs(), tau);
    let d2 = (fp - 2.0 * f0 + fm) / (hr * hr);
    let d1 = (fp - fm) / (2.0 * hr);
    let lap = if r == 0.0 {
        m * d2 / c
    } else {
        (d2 + (m - 1.0) * cot_k(k0, r) * d1) / c
    };
    let dt = (lbar(r, tau + ht) - lbar(r, tau - ht)) / (2.0 * ht);
    let heat = lap + dt;

    let dr_frak = if r == 0.0 {
        if f0 == 0.0 {
            (d2 / 2.0).max(0.0).sqrt()
        } else {
            0.0
        }
    } else {
        d1 / (2.0 * f0.sqrt())
    };
    (heat, dr_frak * dr_frak / c)
}

pub fn reduced_estimate_check(
    flow: &ModelFlow,
    radii: &[f64],
    taus: &[f64],
    k: f64,
) -> Result<ReducedEstimateReport> {
    if radii.is_empty() || taus.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let assumptions = flow.assumption_gate(&flow.default_gate_grid(), k)?;
    if !assumptions.passes() {
        return Err(Error::AssumptionFailed(format!(
            "gate at K = {k}: D {}, Harnack {}, H {} (worst margin {:.3e})",
            assumptions.passes_d,
            assumptions.passes_harnack,
            assumptions.passes_h,
            assumptions.worst_margin
        )));
    }
    let m = flow.dimension() as f64;
    let hr0 = 1e-2;
    for &r in radii {
        if !(r >= 0.0) {
            return Err(Error::SingularRadius(format!("negative radius {r}")));
        }
        if flow.base_curvature() == 1 && r + hr0 >= PI {
            return Err(Error::SingularRadius(format!("radius {r} reaches the antipode")));
        }
    }
    let tau_floor = taus.iter().cloned().fold(f64::INFINITY, f64::min);
    let ht0 = (1e-2f64).min(tau_floor / 4.0);
    for &tau in taus {
        if !(tau > 0.0 && tau + ht0 <= flow.tau_max()) {
            return Err(Error::OutOfHorizon {
                tau,
                tau_max: flow.tau_max(),
            });
        }
    }

    let mut rep = ReducedEstimateReport {
        k,
        assumptions,
        nodes: 0,
        skipped_nonsmooth: 0,
        heat_max: f64::NEG_INFINITY,
        heat_location: (radii[0], taus[0]),
        grad_max: f64::NEG_INFINITY,
        grad_location: (radii[0], taus[0]),
        heat_discretization: 0.0,
        heat_order: None,
        heat_holds: true,
        gradient_holds: true,
    };
    let mut worst_err = 0.0;
    for &tau in taus {
        for &r in radii {
            let levels: Vec<(f64, f64)> = (0..3)
                .map(|j| {
                    let f = 0.5f64.powi(j);
                    fd_operators(flow, r, tau, hr0 * f, ht0 * f)
                })
                .collect();
            let (h0, g0) = levels[0];
            let (h1, g1) = levels[1];
            let (h2, _) = levels[2];
            let e1 = (h0 - h1).abs();
            let e2 = (h1 - h2).abs();
            let lbar = reduced_distance(flow, r, tau, Backend::ClosedForm)?.lbar;
            let noise = 1e-7 * (1.0 + lbar.abs() + m);
            if e1 > noise && e2 > noise {
                let ratio = e1 / e2;
                if !(2.0..=8.0).contains(&ratio) {
                    rep.skipped_nonsmooth += 1;
                    continue;
                }
            }
            rep.nodes += 1;
            let heat = (4.0 * h1 - h0) / 3.0;
            let grad = (4.0 * g1 - g0) / 3.0;
            let err = e1 / 3.0;
            rep.heat_discretization = rep.heat_discretization.max(err);
            if e1 > noise && e1 > worst_err {
                worst_err = e1;
                rep.heat_order = observed_order(&[e1, e2], 2.0);
            }
            let slack = heat - 2.0 * m - 2.0 * k * lbar;
            if slack > rep.heat_max {
                rep.heat_max = slack;
                rep.heat_location = (r, tau);
            }
            if grad > rep.grad_max {
                rep.grad_max = grad;
                rep.grad_location = (r, tau);
            }
        }
    }
    let tol = 1e-6 + rep.heat_discretization;
    rep.heat_holds = rep.heat_max <= tol;
    rep.gradient_holds = rep.grad_max <= 3.0 + 1e-6;
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::linspace;

    fn shrinking() -> ModelFlow {
        ModelFlow::shrinking_sphere(3, 1.0, 2.0).unwrap()
    }

    #[test]
    fn static_flat_sqrt_curve_length() {
        let flow = ModelFlow::static_flat(3);
        let curve = SpaceTimeCurve::from_fn(1.0, 8, |t| 2.0 * t.sqrt()).unwrap();
        assert!((l_length(&flow, &curve).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn constant_curve_on_shrinking_sphere() {
        let flow = shrinking();
        let curve = SpaceTimeCurve::from_fn(1.0, 200, |_| 0.0).unwrap();
        let got = l_length(&flow, &curve).unwrap();
        // substitute s = sqrt(tau): int_0^1 12 s^2 / (1 + 4 s^2) ds = 3 - (3/2) atan 2
        let exact = 3.0 - 1.5 * 2f64.atan();
        assert!((got - exact).abs() < 1e-12, "{got} vs {exact}");
        let flat = ModelFlow::static_flat(3);
        assert_eq!(l_length(&flat, &curve).unwrap(), 0.0);
    }

    #[test]
    fn l_length_second_order_in_sampling() {
        let flow = shrinking();
        let f = |t: f64| (1.0 + t).ln() + t * t;
        let fine = l_length(&flow, &SpaceTimeCurve::from_fn(1.0, 4096, f).unwrap()).unwrap();
        let errs: Vec<f64> = [16, 32, 64]
            .iter()
            .map(|&n| (l_length(&flow, &SpaceTimeCurve::from_fn(1.0, n, f).unwrap()).unwrap() - fine).abs())
            .collect();
        let order = observed_order(&errs, 2.0).unwrap();
        assert!((order - 2.0).abs() < 0.15, "order {order}");
    }

    #[test]
    fn curve_validation() {
        assert_eq!(SpaceTimeCurve::new(vec![(0.0, 0.0)]), Err(Error::DegenerateCurve(1)));
        assert!(SpaceTimeCurve::new(vec![(0.0, 0.0), (0.0, 1.0)]).is_err());
        let long = SpaceTimeCurve::from_fn(3.0, 4, |_| 0.0).unwrap();
        assert!(matches!(l_length(&shrinking(), &long), Err(Error::CurveOutOfHorizon(_))));
    }

    #[test]
    fn static_flat_reduced_distance() {
        let flow = ModelFlow::static_flat(3);
        for backend in [Backend::ClosedForm, Backend::Variational] {
            let v = reduced_distance(&flow, 2.0, 1.0, backend).unwrap();
            assert!((v.ell - 1.0).abs() < 1e-9, "{backend:?} {v:?}");
            assert!((v.frak_d - 2.0).abs() < 1e-9);
        }
        let zero = reduced_distance(&flow, 0.0, 0.7, Backend::ClosedForm).unwrap();
        assert_eq!(zero.ell, 0.0);
    }

    #[test]
    fn shrinking_sphere_backends_agree() {
        let flow = shrinking();
        let a = reduced_distance(&flow, 1.0, 1.0, Backend::ClosedForm).unwrap();
        let sol = minimize_l_length(&flow, 1.0, 1.0).unwrap();
        let b = ReducedValue::from_l(sol.l, 1.0);
        assert!(((a.ell - b.ell) / a.ell).abs() < 1e-6, "{a:?} {b:?}");
        assert!(sol.residual < 1e-8);
        // closed form check: P = 3 - 1.5 atan 2, I = atan 2
        let exact = 3.0 - 1.5 * 2f64.atan() + 1.0 / 2f64.atan();
        assert!((a.l - exact).abs() < 1e-12);
    }

    #[test]
    fn minimizer_follows_speed_profile() {
        // the minimizer satisfies r(tau) = R I(tau) / I(tau_end)
        let flow = shrinking();
        let sol = minimize_l_length(&flow, 1.5, 1.0).unwrap();
        for &(t, r) in sol.curve.iter().step_by(16) {
            let expect = 1.5 * (2.0 * t.sqrt()).atan() / 2f64.atan();
            assert!((r - expect).abs() < 1e-7, "tau {t}: {r} vs {expect}");
        }
    }

    #[test]
    fn field_identities_and_csv() {
        let flow = shrinking();
        let f = ReducedField::compute(&flow, &linspace(0.0, 3.0, 7), &[0.25, 1.0], Backend::ClosedForm).unwrap();
        for n in &f.nodes {
            let v = n.value;
            assert!((v.lbar - 4.0 * n.tau * v.ell).abs() <= 1e-14 * v.lbar.abs());
            assert_eq!(v.frak_d, v.lbar.sqrt());
            assert!(v.ell >= 0.0);
        }
        let csv = f.to_csv();
        assert!(csv.starts_with("r,tau,L,ell,Lbar,frak_d,backend\n"));
        assert_eq!(csv.lines().count(), 15);
        assert!(csv.lines().nth(1).unwrap().ends_with(",closed_form"));
    }

    #[test]
    fn estimate_check_static_flat() {
        let flow = ModelFlow::static_flat(3);
        let rep = reduced_estimate_check(&flow, &linspace(0.0, 3.0, 7), &[0.5, 1.0], 0.0).unwrap();
        assert!((rep.heat_max).abs() < 1e-6, "{rep:?}");
        assert!((rep.grad_max - 1.0).abs() < 1e-6);
        assert!(rep.heat_holds && rep.gradient_holds);
    }

    #[test]
    fn estimate_check_shrinking_sphere_window() {
        let rep = reduced_estimate_check(&shrinking(), &linspace(0.2, 2.5, 12), &linspace(0.2, 1.0, 5), 0.0).unwrap();
        assert!(rep.heat_holds && rep.gradient_holds, "{rep:?}");
        assert!(rep.heat_max < 0.0 && rep.grad_max < 3.0);
        assert_eq!(rep.skipped_nonsmooth, 0);
    }

    #[test]
    fn estimate_check_rejects_bad_inputs() {
        let hyp = ModelFlow::static_hyperbolic(3);
        assert!(matches!(
            reduced_estimate_check(&hyp, &[1.0], &[1.0], 0.0),
            Err(Error::AssumptionFailed(_))
        ));
        let sph = ModelFlow::static_sphere(3);
        assert!(matches!(
            reduced_estimate_check(&sph, &[PI], &[1.0], 0.0),
            Err(Error::SingularRadius(_))
        ));
    }
}
