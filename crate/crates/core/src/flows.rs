//! Model backward flows `g(tau) = c(tau) g0` on a space form `g0` of sectional
//! curvature `k0` in {-1, 0, 1}, together with the closed-form curvature
//! quantities that enter the Liouville hypotheses.
//!
//! On these flows `h = (c'/2c) g`, `Ric = ((m-1) k0 / c) g`, and every spatial
//! derivative of `H` vanishes, so the Müller and trace-Harnack quantities are
//! affine functions of `|V|^2` whose two coefficients are known exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{linspace, logspace, CubicSpline};

/// Positivity of `c` is checked on this many uniformly spaced points.
const POSITIVITY_GRID: usize = 4097;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Scale {
    Static { c0: f64 },
    Affine { c0: f64, slope: f64 },
    /// `c(tau) = c0 + 2(m-1) tau` on the unit sphere: an exact backward Ricci flow.
    ShrinkingSphere { c0: f64 },
    Sampled(CubicSpline),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFlow {
    m: usize,
    k0: i8,
    scale: Scale,
    tau_max: f64,
}

/// Scalars of `h`, `H` and `Ric` at one reverse time, in `g(tau)` units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowCoefficients {
    pub c: f64,
    pub c_prime: f64,
    /// Eigenvalue of `h` relative to `g(tau)`.
    pub lambda: f64,
    #[serde(rename = "H")]
    pub h_trace: f64,
    #[serde(rename = "dH_dtau")]
    pub dh_dtau: f64,
    pub h_norm_sq: f64,
    pub ric_coeff: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    #[serde(rename = "passes_D")]
    pub passes_d: bool,
    #[serde(rename = "passes_Harnack")]
    pub passes_harnack: bool,
    #[serde(rename = "passes_H")]
    pub passes_h: bool,
    #[serde(rename = "K")]
    pub k: f64,
    pub worst_margin: f64,
    /// `(tau, |V|)` of the worst slack; `|V|` is 0 or 1.
    pub worst_location: (f64, f64),
}

impl AssumptionReport {
    pub fn passes(&self) -> bool {
        self.passes_d && self.passes_harnack && self.passes_h
    }
}

impl ModelFlow {
    pub fn new(m: usize, k0: i8, scale: Scale, tau_max: f64) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidFlow(format!("dimension {m} < 2")));
        }
        if !(-1..=1).contains(&k0) {
            return Err(Error::InvalidFlow(format!("base curvature {k0} not in {{-1, 0, 1}}")));
        }
        if !(tau_max > 0.0 && tau_max.is_finite()) {
            return Err(Error::InvalidFlow(format!("tau_max = {tau_max} must be positive")));
        }
        match &scale {
            Scale::ShrinkingSphere { .. } if k0 != 1 => {
                return Err(Error::InvalidFlow("shrinking sphere needs k0 = +1".into()));
            }
            Scale::Sampled(spline) => {
                let (a, b) = spline.domain();
                if a > 0.0 || b < tau_max {
                    return Err(Error::InvalidFlow(format!(
                        "sampled knots cover [{a}, {b}], need [0, {tau_max}]"
                    )));
                }
            }
            _ => {}
        }
        let flow = Self {
            m,
            k0,
            scale,
            tau_max,
        };
        for tau in linspace(0.0, tau_max, POSITIVITY_GRID) {
            let c = flow.scale_at(tau).0;
            if !(c > 0.0) {
                return Err(Error::NonPositiveScale { tau, value: c });
            }
        }
        Ok(flow)
    }

    pub fn static_flat(m: usize) -> Self {
        Self::new(m, 0, Scale::Static { c0: 1.0 }, 1e6).expect("valid preset")
    }

    pub fn static_sphere(m: usize) -> Self {
        Self::new(m, 1, Scale::Static { c0: 1.0 }, 1e6).expect("valid preset")
    }

    pub fn static_hyperbolic(m: usize) -> Self {
        Self::new(m, -1, Scale::Static { c0: 1.0 }, 1e6).expect("valid preset")
    }

    pub fn shrinking_sphere(m: usize, c0: f64, tau_max: f64) -> Result<Self> {
        Self::new(m, 1, Scale::ShrinkingSphere { c0 }, tau_max)
    }

    pub fn dimension(&self) -> usize {
        self.m
    }

    pub fn base_curvature(&self) -> i8 {
        self.k0
    }

    pub fn k0(&self) -> f64 {
        f64::from(self.k0)
    }

    pub fn tau_max(&self) -> f64 {
        self.tau_max
    }

    pub fn scale(&self) -> &Scale {
        &self.scale
    }

    pub fn is_static(&self) -> bool {
        matches!(self.scale, Scale::Static { .. })
    }

    /// `(c, c', c'')` without horizon checks.
    pub fn scale_at(&self, tau: f64) -> (f64, f64, f64) {
        match &self.scale {
            Scale::Static { c0 } => (*c0, 0.0, 0.0),
            Scale::Affine { c0, slope } => (c0 + slope * tau, *slope, 0.0),
            Scale::ShrinkingSphere { c0 } => {
                let s = 2.0 * (self.m as f64 - 1.0);
                (c0 + s * tau, s, 0.0)
            }
            Scale::Sampled(spline) => spline.eval(tau),
        }
    }

    fn check_horizon(&self, tau: f64) -> Result<()> {
        if !(0.0..=self.tau_max).contains(&tau) {
            return Err(Error::OutOfHorizon {
                tau,
                tau_max: self.tau_max,
            });
        }
        Ok(())
    }

    /// `c(tau)` with horizon check.
    pub fn c(&self, tau: f64) -> Result<f64> {
        self.check_horizon(tau)?;
        Ok(self.scale_at(tau).0)
    }

    pub fn flow_coefficients(&self, tau: f64) -> Result<FlowCoefficients> {
        self.check_horizon(tau)?;
        let (c, cp, cpp) = self.scale_at(tau);
        if !(c > 0.0) {
            return Err(Error::NonPositiveScale { tau, value: c });
        }
        let m = self.m as f64;
        let lambda = cp / (2.0 * c);
        Ok(FlowCoefficients {
            c,
            c_prime: cp,
            lambda,
            h_trace: m * lambda,
            dh_dtau: m * (cpp * c - cp * cp) / (2.0 * c * c),
            h_norm_sq: m * lambda * lambda,
            ric_coeff: (m - 1.0) * self.k0() / c,
        })
    }

    /// Müller quantity for a vector of squared `g(tau)`-norm `v_norm_sq`.
    pub fn muller_quantity(&self, tau: f64, v_norm_sq: f64) -> Result<f64> {
        let fc = self.flow_coefficients(tau)?;
        Ok(-fc.dh_dtau - 2.0 * fc.h_norm_sq + 2.0 * (fc.ric_coeff - fc.lambda) * v_norm_sq)
    }

    pub fn trace_harnack(&self, tau: f64, v_norm_sq: f64) -> Result<f64> {
        self.check_horizon(tau)?;
        if tau == 0.0 {
            return Err(Error::TauZero);
        }
        let fc = self.flow_coefficients(tau)?;
        Ok(-fc.dh_dtau - fc.h_trace / tau + 2.0 * fc.lambda * v_norm_sq)
    }

    /// Slack of `Ric - h >= -K g`, the `(-K)`-super Ricci flow condition.
    pub fn super_ricci_slack(&self, tau: f64, k: f64) -> Result<f64> {
        let fc = self.flow_coefficients(tau)?;
        Ok(fc.ric_coeff - fc.lambda + k)
    }

    /// Smallest `c_tau >= 0` with `h >= -c_tau g` on `[0, tau]`.
    pub fn admissibility_constant(&self, tau: f64) -> Result<f64> {
        self.check_horizon(tau)?;
        let mut worst: f64 = 0.0;
        for s in linspace(0.0, tau, 1025) {
            let (c, cp, _) = self.scale_at(s);
            worst = worst.max(-cp / (2.0 * c));
        }
        Ok(worst)
    }

    /// Log-spaced gate grid on `[1e-4 tau_max, tau_max]`.
    pub fn default_gate_grid(&self) -> Vec<f64> {
        logspace(1e-4 * self.tau_max, self.tau_max, 64)
    }

    /// Decides the Müller, trace-Harnack and mean-curvature conditions with
    /// relaxation constant `k` by the signs of the constant and `|V|^2`
    /// coefficients at each grid time.
    pub fn assumption_gate(&self, tau_grid: &[f64], k: f64) -> Result<AssumptionReport> {
        if tau_grid.is_empty() {
            return Err(Error::EmptyGrid);
        }
        let mut report = AssumptionReport {
            passes_d: true,
            passes_harnack: true,
            passes_h: true,
            k,
            worst_margin: f64::INFINITY,
            worst_location: (tau_grid[0], 0.0),
        };
        for &tau in tau_grid {
            let fc = self.flow_coefficients(tau)?;
            let scale = fc.dh_dtau.abs() + fc.h_norm_sq + fc.ric_coeff.abs() + fc.lambda.abs() + 1.0;
            let tol = 1e-12 * scale;

            let d0 = -fc.dh_dtau - 2.0 * fc.h_norm_sq + 2.0 * k * fc.h_trace;
            let d1 = 2.0 * (fc.ric_coeff - fc.lambda) + 2.0 * k;
            let h0 = -fc.dh_dtau;
            let h1 = 2.0 * fc.lambda;
            let h = fc.h_trace;

            report.passes_d &= d0 >= -tol && d1 >= -tol;
            report.passes_harnack &= h0 >= -tol && h1 >= -tol;
            report.passes_h &= h >= -tol;

            for (slack, v) in [(d0, 0.0), (d0 + d1, 1.0), (h0, 0.0), (h0 + h1, 1.0), (h, 0.0)] {
                if slack < report.worst_margin {
                    report.worst_margin = slack;
                    report.worst_location = (tau, v);
                }
            }
        }
        Ok(report)
    }
}

/// Flow section of an experiment config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowConfig {
    pub dimension: usize,
    pub base_curvature: i8,
    #[serde(default = "default_tau_max")]
    pub tau_max: f64,
    pub scale: ScaleConfig,
}

fn default_tau_max() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScaleKind {
    Static,
    Affine,
    ShrinkingSphere,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleConfig {
    pub kind: ScaleKind,
    #[serde(default = "default_c0")]
    pub c0: f64,
    #[serde(default)]
    pub slope: f64,
    /// `[tau, c]` pairs for the sampled kind.
    #[serde(default)]
    pub knots: Vec<[f64; 2]>,
}

fn default_c0() -> f64 {
    1.0
}

impl FlowConfig {
    pub fn build(&self) -> Result<ModelFlow> {
        let scale = match self.scale.kind {
            ScaleKind::Static => Scale::Static { c0: self.scale.c0 },
            ScaleKind::Affine => Scale::Affine {
                c0: self.scale.c0,
                slope: self.scale.slope,
            },
            ScaleKind::ShrinkingSphere => Scale::ShrinkingSphere { c0: self.scale.c0 },
            ScaleKind::Sampled => {
                let xs = self.scale.knots.iter().map(|k| k[0]).collect();
                let ys = self.scale.knots.iter().map(|k| k[1]).collect();
                Scale::Sampled(CubicSpline::natural(xs, ys).ok_or_else(|| {
                    Error::InvalidFlow("sampled knots must be >= 2 strictly increasing".into())
                })?)
            }
        };
        ModelFlow::new(self.dimension, self.base_curvature, scale, self.tau_max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn affine(c0: f64, slope: f64, tau_max: f64) -> ModelFlow {
        ModelFlow::new(3, 0, Scale::Affine { c0, slope }, tau_max).unwrap()
    }

    #[test]
    fn static_flat_is_inert() {
        let f = ModelFlow::static_flat(3);
        let fc = f.flow_coefficients(1.0).unwrap();
        assert_eq!((fc.h_trace, fc.lambda, fc.ric_coeff), (0.0, 0.0, 0.0));
        assert_eq!(f.muller_quantity(0.3, 1.0).unwrap(), 0.0);
        assert_eq!(f.trace_harnack(1.0, 7.0).unwrap(), 0.0);
        assert_eq!(f.admissibility_constant(2.0).unwrap(), 0.0);
    }

    #[test]
    fn shrinking_sphere_coefficients() {
        let f = ModelFlow::shrinking_sphere(3, 1.0, 2.0).unwrap();
        let fc = f.flow_coefficients(0.0).unwrap();
        assert_eq!(fc.c_prime, 4.0);
        assert_eq!(fc.lambda, 2.0);
        assert_eq!(fc.h_trace, 6.0);
        assert_eq!(fc.ric_coeff, 2.0);
        assert!((fc.h_norm_sq - fc.h_trace.powi(2) / 3.0).abs() < 1e-15);
        assert!(f.muller_quantity(0.0, 5.0).unwrap().abs() < 1e-12);
        assert_eq!(f.admissibility_constant(2.0).unwrap(), 0.0);
    }

    #[test]
    fn shrinking_sphere_trace_harnack_at_tau_one() {
        // c = 5, H = 6/c, dH/dtau = -24/c^2: -dH/dtau - H/tau = 24/25 - 30/25
        let f = ModelFlow::shrinking_sphere(3, 1.0, 2.0).unwrap();
        let v = f.trace_harnack(1.0, 0.0).unwrap();
        assert!((v - (-6.0 / 25.0)).abs() < 1e-15, "{v}");
        let slope = f.trace_harnack(1.0, 1.0).unwrap() - v;
        assert!((slope - 2.0 * f.flow_coefficients(1.0).unwrap().lambda).abs() < 1e-15);
    }

    #[test]
    fn static_hyperbolic_fails_muller() {
        let f = ModelFlow::static_hyperbolic(2);
        let fc = f.flow_coefficients(0.5).unwrap();
        assert_eq!(fc.h_trace, 0.0);
        assert_eq!(fc.ric_coeff, -1.0);
        assert_eq!(f.muller_quantity(0.5, 1.0).unwrap(), -2.0);
        let rep = f.assumption_gate(&[0.1, 0.5, 1.0], 0.0).unwrap();
        assert!(!rep.passes_d && rep.passes_harnack && rep.passes_h);
        assert_eq!(rep.worst_margin, -2.0);
        assert_eq!(rep.worst_location, (0.1, 1.0));
    }

    #[test]
    fn affine_admissibility() {
        let f = affine(1.0, -0.25, 2.0);
        assert!((f.admissibility_constant(2.0).unwrap() - 0.25).abs() < 1e-15);
        assert!((f.admissibility_constant(0.0).unwrap() - 0.125).abs() < 1e-15);
    }

    #[test]
    fn trace_harnack_rejects_tau_zero() {
        assert_eq!(ModelFlow::static_flat(2).trace_harnack(0.0, 1.0), Err(Error::TauZero));
    }

    #[test]
    fn horizon_and_positivity_errors() {
        let f = ModelFlow::shrinking_sphere(3, 1.0, 1.0).unwrap();
        assert!(matches!(f.flow_coefficients(1.5), Err(Error::OutOfHorizon { .. })));
        assert!(matches!(
            ModelFlow::new(3, 0, Scale::Affine { c0: 1.0, slope: -1.0 }, 2.0),
            Err(Error::NonPositiveScale { .. })
        ));
        assert!(ModelFlow::new(3, 0, Scale::ShrinkingSphere { c0: 1.0 }, 1.0).is_err());
        assert!(matches!(
            ModelFlow::static_flat(2).assumption_gate(&[], 0.0),
            Err(Error::EmptyGrid)
        ));
    }

    #[test]
    fn h_equals_ric_only_for_shrinking_sphere() {
        let shrink = ModelFlow::shrinking_sphere(4, 0.7, 3.0).unwrap();
        for tau in linspace(0.0, 3.0, 31) {
            let fc = shrink.flow_coefficients(tau).unwrap();
            assert!((fc.ric_coeff - fc.lambda).abs() < 1e-12);
        }
        let stat = ModelFlow::static_sphere(4);
        let fc = stat.flow_coefficients(0.5).unwrap();
        assert!((fc.ric_coeff - fc.lambda).abs() > 1.0);
    }

    #[test]
    fn sampled_flow_follows_its_knots() {
        let cfg = FlowConfig {
            dimension: 3,
            base_curvature: 1,
            tau_max: 1.0,
            scale: ScaleConfig {
                kind: ScaleKind::Sampled,
                c0: 1.0,
                slope: 0.0,
                knots: vec![[0.0, 1.0], [0.5, 3.0], [1.0, 5.0]],
            },
        };
        let f = cfg.build().unwrap();
        // collinear knots: the natural spline is the line c = 1 + 4 tau
        let fc = f.flow_coefficients(0.25).unwrap();
        assert!((fc.c - 2.0).abs() < 1e-14 && (fc.c_prime - 4.0).abs() < 1e-13);
    }

    #[test]
    fn config_rejects_unknown_keys() {
        let good = r#"{"dimension": 3, "base_curvature": 0, "scale": {"kind": "static", "c0": 1.0}}"#;
        let cfg: FlowConfig = serde_json::from_str(good).unwrap();
        assert!(cfg.build().unwrap().is_static());
        let bad = good.replace("\"c0\"", "\"c_zero\"");
        assert!(serde_json::from_str::<FlowConfig>(&bad).is_err());
    }

    #[test]
    fn report_serializes_six_fields() {
        let rep = ModelFlow::static_flat(3).assumption_gate(&[1.0], 0.0).unwrap();
        let v = serde_json::to_value(rep).unwrap();
        let keys: Vec<_> = v.as_object().unwrap().keys().cloned().collect();
        for k in ["passes_D", "passes_Harnack", "passes_H", "K", "worst_margin", "worst_location"] {
            assert!(keys.iter().any(|x| x == k), "missing {k}");
        }
        assert_eq!(keys.len(), 6);
    }
}
