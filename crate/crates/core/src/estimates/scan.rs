use serde::{Deserialize, Serialize};

use super::constants::EstimateConstants;
use super::verify::window_nodes;
use crate::error::{Error, Result};
use crate::maps::EquivariantMap;
use crate::numerics::fit_line;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanMode {
    /// `A_R = sup over Q_{R,R^2} of 2 rho`.
    NpcGrowth,
    /// `sup over Q_{R,R^2} of (1/cos(sqrt(kappa) rho))^2`.
    PosGrowth,
    /// `sup over d <= R of 1/cos(sqrt(kappa) rho)` on a stationary map.
    StaticLinear,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum GrowthVerdict {
    HypothesisSatisfied,
    HypothesisViolated,
}

/// Growth is sublinear when the fitted exponent stays below this value.
pub const GROWTH_THRESHOLD: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub mode: ScanMode,
    #[serde(rename = "R")]
    pub radii: Vec<f64>,
    pub sups: Vec<f64>,
    /// Log-log slope of the sups over the last decade of `R`.
    pub exponent: f64,
    pub fit_points: usize,
    pub threshold: f64,
    pub verdict: GrowthVerdict,
    /// Every sup vanished: the map is constant at the base point.
    pub constant_map: bool,
    /// Upper bound on `|du|` over `Q_{R/2,R^2/4}` implied by the matching
    /// gradient estimate with `K = 0`, per window. Empty for the static mode.
    pub implied_bounds: Vec<f64>,
    pub interpretation: String,
}

fn window_sup(map: &EquivariantMap, mode: ScanMode, radius: f64) -> Result<f64> {
    let sk = map.target().kappa().max(0.0).sqrt();
    let t_top = match mode {
        ScanMode::StaticLinear => 1.0,
        _ => radius * radius,
    };
    let nodes = window_nodes(map, radius, 1e-3 * t_top, t_top)?;
    let mut sup: f64 = 0.0;
    for n in nodes {
        let rho = map.rho(n.ir, n.it).abs();
        let value = match mode {
            ScanMode::NpcGrowth => 2.0 * rho,
            ScanMode::PosGrowth | ScanMode::StaticLinear => {
                map.target().check_regular(rho)?;
                let inv = 1.0 / (sk * rho).cos();
                if mode == ScanMode::PosGrowth {
                    inv * inv
                } else {
                    inv
                }
            }
        };
        sup = sup.max(value);
    }
    Ok(sup)
}

pub fn liouville_scan(
    map: &EquivariantMap,
    radii: &[f64],
    mode: ScanMode,
    constants: &EstimateConstants,
) -> Result<ScanReport> {
    if radii.len() < 3 {
        return Err(Error::InsufficientWindows(radii.len()));
    }
    if radii.windows(2).any(|w| !(w[1] > w[0])) || !(radii[0] > 0.0) {
        return Err(Error::InvalidWindow("radii must be positive and increasing".into()));
    }
    if mode != ScanMode::NpcGrowth && !(map.target().kappa() > 0.0) {
        return Err(Error::InvalidMap("growth of 1/cos needs a positively curved target".into()));
    }
    if mode == ScanMode::StaticLinear && map.times().len() != 1 {
        return Err(Error::InvalidMap("the static mode needs a single-frame map".into()));
    }
    let sups: Vec<f64> = radii.iter().map(|&r| window_sup(map, mode, r)).collect::<Result<_>>()?;
    let constant_map = sups.iter().all(|&s| s == 0.0);

    let r_top = *radii.last().unwrap();
    let mut picked: Vec<(f64, f64)> = radii
        .iter()
        .zip(&sups)
        .filter(|(r, s)| **r >= r_top / 10.0 * (1.0 - 1e-12) && **s > 0.0)
        .map(|(r, s)| (r.ln(), s.ln()))
        .collect();
    if picked.len() < 2 {
        picked = radii
            .iter()
            .zip(&sups)
            .filter(|(_, s)| **s > 0.0)
            .map(|(r, s)| (r.ln(), s.ln()))
            .collect();
    }
    let exponent = if constant_map || picked.len() < 2 {
        0.0
    } else {
        let xs: Vec<f64> = picked.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = picked.iter().map(|p| p.1).collect();
        fit_line(&xs, &ys).map(|f| f.slope).unwrap_or(0.0)
    };
    let verdict = if exponent < GROWTH_THRESHOLD {
        GrowthVerdict::HypothesisSatisfied
    } else {
        GrowthVerdict::HypothesisViolated
    };
    let implied_bounds = match mode {
        ScanMode::NpcGrowth => radii
            .iter()
            .zip(&sups)
            .map(|(r, s)| 2.0 * constants.npc_factor() * s / r)
            .collect(),
        ScanMode::PosGrowth => {
            let sk = map.target().kappa().sqrt();
            radii
                .iter()
                .zip(&sups)
                .map(|(r, s)| 2.0 * constants.pos_factor() * s / (sk * r))
                .collect()
        }
        ScanMode::StaticLinear => Vec::new(),
    };
    Ok(ScanReport {
        mode,
        radii: radii.to_vec(),
        sups,
        exponent,
        fit_points: if constant_map { 0 } else { picked.len() },
        threshold: GROWTH_THRESHOLD,
        verdict,
        constant_map,
        implied_bounds,
        interpretation: format!(
            "growth o(R) read as a log-log slope below {GROWTH_THRESHOLD} over R in [{}, {}]",
            r_top / 10.0,
            r_top
        ),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::ModelFlow;
    use crate::maps::TargetSpaceForm;

    fn k() -> EstimateConstants {
        EstimateConstants::from_values(3, 1.0, 1.0)
    }

    #[test]
    fn dilation_grows_linearly() {
        let map = EquivariantMap::dilation(ModelFlow::static_flat(3), TargetSpaceForm::euclidean(3), 0.5, 100.0, 1001).unwrap();
        let rep = liouville_scan(&map, &[10.0, 20.0, 50.0, 100.0], ScanMode::NpcGrowth, &k()).unwrap();
        assert!((rep.exponent - 1.0).abs() < 1e-12);
        assert_eq!(rep.verdict, GrowthVerdict::HypothesisViolated);
    }

    #[test]
    fn constant_map_satisfies() {
        let map = EquivariantMap::constant(ModelFlow::static_flat(3), TargetSpaceForm::euclidean(3), 100.0, 101).unwrap();
        let rep = liouville_scan(&map, &[10.0, 20.0, 50.0], ScanMode::NpcGrowth, &k()).unwrap();
        assert!(rep.constant_map);
        assert_eq!(rep.verdict, GrowthVerdict::HypothesisSatisfied);
        assert!(rep.implied_bounds.iter().all(|&b| b == 0.0));
    }

    #[test]
    fn too_few_windows() {
        let map = EquivariantMap::constant(ModelFlow::static_flat(3), TargetSpaceForm::euclidean(3), 100.0, 101).unwrap();
        assert_eq!(
            liouville_scan(&map, &[10.0, 20.0], ScanMode::NpcGrowth, &k()).unwrap_err(),
            Error::InsufficientWindows(2)
        );
    }
}
