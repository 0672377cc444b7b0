use serde::{Deserialize, Serialize};

use super::cutoff::CutoffFunction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateConstants {
    pub m: usize,
    #[serde(rename = "C34")]
    pub c34: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(rename = "Cbar_m")]
    pub cbar_m: f64,
    #[serde(rename = "Ctilde1")]
    pub ctilde1: f64,
    #[serde(rename = "Ctilde2")]
    pub ctilde2: f64,
    pub c_m: f64,
    /// Constant of the positively curved estimate: the largest of the three
    /// coefficients of `1/R^4`, `1/T^2`, `K^2` once every power of the
    /// distance factor in `(0, 1)` is bounded by its fourth power.
    pub cbar_pos: f64,
}

impl EstimateConstants {
    pub fn from_values(m: usize, c34: f64, c: f64) -> Self {
        let mf = m as f64;
        let s = c34 * c34;
        let cbar_m = 6.0 * s * (mf * mf + 9.0 / 4.0 + 369.0 / 32.0 * s);
        let ctilde1 = 1.5 * c * c;
        let ctilde2 = 6.0 * (1.0 + s / 4.0);
        let pos_r = 27.0 / 4.0 * s * (mf * mf + 9.0 / 4.0 + 9.0 * s + 6561.0 / 4.0 * s);
        let pos_t = 27.0 / 16.0 * c * c;
        let pos_k = 27.0 / 4.0 * (1.0 + s / 4.0);
        Self {
            m,
            c34,
            c,
            cbar_m,
            ctilde1,
            ctilde2,
            c_m: cbar_m.max(ctilde1).max(ctilde2),
            cbar_pos: pos_r.max(pos_t).max(pos_k),
        }
    }

    /// Constant in front of `(1/A)(1/R + 1/sqrt T + sqrt K)` for non-positively curved targets.
    pub fn npc_factor(&self) -> f64 {
        self.c_m.powf(0.25)
    }

    /// Constant in front of `(1/sqrt kappa)(...) sup (1/cos)^2` for positively curved targets.
    pub fn pos_factor(&self) -> f64 {
        4.0 * self.cbar_pos.powf(0.25)
    }
}

pub fn theorem_constants(m: usize, cutoff: &CutoffFunction) -> Result<EstimateConstants> {
    if cutoff.alpha != 0.75 {
        return Err(Error::WrongAlpha(cutoff.alpha));
    }
    Ok(EstimateConstants::from_values(m, cutoff.c_alpha, cutoff.c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimates::cutoff::build_cutoff;

    #[test]
    fn unit_inputs() {
        let k = EstimateConstants::from_values(2, 1.0, 1.0);
        assert_eq!(k.cbar_m, 106.6875);
        assert_eq!((k.ctilde1, k.ctilde2), (1.5, 7.5));
        assert_eq!(k.c_m, 106.6875);
        assert_eq!(k.cbar_pos, 27.0 / 4.0 * (4.0 + 2.25 + 9.0 + 1640.25));
    }

    #[test]
    fn alpha_is_checked() {
        let cut = build_cutoff(1.0, 1.0, 0.5).unwrap();
        assert_eq!(theorem_constants(3, &cut), Err(Error::WrongAlpha(0.5)));
    }
}
