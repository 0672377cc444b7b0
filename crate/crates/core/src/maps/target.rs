use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};
use crate::numerics::{sn, sn_prime};

/// Simply connected target space form of constant curvature `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetSpaceForm {
    n: usize,
    kappa: f64,
}

/// Distance-function quantities at one value of `rho`. `phi` and `v` exist
/// only for positively curved targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetHelpers {
    pub sn: f64,
    pub sn_prime: f64,
    pub phi: Option<f64>,
    pub v: Option<f64>,
    pub rho_sq: f64,
}

impl TargetSpaceForm {
    pub fn new(n: usize, kappa: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidMap("target dimension must be positive".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidMap(format!("curvature {kappa} is not finite")));
        }
        Ok(Self { n, kappa })
    }

    pub fn unit_sphere(n: usize) -> Self {
        Self { n, kappa: 1.0 }
    }

    pub fn euclidean(n: usize) -> Self {
        Self { n, kappa: 0.0 }
    }

    pub fn hyperbolic(n: usize) -> Self {
        Self { n, kappa: -1.0 }
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `pi / (2 sqrt(kappa))` for `kappa > 0`, infinite otherwise.
    pub fn regular_radius(&self) -> f64 {
        if self.kappa > 0.0 {
            FRAC_PI_2 / self.kappa.sqrt()
        } else {
            f64::INFINITY
        }
    }

    pub fn sn(&self, rho: f64) -> f64 {
        sn(self.kappa, rho)
    }

    pub fn sn_prime(&self, rho: f64) -> f64 {
        sn_prime(self.kappa, rho)
    }

    /// `d/drho (sn sn') = sn'^2 - kappa sn^2`.
    pub fn sn_sn_prime_derivative(&self, rho: f64) -> f64 {
        let (s, sp) = (self.sn(rho), self.sn_prime(rho));
        sp * sp - self.kappa * s * s
    }

    pub fn check_regular(&self, rho: f64) -> Result<()> {
        let limit = self.regular_radius();
        if rho.abs() >= limit {
            return Err(Error::OutsideRegularBall { rho, limit });
        }
        Ok(())
    }

    pub fn helpers(&self, rho: f64) -> Result<TargetHelpers> {
        if !(rho >= 0.0) {
            return Err(Error::InvalidMap(format!("distance {rho} is negative")));
        }
        self.check_regular(rho)?;
        let (phi, v) = if self.kappa > 0.0 {
            let cs = (self.kappa.sqrt() * rho).cos();
            (Some(1.0 - cs), Some(1.0 / cs))
        } else {
            (None, None)
        };
        Ok(TargetHelpers {
            sn: self.sn(rho),
            sn_prime: self.sn_prime(rho),
            phi,
            v,
            rho_sq: rho * rho,
        })
    }
}
