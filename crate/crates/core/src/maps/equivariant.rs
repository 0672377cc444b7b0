//! Rotationally symmetric maps `u(r, theta) = (rho(r, t), theta)` from a model
//! flow into a target space form, stored as radial profiles on a uniform
//! radius grid, one profile per stored time.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::fmt::Write as _;

use super::target::TargetSpaceForm;
use crate::error::{Error, Result};
use crate::flows::ModelFlow;
use crate::numerics::{sn, sn_prime};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivariantMap {
    domain: ModelFlow,
    target: TargetSpaceForm,
    dr: f64,
    radii: Vec<f64>,
    times: Vec<f64>,
    frames: Vec<Vec<f64>>,
}

/// Local first and second order data of the map at one grid node.
///
/// Norms are taken in `g(tau)` with `tau = -t`; the singular values of `du`
/// are `a` (radial) and `b` (angular, multiplicity `m - 1`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NodeJet {
    pub r: f64,
    pub t: f64,
    pub c: f64,
    pub rho: f64,
    pub rho_r: f64,
    pub rho_rr: f64,
    pub rho_t: f64,
    pub a: f64,
    pub b: f64,
    pub energy_density: f64,
    pub tension: f64,
    /// `|nabla du|^2`.
    pub hess_sq: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TensionEnergy {
    pub energy_density: f64,
    pub tension_radial: f64,
    pub time_deriv: f64,
    /// `tension - d_t rho`; vanishes on solutions of the backward flow
    /// written in forward time.
    pub flow_residual: f64,
}

/// Derivative at `ts[at]` of the quadratic through three points.
pub(crate) fn deriv3(ts: [f64; 3], ys: [f64; 3], at: usize) -> f64 {
    let x = ts[at];
    let mut total = 0.0;
    for j in 0..3 {
        let mut dl = 0.0;
        for k in 0..3 {
            if k == j {
                continue;
            }
            let mut term = 1.0 / (ts[j] - ts[k]);
            for l in 0..3 {
                if l != j && l != k {
                    term *= (x - ts[l]) / (ts[j] - ts[l]);
                }
            }
            dl += term;
        }
        total += ys[j] * dl;
    }
    total
}

impl EquivariantMap {
    /// Builds a map from stored frames. Every frame must have `radii.len()`
    /// entries with `rho(0) = 0`.
    pub fn from_frames(
        domain: ModelFlow,
        target: TargetSpaceForm,
        r_max: f64,
        times: Vec<f64>,
        frames: Vec<Vec<f64>>,
    ) -> Result<Self> {
        let m = domain.dimension();
        if target.dimension() != m {
            return Err(Error::InvalidMap(format!(
                "equivariant maps need target dimension {m}, got {}",
                target.dimension()
            )));
        }
        if frames.is_empty() || frames.len() != times.len() {
            return Err(Error::InvalidMap("need one frame per stored time".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidMap("stored times must increase".into()));
        }
        let nr = frames[0].len();
        if nr < 5 {
            return Err(Error::InvalidMap(format!("radius grid has {nr} nodes, need at least 5")));
        }
        if !(r_max > 0.0) || (domain.base_curvature() == 1 && r_max >= PI) {
            return Err(Error::InvalidMap(format!("radius range [0, {r_max}] is not admissible")));
        }
        let dr = r_max / (nr - 1) as f64;
        for (frame, &t) in frames.iter().zip(&times) {
            if frame.len() != nr {
                return Err(Error::InvalidMap("frames differ in length".into()));
            }
            if frame[0].abs() > 1e-14 {
                return Err(Error::InvalidMap(format!("rho(0, {t}) = {} must vanish", frame[0])));
            }
            if frame.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidMap(format!("non-finite profile at t = {t}")));
            }
            let sup = frame.iter().fold(0.0f64, |a, b| a.max(b.abs()));
            target.check_regular(sup)?;
        }
        let map = Self {
            domain,
            target,
            dr,
            radii: (0..nr).map(|i| i as f64 * dr).collect(),
            times,
            frames,
        };
        for &t in &map.times {
            map.c_at(t)?;
        }
        Ok(map)
    }

    /// Time-independent map sampled from `profile` on `nr` nodes of `[0, r_max]`.
    pub fn stationary(
        domain: ModelFlow,
        target: TargetSpaceForm,
        r_max: f64,
        nr: usize,
        profile: impl Fn(f64) -> f64,
    ) -> Result<Self> {
        let dr = r_max / (nr.max(2) - 1) as f64;
        let mut frame: Vec<f64> = (0..nr).map(|i| profile(i as f64 * dr)).collect();
        if let Some(v) = frame.first_mut() {
            if v.abs() <= 1e-14 {
                *v = 0.0;
            }
        }
        Self::from_frames(domain, target, r_max, vec![0.0], vec![frame])
    }

    pub fn constant(domain: ModelFlow, target: TargetSpaceForm, r_max: f64, nr: usize) -> Result<Self> {
        Self::stationary(domain, target, r_max, nr, |_| 0.0)
    }

    /// `rho = a r`, harmonic between flat spaces.
    pub fn dilation(domain: ModelFlow, target: TargetSpaceForm, slope: f64, r_max: f64, nr: usize) -> Result<Self> {
        Self::stationary(domain, target, r_max, nr, |r| slope * r)
    }

    pub fn domain(&self) -> &ModelFlow {
        &self.domain
    }

    pub fn target(&self) -> &TargetSpaceForm {
        &self.target
    }

    pub fn dimension(&self) -> usize {
        self.domain.dimension()
    }

    pub fn dr(&self) -> f64 {
        self.dr
    }

    pub fn r_max(&self) -> f64 {
        *self.radii.last().unwrap()
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &[Vec<f64>] {
        &self.frames
    }

    pub fn frame(&self, it: usize) -> &[f64] {
        &self.frames[it]
    }

    /// Dirichlet value at `r_max` for every stored time.
    pub fn boundary(&self) -> Vec<f64> {
        self.frames.iter().map(|f| *f.last().unwrap()).collect()
    }

    pub fn rho(&self, ir: usize, it: usize) -> f64 {
        self.frames[it][ir]
    }

    /// Grid index of a radius that lies on the grid (within 1e-9 dr).
    pub fn radius_index(&self, r: f64) -> Option<usize> {
        let x = r / self.dr;
        let i = x.round();
        ((x - i).abs() < 1e-9 && i >= 0.0 && (i as usize) < self.radii.len()).then_some(i as usize)
    }

    pub fn time_index(&self, t: f64) -> Option<usize> {
        let tol = 1e-9 * (1.0 + t.abs());
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }

    /// Scale factor of the domain metric at forward time `t` (`tau = -t`).
    pub fn c_at(&self, t: f64) -> Result<f64> {
        if self.domain.is_static() {
            Ok(self.domain.scale_at(0.0).0)
        } else {
            self.domain.c(-t)
        }
    }

    /// `(ric - lambda)` of the domain at forward time `t`.
    pub fn ricci_minus_h(&self, t: f64) -> Result<f64> {
        let tau = if self.domain.is_static() { 0.0 } else { -t };
        let fc = self.domain.flow_coefficients(tau)?;
        Ok(fc.ric_coeff - fc.lambda)
    }

    fn f(&self, r: f64) -> f64 {
        sn(self.domain.k0(), r)
    }

    fn fp(&self, r: f64) -> f64 {
        sn_prime(self.domain.k0(), r)
    }

    /// Radial derivative with odd reflection at 0 and a one-sided stencil at `r_max`.
    fn rho_r(&self, ir: usize, it: usize) -> f64 {
        let p = &self.frames[it];
        let n = p.len() - 1;
        if ir == 0 {
            p[1] / self.dr
        } else if ir == n {
            (3.0 * p[n] - 4.0 * p[n - 1] + p[n - 2]) / (2.0 * self.dr)
        } else {
            (p[ir + 1] - p[ir - 1]) / (2.0 * self.dr)
        }
    }

    fn rho_t(&self, ir: usize, it: usize) -> f64 {
        let k = self.times.len();
        if k == 1 {
            return 0.0;
        }
        if k == 2 {
            return (self.frames[1][ir] - self.frames[0][ir]) / (self.times[1] - self.times[0]);
        }
        let (base, at) = if it == 0 {
            (0, 0)
        } else if it == k - 1 {
            (k - 3, 2)
        } else {
            (it - 1, 1)
        };
        let ts = [self.times[base], self.times[base + 1], self.times[base + 2]];
        let ys = [self.frames[base][ir], self.frames[base + 1][ir], self.frames[base + 2][ir]];
        deriv3(ts, ys, at)
    }

    /// `|du|^2` at any grid node; the origin uses the limit `m rho_r^2 / c`.
    pub fn energy_density(&self, ir: usize, it: usize) -> Result<f64> {
        let c = self.c_at(self.times[it])?;
        let rr = self.rho_r(ir, it);
        let m = self.dimension() as f64;
        if ir == 0 {
            return Ok(m * rr * rr / c);
        }
        let r = self.radii[ir];
        let b = self.target.sn(self.frames[it][ir]) / self.f(r);
        Ok((rr * rr + (m - 1.0) * b * b) / c)
    }

    pub fn energy_density_frame(&self, it: usize) -> Result<Vec<f64>> {
        (0..self.radii.len()).map(|ir| self.energy_density(ir, it)).collect()
    }

    fn check_interior(&self, ir: usize) -> Result<()> {
        if ir == 0 || ir + 1 >= self.radii.len() {
            return Err(Error::BoundaryStencil(format!(
                "radius index {ir} has no centred stencil on 0..{}",
                self.radii.len() - 1
            )));
        }
        Ok(())
    }

    pub fn jet(&self, ir: usize, it: usize) -> Result<NodeJet> {
        self.check_interior(ir)?;
        let t = self.times[it];
        let c = self.c_at(t)?;
        let m1 = self.dimension() as f64 - 1.0;
        let p = &self.frames[it];
        let r = self.radii[ir];
        let rho = p[ir];
        let rho_r = self.rho_r(ir, it);
        let rho_rr = (p[ir + 1] - 2.0 * rho + p[ir - 1]) / (self.dr * self.dr);
        let (f, fp) = (self.f(r), self.fp(r));
        let (big_f, big_fp) = (self.target.sn(rho), self.target.sn_prime(rho));
        let a = rho_r / c.sqrt();
        let b = big_f / (c.sqrt() * f);
        let angular = fp * rho_r / f - big_f * big_fp / (f * f);
        let mixed = big_fp * rho_r / f - big_f * fp / (f * f);
        Ok(NodeJet {
            r,
            t,
            c,
            rho,
            rho_r,
            rho_rr,
            rho_t: self.rho_t(ir, it),
            a,
            b,
            energy_density: a * a + m1 * b * b,
            tension: (rho_rr + m1 * angular) / c,
            hess_sq: (rho_rr * rho_rr + m1 * angular * angular + 2.0 * m1 * mixed * mixed) / (c * c),
        })
    }

    pub fn tension_energy(&self, ir: usize, it: usize) -> Result<TensionEnergy> {
        let j = self.jet(ir, it)?;
        Ok(TensionEnergy {
            energy_density: j.energy_density,
            tension_radial: j.tension,
            time_deriv: j.rho_t,
            flow_residual: j.tension - j.rho_t,
        })
    }

    /// Largest `|tension - d_t rho|` over interior nodes of one frame.
    pub fn max_flow_residual(&self, it: usize) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for ir in 1..self.radii.len() - 1 {
            worst = worst.max(self.tension_energy(ir, it)?.flow_residual.abs());
        }
        Ok(worst)
    }

    /// Discrete Dirichlet energy matching the conservative evolution scheme,
    /// `sum w_{i+1/2} (rho_{i+1} - rho_i)^2 / dr + sum dr f_i^{m-1} (m-1) sn(rho_i)^2 / f_i^2`.
    pub fn discrete_energy(&self, it: usize) -> f64 {
        let m1 = self.dimension() as f64 - 1.0;
        let p = &self.frames[it];
        let mut e = 0.0;
        for i in 0..p.len() - 1 {
            let w = self.f((i as f64 + 0.5) * self.dr).powf(m1);
            e += w * (p[i + 1] - p[i]).powi(2) / self.dr;
        }
        for i in 1..p.len() - 1 {
            let f = self.f(self.radii[i]);
            e += self.dr * f.powf(m1) * m1 * (self.target.sn(p[i]) / f).powi(2);
        }
        e
    }

    pub fn sup_rho(&self, it: usize) -> f64 {
        self.frames[it].iter().fold(0.0, |a, b| a.max(b.abs()))
    }

    /// CSV with header `r,t,rho,energy_density`, one row per node and stored time.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from("r,t,rho,energy_density\n");
        for it in 0..self.times.len() {
            let e = self.energy_density_frame(it)?;
            for (ir, &r) in self.radii.iter().enumerate() {
                let _ = writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    r, self.times[it], self.frames[it][ir], e[ir]
                );
            }
        }
        Ok(out)
    }

    /// Reads a single-time profile written in the `to_csv` schema.
    pub fn from_csv(domain: ModelFlow, target: TargetSpaceForm, text: &str) -> Result<Self> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header = lines.next().ok_or_else(|| Error::Parse("empty profile".into()))?;
        let cols: Vec<&str> = header.split(',').map(str::trim).collect();
        let pos = |name: &str| {
            cols.iter()
                .position(|c| *c == name)
                .ok_or_else(|| Error::Parse(format!("profile header lacks `{name}`")))
        };
        let (ir, it, irho) = (pos("r")?, pos("t")?, pos("rho")?);
        let mut rows = Vec::new();
        for (k, line) in lines.enumerate() {
            let vals: Vec<f64> = line
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("row {}: {e}", k + 2)))?;
            if vals.len() != cols.len() {
                return Err(Error::Parse(format!("row {} has {} fields", k + 2, vals.len())));
            }
            rows.push((vals[ir], vals[it], vals[irho]));
        }
        if rows.len() < 2 {
            return Err(Error::Parse("profile needs at least two rows".into()));
        }
        let t0 = rows[0].1;
        if rows.iter().any(|row| row.1 != t0) {
            return Err(Error::Parse("profile import expects a single time".into()));
        }
        let r_max = rows.last().unwrap().0;
        let dr = r_max / (rows.len() - 1) as f64;
        for (i, row) in rows.iter().enumerate() {
            if (row.0 - i as f64 * dr).abs() > 1e-9 * r_max {
                return Err(Error::Parse(format!("radius {} breaks the uniform grid", row.0)));
            }
        }
        let frame = rows.iter().map(|row| row.2).collect();
        Self::from_frames(domain, target, r_max, vec![t0], vec![frame])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat3() -> ModelFlow {
        ModelFlow::static_flat(3)
    }

    #[test]
    fn dilation_is_harmonic() {
        let map = EquivariantMap::dilation(flat3(), TargetSpaceForm::euclidean(3), 0.7, 4.0, 41).unwrap();
        for ir in 1..40 {
            let te = map.tension_energy(ir, 0).unwrap();
            assert!(te.tension_radial.abs() < 1e-12);
            assert!((te.energy_density - 3.0 * 0.49).abs() < 1e-12);
            assert_eq!(te.time_deriv, 0.0);
        }
        assert!((map.energy_density(0, 0).unwrap() - 3.0 * 0.49).abs() < 1e-12);
        assert!((map.energy_density(40, 0).unwrap() - 3.0 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn constant_map_is_inert() {
        let map = EquivariantMap::constant(flat3(), TargetSpaceForm::unit_sphere(3), 2.0, 21).unwrap();
        let te = map.tension_energy(5, 0).unwrap();
        assert_eq!((te.energy_density, te.tension_radial, te.time_deriv, te.flow_residual), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(map.jet(5, 0).unwrap().hess_sq, 0.0);
    }

    #[test]
    fn boundary_nodes_rejected() {
        let map = EquivariantMap::constant(flat3(), TargetSpaceForm::euclidean(3), 2.0, 21).unwrap();
        assert!(matches!(map.tension_energy(0, 0), Err(Error::BoundaryStencil(_))));
        assert!(matches!(map.tension_energy(20, 0), Err(Error::BoundaryStencil(_))));
    }

    #[test]
    fn validation() {
        let s = TargetSpaceForm::unit_sphere(3);
        assert!(matches!(
            EquivariantMap::stationary(flat3(), s, 2.0, 21, |r| r),
            Err(Error::OutsideRegularBall { .. })
        ));
        assert!(EquivariantMap::constant(flat3(), TargetSpaceForm::euclidean(2), 2.0, 21).is_err());
        assert!(EquivariantMap::stationary(flat3(), s, 2.0, 21, |r| 0.1 + r * 0.1).is_err());
    }

    #[test]
    fn energy_density_matches_frame_computation() {
        // sphere domain and sphere target: compare with |du|^2 = sum of squared
        // singular values computed from the pulled-back metric directly
        let dom = ModelFlow::static_sphere(3);
        let map = EquivariantMap::stationary(dom, TargetSpaceForm::unit_sphere(3), 2.0, 2001, |r| 0.5 * r.sin()).unwrap();
        for ir in [100, 700, 1500] {
            let j = map.jet(ir, 0).unwrap();
            let r = j.r;
            let rho_r = 0.5 * r.cos();
            let ang = (0.5 * r.sin()).sin() / r.sin();
            let direct = rho_r * rho_r + 2.0 * ang * ang;
            assert!((j.energy_density - direct).abs() < 1e-6, "{} vs {direct}", j.energy_density);
        }
    }

    #[test]
    fn csv_round_trip() {
        let map = EquivariantMap::stationary(flat3(), TargetSpaceForm::unit_sphere(3), 1.0, 11, |r| 0.3 * r).unwrap();
        let csv = map.to_csv().unwrap();
        assert!(csv.starts_with("r,t,rho,energy_density\n"));
        let back = EquivariantMap::from_csv(flat3(), TargetSpaceForm::unit_sphere(3), &csv).unwrap();
        assert_eq!(back.frame(0), map.frame(0));
        assert!(EquivariantMap::from_csv(flat3(), TargetSpaceForm::unit_sphere(3), "r,t\n0,0\n").is_err());
    }

    #[test]
    fn three_point_derivative() {
        let ts = [0.0, 0.3, 1.0];
        let ys = ts.map(|t| 2.0 * t * t - t + 1.0);
        for (at, &t) in ts.iter().enumerate() {
            assert!((deriv3(ts, ys, at) - (4.0 * t - 1.0)).abs() < 1e-12);
        }
    }
}
