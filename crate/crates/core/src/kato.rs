//! The refined Kato inequality `|grad |du||^2 <= ((m-1)/m) |nabla du|^2` on
//! algebraic jets of harmonic maps, and pointwise Ecker-Huisken type
//! inequalities on equivariant harmonic maps into spheres.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::maps::EquivariantMap;
use crate::numerics::{cot_k, observed_order};

/// First and second derivatives of a map at a point, in normal coordinates on
/// both sides. `grad[a * m + i]` is `u^a_i` and `hess[(a * m + i) * m + j]`
/// is `u^a_ij`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonicJet {
    m: usize,
    n: usize,
    grad: Vec<f64>,
    hess: Vec<f64>,
}

impl HarmonicJet {
    pub fn new(m: usize, n: usize, grad: Vec<f64>, hess: Vec<f64>) -> Result<Self> {
        if m == 0 || n == 0 || grad.len() != n * m || hess.len() != n * m * m {
            return Err(Error::ConstraintViolated(format!(
                "shape mismatch for m = {m}, n = {n}: {} gradient and {} hessian entries",
                grad.len(),
                hess.len()
            )));
        }
        let jet = Self { m, n, grad, hess };
        let scale = jet.hess.iter().fold(0.0f64, |s, x| s.max(x.abs()));
        for a in 0..n {
            let mut trace = 0.0;
            for i in 0..m {
                trace += jet.h(a, i, i);
                for j in 0..i {
                    if jet.h(a, i, j) != jet.h(a, j, i) {
                        return Err(Error::ConstraintViolated(format!("u^{a}_{i}{j} is not symmetric")));
                    }
                }
            }
            if trace.abs() > 1e-14 * scale.max(f64::MIN_POSITIVE) * m as f64 {
                return Err(Error::ConstraintViolated(format!("trace of u^{a} is {trace:e}")));
            }
        }
        Ok(jet)
    }

    /// Entries uniform in `[-1, 1]`, symmetrised, with each diagonal shifted to
    /// trace zero.
    pub fn random<R: Rng + ?Sized>(m: usize, n: usize, rng: &mut R) -> Self {
        let grad: Vec<f64> = (0..n * m).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut hess = vec![0.0; n * m * m];
        for a in 0..n {
            for i in 0..m {
                for j in i..m {
                    let v = rng.random_range(-1.0..=1.0);
                    hess[(a * m + i) * m + j] = v;
                    hess[(a * m + j) * m + i] = v;
                }
            }
            project_trace_free(&mut hess[a * m * m..(a + 1) * m * m], m);
        }
        Self { m, n, grad, hess }
    }

    pub fn domain_dimension(&self) -> usize {
        self.m
    }

    pub fn target_dimension(&self) -> usize {
        self.n
    }

    pub fn grad(&self) -> &[f64] {
        &self.grad
    }

    pub fn hess(&self) -> &[f64] {
        &self.hess
    }

    pub fn g(&self, a: usize, i: usize) -> f64 {
        self.grad[a * self.m + i]
    }

    pub fn h(&self, a: usize, i: usize, j: usize) -> f64 {
        self.hess[(a * self.m + i) * self.m + j]
    }

    /// Multiplies both derivative arrays by `s`.
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            m: self.m,
            n: self.n,
            grad: self.grad.iter().map(|x| x * s).collect(),
            hess: self.hess.iter().map(|x| x * s).collect(),
        }
    }
}

/// Shifts the diagonal of an `m x m` block so that its trace is zero, then
/// repairs the rounding left on the last diagonal entry.
fn project_trace_free(block: &mut [f64], m: usize) {
    let mean = (0..m).map(|i| block[i * m + i]).sum::<f64>() / m as f64;
    for i in 0..m {
        block[i * m + i] -= mean;
    }
    let rest: f64 = (0..m - 1).map(|i| block[i * m + i]).sum();
    block[(m - 1) * m + (m - 1)] = -rest;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KatoResult {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// `rhs - lhs`.
    pub slack: f64,
    /// True when `du = 0`, where the left side is undefined and the check is skipped.
    pub zero_gradient: bool,
}

pub fn kato_check(jet: &HarmonicJet) -> KatoResult {
    let (m, n) = (jet.m, jet.n);
    let du_sq: f64 = jet.grad.iter().map(|x| x * x).sum();
    let hess_sq: f64 = jet.hess.iter().map(|x| x * x).sum();
    let rhs = (m as f64 - 1.0) / m as f64 * hess_sq;
    if du_sq == 0.0 {
        return KatoResult {
            lhs: 0.0,
            rhs,
            holds: true,
            slack: rhs,
            zero_gradient: true,
        };
    }
    let mut num = 0.0;
    for i in 0..m {
        let mut s = 0.0;
        for a in 0..n {
            for j in 0..m {
                s += jet.h(a, i, j) * jet.g(a, j);
            }
        }
        num += s * s;
    }
    let lhs = num / du_sq;
    KatoResult {
        lhs,
        rhs,
        holds: lhs <= rhs + 1e-12 * rhs,
        slack: rhs - lhs,
        zero_gradient: false,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub seed: u64,
    pub samples: usize,
    pub violations: usize,
    /// Smallest `(rhs - lhs) / rhs` seen.
    pub worst_slack: f64,
    pub zero_gradient: usize,
    pub m_range: (usize, usize),
    pub n_range: (usize, usize),
}

/// Random jets with `m` and `n` drawn uniformly from the inclusive ranges.
pub fn kato_sweep(samples: usize, seed: u64, m_range: (usize, usize), n_range: (usize, usize)) -> SweepSummary {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = f64::INFINITY;
    let mut zero = 0;
    for _ in 0..samples {
        let m = rng.random_range(m_range.0..=m_range.1);
        let n = rng.random_range(n_range.0..=n_range.1);
        let jet = HarmonicJet::random(m, n, &mut rng);
        let res = kato_check(&jet);
        if res.zero_gradient {
            zero += 1;
            continue;
        }
        if !res.holds {
            violations += 1;
        }
        if res.rhs > 0.0 {
            worst = worst.min(res.slack / res.rhs);
        }
    }
    SweepSummary {
        seed,
        samples,
        violations,
        worst_slack: worst,
        zero_gradient: zero,
        m_range,
        n_range,
    }
}

/// Minima over one grid of the three pointwise quantities, each divided by
/// the sum of absolute values of its own terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EhLevel {
    pub dr: f64,
    pub nodes: usize,
    pub min_subharmonicity: f64,
    pub min_subharmonicity_at: f64,
    pub bochner_kato_min_slack: f64,
    pub bochner_kato_at: f64,
    pub lap_v_min_slack: f64,
    pub lap_v_at: f64,
    pub max_tension: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EhReport {
    pub q: f64,
    pub levels: Vec<EhLevel>,
    /// Observed orders of the negative parts of the three minima, present
    /// only when every level has a negative excursion.
    pub subharmonicity_order: Option<f64>,
    pub bochner_kato_order: Option<f64>,
    pub lap_v_order: Option<f64>,
}

impl EhReport {
    /// Each quantity is either non-negative on the finest grid or has
    /// negative excursions decaying at order at least `min_order`.
    pub fn holds(&self, min_order: f64) -> bool {
        let last = self.levels.last().unwrap();
        let ok = |v: f64, ord: Option<f64>| v >= 0.0 || ord.is_some_and(|o| o >= min_order);
        ok(last.min_subharmonicity, self.subharmonicity_order)
            && ok(last.bochner_kato_min_slack, self.bochner_kato_order)
            && ok(last.lap_v_min_slack, self.lap_v_order)
    }
}

struct Laplacian {
    value: f64,
    scale: f64,
    grad_sq: f64,
}

/// Radial Laplacian of a field at node `ir`, with the magnitude of its terms
/// and the squared gradient.
fn laplacian(map: &EquivariantMap, field: &[f64], ir: usize, c: f64) -> Laplacian {
    let dr = map.dr();
    let r = map.radii()[ir];
    let m1 = map.dimension() as f64 - 1.0;
    let second = (field[ir + 1] - 2.0 * field[ir] + field[ir - 1]) / (dr * dr);
    let first = (field[ir + 1] - field[ir - 1]) / (2.0 * dr);
    let drift = m1 * cot_k(map.domain().k0(), r) * first;
    Laplacian {
        value: (second + drift) / c,
        scale: (second.abs() + drift.abs()) / c,
        grad_sq: first * first / c,
    }
}

fn ratio(value: f64, scale: f64) -> f64 {
    if scale == 0.0 {
        0.0
    } else {
        value / scale
    }
}

/// Evaluates `Delta (|du|^q v^q)`, `Delta |du|^2 + 2 kappa |du|^4 - (2m/(m-1)) |grad |du||^2`
/// and `Delta v - kappa |du|^2 v - 2 |grad v|^2 / v` with `v = 1 / cos(sqrt(kappa) rho)`
/// on frame `it` at the nodes whose radii lie in `radii` (all interior nodes
/// when `None`). Each value is normalised by the sum of its terms' magnitudes.
pub fn eh_pointwise_check(
    map: &EquivariantMap,
    it: usize,
    q: f64,
    radii: Option<&[f64]>,
    harmonic_threshold: f64,
) -> Result<EhLevel> {
    let m = map.dimension();
    let kappa = map.target().kappa();
    if !(kappa > 0.0) {
        return Err(Error::InvalidMap(format!("target curvature {kappa} is not positive")));
    }
    let bound = 2.0 * m as f64 - 3.0;
    if !(q > bound) {
        return Err(Error::QTooSmall { q, bound });
    }
    let nr = map.radii().len();
    let mut max_tension: f64 = 0.0;
    for ir in 1..nr - 1 {
        max_tension = max_tension.max(map.jet(ir, it)?.tension.abs());
    }
    if max_tension > harmonic_threshold {
        return Err(Error::NotHarmonic {
            residual: max_tension,
            threshold: harmonic_threshold,
        });
    }
    for ir in 0..nr {
        map.target().check_regular(map.rho(ir, it))?;
    }
    let c = map.c_at(map.times()[it])?;
    let sk = kappa.sqrt();
    let e = map.energy_density_frame(it)?;
    let norm: Vec<f64> = e.iter().map(|x| x.sqrt()).collect();
    let v: Vec<f64> = (0..nr).map(|ir| 1.0 / (sk * map.rho(ir, it)).cos()).collect();
    let big_f: Vec<f64> = (0..nr).map(|ir| (e[ir] * v[ir] * v[ir]).powf(q / 2.0)).collect();

    let nodes: Vec<usize> = match radii {
        None => (1..nr - 1).collect(),
        Some(rs) => rs
            .iter()
            .map(|&r| {
                map.radius_index(r)
                    .filter(|&i| i > 0 && i + 1 < nr)
                    .ok_or_else(|| Error::InvalidMap(format!("radius {r} is not an interior node")))
            })
            .collect::<Result<_>>()?,
    };
    if nodes.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mf = m as f64;
    let mut out = EhLevel {
        dr: map.dr(),
        nodes: nodes.len(),
        min_subharmonicity: f64::INFINITY,
        min_subharmonicity_at: f64::NAN,
        bochner_kato_min_slack: f64::INFINITY,
        bochner_kato_at: f64::NAN,
        lap_v_min_slack: f64::INFINITY,
        lap_v_at: f64::NAN,
        max_tension,
    };
    for ir in nodes {
        let r = map.radii()[ir];
        let lf = laplacian(map, &big_f, ir, c);
        let s1 = ratio(lf.value, lf.scale);
        if s1 < out.min_subharmonicity {
            out.min_subharmonicity = s1;
            out.min_subharmonicity_at = r;
        }

        let le = laplacian(map, &e, ir, c);
        let grad_norm_sq = laplacian(map, &norm, ir, c).grad_sq;
        let quartic = 2.0 * kappa * e[ir] * e[ir];
        let kato = 2.0 * mf / (mf - 1.0) * grad_norm_sq;
        let s2 = ratio(le.value + quartic - kato, le.scale + quartic.abs() + kato);
        if s2 < out.bochner_kato_min_slack {
            out.bochner_kato_min_slack = s2;
            out.bochner_kato_at = r;
        }

        let lv = laplacian(map, &v, ir, c);
        let pull = kappa * e[ir] * v[ir];
        let grad_term = 2.0 * lv.grad_sq / v[ir];
        let s3 = ratio(lv.value - pull - grad_term, lv.scale + pull.abs() + grad_term);
        if s3 < out.lap_v_min_slack {
            out.lap_v_min_slack = s3;
            out.lap_v_at = r;
        }
    }
    Ok(out)
}

/// Runs the pointwise check on a refinement sequence, evaluating every level
/// at the interior nodes of the coarsest grid.
pub fn eh_refinement(levels: &[EquivariantMap], q: f64, harmonic_threshold: f64) -> Result<EhReport> {
    let coarse = levels.first().ok_or(Error::EmptyGrid)?;
    let radii: Vec<f64> = coarse.radii()[1..coarse.radii().len() - 1].to_vec();
    let mut out = Vec::with_capacity(levels.len());
    for map in levels {
        out.push(eh_pointwise_check(map, 0, q, Some(&radii), harmonic_threshold)?);
    }
    let ratio = if out.len() >= 2 { out[0].dr / out[1].dr } else { 2.0 };
    let order = |pick: fn(&EhLevel) -> f64| {
        let neg: Vec<f64> = out.iter().map(|l| -pick(l)).collect();
        observed_order(&neg, ratio)
    };
    Ok(EhReport {
        q,
        subharmonicity_order: order(|l| l.min_subharmonicity),
        bochner_kato_order: order(|l| l.bochner_kato_min_slack),
        lap_v_order: order(|l| l.lap_v_min_slack),
        levels: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flows::ModelFlow;
    use crate::maps::{relax_harmonic, TargetSpaceForm};

    #[test]
    fn two_by_two_equality() {
        let jet = HarmonicJet::new(2, 1, vec![1.0, 0.0], vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        let res = kato_check(&jet);
        assert_eq!((res.lhs, res.rhs), (1.0, 1.0));
        assert!(res.holds);
    }

    #[test]
    fn zero_hessian_and_zero_gradient() {
        let jet = HarmonicJet::new(3, 2, vec![0.3; 6], vec![0.0; 18]).unwrap();
        let res = kato_check(&jet);
        assert_eq!((res.lhs, res.rhs, res.holds), (0.0, 0.0, true));
        let flat = HarmonicJet::new(2, 1, vec![0.0; 2], vec![1.0, 0.0, 0.0, -1.0]).unwrap();
        assert!(kato_check(&flat).zero_gradient);
    }

    #[test]
    fn constraint_violations() {
        assert!(matches!(
            HarmonicJet::new(2, 1, vec![1.0, 0.0], vec![1.0, 0.0, 0.0, 1.0]),
            Err(Error::ConstraintViolated(_))
        ));
        assert!(matches!(
            HarmonicJet::new(2, 1, vec![1.0, 0.0], vec![1.0, 0.5, 0.0, -1.0]),
            Err(Error::ConstraintViolated(_))
        ));
    }

    #[test]
    fn random_jets_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let m = rng.random_range(2..=6);
            let n = rng.random_range(1..=4);
            let j = HarmonicJet::random(m, n, &mut rng);
            assert!(HarmonicJet::new(m, n, j.grad.clone(), j.hess.clone()).is_ok());
        }
    }

    #[test]
    fn small_sweep() {
        let s = kato_sweep(2000, 7, (2, 6), (1, 4));
        assert_eq!(s.violations, 0);
        assert!(s.worst_slack > -1e-12);
    }

    #[test]
    fn constant_map_gives_zeros() {
        let map = EquivariantMap::constant(ModelFlow::static_flat(3), TargetSpaceForm::unit_sphere(3), 1.0, 21).unwrap();
        let lvl = eh_pointwise_check(&map, 0, 4.0, None, 1e-8).unwrap();
        assert_eq!(
            (lvl.min_subharmonicity, lvl.bochner_kato_min_slack, lvl.lap_v_min_slack),
            (0.0, 0.0, 0.0)
        );
    }

    #[test]
    fn q_must_exceed_bound() {
        let map = EquivariantMap::constant(ModelFlow::static_flat(7), TargetSpaceForm::unit_sphere(7), 1.0, 21).unwrap();
        assert!(matches!(eh_pointwise_check(&map, 0, 11.0, None, 1e-8), Err(Error::QTooSmall { .. })));
    }

    #[test]
    fn cap_map_bochner_kato() {
        let map = relax_harmonic(ModelFlow::static_flat(3), TargetSpaceForm::unit_sphere(3), 1.0, 201, std::f64::consts::PI / 6.0).unwrap();
        let lvl = eh_pointwise_check(&map, 0, 4.0, None, 1e-6).unwrap();
        assert!(lvl.bochner_kato_min_slack > -1e-3, "{lvl:?}");
        assert!(lvl.lap_v_min_slack > -1e-3, "{lvl:?}");
    }

    #[test]
    fn non_harmonic_rejected() {
        let map = EquivariantMap::stationary(ModelFlow::static_flat(3), TargetSpaceForm::unit_sphere(3), 1.0, 21, |r| 0.5 * r * r).unwrap();
        assert!(matches!(eh_pointwise_check(&map, 0, 4.0, None, 1e-3), Err(Error::NotHarmonic { .. })));
    }
}
