//! Independent cross-checks: values recomputed here with other tools
//! (the `quadrature` crate, nalgebra, hand arithmetic) and then pinned.

use nalgebra::DMatrix;
use quadrature::double_exponential::integrate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use hmhf_core::flows::{ModelFlow, Scale};
use hmhf_core::kato::{kato_check, kato_sweep, HarmonicJet};
use hmhf_core::radial::{characteristic_roots, su_solve_default, Classification};
use hmhf_core::reduced::{l_length, reduced_distance, Backend, SpaceTimeCurve};

/// L = P + r^2 / I with P and I evaluated by tanh-sinh after tau = u^2,
/// which removes the 1/sqrt(tau) endpoint singularity in I.
fn oracle_l(m: usize, c0: f64, slope: f64, r: f64, tau: f64) -> f64 {
    let c = |s: f64| c0 + slope * s;
    let h = |s: f64| m as f64 * slope / (2.0 * c(s));
    let u1 = tau.sqrt();
    let p = integrate(|u| 2.0 * u * u * h(u * u), 0.0, u1, 1e-14).integral;
    let i = integrate(|u| 2.0 / c(u * u), 0.0, u1, 1e-14).integral;
    p + r * r / i
}

#[test]
fn closed_form_l_matches_tanh_sinh() {
    let cases = [
        (3, 1.0, 4.0, 1.0, 1.0),
        (3, 1.0, 4.0, 0.3, 0.25),
        (4, 2.0, 6.0, 2.0, 1.5),
        (2, 1.0, -0.25, 1.0, 2.0),
        (5, 0.5, 0.7, 0.0, 0.9),
    ];
    for (m, c0, slope, r, tau) in cases {
        let flow = ModelFlow::new(m, 1, Scale::Affine { c0, slope }, 2.0).unwrap();
        let got = reduced_distance(&flow, r, tau, Backend::ClosedForm).unwrap().l;
        let want = oracle_l(m, c0, slope, r, tau);
        assert!((got - want).abs() <= 1e-10 * want.abs().max(1.0), "m={m} c0={c0} slope={slope}: {got} vs {want}");
    }
}

#[test]
fn constant_curve_on_shrinking_sphere() {
    let flow = ModelFlow::shrinking_sphere(3, 1.0, 2.0).unwrap();
    let curve = SpaceTimeCurve::from_fn(1.0, 400, |_| 0.0).unwrap();
    let want = integrate(|t| t.sqrt() * 6.0 / (1.0 + 4.0 * t), 0.0, 1.0, 1e-14).integral;
    let got = l_length(&flow, &curve).unwrap();
    assert!((got - want).abs() <= 1e-10, "{got} vs {want}");
    // closed form: int_0^1 6 sqrt(t)/(1+4t) dt = 3 - (3/2) atan 2
    assert!((want - (3.0 - 1.5 * 2f64.atan())).abs() < 1e-13);
}

#[test]
fn flat_reduced_distance_and_backends() {
    let flat = ModelFlow::static_flat(3);
    let v = reduced_distance(&flat, 2.0, 1.0, Backend::ClosedForm).unwrap();
    assert_eq!(v.ell, 1.0);
    assert_eq!(v.frak_d, 2.0);
    let var = reduced_distance(&flat, 2.0, 1.0, Backend::Variational).unwrap();
    assert!((var.ell - 1.0).abs() < 1e-6);

    let sphere = ModelFlow::shrinking_sphere(3, 1.0, 2.0).unwrap();
    let cf = reduced_distance(&sphere, 1.0, 1.0, Backend::ClosedForm).unwrap().l;
    let vr = reduced_distance(&sphere, 1.0, 1.0, Backend::Variational).unwrap().l;
    assert!(((cf - vr) / cf).abs() < 1e-6, "{cf} vs {vr}");
    // frozen: 3 - 1.5 atan 2 + 1 / I with I = atan(2)
    assert!((cf - (3.0 - 1.5 * 2f64.atan() + 1.0 / 2f64.atan())).abs() < 1e-12);
}

fn random_orthogonal(k: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
    let a = DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0));
    a.qr().q()
}

#[test]
fn kato_is_frame_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let m = rng.random_range(2..=6);
        let n = rng.random_range(1..=4);
        let jet = HarmonicJet::random(m, n, &mut rng);
        let q = random_orthogonal(m, &mut rng);
        let p = random_orthogonal(n, &mut rng);
        let g = DMatrix::from_row_slice(n, m, jet.grad());
        let g2 = &p * g * q.transpose();
        let blocks: Vec<DMatrix<f64>> =
            (0..n).map(|a| &q * DMatrix::from_row_slice(m, m, &jet.hess()[a * m * m..(a + 1) * m * m]) * q.transpose()).collect();
        let mut hess = Vec::with_capacity(n * m * m);
        for a in 0..n {
            let mut h = DMatrix::zeros(m, m);
            for (b, blk) in blocks.iter().enumerate() {
                h += blk * p[(a, b)];
            }
            // restore exact symmetry and trace lost to rounding
            let h = (&h + h.transpose()) * 0.5;
            let mut h = h.clone();
            let tr = h.trace() / m as f64;
            for i in 0..m {
                h[(i, i)] -= tr;
            }
            hess.extend(h.transpose().iter().copied());
        }
        let grad: Vec<f64> = g2.transpose().iter().copied().collect();
        let rotated = HarmonicJet::new(m, n, grad, hess).unwrap();
        let (a, b) = (kato_check(&jet), kato_check(&rotated));
        assert!((a.lhs - b.lhs).abs() <= 1e-12 * (1.0 + a.rhs), "{} vs {}", a.lhs, b.lhs);
        assert!((a.rhs - b.rhs).abs() <= 1e-12 * (1.0 + a.rhs));
    }
}

#[test]
fn kato_two_dimensional_cases() {
    let eq = HarmonicJet::new(2, 1, vec![1.0, 0.0], vec![1.0, 0.0, 0.0, -1.0]).unwrap();
    let r = kato_check(&eq);
    assert_eq!((r.lhs, r.rhs), (1.0, 1.0));

    // every single-component 2D jet is an equality case
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let r = kato_check(&HarmonicJet::random(2, 1, &mut rng));
        assert!((r.lhs - r.rhs).abs() <= 1e-12 * r.rhs.max(1e-300));
    }

    // two components already break equality
    let strict = HarmonicJet::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0, -1.0, 1.0, 0.0, 0.0, -1.0]).unwrap();
    let r = kato_check(&strict);
    assert_eq!((r.lhs, r.rhs), (1.0, 2.0));
    assert!(r.holds);
}

#[test]
fn kato_sweep_has_no_violations() {
    let s = kato_sweep(100_000, 42, (2, 6), (1, 4));
    assert_eq!(s.violations, 0);
    assert_eq!(s.zero_gradient, 0);
    assert!(s.worst_slack > -1e-12);
}

#[test]
fn su_profile_stays_below_equator_and_increases() {
    let traj = su_solve_default(7).unwrap();
    assert_eq!(traj.classification, Classification::NodeConvergent);
    let mut prev = 0.0;
    for k in 0..=400 {
        // beyond r = e^8 the gap to pi/2 drops under double precision
        let r = (-10.0 + 0.045 * k as f64).exp();
        let rho = traj.rho(r).unwrap();
        assert!(rho < std::f64::consts::FRAC_PI_2, "rho({r}) = {rho}");
        assert!(rho > prev, "rho({r}) = {rho} after {prev}");
        prev = rho;
    }
    assert!(std::f64::consts::FRAC_PI_2 - prev < 1e-3);
}

#[test]
fn decay_exponent_tends_to_one() {
    let n1: Vec<f64> = (7..=60).map(|m| characteristic_roots(m).n1().unwrap()).collect();
    assert!(n1.windows(2).all(|w| w[1] < w[0]));
    assert!(n1.iter().all(|&x| x > 1.0));
    assert_eq!(n1[0], 2.0);
    assert!((n1[3] - (8.0 - 28f64.sqrt()) / 2.0).abs() < 1e-14);
    // large-m expansion N1 = 1 + 2/(m-4) + O((m-4)^-3)
    let k = 60.0 - 4.0;
    assert!((n1.last().unwrap() - 1.0 - 2.0 / k).abs() < 5.0 / (k * k * k));
}
