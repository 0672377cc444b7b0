use hmhf_wasm::{cutoff_profile, reduced_field, su_trajectory};
use serde_json::Value;

#[test]
fn trajectory_payload() {
    let v: Value = serde_json::from_str(&su_trajectory(7).unwrap()).unwrap();
    assert_eq!(v["classification"], "NodeConvergent");
    assert!(v["t"].as_array().unwrap().len() <= 2000);
    assert!((v["fit"]["growth_order_of_v"].as_f64().unwrap() - 2.0).abs() < 0.05);

    let spiral: Value = serde_json::from_str(&su_trajectory(4).unwrap()).unwrap();
    assert_eq!(spiral["classification"], "SpiralCrossing");
    assert!(spiral["fit"].is_null());
    assert!(su_trajectory(1).is_err());
}

#[test]
fn cutoff_payload_respects_bound() {
    let v: Value = serde_json::from_str(&cutoff_profile(5.0, 2.0, 0.2, 200).unwrap()).unwrap();
    let psi = v["psi"].as_array().unwrap();
    assert_eq!(psi[0], 1.0);
    let slope = v["abs_psi_r"].as_array().unwrap();
    let bound = v["bound"].as_array().unwrap();
    for (s, b) in slope.iter().zip(bound) {
        assert!(s.as_f64().unwrap() <= 1.0001 * b.as_f64().unwrap() + 1e-300);
    }
}

#[test]
fn flat_field_is_quadratic() {
    let v: Value = serde_json::from_str(&reduced_field("static_flat", 3, 2.0, 1.0, 5, 4).unwrap()).unwrap();
    let r: Vec<f64> = v["r"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let tau: Vec<f64> = v["tau"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    let ell = v["ell"].as_array().unwrap();
    for (it, t) in tau.iter().enumerate() {
        for (ir, x) in r.iter().enumerate() {
            let got = ell[it * r.len() + ir].as_f64().unwrap();
            assert!((got - x * x / (4.0 * t)).abs() <= 1e-12 * (1.0 + got));
        }
    }
    assert!(reduced_field("torus", 3, 1.0, 1.0, 5, 5).is_err());
}
