use rollgap_web::{gap_json, landscape_json, rollwave_json};
use serde_json::Value;

#[test]
fn gap_of_identity() {
    let v: Value = serde_json::from_str(&gap_json("1 0\n0 1", 1).unwrap()).unwrap();
    assert!((v["inf_norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert!(v["gap"].as_f64().unwrap().abs() < 1e-12);
}

#[test]
fn bad_matrix_is_an_error() {
    assert!(gap_json("1 2\n3", 1).is_err());
}

#[test]
fn landscape_matches_closed_form() {
    let v: Vec<[f64; 2]> = serde_json::from_str(&landscape_json(181)).unwrap();
    assert_eq!(v.len(), 181);
    for [t, r] in v {
        assert!((r - (2.0 * (1.0 - t.cos())).sqrt()).abs() < 1e-10);
    }
}

#[test]
fn roll_wave_summary() {
    let v: Value = serde_json::from_str(&rollwave_json(3.0, 0.5).unwrap()).unwrap();
    assert!((v["index"].as_f64().unwrap() - 0.162275307811).abs() < 1e-9);
    assert_eq!(v["x"].as_array().unwrap().len(), v["h"].as_array().unwrap().len());
    assert!(rollwave_json(1.5, 0.5).is_err());
}
