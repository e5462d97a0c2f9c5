use proptest::prelude::*;

use rollgap::genbal::{
    boundary_form, build_b, general_weights, hf_rat, hf_sat, sample_ulem, GeneralModeData, SonicCoefficients,
    DEFAULT_A_GRID,
};
use rollgap::io::parse_mode_data;
use rollgap::matgap::GapOptions;
use rollgap::rollwave::{build_profile, characteristics, stability_index, ProfileOptions};
use rollgap::{ComplexMatrix, DiagonalScaling};

fn modes(m: usize, tau: Vec<f64>, g: Vec<f64>, c: Vec<Vec<f64>>) -> GeneralModeData {
    GeneralModeData {
        n: tau.len() + 1,
        m,
        tau,
        g,
        coupling: c,
        sonic: SonicCoefficients { alpha_prime: 0.5, gamma: 0.0 },
    }
}

#[test]
fn saint_venant_reduction_gives_the_index() {
    let p = build_profile(3.0, &ProfileOptions::default()).unwrap();
    let cd = characteristics(&p).unwrap();
    let r = stability_index(&p, &cd).unwrap();
    let d = GeneralModeData::from_saint_venant(&p, &cd, &r);
    let b = build_b(&d).unwrap();
    assert_eq!(b.dim(), 1);
    assert!((b.get(0, 0).norm() - r.index).abs() < 1e-8);
    let opts = GapOptions::default();
    assert!((hf_rat(&b, &opts).unwrap() - r.index).abs() < 1e-8);
    assert!((hf_sat(&b, &opts).unwrap() - r.index).abs() < 1e-8);
    let w = general_weights(&d, &DiagonalScaling::identity(1), 1).unwrap();
    assert!((w.threshold - 0.5).abs() < 1e-12);
    assert!(w.consistent && w.scaled_norm < 1.0 && w.boundary_min_eig > 0.0);
}

#[test]
fn flipping_a_mode_inverts_its_exponential() {
    let c = vec![vec![1.0, 2.0], vec![3.0, 4.0]];
    let g = vec![0.4, -0.7];
    let incoming = build_b(&modes(1, vec![1.0, -1.0], g.clone(), c.clone())).unwrap();
    let outgoing = build_b(&modes(0, vec![-1.0, -1.0], g.clone(), c.clone())).unwrap();
    for j in 0..2 {
        let ratio = incoming.get(0, j).re / outgoing.get(0, j).re;
        assert!((ratio - (-2.0 * g[0]).exp()).abs() < 1e-14);
        assert_eq!(incoming.get(1, j), outgoing.get(1, j));
    }
}

#[test]
fn lemma_sampling() {
    let opts = GapOptions::default();
    let strong = modes(0, vec![-1.0, -std::f64::consts::SQRT_2], vec![0.0; 2], vec![vec![0.6, 0.6], vec![0.6, 0.6]]);
    let b = build_b(&strong).unwrap();
    let r = sample_ulem(&strong, &b, &DEFAULT_A_GRID, 400, 7, &opts).unwrap();
    assert!(!r.spectral_condition);
    assert!(r.levels[0].max_rho > 1.0);
    assert!(r.levels[0].min_abs_det < 0.1);
    assert!(!r.rational_dependence_suspected);

    let weak = modes(1, vec![1.0, -2.0], vec![0.0; 2], vec![vec![0.3, 0.0], vec![0.0, 0.3]]);
    let b = build_b(&weak).unwrap();
    let r = sample_ulem(&weak, &b, &DEFAULT_A_GRID, 400, 7, &opts).unwrap();
    assert!(r.spectral_condition && r.rational_dependence_suspected);
    for l in &r.levels {
        assert!(l.min_abs_det >= l.heuristic_floor.unwrap());
    }
    // Large a pushes the incoming block toward zero.
    assert!(r.levels.last().unwrap().max_rho < r.levels[0].max_rho);
}

#[test]
fn weights_follow_the_recipe() {
    let d = modes(1, vec![1.0, -2.0], vec![0.3, -0.2], vec![vec![0.2, 0.1], vec![0.0, 0.3]]);
    let s = DiagonalScaling::from_values(&[1.0, 2.0]).unwrap();
    let w = general_weights(&d, &s, 2).unwrap();
    assert!((w.modes[0].sigma - (-0.6f64).exp()).abs() < 1e-14);
    assert!((w.modes[1].sigma - 4.0).abs() < 1e-14);
    assert_eq!(w.modes[0].alpha_power, 3);
    let v = w.modes[1].evaluate(-2.0, 0.25);
    assert!((v - 4.0 * 8.0 * 0.5f64.exp()).abs() < 1e-12);
}

#[test]
fn mode_data_json() {
    let d = parse_mode_data(r#"{"n": 3, "m": 1, "tau": [1.0, -2.0], "g": [0.1, 0.2], "C": [[0.1, 0.2], [0.3, 0.4]], "sonic": {"alpha_prime": 0.5, "gamma": 0.1}}"#).unwrap();
    assert_eq!(d.m, 1);
    assert!(parse_mode_data(r#"{"n": 3, "m": 1, "tau": [-1.0, -2.0], "g": [0.1, 0.2], "C": [[0.1, 0.2], [0.3, 0.4]], "sonic": {"alpha_prime": 0.5, "gamma": 0.1}}"#).is_err());
}

fn real_matrix(n: usize) -> impl Strategy<Value = ComplexMatrix> {
    prop::collection::vec(-1.5f64..1.5, n * n)
        .prop_map(move |e| ComplexMatrix::from_real_rows(&e.chunks(n).map(|r| r.to_vec()).collect::<Vec<_>>()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn boundary_form_matches_scaled_norm(
        (b, s) in (1usize..=4).prop_flat_map(|n| (real_matrix(n), prop::collection::vec(-1.0f64..1.0, n)))
    ) {
        let s = DiagonalScaling::from_logs(&s).unwrap();
        let (norm, eig) = boundary_form(&b, &s).unwrap();
        prop_assume!((norm - 1.0).abs() > 1e-9);
        prop_assert_eq!(eig > 0.0, norm < 1.0);
    }

    #[test]
    fn saturation_dominates_rationality(b in (1usize..=4).prop_flat_map(real_matrix)) {
        let opts = GapOptions::default();
        let (rat, sat) = (hf_rat(&b, &opts).unwrap(), hf_sat(&b, &opts).unwrap());
        prop_assert!(sat - rat >= -1e-8);
    }
}
