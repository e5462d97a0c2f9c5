use std::f64::consts::PI;
use std::sync::Arc;

use rollgap::dampsim::{
    compensator, measure_decay, setup, BoundaryRow, DecayObservable, Forcing, Operator, SimConfig, Simulation,
    DEFAULT_DISCARD,
};
use rollgap::rollwave::{build_profile, characteristics, CharacteristicData, ProfileOptions, RollWaveProfile, ShiftRate};
use rollgap::{Complex64, Error};

fn f3() -> (RollWaveProfile, CharacteristicData) {
    let p = build_profile(3.0, &ProfileOptions::default()).unwrap();
    let cd = characteristics(&p).unwrap();
    (p, cd)
}

fn sim(cfg: SimConfig) -> Simulation {
    let (p, cd) = f3();
    setup(&p, &cd, &cfg).unwrap()
}

fn short(cells: usize, t_end: f64) -> SimConfig {
    SimConfig { cells, t_end, ..SimConfig::default() }
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn zero_data_stays_zero() {
    let s = sim(short(128, 2.0));
    let u0 = vec![Complex64::default(); 256];
    let tr = s.run(&u0, Complex64::default()).unwrap();
    assert!(tr.final_state.iter().all(|z| *z == Complex64::default()));
    assert!(tr.states.iter().all(|st| st.energy == 0.0 && st.h1 == 0.0));
}

#[test]
fn scheme_is_linear() {
    let s = sim(short(128, 2.0));
    let u = s.random_initial_data(1, 4);
    let v = s.random_initial_data(2, 4);
    let (c1, c2) = (Complex64::new(0.7, -0.2), Complex64::new(-1.3, 0.5));
    let w: Vec<Complex64> = u.iter().zip(&v).map(|(a, b)| c1 * a + c2 * b).collect();
    let (yu, yv) = (Complex64::new(0.1, 0.0), Complex64::new(0.0, -0.3));
    let tu = s.run(&u, yu).unwrap().final_state;
    let tv = s.run(&v, yv).unwrap().final_state;
    let tw = s.run(&w, c1 * yu + c2 * yv).unwrap().final_state;
    let combo: Vec<Complex64> = tu.iter().zip(&tv).map(|(a, b)| c1 * a + c2 * b).collect();
    let scale = tw.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(max_diff(&tw, &combo) < 1e-12 * scale.max(1.0));
}

#[test]
fn floquet_exponent_is_periodic() {
    let (p, cd) = f3();
    let xi = 0.37;
    let a = setup(&p, &cd, &SimConfig { floquet_xi: xi, ..short(128, 2.0) }).unwrap();
    let b = setup(&p, &cd, &SimConfig { floquet_xi: xi + 2.0 * PI / p.period, ..short(128, 2.0) }).unwrap();
    let u = a.random_initial_data(3, 4);
    let ta = a.run(&u, Complex64::default()).unwrap().final_state;
    let tb = b.run(&u, Complex64::default()).unwrap().final_state;
    let scale = ta.iter().fold(0.0f64, |m, z| m.max(z.norm()));
    assert!(max_diff(&ta, &tb) < 1e-12 * scale.max(1.0));
}

#[test]
fn config_errors() {
    let (p, cd) = f3();
    for cfg in [
        SimConfig { cfl: 1.5, ..short(128, 1.0) },
        SimConfig { cfl: 0.0, ..short(128, 1.0) },
        short(16, 1.0),
        SimConfig { t_end: -1.0, ..short(128, 1.0) },
    ] {
        assert!(matches!(setup(&p, &cd, &cfg), Err(Error::Config(_))));
    }
    let s = sim(short(128, 1.0));
    assert!(matches!(s.run(&[Complex64::default(); 3], Complex64::default()), Err(Error::InvalidInput(_))));
}

#[test]
fn compensator_cancels_cross_terms() {
    let n = 50;
    let a1: Vec<f64> = (0..n).map(|i| -1.0 - 0.01 * i as f64).collect();
    let a2: Vec<f64> = (0..n).map(|i| 0.5 + 0.02 * i as f64).collect();
    let b1: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
    let b2: Vec<f64> = (0..n).map(|i| (0.3 * i as f64).cos()).collect();
    let o1 = vec![2.0; n];
    let o2: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
    let k = compensator([&a1, &a2], [&b1, &b2], [&o1, &o2], 1.0).unwrap();
    assert!(k.residual < 1e-10);
    for i in 0..n {
        let m = k.matrix(i);
        assert_eq!(m + m.transpose(), nalgebra::Matrix2::zeros());
    }
    let zero = vec![0.0; n];
    let k0 = compensator([&a1, &a2], [&zero, &zero], [&o1, &o2], 1.0).unwrap();
    assert!(k0.k.iter().all(|k| *k == 0.0));
    assert!(matches!(compensator([&a1, &a1], [&b1, &b2], [&o1, &o2], 1.0), Err(Error::Hyperbolicity { .. })));
}

fn transport(n: usize) -> Operator {
    let faces: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    Operator {
        dx: vec![1.0 / n as f64; n],
        faces,
        speed: [vec![-1.0; n + 1], vec![0.0; n + 1]],
        diag: [vec![0.0; n], vec![0.0; n]],
        cross: [vec![0.0; n], vec![0.0; n]],
        boundary: BoundaryRow { a0: 1.0, b0: 0.0, c0: 0.0, d0: [0.0; 2], e0: 0.0 },
        shift: ShiftRate { u1_plus: 0.0, u2_minus: 0.0, u2_plus: 0.0, g: [0.0; 2], y: 0.0 },
        phase: Complex64::new(1.0, 0.0),
        forcing_map: vec![nalgebra::Matrix2::identity(); n],
        forcing: None,
    }
}

fn transport_error(n: usize) -> f64 {
    let op = transport(n);
    let dt = op.time_step(0.5).unwrap();
    let steps = (1.0 / dt).ceil() as usize;
    let dt = 1.0 / steps as f64;
    let centres: Vec<f64> = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
    let mut z: Vec<Complex64> = centres.iter().map(|x| Complex64::new((2.0 * PI * x).sin(), 0.0)).collect();
    z.extend(vec![Complex64::default(); n + 1]);
    let init = z.clone();
    let mut work = [vec![Complex64::default(); 2 * n + 1], vec![Complex64::default(); 2 * n + 1], vec![
        Complex64::default();
        2 * n + 1
    ]];
    for s in 0..steps {
        op.step(&mut z, s as f64 * dt, dt, &mut work);
    }
    (0..n).map(|i| (z[i] - init[i]).norm()).sum::<f64>() / n as f64
}

#[test]
fn constant_transport_is_first_order() {
    let e1 = transport_error(100);
    let e2 = transport_error(200);
    let e3 = transport_error(400);
    assert!(e1 < 0.2);
    for ratio in [e1 / e2, e2 / e3] {
        assert!((1.7..2.3).contains(&ratio), "ratio {ratio}");
    }
}

/// Sonic-mode bump away from both ends, `u₁ = 0`, so the boundary row starts at zero.
fn bump(s: &Simulation) -> Vec<Complex64> {
    let n = s.cells();
    let period = *s.op.faces.last().unwrap();
    let mut u = vec![Complex64::default(); 2 * n];
    for (i, x) in s.cell_centres().iter().enumerate() {
        let r = (x / period - 0.5) / 0.3;
        if r.abs() < 1.0 {
            u[n + i] = Complex64::new((1.0 - r * r).powi(3), 0.0);
        }
    }
    u
}

fn sample(s: &Simulation, z: &[Complex64], x: f64) -> [Complex64; 2] {
    let n = s.cells();
    let i = s.op.faces.partition_point(|f| *f <= x).clamp(1, n) - 1;
    [z[i], z[n + i]]
}

#[test]
fn refinement_converges_at_first_order() {
    let runs: Vec<(Simulation, Vec<Complex64>)> = [128, 256, 512, 1024]
        .into_iter()
        .map(|n| {
            let s = sim(short(n, 0.5));
            let z = s.run(&bump(&s), Complex64::default()).unwrap().final_state;
            (s, z)
        })
        .collect();
    let period = *runs[0].0.op.faces.last().unwrap();
    let probes: Vec<f64> = (0..4000).map(|i| (i as f64 + 0.5) * period / 4000.0).collect();
    let diff = |a: usize, b: usize| -> f64 {
        probes
            .iter()
            .map(|&x| {
                let (u, v) = (sample(&runs[a].0, &runs[a].1, x), sample(&runs[b].0, &runs[b].1, x));
                (u[0] - v[0]).norm() + (u[1] - v[1]).norm()
            })
            .sum::<f64>()
            / probes.len() as f64
    };
    let d = [diff(0, 1), diff(1, 2), diff(2, 3)];
    for w in d.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order > 0.7, "differences {d:?}");
    }
}

#[test]
fn energy_is_equivalent_to_h1() {
    for n in [128, 512] {
        let s = sim(short(n, 1.0));
        let e = &s.energy;
        assert!(e.lower > 0.0 && e.upper >= e.lower);
        for seed in 0..5 {
            let mut z = s.random_initial_data(seed, 8);
            z.push(Complex64::default());
            let norms = e.evaluate(&s.op, &z);
            let h2 = norms.h1 * norms.h1;
            assert!(norms.energy >= e.lower * h2 && norms.energy <= e.upper * h2);
        }
    }
}

#[test]
fn bounded_forcing_keeps_energy_bounded() {
    let (p, cd) = f3();
    let forcing = Forcing {
        interior: Arc::new(|x, t| [(2.0 * t).sin() * (x * 3.0).cos(), 0.5 * (2.0 * t).cos()]),
        boundary: Arc::new(|t| [0.1 * (2.0 * t).sin(), 0.0]),
    };
    let cfg = SimConfig { forcing: Some(forcing), ..short(128, 30.0) };
    let s = setup(&p, &cd, &cfg).unwrap();
    let tr = s.run(&vec![Complex64::default(); 256], Complex64::default()).unwrap();
    assert!(tr.blow_up.is_none());
    let max_in = |lo: f64, hi: f64| {
        tr.states.iter().filter(|st| st.t >= lo && st.t < hi).map(|st| st.energy).fold(0.0, f64::max)
    };
    let early = max_in(0.0, 15.0);
    let late = max_in(15.0, 30.1);
    assert!(early > 0.0);
    assert!(late < 2.0 * early, "early {early}, late {late}");
}

#[test]
fn stable_profile_decays() {
    let s = sim(SimConfig { cells: 256, ..SimConfig::default() });
    let tr = s.run(&s.random_initial_data(11, 6), Complex64::default()).unwrap();
    let r = measure_decay(&s, &tr, DecayObservable::default(), DEFAULT_DISCARD);
    assert_eq!(r.observable, DecayObservable::RateEnergy);
    assert!(r.theta_fit > 0.0 && r.r_squared > 0.99, "{r:?}");
    assert!(!r.growing);
    assert!(r.slaving_constant.is_finite() && r.slaving_constant > 0.0);
    // Same sign as the high-frequency abscissa and within an order of magnitude.
    let hf = -2.0 * s.index.hf_abscissa;
    assert!(hf > 0.0 && r.theta_fit > hf / 10.0 && r.theta_fit < hf * 10.0);
}

#[test]
fn sonic_mode_data_decays() {
    let s = sim(SimConfig { cells: 256, ..SimConfig::default() });
    let n = s.cells();
    let mut u = s.random_initial_data(5, 6);
    u[..n].iter_mut().for_each(|z| *z = Complex64::default());
    let tr = s.run(&u, Complex64::default()).unwrap();
    let r = measure_decay(&s, &tr, DecayObservable::RateEnergy, DEFAULT_DISCARD);
    assert!(r.theta_fit > 0.0, "{r:?}");
}

#[test]
fn inflated_index_grows() {
    let s = sim(SimConfig { cells: 256, index_override: Some(1.5), ..SimConfig::default() });
    assert!((s.effective_index - 1.5).abs() < 1e-12);
    let tr = s.run(&s.random_initial_data(11, 6), Complex64::default()).unwrap();
    let r = measure_decay(&s, &tr, DecayObservable::RateEnergy, DEFAULT_DISCARD);
    assert!(r.growing && r.theta_fit < 0.0, "{r:?}");
}
