use nalgebra::{Matrix2, Vector2};
use proptest::prelude::*;

use rollgap::quad::Composite;
use rollgap::rollwave::{
    build_profile, characteristics, damping_weights, default_epsilon, hs_threshold, stability_index, ProfileOptions,
    RollWaveProfile,
};
use rollgap::Error;

/// Reference values of the stability index for `h₊` at the midpoint of its range.
const INDEX: [(f64, f64); 4] =
    [(2.5, 0.139545140046), (3.0, 0.162275307811), (5.0, 0.217817481670), (10.0, 0.269191836430)];

fn profile(f: f64) -> RollWaveProfile {
    build_profile(f, &ProfileOptions::default()).unwrap()
}

/// Independent evaluation of the index from the raw balance law in `(h, U)`
/// variables, integrating in `h` and using eigenvectors with unit first entry.
struct Oracle {
    f: f64,
    q: f64,
    c: f64,
}

impl Oracle {
    fn u(&self, h: f64) -> f64 {
        self.c - self.q / h
    }

    /// `dx/dh` from `(−qU + h²/2F²)′ = h − U²`.
    fn dxdh(&self, h: f64) -> f64 {
        let u = self.u(h);
        (h / (self.f * self.f) - self.q * self.q / (h * h)) / (h - u * u)
    }

    fn a0(&self, h: f64) -> Matrix2<f64> {
        Matrix2::new(1.0, 0.0, self.u(h), h)
    }

    fn a(&self, h: f64) -> Matrix2<f64> {
        let u = self.u(h);
        let df = Matrix2::new(u, h, u * u + h / (self.f * self.f), 2.0 * h * u);
        df - self.a0(h) * self.c
    }

    fn t(&self, h: f64) -> Matrix2<f64> {
        let m = self.a0(h).try_inverse().unwrap() * self.a(h);
        let tr = m.trace();
        let disc = (tr * tr / 4.0 - m.determinant()).sqrt();
        let (l1, l2) = (tr / 2.0 - disc, tr / 2.0 + disc);
        // (m − l) v = 0 with v = (1, v₂).
        let v = |l: f64| -(m[(0, 0)] - l) / m[(0, 1)];
        Matrix2::new(1.0, 1.0, v(l1), v(l2))
    }

    fn speed1(&self, h: f64) -> f64 {
        let m = self.a0(h).try_inverse().unwrap() * self.a(h);
        let tr = m.trace();
        tr / 2.0 - (tr * tr / 4.0 - m.determinant()).sqrt()
    }

    /// `γ₁ dx/dh` from `T⁻¹A₀⁻¹(d(AT)/dh − E T dx/dh)`.
    fn gamma1_dx(&self, h: f64) -> f64 {
        let d = 1e-5;
        let at = |h: f64| self.a(h) * self.t(h);
        let dat = (at(h - 2.0 * d) - at(h - d) * 8.0 + at(h + d) * 8.0 - at(h + 2.0 * d)) / (12.0 * d);
        let e = Matrix2::new(0.0, 0.0, 1.0, -2.0 * self.u(h).abs());
        let t = self.t(h);
        let m = t.try_inverse().unwrap() * self.a0(h).try_inverse().unwrap() * (dat - e * t * self.dxdh(h));
        m[(0, 0)]
    }

    fn index(&self, h_plus: f64) -> f64 {
        // Momentum flux −qU + h²/2F² is continuous across the shock.
        let g = |h: f64| self.q * self.q / h + h * h / (2.0 * self.f * self.f);
        let (mut lo, mut hi) = (1.0, 10.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < g(h_plus) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let h_minus = 0.5 * (lo + hi);
        let rule = Composite::new(10);
        let panels = |a: f64, b: f64| -> Vec<f64> { (0..=400).map(|i| a + (b - a) * i as f64 / 400.0).collect() };
        let integrand = |h: f64| self.gamma1_dx(h) / self.speed1(h);
        let transit = rule.integrate(integrand, &panels(h_plus, 1.0)) + rule.integrate(integrand, &panels(1.0, h_minus));
        let w = |h: f64| Vector2::new(h, self.u(h));
        let f0 = |w: Vector2<f64>| Vector2::new(w[0], w[0] * w[1]);
        let jump = f0(w(h_plus)) - f0(w(h_minus));
        let col = |h: f64| (self.a(h) * self.t(h)).column(0).into_owned();
        let c = Matrix2::from_columns(&[col(h_plus), jump]).determinant()
            / Matrix2::from_columns(&[col(h_minus), jump]).determinant();
        transit.exp() * c
    }
}

fn oracle(f: f64) -> Oracle {
    Oracle { f, q: 1.0 / f, c: 1.0 + 1.0 / f }
}

#[test]
fn index_matches_independent_evaluation() {
    for (f, frozen) in INDEX {
        let p = profile(f);
        let r = stability_index(&p, &characteristics(&p).unwrap()).unwrap();
        let reference = oracle(f).index(p.h_plus);
        assert!((r.index - reference).abs() < 1e-8, "F = {f}: {} vs {reference}", r.index);
        assert!((r.index - frozen).abs() < 1e-10, "F = {f}: {}", r.index);
    }
}

#[test]
fn index_stable_under_refinement() {
    for (f, _) in INDEX {
        let coarse = build_profile(f, &ProfileOptions { grid_cells: 200, ..Default::default() }).unwrap();
        let fine = build_profile(f, &ProfileOptions { grid_cells: 800, ..Default::default() }).unwrap();
        let ic = stability_index(&coarse, &characteristics(&coarse).unwrap()).unwrap().index;
        let iff = stability_index(&fine, &characteristics(&fine).unwrap()).unwrap().index;
        assert!((ic - iff).abs() < 1e-9);
    }
}

#[test]
fn three_reference_scalars() {
    let p = profile(3.0);
    let r = stability_index(&p, &characteristics(&p).unwrap()).unwrap();
    assert!((r.c - 1.225482).abs() < 1e-6);
    assert!((p.period - 0.480656).abs() < 1e-6);
    assert!((p.x_s - 0.295979).abs() < 1e-6);
}

#[test]
fn sonic_slope_closed_form() {
    for (f, _) in INDEX {
        let cd = characteristics(&profile(f)).unwrap();
        assert!((cd.sonic.alpha_prime[1] - (f - 2.0) / 2.0).abs() < 1e-12);
    }
}

#[test]
fn sonic_damping_is_constant() {
    let p = profile(3.0);
    let cd = characteristics(&p).unwrap();
    let r = stability_index(&p, &cd).unwrap();
    let w = damping_weights(&p, &cd, default_epsilon(&r).unwrap(), 1.0).unwrap();
    let target = w.delta2;
    for i in 1..cd.grid.len() - 1 {
        let (x0, x1) = (cd.grid[i - 1], cd.grid[i + 1]);
        let dlog = (w.omega2[i + 1].ln() - w.omega2[i - 1].ln()) / (x1 - x0);
        let l = p.local_at(cd.grid[i]);
        let delta = 0.5 * l.alpha_x[1] + l.gamma[1] - 0.5 * l.alpha[1] * dlog;
        assert!((delta - target).abs() < 1e-3, "x = {}: {delta} vs {target}", cd.grid[i]);
    }
}

#[test]
fn threshold_is_one_half() {
    for (f, _) in INDEX {
        let p = profile(f);
        let s = hs_threshold(&p, &characteristics(&p).unwrap()).unwrap();
        assert!((s - 0.5).abs() < 1e-12);
    }
}

#[test]
fn no_wave_below_two() {
    for f in [0.5, 1.5, 2.0] {
        assert!(matches!(build_profile(f, &ProfileOptions::default()), Err(Error::NoRollWave { .. })));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn profile_invariants(f in 2.2f64..12.0, frac in 0.05f64..0.95) {
        let p = build_profile(f, &ProfileOptions { h_plus_fraction: frac, grid_cells: 120, ..Default::default() }).unwrap();
        prop_assert!(p.rh_residual().amax() < 1e-8);
        prop_assert!(p.first_integral_defect() < 1e-10);
        prop_assert!(p.lax_holds());
        let cd = characteristics(&p).unwrap();
        let r = stability_index(&p, &cd).unwrap();
        prop_assert!((r.a0 - r.c).abs() < 1e-8);
        prop_assert_eq!(r.hf_abscissa < 0.0, r.index.abs() < 1.0);
        for (h, t) in p.h_samples.iter().zip(&cd.t) {
            let l = p.local(*h);
            let m = Matrix2::new(1.0, 0.0, p.velocity(*h), *h).try_inverse().unwrap() * l.a;
            let t = Matrix2::new(t[0][0], t[0][1], t[1][0], t[1][1]);
            for j in 0..2 {
                prop_assert!((m * t.column(j) - t.column(j) * l.alpha[j]).amax() < 1e-10);
            }
        }
    }
}
