//! Inviscid Saint-Venant roll waves: profiles, characteristic data, the
//! high-frequency stability index and the damping weights.
//!
//! Heights are normalized by the sonic height (`h_s = 1`). In the co-moving
//! frame the shock sits at `x = 0 ≡ X` and the height increases from `h₊`
//! at `0⁺` to `h₋` at `X⁻`. The mass flux relative to the wave is
//! `q = h(c − U) > 0`.

use nalgebra::{Matrix2, Vector2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::Composite;

/// A state `(h, U)`.
pub type State = Vector2<f64>;

const GAUSS_POINTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvModel {
    pub froude: f64,
}

impl SvModel {
    pub fn new(froude: f64) -> Result<Self> {
        if !(froude.is_finite() && froude > 0.0) {
            return Err(Error::InvalidInput(format!("Froude number must be positive, got {froude}")));
        }
        Ok(Self { froude })
    }

    /// `f₀(W) = (h, hU)`.
    pub fn conserved(&self, w: &State) -> Vector2<f64> {
        Vector2::new(w[0], w[0] * w[1])
    }

    /// `f(W) = (hU, hU² + h²/2F²)`.
    pub fn flux(&self, w: &State) -> Vector2<f64> {
        let (h, u) = (w[0], w[1]);
        Vector2::new(h * u, h * u * u + h * h / (2.0 * self.froude * self.froude))
    }

    /// `R(W) = (0, h − |U|U)`.
    pub fn source(&self, w: &State) -> Vector2<f64> {
        Vector2::new(0.0, w[0] - w[1].abs() * w[1])
    }

    pub fn d_conserved(&self, w: &State) -> Matrix2<f64> {
        Matrix2::new(1.0, 0.0, w[1], w[0])
    }

    pub fn d_flux(&self, w: &State) -> Matrix2<f64> {
        let (h, u) = (w[0], w[1]);
        Matrix2::new(u, h, u * u + h / (self.froude * self.froude), 2.0 * h * u)
    }

    pub fn d_source(&self, w: &State) -> Matrix2<f64> {
        Matrix2::new(0.0, 0.0, 1.0, -2.0 * w[1].abs())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileOptions {
    /// Height just behind the shock; overrides `h_plus_fraction`.
    pub h_plus: Option<f64>,
    /// Position of `h₊` inside its admissible interval `(r, 1)`, in `(0, 1)`.
    pub h_plus_fraction: f64,
    pub grid_cells: usize,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self { h_plus: None, h_plus_fraction: 0.5, grid_cells: 400 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RollWaveProfile {
    pub model: SvModel,
    pub c: f64,
    pub q: f64,
    pub h_s: f64,
    pub x_s: f64,
    pub period: f64,
    pub h_plus: f64,
    pub h_minus: f64,
    /// Grid on `[0, X]` containing `x_s`; the end values are one-sided limits.
    pub grid: Vec<f64>,
    pub h_samples: Vec<f64>,
    pub u_samples: Vec<f64>,
}

/// Roots `r₁ > r₂ > 0` of `P(h) = h² − (c² − 1)h + q²`.
fn quotient_roots(froude: f64) -> (f64, f64) {
    let a1 = 2.0 / froude + 1.0 / (froude * froude);
    let disc = (a1 * a1 - 4.0 / (froude * froude)).sqrt();
    ((a1 + disc) / 2.0, (a1 - disc) / 2.0)
}

/// The admissible interval for `h₊` at Froude number `froude`.
pub fn h_plus_range(froude: f64) -> Result<(f64, f64)> {
    SvModel::new(froude)?;
    if froude <= 2.0 {
        return Err(Error::NoRollWave { froude, reason: "sonic point requires F > 2".into() });
    }
    Ok((quotient_roots(froude).0, 1.0))
}

/// Builds the periodic profile with one shock per period.
pub fn build_profile(froude: f64, opts: &ProfileOptions) -> Result<RollWaveProfile> {
    let model = SvModel::new(froude)?;
    let (lo, hi) = h_plus_range(froude)?;
    let h_plus = match opts.h_plus {
        Some(h) => h,
        None => {
            if !(opts.h_plus_fraction > 0.0 && opts.h_plus_fraction < 1.0) {
                return Err(Error::InvalidInput("h_plus_fraction must lie in (0, 1)".into()));
            }
            lo + opts.h_plus_fraction * (hi - lo)
        }
    };
    if !(h_plus > lo && h_plus < hi) {
        return Err(Error::NoRollWave {
            froude,
            reason: format!("h_plus = {h_plus} outside the admissible interval ({lo}, {hi})"),
        });
    }
    if opts.grid_cells < 8 {
        return Err(Error::InvalidInput("grid_cells must be at least 8".into()));
    }
    let q = 1.0 / froude;
    // Momentum jump condition h₊h₋(h₊ + h₋)/2 = q²F² = 1.
    let h_minus = (-h_plus * h_plus + (h_plus.powi(4) + 8.0 * h_plus).sqrt()) / (2.0 * h_plus);
    let mut p = RollWaveProfile {
        model,
        c: 1.0 + q,
        q,
        h_s: 1.0,
        x_s: 0.0,
        period: 0.0,
        h_plus,
        h_minus,
        grid: Vec::new(),
        h_samples: Vec::new(),
        u_samples: Vec::new(),
    };
    p.x_s = p.position(1.0);
    p.period = p.position(h_minus);
    p.grid = sonic_grid(p.x_s, p.period, opts.grid_cells);
    p.h_samples = p.grid.iter().map(|&x| p.height(x)).collect();
    p.u_samples = p.h_samples.iter().map(|&h| p.velocity(h)).collect();
    if p.h_samples.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Numerical("profile height is not increasing".into()));
    }
    Ok(p)
}

/// Uniform cells on `[0, x_s]` and `[x_s, X]`, with `x_s` a grid point.
pub fn sonic_grid(x_s: f64, period: f64, cells: usize) -> Vec<f64> {
    let left = ((cells as f64 * x_s / period).round() as usize).clamp(2, cells - 2);
    let right = cells - left;
    let mut grid: Vec<f64> = (0..left).map(|i| x_s * i as f64 / left as f64).collect();
    grid.extend((0..=right).map(|i| x_s + (period - x_s) * i as f64 / right as f64));
    grid
}

impl RollWaveProfile {
    pub fn froude(&self) -> f64 {
        self.model.froude
    }

    pub fn velocity(&self, h: f64) -> f64 {
        self.c - self.q / h
    }

    /// `dh/dx` on the smooth part, with the sonic factor cancelled.
    pub fn slope(&self, h: f64) -> f64 {
        let f = self.froude();
        let a1 = self.c * self.c - 1.0;
        f * f * (h * h - a1 * h + self.q * self.q) / (h * h + h + 1.0)
    }

    /// Position at which the smooth part reaches height `h`.
    pub fn position(&self, h: f64) -> f64 {
        let f = self.froude();
        let (r1, r2) = quotient_roots(f);
        let a1 = self.c * self.c - 1.0;
        let rest = 1.0 - self.q * self.q;
        let a = ((a1 + 1.0) * r1 + rest) / (r1 - r2);
        let b = ((a1 + 1.0) * r2 + rest) / (r2 - r1);
        let dh = h - self.h_plus;
        (dh + a * (dh / (self.h_plus - r1)).ln_1p() + b * (dh / (self.h_plus - r2)).ln_1p()) / (f * f)
    }

    /// Height at position `x ∈ [0, X]`.
    pub fn height(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return self.h_plus;
        }
        if x >= self.period {
            return self.h_minus;
        }
        let (mut lo, mut hi) = (self.h_plus, self.h_minus);
        let mut h = lo + (hi - lo) * x / self.period;
        for _ in 0..100 {
            let g = self.position(h) - x;
            if g > 0.0 {
                hi = h;
            } else {
                lo = h;
            }
            let mut next = h - g * self.slope(h);
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - h).abs() <= 1e-16 * h {
                return next;
            }
            h = next;
        }
        h
    }

    pub fn state(&self, x: f64) -> State {
        let h = self.height(x);
        State::new(h, self.velocity(h))
    }

    pub fn state_plus(&self) -> State {
        State::new(self.h_plus, self.velocity(self.h_plus))
    }

    pub fn state_minus(&self) -> State {
        State::new(self.h_minus, self.velocity(self.h_minus))
    }

    /// `[f(W̄)] − c[f₀(W̄)]` across the shock.
    pub fn rh_residual(&self) -> Vector2<f64> {
        let m = &self.model;
        let (wp, wm) = (self.state_plus(), self.state_minus());
        (m.flux(&wp) - m.flux(&wm)) - (m.conserved(&wp) - m.conserved(&wm)) * self.c
    }

    /// Largest `|h(c − U) − q|` over the samples.
    pub fn first_integral_defect(&self) -> f64 {
        self.h_samples
            .iter()
            .zip(&self.u_samples)
            .map(|(h, u)| (h * (self.c - u) - self.q).abs())
            .fold(0.0, f64::max)
    }

    /// `α₁(X⁻) < 0 < α₂(X⁻)` and `α₁(0⁺) < α₂(0⁺) < 0`.
    pub fn lax_holds(&self) -> bool {
        let m = self.local(self.h_minus).alpha;
        let p = self.local(self.h_plus).alpha;
        m[0] < 0.0 && 0.0 < m[1] && p[0] < p[1] && p[1] < 0.0
    }

    /// Characteristic speeds, their `x`-derivatives and the zeroth-order
    /// coefficients of the diagonalized linearization at height `h`.
    pub fn local(&self, h: f64) -> LocalCoefficients {
        let f = self.froude();
        let (c, q) = (self.c, self.q);
        let u = c - q / h;
        let du = q / (h * h);
        let a = Matrix2::new(u - c, h, u * u + h / (f * f) - c * u, 2.0 * h * u - c * h);
        let da = Matrix2::new(du, 1.0, 2.0 * u * du + 1.0 / (f * f) - c * du, 2.0 * u + 2.0 * h * du - c);
        let sh = h.sqrt();
        let g = f * f * h + 1.0;
        let n = g.powf(-0.5);
        let dn = -0.5 * f * f * g.powf(-1.5);
        let base = Matrix2::new(-f * sh, f * sh, 1.0, 1.0);
        let dbase = Matrix2::new(-f / (2.0 * sh), f / (2.0 * sh), 0.0, 0.0);
        let t = base * n;
        let dt = base * dn + dbase * n;
        let hx = self.slope(h);
        let a0 = Matrix2::new(1.0, 0.0, u, h);
        let e = Matrix2::new(0.0, 0.0, 1.0, -2.0 * u.abs());
        let t_inv = t.try_inverse().expect("eigenvector matrix is invertible for h > 0");
        let a0_inv = a0.try_inverse().expect("h > 0");
        let m = t_inv * a0_inv * ((da * t + a * dt) * hx - e * t);
        let dalpha = [du - 1.0 / (2.0 * f * sh), du + 1.0 / (2.0 * f * sh)];
        LocalCoefficients {
            h,
            alpha: [-q / h - sh / f, -q / h + sh / f],
            alpha_x: [dalpha[0] * hx, dalpha[1] * hx],
            gamma: [m[(0, 0)], m[(1, 1)]],
            beta: [m[(0, 1)], m[(1, 0)]],
            t,
            a,
        }
    }

    pub fn local_at(&self, x: f64) -> LocalCoefficients {
        self.local(self.height(x))
    }

    /// `Df(W̄) − c Df₀(W̄)` at position `x`.
    pub fn convection(&self, x: f64) -> Matrix2<f64> {
        self.local_at(x).a
    }
}

#[derive(Debug, Clone, Copy)]
pub struct LocalCoefficients {
    pub h: f64,
    pub alpha: [f64; 2],
    pub alpha_x: [f64; 2],
    pub gamma: [f64; 2],
    pub beta: [f64; 2],
    /// Unit-column eigenvectors of `A₀⁻¹A`, first column for `α₁`.
    pub t: Matrix2<f64>,
    pub a: Matrix2<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SonicData {
    pub x_s: f64,
    /// `α₁′(x_s)`, `α₂′(x_s)`.
    pub alpha_prime: [f64; 2],
    pub alpha2_second: f64,
    pub gamma2: f64,
    pub gamma2_prime: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CharacteristicData {
    pub grid: Vec<f64>,
    pub alpha1: Vec<f64>,
    pub alpha2: Vec<f64>,
    pub gamma1: Vec<f64>,
    pub gamma2: Vec<f64>,
    pub beta1: Vec<f64>,
    pub beta2: Vec<f64>,
    /// Row-major eigenvector matrices.
    pub t: Vec<[[f64; 2]; 2]>,
    pub sonic: SonicData,
}

/// Fourth-order central difference of `g` at `h`.
fn derivative(g: impl Fn(f64) -> f64, h: f64, step: f64) -> f64 {
    (g(h - 2.0 * step) - 8.0 * g(h - step) + 8.0 * g(h + step) - g(h + 2.0 * step)) / (12.0 * step)
}

pub fn characteristics(p: &RollWaveProfile) -> Result<CharacteristicData> {
    let n = p.grid.len();
    let mut cd = CharacteristicData {
        grid: p.grid.clone(),
        alpha1: Vec::with_capacity(n),
        alpha2: Vec::with_capacity(n),
        gamma1: Vec::with_capacity(n),
        gamma2: Vec::with_capacity(n),
        beta1: Vec::with_capacity(n),
        beta2: Vec::with_capacity(n),
        t: Vec::with_capacity(n),
        sonic: sonic_data(p),
    };
    for &h in &p.h_samples {
        let l = p.local(h);
        if l.t.determinant().abs() < 1e-12 {
            return Err(Error::Numerical(format!("eigenvector matrix singular at h = {h}")));
        }
        if !(l.alpha[0] < l.alpha[1]) {
            return Err(Error::Hyperbolicity { gap: l.alpha[1] - l.alpha[0] });
        }
        cd.alpha1.push(l.alpha[0]);
        cd.alpha2.push(l.alpha[1]);
        cd.gamma1.push(l.gamma[0]);
        cd.gamma2.push(l.gamma[1]);
        cd.beta1.push(l.beta[0]);
        cd.beta2.push(l.beta[1]);
        cd.t.push([[l.t[(0, 0)], l.t[(0, 1)]], [l.t[(1, 0)], l.t[(1, 1)]]]);
    }
    Ok(cd)
}

fn sonic_data(p: &RollWaveProfile) -> SonicData {
    let s = p.local(p.h_s);
    let hx = p.slope(p.h_s);
    let step = 1e-3;
    SonicData {
        x_s: p.x_s,
        alpha_prime: s.alpha_x,
        alpha2_second: derivative(|h| p.local(h).alpha_x[1], p.h_s, step) * hx,
        gamma2: s.gamma[1],
        gamma2_prime: derivative(|h| p.local(h).gamma[1], p.h_s, step) * hx,
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ShiftRate {
    pub u1_plus: f64,
    pub u2_minus: f64,
    pub u2_plus: f64,
    pub g: [f64; 2],
    pub y: f64,
}

/// `u₁(X⁻) = a₀u₁(0⁺) + b₀u₂(X⁻) + c₀u₂(0⁺) + d₀·G + e₀y`, plus the matching
/// row for `dy/dt`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct JumpCoefficients {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: [f64; 2],
    pub e0: f64,
    pub lopatinsky_det: f64,
    pub shift_rate: ShiftRate,
}

/// Jump data at the shock in terms of the columns of `AT` on either side.
pub fn solve_jump(
    at_minus: &Matrix2<f64>,
    at_plus: &Matrix2<f64>,
    jump_f0: &Vector2<f64>,
    jump_r: &Vector2<f64>,
) -> Result<JumpCoefficients> {
    let at1m = at_minus.column(0).into_owned();
    let det = Matrix2::from_columns(&[at1m, *jump_f0]).determinant();
    if det.abs() <= 1e-12 * at1m.norm() * jump_f0.norm() {
        return Err(Error::LopatinskyDegenerate { det });
    }
    // (u₁(X⁻), dy/dt) solves [AT₁(X⁻) | −[f₀]] z = AT₁⁺u₁⁺ + AT₂⁺u₂⁺ − AT₂⁻u₂⁻ − G + y[R].
    let m = Matrix2::from_columns(&[at1m, -jump_f0]);
    let inv = m.try_inverse().ok_or(Error::LopatinskyDegenerate { det })?;
    let a = inv * at_plus.column(0);
    let b = inv * (-at_minus.column(1));
    let c = inv * at_plus.column(1);
    let d = -inv;
    let e = inv * jump_r;
    Ok(JumpCoefficients {
        a0: a[0],
        b0: b[0],
        c0: c[0],
        d0: [d[(0, 0)], d[(0, 1)]],
        e0: e[0],
        lopatinsky_det: det,
        shift_rate: ShiftRate { u1_plus: a[1], u2_minus: b[1], u2_plus: c[1], g: [d[(1, 0)], d[(1, 1)]], y: e[1] },
    })
}

fn jumps(p: &RollWaveProfile) -> (Vector2<f64>, Vector2<f64>) {
    let m = &p.model;
    let (wp, wm) = (p.state_plus(), p.state_minus());
    (m.conserved(&wp) - m.conserved(&wm), m.source(&wp) - m.source(&wm))
}

pub fn jump_coefficients(p: &RollWaveProfile, _cd: &CharacteristicData) -> Result<JumpCoefficients> {
    let (jf0, jr) = jumps(p);
    let lm = p.local(p.h_minus);
    let lp = p.local(p.h_plus);
    solve_jump(&(lm.a * lm.t), &(lp.a * lp.t), &jf0, &jr)
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StabilityIndexReport {
    /// Determinant ratio `C`.
    #[serde(rename = "C")]
    pub c: f64,
    /// `C` recomputed from the linear-solve characterization.
    pub c_linear_solve: f64,
    /// `∫₀ˣ γ₁/α₁`.
    pub transit_integral: f64,
    /// `∫₀ˣ 1/α₁`.
    pub transit_time: f64,
    #[serde(rename = "I")]
    pub index: f64,
    /// Real part of the high-frequency spectrum, `−ln I / ∫₀ˣ α₁⁻¹`.
    pub hf_abscissa: f64,
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: [f64; 2],
    pub e0: f64,
    pub lopatinsky_det: f64,
}

pub fn stability_index(p: &RollWaveProfile, cd: &CharacteristicData) -> Result<StabilityIndexReport> {
    let jc = jump_coefficients(p, cd)?;
    let (jf0, _) = jumps(p);
    let lm = p.local(p.h_minus);
    let lp = p.local(p.h_plus);
    let at1m = (lm.a * lm.t).column(0).into_owned();
    let at1p = (lp.a * lp.t).column(0).into_owned();
    let c = Matrix2::from_columns(&[at1p, jf0]).determinant() / Matrix2::from_columns(&[at1m, jf0]).determinant();
    let c_linear_solve = Matrix2::from_columns(&[at1m, jf0])
        .lu()
        .solve(&at1p)
        .ok_or(Error::LopatinskyDegenerate { det: jc.lopatinsky_det })?[0];

    let rule = Composite::new(GAUSS_POINTS);
    let transit_integral = rule.integrate(
        |x| {
            let l = p.local_at(x);
            l.gamma[0] / l.alpha[0]
        },
        &cd.grid,
    );
    let transit_time = rule.integrate(|x| 1.0 / p.local_at(x).alpha[0], &cd.grid);
    let index = transit_integral.exp() * c;
    Ok(StabilityIndexReport {
        c,
        c_linear_solve,
        transit_integral,
        transit_time,
        index,
        hf_abscissa: -index.abs().ln() / transit_time,
        a0: jc.a0,
        b0: jc.b0,
        c0: jc.c0,
        d0: jc.d0,
        e0: jc.e0,
        lopatinsky_det: jc.lopatinsky_det,
    })
}

/// `s* = ½ − γ₂(x_s)/α₂′(x_s)`; slaving `H^s` to `L²` needs `s > s*`.
pub fn hs_threshold(_p: &RollWaveProfile, cd: &CharacteristicData) -> Result<f64> {
    sonic_threshold(cd.sonic.alpha_prime[1], cd.sonic.gamma2, 0.0)
}

/// Threshold `½ − (Re λ + γ_s)/d_s` for the model equation `d_s(x − x_s)u′ = −(λ + γ_s)u`.
pub fn sonic_threshold(d_s: f64, gamma_s: f64, re_lambda: f64) -> Result<f64> {
    if !(d_s > 0.0) {
        return Err(Error::StructuralAssumption(format!("sonic slope must be positive, got {d_s}")));
    }
    Ok(0.5 - (re_lambda + gamma_s) / d_s)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DampingWeights {
    pub epsilon: f64,
    #[serde(rename = "C0")]
    pub c0: f64,
    pub grid: Vec<f64>,
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub delta1: f64,
    pub delta2: f64,
    pub eta1: f64,
    /// `η₁` at `ε = 0`, equal to `1 − I²`.
    pub eta1_zero: f64,
    pub advisory: Option<String>,
}

/// `ω₂′`, continuous across the sonic point.
fn sonic_integrand(p: &RollWaveProfile, s: &SonicData, x: f64) -> f64 {
    if (x - s.x_s).abs() < 1e-7 * p.period {
        return (s.alpha2_second + 2.0 * s.gamma2_prime) / s.alpha_prime[1];
    }
    let l = p.local_at(x);
    ((l.alpha_x[1] - s.alpha_prime[1]) + 2.0 * (l.gamma[1] - s.gamma2)) / l.alpha[1]
}

/// `Ω₁` and `Ω₂` sampled on `grid`, which must start at `0`.
pub fn weight_samples(
    p: &RollWaveProfile,
    sonic: &SonicData,
    epsilon: f64,
    c0: f64,
    grid: &[f64],
) -> (Vec<f64>, Vec<f64>) {
    let rule = Composite::new(GAUSS_POINTS);
    let w1 = rule.cumulative(
        |x| {
            let l = p.local_at(x);
            2.0 * (l.gamma[0] - epsilon) / l.alpha[0]
        },
        grid,
    );
    let w2 = rule.cumulative(|x| sonic_integrand(p, sonic, x), grid);
    let omega1 = grid.iter().zip(&w1).map(|(&x, w)| p.local_at(x).alpha[0].abs() * w.exp()).collect();
    let omega2 = w2.iter().map(|w| c0 * w.exp()).collect();
    (omega1, omega2)
}

/// `η₁(ε) = 1 − a₀² e^{∫₀ˣ 2(γ₁ − ε)/α₁}`.
pub fn eta1(report: &StabilityIndexReport, epsilon: f64) -> f64 {
    1.0 - report.a0 * report.a0 * (2.0 * report.transit_integral - 2.0 * epsilon * report.transit_time).exp()
}

pub fn damping_weights(
    p: &RollWaveProfile,
    cd: &CharacteristicData,
    epsilon: f64,
    c0: f64,
) -> Result<DampingWeights> {
    if !(epsilon > 0.0 && c0 > 0.0) {
        return Err(Error::InvalidInput("epsilon and C0 must be positive".into()));
    }
    let report = stability_index(p, cd)?;
    if report.index.abs() >= 1.0 {
        return Err(Error::NoDampingWeights { index: report.index });
    }
    let (omega1, omega2) = weight_samples(p, &cd.sonic, epsilon, c0, &cd.grid);
    let eta = eta1(&report, epsilon);
    let advisory = (eta <= 0.0).then(|| {
        format!("eta1 = {eta:.3e} is not positive at epsilon = {epsilon}; use a smaller epsilon")
    });
    Ok(DampingWeights {
        epsilon,
        c0,
        grid: cd.grid.clone(),
        omega1,
        omega2,
        delta1: epsilon,
        delta2: 0.5 * cd.sonic.alpha_prime[1] + cd.sonic.gamma2,
        eta1: eta,
        eta1_zero: eta1(&report, 0.0),
        advisory,
    })
}

/// Largest `ε` with `η₁(ε) ≥ ½η₁(0)`, halved.
pub fn default_epsilon(report: &StabilityIndexReport) -> Result<f64> {
    let eta0 = eta1(report, 0.0);
    if !(eta0 > 0.0) {
        return Err(Error::NoDampingWeights { index: report.index });
    }
    // a₀²e^{2g}e^{−2ετ} = 1 − ½η₁(0) with τ < 0 solves in closed form.
    let base = 1.0 - eta0;
    let eps = ((1.0 - 0.5 * eta0) / base).ln() / (-2.0 * report.transit_time);
    Ok(0.5 * eps)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn profile(f: f64) -> RollWaveProfile {
        build_profile(f, &ProfileOptions::default()).unwrap()
    }

    #[test]
    fn subcritical_froude_has_no_wave() {
        assert!(matches!(build_profile(1.5, &ProfileOptions::default()), Err(Error::NoRollWave { .. })));
        assert!(matches!(build_profile(2.0, &ProfileOptions::default()), Err(Error::NoRollWave { .. })));
    }

    #[test]
    fn shock_and_first_integral() {
        for f in [2.5, 3.0, 5.0, 10.0] {
            let p = profile(f);
            assert!(p.rh_residual().amax() < 1e-12, "{:?}", p.rh_residual());
            assert!(p.first_integral_defect() < 1e-12);
            assert!(p.lax_holds());
            assert!(p.x_s > 0.0 && p.x_s < p.period);
            assert!(p.grid.contains(&p.x_s));
        }
    }

    #[test]
    fn position_inverts() {
        let p = profile(3.0);
        for &x in &[0.01, 0.1, p.x_s, 0.4] {
            assert!((p.position(p.height(x)) - x).abs() < 1e-14);
        }
        assert!((p.height(p.x_s) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn eigen_identities() {
        let p = profile(3.0);
        for &h in &p.h_samples {
            let l = p.local(h);
            let w = State::new(h, p.velocity(h));
            let a0 = p.model.d_conserved(&w);
            let a = p.model.d_flux(&w) - a0 * p.c;
            assert!((a - l.a).amax() < 1e-14);
            let m = a0.try_inverse().unwrap() * a;
            for j in 0..2 {
                let res = m * l.t.column(j) - l.t.column(j) * l.alpha[j];
                assert!(res.amax() < 1e-12);
                assert!((l.t.column(j).norm() - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn sonic_point() {
        let p = profile(3.0);
        let cd = characteristics(&p).unwrap();
        let l = p.local(1.0);
        assert!(l.alpha[1].abs() < 1e-15);
        assert!(cd.sonic.alpha_prime[1] > 0.0);
        assert!(cd.alpha1.iter().all(|a| *a < 0.0));
        // α₂′(x_s) = (F − 2)/2 for h_s = 1.
        assert!((cd.sonic.alpha_prime[1] - 0.5).abs() < 1e-13);
    }

    #[test]
    fn index_values() {
        let p = profile(3.0);
        let cd = characteristics(&p).unwrap();
        let r = stability_index(&p, &cd).unwrap();
        assert!((r.a0 - r.c).abs() < 1e-12);
        assert!((r.c - r.c_linear_solve).abs() < 1e-12);
        assert!(r.index < 1.0 && r.index > 0.0);
        assert!(r.hf_abscissa < 0.0);
    }

    #[test]
    fn jump_homogeneous_and_rescaling() {
        let p = profile(3.0);
        let (jf0, jr) = jumps(&p);
        let lm = p.local(p.h_minus);
        let lp = p.local(p.h_plus);
        let (atm, atp) = (lm.a * lm.t, lp.a * lp.t);
        let base = solve_jump(&atm, &atp, &jf0, &jr).unwrap();
        let scale = Matrix2::new(2.0, 0.0, 0.0, 1.0);
        let scaled = solve_jump(&(atm * scale), &(atp * scale), &jf0, &jr).unwrap();
        assert!((base.a0 - scaled.a0).abs() < 1e-12);
        assert!((base.b0 - 2.0 * scaled.b0).abs() < 1e-12);
        assert!((base.c0 - 2.0 * scaled.c0).abs() < 1e-12);
    }

    #[test]
    fn weights_and_eta() {
        let p = profile(3.0);
        let cd = characteristics(&p).unwrap();
        let r = stability_index(&p, &cd).unwrap();
        let eps = default_epsilon(&r).unwrap();
        assert!((eta1(&r, 2.0 * eps) - 0.5 * eta1(&r, 0.0)).abs() < 1e-12);
        let w = damping_weights(&p, &cd, eps, 1.0).unwrap();
        assert!((w.eta1_zero - (1.0 - r.index * r.index)).abs() < 1e-12);
        assert!(w.omega1.iter().chain(&w.omega2).all(|v| *v > 0.0));
        assert!(w.delta2 > 0.0);
        assert!(w.advisory.is_none());
    }

    #[test]
    fn toy_threshold() {
        assert_eq!(sonic_threshold(2.0, 1.0, 0.0).unwrap(), 0.0);
        assert_eq!(sonic_threshold(1.0, 0.0, -0.5).unwrap(), 1.0);
        assert!(sonic_threshold(0.0, 1.0, 0.0).is_err());
    }
}
