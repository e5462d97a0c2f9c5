//! Discrete evolution of the diagonalized linearization about a roll wave on
//! one periodic cell, with the shock boundary condition and the shift `y`,
//! and the weighted energy used to observe damping.
//!
//! The unknowns are `u = (u₁, u₂)` in characteristic coordinates, piecewise
//! constant on `N` cells of `(0, X)`, plus the shift `y`. Transport is first
//! order upwind in flux form, time stepping is SSP-RK3.

use std::fmt;
use std::sync::Arc;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rollwave::{
    characteristics, default_epsilon, eta1, stability_index, weight_samples, CharacteristicData, JumpCoefficients,
    RollWaveProfile, ShiftRate, StabilityIndexReport,
};

const BLOW_UP: f64 = 1e12;

/// Interior and boundary forcing, `F(x, t)` in the original variables and `G(t)`.
#[derive(Clone)]
pub struct Forcing {
    pub interior: Arc<dyn Fn(f64, f64) -> [f64; 2] + Send + Sync>,
    pub boundary: Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>,
}

impl fmt::Debug for Forcing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("Forcing { .. }")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimConfig {
    pub cells: usize,
    pub cfl: f64,
    pub t_end: f64,
    /// Floquet exponent `ξ`; the boundary coupling carries `e^{iξX}`.
    pub floquet_xi: f64,
    /// Time between recorded states.
    pub output_interval: f64,
    /// Replace `a₀` so that the effective index `e^{∫γ₁/α₁}a₀` takes this value.
    pub index_override: Option<f64>,
    /// Weight parameter `ε`; `None` picks half the largest value with `η₁(ε) ≥ ½η₁(0)`.
    pub epsilon: Option<f64>,
    /// Weight constant `C₀`; `None` doubles from 1 until the sonic boundary margin holds.
    pub c0: Option<f64>,
    /// Compensator amplitude; 1 cancels the cross terms.
    pub compensator: f64,
    #[serde(skip)]
    pub forcing: Option<Forcing>,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            cells: 256,
            cfl: 0.5,
            t_end: 20.0,
            floquet_xi: 0.0,
            output_interval: 0.05,
            index_override: None,
            epsilon: None,
            c0: None,
            compensator: 1.0,
            forcing: None,
        }
    }
}

/// `u₁(X⁻) = a₀e u₁(0⁺) + b₀u₂(X⁻) + c₀e u₂(0⁺) + d₀·G + e₀y` with `e = e^{iξX}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BoundaryRow {
    pub a0: f64,
    pub b0: f64,
    pub c0: f64,
    pub d0: [f64; 2],
    pub e0: f64,
}

/// Coefficients of the semi-discrete system on a cell grid.
#[derive(Debug, Clone)]
pub struct Operator {
    pub faces: Vec<f64>,
    pub dx: Vec<f64>,
    /// Characteristic speeds at the faces.
    pub speed: [Vec<f64>; 2],
    /// Coefficient of `u_k` in its own equation: `α_k′ − γ_k` at cell centres.
    pub diag: [Vec<f64>; 2],
    /// Coefficient of the other mode: `−β_k` at cell centres.
    pub cross: [Vec<f64>; 2],
    pub boundary: BoundaryRow,
    pub shift: ShiftRate,
    pub phase: Complex64,
    /// `T⁻¹A₀⁻¹` at cell centres, for interior forcing.
    pub forcing_map: Vec<Matrix2<f64>>,
    pub forcing: Option<Forcing>,
}

impl Operator {
    pub fn cells(&self) -> usize {
        self.dx.len()
    }

    /// Upwind time derivative of the state `z = (u₁, u₂, y)` at time `t`.
    pub fn apply(&self, z: &[Complex64], t: f64, out: &mut [Complex64]) {
        let n = self.cells();
        let g = self.forcing.as_ref().map_or([0.0; 2], |f| (f.boundary)(t));
        let y = z[2 * n];
        let b = &self.boundary;
        let ghost = self.phase * b.a0 * z[0] + b.b0 * z[2 * n - 1] + self.phase * b.c0 * z[n]
            + b.d0[0] * g[0]
            + b.d0[1] * g[1]
            + b.e0 * y;
        for k in 0..2 {
            let u = &z[k * n..(k + 1) * n];
            let other = &z[(1 - k) * n..(2 - k) * n];
            let speed = &self.speed[k];
            let flux = |face: usize| -> Complex64 {
                let a = speed[face];
                if a < 0.0 {
                    if face == n {
                        a * ghost
                    } else {
                        a * u[face]
                    }
                } else if a > 0.0 {
                    // No inflow at x = 0: both speeds are negative there.
                    a * u[face.saturating_sub(1)]
                } else {
                    Complex64::new(0.0, 0.0)
                }
            };
            let mut left = flux(0);
            for i in 0..n {
                let right = flux(i + 1);
                out[k * n + i] =
                    -(right - left) / self.dx[i] + self.diag[k][i] * u[i] + self.cross[k][i] * other[i];
                left = right;
            }
        }
        if let Some(f) = &self.forcing {
            for i in 0..n {
                let x = 0.5 * (self.faces[i] + self.faces[i + 1]);
                let fv = (f.interior)(x, t);
                let m = &self.forcing_map[i];
                out[i] += m[(0, 0)] * fv[0] + m[(0, 1)] * fv[1];
                out[n + i] += m[(1, 0)] * fv[0] + m[(1, 1)] * fv[1];
            }
        }
        let s = &self.shift;
        out[2 * n] = self.phase * s.u1_plus * z[0] + s.u2_minus * z[2 * n - 1] + self.phase * s.u2_plus * z[n]
            + s.g[0] * g[0]
            + s.g[1] * g[1]
            + s.y * y;
    }

    pub fn max_speed(&self) -> f64 {
        self.speed.iter().flatten().fold(0.0f64, |m, a| m.max(a.abs()))
    }

    /// Largest stable step for the given Courant number.
    pub fn time_step(&self, cfl: f64) -> Result<f64> {
        if !(cfl > 0.0 && cfl < 1.0) {
            return Err(Error::Config(format!("cfl must lie in (0, 1), got {cfl}")));
        }
        let dxmin = self.dx.iter().copied().fold(f64::INFINITY, f64::min);
        Ok(cfl * dxmin / self.max_speed())
    }

    /// One SSP-RK3 step.
    pub fn step(&self, z: &mut [Complex64], t: f64, dt: f64, work: &mut [Vec<Complex64>; 3]) {
        let [k, s1, s2] = work;
        self.apply(z, t, k);
        for i in 0..z.len() {
            s1[i] = z[i] + dt * k[i];
        }
        self.apply(s1, t + dt, k);
        for i in 0..z.len() {
            s2[i] = 0.75 * z[i] + 0.25 * (s1[i] + dt * k[i]);
        }
        self.apply(s2, t + 0.5 * dt, k);
        for i in 0..z.len() {
            z[i] = z[i] / 3.0 + 2.0 / 3.0 * (s2[i] + dt * k[i]);
        }
    }
}

/// Cell faces with `x_s` on a face, `cells` cells in total.
pub fn cell_faces(p: &RollWaveProfile, cells: usize) -> Vec<f64> {
    crate::rollwave::sonic_grid(p.x_s, p.period, cells)
}

/// Skew-symmetric compensator `K = [[0, k], [−k, 0]]` on a grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Compensator {
    pub k: Vec<f64>,
    /// Largest `|2k(α₂ − α₁) − (β₁Ω₁ + β₂Ω₂)|`.
    pub residual: f64,
}

impl Compensator {
    pub fn matrix(&self, i: usize) -> Matrix2<f64> {
        Matrix2::new(0.0, self.k[i], -self.k[i], 0.0)
    }
}

/// `k = amplitude·(β₁Ω₁ + β₂Ω₂)/(2(α₂ − α₁))`.
pub fn compensator(
    alpha: [&[f64]; 2],
    beta: [&[f64]; 2],
    omega: [&[f64]; 2],
    amplitude: f64,
) -> Result<Compensator> {
    let n = alpha[0].len();
    let mut k = Vec::with_capacity(n);
    let mut residual = 0.0f64;
    for i in 0..n {
        let gap = alpha[1][i] - alpha[0][i];
        if gap.abs() < 1e-12 {
            return Err(Error::Hyperbolicity { gap: gap.abs() });
        }
        let target = beta[0][i] * omega[0][i] + beta[1][i] * omega[1][i];
        let ki = amplitude * target / (2.0 * gap);
        // Cross coefficient of ⟨∂ₓu, [K, diag(α)]∂ₓu⟩ against the β terms.
        let commutator = Matrix2::new(0.0, ki, -ki, 0.0) * Matrix2::new(alpha[0][i], 0.0, 0.0, alpha[1][i])
            - Matrix2::new(alpha[0][i], 0.0, 0.0, alpha[1][i]) * Matrix2::new(0.0, ki, -ki, 0.0);
        residual = residual.max((commutator[(0, 1)] + commutator[(1, 0)] - target).abs());
        k.push(ki);
    }
    Ok(Compensator { k, residual })
}

/// The compensator on the characteristic grid for given weights.
pub fn kawashima_k(cd: &CharacteristicData, omega1: &[f64], omega2: &[f64], amplitude: f64) -> Result<Compensator> {
    compensator([&cd.alpha1, &cd.alpha2], [&cd.beta1, &cd.beta2], [omega1, omega2], amplitude)
}

/// Discrete form of `½⟨D∂ₓu, ∂ₓu⟩ + ⟨∂ₓu, Ku⟩ + ½C₀′‖u‖²`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EnergyFunctional {
    /// Weights and compensator at the interior faces.
    pub omega1: Vec<f64>,
    pub omega2: Vec<f64>,
    pub k: Vec<f64>,
    pub c0_prime: f64,
    /// `c₁·H¹² ≤ E ≤ c₂·H¹²`.
    pub lower: f64,
    pub upper: f64,
    pub epsilon: f64,
    pub c0: f64,
    pub eta1: f64,
    pub compensator_residual: f64,
}

#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct Norms {
    pub l2: f64,
    pub h1: f64,
    pub energy: f64,
}

impl EnergyFunctional {
    /// Norms and energy of the `u` part of a state.
    pub fn evaluate(&self, op: &Operator, z: &[Complex64]) -> Norms {
        let n = op.cells();
        let (u1, u2) = (&z[..n], &z[n..2 * n]);
        let mut w = 0.0;
        for i in 0..n {
            w += (u1[i].norm_sqr() + u2[i].norm_sqr()) * op.dx[i];
        }
        let mut d = 0.0;
        let mut weighted = 0.0;
        let mut mixed = 0.0;
        for j in 0..n - 1 {
            let h = 0.5 * (op.dx[j] + op.dx[j + 1]);
            let d1 = (u1[j + 1] - u1[j]) / h;
            let d2 = (u2[j + 1] - u2[j]) / h;
            let m1 = 0.5 * (u1[j + 1] + u1[j]);
            let m2 = 0.5 * (u2[j + 1] + u2[j]);
            d += (d1.norm_sqr() + d2.norm_sqr()) * h;
            weighted += (self.omega1[j] * d1.norm_sqr() + self.omega2[j] * d2.norm_sqr()) * h;
            mixed += self.k[j] * (d1.conj() * m2 - d2.conj() * m1).re * h;
        }
        Norms { l2: w.sqrt(), h1: (w + d).sqrt(), energy: 0.5 * weighted + mixed + 0.5 * self.c0_prime * w }
    }
}

/// Everything needed to run trajectories on one profile.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub op: Operator,
    pub energy: EnergyFunctional,
    pub dt: f64,
    pub index: StabilityIndexReport,
    /// Index seen by the discrete boundary condition.
    pub effective_index: f64,
    pub config: SimConfig,
}

/// Builds the discrete operator and the energy functional for a profile.
pub fn setup(p: &RollWaveProfile, cd: &CharacteristicData, cfg: &SimConfig) -> Result<Simulation> {
    if cfg.cells < 64 {
        return Err(Error::Config(format!("need at least 64 cells, got {}", cfg.cells)));
    }
    if !(cfg.t_end > 0.0 && cfg.output_interval > 0.0) {
        return Err(Error::Config("t_end and output_interval must be positive".into()));
    }
    let index = stability_index(p, cd)?;
    let jc: JumpCoefficients = crate::rollwave::jump_coefficients(p, cd)?;
    let faces = cell_faces(p, cfg.cells);
    let n = cfg.cells;
    let dx: Vec<f64> = faces.windows(2).map(|w| w[1] - w[0]).collect();
    let face_local: Vec<_> = faces.iter().map(|&x| p.local_at(x)).collect();
    let mut speed = [Vec::with_capacity(n + 1), Vec::with_capacity(n + 1)];
    for (x, l) in faces.iter().zip(&face_local) {
        speed[0].push(l.alpha[0]);
        speed[1].push(if *x == p.x_s { 0.0 } else { l.alpha[1] });
    }
    let mut diag = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut cross = [Vec::with_capacity(n), Vec::with_capacity(n)];
    let mut forcing_map = Vec::with_capacity(n);
    for i in 0..n {
        let l = p.local_at(0.5 * (faces[i] + faces[i + 1]));
        for k in 0..2 {
            diag[k].push((speed[k][i + 1] - speed[k][i]) / dx[i] - l.gamma[k]);
            cross[k].push(-l.beta[k]);
        }
        let a0 = Matrix2::new(1.0, 0.0, p.velocity(l.h), l.h);
        forcing_map.push(l.t.try_inverse().unwrap_or_default() * a0.try_inverse().unwrap_or_default());
    }
    let transit = index.transit_integral.exp();
    let a0 = match cfg.index_override {
        Some(target) => target / transit,
        None => jc.a0,
    };
    let op = Operator {
        faces: faces.clone(),
        dx,
        speed,
        diag,
        cross,
        boundary: BoundaryRow { a0, b0: jc.b0, c0: jc.c0, d0: jc.d0, e0: jc.e0 },
        shift: jc.shift_rate,
        phase: Complex64::from_polar(1.0, cfg.floquet_xi * p.period),
        forcing_map,
        forcing: cfg.forcing.clone(),
    };
    let dt = op.time_step(cfg.cfl)?;
    let energy = energy_functional(p, cd, &index, &jc, &op, cfg)?;
    Ok(Simulation { op, energy, dt, effective_index: a0 * transit, index, config: cfg.clone() })
}

fn energy_functional(
    p: &RollWaveProfile,
    cd: &CharacteristicData,
    index: &StabilityIndexReport,
    jc: &JumpCoefficients,
    op: &Operator,
    cfg: &SimConfig,
) -> Result<EnergyFunctional> {
    let epsilon = match cfg.epsilon {
        Some(e) if e > 0.0 => e,
        Some(e) => return Err(Error::Config(format!("epsilon must be positive, got {e}"))),
        None => default_epsilon(index)?,
    };
    let eta = eta1(index, epsilon);
    let c0 = match cfg.c0 {
        Some(c) if c > 0.0 => c,
        Some(c) => return Err(Error::Config(format!("C0 must be positive, got {c}"))),
        None => default_c0(p, cd, jc, epsilon, eta),
    };
    let n = op.cells();
    let interior = &op.faces[1..n];
    // Weights need a grid starting at 0.
    let (o1, o2) = weight_samples(p, &cd.sonic, epsilon, c0, &op.faces);
    let (omega1, omega2) = (o1[1..n].to_vec(), o2[1..n].to_vec());
    let locals: Vec<_> = interior.iter().map(|&x| p.local_at(x)).collect();
    let a1: Vec<f64> = locals.iter().map(|l| l.alpha[0]).collect();
    let a2: Vec<f64> = locals.iter().map(|l| l.alpha[1]).collect();
    let b1: Vec<f64> = locals.iter().map(|l| l.beta[0]).collect();
    let b2: Vec<f64> = locals.iter().map(|l| l.beta[1]).collect();
    let comp = compensator([&a1, &a2], [&b1, &b2], [&omega1, &omega2], cfg.compensator)?;

    let om_min = omega1.iter().chain(&omega2).copied().fold(f64::INFINITY, f64::min);
    let om_max = omega1.iter().chain(&omega2).copied().fold(0.0f64, f64::max);
    let kmax = comp.k.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    // Σ|face average|²·h ≤ ρ Σ|u|²dx.
    let rho = (0..n)
        .map(|i| {
            let nb = [i.checked_sub(1), (i + 1 < n).then_some(i + 1)]
                .into_iter()
                .flatten()
                .map(|j| op.dx[j])
                .fold(0.0, f64::max);
            (op.dx[i] + nb) / (2.0 * op.dx[i])
        })
        .fold(0.0, f64::max);
    let c0_prime = 4.0 * rho * kmax * kmax / om_min + 1.0;
    let lower = (0.25 * om_min).min(0.5 * (c0_prime - 2.0 * rho * kmax * kmax / om_min));
    let upper = om_max.max(0.5 * (rho * kmax * kmax / om_max + c0_prime));
    Ok(EnergyFunctional {
        omega1,
        omega2,
        k: comp.k,
        c0_prime,
        lower,
        upper,
        epsilon,
        c0,
        eta1: eta,
        compensator_residual: comp.residual,
    })
}

/// Doubles `C₀` from 1 until the sonic-mode boundary terms exceed the transverse
/// terms they must absorb by a factor 4.
fn default_c0(p: &RollWaveProfile, cd: &CharacteristicData, jc: &JumpCoefficients, epsilon: f64, eta: f64) -> f64 {
    let ends = [0.0, p.period];
    let (o1, o2) = weight_samples(p, &cd.sonic, epsilon, 1.0, &ends);
    let (lp, lm) = (p.local(p.h_plus), p.local(p.h_minus));
    let bad = o1[1] / lm.alpha[0].abs()
        * 2.0
        * ((jc.b0 * lm.alpha[1]).powi(2) + (jc.c0 * lp.alpha[1]).powi(2))
        / eta.max(1e-3);
    let good_unit = 0.5 * (lm.alpha[1] * o2[1]).min(lp.alpha[1].abs() * o2[0]);
    let mut c0 = 1.0;
    while c0 * good_unit < 4.0 * bad && c0 < 1e12 {
        c0 *= 2.0;
    }
    c0
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SimState {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    /// Energy of the state.
    pub energy: f64,
    /// Energy of the time derivative of the state.
    pub rate_energy: f64,
    pub y: Complex64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    /// Time at which a norm exceeded the blow-up bound.
    pub blow_up: Option<f64>,
    pub final_state: Vec<Complex64>,
}

impl Simulation {
    pub fn cells(&self) -> usize {
        self.op.cells()
    }

    pub fn cell_centres(&self) -> Vec<f64> {
        self.op.faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    fn record(&self, z: &[Complex64], t: f64, rate: &mut [Complex64]) -> SimState {
        let norms = self.energy.evaluate(&self.op, z);
        self.op.apply(z, t, rate);
        let rn = self.energy.evaluate(&self.op, rate);
        SimState {
            t,
            l2: norms.l2,
            h1: norms.h1,
            energy: norms.energy,
            rate_energy: rn.energy,
            y: z[2 * self.cells()],
        }
    }

    /// Evolves `(u₀, y₀)` up to `t_end`, recording states every `output_interval`.
    pub fn run(&self, u0: &[Complex64], y0: Complex64) -> Result<Trajectory> {
        let n = self.cells();
        if u0.len() != 2 * n {
            return Err(Error::InvalidInput(format!("initial data needs {} values, got {}", 2 * n, u0.len())));
        }
        if u0.iter().any(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(Error::InvalidInput("initial data must be finite".into()));
        }
        let mut z = u0.to_vec();
        z.push(y0);
        let mut work = [vec![Complex64::default(); 2 * n + 1], vec![Complex64::default(); 2 * n + 1], vec![
            Complex64::default();
            2 * n + 1
        ]];
        let mut rate = vec![Complex64::default(); 2 * n + 1];
        let steps = (self.config.t_end / self.dt).ceil() as usize;
        let dt = self.config.t_end / steps as f64;
        let every = ((self.config.output_interval / dt).round() as usize).max(1);
        let mut states = vec![self.record(&z, 0.0, &mut rate)];
        let mut blow_up = None;
        for s in 1..=steps {
            let t = (s - 1) as f64 * dt;
            self.op.step(&mut z, t, dt, &mut work);
            if s % every == 0 || s == steps {
                let st = self.record(&z, s as f64 * dt, &mut rate);
                let big = st.h1.max(st.y.norm());
                states.push(st);
                if !(big < BLOW_UP) {
                    blow_up = Some(s as f64 * dt);
                    break;
                }
            }
        }
        Ok(Trajectory { states, blow_up, final_state: z })
    }

    /// Smooth random initial data: a few Fourier modes per component with `1/k` decay.
    pub fn random_initial_data(&self, seed: u64, modes: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let xc = self.cell_centres();
        let period = *self.op.faces.last().expect("faces");
        let n = self.cells();
        let mut u = vec![Complex64::default(); 2 * n];
        for k in 1..=modes {
            for m in 0..2 {
                let a: f64 = StandardNormal.sample(&mut rng);
                let b: f64 = StandardNormal.sample(&mut rng);
                let w = 2.0 * std::f64::consts::PI * k as f64 / period;
                for (i, x) in xc.iter().enumerate() {
                    u[m * n + i] += (a * (w * x).cos() + b * (w * x).sin()) / k as f64;
                }
            }
        }
        u
    }
}

/// Fraction of the horizon discarded before fitting.
pub const DEFAULT_DISCARD: f64 = 0.2;

/// Which energy the decay fit uses.
///
/// `Energy` is the weighted energy of the state itself. It carries the neutral
/// translation mode and plateaus, so the default fits the energy of `∂ₜu`,
/// which removes that mode.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DecayObservable {
    Energy,
    #[default]
    RateEnergy,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayReport {
    pub theta_fit: f64,
    pub r_squared: f64,
    pub slaving_constant: f64,
    pub observable: DecayObservable,
    pub window: [f64; 2],
    pub eta1_used: f64,
    pub epsilon_used: f64,
    pub growing: bool,
}

/// Least-squares fit of `log E` against `t` over `[t_lo, t_hi]`.
pub fn fit_log_linear(ts: &[f64], es: &[f64]) -> (f64, f64) {
    let pts: Vec<(f64, f64)> = ts.iter().zip(es).filter(|(_, e)| **e > 0.0).map(|(t, e)| (*t, e.ln())).collect();
    let n = pts.len() as f64;
    if pts.len() < 2 {
        return (f64::NAN, f64::NAN);
    }
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let ml = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let stl: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - ml)).sum();
    let sll: f64 = pts.iter().map(|p| (p.1 - ml).powi(2)).sum();
    let slope = stl / stt;
    let r2 = if sll == 0.0 { 1.0 } else { stl * stl / (stt * sll) };
    (slope, r2)
}

/// Fits the decay rate after discarding the first `discard` fraction of the run.
pub fn measure_decay(sim: &Simulation, traj: &Trajectory, observable: DecayObservable, discard: f64) -> DecayReport {
    let t_end = traj.states.last().map_or(0.0, |s| s.t);
    let t0 = discard * t_end;
    let value = |s: &SimState| match observable {
        DecayObservable::Energy => s.energy,
        DecayObservable::RateEnergy => s.rate_energy,
    };
    let (ts, es): (Vec<f64>, Vec<f64>) = traj.states.iter().filter(|s| s.t >= t0).map(|s| (s.t, value(s))).unzip();
    let (slope, r2) = fit_log_linear(&ts, &es);
    let theta = -slope;

    let first = traj.states[0];
    let mut sup_low = 0.0f64;
    let mut slaving = 0.0f64;
    for s in &traj.states {
        sup_low = sup_low.max(s.l2 * s.l2 + s.y.norm_sqr());
        let theta_pos = theta.max(0.0);
        let bound = (-theta_pos * s.t).exp() * first.h1 * first.h1 + sup_low;
        if bound > 0.0 {
            slaving = slaving.max(s.h1 * s.h1 / bound);
        }
    }
    DecayReport {
        theta_fit: theta,
        r_squared: r2,
        slaving_constant: slaving,
        observable,
        window: [t0, t_end],
        eta1_used: sim.energy.eta1,
        epsilon_used: sim.energy.epsilon,
        growing: traj.blow_up.is_some() || slope > 0.0,
    }
}

/// Convenience: profile characteristics plus setup.
pub fn setup_for(p: &RollWaveProfile, cfg: &SimConfig) -> Result<Simulation> {
    let cd = characteristics(p)?;
    setup(p, &cd, cfg)
}
