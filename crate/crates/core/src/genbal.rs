//! Boundary-coupling matrices for general `n×n` balance laws with one sonic
//! mode, the two high-frequency conditions on them, and the weight recipe of
//! the general damping estimate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::{Error, Result};
use crate::linalg::{hermitian_min_eig, max_modulus, op_norm, scale, ComplexMatrix, DiagonalScaling};
use crate::matgap::{max_phase_rho, min_scaled_norm, GapOptions};
use crate::rollwave::{CharacteristicData, RollWaveProfile, StabilityIndexReport};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SonicCoefficients {
    /// `α_s′(x_s)`.
    pub alpha_prime: f64,
    /// `γ_s(x_s)`.
    pub gamma: f64,
}

/// Transit data of the `n − 1` transverse modes; the first `m` have positive speed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralModeData {
    pub n: usize,
    pub m: usize,
    /// `τ_j = ∫₀ˣ α_j⁻¹`.
    pub tau: Vec<f64>,
    /// `g_j = ∫₀ˣ γ_j α_j⁻¹`.
    pub g: Vec<f64>,
    /// Coupling matrix `C`, `(n − 1) × (n − 1)`.
    #[serde(rename = "C")]
    pub coupling: Vec<Vec<f64>>,
    pub sonic: SonicCoefficients,
}

impl GeneralModeData {
    pub fn validate(&self) -> Result<()> {
        let k = self.n.checked_sub(1).filter(|k| *k >= 1).ok_or_else(|| {
            Error::InvalidInput(format!("system size must be at least 2, got {}", self.n))
        })?;
        if self.m > k {
            return Err(Error::InvalidInput(format!("m = {} exceeds n − 1 = {k}", self.m)));
        }
        if self.tau.len() != k || self.g.len() != k {
            return Err(Error::InvalidInput(format!("tau and g need {k} entries")));
        }
        if self.coupling.len() != k || self.coupling.iter().any(|r| r.len() != k) {
            return Err(Error::InvalidInput(format!("C must be {k}×{k}")));
        }
        for (j, t) in self.tau.iter().enumerate() {
            let ok = if j < self.m { *t > 0.0 } else { *t < 0.0 };
            if !ok || !t.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "tau[{j}] = {t} has the wrong sign for a {} mode",
                    if j < self.m { "positive-speed" } else { "negative-speed" }
                )));
            }
        }
        if self.g.iter().chain(self.coupling.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("g and C must be finite".into()));
        }
        Ok(())
    }

    /// The Saint-Venant reduction: `n = 2`, `m = 0`, `C = a₀`.
    pub fn from_saint_venant(p: &RollWaveProfile, cd: &CharacteristicData, index: &StabilityIndexReport) -> Self {
        let _ = p;
        Self {
            n: 2,
            m: 0,
            tau: vec![index.transit_time],
            g: vec![index.transit_integral],
            coupling: vec![vec![index.a0]],
            sonic: SonicCoefficients { alpha_prime: cd.sonic.alpha_prime[1], gamma: cd.sonic.gamma2 },
        }
    }

    /// Threshold of the regularity index `k`.
    pub fn regularity_threshold(&self) -> Result<f64> {
        crate::rollwave::sonic_threshold(self.sonic.alpha_prime, self.sonic.gamma, 0.0)
    }
}

/// `B = diag(e^{−g₊}, e^{g₋})·C`.
pub fn build_b(d: &GeneralModeData) -> Result<ComplexMatrix> {
    d.validate()?;
    let k = d.n - 1;
    let factor: Vec<f64> = (0..k).map(|j| if j < d.m { (-d.g[j]).exp() } else { d.g[j].exp() }).collect();
    let rows: Vec<Vec<f64>> = (0..k).map(|i| d.coupling[i].iter().map(|c| factor[i] * c).collect()).collect();
    ComplexMatrix::from_real_rows(&rows)
}

/// `max_U ρ(UB)`; the rational condition holds iff this is below 1.
pub fn hf_rat(b: &ComplexMatrix, opts: &GapOptions) -> Result<f64> {
    Ok(max_phase_rho(b, opts)?.value)
}

/// `inf_S ‖SBS⁻¹‖`; the saturation condition holds iff this is below 1.
pub fn hf_sat(b: &ComplexMatrix, opts: &GapOptions) -> Result<f64> {
    Ok(min_scaled_norm(b, opts)?.value)
}

/// `B_{λ,ξ} = diag(e^{−iφ}e^{−λτ₊}, e^{iφ}e^{λτ₋})·B` with `φ = ξX`.
pub fn b_lambda(d: &GeneralModeData, b: &ComplexMatrix, lambda: Complex64, phi: f64) -> DMatrix<Complex64> {
    let k = d.n - 1;
    let mut out = b.matrix().clone();
    for i in 0..k {
        let f = if i < d.m {
            Complex64::from_polar(1.0, -phi) * (-lambda * d.tau[i]).exp()
        } else {
            Complex64::from_polar(1.0, phi) * (lambda * d.tau[i]).exp()
        };
        for j in 0..k {
            out[(i, j)] *= f;
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UlemLevel {
    pub a: f64,
    /// `max_U ρ(U B_{a,0})`.
    pub max_rho: f64,
    /// Smallest sampled `|det(B_{a+iζ,ξ} − Id)|`.
    pub min_abs_det: f64,
    /// `0.5·(1 − max ρ)^{n−1}` when `max ρ < 1`; reported only.
    pub heuristic_floor: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct UlemReport {
    pub levels: Vec<UlemLevel>,
    /// `max_U ρ(U B_{a,0}) < 1` on every sampled `a`.
    pub spectral_condition: bool,
    /// Some ratio `τ_i/τ_j` is close to a fraction with denominator at most 12.
    pub rational_dependence_suspected: bool,
    pub samples_per_level: usize,
}

pub const DEFAULT_A_GRID: [f64; 6] = [0.0, 0.5, 1.0, 2.0, 5.0, 20.0];

/// Samples `det(B_{λ,ξ} − Id)` over `λ = a + iζ` and phases, for each `a` in `a_grid`.
pub fn sample_ulem(
    d: &GeneralModeData,
    b: &ComplexMatrix,
    a_grid: &[f64],
    zeta_count: usize,
    seed: u64,
    opts: &GapOptions,
) -> Result<UlemReport> {
    d.validate()?;
    if b.dim() != d.n - 1 {
        return Err(Error::InvalidInput("B and the mode data disagree in size".into()));
    }
    let k = d.n - 1;
    let tau_min = d.tau.iter().fold(f64::INFINITY, |m, t| m.min(t.abs()));
    let zeta_max = 1000.0 * TAU / tau_min;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut levels = Vec::with_capacity(a_grid.len());
    for &a in a_grid {
        let base = ComplexMatrix::new(b_lambda(d, b, Complex64::new(a, 0.0), 0.0))?;
        let max_rho = max_phase_rho(&base, opts)?.value;
        let mut min_abs_det = f64::INFINITY;
        for _ in 0..zeta_count {
            let zeta = rng.random_range(-zeta_max..zeta_max);
            let phi = rng.random_range(0.0..TAU);
            let m = b_lambda(d, b, Complex64::new(a, zeta), phi) - DMatrix::identity(k, k);
            min_abs_det = min_abs_det.min(m.determinant().norm());
        }
        let heuristic_floor = (max_rho < 1.0).then(|| 0.5 * (1.0 - max_rho).powi(k as i32));
        levels.push(UlemLevel { a, max_rho, min_abs_det, heuristic_floor });
    }
    Ok(UlemReport {
        spectral_condition: levels.iter().all(|l| l.max_rho < 1.0),
        levels,
        rational_dependence_suspected: rationally_dependent(&d.tau),
        samples_per_level: zeta_count,
    })
}

fn rationally_dependent(tau: &[f64]) -> bool {
    for i in 0..tau.len() {
        for j in 0..i {
            let r = (tau[i] / tau[j]).abs();
            for q in 1..=12 {
                let p = (r * q as f64).round();
                if p >= 1.0 && (r * q as f64 - p).abs() < 1e-9 * q as f64 {
                    return true;
                }
            }
        }
    }
    false
}

/// Weight `σ_ℓ|α_ℓ|^{2k−1}e^{∫2γ_ℓ/α_ℓ}` for one transverse mode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeWeight {
    pub mode: usize,
    pub positive_speed: bool,
    pub sigma: f64,
    pub alpha_power: i32,
    pub recipe: String,
}

impl ModeWeight {
    /// Weight value from `α_ℓ(x)` and `∫₀ˣ γ_ℓ/α_ℓ`.
    pub fn evaluate(&self, alpha: f64, gamma_over_alpha: f64) -> f64 {
        self.sigma * alpha.abs().powi(self.alpha_power) * (2.0 * gamma_over_alpha).exp()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneralWeights {
    pub k: u32,
    pub threshold: f64,
    pub modes: Vec<ModeWeight>,
    /// `‖SBS⁻¹‖`.
    pub scaled_norm: f64,
    /// `λ_min(S² − B*S²B)`.
    pub boundary_min_eig: f64,
    /// The boundary form is positive definite exactly when `‖SBS⁻¹‖ < 1`.
    pub consistent: bool,
}

/// `diag(σ) = S² diag(e^{−2g₊}, Id)` and the boundary form check.
pub fn general_weights(d: &GeneralModeData, s: &DiagonalScaling, k: u32) -> Result<GeneralWeights> {
    let b = build_b(d)?;
    if s.dim() != d.n - 1 {
        return Err(Error::InvalidInput("scaling size must be n − 1".into()));
    }
    let threshold = d.regularity_threshold()?;
    if !(k as f64 > threshold) {
        return Err(Error::RegularityThreshold { k: k as f64, threshold });
    }
    let sv = s.values();
    let power = 2 * k as i32 - 1;
    let modes = (0..d.n - 1)
        .map(|j| {
            let positive_speed = j < d.m;
            let sigma = sv[j] * sv[j] * if positive_speed { (-2.0 * d.g[j]).exp() } else { 1.0 };
            ModeWeight {
                mode: j,
                positive_speed,
                sigma,
                alpha_power: power,
                recipe: format!("{sigma:.6e} * |alpha_{j}|^{power} * exp(2 * int_0^x gamma_{j}/alpha_{j})"),
            }
        })
        .collect();
    let (scaled_norm, boundary_min_eig) = boundary_form(&b, s)?;
    Ok(GeneralWeights {
        k,
        threshold,
        modes,
        scaled_norm,
        boundary_min_eig,
        consistent: (boundary_min_eig > 0.0) == (scaled_norm < 1.0),
    })
}

/// `(‖SBS⁻¹‖, λ_min(S² − B*S²B))`.
pub fn boundary_form(b: &ComplexMatrix, s: &DiagonalScaling) -> Result<(f64, f64)> {
    let norm = op_norm(&scale(b, s)?)?;
    let sv = s.values();
    let s2 = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        sv.len(),
        sv.iter().map(|v| Complex64::new(v * v, 0.0)),
    ));
    let bm = b.matrix();
    let form = &s2 - bm.adjoint() * &s2 * bm;
    Ok((norm, hermitian_min_eig(&form)))
}

/// Spectral radius of `B` itself, a lower bound for both conditions.
pub fn spectral_lower_bound(b: &ComplexMatrix) -> Result<f64> {
    max_modulus(b.matrix())
}
