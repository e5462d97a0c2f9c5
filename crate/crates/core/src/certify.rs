//! Certificates for candidate minimizers of `S ↦ ‖S B S⁻¹‖`.
//!
//! At a point where the top singular value has multiplicity `m`, the first
//! variation is described by `n` Hermitian `m×m` forms `Q_j`. A definite real
//! combination of them means `S` is a strict local minimizer; a common complex
//! root gives a phase vector `U` with `ρ(U B_S) = ‖B_S‖`, i.e. no gap.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    cmat_serde, hermitian_eigen, hermitian_min_eig, max_modulus, phase_raw, scale_raw, svd, ComplexMatrix,
    DiagonalScaling, PhaseVector,
};

type CMat = DMatrix<Complex64>;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertifyOptions {
    /// Relative threshold (times the largest form norm) for definiteness.
    pub pd_tol: f64,
    /// Relative threshold (times the largest form norm) for accepting a root.
    pub root_tol: f64,
    pub cluster_tol: f64,
    pub root_starts: usize,
    pub definite_starts: usize,
    pub seed: u64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self { pd_tol: 1e-8, root_tol: 1e-6, cluster_tol: 1e-6, root_starts: 128, definite_starts: 8, seed: 0xc0de }
    }
}

/// Hermitian forms restricted to the top singular subspace.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HermitianFormSet {
    pub m: usize,
    #[serde(with = "cmat_serde::vec")]
    pub forms: Vec<CMat>,
    /// Orthonormal basis (`n × m`) of the subspace, when built from a matrix.
    #[serde(with = "cmat_serde::opt")]
    pub basis: Option<CMat>,
    /// `‖B_S‖` when built from a matrix.
    pub sigma: Option<f64>,
}

impl HermitianFormSet {
    pub fn new(forms: Vec<CMat>) -> Result<Self> {
        let m = forms.first().map(|f| f.nrows()).ok_or_else(|| Error::InvalidInput("no forms".into()))?;
        for f in &forms {
            if f.nrows() != m || f.ncols() != m {
                return Err(Error::InvalidInput("forms must share one square shape".into()));
            }
            if (f - f.adjoint()).norm() > 1e-12 * f.norm().max(1.0) {
                return Err(Error::InvalidInput("forms must be Hermitian".into()));
            }
        }
        Ok(Self { m, forms, basis: None, sigma: None })
    }

    pub fn from_real(forms: &[Vec<Vec<f64>>]) -> Result<Self> {
        let mats = forms
            .iter()
            .map(|f| {
                let m = f.len();
                DMatrix::from_fn(m, m, |i, j| Complex64::new(f[i][j], 0.0))
            })
            .collect();
        Self::new(mats)
    }

    /// Reference magnitude for the tolerances: the largest form norm, or
    /// `2‖B_S‖²` when that is larger and the set was built from a matrix.
    pub fn scale(&self) -> f64 {
        let largest = self.forms.iter().map(form_norm).fold(0.0, f64::max);
        self.sigma.map_or(largest, |s| largest.max(2.0 * s * s))
    }

    /// `v* Q_j v` for every form.
    pub fn values(&self, v: &[Complex64]) -> Vec<f64> {
        self.forms.iter().map(|q| quad(q, v)).collect()
    }
}

fn form_norm(q: &CMat) -> f64 {
    let (vals, _) = hermitian_eigen(q);
    vals.iter().fold(0.0, |m, v| m.max(v.abs()))
}

fn quad(q: &CMat, v: &[Complex64]) -> f64 {
    let m = v.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 0..m {
        for l in 0..m {
            acc += v[k].conj() * q[(k, l)] * v[l];
        }
    }
    acc.re
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DefiniteCombination {
    pub coeffs: Vec<f64>,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Diagnostics {
    pub m: usize,
    pub independent_forms: usize,
    /// Best `λ_min(Σ c_j Q_j)` over unit coefficient vectors.
    pub best_min_eig: f64,
    /// Smallest `max_j |v* Q_j v|` found over unit vectors.
    pub root_residual_floor: f64,
    pub form_scale: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    DefiniteCombination {
        coeffs: Vec<f64>,
        min_eig: f64,
    },
    CommonRoot {
        /// Unit vector in the coordinates of the form set.
        vector: Vec<Complex64>,
        /// `max_j |v* Q_j v|`.
        residual: f64,
        /// Phase vector with `ρ(U B_S) = ‖B_S‖`, when built from a matrix.
        phases: Option<PhaseVector>,
        /// `ρ(U B_S)` for the attached phases.
        phased_rho: Option<f64>,
    },
    Undecided {
        diagnostics: Diagnostics,
    },
}

impl Certificate {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::DefiniteCombination { .. } => "DefiniteCombination",
            Self::CommonRoot { .. } => "CommonRoot",
            Self::Undecided { .. } => "Undecided",
        }
    }
}

/// Top singular cluster of `B_S`: the value and an orthonormal basis of right vectors.
pub(crate) fn top_cluster(bs: &CMat, cluster_tol: f64) -> Result<(f64, CMat)> {
    let dec = svd(bs)?;
    let top = dec.values[0] * dec.values[0];
    let m = dec.values.iter().filter(|s| *s * *s >= top * (1.0 - cluster_tol)).count();
    Ok((dec.values[0], dec.right.columns(0, m).into_owned()))
}

/// The forms `2(B_S* E_j B_S − ‖B_S‖² E_j)` restricted to the top singular subspace.
pub fn variational_forms(b: &ComplexMatrix, s: &DiagonalScaling, cluster_tol: f64) -> Result<HermitianFormSet> {
    if s.dim() != b.dim() {
        return Err(Error::InvalidInput("scaling and matrix dimensions differ".into()));
    }
    let bs = scale_raw(b.matrix(), s.logs());
    let (sigma, v) = top_cluster(&bs, cluster_tol)?;
    let w = &bs * &v;
    let (n, m) = (b.dim(), v.ncols());
    let forms = (0..n)
        .map(|j| {
            DMatrix::from_fn(m, m, |k, l| {
                (w[(j, k)].conj() * w[(j, l)] - v[(j, k)].conj() * v[(j, l)] * (sigma * sigma)) * 2.0
            })
        })
        .collect();
    Ok(HermitianFormSet { m, forms, basis: Some(v), sigma: Some(sigma) })
}

fn frob(a: &CMat, b: &CMat) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x.conj() * y).re).sum()
}

/// Orthonormal basis of the real span of the forms (Frobenius inner product),
/// with `basis[b] = Σ_j coeffs[b][j] Q_j`.
fn orthonormalize(forms: &[CMat]) -> (Vec<CMat>, Vec<Vec<f64>>) {
    let n = forms.len();
    let biggest = forms.iter().map(|q| q.norm()).fold(0.0, f64::max);
    let mut basis: Vec<CMat> = Vec::new();
    let mut coeffs: Vec<Vec<f64>> = Vec::new();
    for (j, q) in forms.iter().enumerate() {
        let mut r = q.clone();
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        for _ in 0..2 {
            for (p, pc) in basis.iter().zip(&coeffs) {
                let a = frob(p, &r);
                r -= p * Complex64::new(a, 0.0);
                for (ci, pci) in c.iter_mut().zip(pc) {
                    *ci -= a * pci;
                }
            }
        }
        let nr = r.norm();
        if nr > 1e-9 * biggest {
            basis.push(r / Complex64::new(nr, 0.0));
            coeffs.push(c.iter().map(|x| x / nr).collect());
        }
    }
    (basis, coeffs)
}

/// Number of real-linearly independent forms.
pub fn independent_count(f: &HermitianFormSet) -> usize {
    orthonormalize(&f.forms).0.len()
}

fn combine(forms: &[CMat], c: &[f64]) -> CMat {
    let m = forms[0].nrows();
    let mut acc = DMatrix::zeros(m, m);
    for (q, &cj) in forms.iter().zip(c) {
        acc += q * Complex64::new(cj, 0.0);
    }
    acc
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n == 0.0 {
        v.to_vec()
    } else {
        v.iter().map(|x| x / n).collect()
    }
}

/// Smoothed minimum eigenvalue `−τ ln Σ e^{−λ_k/τ}` and its gradient in `c`.
fn soft_min(forms: &[CMat], c: &[f64], tau: f64) -> (f64, Vec<f64>) {
    let (vals, vecs) = hermitian_eigen(&combine(forms, c));
    let lo = vals[0];
    let w: Vec<f64> = vals.iter().map(|l| (-(l - lo) / tau).exp()).collect();
    let z: f64 = w.iter().sum();
    let f = lo - tau * z.ln();
    let grad = forms
        .iter()
        .map(|q| {
            w.iter()
                .enumerate()
                .filter(|(_, wk)| **wk > 1e-18 * z)
                .map(|(k, wk)| {
                    let v: Vec<Complex64> = vecs.column(k).iter().copied().collect();
                    wk / z * quad(q, &v)
                })
                .sum()
        })
        .collect();
    (f, grad)
}

/// Projected ascent of the smoothed `λ_min` over the unit ball, annealed in `τ`.
fn ascend_min_eig(forms: &[CMat], start: &[f64]) -> Vec<f64> {
    let mut c = unit(start);
    for level in 1..=10 {
        let tau = 10f64.powi(-level);
        let (mut f, mut g) = soft_min(forms, &c, tau);
        let mut step = 0.5;
        for _ in 0..60 {
            let mut improved = false;
            while step > 1e-14 {
                let trial = project_ball(&c.iter().zip(&g).map(|(x, d)| x + step * d).collect::<Vec<_>>());
                let (ft, gt) = soft_min(forms, &trial, tau);
                if ft > f {
                    let moved = trial.iter().zip(&c).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
                    c = trial;
                    f = ft;
                    g = gt;
                    step *= 2.0;
                    improved = moved > 1e-15;
                    break;
                }
                step *= 0.5;
            }
            if !improved {
                break;
            }
        }
    }
    c
}

fn project_ball(c: &[f64]) -> Vec<f64> {
    let n = c.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n > 1.0 {
        c.iter().map(|x| x / n).collect()
    } else {
        c.to_vec()
    }
}

/// Best definite real combination found; `None` when the best `λ_min` stays below `pd_tol`.
pub fn definite_combination_search(f: &HermitianFormSet, opts: &CertifyOptions) -> Option<DefiniteCombination> {
    let best = best_definite(f, opts);
    let threshold = opts.pd_tol * f.scale();
    (best.min_eig > threshold && best.min_eig > 0.0).then_some(best)
}

fn best_definite(f: &HermitianFormSet, opts: &CertifyOptions) -> DefiniteCombination {
    let n = f.forms.len();
    let (basis, coeffs) = orthonormalize(&f.forms);
    let d = basis.len();
    if d == 0 {
        return DefiniteCombination { coeffs: vec![0.0; n], min_eig: 0.0 };
    }
    let threshold = opts.pd_tol * f.scale();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut starts: Vec<Vec<f64>> = Vec::new();
    for b in 0..d {
        for sign in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[b] = sign;
            starts.push(e);
        }
    }
    // Identity direction: the trace-weighted combination.
    starts.push(basis.iter().map(|p| p.trace().re).collect());
    for _ in 0..opts.definite_starts {
        starts.push(unit(&(0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect::<Vec<_>>()));
    }

    let to_original = |c: &[f64]| -> Vec<f64> {
        let mut x = vec![0.0; n];
        for (cb, row) in c.iter().zip(&coeffs) {
            for (xj, g) in x.iter_mut().zip(row) {
                *xj += cb * g;
            }
        }
        unit(&x)
    };
    let mut best = DefiniteCombination { coeffs: vec![0.0; n], min_eig: f64::NEG_INFINITY };
    for s in starts {
        if s.iter().all(|x| *x == 0.0) {
            continue;
        }
        let c = ascend_min_eig(&basis, &s);
        let x = to_original(&c);
        let min_eig = hermitian_min_eig(&combine(&f.forms, &x));
        if min_eig > best.min_eig {
            best = DefiniteCombination { coeffs: x, min_eig };
        }
        if best.min_eig > threshold {
            break;
        }
    }
    best
}

/// Common root of two Hermitian 2×2 forms, built from the normal form of `q1`.
///
/// Returns a unit vector, or `None` when the forms admit no nonzero common root.
pub fn common_root_2d(q1: &CMat, q2: &CMat) -> Result<Option<DVector<Complex64>>> {
    if q1.shape() != (2, 2) || q2.shape() != (2, 2) {
        return Err(Error::InvalidInput("common_root_2d needs 2×2 forms".into()));
    }
    let n1 = form_norm(q1);
    let n2 = form_norm(q2);
    if n1 == 0.0 && n2 == 0.0 {
        return Err(Error::DegenerateInput("both forms vanish; every vector is a root".into()));
    }
    let (q1, q2) = if n1 == 0.0 { (q2, q1) } else { (q1, q2) };
    let n2 = form_norm(q2);
    let eps = 1e-12;

    let (vals, w) = hermitian_eigen(q1);
    let (lo, hi) = (vals[0], vals[1]);
    let scale = lo.abs().max(hi.abs());
    let col = |k: usize| DVector::from_iterator(2, w.column(k).iter().copied());
    let on_q2 = |x: DVector<Complex64>| -> Option<DVector<Complex64>> {
        let v: Vec<Complex64> = x.iter().copied().collect();
        (quad(q2, &v).abs() <= 1e-10 * n2.max(f64::MIN_POSITIVE)).then_some(x)
    };

    if lo.abs() <= eps * scale {
        // Semidefinite: the roots of q1 form the null line.
        return Ok(on_q2(col(0)).or(None));
    }
    if hi.abs() <= eps * scale {
        return Ok(on_q2(col(1)).or(None));
    }
    if lo > 0.0 || hi < 0.0 {
        return Ok(None);
    }

    // In y = Wᴴx, q1 = lo|y0|² + hi|y1|², so its roots are y = (1, aγ) with |γ| = 1.
    let a = (-lo / hi).sqrt();
    let mq = w.adjoint() * q2 * &w;
    let (p, r, c) = (mq[(0, 0)].re, mq[(1, 1)].re, mq[(0, 1)]);
    // q2 on the root line: p + r a² + 2a Re(c γ).
    let target = -(p + r * a * a);
    let gamma = if c.norm() <= 1e-14 * n2 {
        if target.abs() > 1e-12 * n2 * (1.0 + a * a) {
            return Ok(None);
        }
        Complex64::new(1.0, 0.0)
    } else {
        let cosine = target / (2.0 * a * c.norm());
        if cosine.abs() > 1.0 + 1e-12 {
            return Ok(None);
        }
        Complex64::from_polar(1.0, cosine.clamp(-1.0, 1.0).acos() - c.arg())
    };
    let z = DVector::from_vec(vec![Complex64::new(1.0, 0.0), gamma * a]);
    let x = &w * z;
    let x = &x / Complex64::new(x.norm(), 0.0);
    Ok(Some(x))
}

/// Best unit vector for `Σ_j |v* Q_j v|²` by Levenberg–Marquardt from random starts.
pub fn numeric_root_search(f: &HermitianFormSet, opts: &CertifyOptions) -> (Vec<Complex64>, f64) {
    let m = f.m;
    let scale = f.scale().max(f64::MIN_POSITIVE);
    let accept = opts.root_tol * scale;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed ^ 0x51f1);
    let mut best: (Vec<Complex64>, f64) = (vec![Complex64::new(0.0, 0.0); m], f64::INFINITY);
    for _ in 0..opts.root_starts.max(1) {
        let v0: Vec<Complex64> = (0..m)
            .map(|_| Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let v = levenberg_marquardt(&f.forms, normalize_c(&v0), scale);
        let res = max_abs_values(f, &v);
        if res < best.1 {
            best = (v, res);
        }
        if best.1 <= 1e-3 * accept {
            break;
        }
    }
    best
}

fn normalize_c(v: &[Complex64]) -> Vec<Complex64> {
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.iter().map(|z| z / n).collect()
}

fn levenberg_marquardt(forms: &[CMat], mut v: Vec<Complex64>, scale: f64) -> Vec<Complex64> {
    let m = v.len();
    let p = 2 * m;
    let residuals = |v: &[Complex64]| -> Vec<f64> {
        let mut r: Vec<f64> = forms.iter().map(|q| quad(q, v) / scale).collect();
        r.push(v.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0);
        r
    };
    let cost = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>();
    let mut r = residuals(&v);
    let mut c = cost(&r);
    let mut mu = 1e-3;
    for _ in 0..100 {
        // Jacobian rows: d(v*Qv)/d(Re v) = 2 Re(Qv), d/d(Im v) = 2 Im(Qv).
        let mut jac = DMatrix::<f64>::zeros(forms.len() + 1, p);
        for (i, q) in forms.iter().enumerate() {
            for k in 0..m {
                let qv: Complex64 = (0..m).map(|l| q[(k, l)] * v[l]).sum();
                jac[(i, k)] = 2.0 * qv.re / scale;
                jac[(i, m + k)] = 2.0 * qv.im / scale;
            }
        }
        for k in 0..m {
            jac[(forms.len(), k)] = 2.0 * v[k].re;
            jac[(forms.len(), m + k)] = 2.0 * v[k].im;
        }
        let rv = DVector::from_vec(r.clone());
        let jtj = jac.transpose() * &jac;
        let jtr = jac.transpose() * rv;
        let mut stepped = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..p {
                a[(i, i)] += mu * (1.0 + jtj[(i, i)]);
            }
            let Some(delta) = a.lu().solve(&(-&jtr)) else {
                mu *= 10.0;
                continue;
            };
            let trial: Vec<Complex64> =
                (0..m).map(|k| v[k] + Complex64::new(delta[k], delta[m + k])).collect();
            let rt = residuals(&trial);
            let ct = cost(&rt);
            if ct < c {
                v = trial;
                r = rt;
                c = ct;
                mu = (mu * 0.3).max(1e-12);
                stepped = true;
                break;
            }
            mu *= 10.0;
        }
        if !stepped || c < 1e-30 {
            break;
        }
    }
    normalize_c(&v)
}

fn max_abs_values(f: &HermitianFormSet, v: &[Complex64]) -> f64 {
    f.values(v).iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Decides between a definite combination and a common root for a form set.
pub fn certify_forms(f: &HermitianFormSet, opts: &CertifyOptions) -> Certificate {
    let scale = f.scale();
    let m = f.m;
    let mut e1 = vec![Complex64::new(0.0, 0.0); m];
    e1[0] = Complex64::new(1.0, 0.0);
    let root = |vector: Vec<Complex64>, residual: f64| Certificate::CommonRoot {
        vector,
        residual,
        phases: None,
        phased_rho: None,
    };
    if scale == 0.0 {
        return root(e1, 0.0);
    }
    let root_abs = opts.root_tol * scale;
    let (basis, _) = orthonormalize(&f.forms);
    let d = basis.len();

    if m == 1 {
        let vals: Vec<f64> = f.forms.iter().map(|q| q[(0, 0)].re).collect();
        let (j, big) = vals.iter().enumerate().fold((0usize, 0.0f64), |acc, (j, v)| if v.abs() > acc.1 { (j, v.abs()) } else { acc });
        if big <= root_abs {
            return root(e1, big);
        }
        let mut coeffs = vec![0.0; vals.len()];
        coeffs[j] = vals[j].signum();
        return Certificate::DefiniteCombination { coeffs, min_eig: big };
    }

    let mut floor = f64::INFINITY;
    if m == 2 && d <= 2 {
        let zero = DMatrix::zeros(2, 2);
        let q2 = basis.get(1).unwrap_or(&zero);
        if let Ok(Some(v)) = common_root_2d(&basis[0], q2) {
            let v: Vec<Complex64> = v.iter().copied().collect();
            let residual = max_abs_values(f, &v);
            if residual <= root_abs {
                return root(v, residual);
            }
            floor = residual;
        }
        let best = best_definite(f, opts);
        if best.min_eig > opts.pd_tol * scale {
            return Certificate::DefiniteCombination { coeffs: best.coeffs, min_eig: best.min_eig };
        }
        return Certificate::Undecided {
            diagnostics: Diagnostics {
                m,
                independent_forms: d,
                best_min_eig: best.min_eig,
                root_residual_floor: floor,
                form_scale: scale,
            },
        };
    }

    let best = best_definite(f, opts);
    if best.min_eig > opts.pd_tol * scale {
        return Certificate::DefiniteCombination { coeffs: best.coeffs, min_eig: best.min_eig };
    }
    let (v, residual) = numeric_root_search(f, opts);
    if residual <= root_abs {
        return root(v, residual);
    }
    floor = floor.min(residual);
    Certificate::Undecided {
        diagnostics: Diagnostics {
            m,
            independent_forms: d,
            best_min_eig: best.min_eig,
            root_residual_floor: floor,
            form_scale: scale,
        },
    }
}

/// Certifies `S` as a minimizer of `‖S B S⁻¹‖`, or exhibits a phase vector closing the gap.
pub fn certify_minimizer(b: &ComplexMatrix, s: &DiagonalScaling, opts: &CertifyOptions) -> Result<Certificate> {
    let forms = variational_forms(b, s, opts.cluster_tol)?;
    let cert = certify_forms(&forms, opts);
    let Certificate::CommonRoot { vector, residual, .. } = cert else {
        return Ok(cert);
    };
    let basis = forms.basis.as_ref().expect("built from a matrix");
    let bs = scale_raw(b.matrix(), s.logs());
    let r = basis * DVector::from_vec(vector.clone());
    let w = &bs * &r;
    let angles: Vec<f64> = (0..b.dim())
        .map(|j| if w[j].norm() < 1e-14 || r[j].norm() < 1e-14 { 0.0 } else { r[j].arg() - w[j].arg() })
        .collect();
    let phases = PhaseVector::from_angles(&angles)?;
    let rho = max_modulus(&phase_raw(&bs, phases.angles()))?;
    Ok(Certificate::CommonRoot { vector, residual, phases: Some(phases), phased_rho: Some(rho) })
}

/// The three forms `diag(1,−1)`, `[[0,1],[1,0]]`, `[[0,i],[−i,0]]` on `C²`.
pub fn pauli_triple() -> HermitianFormSet {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    HermitianFormSet::new(vec![
        DMatrix::from_row_slice(2, 2, &[c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]),
        DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), c(0.0, 1.0), c(0.0, -1.0), c(0.0, 0.0)]),
    ])
    .expect("Hermitian")
}

/// Five real forms on `C³` with neither a definite combination nor a common root.
pub fn forms_r3_five() -> HermitianFormSet {
    let f = |entries: [[f64; 3]; 3]| entries.iter().map(|r| r.to_vec()).collect::<Vec<_>>();
    HermitianFormSet::from_real(&[
        f([[1.0, 0.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, 0.0]]),
        f([[0.0, 1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]]),
        f([[0.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]),
        f([[0.0, 0.0, 0.0], [0.0, 0.0, 1.0], [0.0, 1.0, 0.0]]),
        f([[0.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]),
    ])
    .expect("symmetric")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Real,
    Complex,
}

/// Dimension bound of the set of matrices with an `m`-fold top singular value
/// that are critical for the scaling problem: `2n² + n − m²` (complex) or
/// `n² + n − m(m+1)/2` (real).
pub fn dimension_count(n: usize, m: usize, field: Field) -> Result<i64> {
    if m < 1 || m > n {
        return Err(Error::InvalidInput(format!("need 1 ≤ m ≤ n, got m = {m}, n = {n}")));
    }
    let (n, m) = (n as i64, m as i64);
    Ok(match field {
        Field::Complex => 2 * n * n + n - m * m,
        Field::Real => n * n + n - m * (m + 1) / 2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn real2(a: f64, b: f64, d: f64) -> CMat {
        DMatrix::from_row_slice(2, 2, &[c(a, 0.0), c(b, 0.0), c(b, 0.0), c(d, 0.0)])
    }

    #[test]
    fn identity_form_is_definite() {
        let f = HermitianFormSet::new(vec![DMatrix::identity(3, 3)]).unwrap();
        let d = definite_combination_search(&f, &CertifyOptions::default()).unwrap();
        assert!((d.coeffs[0] - 1.0).abs() < 1e-12);
        assert!((d.min_eig - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_triple_has_no_definite_combination() {
        assert!(definite_combination_search(&pauli_triple(), &CertifyOptions::default()).is_none());
    }

    #[test]
    fn second_form_alone_is_definite() {
        let f = HermitianFormSet::new(vec![real2(1.0, 0.0, -1.0), real2(1.0, 0.0, 1.0)]).unwrap();
        let d = definite_combination_search(&f, &CertifyOptions::default()).unwrap();
        assert!(d.min_eig > 0.5);
    }

    #[test]
    fn root_of_diag_and_flip() {
        let v = common_root_2d(&real2(1.0, 0.0, -1.0), &real2(0.0, 1.0, 0.0)).unwrap().unwrap();
        assert!((v[0].norm() - v[1].norm()).abs() < 1e-12);
        assert!((v[0].conj() * v[1]).re.abs() < 1e-12);
        // Proportional to (1, ±i).
        let ratio = v[1] / v[0];
        assert!((ratio.re).abs() < 1e-12 && (ratio.im.abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn no_root_when_criterion_fails() {
        assert!(common_root_2d(&real2(1.0, 0.0, -4.0), &real2(8.0, 0.0, -2.0)).unwrap().is_none());
    }

    #[test]
    fn zero_second_form() {
        let v = common_root_2d(&real2(1.0, 0.0, -1.0), &real2(0.0, 0.0, 0.0)).unwrap().unwrap();
        assert!((v[0].norm() - v[1].norm()).abs() < 1e-12);
        assert!(matches!(
            common_root_2d(&real2(0.0, 0.0, 0.0), &real2(0.0, 0.0, 0.0)),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn semidefinite_first_form() {
        // q1 = diag(1, 0) has the null line e2; q2 = diag(3, 0) vanishes there.
        let v = common_root_2d(&real2(1.0, 0.0, 0.0), &real2(3.0, 0.0, 0.0)).unwrap().unwrap();
        assert!(v[0].norm() < 1e-12);
        assert!(common_root_2d(&real2(1.0, 0.0, 0.0), &real2(0.0, 0.0, 1.0)).unwrap().is_none());
    }

    #[test]
    fn dimension_counts() {
        assert_eq!(dimension_count(3, 2, Field::Complex).unwrap(), 17);
        assert_eq!(dimension_count(5, 3, Field::Real).unwrap(), 24);
        assert_eq!(dimension_count(4, 2, Field::Complex).unwrap(), 32);
        assert!(dimension_count(2, 3, Field::Real).is_err());
        assert!(dimension_count(2, 0, Field::Real).is_err());
    }

    #[test]
    fn five_forms_are_independent() {
        assert_eq!(independent_count(&forms_r3_five()), 5);
        assert_eq!(independent_count(&pauli_triple()), 3);
    }

    #[test]
    fn c4_is_undecided() {
        let c4 = crate::matgap::counterexample_c4();
        let cert = certify_minimizer(&c4.b, &DiagonalScaling::identity(4), &CertifyOptions::default()).unwrap();
        let Certificate::Undecided { diagnostics } = cert else { panic!("{cert:?}") };
        assert_eq!(diagnostics.m, 2);
        assert_eq!(diagnostics.independent_forms, 3);
        assert!(diagnostics.root_residual_floor > 1e-2 * diagnostics.form_scale, "{diagnostics:?}");
    }

    #[test]
    fn forms_sum_to_zero() {
        let c4 = crate::matgap::counterexample_c4();
        let f = variational_forms(&c4.b, &DiagonalScaling::identity(4), 1e-6).unwrap();
        let total = f.forms.iter().fold(DMatrix::zeros(2, 2), |acc, q| acc + q);
        assert!(total.norm() < 1e-10);
    }

    #[test]
    fn random_2x2_minimizer_has_root() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let b = crate::matgap::ginibre(2, crate::matgap::Ensemble::ComplexGaussian, &mut rng);
            let opts = crate::matgap::GapOptions::default();
            let sn = crate::matgap::min_scaled_norm(&b, &opts).unwrap();
            let cert = certify_minimizer(&b, &sn.scaling, &CertifyOptions::default()).unwrap();
            let Certificate::CommonRoot { phased_rho: Some(rho), .. } = cert else { panic!("{cert:?}") };
            assert!((rho - sn.value).abs() < 1e-8 * sn.value, "{rho} {}", sn.value);
        }
    }
}
