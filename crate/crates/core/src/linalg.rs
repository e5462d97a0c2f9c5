//! Matrix, scaling and phase types, plus the dense kernels everything else uses.

use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest supported dimension.
pub const MAX_DIM: usize = 16;

const SOLVER_MAX_ITER: usize = 10_000;

/// Square complex matrix with a flag for exactly-real input.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix {
    data: DMatrix<Complex64>,
    is_real: bool,
}

impl ComplexMatrix {
    pub fn new(data: DMatrix<Complex64>) -> Result<Self> {
        let n = data.nrows();
        if n == 0 || data.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "matrix must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if n > MAX_DIM {
            return Err(Error::InvalidInput(format!("dimension {n} exceeds {MAX_DIM}")));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let is_real = data.iter().all(|z| z.im == 0.0);
        Ok(Self { data, is_real })
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows have inconsistent lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| Complex64::new(rows[i][j], 0.0)))
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows have inconsistent lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(DMatrix::identity(n, n)).expect("identity is valid")
    }

    pub fn from_diagonal(d: &[Complex64]) -> Result<Self> {
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(d)))
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn is_real(&self) -> bool {
        self.is_real
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<Complex64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[(i, j)]
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| self.data[(i, j)]).collect())
            .collect()
    }

    /// Principal submatrix on the given (sorted) index set.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        let k = idx.len();
        let data = DMatrix::from_fn(k, k, |a, b| self.data[(idx[a], idx[b])]);
        Self::new(data).expect("submatrix of a valid matrix is valid")
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    n: usize,
    is_real: bool,
    entries: Vec<Vec<[f64; 2]>>,
}

impl Serialize for ComplexMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixRepr {
            n: self.dim(),
            is_real: self.is_real,
            entries: self
                .rows()
                .into_iter()
                .map(|r| r.into_iter().map(|z| [z.re, z.im]).collect())
                .collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for ComplexMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = MatrixRepr::deserialize(d)?;
        let rows: Vec<Vec<Complex64>> = repr
            .entries
            .iter()
            .map(|r| r.iter().map(|p| Complex64::new(p[0], p[1])).collect())
            .collect();
        ComplexMatrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

/// Positive diagonal scaling `S = diag(exp(t_j))`, normalized so that `t_1 = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagonalScaling {
    logs: Vec<f64>,
}

impl DiagonalScaling {
    pub fn identity(n: usize) -> Self {
        Self { logs: vec![0.0; n] }
    }

    /// Builds a scaling from log-values; a common shift is removed so `t_1 = 0`.
    pub fn from_logs(logs: &[f64]) -> Result<Self> {
        if logs.is_empty() || logs.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("scaling logs must be finite and non-empty".into()));
        }
        let t0 = logs[0];
        Ok(Self { logs: logs.iter().map(|t| t - t0).collect() })
    }

    pub fn from_values(s: &[f64]) -> Result<Self> {
        if s.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return Err(Error::InvalidInput("scaling entries must be positive and finite".into()));
        }
        Self::from_logs(&s.iter().map(|v| v.ln()).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.logs.len()
    }

    pub fn logs(&self) -> &[f64] {
        &self.logs
    }

    pub fn values(&self) -> Vec<f64> {
        self.logs.iter().map(|t| t.exp()).collect()
    }
}

/// Diagonal unitary `U = diag(exp(iθ_j))` with `θ_1 = 0` and angles in `[0, 2π)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseVector {
    angles: Vec<f64>,
}

impl PhaseVector {
    pub fn identity(n: usize) -> Self {
        Self { angles: vec![0.0; n] }
    }

    /// Removes the global phase and wraps every angle into `[0, 2π)`.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        if angles.is_empty() || angles.iter().any(|t| !t.is_finite()) {
            return Err(Error::InvalidInput("phase angles must be finite and non-empty".into()));
        }
        let a0 = angles[0];
        Ok(Self { angles: angles.iter().map(|a| wrap_angle(a - a0)).collect() })
    }

    pub fn dim(&self) -> usize {
        self.angles.len()
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn unimodular(&self) -> Vec<Complex64> {
        self.angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect()
    }
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn check_dim(b: &ComplexMatrix, k: usize, what: &str) -> Result<()> {
    if b.dim() != k {
        return Err(Error::InvalidInput(format!(
            "{what} has dimension {k}, matrix has {}",
            b.dim()
        )));
    }
    Ok(())
}

/// Singular value decomposition with values sorted in decreasing order.
pub(crate) struct SortedSvd {
    pub values: Vec<f64>,
    /// Columns are right singular vectors.
    pub right: DMatrix<Complex64>,
}

pub(crate) fn svd(m: &DMatrix<Complex64>) -> Result<SortedSvd> {
    let dec = SVD::try_new(m.clone(), false, true, f64::EPSILON, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let v = dec.v_t.expect("requested").adjoint();
    let mut order: Vec<usize> = (0..dec.singular_values.len()).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let values = order.iter().map(|&k| dec.singular_values[k]).collect();
    let right = DMatrix::from_fn(v.nrows(), order.len(), |i, k| v[(i, order[k])]);
    Ok(SortedSvd { values, right })
}

pub(crate) fn singular_values(m: &DMatrix<Complex64>) -> Result<Vec<f64>> {
    let dec = SVD::try_new(m.clone(), false, false, f64::EPSILON, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let mut s: Vec<f64> = dec.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

pub(crate) fn eigenvalues(m: &DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m.clone(), f64::EPSILON, SOLVER_MAX_ITER)
        .ok_or_else(|| Error::Numerical("Schur decomposition did not converge".into()))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

pub(crate) fn max_modulus(m: &DMatrix<Complex64>) -> Result<f64> {
    Ok(eigenvalues(m)?.iter().map(|z| z.norm()).fold(0.0, f64::max))
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub(crate) fn hermitian_eigen(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let n = m.nrows();
    if n == 1 {
        return (vec![m[(0, 0)].re], DMatrix::identity(1, 1));
    }
    if n == 2 {
        return hermitian_eigen_2x2(m);
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let dec = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| dec.eigenvalues[a].total_cmp(&dec.eigenvalues[b]));
    let vals = order.iter().map(|&k| dec.eigenvalues[k]).collect();
    let vecs = DMatrix::from_fn(n, n, |i, k| dec.eigenvectors[(i, order[k])]);
    (vals, vecs)
}

fn hermitian_eigen_2x2(m: &DMatrix<Complex64>) -> (Vec<f64>, DMatrix<Complex64>) {
    let (a, d) = (m[(0, 0)].re, m[(1, 1)].re);
    let w = (m[(0, 1)] + m[(1, 0)].conj()) * 0.5;
    let mean = 0.5 * (a + d);
    let half = 0.5 * (a - d);
    let rad = half.hypot(w.norm());
    let (lo, hi) = (mean - rad, mean + rad);
    let z = Complex64::new(0.0, 0.0);
    let one = Complex64::new(1.0, 0.0);
    if w.norm() == 0.0 {
        let vecs = if a <= d {
            DMatrix::from_row_slice(2, 2, &[one, z, z, one])
        } else {
            DMatrix::from_row_slice(2, 2, &[z, one, one, z])
        };
        return (vec![lo, hi], vecs);
    }
    // (A − λ)v = 0 with v = (w, λ − a) or (λ − d, w̄); pick the better conditioned.
    let vec_for = |lam: f64| -> [Complex64; 2] {
        let v1 = [w, Complex64::new(lam - a, 0.0)];
        let v2 = [Complex64::new(lam - d, 0.0), w.conj()];
        let n1 = (v1[0].norm_sqr() + v1[1].norm_sqr()).sqrt();
        let n2 = (v2[0].norm_sqr() + v2[1].norm_sqr()).sqrt();
        if n1 >= n2 {
            [v1[0] / n1, v1[1] / n1]
        } else {
            [v2[0] / n2, v2[1] / n2]
        }
    };
    let (v_lo, v_hi) = (vec_for(lo), vec_for(hi));
    (vec![lo, hi], DMatrix::from_row_slice(2, 2, &[v_lo[0], v_hi[0], v_lo[1], v_hi[1]]))
}

pub(crate) fn hermitian_min_eig(m: &DMatrix<Complex64>) -> f64 {
    hermitian_eigen(m).0[0]
}

/// Serde helper: complex matrices as nested `[re, im]` rows.
pub(crate) mod cmat_serde {
    use nalgebra::DMatrix;
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn to_rows(m: &DMatrix<Complex64>) -> Vec<Vec<[f64; 2]>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
    }

    pub fn from_rows(rows: &[Vec<[f64; 2]>]) -> Result<DMatrix<Complex64>, String> {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        if rows.iter().any(|x| x.len() != c) {
            return Err("ragged matrix".into());
        }
        Ok(DMatrix::from_fn(r, c, |i, j| Complex64::new(rows[i][j][0], rows[i][j][1])))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(v: &[DMatrix<Complex64>], s: S) -> Result<S::Ok, S::Error> {
            v.iter().map(to_rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<DMatrix<Complex64>>, D::Error> {
            let all = Vec::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            all.iter().map(|r| from_rows(r).map_err(serde::de::Error::custom)).collect()
        }
    }

    pub mod opt {
        use super::*;

        pub fn serialize<S: Serializer>(m: &Option<DMatrix<Complex64>>, s: S) -> Result<S::Ok, S::Error> {
            m.as_ref().map(to_rows).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<DMatrix<Complex64>>, D::Error> {
            let rows = Option::<Vec<Vec<[f64; 2]>>>::deserialize(d)?;
            rows.map(|r| from_rows(&r).map_err(serde::de::Error::custom)).transpose()
        }
    }
}

/// Largest singular value.
pub fn op_norm(b: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(b.matrix())?[0])
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(b: &ComplexMatrix) -> Result<f64> {
    max_modulus(b.matrix())
}

/// `S B S⁻¹`, entry `(j, k)` multiplied by `s_j / s_k`.
pub fn scale(b: &ComplexMatrix, s: &DiagonalScaling) -> Result<ComplexMatrix> {
    check_dim(b, s.dim(), "scaling")?;
    Ok(ComplexMatrix {
        data: scale_raw(b.matrix(), s.logs()),
        is_real: b.is_real,
    })
}

pub(crate) fn scale_raw(b: &DMatrix<Complex64>, logs: &[f64]) -> DMatrix<Complex64> {
    let n = b.nrows();
    DMatrix::from_fn(n, n, |j, k| b[(j, k)] * (logs[j] - logs[k]).exp())
}

/// `U B`: row `j` multiplied by `exp(iθ_j)`.
pub fn phase_apply(b: &ComplexMatrix, u: &PhaseVector) -> Result<ComplexMatrix> {
    check_dim(b, u.dim(), "phase vector")?;
    let data = phase_raw(b.matrix(), u.angles());
    ComplexMatrix::new(data)
}

pub(crate) fn phase_raw(b: &DMatrix<Complex64>, angles: &[f64]) -> DMatrix<Complex64> {
    let n = b.nrows();
    let u: Vec<Complex64> = angles.iter().map(|&a| Complex64::from_polar(1.0, a)).collect();
    DMatrix::from_fn(n, n, |j, k| u[j] * b[(j, k)])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn norms_of_simple_matrices() {
        assert_abs_diff_eq!(op_norm(&ComplexMatrix::identity(3)).unwrap(), 1.0, epsilon = 1e-14);
        let d = ComplexMatrix::from_diagonal(&[c(2.0, 0.0), c(3.0, 0.0)]).unwrap();
        assert_abs_diff_eq!(op_norm(&d).unwrap(), 3.0, epsilon = 1e-14);
    }

    #[test]
    fn radii_of_simple_matrices() {
        let jordan = ComplexMatrix::from_real_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&jordan).unwrap(), 1.0, epsilon = 1e-12);
        let nil = ComplexMatrix::from_real_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        assert!(spectral_radius(&nil).unwrap() < 1e-7);
        let sq = ComplexMatrix::from_real_rows(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(spectral_radius(&sq).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn scaling_single_entry() {
        let b = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let eps = 1e-3;
        let s = DiagonalScaling::from_values(&[1.0, eps]).unwrap();
        let bs = scale(&b, &s).unwrap();
        assert_abs_diff_eq!(bs.get(0, 1).re, 1.0 / eps, epsilon = 1e-9);
        assert_eq!(bs.get(1, 0), c(0.0, 0.0));
        assert_eq!(scale(&b, &DiagonalScaling::identity(2)).unwrap(), b);
    }

    #[test]
    fn phase_flip_of_landscape_matrix() {
        let b = ComplexMatrix::from_real_rows(&[vec![1.0, -1.0], vec![1.0, -1.0]]).unwrap();
        let u = PhaseVector::from_angles(&[0.0, std::f64::consts::PI]).unwrap();
        let ub = phase_apply(&b, &u).unwrap();
        assert_abs_diff_eq!(ub.get(1, 0).re, -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ub.get(1, 1).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(spectral_radius(&ub).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn normalizations() {
        let s = DiagonalScaling::from_logs(&[1.0, 2.0, -1.0]).unwrap();
        assert_eq!(s.logs(), &[0.0, 1.0, -2.0]);
        let u = PhaseVector::from_angles(&[1.0, 0.5, 1.0 + TAU]).unwrap();
        assert_eq!(u.angles()[0], 0.0);
        assert_abs_diff_eq!(u.angles()[1], TAU - 0.5, epsilon = 1e-15);
        assert!(u.angles()[2] < 1e-12 || u.angles()[2] > TAU - 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(ComplexMatrix::from_real_rows(&[vec![f64::NAN]]).is_err());
        assert!(ComplexMatrix::from_real_rows(&[vec![1.0, 2.0]]).is_err());
        assert!(DiagonalScaling::from_values(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn small_hermitian_eigen_matches_general_solver() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..200 {
            let a: f64 = rng.random_range(-1.0..1.0);
            let d: f64 = rng.random_range(-1.0..1.0);
            let w = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let m = DMatrix::from_row_slice(2, 2, &[c(a, 0.0), w, w.conj(), c(d, 0.0)]);
            let (vals, vecs) = hermitian_eigen(&m);
            let reference = SymmetricEigen::new(m.clone()).eigenvalues;
            let mut r: Vec<f64> = reference.iter().copied().collect();
            r.sort_by(f64::total_cmp);
            for k in 0..2 {
                assert!((vals[k] - r[k]).abs() < 1e-13);
                let v = vecs.column(k).into_owned();
                assert!((&m * &v - v.scale(vals[k])).norm() < 1e-13);
                assert!((v.norm() - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn serde_round_trip() {
        let b = ComplexMatrix::from_rows(&[vec![c(1.0, 2.0), c(0.0, -1.0)], vec![c(3.0, 0.0), c(0.5, 0.5)]])
            .unwrap();
        let js = serde_json::to_string(&b).unwrap();
        let back: ComplexMatrix = serde_json::from_str(&js).unwrap();
        assert_eq!(back, b);
        assert!(!back.is_real());
    }
}
