//! Small dense complex linear algebra.
//!
//! Everything here works on matrices of dimension at most a few dozen, so the
//! routines favour determinism and accuracy over asymptotic speed. The
//! Hermitian eigensolver is a cyclic Jacobi method with complex rotations.

use std::ops::Index;

use num_complex::Complex64;

use crate::error::{Result, UsdError};

pub type C64 = Complex64;

pub const JACOBI_MAX_SWEEPS: usize = 100;
pub const JACOBI_OFF_TOLERANCE: f64 = 1e-13;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `⟨a|b⟩`, conjugating the first argument.
pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

pub fn scale_vec(a: &[C64], s: C64) -> Vec<C64> {
    a.iter().map(|x| x * s).collect()
}

pub fn sub_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Dense Hermitian matrix stored row-major.
///
/// The lower triangle is always the conjugate of the upper triangle and the
/// diagonal is real; every constructor goes through [`HermitianMatrix::from_fn`]
/// which only reads the upper triangle.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl HermitianMatrix {
    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = vec![C64::new(0.0, 0.0); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = C64::new(f(i, i).re, 0.0);
            for j in i + 1..dim {
                let v = f(i, j);
                data[i * dim + j] = v;
                data[j * dim + i] = v.conj();
            }
        }
        Self { dim, data }
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_fn(dim, |_, _| C64::new(0.0, 0.0))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { c(1.0, 0.0) } else { c(0.0, 0.0) })
    }

    pub fn diagonal(values: &[f64]) -> Self {
        Self::from_fn(values.len(), |i, j| {
            if i == j {
                c(values[i], 0.0)
            } else {
                c(0.0, 0.0)
            }
        })
    }

    /// Builds a matrix from explicit rows, rejecting input that is not
    /// conjugate-symmetric within `tol`.
    pub fn try_from_rows(rows: &[Vec<C64>], tol: f64) -> Result<Self> {
        let dim = rows.len();
        for row in rows {
            if row.len() != dim {
                return Err(UsdError::DimensionMismatch {
                    expected: dim,
                    found: row.len(),
                });
            }
        }
        for i in 0..dim {
            for j in i..dim {
                if (rows[i][j] - rows[j][i].conj()).norm() > tol {
                    return Err(UsdError::InvalidArgument(format!(
                        "matrix is not Hermitian at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// `Σ_k w_k |v_k⟩⟨v_k|`.
    pub fn outer_sum(dim: usize, vectors: &[Vec<C64>], weights: &[f64]) -> Self {
        debug_assert_eq!(vectors.len(), weights.len());
        Self::from_fn(dim, |i, j| {
            vectors
                .iter()
                .zip(weights)
                .map(|(v, w)| v[i] * v[j].conj() * *w)
                .sum()
        })
    }

    /// Gram matrix `M_ij = ⟨v_i|v_j⟩` of a family of vectors.
    pub fn gram(vectors: &[Vec<C64>]) -> Self {
        Self::from_fn(vectors.len(), |i, j| inner(&vectors[i], &vectors[j]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    pub fn rows(&self) -> Vec<Vec<C64>> {
        self.data
            .chunks(self.dim.max(1))
            .take(self.dim)
            .map(|r| r.to_vec())
            .collect()
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        (0..self.dim)
            .map(|i| (0..self.dim).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// `⟨v|M|v⟩`, real for Hermitian `M`.
    pub fn quadratic_form(&self, v: &[C64]) -> f64 {
        inner(v, &self.mul_vec(v)).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(i, j) * s)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |i, j| self.get(i, j) + other.get(i, j))
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.dim, other.dim);
        Self::from_fn(self.dim, |i, j| self.get(i, j) - other.get(i, j))
    }

    /// `D M D` for a real diagonal `D`.
    pub fn congruence_diag(&self, d: &[f64]) -> Self {
        assert_eq!(self.dim, d.len());
        Self::from_fn(self.dim, |i, j| self.get(i, j) * (d[i] * d[j]))
    }

    pub fn principal_submatrix(&self, indices: &[usize]) -> Self {
        Self::from_fn(indices.len(), |a, b| self.get(indices[a], indices[b]))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn eig(&self) -> Result<Eigen> {
        jacobi_eigen(self)
    }

    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eig()?.values)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.first().copied().unwrap_or(0.0))
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigenvalues()?.last().copied().unwrap_or(0.0))
    }

    /// Determinant by LU factorisation with partial pivoting.
    pub fn determinant(&self) -> f64 {
        complex_determinant(&self.rows()).re
    }
}

impl Index<(usize, usize)> for HermitianMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        &self.data[i * self.dim + j]
    }
}

/// Eigendecomposition `M = V Λ V†` with eigenvalues in ascending order.
#[derive(Debug, Clone)]
pub struct Eigen {
    pub values: Vec<f64>,
    /// `vectors[k]` is the unit eigenvector for `values[k]`.
    pub vectors: Vec<Vec<C64>>,
}

impl Eigen {
    pub fn reconstruct(&self) -> HermitianMatrix {
        let dim = self.values.len();
        HermitianMatrix::outer_sum(dim, &self.vectors, &self.values)
    }

    /// Applies `f` to the spectrum, dropping eigenpairs for which `f`
    /// returns `None`.
    pub fn map_spectrum(&self, f: impl Fn(f64) -> Option<f64>) -> HermitianMatrix {
        let dim = self.values.len();
        let (vecs, vals): (Vec<_>, Vec<_>) = self
            .vectors
            .iter()
            .zip(&self.values)
            .filter_map(|(v, &l)| f(l).map(|m| (v.clone(), m)))
            .unzip();
        HermitianMatrix::outer_sum(dim, &vecs, &vals)
    }
}

fn jacobi_eigen(m: &HermitianMatrix) -> Result<Eigen> {
    let n = m.dim;
    let mut a: Vec<C64> = m.data.clone();
    let mut v: Vec<C64> = HermitianMatrix::identity(n).data;
    let scale = m.frobenius_norm();

    let off_norm = |a: &[C64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    s += a[i * n + j].norm_sqr();
                }
            }
        }
        s.sqrt()
    };

    let mut converged = scale == 0.0 || n < 2;
    let mut sweeps = 0;
    while !converged && sweeps < JACOBI_MAX_SWEEPS {
        if off_norm(&a) <= JACOBI_OFF_TOLERANCE * scale {
            converged = true;
            break;
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                let mag = apq.norm();
                if mag <= f64::MIN_POSITIVE {
                    continue;
                }
                let app = a[p * n + p].re;
                let aqq = a[q * n + q].re;
                // Rotate the phase of a_pq away, then apply a real rotation.
                let phase = apq / mag;
                let tau = (aqq - app) / (2.0 * mag);
                let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                let t = if tau == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (1.0 + t * t).sqrt();
                let sn = t * cs;
                let u00 = c(cs, 0.0);
                let u01 = c(sn, 0.0);
                let u10 = -phase.conj() * sn;
                let u11 = phase.conj() * cs;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = akp * u00 + akq * u10;
                    a[k * n + q] = akp * u01 + akq * u11;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = u00.conj() * apk + u10.conj() * aqk;
                    a[q * n + k] = u01.conj() * apk + u11.conj() * aqk;
                }
                a[p * n + q] = c(0.0, 0.0);
                a[q * n + p] = c(0.0, 0.0);
                a[p * n + p] = c(a[p * n + p].re, 0.0);
                a[q * n + q] = c(a[q * n + q].re, 0.0);

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * u00 + vkq * u10;
                    v[k * n + q] = vkp * u01 + vkq * u11;
                }
            }
        }
    }
    if !converged {
        let off = off_norm(&a);
        if off > JACOBI_OFF_TOLERANCE * scale {
            return Err(UsdError::NoConvergence {
                sweeps,
                off_norm: off,
            });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.total_cmp(&a[j * n + j].re));
    let values = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    Ok(Eigen { values, vectors })
}

/// Moore-Penrose pseudo-inverse of a Hermitian positive semidefinite matrix:
/// eigenvalues above `tol_rank` are inverted, the rest are zeroed.
pub fn pseudo_inverse(m: &HermitianMatrix, tol_rank: f64) -> Result<HermitianMatrix> {
    let eig = m.eig()?;
    Ok(eig.map_spectrum(|l| (l > tol_rank).then(|| 1.0 / l)))
}

/// Default rank tolerance, relative to the largest eigenvalue.
pub fn default_rank_tolerance(max_eigenvalue: f64) -> f64 {
    1e-10 * max_eigenvalue.abs().max(f64::MIN_POSITIVE)
}

pub fn complex_determinant(rows: &[Vec<C64>]) -> C64 {
    let n = rows.len();
    let mut a: Vec<Vec<C64>> = rows.to_vec();
    let mut det = c(1.0, 0.0);
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].norm().total_cmp(&a[j][col].norm()))
            .unwrap();
        if a[pivot][col].norm() == 0.0 {
            return c(0.0, 0.0);
        }
        if pivot != col {
            a.swap(pivot, col);
            det = -det;
        }
        let d = a[col][col];
        det *= d;
        for row in col + 1..n {
            let f = a[row][col] / d;
            if f.norm() == 0.0 {
                continue;
            }
            for k in col..n {
                let t = a[col][k];
                a[row][k] -= f * t;
            }
        }
    }
    det
}

/// Solves the dense real system `A x = b` by Gaussian elimination with
/// partial pivoting. `a` is row-major `n × n`.
pub fn solve_real(a: &[f64], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<f64> = a.to_vec();
    let mut x: Vec<f64> = b.to_vec();
    for col in 0..n {
        let pivot =
            (col..n).max_by(|&i, &j| m[i * n + col].abs().total_cmp(&m[j * n + col].abs()))?;
        if m[pivot * n + col].abs() < 1e-300 {
            return None;
        }
        if pivot != col {
            for k in 0..n {
                m.swap(pivot * n + k, col * n + k);
            }
            x.swap(pivot, col);
        }
        for row in col + 1..n {
            let f = m[row * n + col] / m[col * n + col];
            for k in col..n {
                m[row * n + k] -= f * m[col * n + k];
            }
            x[row] -= f * x[col];
        }
    }
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row * n + k] * x[k]).sum();
        x[row] = (x[row] - s) / m[row * n + row];
    }
    Some(x)
}

/// Cholesky factor `L` (lower triangular, rows) of a Hermitian positive
/// definite matrix, or `None` if a pivot is not positive.
pub fn cholesky(m: &HermitianMatrix) -> Option<Vec<Vec<C64>>> {
    let n = m.dim();
    let mut l = vec![vec![c(0.0, 0.0); n]; n];
    for j in 0..n {
        let mut d = m.get(j, j).re;
        for k in 0..j {
            d -= l[j][k].norm_sqr();
        }
        if d <= 0.0 {
            return None;
        }
        let djj = d.sqrt();
        l[j][j] = c(djj, 0.0);
        for i in j + 1..n {
            let mut s = m.get(i, j);
            for k in 0..j {
                s -= l[i][k] * l[j][k].conj();
            }
            l[i][j] = s / djj;
        }
    }
    Some(l)
}

/// Vectors `v_0..v_{n-1}` in `C^n` whose Gram matrix is `gram`.
///
/// Uses the Cholesky factor `gram = L L†`: the vectors are the columns of
/// `L†`, so that `⟨v_i|v_j⟩ = (L L†)_ij`.
pub fn realize_gram(gram: &HermitianMatrix) -> Option<Vec<Vec<C64>>> {
    let l = cholesky(gram)?;
    let n = gram.dim();
    Some(
        (0..n)
            .map(|i| (0..n).map(|k| l[i][k].conj()).collect())
            .collect(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn equiangular(n: usize, s: f64) -> HermitianMatrix {
        HermitianMatrix::from_fn(n, |i, j| if i == j { c(1.0, 0.0) } else { c(s, 0.0) })
    }

    #[test]
    fn identity_spectrum() {
        let vals = HermitianMatrix::identity(3).eigenvalues().unwrap();
        for v in vals {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn equiangular_spectrum_matches_closed_form() {
        let vals = equiangular(3, 0.2).eigenvalues().unwrap();
        assert_abs_diff_eq!(vals[0], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[1], 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(vals[2], 1.4, epsilon = 1e-12);
    }

    #[test]
    fn complex_reconstruction_and_orthonormality() {
        let m = HermitianMatrix::from_fn(4, |i, j| {
            if i == j {
                c(i as f64 - 1.5, 0.0)
            } else {
                c(0.3 * (i + j) as f64, 0.7 - 0.2 * (j as f64 - i as f64))
            }
        });
        let eig = m.eig().unwrap();
        assert!(eig.reconstruct().max_abs_diff(&m) < 1e-12 * m.frobenius_norm());
        for a in 0..4 {
            for b in 0..4 {
                let ip = inner(&eig.vectors[a], &eig.vectors[b]);
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((ip - c(expected, 0.0)).norm() < 1e-12);
            }
        }
        assert!(eig.values.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn pseudo_inverse_of_rank_deficient_diagonal() {
        let p = pseudo_inverse(&HermitianMatrix::diagonal(&[2.0, 0.0]), 1e-10).unwrap();
        assert_abs_diff_eq!(p.get(0, 0).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(1, 1).re, 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.get(0, 1).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn pseudo_inverse_of_identity() {
        let p = pseudo_inverse(&HermitianMatrix::identity(3), 1e-10).unwrap();
        assert!(p.max_abs_diff(&HermitianMatrix::identity(3)) < 1e-15);
    }

    #[test]
    fn determinant_and_cholesky_realization() {
        let g = equiangular(3, 0.25);
        // (1 - s)^2 (1 + 2s)
        assert_abs_diff_eq!(g.determinant(), 0.75 * 0.75 * 1.5, epsilon = 1e-14);
        let vs = realize_gram(&g).unwrap();
        assert!(HermitianMatrix::gram(&vs).max_abs_diff(&g) < 1e-15);
    }

    #[test]
    fn real_solver() {
        let x = solve_real(&[2.0, 1.0, 1.0, 3.0], &[3.0, 5.0]).unwrap();
        assert_abs_diff_eq!(x[0], 0.8, epsilon = 1e-14);
        assert_abs_diff_eq!(x[1], 1.4, epsilon = 1e-14);
        assert!(solve_real(&[1.0, 2.0, 2.0, 4.0], &[1.0, 1.0]).is_none());
    }

    /// Roots of `det(M − xI)` found by sign scanning and bisection, using the
    /// LU determinant only.
    fn characteristic_roots(m: &HermitianMatrix) -> Vec<f64> {
        let n = m.dim();
        let bound = m.frobenius_norm() + 1.0;
        let charpoly = |x: f64| {
            let rows: Vec<Vec<C64>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| m.get(i, j) - if i == j { c(x, 0.0) } else { c(0.0, 0.0) })
                        .collect()
                })
                .collect();
            complex_determinant(&rows).re
        };
        let steps = 20_000;
        let mut roots = Vec::new();
        let mut prev_x = -bound;
        let mut prev = charpoly(prev_x);
        for k in 1..=steps {
            let x = -bound + 2.0 * bound * k as f64 / steps as f64;
            let v = charpoly(x);
            if prev == 0.0 {
                roots.push(prev_x);
            } else if prev.signum() != v.signum() && v != 0.0 {
                let (mut lo, mut hi) = (prev_x, x);
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if charpoly(mid).signum() == charpoly(lo).signum() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_x = x;
            prev = v;
        }
        roots
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn jacobi_matches_characteristic_roots(entries in proptest::collection::vec(-1.0f64..1.0, 16)) {
            let m = HermitianMatrix::from_fn(4, |i, j| {
                if i == j {
                    c(3.0 * entries[i], 0.0)
                } else {
                    let k = 4 + 2 * (i.min(j) * 4 + i.max(j)) % 12;
                    c(entries[k], entries[k + 1])
                }
            });
            let vals = m.eigenvalues().unwrap();
            let roots = characteristic_roots(&m);
            // Near-degenerate spectra can hide a pair of roots from the sign scan.
            prop_assume!(roots.len() == 4);
            for (a, b) in vals.iter().zip(&roots) {
                prop_assert!((a - b).abs() < 1e-8, "{vals:?} vs {roots:?}");
            }
        }
    }

    #[test]
    fn non_hermitian_rows_rejected() {
        let rows = vec![
            vec![c(1.0, 0.0), c(0.0, 1.0)],
            vec![c(0.0, 1.0), c(1.0, 0.0)],
        ];
        assert!(HermitianMatrix::try_from_rows(&rows, 1e-12).is_err());
    }
}
