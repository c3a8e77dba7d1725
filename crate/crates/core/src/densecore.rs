//! Small dense vectors and matrices, plus the constrained solver used for
//! correctors and generalized inverses.
//!
//! Dimensions are runtime values; everything here is sized for systems with a
//! handful of unknowns, so storage is a flat row-major buffer kept inline up to 4x4.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use smallvec::SmallVec;

use crate::error::{Error, Result};

type VecBuf = SmallVec<[f64; 4]>;
type MatBuf = SmallVec<[f64; 16]>;

/// Relative threshold on QR diagonal entries below which the stacked system
/// is declared rank deficient.
pub const RANK_TOL: f64 = 1e-12;

/// Compatibility tolerance factor: `|QJ|_inf <= COMPAT_TOL * (1 + |J|_inf)`.
pub const COMPAT_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq)]
pub struct Vector {
    data: VecBuf,
}

impl Vector {
    pub fn new(data: Vec<f64>) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::DimensionMismatch("empty vector".into()));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("vector"));
        }
        Ok(Self::from_vec(data))
    }

    /// Builds a vector without the finiteness check. Used on hot paths where
    /// the caller validates afterwards.
    pub fn from_vec(data: Vec<f64>) -> Self {
        Self {
            data: VecBuf::from_vec(data),
        }
    }

    pub fn from_slice(data: &[f64]) -> Self {
        Self {
            data: VecBuf::from_slice(data),
        }
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            data: VecBuf::from_elem(0.0, dim),
        }
    }

    pub fn unit(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[k] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.data.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data.into_vec()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, f64> {
        self.data.iter()
    }

    pub fn norm_inf(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn dot(&self, other: &Vector) -> f64 {
        debug_assert_eq!(self.dim(), other.dim());
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn scale(&self, s: f64) -> Vector {
        self.data.iter().map(|x| s * x).collect()
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &Vector) {
        debug_assert_eq!(self.dim(), other.dim());
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl FromIterator<f64> for Vector {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        Self {
            data: iter.into_iter().collect(),
        }
    }
}

impl fmt::Debug for Vector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(&self.data).finish()
    }
}

impl Index<usize> for Vector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.data[i]
    }
}

impl IndexMut<usize> for Vector {
    fn index_mut(&mut self, i: usize) -> &mut f64 {
        &mut self.data[i]
    }
}

impl Add for &Vector {
    type Output = Vector;
    fn add(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a + b)
            .collect()
    }
}

impl Sub for &Vector {
    type Output = Vector;
    fn sub(self, rhs: &Vector) -> Vector {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.data
            .iter()
            .zip(&rhs.data)
            .map(|(a, b)| a - b)
            .collect()
    }
}

impl Neg for &Vector {
    type Output = Vector;
    fn neg(self) -> Vector {
        self.scale(-1.0)
    }
}

#[derive(Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: MatBuf,
}

impl Mat {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::DimensionMismatch(
                "matrix with zero rows or columns".into(),
            ));
        }
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("matrix"));
        }
        Ok(Self {
            rows,
            cols,
            data: MatBuf::from_vec(data),
        })
    }

    /// Row-major literal. Panics on ragged input; meant for constants.
    pub fn from_rows(rows: &[&[f64]]) -> Self {
        let r = rows.len();
        let c = rows[0].len();
        assert!(
            rows.iter().all(|row| row.len() == c),
            "ragged matrix literal"
        );
        Self {
            rows: r,
            cols: c,
            data: rows.iter().flat_map(|row| row.iter().copied()).collect(),
        }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: MatBuf::from_elem(0.0, rows * cols),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diag(&vec![1.0; n])
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        let mut m = Self::zeros(n, n);
        for (i, &x) in d.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_columns(cols: &[Vector]) -> Self {
        let rows = cols[0].dim();
        let mut m = Self::zeros(rows, cols.len());
        for (j, c) in cols.iter().enumerate() {
            for i in 0..rows {
                m[(i, j)] = c[i];
            }
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, j: usize) -> Vector {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)];
            }
        }
        t
    }

    pub fn mul_vec(&self, v: &Vector) -> Vector {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| s * x).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    /// Symmetric part `(A + A^T) / 2`.
    pub fn sym_part(&self) -> Mat {
        assert!(self.is_square());
        let t = self.transpose();
        (self + &t).scale(0.5)
    }

    /// Inverse by Gaussian elimination with partial pivoting.
    pub fn inverse(&self) -> Result<Mat> {
        if !self.is_square() {
            return Err(Error::DimensionMismatch(
                "inverse of a non-square matrix".into(),
            ));
        }
        let n = self.rows;
        // Rows are equilibrated first so that badly scaled but regular
        // matrices (diagonal ones in particular) are not taken for singular.
        let mut a = self.clone();
        let mut inv = Mat::zeros(n, n);
        for i in 0..n {
            let r = self.row(i).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if r == 0.0 {
                return Err(Error::SingularMatrix);
            }
            for j in 0..n {
                a[(i, j)] /= r;
            }
            inv[(i, i)] = 1.0 / r;
        }
        for k in 0..n {
            let p = (k..n)
                .max_by(|&i, &j| a[(i, k)].abs().total_cmp(&a[(j, k)].abs()))
                .unwrap_or(k);
            if a[(p, k)].abs() <= RANK_TOL {
                return Err(Error::SingularMatrix);
            }
            if p != k {
                a.swap_rows(p, k);
                inv.swap_rows(p, k);
            }
            let piv = a[(k, k)];
            for j in 0..n {
                a[(k, j)] /= piv;
                inv[(k, j)] /= piv;
            }
            for i in 0..n {
                if i == k {
                    continue;
                }
                let f = a[(i, k)];
                if f == 0.0 {
                    continue;
                }
                for j in 0..n {
                    a[(i, j)] -= f * a[(k, j)];
                    inv[(i, j)] -= f * inv[(k, j)];
                }
            }
        }
        Ok(inv)
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Vec<f64> {
        let m = nalgebra::DMatrix::from_row_slice(self.rows, self.cols, &self.data);
        let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
        s.sort_by(|a, b| b.total_cmp(a));
        s
    }

    /// Numerical rank relative to the largest singular value.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let s = self.singular_values();
        let top = s.first().copied().unwrap_or(0.0);
        if top == 0.0 {
            return 0;
        }
        s.iter().filter(|&&x| x > rel_tol * top).count()
    }

    /// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
    pub fn symmetric_eigenvalues(&self) -> Vec<f64> {
        assert!(self.is_square());
        let n = self.rows;
        let mut a = self.sym_part();
        for _sweep in 0..100 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += a[(p, q)] * a[(p, q)];
                }
            }
            if off.sqrt() <= 1e-15 * a.max_abs().max(f64::MIN_POSITIVE) {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = a[(p, q)];
                    if apq == 0.0 {
                        continue;
                    }
                    let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let t = if theta == 0.0 { 1.0 } else { t };
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let akp = a[(k, p)];
                        let akq = a[(k, q)];
                        a[(k, p)] = c * akp - s * akq;
                        a[(k, q)] = s * akp + c * akq;
                    }
                    for k in 0..n {
                        let apk = a[(p, k)];
                        let aqk = a[(q, k)];
                        a[(p, k)] = c * apk - s * aqk;
                        a[(q, k)] = s * apk + c * aqk;
                    }
                }
            }
        }
        let mut ev: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
        ev.sort_by(|x, y| x.total_cmp(y));
        ev
    }
}

impl fmt::Debug for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[f64]> = (0..self.rows).map(|i| self.row(i)).collect();
        f.debug_list().entries(rows).finish()
    }
}

impl Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &Mat {
    type Output = Mat;
    fn add(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl Sub for &Mat {
    type Output = Mat;
    fn sub(self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl Mul for &Mat {
    type Output = Mat;
    fn mul(self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl Mul<&Vector> for &Mat {
    type Output = Vector;
    fn mul(self, rhs: &Vector) -> Vector {
        self.mul_vec(rhs)
    }
}

/// Solves `C V = J`, `Q V = 0` for the unique `V`.
///
/// `C` must have an `n`-dimensional kernel that meets its image only at zero
/// and `Q` must have full row rank `n`; under those conditions the stacked
/// `(N+n) x N` matrix `[C; Q]` has full column rank and the solution is the
/// zero-residual least-squares solution, computed here by Householder QR in
/// natural column order.
pub fn solve_constrained(c: &Mat, q: &Mat, j: &Vector) -> Result<Vector> {
    let big_n = c.rows();
    if !c.is_square() || q.cols() != big_n || j.dim() != big_n {
        return Err(Error::DimensionMismatch(format!(
            "C {}x{}, Q {}x{}, J {}",
            c.rows(),
            c.cols(),
            q.rows(),
            q.cols(),
            j.dim()
        )));
    }
    if !c.is_finite() || !q.is_finite() || !j.is_finite() {
        return Err(Error::NonFinite("constrained system"));
    }
    let defect = q.mul_vec(j).norm_inf();
    let tol = COMPAT_TOL * (1.0 + j.norm_inf());
    if defect > tol {
        return Err(Error::IncompatibleRhs { defect, tol });
    }

    let n = q.rows();
    let m = big_n + n;
    let mut a = Mat::zeros(m, big_n);
    let mut rhs = vec![0.0; m];
    for i in 0..big_n {
        for k in 0..big_n {
            a[(i, k)] = c[(i, k)];
        }
        rhs[i] = j[i];
    }
    for i in 0..n {
        for k in 0..big_n {
            a[(big_n + i, k)] = q[(i, k)];
        }
    }

    // Householder QR, applying reflections to the right-hand side as we go.
    let mut diag = vec![0.0; big_n];
    for k in 0..big_n {
        let norm = (k..m).map(|i| a[(i, k)] * a[(i, k)]).sum::<f64>().sqrt();
        if norm == 0.0 {
            diag[k] = 0.0;
            continue;
        }
        let alpha = if a[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| a[(i, k)]).collect();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            for col in k..big_n {
                let s: f64 = v
                    .iter()
                    .enumerate()
                    .map(|(r, vr)| vr * a[(k + r, col)])
                    .sum();
                let f = 2.0 * s / vnorm2;
                for (r, vr) in v.iter().enumerate() {
                    a[(k + r, col)] -= f * vr;
                }
            }
            let s: f64 = v.iter().enumerate().map(|(r, vr)| vr * rhs[k + r]).sum();
            let f = 2.0 * s / vnorm2;
            for (r, vr) in v.iter().enumerate() {
                rhs[k + r] -= f * vr;
            }
        }
        diag[k] = a[(k, k)];
    }

    let largest = diag.iter().fold(0.0f64, |acc, d| acc.max(d.abs()));
    let smallest = diag.iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if largest == 0.0 || smallest < RANK_TOL * largest {
        let ratio = if largest == 0.0 {
            0.0
        } else {
            smallest / largest
        };
        return Err(Error::SingularSystem { ratio });
    }

    let mut x = vec![0.0; big_n];
    for k in (0..big_n).rev() {
        let s: f64 = ((k + 1)..big_n).map(|col| a[(k, col)] * x[col]).sum();
        x[k] = (rhs[k] - s) / a[(k, k)];
    }
    Ok(Vector::from_vec(x))
}

/// Residual norms `(|C V - J|_inf, |Q V|_inf)` of a constrained solution.
pub fn constrained_residuals(c: &Mat, q: &Mat, j: &Vector, v: &Vector) -> (f64, f64) {
    let r = &c.mul_vec(v) - j;
    (r.norm_inf(), q.mul_vec(v).norm_inf())
}

/// Applies the constrained generalized inverse: returns `V` with `L V = b`,
/// `Q V = 0`.
pub fn generalized_inverse_apply(l: &Mat, q: &Mat, b: &Vector) -> Result<Vector> {
    solve_constrained(l, q, b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_case() {
        let c = Mat::diag(&[0.0, 1.0]);
        let q = Mat::from_rows(&[&[1.0, 0.0]]);
        let j = Vector::from_slice(&[0.0, 3.0]);
        let v = solve_constrained(&c, &q, &j).unwrap();
        assert!((v[0]).abs() < 1e-15);
        assert!((v[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn m1_corrector_system() {
        let c = Mat::from_rows(&[&[1.0, 0.0, -4.0], &[0.0, 1.0, 0.0], &[-1.0, 0.0, 4.0]]);
        let q = Mat::from_rows(&[&[1.0, 0.0, 1.0]]);
        let j = Vector::from_slice(&[0.0, -4.0 / 3.0, 0.0]);
        let v = solve_constrained(&c, &q, &j).unwrap();
        let expect = [0.0, -4.0 / 3.0, 0.0];
        for k in 0..3 {
            assert!((v[k] - expect[k]).abs() < 1e-14, "{v:?}");
        }
    }

    #[test]
    fn incompatible_rhs_is_rejected() {
        let c = Mat::diag(&[0.0, 1.0]);
        let q = Mat::from_rows(&[&[1.0, 0.0]]);
        let j = Vector::from_slice(&[1e-3, 3.0]);
        assert!(matches!(
            solve_constrained(&c, &q, &j),
            Err(Error::IncompatibleRhs { .. })
        ));
    }

    #[test]
    fn rank_deficient_is_rejected() {
        // kernel of C is two-dimensional, Q only pins one direction
        let c = Mat::diag(&[0.0, 0.0, 1.0]);
        let q = Mat::from_rows(&[&[1.0, 0.0, 0.0]]);
        let j = Vector::from_slice(&[0.0, 0.0, 1.0]);
        assert!(matches!(
            solve_constrained(&c, &q, &j),
            Err(Error::SingularSystem { .. })
        ));
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let c = Mat::from_rows(&[&[1.0, 0.0, -4.0], &[0.0, 1.0, 0.0], &[-1.0, 0.0, 4.0]]);
        let q = Mat::from_rows(&[&[1.0, 0.0, 1.0]]);
        let v = generalized_inverse_apply(&c, &q, &Vector::zeros(3)).unwrap();
        assert_eq!(v.norm_inf(), 0.0);
    }

    #[test]
    fn inverse_roundtrip() {
        let a = Mat::from_rows(&[&[4.0, 1.0, 0.5], &[0.0, 2.0, 1.0], &[1.0, 0.0, 3.0]]);
        let inv = a.inverse().unwrap();
        let id = &a * &inv;
        assert!((&id - &Mat::identity(3)).max_abs() < 1e-14);
        assert_eq!(Mat::diag(&[1.0, 0.0]).inverse(), Err(Error::SingularMatrix));
    }

    #[test]
    fn jacobi_eigenvalues() {
        let a = Mat::from_rows(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let ev = a.symmetric_eigenvalues();
        assert!((ev[0] - 1.0).abs() < 1e-14 && (ev[1] - 3.0).abs() < 1e-14);
        let d = Mat::diag(&[0.0, 1.0]);
        assert_eq!(d.symmetric_eigenvalues()[0], 0.0);
    }

    #[test]
    fn construction_rejects_non_finite() {
        assert!(Mat::new(1, 2, vec![1.0, f64::NAN]).is_err());
        assert!(Mat::new(2, 2, vec![1.0]).is_err());
        assert!(Vector::new(vec![f64::INFINITY]).is_err());
        assert!(Vector::new(vec![]).is_err());
    }
}
