//! Dense complex matrices sized for few-spin problems.
//!
//! Everything here is row-major and capped at dimension 81, which covers a
//! pair of qutrits (9 x 9 states) and the largest normal-equation systems the
//! reconstruction code builds (80 unknowns). Eigenproblems are solved with a
//! cyclic Jacobi iteration; at these sizes it is simpler and no less accurate
//! than a Householder reduction, and it is deterministic.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Hard cap on rows and columns of any matrix built by this crate.
pub const MAX_DIM: usize = 81;

/// Convergence threshold for the off-diagonal Frobenius norm in Jacobi sweeps.
const OFF_DIAG_TOL: f64 = 1e-13;

const MAX_SWEEPS: usize = 64;

/// Dense row-major complex matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

/// Eigendecomposition of a Hermitian matrix: `values` ascending, the k-th
/// column of `vectors` is the eigenvector for `values[k]`.
#[derive(Clone, Debug)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

fn check_dims(rows: usize, cols: usize) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(Error::Shape("matrix dimensions must be positive".into()));
    }
    if rows > MAX_DIM || cols > MAX_DIM {
        return Err(Error::Shape(format!(
            "matrix dimension {rows}x{cols} exceeds the cap of {MAX_DIM}"
        )));
    }
    Ok(())
}

impl ComplexMatrix {
    /// Zero matrix of the given shape.
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        check_dims(rows, cols)?;
        Ok(Self {
            rows,
            cols,
            entries: vec![Complex64::new(0.0, 0.0); rows * cols],
        })
    }

    /// Identity matrix of dimension `n`.
    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        Ok(m)
    }

    /// Build a matrix by evaluating `f(row, col)`.
    pub fn from_fn(
        rows: usize,
        cols: usize,
        mut f: impl FnMut(usize, usize) -> Complex64,
    ) -> Result<Self> {
        let mut m = Self::zeros(rows, cols)?;
        for r in 0..rows {
            for c in 0..cols {
                m.set(r, c, f(r, c));
            }
        }
        Ok(m)
    }

    /// Build from row-major complex entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        check_dims(rows, cols)?;
        if entries.len() != rows * cols {
            return Err(Error::Shape(format!(
                "expected {} entries for a {rows}x{cols} matrix, got {}",
                rows * cols,
                entries.len()
            )));
        }
        Ok(Self { rows, cols, entries })
    }

    /// Build a square matrix from row-major (re, im) pairs.
    pub fn from_re_im(dim: usize, pairs: &[[f64; 2]]) -> Result<Self> {
        let entries = pairs
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        Self::from_entries(dim, dim, entries)
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

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> Complex64 {
        debug_assert!(r < self.rows && c < self.cols);
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        debug_assert!(r < self.rows && c < self.cols);
        self.entries[r * self.cols + c] = v;
    }

    /// Matrix product `self * rhs`.
    pub fn mul(&self, rhs: &Self) -> Result<Self> {
        if self.cols != rhs.rows {
            return Err(Error::Shape(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let mut out = Self::zeros(self.rows, rhs.cols)?;
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(r, k);
                if a == Complex64::new(0.0, 0.0) {
                    continue;
                }
                for c in 0..rhs.cols {
                    let v = out.get(r, c) + a * rhs.get(k, c);
                    out.set(r, c, v);
                }
            }
        }
        Ok(out)
    }

    /// Entrywise sum.
    pub fn add(&self, rhs: &Self) -> Result<Self> {
        if self.rows != rhs.rows || self.cols != rhs.cols {
            return Err(Error::Shape(format!(
                "cannot add {}x{} and {}x{}",
                self.rows, self.cols, rhs.rows, rhs.cols
            )));
        }
        let entries = self
            .entries
            .iter()
            .zip(&rhs.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            entries,
        })
    }

    /// Entrywise difference.
    pub fn sub(&self, rhs: &Self) -> Result<Self> {
        self.add(&rhs.scale(Complex64::new(-1.0, 0.0)))
    }

    /// Multiply every entry by `factor`.
    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|a| a * factor).collect(),
        }
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut out = Self {
            rows: self.cols,
            cols: self.rows,
            entries: vec![Complex64::new(0.0, 0.0); self.entries.len()],
        };
        for r in 0..self.rows {
            for c in 0..self.cols {
                out.set(c, r, self.get(r, c).conj());
            }
        }
        out
    }

    /// Trace of a square matrix.
    pub fn trace(&self) -> Result<Complex64> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "trace of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        Ok((0..self.rows).map(|i| self.get(i, i)).sum())
    }

    /// Kronecker product; the left factor indexes the blocks.
    pub fn kron(&self, rhs: &Self) -> Result<Self> {
        let rows = self.rows * rhs.rows;
        let cols = self.cols * rhs.cols;
        let mut out = Self::zeros(rows, cols)?;
        for i in 0..self.rows {
            for j in 0..self.cols {
                let a = self.get(i, j);
                for k in 0..rhs.rows {
                    for l in 0..rhs.cols {
                        out.set(i * rhs.rows + k, j * rhs.cols + l, a * rhs.get(k, l));
                    }
                }
            }
        }
        Ok(out)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs_entry(&self) -> f64 {
        self.entries.iter().map(|a| a.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise deviation from `self.dagger()`.
    pub fn hermiticity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut dev: f64 = 0.0;
        for r in 0..self.rows {
            for c in r..self.cols {
                dev = dev.max((self.get(r, c) - self.get(c, r).conj()).norm());
            }
        }
        dev
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_deviation() <= tol
    }

    /// Eigendecomposition of a Hermitian matrix by cyclic Jacobi sweeps.
    ///
    /// The input must be Hermitian within max-entry deviation 1e-10; it is
    /// symmetrized exactly before iterating. Sweeps stop once the
    /// off-diagonal Frobenius norm drops below 1e-13.
    pub fn hermitian_eigen(&self) -> Result<HermitianEigen> {
        if !self.is_square() {
            return Err(Error::Shape(format!(
                "eigendecomposition of a non-square {}x{} matrix",
                self.rows, self.cols
            )));
        }
        let dev = self.hermiticity_deviation();
        if dev > crate::states::HERMITICITY_TOL {
            return Err(Error::Domain(format!(
                "matrix is not Hermitian: max deviation {dev:.3e}"
            )));
        }
        let n = self.rows;
        // Exactly Hermitian working copy: a_ij <- (a_ij + conj(a_ji)) / 2.
        let mut a = self.clone();
        for r in 0..n {
            for c in 0..n {
                if r == c {
                    a.set(r, c, Complex64::new(self.get(r, c).re, 0.0));
                } else {
                    let v = (self.get(r, c) + self.get(c, r).conj()) * 0.5;
                    a.set(r, c, v);
                }
            }
        }
        let mut v = Self::identity(n)?;

        let mut converged = false;
        for _ in 0..MAX_SWEEPS {
            if off_diag_norm(&a) < OFF_DIAG_TOL {
                converged = true;
                break;
            }
            for p in 0..n - 1 {
                for q in p + 1..n {
                    jacobi_rotate(&mut a, &mut v, p, q);
                }
            }
        }
        if !converged && off_diag_norm(&a) >= OFF_DIAG_TOL {
            return Err(Error::Invariant(format!(
                "Jacobi iteration failed to converge in {MAX_SWEEPS} sweeps \
                 (off-diagonal norm {:.3e})",
                off_diag_norm(&a)
            )));
        }

        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&i, &j| a.get(i, i).re.total_cmp(&a.get(j, j).re));
        let values: Vec<f64> = order.iter().map(|&i| a.get(i, i).re).collect();
        let vectors = Self::from_fn(n, n, |r, c| v.get(r, order[c]))?;
        Ok(HermitianEigen { values, vectors })
    }

    /// True when the matrix is positive semidefinite: Hermitian and all
    /// eigenvalues at least `-tol`.
    pub fn is_psd(&self, tol: f64) -> Result<bool> {
        let eig = self.hermitian_eigen()?;
        Ok(eig.values.iter().all(|&l| l >= -tol))
    }
}

fn off_diag_norm(a: &ComplexMatrix) -> f64 {
    let n = a.rows();
    let mut sum = 0.0;
    for r in 0..n {
        for c in 0..n {
            if r != c {
                sum += a.get(r, c).norm_sqr();
            }
        }
    }
    sum.sqrt()
}

/// One complex Jacobi rotation zeroing the (p, q) entry of the Hermitian
/// matrix `a`, accumulated into the eigenvector matrix `v`.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.get(p, q);
    let r = apq.norm();
    if r == 0.0 {
        return;
    }
    let app = a.get(p, p).re;
    let aqq = a.get(q, q).re;
    let tau = (aqq - app) / (2.0 * r);
    // Smaller-angle root of r t^2 + (aqq - app) t - r = 0; stable form.
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let u = apq / r;
    let n = a.rows();

    for k in 0..n {
        if k == p || k == q {
            continue;
        }
        let akp = a.get(k, p);
        let akq = a.get(k, q);
        let new_kp = akp * c - akq * (u.conj() * s);
        let new_kq = akp * (u * s) + akq * c;
        a.set(k, p, new_kp);
        a.set(p, k, new_kp.conj());
        a.set(k, q, new_kq);
        a.set(q, k, new_kq.conj());
    }
    let cc = c * c;
    let ss = s * s;
    let csr = 2.0 * c * s * r;
    a.set(p, p, Complex64::new(cc * app - csr + ss * aqq, 0.0));
    a.set(q, q, Complex64::new(ss * app + csr + cc * aqq, 0.0));
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));

    for k in 0..v.rows() {
        let vkp = v.get(k, p);
        let vkq = v.get(k, q);
        v.set(k, p, vkp * c - vkq * (u.conj() * s));
        v.set(k, q, vkp * (u * s) + vkq * c);
    }
}
