//! Small linear-algebra helpers: the complex scalar, 2x2 gates and dense matrices.

use core::f64::consts::FRAC_1_SQRT_2;
use core::ops::Mul;

use nalgebra::DMatrix;
pub use num_complex::Complex64 as C64;

use crate::error::{argument, Error, Result};

/// Dense complex matrix, used for oracle realizations and circuit matrices.
pub type CMatrix = DMatrix<C64>;

#[inline]
pub const fn c64(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub(crate) const ZERO: C64 = c64(0.0, 0.0);
pub(crate) const ONE: C64 = c64(1.0, 0.0);

/// A single-qubit gate, row-major: `m[row][col]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Matrix2(pub [[C64; 2]; 2]);

impl Matrix2 {
    pub const fn new(m00: C64, m01: C64, m10: C64, m11: C64) -> Self {
        Self([[m00, m01], [m10, m11]])
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn x() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn z() -> Self {
        Self::new(ONE, ZERO, ZERO, c64(-1.0, 0.0))
    }

    pub const fn h() -> Self {
        let s = c64(FRAC_1_SQRT_2, 0.0);
        Self::new(s, s, s, c64(-FRAC_1_SQRT_2, 0.0))
    }

    /// diag(1, e^{i theta})
    pub fn phase(theta: f64) -> Self {
        Self::new(ONE, ZERO, ZERO, C64::from_polar(1.0, theta))
    }

    /// diag(1, lambda) for a unit-modulus lambda.
    pub fn diag_phase(lambda: C64) -> Self {
        Self::new(ONE, ZERO, ZERO, lambda)
    }

    /// The two-parameter rotation with first column (alpha, beta) and
    /// second column (conj(beta), -conj(alpha)).
    pub fn rotation(alpha: C64, beta: C64) -> Self {
        Self::new(alpha, beta.conj(), beta, -alpha.conj())
    }

    /// Real rotation [[cos, -sin], [sin, cos]].
    pub fn ry(angle: f64) -> Self {
        let (s, c) = libm::sincos(angle);
        Self::new(c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Self::new(m[0][0].conj(), m[1][0].conj(), m[0][1].conj(), m[1][1].conj())
    }

    /// Largest entry of |M^dagger M - I|.
    pub fn unitarity_deviation(&self) -> f64 {
        let p = self.adjoint() * *self;
        let mut worst = 0.0f64;
        for (r, row) in p.0.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                let target = if r == c { ONE } else { ZERO };
                worst = worst.max((v - target).norm());
            }
        }
        worst
    }

    pub fn check_unitary(&self, tol: f64) -> Result<()> {
        let deviation = self.unitarity_deviation();
        if deviation.is_nan() || deviation > tol {
            return Err(Error::NotUnitary { deviation });
        }
        Ok(())
    }

    #[inline]
    pub fn apply(&self, a0: C64, a1: C64) -> (C64, C64) {
        let m = &self.0;
        (m[0][0] * a0 + m[0][1] * a1, m[1][0] * a0 + m[1][1] * a1)
    }

    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_fn(2, 2, |r, c| self.0[r][c])
    }
}

impl Mul for Matrix2 {
    type Output = Matrix2;

    fn mul(self, rhs: Matrix2) -> Matrix2 {
        let (a, b) = (&self.0, &rhs.0);
        let mut out = [[ZERO; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Matrix2(out)
    }
}

/// Largest entry of |M^dagger M - I| for a square matrix.
pub fn unitarity_deviation(m: &CMatrix) -> f64 {
    if !m.is_square() {
        return f64::INFINITY;
    }
    let p = m.adjoint() * m;
    let mut worst = 0.0f64;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let target = if r == c { ONE } else { ZERO };
            worst = worst.max((p[(r, c)] - target).norm());
        }
    }
    worst
}

/// Largest entrywise modulus of `a - b`.
pub fn max_entry_difference(a: &CMatrix, b: &CMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape(), "matrix shapes differ");
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Hermitian inner product of two equal-length slices, conjugating `a`.
pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(v: &[C64]) -> f64 {
    libm::sqrt(v.iter().map(|x| x.norm_sqr()).sum())
}

/// Modified Gram-Schmidt: orthonormalizes `v` against `basis` and returns it,
/// or `None` when the remainder is numerically zero.
pub fn orthonormalize_against(mut v: alloc::vec::Vec<C64>, basis: &[alloc::vec::Vec<C64>], tol: f64) -> Option<alloc::vec::Vec<C64>> {
    // Two passes keep the result orthogonal to ~1e-15 even for nearly dependent inputs.
    for _ in 0..2 {
        for b in basis {
            let p = dot(b, &v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= p * y;
            }
        }
    }
    let n = norm(&v);
    if n <= tol {
        return None;
    }
    for x in v.iter_mut() {
        *x /= n;
    }
    Some(v)
}

/// Builds a 2^n x 2^n matrix from columns, checking it is unitary.
pub fn matrix_from_columns(columns: &[alloc::vec::Vec<C64>]) -> Result<CMatrix> {
    let dim = columns.len();
    if columns.iter().any(|c| c.len() != dim) {
        return Err(argument!("expected {dim} columns of length {dim}"));
    }
    Ok(CMatrix::from_fn(dim, dim, |r, c| columns[c][r]))
}

pub(crate) fn is_power_of_two_len(len: usize) -> Option<usize> {
    if len == 0 || !len.is_power_of_two() {
        None
    } else {
        Some(len.trailing_zeros() as usize)
    }
}

/// Pure-state trace distance sqrt(1 - |ov|^2).
///
/// Near |ov| = 1 the direct formula cancels catastrophically, so the squared
/// distance between phase-aligned vectors is used instead:
/// 1 - |ov|^2 = (d/2)(2 - d/2) with d = |a - e^{i arg ov} b|^2.
pub fn pure_trace_distance(overlap: C64, aligned_sq_distance: impl FnOnce() -> f64) -> f64 {
    let m = overlap.norm();
    let value = if m > 0.5 {
        let d = aligned_sq_distance();
        (d / 2.0) * (2.0 - d / 2.0)
    } else {
        1.0 - m * m
    };
    libm::sqrt(value.clamp(0.0, 1.0))
}
