//! Complex 2×2 matrices attached to lattice sites.
//!
//! Everything the pipeline manipulates per site (coin, walk operators W and L,
//! basis change r, connection components, mass) lives in this type. It is a
//! plain value type; no allocation, no BLAS.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2 {
    /// Row-major entries: `e[row][col]`.
    pub e: [[C64; 2]; 2],
}

impl Mat2 {
    pub const fn new(e: [[C64; 2]; 2]) -> Self {
        Mat2 { e }
    }

    pub fn zero() -> Self {
        Mat2::new([[C64::ZERO; 2]; 2])
    }

    pub fn identity() -> Self {
        Mat2::from_diag(C64::ONE, C64::ONE)
    }

    /// diag(1, −1), the third Pauli matrix.
    pub fn sigma3() -> Self {
        Mat2::from_diag(C64::ONE, -C64::ONE)
    }

    /// Anti-diagonal [[0,1],[1,0]], the first Pauli matrix.
    pub fn sigma1() -> Self {
        Mat2::new([[C64::ZERO, C64::ONE], [C64::ONE, C64::ZERO]])
    }

    pub fn from_diag(a: C64, d: C64) -> Self {
        Mat2::new([[a, C64::ZERO], [C64::ZERO, d]])
    }

    pub fn from_real(e: [[f64; 2]; 2]) -> Self {
        Mat2::new([
            [C64::new(e[0][0], 0.0), C64::new(e[0][1], 0.0)],
            [C64::new(e[1][0], 0.0), C64::new(e[1][1], 0.0)],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.e[0][0] + self.e[1][1]
    }

    pub fn det(&self) -> C64 {
        self.e[0][0] * self.e[1][1] - self.e[0][1] * self.e[1][0]
    }

    /// Exact 2×2 inverse. `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat2> {
        let d = self.det();
        if d == C64::ZERO {
            return None;
        }
        let inv = 1.0 / d;
        Some(Mat2::new([
            [self.e[1][1] * inv, -self.e[0][1] * inv],
            [-self.e[1][0] * inv, self.e[0][0] * inv],
        ]))
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Mat2 {
        Mat2::new([
            [self.e[0][0].conj(), self.e[1][0].conj()],
            [self.e[0][1].conj(), self.e[1][1].conj()],
        ])
    }

    /// Diagonal part, off-diagonal entries zeroed.
    pub fn diag_part(&self) -> Mat2 {
        Mat2::from_diag(self.e[0][0], self.e[1][1])
    }

    /// Off-diagonal part, diagonal entries zeroed.
    pub fn offdiag_part(&self) -> Mat2 {
        Mat2::new([[C64::ZERO, self.e[0][1]], [self.e[1][0], C64::ZERO]])
    }

    pub fn mul_vec(&self, v: [C64; 2]) -> [C64; 2] {
        [
            self.e[0][0] * v[0] + self.e[0][1] * v[1],
            self.e[1][0] * v[0] + self.e[1][1] * v[1],
        ]
    }

    pub fn scale(&self, s: C64) -> Mat2 {
        let mut out = *self;
        for row in &mut out.e {
            for x in row {
                *x *= s;
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.e
            .iter()
            .flatten()
            .map(|x| x.norm())
            .fold(0.0, f64::max)
    }

    /// Largest entrywise absolute deviation from `other`.
    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for k in 0..2 {
                out.e[i][k] += rhs.e[i][k];
            }
        }
        out
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let mut out = self;
        for i in 0..2 {
            for k in 0..2 {
                out.e[i][k] -= rhs.e[i][k];
            }
        }
        out
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let a = &self.e;
        let b = &rhs.e;
        Mat2::new([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(-C64::ONE)
    }
}
