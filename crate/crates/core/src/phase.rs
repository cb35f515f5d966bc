//! Phase-space carriers: points of `T*M` in universal-cover coordinates and
//! tangent vectors to `T*M`.

use std::ops::{Add, Mul, Sub};

/// A point `(q, p)` of the cotangent bundle. The base coordinates live in the
/// universal cover; `p` holds components in the coordinate coframe `dq_i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CotangentPoint<const D: usize> {
    pub q: [f64; D],
    pub p: [f64; D],
}

/// A tangent vector `(δq, δp)` to `T*M`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseVector<const D: usize> {
    pub dq: [f64; D],
    pub dp: [f64; D],
}

impl<const D: usize> CotangentPoint<D> {
    pub fn new(q: [f64; D], p: [f64; D]) -> Self {
        Self { q, p }
    }

    /// The point of the zero section over `q`.
    pub fn origin(q: [f64; D]) -> Self {
        Self { q, p: [0.0; D] }
    }

    pub fn is_finite(&self) -> bool {
        self.q.iter().chain(self.p.iter()).all(|v| v.is_finite())
    }

    /// `x + h·v`.
    pub fn shifted(&self, v: &PhaseVector<D>, h: f64) -> Self {
        let mut out = *self;
        for i in 0..D {
            out.q[i] += h * v.dq[i];
            out.p[i] += h * v.dp[i];
        }
        out
    }

    /// Fiber scaling `ψ_s(q, p) = (q, s p)`.
    pub fn scale_fiber(&self, s: f64) -> Self {
        let mut out = *self;
        out.p.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// Componentwise difference as a phase vector.
    pub fn delta(&self, other: &Self) -> PhaseVector<D> {
        let mut v = PhaseVector::zero();
        for i in 0..D {
            v.dq[i] = self.q[i] - other.q[i];
            v.dp[i] = self.p[i] - other.p[i];
        }
        v
    }

    /// Largest absolute coordinate difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.delta(other).max_abs()
    }
}

impl<const D: usize> PhaseVector<D> {
    pub fn zero() -> Self {
        Self {
            dq: [0.0; D],
            dp: [0.0; D],
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.dq
            .iter()
            .chain(self.dp.iter())
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    pub fn norm(&self) -> f64 {
        self.dq
            .iter()
            .chain(self.dp.iter())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.dq.iter().chain(self.dp.iter()).all(|v| v.is_finite())
    }
}

impl<const D: usize> Add for PhaseVector<D> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.dq[i] += rhs.dq[i];
            self.dp[i] += rhs.dp[i];
        }
        self
    }
}

impl<const D: usize> Sub for PhaseVector<D> {
    type Output = Self;
    fn sub(mut self, rhs: Self) -> Self {
        for i in 0..D {
            self.dq[i] -= rhs.dq[i];
            self.dp[i] -= rhs.dp[i];
        }
        self
    }
}

impl<const D: usize> Mul<f64> for PhaseVector<D> {
    type Output = Self;
    fn mul(mut self, rhs: f64) -> Self {
        for i in 0..D {
            self.dq[i] *= rhs;
            self.dp[i] *= rhs;
        }
        self
    }
}

pub(crate) fn dot<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm<const D: usize>(a: &[f64; D]) -> f64 {
    dot(a, a).sqrt()
}
