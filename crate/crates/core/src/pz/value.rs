use core::fmt::Debug;
use core::ops::{Add, AddAssign, Mul, Neg, Sub};

use alloc::vec::Vec;
use nalgebra::{Matrix3, Vector3};

/// Element type a polynomial zonotope can carry: scalars, 3-vectors and 3×3
/// matrices. Generators share the center's type, so shape consistency is
/// enforced by the type system.
pub trait PzValue:
    Copy
    + Debug
    + PartialEq
    + Add<Output = Self>
    + Sub<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
    + AddAssign
{
    fn zero() -> Self;

    /// Largest absolute entry.
    fn magnitude(&self) -> f64;

    /// Componentwise absolute value.
    fn abs(&self) -> Self;

    /// Number of scalar entries.
    fn entry_count() -> usize;

    /// Value holding only entry `index` of `self`, zeros elsewhere.
    fn entry_part(&self, index: usize) -> Self;

    fn entry(&self, index: usize) -> f64;

    /// Componentwise maximum.
    fn sup(&self, other: &Self) -> Self;

    fn is_zero_within(&self, tol: f64) -> bool {
        self.magnitude() < tol
    }

    fn entries(&self) -> Vec<f64> {
        (0..Self::entry_count()).map(|i| self.entry(i)).collect()
    }
}

impl PzValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        if *self < 0.0 {
            -*self
        } else {
            *self
        }
    }
    fn abs(&self) -> Self {
        self.magnitude()
    }
    fn entry_count() -> usize {
        1
    }
    fn entry_part(&self, _index: usize) -> Self {
        *self
    }
    fn entry(&self, _index: usize) -> f64 {
        *self
    }
    fn sup(&self, other: &Self) -> Self {
        if *other > *self {
            *other
        } else {
            *self
        }
    }
}

impl PzValue for Vector3<f64> {
    fn zero() -> Self {
        Vector3::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.amax()
    }
    fn abs(&self) -> Self {
        Vector3::abs(self)
    }
    fn entry_count() -> usize {
        3
    }
    fn entry_part(&self, index: usize) -> Self {
        let mut out = Vector3::zeros();
        out[index] = self[index];
        out
    }
    fn entry(&self, index: usize) -> f64 {
        self[index]
    }
    fn sup(&self, other: &Self) -> Self {
        self.sup(other)
    }
}

impl PzValue for Matrix3<f64> {
    fn zero() -> Self {
        Matrix3::zeros()
    }
    fn magnitude(&self) -> f64 {
        self.amax()
    }
    fn abs(&self) -> Self {
        Matrix3::abs(self)
    }
    fn entry_count() -> usize {
        9
    }
    fn entry_part(&self, index: usize) -> Self {
        let mut out = Matrix3::zeros();
        out[index] = self[index];
        out
    }
    fn entry(&self, index: usize) -> f64 {
        self[index]
    }
    fn sup(&self, other: &Self) -> Self {
        self.sup(other)
    }
}
