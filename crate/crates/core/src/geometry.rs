//! Plane points, axis-aligned rectangles and the exact coordinate trait.

use std::fmt::Debug;
use std::ops::{Add, Mul, Sub};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Point<T> {
    pub x: T,
    pub y: T,
}

impl<T> Point<T> {
    pub const fn new(x: T, y: T) -> Self {
        Self { x, y }
    }
}

impl Point<f64> {
    pub fn dist(&self, other: &Self) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect<T> {
    pub x0: T,
    pub y0: T,
    pub x1: T,
    pub y1: T,
}

impl<T: Clone + PartialOrd + Sub<Output = T> + Mul<Output = T>> Rect<T> {
    pub fn new(x0: T, y0: T, x1: T, y1: T) -> Self {
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> T {
        self.x1.clone() - self.x0.clone()
    }

    pub fn height(&self) -> T {
        self.y1.clone() - self.y0.clone()
    }

    pub fn area(&self) -> T {
        self.width() * self.height()
    }

    pub fn is_degenerate(&self) -> bool {
        !(self.x0 < self.x1 && self.y0 < self.y1)
    }
}

impl Rect<Rational> {
    pub fn unit() -> Self {
        Self::new(Rational::zero(), Rational::zero(), Rational::one(), Rational::one())
    }
}

impl Rect<f64> {
    pub fn unit_f64() -> Self {
        Self::new(0.0, 0.0, 1.0, 1.0)
    }
}

/// Exact coordinate arithmetic shared by the rational API and the integer
/// lattice engine.
pub trait Coord:
    Clone + Ord + Debug + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self>
{
    /// `self * num / den`; the division must be exact for lattice types.
    fn scale(&self, num: i128, den: i128) -> Self;
    /// `floor(self / unit)` for `unit > 0`.
    fn floor_ratio(&self, unit: &Self) -> i128;
}

impl Coord for i128 {
    fn scale(&self, num: i128, den: i128) -> Self {
        let p = self * num;
        debug_assert_eq!(p % den, 0, "inexact lattice scaling");
        p / den
    }

    fn floor_ratio(&self, unit: &Self) -> i128 {
        self.div_euclid(*unit)
    }
}

impl Coord for Rational {
    fn scale(&self, num: i128, den: i128) -> Self {
        self * Rational::new(num.into(), den.into())
    }

    fn floor_ratio(&self, unit: &Self) -> i128 {
        use num_traits::ToPrimitive;
        (self / unit).floor().to_integer().to_i128().expect("cell index fits i128")
    }
}
