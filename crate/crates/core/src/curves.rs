//! Polylines and the curve estimates used against a bilipschitz edge map:
//! length, vertical length, the up-then-down rearrangement, the ellipse
//! bound and the nice-rectangle bookkeeping along a covered edge.

use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{self, Rational};
use crate::geometry::Point;
use crate::{Error, Result};

/// Coordinates a polyline can carry: doubles or exact rationals.
pub trait Scalar:
    Clone
    + PartialOrd
    + Debug
    + Zero
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn magnitude(&self) -> Self;
    fn to_f64(&self) -> f64;
}

impl Scalar for f64 {
    fn magnitude(&self) -> Self {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

impl Scalar for Rational {
    fn magnitude(&self) -> Self {
        self.abs()
    }

    fn to_f64(&self) -> f64 {
        exact::to_f64(self)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Polyline<T> {
    vertices: Vec<Point<T>>,
}

impl<T: Scalar> Polyline<T> {
    pub fn new(vertices: Vec<Point<T>>) -> Result<Self> {
        if vertices.len() < 2 {
            return Err(Error::Structural(format!("polyline needs 2 vertices, got {}", vertices.len())));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[Point<T>] {
        &self.vertices
    }

    pub fn first(&self) -> &Point<T> {
        &self.vertices[0]
    }

    pub fn last(&self) -> &Point<T> {
        &self.vertices[self.vertices.len() - 1]
    }

    /// Segment vectors in order.
    pub fn segments(&self) -> Vec<Point<T>> {
        self.vertices
            .windows(2)
            .map(|w| Point::new(w[1].x.clone() - w[0].x.clone(), w[1].y.clone() - w[0].y.clone()))
            .collect()
    }

    /// Squared segment lengths; exact for rational polylines.
    pub fn squared_segment_lengths(&self) -> Vec<T> {
        self.segments().into_iter().map(|v| v.x.clone() * v.x + v.y.clone() * v.y).collect()
    }

    pub fn length(&self) -> f64 {
        self.squared_segment_lengths().iter().map(|l| l.to_f64().sqrt()).sum()
    }

    /// `Σ|Δy|`, exact in the coordinate type.
    pub fn vertical_length(&self) -> T {
        self.segments().into_iter().fold(T::zero(), |acc, v| acc + v.y.magnitude())
    }

    pub fn map(&self, f: impl Fn(&Point<T>) -> Point<T>) -> Self {
        Self { vertices: self.vertices.iter().map(f).collect() }
    }
}

/// `(length, vertical length)`.
pub fn lengths<T: Scalar>(poly: &Polyline<T>) -> (f64, T) {
    (poly.length(), poly.vertical_length())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rearrangement<T> {
    pub polyline: Polyline<T>,
    /// End of the ascending phase.
    pub peak: Point<T>,
    /// `peak.y` minus the endpoint height; equals half the vertical length.
    pub peak_height: T,
}

/// Reorders the segments into an ascending run followed by a descending
/// run, keeping input order within each run.
pub fn monotone_rearrange<T: Scalar>(poly: &Polyline<T>) -> Result<Rearrangement<T>> {
    if poly.first().y != poly.last().y {
        return Err(Error::Precondition("endpoints must lie at the same height".into()));
    }
    let segments = poly.segments();
    let (up, down): (Vec<_>, Vec<_>) = segments.into_iter().partition(|v| v.y >= T::zero());
    let mut vertices = vec![poly.first().clone()];
    let mut peak = poly.first().clone();
    let up_len = up.len();
    for (k, v) in up.into_iter().chain(down).enumerate() {
        let p = vertices.last().cloned().unwrap_or_else(|| poly.first().clone());
        let next = Point::new(p.x + v.x, p.y + v.y);
        if k + 1 == up_len {
            peak = next.clone();
        }
        vertices.push(next);
    }
    let peak_height = peak.y.clone() - poly.first().y.clone();
    Ok(Rearrangement { polyline: Polyline { vertices }, peak, peak_height })
}

/// `Kb/2·√(α(2−α))`: semi-minor axis of the ellipse with focal distance
/// `Kb(1−α)` and major axis `Kb`.
pub fn ellipse_semi_minor(k: f64, b: f64, alpha: f64) -> f64 {
    k * b / 2.0 * (alpha * (2.0 - alpha)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VlBoundReport {
    pub endpoints_level: bool,
    pub chord_long_enough: bool,
    pub length_within: bool,
    pub alpha_in_range: bool,
    pub bound: f64,
    pub max_vertex_distance: f64,
    pub vertical_length: f64,
    /// `bound − max_vertex_distance`.
    pub distance_margin: f64,
    /// `2·bound − vertical_length`.
    pub vl_margin: f64,
}

impl VlBoundReport {
    pub fn premises_hold(&self) -> bool {
        self.endpoints_level && self.chord_long_enough && self.length_within && self.alpha_in_range
    }

    pub fn bounds_hold(&self) -> bool {
        self.distance_margin > 0.0 && self.vl_margin > 0.0
    }

    /// Premises hold but a conclusion fails.
    pub fn violated(&self) -> bool {
        self.premises_hold() && !self.bounds_hold()
    }
}

/// Checks that a curve of length at most `Kb` with endpoints farther apart
/// than `Kb(1−α)` stays close to its chord and has small vertical length.
pub fn vl_bound_check<T: Scalar>(poly: &Polyline<T>, k: f64, b: f64, alpha: f64) -> VlBoundReport {
    let (a, z) = (poly.first(), poly.last());
    let base = a.y.to_f64();
    let chord = (z.x.to_f64() - a.x.to_f64()).hypot(z.y.to_f64() - base);
    let bound = ellipse_semi_minor(k, b, alpha);
    let max_vertex_distance =
        poly.vertices().iter().map(|v| (v.y.to_f64() - base).abs()).fold(0.0, f64::max);
    let vertical_length = poly.vertical_length().to_f64();
    VlBoundReport {
        endpoints_level: a.y == z.y,
        chord_long_enough: chord > k * b * (1.0 - alpha),
        length_within: poly.length() <= k * b,
        alpha_in_range: alpha > 0.0 && alpha < 1.0,
        bound,
        max_vertex_distance,
        vertical_length,
        distance_margin: bound - max_vertex_distance,
        vl_margin: 2.0 * bound - vertical_length,
    }
}

/// Images of the lattice points along a covered edge: `bottom[j]` is the
/// image of the `j`-th point of the edge, `top[j]` of the point one square
/// side above it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeMapSample {
    pub n: usize,
    pub h: f64,
    pub bottom: Vec<Point<f64>>,
    pub top: Vec<Point<f64>>,
    pub k: f64,
    pub alpha: f64,
}

impl EdgeMapSample {
    /// Samples `f` on the edge `origin + [0, Nh] × {0}` and one row above.
    pub fn from_map(
        n: usize,
        h: f64,
        k: f64,
        alpha: f64,
        origin: Point<f64>,
        f: impl Fn(Point<f64>) -> Point<f64>,
    ) -> Self {
        let at = |j: usize, dy: f64| f(Point::new(origin.x + j as f64 * h, origin.y + dy));
        Self {
            n,
            h,
            bottom: (0..=n).map(|j| at(j, 0.0)).collect(),
            top: (0..=n).map(|j| at(j, h)).collect(),
            k,
            alpha,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || !self.n.is_multiple_of(7) {
            return Err(Error::Structural(format!("N = {} is not a positive multiple of 7", self.n)));
        }
        if self.bottom.len() != self.n + 1 || self.top.len() != self.n + 1 {
            return Err(Error::Structural(format!(
                "expected {} bottom and top images, got {} and {}",
                self.n + 1,
                self.bottom.len(),
                self.top.len()
            )));
        }
        Ok(())
    }

    pub fn blocks(&self) -> usize {
        self.n / 7
    }

    /// `φ(a_i)` for block `i` in `1..=N/7`.
    pub fn a(&self, i: usize) -> Point<f64> {
        self.bottom[7 * (i - 1)]
    }

    pub fn b(&self, i: usize) -> Point<f64> {
        self.bottom[7 * i]
    }

    pub fn c(&self, i: usize) -> Point<f64> {
        self.top[7 * (i - 1)]
    }

    pub fn d(&self, i: usize) -> Point<f64> {
        self.top[7 * i]
    }

    /// Bottom-left and bottom-right corners of the middle square of block `i`.
    pub fn e(&self, i: usize) -> Point<f64> {
        self.bottom[7 * (i - 1) + 3]
    }

    pub fn f(&self, i: usize) -> Point<f64> {
        self.bottom[7 * (i - 1) + 4]
    }

    pub fn nice_threshold(&self) -> f64 {
        self.k * (1.0 - 2.0 * self.alpha) * 7.0 * self.h
    }

    pub fn is_nice(&self, i: usize) -> bool {
        (self.a(i).x - self.b(i).x).abs() > self.nice_threshold()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NiceReport {
    /// Nice block indices, 1-based.
    pub nice: Vec<usize>,
    pub blocks: usize,
    /// `|π_x(φ(a)) − π_x(φ(b))| > K(1−α)Nh` for the whole edge.
    pub global_premise: bool,
    /// Every `7h` piece of the edge is stretched by at most `7Kh`.
    pub stretch_premise: bool,
}

impl NiceReport {
    pub fn count(&self) -> usize {
        self.nice.len()
    }

    pub fn premises_hold(&self) -> bool {
        self.global_premise && self.stretch_premise
    }

    /// The claim `count > N/14`, checked only under the premises.
    pub fn claim(&self) -> Option<bool> {
        self.premises_hold().then(|| 14 * self.count() > 7 * self.blocks)
    }
}

pub fn nice_rectangles(sample: &EdgeMapSample) -> Result<NiceReport> {
    sample.validate()?;
    let blocks = sample.blocks();
    let nice = (1..=blocks).filter(|&i| sample.is_nice(i)).collect();
    let span = (sample.bottom[sample.n].x - sample.bottom[0].x).abs();
    let global_premise = span > sample.k * (1.0 - sample.alpha) * sample.n as f64 * sample.h;
    // relative slack for rounding in exactly-extremal samples
    let limit = 7.0 * sample.k * sample.h * (1.0 + 1e-12);
    let stretch_premise = (1..=blocks).all(|i| sample.a(i).dist(&sample.b(i)) <= limit);
    Ok(NiceReport { nice, blocks, global_premise, stretch_premise })
}

/// Closed interval `[lo, hi]` on the x-axis.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn of_points<'a>(points: impl IntoIterator<Item = &'a Point<f64>>) -> Option<Self> {
        points.into_iter().fold(None, |acc, p| {
            Some(match acc {
                None => Interval { lo: p.x, hi: p.x },
                Some(iv) => Interval { lo: iv.lo.min(p.x), hi: iv.hi.max(p.x) },
            })
        })
    }

    pub fn around(center: f64, radius: f64) -> Self {
        Self { lo: center - radius, hi: center + radius }
    }

    /// Signed separation: positive when disjoint, negative overlap otherwise.
    pub fn gap(&self, other: &Self) -> f64 {
        (other.lo - self.hi).max(self.lo - other.hi)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisjointnessReport {
    pub block: usize,
    pub nice: bool,
    pub square: Interval,
    pub left_side: Interval,
    pub right_side: Interval,
    pub left_gap: f64,
    pub right_gap: f64,
    /// Gaps between the disks of radius `2Kh` around `φ(f_i)` (resp. `φ(e_i)`)
    /// and of radius `Kh` around `φ(a_i)` (resp. `φ(b_i)`).
    pub surrogate_left_gap: f64,
    pub surrogate_right_gap: f64,
    /// `Kh(1−14α)`.
    pub predicted_gap: f64,
    /// False when `α ≥ 1/14` or the block is not nice; the report is then
    /// informational only.
    pub asserted: bool,
}

impl DisjointnessReport {
    pub fn disjoint(&self) -> bool {
        self.left_gap > 0.0 && self.right_gap > 0.0
    }

    pub fn violated(&self) -> bool {
        let slack = 1e-9 * self.predicted_gap.abs().max(f64::MIN_POSITIVE);
        self.asserted
            && (!self.disjoint()
                || self.surrogate_left_gap < self.predicted_gap - slack
                || self.surrogate_right_gap < self.predicted_gap - slack)
    }
}

/// Compares the x-projection of the image of the middle square of block `i`
/// with those of the images of its two vertical sides.
pub fn projection_disjointness(
    sample: &EdgeMapSample,
    square_image: &[Point<f64>],
    left_side: &Polyline<f64>,
    right_side: &Polyline<f64>,
    i: usize,
) -> Result<DisjointnessReport> {
    sample.validate()?;
    if i == 0 || i > sample.blocks() {
        return Err(Error::Structural(format!("block {i} outside 1..={}", sample.blocks())));
    }
    let square = Interval::of_points(square_image)
        .ok_or_else(|| Error::Structural("empty image of the middle square".into()))?;
    let left = Interval::of_points(left_side.vertices()).unwrap_or(Interval::around(0.0, 0.0));
    let right = Interval::of_points(right_side.vertices()).unwrap_or(Interval::around(0.0, 0.0));
    let kh = sample.k * sample.h;
    let nice = sample.is_nice(i);
    Ok(DisjointnessReport {
        block: i,
        nice,
        square,
        left_side: left,
        right_side: right,
        left_gap: square.gap(&left),
        right_gap: square.gap(&right),
        surrogate_left_gap: Interval::around(sample.f(i).x, 2.0 * kh)
            .gap(&Interval::around(sample.a(i).x, kh)),
        surrogate_right_gap: Interval::around(sample.e(i).x, 2.0 * kh)
            .gap(&Interval::around(sample.b(i).x, kh)),
        predicted_gap: kh * (1.0 - 14.0 * sample.alpha),
        asserted: nice && sample.alpha < 1.0 / 14.0,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainReport {
    /// `Σ(‖u′_i − l′_i‖ + ‖u_i − l_i‖)`
    pub lhs: f64,
    /// `Σ(‖u′_i − u_i‖ − ‖l′_i − l_i‖)`
    pub rhs: f64,
}

impl ChainReport {
    pub fn holds(&self) -> bool {
        self.lhs >= self.rhs - 1e-12 * self.lhs.abs().max(1.0)
    }
}

/// Summed triangle inequalities linking upper and lower point pairs.
pub fn triangle_chain(
    u: &[Point<f64>],
    u_prime: &[Point<f64>],
    l: &[Point<f64>],
    l_prime: &[Point<f64>],
) -> Result<ChainReport> {
    let n = u.len();
    if u_prime.len() != n || l.len() != n || l_prime.len() != n {
        return Err(Error::Structural("point lists differ in length".into()));
    }
    let mut report = ChainReport { lhs: 0.0, rhs: 0.0 };
    for k in 0..n {
        report.lhs += u_prime[k].dist(&l_prime[k]) + u[k].dist(&l[k]);
        report.rhs += u_prime[k].dist(&u[k]) - l_prime[k].dist(&l[k]);
    }
    Ok(report)
}
