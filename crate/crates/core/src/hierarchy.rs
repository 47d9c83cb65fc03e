//! Construction parameters and the exact geometry of the nested squares.
//!
//! A *unit* is a covering square `S′` together with the concentric core
//! `T′` of side `δ·side(S′)`. Refining a unit covers the boundary of `S′`
//! and the boundary of `T′` from inside with rings of `4n−4` squares,
//! `n` per edge with the corner squares shared by two edges. Every ring
//! square becomes a child unit.
//!
//! Squares are half-open, `[x, x+s) × [y, y+s)`, so point location is total.

use std::fmt;

use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{self, int, rat, Rational};
use crate::geometry::{Coord, Point};
use crate::{Error, Result};

/// Full recipe for the finite-depth density.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    pub delta: Rational,
    pub gamma: Rational,
    /// `n_2, …, n_J`: squares per covered edge at each refinement step.
    pub branching: Vec<u64>,
    pub depth: usize,
    pub strict_proof_mode: bool,
}

impl ConstructionParams {
    pub fn new(delta: Rational, gamma: Rational, branching: Vec<u64>, depth: usize) -> Self {
        Self { delta, gamma, branching, depth, strict_proof_mode: false }
    }

    /// Parameters with the schedule from [`default_branching`].
    pub fn with_default_branching(delta: Rational, gamma: Rational, depth: usize) -> Self {
        let branching = default_branching(&delta, &gamma, depth);
        Self::new(delta, gamma, branching, depth)
    }

    pub fn strict(mut self) -> Self {
        self.strict_proof_mode = true;
        self
    }

    /// `n_level` for `level` in `2..=depth`.
    pub fn branching_at(&self, level: usize) -> u64 {
        self.branching[level - 2]
    }

    pub fn validate(&self) -> ValidationReport {
        validate_params(self)
    }
}

/// `n_2` is the smallest multiple of 7 exceeding both `2/(1−δ)` and `4/γ`;
/// every later count doubles (rounded up to a multiple of 7).
///
/// `n > 4/γ` gives `(4n−4)/n² < 4/n < γ`, so every level value stays positive.
pub fn default_branching(delta: &Rational, gamma: &Rational, depth: usize) -> Vec<u64> {
    if depth < 2 {
        return Vec::new();
    }
    let one = Rational::one();
    let mut floor = int(3);
    if delta < &one {
        floor = floor.max(int(2) / (&one - delta));
    }
    if gamma.is_positive() {
        floor = floor.max(int(4) / gamma);
    }
    // smallest multiple of 7 strictly greater than `floor`
    let whole = floor.floor().to_integer().to_u64().unwrap_or(u64::MAX / 4);
    let n = (whole / 7 + 1) * 7;
    let mut out = vec![n];
    for _ in 3..=depth {
        let doubled = 2 * out.last().copied().unwrap_or(n);
        out.push(doubled.div_ceil(7) * 7);
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Invariant {
    DeltaRange,
    GammaRange,
    DepthPositive,
    BranchingLength,
    DivisibleBySeven,
    RingFits,
    CoverageBelowGamma,
    LevelContrast,
    StrictDelta,
    StrictGamma,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub invariant: Invariant,
    /// Construction level the check refers to, when it is per level.
    pub level: Option<usize>,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, invariant: Invariant, level: Option<usize>, passed: bool, detail: String) {
        self.checks.push(Check { invariant, level, passed, detail });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let failed: Vec<String> = self
            .failures()
            .map(|c| match c.level {
                Some(l) => format!("{:?} at level {l}: {}", c.invariant, c.detail),
                None => format!("{:?}: {}", c.invariant, c.detail),
            })
            .collect();
        if failed.is_empty() {
            write!(f, "all {} checks passed", self.checks.len())
        } else {
            write!(f, "{}", failed.join("; "))
        }
    }
}

/// `(4n−4)/n²`: area fraction of a ring of `4n−4` squares of side `1/n`.
pub fn ring_area_fraction(n: u64) -> Rational {
    let n = n as i64;
    rat(4 * n - 4, n * n)
}

pub fn validate_params(params: &ConstructionParams) -> ValidationReport {
    let mut report = ValidationReport::default();
    let zero = Rational::zero();
    let one = Rational::one();
    let (delta, gamma) = (&params.delta, &params.gamma);
    let fmt = exact::fraction_string;

    let delta_ok = delta > &zero && delta < &one;
    report.push(Invariant::DeltaRange, None, delta_ok, format!("delta = {}", fmt(delta)));
    let gamma_ok = gamma > &zero && gamma < &one;
    report.push(Invariant::GammaRange, None, gamma_ok, format!("gamma = {}", fmt(gamma)));
    report.push(
        Invariant::DepthPositive,
        None,
        params.depth >= 1,
        format!("depth = {}", params.depth),
    );
    let expected_len = params.depth.saturating_sub(1);
    report.push(
        Invariant::BranchingLength,
        None,
        params.branching.len() == expected_len,
        format!("{} counts given, depth needs {expected_len}", params.branching.len()),
    );

    for (i, &n) in params.branching.iter().enumerate() {
        let level = i + 2;
        report.push(
            Invariant::DivisibleBySeven,
            Some(level),
            n % 7 == 0 && n > 0,
            format!("n_{level} = {n}"),
        );
        if delta_ok {
            let bound = int(2) / (&one - delta);
            report.push(
                Invariant::RingFits,
                Some(level),
                int(n as i64) > bound,
                format!("n_{level} = {n} must exceed 2/(1-delta) = {}", fmt(&bound)),
            );
        }
        if n >= 1 {
            let coverage = ring_area_fraction(n);
            report.push(
                Invariant::CoverageBelowGamma,
                Some(level),
                gamma > &coverage,
                format!("gamma must exceed (4n-4)/n^2 = {}", fmt(&coverage)),
            );
        }
    }

    if delta_ok && gamma_ok {
        let limit = &one - delta * delta;
        report.push(
            Invariant::LevelContrast,
            None,
            gamma < &limit,
            format!("gamma must be below 1 - delta^2 = {}", fmt(&limit)),
        );
    }

    if params.strict_proof_mode {
        let bound = rat(1, 14);
        report.push(
            Invariant::StrictDelta,
            None,
            delta > &zero && delta < &bound,
            format!("delta = {} must lie in (0, 1/14)", fmt(delta)),
        );
        let limit = &one - int(14) * delta;
        report.push(
            Invariant::StrictGamma,
            None,
            gamma > &zero && gamma < &limit,
            format!("gamma must lie in (0, {})", fmt(&limit)),
        );
    }
    report
}

/// `δ = num/den` in lowest terms, small enough for lattice arithmetic.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DeltaRatio {
    pub num: i128,
    pub den: i128,
}

impl DeltaRatio {
    pub fn from_rational(delta: &Rational) -> Result<Self> {
        let num = delta.numer().to_i128().ok_or(Error::Overflow("delta numerator"))?;
        let den = delta.denom().to_i128().ok_or(Error::Overflow("delta denominator"))?;
        Ok(Self { num, den })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Square<T> {
    pub origin: Point<T>,
    pub side: T,
}

impl<T: Coord> Square<T> {
    pub fn new(origin: Point<T>, side: T) -> Self {
        Self { origin, side }
    }

    pub fn contains(&self, p: &Point<T>) -> bool {
        let o = &self.origin;
        o.x <= p.x
            && p.x < o.x.clone() + self.side.clone()
            && o.y <= p.y
            && p.y < o.y.clone() + self.side.clone()
    }

    pub fn area(&self) -> T {
        self.side.clone() * self.side.clone()
    }

    pub fn max_x(&self) -> T {
        self.origin.x.clone() + self.side.clone()
    }

    pub fn max_y(&self) -> T {
        self.origin.y.clone() + self.side.clone()
    }

    /// Square with the same center and `δ` times the side.
    pub fn concentric(&self, delta: DeltaRatio) -> Self {
        let offset = self.side.scale(delta.den - delta.num, 2 * delta.den);
        Self {
            origin: Point::new(self.origin.x.clone() + offset.clone(), self.origin.y.clone() + offset),
            side: self.side.scale(delta.num, delta.den),
        }
    }

    /// Interiors intersect.
    pub fn overlaps(&self, other: &Self) -> bool {
        self.origin.x < other.max_x()
            && other.origin.x < self.max_x()
            && self.origin.y < other.max_y()
            && other.origin.y < self.max_y()
    }

    /// `other` lies inside `self` (closed containment).
    pub fn encloses(&self, other: &Self) -> bool {
        self.origin.x <= other.origin.x
            && self.origin.y <= other.origin.y
            && other.max_x() <= self.max_x()
            && other.max_y() <= self.max_y()
    }
}

impl Square<Rational> {
    pub fn to_f64(&self) -> Square<f64> {
        Square {
            origin: Point::new(exact::to_f64(&self.origin.x), exact::to_f64(&self.origin.y)),
            side: exact::to_f64(&self.side),
        }
    }
}

/// A covering square `S′` and its concentric core `T′`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Unit<T> {
    pub square: Square<T>,
    pub core: Square<T>,
}

impl<T: Coord> Unit<T> {
    pub fn new(square: Square<T>, delta: DeltaRatio) -> Self {
        let core = square.concentric(delta);
        Self { square, core }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Ring {
    /// Along the boundary of `S′`.
    Outer,
    /// Along the boundary of `T′`, inside `T′`.
    Inner,
}

/// Result of locating a point inside a unit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Region {
    OuterRing(usize),
    InnerRing(usize),
    /// `T′` minus its ring.
    TCore,
    /// `S′` minus `T′` minus the outer ring.
    SAnnulus,
}

/// Grid cell `(i, j)` of ring square `index`, counterclockwise from the
/// lower-left corner.
pub fn ring_cell(index: usize, n: usize) -> (usize, usize) {
    debug_assert!(index < 4 * n - 4);
    if index < n {
        (index, 0)
    } else if index < 2 * n - 1 {
        (n - 1, index - (n - 1))
    } else if index < 3 * n - 2 {
        (n - 1 - (index - (2 * n - 2)), n - 1)
    } else {
        (0, n - 1 - (index - (3 * n - 3)))
    }
}

/// Inverse of [`ring_cell`]; `None` for interior cells.
pub fn ring_index(i: usize, j: usize, n: usize) -> Option<usize> {
    if j == 0 {
        Some(i)
    } else if i == n - 1 {
        Some(n - 1 + j)
    } else if j == n - 1 {
        Some(2 * n - 2 + (n - 1 - i))
    } else if i == 0 {
        Some(3 * n - 3 + (n - 1 - j))
    } else {
        None
    }
}

fn check_branching(n: u64) -> Result<usize> {
    if n < 3 {
        return Err(Error::InvalidBranching { n });
    }
    Ok(n as usize)
}

/// Ring square `index` of the ring along the boundary of `parent`.
pub fn ring_square<T: Coord>(parent: &Square<T>, n: usize, index: usize) -> Square<T> {
    let (i, j) = ring_cell(index, n);
    let cell = parent.side.scale(1, n as i128);
    Square::new(
        Point::new(
            parent.origin.x.clone() + cell.scale(i as i128, 1),
            parent.origin.y.clone() + cell.scale(j as i128, 1),
        ),
        cell,
    )
}

/// The `4n−4` squares of side `side/n` covering the boundary of `parent`
/// from inside, counterclockwise from the lower-left corner square.
pub fn ring_layout<T: Coord>(parent: &Square<T>, n: u64) -> Result<Vec<Square<T>>> {
    let n = check_branching(n)?;
    Ok((0..4 * n - 4).map(|k| ring_square(parent, n, k)).collect())
}

fn grid_cell<T: Coord>(p: &Point<T>, square: &Square<T>, n: usize) -> (usize, usize) {
    let dx = (p.x.clone() - square.origin.x.clone()).scale(n as i128, 1);
    let dy = (p.y.clone() - square.origin.y.clone()).scale(n as i128, 1);
    (dx.floor_ratio(&square.side) as usize, dy.floor_ratio(&square.side) as usize)
}

/// Locates `p` inside `unit` refined with `n` squares per edge.
pub fn locate<T: Coord>(p: &Point<T>, unit: &Unit<T>, n: u64) -> Result<Region> {
    let n = check_branching(n)?;
    if !unit.square.contains(p) {
        return Err(Error::OutOfDomain(format!("{p:?} is outside {:?}", unit.square)));
    }
    let (i, j) = grid_cell(p, &unit.square, n);
    if let Some(k) = ring_index(i, j, n) {
        return Ok(Region::OuterRing(k));
    }
    if unit.core.contains(p) {
        let (i, j) = grid_cell(p, &unit.core, n);
        return Ok(match ring_index(i, j, n) {
            Some(k) => Region::InnerRing(k),
            None => Region::TCore,
        });
    }
    Ok(Region::SAnnulus)
}

/// The `8n−8` child units: outer ring first, then inner ring, each in
/// ring index order.
pub fn unit_children<T: Coord>(unit: &Unit<T>, n: u64, delta: DeltaRatio) -> Result<Vec<Unit<T>>> {
    let outer = ring_layout(&unit.square, n)?;
    let inner = ring_layout(&unit.core, n)?;
    Ok(outer.into_iter().chain(inner).map(|sq| Unit::new(sq, delta)).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Step {
    pub ring: Ring,
    pub index: usize,
}

/// Path from the root unit to a unit of the hierarchy.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct UnitAddress {
    pub path: Vec<Step>,
}

impl UnitAddress {
    pub fn root() -> Self {
        Self::default()
    }

    pub fn child(&self, ring: Ring, index: usize) -> Self {
        let mut path = self.path.clone();
        path.push(Step { ring, index });
        Self { path }
    }

    /// Construction step at which the unit was introduced (root: 1).
    pub fn birth_level(&self) -> usize {
        self.path.len() + 1
    }
}

impl fmt::Display for UnitAddress {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "root")?;
        for step in &self.path {
            let tag = match step.ring {
                Ring::Outer => 'o',
                Ring::Inner => 'i',
            };
            write!(f, "/{tag}{}", step.index)?;
        }
        Ok(())
    }
}

/// Exact geometry of one parameter set: address resolution and the common
/// denominator of all square coordinates.
#[derive(Clone, Debug)]
pub struct Hierarchy {
    delta: DeltaRatio,
    branching: Vec<u64>,
    depth: usize,
}

impl Hierarchy {
    pub fn new(params: &ConstructionParams) -> Result<Self> {
        for &n in &params.branching {
            check_branching(n)?;
        }
        if params.branching.len() + 1 < params.depth {
            return Err(Error::Structural(format!(
                "depth {} needs {} branching counts",
                params.depth,
                params.depth - 1
            )));
        }
        Ok(Self {
            delta: DeltaRatio::from_rational(&params.delta)?,
            branching: params.branching.clone(),
            depth: params.depth,
        })
    }

    pub fn delta(&self) -> DeltaRatio {
        self.delta
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Branching used to refine a unit born at step `birth` (`n_{birth+1}`).
    pub fn refinement(&self, birth: usize) -> u64 {
        self.branching[birth - 1]
    }

    pub fn root(&self) -> Unit<Rational> {
        Unit::new(Square::new(Point::new(int(0), int(0)), int(1)), self.delta)
    }

    /// Resolves an address to its exact unit.
    pub fn unit(&self, address: &UnitAddress) -> Result<Unit<Rational>> {
        if address.path.len() >= self.depth {
            return Err(Error::Structural(format!(
                "address {address} is deeper than depth {}",
                self.depth
            )));
        }
        let mut unit = self.root();
        for (level, step) in address.path.iter().enumerate() {
            let n = self.refinement(level + 1) as usize;
            if step.index >= 4 * n - 4 {
                return Err(Error::Structural(format!(
                    "ring index {} out of range for n = {n}",
                    step.index
                )));
            }
            let parent = match step.ring {
                Ring::Outer => &unit.square,
                Ring::Inner => &unit.core,
            };
            unit = Unit::new(ring_square(parent, n, step.index), self.delta);
        }
        Ok(unit)
    }

    /// `2·q^J·∏ n_j` for `δ = p/q`: every square coordinate up to the full
    /// depth is an integer multiple of its reciprocal.
    pub fn lattice_denominator(&self) -> Result<i128> {
        let mut d: i128 = 2;
        for _ in 0..self.depth {
            d = d.checked_mul(self.delta.den).ok_or(Error::Overflow("lattice denominator"))?;
        }
        for &n in self.branching.iter().take(self.depth.saturating_sub(1)) {
            d = d.checked_mul(n as i128).ok_or(Error::Overflow("lattice denominator"))?;
        }
        Ok(d)
    }

    /// Number of units of each birth level, `1, 8n_2−8, …`.
    pub fn unit_counts(&self) -> Vec<u128> {
        let mut counts = vec![1u128];
        for level in 2..=self.depth {
            let n = self.branching[level - 2] as u128;
            let prev = *counts.last().unwrap_or(&1);
            counts.push(prev * (8 * n - 8));
        }
        counts
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sq(x: i64, y: i64, side: i64) -> Square<i128> {
        Square::new(Point::new(x as i128, y as i128), side as i128)
    }

    #[test]
    fn ring_cell_and_index_are_inverse() {
        for n in 3..12 {
            for k in 0..4 * n - 4 {
                let (i, j) = ring_cell(k, n);
                assert_eq!(ring_index(i, j, n), Some(k), "n={n} k={k}");
            }
            assert_eq!(ring_index(1, 1, n), None);
        }
    }

    #[test]
    fn ring_layout_counts_and_corners() {
        let ring = ring_layout(&sq(0, 0, 70), 7).unwrap();
        assert_eq!(ring.len(), 24);
        assert_eq!(ring[0].origin, Point::new(0, 0));
        assert_eq!(ring[6].origin, Point::new(60, 0));
        assert_eq!(ring[12].origin, Point::new(60, 60));
        assert_eq!(ring[18].origin, Point::new(0, 60));
        assert!(ring.iter().all(|s| s.side == 10));
        for (a, sa) in ring.iter().enumerate() {
            for sb in &ring[a + 1..] {
                assert!(!sa.overlaps(sb));
            }
        }
        // each edge touched by exactly n squares
        let bottom = ring.iter().filter(|s| s.origin.y == 0).count();
        let left = ring.iter().filter(|s| s.origin.x == 0).count();
        assert_eq!((bottom, left), (7, 7));
    }

    #[test]
    fn ring_layout_rejects_small_n() {
        assert!(matches!(ring_layout(&sq(0, 0, 6), 2), Err(Error::InvalidBranching { n: 2 })));
    }

    #[test]
    fn ring_layout_is_scale_equivariant() {
        let unit = ring_layout(&Square::new(Point::new(int(0), int(0)), int(1)), 7).unwrap();
        let scaled = ring_layout(&Square::new(Point::new(int(0), int(0)), rat(1, 3)), 7).unwrap();
        assert_eq!(scaled[0].origin, Point::new(int(0), int(0)));
        for (a, b) in unit.iter().zip(&scaled) {
            assert_eq!(&a.side * rat(1, 3), b.side);
            assert_eq!(&a.origin.x * rat(1, 3), b.origin.x);
        }
    }

    #[test]
    fn locate_examples() {
        let delta = DeltaRatio { num: 1, den: 3 };
        let unit = Unit::new(Square::new(Point::new(int(0), int(0)), int(1)), delta);
        let n = 7;
        let center = Point::new(rat(1, 2), rat(1, 2));
        assert_eq!(locate(&center, &unit, n).unwrap(), Region::TCore);
        let origin = Point::new(int(0), int(0));
        assert_eq!(locate(&origin, &unit, n).unwrap(), Region::OuterRing(0));
        // bottom-edge square containing x = 1/2 is cell 3 of 7
        let p = Point::new(rat(1, 2), rat(1, 14));
        assert_eq!(locate(&p, &unit, n).unwrap(), Region::OuterRing(3));
        let annulus = Point::new(rat(1, 4), rat(1, 2));
        assert_eq!(locate(&annulus, &unit, n).unwrap(), Region::SAnnulus);
        let inner = Point::new(rat(1, 3), rat(1, 2));
        assert!(matches!(locate(&inner, &unit, n).unwrap(), Region::InnerRing(_)));
        assert!(locate(&Point::new(int(1), rat(1, 2)), &unit, n).is_err());
    }

    #[test]
    fn children_sides() {
        let delta = DeltaRatio { num: 1, den: 3 };
        let unit = Unit::new(Square::new(Point::new(int(0), int(0)), int(1)), delta);
        let children = unit_children(&unit, 7, delta).unwrap();
        assert_eq!(children.len(), 48);
        assert!(children[..24].iter().all(|c| c.square.side == rat(1, 7)));
        assert!(children[24..].iter().all(|c| c.square.side == rat(1, 21)));
        assert!(children.iter().all(|c| c.core.side == &c.square.side * rat(1, 3)));
    }

    #[test]
    fn default_branching_schedule() {
        assert_eq!(default_branching(&rat(1, 3), &rat(1, 100), 3), vec![406, 812]);
        assert_eq!(default_branching(&rat(1, 15), &rat(1, 20), 3), vec![84, 168]);
        // 4/gamma exactly a multiple of 7 must be exceeded strictly
        assert_eq!(default_branching(&rat(1, 3), &rat(4, 70), 2), vec![77]);
        assert!(default_branching(&rat(1, 3), &rat(1, 100), 1).is_empty());
    }

    #[test]
    fn validation_examples() {
        let fail = ConstructionParams::new(rat(1, 3), rat(1, 100), vec![7], 2).validate();
        assert!(!fail.passed());
        let bad: Vec<_> = fail.failures().collect();
        assert_eq!(bad.len(), 1);
        assert_eq!(bad[0].invariant, Invariant::CoverageBelowGamma);
        assert_eq!(bad[0].level, Some(2));

        let pass = ConstructionParams::new(rat(1, 3), rat(1, 100), vec![406], 2).validate();
        assert!(pass.passed(), "{pass}");

        let strict = ConstructionParams::new(rat(1, 15), rat(1, 20), vec![84], 2).strict().validate();
        assert!(strict.passed(), "{strict}");

        let not_strict =
            ConstructionParams::new(rat(1, 3), rat(1, 100), vec![406], 2).strict().validate();
        assert!(not_strict.failures().any(|c| c.invariant == Invariant::StrictDelta));
    }

    #[test]
    fn validation_reports_bad_ranges_without_panicking() {
        let r = ConstructionParams::new(int(1), int(2), vec![6, 5], 2).validate();
        let kinds: Vec<_> = r.failures().map(|c| c.invariant).collect();
        assert!(kinds.contains(&Invariant::DeltaRange));
        assert!(kinds.contains(&Invariant::GammaRange));
        assert!(kinds.contains(&Invariant::BranchingLength));
        assert!(kinds.contains(&Invariant::DivisibleBySeven));
    }

    #[test]
    fn address_resolution() {
        let params = ConstructionParams::new(rat(1, 3), rat(1, 100), vec![406, 812], 3);
        let h = Hierarchy::new(&params).unwrap();
        let a = UnitAddress::root().child(Ring::Inner, 0).child(Ring::Outer, 5);
        let u = h.unit(&a).unwrap();
        assert_eq!(u.square.side, rat(1, 3 * 406 * 812));
        assert_eq!(a.birth_level(), 3);
        assert_eq!(a.to_string(), "root/i0/o5");
        assert!(h.unit(&a.child(Ring::Outer, 0)).is_err());
        assert!(h.unit(&UnitAddress::root().child(Ring::Outer, 4 * 406 - 4)).is_err());
        assert_eq!(h.unit_counts(), vec![1, 3240, 3240 * 6488]);
    }
}
