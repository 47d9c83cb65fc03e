//! Attempted realizations of the density and what they cost.
//!
//! The Knothe–Rosenblatt map `ψ(x, y) = (F(x), G_c(y))` sends `x` to the
//! cumulative mass left of it and `y` to the cumulative mass below it inside
//! the column strip `c` containing `x`. Within a strip its Jacobian is the
//! density, so `λ(ψ(E)) = ∫_E ρ` up to the strip discretisation and `ψ`
//! itself plays the role of a realization `φ`.

mod replay;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::density::{ratio_f64, DensitySpec};
use crate::exact::{self, Rational};
use crate::geometry::{Point, Rect};
use crate::{Error, Result};

pub use replay::{isosceles_length, proof_replay, BlockDiagnostics, EdgeSelection, ReplayDiagnostics};

/// A map of the plane, evaluated in double precision.
pub trait PlaneMap {
    fn apply(&self, p: Point<f64>) -> Point<f64>;
}

/// `p ↦ A·p + b`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub a: [[f64; 2]; 2],
    pub b: [f64; 2],
}

impl AffineMap {
    pub fn diagonal(sx: f64, sy: f64) -> Self {
        Self { a: [[sx, 0.0], [0.0, sy]], b: [0.0, 0.0] }
    }
}

impl PlaneMap for AffineMap {
    fn apply(&self, p: Point<f64>) -> Point<f64> {
        Point::new(
            self.a[0][0] * p.x + self.a[0][1] * p.y + self.b[0],
            self.a[1][0] * p.x + self.a[1][1] * p.y + self.b[1],
        )
    }
}

/// Adapter for closures.
pub struct FnMap<F>(pub F);

impl<F: Fn(Point<f64>) -> Point<f64>> PlaneMap for FnMap<F> {
    fn apply(&self, p: Point<f64>) -> Point<f64> {
        (self.0)(p)
    }
}

/// Images of the vertex lattice `(i/m, j/m)`, stored row by row from `j = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridMap {
    m: usize,
    images: Vec<Point<f64>>,
}

impl GridMap {
    pub fn from_fn(m: usize, f: impl Fn(Point<f64>) -> Point<f64>) -> Self {
        let images = (0..=m)
            .flat_map(|j| (0..=m).map(move |i| (i, j)))
            .map(|(i, j)| f(Point::new(i as f64 / m as f64, j as f64 / m as f64)))
            .collect();
        Self { m, images }
    }

    pub fn identity(m: usize) -> Self {
        Self::from_fn(m, |p| p)
    }

    pub fn from_images(m: usize, images: Vec<Point<f64>>) -> Result<Self> {
        if m == 0 || images.len() != (m + 1) * (m + 1) {
            return Err(Error::Structural(format!("{} images for resolution {m}", images.len())));
        }
        if images.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(Error::Structural("non-finite image coordinate".into()));
        }
        Ok(Self { m, images })
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn vertex(&self, i: usize, j: usize) -> Point<f64> {
        self.images[j * (self.m + 1) + i]
    }

    /// Counterclockwise image of cell `(i, j)`.
    pub fn cell_quad(&self, i: usize, j: usize) -> [Point<f64>; 4] {
        [self.vertex(i, j), self.vertex(i + 1, j), self.vertex(i + 1, j + 1), self.vertex(i, j + 1)]
    }

    pub fn cell_area(&self, i: usize, j: usize) -> f64 {
        polygon_area(&self.cell_quad(i, j))
    }

    /// Smallest signed cell area; positive when every cell keeps orientation.
    pub fn min_cell_area(&self) -> f64 {
        (0..self.m)
            .flat_map(|j| (0..self.m).map(move |i| (i, j)))
            .map(|(i, j)| self.cell_area(i, j))
            .fold(f64::INFINITY, f64::min)
    }

    /// `i,j,x,y` lines, one per vertex, `j` outer.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("i,j,x,y\n");
        for j in 0..=self.m {
            for i in 0..=self.m {
                let p = self.vertex(i, j);
                out.push_str(&format!("{i},{j},{},{}\n", p.x, p.y));
            }
        }
        out
    }
}

impl PlaneMap for GridMap {
    /// Bilinear interpolation; points outside `[0,1]²` use the nearest cell.
    fn apply(&self, p: Point<f64>) -> Point<f64> {
        let m = self.m as f64;
        let locate = |v: f64| {
            let s = (v * m).clamp(0.0, m);
            let k = (s.floor() as usize).min(self.m - 1);
            (k, s - k as f64)
        };
        let (i, u) = locate(p.x);
        let (j, v) = locate(p.y);
        let [a, b, c, d] = self.cell_quad(i, j);
        let lerp = |p: Point<f64>, q: Point<f64>, t: f64| Point::new(p.x + (q.x - p.x) * t, p.y + (q.y - p.y) * t);
        lerp(lerp(a, b, u), lerp(d, c, u), v)
    }
}

/// Shoelace area, positive for counterclockwise vertex order.
pub fn polygon_area(poly: &[Point<f64>]) -> f64 {
    let n = poly.len();
    0.5 * (0..n)
        .map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            p.x * q.y - q.x * p.y
        })
        .sum::<f64>()
}

/// Length of the intersection of the vertical line at `x` with a closed
/// polygon, by the even-odd rule.
pub fn polygon_vertical_cut(poly: &[Point<f64>], x: f64) -> f64 {
    let n = poly.len();
    let mut ys: Vec<f64> = (0..n)
        .filter_map(|k| {
            let (p, q) = (poly[k], poly[(k + 1) % n]);
            // half-open in x so shared vertices count once
            if (p.x <= x) != (q.x <= x) {
                Some(p.y + (x - p.x) * (q.y - p.y) / (q.x - p.x))
            } else {
                None
            }
        })
        .collect();
    ys.sort_by(f64::total_cmp);
    ys.chunks(2).filter(|c| c.len() == 2).map(|c| c[1] - c[0]).sum()
}

/// Cut length at `x` through the image of the lattice cells
/// `[i0, i1) × [j0, j1)`.
pub fn vertical_cuts(map: &GridMap, cells: (usize, usize, usize, usize), x: f64) -> Result<f64> {
    let (i0, j0, i1, j1) = cells;
    if i1 > map.m || j1 > map.m || i0 > i1 || j0 > j1 {
        return Err(Error::Structural(format!("cell range {cells:?} exceeds resolution {}", map.m)));
    }
    let mut total = 0.0;
    for j in j0..j1 {
        for i in i0..i1 {
            total += polygon_vertical_cut(&map.cell_quad(i, j), x);
        }
    }
    Ok(total)
}

/// Exact masses of the `m × m` lattice cells over a common denominator,
/// indexed `[c·m + j]` for column `c` and row `j`.
#[derive(Clone, Debug)]
pub struct CellMasses {
    m: usize,
    numer: Vec<BigInt>,
    denom: BigInt,
}

impl CellMasses {
    pub fn from_spec(spec: &DensitySpec, depth: usize, m: usize) -> Result<Self> {
        let grid = spec.grid(m as u64, depth)?;
        let mut numer = Vec::with_capacity(m * m);
        for c in 0..m as u64 {
            for j in 0..m as u64 {
                numer.push(grid.mass(c, j, c + 1, j + 1)?);
            }
        }
        Ok(Self { m, numer, denom: grid.denominator().clone() })
    }

    /// Masses from an arbitrary exact cell function `(column, row) ↦ mass`.
    pub fn from_fn(m: usize, f: impl Fn(usize, usize) -> Rational) -> Self {
        let cells: Vec<Rational> =
            (0..m).flat_map(|c| (0..m).map(move |j| (c, j))).map(|(c, j)| f(c, j)).collect();
        let denom = cells.iter().fold(BigInt::from(1), |acc, r| acc.lcm(r.denom()));
        let numer = cells.iter().map(|r| r.numer() * (&denom / r.denom())).collect();
        Self { m, numer, denom }
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn mass(&self, c: usize, j: usize) -> Rational {
        Rational::new(self.numer[c * self.m + j].clone(), self.denom.clone())
    }

    pub fn mass_f64(&self, c: usize, j: usize) -> f64 {
        ratio_f64(&self.numer[c * self.m + j], &self.denom)
    }

    pub fn total(&self) -> Rational {
        Rational::new(self.numer.iter().sum(), self.denom.clone())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `ψ`: pushes `ρλ` to `λ`; Jacobian `ρ`.
    Forward,
    /// `ψ⁻¹`: pushes `λ` to `ρλ`.
    Inverse,
}

/// Lattice data of the coordinatewise rearrangement.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KrTransport {
    m: usize,
    /// `F(k/m)` for `k = 0..=m`.
    marginal: Vec<f64>,
    /// `G_c(j/m)` at `[c·(m+1) + j]`.
    conditional: Vec<f64>,
    pub warnings: Vec<String>,
}

impl KrTransport {
    pub fn new(masses: &CellMasses) -> Result<Self> {
        let m = masses.m;
        let mut marginal = Vec::with_capacity(m + 1);
        let mut conditional = Vec::with_capacity(m * (m + 1));
        let mut running = BigInt::zero();
        marginal.push(0.0);
        for c in 0..m {
            let column = &masses.numer[c * m..(c + 1) * m];
            let strip: BigInt = column.iter().sum();
            if !strip.is_positive() {
                return Err(Error::Precondition(format!("column strip {c} carries no mass")));
            }
            let mut below = BigInt::zero();
            conditional.push(0.0);
            for cell in column {
                below += cell;
                conditional.push(ratio_f64(&below, &strip));
            }
            running += &strip;
            marginal.push(ratio_f64(&running, &masses.denom));
        }
        Ok(Self { m, marginal, conditional, warnings: Vec::new() })
    }

    pub fn from_spec(spec: &DensitySpec, depth: usize, m: usize) -> Result<Self> {
        if m < 8 {
            return Err(Error::Precondition(format!("resolution {m} is below 8")));
        }
        let mut kr = Self::new(&CellMasses::from_spec(spec, depth, m)?)?;
        kr.warnings = resolution_warnings(spec, depth, m);
        Ok(kr)
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn marginal(&self, k: usize) -> f64 {
        self.marginal[k]
    }

    pub fn conditional(&self, c: usize, j: usize) -> f64 {
        self.conditional[c * (self.m + 1) + j]
    }

    fn strip_of(&self, x: f64) -> (usize, f64) {
        let s = (x * self.m as f64).clamp(0.0, self.m as f64);
        let c = (s.floor() as usize).min(self.m - 1);
        (c, s - c as f64)
    }

    fn interp(table: impl Fn(usize) -> f64, k: usize, t: f64) -> f64 {
        table(k) + (table(k + 1) - table(k)) * t
    }

    /// Inverse of a nondecreasing piecewise-linear table on `k/m`.
    fn invert(&self, table: impl Fn(usize) -> f64, v: f64) -> f64 {
        let (mut lo, mut hi) = (0usize, self.m);
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if table(mid) <= v {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let (a, b) = (table(lo), table(lo + 1));
        let t = if b > a { ((v - a) / (b - a)).clamp(0.0, 1.0) } else { 0.0 };
        (lo as f64 + t) / self.m as f64
    }

    /// `ψ(p)`, linear inside each lattice interval.
    pub fn forward(&self, p: Point<f64>) -> Point<f64> {
        let (c, tx) = self.strip_of(p.x);
        let (j, ty) = self.strip_of(p.y);
        Point::new(
            Self::interp(|k| self.marginal[k], c, tx),
            Self::interp(|k| self.conditional(c, k), j, ty),
        )
    }

    pub fn inverse(&self, p: Point<f64>) -> Point<f64> {
        let x = self.invert(|k| self.marginal[k], p.x);
        let (c, _) = self.strip_of(x);
        Point::new(x, self.invert(|k| self.conditional(c, k), p.y))
    }

    /// Strip whose conditional the vertex column `i` reads: the heavier of
    /// its two neighbours, so cells next to a density jump keep their edges
    /// exact on the heavy side.
    pub fn vertex_strip(&self, i: usize) -> usize {
        match i {
            0 => 0,
            i if i >= self.m => self.m - 1,
            i => {
                let left = self.marginal[i] - self.marginal[i - 1];
                let right = self.marginal[i + 1] - self.marginal[i];
                if left > right { i - 1 } else { i }
            }
        }
    }

    /// Lattice sampling of the strip-wise map.
    pub fn grid_map(&self, direction: Direction) -> GridMap {
        let m = self.m;
        match direction {
            Direction::Forward => {
                let images = (0..=m)
                    .flat_map(|j| (0..=m).map(move |i| (i, j)))
                    .map(|(i, j)| Point::new(self.marginal[i], self.conditional(self.vertex_strip(i), j)))
                    .collect();
                GridMap { m, images }
            }
            Direction::Inverse => GridMap::from_fn(m, |p| self.inverse(p)),
        }
    }

    /// Compares each forward cell image area with the cell mass.
    pub fn mass_audit(&self, masses: &CellMasses) -> MassAudit {
        let grid = self.grid_map(Direction::Forward);
        let m = self.m;
        let (mut sum, mut max, mut worst) = (0.0, 0.0f64, (0, 0));
        for c in 0..m {
            for j in 0..m {
                let err = (grid.cell_area(c, j) - masses.mass_f64(c, j)).abs();
                sum += err;
                if err > max {
                    max = err;
                    worst = (c, j);
                }
            }
        }
        MassAudit { resolution: m, total_error: sum, max_cell_error: max, worst_cell: worst }
    }
}

/// Pushforward audit of a lattice map: `Σ|λ(ψ(cell)) − ∫_cell ρ|` is the
/// total-variation distance between the pushed measure (per cell) and `λ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MassAudit {
    pub resolution: usize,
    pub total_error: f64,
    pub max_cell_error: f64,
    pub worst_cell: (usize, usize),
}

/// Notes on features of the density that an `m × m` grid cannot resolve.
pub fn resolution_warnings(spec: &DensitySpec, depth: usize, m: usize) -> Vec<String> {
    let squares: u64 = spec.params().branching.iter().take(depth.saturating_sub(1)).product();
    let delta = &spec.params().delta;
    // smallest core side is δ/squares
    let cores = (Rational::from_integer(squares.into()) / delta).ceil().to_integer();
    if BigInt::from(m) < cores {
        vec![format!("resolution {m} does not resolve the finest cores (side 1/{cores}); accuracy degrades")]
    } else {
        Vec::new()
    }
}

pub fn kr_map(spec: &DensitySpec, depth: usize, m: usize, direction: Direction) -> Result<GridMap> {
    Ok(KrTransport::from_spec(spec, depth, m)?.grid_map(direction))
}

/// Exact `λ(ψ(E))` for the strip-wise rearrangement: on strip `c` the map is
/// the product of the exact marginal and conditional cumulative masses.
#[derive(Clone, Debug)]
pub struct ExactKr<'a> {
    spec: &'a DensitySpec,
    depth: usize,
    m: usize,
    strips: Vec<Rational>,
}

impl<'a> ExactKr<'a> {
    pub fn new(spec: &'a DensitySpec, depth: usize, m: usize) -> Result<Self> {
        let grid = spec.grid(m as u64, depth)?;
        let strips = (0..m as u64)
            .map(|c| grid.mass_rational(c, 0, c + 1, m as u64))
            .collect::<Result<_>>()?;
        Ok(Self { spec, depth, m, strips })
    }

    pub fn image_area(&self, rect: &Rect<Rational>) -> Result<Rational> {
        if rect.is_degenerate() {
            return Ok(Rational::zero());
        }
        let m = Rational::from_integer(BigInt::from(self.m));
        let first = (&rect.x0 * &m).floor().to_integer();
        let last = (&rect.x1 * &m).ceil().to_integer();
        let (first, last) = (to_index(&first, self.m)?, to_index(&last, self.m)?);
        let mut area = Rational::zero();
        for c in first..last.max(first) {
            let lo = Rational::new(BigInt::from(c), BigInt::from(self.m));
            let hi = Rational::new(BigInt::from(c + 1), BigInt::from(self.m));
            let x0 = (&rect.x0).max(&lo).clone();
            let x1 = (&rect.x1).min(&hi).clone();
            if x0 >= x1 {
                continue;
            }
            let zero = Rational::zero();
            let one = Rational::from_integer(1.into());
            let dx = self.spec.integrate(&Rect::new(x0, zero, x1, one), self.depth)?;
            let dy = self.spec.integrate(&Rect::new(lo, rect.y0.clone(), hi, rect.y1.clone()), self.depth)?;
            area += dx * dy / &self.strips[c];
        }
        Ok(area)
    }
}

fn to_index(v: &BigInt, m: usize) -> Result<usize> {
    use num_traits::ToPrimitive;
    v.to_usize()
        .filter(|&k| k <= m)
        .ok_or_else(|| Error::OutOfDomain(format!("strip index {v} outside 0..={m}")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BilipschitzReport {
    pub k_emp: f64,
    pub max_stretch: f64,
    pub min_stretch: f64,
    pub max_pair: (Point<f64>, Point<f64>),
    pub min_pair: (Point<f64>, Point<f64>),
    pub pairs_checked: usize,
    pub seed: u64,
}

/// Extreme distance ratios over all lattice-neighbour pairs and `budget`
/// seeded random vertex pairs.
pub fn empirical_bilipschitz(map: &GridMap, budget: usize, seed: u64) -> BilipschitzReport {
    let m = map.m;
    let step = 1.0 / m as f64;
    let mut report = BilipschitzReport {
        k_emp: 1.0,
        max_stretch: 0.0,
        min_stretch: f64::INFINITY,
        max_pair: (Point::new(0.0, 0.0), Point::new(0.0, 0.0)),
        min_pair: (Point::new(0.0, 0.0), Point::new(0.0, 0.0)),
        pairs_checked: 0,
        seed,
    };
    let domain = |i: usize, j: usize| Point::new(i as f64 * step, j as f64 * step);
    let mut consider = |a: (usize, usize), b: (usize, usize)| {
        let (p, q) = (domain(a.0, a.1), domain(b.0, b.1));
        let ratio = map.vertex(a.0, a.1).dist(&map.vertex(b.0, b.1)) / p.dist(&q);
        report.pairs_checked += 1;
        if ratio > report.max_stretch {
            report.max_stretch = ratio;
            report.max_pair = (p, q);
        }
        if ratio < report.min_stretch {
            report.min_stretch = ratio;
            report.min_pair = (p, q);
        }
    };
    for j in 0..=m {
        for i in 0..=m {
            if i < m {
                consider((i, j), (i + 1, j));
            }
            if j < m {
                consider((i, j), (i, j + 1));
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut drawn = 0;
    while drawn < budget {
        let a = (rng.gen_range(0..=m), rng.gen_range(0..=m));
        let b = (rng.gen_range(0..=m), rng.gen_range(0..=m));
        if a != b {
            consider(a, b);
            drawn += 1;
        }
    }
    report.k_emp = if report.min_stretch > 0.0 {
        report.max_stretch.max(1.0 / report.min_stretch)
    } else {
        f64::INFINITY
    };
    report
}

/// Rational corners of a seeded random rectangle on the grid `(1/den)ℤ²`.
pub fn random_rect(rng: &mut impl Rng, den: i64) -> Rect<Rational> {
    let mut pick = || {
        let a = rng.gen_range(0..den);
        let b = rng.gen_range(0..den);
        let (a, b) = if a == b { (a, a + 1) } else { (a.min(b), a.max(b)) };
        (exact::rat(a, den), exact::rat(b, den))
    };
    let (x0, x1) = pick();
    let (y0, y1) = pick();
    Rect::new(x0, y0, x1, y1)
}
