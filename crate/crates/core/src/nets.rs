//! Separated nets drawn from the density, and matching distortion between nets.
//!
//! Placement is a heuristic stand-in for the density-to-net correspondence:
//! serpentine error diffusion of `k²·∫_cell ρ` over an `m × m` grid, at most
//! one point per cell at the cell center. The residual is carried along the
//! path, so the count on any run of consecutive cells is its mass rounded.

use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use pathfinding::prelude::{kuhn_munkres_min, Matrix};
use rstar::RTree;
use serde::{Deserialize, Serialize};

use crate::density::DensitySpec;
use crate::exact::Rational;
use crate::geometry::{Point, Rect};
use crate::{Error, Result};

/// Largest grid the generator will allocate.
pub const MAX_GRID: u64 = 8192;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub scale: u64,
    pub grid: u64,
    /// Occupied cells `(column, row)`; the point sits at the cell center.
    pub cells: Vec<(u32, u32)>,
    pub points: Vec<Point<f64>>,
    pub separation: f64,
    pub covering_radius: f64,
}

impl Net {
    /// Smallest squared distance between occupied cells, in cell units.
    /// At least 1, so the net is `(1/m)`-separated exactly.
    pub fn min_cell_distance_sq(&self) -> Option<u64> {
        let mut cells = self.cells.clone();
        cells.sort_unstable();
        let mut best: Option<u64> = None;
        for (a, &(x, y)) in cells.iter().enumerate() {
            for &(u, v) in &cells[a + 1..] {
                let dx = (u - x) as u64;
                if best.is_some_and(|b| dx * dx >= b) {
                    break;
                }
                let dy = (v as i64 - y as i64).unsigned_abs();
                let d = dx * dx + dy * dy;
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    /// Number of points whose cell lies in `[i0, i1) × [j0, j1)`.
    pub fn count_in(&self, i0: u32, j0: u32, i1: u32, j1: u32) -> usize {
        self.cells.iter().filter(|&&(i, j)| i >= i0 && i < i1 && j >= j0 && j < j1).count()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.x, p.y));
        }
        out
    }
}

/// Smallest `m` with `max ρ · k² ≤ m²`, exactly.
pub fn grid_for_scale(spec: &DensitySpec, depth: usize, k: u64) -> Result<u64> {
    let values = spec.values();
    let max = (1..=depth.min(values.depth()))
        .flat_map(|j| [values.s(j), values.t(j)])
        .max()
        .cloned()
        .ok_or_else(|| Error::Precondition("no level values".into()))?;
    let target = max * Rational::from_integer(BigInt::from(k) * BigInt::from(k));
    let bound = target.ceil().to_integer();
    let mut m = bound.sqrt();
    while Rational::from_integer(&m * &m) < target {
        m += 1;
    }
    m.to_u64().filter(|&m| m <= MAX_GRID).ok_or_else(|| {
        Error::InvalidScale(format!("scale {k} needs a {m}-cell grid, above the limit {MAX_GRID}"))
    })
}

/// Places a net of about `k²` points in the unit square.
pub fn generate_net(spec: &DensitySpec, depth: usize, k: u64) -> Result<Net> {
    if k < 8 {
        return Err(Error::InvalidScale(format!("scale {k} is below 8")));
    }
    let m = grid_for_scale(spec, depth, k)?;
    let grid = spec.grid(m, depth)?;
    let unit = grid.denominator().clone();
    let k2 = BigInt::from(k * k);
    let half = (&unit + 1u32) / 2u32;
    let n = m as usize;

    // residual carried along the serpentine path, in units of 1/unit points
    let mut carry = BigInt::zero();
    let mut cells = Vec::new();
    for j in 0..n {
        for step in 0..n {
            let i = if j % 2 == 0 { step } else { n - 1 - step };
            carry += grid.mass(i as u64, j as u64, i as u64 + 1, j as u64 + 1)? * &k2;
            if carry >= half {
                cells.push((i as u32, j as u32));
                carry -= &unit;
            }
        }
    }
    let points: Vec<Point<f64>> = cells.iter().map(|&(i, j)| cell_center(i, j, m)).collect();
    let (separation, covering_radius) = if points.len() >= 2 {
        let stats = net_stats(&points, &Rect::unit_f64(), 4 * n)?;
        (stats.separation, stats.covering_radius)
    } else {
        (f64::INFINITY, f64::INFINITY)
    };
    Ok(Net { scale: k, grid: m, cells, points, separation, covering_radius })
}

fn cell_center(i: u32, j: u32, m: u64) -> Point<f64> {
    Point::new((i as f64 + 0.5) / m as f64, (j as f64 + 0.5) / m as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetStats {
    pub separation: f64,
    pub covering_radius: f64,
}

/// `r` is the smallest pairwise distance; `R` is the largest distance from
/// a vertex of the `probes × probes` lattice on `domain` to the net.
pub fn net_stats(points: &[Point<f64>], domain: &Rect<f64>, probes: usize) -> Result<NetStats> {
    if points.len() < 2 {
        return Err(Error::Precondition(format!("{} points; need at least 2", points.len())));
    }
    if probes == 0 {
        return Err(Error::Precondition("probe resolution must be positive".into()));
    }
    let tree = RTree::bulk_load(points.iter().map(|p| [p.x, p.y]).collect());
    let separation = points
        .iter()
        .map(|p| {
            // the first neighbour is the point itself
            tree.nearest_neighbor_iter_with_distance_2(&[p.x, p.y]).nth(1).map_or(f64::INFINITY, |(_, d2)| d2.sqrt())
        })
        .fold(f64::INFINITY, f64::min);
    let mut covering_radius: f64 = 0.0;
    for b in 0..=probes {
        for a in 0..=probes {
            let p = [
                domain.x0 + domain.width() * a as f64 / probes as f64,
                domain.y0 + domain.height() * b as f64 / probes as f64,
            ];
            if let Some(q) = tree.nearest_neighbor(&p) {
                covering_radius = covering_radius.max((q[0] - p[0]).hypot(q[1] - p[1]));
            }
        }
    }
    Ok(NetStats { separation, covering_radius })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Matching {
    /// Indices into the subsampled nets: `(a, b)` pairs sorted by `a`.
    pub pairs: Vec<(usize, usize)>,
    /// Subsample positions used from each input.
    pub sample: Vec<usize>,
    pub cost: f64,
    /// `max(max ratio, 1/min ratio)` of matched-pair distances.
    pub constant: f64,
}

/// Squared costs are scaled to integers with this many fractional bits.
const COST_BITS: i32 = 40;

/// Deterministic evenly strided positions `⌊i·n/count⌋`.
pub fn subsample(n: usize, count: usize) -> Vec<usize> {
    if n <= count {
        (0..n).collect()
    } else {
        (0..count).map(|i| i * n / count).collect()
    }
}

/// Minimum squared-Euclidean assignment between two nets of equal size and
/// the distortion of the resulting bijection. An upper-bound heuristic.
pub fn match_distortion(a: &[Point<f64>], b: &[Point<f64>], max_points: usize) -> Result<Matching> {
    if a.len() != b.len() {
        return Err(Error::Structural(format!("nets have {} and {} points", a.len(), b.len())));
    }
    if a.len() < 2 {
        return Err(Error::Precondition("matching needs at least 2 points".into()));
    }
    let sample = subsample(a.len(), max_points.max(2));
    let pa: Vec<Point<f64>> = sample.iter().map(|&k| a[k]).collect();
    let pb: Vec<Point<f64>> = sample.iter().map(|&k| b[k]).collect();
    let n = pa.len();
    let mut extent: f64 = 0.0;
    for p in pa.iter().chain(&pb) {
        extent = extent.max(p.x.abs()).max(p.y.abs());
    }
    let unit = (2f64).powi(COST_BITS) / (8.0 * extent * extent).max(f64::MIN_POSITIVE);
    let weights = Matrix::from_fn(n, n, |(i, j)| {
        let (dx, dy) = (pa[i].x - pb[j].x, pa[i].y - pb[j].y);
        ((dx * dx + dy * dy) * unit).round() as i64
    });
    let (_, assignment) = kuhn_munkres_min(&weights);
    let pairs: Vec<(usize, usize)> = assignment.iter().copied().enumerate().collect();
    let cost = pairs.iter().map(|&(i, j)| pa[i].dist(&pb[j]).powi(2)).sum();
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for x in 0..n {
        for y in x + 1..n {
            let ratio = pb[assignment[x]].dist(&pb[assignment[y]]) / pa[x].dist(&pa[y]);
            hi = hi.max(ratio);
            lo = lo.min(ratio);
        }
    }
    let constant = if lo > 0.0 { hi.max(1.0 / lo).max(1.0) } else { f64::INFINITY };
    Ok(Matching { pairs, sample, cost, constant })
}

/// Exact expected count `k² ∫_E ρ` for a cell-aligned rectangle.
pub fn expected_count(spec: &DensitySpec, depth: usize, net: &Net, cells: (u32, u32, u32, u32)) -> Result<Rational> {
    let grid = spec.grid(net.grid, depth)?;
    let (i0, j0, i1, j1) = cells;
    let mass = grid.mass_rational(i0 as u64, j0 as u64, i1 as u64, j1 as u64)?;
    Ok(mass * Rational::from_integer(BigInt::from(net.scale * net.scale)))
}
