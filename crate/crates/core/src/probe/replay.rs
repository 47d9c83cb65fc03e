//! Diagnostics of the length argument evaluated on a concrete map.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::{polygon_vertical_cut, PlaneMap};
use crate::bounds::{alpha_limit, q_value};
use crate::curves::{
    nice_rectangles, projection_disjointness, triangle_chain, ChainReport, DisjointnessReport, EdgeMapSample,
    Interval, NiceReport, Polyline,
};
use crate::density::DensitySpec;
use crate::exact::to_f64;
use crate::geometry::Point;
use crate::{Error, Result};

/// Boundary samples per square side.
const SIDE_SAMPLES: usize = 8;
/// Abscissae per cut average.
const CUT_SAMPLES: usize = 32;

/// A horizontal edge `origin + [0, Nh] × {0}` covered by `N` squares of side `h`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EdgeSelection {
    pub origin: Point<f64>,
    pub n: usize,
    pub h: f64,
}

impl EdgeSelection {
    pub fn new(origin: Point<f64>, n: usize, h: f64) -> Result<Self> {
        if n == 0 || !n.is_multiple_of(7) {
            return Err(Error::Precondition(format!("N = {n} is not a positive multiple of 7")));
        }
        if !(h > 0.0) {
            return Err(Error::Precondition(format!("h = {h} must be positive")));
        }
        Ok(Self { origin, n, h })
    }

    /// Bottom side of the root's outer ring: `n_2` squares of side `1/n_2`.
    pub fn root_bottom(spec: &DensitySpec) -> Result<Self> {
        let n = *spec
            .params()
            .branching
            .first()
            .ok_or_else(|| Error::Precondition("depth 1 has no ring squares".into()))?;
        Self::new(Point::new(0.0, 0.0), n as usize, 1.0 / n as f64)
    }

    fn point(&self, squares: f64, heights: f64) -> Point<f64> {
        Point::new(self.origin.x + squares * self.h, self.origin.y + heights * self.h)
    }

    /// Counterclockwise boundary samples of `[x0, x1] × [y0, y1]` in units of `h`.
    fn rect_boundary(&self, x0: f64, y0: f64, x1: f64, y1: f64) -> Vec<Point<f64>> {
        let nx = (((x1 - x0) * SIDE_SAMPLES as f64).round() as usize).max(1);
        let ny = (((y1 - y0) * SIDE_SAMPLES as f64).round() as usize).max(1);
        let lerp = |a: f64, b: f64, k: usize, n: usize| a + (b - a) * k as f64 / n as f64;
        let mut pts = Vec::with_capacity(2 * (nx + ny));
        pts.extend((0..nx).map(|k| self.point(lerp(x0, x1, k, nx), y0)));
        pts.extend((0..ny).map(|k| self.point(x1, lerp(y0, y1, k, ny))));
        pts.extend((0..nx).map(|k| self.point(lerp(x1, x0, k, nx), y1)));
        pts.extend((0..ny).map(|k| self.point(x0, lerp(y1, y0, k, ny))));
        pts
    }

    fn segment(&self, from: (f64, f64), to: (f64, f64)) -> Vec<Point<f64>> {
        let len = ((to.0 - from.0).abs() + (to.1 - from.1).abs()).max(1e-300);
        let n = ((len * SIDE_SAMPLES as f64).round() as usize).max(1);
        (0..=n)
            .map(|k| {
                let t = k as f64 / n as f64;
                self.point(from.0 + (to.0 - from.0) * t, from.1 + (to.1 - from.1) * t)
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockDiagnostics {
    pub block: usize,
    pub nice: bool,
    pub disjointness: DisjointnessReport,
    /// `v_i = |π_x(φ(T))|` for the middle core, against `2Kδh`.
    pub v: f64,
    pub v_bound: f64,
    /// Measure of the middle square's projection not covered by core projections.
    pub c: f64,
    pub c_bound: f64,
    /// Mean cut length over `V_i` and over `C_i`.
    pub h_v: f64,
    pub h_c: Option<f64>,
    pub h_v_bound: f64,
    pub h_c_bound: f64,
    /// Abscissae of the longest cut over `V_i` and the shortest over `C_i`.
    pub x_i: f64,
    pub y_i: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct ReplayDiagnostics {
    pub N: usize,
    pub h: f64,
    pub K: f64,
    pub alpha: f64,
    pub delta: f64,
    pub gamma: f64,
    pub nice: NiceReport,
    pub blocks: Vec<BlockDiagnostics>,
    /// Chain over nice blocks where all four cut points exist.
    pub chain: ChainReport,
    pub chain_blocks: usize,
    /// Vertical length of the sampled image of the whole boundary of `R`.
    pub boundary_vl: f64,
    pub q: Option<f64>,
    pub Delta: Option<f64>,
    pub Omega: Option<f64>,
    /// `Kb√(α(2−α))` and the measured vertical length of `φ(ab)`.
    pub base_vl_bound: f64,
    pub base_vl: f64,
    /// `√(Ω² + (Kb(1−α))²)` when `Ω > 0`, else `Kb(1−α)`.
    pub length_lower: f64,
    /// `K(N+2)h`.
    pub length_upper: f64,
    pub length_p: f64,
    pub vl_p: f64,
    pub notes: Vec<String>,
}

impl ReplayDiagnostics {
    pub fn omega_positive(&self) -> bool {
        self.Omega.is_some_and(|o| o > 0.0)
    }

    /// Lower bound exceeds the upper bound: the map cannot be `K`-bilipschitz.
    pub fn contradiction(&self) -> bool {
        self.omega_positive() && self.length_lower > self.length_upper
    }

    pub fn rows(&self) -> Vec<(String, String)> {
        let opt = |v: Option<f64>| v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.15e}"));
        let f = |v: f64| format!("{v:.15e}");
        let mut rows = vec![
            ("N".into(), self.N.to_string()),
            ("h".into(), f(self.h)),
            ("K".into(), f(self.K)),
            ("alpha".into(), f(self.alpha)),
            ("delta".into(), f(self.delta)),
            ("gamma".into(), f(self.gamma)),
            ("nice_count".into(), self.nice.count().to_string()),
            ("blocks".into(), self.nice.blocks.to_string()),
            ("global_premise".into(), self.nice.global_premise.to_string()),
            ("stretch_premise".into(), self.nice.stretch_premise.to_string()),
            ("nice_claim".into(), self.nice.claim().map_or("n/a".into(), |c| c.to_string())),
            ("chain_blocks".into(), self.chain_blocks.to_string()),
            ("chain_lhs".into(), f(self.chain.lhs)),
            ("chain_rhs".into(), f(self.chain.rhs)),
            ("boundary_vl".into(), f(self.boundary_vl)),
            ("q".into(), opt(self.q)),
            ("Delta".into(), opt(self.Delta)),
            ("Omega".into(), opt(self.Omega)),
            ("base_vl".into(), f(self.base_vl)),
            ("base_vl_bound".into(), f(self.base_vl_bound)),
            ("length_P".into(), f(self.length_p)),
            ("vl_P".into(), f(self.vl_p)),
            ("length_lower".into(), f(self.length_lower)),
            ("length_upper".into(), f(self.length_upper)),
            ("contradiction".into(), self.contradiction().to_string()),
        ];
        for b in &self.blocks {
            let p = format!("block{}_", b.block);
            rows.push((format!("{p}nice"), b.nice.to_string()));
            rows.push((format!("{p}disjoint"), b.disjointness.disjoint().to_string()));
            rows.push((format!("{p}v"), f(b.v)));
            rows.push((format!("{p}v_bound"), f(b.v_bound)));
            rows.push((format!("{p}c"), f(b.c)));
            rows.push((format!("{p}c_bound"), f(b.c_bound)));
            rows.push((format!("{p}h_v"), f(b.h_v)));
            rows.push((format!("{p}h_v_bound"), f(b.h_v_bound)));
            rows.push((format!("{p}h_c"), opt(b.h_c)));
            rows.push((format!("{p}h_c_bound"), f(b.h_c_bound)));
        }
        for (k, note) in self.notes.iter().enumerate() {
            rows.push((format!("note{k}"), note.clone()));
        }
        rows
    }
}

impl fmt::Display for ReplayDiagnostics {
    /// Two-column CSV.
    fn fmt(&self, out: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(out, "quantity,value")?;
        for (k, v) in self.rows() {
            let v = if v.contains(',') { format!("\"{}\"", v.replace('"', "\"\"")) } else { v };
            writeln!(out, "{k},{v}")?;
        }
        Ok(())
    }
}

/// Lowest crossing of a polyline with the vertical line at `x`.
fn crossing(poly: &[Point<f64>], x: f64) -> Option<Point<f64>> {
    poly.windows(2)
        .filter_map(|w| {
            let (p, q) = (w[0], w[1]);
            let (lo, hi) = if p.x <= q.x { (p.x, q.x) } else { (q.x, p.x) };
            if x < lo || x > hi {
                return None;
            }
            let y = if hi > lo { p.y + (x - p.x) * (q.y - p.y) / (q.x - p.x) } else { p.y.min(q.y) };
            Some(Point::new(x, y))
        })
        .min_by(|a, b| a.y.total_cmp(&b.y))
}

/// `iv` minus the union of `holes`, as disjoint intervals.
fn subtract(iv: Interval, holes: &[Interval]) -> Vec<Interval> {
    let mut holes: Vec<Interval> = holes.to_vec();
    holes.sort_by(|a, b| a.lo.total_cmp(&b.lo));
    let mut out = Vec::new();
    let mut cursor = iv.lo;
    for hole in holes {
        if hole.lo > cursor {
            out.push(Interval { lo: cursor, hi: hole.lo.min(iv.hi) });
        }
        cursor = cursor.max(hole.hi);
        if cursor >= iv.hi {
            break;
        }
    }
    if cursor < iv.hi {
        out.push(Interval { lo: cursor, hi: iv.hi });
    }
    out.retain(|s| s.hi > s.lo);
    out
}

fn midpoints(iv: Interval, n: usize) -> impl Iterator<Item = f64> {
    (0..n).map(move |k| iv.lo + (iv.hi - iv.lo) * (k as f64 + 0.5) / n as f64)
}

fn polyline(points: Vec<Point<f64>>) -> Result<Polyline<f64>> {
    Polyline::new(points)
}

/// Replays the length argument on `map` restricted to the strip of squares
/// above `edge`. Premise failures are recorded in the diagnostics.
#[allow(non_snake_case)]
pub fn proof_replay(
    map: &dyn PlaneMap,
    spec: &DensitySpec,
    edge: EdgeSelection,
    K: f64,
    alpha: f64,
) -> Result<ReplayDiagnostics> {
    let edge = EdgeSelection::new(edge.origin, edge.n, edge.h)?;
    if !(K >= 1.0) {
        return Err(Error::Precondition(format!("K = {K} must be at least 1")));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Precondition(format!("alpha = {alpha} must lie in (0, 1)")));
    }
    let delta = to_f64(&spec.params().delta);
    let gamma = to_f64(&spec.params().gamma);
    let (n, h) = (edge.n, edge.h);
    let phi = |p: Point<f64>| map.apply(p);
    let mut notes = Vec::new();

    let sample = EdgeMapSample::from_map(n, h, K, alpha, edge.origin, phi);
    let nice = nice_rectangles(&sample)?;
    if !nice.global_premise {
        notes.push("edge is not stretched by more than K(1-alpha)Nh".into());
    }
    if !nice.stretch_premise {
        notes.push("some 7h piece of the edge is stretched beyond 7Kh".into());
    }
    if alpha >= alpha_limit(delta) {
        notes.push(format!("alpha is not below (1-14 delta)/14 = {}", alpha_limit(delta)));
    }
    let q = match q_value(delta, gamma, alpha) {
        Ok(q) if q > 0.0 => Some(q),
        Ok(q) => {
            notes.push(format!("q = {q} is not positive"));
            None
        }
        Err(e) => {
            notes.push(e.to_string());
            None
        }
    };
    let denom = 1.0 - 14.0 * alpha - 14.0 * delta;

    let image = |pts: Vec<Point<f64>>| pts.into_iter().map(phi).collect::<Vec<_>>();
    let core_lo = (1.0 - delta) / 2.0;
    let core_interval = |j: usize| {
        let x = j as f64 + core_lo;
        let pts = image(edge.rect_boundary(x, core_lo, x + delta, core_lo + delta));
        Interval::of_points(&pts).expect("nonempty boundary")
    };

    let mut blocks = Vec::with_capacity(n / 7);
    let (mut u, mut u_prime, mut l, mut l_prime) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for i in 1..=n / 7 {
        let first = 7 * (i - 1);
        let mid = first + 3;
        let square_image = image(edge.rect_boundary(mid as f64, 0.0, mid as f64 + 1.0, 1.0));
        let left = polyline(image(edge.segment((first as f64, 0.0), (first as f64, 1.0))))?;
        let right = polyline(image(edge.segment(((first + 7) as f64, 0.0), ((first + 7) as f64, 1.0))))?;
        let disjointness = projection_disjointness(&sample, &square_image, &left, &right, i)?;

        let v_iv = core_interval(mid);
        let cores: Vec<Interval> = (first..first + 7).map(core_interval).collect();
        let c_parts = subtract(disjointness.square, &cores);
        let c: f64 = c_parts.iter().map(|s| s.hi - s.lo).sum();

        let region = image(edge.rect_boundary(first as f64, 0.0, (first + 7) as f64, 1.0));
        let cut = |x: f64| polygon_vertical_cut(&region, x);
        let v_cuts: Vec<(f64, f64)> = midpoints(v_iv, CUT_SAMPLES).map(|x| (x, cut(x))).collect();
        let h_v = v_cuts.iter().map(|p| p.1).sum::<f64>() / v_cuts.len() as f64;
        let x_i = v_cuts.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0).unwrap_or(v_iv.lo);
        let c_cuts: Vec<(f64, f64)> = c_parts
            .iter()
            .flat_map(|s| {
                let k = ((CUT_SAMPLES as f64 * (s.hi - s.lo) / c).round() as usize).max(1);
                midpoints(*s, k)
            })
            .map(|x| (x, cut(x)))
            .collect();
        let h_c = (!c_cuts.is_empty()).then(|| c_cuts.iter().map(|p| p.1).sum::<f64>() / c_cuts.len() as f64);
        let y_i = c_cuts.iter().min_by(|a, b| a.1.total_cmp(&b.1)).map(|p| p.0);

        if disjointness.nice {
            let bottom = image(edge.segment((first as f64, 0.0), ((first + 7) as f64, 0.0)));
            let top = image(edge.segment((first as f64, 1.0), ((first + 7) as f64, 1.0)));
            if let Some(y) = y_i {
                let pts = (crossing(&bottom, x_i), crossing(&top, x_i), crossing(&bottom, y), crossing(&top, y));
                if let (Some(a), Some(b), Some(c), Some(d)) = pts {
                    u.push(a);
                    u_prime.push(b);
                    l.push(c);
                    l_prime.push(d);
                }
            }
        }
        blocks.push(BlockDiagnostics {
            block: i,
            nice: disjointness.nice,
            disjointness,
            v: v_iv.hi - v_iv.lo,
            v_bound: 2.0 * K * delta * h,
            c,
            c_bound: K * h * denom,
            h_v,
            h_c,
            h_v_bound: (1.0 - gamma) * h / (2.0 * delta * K),
            h_c_bound: 7.0 * gamma * h / (K * denom),
            x_i,
            y_i,
        });
    }
    let chain = triangle_chain(&u, &u_prime, &l, &l_prime)?;

    let nf = n as f64;
    let b = nf * h;
    let base = polyline(image(edge.segment((0.0, 0.0), (nf, 0.0))))?;
    let p_path: Vec<Point<f64>> = [
        edge.segment((0.0, 0.0), (0.0, 1.0)),
        edge.segment((0.0, 1.0), (nf, 1.0))[1..].to_vec(),
        edge.segment((nf, 1.0), (nf, 0.0))[1..].to_vec(),
    ]
    .concat();
    let p_poly = polyline(image(p_path))?;
    let boundary_vl = base.vertical_length() + p_poly.vertical_length();
    let base_vl_bound = K * b * (alpha * (2.0 - alpha)).sqrt();
    let delta_cap = q.map(|q| h / K * q);
    let omega = delta_cap.map(|d| d * nf / 14.0 - base_vl_bound);
    let legs = K * b * (1.0 - alpha);
    let length_lower = match omega {
        Some(o) if o > 0.0 => (o * o + legs * legs).sqrt(),
        _ => legs,
    };

    Ok(ReplayDiagnostics {
        N: n,
        h,
        K,
        alpha,
        delta,
        gamma,
        nice,
        blocks,
        chain_blocks: u.len(),
        chain,
        boundary_vl,
        q,
        Delta: delta_cap,
        Omega: omega,
        base_vl_bound,
        base_vl: base.vertical_length(),
        length_lower,
        length_upper: K * (nf + 2.0) * h,
        length_p: p_poly.length(),
        vl_p: p_poly.vertical_length(),
        notes,
    })
}

/// Length of the two equal legs over a base of length `base` whose apex
/// sits `vl/2` above it.
pub fn isosceles_length(vl: f64, base: f64) -> f64 {
    vl.hypot(base)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bounds::contradiction_holds;
    use crate::exact::rat;
    use crate::hierarchy::ConstructionParams;
    use crate::probe::{AffineMap, FnMap};
    use proptest::prelude::*;

    fn spec() -> DensitySpec {
        DensitySpec::new(ConstructionParams::with_default_branching(rat(1, 28), rat(1, 200), 2)).unwrap()
    }

    #[test]
    fn horizontal_stretch_has_no_contradiction() {
        let k = 2.0;
        let map = AffineMap::diagonal(k, 1.0);
        let edge = EdgeSelection::new(Point::new(0.0, 0.0), 70, 0.01).unwrap();
        let d = proof_replay(&map, &spec(), edge, k, 0.03).unwrap();
        assert!(d.nice.premises_hold());
        assert_eq!(d.nice.count(), 10);
        assert_eq!(d.base_vl, 0.0);
        assert!(!d.omega_positive());
        assert!(!d.contradiction());
        assert!(d.blocks.iter().all(|b| b.disjointness.disjoint() && !b.disjointness.violated()));
        // cores project to width Kδh, half the bound
        for b in &d.blocks {
            assert!((2.0 * b.v - b.v_bound).abs() < 1e-12);
            assert!((b.h_v - 0.01).abs() < 1e-12);
        }
    }

    #[test]
    fn replay_agrees_with_bounds_module() {
        let (k, alpha) = (2.0, 0.001);
        let map = AffineMap::diagonal(k, 1.0);
        let edge = EdgeSelection::new(Point::new(0.0, 0.0), 700, 1.0 / 700.0).unwrap();
        let d = proof_replay(&map, &spec(), edge, k, alpha).unwrap();
        let w = contradiction_holds(1.0 / 28.0, 1.0 / 200.0, k, alpha, 700).unwrap();
        assert!((d.q.unwrap() - w.q).abs() <= 1e-12);
        assert!((d.Delta.unwrap() - w.Delta_per_h * d.h).abs() <= 1e-12);
        assert!((d.Omega.unwrap() - w.Omega_per_h * d.h).abs() <= 1e-12);
        assert!((d.blocks[0].h_v_bound - w.h_v_per_h * d.h).abs() <= 1e-12);
        assert!((d.blocks[0].h_c_bound - w.h_c_per_h * d.h).abs() <= 1e-12);
    }

    /// Stretches by `K` and pushes every square's core up by a sawtooth, so
    /// cores have long cuts and their complement short ones.
    #[test]
    fn rippled_map_chain_arithmetic() {
        let (k, h, n) = (1.5, 1.0 / 140.0, 140usize);
        let delta = 1.0 / 28.0;
        let ripple = move |p: Point<f64>| {
            let s = p.x / h;
            let frac = s - s.floor();
            let dist = (frac - 0.5).abs();
            let bump = if dist < delta / 2.0 { 1.0 } else { (1.0 - (dist - delta / 2.0) * 4.0).max(0.2) };
            Point::new(k * p.x, p.y * bump * 3.0)
        };
        let map = FnMap(ripple);
        let edge = EdgeSelection::new(Point::new(0.0, 0.0), n, h).unwrap();
        let d = proof_replay(&map, &spec(), edge, k, 0.001).unwrap();
        assert_eq!(d.chain_blocks, n / 7);
        assert!(d.chain.holds());
        assert!(d.boundary_vl + 1e-12 >= d.chain.lhs);
        for b in &d.blocks {
            assert!(b.h_v > b.h_c.unwrap());
        }
        let expected_lower = isosceles_length(d.Omega.unwrap().max(0.0), k * n as f64 * h * (1.0 - 0.001));
        assert!((d.length_lower - expected_lower).abs() < 1e-12);
        assert!(d.length_p > d.length_lower);
    }

    #[test]
    fn large_n_makes_omega_positive() {
        let k = 1.2;
        let map = AffineMap::diagonal(k, 1.0);
        let n = 7000;
        let edge = EdgeSelection::new(Point::new(0.0, 0.0), n, 1.0 / n as f64).unwrap();
        let d = proof_replay(&map, &spec(), edge, k, 1e-6).unwrap();
        assert!(d.omega_positive());
        let text = d.to_string();
        assert!(text.starts_with("quantity,value\n"));
        assert!(text.contains("Omega,"));
    }

    #[test]
    fn bad_premises_are_reported() {
        let map = AffineMap::diagonal(1.0, 1.0);
        let edge = EdgeSelection::new(Point::new(0.0, 0.0), 7, 0.1).unwrap();
        let d = proof_replay(&map, &spec(), edge, 3.0, 0.5).unwrap();
        assert!(!d.nice.global_premise);
        assert!(d.q.is_none());
        assert!(!d.notes.is_empty());
        assert!(EdgeSelection::new(Point::new(0.0, 0.0), 8, 0.1).is_err());
    }

    #[test]
    fn subtract_examples() {
        let iv = Interval { lo: 0.0, hi: 10.0 };
        let holes = [Interval { lo: 2.0, hi: 3.0 }, Interval { lo: 2.5, hi: 4.0 }, Interval { lo: 9.0, hi: 12.0 }];
        assert_eq!(subtract(iv, &holes), vec![Interval { lo: 0.0, hi: 2.0 }, Interval { lo: 4.0, hi: 9.0 }]);
        assert!(subtract(iv, &[Interval { lo: -1.0, hi: 11.0 }]).is_empty());
    }

    proptest! {
        #[test]
        fn isosceles_matches_two_segments(vl in 0.0f64..100.0, base in 0.001f64..100.0) {
            let apex = Point::new(base / 2.0, vl / 2.0);
            let brute = Point::new(0.0, 0.0).dist(&apex) + apex.dist(&Point::new(base, 0.0));
            prop_assert!((isosceles_length(vl, base) - brute).abs() <= 1e-12 * brute.max(1.0));
        }
    }
}
