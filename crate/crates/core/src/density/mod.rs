//! The finite-depth density `ρ_J`: level values, evaluation, integration,
//! constraint verification and rasterisation.
//!
//! On a unit born at step `b < J` the density is `t_{b+1}` on the core `T′`
//! and `s_{b+1}` on the rest of `S′`, outside the ring squares, which carry
//! their own pattern. Units born at step `J` are flat with `(s_1, t_1)`.
//! Every result is exact; floats appear only in the raster output.

mod engine;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::exact::{self, int, Rational};
use crate::geometry::{Point, Rect};
use crate::hierarchy::{
    ring_area_fraction, Check, ConstructionParams, Hierarchy, Invariant, UnitAddress, ValidationReport,
};
use crate::{Error, Result};

use engine::{Engine, EngineData, Int, LRect, VerifyState};

/// `(s_j, t_j)`: density off and on the core for one level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelPair {
    pub s: Rational,
    pub t: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelValues {
    /// Entry `j − 1` holds level `j`.
    pub levels: Vec<LevelPair>,
}

impl LevelValues {
    pub fn s(&self, level: usize) -> &Rational {
        &self.levels[level - 1].s
    }

    pub fn t(&self, level: usize) -> &Rational {
        &self.levels[level - 1].t
    }

    pub fn depth(&self) -> usize {
        self.levels.len()
    }
}

/// Level-1 pair `(γ/(1−δ²), (1−γ)/δ²)`.
pub fn base_level_values(delta: &Rational, gamma: &Rational) -> LevelPair {
    let one = Rational::one();
    let d2 = delta * delta;
    LevelPair { s: gamma / (&one - &d2), t: (&one - gamma) / d2 }
}

/// Pair for a level refined with `n` squares per edge.
///
/// With `a = (4n−4)/n²` the ring squares average exactly 1, so
/// `t·δ²(1−a) + aδ² = 1−γ` and `s(1−δ²−a) + (1−γ) + a = 1`.
pub fn refined_level_values(delta: &Rational, gamma: &Rational, n: u64, level: usize) -> Result<LevelPair> {
    let one = Rational::one();
    let a = ring_area_fraction(n);
    let d2 = delta * delta;
    let t_den = &d2 * (&one - &a);
    let s_den = &one - &d2 - &a;
    let fail = |invariant: Invariant, detail: String| {
        Error::InvalidParams(ValidationReport {
            checks: vec![Check { invariant, level: Some(level), passed: false, detail }],
        })
    };
    if !t_den.is_positive() || !s_den.is_positive() {
        return Err(fail(Invariant::RingFits, format!("ring of n = {n} leaves no room at level {level}")));
    }
    let t = (&one - gamma - &a * &d2) / t_den;
    let s = (gamma - &a) / s_den;
    if !s.is_positive() {
        return Err(fail(
            Invariant::CoverageBelowGamma,
            format!("s_{level} = {} is not positive", exact::fraction_string(&s)),
        ));
    }
    if !t.is_positive() {
        return Err(fail(
            Invariant::LevelContrast,
            format!("t_{level} = {} is not positive", exact::fraction_string(&t)),
        ));
    }
    Ok(LevelPair { s, t })
}

/// `(s_j, t_j)` for `1 ≤ j ≤ J`.
pub fn level_values(params: &ConstructionParams, j: usize) -> Result<(Rational, Rational)> {
    if j == 0 || j > params.depth {
        return Err(Error::Precondition(format!("level {j} outside 1..={}", params.depth)));
    }
    let pair = if j == 1 {
        base_level_values(&params.delta, &params.gamma)
    } else {
        let n = *params
            .branching
            .get(j - 2)
            .ok_or_else(|| Error::Structural(format!("no branching count for level {j}")))?;
        refined_level_values(&params.delta, &params.gamma, n, j)?
    };
    Ok((pair.s, pair.t))
}

pub fn all_level_values(params: &ConstructionParams) -> Result<LevelValues> {
    let levels = (1..=params.depth)
        .map(|j| level_values(params, j).map(|(s, t)| LevelPair { s, t }))
        .collect::<Result<_>>()?;
    Ok(LevelValues { levels })
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DensityBounds {
    pub min: Rational,
    pub min_level: usize,
    pub max: Rational,
    pub max_level: usize,
}

/// Value at a point together with where it came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub value: Rational,
    /// Step at which the innermost unit containing the point was born.
    pub birth_level: usize,
    /// Level whose pair supplies the value.
    pub level: usize,
    pub in_core: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    /// `∫_{S′} ρ = λ(S′)`
    Square,
    /// `∫_{T′} ρ = (1−γ)λ(S′)`
    Core,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub address: UnitAddress,
    pub kind: ConstraintKind,
    pub expected: Rational,
    pub actual: Rational,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub depth: usize,
    pub units_checked: u64,
    pub violation_count: u64,
    /// The first few violations in traversal order.
    pub violations: Vec<Violation>,
}

impl ConstraintReport {
    pub fn passed(&self) -> bool {
        self.violation_count == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RasterMode {
    CenterSample,
    CellAverage,
}

/// `m × m` grid, row-major with row 0 at the top.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Raster {
    pub resolution: usize,
    pub mode: RasterMode,
    pub values: Vec<f64>,
    /// Exact `Σ cell value × cell area`.
    pub total: Rational,
}

impl Raster {
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.resolution + col]
    }
}

/// Runs `$body` on the `i128` engine and repeats it on the `BigInt` engine
/// if the narrow one overflows.
macro_rules! dispatch {
    ($spec:expr, $e:ident => $body:expr) => {{
        let narrow = $spec.narrow.as_ref().map(|$e| (|| -> Result<_> { $body })());
        match narrow {
            Some(Err(Error::Overflow(_))) | None => {
                let $e = &$spec.wide;
                (|| -> Result<_> { $body })()
            }
            Some(res) => res,
        }
    }};
}

fn lattice<I: Int>(v: &BigInt) -> Result<I> {
    I::from_big(v).ok_or(Error::Overflow("lattice arithmetic"))
}

fn lrect<I: Int>(c: &[BigInt; 4]) -> Result<LRect<I>> {
    Ok(LRect { x0: lattice(&c[0])?, y0: lattice(&c[1])?, x1: lattice(&c[2])?, y1: lattice(&c[3])? })
}

/// A validated (or deliberately hand-built) density with its exact engine.
#[derive(Clone, Debug)]
pub struct DensitySpec {
    params: ConstructionParams,
    values: LevelValues,
    hierarchy: Hierarchy,
    lattice: BigInt,
    scale: BigInt,
    unit_mass: Vec<Vec<Rational>>,
    bounds: DensityBounds,
    narrow: Option<Engine<i128>>,
    wide: Engine<BigInt>,
}

impl DensitySpec {
    pub fn new(params: ConstructionParams) -> Result<Self> {
        let report = params.validate();
        if !report.passed() {
            return Err(Error::InvalidParams(report));
        }
        let values = all_level_values(&params)?;
        Self::from_parts(params, values)
    }

    /// Builds a density from arbitrary positive level values without
    /// checking the mass constraints, e.g. to exercise the verifier.
    pub fn from_parts(params: ConstructionParams, values: LevelValues) -> Result<Self> {
        if params.depth == 0 {
            return Err(Error::Precondition("depth must be at least 1".into()));
        }
        if values.depth() != params.depth {
            return Err(Error::Structural(format!(
                "{} level pairs for depth {}",
                values.depth(),
                params.depth
            )));
        }
        if !(params.delta.is_positive() && params.delta < Rational::one()) {
            return Err(Error::Domain(format!("delta = {}", exact::fraction_string(&params.delta))));
        }
        let hierarchy = Hierarchy::new(&params)?;
        let lattice = BigInt::from(hierarchy.lattice_denominator()?);

        let mut scale = params.gamma.denom().clone();
        for pair in &values.levels {
            scale = scale.lcm(pair.s.denom()).lcm(pair.t.denom());
        }
        let scale_r = Rational::from_integer(scale.clone());
        let scaled = |v: &Rational| (v * &scale_r).to_integer();
        let core_target = scaled(&(Rational::one() - &params.gamma));

        let unit_mass = unit_mass_table(&params, &values);
        let engine_mass = unit_mass
            .iter()
            .map(|row| {
                row.iter()
                    .map(|mu| {
                        let v = mu * &scale_r;
                        (v.numer().clone(), v.denom().clone())
                    })
                    .collect()
            })
            .collect();

        let data = EngineData {
            lattice: lattice.clone(),
            delta: hierarchy.delta(),
            branching: params.branching.clone(),
            values: values.levels.iter().map(|p| (scaled(&p.s), scaled(&p.t))).collect(),
            scale: scale.clone(),
            core_target,
            unit_mass: engine_mass,
        };
        let narrow = Engine::<i128>::new(&data).ok();
        let wide = Engine::<BigInt>::new(&data)?;
        let bounds = compute_bounds(&values);
        Ok(Self { params, values, hierarchy, lattice, scale, unit_mass, bounds, narrow, wide })
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn values(&self) -> &LevelValues {
        &self.values
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    pub fn depth(&self) -> usize {
        self.params.depth
    }

    /// `D`: every square coordinate is a multiple of `1/D`.
    pub fn lattice_denominator(&self) -> &BigInt {
        &self.lattice
    }

    /// Average of `ρ_depth` over a unit born at `birth` (1 for valid specs).
    pub fn unit_average(&self, depth: usize, birth: usize) -> Result<Rational> {
        self.check_depth(depth)?;
        if birth == 0 || birth > depth {
            return Err(Error::Precondition(format!("birth level {birth} outside 1..={depth}")));
        }
        Ok(self.unit_mass[depth - 1][birth - 1].clone())
    }

    pub fn density_bounds(&self) -> &DensityBounds {
        &self.bounds
    }

    fn check_depth(&self, depth: usize) -> Result<()> {
        if depth == 0 || depth > self.params.depth {
            return Err(Error::Precondition(format!("depth {depth} outside 1..={}", self.params.depth)));
        }
        Ok(())
    }

    fn pair_value(&self, level: usize, in_core: bool) -> &Rational {
        if in_core {
            self.values.t(level)
        } else {
            self.values.s(level)
        }
    }

    pub fn evaluate(&self, point: &Point<Rational>, depth: usize) -> Result<Evaluation> {
        self.check_depth(depth)?;
        let inside = |v: &Rational| !v.is_negative() && v < &Rational::one();
        if !inside(&point.x) || !inside(&point.y) {
            return Err(Error::OutOfDomain(format!(
                "({}, {}) is not in [0,1)²",
                exact::fraction_string(&point.x),
                exact::fraction_string(&point.y)
            )));
        }
        let d = Rational::from_integer(self.lattice.clone());
        let px = (&point.x * &d).floor().to_integer();
        let py = (&point.y * &d).floor().to_integer();
        self.evaluate_lattice(&px, &py, depth)
    }

    /// Evaluation at the lattice point `(px/D, py/D)`, which is exact for
    /// every point of the half-open lattice cell it starts.
    fn evaluate_lattice(&self, px: &BigInt, py: &BigInt, depth: usize) -> Result<Evaluation> {
        let found = dispatch!(self, e => e.locate(&lattice(px)?, &lattice(py)?, depth))?;
        Ok(Evaluation {
            value: self.pair_value(found.level, found.in_core).clone(),
            birth_level: found.birth,
            level: found.level,
            in_core: found.in_core,
        })
    }

    /// Value at a double-precision point (converted exactly).
    pub fn evaluate_f64(&self, x: f64, y: f64, depth: usize) -> Result<f64> {
        let p = Point::new(exact::from_f64(x)?, exact::from_f64(y)?);
        Ok(exact::to_f64(&self.evaluate(&p, depth)?.value))
    }

    /// Exact `∫_rect ρ_depth dλ`.
    pub fn integrate(&self, rect: &Rect<Rational>, depth: usize) -> Result<Rational> {
        self.check_depth(depth)?;
        let zero = Rational::zero();
        let one = Rational::one();
        for v in [&rect.x0, &rect.y0, &rect.x1, &rect.y1] {
            if v < &zero || v > &one {
                return Err(Error::OutOfDomain(format!("rectangle {rect:?} leaves [0,1]²")));
            }
        }
        if rect.is_degenerate() {
            return Ok(zero);
        }
        let d = Rational::from_integer(self.lattice.clone());
        let corners = [&rect.x0, &rect.y0, &rect.x1, &rect.y1].map(|v| v * &d);
        let refine = corners.iter().fold(BigInt::one(), |acc, c| acc.lcm(c.denom()));
        let r = Rational::from_integer(refine.clone());
        let coords = corners.map(|c| (c * &r).to_integer());
        let mass = self.lattice_mass(&coords, &refine, depth)?;
        let side = &self.lattice * &refine;
        Ok(Rational::new(mass, &self.scale * &side * &side))
    }

    fn lattice_mass(&self, coords: &[BigInt; 4], refine: &BigInt, depth: usize) -> Result<BigInt> {
        dispatch!(self, e => {
            let root = e.root(&lattice(refine)?)?;
            let rect = lrect(coords)?;
            Ok(e.mass(&root, 1, depth, &rect)?.to_big())
        })
    }

    /// Exact integrals over rectangles with corners on the grid `(1/m)ℤ²`.
    pub fn grid(&self, m: u64, depth: usize) -> Result<GridIntegrator<'_>> {
        self.check_depth(depth)?;
        if m == 0 {
            return Err(Error::Precondition("grid resolution must be positive".into()));
        }
        let mb = BigInt::from(m);
        let refine = &mb / mb.gcd(&self.lattice);
        let step = &self.lattice * &refine / &mb;
        let side = &self.lattice * &refine;
        let denominator = &self.scale * &side * &side;
        Ok(GridIntegrator { spec: self, m, depth, refine, step, denominator })
    }

    /// Checks both mass identities on every unit up to `depth`.
    pub fn verify_constraints(&self, depth: usize) -> Result<ConstraintReport> {
        self.check_depth(depth)?;
        let state = dispatch!(self, e => {
            let mut state = VerifyState::default();
            e.verify(depth, &mut state)?;
            Ok(state)
        })?;
        let unit = &self.scale * &self.lattice * &self.lattice;
        let violations = state
            .recorded
            .into_iter()
            .map(|v| Violation {
                address: UnitAddress { path: v.path },
                kind: if v.core { ConstraintKind::Core } else { ConstraintKind::Square },
                expected: Rational::new(v.expected, unit.clone()),
                actual: Rational::new(v.actual, unit.clone()),
            })
            .collect();
        Ok(ConstraintReport {
            depth,
            units_checked: state.units,
            violation_count: state.violations,
            violations,
        })
    }

    pub fn raster(&self, m: usize, depth: usize, mode: RasterMode) -> Result<Raster> {
        self.check_depth(depth)?;
        if m == 0 {
            return Err(Error::Precondition("raster resolution must be positive".into()));
        }
        let mut values = vec![0.0; m * m];
        let total = match mode {
            RasterMode::CellAverage => {
                let grid = self.grid(m as u64, depth)?;
                let cell_scale = Rational::new(BigInt::from(m * m), grid.denominator().clone());
                let mut sum = BigInt::zero();
                for row in 0..m {
                    let j = (m - 1 - row) as u64;
                    for col in 0..m {
                        let i = col as u64;
                        let mass = grid.mass(i, j, i + 1, j + 1)?;
                        values[row * m + col] =
                            exact::to_f64(&(Rational::from_integer(mass.clone()) * &cell_scale));
                        sum += mass;
                    }
                }
                Rational::new(sum, grid.denominator().clone())
            }
            RasterMode::CenterSample => {
                let two_m = BigInt::from(2 * m);
                let coord = |k: usize| (BigInt::from(2 * k + 1) * &self.lattice).div_floor(&two_m);
                let mut counts = vec![[0u64; 2]; self.params.depth + 1];
                for row in 0..m {
                    let py = coord(m - 1 - row);
                    for col in 0..m {
                        let e = self.evaluate_lattice(&coord(col), &py, depth)?;
                        counts[e.level][usize::from(e.in_core)] += 1;
                        values[row * m + col] = exact::to_f64(&e.value);
                    }
                }
                let mut sum = Rational::zero();
                for (level, c) in counts.iter().enumerate().skip(1) {
                    sum += self.values.s(level) * int(c[0] as i64) + self.values.t(level) * int(c[1] as i64);
                }
                sum / int((m * m) as i64)
            }
        };
        Ok(Raster { resolution: m, mode, values, total })
    }
}

/// Integrals over grid rectangles `[i0/m, i1/m] × [j0/m, j1/m]`, returned
/// as integers over a common denominator.
#[derive(Clone, Debug)]
pub struct GridIntegrator<'a> {
    spec: &'a DensitySpec,
    m: u64,
    depth: usize,
    refine: BigInt,
    step: BigInt,
    denominator: BigInt,
}

impl GridIntegrator<'_> {
    pub fn resolution(&self) -> u64 {
        self.m
    }

    pub fn denominator(&self) -> &BigInt {
        &self.denominator
    }

    pub fn mass(&self, i0: u64, j0: u64, i1: u64, j1: u64) -> Result<BigInt> {
        if i0 > self.m || i1 > self.m || j0 > self.m || j1 > self.m {
            return Err(Error::OutOfDomain(format!("grid rectangle ({i0},{j0})-({i1},{j1}) exceeds {}", self.m)));
        }
        if i0 >= i1 || j0 >= j1 {
            return Ok(BigInt::zero());
        }
        let coords = [i0, j0, i1, j1].map(|k| BigInt::from(k) * &self.step);
        self.spec.lattice_mass(&coords, &self.refine, self.depth)
    }

    pub fn mass_rational(&self, i0: u64, j0: u64, i1: u64, j1: u64) -> Result<Rational> {
        Ok(Rational::new(self.mass(i0, j0, i1, j1)?, self.denominator.clone()))
    }

    pub fn mass_f64(&self, i0: u64, j0: u64, i1: u64, j1: u64) -> Result<f64> {
        let mass = self.mass(i0, j0, i1, j1)?;
        Ok(ratio_f64(&mass, &self.denominator))
    }
}

pub(crate) fn ratio_f64(num: &BigInt, den: &BigInt) -> f64 {
    match (num.to_f64(), den.to_f64()) {
        (Some(a), Some(b)) if a.is_finite() && b.is_finite() => a / b,
        _ => exact::to_f64(&Rational::new(num.clone(), den.clone())),
    }
}

fn compute_bounds(values: &LevelValues) -> DensityBounds {
    let mut bounds = DensityBounds {
        min: values.s(1).clone(),
        min_level: 1,
        max: values.t(1).clone(),
        max_level: 1,
    };
    for (i, p) in values.levels.iter().enumerate().skip(1) {
        if p.s < bounds.min {
            bounds.min = p.s.clone();
            bounds.min_level = i + 1;
        }
        if p.t > bounds.max {
            bounds.max = p.t.clone();
            bounds.max_level = i + 1;
        }
    }
    bounds
}

/// Average of `ρ_d` over a unit born at `b`, indexed `[d−1][b−1]`.
fn unit_mass_table(params: &ConstructionParams, values: &LevelValues) -> Vec<Vec<Rational>> {
    let one = Rational::one();
    let d2 = &params.delta * &params.delta;
    let leaf = values.t(1) * &d2 + values.s(1) * (&one - &d2);
    (1..=params.depth)
        .map(|depth| {
            let mut row = vec![Rational::zero(); depth];
            row[depth - 1] = leaf.clone();
            for birth in (1..depth).rev() {
                let a = ring_area_fraction(params.branching[birth - 1]);
                let pair = &values.levels[birth];
                row[birth - 1] = &pair.t * (&d2 - &a * &d2)
                    + &pair.s * (&one - &d2 - &a)
                    + &a * (&one + &d2) * &row[birth];
            }
            row
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::rat;

    fn mcmullen(depth: usize) -> DensitySpec {
        let branching = [406, 812][..depth - 1].to_vec();
        DensitySpec::new(ConstructionParams::new(rat(1, 3), rat(1, 100), branching, depth)).unwrap()
    }

    fn small(depth: usize) -> DensitySpec {
        let branching = [7, 14, 28][..depth - 1].to_vec();
        DensitySpec::new(ConstructionParams::new(rat(1, 3), rat(3, 5), branching, depth)).unwrap()
    }

    fn rect(x0: Rational, y0: Rational, x1: Rational, y1: Rational) -> Rect<Rational> {
        Rect::new(x0, y0, x1, y1)
    }

    #[test]
    fn level_one_values() {
        let p = ConstructionParams::new(rat(1, 3), rat(1, 100), vec![], 1);
        assert_eq!(level_values(&p, 1).unwrap(), (rat(9, 800), rat(891, 100)));
        assert!(level_values(&p, 2).is_err());
    }

    #[test]
    fn refined_values_satisfy_both_equations() {
        let (delta, gamma) = (rat(1, 3), rat(1, 100));
        let one = Rational::one();
        let pair = refined_level_values(&delta, &gamma, 406, 2).unwrap();
        let a = ring_area_fraction(406);
        let d2 = &delta * &delta;
        assert_eq!(&pair.t * (&d2 - &a * &d2) + &a * &d2, &one - &gamma);
        assert_eq!(&pair.s * (&one - &d2 - &a) + (&one - &gamma) + &a, one);
    }

    #[test]
    fn coverage_equal_to_gamma_is_rejected() {
        // (4·14−4)/14² = 52/196
        let gamma = ring_area_fraction(14);
        let err = refined_level_values(&rat(1, 3), &gamma, 14, 2).unwrap_err();
        match err {
            Error::InvalidParams(r) => {
                assert_eq!(r.failures().next().unwrap().invariant, Invariant::CoverageBelowGamma)
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn center_point_values() {
        let c = Point::new(rat(1, 2), rat(1, 2));
        assert_eq!(mcmullen(1).evaluate(&c, 1).unwrap().value, rat(891, 100));
        let spec = mcmullen(2);
        let e = spec.evaluate(&c, 2).unwrap();
        assert_eq!(e.value, *spec.values().t(2));
        assert_eq!((e.birth_level, e.level), (1, 2));
    }

    #[test]
    fn depth_one_pattern() {
        let spec = mcmullen(2);
        let t = Point::new(rat(2, 5), rat(3, 5));
        let s = Point::new(rat(1, 10), rat(1, 2));
        assert_eq!(spec.evaluate(&t, 1).unwrap().value, rat(891, 100));
        assert_eq!(spec.evaluate(&s, 1).unwrap().value, rat(9, 800));
    }

    #[test]
    fn nested_corner_reaches_full_depth() {
        let spec = mcmullen(3);
        let eps = rat(1, 3 * 406 * 812 * 2);
        let e = spec.evaluate(&Point::new(eps.clone(), eps), 3).unwrap();
        assert_eq!(e.birth_level, 3);
        assert_eq!(e.level, 1);
    }

    #[test]
    fn out_of_domain_points() {
        let spec = mcmullen(1);
        assert!(matches!(spec.evaluate(&Point::new(int(1), rat(1, 2)), 1), Err(Error::OutOfDomain(_))));
        assert!(matches!(spec.evaluate(&Point::new(rat(-1, 2), int(0)), 1), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn whole_square_and_core_masses() {
        for depth in 1..=3 {
            let spec = small(depth);
            assert_eq!(spec.integrate(&Rect::unit(), depth).unwrap(), Rational::one());
            let core = rect(rat(1, 3), rat(1, 3), rat(2, 3), rat(2, 3));
            assert_eq!(spec.integrate(&core, depth).unwrap(), rat(2, 5));
        }
    }

    #[test]
    fn degenerate_rect_is_zero() {
        let spec = small(2);
        let r = rect(rat(1, 5), rat(0, 1), rat(1, 5), rat(1, 2));
        assert_eq!(spec.integrate(&r, 2).unwrap(), Rational::zero());
    }

    #[test]
    fn outer_ring_square_mass_matches_riemann_sum() {
        let spec = small(2);
        let sq = rect(rat(3, 7), int(0), rat(4, 7), rat(1, 7));
        let exact = spec.integrate(&sq, 2).unwrap();
        assert_eq!(exact, rat(1, 49));
        // ρ is constant on lattice cells, so a midpoint sum on a refinement
        // of the lattice is exact up to rounding
        assert_eq!(spec.lattice_denominator(), &BigInt::from(126));
        let k = 4 * 18;
        let mut sum = 0.0;
        for a in 0..k {
            for b in 0..k {
                let x = 3.0 / 7.0 + (a as f64 + 0.5) / (7.0 * k as f64);
                let y = (b as f64 + 0.5) / (7.0 * k as f64);
                sum += spec.evaluate_f64(x, y, 2).unwrap();
            }
        }
        let approx = sum / (49.0 * (k * k) as f64);
        assert!((approx * 49.0 - 1.0).abs() < 1e-6, "{approx}");
    }

    #[test]
    fn unit_averages_are_one() {
        let spec = small(3);
        for d in 1..=3 {
            for b in 1..=d {
                assert_eq!(spec.unit_average(d, b).unwrap(), Rational::one());
            }
        }
    }

    #[test]
    fn verify_small_depths() {
        let r = mcmullen(1).verify_constraints(1).unwrap();
        assert_eq!((r.units_checked, r.violation_count), (1, 0));
        let r = mcmullen(2).verify_constraints(2).unwrap();
        assert_eq!((r.units_checked, r.violation_count), (1 + 8 * 406 - 8, 0));
    }

    #[test]
    fn corrupted_value_is_caught() {
        let params = ConstructionParams::new(rat(1, 3), rat(1, 100), vec![406], 2);
        let mut values = all_level_values(&params).unwrap();
        values.levels[1].t += int(1);
        let spec = DensitySpec::from_parts(params, values).unwrap();
        let r = spec.verify_constraints(2).unwrap();
        assert!(r.violation_count >= 1);
        assert_eq!(r.violations[0].address, UnitAddress::root());
    }

    #[test]
    fn raster_examples() {
        let spec = mcmullen(1);
        let one = spec.raster(1, 1, RasterMode::CellAverage).unwrap();
        assert_eq!(one.values, vec![1.0]);
        assert_eq!(one.total, Rational::one());

        let three = spec.raster(3, 1, RasterMode::CenterSample).unwrap();
        for row in 0..3 {
            for col in 0..3 {
                let want = if (row, col) == (1, 1) { 8.91 } else { 9.0 / 800.0 };
                assert_eq!(three.get(row, col), want);
            }
        }

        let spec = small(2);
        let avg = spec.raster(10, 2, RasterMode::CellAverage).unwrap();
        assert_eq!(avg.total, Rational::one());
    }

    #[test]
    fn raster_rows_run_top_down() {
        // cell (row 0, col 0) is the top-left corner of the square
        let spec = small(2);
        let r = spec.raster(14, 2, RasterMode::CellAverage).unwrap();
        let top_left = spec
            .grid(14, 2)
            .unwrap()
            .mass_f64(0, 13, 1, 14)
            .unwrap()
            * 196.0;
        assert!((r.get(0, 0) - top_left).abs() < 1e-12);
    }

    #[test]
    fn bounds_for_mcmullen() {
        let b = mcmullen(1).density_bounds().clone();
        assert_eq!((b.min, b.max), (rat(9, 800), rat(891, 100)));
        assert_eq!((b.min_level, b.max_level), (1, 1));
    }

    #[test]
    fn big_integer_fallback_matches() {
        // a rectangle with a huge denominator forces the BigInt path
        let spec = small(3);
        let r = rect(rat(1, 1_000_000_007), rat(2, 999_999_937), rat(5, 7), rat(7, 9));
        let whole = spec.integrate(&r, 3).unwrap();
        assert!(whole > Rational::zero());
        let left = rect(r.x0.clone(), r.y0.clone(), rat(1, 3), r.y1.clone());
        let right = rect(rat(1, 3), r.y0.clone(), r.x1.clone(), r.y1.clone());
        assert_eq!(spec.integrate(&left, 3).unwrap() + spec.integrate(&right, 3).unwrap(), whole);
    }
}
