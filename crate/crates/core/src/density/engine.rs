//! Integer lattice arithmetic behind evaluation, integration and verification.
//!
//! Coordinates are integers in units of `1/(D·r)`, where `D` is the lattice
//! denominator of the hierarchy and `r` an extra refinement chosen so that a
//! query rectangle has integer corners. Level values are integers after
//! scaling by `L`, so every mass is an integer in units of `1/(L·(D·r)²)`.
//! The engine is generic so that `i128` can be tried first with `BigInt` as
//! the overflow fallback.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{CheckedAdd, CheckedMul, CheckedSub, One, Signed, ToPrimitive, Zero};

use crate::hierarchy::{ring_cell, ring_index, DeltaRatio, Ring, Step};
use crate::{Error, Result};

pub(crate) trait Int:
    Clone + Ord + Debug + Zero + One + Signed + Integer + ToPrimitive + CheckedAdd + CheckedSub + CheckedMul
{
    fn from_big(v: &BigInt) -> Option<Self>;
    fn to_big(&self) -> BigInt;
    fn from_usize(v: usize) -> Self;
}

impl Int for i128 {
    fn from_big(v: &BigInt) -> Option<Self> {
        v.to_i128()
    }

    fn to_big(&self) -> BigInt {
        BigInt::from(*self)
    }

    fn from_usize(v: usize) -> Self {
        v as i128
    }
}

impl Int for BigInt {
    fn from_big(v: &BigInt) -> Option<Self> {
        Some(v.clone())
    }

    fn to_big(&self) -> BigInt {
        self.clone()
    }

    fn from_usize(v: usize) -> Self {
        BigInt::from(v)
    }
}

const OVERFLOW: Error = Error::Overflow("lattice arithmetic");

#[inline]
fn mul<I: Int>(a: &I, b: &I) -> Result<I> {
    a.checked_mul(b).ok_or(OVERFLOW)
}

#[inline]
fn add<I: Int>(a: &I, b: &I) -> Result<I> {
    a.checked_add(b).ok_or(OVERFLOW)
}

#[inline]
fn sub<I: Int>(a: &I, b: &I) -> Result<I> {
    a.checked_sub(b).ok_or(OVERFLOW)
}

fn convert<I: Int>(v: &BigInt) -> Result<I> {
    I::from_big(v).ok_or(OVERFLOW)
}

/// Exact inputs shared by both integer widths.
#[derive(Clone, Debug)]
pub(crate) struct EngineData {
    pub lattice: BigInt,
    pub delta: DeltaRatio,
    pub branching: Vec<u64>,
    /// `(L·s_j, L·t_j)` for `j = 1..=J`.
    pub values: Vec<(BigInt, BigInt)>,
    pub scale: BigInt,
    pub core_target: BigInt,
    /// `L·μ` as `(num, den)`, indexed `[depth−1][birth−1]`.
    pub unit_mass: Vec<Vec<(BigInt, BigInt)>>,
}

#[derive(Clone, Debug)]
pub(crate) struct LUnit<I> {
    pub x: I,
    pub y: I,
    pub s: I,
    pub cx: I,
    pub cy: I,
    pub cs: I,
}

/// Axis-aligned query rectangle in lattice units.
#[derive(Clone, Debug)]
pub(crate) struct LRect<I> {
    pub x0: I,
    pub y0: I,
    pub x1: I,
    pub y1: I,
}

/// Where a point ends up: the level whose value applies and whether it is
/// the core value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Located {
    pub level: usize,
    pub in_core: bool,
    pub birth: usize,
}

#[derive(Clone, Debug)]
pub(crate) struct RawViolation {
    pub path: Vec<Step>,
    pub core: bool,
    pub expected: BigInt,
    pub actual: BigInt,
}

#[derive(Clone, Debug, Default)]
pub(crate) struct VerifyState {
    pub units: u64,
    pub violations: u64,
    pub recorded: Vec<RawViolation>,
}

pub(crate) const MAX_RECORDED: usize = 32;

#[derive(Clone, Debug)]
pub(crate) struct Engine<I> {
    lattice: I,
    dnum: I,
    dden: I,
    branching: Vec<usize>,
    values: Vec<(I, I)>,
    scale: I,
    core_target: I,
    unit_mass: Vec<Vec<(I, I)>>,
}

impl<I: Int> Engine<I> {
    pub fn new(data: &EngineData) -> Result<Self> {
        let pair = |(a, b): &(BigInt, BigInt)| -> Result<(I, I)> { Ok((convert(a)?, convert(b)?)) };
        Ok(Self {
            lattice: convert(&data.lattice)?,
            dnum: convert(&BigInt::from(data.delta.num))?,
            dden: convert(&BigInt::from(data.delta.den))?,
            branching: data.branching.iter().map(|&n| n as usize).collect(),
            values: data.values.iter().map(pair).collect::<Result<_>>()?,
            scale: convert(&data.scale)?,
            core_target: convert(&data.core_target)?,
            unit_mass: data
                .unit_mass
                .iter()
                .map(|row| row.iter().map(pair).collect::<Result<Vec<_>>>())
                .collect::<Result<_>>()?,
        })
    }

    fn unit_at(&self, x: I, y: I, s: I) -> Result<LUnit<I>> {
        let two_den = mul(&I::from_usize(2), &self.dden)?;
        let offset = mul(&s, &sub(&self.dden, &self.dnum)?)?.div_floor(&two_den);
        let cs = mul(&s, &self.dnum)?.div_floor(&self.dden);
        Ok(LUnit { cx: add(&x, &offset)?, cy: add(&y, &offset)?, x, y, s, cs })
    }

    pub fn root(&self, refine: &I) -> Result<LUnit<I>> {
        self.unit_at(I::zero(), I::zero(), mul(&self.lattice, refine)?)
    }

    fn child(&self, u: &LUnit<I>, ring: Ring, k: usize, n: usize) -> Result<LUnit<I>> {
        let (i, j) = ring_cell(k, n);
        let (x, y, s) = match ring {
            Ring::Outer => (&u.x, &u.y, &u.s),
            Ring::Inner => (&u.cx, &u.cy, &u.cs),
        };
        let c = s.div_floor(&I::from_usize(n));
        self.unit_at(
            add(x, &mul(&c, &I::from_usize(i))?)?,
            add(y, &mul(&c, &I::from_usize(j))?)?,
            c,
        )
    }

    fn overlap(r: &LRect<I>, x: &I, y: &I, s: &I) -> Result<I> {
        let xe = add(x, s)?;
        let ye = add(y, s)?;
        let w = sub((&r.x1).min(&xe), (&r.x0).max(x))?;
        if !w.is_positive() {
            return Ok(I::zero());
        }
        let h = sub((&r.y1).min(&ye), (&r.y0).max(y))?;
        if !h.is_positive() {
            return Ok(I::zero());
        }
        mul(&w, &h)
    }

    fn full_mass(&self, depth: usize, birth: usize, s: &I) -> Result<I> {
        let (num, den) = &self.unit_mass[depth - 1][birth - 1];
        let (q, rem) = mul(&mul(num, s)?, s)?.div_rem(den);
        debug_assert!(rem.is_zero(), "unit mass is not a lattice integer");
        Ok(q)
    }

    /// Ring cells of the `n`-grid on `[x, x+s)²` that meet the open rectangle.
    fn ring_cells_in(r: &LRect<I>, x: &I, y: &I, s: &I, n: usize) -> Result<Vec<usize>> {
        let c = s.div_floor(&I::from_usize(n));
        let span = |lo: &I, hi: &I, origin: &I| -> Result<Option<(usize, usize)>> {
            let a = sub(lo, origin)?.div_floor(&c);
            let b = Integer::div_ceil(&sub(hi, origin)?, &c) - I::one();
            let a = a.to_i64().unwrap_or(i64::MIN).max(0);
            let b = b.to_i64().unwrap_or(i64::MAX).min(n as i64 - 1);
            Ok((a <= b).then_some((a as usize, b as usize)))
        };
        let (Some((i0, i1)), Some((j0, j1))) = (span(&r.x0, &r.x1, x)?, span(&r.y0, &r.y1, y)?) else {
            return Ok(Vec::new());
        };
        let mut out = Vec::new();
        for j in j0..=j1 {
            if j == 0 || j == n - 1 {
                out.extend((i0..=i1).filter_map(|i| ring_index(i, j, n)));
            } else {
                if i0 == 0 {
                    out.extend(ring_index(0, j, n));
                }
                if i1 == n - 1 {
                    out.extend(ring_index(n - 1, j, n));
                }
            }
        }
        Ok(out)
    }

    /// `L·(D·r)²·∫_rect ρ_depth` over the unit `u` born at `birth`.
    pub fn mass(&self, u: &LUnit<I>, birth: usize, depth: usize, r: &LRect<I>) -> Result<I> {
        let ov_s = Self::overlap(r, &u.x, &u.y, &u.s)?;
        if ov_s.is_zero() {
            return Ok(I::zero());
        }
        if r.x0 <= u.x && r.y0 <= u.y && add(&u.x, &u.s)? <= r.x1 && add(&u.y, &u.s)? <= r.y1 {
            return self.full_mass(depth, birth, &u.s);
        }
        let ov_t = Self::overlap(r, &u.cx, &u.cy, &u.cs)?;
        let level = if birth == depth { 0 } else { birth };
        let (vs, vt) = &self.values[level];
        let mut acc = add(&mul(vt, &ov_t)?, &mul(vs, &sub(&ov_s, &ov_t)?)?)?;
        if birth == depth {
            return Ok(acc);
        }
        let n = self.branching[birth - 1];
        for k in Self::ring_cells_in(r, &u.x, &u.y, &u.s, n)? {
            let c = self.child(u, Ring::Outer, k, n)?;
            let inner = self.mass(&c, birth + 1, depth, r)?;
            let flat = mul(vs, &Self::overlap(r, &c.x, &c.y, &c.s)?)?;
            acc = add(&acc, &sub(&inner, &flat)?)?;
        }
        if ov_t.is_positive() {
            for k in Self::ring_cells_in(r, &u.cx, &u.cy, &u.cs, n)? {
                let c = self.child(u, Ring::Inner, k, n)?;
                let inner = self.mass(&c, birth + 1, depth, r)?;
                let flat = mul(vt, &Self::overlap(r, &c.x, &c.y, &c.s)?)?;
                acc = add(&acc, &sub(&inner, &flat)?)?;
            }
        }
        Ok(acc)
    }

    fn cell(p: &I, origin: &I, side: &I, n: usize) -> Result<usize> {
        let k = mul(&sub(p, origin)?, &I::from_usize(n))?.div_floor(side);
        Ok(k.to_usize().unwrap_or(n - 1).min(n - 1))
    }

    fn inside(px: &I, py: &I, x: &I, y: &I, s: &I) -> Result<bool> {
        Ok(x <= px && px < &add(x, s)? && y <= py && py < &add(y, s)?)
    }

    /// Descends to the unit whose flat region contains the lattice point.
    pub fn locate(&self, px: &I, py: &I, depth: usize) -> Result<Located> {
        let mut u = self.root(&I::one())?;
        let mut birth = 1;
        loop {
            let in_core = Self::inside(px, py, &u.cx, &u.cy, &u.cs)?;
            if birth == depth {
                return Ok(Located { level: 1, in_core, birth });
            }
            let n = self.branching[birth - 1];
            let (i, j) = (Self::cell(px, &u.x, &u.s, n)?, Self::cell(py, &u.y, &u.s, n)?);
            if let Some(k) = ring_index(i, j, n) {
                u = self.child(&u, Ring::Outer, k, n)?;
                birth += 1;
                continue;
            }
            if in_core {
                let (i, j) = (Self::cell(px, &u.cx, &u.cs, n)?, Self::cell(py, &u.cy, &u.cs, n)?);
                if let Some(k) = ring_index(i, j, n) {
                    u = self.child(&u, Ring::Inner, k, n)?;
                    birth += 1;
                    continue;
                }
            }
            return Ok(Located { level: birth + 1, in_core, birth });
        }
    }

    /// Exhaustive check of both mass identities on every unit.
    pub fn verify(&self, depth: usize, state: &mut VerifyState) -> Result<()> {
        let root = self.root(&I::one())?;
        let mut path = Vec::new();
        self.visit(&root, 1, depth, &mut path, state)?;
        Ok(())
    }

    fn visit(
        &self,
        u: &LUnit<I>,
        birth: usize,
        depth: usize,
        path: &mut Vec<Step>,
        state: &mut VerifyState,
    ) -> Result<I> {
        state.units += 1;
        let s2 = mul(&u.s, &u.s)?;
        let t2 = mul(&u.cs, &u.cs)?;
        let (core, square) = if birth == depth {
            let (vs, vt) = &self.values[0];
            let core = mul(vt, &t2)?;
            let square = add(&core, &mul(vs, &sub(&s2, &t2)?)?)?;
            (core, square)
        } else {
            let n = self.branching[birth - 1];
            let (vs, vt) = &self.values[birth];
            let cells = I::from_usize(4 * n - 4);
            let mut sums = [I::zero(), I::zero()];
            for (slot, ring) in [Ring::Outer, Ring::Inner].into_iter().enumerate() {
                for k in 0..4 * n - 4 {
                    path.push(Step { ring, index: k });
                    let c = self.child(u, ring, k, n)?;
                    let m = self.visit(&c, birth + 1, depth, path, state)?;
                    sums[slot] = add(&sums[slot], &m)?;
                    path.pop();
                }
            }
            let outer_cell = u.s.div_floor(&I::from_usize(n));
            let inner_cell = u.cs.div_floor(&I::from_usize(n));
            let outer_area = mul(&cells, &mul(&outer_cell, &outer_cell)?)?;
            let inner_area = mul(&cells, &mul(&inner_cell, &inner_cell)?)?;
            let core = add(&mul(vt, &sub(&t2, &inner_area)?)?, &sums[1])?;
            let annulus = sub(&sub(&s2, &t2)?, &outer_area)?;
            let square = add(&add(&core, &mul(vs, &annulus)?)?, &sums[0])?;
            (core, square)
        };
        let want_square = mul(&self.scale, &s2)?;
        let want_core = mul(&self.core_target, &s2)?;
        for (is_core, actual, expected) in [(false, &square, &want_square), (true, &core, &want_core)] {
            if actual != expected {
                state.violations += 1;
                if state.recorded.len() < MAX_RECORDED {
                    state.recorded.push(RawViolation {
                        path: path.clone(),
                        core: is_core,
                        expected: expected.to_big(),
                        actual: actual.to_big(),
                    });
                }
            }
        }
        Ok(square)
    }
}
