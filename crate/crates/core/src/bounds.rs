//! The contradiction inequality
//! `q² > 196K⁴(4/N₀ + 4/N₀²) + 28qK²√(α(2−α))`, witness search over
//! `(α, N₀)` and the stretch constants it excludes at finite coverage.

use num_traits::{One, Signed};
use serde::{Deserialize, Serialize};

use crate::exact::{int, Rational};
use crate::{Error, Result};

/// `(1−14δ)/14`: the open upper end of admissible `α`.
pub fn alpha_limit(delta: f64) -> f64 {
    (1.0 - 14.0 * delta) / 14.0
}

fn check_delta_alpha(delta: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0 / 14.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1/14)")));
    }
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha = {alpha} must be positive")));
    }
    let denom = 1.0 - 14.0 * alpha - 14.0 * delta;
    if !(denom > 0.0) {
        return Err(Error::Domain(format!("1 - 14 alpha - 14 delta = {denom} is not positive")));
    }
    Ok(denom)
}

/// `q = (1−γ)/(2δ) − 7γ/(1−14α−14δ)`.
pub fn q_value(delta: f64, gamma: f64, alpha: f64) -> Result<f64> {
    let denom = check_delta_alpha(delta, alpha)?;
    Ok((1.0 - gamma) / (2.0 * delta) - 7.0 * gamma / denom)
}

/// Exact `q` for rational inputs.
pub fn q_value_exact(delta: &Rational, gamma: &Rational, alpha: &Rational) -> Result<Rational> {
    let one = Rational::one();
    let denom = &one - int(14) * alpha - int(14) * delta;
    if !denom.is_positive() {
        return Err(Error::Domain("1 - 14 alpha - 14 delta is not positive".into()));
    }
    Ok((&one - gamma) / (int(2) * delta) - int(7) * gamma / denom)
}

/// Right-hand side `196K⁴(4/N₀ + 4/N₀²) + 28qK²√(α(2−α))`.
pub fn inequality_rhs(q: f64, k: f64, alpha: f64, n0: f64) -> f64 {
    let k2 = k * k;
    196.0 * k2 * k2 * (4.0 / n0 + 4.0 / (n0 * n0)) + 28.0 * q * k2 * (alpha * (2.0 - alpha)).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct BoundWitness {
    pub K: f64,
    pub alpha: f64,
    pub N0: u64,
    pub q: f64,
    /// `Δ/h = q/K`.
    pub Delta_per_h: f64,
    /// `Ω/h = qN₀/(14K) − KN₀√(α(2−α))` for an edge of `N₀` squares.
    pub Omega_per_h: f64,
    /// `v_i ≤ 2Kδh`, divided by `h`.
    pub v_bound_per_h: f64,
    /// `c_i > Kh(1−14α−14δ)`, divided by `h`.
    pub c_bound_per_h: f64,
    /// `h_V ≥ (1−γ)h/(2δK)`, divided by `h`.
    pub h_v_per_h: f64,
    /// `h_C ≤ 7γh/(K(1−14α−14δ))`, divided by `h`.
    pub h_c_per_h: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub contradiction: bool,
}

/// Evaluates the inequality and its audit quantities at one parameter point.
#[allow(non_snake_case)]
pub fn contradiction_holds(delta: f64, gamma: f64, K: f64, alpha: f64, N0: u64) -> Result<BoundWitness> {
    if !(K > 0.0) {
        return Err(Error::Precondition(format!("K = {K} must be positive")));
    }
    if N0 < 7 {
        return Err(Error::Precondition(format!("N0 = {N0} must be at least 7")));
    }
    let denom = check_delta_alpha(delta, alpha)?;
    let q = q_value(delta, gamma, alpha)?;
    if !(q > 0.0) {
        return Err(Error::Domain(format!("q = {q} is not positive; no contradiction is derivable")));
    }
    let n = N0 as f64;
    let s = (alpha * (2.0 - alpha)).sqrt();
    let lhs = q * q;
    let rhs = inequality_rhs(q, K, alpha, n);
    Ok(BoundWitness {
        K,
        alpha,
        N0,
        q,
        Delta_per_h: q / K,
        Omega_per_h: q * n / (14.0 * K) - K * n * s,
        v_bound_per_h: 2.0 * K * delta,
        c_bound_per_h: K * denom,
        h_v_per_h: (1.0 - gamma) / (2.0 * delta * K),
        h_c_per_h: 7.0 * gamma / (K * denom),
        lhs,
        rhs,
        contradiction: lhs > rhs,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchLimits {
    /// Grid `α_max·2^{−k}` for `k = 0..alpha_steps`.
    pub alpha_steps: u32,
    pub max_n0: u64,
}

impl Default for SearchLimits {
    fn default() -> Self {
        Self { alpha_steps: 64, max_n0: 7_000_000_000_000 }
    }
}

/// Geometric `α` grid descending from `(1−14δ)/28`.
pub fn alpha_grid(delta: f64, steps: u32) -> Vec<f64> {
    let top = alpha_limit(delta) / 2.0;
    (0..steps).map(|k| top * 0.5f64.powi(k as i32)).collect()
}

fn round_up_to_seven(x: f64) -> Option<u64> {
    if !x.is_finite() || x > 1e18 {
        return None;
    }
    let n = (x.max(7.0) / 7.0).ceil() as u64 * 7;
    Some(n.max(7))
}

/// Smallest multiple of 7 making the inequality strict at `(K, α)`.
#[allow(non_snake_case)]
pub fn smallest_n0(delta: f64, gamma: f64, K: f64, alpha: f64, max_n0: u64) -> Option<u64> {
    let q = q_value(delta, gamma, alpha).ok()?;
    if !(q > 0.0) {
        return None;
    }
    let s = (alpha * (2.0 - alpha)).sqrt();
    let room = q * q - 28.0 * q * K * K * s;
    if !(room > 0.0) {
        return None;
    }
    // 4x² + 4x < c with x = 1/N₀, so N₀ > 2/(√(1+c) − 1)
    let c = room / (196.0 * K.powi(4));
    let root = c / ((1.0 + c).sqrt() + 1.0);
    let mut n = round_up_to_seven(2.0 / root)?;
    // rounding can leave the candidate on the wrong side by a step
    while n > 7 && contradiction_holds(delta, gamma, K, alpha, n - 7).is_ok_and(|w| w.contradiction) {
        n -= 7;
    }
    while n <= max_n0 {
        if contradiction_holds(delta, gamma, K, alpha, n).ok()?.contradiction {
            return Some(n);
        }
        n += 7;
    }
    None
}

/// The witness with the smallest `N₀` over the `α` grid; ties go to the
/// larger `α`.
#[allow(non_snake_case)]
pub fn find_witness(delta: f64, gamma: f64, K: f64, limits: SearchLimits) -> Result<Option<BoundWitness>> {
    if !(delta > 0.0 && delta < 1.0 / 14.0) {
        return Err(Error::Domain(format!("delta = {delta} must lie in (0, 1/14)")));
    }
    if !(gamma > 0.0 && gamma < 1.0 - 14.0 * delta) {
        return Err(Error::Domain(format!("gamma = {gamma} must lie in (0, 1 - 14 delta)")));
    }
    if !(K > 0.0) {
        return Err(Error::Precondition(format!("K = {K} must be positive")));
    }
    let mut best: Option<(u64, f64)> = None;
    for alpha in alpha_grid(delta, limits.alpha_steps) {
        if let Some(n) = smallest_n0(delta, gamma, K, alpha, limits.max_n0) {
            if best.is_none_or(|(m, _)| n < m) {
                best = Some((n, alpha));
            }
        }
    }
    best.map(|(n, alpha)| contradiction_holds(delta, gamma, K, alpha, n)).transpose()
}

/// Largest multiple of 7 not exceeding `n`.
pub fn usable_squares(n_available: u64) -> u64 {
    n_available / 7 * 7
}

const STRETCH_BRACKET: (f64, f64) = (1e-6, 1e6);
const BISECTION_STEPS: u32 = 64;

fn excluded_at(delta: f64, gamma: f64, k: f64, n: u64, grid: &[f64]) -> bool {
    grid.iter()
        .any(|&a| contradiction_holds(delta, gamma, k, a, n).is_ok_and(|w| w.contradiction))
}

/// Largest `K` such that every `K′ ≤ K` is contradicted by some grid `α`
/// with `N₀` at most the usable part of `n_available`; 0 when none is.
///
/// For fixed `α` and `N₀` the excluded stretches form an interval `(0, K_α)`,
/// so the predicate is monotone and bisection on `log K` finds the supremum.
pub fn excluded_stretch(delta: f64, gamma: f64, n_available: u64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0 / 14.0) || !(gamma > 0.0 && gamma < 1.0 - 14.0 * delta) {
        return Err(Error::Domain(format!("(delta, gamma) = ({delta}, {gamma}) is not admissible")));
    }
    let n = usable_squares(n_available);
    if n < 7 {
        return Err(Error::Precondition(format!("N = {n_available} is below 7")));
    }
    let grid = alpha_grid(delta, SearchLimits::default().alpha_steps);
    let (mut lo, mut hi) = (STRETCH_BRACKET.0.ln(), STRETCH_BRACKET.1.ln());
    if !excluded_at(delta, gamma, lo.exp(), n, &grid) {
        return Ok(0.0);
    }
    if excluded_at(delta, gamma, hi.exp(), n, &grid) {
        return Ok(hi.exp());
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if excluded_at(delta, gamma, mid.exp(), n, &grid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(lo.exp())
}

/// `max_α √(q/(28√(α(2−α))))` over the grid: the excluded stretch as
/// `N → ∞`. It grows without bound as the grid is refined towards `α = 0`.
pub fn stretch_ceiling(delta: f64, gamma: f64) -> f64 {
    alpha_grid(delta, SearchLimits::default().alpha_steps)
        .into_iter()
        .filter_map(|a| {
            let q = q_value(delta, gamma, a).ok().filter(|q| *q > 0.0)?;
            Some((q / (28.0 * (a * (2.0 - a)).sqrt())).sqrt())
        })
        .fold(0.0, f64::max)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelCoverage {
    /// Birth level of the covered unit.
    pub birth: usize,
    /// Finest squares along one of its edges at full depth.
    pub squares: u128,
    pub excluded_stretch: f64,
}

/// Coverage of the edges of units of each birth level `b < J` by the
/// finest squares, `∏_{k=b+1}^{J} n_k`, with the stretch each excludes.
/// The last entry (youngest units, `n_J` squares) is the conservative one.
pub fn coverage_by_birth(delta: f64, gamma: f64, branching: &[u64], depth: usize) -> Result<Vec<LevelCoverage>> {
    if branching.len() + 1 < depth {
        return Err(Error::Structural(format!("depth {depth} needs {} branching counts", depth - 1)));
    }
    (1..depth)
        .map(|birth| {
            let squares: u128 = branching[birth - 1..depth - 1].iter().map(|&n| n as u128).product();
            let n = u64::try_from(squares).unwrap_or(u64::MAX);
            Ok(LevelCoverage { birth, squares, excluded_stretch: excluded_stretch(delta, gamma, n)? })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{rat, to_f64};
    use proptest::prelude::*;

    #[test]
    fn q_examples() {
        assert_eq!(q_value(1.0 / 28.0, 0.0, 0.001).unwrap(), 14.0);
        assert!(matches!(q_value(1.0 / 28.0, 0.01, alpha_limit(1.0 / 28.0)), Err(Error::Domain(_))));
        // dual path: the two volume bounds composed separately
        let (d, g, a) = (1.0 / 28.0, 0.01, 1e-3);
        let h_v = (1.0 - g) / (2.0 * d);
        let h_c = 7.0 * g / (1.0 - 14.0 * a - 14.0 * d);
        assert!((q_value(d, g, a).unwrap() - (h_v - h_c)).abs() < 1e-12);
        let exact = q_value_exact(&rat(1, 28), &rat(1, 100), &rat(1, 1000)).unwrap();
        assert!((to_f64(&exact) - q_value(d, g, a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn large_n0_point_is_a_contradiction() {
        let w = contradiction_holds(1.0 / 28.0, 0.005, 2.0, 1e-6, 7_000_000).unwrap();
        assert!(w.contradiction, "{w:?}");
    }

    #[test]
    fn nonpositive_q_is_rejected() {
        // gamma close to 1 - 14 delta drives q negative
        let err = contradiction_holds(1.0 / 28.0, 0.49, 2.0, 0.017, 700).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn witness_is_minimal_and_reaudits() {
        let (d, g, k) = (1.0 / 28.0, 0.005, 2.0);
        let w = find_witness(d, g, k, SearchLimits::default()).unwrap().unwrap();
        assert!(w.contradiction);
        let again = contradiction_holds(d, g, k, w.alpha, w.N0).unwrap();
        assert_eq!(again, w);
        assert!(w.N0.is_multiple_of(7));
        for alpha in alpha_grid(d, 64) {
            if w.N0 > 7 {
                let below = contradiction_holds(d, g, k, alpha, w.N0 - 7);
                assert!(!below.is_ok_and(|b| b.contradiction));
            }
        }
    }

    #[test]
    fn witness_n0_grows_with_k() {
        let ns: Vec<_> = [1.0, 2.0, 4.0, 8.0]
            .iter()
            .map(|&k| find_witness(1.0 / 28.0, 0.005, k, SearchLimits::default()).unwrap().unwrap().N0)
            .collect();
        assert!(ns.windows(2).all(|w| w[0] <= w[1]), "{ns:?}");
    }

    #[test]
    fn tight_limits_give_no_witness() {
        let d = 1.0 / 28.0;
        let g = (1.0 - 14.0 * d) * 0.999;
        let limits = SearchLimits { alpha_steps: 64, max_n0: 7_000 };
        assert!(find_witness(d, g, 2.0, limits).unwrap().is_none());
    }

    /// `K_α = √u*` with `u*` the positive root of `A u² + B u − q² = 0`,
/// maximised over the grid.
    fn closed_form_stretch(d: f64, g: f64, n: u64) -> f64 {
        let n = n as f64;
        alpha_grid(d, 64)
            .into_iter()
            .filter_map(|a| {
                let q = q_value(d, g, a).ok().filter(|q| *q > 0.0)?;
                let big_a = 196.0 * (4.0 / n + 4.0 / (n * n));
                let big_b = 28.0 * q * (a * (2.0 - a)).sqrt();
                // rationalised root, stable when A is tiny
                let u = 2.0 * q * q / (big_b + (big_b * big_b + 4.0 * big_a * q * q).sqrt());
                Some(u.sqrt())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn excluded_stretch_matches_closed_form() {
        let (d, g) = (1.0 / 28.0, 0.005);
        for n in [7, 700, 7_000, 700_000, 70_000_000] {
            let k = excluded_stretch(d, g, n).unwrap();
            let want = closed_form_stretch(d, g, n);
            assert!((k / want - 1.0).abs() < 1e-3, "N={n}: {k} vs {want}");
        }
        let ceiling = stretch_ceiling(d, g);
        assert!(excluded_stretch(d, g, 7_000_000_000_000).unwrap() <= ceiling * (1.0 + 1e-9));
        // the supremum sits at the finest grid α
        let finest = *alpha_grid(d, 64).last().unwrap();
        let at_finest = (q_value(d, g, finest).unwrap() / (28.0 * (finest * (2.0 - finest)).sqrt())).sqrt();
        assert_eq!(ceiling, at_finest);
    }

    #[test]
    fn coverage_levels() {
        let c = coverage_by_birth(1.0 / 28.0, 0.005, &[84, 168], 3).unwrap();
        assert_eq!(c.iter().map(|l| l.squares).collect::<Vec<_>>(), vec![84 * 168, 168]);
        assert!(c[0].excluded_stretch >= c[1].excluded_stretch);
    }

    proptest! {
        #[test]
        fn rhs_monotone(
            q in 0.1f64..100.0,
            k in 0.1f64..10.0,
            dk in 1e-6f64..1.0,
            alpha in 1e-8f64..0.99,
            da in 1e-9f64..1e-2,
            n in 7u64..10_000_000,
            dn in 1u64..1000,
        ) {
            let base = inequality_rhs(q, k, alpha, n as f64);
            prop_assert!(inequality_rhs(q, k, alpha, (n + dn) as f64) < base);
            prop_assert!(inequality_rhs(q, k + dk, alpha, n as f64) > base);
            prop_assume!(alpha + da < 1.0);
            prop_assert!(inequality_rhs(q, k, alpha + da, n as f64) > base);
        }

        #[test]
        fn q_float_matches_exact(dn in 1i64..50, gn in 1i64..1000, an in 1i64..1000) {
            let delta = rat(1, 14 + dn);
            let gamma = rat(gn, 2000);
            let alpha = rat(an, 1_000_000);
            let exact = q_value_exact(&delta, &gamma, &alpha).unwrap();
            let float = q_value(to_f64(&delta), to_f64(&gamma), to_f64(&alpha)).unwrap();
            prop_assert!((to_f64(&exact) - float).abs() <= 1e-12 * to_f64(&exact).abs().max(1.0));
        }
    }
}
