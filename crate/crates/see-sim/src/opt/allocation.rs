//! Common-message split across users: maximize the minimum of
//! `a_k * r_c + b_k` over the simplex.
//!
//! Solved twice on purpose: a closed-form water-level equalizer (the
//! production path) and a small LP through the conic layer; the two must
//! agree and the tests hold them to that.

use crate::conic::{ConicProgram, LinExpr, SolveStatus};
use crate::phy::RateAllocation;

/// Minimum per-user value of an allocation.
pub fn min_rate(alloc: &RateAllocation, r_c: f64, b: &[f64]) -> f64 {
    alloc
        .a
        .iter()
        .zip(b)
        .map(|(&a, &bk)| a * r_c + bk)
        .fold(f64::INFINITY, f64::min)
}

/// Closed-form solution. With `r_c = 0` every allocation is equivalent and
/// the uniform one is returned. Otherwise the optimal level `z` satisfies
/// `sum_k clamp((z - b_k)/r_c, 0, 1) = 1` and is found by bisection; the
/// clamped fractions are the allocation.
pub fn solve_allocation(r_c: f64, b: &[f64]) -> RateAllocation {
    let k = b.len();
    assert!(k > 0);
    if r_c <= 0.0 {
        return RateAllocation::uniform(k);
    }
    let frac = |z: f64, bk: f64| ((z - bk) / r_c).clamp(0.0, 1.0);
    let g = |z: f64| b.iter().map(|&bk| frac(z, bk)).sum::<f64>();
    let b_min = b.iter().cloned().fold(f64::INFINITY, f64::min);
    let (mut lo, mut hi) = (b_min, b_min + r_c);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let z = 0.5 * (lo + hi);
    let mut a: Vec<f64> = b.iter().map(|&bk| frac(z, bk)).collect();
    // absorb the bisection residue into the strictly interior entries
    let interior: Vec<usize> = (0..k).filter(|&i| a[i] > 0.0 && a[i] < 1.0).collect();
    let residue = 1.0 - a.iter().sum::<f64>();
    if interior.is_empty() {
        let sum: f64 = a.iter().sum();
        for ai in &mut a {
            *ai /= sum;
        }
    } else {
        let share = residue / interior.len() as f64;
        for i in interior {
            a[i] += share;
        }
    }
    RateAllocation { a }
}

/// The same problem as a linear program; `None` when the solver cannot
/// certify optimality (which for this LP indicates a bug upstream).
pub fn allocation_lp(r_c: f64, b: &[f64]) -> Option<(RateAllocation, f64)> {
    let k = b.len();
    let mut p = ConicProgram::new();
    let a = p.scalars("a", k);
    let zeta = p.scalar("zeta");
    p.set_objective(LinExpr::var(zeta));
    let mut sum = LinExpr::constant(-1.0);
    for (i, &ai) in a.iter().enumerate() {
        p.nonneg(LinExpr::var(ai));
        p.le(LinExpr::var(zeta), LinExpr::term(ai, r_c).offset(b[i]));
        sum = sum.push(ai, 1.0);
    }
    p.eq_zero(sum);
    let r = p.solve();
    if r.status != SolveStatus::Optimal {
        return None;
    }
    // interior-point output sits on the simplex only to solver precision
    let mut vals: Vec<f64> = a.iter().map(|&i| r.x[i].max(0.0)).collect();
    let sum: f64 = vals.iter().sum();
    for v in &mut vals {
        *v /= sum;
    }
    let alloc = RateAllocation { a: vals };
    Some((alloc, r.x[zeta]))
}
