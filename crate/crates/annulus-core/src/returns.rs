//! Closest return times of an irrational rotation and the interval
//! refinement procedure built on them.
//!
//! A positive integer q is a closest return time for alpha when
//! `‖j alpha‖ > ‖q alpha‖` for every 0 < j < q. Those q are exactly the
//! continued-fraction convergent denominators (plus the vacuous q = 1), and
//! both routes are implemented: an exact fixed-point scan and the convergent
//! table.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fixed::CirclePos;
use crate::rotation::{Convergent, RotationNumber};

/// Direct predicate: `‖j alpha‖ > ‖q alpha‖` for all 0 < j < q.
/// Exact integer comparisons on the fixed-point reduction; O(q).
pub fn is_closest_return(alpha: &RotationNumber, q: u64) -> bool {
    if q == 0 {
        return false;
    }
    let step = alpha.fixed();
    let target = step.mul_int(q as u128).dist_bits();
    let mut pos = CirclePos::ZERO;
    for _ in 1..q {
        pos = pos.add(step);
        if pos.dist_bits() <= target {
            return false;
        }
    }
    true
}

/// All closest return times up to `q_max`, via the convergent table.
pub fn closest_return_times(alpha: &RotationNumber, q_max: u64) -> Result<Vec<u64>> {
    if q_max < 1 {
        return Err(Error::InvalidParameter("q_max must be >= 1".into()));
    }
    let alpha = extend_past(alpha, &BigUint::from(q_max))?;
    let mut out = vec![1u64];
    for c in alpha.convergents() {
        if let Some(q) = c.q.to_u64() {
            if q > q_max {
                break;
            }
            if q > *out.last().unwrap() {
                out.push(q);
            }
        } else {
            break;
        }
    }
    Ok(out)
}

/// Closest return times by brute minimum scan: q enters the list exactly
/// when `‖q alpha‖` sets a new strict minimum. Reference route for the
/// convergent-based listing.
pub fn closest_return_times_brute(alpha: &RotationNumber, q_max: u64) -> Vec<u64> {
    let step = alpha.fixed();
    let mut out = Vec::new();
    let mut pos = CirclePos::ZERO;
    let mut best = u128::MAX;
    for q in 1..=q_max {
        pos = pos.add(step);
        let d = pos.dist_bits();
        if d < best {
            best = d;
            out.push(q);
        }
    }
    out
}

/// Make sure the convergent table reaches beyond `bound`.
fn extend_past(alpha: &RotationNumber, bound: &BigUint) -> Result<RotationNumber> {
    let mut cur = alpha.clone();
    loop {
        if cur.convergents().last().map(|c| &c.q > bound).unwrap_or(false) {
            return Ok(cur);
        }
        let next_depth = (cur.depth() * 2).max(8);
        if next_depth > 4096 {
            return Err(Error::InsufficientPrecision(
                "convergent supply exhausted".into(),
            ));
        }
        cur = cur.extended(next_depth)?;
    }
}

/// One interval-refinement step: the smallest positive j such that
/// `j alpha` lies strictly inside the smaller circle arc bounded by
/// `n1 alpha` and `n2 alpha`.
///
/// When no integer up to `n2` lands in that arc (the situation produced by
/// [`refinement_chain`]), the returned `n3` satisfies `n3 > n2` and
/// `n3 - n2` is a closest return time.
pub fn refine_return_step(alpha: &RotationNumber, n1: u64, n2: u64, cap: u64) -> Result<u64> {
    if n1 >= n2 {
        return Err(Error::InvalidParameter("need 0 <= n1 < n2".into()));
    }
    let step = alpha.fixed();
    let p1 = step.mul_int(n1 as u128);
    let p2 = step.mul_int(n2 as u128);
    let (start, len) = smaller_arc(p1, p2)?;
    let mut pos = CirclePos::ZERO;
    for j in 1..=cap {
        pos = pos.add(step);
        let off = pos.sub(start).0;
        if off == 0 || off == len {
            if j != n1 && j != n2 {
                // An exact endpoint hit means the 128-bit grid can no longer
                // separate orbit points: precision is exhausted.
                return Err(Error::InsufficientPrecision(format!(
                    "fixed-point collision at j={j}"
                )));
            }
            continue;
        }
        if off < len {
            return Ok(j);
        }
    }
    Err(Error::HorizonExceeded(format!(
        "no return into the arc within {cap} steps"
    )))
}

/// The smaller of the two arcs bounded by `p1`, `p2`, as (start, length)
/// in raw fixed-point bits.
fn smaller_arc(p1: CirclePos, p2: CirclePos) -> Result<(CirclePos, u128)> {
    let fwd = p2.sub(p1).0; // arc p1 -> p2 going up
    if fwd == 0 {
        return Err(Error::InvalidParameter(
            "arc endpoints coincide in fixed point".into(),
        ));
    }
    if fwd <= 1u128 << 127 {
        Ok((p1, fwd))
    } else {
        Ok((p2, fwd.wrapping_neg()))
    }
}

/// One certified step of the refinement procedure.
#[derive(Clone, Copy, Debug)]
pub struct RefinementStep {
    /// Older interval endpoint (integer index).
    pub n1: u64,
    /// Newer interval endpoint; the minimal integer of the previous step.
    pub n2: u64,
    /// Minimal integer landing strictly inside the current interval.
    pub n3: u64,
}

/// Run the interval refinement chain from the arc bounded by `0` and
/// `anchor alpha` (anchor must be a closest return time) towards the orbit
/// point of index `target`, whose position must lie strictly inside that
/// arc. Every step satisfies `n3 - n2` = closest return time, which is
/// re-asserted here.
pub fn refinement_chain(
    alpha: &RotationNumber,
    anchor: u64,
    target: u64,
    cap: u64,
) -> Result<Vec<RefinementStep>> {
    let step = alpha.fixed();
    let p_anchor = step.mul_int(anchor as u128);
    let p_target = step.mul_int(target as u128);
    {
        let (start, len) = smaller_arc(CirclePos::ZERO, p_anchor)?;
        let off = p_target.sub(start).0;
        if off == 0 || off >= len {
            return Err(Error::InvalidParameter(
                "target orbit point not inside the anchor arc".into(),
            ));
        }
    }
    let mut steps = Vec::new();
    // Interval endpoints as integer indices; `newest` is the minimal integer
    // found for the previous interval.
    let (mut e_old, mut newest) = (0u64, anchor);
    loop {
        let m = refine_return_step(alpha, e_old.min(newest), e_old.max(newest), cap)?;
        debug_assert!(m > newest);
        steps.push(RefinementStep { n1: e_old, n2: newest, n3: m });
        if !is_closest_return(alpha, m - newest) {
            return Err(Error::InvalidParameter(format!(
                "refinement step {m}-{newest} is not a closest return (precision exhausted?)"
            )));
        }
        if m == target {
            return Ok(steps);
        }
        if m > target {
            return Err(Error::HorizonExceeded(
                "refinement chain passed the target index".into(),
            ));
        }
        // Keep the sub-interval that still contains the target point.
        let p_m = step.mul_int(m as u128);
        let (s1, l1) = smaller_arc(step.mul_int(e_old as u128), p_m)?;
        let off = p_target.sub(s1).0;
        if off > 0 && off < l1 {
            // target stays between e_old and m
        } else {
            e_old = newest;
        }
        newest = m;
    }
}

/// Search the convergents for p/q with `|alpha - p/q| < eps / q^tau`,
/// scanning q <= q_max. `tau = (tau_num, tau_den)` and `eps` are exact.
/// Returns the first witness or `None`; badly approximable alphas
/// legitimately produce `None`.
pub fn liouville_witness(
    alpha: &RotationNumber,
    tau: (u32, u32),
    eps: &BigRational,
    q_max: &BigUint,
) -> Result<Option<Convergent>> {
    if tau.1 == 0 || tau.0 == 0 {
        return Err(Error::InvalidParameter("tau must be positive".into()));
    }
    if eps <= &BigRational::zero() {
        return Err(Error::InvalidParameter("eps must be positive".into()));
    }
    let alpha = extend_past(alpha, q_max)?;
    for c in alpha.convergents() {
        if &c.q > q_max {
            break;
        }
        let dist_hi = alpha.dist_upper(c);
        // |alpha - p/q| < eps / q^(u/v)  <=>  dist^v * q^u < eps^v
        let (u, v) = tau;
        let lhs = pow_rat(&dist_hi, v) * BigRational::from(BigInt::from(c.q.pow(u)));
        let rhs = pow_rat(eps, v);
        if lhs < rhs {
            return Ok(Some(c.clone()));
        }
    }
    Ok(None)
}

fn pow_rat(x: &BigRational, e: u32) -> BigRational {
    let mut acc = BigRational::one();
    for _ in 0..e {
        acc *= x;
    }
    acc
}

/// Greedy selection of the frequency denominators for the cocycle series:
/// strictly increasing closest return times q with `‖q alpha‖ < 1/q` and
/// each at least ten times larger than the previous one. The vacuous
/// closest return q = 1 is skipped; selection starts from the first
/// nontrivial one.
pub fn select_phi_denominators(alpha: &RotationNumber, count: usize) -> Result<Vec<BigUint>> {
    if count < 1 {
        return Err(Error::InvalidParameter("count must be >= 1".into()));
    }
    let mut cur = alpha.clone();
    let mut out: Vec<BigUint> = Vec::with_capacity(count);
    let ten = BigUint::from(10u32);
    let mut idx = 0usize;
    while out.len() < count {
        if idx >= cur.convergents().len() {
            let next_depth = (cur.depth() * 2).max(8);
            if next_depth > 4096 {
                return Err(Error::InsufficientPrecision(
                    "convergent supply exhausted while selecting denominators".into(),
                ));
            }
            cur = cur.extended(next_depth)?;
            continue;
        }
        let c = &cur.convergents()[idx];
        idx += 1;
        let q = c.q.clone();
        if q <= BigUint::one() {
            continue;
        }
        if let Some(last) = out.last() {
            if q <= last * &ten {
                continue;
            }
        }
        // ‖q alpha‖ < 1/q, certified from the enclosure.
        let (_, norm_hi) = cur.norm_bounds(&q);
        let inv_q = BigRational::new(BigInt::one(), BigInt::from(q.clone()));
        if norm_hi < inv_q {
            out.push(q);
        }
    }
    Ok(out)
}
