//! Continued-fraction expansion with certified quotients.
//!
//! The expansion runs on a rational enclosure of alpha rather than on a
//! floating approximation: a partial quotient is emitted only when both
//! interval endpoints agree on it, so every convergent in a
//! [`RotationNumber`] is a true convergent of the underlying irrational.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Signed, ToPrimitive, Zero};

use crate::alpha::AlphaSpec;
use crate::error::{Error, Result};
use crate::fixed::CirclePos;

/// A reduced fraction p/q with q >= 1 (a convergent of some alpha).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Convergent {
    pub p: BigUint,
    pub q: BigUint,
}

impl Convergent {
    pub fn as_ratio(&self) -> BigRational {
        BigRational::new(
            BigInt::from(self.p.clone()),
            BigInt::from(self.q.clone()),
        )
    }

    pub fn q_u128(&self) -> Option<u128> {
        self.q.to_u128()
    }
}

impl std::fmt::Display for Convergent {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}/{}", self.p, self.q)
    }
}

/// An irrational rotation number with certified continued-fraction data.
#[derive(Clone, Debug)]
pub struct RotationNumber {
    spec: AlphaSpec,
    lo: BigRational,
    hi: BigRational,
    fixed: CirclePos,
    certified_bits: u32,
    quotients: Vec<BigUint>,
    convergents: Vec<Convergent>,
}

/// Expand `spec` to `depth` certified partial quotients.
///
/// Refinable specs (surds, series) tighten their enclosure automatically;
/// a decimal spec fails with `InsufficientPrecision` once its digits no
/// longer pin down the next quotient.
pub fn cf_expand(spec: &AlphaSpec, depth: usize) -> Result<RotationNumber> {
    if depth == 0 {
        return Err(Error::InvalidParameter("cf depth must be >= 1".into()));
    }
    let mut precision: u32 = 256;
    const PRECISION_CAP: u32 = 1 << 22;
    loop {
        let (lo, hi) = spec.enclosure(precision)?;
        match expand_interval(&lo, &hi, depth) {
            Ok((quotients, convergents)) => {
                let fixed = CirclePos::from_ratio(&((&lo + &hi) / BigRational::from(BigInt::from(2))));
                let certified_bits = interval_bits(&lo, &hi);
                return Ok(RotationNumber {
                    spec: spec.clone(),
                    lo,
                    hi,
                    fixed,
                    certified_bits,
                    quotients,
                    convergents,
                });
            }
            Err(reached) => {
                if !spec.refinable() || precision >= PRECISION_CAP {
                    return Err(Error::InsufficientPrecision(format!(
                        "only {reached} of {depth} quotients certified at {precision} bits for {}",
                        spec.to_spec_string()
                    )));
                }
                precision = (precision * 2).min(PRECISION_CAP);
            }
        }
    }
}

/// Interval continued-fraction step loop. Returns quotients + convergents,
/// or Err(number_of_quotients_certified) if the interval ran out.
fn expand_interval(
    lo0: &BigRational,
    hi0: &BigRational,
    depth: usize,
) -> std::result::Result<(Vec<BigUint>, Vec<Convergent>), usize> {
    let mut lo = lo0.clone();
    let mut hi = hi0.clone();
    let mut quotients = Vec::with_capacity(depth);
    let mut convergents = Vec::with_capacity(depth);
    let (mut p_prev, mut p_cur) = (BigUint::one(), BigUint::zero());
    let (mut q_prev, mut q_cur) = (BigUint::zero(), BigUint::one());
    for k in 0..depth {
        if lo.is_zero() || lo.is_negative() || hi >= BigRational::one() {
            return Err(k);
        }
        // x in [lo, hi] => 1/x in [1/hi, 1/lo]; quotient certified when the
        // floors at both ends agree.
        let a_from_hi = floor_recip(&hi);
        let a_from_lo = floor_recip(&lo);
        if a_from_hi != a_from_lo {
            return Err(k);
        }
        let a = a_from_hi;
        let a_rat = BigRational::from(BigInt::from(a.clone()));
        let new_lo = hi.recip() - &a_rat;
        let new_hi = lo.recip() - &a_rat;
        lo = new_lo;
        hi = new_hi;
        let p_next = &a * &p_cur + &p_prev;
        let q_next = &a * &q_cur + &q_prev;
        p_prev = std::mem::replace(&mut p_cur, p_next);
        q_prev = std::mem::replace(&mut q_cur, q_next);
        quotients.push(a);
        convergents.push(Convergent { p: p_cur.clone(), q: q_cur.clone() });
    }
    Ok((quotients, convergents))
}

fn floor_recip(x: &BigRational) -> BigUint {
    // floor(1/x) for x in (0,1): denom/num integer division.
    (x.denom() / x.numer()).to_biguint().expect("positive")
}

fn interval_bits(lo: &BigRational, hi: &BigRational) -> u32 {
    let width = hi - lo;
    if width.is_zero() {
        return u32::MAX;
    }
    // floor(-log2(width)) via bit lengths.
    let n = width.numer().abs().to_biguint().unwrap();
    let d = width.denom().to_biguint().unwrap();
    (d.bits() as i64 - n.bits() as i64).max(0) as u32
}

impl RotationNumber {
    pub fn spec(&self) -> &AlphaSpec {
        &self.spec
    }

    /// Fixed-point value (midpoint of the certified enclosure).
    pub fn fixed(&self) -> CirclePos {
        self.fixed
    }

    pub fn to_f64(&self) -> f64 {
        self.fixed.to_f64()
    }

    /// Bits of precision the enclosure certifies.
    pub fn certified_bits(&self) -> u32 {
        self.certified_bits
    }

    pub fn enclosure(&self) -> (&BigRational, &BigRational) {
        (&self.lo, &self.hi)
    }

    pub fn quotients(&self) -> &[BigUint] {
        &self.quotients
    }

    pub fn convergents(&self) -> &[Convergent] {
        &self.convergents
    }

    pub fn depth(&self) -> usize {
        self.convergents.len()
    }

    /// Re-expand to at least `depth` quotients.
    pub fn extended(&self, depth: usize) -> Result<RotationNumber> {
        if depth <= self.depth() {
            return Ok(self.clone());
        }
        cf_expand(&self.spec, depth)
    }

    /// Certified bounds `[min, max]` for |alpha - r|.
    pub fn dist_bounds(&self, r: &BigRational) -> (BigRational, BigRational) {
        if r < &self.lo {
            (&self.lo - r, &self.hi - r)
        } else if r > &self.hi {
            (r - &self.hi, r - &self.lo)
        } else {
            let a = r - &self.lo;
            let b = &self.hi - r;
            (BigRational::zero(), if a > b { a } else { b })
        }
    }

    /// Certified upper bound for |alpha - p_k/q_k|.
    pub fn dist_upper(&self, c: &Convergent) -> BigRational {
        self.dist_bounds(&c.as_ratio()).1
    }

    /// `n * alpha mod 1` in fixed point (exact wrapping reduction of the
    /// stored 128-bit value).
    pub fn multiple(&self, n: u128) -> CirclePos {
        self.fixed.mul_int(n)
    }

    /// Exact rational `‖q_k alpha‖` bounds from the enclosure.
    pub fn norm_bounds(&self, q: &BigUint) -> (BigRational, BigRational) {
        // ‖q alpha‖ where q*alpha in [q*lo, q*hi]; assumes the interval is
        // narrow enough that the two endpoints land in the same unit cell
        // around the nearest integer. Falls back to [0, 1/2] if not.
        let ql = BigRational::new(BigInt::from(q.clone()), BigInt::one()) * &self.lo;
        let qh = BigRational::new(BigInt::from(q.clone()), BigInt::one()) * &self.hi;
        let nearest = |x: &BigRational| -> BigInt {
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            (x + half).floor().to_integer()
        };
        let nl = nearest(&ql);
        let nh = nearest(&qh);
        if nl != nh {
            return (
                BigRational::zero(),
                BigRational::new(BigInt::one(), BigInt::from(2)),
            );
        }
        let dl = (&ql - BigRational::from(nl.clone())).abs();
        let dh = (&qh - BigRational::from(nl)).abs();
        if dl <= dh {
            (dl, dh)
        } else {
            (dh, dl)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::Integer;

    fn golden(depth: usize) -> RotationNumber {
        cf_expand(&AlphaSpec::parse("golden").unwrap(), depth).unwrap()
    }

    #[test]
    fn golden_quotients_all_one() {
        let r = golden(10);
        assert!(r.quotients().iter().all(|a| a == &BigUint::one()));
        // Fibonacci denominators 1,2,3,5,8,...
        let qs: Vec<u64> = r.convergents().iter().map(|c| c.q.to_u64().unwrap()).collect();
        assert_eq!(qs, vec![1, 2, 3, 5, 8, 13, 21, 34, 55, 89]);
    }

    #[test]
    fn sqrt2m1_quotients_all_two() {
        let r = cf_expand(&AlphaSpec::parse("sqrt2m1").unwrap(), 10).unwrap();
        assert!(r.quotients().iter().all(|a| a == &BigUint::from(2u32)));
        let qs: Vec<u64> = r.convergents().iter().map(|c| c.q.to_u64().unwrap()).collect();
        assert_eq!(qs[..5], [2, 5, 12, 29, 70]);
    }

    #[test]
    fn factorial_series_matches_exact_partial_sum_cf() {
        // Independent oracle: exact Euclid CF of the rational partial sum
        // with k <= 6 terms; the certified expansion of the full series must
        // agree on the first 8 quotients.
        let mut num = BigUint::zero();
        let den = BigUint::from(10u32).pow(720); // 6! = 720
        let mut f = 1u64;
        for k in 1..=6u64 {
            f *= k;
            num += BigUint::from(10u32).pow((720 - f) as u32);
        }
        let oracle = rational_cf(&num, &den, 8);
        let r = cf_expand(&AlphaSpec::parse("series:factorial10").unwrap(), 8).unwrap();
        assert_eq!(r.quotients(), &oracle[..]);
        assert_eq!(&oracle[..3], &[BigUint::from(9u32), BigUint::from(11u32), BigUint::from(99u32)]);
    }

    /// Plain Euclid expansion of p/q (test oracle).
    fn rational_cf(p: &BigUint, q: &BigUint, depth: usize) -> Vec<BigUint> {
        let mut out = Vec::new();
        let (mut a, mut b) = (q.clone(), p.clone()); // expanding p/q in (0,1): 1/x steps
        for _ in 0..depth {
            if b.is_zero() {
                break;
            }
            let (quot, rem) = a.div_rem(&b);
            out.push(quot);
            a = b;
            b = rem;
        }
        out
    }

    #[test]
    fn decimal_runs_out_of_precision() {
        let spec = AlphaSpec::parse("dec:0.61803398").unwrap();
        // Shallow depth works, deep depth must fail rather than guess.
        assert!(cf_expand(&spec, 5).is_ok());
        let err = cf_expand(&spec, 40).unwrap_err();
        assert!(matches!(err, Error::InsufficientPrecision(_)));
    }

    #[test]
    fn convergent_recurrence_and_gcd() {
        let r = golden(20);
        let q = r.quotients();
        let c = r.convergents();
        for k in 2..c.len() {
            assert_eq!(c[k].p, &q[k] * &c[k - 1].p + &c[k - 2].p);
            assert_eq!(c[k].q, &q[k] * &c[k - 1].q + &c[k - 2].q);
        }
        for ck in c {
            assert_eq!(ck.p.gcd(&ck.q), BigUint::one());
        }
        for k in 1..c.len() {
            assert!(c[k].q > c[k - 1].q || (k == 1 && c[k].q >= c[k - 1].q));
        }
    }

    #[test]
    fn approximation_quality_brackets() {
        // 1/(q_k(q_k+q_{k+1})) < |alpha - p_k/q_k| < 1/(q_k q_{k+1}),
        // checked in exact interval arithmetic.
        for spec in ["golden", "sqrt2m1", "series:factorial10"] {
            let r = cf_expand(&AlphaSpec::parse(spec).unwrap(), 12).unwrap();
            let c = r.convergents();
            for k in 0..c.len() - 1 {
                let (dist_lo, dist_hi) = r.dist_bounds(&c[k].as_ratio());
                let qk = BigInt::from(c[k].q.clone());
                let qk1 = BigInt::from(c[k + 1].q.clone());
                let upper = BigRational::new(BigInt::one(), &qk * &qk1);
                let lower = BigRational::new(BigInt::one(), &qk * (&qk + &qk1));
                assert!(dist_hi < upper, "{spec} k={k}");
                assert!(dist_lo > lower, "{spec} k={k}");
            }
        }
    }

    #[test]
    fn fixed_point_value_close() {
        let r = golden(10);
        assert!((r.to_f64() - 0.618_033_988_749_894_9).abs() < 1e-15);
        assert!(r.certified_bits() >= 128);
    }
}
