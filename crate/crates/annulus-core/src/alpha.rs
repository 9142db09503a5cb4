//! Rotation-number specifications and their certified enclosures.
//!
//! Every way of naming an irrational alpha in (0,1) comes with a rational
//! interval `[lo, hi]` that provably contains it. Quadratic surds and
//! Liouville-type series can tighten their own interval on demand; a decimal
//! string is stuck with the digits it was given.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symbolic description of an irrational number in (0,1).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum AlphaSpec {
    /// (a + b*sqrt(d)) / c with integer a, b, c and nonsquare d > 1.
    Surd { a: i64, b: i64, d: u64, c: i64 },
    /// Sum over k >= 1 of base^(-k!), a Liouville number.
    FactorialSeries { base: u32 },
    /// A plain decimal expansion "0.d1d2..."; the value is certified only
    /// to the digits given.
    Decimal { digits: String },
}

impl AlphaSpec {
    /// Parse a CLI/config spec string.
    ///
    /// Accepted forms: `golden`, `sqrt2m1`, `surd:a,b,d,c`,
    /// `series:factorial<BASE>`, `dec:0.xxxx` or a bare decimal literal.
    pub fn parse(s: &str) -> Result<AlphaSpec> {
        let s = s.trim();
        match s {
            "golden" => return Ok(AlphaSpec::Surd { a: -1, b: 1, d: 5, c: 2 }),
            "sqrt2m1" | "sqrt2-1" => return Ok(AlphaSpec::Surd { a: -1, b: 1, d: 2, c: 1 }),
            _ => {}
        }
        if let Some(rest) = s.strip_prefix("surd:") {
            let parts: Vec<&str> = rest.split(',').collect();
            if parts.len() != 4 {
                return Err(Error::BadAlphaSpec(format!("surd wants a,b,d,c: {s}")));
            }
            let a = parts[0].trim().parse().map_err(|_| Error::BadAlphaSpec(s.into()))?;
            let b = parts[1].trim().parse().map_err(|_| Error::BadAlphaSpec(s.into()))?;
            let d = parts[2].trim().parse().map_err(|_| Error::BadAlphaSpec(s.into()))?;
            let c = parts[3].trim().parse().map_err(|_| Error::BadAlphaSpec(s.into()))?;
            let spec = AlphaSpec::Surd { a, b, d, c };
            spec.validate()?;
            return Ok(spec);
        }
        if let Some(rest) = s.strip_prefix("series:factorial") {
            let base: u32 = rest.parse().map_err(|_| Error::BadAlphaSpec(s.into()))?;
            if base < 2 {
                return Err(Error::BadAlphaSpec("series base must be >= 2".into()));
            }
            return Ok(AlphaSpec::FactorialSeries { base });
        }
        let digits = s.strip_prefix("dec:").unwrap_or(s);
        if let Some(frac) = digits.strip_prefix("0.") {
            if !frac.is_empty() && frac.chars().all(|c| c.is_ascii_digit()) {
                return Ok(AlphaSpec::Decimal { digits: frac.to_string() });
            }
        }
        Err(Error::BadAlphaSpec(s.into()))
    }

    /// Canonical display form (round-trips through `parse`).
    pub fn to_spec_string(&self) -> String {
        match self {
            AlphaSpec::Surd { a: -1, b: 1, d: 5, c: 2 } => "golden".into(),
            AlphaSpec::Surd { a: -1, b: 1, d: 2, c: 1 } => "sqrt2m1".into(),
            AlphaSpec::Surd { a, b, d, c } => format!("surd:{a},{b},{d},{c}"),
            AlphaSpec::FactorialSeries { base } => format!("series:factorial{base}"),
            AlphaSpec::Decimal { digits } => format!("dec:0.{digits}"),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            AlphaSpec::Surd { b, d, c, .. } => {
                if *c == 0 || *b == 0 {
                    return Err(Error::BadAlphaSpec("surd needs b != 0, c != 0".into()));
                }
                let s = integer_sqrt(&BigUint::from(*d));
                if &s * &s == BigUint::from(*d) {
                    return Err(Error::BadAlphaSpec(format!("{d} is a perfect square")));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Whether the enclosure can be tightened arbitrarily.
    pub fn refinable(&self) -> bool {
        !matches!(self, AlphaSpec::Decimal { .. })
    }

    /// A certified enclosure `[lo, hi]` of the value, with
    /// `hi - lo <= 2^-precision_bits` whenever the spec is refinable.
    /// For decimals the interval is fixed by the digit count and the
    /// request is only honored as far as the digits allow.
    pub fn enclosure(&self, precision_bits: u32) -> Result<(BigRational, BigRational)> {
        let (lo, hi) = match self {
            AlphaSpec::Surd { a, b, d, c } => surd_enclosure(*a, *b, *d, *c, precision_bits)?,
            AlphaSpec::FactorialSeries { base } => series_enclosure(*base, precision_bits),
            AlphaSpec::Decimal { digits } => {
                let l = digits.len() as u32;
                let den = BigInt::from(10u32).pow(l);
                let num: BigInt = digits.parse().map_err(|_| {
                    Error::BadAlphaSpec(format!("bad decimal digits: {digits}"))
                })?;
                let lo = BigRational::new(num.clone(), den.clone());
                let hi = BigRational::new(num + BigInt::one(), den);
                (lo, hi)
            }
        };
        if lo <= BigRational::zero() || hi >= BigRational::one() {
            return Err(Error::BadAlphaSpec(format!(
                "alpha must lie strictly inside (0,1), got enclosure [{lo}, {hi}]"
            )));
        }
        Ok((lo, hi))
    }
}

fn surd_enclosure(
    a: i64,
    b: i64,
    d: u64,
    c: i64,
    precision_bits: u32,
) -> Result<(BigRational, BigRational)> {
    // sqrt(d) in [s/2^k, (s+1)/2^k] with s = isqrt(d * 4^k).
    let k = precision_bits + 4;
    let scaled = BigUint::from(d) << (2 * k);
    let s = integer_sqrt(&scaled);
    let den = BigInt::one() << k;
    let lo_rt = BigRational::new(BigInt::from(s.clone()), den.clone());
    let hi_rt = BigRational::new(BigInt::from(s + BigUint::one()), den);
    let a = BigRational::from(BigInt::from(a));
    let b = BigRational::from(BigInt::from(b));
    let c = BigRational::from(BigInt::from(c));
    let v1 = (&a + &b * lo_rt) / &c;
    let v2 = (&a + &b * hi_rt) / &c;
    if v1 <= v2 {
        Ok((v1, v2))
    } else {
        Ok((v2, v1))
    }
}

fn series_enclosure(base: u32, precision_bits: u32) -> (BigRational, BigRational) {
    // Partial sum up to K terms; the tail is within (0, 2*base^(-(K+1)!)).
    let bits_per_digit = (base as f64).log2();
    let mut k_max = 2usize;
    let mut fact = 6u64; // (k_max+1)!
    while ((fact as f64) * bits_per_digit) < (precision_bits as f64 + 2.0) && k_max < 9 {
        k_max += 1;
        fact *= (k_max as u64) + 1;
    }
    let mut sum = BigRational::zero();
    let big_base = BigInt::from(base);
    let mut f = 1u64;
    for k in 1..=k_max as u64 {
        f *= k;
        sum += BigRational::new(BigInt::one(), big_base.pow(f as u32));
    }
    let tail = BigRational::new(BigInt::from(2), big_base.pow((f * (k_max as u64 + 1)) as u32));
    let hi = &sum + &tail;
    (sum, hi)
}

/// Floor of the square root of a nonnegative big integer (Newton).
pub fn integer_sqrt(n: &BigUint) -> BigUint {
    if n.is_zero() {
        return BigUint::zero();
    }
    let bits = n.bits();
    let mut x = BigUint::one() << bits.div_ceil(2);
    loop {
        let next = (&x + n / &x) >> 1;
        if next >= x {
            return x;
        }
        x = next;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num::ToPrimitive;

    #[test]
    fn parse_round_trip() {
        for s in ["golden", "sqrt2m1", "surd:1,2,7,5", "series:factorial10", "dec:0.25000001"] {
            let spec = AlphaSpec::parse(s).unwrap();
            assert_eq!(AlphaSpec::parse(&spec.to_spec_string()).unwrap(), spec);
        }
        assert!(AlphaSpec::parse("nonsense").is_err());
        assert!(AlphaSpec::parse("surd:1,1,4,2").is_err()); // perfect square
        assert!(AlphaSpec::parse("0.5x").is_err());
    }

    #[test]
    fn golden_enclosure_tightens() {
        let spec = AlphaSpec::parse("golden").unwrap();
        let (lo, hi) = spec.enclosure(160).unwrap();
        assert!(lo < hi);
        let width = &hi - &lo;
        let bound = BigRational::new(BigInt::one(), BigInt::one() << 160);
        assert!(width <= bound);
        let mid = (lo + hi) / BigRational::from(BigInt::from(2));
        let v = mid.to_f64().unwrap();
        assert!((v - 0.618_033_988_749_894_9).abs() < 1e-15);
    }

    #[test]
    fn series_enclosure_contains_value() {
        let spec = AlphaSpec::FactorialSeries { base: 10 };
        let (lo, hi) = spec.enclosure(200).unwrap();
        assert!(lo.to_f64().unwrap() > 0.110000999);
        assert!(hi.to_f64().unwrap() < 0.110001001);
    }

    #[test]
    fn decimal_width_fixed() {
        let spec = AlphaSpec::parse("dec:0.4142").unwrap();
        let (lo, hi) = spec.enclosure(500).unwrap();
        let width = &hi - &lo;
        assert_eq!(width, BigRational::new(BigInt::one(), BigInt::from(10_000)));
    }
}
