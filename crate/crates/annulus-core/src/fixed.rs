//! Fixed-point arithmetic on the circle R/Z.
//!
//! A [`CirclePos`] stores a point of the circle as a `u128`, i.e. with 128
//! fractional bits. Every reduction `n*x mod 1` is a wrapping integer
//! multiply, so positions stay exact for multipliers far beyond the 2^53
//! range where `f64` arithmetic starts shredding them: for `n <= 10^9` and
//! denominators up to 10^20 the reduced position keeps more than 50 correct
//! bits relative to the stored value.
//!
//! Transcendental evaluations fold the fixed-point value into a quarter
//! period while still in integer form, so `sin_2pi(-x) == -sin_2pi(x)` holds
//! bit for bit.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, One, Signed, ToPrimitive, Zero};

/// One point of R/Z at resolution 2^-128.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Debug, Default)]
pub struct CirclePos(pub u128);

const EIGHTH: u128 = 1u128 << 125;
const QUARTER: u128 = 1u128 << 126;
const HALF: u128 = 1u128 << 127;
/// 2^-128 as f64, for converting raw bits to a real number.
const SCALE: f64 = 1.0 / 340_282_366_920_938_463_463_374_607_431_768_211_456.0;

impl CirclePos {
    pub const ZERO: CirclePos = CirclePos(0);
    pub const HALF: CirclePos = CirclePos(HALF);

    /// Reduce an `f64` modulo 1. Values of either sign are accepted.
    pub fn from_f64(x: f64) -> CirclePos {
        let f = x.rem_euclid(1.0);
        // rem_euclid can return exactly 1.0 for tiny negative x.
        if f >= 1.0 {
            return CirclePos(0);
        }
        CirclePos((f * 2f64.powi(128)) as u128)
    }

    /// Fractional part of a rational number, rounded down to 2^-128.
    pub fn from_ratio(r: &BigRational) -> CirclePos {
        let num = r.numer();
        let den = r.denom();
        let f = num.mod_floor(den); // in [0, den)
        let bits = (f << 128u32) / den;
        CirclePos(bits.to_biguint().expect("nonnegative").to_u128().unwrap_or(u128::MAX))
    }

    /// Fractional part of p/q for nonnegative p.
    pub fn from_uint_ratio(p: &BigUint, q: &BigUint) -> CirclePos {
        assert!(!q.is_zero());
        let f = p % q;
        let bits = (f << 128u32) / q;
        CirclePos(bits.to_u128().unwrap_or(u128::MAX))
    }

    pub fn to_f64(self) -> f64 {
        self.0 as f64 * SCALE
    }

    /// `self + other` on the circle.
    #[inline]
    pub fn add(self, other: CirclePos) -> CirclePos {
        CirclePos(self.0.wrapping_add(other.0))
    }

    #[inline]
    pub fn sub(self, other: CirclePos) -> CirclePos {
        CirclePos(self.0.wrapping_sub(other.0))
    }

    /// `-self` on the circle.
    #[inline]
    pub fn neg(self) -> CirclePos {
        CirclePos(self.0.wrapping_neg())
    }

    /// `n * self mod 1`, exact for any `n` (wrapping multiply).
    #[inline]
    pub fn mul_int(self, n: u128) -> CirclePos {
        CirclePos(self.0.wrapping_mul(n))
    }

    /// `n * self mod 1` for a big integer `n`; only `n mod 2^128` matters.
    pub fn mul_big(self, n: &BigUint) -> CirclePos {
        let reduced = (n % (BigUint::one() << 128u32)).to_u128().expect("reduced");
        self.mul_int(reduced)
    }

    /// Signed nudge by `delta` raw bits (used when mapping in-cell
    /// displacements back down through a cyclic cover).
    #[inline]
    pub fn add_bits(self, delta: i128) -> CirclePos {
        CirclePos(self.0.wrapping_add(delta as u128))
    }

    /// Distance to 0 in R/Z, in [0, 1/2].
    #[inline]
    pub fn dist_to_zero(self) -> f64 {
        self.dist_bits() as f64 * SCALE
    }

    /// Distance to 0 in raw bits (exact integer form).
    #[inline]
    pub fn dist_bits(self) -> u128 {
        self.0.min(self.0.wrapping_neg())
    }

    /// Circle distance between two points, in [0, 1/2].
    #[inline]
    pub fn dist(self, other: CirclePos) -> f64 {
        self.sub(other).dist_to_zero()
    }

    /// Signed representative in (-1/2, 1/2].
    #[inline]
    pub fn signed_rep(self) -> f64 {
        if self.0 > HALF {
            -(self.0.wrapping_neg() as f64 * SCALE)
        } else {
            self.0 as f64 * SCALE
        }
    }

    /// sin(2 pi x), folded in integer arithmetic so that
    /// `sin_2pi(x.neg()) == -sin_2pi(x)` exactly.
    #[inline]
    pub fn sin_2pi(self) -> f64 {
        let mut b = self.0;
        let mut sign = 1.0;
        if b >= HALF {
            sign = -1.0;
            b -= HALF;
        }
        if b >= QUARTER {
            b = HALF - b;
        }
        // b in [0, 2^126]; keep polynomial arguments below an eighth turn.
        if b > EIGHTH {
            sign * cos_kernel((QUARTER - b) as f64 * SCALE)
        } else {
            sign * sin_kernel(b as f64 * SCALE)
        }
    }

    /// cos(2 pi x); even by construction.
    #[inline]
    pub fn cos_2pi(self) -> f64 {
        let mut b = self.0;
        if b > HALF {
            b = b.wrapping_neg();
        }
        let mut sign = 1.0;
        if b > QUARTER {
            sign = -1.0;
            b = HALF - b;
        }
        if b > EIGHTH {
            sign * sin_kernel((QUARTER - b) as f64 * SCALE)
        } else {
            sign * cos_kernel(b as f64 * SCALE)
        }
    }
}

/// sin(2 pi s) for s in [0, 1/4], degree-21 odd polynomial.
#[inline]
fn sin_kernel(s: f64) -> f64 {
    const C: [f64; 11] = [
        6.283185307179586,
        -41.34170224039976,
        81.60524927607506,
        -76.70585975306139,
        42.058693944897655,
        -15.09464257682299,
        3.819952584848282,
        -0.7181223017785006,
        0.10422916220813984,
        -0.012031585942120627,
        0.0011309237482517963,
    ];
    let z = s * s;
    let mut p = C[10];
    for k in (0..10).rev() {
        p = p * z + C[k];
    }
    s * p
}

/// cos(2 pi s) for s in [0, 1/4], degree-22 even polynomial.
#[inline]
fn cos_kernel(s: f64) -> f64 {
    const C: [f64; 12] = [
        1.0,
        -19.739208802178716,
        64.9393940226683,
        -85.45681720669373,
        60.24464137187666,
        -26.4262567833744,
        7.903536371318469,
        -1.714390711088672,
        0.28200596845579123,
        -0.03638284114254567,
        0.0037798342006800396,
        -0.0003229910672070978,
    ];
    let z = s * s;
    let mut p = C[11];
    for k in (0..11).rev() {
        p = p * z + C[k];
    }
    p
}

/// Distance in R/Z from `x` (an arbitrary real) to the nearest integer,
/// in [0, 1/2].
pub fn circle_distance(x: f64) -> f64 {
    let f = x.rem_euclid(1.0);
    f.min(1.0 - f)
}

trait ModFloor {
    fn mod_floor(&self, m: &BigInt) -> BigInt;
}

impl ModFloor for BigInt {
    fn mod_floor(&self, m: &BigInt) -> BigInt {
        let r = self % m;
        if r.is_negative() {
            r + m.abs()
        } else {
            r
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_high_precision_table() {
        // Reference values from a 50-digit evaluation of sin/cos(2 pi t).
        const TABLE: [(f64, f64, f64); 32] = [
            (0.0, 0.0, 1.0),
            (0.125, 0.7071067811865476, 0.7071067811865476),
            (0.25, 1.0, -5.053478687678417e-52),
            (0.375, 0.7071067811865476, -0.7071067811865476),
            (0.5, -1.0106957375356833e-51, -1.0),
            (0.625, -0.7071067811865476, -0.7071067811865476),
            (0.75, -1.0, 4.188808316395721e-51),
            (0.875, -0.7071067811865476, 0.7071067811865476),
            (0.32383276483316237, 0.8943120780391298, -0.44744374738433135),
            (0.15084917392450192, 0.8121416023583748, 0.5834603823043784),
            (0.6509344730398537, -0.8124541913810097, -0.5830250311156714),
            (0.07243628666754276, 0.43957963381279486, 0.898203621422787),
            (0.5358820043066892, -0.22354819606439696, -0.9746928767752199),
            (0.36568891691258554, 0.7472415016104678, -0.6645525850306605),
            (0.057998924774706806, 0.356405566528495, 0.9343313502968326),
            (0.5074357331894203, -0.04670309486896832, -0.9989088151226118),
            (0.03749565844198488, 0.23341883867130986, 0.9723762881484395),
            (0.4336456836623859, 0.404942977725068, -0.9143419408466151),
            (0.06985542357461894, 0.4249571706821359, 0.9052134571943979),
            (0.09071301334386506, 0.5396039900739626, 0.8419189592212892),
            (0.42451918914251396, 0.45668017579547665, -0.8896309442883675),
            (0.8268521246720381, -0.8856631141012772, 0.46432838414254635),
            (0.12380196114964559, 0.7017640516939576, 0.7124094438945068),
            (0.22323896460701453, 0.985896980525282, 0.1673533501042983),
            (0.6274332224055893, -0.7178342462532589, -0.6962140438873778),
            (0.9477089424570057, -0.32267509568641006, 0.9465097900305977),
            (0.5771029486174987, -0.46572358838668454, -0.884930245398037),
            (0.39668047465078016, 0.6045300071465369, -0.796582368910716),
            (0.9762551055929201, -0.14864071094831124, 0.9888912675561357),
            (0.04658268061775628, 0.28852657931370795, 0.9574718862867623),
            (0.8584684590486795, -0.776611375882929, 0.6299799765462583),
            (0.28960928633167626, 0.9691907572189329, -0.2463113398148602),
        ];
        let mut worst = 0f64;
        for (t, s, c) in TABLE {
            let p = CirclePos::from_f64(t);
            worst = worst.max((p.sin_2pi() - s).abs()).max((p.cos_2pi() - c).abs());
        }
        assert!(worst < 5e-16, "trig kernel error {worst}");
        // Coarse consistency with libm over a dense grid (bound covers the
        // reference's own argument rounding too).
        let mut worst = 0f64;
        for i in 0..200_001u64 {
            let t = i as f64 / 200_000.0;
            let p = CirclePos::from_f64(t);
            let ds = (p.sin_2pi() - (t * std::f64::consts::TAU).sin()).abs();
            let dc = (p.cos_2pi() - (t * std::f64::consts::TAU).cos()).abs();
            worst = worst.max(ds).max(dc);
        }
        assert!(worst < 1.5e-15, "trig kernel vs libm drift {worst}");
    }

    #[test]
    fn negation_is_exact() {
        let mut x = CirclePos::from_f64(0.1234567891234);
        for _ in 0..1000 {
            x = x.add(CirclePos::from_f64(0.6180339887498949));
            assert_eq!(x.neg().sin_2pi(), -x.sin_2pi());
            assert_eq!(x.neg().cos_2pi(), x.cos_2pi());
        }
    }

    #[test]
    fn mul_matches_rational_reduction() {
        // frac(q * p/den) computed two ways: wrapping fixed point vs exact.
        let den = BigUint::from(1_000_003u64);
        for q in [1u128, 7, 12345, 1 << 40, u64::MAX as u128] {
            for p in [1u64, 345_678, 999_999] {
                let x = CirclePos::from_uint_ratio(&BigUint::from(p), &den);
                let lhs = x.mul_int(q);
                let exact =
                    CirclePos::from_uint_ratio(&(BigUint::from(p) * BigUint::from(q)), &den);
                // p/den is rounded down once before the multiply, so the
                // products may differ by q rounding units.
                let diff = lhs.sub(exact).dist_bits();
                assert!(diff <= q, "q={q} p={p} diff={diff}");
            }
        }
    }

    #[test]
    fn circle_distance_examples() {
        assert_eq!(circle_distance(0.75), 0.25);
        assert_eq!(circle_distance(3.0), 0.0);
        assert!((circle_distance(-0.4) - 0.4).abs() < 1e-15);
        assert_eq!(CirclePos::from_f64(0.75).dist_to_zero(), 0.25);
    }

    #[test]
    fn from_ratio_floor() {
        let r = BigRational::new(BigInt::from(-1), BigInt::from(3));
        let p = CirclePos::from_ratio(&r);
        assert!((p.to_f64() - 2.0 / 3.0).abs() < 1e-30);
    }
}
