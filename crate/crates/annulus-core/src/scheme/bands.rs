//! Per-stage band parameters of the conjugation tower, kept as exact
//! rationals so the stage tolerances come out of exact arithmetic.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Zero};
use serde::Serialize;

use crate::error::{Error, Result};

/// Bands of one stage: a < b < c < a_next, all strictly inside (0, 1).
#[derive(Clone, Debug)]
pub struct Band {
    pub a: BigRational,
    pub b: BigRational,
    pub c: BigRational,
    pub a_next: BigRational,
}

impl Band {
    pub fn a_f64(&self) -> f64 {
        rat_f64(&self.a)
    }
    pub fn b_f64(&self) -> f64 {
        rat_f64(&self.b)
    }
    pub fn c_f64(&self) -> f64 {
        rat_f64(&self.c)
    }
    pub fn a_next_f64(&self) -> f64 {
        rat_f64(&self.a_next)
    }
    /// Plateau edge of the cutoff: midway between c and a_next.
    pub fn plateau_edge_f64(&self) -> f64 {
        (self.c_f64() + self.a_next_f64()) / 2.0
    }
}

pub fn rat_f64(r: &BigRational) -> f64 {
    use num::ToPrimitive;
    r.to_f64().expect("band rational fits f64")
}

/// The whole ladder of bands, one entry per stage.
#[derive(Clone, Debug)]
pub struct BandSchedule {
    bands: Vec<Band>,
}

/// Serializable view of one stage's bands.
#[derive(Clone, Debug, Serialize)]
pub struct BandView {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_next: f64,
}

impl BandSchedule {
    /// Dyadic defaults: a_n = 1 - 2^-n, b_n = a_n + 2^-(n+2),
    /// c_n = a_n + 3*2^-(n+3); then c_n < a_{n+1} holds strictly with a
    /// gap of 2^-(n+3) on each side of c_n.
    pub fn default_dyadic(n_stages: usize) -> BandSchedule {
        let two = BigRational::from(BigInt::from(2));
        let mut bands = Vec::with_capacity(n_stages);
        for n in 1..=n_stages as i32 {
            let pow = |e: i32| {
                let mut v = BigRational::one();
                for _ in 0..e {
                    v /= &two;
                }
                v
            };
            let a = BigRational::one() - pow(n);
            let b = &a + pow(n + 2);
            let c = &a + pow(n + 3) * BigRational::from(BigInt::from(3));
            let a_next = BigRational::one() - pow(n + 1);
            bands.push(Band { a, b, c, a_next });
        }
        BandSchedule { bands }
    }

    /// Build from explicit f64 triples (a_n, b_n, c_n) plus the final
    /// a_{n_stages+1}; values are taken as exact binary rationals.
    pub fn from_f64_bands(abc: &[(f64, f64, f64)], last_a: f64) -> Result<BandSchedule> {
        let mut bands = Vec::with_capacity(abc.len());
        for (i, &(a, b, c)) in abc.iter().enumerate() {
            let a_next = if i + 1 < abc.len() { abc[i + 1].0 } else { last_a };
            bands.push(Band {
                a: f64_rat(a)?,
                b: f64_rat(b)?,
                c: f64_rat(c)?,
                a_next: f64_rat(a_next)?,
            });
        }
        let s = BandSchedule { bands };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let one = BigRational::one();
        for (i, band) in self.bands.iter().enumerate() {
            let ok = band.a > BigRational::zero()
                && band.a < band.b
                && band.b < band.c
                && band.c < band.a_next
                && band.a_next < one;
            if !ok {
                return Err(Error::InvalidParameter(format!(
                    "stage {} bands must satisfy 0 < a < b < c < a_next < 1",
                    i + 1
                )));
            }
            if i + 1 < self.bands.len() && self.bands[i + 1].a != band.a_next {
                return Err(Error::InvalidParameter(format!(
                    "stage {} a_next must equal stage {} a",
                    i + 1,
                    i + 2
                )));
            }
        }
        Ok(())
    }

    pub fn stages(&self) -> usize {
        self.bands.len()
    }

    /// Bands of stage n (1-based).
    pub fn band(&self, n: usize) -> &Band {
        &self.bands[n - 1]
    }

    /// The stage tolerance: min over k <= n of (b_k - a_k) / 2^(n-k+1),
    /// exact.
    pub fn epsilon(&self, n: usize) -> BigRational {
        let two = BigRational::from(BigInt::from(2));
        let mut best: Option<BigRational> = None;
        for k in 1..=n {
            let gap = &self.bands[k - 1].b - &self.bands[k - 1].a;
            let mut denom = BigRational::one();
            for _ in 0..(n - k + 1) {
                denom *= &two;
            }
            let v = gap * denom.recip().clone();
            best = Some(match best {
                None => v,
                Some(cur) => {
                    if v < cur {
                        v
                    } else {
                        cur
                    }
                }
            });
        }
        best.expect("n >= 1")
    }

    pub fn view(&self, n: usize) -> BandView {
        let b = self.band(n);
        BandView { a: b.a_f64(), b: b.b_f64(), c: b.c_f64(), a_next: b.a_next_f64() }
    }
}

fn f64_rat(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::InvalidParameter(format!("band value {x} is not finite")))
}
