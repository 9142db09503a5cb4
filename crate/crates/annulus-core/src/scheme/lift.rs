//! Lift of a stage map to the cyclic q-cover.
//!
//! Writing x = (j + u)/q with u in [0, 1), the lift that fixes the vertical
//! line x = 0 acts by h(x, y) = ((j + kx(u, y))/q, ky(u, y)). It commutes
//! with the rotation by 1/q by construction: shifting x by 1/q increments j
//! and leaves u untouched.
//!
//! The horizontal coordinate stays in 128-bit fixed point throughout:
//! u = frac(q x) is an exact wrapping multiply, and the output is
//! x + (kx - u)/q, applied as a signed fixed-point nudge. That keeps the
//! lift meaningful for cover degrees far beyond f64 resolution.

use std::sync::Arc;

use num::{BigUint, One, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fixed::CirclePos;
use crate::scheme::kmap::{spectral_norm, KMap};

#[derive(Clone, Debug)]
pub struct LiftedKMap {
    pub kmap: Arc<KMap>,
    pub q: BigUint,
    q_red: u128,
    /// 2^128 / q, for scaling in-cell displacements down to the base.
    bits_per_cell: f64,
    inv_q: f64,
}

impl LiftedKMap {
    pub fn new(kmap: Arc<KMap>, q: BigUint) -> Result<LiftedKMap> {
        if q.is_zero() {
            return Err(Error::InvalidParameter("cover degree must be >= 1".into()));
        }
        if q.bits() > 127 {
            return Err(Error::InsufficientPrecision(format!(
                "cover degree needs {} bits, the fixed-point circle carries 128",
                q.bits()
            )));
        }
        let q_red = q.to_u128().expect("q < 2^127");
        let qf = q.to_f64().expect("finite");
        Ok(LiftedKMap {
            kmap,
            q,
            q_red,
            bits_per_cell: 2f64.powi(128) / qf,
            inv_q: 1.0 / qf,
        })
    }

    /// Apply the lift (dir = +1) or its inverse (dir = -1); returns the
    /// image and the lift's horizontal displacement.
    #[inline]
    pub fn apply_dir(&self, x: CirclePos, y: f64, dir: f64) -> (CirclePos, f64, f64) {
        if self.q_red == 1 {
            let u = x.to_f64();
            let (nu, ny) = self.kmap.apply_dir(u, y, dir);
            let du = nu - u;
            return (shift_by(x, du), ny, du);
        }
        let u_pos = x.mul_int(self.q_red);
        let u = u_pos.to_f64();
        let (nu, ny) = self.kmap.apply_dir(u, y, dir);
        let du = nu - u;
        let delta_bits = (du * self.bits_per_cell).round();
        (x.add_bits(delta_bits as i128), ny, du * self.inv_q)
    }

    pub fn apply(&self, x: CirclePos, y: f64) -> (CirclePos, f64, f64) {
        self.apply_dir(x, y, 1.0)
    }

    pub fn apply_inv(&self, x: CirclePos, y: f64) -> (CirclePos, f64, f64) {
        self.apply_dir(x, y, -1.0)
    }

    /// Measured Lipschitz constant, exploiting the cover structure: the
    /// Jacobian of the lift at (x, y) is [[A, B/q], [C q, D]] where
    /// [[A, B], [C, D]] is the base map's tangent matrix at (frac(q x), y).
    /// The maximum is taken over an `nx` by `ny` grid in cover coordinates.
    pub fn lipschitz(&self, nx: usize, ny: usize) -> f64 {
        let q = self.q.to_f64().expect("finite");
        crate::par::max_over(nx * ny, |idx| {
            let i = idx / ny;
            let j = idx % ny;
            let u = (i as f64 + 0.5) / nx as f64;
            let y = -0.999 + 1.998 * (j as f64 + 0.5) / ny as f64;
            let (_, _, jm) = self.kmap.apply_with_jacobian(u, y);
            spectral_norm([[jm[0][0], jm[0][1] / q], [jm[1][0] * q, jm[1][1]]])
        })
    }

    /// Commutation residual with the rotation by 1/q on sample points,
    /// together with the measurement floor coming from rounding 1/q to the
    /// fixed-point grid (the identity itself is structural).
    pub fn commutation_residual(&self, samples: usize) -> (f64, f64) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(0xC0117);
        let shift = CirclePos::from_uint_ratio(&BigUint::one(), &self.q);
        let qf = self.q.to_f64().expect("finite");
        // rounding 1/q to 2^-128 perturbs u = frac(qx) by up to q^2 2^-128
        let floor = qf * qf * 2f64.powi(-128) * 10.0;
        let mut worst = 0f64;
        for _ in 0..samples {
            let x = CirclePos(rng.gen::<u128>());
            let y = rng.gen::<f64>() * 1.9 - 0.95;
            let (ax, ay, _) = self.apply(x.add(shift), y);
            let (bx, by, _) = self.apply(x, y);
            let bx = bx.add(shift);
            let d = ax.dist(bx).hypot(ay - by);
            worst = worst.max(d);
        }
        (worst, floor)
    }
}

fn shift_by(x: CirclePos, dx: f64) -> CirclePos {
    if dx >= 0.0 {
        x.add(CirclePos::from_f64(dx))
    } else {
        x.sub(CirclePos::from_f64(-dx))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stage1_lift(q: u64) -> LiftedKMap {
        let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 400).unwrap());
        LiftedKMap::new(k, BigUint::from(q)).unwrap()
    }

    #[test]
    fn degree_one_lift_is_the_base_map() {
        let h = stage1_lift(1);
        let x = CirclePos::from_f64(0.25);
        let (nx, ny, _) = h.apply(x, 0.0);
        assert!((nx.to_f64() - 0.25).abs() < 1e-12);
        assert!((ny - h.kmap.c).abs() < 1e-8);
    }

    #[test]
    fn lift_commutes_with_rotation() {
        for q in [2u64, 9, 100, 9973] {
            let h = stage1_lift(q);
            let (res, floor) = h.commutation_residual(300);
            assert!(res < 1e-9 + floor, "q={q} residual {res} floor {floor}");
        }
    }

    #[test]
    fn lift_fixes_cell_boundaries() {
        let h = stage1_lift(9);
        for j in 0..9u64 {
            let x = CirclePos::from_uint_ratio(&BigUint::from(j), &BigUint::from(9u64));
            for y in [-0.7, 0.0, 0.4, 0.73] {
                let (nx, ny, _) = h.apply(x, y);
                assert_eq!(nx, x, "line x={j}/9 must be fixed");
                assert!((ny - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn lipschitz_bounded_by_base_times_degree() {
        let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 400).unwrap());
        let base = LiftedKMap::new(k.clone(), BigUint::one()).unwrap();
        let l_k = base.lipschitz(40, 21);
        for q in [1u64, 9, 100] {
            let h = LiftedKMap::new(k.clone(), BigUint::from(q)).unwrap();
            let l_h = h.lipschitz(40, 21);
            assert!(l_h >= 1.0 - 1e-9);
            assert!(
                l_h <= l_k * q as f64 + 1e-6,
                "q={q}: L(h)={l_h} > L(k)*q={}",
                l_k * q as f64
            );
        }
    }

    #[test]
    fn huge_cover_degree_is_rejected_only_past_128_bits() {
        let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 200).unwrap());
        let ok = BigUint::from(10u32).pow(30);
        assert!(LiftedKMap::new(k.clone(), ok).is_ok());
        let too_big = BigUint::from(10u32).pow(40);
        assert!(LiftedKMap::new(k, too_big).is_err());
    }
}
