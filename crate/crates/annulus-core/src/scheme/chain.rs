//! Composed conjugacies H_n = h_1 . h_2 ... h_n and the stage maps
//! f_n = H_n . S_t . H_n^{-1}.
//!
//! Chains are evaluated piece by piece; the lift displacement of a
//! composite is the sum of the pieces' displacements, which keeps rotation
//! number estimation exact even when a shift exceeds a full turn.

use std::sync::Arc;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{BigUint, ToPrimitive};

use crate::fixed::CirclePos;
use crate::rotation::Convergent;
use crate::scheme::lift::LiftedKMap;
use crate::skew::{AnnulusMap, CylPoint};

/// The conjugacy H_n as an ordered list of lifts (outermost first).
#[derive(Clone, Debug, Default)]
pub struct ConjugacyChain {
    /// h_1, h_2, ..., h_n; H(z) = h_1(h_2(... h_n(z))).
    pub lifts: Vec<Arc<LiftedKMap>>,
}

impl ConjugacyChain {
    pub fn push(&mut self, lift: Arc<LiftedKMap>) {
        self.lifts.push(lift);
    }

    pub fn is_empty(&self) -> bool {
        self.lifts.is_empty()
    }

    /// H(z), with accumulated lift displacement.
    pub fn apply(&self, p: CylPoint) -> (CylPoint, f64) {
        let mut q = p;
        let mut disp = 0.0;
        for lift in self.lifts.iter().rev() {
            let (x, y, dx) = lift.apply(q.x, q.y);
            q = CylPoint::new(x, y);
            disp += dx;
        }
        (q, disp)
    }

    /// H^{-1}(z) = h_n^{-1}(... h_1^{-1}(z)).
    pub fn apply_inv(&self, p: CylPoint) -> (CylPoint, f64) {
        let mut q = p;
        let mut disp = 0.0;
        for lift in &self.lifts {
            let (x, y, dx) = lift.apply_inv(q.x, q.y);
            q = CylPoint::new(x, y);
            disp += dx;
        }
        (q, disp)
    }
}

/// f = H . S_t . H^{-1} with t = p/q held exactly.
#[derive(Clone, Debug)]
pub struct ComposedMap {
    pub chain: ConjugacyChain,
    /// Rotation p/q as an exact pair.
    pub shift: Convergent,
    shift_pos: CirclePos,
    /// Lift displacement of S_t per application: the full rational value
    /// p/q (not reduced mod 1).
    shift_lift: f64,
}

impl ComposedMap {
    pub fn new(chain: ConjugacyChain, shift: Convergent) -> ComposedMap {
        let shift_pos = CirclePos::from_uint_ratio(&shift.p, &shift.q);
        let shift_lift = BigRational::new(
            BigInt::from(shift.p.clone()),
            BigInt::from(shift.q.clone()),
        )
        .to_f64()
        .expect("finite shift");
        ComposedMap { chain, shift, shift_pos, shift_lift }
    }

    /// The rigid rotation f_0 = S_t.
    pub fn rigid(shift: Convergent) -> ComposedMap {
        ComposedMap::new(ConjugacyChain::default(), shift)
    }

    pub fn period(&self) -> &BigUint {
        &self.shift.q
    }

    fn apply_signed(&self, p: CylPoint, dir: f64) -> (CylPoint, f64) {
        let (w, d1) = self.chain.apply_inv(p);
        let (x, ds) = if dir >= 0.0 {
            (w.x.add(self.shift_pos), self.shift_lift)
        } else {
            (w.x.sub(self.shift_pos), -self.shift_lift)
        };
        let (z, d2) = self.chain.apply(CylPoint::new(x, w.y));
        (z, d1 + ds + d2)
    }
}

impl AnnulusMap for ComposedMap {
    fn apply(&self, p: CylPoint) -> CylPoint {
        self.apply_signed(p, 1.0).0
    }

    fn apply_inv(&self, p: CylPoint) -> CylPoint {
        self.apply_signed(p, -1.0).0
    }

    fn apply_lift(&self, p: CylPoint) -> (CylPoint, f64) {
        self.apply_signed(p, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::kmap::KMap;
    use num::One;
    use rand::{Rng, SeedableRng};

    fn chain_one_stage(q: u64) -> ConjugacyChain {
        let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 300).unwrap());
        let mut c = ConjugacyChain::default();
        c.push(Arc::new(LiftedKMap::new(k, BigUint::from(q)).unwrap()));
        c
    }

    #[test]
    fn chain_round_trip_is_identity() {
        let chain = chain_one_stage(9);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let p = CylPoint::new(
                CirclePos(rng.gen::<u128>()),
                rng.gen::<f64>() * 1.9 - 0.95,
            );
            let (q1, _) = chain.apply(p);
            let (q2, _) = chain.apply_inv(q1);
            assert!(q2.dist(&p) < 1e-8, "round trip {}", q2.dist(&p));
        }
    }

    #[test]
    fn conjugate_of_rational_rotation_is_periodic() {
        // f = H S_{1/5} H^{-1} has period 5
        let chain = chain_one_stage(5);
        let f = ComposedMap::new(
            chain,
            Convergent { p: BigUint::one(), q: BigUint::from(5u32) },
        );
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p0 = CylPoint::new(
                CirclePos(rng.gen::<u128>()),
                rng.gen::<f64>() * 1.6 - 0.8,
            );
            let mut p = p0;
            for _ in 0..5 {
                p = f.apply(p);
            }
            assert!(p.dist(&p0) < 1e-6, "period-5 orbit drift {}", p.dist(&p0));
        }
    }

    #[test]
    fn lift_displacement_telescopes_to_rotation_number() {
        let chain = chain_one_stage(9);
        let f = ComposedMap::new(
            chain,
            Convergent { p: BigUint::from(11u32), q: BigUint::from(100u32) },
        );
        let mut p = CylPoint::new(CirclePos::from_f64(0.123), 0.2);
        let mut total = 0.0;
        let m = 700; // multiple of 100: the conjugacy displacements cancel
        for _ in 0..m {
            let (next, dx) = f.apply_lift(p);
            p = next;
            total += dx;
        }
        assert!(
            (total / m as f64 - 0.11).abs() < 1e-9,
            "avg displacement {}",
            total / m as f64
        );
    }

    #[test]
    fn rigid_map_shift_can_exceed_one() {
        let f = ComposedMap::rigid(Convergent { p: BigUint::from(3u32), q: BigUint::one() });
        let (p, dx) = f.apply_lift(CylPoint::new(CirclePos::from_f64(0.4), 0.0));
        assert_eq!(dx, 3.0);
        assert!((p.x.to_f64() - 0.4).abs() < 1e-12);
    }
}
