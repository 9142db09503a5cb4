use annulus_core::fixed::CirclePos;
use annulus_core::rotation::Convergent;
use annulus_core::scheme::chain::{ComposedMap, ConjugacyChain};
use annulus_core::scheme::kmap::KMap;
use annulus_core::scheme::lift::LiftedKMap;
use annulus_core::scheme::stage::area_quad_residual;
use annulus_core::skew::{AnnulusMap, CylPoint};
use num::BigUint;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

struct LiftMap(Arc<LiftedKMap>);
impl AnnulusMap for LiftMap {
    fn apply(&self, p: CylPoint) -> CylPoint {
        let (x, y, _) = self.0.apply(p.x, p.y);
        CylPoint::new(x, y)
    }
    fn apply_inv(&self, p: CylPoint) -> CylPoint {
        let (x, y, _) = self.0.apply_inv(p.x, p.y);
        CylPoint::new(x, y)
    }
    fn apply_lift(&self, p: CylPoint) -> (CylPoint, f64) {
        (self.apply(p), 0.0)
    }
}

fn main() {
    let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 300).unwrap());
    for q in [1u64, 9] {
        let h = Arc::new(LiftedKMap::new(k.clone(), BigUint::from(q)).unwrap());
        let r = area_quad_residual(&LiftMap(h), 150, 1e-4, 5);
        println!("lift q={q}: residual {r:.3e}");
    }
    let h = Arc::new(LiftedKMap::new(k.clone(), BigUint::from(9u64)).unwrap());
    let mut chain = ConjugacyChain::default();
    chain.push(h);
    let f = ComposedMap::new(chain, Convergent { p: BigUint::from(11u32), q: BigUint::from(100u32) });
    // find the worst sample point
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst = (0.0f64, CylPoint::new(CirclePos(0), 0.0));
    for _ in 0..150 {
        let p = CylPoint::new(CirclePos(rng.gen::<u128>()), rng.gen::<f64>() * 1.7 - 0.85);
        let r = area_quad_residual_one(&f, p);
        if r > worst.0 { worst = (r, p); }
    }
    println!("composed worst residual {:.3e} at x={} y={}", worst.0, worst.1.x.to_f64(), worst.1.y);
}

fn area_quad_residual_one(map: &dyn AnnulusMap, p: CylPoint) -> f64 {
    let quad = |delta: f64| -> f64 {
        let dpos = CirclePos::from_f64(delta);
        let corners = [
            CylPoint::new(p.x.sub(dpos), p.y - delta),
            CylPoint::new(p.x.add(dpos), p.y - delta),
            CylPoint::new(p.x.add(dpos), p.y + delta),
            CylPoint::new(p.x.sub(dpos), p.y + delta),
        ];
        let imgs: Vec<CylPoint> = corners.iter().map(|&c| map.apply(c)).collect();
        let base = imgs[0].x;
        let xs: Vec<f64> = imgs.iter().map(|w| w.x.sub(base).signed_rep()).collect();
        let ys: Vec<f64> = imgs.iter().map(|w| w.y).collect();
        let mut area2 = 0.0;
        for k in 0..4 {
            let k2 = (k + 1) % 4;
            area2 += xs[k] * ys[k2] - xs[k2] * ys[k];
        }
        (area2.abs() / 2.0) / (4.0 * delta * delta)
    };
    let r1 = quad(1e-4) - 1.0;
    let r2 = quad(5e-5) - 1.0;
    ((4.0 * r2 - r1) / 3.0).abs()
}
