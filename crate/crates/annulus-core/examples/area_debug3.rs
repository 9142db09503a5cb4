use annulus_core::fixed::CirclePos;
use annulus_core::rotation::Convergent;
use annulus_core::scheme::chain::{ComposedMap, ConjugacyChain};
use annulus_core::scheme::kmap::KMap;
use annulus_core::scheme::lift::LiftedKMap;
use annulus_core::skew::{AnnulusMap, CylPoint};
use num::BigUint;
use rand::{Rng, SeedableRng};
use std::sync::Arc;

fn quad(map: &dyn AnnulusMap, p: CylPoint, delta: f64) -> f64 {
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
}

fn main() {
    let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 300).unwrap());
    let h = Arc::new(LiftedKMap::new(k.clone(), BigUint::from(9u64)).unwrap());
    let mut chain = ConjugacyChain::default();
    chain.push(h);
    let f = ComposedMap::new(chain, Convergent { p: BigUint::from(11u32), q: BigUint::from(100u32) });
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let mut worst = (0.0f64, CylPoint::new(CirclePos(0), 0.0));
    for _ in 0..150 {
        let p = CylPoint::new(CirclePos(rng.gen::<u128>()), rng.gen::<f64>() * 1.7 - 0.85);
        let mut best = f64::INFINITY;
        let mut d = 1e-4;
        for _ in 0..5 {
            best = best.min((quad(&f, p, d) - 1.0).abs());
            d /= 3.3;
        }
        if best > worst.0 { worst = (best, p); }
    }
    println!("worst {:.4e} at x={:.12} y={:.12}", worst.0, worst.1.x.to_f64(), worst.1.y);
    let mut d = 1e-3;
    for _ in 0..14 {
        println!("delta {:.2e}: ratio-1 = {:+.6e}", d, quad(&f, worst.1, d) - 1.0);
        d /= 3.0;
    }
}
