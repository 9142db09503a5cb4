use annulus_core::fixed::CirclePos;
use annulus_core::rotation::Convergent;
use annulus_core::scheme::chain::{ComposedMap, ConjugacyChain};
use annulus_core::scheme::kmap::KMap;
use annulus_core::scheme::lift::LiftedKMap;
use annulus_core::skew::{AnnulusMap, CylPoint};
use num::BigUint;
use std::sync::Arc;

fn main() {
    let k = Arc::new(KMap::build(0.6875, 0.71875, 0.75, 300).unwrap());
    let h = Arc::new(LiftedKMap::new(k.clone(), BigUint::from(9u64)).unwrap());
    let mut chain = ConjugacyChain::default();
    chain.push(h);
    let f = ComposedMap::new(chain, Convergent { p: BigUint::from(11u32), q: BigUint::from(100u32) });
    let x = CirclePos::from_f64(0.2752272714218429);
    let y = -0.6194859959376519f64;
    let delta = 1e-4;
    let dpos = CirclePos::from_f64(delta);
    let corners = [
        CylPoint::new(x.sub(dpos), y - delta),
        CylPoint::new(x.add(dpos), y - delta),
        CylPoint::new(x.add(dpos), y + delta),
        CylPoint::new(x.sub(dpos), y + delta),
    ];
    for (i, c) in corners.iter().enumerate() {
        let img = f.apply(*c);
        println!("corner {i}: ({:.9}, {:.9}) -> ({:.9}, {:.9})", c.x.to_f64(), c.y, img.x.to_f64(), img.y);
    }
    // also k-map derivative scale right here through the pieces
    let w = CylPoint::new(x, y);
    let (winv, _) = f.chain.apply_inv(w);
    println!("H^-1 y = {:.9} (d = 0.71875)", winv.y);
}
