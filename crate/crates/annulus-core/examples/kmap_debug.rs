use annulus_core::scheme::kmap::KMap;

fn main() {
    // replicate build without the acceptance gate
    for steps_exp in [12u32, 13, 14] {
        let r = KMap::build_unchecked(0.6875, 0.71875, 0.75, 1 << steps_exp);
        let q = r.verify_public(400);
        println!("steps=2^{steps_exp}: {q:?}");
    }
}
