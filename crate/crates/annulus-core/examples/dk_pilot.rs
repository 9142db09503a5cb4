use annulus_core::alpha::AlphaSpec;
use annulus_core::dynamics::{denjoy_koksma_profile, variation_quadrature};
use annulus_core::phi::build_phi;
use annulus_core::rotation::cf_expand;
use num::ToPrimitive;

fn main() {
    let a = cf_expand(&AlphaSpec::parse("golden").unwrap(), 60).unwrap();
    let phi = build_phi(&a, 6).unwrap();
    let qs: Vec<u64> = phi.qs().iter().map(|q| q.to_u64().unwrap()).collect();
    println!("qs = {qs:?}");
    let profile = denjoy_koksma_profile(&phi, &qs, 1 << 14);
    for e in &profile {
        println!("q = {:>7}  sup|phi_q| = {:.6}  xcheck = {:.2e}", e.q, e.sup_abs, e.crosscheck_residual);
    }
    println!("Var(phi_6) = {:.4}", variation_quadrature(&phi).unwrap());
    // how deep must the profile go to dip under 1e-2?
    let more = annulus_core::returns::select_phi_denominators(&a, 40).unwrap();
    let tail: Vec<u64> = more.iter().skip(6).take(8).map(|q| q.to_u64().unwrap()).collect();
    let prof2 = denjoy_koksma_profile(&phi, &tail, 1 << 14);
    for e in &prof2 {
        println!("extended q = {:>12}  sup = {:.6}", e.q, e.sup_abs);
    }
}
