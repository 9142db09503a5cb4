use annulus_core::alpha::AlphaSpec;
use annulus_core::rotation::cf_expand;
use annulus_core::scheme::run::{run_scheme, SchemeConfig};
use std::time::Instant;

fn main() {
    let t0 = Instant::now();
    let a = cf_expand(&AlphaSpec::parse("series:factorial10").unwrap(), 12).unwrap();
    let cfg = SchemeConfig { n_stages: 3, ..SchemeConfig::default() };
    let rep = run_scheme(&a, &cfg).unwrap();
    println!("feasible: {} in {:.1?}", rep.feasible, t0.elapsed());
    for s in &rep.stages {
        println!("stage {}: q_n={} -> q_next={} eps={:.3e} C_n={:.2} L(H)<= {:.3e}", s.n, s.q_n, s.q_next, s.eps_n, s.c_n, s.l_chain_bound);
        println!("  cert={:?} dist: j<={} measured={:.3e} eps_prev={:?} within={:?}", s.certificate, s.distance_prev.j_max, s.distance_prev.measured, s.distance_prev.eps_prev, s.distance_prev.within_eps);
        println!("  rot: est={:.9} exp={:.9} within1m={} orbit_entry {}/{} capped={} area={:.2e} commut={:.2e}/{:.2e} kmap_steps=2^{:.0}",
            s.rotation.estimate, s.rotation.expected, s.rotation.within_one_over_m,
            s.orbit_entry.entered, s.orbit_entry.checked, s.orbit_entry.capped, s.area_residual,
            s.commutation_residual, s.commutation_floor, (s.kmap.steps as f64).log2());
    }
    let t1 = Instant::now();
    let g = cf_expand(&AlphaSpec::parse("golden").unwrap(), 40).unwrap();
    let rep2 = run_scheme(&g, &SchemeConfig { n_stages: 3, ..SchemeConfig::default() }).unwrap();
    println!("golden feasible: {} infeasible: {:?} in {:.1?}", rep2.feasible, rep2.infeasible, t1.elapsed());
    println!("total {:.1?}", t0.elapsed());
}
