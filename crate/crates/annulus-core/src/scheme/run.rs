//! End-to-end driver of the conjugation tower: build stage maps, certify
//! candidates, measure distances and rotation numbers, and assemble a
//! serializable report.

use std::sync::Arc;

use num::rational::BigRational;
use num::{BigUint, One, ToPrimitive};
use serde::Serialize;

use crate::dynamics::{rotation_number_estimate, RotationEstimate};
use crate::error::{Error, Result};
use crate::fixed::CirclePos;
use crate::rotation::{Convergent, RotationNumber};
use crate::scheme::bands::{BandSchedule, BandView};
use crate::scheme::chain::{ComposedMap, ConjugacyChain};
use crate::scheme::kmap::{KMap, KMapQuality};
use crate::scheme::lift::LiftedKMap;
use crate::scheme::stage::{
    area_quad_residual, choose_next_alpha, orbit_entry_check, stage_distance, AlphaChoice,
    BandCertificate, Constraint, Mode, SelectionContext,
};
use crate::skew::CylPoint;

#[derive(Clone, Debug)]
pub struct SchemeConfig {
    pub n_stages: usize,
    pub mode: Mode,
    pub bands: Option<BandSchedule>,
    /// Safety factor standing in for the unprinted convergence constants.
    pub safety: f64,
    pub search_depth: usize,
    pub grid_orbit_cap: u64,
    pub representatives: usize,
    pub distance_grid: usize,
    pub distance_j_cap: u64,
    pub rotation_steps: u64,
    pub orbit_entry_cap: u64,
    pub kmap_grid: usize,
    pub lipschitz_grid: (usize, usize),
    pub area_samples: usize,
    pub seed: u64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        SchemeConfig {
            n_stages: 3,
            mode: Mode::C0,
            bands: None,
            safety: 1e3,
            search_depth: 64,
            grid_orbit_cap: 100_000,
            representatives: 200,
            distance_grid: 64,
            distance_j_cap: 2000,
            rotation_steps: 100_000,
            orbit_entry_cap: 10_000,
            kmap_grid: 1000,
            lipschitz_grid: (48, 25),
            area_samples: 80,
            seed: 7,
        }
    }
}

pub const MAX_STAGES: usize = 4;

#[derive(Clone, Debug, Serialize)]
pub struct DistanceReport {
    pub j_max: u64,
    pub measured: f64,
    /// eps of the previous stage (the target for this pair) when defined.
    pub eps_prev: Option<f64>,
    pub within_eps: Option<bool>,
    /// C_(n-1) q_1..q_(n-1) q_n^2 * 2|alpha - alpha_n|, floored at the
    /// evaluation-noise scale.
    pub theory_bound: f64,
    pub theory_holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RotationReport {
    pub estimate: f64,
    pub expected: f64,
    pub error_bar: f64,
    pub steps: u64,
    pub within_one_over_m: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct OrbitEntryReport {
    pub checked: usize,
    pub entered: usize,
    pub iter_cap: u64,
    pub capped: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct StageReport {
    pub n: usize,
    pub alpha_n: String,
    pub q_n: String,
    pub eps_n: f64,
    pub eps_n_exact: String,
    pub band: BandView,
    pub kmap: KMapQuality,
    /// Measured Lipschitz data: base map, lift, and the paper inequality
    /// L(h_n) <= L(k_n) q_n between the two measurements.
    pub l_k: f64,
    pub l_h: f64,
    pub lift_bound_holds: bool,
    pub c_n: f64,
    pub l_chain_bound: f64,
    pub commutation_residual: f64,
    pub commutation_floor: f64,
    pub alpha_next: String,
    pub q_next: String,
    pub certificate: BandCertificate,
    pub scanned: usize,
    pub distance_prev: DistanceReport,
    pub rotation: RotationReport,
    pub orbit_entry: OrbitEntryReport,
    pub area_residual: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct InfeasibleInfo {
    pub stage: usize,
    pub binding: Constraint,
    pub scanned: usize,
    pub furthest_q: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct SchemeReport {
    pub alpha_spec: String,
    pub mode: Mode,
    /// True when the mode's convergence constant is the measured surrogate
    /// rather than a printed value (always true in CInf mode).
    pub surrogate_constant: bool,
    pub n_stages_requested: usize,
    pub feasible: bool,
    pub stages: Vec<StageReport>,
    pub infeasible: Option<InfeasibleInfo>,
    /// Rotation estimate of the zeroth map S_{alpha_1}.
    pub f0_rotation: RotationReport,
}

/// Run the tower for `cfg.n_stages` stages over `alpha`.
pub fn run_scheme(alpha: &RotationNumber, cfg: &SchemeConfig) -> Result<SchemeReport> {
    if cfg.n_stages > MAX_STAGES {
        return Err(Error::InvalidParameter(format!(
            "n_stages {} exceeds the configured cap {MAX_STAGES}",
            cfg.n_stages
        )));
    }
    let schedule = match &cfg.bands {
        Some(s) => {
            s.validate()?;
            if s.stages() < cfg.n_stages {
                return Err(Error::InvalidParameter(
                    "band schedule shorter than the stage count".into(),
                ));
            }
            s.clone()
        }
        None => BandSchedule::default_dyadic(cfg.n_stages.max(1)),
    };
    let mut rot = if alpha.depth() < 8 { alpha.extended(8)? } else { alpha.clone() };
    let alpha_1 = rot.convergents()[0].clone();
    let mut f_prev = ComposedMap::rigid(alpha_1.clone());
    let f0_rotation = rotation_report(&f_prev, &alpha_1, cfg.rotation_steps.min(50_000));

    let mut chain = ConjugacyChain::default();
    let mut c_n = 1.0f64;
    let mut l_chain = 1.0f64;
    let mut q_prod = BigUint::one();
    let mut circle_peaks_ok = true;
    let mut alpha_n = alpha_1;
    let mut eps_prev: Option<BigRational> = None;
    let mut stages = Vec::new();

    for n in 1..=cfg.n_stages {
        let band = schedule.band(n).clone();
        let kmap = Arc::new(KMap::build(
            band.c_f64(),
            band.plateau_edge_f64(),
            band.a_next_f64(),
            cfg.kmap_grid,
        )?);
        let q_n = alpha_n.q.clone();
        let lift = Arc::new(LiftedKMap::new(kmap.clone(), q_n.clone())?);
        let (gx, gy) = cfg.lipschitz_grid;
        let l_k = LiftedKMap::new(kmap.clone(), BigUint::one())?.lipschitz(gx, gy);
        let l_h = lift.lipschitz(gx, gy);
        let q_f64 = q_n.to_f64().unwrap_or(f64::INFINITY);
        let lift_bound_holds = l_h <= l_k * q_f64 * (1.0 + 1e-9) + 1e-9;
        let (commutation_residual, commutation_floor) = lift.commutation_residual(256);

        chain.push(lift);
        c_n *= l_k;
        l_chain *= l_h;
        q_prod *= &q_n;
        circle_peaks_ok &= kmap.quality.circle_peak >= band.c_f64() - 1e-9;

        let eps_n = schedule.epsilon(n);
        let ctx = SelectionContext {
            n,
            alpha_n: &alpha_n,
            eps_n: &eps_n,
            c_n,
            q_prod: &q_prod,
            chain: &chain,
            band: &band,
            l_chain,
            circle_peaks_ok,
            mode: cfg.mode,
            safety: cfg.safety,
            search_depth: cfg.search_depth,
            grid_orbit_cap: cfg.grid_orbit_cap,
            representatives: cfg.representatives,
            seed: cfg.seed ^ (n as u64),
        };
        let (choice, extended) = choose_next_alpha(&rot, &ctx)?;
        rot = extended;
        let (alpha_next, certificate, scanned) = match choice {
            AlphaChoice::Chosen { alpha_next, certificate, scanned } => {
                (alpha_next, certificate, scanned)
            }
            AlphaChoice::Infeasible { binding, scanned, furthest_q } => {
                return Ok(SchemeReport {
                    alpha_spec: rot.spec().to_spec_string(),
                    mode: cfg.mode,
                    surrogate_constant: true,
                    n_stages_requested: cfg.n_stages,
                    feasible: false,
                    stages,
                    infeasible: Some(InfeasibleInfo {
                        stage: n,
                        binding,
                        scanned,
                        furthest_q,
                    }),
                    f0_rotation,
                });
            }
        };

        let f_n = ComposedMap::new(chain.clone(), alpha_next.clone());

        // distance to the previous stage map over j <= min(q_n, cap)
        let j_max = q_n.to_u64().map(|q| q.min(cfg.distance_j_cap)).unwrap_or(cfg.distance_j_cap);
        let measured =
            stage_distance(&f_prev, &f_n, j_max.max(1), cfg.distance_grid, cfg.seed ^ 0xD15 ^ n as u64);
        let theory_bound = {
            let c_prev = c_n / l_k; // product up to stage n-1
            let q_prod_prev = BigRational::from(num::bigint::BigInt::from(&q_prod / &q_n));
            let qn_rat = BigRational::from(num::bigint::BigInt::from(q_n.clone()));
            let dist = rot.dist_bounds(&alpha_n.as_ratio()).1;
            let b = BigRational::from_float(2.0 * c_prev).unwrap()
                * q_prod_prev
                * &qn_rat
                * &qn_rat
                * dist;
            b.to_f64().unwrap_or(f64::INFINITY)
        };
        // evaluation noise floor for two nearly identical composed maps
        let noise_floor = 1e-8;
        let distance_prev = DistanceReport {
            j_max,
            measured,
            eps_prev: eps_prev.as_ref().map(|e| e.to_f64().unwrap()),
            within_eps: eps_prev
                .as_ref()
                .map(|e| BigRational::from_float(measured).unwrap() < *e),
            theory_bound,
            theory_holds: measured <= theory_bound.max(noise_floor),
        };

        // rotation number of f_n: use a multiple of the period when it is
        // small enough, otherwise fall back to the configured step count
        let m = match alpha_next.q.to_u64() {
            Some(q) if q as u128 <= cfg.rotation_steps as u128 => {
                (cfg.rotation_steps / q).max(1) * q
            }
            _ => cfg.rotation_steps,
        };
        let rotation = rotation_report(&f_n, &alpha_next, m);

        let iter_cap = alpha_next
            .q
            .to_u64()
            .map(|q| q.min(cfg.orbit_entry_cap))
            .unwrap_or(cfg.orbit_entry_cap);
        let capped = alpha_next.q > BigUint::from(cfg.orbit_entry_cap);
        let (checked, entered) = orbit_entry_check(
            &f_n,
            band.a_f64(),
            cfg.representatives,
            iter_cap,
            cfg.seed ^ 0x0Eb ^ n as u64,
        );

        let area_residual = area_quad_residual(&f_n, cfg.area_samples, 1e-4, cfg.seed ^ 0xA2 ^ n as u64);

        stages.push(StageReport {
            n,
            alpha_n: format!("{alpha_n}"),
            q_n: q_n.to_string(),
            eps_n: eps_n.to_f64().unwrap(),
            eps_n_exact: eps_n.to_string(),
            band: schedule.view(n),
            kmap: kmap.quality,
            l_k,
            l_h,
            lift_bound_holds,
            c_n,
            l_chain_bound: l_chain,
            commutation_residual,
            commutation_floor,
            alpha_next: format!("{alpha_next}"),
            q_next: alpha_next.q.to_string(),
            certificate,
            scanned,
            distance_prev,
            rotation,
            orbit_entry: OrbitEntryReport { checked, entered, iter_cap, capped },
            area_residual,
        });

        f_prev = f_n;
        alpha_n = alpha_next;
        eps_prev = Some(eps_n);
    }

    Ok(SchemeReport {
        alpha_spec: rot.spec().to_spec_string(),
        mode: cfg.mode,
        surrogate_constant: true,
        n_stages_requested: cfg.n_stages,
        feasible: true,
        stages,
        infeasible: None,
        f0_rotation,
    })
}

fn rotation_report(f: &ComposedMap, expected: &Convergent, m: u64) -> RotationReport {
    let est: RotationEstimate =
        rotation_number_estimate(f, CylPoint::new(CirclePos::from_f64(0.123), 0.05), m);
    let expected_f = BigRational::new(
        num::bigint::BigInt::from(expected.p.clone()),
        num::bigint::BigInt::from(expected.q.clone()),
    )
    .to_f64()
    .unwrap();
    RotationReport {
        estimate: est.estimate,
        expected: expected_f,
        error_bar: est.error_bar,
        steps: m,
        within_one_over_m: (est.estimate - expected_f).abs() <= 1.0 / m as f64 + 1e-12,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alpha::AlphaSpec;
    use crate::rotation::cf_expand;

    #[test]
    fn zero_stages_reports_rigid_rotation() {
        let a = cf_expand(&AlphaSpec::parse("golden").unwrap(), 12).unwrap();
        let cfg = SchemeConfig { n_stages: 0, ..SchemeConfig::default() };
        let rep = run_scheme(&a, &cfg).unwrap();
        assert!(rep.feasible);
        assert!(rep.stages.is_empty());
        // alpha_1 = 1/1 for the golden ratio: displacement exactly 1
        assert!((rep.f0_rotation.estimate - 1.0).abs() < 1e-9);
        assert!(rep.f0_rotation.within_one_over_m);
    }

    #[test]
    fn golden_is_infeasible_at_stage_one_with_the_distance_bound_binding() {
        let a = cf_expand(&AlphaSpec::parse("golden").unwrap(), 40).unwrap();
        let cfg = SchemeConfig {
            n_stages: 2,
            search_depth: 30,
            kmap_grid: 200,
            ..SchemeConfig::default()
        };
        let rep = run_scheme(&a, &cfg).unwrap();
        assert!(!rep.feasible);
        let inf = rep.infeasible.unwrap();
        assert_eq!(inf.stage, 1);
        assert_eq!(inf.binding, Constraint::StageBound);
    }

    #[test]
    fn liouville_one_stage_completes() {
        let a = cf_expand(&AlphaSpec::parse("series:factorial10").unwrap(), 12).unwrap();
        let cfg = SchemeConfig {
            n_stages: 1,
            kmap_grid: 300,
            representatives: 60,
            distance_grid: 24,
            distance_j_cap: 20,
            rotation_steps: 20_000,
            orbit_entry_cap: 3_000,
            area_samples: 40,
            ..SchemeConfig::default()
        };
        let rep = run_scheme(&a, &cfg).unwrap();
        assert!(rep.feasible, "{:?}", rep.infeasible);
        let s = &rep.stages[0];
        assert_eq!(s.q_n, "9");
        assert_eq!(s.q_next, "1000000");
        assert!(s.lift_bound_holds);
        assert!(s.commutation_residual < 1e-9 + s.commutation_floor);
        assert!(s.rotation.within_one_over_m, "{:?}", s.rotation);
        assert!(s.area_residual < 1e-6, "area {}", s.area_residual);
        assert!(matches!(s.certificate, BandCertificate::LipschitzCriterion { .. }));
        assert!(s.orbit_entry.entered == s.orbit_entry.checked);
    }
}
