//! The approximation-by-conjugation tower: explicit area-preserving stage
//! maps, their cyclic-cover lifts, composed conjugacies, and the feasibility
//! search over rational approximants of the target rotation number.

pub mod bands;
pub mod chain;
pub mod kmap;
pub mod lift;
pub mod run;
pub mod stage;

pub use bands::{Band, BandSchedule};
pub use chain::{ComposedMap, ConjugacyChain};
pub use kmap::KMap;
pub use lift::LiftedKMap;
pub use run::{run_scheme, SchemeConfig, SchemeReport, StageReport};
pub use stage::{
    band_intersection_check, choose_next_alpha, lipschitz_estimate, stage_distance,
    AlphaChoice, BandCertificate, Constraint, Mode,
};
