//! Compactness experiments: FKR moduli, witness pairs, decay slopes,
//! separation of witness images and truncation convergence.

mod fkr;
mod scheme;
mod separation;
mod slopes;
mod truncation;
mod witness;

pub use fkr::{fkr_moduli, sample_unit_pairs, FkrReport, PairSampling};
pub use scheme::{CubeScheme, SchemeKind};
pub use separation::{
    separation_experiment, Gammas, PairRecord, SeparationOptions, SeparationReport, GAMMA1_GRID, GAMMA2_FACTORS,
};
pub use slopes::{estimate_slopes, estimate_slopes_with, log_radii, SlopeEstimate};
pub use truncation::{is_nonincreasing, truncation_convergence, TruncationPoint};
pub use witness::{audit_witness, witness_pair, witness_pair_with, WitnessAudit, WitnessPair, WitnessSummary};

use serde::{Deserialize, Serialize};

/// Combined output of a compactness run; absent parts were not requested.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CompactnessReport {
    pub fkr: Option<FkrReport>,
    pub slopes: Option<SlopeEstimate>,
    pub separation: Option<SeparationReport>,
}
