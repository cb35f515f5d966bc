//! Entropy and growth estimators: chord counting, volume growth of evolved
//! fiber spheres, and finite-horizon rate fits.

mod census;
mod fit;
mod mesh;
mod volume;

pub use census::{
    chord_census, jitter_target, mpp_estimate, CensusConfig, CensusDiagnostics, ChordCensus,
    ChordRecord, MppEstimate,
};
pub use fit::{fit_exponential_rate, fit_growth, GrowthFit, Verdict};
pub use mesh::{
    sasaki_delta, sasaki_length, simplex_volume, FiberMesh, ProfileFiber, SolLevelFiber,
    StartFiber,
};
pub use volume::{volume_growth, VolumeGrowth, VolumeGrowthConfig};
