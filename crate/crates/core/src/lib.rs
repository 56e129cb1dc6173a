//! Numerical closed-range diagnostics for composition operators `C_phi f = f ∘ phi`
//! on the Dirichlet space of the unit disk.

pub mod carleson;
pub mod counting;
pub mod dirichlet;
pub mod error;
pub mod geometry;
pub mod numerics;
pub mod report;
pub mod symbols;

pub use carleson::{classify, DensityQuery, Verdict, VerdictLabel};
pub use counting::{counting_sample, CountingSample, Preimage};
pub use error::{Error, Result};
pub use geometry::{AreaValue, BergmanDisk, CarlesonBox, DiskPoint};
pub use numerics::NumericsConfig;
pub use report::{run_scenario, RunReport, ScenarioConfig};
pub use symbols::{build_symbol, CrescentRegion, SymbolMap, SymbolSpec};
