//! Campaign runner for `carleman-core`: JSON configuration, CSV/JSON
//! reports, a rayon executor and the exit-code contract of the
//! `carleman-forge` binary.

pub mod campaign;
pub mod config;
pub mod error;
pub mod exec;
pub mod output;

pub use campaign::{run, CampaignOutcome, CampaignReport};
pub use config::{Campaign, RunConfig};
pub use error::{exit, ForgeError};
pub use exec::RayonExecutor;
