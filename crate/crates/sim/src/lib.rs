//! Experiment front end for the joint communication and radar simulator:
//! config files, seeded parallel campaigns, FFT surface evaluation and CSV
//! output.

pub mod campaign;
pub mod config;
pub mod fft;
pub mod output;

pub use campaign::{run_campaign, run_campaign_with_workers, CampaignResult, RunError};
pub use config::{parse_config, serialize, ExperimentConfig};
