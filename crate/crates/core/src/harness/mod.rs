//! Monte-Carlo scenarios: data generation, batched trials, CSV records and
//! summaries.

mod config;
mod records;
mod run;
mod summary;

pub use config::{default_base_means, Scenario, ScenarioConfig, TruncationKind, VarianceMode};
pub use records::{read_records, write_records, TrialRecord, CSV_HEADER};
pub use run::{generate_trial, mean_vector, null_memberships, round_robin_labels, run_scenario, run_trial};
pub use summary::{summarize, AlphaRates, Summary};
