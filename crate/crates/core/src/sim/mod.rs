//! Closed-loop episodes, reference paths and Monte-Carlo statistics.

mod episode;
mod montecarlo;
pub mod stats;
pub mod trajectory;

pub use episode::{
    derive_seed, run_episode, EpisodeLog, Experiment, FilterKind, NoiseConfig, PlantMode, Scenario,
    ScenarioConfig, StepRecord,
};
pub use montecarlo::{
    run_monte_carlo, AxisSummary, FilterStats, MonteCarloReport, RunOutcome, StatsTable,
};
pub use stats::{percentile_sorted, rmse, summarize, Summary};
pub use trajectory::{default_waypoints, generate_trajectory};
