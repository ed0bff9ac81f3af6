use rayon::prelude::*;

use crate::error::{invalid, Result};
use crate::scalar::Real;
use crate::sim::episode::{derive_seed, EpisodeLog, Experiment, FilterKind};
use crate::sim::stats::{summarize, Summary};

/// Result of one (run, filter) episode.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome<T> {
    pub run: usize,
    pub filter: FilterKind,
    pub seed: u64,
    /// x and y RMSE, or the abort message.
    pub rmse: std::result::Result<(T, T), String>,
    pub floor_hits: usize,
    /// Smallest covariance eigenvalue and largest asymmetry over the
    /// episode; `None` when it aborted.
    pub covariance_health: Option<(T, T)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisSummary<T> {
    pub x: Summary<T>,
    pub y: Summary<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FilterStats<T> {
    pub filter: FilterKind,
    /// `None` when every run failed.
    pub summary: Option<AxisSummary<T>>,
    pub completed: usize,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatsTable<T> {
    pub runs: usize,
    pub rows: Vec<FilterStats<T>>,
}

impl<T: Real> StatsTable<T> {
    pub fn get(&self, filter: FilterKind) -> Option<&FilterStats<T>> {
        self.rows.iter().find(|r| r.filter == filter)
    }

    pub fn total_failures(&self) -> usize {
        self.rows.iter().map(|r| r.failures).sum()
    }
}

#[derive(Debug, Clone)]
pub struct MonteCarloReport<T: Real> {
    pub table: StatsTable<T>,
    /// Ordered by run, then by filter in the order requested.
    pub outcomes: Vec<RunOutcome<T>>,
    /// Logs of run 0 for each filter that completed it.
    pub first_run: Vec<EpisodeLog<T>>,
}

/// Runs `n_runs` episodes per filter. Run `i` uses the seed derived from
/// `master_seed` and `i` for every filter, so comparisons are paired.
/// Aborted episodes are excluded from the summaries and counted.
pub fn run_monte_carlo<T: Real>(
    experiment: &Experiment<T>,
    filters: &[FilterKind],
    n_runs: usize,
    master_seed: u64,
) -> Result<MonteCarloReport<T>> {
    if n_runs == 0 {
        return Err(invalid("runs", "must be at least 1"));
    }
    if filters.is_empty() {
        return Err(invalid("filters", "at least one filter is required"));
    }
    let burn_in = experiment.config().burn_in;
    let jobs: Vec<(usize, FilterKind)> = (0..n_runs)
        .flat_map(|r| filters.iter().map(move |f| (r, *f)))
        .collect();

    let results: Vec<(RunOutcome<T>, Option<EpisodeLog<T>>)> = jobs
        .par_iter()
        .map(|&(run, filter)| {
            let seed = derive_seed(master_seed, run as u64);
            match experiment
                .run(filter, seed)
                .and_then(|log| Ok((log.position_rmse(burn_in)?, log)))
            {
                Ok((rmse, log)) => (
                    RunOutcome {
                        run,
                        filter,
                        seed,
                        rmse: Ok(rmse),
                        floor_hits: log.floor_hits(),
                        covariance_health: Some(log.covariance_health()),
                    },
                    (run == 0).then_some(log),
                ),
                Err(e) => (
                    RunOutcome {
                        run,
                        filter,
                        seed,
                        rmse: Err(e.to_string()),
                        floor_hits: 0,
                        covariance_health: None,
                    },
                    None,
                ),
            }
        })
        .collect();

    let mut outcomes = Vec::with_capacity(results.len());
    let mut first_run = Vec::new();
    for (outcome, log) in results {
        outcomes.push(outcome);
        first_run.extend(log);
    }

    let mut rows = Vec::with_capacity(filters.len());
    for &filter in filters {
        let ok: Vec<(T, T)> = outcomes
            .iter()
            .filter(|o| o.filter == filter)
            .filter_map(|o| o.rmse.as_ref().ok().copied())
            .collect();
        let summary = if ok.is_empty() {
            None
        } else {
            let xs: Vec<T> = ok.iter().map(|v| v.0).collect();
            let ys: Vec<T> = ok.iter().map(|v| v.1).collect();
            Some(AxisSummary {
                x: summarize(&xs)?,
                y: summarize(&ys)?,
            })
        };
        rows.push(FilterStats {
            filter,
            summary,
            completed: ok.len(),
            failures: n_runs - ok.len(),
        });
    }

    Ok(MonteCarloReport {
        table: StatsTable { runs: n_runs, rows },
        outcomes,
        first_run,
    })
}
