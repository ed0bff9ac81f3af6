use std::path::PathBuf;

use quadfuse::sim::{run_monte_carlo, Experiment, FilterKind, MonteCarloReport, Scenario};

use crate::config::{parse_config, parse_filters, Emit, Settings};
use crate::output::{emit_stats, emit_trajectory_csv};
use crate::CliError;

/// Command-line choices layered over the configuration file.
#[derive(Debug, Clone, Default)]
pub struct RunManifest {
    pub config: Option<PathBuf>,
    pub scenario: Option<u8>,
    pub filters: Option<Vec<String>>,
    pub seed: Option<u64>,
    pub runs: Option<usize>,
    pub out: Option<PathBuf>,
    pub emit: Option<Vec<String>>,
}

impl RunManifest {
    pub fn resolve(&self) -> Result<Settings, CliError> {
        let mut s = match &self.config {
            Some(p) => parse_config(p)?,
            None => Settings::default(),
        };
        if let Some(id) = self.scenario {
            s.set_scenario(Scenario::from_id(id)?);
        }
        if let Some(f) = &self.filters {
            s.filters = parse_filters(f.iter().map(String::as_str)).map_err(CliError::Usage)?;
        }
        if let Some(seed) = self.seed {
            s.scenario.seed = seed;
        }
        if let Some(runs) = self.runs {
            if runs == 0 {
                return Err(CliError::Usage("--runs must be at least 1".into()));
            }
            s.runs = runs;
        }
        if let Some(out) = &self.out {
            s.out_dir = out.clone();
        }
        if let Some(e) = &self.emit {
            s.emit = Emit::parse(e.iter().map(String::as_str)).map_err(CliError::Usage)?;
        }
        Ok(s)
    }
}

#[derive(Debug)]
pub struct RunResult {
    pub report: MonteCarloReport<f64>,
    pub written: Vec<PathBuf>,
    /// Files that could not be produced, with the reason.
    pub skipped: Vec<(PathBuf, String)>,
}

impl RunResult {
    pub fn failures(&self) -> usize {
        self.report.table.total_failures()
    }
}

/// Runs the Monte-Carlo study and writes the requested files.
pub fn execute(settings: &Settings) -> Result<RunResult, CliError> {
    let cfg = &settings.scenario;
    let experiment = Experiment::new(cfg.clone())?;
    let report = run_monte_carlo(&experiment, &settings.filters, settings.runs, cfg.seed)?;

    std::fs::create_dir_all(&settings.out_dir).map_err(|source| CliError::Write {
        path: settings.out_dir.clone(),
        source,
    })?;
    let n = cfg.scenario.id();
    let file = |suffix: &str| settings.out_dir.join(format!("scenario{n}_{suffix}"));
    let mut written = Vec::new();
    let mut skipped = Vec::new();

    if settings.emit.trajectory_csv {
        let path = file("trajectory.csv");
        let log = |f: FilterKind| report.first_run.iter().find(|l| l.filter == f);
        match (log(FilterKind::Kf), log(FilterKind::MccKf)) {
            (Some(kf), Some(mcc)) => {
                emit_trajectory_csv(kf, mcc, cfg.burn_in, &path)?;
                written.push(path);
            }
            _ => skipped.push((
                path,
                "needs a completed run 0 of both kf and mcckf".to_string(),
            )),
        }
    }
    let text = settings.emit.stats_text.then(|| file("stats.txt"));
    let csv = settings.emit.stats_csv.then(|| file("stats.csv"));
    emit_stats(&report.table, cfg.scenario, text.as_deref(), csv.as_deref())?;
    written.extend(text);
    written.extend(csv);

    Ok(RunResult {
        report,
        written,
        skipped,
    })
}
