//! Configuration file schema, defaults and validation.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, Vector3};
use quadfuse::control::{DareOptions, LqWeights};
use quadfuse::filters::{ImputationStrategy, MissingData, NoiseCovariances};
use quadfuse::model::QuadrotorParams;
use quadfuse::sensors::{AnchorSet, NoiseModel, UwbMode};
use quadfuse::sim::{FilterKind, NoiseConfig, PlantMode, Scenario, ScenarioConfig};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

type S<T> = Option<Spanned<T>>;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct File {
    scenario: S<i64>,
    seed: S<u64>,
    runs: S<i64>,
    steps: S<i64>,
    burn_in: S<i64>,
    plant: S<String>,
    filters: S<Vec<String>>,
    #[serde(default)]
    quad: Quad,
    #[serde(default)]
    noise: Noise,
    #[serde(default)]
    imu: Imu,
    #[serde(default)]
    uwb: Uwb,
    #[serde(default)]
    camera: Camera,
    #[serde(default)]
    availability: Availability,
    #[serde(default)]
    mcc: Mcc,
    #[serde(default)]
    kf: Kf,
    #[serde(default)]
    lq: Lq,
    #[serde(default)]
    trajectory: Trajectory,
    #[serde(default)]
    output: Output,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Quad {
    mass: S<f64>,
    gravity: S<f64>,
    ix: S<f64>,
    iy: S<f64>,
    iz: S<f64>,
    dt: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Noise {
    process_std: S<Vec<f64>>,
    filter_process_std: S<Vec<f64>>,
    filter_measurement_std: S<Vec<f64>>,
    initial_variance: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Imu {
    std: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Uwb {
    mode: S<String>,
    range_std: S<f64>,
    direct_std: S<f64>,
    anchors: S<Vec<Vec<f64>>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Camera {
    std: S<f64>,
    outlier_prob: S<f64>,
    outlier_scale: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Availability {
    p_uwb: S<f64>,
    p_cam: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Mcc {
    sigma: S<f64>,
    floor: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Kf {
    missing: S<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Lq {
    q: S<Vec<f64>>,
    r: S<Vec<f64>>,
    dare_tol: S<f64>,
    dare_max_iter: S<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Trajectory {
    waypoints: S<Vec<Vec<f64>>>,
    speed: S<f64>,
    divergence_bound: S<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct Output {
    dir: S<String>,
    emit: S<Vec<String>>,
}

/// Output files a run may write.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Emit {
    pub trajectory_csv: bool,
    pub stats_csv: bool,
    pub stats_text: bool,
}

impl Emit {
    pub const ALL: Emit = Emit {
        trajectory_csv: true,
        stats_csv: true,
        stats_text: true,
    };
    pub const KEYS: [&'static str; 3] = ["trajectory-csv", "stats-csv", "stats-text"];

    pub fn parse<'a>(items: impl IntoIterator<Item = &'a str>) -> Result<Self, String> {
        let mut e = Emit {
            trajectory_csv: false,
            stats_csv: false,
            stats_text: false,
        };
        for item in items {
            match item.trim() {
                "trajectory-csv" => e.trajectory_csv = true,
                "stats-csv" => e.stats_csv = true,
                "stats-text" => e.stats_text = true,
                other => {
                    return Err(format!(
                        "unknown emit flag `{other}` (expected one of {})",
                        Self::KEYS.join(", ")
                    ))
                }
            }
        }
        Ok(e)
    }
}

/// A fully resolved configuration.
#[derive(Debug, Clone)]
pub struct Settings {
    pub scenario: ScenarioConfig<f64>,
    pub runs: usize,
    pub filters: Vec<FilterKind>,
    pub out_dir: PathBuf,
    pub emit: Emit,
    /// Preset-controlled values that were set explicitly.
    pub explicit: Explicit,
}

/// Which scenario-preset values the file set explicitly. These survive a
/// scenario override from the command line.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Explicit {
    pub p_uwb: bool,
    pub p_cam: bool,
    pub filter_measurement_std: bool,
    pub sigma: bool,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            scenario: ScenarioConfig::default(),
            runs: 20,
            filters: vec![FilterKind::Kf, FilterKind::MccKf, FilterKind::MccKf2],
            out_dir: PathBuf::from("out"),
            emit: Emit::ALL,
            explicit: Explicit::default(),
        }
    }
}

impl Settings {
    /// Switches scenario preset, keeping values set explicitly in the file.
    pub fn set_scenario(&mut self, scenario: Scenario) {
        let old = self.scenario.clone();
        self.scenario = old.clone().with_scenario(scenario);
        let e = self.explicit;
        if e.p_uwb {
            self.scenario.p_uwb = old.p_uwb;
        }
        if e.p_cam {
            self.scenario.p_cam = old.p_cam;
        }
        if e.filter_measurement_std {
            self.scenario.noise.filter.v = old.noise.filter.v;
        }
        if e.sigma {
            self.scenario.sigma = old.sigma;
        }
    }
}

pub fn parse_filters<'a>(
    items: impl IntoIterator<Item = &'a str>,
) -> Result<Vec<FilterKind>, String> {
    let mut out = Vec::new();
    for item in items {
        let f = FilterKind::parse(item).ok_or_else(|| {
            format!(
                "unknown filter `{}` (expected kf, mcckf or mcckf2)",
                item.trim()
            )
        })?;
        if !out.contains(&f) {
            out.push(f);
        }
    }
    if out.is_empty() {
        return Err("filter list must not be empty".into());
    }
    Ok(out)
}

/// Reads and resolves a configuration file.
pub fn parse_config(path: &Path) -> Result<Settings, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config_str(&text, path)
}

/// Resolves configuration text; `origin` is only used in diagnostics.
pub fn parse_config_str(text: &str, origin: &Path) -> Result<Settings, CliError> {
    let file: File = toml::from_str(text).map_err(|e| CliError::Parse {
        path: origin.to_path_buf(),
        message: e.to_string().trim_end().to_string(),
    })?;
    Resolver { text, origin }.resolve(file)
}

struct Resolver<'a> {
    text: &'a str,
    origin: &'a Path,
}

impl Resolver<'_> {
    fn fail<T>(&self, key: &str, value: &Spanned<T>, reason: impl Into<String>) -> CliError {
        let line = self.text[..value.span().start.min(self.text.len())]
            .matches('\n')
            .count()
            + 1;
        CliError::Constraint {
            path: self.origin.to_path_buf(),
            line,
            key: key.to_string(),
            reason: reason.into(),
        }
    }

    fn float(
        &self,
        key: &str,
        v: &S<f64>,
        default: f64,
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Result<f64, CliError> {
        match v {
            None => Ok(default),
            Some(s) if s.get_ref().is_finite() && ok(*s.get_ref()) => Ok(*s.get_ref()),
            Some(s) => Err(self.fail(key, s, format!("{rule}, got {}", s.get_ref()))),
        }
    }

    fn int(&self, key: &str, v: &S<i64>, default: usize, min: i64) -> Result<usize, CliError> {
        match v {
            None => Ok(default),
            Some(s) if *s.get_ref() >= min => Ok(*s.get_ref() as usize),
            Some(s) => Err(self.fail(
                key,
                s,
                format!("must be at least {min}, got {}", s.get_ref()),
            )),
        }
    }

    fn vector<const N: usize>(
        &self,
        key: &str,
        v: &S<Vec<f64>>,
        default: [f64; N],
        ok: impl Fn(f64) -> bool,
        rule: &str,
    ) -> Result<[f64; N], CliError> {
        let Some(s) = v else { return Ok(default) };
        let vals = s.get_ref();
        if vals.len() != N {
            return Err(self.fail(key, s, format!("expected {N} values, got {}", vals.len())));
        }
        if let Some(bad) = vals.iter().find(|x| !x.is_finite() || !ok(**x)) {
            return Err(self.fail(key, s, format!("{rule}, got {bad}")));
        }
        let mut out = [0.0; N];
        out.copy_from_slice(vals);
        Ok(out)
    }

    fn points(&self, key: &str, v: &Spanned<Vec<Vec<f64>>>) -> Result<Vec<Vector3<f64>>, CliError> {
        v.get_ref()
            .iter()
            .map(|p| match p.as_slice() {
                [x, y, z] if p.iter().all(|c| c.is_finite()) => Ok(Vector3::new(*x, *y, *z)),
                _ => Err(self.fail(key, v, "every point must be three finite numbers [x, y, z]")),
            })
            .collect()
    }

    fn resolve(&self, f: File) -> Result<Settings, CliError> {
        let mut settings = Settings::default();
        let base = ScenarioConfig::<f64>::default();
        let positive = |x: f64| x > 0.0;
        let non_negative = |x: f64| x >= 0.0;
        let probability = |x: f64| (0.0..=1.0).contains(&x);

        let scenario = match &f.scenario {
            None => Scenario::Continuous,
            Some(s) => match *s.get_ref() {
                1 => Scenario::Continuous,
                2 => Scenario::Intermittent,
                other => {
                    return Err(self.fail("scenario", s, format!("must be 1 or 2, got {other}")))
                }
            },
        };
        let mut cfg = ScenarioConfig::<f64>::new(scenario);
        cfg.seed = f.seed.as_ref().map(|s| *s.get_ref()).unwrap_or(base.seed);
        settings.runs = self.int("runs", &f.runs, settings.runs, 1)?;
        cfg.steps = self.int("steps", &f.steps, base.steps, 1)?;
        cfg.burn_in = self.int("burn_in", &f.burn_in, base.burn_in, 0)?;
        if cfg.burn_in >= cfg.steps {
            let at = f
                .burn_in
                .as_ref()
                .map(|s| s.span())
                .or(f.steps.as_ref().map(|s| s.span()));
            let line = at
                .map(|sp| self.text[..sp.start].matches('\n').count() + 1)
                .unwrap_or(1);
            return Err(CliError::Constraint {
                path: self.origin.to_path_buf(),
                line,
                key: "burn_in".into(),
                reason: format!(
                    "must be smaller than steps ({}), got {}",
                    cfg.steps, cfg.burn_in
                ),
            });
        }
        if let Some(s) = &f.plant {
            cfg.plant = match s.get_ref().as_str() {
                "nonlinear" => PlantMode::Nonlinear,
                "linear" => PlantMode::Linear,
                other => {
                    return Err(self.fail(
                        "plant",
                        s,
                        format!("expected \"nonlinear\" or \"linear\", got \"{other}\""),
                    ))
                }
            };
        }
        if let Some(s) = &f.filters {
            settings.filters = parse_filters(s.get_ref().iter().map(String::as_str))
                .map_err(|e| self.fail("filters", s, e))?;
        }

        let q = &f.quad;
        let p = base.params;
        cfg.params = QuadrotorParams {
            mass: self.float("quad.mass", &q.mass, p.mass, positive, "must be positive")?,
            gravity: self.float(
                "quad.gravity",
                &q.gravity,
                p.gravity,
                positive,
                "must be positive",
            )?,
            ix: self.float("quad.ix", &q.ix, p.ix, positive, "must be positive")?,
            iy: self.float("quad.iy", &q.iy, p.iy, positive, "must be positive")?,
            iz: self.float("quad.iz", &q.iz, p.iz, positive, "must be positive")?,
            dt: self.float("quad.dt", &q.dt, p.dt, positive, "must be positive")?,
        };

        let n = &f.noise;
        let process_std = self.vector(
            "noise.process_std",
            &n.process_std,
            NoiseConfig::<f64>::default_process_std(),
            non_negative,
            "must be non-negative",
        )?;
        let filter_process_std = self.vector(
            "noise.filter_process_std",
            &n.filter_process_std,
            process_std,
            non_negative,
            "must be non-negative",
        )?;
        let filter_measurement_std = self.vector(
            "noise.filter_measurement_std",
            &n.filter_measurement_std,
            scenario.filter_measurement_std(),
            positive,
            "must be positive",
        )?;
        cfg.noise = NoiseConfig {
            process: NoiseConfig::process_from_std(process_std),
            filter: NoiseCovariances::new(
                NoiseConfig::process_from_std(filter_process_std),
                NoiseConfig::measurement_from_std(filter_measurement_std),
            )?,
            initial_variance: self.float(
                "noise.initial_variance",
                &n.initial_variance,
                NoiseConfig::<f64>::DEFAULT_INITIAL_VARIANCE,
                non_negative,
                "must be non-negative",
            )?,
        };

        let defaults = &base.sensors;
        let imu_std = self.float(
            "imu.std",
            &f.imu.std,
            default_std(&defaults.imu),
            non_negative,
            "must be non-negative",
        )?;
        cfg.sensors.imu = NoiseModel::isotropic(3, imu_std)?;
        if let Some(s) = &f.uwb.mode {
            cfg.sensors.uwb_mode = match s.get_ref().as_str() {
                "ranged" => UwbMode::Ranged,
                "direct" => UwbMode::Direct,
                other => {
                    return Err(self.fail(
                        "uwb.mode",
                        s,
                        format!("expected \"ranged\" or \"direct\", got \"{other}\""),
                    ))
                }
            };
        }
        let range_std = self.float(
            "uwb.range_std",
            &f.uwb.range_std,
            default_std(&defaults.uwb_range),
            non_negative,
            "must be non-negative",
        )?;
        cfg.sensors.uwb_range = NoiseModel::isotropic(1, range_std)?;
        let direct_std = self.float(
            "uwb.direct_std",
            &f.uwb.direct_std,
            default_std(&defaults.uwb_direct),
            non_negative,
            "must be non-negative",
        )?;
        cfg.sensors.uwb_direct = NoiseModel::isotropic(3, direct_std)?;
        if let Some(s) = &f.uwb.anchors {
            let pts = self.points("uwb.anchors", s)?;
            cfg.sensors.anchors =
                AnchorSet::new(pts).map_err(|e| self.fail("uwb.anchors", s, e.to_string()))?;
        }
        let c = &f.camera;
        let cam_std = self.float(
            "camera.std",
            &c.std,
            default_std(&defaults.camera),
            non_negative,
            "must be non-negative",
        )?;
        let p_out = self.float(
            "camera.outlier_prob",
            &c.outlier_prob,
            defaults.camera.outlier_prob(),
            probability,
            "must lie in [0, 1]",
        )?;
        let kappa = self.float(
            "camera.outlier_scale",
            &c.outlier_scale,
            defaults.camera.outlier_scale(),
            |x| x >= 1.0,
            "must be at least 1",
        )?;
        cfg.sensors.camera =
            NoiseModel::contaminated(DMatrix::identity(3, 3) * (cam_std * cam_std), p_out, kappa)?;

        let a = &f.availability;
        cfg.p_uwb = self.float(
            "availability.p_uwb",
            &a.p_uwb,
            cfg.p_uwb,
            probability,
            "must lie in [0, 1]",
        )?;
        cfg.p_cam = self.float(
            "availability.p_cam",
            &a.p_cam,
            cfg.p_cam,
            probability,
            "must lie in [0, 1]",
        )?;
        cfg.sigma = self.float(
            "mcc.sigma",
            &f.mcc.sigma,
            cfg.sigma,
            positive,
            "must be positive",
        )?;
        settings.explicit = Explicit {
            p_uwb: a.p_uwb.is_some(),
            p_cam: a.p_cam.is_some(),
            filter_measurement_std: n.filter_measurement_std.is_some(),
            sigma: f.mcc.sigma.is_some(),
        };
        cfg.kernel_floor = self.float(
            "mcc.floor",
            &f.mcc.floor,
            base.kernel_floor,
            positive,
            "must be positive",
        )?;
        if let Some(s) = &f.kf.missing {
            cfg.kf_missing = match s.get_ref().as_str() {
                "drop" => MissingData::DropRows,
                "previous" => MissingData::Impute(ImputationStrategy::PreviousMeasurement),
                "expected" => MissingData::Impute(ImputationStrategy::ExpectedMeasurement),
                other => {
                    return Err(self.fail(
                        "kf.missing",
                        s,
                        format!("expected \"drop\", \"previous\" or \"expected\", got \"{other}\""),
                    ))
                }
            };
        }

        let l = &f.lq;
        let qd = self.vector(
            "lq.q",
            &l.q,
            quadfuse::control::default_q_diagonal(),
            non_negative,
            "must be non-negative",
        )?;
        let rd = self.vector(
            "lq.r",
            &l.r,
            quadfuse::control::default_r_diagonal(),
            positive,
            "must be positive",
        )?;
        cfg.weights = LqWeights::diagonal(&qd, &rd)?;
        cfg.dare = DareOptions {
            tol: self.float(
                "lq.dare_tol",
                &l.dare_tol,
                base.dare.tol,
                positive,
                "must be positive",
            )?,
            max_iter: self.int("lq.dare_max_iter", &l.dare_max_iter, base.dare.max_iter, 1)?,
        };

        let t = &f.trajectory;
        if let Some(s) = &t.waypoints {
            let pts = self.points("trajectory.waypoints", s)?;
            if pts.len() < 2 {
                return Err(self.fail("trajectory.waypoints", s, "need at least 2 waypoints"));
            }
            if let Some(i) = pts.windows(2).position(|w| w[0] == w[1]) {
                return Err(self.fail(
                    "trajectory.waypoints",
                    s,
                    format!("waypoints {i} and {} coincide", i + 1),
                ));
            }
            cfg.waypoints = pts;
        }
        cfg.speed = self.float(
            "trajectory.speed",
            &t.speed,
            base.speed,
            positive,
            "must be positive",
        )?;
        cfg.divergence_bound = self.float(
            "trajectory.divergence_bound",
            &t.divergence_bound,
            base.divergence_bound,
            positive,
            "must be positive",
        )?;

        if let Some(s) = &f.output.dir {
            settings.out_dir = PathBuf::from(s.get_ref());
        }
        if let Some(s) = &f.output.emit {
            settings.emit = Emit::parse(s.get_ref().iter().map(String::as_str))
                .map_err(|e| self.fail("output.emit", s, e))?;
        }

        cfg.validate()?;
        settings.scenario = cfg;
        Ok(settings)
    }
}

fn default_std(m: &NoiseModel<f64>) -> f64 {
    m.covariance()[(0, 0)].sqrt()
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("[{}]", items.join(", "))
}

/// Every configuration key with its default and unit, as shown by `--help`.
pub fn reference() -> String {
    let d = ScenarioConfig::<f64>::default();
    let s = &d.sensors;
    let p = &d.params;
    let mut o = String::new();
    let mut line = |key: &str, default: String, doc: &str| {
        let _ = writeln!(o, "  {key:<30} {default:<24} {doc}");
    };
    line(
        "scenario",
        "1".into(),
        "1 = continuous sensing, 2 = UWB and camera at 10% each",
    );
    line("seed", format!("{}", d.seed), "master seed (u64)");
    line("runs", "20".into(), "Monte-Carlo runs per filter");
    line("steps", format!("{}", d.steps), "episode length in steps");
    line(
        "burn_in",
        format!("{}", d.burn_in),
        "leading steps excluded from RMSE",
    );
    line(
        "plant",
        "\"nonlinear\"".into(),
        "\"nonlinear\" (RK4) or \"linear\"",
    );
    line(
        "filters",
        "[\"kf\",\"mcckf\",\"mcckf2\"]".into(),
        "estimators to run",
    );
    line("quad.mass", format!("{}", p.mass), "kg");
    line("quad.gravity", format!("{}", p.gravity), "m/s^2");
    line(
        "quad.ix / iy / iz",
        format!("{} / {} / {}", p.ix, p.iy, p.iz),
        "kg m^2",
    );
    line("quad.dt", format!("{}", p.dt), "s, sample period");
    line(
        "noise.process_std",
        list(&NoiseConfig::<f64>::default_process_std()),
        "per-step plant noise std: position m, attitude rad, velocity m/s, rates rad/s",
    );
    line(
        "noise.filter_process_std",
        "= process_std".into(),
        "same layout, assumed by the filters",
    );
    line(
        "noise.filter_measurement_std",
        "scenario preset".into(),
        "assumed std of UWB position m, camera position m, IMU attitude rad",
    );
    line(
        "noise.initial_variance",
        format!("{}", d.noise.initial_variance),
        "P0 = value * I; initial estimate error drawn from it (m^2, rad^2, ...)",
    );
    line(
        "imu.std",
        format!("{}", default_std(&s.imu)),
        "rad per axis",
    );
    line(
        "uwb.mode",
        "\"ranged\"".into(),
        "\"ranged\" (anchor ranges + multilateration) or \"direct\"",
    );
    line(
        "uwb.range_std",
        format!("{}", default_std(&s.uwb_range)),
        "m per anchor range",
    );
    line(
        "uwb.direct_std",
        format!("{}", default_std(&s.uwb_direct)),
        "m per axis, direct mode",
    );
    line(
        "uwb.anchors",
        "8 corners of a box".into(),
        "list of [x, y, z] in m, at least 4, not coplanar",
    );
    line(
        "camera.std",
        format!("{}", default_std(&s.camera)),
        "m per axis, nominal",
    );
    line(
        "camera.outlier_prob",
        format!("{}", s.camera.outlier_prob()),
        "probability of an outlier draw",
    );
    line(
        "camera.outlier_scale",
        format!("{}", s.camera.outlier_scale()),
        "covariance inflation of outliers",
    );
    line(
        "availability.p_uwb",
        "scenario preset".into(),
        "probability a UWB fix arrives each step",
    );
    line(
        "availability.p_cam",
        "scenario preset".into(),
        "probability a camera fix arrives each step",
    );
    line(
        "mcc.sigma",
        "scenario preset".into(),
        "kernel size, whitened innovation units",
    );
    line(
        "mcc.floor",
        format!("{:e}", d.kernel_floor),
        "clamp on the kernel-ratio denominator",
    );
    line(
        "kf.missing",
        "\"drop\"".into(),
        "\"drop\" rows, or impute with \"previous\" / \"expected\"",
    );
    line(
        "lq.q",
        list(&quadfuse::control::default_q_diagonal()),
        "diagonal of the 15x15 state weight",
    );
    line(
        "lq.r",
        list(&quadfuse::control::default_r_diagonal()),
        "diagonal of the 4x4 input weight",
    );
    line(
        "lq.dare_tol",
        format!("{:e}", d.dare.tol),
        "Riccati iteration tolerance",
    );
    line(
        "lq.dare_max_iter",
        format!("{}", d.dare.max_iter),
        "Riccati iteration cap",
    );
    line(
        "trajectory.waypoints",
        "[[0,0,1],[13,0,1],[13,3,1],[0,3,1]]".into(),
        "m",
    );
    line("trajectory.speed", format!("{}", d.speed), "m/s");
    line(
        "trajectory.divergence_bound",
        format!("{}", d.divergence_bound),
        "m of tracking error that aborts an episode",
    );
    line("output.dir", "\"out\"".into(), "output directory");
    line(
        "output.emit",
        "all".into(),
        "any of \"trajectory-csv\", \"stats-csv\", \"stats-text\"",
    );
    let mut presets = String::new();
    for sc in [Scenario::Continuous, Scenario::Intermittent] {
        let (pu, pc) = sc.availability();
        let _ = writeln!(
            presets,
            "  scenario {}: p_uwb {pu}, p_cam {pc}, filter_measurement_std {}, sigma {}",
            sc.id(),
            list(&sc.filter_measurement_std()),
            sc.sigma()
        );
    }
    format!(
        "Configuration file keys (TOML; sections written as [quad], [noise], ...):\n{o}\n\
         Scenario presets (explicit keys take precedence):\n{presets}"
    )
}
