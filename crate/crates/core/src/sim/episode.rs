use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SVector, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::control::{
    build_selection_matrix, control_law, integral_update, DareOptions, GainCache, LqWeights,
    PositionSource,
};
use crate::error::{invalid, Error, Result};
use crate::filters::{
    held_measurement, kf_step, mcckf_step, FilterState, ImputationStrategy, MccConfig, MissingData,
    NoiseCovariances, StepDiagnostics,
};
use crate::model::{
    build_continuous_model, discretize, output_matrix, step_linear_plant, step_nonlinear_plant,
    ControlInput, DiscreteModel, PlantState, QuadrotorParams, OUTPUT_DIM, STATE_DIM,
};
use crate::scalar::Real;
use crate::sensors::{sample_availability, AvailabilityMask, NoiseModel, SensorConfig, SensorRig};
use crate::sim::stats::rmse;
use crate::sim::trajectory::{default_waypoints, generate_trajectory};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FilterKind {
    Kf,
    /// MCC-KF imputing missing blocks with the previous measurement.
    MccKf,
    /// MCC-KF imputing missing blocks with the expected measurement.
    MccKf2,
}

impl FilterKind {
    pub const ALL: [FilterKind; 3] = [FilterKind::Kf, FilterKind::MccKf, FilterKind::MccKf2];

    /// Short identifier used on the command line and in CSV headers.
    pub fn key(self) -> &'static str {
        match self {
            FilterKind::Kf => "kf",
            FilterKind::MccKf => "mcckf",
            FilterKind::MccKf2 => "mcckf2",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            FilterKind::Kf => "Kalman Filter",
            FilterKind::MccKf => "MCC-KF",
            FilterKind::MccKf2 => "MCC-KF-2",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.key().eq_ignore_ascii_case(s.trim()))
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// Every sensor reports every step.
    Continuous,
    /// UWB and camera each report with probability 0.1 per step.
    Intermittent,
}

impl Scenario {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Scenario::Continuous),
            2 => Ok(Scenario::Intermittent),
            _ => Err(invalid("scenario", format!("must be 1 or 2, got {id}"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Scenario::Continuous => 1,
            Scenario::Intermittent => 2,
        }
    }

    /// `(p_uwb, p_cam)`
    pub fn availability(self) -> (f64, f64) {
        match self {
            Scenario::Continuous => (1.0, 1.0),
            Scenario::Intermittent => (0.1, 0.1),
        }
    }

    /// UWB-position, camera and IMU standard deviations the filters assume.
    ///
    /// With sparse fixes the held measurement goes stale between updates, so
    /// the intermittent preset trusts it less.
    pub fn filter_measurement_std(self) -> [f64; 3] {
        match self {
            Scenario::Continuous => [0.04, 0.02, 0.01],
            Scenario::Intermittent => [0.2, 0.25, 0.01],
        }
    }

    /// Kernel size.
    pub fn sigma(self) -> f64 {
        match self {
            Scenario::Continuous => 5.0,
            Scenario::Intermittent => 10.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlantMode {
    Nonlinear,
    Linear,
}

/// Plant and estimator noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig<T: Real> {
    /// Per-step covariance of the additive plant noise (12×12).
    pub process: DMatrix<T>,
    /// Covariances the filters assume.
    pub filter: NoiseCovariances<T>,
    /// Initial estimate covariance is this times the identity; the initial
    /// estimate error is drawn from it.
    pub initial_variance: T,
}

impl<T: Real> NoiseConfig<T> {
    /// Diagonal plant noise from per-step standard deviations of the
    /// position, attitude, velocity and body-rate groups.
    pub fn process_from_std(std: [T; 4]) -> DMatrix<T> {
        DMatrix::from_fn(STATE_DIM, STATE_DIM, |i, j| {
            if i == j {
                std[i / 3] * std[i / 3]
            } else {
                T::zero()
            }
        })
    }

    /// Diagonal measurement covariance from UWB-position, camera and IMU
    /// standard deviations, the block order of the output vector.
    pub fn measurement_from_std(std: [T; 3]) -> DMatrix<T> {
        DMatrix::from_fn(OUTPUT_DIM, OUTPUT_DIM, |i, j| {
            if i == j {
                std[i / 3] * std[i / 3]
            } else {
                T::zero()
            }
        })
    }

    pub fn default_process_std() -> [f64; 4] {
        [0.0, 0.0, 0.006, 0.006]
    }

    pub const DEFAULT_INITIAL_VARIANCE: f64 = 1e-4;

    /// Default noise with the filter measurement covariance of `scenario`.
    pub fn for_scenario(scenario: Scenario) -> Self {
        let process = Self::process_from_std(Self::default_process_std().map(T::lit));
        Self {
            filter: NoiseCovariances::new(
                process.clone(),
                Self::measurement_from_std(scenario.filter_measurement_std().map(T::lit)),
            )
            .expect("default covariances are valid"),
            process,
            initial_variance: T::lit(Self::DEFAULT_INITIAL_VARIANCE),
        }
    }

    /// No plant noise and an exact initial estimate; the filters keep their
    /// default covariances.
    pub fn zero() -> Self {
        Self {
            process: DMatrix::zeros(STATE_DIM, STATE_DIM),
            initial_variance: T::zero(),
            ..Self::default()
        }
    }
}

impl<T: Real> Default for NoiseConfig<T> {
    fn default() -> Self {
        Self::for_scenario(Scenario::Continuous)
    }
}

/// Everything needed to run one closed-loop episode.
#[derive(Debug, Clone)]
pub struct ScenarioConfig<T: Real> {
    pub scenario: Scenario,
    pub p_uwb: f64,
    pub p_cam: f64,
    pub filter: FilterKind,
    pub steps: usize,
    /// Leading steps excluded from the RMSE.
    pub burn_in: usize,
    pub seed: u64,
    pub plant: PlantMode,
    pub params: QuadrotorParams<T>,
    pub sensors: SensorConfig<T>,
    pub noise: NoiseConfig<T>,
    pub weights: LqWeights<T>,
    pub dare: DareOptions<T>,
    /// Kernel bandwidth.
    pub sigma: T,
    /// Lower clamp on the kernel-ratio denominator.
    pub kernel_floor: T,
    /// How the baseline filter treats missing blocks.
    pub kf_missing: MissingData,
    pub waypoints: Vec<Vector3<T>>,
    /// m/s
    pub speed: T,
    /// Position error (m) beyond which an episode is declared diverged.
    pub divergence_bound: T,
}

impl<T: Real> ScenarioConfig<T> {
    pub fn new(scenario: Scenario) -> Self {
        let (p_uwb, p_cam) = scenario.availability();
        Self {
            scenario,
            p_uwb,
            p_cam,
            filter: FilterKind::MccKf,
            steps: 6000,
            burn_in: 200,
            seed: 0,
            plant: PlantMode::Nonlinear,
            params: QuadrotorParams::default(),
            sensors: SensorConfig::default(),
            noise: NoiseConfig::for_scenario(scenario),
            weights: LqWeights::default(),
            dare: DareOptions::default(),
            sigma: T::lit(scenario.sigma()),
            kernel_floor: T::lit(1e-12),
            kf_missing: MissingData::DropRows,
            waypoints: default_waypoints(),
            speed: T::lit(0.6),
            divergence_bound: T::lit(50.0),
        }
    }

    /// Applies a scenario preset: availability probabilities, the filter
    /// measurement covariance and the kernel size.
    pub fn with_scenario(mut self, scenario: Scenario) -> Self {
        self.scenario = scenario;
        (self.p_uwb, self.p_cam) = scenario.availability();
        self.noise.filter.v =
            NoiseConfig::measurement_from_std(scenario.filter_measurement_std().map(T::lit));
        self.sigma = T::lit(scenario.sigma());
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        for (name, p) in [("p_uwb", self.p_uwb), ("p_cam", self.p_cam)] {
            if !(0.0..=1.0).contains(&p) {
                return Err(invalid(name, format!("must lie in [0, 1], got {p}")));
            }
        }
        if self.steps == 0 {
            return Err(invalid("steps", "must be positive"));
        }
        if self.burn_in >= self.steps {
            return Err(invalid(
                "burn_in",
                format!(
                    "must be smaller than steps ({}), got {}",
                    self.steps, self.burn_in
                ),
            ));
        }
        if !(self.noise.initial_variance >= T::zero()) {
            return Err(invalid("initial_variance", "must be non-negative"));
        }
        if !(self.divergence_bound > T::zero()) {
            return Err(invalid("divergence_bound", "must be positive"));
        }
        MccConfig::new(
            self.sigma,
            ImputationStrategy::PreviousMeasurement,
            self.kernel_floor,
        )?;
        Ok(())
    }

    pub fn mcc(&self, strategy: ImputationStrategy) -> Result<MccConfig<T>> {
        MccConfig::new(self.sigma, strategy, self.kernel_floor)
    }
}

impl<T: Real> Default for ScenarioConfig<T> {
    fn default() -> Self {
        Self::new(Scenario::Continuous)
    }
}

/// One logged step. `estimate` is the a-posteriori plant-state estimate.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord<T: Real> {
    pub k: usize,
    pub truth: PlantState<T>,
    pub reference: Vector3<T>,
    pub estimate: SVector<T, STATE_DIM>,
    pub mask: AvailabilityMask,
    pub control: ControlInput<T>,
    pub diagnostics: StepDiagnostics<T>,
    pub source: PositionSource,
    /// Smallest eigenvalue of the covariance after this step's update.
    pub p_min_eigenvalue: T,
    /// Largest `|P − Pᵀ|` entry of the same covariance.
    pub p_asymmetry: T,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeLog<T: Real> {
    pub filter: FilterKind,
    pub seed: u64,
    pub steps: Vec<StepRecord<T>>,
    pub multilateration_failures: usize,
}

impl<T: Real> EpisodeLog<T> {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Position RMSE on the x and y axes over the steps after `burn_in`.
    pub fn position_rmse(&self, burn_in: usize) -> Result<(T, T)> {
        let tail = self.steps.get(burn_in..).unwrap_or(&[]);
        let axis = |i: usize| -> Result<T> {
            let est: Vec<T> = tail.iter().map(|s| s.estimate[i]).collect();
            let tru: Vec<T> = tail.iter().map(|s| s.truth.position[i]).collect();
            rmse(&est, &tru)
        };
        Ok((axis(0)?, axis(1)?))
    }

    /// Smallest covariance eigenvalue and largest asymmetry over all steps.
    pub fn covariance_health(&self) -> (T, T) {
        self.steps
            .iter()
            .fold((T::max_value().unwrap(), T::zero()), |(lo, asym), s| {
                (lo.min(s.p_min_eigenvalue), asym.max(s.p_asymmetry))
            })
    }

    pub fn floor_hits(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| s.diagnostics.floor_hit)
            .count()
    }

    /// Fraction of steps with a UWB fix.
    pub fn uwb_availability(&self) -> f64 {
        if self.steps.is_empty() {
            return 0.0;
        }
        self.steps.iter().filter(|s| s.mask.uwb).count() as f64 / self.steps.len() as f64
    }
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of run `index` under master seed `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    mix(master ^ mix(index))
}

mod stream {
    pub const AVAILABILITY: u64 = 1;
    pub const PROCESS: u64 = 2;
    pub const IMU: u64 = 3;
    pub const UWB: u64 = 4;
    pub const CAMERA: u64 = 5;
    pub const INIT: u64 = 6;
}

fn rng(seed: u64, id: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::seed_from_u64(seed);
    r.set_stream(id);
    r
}

/// A validated configuration with its discretized model, reference path and
/// gain cache, ready to run episodes. Cheap to share across threads.
#[derive(Debug, Clone)]
pub struct Experiment<T: Real> {
    cfg: ScenarioConfig<T>,
    model: DiscreteModel<T>,
    gains: Arc<GainCache<T>>,
    references: Vec<Vector3<T>>,
    process: NoiseModel<T>,
}

impl<T: Real> Experiment<T> {
    pub fn new(cfg: ScenarioConfig<T>) -> Result<Self> {
        cfg.validate()?;
        let model = discretize(&build_continuous_model(&cfg.params)?, cfg.params.dt)?;
        let references = generate_trajectory(&cfg.waypoints, cfg.speed, cfg.params.dt)?;
        let process = NoiseModel::gaussian(cfg.noise.process.clone())?;
        let gains = Arc::new(GainCache::new(model.clone(), cfg.weights.clone(), cfg.dare));
        // solve the full-availability gain up front so errors surface here
        gains.get(PositionSource::Uwb)?;
        Ok(Self {
            cfg,
            model,
            gains,
            references,
            process,
        })
    }

    pub fn config(&self) -> &ScenarioConfig<T> {
        &self.cfg
    }

    pub fn model(&self) -> &DiscreteModel<T> {
        &self.model
    }

    pub fn gains(&self) -> &GainCache<T> {
        &self.gains
    }

    pub fn references(&self) -> &[Vector3<T>] {
        &self.references
    }

    pub fn reference(&self, k: usize) -> Vector3<T> {
        self.references[k.min(self.references.len() - 1)]
    }

    /// Runs one episode. The noise and availability streams depend only on
    /// `seed`, so different filters see identical realizations.
    pub fn run(&self, filter: FilterKind, seed: u64) -> Result<EpisodeLog<T>> {
        let cfg = &self.cfg;
        let n_aug = STATE_DIM + 3;
        let hover = cfg.params.hover_input();
        let mcc = match filter {
            FilterKind::Kf => None,
            FilterKind::MccKf => Some(cfg.mcc(ImputationStrategy::PreviousMeasurement)?),
            FilterKind::MccKf2 => Some(cfg.mcc(ImputationStrategy::ExpectedMeasurement)?),
        };

        let mut avail_rng = rng(seed, stream::AVAILABILITY);
        let mut process_rng = rng(seed, stream::PROCESS);
        let mut init_rng = rng(seed, stream::INIT);
        let mut rig = SensorRig::new(
            cfg.sensors.clone(),
            rng(seed, stream::IMU),
            rng(seed, stream::UWB),
            rng(seed, stream::CAMERA),
        );

        let mut truth = PlantState::at_rest(self.reference(0));
        let sd = cfg.noise.initial_variance.sqrt();
        let mut x0 = DVector::zeros(n_aug);
        for (i, v) in truth.to_vector().iter().enumerate() {
            x0[i] = *v + sd * T::lit(init_rng.sample::<f64, _>(StandardNormal));
        }
        let p0 = DMatrix::identity(n_aug, n_aug) * cfg.noise.initial_variance.max(T::lit(1e-12));
        let (aug0, _) = &*self.gains.get(PositionSource::Uwb)?;
        let mut est = FilterState::new(x0, p0, &aug0.c)?;

        let c = output_matrix::<T>();
        let mut held = &c * est.x_prior.rows(0, STATE_DIM);
        let mut integral = Vector3::zeros();
        let mut source = PositionSource::Uwb;
        let mut steps = Vec::with_capacity(cfg.steps);

        for k in 0..cfg.steps {
            let abort = |e: Error| Error::EpisodeAborted {
                step: k,
                source: Box::new(e),
            };
            let r = self.reference(k);
            let mask = sample_availability(cfg.p_uwb, cfg.p_cam, &mut avail_rng);
            let frame = rig.measure(&truth, mask, k);
            let mask = frame.mask();

            source = build_selection_matrix(mask, source);
            let entry = self.gains.get(source).map_err(abort)?;
            let (aug, gain) = &*entry;

            let mut error = est.x_prior.rows(0, STATE_DIM).into_owned();
            for i in 0..3 {
                error[i] -= r[i];
            }
            let u = control_law(gain, &error, &integral, &hover);

            let du = u.to_vector() - hover.to_vector();
            let du = DVector::from_column_slice(du.as_slice());
            let rd = DVector::from_column_slice(r.as_slice());
            let (next, diagnostics) = match &mcc {
                None => kf_step(
                    &est,
                    aug,
                    &du,
                    &rd,
                    &frame,
                    &cfg.noise.filter,
                    cfg.kf_missing,
                ),
                Some(m) => mcckf_step(&est, aug, &du, &rd, &frame, &cfg.noise.filter, m),
            }
            .map_err(abort)?;

            held = held_measurement(&frame, &held);
            integral = integral_update(&integral, &r, &held, &aug.selection);

            let mut estimate = SVector::<T, STATE_DIM>::zeros();
            estimate.copy_from(&next.x_post.rows(0, STATE_DIM));
            steps.push(StepRecord {
                k,
                truth,
                reference: r,
                estimate,
                mask,
                control: u,
                diagnostics,
                source,
                p_min_eigenvalue: next.p_prior.symmetric_eigenvalues().min(),
                p_asymmetry: (&next.p_prior - next.p_prior.transpose()).amax(),
            });
            est = next;

            let w = self.process.sample(&mut process_rng);
            let w = SVector::<T, STATE_DIM>::from_column_slice(w.as_slice());
            truth = match cfg.plant {
                PlantMode::Nonlinear => step_nonlinear_plant(&truth, &u, &cfg.params, &w),
                PlantMode::Linear => step_linear_plant(&truth, &u, &cfg.params, &self.model, &w),
            };
            if !truth.is_finite() || (truth.position - r).norm() > cfg.divergence_bound {
                return Err(abort(Error::Numerical(format!(
                    "plant diverged: position {:?} against reference {:?}",
                    truth.position.as_slice(),
                    r.as_slice()
                ))));
            }
        }

        Ok(EpisodeLog {
            filter,
            seed,
            steps,
            multilateration_failures: rig.multilateration_failures,
        })
    }
}

/// Builds an [`Experiment`] from `cfg` and runs its configured filter and seed.
pub fn run_episode<T: Real>(cfg: ScenarioConfig<T>) -> Result<EpisodeLog<T>> {
    let (filter, seed) = (cfg.filter, cfg.seed);
    Experiment::new(cfg)?.run(filter, seed)
}
