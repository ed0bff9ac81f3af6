//! Simulated IMU, UWB and camera sensors, each with its own noise model and
//! availability process, plus the stacked measurement frame.

use nalgebra::{DMatrix, DVector, Matrix3, SVector, Vector3};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{invalid, Error, Result};
use crate::model::{PlantState, OUTPUT_DIM};
use crate::scalar::{wrap_angle, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseKind {
    Gaussian,
    /// `(1-p)·N(0,Σ) + p·N(0,κΣ)`
    Contaminated,
}

/// Zero-mean additive noise, optionally contaminated by inflated-variance
/// outliers.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel<T: Real> {
    kind: NoiseKind,
    covariance: DMatrix<T>,
    outlier_prob: T,
    outlier_scale: T,
    factor: DMatrix<T>,
}

impl<T: Real> NoiseModel<T> {
    pub fn gaussian(covariance: DMatrix<T>) -> Result<Self> {
        Self::build(NoiseKind::Gaussian, covariance, T::zero(), T::one())
    }

    pub fn contaminated(covariance: DMatrix<T>, outlier_prob: T, outlier_scale: T) -> Result<Self> {
        Self::build(
            NoiseKind::Contaminated,
            covariance,
            outlier_prob,
            outlier_scale,
        )
    }

    /// Isotropic Gaussian with standard deviation `sigma` on each of `dim` axes.
    pub fn isotropic(dim: usize, sigma: T) -> Result<Self> {
        Self::gaussian(DMatrix::identity(dim, dim) * (sigma * sigma))
    }

    fn build(
        kind: NoiseKind,
        covariance: DMatrix<T>,
        outlier_prob: T,
        outlier_scale: T,
    ) -> Result<Self> {
        let n = covariance.nrows();
        if n == 0 || covariance.ncols() != n {
            return Err(invalid("covariance", "must be a non-empty square matrix"));
        }
        if !(outlier_prob >= T::zero() && outlier_prob <= T::one()) {
            return Err(invalid(
                "outlier_prob",
                format!("must lie in [0, 1], got {outlier_prob}"),
            ));
        }
        if !(outlier_scale >= T::one()) || !outlier_scale.is_finite() {
            return Err(invalid(
                "outlier_scale",
                format!("must be >= 1, got {outlier_scale}"),
            ));
        }
        let factor = psd_factor(&covariance)?;
        Ok(Self {
            kind,
            covariance,
            outlier_prob,
            outlier_scale,
            factor,
        })
    }

    pub fn kind(&self) -> NoiseKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.covariance.nrows()
    }

    pub fn covariance(&self) -> &DMatrix<T> {
        &self.covariance
    }

    pub fn outlier_prob(&self) -> T {
        self.outlier_prob
    }

    pub fn outlier_scale(&self) -> T {
        self.outlier_scale
    }

    /// One draw. Contaminated models always consume the outlier coin so that
    /// streams stay aligned whatever `p_out` is.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<T> {
        let z = DVector::<T>::from_fn(self.dim(), |_, _| {
            T::lit(rng.sample::<f64, _>(StandardNormal))
        });
        let mut draw = &self.factor * z;
        if self.kind == NoiseKind::Contaminated {
            let coin: f64 = rng.random();
            if T::lit(coin) < self.outlier_prob {
                draw *= self.outlier_scale.sqrt();
            }
        }
        draw
    }

    pub fn sample3<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector3<T> {
        let d = self.sample(rng);
        Vector3::new(d[0], d[1], d[2])
    }
}

/// Symmetric square root `U·diag(√λ)·Uᵀ` of a PSD matrix.
fn psd_factor<T: Real>(cov: &DMatrix<T>) -> Result<DMatrix<T>> {
    let asym = (cov - cov.transpose()).amax();
    let scale = cov.amax().max(T::one());
    let tol = T::lit(1e-9) * scale;
    if asym > tol {
        return Err(invalid("covariance", "must be symmetric"));
    }
    let eig = cov.clone().symmetric_eigen();
    if eig.eigenvalues.iter().any(|l| *l < -tol) {
        return Err(invalid("covariance", "must be positive semi-definite"));
    }
    let sqrt_l = eig.eigenvalues.map(|l| l.max(T::zero()).sqrt());
    let u = &eig.eigenvectors;
    Ok(u * DMatrix::from_diagonal(&sqrt_l) * u.transpose())
}

/// Fixed UWB anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct AnchorSet<T: Real> {
    anchors: Vec<Vector3<T>>,
}

impl<T: Real> AnchorSet<T> {
    pub fn new(anchors: Vec<Vector3<T>>) -> Result<Self> {
        if anchors.len() < 4 {
            return Err(Error::Geometry(format!(
                "need at least 4 anchors, got {}",
                anchors.len()
            )));
        }
        let n = T::from_usize(anchors.len()).unwrap();
        let centroid = anchors.iter().fold(Vector3::zeros(), |acc, a| acc + a) / n;
        let centered = DMatrix::from_fn(anchors.len(), 3, |i, j| anchors[i][j] - centroid[j]);
        let sv = centered.singular_values();
        let smax = sv.max();
        if smax <= T::zero() || sv.min() <= smax * T::lit(1e-9) {
            return Err(Error::Geometry("anchors are coplanar".into()));
        }
        Ok(Self { anchors })
    }

    /// Corners of an axis-aligned box.
    pub fn box_corners(min: Vector3<T>, max: Vector3<T>) -> Result<Self> {
        let mut anchors = Vec::with_capacity(8);
        for &x in &[min.x, max.x] {
            for &y in &[min.y, max.y] {
                for &z in &[min.z, max.z] {
                    anchors.push(Vector3::new(x, y, z));
                }
            }
        }
        Self::new(anchors)
    }

    /// 16 m × 5 m × 4 m box around the default rectangle trajectory.
    pub fn default_box() -> Self {
        Self::box_corners(
            Vector3::new(T::lit(-1.5), T::lit(-1.0), T::zero()),
            Vector3::new(T::lit(14.5), T::lit(4.0), T::lit(4.0)),
        )
        .expect("default anchors are non-coplanar")
    }

    pub fn as_slice(&self) -> &[Vector3<T>] {
        &self.anchors
    }

    pub fn len(&self) -> usize {
        self.anchors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.anchors.is_empty()
    }

    pub fn centroid(&self) -> Vector3<T> {
        let n = T::from_usize(self.anchors.len()).unwrap();
        self.anchors.iter().fold(Vector3::zeros(), |acc, a| acc + a) / n
    }
}

/// Per-step sensor availability indicators.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct AvailabilityMask {
    pub uwb: bool,
    pub cam: bool,
    pub imu: bool,
}

impl AvailabilityMask {
    pub const ALL: Self = Self {
        uwb: true,
        cam: true,
        imu: true,
    };

    pub fn is_set(&self, sensor: Sensor) -> bool {
        match sensor {
            Sensor::Uwb => self.uwb,
            Sensor::Camera => self.cam,
            Sensor::Imu => self.imu,
        }
    }
}

/// Bernoulli availability for UWB and camera; the IMU is always present.
pub fn sample_availability<R: Rng + ?Sized>(
    p_uwb: f64,
    p_cam: f64,
    rng: &mut R,
) -> AvailabilityMask {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    AvailabilityMask {
        uwb: a < p_uwb,
        cam: b < p_cam,
        imu: true,
    }
}

pub fn measure_imu<T: Real, R: Rng + ?Sized>(
    state: &PlantState<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> Vector3<T> {
    (state.attitude + noise.sample3(rng)).map(wrap_angle)
}

/// Tag-to-anchor distances with independent scalar noise per anchor.
pub fn range_uwb<T: Real, R: Rng + ?Sized>(
    state: &PlantState<T>,
    anchors: &AnchorSet<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> Vec<T> {
    anchors
        .as_slice()
        .iter()
        .map(|a| ((state.position - a).norm() + noise.sample(rng)[0]).max(T::zero()))
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct MultilaterationOptions<T> {
    pub step_tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for MultilaterationOptions<T> {
    fn default() -> Self {
        Self {
            step_tol: T::lit(1e-9),
            max_iter: 50,
        }
    }
}

/// Gauss–Newton fit of `Σᵢ (‖p − aᵢ‖ − rᵢ)²`.
pub fn multilaterate<T: Real>(
    ranges: &[T],
    anchors: &AnchorSet<T>,
    guess: Vector3<T>,
) -> Result<Vector3<T>> {
    multilaterate_with(ranges, anchors, guess, MultilaterationOptions::default())
}

pub fn multilaterate_with<T: Real>(
    ranges: &[T],
    anchors: &AnchorSet<T>,
    guess: Vector3<T>,
    opts: MultilaterationOptions<T>,
) -> Result<Vector3<T>> {
    if ranges.len() != anchors.len() {
        return Err(Error::Dimension {
            context: "multilaterate",
            expected: format!("{} ranges", anchors.len()),
            got: format!("{}", ranges.len()),
        });
    }
    if !guess.iter().all(|v| v.is_finite()) {
        return Err(invalid("guess", "must be finite"));
    }
    let mut p = guess;
    let mut last_step = T::zero();
    for _ in 0..opts.max_iter {
        let mut jtj = Matrix3::<T>::zeros();
        let mut jtr = Vector3::<T>::zeros();
        for (a, r) in anchors.as_slice().iter().zip(ranges) {
            let diff = p - a;
            let dist = diff.norm();
            if dist <= T::default_epsilon() {
                // residual is not differentiable on top of an anchor
                continue;
            }
            let j = diff / dist;
            jtj += j * j.transpose();
            jtr += j * (dist - *r);
        }
        let chol = jtj
            .cholesky()
            .ok_or_else(|| Error::Geometry("singular normal equations".into()))?;
        let step = -chol.solve(&jtr);
        p += step;
        last_step = step.norm();
        if last_step < opts.step_tol {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        last_step: last_step.to_f64_lossy(),
        last_iterate: [p.x.to_f64_lossy(), p.y.to_f64_lossy(), p.z.to_f64_lossy()],
    })
}

pub fn measure_camera<T: Real, R: Rng + ?Sized>(
    state: &PlantState<T>,
    noise: &NoiseModel<T>,
    rng: &mut R,
) -> Vector3<T> {
    state.position + noise.sample3(rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sensor {
    Uwb,
    Camera,
    Imu,
}

impl Sensor {
    pub const ALL: [Sensor; 3] = [Sensor::Uwb, Sensor::Camera, Sensor::Imu];

    /// First row of this sensor's block in the stacked output vector.
    pub fn offset(self) -> usize {
        match self {
            Sensor::Uwb => 0,
            Sensor::Camera => 3,
            Sensor::Imu => 6,
        }
    }
}

/// Measurements at step `k`. Blocks for unavailable sensors are absent, so
/// downstream code cannot read them by accident.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementFrame<T: Real> {
    k: usize,
    mask: AvailabilityMask,
    uwb: Option<Vector3<T>>,
    cam: Option<Vector3<T>>,
    imu: Option<Vector3<T>>,
}

impl<T: Real> MeasurementFrame<T> {
    pub fn step(&self) -> usize {
        self.k
    }

    pub fn mask(&self) -> AvailabilityMask {
        self.mask
    }

    pub fn block(&self, sensor: Sensor) -> Option<&Vector3<T>> {
        match sensor {
            Sensor::Uwb => self.uwb.as_ref(),
            Sensor::Camera => self.cam.as_ref(),
            Sensor::Imu => self.imu.as_ref(),
        }
    }

    /// The stacked `[uwb cam imu]` vector, only when every block is live.
    pub fn full(&self) -> Option<SVector<T, OUTPUT_DIM>> {
        let mut y = SVector::<T, OUTPUT_DIM>::zeros();
        for s in Sensor::ALL {
            y.fixed_rows_mut::<3>(s.offset()).copy_from(self.block(s)?);
        }
        Some(y)
    }

    /// Indices of live rows of the stacked vector.
    pub fn live_rows(&self) -> Vec<usize> {
        Sensor::ALL
            .iter()
            .filter(|s| self.block(**s).is_some())
            .flat_map(|s| s.offset()..s.offset() + 3)
            .collect()
    }
}

/// Stacks the sensor outputs. A component whose mask bit is clear is
/// discarded; a set bit without a component is an error.
pub fn assemble_frame<T: Real>(
    imu: Option<Vector3<T>>,
    uwb_pos: Option<Vector3<T>>,
    cam_pos: Option<Vector3<T>>,
    mask: AvailabilityMask,
    k: usize,
) -> Result<MeasurementFrame<T>> {
    fn take<T: Real>(bit: bool, v: Option<Vector3<T>>, name: &str) -> Result<Option<Vector3<T>>> {
        match (bit, v) {
            (true, None) => Err(Error::Inconsistent(format!(
                "{name} flagged available but missing"
            ))),
            (true, Some(v)) => Ok(Some(v)),
            (false, _) => Ok(None),
        }
    }
    Ok(MeasurementFrame {
        k,
        mask,
        uwb: take(mask.uwb, uwb_pos, "uwb")?,
        cam: take(mask.cam, cam_pos, "camera")?,
        imu: take(mask.imu, imu, "imu")?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UwbMode {
    /// Per-anchor ranging followed by multilateration.
    Ranged,
    /// Gaussian noise on the true position.
    Direct,
}

/// Noise and geometry for the three sensors.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorConfig<T: Real> {
    pub imu: NoiseModel<T>,
    pub uwb_range: NoiseModel<T>,
    pub uwb_direct: NoiseModel<T>,
    pub uwb_mode: UwbMode,
    pub camera: NoiseModel<T>,
    pub anchors: AnchorSet<T>,
}

impl<T: Real> Default for SensorConfig<T> {
    fn default() -> Self {
        Self {
            imu: NoiseModel::isotropic(3, T::lit(0.01)).unwrap(),
            uwb_range: NoiseModel::isotropic(1, T::lit(0.05)).unwrap(),
            uwb_direct: NoiseModel::isotropic(3, T::lit(0.03)).unwrap(),
            uwb_mode: UwbMode::Ranged,
            camera: NoiseModel::contaminated(
                DMatrix::identity(3, 3) * T::lit(0.02 * 0.02),
                T::lit(0.05),
                T::lit(100.0),
            )
            .unwrap(),
            anchors: AnchorSet::default_box(),
        }
    }
}

/// The three sensors, each owning an independent random stream.
#[derive(Debug, Clone)]
pub struct SensorRig<T: Real> {
    config: SensorConfig<T>,
    imu_rng: ChaCha8Rng,
    uwb_rng: ChaCha8Rng,
    cam_rng: ChaCha8Rng,
    last_fix: Vector3<T>,
    pub multilateration_failures: usize,
}

impl<T: Real> SensorRig<T> {
    pub fn new(
        config: SensorConfig<T>,
        imu_rng: ChaCha8Rng,
        uwb_rng: ChaCha8Rng,
        cam_rng: ChaCha8Rng,
    ) -> Self {
        let last_fix = config.anchors.centroid();
        Self {
            config,
            imu_rng,
            uwb_rng,
            cam_rng,
            last_fix,
            multilateration_failures: 0,
        }
    }

    pub fn config(&self) -> &SensorConfig<T> {
        &self.config
    }

    /// Samples every sensor (so the random streams advance identically
    /// regardless of availability) and assembles the frame. A multilateration
    /// failure drops the UWB block for this step.
    pub fn measure(
        &mut self,
        state: &PlantState<T>,
        mut mask: AvailabilityMask,
        k: usize,
    ) -> MeasurementFrame<T> {
        let imu = measure_imu(state, &self.config.imu, &mut self.imu_rng);
        let uwb = match self.config.uwb_mode {
            UwbMode::Direct => {
                Some(state.position + self.config.uwb_direct.sample3(&mut self.uwb_rng))
            }
            UwbMode::Ranged => {
                let ranges = range_uwb(
                    state,
                    &self.config.anchors,
                    &self.config.uwb_range,
                    &mut self.uwb_rng,
                );
                if mask.uwb {
                    match multilaterate(&ranges, &self.config.anchors, self.last_fix) {
                        Ok(p) => {
                            self.last_fix = p;
                            Some(p)
                        }
                        Err(_) => {
                            self.multilateration_failures += 1;
                            None
                        }
                    }
                } else {
                    None
                }
            }
        };
        let cam = measure_camera(state, &self.config.camera, &mut self.cam_rng);
        if uwb.is_none() {
            mask.uwb = false;
        }
        assemble_frame(Some(imu), uwb, Some(cam), mask, k)
            .expect("every available block was produced")
    }
}
