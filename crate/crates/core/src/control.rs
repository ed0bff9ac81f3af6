//! LQ-servo design: integral-augmented model, infinite-horizon DARE and
//! the state-feedback law with its gain cache.

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use nalgebra::{Complex, DMatrix, DVector, Vector3};

use crate::error::{check_shape, invalid, Error, Result};
use crate::model::{ControlInput, DiscreteModel};
use crate::scalar::Real;
use crate::sensors::AvailabilityMask;

/// Which position sensor the integral action regulates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PositionSource {
    Uwb,
    Camera,
}

impl PositionSource {
    /// `E ∈ R^{3×9}`: identity on the chosen position block.
    pub fn matrix<T: Real>(self) -> DMatrix<T> {
        let offset = match self {
            PositionSource::Uwb => 0,
            PositionSource::Camera => 3,
        };
        let mut e = DMatrix::zeros(3, 9);
        for i in 0..3 {
            e[(i, offset + i)] = T::one();
        }
        e
    }
}

/// UWB when present, otherwise camera when present, otherwise keep the
/// previous selection.
pub fn build_selection_matrix(mask: AvailabilityMask, previous: PositionSource) -> PositionSource {
    if mask.uwb {
        PositionSource::Uwb
    } else if mask.cam {
        PositionSource::Camera
    } else {
        previous
    }
}

/// State-space model extended with the integral of the tracking error,
/// `x̄ = [x; i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedModel<T: Real> {
    pub phi: DMatrix<T>,
    pub gamma: DMatrix<T>,
    /// `Ē = [[I, 0], [0, -E]]`, maps `[w; v]` into the augmented state.
    pub noise_map: DMatrix<T>,
    /// `Ī = [0; I]`
    pub reference_map: DMatrix<T>,
    /// `C̄ = [C 0]`
    pub c: DMatrix<T>,
    pub selection: DMatrix<T>,
}

impl<T: Real> AugmentedModel<T> {
    pub fn state_dim(&self) -> usize {
        self.phi.nrows()
    }

    pub fn plant_dim(&self) -> usize {
        self.phi.nrows() - self.selection.nrows()
    }
}

pub fn augment<T: Real>(model: &DiscreteModel<T>, e: &DMatrix<T>) -> Result<AugmentedModel<T>> {
    let n = model.phi.nrows();
    let m = model.gamma.ncols();
    let p = model.c.nrows();
    let q = e.nrows();
    check_shape("augment: Φ", model.phi.nrows(), model.phi.ncols(), n, n)?;
    check_shape("augment: Γ", model.gamma.nrows(), m, n, m)?;
    check_shape("augment: C", p, model.c.ncols(), p, n)?;
    check_shape("augment: E", q, e.ncols(), q, p)?;

    let na = n + q;
    let mut phi = DMatrix::zeros(na, na);
    phi.view_mut((0, 0), (n, n)).copy_from(&model.phi);
    phi.view_mut((n, 0), (q, n)).copy_from(&(-(e * &model.c)));
    phi.view_mut((n, n), (q, q)).fill_with_identity();

    let mut gamma = DMatrix::zeros(na, m);
    gamma.view_mut((0, 0), (n, m)).copy_from(&model.gamma);

    let mut noise_map = DMatrix::zeros(na, n + p);
    noise_map.view_mut((0, 0), (n, n)).fill_with_identity();
    noise_map.view_mut((n, n), (q, p)).copy_from(&(-e));

    let mut reference_map = DMatrix::zeros(na, q);
    reference_map.view_mut((n, 0), (q, q)).fill_with_identity();

    let mut c = DMatrix::zeros(p, na);
    c.view_mut((0, 0), (p, n)).copy_from(&model.c);

    Ok(AugmentedModel {
        phi,
        gamma,
        noise_map,
        reference_map,
        c,
        selection: e.clone(),
    })
}

/// Stage weights of the quadratic cost.
#[derive(Debug, Clone, PartialEq)]
pub struct LqWeights<T: Real> {
    q: DMatrix<T>,
    r: DMatrix<T>,
}

impl<T: Real> LqWeights<T> {
    pub fn new(q: DMatrix<T>, r: DMatrix<T>) -> Result<Self> {
        if !q.is_square() || !r.is_square() {
            return Err(invalid("weights", "Q and R must be square"));
        }
        let tol = T::lit(1e-12);
        if (&q - q.transpose()).amax() > tol * q.amax().max(T::one()) {
            return Err(invalid("q", "must be symmetric"));
        }
        if (&r - r.transpose()).amax() > tol * r.amax().max(T::one()) {
            return Err(invalid("r", "must be symmetric"));
        }
        if q.clone()
            .symmetric_eigen()
            .eigenvalues
            .iter()
            .any(|l| *l < -tol)
        {
            return Err(invalid("q", "must be positive semi-definite"));
        }
        if r.clone().cholesky().is_none() {
            return Err(invalid("r", "must be positive definite"));
        }
        Ok(Self { q, r })
    }

    pub fn diagonal(q: &[T], r: &[T]) -> Result<Self> {
        Self::new(
            DMatrix::from_diagonal(&DVector::from_column_slice(q)),
            DMatrix::from_diagonal(&DVector::from_column_slice(r)),
        )
    }

    pub fn q(&self) -> &DMatrix<T> {
        &self.q
    }

    pub fn r(&self) -> &DMatrix<T> {
        &self.r
    }
}

pub fn default_q_diagonal() -> [f64; 15] {
    let mut q = [0.0; 15];
    q[0..3].fill(10.0);
    q[3..6].fill(1.0);
    q[6..12].fill(0.1);
    q[12..15].fill(1.0);
    q
}

pub fn default_r_diagonal() -> [f64; 4] {
    [0.1, 1.0, 1.0, 1.0]
}

impl<T: Real> Default for LqWeights<T> {
    fn default() -> Self {
        let q: Vec<T> = default_q_diagonal().iter().map(|v| T::lit(*v)).collect();
        let r: Vec<T> = default_r_diagonal().iter().map(|v| T::lit(*v)).collect();
        Self::diagonal(&q, &r).expect("default weights are valid")
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DareOptions<T> {
    pub tol: T,
    pub max_iter: usize,
}

impl<T: Real> Default for DareOptions<T> {
    fn default() -> Self {
        Self {
            tol: T::lit(1e-9),
            max_iter: 100_000,
        }
    }
}

/// Induced ∞-norm (largest absolute row sum).
pub fn inf_norm<T: Real>(m: &DMatrix<T>) -> T {
    m.row_iter()
        .map(|r| r.iter().fold(T::zero(), |acc, v| acc + v.abs()))
        .fold(T::zero(), |a, b| a.max(b))
}

fn symmetrize<T: Real>(m: &mut DMatrix<T>) {
    let t = m.transpose();
    *m += t;
    *m *= T::lit(0.5);
}

/// Right-hand side of the Riccati map
/// `Q + ΦᵀSΦ − ΦᵀSΓ(ΓᵀSΓ+R)⁻¹ΓᵀSΦ`.
pub fn riccati_map<T: Real>(
    s: &DMatrix<T>,
    phi: &DMatrix<T>,
    gamma: &DMatrix<T>,
    q: &DMatrix<T>,
    r: &DMatrix<T>,
) -> Result<DMatrix<T>> {
    let s_phi = s * phi;
    let gts = gamma.transpose() * s;
    let inner = &gts * gamma + r;
    let chol = inner
        .cholesky()
        .ok_or_else(|| Error::Numerical("ΓᵀSΓ + R is not positive definite".into()))?;
    let gts_phi = &gts * phi;
    let correction = gts_phi.transpose() * chol.solve(&gts_phi);
    let mut next = q + phi.transpose() * s_phi - correction;
    symmetrize(&mut next);
    Ok(next)
}

/// Rank test `σ_min > n·ε·σ_max` on a complex matrix.
fn full_column_rank<T: Real>(m: &DMatrix<Complex<T>>) -> bool {
    let sv = m.singular_values();
    let smax = sv.max();
    let smin = sv.min();
    let dim = T::from_usize(m.nrows().max(m.ncols())).unwrap();
    smax > T::zero() && smin > dim * T::default_epsilon() * smax
}

fn to_complex<T: Real>(m: &DMatrix<T>) -> DMatrix<Complex<T>> {
    m.map(|v| Complex::new(v, T::zero()))
}

fn modulus<T: Real>(l: &Complex<T>) -> T {
    (l.re * l.re + l.im * l.im).sqrt()
}

fn non_decaying_eigenvalues<T: Real>(phi: &DMatrix<T>) -> Vec<Complex<T>> {
    let band = T::one() - T::lit(1e-3);
    phi.complex_eigenvalues()
        .iter()
        .copied()
        .filter(|l| modulus(l) >= band)
        .collect()
}

/// Hautus test on the non-decaying modes: `[λI − Φ, Γ]` has full row rank.
pub fn is_stabilizable<T: Real>(phi: &DMatrix<T>, gamma: &DMatrix<T>) -> bool {
    let n = phi.nrows();
    let phi_c = to_complex(phi);
    let gamma_c = to_complex(gamma);
    non_decaying_eigenvalues(phi).into_iter().all(|lambda| {
        let mut m = DMatrix::zeros(n, n + gamma.ncols());
        m.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda - &phi_c));
        m.view_mut((0, n), (n, gamma.ncols())).copy_from(&gamma_c);
        full_column_rank(&m.adjoint())
    })
}

/// Hautus test on the non-decaying modes: `[λI − Φ; Q^{1/2}]` has full
/// column rank.
pub fn is_detectable<T: Real>(phi: &DMatrix<T>, q: &DMatrix<T>) -> bool {
    let n = phi.nrows();
    let eig = q.clone().symmetric_eigen();
    let root = &eig.eigenvectors
        * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(T::zero()).sqrt()))
        * eig.eigenvectors.transpose();
    let phi_c = to_complex(phi);
    let root_c = to_complex(&root);
    non_decaying_eigenvalues(phi).into_iter().all(|lambda| {
        let mut m = DMatrix::zeros(2 * n, n);
        m.view_mut((0, 0), (n, n))
            .copy_from(&(DMatrix::identity(n, n) * lambda - &phi_c));
        m.view_mut((n, 0), (n, n)).copy_from(&root_c);
        full_column_rank(&m)
    })
}

/// Fixed-point iteration of the Riccati recursion from `S = Q` until
/// successive iterates differ by less than `tol` in the ∞-norm.
pub fn solve_dare<T: Real>(
    phi: &DMatrix<T>,
    gamma: &DMatrix<T>,
    weights: &LqWeights<T>,
    opts: DareOptions<T>,
) -> Result<DMatrix<T>> {
    let n = phi.nrows();
    check_shape("solve_dare: Φ", n, phi.ncols(), n, n)?;
    check_shape(
        "solve_dare: Γ",
        gamma.nrows(),
        gamma.ncols(),
        n,
        weights.r.nrows(),
    )?;
    check_shape("solve_dare: Q", weights.q.nrows(), weights.q.ncols(), n, n)?;
    if !(opts.tol > T::zero()) {
        return Err(invalid("tol", "must be positive"));
    }
    if !is_stabilizable(phi, gamma) {
        return Err(Error::InvalidModel("(Φ, Γ) is not stabilizable".into()));
    }
    if !is_detectable(phi, &weights.q) {
        return Err(Error::InvalidModel("(Φ, Q^{1/2}) is not detectable".into()));
    }

    let mut s = weights.q.clone();
    let mut residual = T::zero();
    for _ in 0..opts.max_iter {
        let next = riccati_map(&s, phi, gamma, &weights.q, &weights.r)?;
        residual = inf_norm(&(&next - &s));
        s = next;
        if !residual.is_finite() {
            break;
        }
        if residual < opts.tol {
            return Ok(s);
        }
    }
    Err(Error::DareNonConvergence {
        iterations: opts.max_iter,
        residual: residual.to_f64_lossy(),
    })
}

/// Largest eigenvalue modulus.
pub fn spectral_radius<T: Real>(m: &DMatrix<T>) -> T {
    m.complex_eigenvalues()
        .iter()
        .map(modulus)
        .fold(T::zero(), |a, b| a.max(b))
}

/// Infinite-horizon feedback `L∞ = [L^x̂ L^i]` with the Riccati solution it
/// was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct LqGain<T: Real> {
    pub l: DMatrix<T>,
    pub s: DMatrix<T>,
    /// Columns of `l` that act on the plant state; the rest act on the
    /// integral state.
    pub plant_dim: usize,
    pub closed_loop_radius: T,
}

impl<T: Real> LqGain<T> {
    pub fn state_part(&self) -> DMatrix<T> {
        self.l.columns(0, self.plant_dim).into_owned()
    }

    pub fn integral_part(&self) -> DMatrix<T> {
        let n = self.l.ncols();
        self.l
            .columns(self.plant_dim, n - self.plant_dim)
            .into_owned()
    }
}

pub fn lq_gain<T: Real>(
    s: &DMatrix<T>,
    phi: &DMatrix<T>,
    gamma: &DMatrix<T>,
    r: &DMatrix<T>,
    plant_dim: usize,
) -> Result<LqGain<T>> {
    let gts = gamma.transpose() * s;
    let inner = &gts * gamma + r;
    let chol = inner
        .cholesky()
        .ok_or_else(|| Error::Numerical("ΓᵀSΓ + R is not positive definite".into()))?;
    let l = chol.solve(&(gts * phi));
    let radius = spectral_radius(&(phi - gamma * &l));
    if !(radius < T::one()) {
        return Err(Error::InvalidModel(format!(
            "closed loop is not stable (spectral radius {radius})"
        )));
    }
    Ok(LqGain {
        l,
        s: s.clone(),
        plant_dim,
        closed_loop_radius: radius,
    })
}

/// `i + r − E·y`
pub fn integral_update<T: Real>(
    i: &Vector3<T>,
    r: &Vector3<T>,
    y: &DVector<T>,
    e: &DMatrix<T>,
) -> Vector3<T> {
    let ey = e * y;
    i + r - Vector3::new(ey[0], ey[1], ey[2])
}

/// `u = hover − L^x̂·x̂ − L^i·i`, thrust clamped at zero. `x̂` is the
/// a-priori plant-state estimate expressed relative to the set point.
pub fn control_law<T: Real>(
    gain: &LqGain<T>,
    x_hat: &DVector<T>,
    i: &Vector3<T>,
    hover: &ControlInput<T>,
) -> ControlInput<T> {
    let i = DVector::from_column_slice(i.as_slice());
    let du = -(gain.state_part() * x_hat) - gain.integral_part() * i;
    let mut u = ControlInput::new(
        hover.thrust + du[0],
        Vector3::new(
            hover.torque.x + du[1],
            hover.torque.y + du[2],
            hover.torque.z + du[3],
        ),
    );
    u.thrust = u.thrust.max(T::zero());
    u
}

type GainEntry<T> = Arc<(AugmentedModel<T>, LqGain<T>)>;

/// Gains keyed on the output selection. Shared across episodes; writes take
/// the lock exclusively.
#[derive(Debug)]
pub struct GainCache<T: Real> {
    model: DiscreteModel<T>,
    weights: LqWeights<T>,
    opts: DareOptions<T>,
    entries: RwLock<HashMap<PositionSource, GainEntry<T>>>,
}

impl<T: Real> GainCache<T> {
    pub fn new(model: DiscreteModel<T>, weights: LqWeights<T>, opts: DareOptions<T>) -> Self {
        Self {
            model,
            weights,
            opts,
            entries: RwLock::new(HashMap::new()),
        }
    }

    pub fn model(&self) -> &DiscreteModel<T> {
        &self.model
    }

    pub fn get(&self, source: PositionSource) -> Result<Arc<(AugmentedModel<T>, LqGain<T>)>> {
        if let Some(hit) = self
            .entries
            .read()
            .expect("gain cache poisoned")
            .get(&source)
        {
            return Ok(hit.clone());
        }
        let aug = augment(&self.model, &source.matrix())?;
        let s = solve_dare(&aug.phi, &aug.gamma, &self.weights, self.opts)?;
        let gain = lq_gain(&s, &aug.phi, &aug.gamma, self.weights.r(), aug.plant_dim())?;
        let entry = Arc::new((aug, gain));
        self.entries
            .write()
            .expect("gain cache poisoned")
            .entry(source)
            .or_insert(entry.clone());
        Ok(entry)
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("gain cache poisoned").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}
