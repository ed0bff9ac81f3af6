use nalgebra::DMatrix;
use proptest::prelude::*;
use quadfuse::control::{
    augment, inf_norm, lq_gain, riccati_map, solve_dare, spectral_radius, DareOptions, LqWeights,
    PositionSource,
};
use quadfuse::model::{build_continuous_model, discretize, QuadrotorParams};

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Positive root of `b²s² + (r(1 − a²) − qb²)s − qr = 0`.
fn scalar_dare_root(a: f64, b: f64, q: f64, r: f64) -> f64 {
    let (qa, qb, qc) = (b * b, r * (1.0 - a * a) - q * b * b, -q * r);
    (-qb + (qb * qb - 4.0 * qa * qc).sqrt()) / (2.0 * qa)
}

#[test]
fn golden_ratio_case() {
    let w = LqWeights::new(scalar(1.0), scalar(1.0)).unwrap();
    let s = solve_dare(&scalar(1.0), &scalar(1.0), &w, DareOptions::default()).unwrap();
    let golden = (1.0 + 5f64.sqrt()) / 2.0;
    assert!((s[(0, 0)] - golden).abs() < 1e-8, "{}", s[(0, 0)]);

    let gain = lq_gain(&s, &scalar(1.0), &scalar(1.0), &scalar(1.0), 1).unwrap();
    assert!((gain.l[(0, 0)] - golden / (1.0 + golden)).abs() < 1e-8);
}

#[test]
fn quadrotor_servo_design_converges_and_stabilizes() {
    let params = QuadrotorParams::<f64>::default();
    let model = discretize(&build_continuous_model(&params).unwrap(), params.dt).unwrap();
    let weights = LqWeights::default();
    for source in [PositionSource::Uwb, PositionSource::Camera] {
        let aug = augment(&model, &source.matrix()).unwrap();
        assert_eq!(aug.state_dim(), 15);
        let s = solve_dare(&aug.phi, &aug.gamma, &weights, DareOptions::default()).unwrap();
        let residual = inf_norm(
            &(riccati_map(&s, &aug.phi, &aug.gamma, weights.q(), weights.r()).unwrap() - &s),
        );
        assert!(residual < 1e-8, "residual {residual:e}");
        assert!((&s - s.transpose()).amax() == 0.0);
        assert!(s.symmetric_eigenvalues().min() >= -1e-9);

        let gain = lq_gain(&s, &aug.phi, &aug.gamma, weights.r(), aug.plant_dim()).unwrap();
        let rho = spectral_radius(&(&aug.phi - &aug.gamma * &gain.l));
        assert!(rho < 1.0, "ρ = {rho}");
        assert_eq!(gain.closed_loop_radius, rho);
    }
}

proptest! {
    #[test]
    fn scalar_dare_matches_closed_form(
        a in 0.2f64..1.5,
        b in 0.2f64..2.0,
        q in 0.1f64..10.0,
        r in 0.1f64..10.0,
    ) {
        let w = LqWeights::new(scalar(q), scalar(r)).unwrap();
        let s = solve_dare(&scalar(a), &scalar(b), &w, DareOptions::default()).unwrap();
        let expected = scalar_dare_root(a, b, q, r);
        prop_assert!((s[(0, 0)] - expected).abs() < 1e-7 * expected.max(1.0));
    }
}
