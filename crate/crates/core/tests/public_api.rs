use displab::propagators::{evolve_with, linear_flow, FlowConfig, NonlinearityKind, NonlinearitySpec, Scheme, Sign};
use displab::random::{sample_torus_data, TorusEnsembleSpec};
use displab::resonance::{count_s, ResonanceQuery, ShellRange};
use displab::spectral::{forward_transform, inverse_transform, FrequencyBox, SpectralField};
use displab::{Complex64, Error};

#[test]
fn sampled_data_round_trip_through_the_grid() {
    let spec = TorusEnsembleSpec::new(2, 0.5, 12, 5).unwrap();
    let f = sample_torus_data(&spec, 3).unwrap();
    assert_eq!(f, sample_torus_data(&spec, 3).unwrap());
    assert_ne!(f, sample_torus_data(&spec, 4).unwrap());
    let back = forward_transform(&inverse_transform(&f, 64).unwrap()).unwrap();
    let err = back.sub(&f).unwrap().l2_norm_sq().sqrt() / f.l2_norm_sq().sqrt();
    assert!(err < 1e-13, "{err}");
}

#[test]
fn free_flow_is_a_unitary_group() {
    let spec = TorusEnsembleSpec::new(1, 0.2, 40, 1).unwrap();
    let f = sample_torus_data(&spec, 0).unwrap();
    let g = linear_flow(&linear_flow(&f, 0.3), 0.4);
    assert!(g.sub(&linear_flow(&f, 0.7)).unwrap().l2_norm_sq() < 1e-24);
    assert!((g.l2_norm_sq() - f.l2_norm_sq()).abs() < 1e-12 * f.l2_norm_sq());
}

#[test]
fn truncated_flow_keeps_mass_and_rejects_large_steps() {
    let spec = TorusEnsembleSpec::new(1, 0.5, 32, 9).unwrap();
    let f = sample_torus_data(&spec, 2).unwrap();
    let nl = NonlinearitySpec::new(NonlinearityKind::WickCubic, Sign::Focusing);
    assert!(matches!(
        FlowConfig::new(32, nl, 1e-3, Scheme::StrangSplitting, 1),
        Err(Error::Precondition(_))
    ));
    let m0 = f.project_ball(32).l2_norm_sq();
    // splitting loses a little mass to the ball projection after each rotation
    for (scheme, tol) in [(Scheme::IntegratingFactorRk4, 1e-7), (Scheme::StrangSplitting, 1e-4)] {
        let config = FlowConfig::new(32, nl, FlowConfig::max_dt(32), scheme, 1).unwrap();
        let stepper = evolve_with(&f, config, 0.05, |_, _| {}).unwrap();
        let drift = (stepper.state().l2_norm_sq() - m0).abs() / m0;
        assert!(drift < tol, "{scheme:?}: {drift:e}");
    }
}

#[test]
fn plane_wave_is_a_single_mode() {
    let fb = FrequencyBox::new(1, 8).unwrap();
    let f = SpectralField::single_mode(fb, [3, 0], Complex64::new(1.5, 0.0)).unwrap();
    let g = inverse_transform(&f, 34).unwrap();
    assert!(g.samples().iter().all(|z| (z.norm() - 1.5).abs() < 1e-13));
}

#[test]
fn smallest_resonance_count() {
    let q = ResonanceQuery::cubic(1, 2, [ShellRange::Ball(1); 3]);
    assert_eq!(count_s(&q).unwrap().count, 4);
}
