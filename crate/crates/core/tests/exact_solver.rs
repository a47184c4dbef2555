use hopfield_core::exact::{
    extract_bogoliubov, first_order_deviation, integrate_mode, occupation_from, unitarity_defect, DriveKind, DriveMode, ExactOptions, ModeState,
};
use hopfield_core::linear_response::Band;
use hopfield_core::{MediumParams, SwitchingProfile};
use num_complex::Complex64 as C;

fn medium() -> MediumParams {
    MediumParams::new(1.0, 1.5).unwrap()
}

#[test]
fn strong_pulse_creates_fewer_particles_than_first_order() {
    let p = medium();
    // Γ0τ = (G0²/4)τ = 1.25.
    let g = SwitchingProfile::Lorentzian { g0: 1.0, tau: 5.0 };
    let b = extract_bogoliubov(&p, &g, 0.5, &ExactOptions::default()).unwrap();
    let dev = first_order_deviation(&p, &g, &b, Band::Minus).unwrap();
    let (n_minus, _) = occupation_from(&b);
    let relative = n_minus / dev.n_first_order - 1.0;
    assert!(relative < -0.01, "relative deviation {relative}");
    assert!(unitarity_defect(&b) < 1e-3);
}

#[test]
fn truncating_the_kappa_grid_grows_the_defect() {
    let p = medium();
    let g = SwitchingProfile::Lorentzian { g0: 0.3, tau: 10.0 };
    let b = extract_bogoliubov(&p, &g, 0.5, &ExactOptions::default()).unwrap();
    let full = b.kappa_cutoff;
    let defects: Vec<f64> = [1.0, 0.8, 0.6, 0.4, 0.2, 0.1].iter().map(|f| unitarity_defect(&b.truncated(f * full))).collect();
    let floor = defects[0];
    assert!(floor < 1e-3);
    // Channels near the full cutoff carry almost nothing, so the first cuts
    // only move the defect within the converged run's noise floor.
    for w in defects.windows(2) {
        assert!(w[1] > w[0] - 2.0 * floor, "{defects:?}");
    }
    assert!(defects[defects.len() - 1] > 0.1);
}

/// Under a constant small G and a monochromatic drive, A settles to
/// A/∂tΦ0 = iωgG / ((Ω² − ω² − iωG²/2)(k² − ω²ε(ω))).
#[test]
fn constant_coupling_reproduces_transfer_function() {
    let p = medium();
    let (g0, k, w) = (0.5, 0.5, 0.7);
    let g = SwitchingProfile::ConstantOnWindow { g0, t_on: -1e7, t_off: 1e7, ramp: 0.0 };
    let drive = DriveMode { kappa: w, kind: DriveKind::PositiveFrequency };
    let zero = C::new(0.0, 0.0);
    let s0 = ModeState { k, t: 0.0, a: zero, a_dot: zero, psi: zero, psi_dot: zero };
    let times = [1500.0, 1510.3, 1523.7];
    let traj = integrate_mode(&p, &g, &s0, Some(&drive), &times, 1e-10).unwrap();
    let d = C::new(p.omega * p.omega - w * w, -0.5 * w * g0 * g0);
    let eps = 1.0 + p.g * p.g / d;
    let transfer = C::new(0.0, w * p.g * g0) / (d * (k * k - w * w * eps));
    for s in &traj {
        let got = s.a / drive.phi_dot(s.t);
        assert!((got - transfer).norm() < 0.01 * transfer.norm(), "t {}: {got} vs {transfer}", s.t);
    }
}
