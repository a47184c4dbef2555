use hopfield_core::linear_response::{band_frequencies, hopfield_diagonalize, permittivity, Band};
use hopfield_core::perturbative::matter_weight;
use hopfield_core::quadrature::{integrate_adaptive, AdaptiveOptions};
use hopfield_core::MediumParams;
use proptest::prelude::*;

/// Re ε(ω) − 1 = (2/π) P∫₀^∞ dω' ω' Im ε(ω') / (ω'² − ω²), with the pole
/// subtracted analytically and the tail beyond L dropped (it falls off as L⁻³).
fn kramers_kronig(p: &MediumParams, g0: f64, w: f64) -> f64 {
    let im = |x: f64| permittivity(p, g0, x).unwrap().value.im;
    let l = 4000.0;
    let at_pole = w * im(w);
    let f = |x: f64| {
        if (x - w).abs() < 1e-9 {
            // Limit of the subtracted integrand at the pole.
            let h = 1e-5;
            return ((x + h) * im(x + h) - (x - h) * im(x - h)) / (2.0 * h) / (2.0 * w);
        }
        (x * im(x) - at_pole) / (x * x - w * w)
    };
    let opts = AdaptiveOptions { abs_tol: 1e-13, rel_tol: 1e-11, max_intervals: 20000 };
    let breaks = [0.5 * p.omega, p.omega, w, 2.0 * p.omega, 10.0 * p.omega, 100.0];
    let mut br: Vec<f64> = breaks.iter().copied().filter(|&b| b < l).collect();
    br.sort_by(f64::total_cmp);
    br.dedup();
    let regular = integrate_adaptive(f, 0.0, l, &br, opts).value;
    let singular = at_pole * ((l - w) / (l + w)).ln() / (2.0 * w);
    2.0 / std::f64::consts::PI * (regular + singular)
}

#[test]
fn kramers_kronig_reconstructs_real_part() {
    let p = MediumParams::new(1.0, 1.5).unwrap();
    let g0 = 0.5;
    for w in [0.3, 0.6, 0.8, 1.3, 1.8, 2.5] {
        let want = permittivity(&p, g0, w).unwrap().value.re - 1.0;
        let got = kramers_kronig(&p, g0, w);
        assert!((got - want).abs() < 0.01 * want.abs(), "omega {w}: {got} vs {want}");
    }
}

#[test]
fn band_limits_on_a_grid() {
    let p = MediumParams::new(1.0, 5.0 / 6.0).unwrap();
    let (wm, wp) = band_frequencies(&p, 0.0);
    assert_eq!(wm, 0.0);
    assert!((wp - 61f64.sqrt() / 6.0).abs() < 1e-12);
    assert!((wp - p.omega - (p.n() - 1.0) * p.omega).abs() < 1e-15);
    let (wm, wp) = band_frequencies(&p, 50.0);
    assert!((wm - 1.0).abs() < 1e-3 && (wp - 50.0).abs() < 1e-3 * 50.0);
    for i in 0..100 {
        let k = 0.05 * (i + 1) as f64;
        let b = hopfield_diagonalize(&p, k).unwrap();
        let (wm, wp) = band_frequencies(&p, k);
        assert!(wm < p.omega && wm < k && wp > p.omega.max(k));
        assert!((b.omega_minus - wm).abs() < 1e-12 && (b.omega_plus - wp).abs() < 1e-12);
    }
}

proptest! {
    /// Canonical commutator of Ψ: Σ_b 2ω_b |u_b^Ψ|² = 1.
    #[test]
    fn matter_weights_complete(omega in 0.2..3.0f64, g in 0.01..3.0f64, k in 0.01..30.0f64) {
        let p = MediumParams::new(omega, g).unwrap();
        let (wm, wp) = band_frequencies(&p, k);
        let s = 2.0 * wm * matter_weight(&p, k, Band::Minus).unwrap() + 2.0 * wp * matter_weight(&p, k, Band::Plus).unwrap();
        prop_assert!((s - 1.0).abs() < 1e-10, "sum {}", s);
    }

    /// Quartic root property: (Ω² − ω²)(k² − ω²) = g²ω² at both band frequencies.
    #[test]
    fn band_frequencies_solve_the_quartic(omega in 0.2..3.0f64, g in 0.0..3.0f64, k in 0.01..30.0f64) {
        let p = MediumParams::new(omega, g).unwrap();
        let (wm, wp) = band_frequencies(&p, k);
        for w in [wm, wp] {
            let lhs = (omega * omega - w * w) * (k * k - w * w);
            let scale = (omega * omega + k * k + g * g).powi(2);
            prop_assert!((lhs - g * g * w * w).abs() < 1e-11 * scale);
        }
    }
}
