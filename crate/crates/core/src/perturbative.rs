//! First-order particle creation: Bogoliubov coefficients between polaritons
//! and environment quanta, created-particle spectra and integrated yields.
//!
//! With χ_b = i·conj(u^Ψ_b) the first-order coefficients are
//! α_b(κ) = iχ_b sqrt(|κ|/2) G̃(ω_b − |κ|) and β_b(κ) = −iχ_b sqrt(|κ|/2) G̃(ω_b + |κ|),
//! and |χ_b|² = (ρ ∓ σ)/(4ρω_b).

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_response::{band_frequencies, hopfield_diagonalize, Band};
use crate::model::{DeltaNPulse, MediumParams, SwitchingProfile};
use crate::quadrature::{integrate_adaptive, AdaptiveOptions};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderCoeffs {
    pub k: f64,
    pub kappa: f64,
    pub band: Band,
    pub alpha: C,
    pub beta: C,
}

/// Matter content of a band, (ρ ∓ σ)/(4ρω) = |u^Ψ|², upper sign for the + band.
pub fn matter_weight(p: &MediumParams, k: f64, band: Band) -> Result<f64> {
    let (wm, wp) = band_frequencies(p, k);
    let omega = match band {
        Band::Minus => wm,
        Band::Plus => wp,
    };
    if omega == 0.0 {
        return Err(Error::ZeroFrequencyMode { k, band: band.label() });
    }
    if p.g == 0.0 {
        let matter = match band {
            Band::Minus => k.abs() > p.omega,
            Band::Plus => k.abs() <= p.omega,
        };
        return Ok(if matter { 0.5 / p.omega } else { 0.0 });
    }
    let rho = p.rho(k);
    let sigma = p.sigma(k);
    let num = match band {
        Band::Minus => rho + sigma,
        Band::Plus => rho - sigma,
    };
    // ρ + σ cancels for small k; use ρ² − σ² = 4k²g² there.
    let num = if num < 1e-3 * rho { 4.0 * k * k * p.g * p.g / (2.0 * rho - num) } else { num };
    Ok(num / (4.0 * rho * omega))
}

/// Coupling of band `band` to the environment, χ_b = i·conj(u^Ψ_b).
pub fn env_coupling(p: &MediumParams, k: f64, band: Band) -> Result<C> {
    let basis = hopfield_diagonalize(p, k).map_err(|_| Error::ZeroFrequencyMode { k, band: band.label() })?;
    let m = basis.mode(band);
    if m.omega == 0.0 {
        return Err(Error::ZeroFrequencyMode { k, band: band.label() });
    }
    Ok(C::i() * m.u[2].conj())
}

fn band_omega(p: &MediumParams, k: f64, band: Band) -> Result<f64> {
    let (wm, wp) = band_frequencies(p, k);
    let w = match band {
        Band::Minus => wm,
        Band::Plus => wp,
    };
    if w == 0.0 {
        return Err(Error::ZeroFrequencyMode { k, band: band.label() });
    }
    Ok(w)
}

pub fn first_order_coeffs(
    p: &MediumParams,
    g: &SwitchingProfile,
    k: f64,
    kappa: f64,
    band: Band,
) -> Result<FirstOrderCoeffs> {
    if kappa == 0.0 || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("environment wavenumber must be finite and nonzero, got {kappa}")));
    }
    let omega = band_omega(p, k, band)?;
    let chi = env_coupling(p, k, band)?;
    let amp = (0.5 * kappa.abs()).sqrt();
    let alpha = C::i() * chi * amp * g.fourier(omega - kappa.abs())?.value;
    let beta = -C::i() * chi * amp * g.fourier(omega + kappa.abs())?.value;
    Ok(FirstOrderCoeffs { k, kappa, band, alpha, beta })
}

/// |β_b(κ)|² = (ρ ∓ σ)/(8ρω_b) · |κ| · |G̃(ω_b + |κ|)|², evaluated directly.
pub fn beta_sq_closed(p: &MediumParams, g: &SwitchingProfile, k: f64, kappa: f64, band: Band) -> Result<f64> {
    let omega = band_omega(p, k, band)?;
    let w = matter_weight(p, k, band)?;
    Ok(0.5 * w * kappa.abs() * g.fourier(omega + kappa.abs())?.value.norm_sqr())
}

/// κ-integration settings for spectra.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaQuadrature {
    /// Cutoff Λ; derived from the profile time scale when absent.
    pub cutoff: Option<f64>,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for KappaQuadrature {
    fn default() -> Self {
        Self { cutoff: None, rel_tol: 1e-10, abs_tol: 1e-300 }
    }
}

impl KappaQuadrature {
    fn resolve_cutoff(&self, g: &SwitchingProfile) -> Result<f64> {
        match (self.cutoff, g.time_scale()) {
            (Some(c), _) if c > 0.0 && c.is_finite() => Ok(c),
            (Some(c), _) => Err(Error::InvalidArgument(format!("kappa cutoff must be positive, got {c}"))),
            (None, Some(ts)) => Ok(40.0 / ts),
            (None, None) => Err(Error::InvalidArgument("this profile needs an explicit kappa cutoff".into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumResult {
    pub k: Vec<f64>,
    pub n_minus: Vec<f64>,
    pub n_plus: Vec<f64>,
    pub kappa_cutoff: f64,
    /// Quadrature error estimates per k, (minus, plus).
    pub error_minus: Vec<f64>,
    pub error_plus: Vec<f64>,
    /// Per k: result stable under Λ → 2Λ and a tenfold tighter tolerance to 0.1%.
    pub converged: Vec<bool>,
}

impl SpectrumResult {
    pub fn all_converged(&self) -> bool {
        self.converged.iter().all(|&c| c)
    }
}

/// n_b(k) = ∫_{−Λ}^{Λ} dκ |β_b(κ)|², together with its quadrature error.
fn band_occupation(
    p: &MediumParams,
    g: &SwitchingProfile,
    k: f64,
    band: Band,
    cutoff: f64,
    rel_tol: f64,
    abs_tol: f64,
) -> Result<(f64, f64, bool)> {
    let omega = band_omega(p, k, band)?;
    let w = matter_weight(p, k, band)?;
    if w == 0.0 || g.is_zero() {
        return Ok((0.0, 0.0, true));
    }
    // Fail early on transform errors instead of inside the integrand.
    g.fourier(omega + cutoff)?;
    let f = |kappa: f64| kappa * g.fourier(omega + kappa).map(|a| a.value.norm_sqr()).unwrap_or(f64::NAN);
    let mut breaks: Vec<f64> = Vec::new();
    if let Some(ts) = g.time_scale() {
        let mut x = 1.0 / ts;
        while x < cutoff {
            breaks.push(x);
            x *= 2.0;
        }
    }
    let opts = AdaptiveOptions { abs_tol, rel_tol, max_intervals: 4000 };
    let r = integrate_adaptive(f, 0.0, cutoff, &breaks, opts);
    if !r.value.is_finite() {
        return Err(Error::QuadratureNotConverged { error: r.error, cutoff });
    }
    // Both signs of κ contribute equally.
    Ok((w * r.value, w * r.error, r.converged))
}

pub fn spectrum_first_order(
    p: &MediumParams,
    g: &SwitchingProfile,
    ks: &[f64],
    quad: &KappaQuadrature,
) -> Result<SpectrumResult> {
    let cutoff = quad.resolve_cutoff(g)?;
    let rows: Vec<Result<[f64; 5]>> = ks
        .par_iter()
        .map(|&k| {
            let mut row = [0.0; 5];
            let mut ok = true;
            for (i, band) in Band::BOTH.into_iter().enumerate() {
                let (n, err, conv) = band_occupation(p, g, k, band, cutoff, quad.rel_tol, quad.abs_tol)?;
                let (n2, _, _) = band_occupation(p, g, k, band, 2.0 * cutoff, quad.rel_tol, quad.abs_tol)?;
                let (n3, _, _) = band_occupation(p, g, k, band, cutoff, 0.1 * quad.rel_tol, quad.abs_tol)?;
                let scale = n.abs().max(f64::MIN_POSITIVE);
                ok &= conv && ((n2 - n).abs() <= 1e-3 * scale || n == n2) && (n3 - n).abs() <= 1e-3 * scale.max(n3.abs());
                row[i] = n;
                row[2 + i] = err;
            }
            row[4] = if ok { 1.0 } else { 0.0 };
            Ok(row)
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(SpectrumResult {
        k: ks.to_vec(),
        n_minus: rows.iter().map(|r| r[0]).collect(),
        n_plus: rows.iter().map(|r| r[1]).collect(),
        kappa_cutoff: cutoff,
        error_minus: rows.iter().map(|r| r[2]).collect(),
        error_plus: rows.iter().map(|r| r[3]).collect(),
        converged: rows.iter().map(|r| r[4] == 1.0).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct YieldResult {
    /// Created particles per unit length, N/ℓ.
    pub n_over_l: f64,
    pub k_cutoff: Option<f64>,
    pub linearized: bool,
    pub error_estimate: f64,
    pub converged: bool,
    pub warnings: Vec<String>,
}

impl YieldResult {
    fn exact(value: f64, warnings: Vec<String>) -> Self {
        Self { n_over_l: value, k_cutoff: None, linearized: false, error_estimate: 0.0, converged: true, warnings }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct YieldOptions {
    /// Replace ω−(k) by |k|/n in the frequency factors.
    pub linearize_lower_band: bool,
    pub k_cutoff: Option<f64>,
    pub kappa: KappaQuadrature,
    pub rel_tol: f64,
}

impl Default for YieldOptions {
    fn default() -> Self {
        Self { linearize_lower_band: true, k_cutoff: None, kappa: KappaQuadrature::default(), rel_tol: 1e-8 }
    }
}

/// Lower-band occupation with ω− replaced by |k|/n where the flag is set.
fn lower_band_density(p: &MediumParams, g: &SwitchingProfile, k: f64, linear: bool, cutoff: f64, tol: f64) -> f64 {
    if k == 0.0 {
        return 0.0;
    }
    let omega = if linear { k.abs() / p.n() } else { band_frequencies(p, k).0 };
    let rho = p.rho(k);
    let sigma = p.sigma(k);
    // ρ + σ = 4k²g²/(ρ − σ) without cancellation.
    let weight = 4.0 * k * k * p.g * p.g / (rho - sigma) / (4.0 * rho * omega);
    let f = |kappa: f64| kappa * g.fourier(omega + kappa).map(|a| a.value.norm_sqr()).unwrap_or(f64::NAN);
    let breaks: Vec<f64> = g.time_scale().map(|ts| vec![0.5 / ts, 2.0 / ts, 8.0 / ts]).unwrap_or_default();
    let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: tol, max_intervals: 4000 };
    weight * integrate_adaptive(f, 0.0, cutoff, &breaks, opts).value
}

/// N/ℓ = ∫ dk/(2π) n−(k) by nested adaptive quadrature over k and κ.
pub fn total_yield(p: &MediumParams, g: &SwitchingProfile, opts: &YieldOptions) -> Result<YieldResult> {
    if !opts.linearize_lower_band && opts.k_cutoff.is_none() {
        return Err(Error::DivergentYield);
    }
    let kappa_cut = opts.kappa.resolve_cutoff(g)?;
    let k_cut = match (opts.k_cutoff, g.time_scale()) {
        (Some(c), _) => c,
        (None, Some(ts)) => 40.0 * p.n() / ts,
        (None, None) => return Err(Error::DivergentYield),
    };
    g.fourier(kappa_cut)?;
    let inner_tol = opts.rel_tol * 1e-2;
    let integrand = |k: f64| lower_band_density(p, g, k, opts.linearize_lower_band, kappa_cut, inner_tol);
    let mut breaks = Vec::new();
    if let Some(ts) = g.time_scale() {
        let mut x = 0.25 / ts;
        while x < k_cut {
            breaks.push(x);
            x *= 2.0;
        }
    }
    let r = integrate_adaptive(
        integrand,
        0.0,
        k_cut,
        &breaks,
        AdaptiveOptions { abs_tol: 1e-300, rel_tol: opts.rel_tol, max_intervals: 2000 },
    );
    if !r.value.is_finite() {
        return Err(Error::QuadratureNotConverged { error: r.error, cutoff: k_cut });
    }
    // Both signs of k: 2/(2π).
    Ok(YieldResult {
        n_over_l: r.value / std::f64::consts::PI,
        k_cutoff: Some(k_cut),
        linearized: opts.linearize_lower_band,
        error_estimate: r.error / std::f64::consts::PI,
        converged: r.converged,
        warnings: Vec::new(),
    })
}

/// Closed-form Lorentzian yield (1/32)(g²/sqrt(Ω² + g²))(G0²/(Ω³τ²)).
pub fn lorentzian_yield_closed_form(p: &MediumParams, g0: f64, tau: f64) -> YieldResult {
    let mut warnings = Vec::new();
    if p.omega * tau < 5.0 {
        warnings.push(format!("Omega*tau = {} is below 5; the closed form assumes a slow pulse", p.omega * tau));
    }
    let value = p.g * p.g / (p.omega * p.omega + p.g * p.g).sqrt() * g0 * g0 / (32.0 * p.omega.powi(3) * tau * tau);
    YieldResult::exact(value, warnings)
}

/// The same closed form written as Γ0/(Ωτ)² · (n² − 1)/(8n).
pub fn lorentzian_yield_gamma_form(p: &MediumParams, g0: f64, tau: f64) -> f64 {
    let gamma0 = 0.25 * g0 * g0;
    let n = p.n();
    gamma0 / (p.omega * tau).powi(2) * (n * n - 1.0) / (8.0 * n)
}

/// Yield of a Lorentzian refractive-index pulse, (π/16)(Δn)²/(nτ).
pub fn delta_n_yield_closed_form(pulse: &DeltaNPulse) -> YieldResult {
    let mut warnings = Vec::new();
    if pulse.delta_n.abs() > 0.1 * pulse.n {
        warnings.push(format!("|delta_n| = {} is not small against n = {}", pulse.delta_n.abs(), pulse.n));
    }
    let value = std::f64::consts::PI / 16.0 * pulse.delta_n * pulse.delta_n / (pulse.n * pulse.tau);
    YieldResult::exact(value, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CutoffScan {
    pub k: f64,
    pub band: Band,
    pub lambdas: Vec<f64>,
    pub n: Vec<f64>,
    /// Least-squares slope of log n against log Λ over the top decade.
    pub growth_exponent: f64,
}

/// n_b(k; Λ) for an increasing list of κ cutoffs. Segments between
/// consecutive cutoffs are integrated separately and accumulated.
pub fn cutoff_scan(p: &MediumParams, g: &SwitchingProfile, k: f64, band: Band, lambdas: &[f64]) -> Result<CutoffScan> {
    if lambdas.is_empty() || lambdas.windows(2).any(|w| w[1] <= w[0]) || lambdas[0] <= 0.0 {
        return Err(Error::InvalidArgument("cutoff grid must be positive and strictly increasing".into()));
    }
    let omega = band_omega(p, k, band)?;
    let w = matter_weight(p, k, band)?;
    g.fourier(omega + lambdas[lambdas.len() - 1])?;
    let f = |kappa: f64| kappa * g.fourier(omega + kappa).map(|a| a.value.norm_sqr()).unwrap_or(f64::NAN);
    let opts = AdaptiveOptions { abs_tol: 1e-300, rel_tol: 1e-12, max_intervals: 4000 };
    let mut n = Vec::with_capacity(lambdas.len());
    let mut acc = 0.0;
    let mut lo: f64 = 0.0;
    for &lam in lambdas {
        // Geometric breakpoints keep the per-segment quadrature well conditioned.
        let mut breaks = Vec::new();
        let mut x = (lo * 2.0).max(omega.min(lam) * 0.5);
        while x < lam {
            breaks.push(x);
            x *= 2.0;
        }
        acc += integrate_adaptive(f, lo, lam, &breaks, opts).value;
        n.push(w * acc);
        lo = lam;
    }
    let top = lambdas[lambdas.len() - 1];
    let pts: Vec<(f64, f64)> = lambdas
        .iter()
        .zip(&n)
        .filter(|(&l, &v)| l >= top / 10.0 && v > 0.0)
        .map(|(&l, &v)| (l.ln(), v.ln()))
        .collect();
    let growth_exponent = if pts.len() >= 2 { fit_slope(&pts) } else { f64::NAN };
    Ok(CutoffScan { k, band, lambdas: lambdas.to_vec(), n, growth_exponent })
}

/// Cutoff scan for the sudden switch G(t) = G0 Θ(−t).
pub fn sudden_switch_cutoff_scan(p: &MediumParams, g0: f64, k: f64, band: Band, lambdas: &[f64]) -> Result<CutoffScan> {
    cutoff_scan(p, &SwitchingProfile::Step { g0 }, k, band, lambdas)
}

/// Least-squares slope of y against x.
pub fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn medium() -> MediumParams {
        MediumParams::new(1.0, 1.5).unwrap()
    }

    #[test]
    fn zero_profile_gives_zero_coefficients() {
        let g = SwitchingProfile::Lorentzian { g0: 0.0, tau: 5.0 };
        let c = first_order_coeffs(&medium(), &g, 0.4, 0.3, Band::Minus).unwrap();
        assert_eq!((c.alpha, c.beta), (C::new(0.0, 0.0), C::new(0.0, 0.0)));
        let s = spectrum_first_order(&medium(), &g, &[0.1, 0.5], &KappaQuadrature::default()).unwrap();
        assert!(s.n_minus.iter().chain(&s.n_plus).all(|&v| v == 0.0));
    }

    #[test]
    fn zero_frequency_mode_is_rejected() {
        let g = SwitchingProfile::Lorentzian { g0: 0.1, tau: 5.0 };
        assert!(matches!(
            first_order_coeffs(&medium(), &g, 0.0, 0.3, Band::Minus),
            Err(Error::ZeroFrequencyMode { .. })
        ));
    }

    #[test]
    fn matter_weight_matches_mode_vectors() {
        for &(omega, gc) in &[(1.0, 1.5), (0.7, 0.2), (1.3, 0.0)] {
            let p = MediumParams::new(omega, gc).unwrap();
            for &k in &[0.01, 0.3, 0.9, 1.3, 4.0, 25.0] {
                let basis = hopfield_diagonalize(&p, k).unwrap();
                for band in Band::BOTH {
                    let direct = basis.mode(band).u[2].norm_sqr();
                    let w = matter_weight(&p, k, band).unwrap();
                    assert!((w - direct).abs() < 1e-12 * (1.0 + direct), "{omega} {gc} {k} {band:?}");
                }
            }
        }
    }

    #[test]
    fn decoupled_band_weights() {
        // Small g: the weights tend to the uncoupled oscillator values.
        let p = MediumParams::new(1.0, 1e-7).unwrap();
        let (k_lo, k_hi) = (0.5, 2.0);
        assert!(matter_weight(&p, k_lo, Band::Minus).unwrap() < 1e-12);
        assert_relative_eq!(matter_weight(&p, k_lo, Band::Plus).unwrap(), 0.5, max_relative = 1e-10);
        assert_relative_eq!(matter_weight(&p, k_hi, Band::Minus).unwrap(), 0.5, max_relative = 1e-10);
        assert!(matter_weight(&p, k_hi, Band::Plus).unwrap() < 1e-12);
    }

    #[test]
    fn lorentzian_kappa_integral_closed_form() {
        let (g0, tau) = (0.1, 10.0);
        let g = SwitchingProfile::Lorentzian { g0, tau };
        let p = medium();
        let ks = [0.05, 0.2, 0.6, 1.5];
        let s = spectrum_first_order(&p, &g, &ks, &KappaQuadrature::default()).unwrap();
        for (i, &k) in ks.iter().enumerate() {
            let (wm, wp) = band_frequencies(&p, k);
            for (band, w, got) in [(Band::Minus, wm, s.n_minus[i]), (Band::Plus, wp, s.n_plus[i])] {
                let weight = matter_weight(&p, k, band).unwrap();
                // ∫_ℝ dκ |κ| e^{−2τ(ω+|κ|)} = e^{−2τω}/(2τ²)
                let want = 0.5 * weight * g0 * g0 * tau * tau * PI / 2.0 * (-2.0 * tau * w).exp() / (2.0 * tau * tau);
                assert_relative_eq!(got, want, max_relative = 1e-8);
            }
            assert!(s.converged[i]);
        }
    }

    #[test]
    fn upper_band_is_exponentially_suppressed() {
        let g = SwitchingProfile::Lorentzian { g0: 0.1, tau: 10.0 };
        let p = medium();
        let s = spectrum_first_order(&p, &g, &[0.3, 1.0, 2.0], &KappaQuadrature::default()).unwrap();
        for i in 0..3 {
            assert!(s.n_plus[i] < 1e-10 * s.n_minus[0]);
        }
    }

    #[test]
    fn lower_band_exponential_tau_decay() {
        let p = medium();
        let (k, kappa) = (0.4, 0.25);
        let (wm, _) = band_frequencies(&p, k);
        let b = |tau: f64| {
            let g = SwitchingProfile::Lorentzian { g0: 0.1, tau };
            first_order_coeffs(&p, &g, k, kappa, Band::Minus).unwrap().beta.norm_sqr() / (tau * tau)
        };
        let ratio = b(12.0) / b(10.0);
        assert_relative_eq!(ratio, (-4.0 * (wm + kappa)).exp(), max_relative = 1e-12);
    }

    #[test]
    fn closed_forms() {
        let p = medium();
        let y = lorentzian_yield_closed_form(&p, 0.5, 10.0);
        assert_relative_eq!(y.n_over_l, 9.7506e-5, max_relative = 1e-4);
        assert_relative_eq!(y.n_over_l, lorentzian_yield_gamma_form(&p, 0.5, 10.0), max_relative = 1e-12);
        assert!(y.warnings.is_empty());
        assert!(!lorentzian_yield_closed_form(&p, 0.5, 2.0).warnings.is_empty());
        assert_eq!(lorentzian_yield_closed_form(&MediumParams::new(1.0, 0.0).unwrap(), 0.5, 10.0).n_over_l, 0.0);

        let pulse = DeltaNPulse { delta_n: 0.01, tau: 10.0, n: 1.802776 };
        let d = delta_n_yield_closed_form(&pulse);
        assert_relative_eq!(d.n_over_l, 1.0892e-6, max_relative = 1e-4);
        let d2 = delta_n_yield_closed_form(&DeltaNPulse { delta_n: 0.02, ..pulse });
        assert_eq!(d2.n_over_l, 4.0 * d.n_over_l);
        assert_eq!(delta_n_yield_closed_form(&DeltaNPulse { delta_n: 0.0, ..pulse }).n_over_l, 0.0);
    }

    #[test]
    fn yield_needs_linearization_or_cutoff() {
        let g = SwitchingProfile::Lorentzian { g0: 0.5, tau: 10.0 };
        let opts = YieldOptions { linearize_lower_band: false, ..Default::default() };
        assert_eq!(total_yield(&medium(), &g, &opts), Err(Error::DivergentYield));
        let cut = YieldOptions { k_cutoff: Some(2.0), ..opts };
        assert!(total_yield(&medium(), &g, &cut).unwrap().n_over_l > 0.0);
    }

    #[test]
    fn step_scan_follows_logarithm() {
        let p = medium();
        let (g0, k) = (0.3, 0.5);
        let lambdas: Vec<f64> = (0..8).map(|i| 2f64.powi(i)).collect();
        let scan = sudden_switch_cutoff_scan(&p, g0, k, Band::Minus, &lambdas).unwrap();
        let (wm, _) = band_frequencies(&p, k);
        let wb = matter_weight(&p, k, Band::Minus).unwrap() / 2.0;
        for (lam, n) in lambdas.iter().zip(&scan.n) {
            let want = wb * g0 * g0 / PI * (((wm + lam) / wm).ln() + wm / (wm + lam) - 1.0);
            assert_relative_eq!(*n, want, max_relative = 1e-9);
        }
        assert!(scan.n.windows(2).all(|w| w[1] > w[0]));
    }

    proptest! {
        #[test]
        fn beta_modulus_identity(k in 0.02..5.0f64, kappa in -6.0..6.0f64, tau in 1.0..20.0f64, minus in any::<bool>()) {
            prop_assume!(kappa.abs() > 1e-6);
            let band = if minus { Band::Minus } else { Band::Plus };
            let g = SwitchingProfile::Gaussian { g0: 0.3, tau };
            let p = medium();
            let c = first_order_coeffs(&p, &g, k, kappa, band).unwrap();
            let closed = beta_sq_closed(&p, &g, k, kappa, band).unwrap();
            prop_assert!((c.beta.norm_sqr() - closed).abs() <= 1e-12 * closed.max(1e-300_f64));
        }

        #[test]
        fn coefficients_are_linear_in_g(k in 0.05..3.0f64, kappa in 0.01..3.0f64, c in 0.0..4.0f64) {
            let g = SwitchingProfile::Lorentzian { g0: 0.2, tau: 3.0 };
            let p = medium();
            let a = first_order_coeffs(&p, &g, k, kappa, Band::Minus).unwrap();
            let b = first_order_coeffs(&p, &g.scaled(c), k, kappa, Band::Minus).unwrap();
            prop_assert!((b.alpha - a.alpha * c).norm() <= 1e-14 * (1.0 + a.alpha.norm() * c));
            prop_assert!((b.beta - a.beta * c).norm() <= 1e-14 * (1.0 + a.beta.norm() * c));
        }
    }
}
