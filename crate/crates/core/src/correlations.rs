//! First-order equal-time two-point functions after a switching pulse.
//!
//! Fields are expanded in the vacuum modes of the two sectors: polaritons
//! a_b(k) and environment quanta b(k, κ). To first order in G,
//!   A = A0 + A1,  A1 built from b, b† through the Bogoliubov coefficients,
//!   Φ = Φ0 + ½G(t−|y|)Ψ0(t−|y|, x),
//! so the O(G) part of any two-point function pairs a zeroth-order piece of
//! one sector with a first-order piece living in the same sector. For
//! ⟨Φ A⟩ this gives, per wavenumber k,
//!   S(k, y) = Σ_b [p e^{−iωt} F+(y) − p̄ e^{iωt} F−(y)] / (4π√(2π))
//!           + G(t−|y|) p̄ e^{iω|y|} / (4π),
//! with p = u^A conj(u^Ψ) and
//!   F+(y) = ∫₀^∞ dκ G̃(ω+κ) 2cos(κy) e^{−iκt},
//!   F−(y) = ∫₀^∞ dκ conj(G̃(ω−κ)) 2cos(κy) e^{−iκt},
//! and ⟨Φ(t,x,y) A(t,x′)⟩ = ∫ dk e^{ikΔx} S(k, y). Maps hold this complex
//! value; its real part is the symmetric-ordered correlator.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linear_response::{band_frequencies, hopfield_diagonalize, Band};
use crate::model::{MediumParams, SwitchingProfile};
use crate::perturbative::matter_weight;
use crate::quadrature::composite_nodes;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Correlator {
    /// ⟨Φ(t, x, y) A(t, x′)⟩.
    PhiA,
    /// ⟨A(t, x′) Φ(t, x, y)⟩, the swapped order.
    APhi,
    /// O(G) part of ⟨A(t, x) A(t, x′)⟩; y is unused.
    AA,
    /// O(G) part of ⟨Φ(t, x, y) Φ(t, x′, y)⟩.
    PhiPhi,
}

/// Wavenumber and environment cutoffs of the mode integrals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorrelationCutoffs {
    /// Width k_s of the Gaussian regulator e^{−(k/k_s)²}.
    pub k_soft: f64,
    /// Hard end of the k integral, in units of k_s.
    pub k_max_factor: f64,
    /// Largest k panel; `None` picks one from the phase range of the grid.
    pub k_panel: Option<f64>,
    /// Environment cutoff beyond ω, in units of 1/τ (numeric κ integral only).
    pub kappa_extent: f64,
}

impl Default for CorrelationCutoffs {
    fn default() -> Self {
        Self { k_soft: 4.0, k_max_factor: 3.0, k_panel: None, kappa_extent: 40.0 }
    }
}

/// Rectangular (Δx, y) grid; values are stored row by row in y.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationGrid {
    pub dx: Vec<f64>,
    pub y: Vec<f64>,
}

impl CorrelationGrid {
    pub fn new(dx: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        if dx.is_empty() || y.is_empty() || dx.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("correlation grid needs finite, non-empty axes".into()));
        }
        Ok(Self { dx, y })
    }

    /// Symmetric grid |Δx| ≤ 1.5t/n, |y| ≤ 1.5t with the given spacing.
    pub fn covering(p: &MediumParams, t: f64, spacing: f64) -> Result<Self> {
        if !(spacing > 0.0 && t > 0.0) {
            return Err(Error::InvalidArgument("grid spacing and time must be positive".into()));
        }
        let axis = |half: f64| {
            let m = (half / spacing).ceil() as i64;
            (-m..=m).map(|i| i as f64 * spacing).collect::<Vec<_>>()
        };
        Self::new(axis(1.5 * t / p.n()), axis(1.5 * t))
    }

    fn extent(&self) -> (f64, f64) {
        let m = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (m(&self.dx), m(&self.y))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrelationMap {
    pub correlator: Correlator,
    pub t: f64,
    pub dx: Vec<f64>,
    pub y: Vec<f64>,
    pub values: Vec<C>,
    pub cutoffs: CorrelationCutoffs,
    pub k_nodes: usize,
    /// Profile time scale, used as the peak separation scale.
    pub time_scale: Option<f64>,
}

impl CorrelationMap {
    pub fn value(&self, iy: usize, ix: usize) -> C {
        self.values[iy * self.dx.len() + ix]
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.norm()))
    }

    /// Rows of (Δx, y, re, im, abs).
    pub fn rows(&self) -> impl Iterator<Item = [f64; 5]> + '_ {
        self.y.iter().enumerate().flat_map(move |(iy, &y)| {
            self.dx.iter().enumerate().map(move |(ix, &dx)| {
                let v = self.value(iy, ix);
                [dx, y, v.re, v.im, v.norm()]
            })
        })
    }
}

struct KGrid {
    k: Vec<f64>,
    /// Quadrature weight × regulator × 2 (the integrand is even in k).
    w: Vec<f64>,
}

fn k_grid(cut: &CorrelationCutoffs, phase_range: f64) -> Result<KGrid> {
    if !(cut.k_soft > 0.0 && cut.k_max_factor > 0.0 && cut.kappa_extent > 0.0) {
        return Err(Error::InvalidArgument("correlation cutoffs must be positive".into()));
    }
    let k_max = cut.k_soft * cut.k_max_factor;
    let panel = cut.k_panel.unwrap_or_else(|| (3.0 / phase_range.max(1.0)).min(0.05));
    if !(panel > 0.0) {
        return Err(Error::InvalidArgument("k panel must be positive".into()));
    }
    let (k, w) = composite_nodes(0.0, k_max, &[], panel, 8);
    let w = k.iter().zip(&w).map(|(&k, &w)| 2.0 * w * (-(k / cut.k_soft).powi(2)).exp()).collect();
    Ok(KGrid { k, w })
}

/// p = u^A conj(u^Ψ) = −i|u^Ψ|²(Ω² − ω²)/(ωg).
fn pair_amplitude(p: &MediumParams, k: f64, band: Band, omega: f64) -> Result<C> {
    if p.g == 0.0 {
        return Ok(C::new(0.0, 0.0));
    }
    let psi2 = matter_weight(p, k, band)?;
    Ok(C::new(0.0, -psi2 * (p.omega * p.omega - omega * omega) / (omega * p.g)))
}

/// Source of the environment integrals F±: closed form for the Lorentzian,
/// otherwise G̃ tabulated on a uniform frequency grid.
enum EnvSource {
    Lorentzian { c: f64, tau: f64 },
    Tabulated { s: Vec<f64>, gt: Vec<C> },
}

/// F± at fixed (y, t) as functions of ω.
enum RowEnv<'a> {
    Lorentzian { c: f64, tau: f64, y: f64, t: f64 },
    /// For z = t ∓ y: envelopes e^{iωz}∫_ω^∞ G̃ e^{−isz} and
    /// e^{−iωz}∫_{−∞}^ω conj(G̃) e^{isz}, tabulated on the source grid.
    Tabulated { s: &'a [f64], plus: Vec<C>, minus: Vec<C> },
}

impl EnvSource {
    fn row(&self, y: f64, t: f64) -> RowEnv<'_> {
        match self {
            Self::Lorentzian { c, tau } => RowEnv::Lorentzian { c: *c, tau: *tau, y, t },
            Self::Tabulated { s, gt } => {
                let n = s.len();
                let mut plus = vec![C::new(0.0, 0.0); n];
                let mut minus = vec![C::new(0.0, 0.0); n];
                let conj: Vec<C> = gt.iter().map(|v| v.conj()).collect();
                for z in [t - y, t + y] {
                    let up = filon_cumulative(s, gt, z);
                    let down = filon_cumulative(s, &conj, -z);
                    let total = up[n - 1];
                    for j in 0..n {
                        plus[j] += (total - up[j]) * C::from_polar(1.0, s[j] * z);
                        minus[j] += down[j] * C::from_polar(1.0, -s[j] * z);
                    }
                }
                RowEnv::Tabulated { s, plus, minus }
            }
        }
    }
}

impl RowEnv<'_> {
    fn f_plus_minus(&self, omega: f64) -> (C, C) {
        match *self {
            Self::Lorentzian { c, tau, y, t } => {
                let i = C::i();
                let fp = (1.0 / (tau - i * (y - t)) + 1.0 / (tau + i * (y + t))) * (c * (-tau * omega).exp());
                // ∫₀^∞ dκ e^{−τ|ω−κ|} e^{iκz}, split at κ = ω.
                let piece = |z: f64| {
                    let ez = C::from_polar(1.0, z * omega);
                    (ez - (-tau * omega).exp()) / (tau + i * z) + ez / (tau - i * z)
                };
                (fp, (piece(y - t) + piece(-(y + t))) * c)
            }
            Self::Tabulated { s, ref plus, ref minus } => {
                let h = s[1] - s[0];
                let x = ((omega - s[0]) / h).clamp(0.0, (s.len() - 2) as f64);
                let j = x.floor() as usize;
                let f = x - j as f64;
                let lerp = |v: &[C]| v[j] * (1.0 - f) + v[j + 1] * f;
                (lerp(plus), lerp(minus))
            }
        }
    }
}

/// Running integrals ∫_{s0}^{s_j} f(s) e^{−isz} ds with f linear on each cell
/// and the oscillating factor integrated exactly.
fn filon_cumulative(s: &[f64], f: &[C], z: f64) -> Vec<C> {
    let mut out = Vec::with_capacity(s.len());
    let mut acc = C::new(0.0, 0.0);
    out.push(acc);
    for j in 1..s.len() {
        let h = s[j] - s[j - 1];
        let th = z * h;
        // ∫₀¹ e^{−iθv} dv and ∫₀¹ v e^{−iθv} dv.
        let (a0, a1) = if th.abs() < 0.1 {
            let mut a0 = C::new(0.0, 0.0);
            let mut a1 = C::new(0.0, 0.0);
            let mut term = C::new(1.0, 0.0);
            for n in 0..8 {
                a0 += term / (n + 1) as f64;
                a1 += term / (n + 2) as f64;
                term *= C::new(0.0, -th) / (n + 1) as f64;
            }
            (a0, a1)
        } else {
            let e = C::from_polar(1.0, -th);
            let a = C::new(0.0, -th);
            ((e - 1.0) / a, e * (1.0 / a - 1.0 / (a * a)) + 1.0 / (a * a))
        };
        acc += C::from_polar(h, -z * s[j - 1]) * (f[j - 1] * a0 + (f[j] - f[j - 1]) * a1);
        out.push(acc);
    }
    out
}

fn env_source(g: &SwitchingProfile, omega_max: f64, cut: &CorrelationCutoffs) -> Result<EnvSource> {
    if let SwitchingProfile::Lorentzian { g0, tau } = *g {
        return Ok(EnvSource::Lorentzian { c: g0 * tau * (PI / 2.0).sqrt(), tau });
    }
    let ts = g
        .time_scale()
        .ok_or_else(|| Error::InvalidProfile("correlation maps need a profile with a finite time scale".into()))?;
    let extent = cut.kappa_extent / ts;
    let ds = 0.01 / ts;
    let (lo, hi) = (-extent, omega_max + extent);
    let n = ((hi - lo) / ds).ceil() as usize + 1;
    let s: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
    let gt = s.iter().map(|&w| g.fourier(w).map(|a| a.value)).collect::<Result<Vec<_>>>()?;
    Ok(EnvSource::Tabulated { s, gt })
}

fn check_time(g: &SwitchingProfile, t: f64) -> Result<()> {
    g.validate()?;
    if !t.is_finite() {
        return Err(Error::NonFinite("t"));
    }
    if matches!(g, SwitchingProfile::Step { .. }) {
        return Err(Error::InvalidProfile("correlation maps need a pulse that has ended".into()));
    }
    Ok(())
}

/// ⟨Φ(t, x, y) A(t, x′)⟩ to first order in G over a (Δx, y) grid.
pub fn cross_correlation_map(
    p: &MediumParams,
    g: &SwitchingProfile,
    t: f64,
    grid: &CorrelationGrid,
    cutoffs: &CorrelationCutoffs,
) -> Result<CorrelationMap> {
    correlation_map(p, g, t, grid, cutoffs, Correlator::PhiA)
}

/// Cross map in either field order.
pub fn correlation_map(
    p: &MediumParams,
    g: &SwitchingProfile,
    t: f64,
    grid: &CorrelationGrid,
    cutoffs: &CorrelationCutoffs,
    order: Correlator,
) -> Result<CorrelationMap> {
    if !matches!(order, Correlator::PhiA | Correlator::APhi) {
        return Err(Error::InvalidArgument("use auto_correlation_first_order for AA and ΦΦ".into()));
    }
    check_time(g, t)?;
    let (dx_max, y_max) = grid.extent();
    let kg = k_grid(cutoffs, dx_max + 2.0 * t.abs() + y_max)?;
    let omega_max = band_frequencies(p, *kg.k.last().unwrap()).1;
    let env = env_source(g, omega_max, cutoffs)?;

    let bands = kg
        .k
        .iter()
        .map(|&k| {
            let (wm, wp) = band_frequencies(p, k);
            Ok([(wm, pair_amplitude(p, k, Band::Minus, wm)?), (wp, pair_amplitude(p, k, Band::Plus, wp)?)])
        })
        .collect::<Result<Vec<_>>>()?;
    let cos_table: Vec<f64> = kg.k.iter().flat_map(|&k| grid.dx.iter().map(move |&dx| (k * dx).cos())).collect();
    let nx = grid.dx.len();
    let norm = 1.0 / (4.0 * PI * (2.0 * PI).sqrt());

    let rows: Vec<Vec<C>> = grid
        .y
        .par_iter()
        .map(|&y| {
            let local = g.value(t - y.abs()) / (4.0 * PI);
            let row_env = env.row(y, t);
            let mut row = vec![C::new(0.0, 0.0); nx];
            for (ik, band) in bands.iter().enumerate() {
                let mut s = C::new(0.0, 0.0);
                for &(omega, pa) in band {
                    if pa == C::new(0.0, 0.0) {
                        continue;
                    }
                    let (fp, fm) = row_env.f_plus_minus(omega);
                    let ph = C::from_polar(1.0, -omega * t);
                    s += (pa * ph * fp - pa.conj() * ph.conj() * fm) * norm;
                    s += pa.conj() * C::from_polar(local, omega * y.abs());
                }
                let s = s * kg.w[ik];
                let cos = &cos_table[ik * nx..(ik + 1) * nx];
                for (r, &c) in row.iter_mut().zip(cos) {
                    *r += s * c;
                }
            }
            if order == Correlator::APhi {
                row.iter_mut().for_each(|v| *v = v.conj());
            }
            row
        })
        .collect();
    let values: Vec<C> = rows.into_iter().flatten().collect();
    if values.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::QuadratureNotConverged { error: f64::NAN, cutoff: cutoffs.k_soft });
    }
    Ok(CorrelationMap {
        correlator: order,
        t,
        dx: grid.dx.clone(),
        y: grid.y.clone(),
        values,
        cutoffs: *cutoffs,
        k_nodes: kg.k.len(),
        time_scale: g.time_scale(),
    })
}

/// Annihilation-operator coefficients of one k-component of a field, split by
/// sector. A sector absent at a given order is `None`; environment vectors
/// are built only when a contraction needs them. Creation coefficients are
/// the complex conjugates, since all mode functions depend on |k| only.
struct Expansion<'a> {
    medium: Option<[C; 2]>,
    env: Option<Box<dyn Fn() -> Vec<C> + 'a>>,
}

/// Vacuum contraction Σ_m X_m conj(Y_m) w_m over the modes both fields share.
fn contract(x: &Expansion, y: &Expansion, env_w: &[f64]) -> C {
    let mut s = C::new(0.0, 0.0);
    if let (Some(a), Some(b)) = (&x.medium, &y.medium) {
        s += a[0] * b[0].conj() + a[1] * b[1].conj();
    }
    if let (Some(a), Some(b)) = (&x.env, &y.env) {
        s += a().iter().zip(b()).zip(env_w).map(|((u, v), &w)| u * v.conj() * w).sum::<C>();
    }
    s
}

/// Per-k mode data of the first-order fields.
struct ModeData {
    omega: [f64; 2],
    u_a: [C; 2],
    u_psi: [C; 2],
    /// Environment modes: κ over both signs, with α_b, β_b.
    kappa: Vec<f64>,
    alpha: [Vec<C>; 2],
    beta: [Vec<C>; 2],
}

fn mode_data(p: &MediumParams, g: &SwitchingProfile, k: f64, kappa: &[f64]) -> Result<ModeData> {
    let basis = hopfield_diagonalize(p, k)?;
    let mut alpha = [Vec::new(), Vec::new()];
    let mut beta = [Vec::new(), Vec::new()];
    for band in Band::BOTH {
        let m = basis.mode(band);
        // χ_b = i conj(u^Ψ_b); same coefficients as first_order_coeffs.
        let chi = C::i() * m.u[2].conj();
        for &kap in kappa {
            let amp = (0.5 * kap.abs()).sqrt();
            alpha[band.index()].push(C::i() * chi * amp * g.fourier(m.omega - kap.abs())?.value);
            beta[band.index()].push(-C::i() * chi * amp * g.fourier(m.omega + kap.abs())?.value);
        }
    }
    Ok(ModeData {
        omega: [basis.modes[0].omega, basis.modes[1].omega],
        u_a: [basis.modes[0].u[0], basis.modes[1].u[0]],
        u_psi: [basis.modes[0].u[2], basis.modes[1].u[2]],
        kappa: kappa.to_vec(),
        alpha,
        beta,
    })
}

impl ModeData {
    /// A(t) at one k: zeroth order in the medium sector, first order in the
    /// environment sector.
    fn a_field(&self, t: f64) -> [Expansion<'_>; 2] {
        let ph = [C::from_polar(1.0, -self.omega[0] * t), C::from_polar(1.0, -self.omega[1] * t)];
        let zeroth = Expansion { medium: Some([self.u_a[0] * ph[0], self.u_a[1] * ph[1]]), env: None };
        let env = move || {
            (0..self.kappa.len())
                .map(|j| {
                    (0..2)
                        .map(|b| {
                            self.u_a[b] * ph[b] * self.alpha[b][j]
                                + (self.u_a[b] * ph[b]).conj() * self.beta[b][j].conj()
                        })
                        .sum()
                })
                .collect()
        };
        [zeroth, Expansion { medium: None, env: Some(Box::new(env)) }]
    }

    /// Φ(t, y) at one k: free field in the environment sector plus the
    /// radiated ½G(t−|y|)Ψ0(t−|y|) in the medium sector.
    fn phi_field(&self, g: &SwitchingProfile, t: f64, y: f64) -> [Expansion<'_>; 2] {
        let env = move || {
            self.kappa
                .iter()
                .map(|&kap| C::from_polar(1.0 / (4.0 * PI * kap.abs()).sqrt(), kap * y - kap.abs() * t))
                .collect()
        };
        let tr = t - y.abs();
        let half_g = 0.5 * g.value(tr);
        let medium = [0, 1].map(|b| self.u_psi[b] * C::from_polar(half_g, -self.omega[b] * tr));
        [Expansion { medium: None, env: Some(Box::new(env)) }, Expansion { medium: Some(medium), env: None }]
    }
}

/// O(G) part of a two-point function by explicit vacuum contraction over the
/// mode sectors, on a list of (Δx, y) points. Slow but independent of the
/// closed-form environment integrals; `kappa_panel` sets the κ grid.
pub fn mode_sum_points(
    p: &MediumParams,
    g: &SwitchingProfile,
    t: f64,
    points: &[(f64, f64)],
    correlator: Correlator,
    cutoffs: &CorrelationCutoffs,
    kappa_panel: f64,
) -> Result<Vec<C>> {
    check_time(g, t)?;
    let ts = g.time_scale().unwrap_or(1.0);
    let dx_max = points.iter().fold(0.0f64, |m, q| m.max(q.0.abs()));
    let y_max = points.iter().fold(0.0f64, |m, q| m.max(q.1.abs()));
    let kg = k_grid(cutoffs, dx_max + 2.0 * t.abs() + y_max)?;
    let omega_max = band_frequencies(p, *kg.k.last().unwrap()).1;
    let (kp, wp) = composite_nodes(0.0, omega_max + cutoffs.kappa_extent / ts, &[], kappa_panel, 8);
    let kappa: Vec<f64> = kp.iter().map(|&k| -k).chain(kp.iter().copied()).collect();
    let env_w: Vec<f64> = wp.iter().chain(&wp).copied().collect();
    let per_k = kg
        .k
        .par_iter()
        .zip(&kg.w)
        .map(|(&k, &w)| {
            let md = mode_data(p, g, k, &kappa)?;
            let a = md.a_field(t);
            let vals = points
                .iter()
                .map(|&(dx, y)| {
                    let first = match correlator {
                        Correlator::PhiA | Correlator::APhi => {
                            let phi = md.phi_field(g, t, y);
                            let v = contract(&phi[0], &a[1], &env_w) + contract(&phi[1], &a[0], &env_w);
                            if correlator == Correlator::APhi { v.conj() } else { v }
                        }
                        Correlator::AA => contract(&a[0], &a[1], &env_w) + contract(&a[1], &a[0], &env_w),
                        Correlator::PhiPhi => {
                            let phi = md.phi_field(g, t, y);
                            contract(&phi[0], &phi[1], &env_w) + contract(&phi[1], &phi[0], &env_w)
                        }
                    };
                    first * (w * (k * dx).cos() / (2.0 * PI))
                })
                .collect::<Vec<C>>();
            Ok(vals)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((0..points.len()).map(|i| per_k.iter().map(|v| v[i]).sum()).collect())
}

/// O(G) parts of ⟨A A⟩ (over Δx, reported on the y = 0 row) and ⟨Φ Φ⟩ (both
/// points at the same y). They vanish identically: every first-order piece
/// lives in the other sector from the zeroth-order piece it would pair with.
pub fn auto_correlation_first_order(
    p: &MediumParams,
    g: &SwitchingProfile,
    t: f64,
    grid: &CorrelationGrid,
    cutoffs: &CorrelationCutoffs,
) -> Result<(CorrelationMap, CorrelationMap)> {
    check_time(g, t)?;
    let (dx_max, y_max) = grid.extent();
    let kg = k_grid(cutoffs, dx_max + 2.0 * t.abs() + y_max)?;
    let ts = g.time_scale().unwrap_or(1.0);
    let omega_max = band_frequencies(p, *kg.k.last().unwrap()).1;
    let (kp, wp) = composite_nodes(0.0, omega_max + cutoffs.kappa_extent / ts, &[], 1.0 / ts, 8);
    let kappa: Vec<f64> = kp.iter().map(|&k| -k).chain(kp.iter().copied()).collect();
    let env_w: Vec<f64> = wp.iter().chain(&wp).copied().collect();
    let nx = grid.dx.len();
    let mut aa = vec![C::new(0.0, 0.0); nx];
    let mut pp = vec![C::new(0.0, 0.0); nx * grid.y.len()];
    for (&k, &w) in kg.k.iter().zip(&kg.w) {
        let md = mode_data(p, g, k, &kappa)?;
        let a = md.a_field(t);
        let s_aa = (contract(&a[0], &a[1], &env_w) + contract(&a[1], &a[0], &env_w)) * (w / (2.0 * PI));
        for (v, &dx) in aa.iter_mut().zip(&grid.dx) {
            *v += s_aa * (k * dx).cos();
        }
        for (iy, &y) in grid.y.iter().enumerate() {
            let phi = md.phi_field(g, t, y);
            let s = (contract(&phi[0], &phi[1], &env_w) + contract(&phi[1], &phi[0], &env_w)) * (w / (2.0 * PI));
            for (ix, &dx) in grid.dx.iter().enumerate() {
                pp[iy * nx + ix] += s * (k * dx).cos();
            }
        }
    }
    let make = |correlator, y: Vec<f64>, values| CorrelationMap {
        correlator,
        t,
        dx: grid.dx.clone(),
        y,
        values,
        cutoffs: *cutoffs,
        k_nodes: kg.k.len(),
        time_scale: g.time_scale(),
    };
    Ok((make(Correlator::AA, vec![0.0], aa), make(Correlator::PhiPhi, grid.y.clone(), pp)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Peak {
    pub dx: f64,
    pub y: f64,
    pub magnitude: f64,
}

/// Local maxima of |value| above max(5 × median, ½ × global max), thinned so
/// that peaks are at least 2τ apart (8 cells without a profile scale), with
/// sub-cell refinement from a Gaussian (log-parabola) fit along each axis.
pub fn locate_peaks(m: &CorrelationMap) -> Result<Vec<Peak>> {
    let (nx, ny) = (m.dx.len(), m.y.len());
    let mag: Vec<f64> = m.values.iter().map(|v| v.norm()).collect();
    let mut sorted = mag.clone();
    sorted.sort_by(|a, b| a.total_cmp(b));
    let median = sorted[sorted.len() / 2];
    let max = *sorted.last().unwrap();
    let threshold = (5.0 * median).max(0.5 * max);
    let at = |iy: usize, ix: usize| mag[iy * nx + ix];

    let mut candidates = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            let v = at(iy, ix);
            if !(v > threshold) {
                continue;
            }
            let mut is_max = true;
            for jy in iy.saturating_sub(1)..=(iy + 1).min(ny - 1) {
                for jx in ix.saturating_sub(1)..=(ix + 1).min(nx - 1) {
                    if (jy, jx) != (iy, ix) && at(jy, jx) > v {
                        is_max = false;
                    }
                }
            }
            if is_max {
                candidates.push((iy, ix, v));
            }
        }
    }
    if candidates.is_empty() {
        return Err(Error::NoPeaksFound(threshold));
    }
    candidates.sort_by(|a, b| b.2.total_cmp(&a.2));

    let refine = |axis: &[f64], i: usize, get: &dyn Fn(usize) -> f64| -> f64 {
        if i == 0 || i + 1 >= axis.len() {
            return axis[i];
        }
        let (a, b, c) = (get(i - 1), get(i), get(i + 1));
        let (a, b, c) = if a > 0.0 && c > 0.0 { (a.ln(), b.ln(), c.ln()) } else { (a, b, c) };
        let den = a - 2.0 * b + c;
        let shift = if den < 0.0 { (0.5 * (a - c) / den).clamp(-0.5, 0.5) } else { 0.0 };
        let h = if shift >= 0.0 { axis[i + 1] - axis[i] } else { axis[i] - axis[i - 1] };
        axis[i] + shift * h
    };
    let spacing = |axis: &[f64]| if axis.len() > 1 { (axis[axis.len() - 1] - axis[0]).abs() / (axis.len() - 1) as f64 } else { 1.0 };
    let sep = m.time_scale.map_or(8.0 * spacing(&m.dx).max(spacing(&m.y)), |tau| 2.0 * tau);

    let mut peaks: Vec<Peak> = Vec::new();
    for (iy, ix, v) in candidates {
        let dx = refine(&m.dx, ix, &|j| at(iy, j));
        let y = refine(&m.y, iy, &|j| at(j, ix));
        if peaks.iter().all(|q| (q.dx - dx).hypot(q.y - y) > sep) {
            peaks.push(Peak { dx, y, magnitude: v });
        }
    }
    Ok(peaks)
}

/// Location of the strongest peak with Δx ≥ 0 and y ≥ 0.
pub fn quadrant_peak(m: &CorrelationMap) -> Result<Peak> {
    locate_peaks(m)?
        .into_iter()
        .filter(|q| q.dx >= 0.0 && q.y >= 0.0)
        .max_by(|a, b| a.magnitude.total_cmp(&b.magnitude))
        .ok_or(Error::NoPeaksFound(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RidgeSpeeds {
    pub t1: f64,
    pub t2: f64,
    pub peak1: Peak,
    pub peak2: Peak,
    /// d|Δx|/dt of the medium-side peak.
    pub medium_speed: f64,
    /// d|y|/dt of the environment-side peak.
    pub environment_speed: f64,
}

/// Track the positive-quadrant cross peak between two observation times,
/// each on its own covering grid.
pub fn ridge_speeds(
    p: &MediumParams,
    g: &SwitchingProfile,
    t1: f64,
    t2: f64,
    spacing: f64,
    cutoffs: &CorrelationCutoffs,
) -> Result<RidgeSpeeds> {
    if !(t2 > t1) {
        return Err(Error::InvalidArgument("ridge tracking needs t2 > t1".into()));
    }
    let peak_at = |t: f64| -> Result<Peak> {
        // Only the positive quadrant is needed; the map is even in Δx and y.
        let full = CorrelationGrid::covering(p, t, spacing)?;
        let keep = |v: &[f64]| v.iter().copied().filter(|&x| x >= -2.0 * spacing).collect::<Vec<_>>();
        let grid = CorrelationGrid::new(keep(&full.dx), keep(&full.y))?;
        quadrant_peak(&cross_correlation_map(p, g, t, &grid, cutoffs)?)
    };
    let (peak1, peak2) = (peak_at(t1)?, peak_at(t2)?);
    Ok(RidgeSpeeds {
        t1,
        t2,
        peak1,
        peak2,
        medium_speed: (peak2.dx - peak1.dx) / (t2 - t1),
        environment_speed: (peak2.y - peak1.y) / (t2 - t1),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium() -> MediumParams {
        MediumParams::new(1.0, 1.5).unwrap()
    }

    fn synthetic(values: impl Fn(f64, f64) -> f64, time_scale: Option<f64>) -> CorrelationMap {
        let dx: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let y: Vec<f64> = (-20..=20).map(|i| i as f64 * 0.5).collect();
        let values = y.iter().flat_map(|&yy| dx.iter().map(move |&xx| (xx, yy))).map(|(x, y)| C::new(values(x, y), 0.0)).collect();
        CorrelationMap {
            correlator: Correlator::PhiA,
            t: 0.0,
            dx,
            y,
            values,
            cutoffs: CorrelationCutoffs::default(),
            k_nodes: 0,
            time_scale,
        }
    }

    #[test]
    fn constant_map_has_no_peaks() {
        assert!(matches!(locate_peaks(&synthetic(|_, _| 1.0, None)), Err(Error::NoPeaksFound(_))));
        assert!(matches!(locate_peaks(&synthetic(|_, _| 0.0, None)), Err(Error::NoPeaksFound(_))));
    }

    #[test]
    fn gaussian_bump_center_is_recovered() {
        let (x0, y0) = (1.37, -2.81);
        let m = synthetic(|x, y| (-((x - x0).powi(2) + (y - y0).powi(2)) / 4.0).exp(), None);
        let peaks = locate_peaks(&m).unwrap();
        assert_eq!(peaks.len(), 1);
        assert!((peaks[0].dx - x0).abs() < 1e-9 && (peaks[0].y - y0).abs() < 1e-9, "{peaks:?}");
    }

    #[test]
    fn zero_coupling_gives_zero_map() {
        let g = SwitchingProfile::Lorentzian { g0: 0.0, tau: 5.0 };
        let grid = CorrelationGrid::new(vec![0.0, 10.0], vec![0.0, 50.0]).unwrap();
        let m = cross_correlation_map(&medium(), &g, 50.0, &grid, &CorrelationCutoffs::default()).unwrap();
        assert!(m.values.iter().all(|v| *v == C::new(0.0, 0.0)));
    }

    #[test]
    fn map_is_linear_in_g0_and_swapped_order_conjugates() {
        let grid = CorrelationGrid::new(vec![0.0, 12.0, 27.5], vec![-40.0, 3.0, 48.0]).unwrap();
        let cut = CorrelationCutoffs::default();
        let p = medium();
        let g1 = SwitchingProfile::Lorentzian { g0: 0.1, tau: 5.0 };
        let m1 = cross_correlation_map(&p, &g1, 50.0, &grid, &cut).unwrap();
        let m3 = cross_correlation_map(&p, &g1.scaled(3.0), 50.0, &grid, &cut).unwrap();
        let sw = correlation_map(&p, &g1, 50.0, &grid, &cut, Correlator::APhi).unwrap();
        for ((a, b), c) in m1.values.iter().zip(&m3.values).zip(&sw.values) {
            assert!((a * 3.0 - b).norm() <= 1e-12 * b.norm().max(1e-30));
            assert_eq!(*c, a.conj());
        }
    }

    #[test]
    fn closed_form_matches_mode_contraction() {
        let p = medium();
        let g = SwitchingProfile::Lorentzian { g0: 0.1, tau: 5.0 };
        let t = 40.0;
        let cut = CorrelationCutoffs { k_soft: 2.0, ..Default::default() };
        let points = [(0.0, 0.0), (t / p.n(), t), (10.0, 30.0), (-5.0, -45.0)];
        let grid = CorrelationGrid::new(points.iter().map(|q| q.0).collect(), points.iter().map(|q| q.1).collect()).unwrap();
        let m = cross_correlation_map(&p, &g, t, &grid, &cut).unwrap();
        let modes = mode_sum_points(&p, &g, t, &points, Correlator::PhiA, &cut, 0.02).unwrap();
        let scale = m.max_abs();
        for (i, v) in modes.iter().enumerate() {
            let closed = m.value(i, i);
            assert!((closed - v).norm() < 1e-4 * scale, "{i}: {closed} vs {v}");
        }
    }

    #[test]
    fn tabulated_environment_integral_matches_lorentzian() {
        let (g0, tau) = (0.1, 5.0);
        let closed = EnvSource::Lorentzian { c: g0 * tau * (PI / 2.0).sqrt(), tau };
        let g = SwitchingProfile::Lorentzian { g0, tau };
        let (lo, hi, n) = (-20.0, 23.0, 43001);
        let s: Vec<f64> = (0..n).map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64).collect();
        let gt = s.iter().map(|&w| g.fourier(w).unwrap().value).collect();
        let tab = EnvSource::Tabulated { s, gt };
        for (omega, y) in [(0.3, 10.0), (1.2, 48.0), (2.5, -70.0), (0.8, 50.0)] {
            let (a, b) = closed.row(y, 50.0).f_plus_minus(omega);
            let (c, d) = tab.row(y, 50.0).f_plus_minus(omega);
            assert!((a - c).norm() < 1e-4 * a.norm().max(1e-3), "{a} {c}");
            assert!((b - d).norm() < 1e-4 * b.norm().max(1e-3), "{b} {d}");
        }
    }

    #[test]
    fn first_order_auto_correlations_vanish() {
        let p = medium();
        let g = SwitchingProfile::Gaussian { g0: 0.2, tau: 3.0 };
        let grid = CorrelationGrid::new(vec![0.0, 5.0, 20.0], vec![0.0, 30.0]).unwrap();
        let cut = CorrelationCutoffs { k_soft: 1.0, k_panel: Some(0.2), ..Default::default() };
        let (aa, pp) = auto_correlation_first_order(&p, &g, 30.0, &grid, &cut).unwrap();
        assert_eq!(aa.max_abs(), 0.0);
        assert_eq!(pp.max_abs(), 0.0);
    }
}
