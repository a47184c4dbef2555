//! Non-perturbative per-k solver. The environment is eliminated exactly:
//! its retarded response at the medium is Φ(t, 0) = Φ0(t, 0) + G(t)Ψ(t)/2,
//! which leaves the local equations
//!   Ä + k²A = gΨ̇,
//!   Ψ̈ + (G/2)(ĠΨ + GΨ̇) + Ω²Ψ = −gȦ − G ∂tΦ0.
//! Solutions are propagated with an adaptive Dormand–Prince scheme and
//! projected onto the polariton basis to obtain the Bogoliubov expansion of
//! the out-operators.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linear_response::{hopfield_diagonalize, Band, HopfieldBasis};
use crate::model::{MediumParams, SwitchingProfile};
use crate::ode::{integrate, Dopri5Options};
use crate::quadrature::composite_nodes;

type C = Complex64;

/// Complex amplitudes of one k-mode of the vector potential and the medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeState {
    pub k: f64,
    pub t: f64,
    pub a: C,
    pub a_dot: C,
    pub psi: C,
    pub psi_dot: C,
}

impl ModeState {
    /// Canonical vector (A, π_A, Ψ, π_Ψ) with π_A = Ȧ − gΨ.
    pub fn canonical(&self, g: f64) -> [C; 4] {
        [self.a, self.a_dot - self.psi * g, self.psi, self.psi_dot]
    }

    pub fn from_canonical(k: f64, t: f64, g: f64, x: &[C; 4]) -> Self {
        Self { k, t, a: x[0], a_dot: x[1] + x[2] * g, psi: x[2], psi_dot: x[3] }
    }

    /// Energy of the static coupled system, ½(Ȧ² + k²A² + Ψ̇² + Ω²Ψ²) in
    /// canonical form; for complex states the moduli are used.
    pub fn energy(&self, p: &MediumParams) -> f64 {
        0.5 * (self.a_dot.norm_sqr()
            + self.k * self.k * self.a.norm_sqr()
            + self.psi_dot.norm_sqr()
            + p.omega * p.omega * self.psi.norm_sqr())
    }

    /// Initial state equal to the positive-frequency mode of `band` at time t.
    pub fn polariton(basis: &HopfieldBasis, band: Band, t: f64, g: f64) -> Self {
        let m = basis.mode(band);
        let phase = C::from_polar(1.0, -m.omega * t);
        let x = m.u.map(|v| v * phase);
        Self::from_canonical(basis.k, t, g, &x)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriveKind {
    PositiveFrequency,
    NegativeFrequency,
}

/// One environment mode acting as an input drive at the medium line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriveMode {
    pub kappa: f64,
    pub kind: DriveKind,
}

impl DriveMode {
    /// ∂tΦ0(t, y = 0) for this mode:
    /// −i sqrt(|κ|/(4π)) e^{−i|κ|t}, or its conjugate for the negative kind.
    pub fn phi_dot(&self, t: f64) -> C {
        let w = self.kappa.abs();
        let v = C::from_polar((w / (4.0 * std::f64::consts::PI)).sqrt(), -w * t) * -C::i();
        match self.kind {
            DriveKind::PositiveFrequency => v,
            DriveKind::NegativeFrequency => v.conj(),
        }
    }
}

/// Which solution of the environment wave equation is eliminated. Only the
/// retarded one is physical; the advanced one is kept as a control.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Elimination {
    Retarded,
    Advanced,
}

impl Elimination {
    pub(crate) fn sign(self) -> f64 {
        match self {
            Elimination::Retarded => 1.0,
            Elimination::Advanced => -1.0,
        }
    }
}

/// Force on π_Ψ from the eliminated environment.
fn env_force(g: &SwitchingProfile, t: f64, psi: C, pi_psi: C, drive: Option<&DriveMode>, sign: f64) -> C {
    let gt = g.value(t);
    if gt == 0.0 {
        return C::new(0.0, 0.0);
    }
    let mut f = -(psi * g.derivative(t) + pi_psi * gt) * (0.5 * gt * sign);
    if let Some(d) = drive {
        f -= d.phi_dot(t) * gt;
    }
    f
}

fn check_tol(tol: f64) -> Result<()> {
    if !(1e-12..=1e-6).contains(&tol) {
        return Err(Error::InvalidArgument(format!("integrator tolerance must lie in [1e-12, 1e-6], got {tol}")));
    }
    Ok(())
}

/// Propagate one mode from `initial.t` through the given increasing output
/// times, returning the state at each of them.
pub fn integrate_mode(
    p: &MediumParams,
    g: &SwitchingProfile,
    initial: &ModeState,
    drive: Option<&DriveMode>,
    times: &[f64],
    tol: f64,
) -> Result<Vec<ModeState>> {
    integrate_mode_eliminated(p, g, initial, drive, times, tol, Elimination::Retarded)
}

/// As [`integrate_mode`], with the choice of eliminated environment solution.
pub fn integrate_mode_eliminated(
    p: &MediumParams,
    g: &SwitchingProfile,
    initial: &ModeState,
    drive: Option<&DriveMode>,
    times: &[f64],
    tol: f64,
    elimination: Elimination,
) -> Result<Vec<ModeState>> {
    check_tol(tol)?;
    let (k, gc, w2) = (initial.k, p.g, p.omega * p.omega);
    let sign = elimination.sign();
    let rhs = |t: f64, x: &[C; 4]| {
        let f = env_force(g, t, x[2], x[3], drive, sign);
        [x[1] + x[2] * gc, -x[0] * (k * k), x[3], -x[2] * w2 - (x[1] + x[2] * gc) * gc + f]
    };
    let opts = Dopri5Options::with_tol(tol);
    let (xs, _) = integrate(rhs, initial.t, initial.canonical(gc), times, &opts)?;
    Ok(xs.iter().zip(times).map(|(x, &t)| ModeState::from_canonical(k, t, gc, x)).collect())
}

/// κ-grid settings: composite Gauss–Legendre panels on [0, Λ].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KappaGrid {
    /// Λ; defaults to ω+ + 12/τ.
    pub cutoff: Option<f64>,
    /// Maximum panel width; defaults to τ⁻¹.
    pub panel: Option<f64>,
    pub order: usize,
}

impl Default for KappaGrid {
    fn default() -> Self {
        Self { cutoff: None, panel: None, order: 8 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExactOptions {
    pub tol: f64,
    /// Integration window: where |G| ≥ support_rel·G0.
    pub support_rel: f64,
    pub grid: KappaGrid,
    /// Largest allowed integrand at Λ relative to its peak.
    pub tail_tol: f64,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { tol: 1e-10, support_rel: 1e-6, grid: KappaGrid::default(), tail_tol: 1e-6 }
    }
}

/// Out-operators of the two bands expanded in in-operators:
/// a_b^out = Σ_c (α_self[b][c] a_c + β_self[b][c]* a_c†) + ∫dκ (α_env,b(κ) b_κ + β_env,b(κ)* b_κ†).
/// The env arrays hold κ > 0; the mirrored κ < 0 channels are identical.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactBogoliubov {
    pub k: f64,
    pub omega: [f64; 2],
    pub alpha_self: [[C; 2]; 2],
    pub beta_self: [[C; 2]; 2],
    pub kappa: Vec<f64>,
    pub kappa_weights: Vec<f64>,
    pub kappa_cutoff: f64,
    /// Indexed [band][κ].
    pub alpha_env: [Vec<C>; 2],
    pub beta_env: [Vec<C>; 2],
    pub t_span: (f64, f64),
}

#[derive(Serialize)]
struct ExactBogoliubovDoc<'a> {
    k: f64,
    omega: [f64; 2],
    alpha_self: [[[f64; 2]; 2]; 2],
    beta_self: [[[f64; 2]; 2]; 2],
    kappa: &'a [f64],
    kappa_weights: &'a [f64],
    kappa_cutoff: f64,
    alpha_env: [Vec<[f64; 2]>; 2],
    beta_env: [Vec<[f64; 2]>; 2],
    t_span: [f64; 2],
}

fn pair(z: C) -> [f64; 2] {
    [z.re, z.im]
}

impl ExactBogoliubov {
    /// JSON document with complex numbers as [re, im] pairs.
    pub fn to_json(&self) -> serde_json::Value {
        let block = |m: &[[C; 2]; 2]| [[pair(m[0][0]), pair(m[0][1])], [pair(m[1][0]), pair(m[1][1])]];
        let env = |v: &[Vec<C>; 2]| [v[0].iter().copied().map(pair).collect(), v[1].iter().copied().map(pair).collect()];
        let doc = ExactBogoliubovDoc {
            k: self.k,
            omega: self.omega,
            alpha_self: block(&self.alpha_self),
            beta_self: block(&self.beta_self),
            kappa: &self.kappa,
            kappa_weights: &self.kappa_weights,
            kappa_cutoff: self.kappa_cutoff,
            alpha_env: env(&self.alpha_env),
            beta_env: env(&self.beta_env),
            t_span: [self.t_span.0, self.t_span.1],
        };
        serde_json::to_value(doc).expect("plain numeric document")
    }

    /// Env channels restricted to κ ≤ cutoff.
    pub fn truncated(&self, cutoff: f64) -> Self {
        let keep: Vec<usize> = (0..self.kappa.len()).filter(|&i| self.kappa[i] <= cutoff).collect();
        let pick = |v: &Vec<C>| keep.iter().map(|&i| v[i]).collect::<Vec<_>>();
        Self {
            kappa: keep.iter().map(|&i| self.kappa[i]).collect(),
            kappa_weights: keep.iter().map(|&i| self.kappa_weights[i]).collect(),
            kappa_cutoff: cutoff,
            alpha_env: [pick(&self.alpha_env[0]), pick(&self.alpha_env[1])],
            beta_env: [pick(&self.beta_env[0]), pick(&self.beta_env[1])],
            ..self.clone()
        }
    }
}

/// Propagate w = (c̃−, c̃+, d̃−, d̃+), the interaction-picture normal-mode
/// amplitudes, across the window.
fn solve_interaction(
    basis: &HopfieldBasis,
    g: &SwitchingProfile,
    drive: Option<&DriveMode>,
    w0: [C; 4],
    t_span: (f64, f64),
    tol: f64,
) -> Result<[C; 4]> {
    let om = [basis.modes[0].omega, basis.modes[1].omega];
    let u = [basis.modes[0].u, basis.modes[1].u];
    let chi = [C::i() * u[0][2].conj(), C::i() * u[1][2].conj()];
    let rhs = |t: f64, w: &[C; 4]| {
        let e = [C::from_polar(1.0, -om[0] * t), C::from_polar(1.0, -om[1] * t)];
        let c = [w[0] * e[0], w[1] * e[1]];
        let d = [w[2] * e[0].conj(), w[3] * e[1].conj()];
        let mut psi = C::new(0.0, 0.0);
        let mut pi_psi = C::new(0.0, 0.0);
        for b in 0..2 {
            psi += u[b][2] * c[b] + u[b][2].conj() * d[b];
            pi_psi += u[b][3] * c[b] + u[b][3].conj() * d[b];
        }
        let f = env_force(g, t, psi, pi_psi, drive, 1.0);
        [chi[0] * e[0].conj() * f, chi[1] * e[1].conj() * f, chi[0].conj() * e[0] * f, chi[1].conj() * e[1] * f]
    };
    let mut opts = Dopri5Options::with_tol(tol);
    // The drive must never be stepped over in the quiet tails.
    let fastest = om[1] + drive.map_or(0.0, |d| d.kappa.abs());
    opts.h_max = std::f64::consts::PI / fastest.max(1e-12);
    let (ws, _) = integrate(rhs, t_span.0, w0, &[t_span.1], &opts)?;
    Ok(ws[0])
}

/// Default κ grid for a profile at wavenumber k.
pub fn kappa_nodes(grid: &KappaGrid, g: &SwitchingProfile, omegas: [f64; 2]) -> Result<(Vec<f64>, Vec<f64>, f64)> {
    let ts = g
        .time_scale()
        .ok_or_else(|| Error::InvalidProfile("exact solver needs a profile with a finite time scale".into()))?;
    let cutoff = grid.cutoff.unwrap_or(omegas[1] + 12.0 / ts);
    let panel = grid.panel.unwrap_or(1.0 / ts);
    if !(cutoff > 0.0 && panel > 0.0) || grid.order == 0 {
        return Err(Error::InvalidArgument("kappa grid needs positive cutoff, panel and order".into()));
    }
    let (x, w) = composite_nodes(0.0, cutoff, &omegas, panel, grid.order);
    Ok((x, w, cutoff))
}

pub fn extract_bogoliubov(p: &MediumParams, g: &SwitchingProfile, k: f64, opts: &ExactOptions) -> Result<ExactBogoliubov> {
    check_tol(opts.tol)?;
    let basis = hopfield_diagonalize(p, k)?;
    let omega = [basis.modes[0].omega, basis.modes[1].omega];
    let t_span = g.support(opts.support_rel)?;
    let (kappa, kappa_weights, kappa_cutoff) = kappa_nodes(&opts.grid, g, omega)?;
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);

    let self_runs: Vec<Result<[C; 4]>> = (0..2)
        .into_par_iter()
        .map(|c| {
            let mut w0 = [zero; 4];
            w0[c] = one;
            solve_interaction(&basis, g, None, w0, t_span, opts.tol)
        })
        .collect();
    let mut alpha_self = [[zero; 2]; 2];
    let mut beta_self = [[zero; 2]; 2];
    for (c, run) in self_runs.into_iter().enumerate() {
        let w = run?;
        for b in 0..2 {
            alpha_self[b][c] = w[b];
            beta_self[b][c] = w[2 + b].conj();
        }
    }

    let env_runs: Vec<Result<[C; 4]>> = kappa
        .par_iter()
        .map(|&kap| {
            let drive = DriveMode { kappa: kap, kind: DriveKind::PositiveFrequency };
            solve_interaction(&basis, g, Some(&drive), [zero; 4], t_span, opts.tol)
        })
        .collect();
    let mut alpha_env = [Vec::with_capacity(kappa.len()), Vec::with_capacity(kappa.len())];
    let mut beta_env = [Vec::with_capacity(kappa.len()), Vec::with_capacity(kappa.len())];
    for run in env_runs {
        let w = run?;
        for b in 0..2 {
            alpha_env[b].push(w[b]);
            beta_env[b].push(w[2 + b].conj());
        }
    }

    if !g.is_zero() {
        let density = |i: usize| (0..2).map(|b| alpha_env[b][i].norm_sqr() + beta_env[b][i].norm_sqr()).sum::<f64>();
        let peak = (0..kappa.len()).map(density).fold(0.0, f64::max);
        let last = kappa.len().saturating_sub(opts.grid.order.max(1));
        let tail = (last..kappa.len()).map(density).fold(0.0, f64::max);
        if peak > 0.0 && tail > opts.tail_tol * peak {
            return Err(Error::UnconvergedKappaGrid { tail: tail / peak });
        }
    }

    Ok(ExactBogoliubov {
        k,
        omega,
        alpha_self,
        beta_self,
        kappa,
        kappa_weights,
        kappa_cutoff,
        alpha_env,
        beta_env,
        t_span,
    })
}

/// Per out-band: Σ_c(|α_self|² − |β_self|²) + 2∫_0^Λ dκ (|α_env|² − |β_env|²) − 1.
pub fn unitarity_residuals(b: &ExactBogoliubov) -> [f64; 2] {
    let mut out = [0.0; 2];
    for (band, r) in out.iter_mut().enumerate() {
        let mut s = 0.0;
        for c in 0..2 {
            s += b.alpha_self[band][c].norm_sqr() - b.beta_self[band][c].norm_sqr();
        }
        for (i, w) in b.kappa_weights.iter().enumerate() {
            s += 2.0 * w * (b.alpha_env[band][i].norm_sqr() - b.beta_env[band][i].norm_sqr());
        }
        *r = s - 1.0;
    }
    out
}

/// Largest absolute unitarity residual over the two out-operators.
pub fn unitarity_defect(b: &ExactBogoliubov) -> f64 {
    unitarity_residuals(b).iter().fold(0.0, |m, r| m.max(r.abs()))
}

/// Vacuum occupation of the out-bands, n_b = Σ_c|β_self|² + 2∫dκ|β_env|².
pub fn occupation_from(b: &ExactBogoliubov) -> (f64, f64) {
    let n = |band: usize| {
        let s: f64 = b.beta_self[band].iter().map(|z| z.norm_sqr()).sum();
        let e: f64 = b.kappa_weights.iter().zip(&b.beta_env[band]).map(|(w, z)| 2.0 * w * z.norm_sqr()).sum();
        s + e
    };
    (n(0), n(1))
}

pub fn occupation_exact(p: &MediumParams, g: &SwitchingProfile, k: f64, opts: &ExactOptions) -> Result<(f64, f64)> {
    Ok(occupation_from(&extract_bogoliubov(p, g, k, opts)?))
}

/// Distance between exact and first-order environment coefficients of one
/// out-band, on the exact solution's κ grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BetaDeviation {
    pub band: Band,
    /// sqrt(Σw(|β_ex| − |β_fo|)²) / sqrt(Σw|β_fo|²).
    pub relative_l2: f64,
    /// Largest pointwise relative deviation where |β_fo| ≥ 10⁻² of its peak.
    pub max_relative: f64,
    pub n_exact: f64,
    pub n_first_order: f64,
}

pub fn first_order_deviation(p: &MediumParams, g: &SwitchingProfile, b: &ExactBogoliubov, band: Band) -> Result<BetaDeviation> {
    let i = band.index();
    let fo = b
        .kappa
        .iter()
        .map(|&kap| Ok(crate::perturbative::first_order_coeffs(p, g, b.k, kap, band)?.beta.norm()))
        .collect::<Result<Vec<f64>>>()?;
    let peak = fo.iter().fold(0.0f64, |m, &v| m.max(v));
    let (mut num, mut den, mut worst) = (0.0, 0.0, 0.0f64);
    let (mut n_ex, mut n_fo) = (0.0, 0.0);
    for ((w, ex), f) in b.kappa_weights.iter().zip(&b.beta_env[i]).zip(&fo) {
        let ex = ex.norm();
        num += w * (ex - f).powi(2);
        den += w * f * f;
        n_ex += 2.0 * w * ex * ex;
        n_fo += 2.0 * w * f * f;
        if *f >= 1e-2 * peak && peak > 0.0 {
            worst = worst.max((ex - f).abs() / f);
        }
    }
    let relative_l2 = if den > 0.0 { (num / den).sqrt() } else { 0.0 };
    Ok(BetaDeviation { band, relative_l2, max_relative: worst, n_exact: n_ex, n_first_order: n_fo })
}
