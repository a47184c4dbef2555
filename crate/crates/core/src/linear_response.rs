//! Static-medium response: permittivity, damping, polariton bands and the
//! symplectic diagonalization of the coupled light–matter Hamiltonian.
//!
//! Canonical quadratures are ordered (A, π_A, Ψ, π_Ψ) with π_A = Ȧ − gΨ and
//! π_Ψ = Ψ̇, so that H = ½ xᵀ M x with
//! M = [[k², 0, 0, 0], [0, 1, g, 0], [0, g, Ω²+g², 0], [0, 0, 0, 1]].

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::MediumParams;

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Permittivity {
    pub omega: f64,
    pub value: C,
}

/// ε(ω) = 1 + g²/(Ω² − iωG²/2 − ω²).
pub fn permittivity(p: &MediumParams, g0: f64, omega: f64) -> Result<Permittivity> {
    let denom = C::new(p.omega * p.omega - omega * omega, -0.5 * omega * g0 * g0);
    if denom.norm() == 0.0 {
        return Err(Error::PoleAtResonance(omega));
    }
    Ok(Permittivity { omega, value: 1.0 + p.g * p.g / denom })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DampingInfo {
    /// Γ = G²/4
    pub gamma: f64,
    /// lim_{ω→0} Im sqrt(ε(ω)) / ω = Γ(n² − 1)/(nΩ²)
    pub im_sqrt_eps_slope: f64,
}

pub fn damping_info(p: &MediumParams, g0: f64) -> DampingInfo {
    let gamma = 0.25 * g0 * g0;
    let n = p.n();
    DampingInfo { gamma, im_sqrt_eps_slope: gamma * (n * n - 1.0) / (n * p.omega * p.omega) }
}

/// k(ω) = ω sqrt(ε(ω)) on the branch with Im sqrt(ε) ≥ 0.
pub fn complex_wavenumber(p: &MediumParams, g0: f64, omega: f64) -> Result<C> {
    if !(omega > 0.0) {
        return Err(Error::InvalidArgument(format!("complex wavenumber needs omega > 0, got {omega}")));
    }
    let mut root = permittivity(p, g0, omega)?.value.sqrt();
    if root.im < 0.0 {
        root = -root;
    }
    Ok(root * omega)
}

/// Richardson-extrapolated low-frequency slope of Im sqrt(ε(ω))/ω, starting
/// from `omega0` and halving `levels` times.
pub fn low_frequency_slope(p: &MediumParams, g0: f64, omega0: f64, levels: usize) -> Result<f64> {
    let mut table = Vec::with_capacity(levels + 1);
    for i in 0..=levels {
        let w = omega0 / 2f64.powi(i as i32);
        table.push(complex_wavenumber(p, g0, w)?.im / (w * w));
    }
    // The ratio has an even expansion in ω, so eliminate ω², ω⁴, ...
    for order in 1..=levels {
        let f = 4f64.powi(order as i32);
        for i in 0..=(levels - order) {
            table[i] = (f * table[i + 1] - table[i]) / (f - 1.0);
        }
    }
    Ok(table[0])
}

/// ω±(k) = sqrt{[(k² + Ω² + g²) ± ρ(k)]/2}; the lower root uses the product
/// ω−²ω+² = k²Ω² to avoid cancellation.
pub fn band_frequencies(p: &MediumParams, k: f64) -> (f64, f64) {
    let sum = k * k + p.omega * p.omega + p.g * p.g;
    let wp2 = 0.5 * (sum + p.rho(k));
    let wm2 = if wp2 > 0.0 { k * k * p.omega * p.omega / wp2 } else { 0.0 };
    (wm2.sqrt(), wp2.sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BandDispersion {
    pub k: Vec<f64>,
    pub omega_minus: Vec<f64>,
    pub omega_plus: Vec<f64>,
    pub rho: Vec<f64>,
    pub sigma: Vec<f64>,
}

pub fn band_dispersion(p: &MediumParams, ks: &[f64]) -> BandDispersion {
    let (omega_minus, omega_plus) = ks.iter().map(|&k| band_frequencies(p, k)).unzip();
    BandDispersion {
        k: ks.to_vec(),
        omega_minus,
        omega_plus,
        rho: ks.iter().map(|&k| p.rho(k)).collect(),
        sigma: ks.iter().map(|&k| p.sigma(k)).collect(),
    }
}

/// Band index: lower (−) or upper (+) polariton.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Minus,
    Plus,
}

impl Band {
    pub const BOTH: [Band; 2] = [Band::Minus, Band::Plus];

    pub fn index(self) -> usize {
        match self {
            Band::Minus => 0,
            Band::Plus => 1,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Band::Minus => "minus",
            Band::Plus => "plus",
        }
    }
}

/// Positive-frequency mode function of one band: x(t) = u e^{−iωt}, with
/// the symplectic normalization u†Ju = −i.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolaritonMode {
    pub omega: f64,
    pub u: [C; 4],
}

/// Canonical symplectic form on (A, π_A, Ψ, π_Ψ).
pub fn symplectic_form() -> Matrix4<f64> {
    Matrix4::new(
        0.0, 1.0, 0.0, 0.0, //
        -1.0, 0.0, 0.0, 0.0, //
        0.0, 0.0, 0.0, 1.0, //
        0.0, 0.0, -1.0, 0.0,
    )
}

/// Hamiltonian matrix M with H = ½ xᵀ M x.
pub fn hamiltonian_matrix(p: &MediumParams, k: f64) -> Matrix4<f64> {
    let g = p.g;
    Matrix4::new(
        k * k, 0.0, 0.0, 0.0, //
        0.0, 1.0, g, 0.0, //
        0.0, g, p.omega * p.omega + g * g, 0.0, //
        0.0, 0.0, 0.0, 1.0,
    )
}

/// Symplectic normal-mode basis at one wavenumber. The columns of `s` are
/// (Q−, P−, Q+, P+) expressed in canonical quadratures, so x = S ξ and
/// Sᵀ M S = diag(ω−, ω−, ω+, ω+).
#[derive(Debug, Clone, PartialEq)]
pub struct HopfieldBasis {
    pub k: f64,
    pub s: Matrix4<f64>,
    pub omega_minus: f64,
    pub omega_plus: f64,
    pub modes: [PolaritonMode; 2],
}

impl HopfieldBasis {
    pub fn mode(&self, band: Band) -> &PolaritonMode {
        &self.modes[band.index()]
    }

    /// Annihilation (c) and creation-conjugate (d) amplitudes of a complex
    /// canonical vector, x = Σ_b (u_b c_b + ū_b d_b).
    pub fn project(&self, x: &[C; 4]) -> ([C; 2], [C; 2]) {
        let mut c = [C::new(0.0, 0.0); 2];
        let mut d = [C::new(0.0, 0.0); 2];
        for (b, m) in self.modes.iter().enumerate() {
            let jx = apply_j(x);
            let mut dag = C::new(0.0, 0.0);
            let mut tr = C::new(0.0, 0.0);
            for i in 0..4 {
                dag += m.u[i].conj() * jx[i];
                tr += m.u[i] * jx[i];
            }
            c[b] = C::i() * dag;
            d[b] = -C::i() * tr;
        }
        (c, d)
    }

    pub fn reconstruct(&self, c: &[C; 2], d: &[C; 2]) -> [C; 4] {
        let mut x = [C::new(0.0, 0.0); 4];
        for (b, m) in self.modes.iter().enumerate() {
            for i in 0..4 {
                x[i] += m.u[i] * c[b] + m.u[i].conj() * d[b];
            }
        }
        x
    }
}

fn apply_j(x: &[C; 4]) -> [C; 4] {
    [x[1], -x[0], x[3], -x[2]]
}

fn mode_vector(p: &MediumParams, k: f64, omega: f64) -> [C; 4] {
    let g = p.g;
    let w2 = omega * omega;
    let first = (C::new(0.0, omega * g), C::new(-(k * k - w2), 0.0));
    let second = (C::new(p.omega * p.omega - w2, 0.0), C::new(0.0, omega * g));
    let norm = |v: &(C, C)| v.0.norm_sqr() + v.1.norm_sqr();
    let (mut a, mut psi) = if norm(&first) >= norm(&second) { first } else { second };
    if psi.norm() > 0.0 {
        let phase = psi.conj() / psi.norm();
        a *= phase;
        psi *= phase;
    } else if a.norm() > 0.0 {
        let phase = a.conj() / a.norm();
        a *= phase;
    }
    let weight = omega * (a.norm_sqr() + psi.norm_sqr()) + g * (a.conj() * psi).im;
    let scale = (0.5 / weight).sqrt();
    a *= scale;
    psi *= scale;
    [a, -C::i() * omega * a - psi * g, psi, -C::i() * omega * psi]
}

fn decoupled_modes(p: &MediumParams, k: f64) -> [PolaritonMode; 2] {
    let wk = k.abs();
    let photon = PolaritonMode {
        omega: wk,
        u: [
            C::new((0.5 / wk).sqrt(), 0.0),
            C::new(0.0, -(0.5 * wk).sqrt()),
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
        ],
    };
    let w = p.omega;
    let matter = PolaritonMode {
        omega: w,
        u: [
            C::new(0.0, 0.0),
            C::new(0.0, 0.0),
            C::new((0.5 / w).sqrt(), 0.0),
            C::new(0.0, -(0.5 * w).sqrt()),
        ],
    };
    if wk <= w {
        [photon, matter]
    } else {
        [matter, photon]
    }
}

pub fn hopfield_diagonalize(p: &MediumParams, k: f64) -> Result<HopfieldBasis> {
    if !k.is_finite() {
        return Err(Error::NonFinite("k"));
    }
    if k == 0.0 {
        return Err(Error::DegenerateMode(k));
    }
    let (wm, wp) = band_frequencies(p, k);
    let modes = if p.g == 0.0 {
        decoupled_modes(p, k)
    } else {
        [
            PolaritonMode { omega: wm, u: mode_vector(p, k, wm) },
            PolaritonMode { omega: wp, u: mode_vector(p, k, wp) },
        ]
    };
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut s = Matrix4::zeros();
    for (b, m) in modes.iter().enumerate() {
        for i in 0..4 {
            s[(i, 2 * b)] = sqrt2 * m.u[i].re;
            s[(i, 2 * b + 1)] = -sqrt2 * m.u[i].im;
        }
    }
    Ok(HopfieldBasis { k, s, omega_minus: wm, omega_plus: wp, modes })
}
