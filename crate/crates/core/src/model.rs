//! Medium parameters and switching profiles G(t) with their Fourier
//! transforms G̃(ω) = (2π)^{-1/2} ∫ dt G(t) e^{iωt}.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;

const SQRT_2PI: f64 = 2.506_628_274_631_000_7;

/// Static medium constants: resonance Ω and light–matter coupling g.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MediumParams {
    pub omega: f64,
    pub g: f64,
    n: f64,
}

impl MediumParams {
    /// Validated constructor; caches the refractive index n = sqrt(1 + g²/Ω²).
    pub fn new(omega: f64, g: f64) -> Result<Self> {
        validate_params(omega, g)
    }

    /// Effective low-frequency refractive index.
    pub fn n(&self) -> f64 {
        self.n
    }

    /// σ(k) = k² − g² − Ω².
    pub fn sigma(&self, k: f64) -> f64 {
        k * k - self.g * self.g - self.omega * self.omega
    }

    /// ρ(k) = sqrt(4k²g² + σ²).
    pub fn rho(&self, k: f64) -> f64 {
        let s = self.sigma(k);
        (4.0 * k * k * self.g * self.g + s * s).sqrt()
    }
}

pub fn validate_params(omega: f64, g: f64) -> Result<MediumParams> {
    if !omega.is_finite() {
        return Err(Error::NonFinite("omega"));
    }
    if !g.is_finite() {
        return Err(Error::NonFinite("g"));
    }
    if omega <= 0.0 {
        return Err(Error::NonPositiveOmega(omega));
    }
    if g < 0.0 {
        return Err(Error::NegativeCoupling(g));
    }
    let n = (1.0 + (g / omega).powi(2)).sqrt();
    Ok(MediumParams { omega, g, n })
}

/// Complex transform value at one frequency.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SpectralAmplitude {
    pub omega: f64,
    pub value: Complex64,
}

/// Refractive-index pulse used by the Δn comparator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeltaNPulse {
    pub delta_n: f64,
    pub tau: f64,
    pub n: f64,
}

/// Tabulated profile with a natural cubic spline, zero outside the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledProfile {
    times: Vec<f64>,
    values: Vec<f64>,
    second: Vec<f64>,
}

impl SampledProfile {
    pub fn new(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::InvalidProfile(format!(
                "{} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.len() < 4 {
            return Err(Error::InvalidProfile("sampled profile needs at least 4 points".into()));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile("time grid must be strictly increasing".into()));
        }
        let second = natural_spline_second_derivatives(&times, &values);
        Ok(Self { times, values, second })
    }

    /// Load a two-column `time,value` CSV. A header row and `#` comment
    /// lines are allowed.
    pub fn from_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .comment(Some(b'#'))
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
        let mut times = Vec::new();
        let mut values = Vec::new();
        for (row, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            if record.len() < 2 {
                return Err(Error::InvalidProfile(format!("row {} has fewer than two columns", row + 1)));
            }
            let parsed = (record[0].parse::<f64>(), record[1].parse::<f64>());
            match parsed {
                (Ok(t), Ok(v)) => {
                    times.push(t);
                    values.push(v);
                }
                _ if row == 0 => continue,
                _ => {
                    return Err(Error::InvalidProfile(format!(
                        "row {}: cannot parse '{},{}'",
                        row + 1,
                        &record[0],
                        &record[1]
                    )))
                }
            }
        }
        Self::new(times, values)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest grid spacing.
    pub fn max_spacing(&self) -> f64 {
        self.times.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    fn locate(&self, t: f64) -> Option<usize> {
        let n = self.times.len();
        if t < self.times[0] || t > self.times[n - 1] {
            return None;
        }
        let i = self.times.partition_point(|&x| x <= t);
        Some(i.saturating_sub(1).min(n - 2))
    }

    fn value(&self, t: f64) -> f64 {
        let Some(i) = self.locate(t) else { return 0.0 };
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = 1.0 - a;
        a * self.values[i]
            + b * self.values[i + 1]
            + ((a * a * a - a) * self.second[i] + (b * b * b - b) * self.second[i + 1]) * h * h / 6.0
    }

    fn derivative(&self, t: f64) -> f64 {
        let Some(i) = self.locate(t) else { return 0.0 };
        let h = self.times[i + 1] - self.times[i];
        let a = (self.times[i + 1] - t) / h;
        let b = 1.0 - a;
        (self.values[i + 1] - self.values[i]) / h
            - (3.0 * a * a - 1.0) * h * self.second[i] / 6.0
            + (3.0 * b * b - 1.0) * h * self.second[i + 1] / 6.0
    }

    fn fourier(&self, omega: f64) -> Result<Complex64> {
        let spacing = self.max_spacing();
        if omega.abs() * spacing > 2.0 * PI / 8.0 {
            return Err(Error::UnresolvedFrequency { omega, spacing });
        }
        let rule = GaussLegendre::new(8);
        let mut acc = Complex64::new(0.0, 0.0);
        for w in self.times.windows(2) {
            acc += rule.integrate(w[0], w[1], |t| Complex64::from_polar(self.value(t), omega * t));
        }
        Ok(acc / SQRT_2PI)
    }
}

fn natural_spline_second_derivatives(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let mut m = vec![0.0; n];
    let mut u = vec![0.0; n];
    for i in 1..n - 1 {
        let sig = (x[i] - x[i - 1]) / (x[i + 1] - x[i - 1]);
        let p = sig * m[i - 1] + 2.0;
        m[i] = (sig - 1.0) / p;
        let d = (y[i + 1] - y[i]) / (x[i + 1] - x[i]) - (y[i] - y[i - 1]) / (x[i] - x[i - 1]);
        u[i] = (6.0 * d / (x[i + 1] - x[i - 1]) - sig * u[i - 1]) / p;
    }
    m[n - 1] = 0.0;
    for i in (0..n - 1).rev() {
        m[i] = m[i] * m[i + 1] + u[i];
    }
    m
}

/// Time-dependent medium–environment coupling G(t).
#[derive(Debug, Clone, PartialEq)]
pub enum SwitchingProfile {
    /// G0 τ² / (τ² + t²)
    Lorentzian { g0: f64, tau: f64 },
    /// G0 exp(−t²/(2τ²))
    Gaussian { g0: f64, tau: f64 },
    /// G0 for t < 0, zero afterwards.
    Step { g0: f64 },
    /// G0 on [t_on, t_off] with raised-cosine ramps of length `ramp` outside it.
    ConstantOnWindow { g0: f64, t_on: f64, t_off: f64, ramp: f64 },
    Sampled(SampledProfile),
}

impl SwitchingProfile {
    /// Check the profile invariants.
    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, what: &'static str| if v.is_finite() { Ok(()) } else { Err(Error::NonFinite(what)) };
        let g0_ok = |g0: f64| {
            finite(g0, "G0")?;
            if g0 < 0.0 {
                return Err(Error::InvalidProfile(format!("G0 must be non-negative, got {g0}")));
            }
            Ok(())
        };
        let tau_ok = |tau: f64| {
            finite(tau, "tau")?;
            if tau <= 0.0 {
                return Err(Error::InvalidProfile(format!("tau must be positive, got {tau}")));
            }
            Ok(())
        };
        match *self {
            Self::Lorentzian { g0, tau } | Self::Gaussian { g0, tau } => {
                g0_ok(g0)?;
                tau_ok(tau)
            }
            Self::Step { g0 } => g0_ok(g0),
            Self::ConstantOnWindow { g0, t_on, t_off, ramp } => {
                g0_ok(g0)?;
                finite(t_on, "t_on")?;
                finite(t_off, "t_off")?;
                finite(ramp, "ramp")?;
                if t_off < t_on || ramp < 0.0 {
                    return Err(Error::InvalidProfile("window needs t_on <= t_off and ramp >= 0".into()));
                }
                Ok(())
            }
            Self::Sampled(_) => Ok(()),
        }
    }

    /// Scale factor used to express thresholds relative to the profile size.
    pub fn peak(&self) -> f64 {
        match self {
            Self::Lorentzian { g0, .. }
            | Self::Gaussian { g0, .. }
            | Self::Step { g0 }
            | Self::ConstantOnWindow { g0, .. } => g0.abs(),
            Self::Sampled(s) => s.values.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// True when G vanishes identically.
    pub fn is_zero(&self) -> bool {
        self.peak() == 0.0
    }

    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Self::Lorentzian { g0, tau } => g0 * tau * tau / (tau * tau + t * t),
            Self::Gaussian { g0, tau } => g0 * (-0.5 * (t / tau).powi(2)).exp(),
            Self::Step { g0 } => {
                if t < 0.0 {
                    g0
                } else {
                    0.0
                }
            }
            Self::ConstantOnWindow { g0, t_on, t_off, ramp } => {
                if t >= t_on && t <= t_off {
                    g0
                } else if ramp > 0.0 && t < t_on && t > t_on - ramp {
                    0.5 * g0 * (1.0 - (PI * (t - t_on + ramp) / ramp).cos())
                } else if ramp > 0.0 && t > t_off && t < t_off + ramp {
                    0.5 * g0 * (1.0 + (PI * (t - t_off) / ramp).cos())
                } else {
                    0.0
                }
            }
            Self::Sampled(ref s) => s.value(t),
        }
    }

    /// dG/dt, ignoring the delta function of the step profile.
    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Self::Lorentzian { g0, tau } => {
                let d = tau * tau + t * t;
                -2.0 * g0 * tau * tau * t / (d * d)
            }
            Self::Gaussian { g0, tau } => -g0 * t / (tau * tau) * (-0.5 * (t / tau).powi(2)).exp(),
            Self::Step { .. } => 0.0,
            Self::ConstantOnWindow { g0, t_on, t_off, ramp } => {
                if ramp > 0.0 && t < t_on && t > t_on - ramp {
                    0.5 * g0 * PI / ramp * (PI * (t - t_on + ramp) / ramp).sin()
                } else if ramp > 0.0 && t > t_off && t < t_off + ramp {
                    -0.5 * g0 * PI / ramp * (PI * (t - t_off) / ramp).sin()
                } else {
                    0.0
                }
            }
            Self::Sampled(ref s) => s.derivative(t),
        }
    }

    /// G̃(ω) in the symmetric convention. The step profile keeps only the
    /// principal-value part, so ω = 0 is singular for it.
    pub fn fourier(&self, omega: f64) -> Result<SpectralAmplitude> {
        let value = match *self {
            Self::Lorentzian { g0, tau } => Complex64::new(g0 * tau * (PI / 2.0).sqrt() * (-tau * omega.abs()).exp(), 0.0),
            Self::Gaussian { g0, tau } => Complex64::new(g0 * tau * (-0.5 * (omega * tau).powi(2)).exp(), 0.0),
            Self::Step { g0 } => {
                if omega == 0.0 {
                    return Err(Error::SingularFrequency(omega));
                }
                Complex64::new(0.0, -g0 / (SQRT_2PI * omega))
            }
            Self::ConstantOnWindow { g0, t_on, t_off, ramp } => window_fourier(g0, t_on - ramp, t_off, ramp, omega),
            Self::Sampled(ref s) => s.fourier(omega)?,
        };
        Ok(SpectralAmplitude { omega, value })
    }

    /// The same profile multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            Self::Lorentzian { g0, tau } => Self::Lorentzian { g0: c * g0, tau: *tau },
            Self::Gaussian { g0, tau } => Self::Gaussian { g0: c * g0, tau: *tau },
            Self::Step { g0 } => Self::Step { g0: c * g0 },
            Self::ConstantOnWindow { g0, t_on, t_off, ramp } => {
                Self::ConstantOnWindow { g0: c * g0, t_on: *t_on, t_off: *t_off, ramp: *ramp }
            }
            Self::Sampled(s) => Self::Sampled(SampledProfile {
                times: s.times.clone(),
                values: s.values.iter().map(|v| c * v).collect(),
                second: s.second.iter().map(|v| c * v).collect(),
            }),
        }
    }

    /// Interval outside of which |G| < rel·peak. Fails for the step profile,
    /// which never switches on.
    pub fn support(&self, rel: f64) -> Result<(f64, f64)> {
        match *self {
            Self::Lorentzian { tau, .. } => {
                let half = tau * (1.0 / rel - 1.0).max(0.0).sqrt();
                Ok((-half, half))
            }
            Self::Gaussian { tau, .. } => {
                let half = tau * (2.0 * (1.0 / rel).ln()).max(0.0).sqrt();
                Ok((-half, half))
            }
            Self::Step { .. } => Err(Error::InvalidProfile("step profile has unbounded support".into())),
            Self::ConstantOnWindow { t_on, t_off, ramp, .. } => Ok((t_on - ramp, t_off + ramp)),
            Self::Sampled(ref s) => Ok((s.times[0], s.times[s.times.len() - 1])),
        }
    }

    /// Natural time scale of the profile, used for default grids.
    pub fn time_scale(&self) -> Option<f64> {
        match *self {
            Self::Lorentzian { tau, .. } | Self::Gaussian { tau, .. } => Some(tau),
            Self::ConstantOnWindow { ramp, t_on, t_off, .. } => Some(if ramp > 0.0 { ramp } else { (t_off - t_on).max(1.0) }),
            Self::Sampled(ref s) => Some(s.max_spacing() * 8.0),
            Self::Step { .. } => None,
        }
    }
}

fn window_fourier(g0: f64, a: f64, b: f64, ramp: f64, omega: f64) -> Complex64 {
    // Rectangle on [a, b] convolved with the ramp kernel (π/2R) sin(πs/R) on [0, R].
    let half = 0.5 * omega * (b - a);
    let sinc = if half.abs() < 1e-8 { 1.0 - half * half / 6.0 } else { half.sin() / half };
    let rect = Complex64::from_polar((b - a) * sinc, 0.5 * omega * (a + b));
    let kernel = if ramp == 0.0 {
        Complex64::new(1.0, 0.0)
    } else {
        let k = PI / ramp;
        let denom = k * k - omega * omega;
        if denom.abs() < 1e-9 * k * k {
            Complex64::new(0.0, omega.signum() * PI / 4.0)
        } else {
            (1.0 + Complex64::from_polar(1.0, omega * ramp)) * (PI / (2.0 * ramp) * k / denom)
        }
    };
    rect * kernel * (g0 / SQRT_2PI)
}
