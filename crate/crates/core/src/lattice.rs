//! Lattice oracle for the environment elimination. For one wavenumber k the
//! environment field Φ(t, y) is kept explicitly on a grid in y, sourced by
//! ∂t[G(t)Ψ(t)]δ(y), and the medium feels ∂tΦ at y = 0. Comparing with the
//! memory-free local equations of [`crate::exact`] tests the elimination.
//!
//! Φ is even in y, so only y ≥ 0 is stored; the mirror condition enters the
//! Laplacian at y = 0. The lattice holds the scattered part of Φ; an input
//! drive is added analytically at y = 0. Time stepping is classical RK4 on
//! the semi-discrete system (method of lines) with a fixed step.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::exact::{integrate_mode_eliminated, DriveMode, Elimination, ModeState};
use crate::model::{MediumParams, SwitchingProfile};

type C = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Outgoing characteristic condition ∂tΦ + ∂yΦ = 0 at y = L, with a
    /// second-order one-sided difference.
    OutgoingAbsorbing,
    /// Φ = 0 at y = L with L larger than the run time, so nothing returns.
    LargeDomain,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeConfig {
    /// Half-length L_y of the y domain.
    pub y_extent: f64,
    pub dy: f64,
    pub dt: f64,
    pub boundary: Boundary,
    /// Probe position for flux and reflection monitoring; 0.75·L by default.
    pub probe: Option<f64>,
}

impl LatticeConfig {
    pub fn new(y_extent: f64, dy: f64, cfl: f64, boundary: Boundary) -> Self {
        Self { y_extent, dy, dt: cfl * dy, boundary, probe: None }
    }

    fn validate(&self, duration: f64) -> Result<usize> {
        if !(self.dy > 0.0 && self.dt > 0.0 && self.y_extent > 0.0) {
            return Err(Error::InvalidLattice("extent, dy and dt must be positive".into()));
        }
        let ratio = self.dt / self.dy;
        if ratio > 0.9 {
            return Err(Error::CflViolation(ratio));
        }
        let cells = (self.y_extent / self.dy).round() as usize;
        if cells < 4 {
            return Err(Error::InvalidLattice("fewer than 4 cells".into()));
        }
        if self.boundary == Boundary::LargeDomain && self.y_extent < duration {
            return Err(Error::InvalidLattice(format!(
                "large-domain lattice needs y_extent >= run time ({} < {duration})",
                self.y_extent
            )));
        }
        Ok(cells)
    }
}

/// Snapshot of the lattice: scattered Φ and ∂tΦ on y ≥ 0 plus the mode.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeState {
    pub y: Vec<f64>,
    pub phi: Vec<C>,
    pub phi_dot: Vec<C>,
    pub mode: ModeState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProbeRecord {
    pub y: f64,
    /// Largest amplitude of the incoming characteristic ½(∂tΦ + ∂yΦ).
    pub incoming_max: f64,
    /// Largest amplitude of the outgoing characteristic ½(∂tΦ − ∂yΦ).
    pub outgoing_max: f64,
    /// ∫ dt energy flux −Re(conj(∂tΦ) ∂yΦ) through the probe, toward +y.
    pub energy_through: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LatticeRun {
    pub times: Vec<f64>,
    pub states: Vec<ModeState>,
    /// Scattered Φ at y = 0.
    pub phi0: Vec<C>,
    pub probe: ProbeRecord,
    pub final_state: LatticeState,
    pub dt: f64,
}

struct System<'a> {
    p: &'a MediumParams,
    g: &'a SwitchingProfile,
    drive: Option<&'a DriveMode>,
    k: f64,
    dy: f64,
    boundary: Boundary,
}

#[derive(Clone)]
struct Fields {
    x: [C; 4],
    phi: Vec<C>,
    v: Vec<C>,
}

impl Fields {
    fn zeros(n: usize) -> Self {
        Self { x: [C::new(0.0, 0.0); 4], phi: vec![C::new(0.0, 0.0); n], v: vec![C::new(0.0, 0.0); n] }
    }

    fn set_axpy(&mut self, base: &Fields, h: f64, d: &Fields) {
        for i in 0..4 {
            self.x[i] = base.x[i] + d.x[i] * h;
        }
        for ((o, b), k) in self.phi.iter_mut().zip(&base.phi).zip(&d.phi) {
            *o = b + k * h;
        }
        for ((o, b), k) in self.v.iter_mut().zip(&base.v).zip(&d.v) {
            *o = b + k * h;
        }
    }
}

impl System<'_> {
    /// Time derivative of the lattice state; `phi` holds ∂tΦ = V + δ(y)GΨ.
    fn deriv(&self, t: f64, s: &Fields, out: &mut Fields) {
        let n = s.phi.len();
        let inv2 = 1.0 / (self.dy * self.dy);
        let gt = self.g.value(t);
        out.phi[0] = s.v[0] + s.x[2] * (gt / self.dy);
        out.v[0] = (s.phi[1] - s.phi[0]) * (2.0 * inv2);
        for j in 1..n - 1 {
            out.phi[j] = s.v[j];
            out.v[j] = (s.phi[j + 1] - s.phi[j] * 2.0 + s.phi[j - 1]) * inv2;
        }
        match self.boundary {
            Boundary::LargeDomain => {
                out.phi[n - 1] = C::new(0.0, 0.0);
                out.v[n - 1] = C::new(0.0, 0.0);
            }
            Boundary::OutgoingAbsorbing => {
                out.phi[n - 1] = -(s.phi[n - 1] * 3.0 - s.phi[n - 2] * 4.0 + s.phi[n - 3]) / (2.0 * self.dy);
                out.v[n - 1] = C::new(0.0, 0.0);
            }
        }
        let (gc, w2) = (self.p.g, self.p.omega * self.p.omega);
        let x = &s.x;
        let drive = self.drive.map_or(C::new(0.0, 0.0), |d| d.phi_dot(t));
        out.x = [
            x[1] + x[2] * gc,
            -x[0] * (self.k * self.k),
            x[3],
            -x[2] * w2 - (x[1] + x[2] * gc) * gc - (drive + out.phi[0]) * gt,
        ];
    }
}

/// Evolve one k-mode coupled to the explicit environment lattice from
/// `initial.t` to `t_end`, with Φ at rest initially. Mode states are
/// recorded every `sample_every` time units (rounded to whole steps).
pub fn evolve_lattice_mode(
    p: &MediumParams,
    g: &SwitchingProfile,
    cfg: &LatticeConfig,
    initial: &ModeState,
    drive: Option<&DriveMode>,
    t_end: f64,
    sample_every: f64,
) -> Result<LatticeRun> {
    let duration = t_end - initial.t;
    if !(duration > 0.0) {
        return Err(Error::InvalidArgument("t_end must exceed the initial time".into()));
    }
    let cells = cfg.validate(duration)?;
    let n = cells + 1;
    let steps = (duration / cfg.dt).ceil() as usize;
    let dt = duration / steps as f64;
    let stride = ((sample_every / dt).round() as usize).max(1);
    let sys = System { p, g, drive, k: initial.k, dy: cfg.dy, boundary: cfg.boundary };
    let probe_j = ((cfg.probe.unwrap_or(0.75 * cfg.y_extent) / cfg.dy).round() as usize).clamp(1, n - 2);

    let mut s = Fields::zeros(n);
    s.x = initial.canonical(p.g);
    let mut k1 = Fields::zeros(n);
    let mut k2 = Fields::zeros(n);
    let mut k3 = Fields::zeros(n);
    let mut k4 = Fields::zeros(n);
    let mut tmp = Fields::zeros(n);

    let probe_values = |s: &Fields| {
        let dphi = (s.phi[probe_j + 1] - s.phi[probe_j - 1]) / (2.0 * cfg.dy);
        let phid = s.v[probe_j];
        (0.5 * (phid + dphi), 0.5 * (phid - dphi), -(phid.conj() * dphi).re)
    };
    let mut probe = ProbeRecord { y: probe_j as f64 * cfg.dy, incoming_max: 0.0, outgoing_max: 0.0, energy_through: 0.0 };
    let mut last_flux = probe_values(&s).2;

    let mut times = vec![initial.t];
    let mut states = vec![*initial];
    let mut phi0 = vec![s.phi[0]];
    for step in 1..=steps {
        let t = initial.t + (step - 1) as f64 * dt;
        sys.deriv(t, &s, &mut k1);
        tmp.set_axpy(&s, 0.5 * dt, &k1);
        sys.deriv(t + 0.5 * dt, &tmp, &mut k2);
        tmp.set_axpy(&s, 0.5 * dt, &k2);
        sys.deriv(t + 0.5 * dt, &tmp, &mut k3);
        tmp.set_axpy(&s, dt, &k3);
        sys.deriv(t + dt, &tmp, &mut k4);
        for i in 0..4 {
            s.x[i] += (k1.x[i] + (k2.x[i] + k3.x[i]) * 2.0 + k4.x[i]) * (dt / 6.0);
        }
        for j in 0..n {
            s.phi[j] += (k1.phi[j] + (k2.phi[j] + k3.phi[j]) * 2.0 + k4.phi[j]) * (dt / 6.0);
            s.v[j] += (k1.v[j] + (k2.v[j] + k3.v[j]) * 2.0 + k4.v[j]) * (dt / 6.0);
        }
        let t_new = initial.t + step as f64 * dt;
        if s.x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFiniteState { t: t_new });
        }
        let (inc, out, flux) = probe_values(&s);
        probe.incoming_max = probe.incoming_max.max(inc.norm());
        probe.outgoing_max = probe.outgoing_max.max(out.norm());
        probe.energy_through += 0.5 * dt * (flux + last_flux);
        last_flux = flux;
        if step % stride == 0 || step == steps {
            times.push(t_new);
            states.push(ModeState::from_canonical(initial.k, t_new, p.g, &s.x));
            phi0.push(s.phi[0]);
        }
    }

    if cfg.boundary == Boundary::OutgoingAbsorbing && probe.outgoing_max > 0.0 {
        let ratio = probe.incoming_max / probe.outgoing_max;
        if ratio > REFLECTION_THRESHOLD {
            return Err(Error::ReflectionDetected(ratio));
        }
    }

    let t_final = *times.last().unwrap();
    let mut phi_dot = s.v.clone();
    phi_dot[0] += s.x[2] * (g.value(t_final) / cfg.dy);
    let final_state = LatticeState {
        y: (0..n).map(|j| j as f64 * cfg.dy).collect(),
        phi: s.phi,
        phi_dot,
        mode: ModeState::from_canonical(initial.k, t_final, p.g, &s.x),
    };
    Ok(LatticeRun { times, states, phi0, probe, final_state, dt })
}

/// Incoming/outgoing amplitude ratio at the probe above which the absorbing
/// boundary is declared to reflect.
pub const REFLECTION_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EliminationReport {
    pub dy: f64,
    pub elimination: Elimination,
    /// Relative L2 distance between the Ψ trajectories.
    pub distance: f64,
    pub tol: f64,
    pub pass: bool,
    pub samples: usize,
}

/// Relative L2 distance between lattice and eliminated-ODE Ψ trajectories
/// for Ψ(t0) = 1 and everything else at rest.
pub fn compare_elimination(
    p: &MediumParams,
    g: &SwitchingProfile,
    k: f64,
    cfg: &LatticeConfig,
    t_span: (f64, f64),
    tol: f64,
    elimination: Elimination,
) -> Result<EliminationReport> {
    Ok(compare_elimination_traced(p, g, k, cfg, t_span, tol, elimination)?.0)
}

/// As [`compare_elimination`], also returning the lattice run and the ODE
/// reference sampled at the lattice output times.
pub fn compare_elimination_traced(
    p: &MediumParams,
    g: &SwitchingProfile,
    k: f64,
    cfg: &LatticeConfig,
    t_span: (f64, f64),
    tol: f64,
    elimination: Elimination,
) -> Result<(EliminationReport, LatticeRun, Vec<ModeState>)> {
    let one = C::new(1.0, 0.0);
    let zero = C::new(0.0, 0.0);
    let initial = ModeState { k, t: t_span.0, a: zero, a_dot: zero, psi: one, psi_dot: zero };
    let run = evolve_lattice_mode(p, g, cfg, &initial, None, t_span.1, 0.5)?;
    // The lattice starts with Φ at rest, so the source cell charges up with
    // G(t0) already on; the matching kick on Ψ̇ is −G(t0)²Ψ/2.
    let mut ode_initial = initial;
    let sign = elimination.sign();
    ode_initial.psi_dot -= initial.psi * (0.5 * sign * g.value(t_span.0).powi(2));
    let reference = integrate_mode_eliminated(p, g, &ode_initial, None, &run.times, 1e-11, elimination)?;
    let (mut num, mut den) = (0.0, 0.0);
    for (a, b) in run.states.iter().zip(&reference) {
        num += (a.psi - b.psi).norm_sqr();
        den += b.psi.norm_sqr();
    }
    let distance = (num / den).sqrt();
    let report = EliminationReport { dy: cfg.dy, elimination, distance, tol, pass: distance < tol, samples: run.times.len() };
    Ok((report, run, reference))
}

/// Distances on a refinement ladder in dy (fixed dt/dy) and the observed
/// convergence orders between consecutive levels.
pub fn elimination_ladder(
    p: &MediumParams,
    g: &SwitchingProfile,
    k: f64,
    base: &LatticeConfig,
    dys: &[f64],
    t_span: (f64, f64),
    tol: f64,
) -> Result<(Vec<EliminationReport>, Vec<f64>)> {
    let cfl = base.dt / base.dy;
    let reports = dys
        .iter()
        .map(|&dy| {
            let cfg = LatticeConfig { dy, dt: cfl * dy, ..*base };
            compare_elimination(p, g, k, &cfg, t_span, tol, Elimination::Retarded)
        })
        .collect::<Result<Vec<_>>>()?;
    let orders = reports
        .windows(2)
        .map(|w| (w[0].distance / w[1].distance).ln() / (w[0].dy / w[1].dy).ln())
        .collect();
    Ok((reports, orders))
}
