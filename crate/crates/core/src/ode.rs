//! Adaptive Dormand–Prince 5(4) integrator for small complex systems.

use num_complex::Complex64;

use crate::error::{Error, Result};

type C = Complex64;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Initial step; chosen from the span when `None`.
    pub h0: Option<f64>,
    /// Upper bound on the step size.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Dopri5Options {
    pub fn with_tol(tol: f64) -> Self {
        Self { rtol: tol, atol: tol, h0: None, h_max: f64::INFINITY, max_steps: 50_000_000 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Dopri5Stats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

fn comb<const N: usize>(y: &[C; N], h: f64, terms: &[(f64, &[C; N])]) -> [C; N] {
    let mut out = *y;
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = C::new(0.0, 0.0);
        for (c, k) in terms {
            acc += k[i] * *c;
        }
        *o += acc * h;
    }
    out
}

/// Integrate y' = f(t, y) from `t0` to the last entry of `outputs`, landing
/// exactly on every output time (which must be increasing and ≥ t0) and
/// returning the state there.
pub fn integrate<const N: usize>(
    mut f: impl FnMut(f64, &[C; N]) -> [C; N],
    t0: f64,
    y0: [C; N],
    outputs: &[f64],
    opts: &Dopri5Options,
) -> Result<(Vec<[C; N]>, Dopri5Stats)> {
    let mut stats = Dopri5Stats::default();
    let mut result = Vec::with_capacity(outputs.len());
    let Some(&t_end) = outputs.last() else { return Ok((result, stats)) };
    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(t, &y);
    stats.evaluations += 1;
    let span = (t_end - t0).abs().max(f64::MIN_POSITIVE);
    let mut h = opts.h0.unwrap_or(span * 1e-3).min(opts.h_max);
    let mut next_out = 0;
    while next_out < outputs.len() && outputs[next_out] <= t {
        result.push(y);
        next_out += 1;
    }
    while next_out < outputs.len() {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(Error::StepSizeUnderflow { t });
        }
        let target = outputs[next_out];
        let mut step = h.min(target - t);
        let hits = step >= target - t;
        if hits {
            step = target - t;
        }
        if step < 1e-14 * t.abs().max(1.0) && !hits {
            return Err(Error::StepSizeUnderflow { t });
        }
        let k2 = f(t + C2 * step, &comb(&y, step, &[(A21, &k1)]));
        let k3 = f(t + C3 * step, &comb(&y, step, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(t + C4 * step, &comb(&y, step, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(t + C5 * step, &comb(&y, step, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let k6 = f(t + step, &comb(&y, step, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]));
        let y_new = comb(&y, step, &[(B1, &k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)]);
        let k7 = f(t + step, &y_new);
        stats.evaluations += 6;

        let mut err_sq = 0.0;
        for i in 0..N {
            let e = (k1[i] * E1 + k3[i] * E3 + k4[i] * E4 + k5[i] * E5 + k6[i] * E6 + k7[i] * E7) * step;
            let scale = opts.atol + opts.rtol * y[i].norm().max(y_new[i].norm());
            err_sq += (e.norm() / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if !err.is_finite() || y_new.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            if step < 1e-14 * t.abs().max(1.0) {
                return Err(Error::NonFiniteState { t });
            }
            stats.rejected += 1;
            h = step * 0.2;
            continue;
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        if err <= 1.0 {
            stats.accepted += 1;
            t = if hits { target } else { t + step };
            y = y_new;
            k1 = k7;
            // Keep the pre-clip step so landing on an output does not shrink it.
            h = (if hits { h.max(step) } else { step } * factor).min(opts.h_max);
            while next_out < outputs.len() && outputs[next_out] <= t {
                result.push(y);
                next_out += 1;
            }
        } else {
            stats.rejected += 1;
            h = step * factor.min(1.0);
        }
    }
    Ok((result, stats))
}
