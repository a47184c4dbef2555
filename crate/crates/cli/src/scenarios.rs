//! One function per scenario. Each writes its data files through [`Output`]
//! and returns headline numbers that also appear in those files.

use rayon::prelude::*;
use serde_json::json;

use hopfield_core::correlations::{
    auto_correlation_first_order, cross_correlation_map, locate_peaks, ridge_speeds, CorrelationCutoffs, CorrelationGrid,
};
use hopfield_core::exact::{extract_bogoliubov, first_order_deviation, unitarity_defect, Elimination, ExactOptions, KappaGrid};
use hopfield_core::lattice::{compare_elimination, compare_elimination_traced, Boundary, LatticeConfig};
use hopfield_core::linear_response::{
    band_frequencies, complex_wavenumber, damping_info, hopfield_diagonalize, low_frequency_slope, permittivity, symplectic_form, Band,
};
use hopfield_core::perturbative::{
    cutoff_scan, fit_slope, lorentzian_yield_closed_form, matter_weight, spectrum_first_order, sudden_switch_cutoff_scan, total_yield,
    KappaQuadrature, YieldOptions,
};
use hopfield_core::{Error, SwitchingProfile};

use crate::config::{RunConfig, Scenario};
use crate::output::{num, Output};
use crate::{CliError, Outcome};

type Res = Result<Outcome, CliError>;

pub fn dispatch(cfg: &RunConfig, out: &mut Output) -> Res {
    match cfg.scenario {
        Scenario::Dispersion => dispersion(cfg, out),
        Scenario::Bands => bands(cfg, out),
        Scenario::Spectrum => spectrum(cfg, out),
        Scenario::YieldSweep => yield_sweep(cfg, out),
        Scenario::ExactVsPerturbative => exact_vs_perturbative(cfg, out),
        Scenario::CorrelationMap => correlation(cfg, out),
        Scenario::SuddenSwitch => sudden_switch(cfg, out),
        Scenario::OracleCompare => oracle_compare(cfg, out),
    }
}

fn medium_meta(cfg: &RunConfig) -> Vec<(&'static str, String)> {
    vec![("scenario", cfg.scenario.to_string()), ("omega", num(cfg.medium.omega)), ("g", num(cfg.medium.g)), ("n", num(cfg.medium.n()))]
}

fn profile_meta(meta: &mut Vec<(&'static str, String)>, g: &SwitchingProfile) {
    let desc = match g {
        SwitchingProfile::Lorentzian { g0, tau } => format!("lorentzian g0={g0} tau={tau}"),
        SwitchingProfile::Gaussian { g0, tau } => format!("gaussian g0={g0} tau={tau}"),
        SwitchingProfile::Step { g0 } => format!("step g0={g0}"),
        SwitchingProfile::ConstantOnWindow { g0, t_on, t_off, ramp } => {
            format!("constant-on-window g0={g0} t_on={t_on} t_off={t_off} ramp={ramp}")
        }
        SwitchingProfile::Sampled(s) => format!("sampled points={}", s.times().len()),
    };
    meta.push(("profile", desc));
}

fn band_of(cfg: &RunConfig) -> Band {
    match cfg.raw.numerics.band.as_deref() {
        Some("plus") => Band::Plus,
        _ => Band::Minus,
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

fn dispersion(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let g0 = cfg.g0.expect("validated");
    let nm = &cfg.raw.numerics;
    let omega_max = nm.omega_max.unwrap_or(5.0 * p.omega);
    let points = nm.points.unwrap_or(1000);
    // Midpoint grid: never hits ω = 0 and rarely the lossless pole.
    let grid: Vec<f64> = (0..points).map(|j| omega_max * (j as f64 + 0.5) / points as f64).collect();
    let mut rows = Vec::with_capacity(points);
    let mut peak = (f64::NAN, f64::NEG_INFINITY);
    for &w in &grid {
        let eps = permittivity(p, g0, w)?.value;
        let k = complex_wavenumber(p, g0, w)?;
        if eps.im > peak.1 {
            peak = (w, eps.im);
        }
        rows.push(vec![num(w), num(eps.re), num(eps.im), num(k.re), num(k.im), num(k.im / w)]);
    }
    let mut meta = medium_meta(cfg);
    meta.push(("G0", num(g0)));
    meta.push(("grid", format!("omega_j = {omega_max}*(j+1/2)/{points}")));
    out.csv("dispersion.csv", &meta, &["omega", "eps_re", "eps_im", "k_re", "k_im", "im_sqrt_eps"], &rows)?;

    let mut o = Outcome::default();
    let info = damping_info(p, g0);
    o.set("eps_static", permittivity(p, g0, 0.0)?.value.re);
    o.set("n_squared", p.n() * p.n());
    o.set("eps_at_omega_max", permittivity(p, g0, omega_max)?.value.re);
    o.set("im_eps_peak_omega", peak.0);
    o.set("omega_spacing", omega_max / points as f64);
    o.set("gamma", info.gamma);
    o.set("im_sqrt_eps_slope_closed_form", info.im_sqrt_eps_slope);
    if g0 > 0.0 {
        let slope = low_frequency_slope(p, g0, 0.01 * p.omega, 3)?;
        o.set("im_sqrt_eps_slope_extrapolated", slope);
    }
    if g0 * g0 >= 4.0 * p.omega {
        o.warnings.push(format!("G0^2 = {} is not below 4*Omega; the medium is overdamped", g0 * g0));
    }
    Ok(o)
}

fn bands(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let nm = &cfg.raw.numerics;
    let ks = linspace(nm.k_min.unwrap_or(0.0), nm.k_max.unwrap_or(5.0 * p.omega), nm.points.unwrap_or(201));
    let j = symplectic_form();
    let rows: Vec<Result<(Vec<String>, f64), CliError>> = ks
        .par_iter()
        .map(|&k| {
            let (wm, wp) = band_frequencies(p, k);
            if k == 0.0 {
                // Degenerate photon branch; no basis to check.
                let nan = num(f64::NAN);
                let wplus = matter_weight(p, k, Band::Plus)?;
                return Ok((vec![num(k), num(wm), num(wp), nan.clone(), num(wplus), nan], 0.0));
            }
            let basis = hopfield_diagonalize(p, k)?;
            let residual = (basis.s * j * basis.s.transpose() - j).abs().max();
            let wmin = matter_weight(p, k, Band::Minus)?;
            let wplus = matter_weight(p, k, Band::Plus)?;
            Ok((vec![num(k), num(wm), num(wp), num(wmin), num(wplus), num(residual)], residual))
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>, _>>()?;
    let max_residual = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    let rows: Vec<Vec<String>> = rows.into_iter().map(|r| r.0).collect();
    out.csv(
        "bands.csv",
        &medium_meta(cfg),
        &["k", "omega_minus", "omega_plus", "psi_weight_minus", "psi_weight_plus", "symplectic_residual"],
        &rows,
    )?;
    let mut o = Outcome::default();
    let (wm0, wp0) = band_frequencies(p, 0.0);
    o.set("omega_minus_0", wm0);
    o.set("omega_plus_0", wp0);
    o.set("n", p.n());
    o.set("gap", wp0 - p.omega);
    o.set("max_symplectic_residual", max_residual);
    Ok(o)
}

fn kappa_quadrature(cfg: &RunConfig) -> KappaQuadrature {
    let nm = &cfg.raw.numerics;
    let mut q = KappaQuadrature { cutoff: nm.kappa_cutoff, ..KappaQuadrature::default() };
    if let Some(t) = nm.rel_tol {
        q.rel_tol = t;
    }
    q
}

fn spectrum(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let g = cfg.profile();
    let nm = &cfg.raw.numerics;
    let ks = linspace(nm.k_min.unwrap_or(0.05 * p.omega), nm.k_max.unwrap_or(3.0 * p.omega), nm.points.unwrap_or(60));
    let s = spectrum_first_order(p, g, &ks, &kappa_quadrature(cfg))?;
    let rows: Vec<Vec<String>> = (0..ks.len())
        .map(|i| {
            vec![
                num(s.k[i]),
                num(s.n_minus[i]),
                num(s.n_plus[i]),
                num(s.error_minus[i]),
                num(s.error_plus[i]),
                s.converged[i].to_string(),
            ]
        })
        .collect();
    let mut meta = medium_meta(cfg);
    profile_meta(&mut meta, g);
    meta.push(("kappa_cutoff", num(s.kappa_cutoff)));
    out.csv("spectrum.csv", &meta, &["k", "n_minus", "n_plus", "error_minus", "error_plus", "converged"], &rows)?;
    let mut o = Outcome::default();
    let imax = (0..ks.len()).max_by(|&a, &b| s.n_minus[a].total_cmp(&s.n_minus[b])).unwrap_or(0);
    o.set("kappa_cutoff", s.kappa_cutoff);
    o.set("n_minus_peak_k", s.k[imax]);
    o.set("n_minus_peak", s.n_minus[imax]);
    o.set("n_plus_max", s.n_plus.iter().fold(0.0f64, |m, &v| m.max(v)));
    o.set("unconverged_points", s.converged.iter().filter(|&&c| !c).count());
    o.convergence.insert("spectrum".into(), s.all_converged());
    Ok(o)
}

fn yield_sweep(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let base = cfg.profile();
    let nm = &cfg.raw.numerics;
    let opts = YieldOptions {
        linearize_lower_band: nm.linearize_lower_band.unwrap_or(true),
        k_cutoff: nm.k_cutoff,
        kappa: kappa_quadrature(cfg),
        rel_tol: nm.tol.unwrap_or(1e-8),
    };
    let lorentzian = matches!(base, SwitchingProfile::Lorentzian { .. });
    let results: Vec<Result<_, CliError>> = cfg
        .sweep
        .par_iter()
        .map(|pt| {
            let g = pt.apply(base);
            let y = total_yield(p, &g, &opts)?;
            let closed = match (lorentzian, pt.tau) {
                (true, Some(tau)) => Some(lorentzian_yield_closed_form(p, pt.g0, tau)),
                _ => None,
            };
            Ok((*pt, y, closed))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut o = Outcome::default();
    let mut rows = Vec::new();
    let mut ratios = Vec::new();
    for (pt, y, closed) in &results {
        let cf = closed.as_ref().map(|c| c.n_over_l);
        let ratio = cf.map(|c| y.n_over_l / c);
        if let Some(r) = ratio {
            if r.is_finite() {
                ratios.push(r);
            }
        }
        if let Some(c) = closed {
            o.warnings.extend(c.warnings.iter().cloned());
        }
        rows.push(vec![
            num(pt.g0),
            pt.tau.map(num).unwrap_or_default(),
            num(y.n_over_l),
            cf.map(num).unwrap_or_default(),
            ratio.map(num).unwrap_or_default(),
            num(y.error_estimate),
            y.converged.to_string(),
        ]);
        o.warnings.extend(y.warnings.iter().cloned());
    }
    let mut meta = medium_meta(cfg);
    profile_meta(&mut meta, base);
    meta.push(("linearize_lower_band", opts.linearize_lower_band.to_string()));
    out.csv("yield_sweep.csv", &meta, &["g0", "tau", "n_over_l", "closed_form", "ratio", "error_estimate", "converged"], &rows)?;

    o.set("points", results.len());
    if !ratios.is_empty() {
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let (lo, hi) = ratios.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &r| (a.min(r), b.max(r)));
        o.set("c0_mean", mean);
        o.set("c0_spread", (hi - lo) / mean);
    }
    // Scaling exponents from log-log fits along each sweep axis, averaged
    // over the lines of the grid.
    let exponent = |group: &dyn Fn(&crate::config::SweepPoint) -> u64, x: &dyn Fn(&crate::config::SweepPoint) -> Option<f64>| {
        let mut lines: std::collections::BTreeMap<u64, Vec<(f64, f64)>> = Default::default();
        for (pt, y, _) in &results {
            if let Some(xv) = x(pt) {
                if xv > 0.0 && y.n_over_l > 0.0 {
                    lines.entry(group(pt)).or_default().push((xv.ln(), y.n_over_l.ln()));
                }
            }
        }
        let fits: Vec<f64> = lines.values().filter(|l| l.len() >= 2).map(|l| fit_slope(l)).collect();
        (!fits.is_empty()).then(|| fits.iter().sum::<f64>() / fits.len() as f64)
    };
    if let Some(e) = exponent(&|pt| pt.tau.unwrap_or(0.0).to_bits(), &|pt| Some(pt.g0)) {
        o.set("g0_exponent", e);
    }
    if let Some(e) = exponent(&|pt| pt.g0.to_bits(), &|pt| pt.tau) {
        o.set("tau_exponent", e);
    }
    o.convergence.insert("yield".into(), results.iter().all(|r| r.1.converged));
    Ok(o)
}

fn exact_options(cfg: &RunConfig) -> ExactOptions {
    let nm = &cfg.raw.numerics;
    let mut opts = ExactOptions::default();
    if let Some(t) = nm.tol {
        opts.tol = t;
    }
    opts.grid = KappaGrid { cutoff: nm.kappa_cutoff, panel: nm.kappa_panel, ..opts.grid };
    opts
}

fn exact_vs_perturbative(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let base = cfg.profile();
    let k = cfg.raw.numerics.k.unwrap_or(0.5 * p.omega);
    let band = band_of(cfg);
    let opts = exact_options(cfg);
    let results: Vec<Result<_, CliError>> = cfg
        .sweep
        .par_iter()
        .map(|pt| {
            let g = pt.apply(base);
            let b = extract_bogoliubov(p, &g, k, &opts)?;
            let dev = first_order_deviation(p, &g, &b, band)?;
            Ok((*pt, g, b, dev))
        })
        .collect();
    let results = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let mut o = Outcome::default();
    let mut rows = Vec::new();
    let mut fit = Vec::new();
    for (i, (pt, g, b, dev)) in results.iter().enumerate() {
        let defect = unitarity_defect(b);
        let beta_rows: Vec<Vec<String>> = b
            .kappa
            .iter()
            .enumerate()
            .map(|(j, &kap)| -> Result<Vec<String>, CliError> {
                let fo = hopfield_core::perturbative::first_order_coeffs(p, g, k, kap, band)?.beta;
                let ex = b.beta_env[band.index()][j];
                Ok(vec![num(kap), num(b.kappa_weights[j]), num(ex.re), num(ex.im), num(fo.re), num(fo.im), num(ex.norm()), num(fo.norm())])
            })
            .collect::<Result<_, _>>()?;
        let mut meta = medium_meta(cfg);
        profile_meta(&mut meta, g);
        meta.push(("k", num(k)));
        meta.push(("band", band.label().into()));
        out.csv(
            &format!("beta_{i}.csv"),
            &meta,
            &["kappa", "weight", "beta_exact_re", "beta_exact_im", "beta_first_re", "beta_first_im", "beta_exact_abs", "beta_first_abs"],
            &beta_rows,
        )?;
        out.json(&format!("bogoliubov_{i}.json"), &b.to_json())?;
        rows.push(vec![
            num(pt.g0),
            pt.tau.map(num).unwrap_or_default(),
            num(dev.relative_l2),
            num(dev.max_relative),
            num(defect),
            num(dev.n_exact),
            num(dev.n_first_order),
            num(b.kappa_cutoff),
            b.kappa.len().to_string(),
        ]);
        if pt.g0 > 0.0 && dev.relative_l2 > 0.0 {
            fit.push((pt.g0.ln(), dev.relative_l2.ln()));
        }
    }
    let mut meta = medium_meta(cfg);
    profile_meta(&mut meta, base);
    meta.push(("k", num(k)));
    meta.push(("band", band.label().into()));
    out.csv(
        "exact_vs_perturbative.csv",
        &meta,
        &["g0", "tau", "relative_l2", "max_relative", "unitarity_defect", "n_exact", "n_first_order", "kappa_cutoff", "kappa_nodes"],
        &rows,
    )?;
    let summary: Vec<_> = results
        .iter()
        .map(|(pt, _, b, dev)| {
            json!({"g0": pt.g0, "tau": pt.tau, "relative_l2": dev.relative_l2, "max_relative": dev.max_relative, "unitarity_defect": unitarity_defect(b)})
        })
        .collect();
    o.set("k", k);
    o.set("band", band.label());
    o.set("points", summary);
    o.set("max_unitarity_defect", results.iter().fold(0.0f64, |m, r| m.max(unitarity_defect(&r.2))));
    if fit.len() >= 2 {
        o.set("deviation_exponent", fit_slope(&fit));
    }
    Ok(o)
}

fn correlation(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let g = cfg.profile();
    let nm = &cfg.raw.numerics;
    let t = nm.t.expect("validated");
    let ts = g.time_scale().unwrap_or(1.0);
    // At least 8 cells per pulse width.
    let spacing = nm.spacing.unwrap_or(ts / 8.0);
    let mut cutoffs = CorrelationCutoffs::default();
    if let Some(ks) = nm.k_soft {
        cutoffs.k_soft = ks;
    }
    let grid = CorrelationGrid::covering(p, t, spacing)?;
    let map = cross_correlation_map(p, g, t, &grid, &cutoffs)?;
    let rows: Vec<Vec<String>> = map.rows().map(|r| r.iter().map(|&v| num(v)).collect()).collect();
    let mut meta = medium_meta(cfg);
    profile_meta(&mut meta, g);
    meta.push(("correlator", "phi-a".into()));
    meta.push(("t", num(t)));
    meta.push(("spacing", num(spacing)));
    meta.push(("k_soft", num(cutoffs.k_soft)));
    meta.push(("k_nodes", map.k_nodes.to_string()));
    out.csv("correlation_map.csv", &meta, &["dx", "y", "re", "im", "abs"], &rows)?;

    let peaks = locate_peaks(&map)?;
    out.json("peaks.json", &json!({"t": t, "expected": [t / p.n(), t], "peaks": peaks}))?;
    let mut o = Outcome::default();
    let cross_peak = peaks.iter().fold(0.0f64, |m, q| m.max(q.magnitude));
    o.set("t", t);
    o.set("expected_peak", [t / p.n(), t]);
    o.set("peaks", &peaks);
    o.set("cross_peak_magnitude", cross_peak);

    // The auto pieces are checked on a coarser grid through the same region.
    let stride = |v: &[f64]| v.iter().step_by(4).copied().collect::<Vec<_>>();
    let coarse = CorrelationGrid::new(stride(&grid.dx), stride(&grid.y))?;
    let (aa, phiphi) = auto_correlation_first_order(p, g, t, &coarse, &cutoffs)?;
    o.set("aa_ratio", aa.max_abs() / cross_peak);
    o.set("phiphi_ratio", phiphi.max_abs() / cross_peak);
    let mut auto_rows: Vec<Vec<String>> = aa.rows().map(|r| std::iter::once("aa".to_string()).chain(r.iter().map(|&v| num(v))).collect()).collect();
    auto_rows.extend(phiphi.rows().map(|r| std::iter::once("phiphi".to_string()).chain(r.iter().map(|&v| num(v))).collect()));
    out.csv("auto_correlations.csv", &meta, &["correlator", "dx", "y", "re", "im", "abs"], &auto_rows)?;

    if let Some(t2) = nm.t2 {
        let r = ridge_speeds(p, g, t, t2, spacing, &cutoffs)?;
        o.set("medium_speed", r.medium_speed);
        o.set("environment_speed", r.environment_speed);
        o.set("expected_medium_speed", 1.0 / p.n());
        out.json("ridge_speeds.json", &r)?;
    }
    Ok(o)
}

fn doubling_cutoffs(lo: f64, hi: f64) -> Vec<f64> {
    let mut v = vec![lo];
    while v[v.len() - 1] * 2.0 <= hi * (1.0 + 1e-12) {
        let next = v[v.len() - 1] * 2.0;
        v.push(next);
    }
    v
}

fn sudden_switch(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let g0 = cfg.profile().peak();
    let nm = &cfg.raw.numerics;
    let k = nm.k.unwrap_or(0.5 * p.omega);
    let band = band_of(cfg);
    let lambdas = doubling_cutoffs(nm.lambda_min.unwrap_or(p.omega), nm.lambda_max.unwrap_or(128.0 * p.omega));
    if lambdas.len() < 2 {
        return Err(Error::InvalidArgument("lambda range must span at least one doubling".into()).into());
    }
    let step = sudden_switch_cutoff_scan(p, g0, k, band, &lambdas)?;
    let reference = nm.reference_tau.map(|tau| cutoff_scan(p, &SwitchingProfile::Lorentzian { g0, tau }, k, band, &lambdas)).transpose()?;
    let increase = |n: &[f64]| n.windows(2).map(|w| (w[1] - w[0]) / w[0]).collect::<Vec<f64>>();
    let step_inc = increase(&step.n);
    let rows: Vec<Vec<String>> = lambdas
        .iter()
        .enumerate()
        .map(|(i, &l)| {
            let mut r = vec![num(l), num(step.n[i]), if i > 0 { num(step_inc[i - 1]) } else { String::new() }];
            if let Some(rf) = &reference {
                r.push(num(rf.n[i]));
            }
            r
        })
        .collect();
    let mut columns = vec!["lambda", "n_step", "step_increase"];
    if reference.is_some() {
        columns.push("n_lorentzian");
    }
    let mut meta = medium_meta(cfg);
    meta.push(("g0", num(g0)));
    meta.push(("k", num(k)));
    meta.push(("band", band.label().into()));
    if let Some(tau) = nm.reference_tau {
        meta.push(("reference_tau", num(tau)));
    }
    out.csv("sudden_switch.csv", &meta, &columns, &rows)?;

    let mut o = Outcome::default();
    o.set("k", k);
    o.set("decades", (lambdas[lambdas.len() - 1] / lambdas[0]).log10());
    o.set("min_increase_per_doubling", step_inc.iter().fold(f64::INFINITY, |m, &v| m.min(v)));
    o.set("monotone", step.n.windows(2).all(|w| w[1] > w[0]));
    // dn/dlnΛ: the logarithmic growth rate per unit ln Λ.
    let log_pts: Vec<(f64, f64)> = lambdas.iter().zip(&step.n).map(|(l, n)| (l.ln(), *n)).collect();
    o.set("log_growth_rate", fit_slope(&log_pts));
    o.set("growth_exponent", step.growth_exponent);
    if let Some(rf) = &reference {
        let inc = increase(&rf.n);
        o.set("reference_last_increase", inc[inc.len() - 1].abs());
    }
    Ok(o)
}

fn oracle_compare(cfg: &RunConfig, out: &mut Output) -> Res {
    let p = &cfg.medium;
    let g = cfg.profile();
    let nm = &cfg.raw.numerics;
    let ts = g.time_scale().expect("validated");
    let k = nm.k.unwrap_or(0.5 * p.omega);
    let dys = nm.dy.clone().unwrap_or_else(|| vec![ts / 50.0, ts / 100.0, ts / 200.0]);
    let cfl = nm.cfl.unwrap_or(0.5);
    let t_span = nm.t_span.map(|[a, b]| (a, b)).unwrap_or((-10.0 * ts, 10.0 * ts));
    let boundary = match nm.boundary.as_deref() {
        Some("large-domain") => Boundary::LargeDomain,
        _ => Boundary::OutgoingAbsorbing,
    };
    let y_extent = nm.y_extent.unwrap_or(match boundary {
        Boundary::LargeDomain => t_span.1 - t_span.0 + 1.0,
        Boundary::OutgoingAbsorbing => 2.0 * ts,
    });
    let tol = nm.tol.unwrap_or(1e-4);
    let lattice = |dy: f64| LatticeConfig::new(y_extent, dy, cfl, boundary);
    let finest = dys.iter().copied().fold(f64::INFINITY, f64::min);
    let coarsest = dys.iter().copied().fold(0.0, f64::max);

    // Levels are independent runs; collect keeps the configured order.
    let levels: Vec<Result<_, CliError>> = dys
        .par_iter()
        .map(|&dy| {
            if dy == finest {
                let (r, run, reference) = compare_elimination_traced(p, g, k, &lattice(dy), t_span, tol, Elimination::Retarded)?;
                Ok((r, Some((run, reference))))
            } else {
                Ok((compare_elimination(p, g, k, &lattice(dy), t_span, tol, Elimination::Retarded)?, None))
            }
        })
        .collect();
    let levels = levels.into_iter().collect::<Result<Vec<_>, _>>()?;
    let control = compare_elimination(p, g, k, &lattice(coarsest), t_span, tol, Elimination::Advanced)?;

    let orders: Vec<f64> = levels
        .windows(2)
        .map(|w| (w[0].0.distance / w[1].0.distance).ln() / (w[0].0.dy / w[1].0.dy).ln())
        .collect();
    let rows: Vec<Vec<String>> = levels
        .iter()
        .enumerate()
        .map(|(i, (r, _))| vec![num(r.dy), num(r.distance), if i > 0 { num(orders[i - 1]) } else { String::new() }])
        .collect();
    let mut meta = medium_meta(cfg);
    profile_meta(&mut meta, g);
    meta.push(("k", num(k)));
    meta.push(("cfl", num(cfl)));
    let label = match boundary {
        Boundary::LargeDomain => "large-domain",
        Boundary::OutgoingAbsorbing => "outgoing-absorbing",
    };
    meta.push(("boundary", label.to_string()));
    meta.push(("y_extent", num(y_extent)));
    meta.push(("t_span", format!("{} {}", t_span.0, t_span.1)));
    meta.push(("advanced_control_distance", num(control.distance)));
    out.csv("oracle_compare.csv", &meta, &["dy", "distance", "order"], &rows)?;

    if let Some((_, Some((run, reference)))) = levels.iter().find(|l| l.1.is_some()) {
        let traj: Vec<Vec<String>> = run
            .times
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let s = &run.states[i];
                let r = &reference[i];
                vec![
                    num(t),
                    num(s.psi.re),
                    num(s.psi.im),
                    num(s.a.re),
                    num(s.a.im),
                    num(run.phi0[i].re),
                    num(run.phi0[i].im),
                    num(r.psi.re),
                    num(r.psi.im),
                ]
            })
            .collect();
        let mut m = meta.clone();
        m.push(("dy", num(finest)));
        out.csv(
            "trajectory.csv",
            &m,
            &["t", "psi_re", "psi_im", "a_re", "a_im", "phi0_re", "phi0_im", "psi_ode_re", "psi_ode_im"],
            &traj,
        )?;
    }

    let mut o = Outcome::default();
    let best = levels.iter().find(|l| l.0.dy == finest).expect("finest level").0.distance;
    o.set("finest_dy", finest);
    o.set("finest_distance", best);
    o.set("orders", &orders);
    o.set("advanced_control_distance", control.distance);
    o.set("tol", tol);
    o.set("pass", best < tol);
    Ok(o)
}
