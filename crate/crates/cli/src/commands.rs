use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use serde_json::{json, Value};

use ptchain::classify::{count_special_states, SpecialStateCensus};
use ptchain::exceptional::{find_exceptional_points, EpSearch, DEFAULT_ETA_RANGE, DEFAULT_GRID};
use ptchain::spectral::{check_spectrum, solve_spectrum, SolverOptions, Spectrum};
use ptchain::transport::{
    default_dt, evolve_with, flux_profile, max_continuity_residual, transport_report, WaveState, DEFAULT_AMPLITUDE_TOL,
};
use ptchain::ChainConfig;

use crate::args::{Flags, Format, Initial, Kind};
use crate::error::CliError;
use crate::output::{num, render_json, Header, Table};

/// Runs one subcommand and returns the rendered file contents.
pub fn run(kind: Kind, flags: &Flags, args: &[String]) -> Result<String, CliError> {
    match kind {
        Kind::Spectrum => spectrum(flags, args),
        Kind::Transport => transport(flags, args),
        Kind::Classify => classify(flags, args),
        Kind::Census => census(flags, args),
        Kind::Ep => ep(flags, args),
        Kind::Evolve => evolve(flags, args),
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn require_n(flags: &Flags) -> Result<usize, CliError> {
    flags.n.ok_or_else(|| usage("--N is required"))
}

fn hopping(flags: &Flags) -> f64 {
    flags.t.unwrap_or(1.0)
}

fn single_k(flags: &Flags) -> Result<usize, CliError> {
    if flags.k_range.is_some() {
        return Err(usage("this command takes a single --k, not --k-range"));
    }
    flags.k.ok_or_else(|| usage("--k is required"))
}

/// `--k`, `--k-range`, or every contact position `1..=N/2`.
fn k_list(flags: &Flags, n: usize) -> Result<Vec<usize>, CliError> {
    let ks: Vec<usize> = match (flags.k, flags.k_range) {
        (Some(k), _) => vec![k],
        (None, Some(r)) => (r.min..=r.max).collect(),
        (None, None) => (1..=n / 2).collect(),
    };
    if let Some(&k) = ks.iter().find(|&&k| k < 1 || k > n / 2) {
        return Err(usage(format!("k = {k} outside 1..={} for N = {n}", n / 2)));
    }
    Ok(ks)
}

fn eta_values(flags: &Flags) -> Result<Vec<f64>, CliError> {
    match (flags.eta, flags.eta_range) {
        (Some(eta), _) => Ok(vec![eta]),
        (None, Some(r)) => Ok(r.values()),
        (None, None) => Err(usage("--eta or --eta-range is required")),
    }
}

fn eta_setting(flags: &Flags) -> Value {
    match (flags.eta, flags.eta_range) {
        (Some(eta), _) => json!({ "eta": eta }),
        (None, Some(r)) => json!({ "eta-range": format!("{}:{}:{}", num(r.min), num(r.max), r.steps) }),
        (None, None) => json!({}),
    }
}

fn solver_options(flags: &Flags) -> SolverOptions {
    let mut opts = SolverOptions::default();
    if let Some(tol) = flags.tol_secular {
        opts.secular_tol = tol;
    }
    if let Some(tol) = flags.tol_eigen {
        opts.eigen_tol = tol;
    }
    opts
}

fn format_or(flags: &Flags, default: Format) -> Format {
    flags.format.unwrap_or(default)
}

fn merge(mut a: Value, b: Value) -> Value {
    if let (Some(a), Value::Object(b)) = (a.as_object_mut(), b) {
        a.extend(b);
    }
    a
}

fn sweep_settings(flags: &Flags, n: usize, k: usize, opts: &SolverOptions) -> Value {
    merge(
        json!({
            "N": n,
            "k": k,
            "t": hopping(flags),
            "tol-secular": opts.secular_tol,
            "tol-eigen": opts.eigen_tol,
        }),
        eta_setting(flags),
    )
}

/// Solves every η of the sweep in parallel; results keep sweep order.
fn solve_sweep(n: usize, k: usize, t: f64, etas: &[f64], opts: &SolverOptions) -> Result<Vec<Spectrum>, CliError> {
    etas.par_iter()
        .map(|&eta| {
            let cfg = ChainConfig::new(n, k, t, eta)?;
            let spec = solve_spectrum(&cfg, opts)?;
            check_spectrum(&spec, opts)?;
            Ok(spec)
        })
        .collect()
}

/// Index of the conjugate partner of each pair.
fn partners(spec: &Spectrum) -> Vec<usize> {
    let mut p: Vec<usize> = (0..spec.pairs.len()).collect();
    for &(i, j) in &spec.conjugate_pairing {
        p[i] = j;
        p[j] = i;
    }
    p
}

fn spectrum(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let k = single_k(flags)?;
    let etas = eta_values(flags)?;
    let opts = solver_options(flags);
    let format = format_or(flags, Format::Csv);
    if flags.vectors && format == Format::Csv {
        return Err(usage("--vectors needs --format json"));
    }
    let spectra = solve_sweep(n, k, hopping(flags), &etas, &opts)?;
    let header = Header::new(args, sweep_settings(flags, n, k, &opts));

    match format {
        Format::Csv => {
            let mut table = Table::new(&[
                "eta", "index", "re_E", "im_E", "re_theta", "im_theta", "tag", "secular_residual",
            ]);
            for (eta, spec) in etas.iter().zip(&spectra) {
                for (i, p) in spec.pairs.iter().enumerate() {
                    table.push(vec![
                        num(*eta),
                        i.to_string(),
                        num(p.energy.re),
                        num(p.energy.im),
                        num(p.theta.re),
                        num(p.theta.im),
                        p.tag.as_str().into(),
                        num(p.residuals.secular),
                    ]);
                }
            }
            Ok(table.render(&header))
        }
        Format::Json => {
            let mut rows = Vec::new();
            for (eta, spec) in etas.iter().zip(&spectra) {
                let partner = partners(spec);
                for (i, p) in spec.pairs.iter().enumerate() {
                    let mut row = json!({
                        "eta": eta,
                        "index": i,
                        "re_E": p.energy.re,
                        "im_E": p.energy.im,
                        "re_theta": p.theta.re,
                        "im_theta": p.theta.im,
                        "tag": p.tag,
                        "secular_residual": p.residuals.secular,
                        "eigen_residual": p.residuals.eigen,
                        "conjugate": partner[i],
                        "flags": p.flags,
                    });
                    if flags.vectors {
                        row["vector"] = json!(p.vector.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>());
                    }
                    rows.push(row);
                }
            }
            render_json(&header, Value::Array(rows), vec![])
        }
    }
}

fn transport(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let k = single_k(flags)?;
    let etas = eta_values(flags)?;
    let opts = solver_options(flags);
    let spectra = solve_sweep(n, k, hopping(flags), &etas, &opts)?;
    let header = Header::new(
        args,
        merge(
            sweep_settings(flags, n, k, &opts),
            json!({ "amplitude-tol": DEFAULT_AMPLITUDE_TOL }),
        ),
    );
    let reports = spectra
        .iter()
        .map(|s| transport_report(s, DEFAULT_AMPLITUDE_TOL))
        .collect::<ptchain::Result<Vec<_>>>()?;

    match format_or(flags, Format::Csv) {
        Format::Csv => {
            let mut table = Table::new(&["eta", "index", "xi", "tag"]);
            for (eta, rep) in etas.iter().zip(&reports) {
                for (i, r) in rep.records.iter().enumerate() {
                    table.push(vec![
                        num(*eta),
                        i.to_string(),
                        r.xi.value().map(num).unwrap_or_default(),
                        r.tag.as_str().into(),
                    ]);
                }
            }
            Ok(table.render(&header))
        }
        Format::Json => {
            let mut rows = Vec::new();
            for ((eta, rep), spec) in etas.iter().zip(&reports).zip(&spectra) {
                let partner = partners(spec);
                for (i, r) in rep.records.iter().enumerate() {
                    rows.push(json!({
                        "eta": eta,
                        "index": i,
                        "re_E": r.energy.re,
                        "im_E": r.energy.im,
                        "xi": r.xi,
                        "one_sided": r.xi.is_one_sided(),
                        "tag": r.tag,
                        "gain_amplitude": r.gain_amplitude,
                        "loss_amplitude": r.loss_amplitude,
                        "conjugate": partner[i],
                    }));
                }
            }
            render_json(&header, Value::Array(rows), vec![])
        }
    }
}

fn classify(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let ks = k_list(flags, n)?;
    let header = Header::new(args, json!({ "N": n, "k": [ks[0], ks[ks.len() - 1]] }));
    let counts: Vec<(usize, usize, usize)> = ks
        .iter()
        .map(|&k| {
            let (o, t) = count_special_states(n, k);
            (k, o, t)
        })
        .collect();
    match format_or(flags, Format::Csv) {
        Format::Csv => {
            let mut table = Table::new(&["k", "n_opaque", "n_transparent"]);
            for (k, o, t) in counts {
                table.push(vec![k.to_string(), o.to_string(), t.to_string()]);
            }
            Ok(table.render(&header))
        }
        Format::Json => {
            let rows = counts
                .iter()
                .map(|&(k, o, t)| json!({ "k": k, "n_opaque": o, "n_transparent": t }))
                .collect();
            render_json(&header, Value::Array(rows), vec![])
        }
    }
}

fn census(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let ks = k_list(flags, n)?;
    let t = hopping(flags);
    let header = Header::new(args, json!({ "N": n, "k": [ks[0], ks[ks.len() - 1]], "t": t }));
    let all = ks
        .iter()
        .map(|&k| SpecialStateCensus::new(n, k))
        .collect::<ptchain::Result<Vec<_>>>()?;
    match format_or(flags, Format::Json) {
        Format::Csv => {
            let mut table = Table::new(&["k", "family", "r", "M", "theta", "E"]);
            for c in &all {
                for (family, fracs) in [("opaque", &c.opaque_thetas), ("transparent", &c.transparent_thetas)] {
                    for f in fracs.iter() {
                        table.push(vec![
                            c.k.to_string(),
                            family.into(),
                            f.num().to_string(),
                            f.den().to_string(),
                            num(f.theta()),
                            num(2.0 * t * f.theta().cos()),
                        ]);
                    }
                }
            }
            Ok(table.render(&header))
        }
        Format::Json => render_json(&header, json!(all), vec![]),
    }
}

fn ep(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let ks = k_list(flags, n)?;
    let t = hopping(flags);
    if flags.eta.is_some() {
        return Err(usage("ep searches a range: use --eta-range MIN:MAX:STEPS"));
    }
    let (range, grid) = match flags.eta_range {
        Some(r) => ((r.min, r.max), r.steps),
        None => (DEFAULT_ETA_RANGE, DEFAULT_GRID),
    };
    let header = Header::new(
        args,
        json!({
            "N": n,
            "k": [ks[0], ks[ks.len() - 1]],
            "t": t,
            "eta-range": format!("{}:{}:{}", num(range.0), num(range.1), grid),
        }),
    );
    let found: Vec<(usize, EpSearch)> = ks
        .par_iter()
        .map(|&k| {
            let cfg = ChainConfig::new(n, k, t, range.0)?;
            Ok((k, find_exceptional_points(&cfg, range, grid)?))
        })
        .collect::<Result<_, CliError>>()?;

    match format_or(flags, Format::Json) {
        Format::Csv => {
            let mut table = Table::new(&[
                "k", "eta_c", "re_theta", "im_theta", "re_E", "im_E", "p", "log_slope", "residual_F",
                "residual_dF", "unresolved", "complex_sector", "ambiguous_order",
            ]);
            for (k, s) in &found {
                for p in &s.points {
                    table.push(vec![
                        k.to_string(),
                        num(p.eta_c),
                        num(p.theta_c.re),
                        num(p.theta_c.im),
                        num(p.energy_c.re),
                        num(p.energy_c.im),
                        p.order.to_string(),
                        p.log_slope.map(num).unwrap_or_default(),
                        num(p.residuals.f),
                        num(p.residuals.df),
                        p.flags.unresolved.to_string(),
                        p.flags.complex_sector.to_string(),
                        p.flags.ambiguous_order.to_string(),
                    ]);
                }
                for c in &s.crossings {
                    table.footer.push(format!(
                        "crossing k={k} eta={} re_E={} im_E={} distance={}",
                        num(c.eta),
                        num(c.energy.re),
                        num(c.energy.im),
                        num(c.distance)
                    ));
                }
            }
            Ok(table.render(&header))
        }
        Format::Json => {
            let mut points = Vec::new();
            let mut crossings = Vec::new();
            for (k, s) in &found {
                for p in &s.points {
                    points.push(json!({
                        "k": k,
                        "eta_c": p.eta_c,
                        "re_theta": p.theta_c.re,
                        "im_theta": p.theta_c.im,
                        "re_E": p.energy_c.re,
                        "im_E": p.energy_c.im,
                        "p": p.order,
                        "log_slope": p.log_slope,
                        "residuals": p.residuals,
                        "flags": p.flags,
                    }));
                }
                for c in &s.crossings {
                    crossings.push(json!({
                        "k": k,
                        "eta": c.eta,
                        "re_E": c.energy.re,
                        "im_E": c.energy.im,
                        "distance": c.distance,
                    }));
                }
            }
            render_json(&header, Value::Array(points), vec![("crossings", Value::Array(crossings))])
        }
    }
}

/// Reads one complex amplitude per non-empty, non-`#` line: `re im` or `re,im`.
fn read_state(path: &Path, n: usize) -> Result<Vec<Complex64>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("reading {}: {e}", path.display())))?;
    let mut c = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split(|ch: char| ch == ',' || ch.is_whitespace()).filter(|s| !s.is_empty()).collect();
        let bad = || usage(format!("{}:{}: expected 're im', got '{line}'", path.display(), lineno + 1));
        let [re, im] = parts[..] else {
            return Err(bad());
        };
        c.push(Complex64::new(re.parse().map_err(|_| bad())?, im.parse().map_err(|_| bad())?));
    }
    if c.len() != n {
        return Err(usage(format!("{} has {} amplitudes, N = {n}", path.display(), c.len())));
    }
    Ok(c)
}

fn evolve(flags: &Flags, args: &[String]) -> Result<String, CliError> {
    let n = require_n(flags)?;
    let k = single_k(flags)?;
    if flags.eta_range.is_some() {
        return Err(usage("evolve takes a single --eta"));
    }
    let eta = flags.eta.ok_or_else(|| usage("--eta is required"))?;
    let cfg = ChainConfig::new(n, k, hopping(flags), eta)?;
    let initial = flags.initial.clone().ok_or_else(|| usage("--initial is required"))?;
    let t_final = flags.time.unwrap_or(10.0);
    let dt = flags.dt.unwrap_or_else(|| default_dt(&cfg));
    let stride = flags.stride.unwrap_or(1);
    if stride == 0 {
        return Err(usage("--stride must be at least 1"));
    }
    let opts = solver_options(flags);

    let mut energy = None;
    let c0 = match &initial {
        Initial::Site(j) => {
            if !(1..=n).contains(j) {
                return Err(usage(format!("site {j} outside 1..={n}")));
            }
            let mut c = vec![Complex64::new(0.0, 0.0); n];
            c[j - 1] = Complex64::new(1.0, 0.0);
            c
        }
        Initial::Eigenstate(i) => {
            let spec = solve_spectrum(&cfg, &opts)?;
            check_spectrum(&spec, &opts)?;
            let p = spec
                .pairs
                .get(*i)
                .ok_or_else(|| usage(format!("eigenstate {i} outside 0..{n}")))?;
            energy = Some(p.energy);
            p.vector.clone()
        }
        Initial::File(path) => read_state(path, n)?,
    };

    let start = WaveState::new(c0, 0.0);
    let norm0 = start.norm_sqr();
    let mut samples: Vec<(WaveState, Vec<f64>)> = Vec::new();
    let (mut worst_rel, mut worst_abs, mut steps, mut norm_t) = (0.0f64, 0.0f64, 0, norm0);
    let mut failure = None;
    evolve_with(&start, &cfg, t_final, dt, |i, last, s| {
        let res = match max_continuity_residual(s, &cfg) {
            Ok(r) => r,
            Err(e) => {
                failure.get_or_insert(e);
                return;
            }
        };
        let norm = s.norm_sqr();
        worst_abs = worst_abs.max(res);
        worst_rel = worst_rel.max(res / norm);
        steps = i;
        norm_t = norm;
        if i % stride == 0 || last {
            match flux_profile(s, &cfg) {
                Ok(f) => samples.push((s.clone(), f.j)),
                Err(e) => {
                    failure.get_or_insert(e);
                }
            }
        }
    })?;
    if let Some(e) = failure {
        return Err(e.into());
    }

    let mut settings = json!({
        "N": n,
        "k": k,
        "t": cfg.t(),
        "eta": eta,
        "initial": initial.to_string(),
        "time": t_final,
        "dt": dt,
        "stride": stride,
    });
    if let Some(e) = energy {
        settings["initial_energy"] = json!([e.re, e.im]);
    }
    let header = Header::new(args, settings);
    let summary = json!({
        "steps": steps,
        "max_continuity_residual": worst_rel,
        "max_abs_continuity_residual": worst_abs,
        "norm_ratio": norm_t / norm0,
    });

    match format_or(flags, Format::Csv) {
        Format::Csv => {
            let mut table = Table::new(&["time", "site", "re_c", "im_c", "rho", "J"]);
            for (s, j) in &samples {
                for (site, c) in s.c.iter().enumerate() {
                    table.push(vec![
                        num(s.time),
                        (site + 1).to_string(),
                        num(c.re),
                        num(c.im),
                        num(c.norm_sqr()),
                        num(j[site]),
                    ]);
                }
            }
            table.footer.push(format!("steps = {steps}"));
            table.footer.push(format!("max_continuity_residual = {} (per unit norm)", num(worst_rel)));
            table.footer.push(format!("max_abs_continuity_residual = {}", num(worst_abs)));
            table.footer.push(format!("norm_ratio = {}", num(norm_t / norm0)));
            Ok(table.render(&header))
        }
        Format::Json => {
            let rows: Vec<Value> = samples
                .iter()
                .map(|(s, j)| {
                    json!({
                        "time": s.time,
                        "c": s.c.iter().map(|z| [z.re, z.im]).collect::<Vec<_>>(),
                        "rho": s.densities(),
                        "J": &j[..n],
                    })
                })
                .collect();
            render_json(&header, Value::Array(rows), vec![("summary", summary)])
        }
    }
}
