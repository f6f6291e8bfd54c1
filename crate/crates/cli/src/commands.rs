//! One function per subcommand. Each writes its outputs atomically, then a
//! manifest, and only then reports an acceptance failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};
use teig::cauchy_grid::{apply_t, nonlinear_eig, BeynOptions, Circle, GridOptions, RadialGrid};
use teig::coeff::SpdMatrix;
use teig::disk_spectrum::{assemble_spectrum, wedge_report as shells, DiskMedium, Spectrum, DEFAULT_LAMBDA_FLOOR};
use teig::halfspace::{identity_suite, multiplier_slopes, FrozenData};
use teig::trace_lab::{hs_products, scheme, trace_constant, trace_diag, trace_limit, FrozenPoint};
use teig::weyl::{counting_fit as fit_counts, least_squares_slope, weyl_constant};

use crate::config::{log_grid, ExperimentConfig, Profile};
use crate::error::CliError;
use crate::output::{num, short, write_json, write_manifest, Csv};
use crate::{ProfileArg, SpectrumArgs};

#[derive(Serialize)]
struct C {
    re: f64,
    im: f64,
}

impl From<Complex64> for C {
    fn from(z: Complex64) -> Self {
        C { re: z.re, im: z.im }
    }
}

fn verdict(failures: Vec<String>) -> Result<(), CliError> {
    if failures.is_empty() {
        Ok(())
    } else {
        Err(CliError::AcceptanceFailure(failures))
    }
}

fn slope_of(t: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = t.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|x| x.ln()).collect();
    least_squares_slope(&lx, &ly)
}

pub fn weyl(args: &ProfileArg, quad_points: usize, out: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let profile = Profile::load(&args.profile)?;
    let c = weyl_constant(&profile.field, quad_points)?;
    println!("{}", short(c));
    if let Some(out) = out {
        let config = ExperimentConfig::new("weyl", Some(&profile))
            .param("quad_points", quad_points)
            .output(out);
        write_json(out, &json!({ "c": c, "dim": profile.field.dim }))?;
        write_manifest(out, &config, &[], started)?;
    }
    Ok(())
}

fn output_dir(out: &Path) -> PathBuf {
    match out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

struct SpectrumRun {
    profile: Profile,
    spectrum: Spectrum,
    t_max: f64,
    lambda_floor: f64,
    notes: Vec<String>,
}

/// Loads the spectrum from the cache when a manifest with the same
/// configuration hash sits beside it; otherwise assembles and caches it.
fn spectrum_for(args: &SpectrumArgs, out: &Path) -> Result<SpectrumRun, CliError> {
    let profile = match (&args.profile, args.sigma1, args.sigma2) {
        (Some(path), _, _) => Profile::load(path)?,
        (None, Some(s1), Some(s2)) => Profile::inline_disk(args.radius, args.a0, s1, s2)?,
        _ => return Err(CliError::Usage("give --profile or both --sigma1 and --sigma2".into())),
    };
    let t_max = args
        .t_max
        .or_else(|| profile.default_f64("t_max"))
        .ok_or_else(|| CliError::Usage("--t-max not given and the profile has no t_max".into()))?;
    let lambda_floor = args
        .lambda_floor
        .or_else(|| profile.default_f64("lambda_floor"))
        .unwrap_or(DEFAULT_LAMBDA_FLOOR);
    let medium = DiskMedium::from_field(&profile.field)?;
    let key_config = ExperimentConfig::new("assemble-spectrum", None)
        .param("medium", medium)
        .param("t_max", t_max)
        .param("lambda_floor", lambda_floor);
    let key = key_config.hash();
    let dir = args.cache_dir.clone().unwrap_or_else(|| output_dir(out));
    let path = dir.join(format!("spectrum-{}.json", &key[..16]));
    let manifest = crate::output::manifest_path(&path);

    let cached = fs::read_to_string(&manifest)
        .ok()
        .and_then(|m| serde_json::from_str::<Value>(&m).ok())
        .filter(|m| m.get("config_hash").and_then(Value::as_str) == Some(key.as_str()))
        .and_then(|_| fs::read_to_string(&path).ok())
        .and_then(|text| Spectrum::from_json(&text).ok());
    if let Some(spectrum) = cached {
        return Ok(SpectrumRun {
            profile,
            spectrum,
            t_max,
            lambda_floor,
            notes: vec![format!("spectrum cache hit: {}", path.display())],
        });
    }
    let started = Instant::now();
    let spectrum = assemble_spectrum(&medium, t_max, lambda_floor)?;
    let notes = vec![format!(
        "spectrum assembled in {:.1} s, cached at {}",
        started.elapsed().as_secs_f64(),
        path.display()
    )];
    crate::output::write_atomic(&path, spectrum.to_json().as_bytes())?;
    write_manifest(&path, &key_config, &[], started)?;
    Ok(SpectrumRun {
        profile,
        spectrum,
        t_max,
        lambda_floor,
        notes,
    })
}

fn spectrum_config(command: &str, run: &SpectrumRun) -> ExperimentConfig {
    ExperimentConfig::new(command, Some(&run.profile))
        .param("t_max", run.t_max)
        .param("lambda_floor", run.lambda_floor)
}

pub fn disk_eigs(args: &SpectrumArgs, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let run = spectrum_for(args, out)?;
    if out.extension().is_some_and(|e| e == "json") {
        crate::output::write_atomic(out, run.spectrum.to_json().as_bytes())?;
    } else {
        let mut csv = Csv::new(&["mode", "re", "im", "abs", "multiplicity"]);
        for e in &run.spectrum.entries {
            csv.row(&[
                e.mode.to_string(),
                num(e.lambda.re),
                num(e.lambda.im),
                num(e.lambda.norm()),
                e.multiplicity.to_string(),
            ]);
        }
        csv.write(out)?;
    }
    write_manifest(out, &spectrum_config("disk-eigs", &run).output(out), &run.notes, started)?;
    eprintln!(
        "{} eigenvalues (with multiplicity) in ({}, {}]",
        run.spectrum.total(),
        run.lambda_floor,
        run.t_max
    );
    Ok(())
}

/// Spectrum → counting fit → `fit.csv` (t, N, c t^{d/2}, ratio) and a JSON
/// summary beside it.
pub fn counting_fit(
    args: &SpectrumArgs,
    points: usize,
    slope_tol: f64,
    ratio_tol: f64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    if points < 2 {
        return Err(CliError::Usage("--points must be at least 2".into()));
    }
    let run = spectrum_for(args, out)?;
    let top = run.t_max.log10();
    let mut grid = log_grid(top - 2.0, top, points);
    *grid.last_mut().expect("nonempty grid") = run.t_max;
    let fit = fit_counts(&run.spectrum, &run.profile.field, &grid)?;
    let half_d = 0.5 * run.profile.field.dim as f64;

    let mut csv = Csv::new(&["t", "N", "weyl_prediction", "ratio"]);
    for ((t, n), ratio) in fit.curve.t.iter().zip(&fit.curve.count).zip(&fit.ratios) {
        csv.row(&[num(*t), n.to_string(), num(fit.c_analytic * t.powf(half_d)), num(*ratio)]);
    }
    csv.write(out)?;

    let final_ratio = *fit.ratios.last().expect("nonempty fit");
    let mut failures = Vec::new();
    if (fit.slope - half_d).abs() > slope_tol {
        failures.push(format!(
            "top-decade slope {:.4} deviates from {half_d} by more than {slope_tol}",
            fit.slope
        ));
    }
    if (final_ratio - 1.0).abs() > ratio_tol {
        failures.push(format!("N(t_max)/(c t_max^(d/2)) = {final_ratio:.4} outside 1 ± {ratio_tol}"));
    }
    let summary_path = out.with_extension("json");
    write_json(
        &summary_path,
        &json!({
            "c_analytic": fit.c_analytic,
            "dim": run.profile.field.dim,
            "t_max": run.t_max,
            "lambda_floor": run.lambda_floor,
            "total": run.spectrum.total(),
            "slope": fit.slope,
            "expected_slope": half_d,
            "final_ratio": final_ratio,
            "slope_tol": slope_tol,
            "ratio_tol": ratio_tol,
            "passed": failures.is_empty(),
            "failures": failures,
        }),
    )?;
    let config = spectrum_config("counting-fit", &run)
        .param("points", points)
        .param("slope_tol", slope_tol)
        .param("ratio_tol", ratio_tol)
        .output(out)
        .output(&summary_path);
    write_manifest(out, &config, &run.notes, started)?;
    println!("slope {} final_ratio {}", short(fit.slope), short(final_ratio));
    verdict(failures)
}

pub fn wedge_report(args: &SpectrumArgs, bound: f64, out: &Path) -> Result<(), CliError> {
    let started = Instant::now();
    let run = spectrum_for(args, out)?;
    let count = (run.t_max / run.lambda_floor).log2().ceil().max(1.0) as usize;
    let stats = shells(&run.spectrum, count)?;
    let mut csv = Csv::new(&["lo", "hi", "count", "max_im_ratio"]);
    for s in &stats {
        csv.row(&[
            num(s.lo),
            num(s.hi),
            s.count.to_string(),
            s.max_ratio.map(num).unwrap_or_default(),
        ]);
    }
    csv.write(out)?;
    write_manifest(
        out,
        &spectrum_config("wedge-report", &run).param("bound", bound).output(out),
        &run.notes,
        started,
    )?;

    let filled: Vec<f64> = stats.iter().filter_map(|s| s.max_ratio).collect();
    let mut failures = Vec::new();
    match filled.len() {
        0..=2 => failures.push(format!("only {} nonempty shells", filled.len())),
        n => {
            let last = &filled[n - 3..];
            if !(last[0] >= last[1] && last[1] >= last[2]) {
                failures.push(format!("last three shells not nonincreasing: {last:?}"));
            }
            if !(last[2] < bound) {
                failures.push(format!("top shell ratio {} not below {bound}", last[2]));
            }
        }
    }
    verdict(failures)
}

/// `(r/R)^m cos(πr/2R)`: the factor `r^m` makes `f(r) e^{imθ}` smooth at
/// the origin, so no boundary layer there biases the slopes.
fn scan_data(grid: &RadialGrid, mode: u32) -> Vec<Complex64> {
    let k = std::f64::consts::FRAC_PI_2 / grid.radius;
    grid.sample(|r| Complex64::new((r / grid.radius).powi(mode as i32) * (k * r).cos(), 0.0))
}

pub fn resolvent_scan(
    args: &ProfileArg,
    t_decades: (f64, f64),
    points: usize,
    modes: &[u32],
    n: usize,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let profile = Profile::load(&args.profile)?;
    let field = &profile.field;
    let opts = GridOptions::default();
    let grid = RadialGrid::new(field.radius, n)?;
    let zero = vec![Complex64::new(0.0, 0.0); n];
    let ts = log_grid(t_decades.0, t_decades.1, points);

    let mut csv = Csv::new(&["mode", "t", "data", "norm_u", "norm_v"]);
    let mut summary = Vec::new();
    let mut failures = Vec::new();
    for &mode in modes {
        let data = scan_data(&grid, mode);
        let mut norms = [Vec::new(), Vec::new(), Vec::new(), Vec::new()];
        for &t in &ts {
            let lambda = Complex64::new(0.0, t);
            let (uf, vf) = apply_t(field, mode, lambda, n, &data, &zero, &opts)?;
            let (ug, vg) = apply_t(field, mode, lambda, n, &zero, &data, &opts)?;
            let row = [grid.l2_norm(&uf), grid.l2_norm(&vf), grid.l2_norm(&ug), grid.l2_norm(&vg)];
            for (store, x) in norms.iter_mut().zip(row) {
                store.push(x);
            }
            csv.row(&[mode.to_string(), num(t), "f".into(), num(row[0]), num(row[1])]);
            csv.row(&[mode.to_string(), num(t), "g".into(), num(row[2]), num(row[3])]);
        }
        let [su_f, sv_f, su_g, sv_g] = norms.map(|y| slope_of(&ts, &y));
        if (su_f + 1.0).abs() > 0.1 {
            failures.push(format!("mode {mode}: slope of |u| from f-data {su_f:.3}, expected -1 ± 0.1"));
        }
        if (sv_g + 1.0).abs() > 0.1 {
            failures.push(format!("mode {mode}: slope of |v| from g-data {sv_g:.3}, expected -1 ± 0.1"));
        }
        if !(-1.1..=0.1).contains(&sv_f) {
            failures.push(format!("mode {mode}: slope of |v| from f-data {sv_f:.3} outside [-1.1, 0.1]"));
        }
        summary.push(json!({
            "mode": mode,
            "slope_u_f": su_f,
            "slope_v_f": sv_f,
            "slope_u_g": su_g,
            "slope_v_g": sv_g,
        }));
    }
    csv.write(out)?;
    let summary_path = out.with_extension("json");
    write_json(&summary_path, &json!({ "modes": summary, "passed": failures.is_empty(), "failures": failures }))?;
    let config = ExperimentConfig::new("resolvent-scan", Some(&profile))
        .param("t_decades", t_decades)
        .param("points", points)
        .param("modes", modes)
        .param("N", n)
        .output(out)
        .output(&summary_path);
    write_manifest(out, &config, &[], started)?;
    verdict(failures)
}

pub fn cauchy_eig(
    args: &ProfileArg,
    mode: u32,
    center: (f64, f64),
    radius: f64,
    n: usize,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let profile = Profile::load(&args.profile)?;
    let contour = Circle {
        center: Complex64::new(center.0, center.1),
        radius,
    };
    let eigs = nonlinear_eig(&profile.field, mode, contour, n, &BeynOptions::default())?;
    let mut csv = Csv::new(&["re", "im", "abs", "order"]);
    for e in &eigs {
        csv.row(&[num(e.lambda.re), num(e.lambda.im), num(e.lambda.norm()), e.order.to_string()]);
    }
    csv.write(out)?;
    let config = ExperimentConfig::new("cauchy-eig", Some(&profile))
        .param("mode", mode)
        .param("center", center)
        .param("radius", radius)
        .param("N", n)
        .output(out);
    write_manifest(out, &config, &[], started)?;
    eprintln!("{} eigenvalues inside the contour", eigs.len());
    Ok(())
}

pub fn halfspace(samples: usize, seed: u64, tol: f64, out: Option<&Path>) -> Result<(), CliError> {
    let started = Instant::now();
    let res = identity_suite(samples, seed)?;
    let base = FrozenData::new(SpdMatrix::identity(2), (1.0, 4.0), Complex64::new(0.0, 10.0), vec![1.0]);
    let lams: Vec<f64> = (1..=4).map(|p| 10f64.powi(p)).collect();
    let slopes = multiplier_slopes(&base, &lams)?;

    let mut failures = Vec::new();
    for (name, v) in [("jump", res.jump), ("flux", res.flux), ("characteristic", res.characteristic)] {
        if !(v <= tol) {
            failures.push(format!("{name} residual {v:.3e} above {tol:e}"));
        }
    }
    for (ell, s) in slopes.iter().enumerate() {
        if (s + 1.0).abs() > 0.05 {
            failures.push(format!("multiplier slope {s:.4} for ell = {}, expected -1 ± 0.05", ell + 1));
        }
    }
    let report = json!({
        "samples": samples,
        "max_jump_residual": res.jump,
        "max_flux_residual": res.flux,
        "max_characteristic_residual": res.characteristic,
        "multiplier_slopes": slopes,
        "passed": failures.is_empty(),
    });
    println!("{}", serde_json::to_string_pretty(&report).expect("report serialises"));
    if let Some(out) = out {
        write_json(out, &report)?;
        let config = ExperimentConfig::new("halfspace", None)
            .param("samples", samples)
            .param("tol", tol)
            .seed(seed)
            .output(out);
        write_manifest(out, &config, &[], started)?;
    }
    verdict(failures)
}

fn frozen_point(profile: &Profile) -> Result<FrozenPoint, CliError> {
    let (a0, s1, s2) = profile
        .field
        .constant_values()
        .ok_or_else(|| CliError::Usage("this command needs a profile with constant coefficients".into()))?;
    Ok(FrozenPoint::new(SpdMatrix::scalar(profile.field.dim, a0), s1, s2)?)
}

pub fn trace_check(
    args: &ProfileArg,
    t: f64,
    t_star: f64,
    tol: Option<f64>,
    out: Option<&Path>,
) -> Result<(), CliError> {
    let started = Instant::now();
    let profile = Profile::load(&args.profile)?;
    let point = frozen_point(&profile)?;
    let sch = scheme(profile.field.dim, t_star)?;
    let lhs = trace_diag(&point, t, &sch)? * t.powf(sch.trace_exponent());
    let rhs = trace_limit(&point, &sch)?;
    let ratio = lhs / rhs;
    let report = json!({ "lhs": C::from(lhs), "rhs": C::from(rhs), "ratio": C::from(ratio) });
    println!("{}", serde_json::to_string(&report).expect("report serialises"));
    if let Some(out) = out {
        write_json(out, &report)?;
        let config = ExperimentConfig::new("trace-check", Some(&profile))
            .param("t", t)
            .param("t_star", t_star)
            .param("tol", tol)
            .output(out);
        write_manifest(out, &config, &[], started)?;
    }
    match tol {
        Some(tol) if !((ratio - 1.0).norm() <= tol) => verdict(vec![format!(
            "|ratio - 1| = {:.3e} above {tol:e}",
            (ratio - 1.0).norm()
        )]),
        _ => Ok(()),
    }
}

#[allow(clippy::too_many_arguments)]
pub fn hs_scan(
    args: &ProfileArg,
    t_decades: (f64, f64),
    points: usize,
    modes: &[u32],
    n: usize,
    t_star: f64,
    max_slope: f64,
    out: &Path,
) -> Result<(), CliError> {
    let started = Instant::now();
    let profile = Profile::load(&args.profile)?;
    let field = &profile.field;
    let sch = scheme(field.dim, t_star)?;
    let opts = GridOptions::default();
    let ts = log_grid(t_decades.0, t_decades.1, points);
    let expo = sch.trace_exponent();

    let mut csv = Csv::new(&["t", "mode", "alpha_double_norm"]);
    let mut per_t = Vec::new();
    let mut alpha: Vec<Vec<f64>> = vec![Vec::new(); modes.len()];
    for &t in &ts {
        let hs = hs_products(field, &sch, t, modes, n, &opts)?;
        for (i, (&m, &a)) in modes.iter().zip(&hs.alpha_norms).enumerate() {
            csv.row(&[num(t), m.to_string(), num(a)]);
            alpha[i].push(a);
        }
        per_t.push(json!({
            "t": t,
            "double_norm": hs.double_norm,
            "trace": C::from(hs.trace),
            "trace_scaled": C::from(hs.trace * t.powf(expo)),
        }));
    }
    csv.write(out)?;

    let mut failures = Vec::new();
    let mut slopes = Vec::new();
    if ts.len() >= 2 {
        for (&m, norms) in modes.iter().zip(&alpha) {
            let s = slope_of(&ts, norms);
            if !(s <= max_slope) {
                failures.push(format!("mode {m}: double-norm slope {s:.3} above {max_slope}"));
            }
            slopes.push(json!({ "mode": m, "slope": s }));
        }
    }
    let limit = trace_constant(field, &sch).ok().map(C::from);
    let summary_path = out.with_extension("json");
    write_json(
        &summary_path,
        &json!({
            "trace_exponent": expo,
            "trace_limit": limit,
            "per_t": per_t,
            "alpha_slopes": slopes,
            "passed": failures.is_empty(),
            "failures": failures,
        }),
    )?;
    let config = ExperimentConfig::new("hs-scan", Some(&profile))
        .param("t_decades", t_decades)
        .param("points", points)
        .param("modes", modes)
        .param("N", n)
        .param("t_star", t_star)
        .param("max_slope", max_slope)
        .output(out)
        .output(&summary_path);
    write_manifest(out, &config, &[], started)?;
    verdict(failures)
}
