//! Mode dispatch and artifact writing.

use crate::config::{check_n, Mode, RunConfig};
use crate::report::{config_from_report, num, Report};
use crate::{io_err, CliError};
use nalgebra::DVector;
use num_complex::Complex64 as C64;
use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;
use taylor_core::analytic_reference::{fit_shape_constraints, AnalyticState};
use taylor_core::beltrami_solver::{
    eigen_scan, solve, unpack_solution, Boundary, DebyeSolution, Discretization, Layout, ScanOptions,
};
use taylor_core::field_eval::{trace_fluxes, write_csv, FieldEvaluator};
use taylor_core::geometry::{CurveGrid, FourierCurve, GeneratingCurve, MillerCurve};
use taylor_core::par::Execution;
use taylor_core::surface_calculus::Surface;

/// Files written by a run.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub report: PathBuf,
    pub files: Vec<PathBuf>,
}

struct Geometry {
    outer: Arc<dyn GeneratingCurve>,
    inner: Option<Arc<dyn GeneratingCurve>>,
    state: Option<AnalyticState>,
    inner_level: f64,
}

fn bad(key: &str, why: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("field `{key}`: {why}"))
}

fn read_points(cfg: &RunConfig, key: &str) -> Result<Vec<(f64, f64)>, CliError> {
    let path = cfg.require(key)?;
    let text = std::fs::read_to_string(path).map_err(|e| bad(key, format!("cannot read {path}: {e}")))?;
    let mut pts = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let v: Vec<f64> = line
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad(key, format!("{path} line {}: expected `r z`", ln + 1)))?;
        if v.len() != 2 {
            return Err(bad(key, format!("{path} line {}: expected two numbers", ln + 1)));
        }
        pts.push((v[0], v[1]));
    }
    Ok(pts)
}

fn analytic_state(cfg: &RunConfig) -> Result<AnalyticState, CliError> {
    let guess = (cfg.f64_or("fit_lambda", 2.28)?, cfg.f64_or("fit_c6", 1.27)?);
    Ok(fit_shape_constraints(
        cfg.f64_or("eps", 0.95)?,
        cfg.f64_or("kappa", 2.0)?,
        cfg.f64_or("delta", 0.3)?,
        cfg.f64_or("r0", 1.0)?,
        guess,
    )?)
}

fn build_geometry(cfg: &RunConfig, genus: usize) -> Result<Geometry, CliError> {
    let kind = cfg.get("geometry").unwrap_or("miller");
    let inner_level = cfg.f64_or("inner_level", 0.5)?;
    let mut g = Geometry { outer: Arc::new(MillerCurve::new(1.0, 0.5, 1.0, 0.0)?), inner: None, state: None, inner_level };
    match kind {
        "miller" => {
            let r0 = cfg.f64("r0")?;
            let eps = cfg.f64("eps")?;
            let kappa = cfg.f64("kappa")?;
            let delta = cfg.f64("delta")?;
            g.outer = Arc::new(MillerCurve::new(r0, eps, kappa, delta)?);
            if genus == 2 {
                g.inner = Some(Arc::new(MillerCurve::new(
                    cfg.f64_or("inner_r0", r0)?,
                    cfg.f64("inner_eps")?,
                    cfg.f64_or("inner_kappa", kappa)?,
                    cfg.f64_or("inner_delta", delta)?,
                )?));
            }
        }
        "analytic" => {
            let st = analytic_state(cfg)?;
            let m = cfg.usize_or("trace_points", 1024)?;
            g.outer = Arc::new(st.trace_level_set(0.0, m)?);
            if genus == 2 {
                g.inner = Some(Arc::new(st.trace_level_set(inner_level, m)?));
            }
            g.state = Some(st);
        }
        "points" => {
            g.outer = Arc::new(FourierCurve::from_points(&read_points(cfg, "outer_points")?)?);
            if genus == 2 {
                g.inner = Some(Arc::new(FourierCurve::from_points(&read_points(cfg, "inner_points")?)?));
            }
        }
        other => return Err(bad("geometry", format!("unknown geometry `{other}` (miller, analytic, points)"))),
    }
    Ok(g)
}

fn discretize(cfg: &RunConfig, geo: &Geometry, n: usize, ell: i32) -> Result<Discretization, CliError> {
    check_n(n)?;
    let mut b = vec![Boundary::new(Arc::new(CurveGrid::new(geo.outer.clone(), n)?), Surface::Outer)];
    if let Some(inner) = &geo.inner {
        b.push(Boundary::new(Arc::new(CurveGrid::new(inner.clone(), n)?), Surface::Inner));
    }
    Ok(Discretization::new(b, ell, cfg.usize_or("order", 16)?)?)
}

struct Targets {
    lambda: f64,
    phi_tor: f64,
    phi_pol: Option<f64>,
}

/// lambda and fluxes: explicit keys win, analytic geometry supplies the rest.
fn targets(cfg: &RunConfig, geo: &Geometry, genus: usize) -> Result<Targets, CliError> {
    let lambda = match (cfg.get("lambda"), &geo.state) {
        (None, Some(st)) => st.lambda,
        _ => cfg.lambda()?,
    };
    let analytic_tor = |st: &AnalyticState| -> Result<f64, CliError> {
        let mut phi = st.toroidal_flux(&CurveGrid::new(geo.outer.clone(), 400)?)?;
        if let Some(inner) = &geo.inner {
            phi -= st.toroidal_flux(&CurveGrid::new(inner.clone(), 400)?)?;
        }
        Ok(phi)
    };
    let phi_tor = match (cfg.get("phi_tor"), &geo.state) {
        (None, Some(st)) => analytic_tor(st)?,
        _ => cfg.f64("phi_tor")?,
    };
    let phi_pol = if genus == 2 {
        Some(match (cfg.get("phi_pol"), &geo.state) {
            (None, Some(_)) => -2.0 * PI * geo.inner_level,
            _ => cfg.f64("phi_pol")?,
        })
    } else {
        None
    };
    Ok(Targets { lambda, phi_tor, phi_pol })
}

fn rel_diff(achieved: f64, target: f64) -> f64 {
    let d = (achieved - target).abs();
    if target != 0.0 {
        d / target.abs()
    } else {
        d
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn axis(cfg: &RunConfig, key: &str) -> Result<Option<Vec<f64>>, CliError> {
    if cfg.get(key).is_none() {
        return Ok(None);
    }
    let v = cfg.list_f64(key)?;
    if v.len() != 3 || v[2] < 1.0 || v[2].fract() != 0.0 {
        return Err(bad(key, "expected `start, stop, count` with integer count >= 1"));
    }
    let m = v[2] as usize;
    Ok(Some((0..m).map(|k| if m == 1 { v[0] } else { v[0] + (v[1] - v[0]) * k as f64 / (m - 1) as f64 }).collect()))
}

/// Writes the field on the slice_r x slice_z grid, skipping targets that
/// are outside the domain or too close to the boundary.
fn write_slice(
    cfg: &RunConfig,
    sol: &DebyeSolution,
    out: &Path,
    rep: &mut Report,
    exec: Execution,
) -> Result<Option<PathBuf>, CliError> {
    let (Some(rs), Some(zs)) = (axis(cfg, "slice_r")?, axis(cfg, "slice_z")?) else {
        return Ok(None);
    };
    let phi = cfg.f64_or("slice_phi", 0.0)?;
    let ev = FieldEvaluator::new(sol, cfg.usize_or("upsample", 4)?)?;
    let mut pts = Vec::new();
    let mut skipped = 0;
    for &z in &zs {
        for &r in &rs {
            if ev.check_target(r, z).is_ok() {
                pts.push((r, phi, z));
            } else {
                skipped += 1;
            }
        }
    }
    let samples = ev.eval_b(&pts, exec)?;
    let path = out.join("slice.csv");
    let mut w = create(&path)?;
    write_csv(&mut w, &samples).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;
    rep.put("slice.points", samples.len());
    rep.put("slice.skipped", skipped);
    Ok(Some(path))
}

fn write_solution(path: &Path, cfg: &RunConfig, sol: &DebyeSolution) -> Result<(), CliError> {
    let mut rep = Report::new(cfg);
    rep.put("solution.status", "solved");
    rep.put_num("solution.condition", sol.condition);
    rep.put_num("solution.residual", sol.residual);
    rep.put("solution.unknowns", sol.unknowns.len());
    for (i, x) in sol.unknowns.iter().enumerate() {
        rep.put(&format!("solution.x.{i:06}"), format!("{} {}", num(x.re), num(x.im)));
    }
    rep.write(path)
}

fn load_solution(cfg: &RunConfig) -> Result<(RunConfig, DebyeSolution), CliError> {
    let path = cfg.require("solution")?;
    let text = std::fs::read_to_string(path).map_err(|e| bad("solution", format!("cannot read {path}: {e}")))?;
    let all = RunConfig::parse(&text).map_err(|e| bad("solution", format!("{path}: {e}")))?;
    if all.get("solution.status") != Some("solved") {
        return Err(bad("solution", format!("{path} holds no solved state")));
    }
    let scfg = config_from_report(&text)?;
    let mode = scfg.mode()?;
    let genus = if mode == Mode::Solve2 { 2 } else { 1 };
    let geo = build_geometry(&scfg, genus)?;
    let t = targets(&scfg, &geo, genus)?;
    let disc = discretize(&scfg, &geo, scfg.n()?, 0)?;
    let layout = Layout::new(&disc, true);
    let count: usize = all
        .require("solution.unknowns")?
        .parse()
        .map_err(|_| bad("solution", "bad unknown count"))?;
    if count != layout.cols {
        return Err(bad("solution", format!("{count} unknowns, geometry needs {}", layout.cols)));
    }
    let mut x = DVector::zeros(count);
    for i in 0..count {
        let key = format!("solution.x.{i:06}");
        let v = all.require(&key)?;
        let p: Vec<f64> = v
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|_| bad("solution", format!("malformed `{key}`")))?;
        if p.len() != 2 {
            return Err(bad("solution", format!("malformed `{key}`")));
        }
        x[i] = C64::new(p[0], p[1]);
    }
    let (sigma, coeffs, densities) = unpack_solution(&disc, &layout, &x, t.lambda);
    let sol = DebyeSolution {
        lambda: t.lambda,
        ell: 0,
        boundaries: disc.boundaries(),
        sigma,
        coeffs,
        densities,
        phi_tor: t.phi_tor,
        phi_pol: t.phi_pol,
        condition: all.f64("solution.condition")?,
        residual: all.f64("solution.residual")?,
        flux_achieved: Vec::new(),
        unknowns: x,
    };
    Ok((scfg, sol))
}

fn run_solve(cfg: &RunConfig, genus: usize, out: &Path, exec: Execution) -> Result<Artifacts, CliError> {
    let t0 = Instant::now();
    let geo = build_geometry(cfg, genus)?;
    let t = targets(cfg, &geo, genus)?;
    let disc = discretize(cfg, &geo, cfg.n()?, 0)?;
    let t_setup = t0.elapsed().as_secs_f64();
    let t1 = Instant::now();
    let sol = solve(&disc, t.lambda, t.phi_tor, t.phi_pol, exec)?;
    let t_solve = t1.elapsed().as_secs_f64();

    let mut rep = Report::new(cfg);
    rep.put("result.genus", genus);
    rep.put_num("result.lambda", t.lambda);
    rep.put_num("result.phi_tor", t.phi_tor);
    if let Some(p) = t.phi_pol {
        rep.put_num("result.phi_pol", p);
    }
    rep.put("result.unknowns", sol.unknowns.len());
    rep.put_num("result.condition", sol.condition);
    rep.put_num("result.residual", sol.residual);

    let t2 = Instant::now();
    let fc = trace_fluxes(&disc, t.lambda, &sol.unknowns, exec)?;
    let mut flux_res = rel_diff(fc.toroidal.re, t.phi_tor);
    rep.put_num("result.flux.toroidal", fc.toroidal.re);
    if let (Some(p), Some(target)) = (fc.poloidal, t.phi_pol) {
        rep.put_num("result.flux.poloidal", p.re);
        flux_res = flux_res.max(rel_diff(p.re, target));
    }
    rep.put_num("result.flux_residual", flux_res);
    rep.put_num("result.field_scale", fc.field_scale);
    if let Some(st) = &geo.state {
        rep.put_num("analytic.lambda", st.lambda);
        rep.put_num("analytic.c6", st.c[5]);
    }

    let mut files = Vec::new();
    let sol_path = out.join("solution.txt");
    write_solution(&sol_path, cfg, &sol)?;
    files.push(sol_path);
    if let Some(p) = write_slice(cfg, &sol, out, &mut rep, exec)? {
        files.push(p);
    }
    rep.time("setup", t_setup);
    rep.time("solve", t_solve);
    rep.time("postprocess", t2.elapsed().as_secs_f64());
    rep.time("total", t0.elapsed().as_secs_f64());
    let report = out.join("report.txt");
    rep.write(&report)?;
    Ok(Artifacts { report, files })
}

fn run_verify(cfg: &RunConfig, genus: usize, out: &Path, exec: Execution) -> Result<Artifacts, CliError> {
    let t0 = Instant::now();
    if let Some(g) = cfg.get("geometry").filter(|g| *g != "analytic") {
        return Err(bad("geometry", format!("verify modes need `analytic`, got `{g}`")));
    }
    if cfg.get("lambda").is_some() {
        return Err(bad("lambda", "fixed by the analytic state in verify modes"));
    }
    let mut acfg = cfg.clone();
    acfg.set("geometry", "analytic");
    let geo = build_geometry(&acfg, genus)?;
    let st = geo.state.expect("analytic geometry carries a state");
    let t = targets(&acfg, &geo, genus)?;
    let ns = if cfg.get("n_list").is_some() { cfg.list_usize("n_list")? } else { vec![25, 50, 100, 200] };
    for &n in &ns {
        check_n(n).map_err(|_| bad("n_list", format!("{n} is below the minimum of 16")))?;
    }
    let default_pt = if genus == 1 { vec![1.2, 0.25] } else { vec![0.5, -1.5] };
    let pt = if cfg.get("point").is_some() { cfg.list_f64("point")? } else { default_pt };
    if pt.len() != 2 {
        return Err(bad("point", "expected `r, z`"));
    }
    let exact = st.field(pt[0], pt[1])?;
    let enorm = exact.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut rep = Report::new(cfg);
    rep.put("result.genus", genus);
    rep.put_num("result.lambda", t.lambda);
    rep.put_num("result.phi_tor", t.phi_tor);
    if let Some(p) = t.phi_pol {
        rep.put_num("result.phi_pol", p);
    }
    rep.put_num("analytic.c6", st.c[5]);
    rep.put_num("analytic.shaping_residual", st.residual);
    rep.put(
        "analytic.field",
        exact.iter().map(|x| num(*x)).collect::<Vec<_>>().join(" "),
    );

    let path = out.join("convergence.csv");
    let mut w = create(&path)?;
    let wr = |w: &mut BufWriter<File>, s: String| w.write_all(s.as_bytes()).map_err(|e| io_err(&path, e));
    wr(&mut w, "n,Br,Bphi,Bz,error,condition,residual\n".into())?;
    for &n in &ns {
        let t1 = Instant::now();
        let disc = discretize(&acfg, &geo, n, 0)?;
        let sol = solve(&disc, t.lambda, t.phi_tor, t.phi_pol, exec)?;
        let ev = FieldEvaluator::new(&sol, cfg.usize_or("upsample", 4)?)?;
        let b = ev.eval(pt[0], pt[1])?;
        let err = (0..3).map(|c| (b[c] - exact[c]).norm_sqr()).sum::<f64>().sqrt() / enorm;
        wr(
            &mut w,
            format!(
                "{n},{},{},{},{},{},{}\n",
                num(b[0].re),
                num(b[1].re),
                num(b[2].re),
                num(err),
                num(sol.condition),
                num(sol.residual)
            ),
        )?;
        rep.put_num(&format!("result.n{n}.error"), err);
        rep.put_num(&format!("result.n{n}.condition"), sol.condition);
        rep.put_num(&format!("result.n{n}.residual"), sol.residual);
        rep.time(&format!("n{n}"), t1.elapsed().as_secs_f64());
    }
    w.flush().map_err(|e| io_err(&path, e))?;
    rep.time("total", t0.elapsed().as_secs_f64());
    let report = out.join("report.txt");
    rep.write(&report)?;
    Ok(Artifacts { report, files: vec![path] })
}

fn run_eigscan(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<Artifacts, CliError> {
    let t0 = Instant::now();
    let geo = build_geometry(cfg, 1)?;
    let ell = cfg.i32_or("ell", 1)?;
    if ell < 1 {
        return Err(bad("ell", "resonance scans need ell >= 1"));
    }
    let lo = cfg.f64("lambda_min")?;
    let hi = cfg.f64("lambda_max")?;
    if !(lo > 0.0 && hi > lo) {
        return Err(bad("lambda_max", format!("range [{lo}, {hi}] is empty or not positive")));
    }
    let disc = discretize(cfg, &geo, cfg.n()?, ell)?;
    let opts = ScanOptions { step: cfg.f64_or("scan_step", 0.02)?, ..ScanOptions::default() };
    if !(opts.step > 0.0) {
        return Err(bad("scan_step", "must be positive"));
    }
    let roots = eigen_scan(&disc, lo, hi, &opts, exec)?;
    let path = out.join("roots.csv");
    let mut w = create(&path)?;
    let mut body = String::from("lambda,error,sigma_min\n");
    let mut rep = Report::new(cfg);
    rep.put("result.roots", roots.len());
    for (k, r) in roots.iter().enumerate() {
        body.push_str(&format!("{},{},{}\n", num(r.lambda), num(r.error), num(r.sigma_min)));
        rep.put(&format!("result.root.{k:02}"), format!("{} {}", num(r.lambda), num(r.error)));
    }
    w.write_all(body.as_bytes()).and_then(|_| w.flush()).map_err(|e| io_err(&path, e))?;
    rep.time("total", t0.elapsed().as_secs_f64());
    let report = out.join("report.txt");
    rep.write(&report)?;
    Ok(Artifacts { report, files: vec![path] })
}

fn run_slice(cfg: &RunConfig, out: &Path, exec: Execution) -> Result<Artifacts, CliError> {
    let t0 = Instant::now();
    let (scfg, sol) = load_solution(cfg)?;
    if axis(cfg, "slice_r")?.is_none() {
        return Err(bad("slice_r", "missing"));
    }
    if axis(cfg, "slice_z")?.is_none() {
        return Err(bad("slice_z", "missing"));
    }
    let mut rep = Report::new(cfg);
    for (k, v) in &scfg.values {
        rep.put(&format!("source.{k}"), v);
    }
    let path = write_slice(cfg, &sol, out, &mut rep, exec)?.expect("slice axes checked");
    rep.time("total", t0.elapsed().as_secs_f64());
    let report = out.join("report.txt");
    rep.write(&report)?;
    Ok(Artifacts { report, files: vec![path] })
}

/// Runs the configured workflow, writing artifacts under `out`.
pub fn run(cfg: &RunConfig, out: &Path) -> Result<Artifacts, CliError> {
    let mode = cfg.mode()?;
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    let exec = Execution::default();
    log::info!("running {} into {}", mode.name(), out.display());
    match mode {
        Mode::Solve1 => run_solve(cfg, 1, out, exec),
        Mode::Solve2 => run_solve(cfg, 2, out, exec),
        Mode::Verify1 => run_verify(cfg, 1, out, exec),
        Mode::Verify2 => run_verify(cfg, 2, out, exec),
        Mode::Eigscan => run_eigscan(cfg, out, exec),
        Mode::Slice => run_slice(cfg, out, exec),
    }
}
