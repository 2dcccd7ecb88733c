use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use hubfield::airfreight::{read_centroids, AircraftParams, DemandCoefficients};
use hubfield::io::read_polygon;
use hubfield::{
    DensityField, DensityFormat, Grid, IterationMode, MassCoupledConfig, MultiplierMode, RoutingKernel, SolveResult,
    SolverConfig,
};
use log::warn;
use serde_json::{json, Value};

use crate::config::ConfigFile;
use crate::manifest::RunManifest;
use crate::{CliError, CostCurveArgs, DemandArgs, HexArgs, HubArgs, MassCoupledArgs, PurelocArgs, SolveArgs};

type Res<T> = Result<T, CliError>;

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn read_rho(path: &Path, m: &mut RunManifest) -> Res<DensityField> {
    m.input(path);
    hubfield::read_density(path, DensityFormat::from_path(path))
        .map_err(|e| usage(format!("cannot read density {}: {e}", path.display())))
}

fn write_field(field: &DensityField, path: &Path, m: &mut RunManifest) -> Res<()> {
    hubfield::write_density(field, path, DensityFormat::from_path(path))
        .map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    m.output(path);
    Ok(())
}

fn write_text(text: &str, path: &Path, m: &mut RunManifest) -> Res<()> {
    std::fs::write(path, text).map_err(|e| usage(format!("cannot write {}: {e}", path.display())))?;
    m.output(path);
    Ok(())
}

fn dim(d: i64) -> Res<usize> {
    match d {
        1 | 2 => Ok(d as usize),
        _ => Err(usage(format!("d must be 1 or 2, got {d}"))),
    }
}

fn count(n: i64, what: &str) -> Res<usize> {
    usize::try_from(n)
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| usage(format!("{what} must be a positive integer, got {n}")))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).unwrap_or_default());
}

/// `dir/stem_eps<eps>.ext` for sweeps.
fn sweep_path(out: &Path, eps: f64) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let name = match out.extension() {
        Some(ext) => format!("{stem}_eps{eps}.{}", ext.to_string_lossy()),
        None => format!("{stem}_eps{eps}"),
    };
    out.with_file_name(name)
}

struct SolveSetup {
    rho: DensityField,
    cfg: SolverConfig,
    eps: Vec<f64>,
}

fn solver_setup(a: &SolveArgs, file: &ConfigFile, m: &mut RunManifest, default_eps: &[f64]) -> Res<SolveSetup> {
    let rho_path = file
        .path(a.rho.clone(), "rho")?
        .ok_or_else(|| usage("missing required --rho"))?;
    let mut eps = file.list(a.eps.clone(), "eps")?;
    if eps.is_empty() {
        if default_eps.is_empty() {
            return Err(usage("missing required --eps"));
        }
        eps = default_eps.to_vec();
    }
    let p = file.get(a.p, "p", 1.0)?;
    let d = dim(file.get(a.d, "d", 1)?)?;
    let q = file.get(a.q, "q", 2.0)?;
    let k = file.get(a.k, "K", 1.0)?;
    let mode: IterationMode = file
        .get(a.mode.clone(), "mode", "derived".to_string())?
        .parse()
        .map_err(|e: hubfield::Error| usage(e.to_string()))?;
    let mult: MultiplierMode = file
        .get(a.mult.clone(), "mult", "bisect".to_string())?
        .parse()
        .map_err(|e: hubfield::Error| usage(e.to_string()))?;
    let tol = file.get(a.tol, "tol", 0.02)?;
    let max_iter = count(file.get(a.max_iter, "max_iter", 200)?, "max-iter")?;
    let damping = file.get(a.damping, "damping", 1.0)?;

    let kernel = RoutingKernel::new(k, q).map_err(CliError::from_lib("kernel"))?;
    let mut cfg = SolverConfig::new(eps[0], p, d, kernel);
    cfg.iteration_mode = mode;
    cfg.multiplier_mode = mult;
    cfg.tol = tol;
    cfg.max_iter = max_iter;
    cfg.damping = damping;
    for &e in &eps {
        cfg.with_eps(e).validate().map_err(CliError::from_lib("solver"))?;
    }

    m.set("rho", &rho_path);
    m.set("eps", &eps);
    m.set("p", p);
    m.set("d", d);
    m.set("q", q);
    m.set("K", k);
    m.set("mode", mode);
    m.set("mult", mult);
    m.set("tol", tol);
    m.set("max_iter", max_iter);
    m.set("damping", damping);

    let rho = read_rho(&rho_path, m)?;
    if rho.grid().dim() != d {
        return Err(usage(format!(
            "d = {d} but {} holds a {}D grid",
            rho_path.display(),
            rho.grid().dim()
        )));
    }
    Ok(SolveSetup { rho, cfg, eps })
}

fn solve_summary(r: &SolveResult) -> Value {
    let k = r.mu.argmax();
    let c = r.mu.grid().center(k);
    json!({
        "eps": r.eps,
        "iterations": r.iterations,
        "converged": r.converged,
        "final_change": r.final_change,
        "F": r.total_cost(),
        "location": r.cost_location,
        "routing": r.cost_routing,
        "multiplier": r.multiplier,
        "mass": r.mu.integrate(),
        "argmax": &c[..r.mu.grid().dim()],
    })
}

fn history_csv(results: &[SolveResult]) -> String {
    let mut out = format!("eps,{}\n", hubfield::IterationRecord::CSV_HEADER);
    for r in results {
        for h in &r.history {
            let _ = writeln!(out, "{},{}", r.eps, h.csv_row());
        }
    }
    out
}

pub fn solve(a: SolveArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("solve");
    let out = file
        .path(a.common.out.clone(), "out")?
        .ok_or_else(|| usage("missing required --out"))?;
    let log_path = file.path(a.log.clone(), "log")?;
    let s = solver_setup(&a, &file, &mut m, &[])?;
    m.set("out", &out);
    m.set("log", &log_path);
    m.primary(&out);
    let results = hubfield::eps_sweep(&s.rho, &s.cfg, &s.eps).map_err(CliError::from_lib("solver"))?;
    for r in &results {
        if !r.converged {
            warn!(
                "eps = {}: not converged after {} iterations (change {})",
                r.eps, r.iterations, r.final_change
            );
        }
        let path = if results.len() == 1 {
            out.clone()
        } else {
            sweep_path(&out, r.eps)
        };
        write_field(&r.mu, &path, &mut m)?;
    }
    if let Some(p) = &log_path {
        write_text(&history_csv(&results), p, &mut m)?;
    }
    let summary = Value::Array(results.iter().map(solve_summary).collect());
    print_json(&summary);
    m.finish(json!({ "runs": summary }))
}

pub fn scaling(a: SolveArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("scaling");
    let out = file.path(a.common.out.clone(), "out")?;
    let default_eps: Vec<f64> = (0..5).map(|k| 10f64.powf(-1.0 - 0.5 * k as f64)).collect();
    let s = solver_setup(&a, &file, &mut m, &default_eps)?;
    m.set("out", &out);
    let rep = hubfield::scaling_probe(&s.rho, &s.cfg, &s.eps).map_err(CliError::from_lib("solver"))?;
    if let Some(path) = &out {
        let mut text = String::from("eps,F,iterations\n");
        for ((e, f), it) in rep.points.iter().zip(&rep.iterations) {
            let _ = writeln!(text, "{e},{f},{it}");
        }
        write_text(&text, path, &mut m)?;
    }
    let summary = json!({
        "slope": rep.slope,
        "intercept": rep.intercept,
        "eps": rep.points.iter().map(|p| p.0).collect::<Vec<_>>(),
        "F": rep.points.iter().map(|p| p.1).collect::<Vec<_>>(),
        "iterations": rep.iterations,
    });
    print_json(&summary);
    m.finish(summary)
}

pub fn hub(a: HubArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("hub");
    let rho_path = file
        .path(a.rho.clone(), "rho")?
        .ok_or_else(|| usage("missing required --rho"))?;
    let out = file.path(a.common.out.clone(), "out")?;
    let p = file.get(a.p, "p", 1.0)?;
    let d = dim(file.get(a.d, "d", 1)?)?;
    let q = file.get(a.q, "q", 2.0)?;
    if !(p > 0.0) || !(q > 0.0) {
        return Err(usage(format!("p and q must be positive, got p={p}, q={q}")));
    }
    for (key, v) in [
        ("rho", json!(rho_path)),
        ("p", json!(p)),
        ("d", json!(d)),
        ("q", json!(q)),
        ("out", json!(out)),
    ] {
        m.set(key, v);
    }
    let rho = read_rho(&rho_path, &mut m)?;
    if rho.grid().dim() != d {
        return Err(usage(format!("d = {d} but the density is {}D", rho.grid().dim())));
    }
    let res = hubfield::find_main_hub(&rho, p, d, q).map_err(CliError::from_lib("hub"))?;
    if let Some(path) = &out {
        write_field(&res.scan, path, &mut m)?;
    }
    let summary = json!({
        "x0": res.x0,
        "value": res.value,
        "refined": res.refined,
        "constant": hubfield::hub_constant(p, d as f64),
    });
    print_json(&summary);
    m.finish(summary)
}

pub fn mass_coupled(a: MassCoupledArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("masscoupled1d");
    let rho_path = file
        .path(a.rho.clone(), "rho")?
        .ok_or_else(|| usage("missing required --rho"))?;
    let out = file
        .path(a.common.out.clone(), "out")?
        .ok_or_else(|| usage("missing required --out"))?;
    let map_out = file.path(a.map_out.clone(), "map_out")?;
    let coef_a = file.get(a.a, "A", 1.0)?;
    let coef_b = file.require(a.b, "B")?;
    let p = file.get(a.p, "p", 2.0)?;
    let q = file.get(a.q, "q", 2.0)?;
    let k = file.get(a.k, "K", 1.0)?;
    let tol = file.get(a.tol, "tol", 1e-10)?;
    let max_iter = count(file.get(a.max_iter, "max_iter", 200)?, "max-iter")?;
    let damping = file.get(a.damping, "damping", 1.0)?;
    let kernel = RoutingKernel::new(k, q).map_err(CliError::from_lib("kernel"))?;
    let cfg = MassCoupledConfig {
        a: coef_a,
        b: coef_b,
        p,
        kernel,
        tol,
        max_iter,
        damping,
    };
    cfg.validate().map_err(|e| match e {
        hubfield::Error::SingularKernelGradient(_) => usage(format!("masscoupled: {e}")),
        e => CliError::from_lib("masscoupled")(e),
    })?;
    for (key, v) in [
        ("rho", json!(rho_path)),
        ("A", json!(coef_a)),
        ("B", json!(coef_b)),
        ("p", json!(p)),
        ("q", json!(q)),
        ("K", json!(k)),
        ("tol", json!(tol)),
        ("max_iter", json!(max_iter)),
        ("damping", json!(damping)),
        ("out", json!(out)),
        ("map_out", json!(map_out)),
    ] {
        m.set(key, v);
    }
    let rho = read_rho(&rho_path, &mut m)?;
    if rho.grid().dim() != 1 {
        return Err(usage("masscoupled1d needs a 1D density"));
    }
    let res = hubfield::mass_coupled_solve(&rho, &cfg).map_err(CliError::from_lib("masscoupled"))?;
    if !res.converged {
        warn!(
            "not converged after {} iterations (change {})",
            res.iterations, res.final_change
        );
    }
    write_field(&res.nu, &out, &mut m)?;
    if let Some(path) = &map_out {
        let deriv = res.map.derivative();
        let mut text = String::from("x,T,T_prime\n");
        for (kk, (t, dt)) in res.map.values().iter().zip(&deriv).enumerate() {
            let _ = writeln!(text, "{},{t},{dt}", rho.grid().center(kk)[0]);
        }
        write_text(&text, path, &mut m)?;
    }
    let cost = hubfield::total_cost_mass(&rho, &res.nu, &cfg).map_err(CliError::from_lib("masscoupled"))?;
    let summary = json!({
        "iterations": res.iterations,
        "converged": res.converged,
        "final_change": res.final_change,
        "mass_rho": rho.integrate(),
        "mass_nu": res.nu.integrate(),
        "cost": cost,
        "support": [res.nu.grid().axes()[0].lo, res.nu.grid().axes()[0].hi],
    });
    print_json(&summary);
    m.finish(summary)
}

fn parse_sweep(s: &str) -> Res<Vec<f64>> {
    let parts: Vec<f64> = s
        .split(':')
        .map(|x| x.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| usage(format!("sweep must be start:stop:step, got '{s}'")))?;
    let [start, stop, step] = parts[..] else {
        return Err(usage(format!("sweep must be start:stop:step, got '{s}'")));
    };
    if !(step > 0.0) || !(stop >= start) {
        return Err(usage(format!("sweep needs step > 0 and stop >= start, got '{s}'")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| start + i as f64 * step).collect())
}

pub fn hexconst(a: HexArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("hexconst");
    let out = file.path(a.common.out.clone(), "out")?;
    let p = file.pick(a.p, "p")?;
    let sweep = file.pick(a.sweep.clone(), "sweep")?;
    m.set("p", p);
    m.set("sweep", &sweep);
    m.set("out", &out);
    let text = match (p, &sweep) {
        (Some(p), None) => {
            let c = hubfield::hexagon_constant(p).map_err(CliError::from_lib("asymptotics"))?;
            format!("{c}\n")
        }
        (None, Some(s)) => {
            let mut text = String::from("p,C\n");
            for p in parse_sweep(s)? {
                let c = hubfield::hexagon_constant(p).map_err(CliError::from_lib("asymptotics"))?;
                let _ = writeln!(text, "{p},{c}");
            }
            text
        }
        _ => return Err(usage("give exactly one of --p or --sweep")),
    };
    match &out {
        Some(path) => write_text(&text, path, &mut m)?,
        None => print!("{text}"),
    }
    m.finish(Value::Null)
}

fn build_grid(bounds: &[f64], n: &[usize]) -> Res<Grid> {
    let g = match (bounds, n) {
        ([a, b], [nx]) => Grid::new_1d(*a, *b, *nx),
        ([a, b, c, d], [nx, ny]) => Grid::new_2d((*a, *b), (*c, *d), (*nx, *ny)),
        _ => return Err(usage("--bounds needs 2 or 4 values and --n 1 or 2 matching counts")),
    };
    g.map_err(CliError::from_lib("grid"))
}

pub fn demand(a: DemandArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("demand");
    let centroids = file
        .path(a.centroids.clone(), "centroids")?
        .ok_or_else(|| usage("missing required --centroids"))?;
    let coef_path = file
        .path(a.coef.clone(), "coef")?
        .ok_or_else(|| usage("missing required --coef"))?;
    let out = file
        .path(a.common.out.clone(), "out")?
        .ok_or_else(|| usage("missing required --out"))?;
    let polygon = file.path(a.polygon.clone(), "polygon")?;
    let bounds = file.list(a.bounds.clone(), "bounds")?;
    let n: Vec<usize> = if a.n.is_empty() {
        file.get(None, "n", Vec::new())?
    } else {
        a.n.clone()
    };
    let bandwidth = file.require(a.bandwidth, "bandwidth")?;
    for (key, v) in [
        ("centroids", json!(centroids)),
        ("coef", json!(coef_path)),
        ("polygon", json!(polygon)),
        ("bounds", json!(bounds)),
        ("n", json!(n)),
        ("bandwidth", json!(bandwidth)),
        ("out", json!(out)),
    ] {
        m.set(key, v);
    }
    let mut grid = build_grid(&bounds, &n)?;
    if let Some(p) = &polygon {
        m.input(p);
        let poly = read_polygon(p).map_err(|e| usage(format!("polygon {}: {e}", p.display())))?;
        grid = grid.with_polygon(&poly).map_err(CliError::from_lib("grid"))?;
    }
    m.input(&centroids);
    let records = read_centroids(&centroids).map_err(|e| usage(format!("centroids {}: {e}", centroids.display())))?;
    m.input(&coef_path);
    let coef_text =
        std::fs::read_to_string(&coef_path).map_err(|e| usage(format!("cannot read {}: {e}", coef_path.display())))?;
    let coef = DemandCoefficients::from_json(&coef_text).map_err(|e| usage(format!("coefficients: {e}")))?;
    let field = hubfield::demand_field(&records, &coef, &grid, bandwidth).map_err(CliError::from_lib("airfreight"))?;
    write_field(&field, &out, &mut m)?;
    let summary = json!({
        "records": records.len(),
        "total_demand": field.integrate(),
    });
    print_json(&summary);
    m.finish(summary)
}

pub fn cost_curve(a: CostCurveArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("cost-curve");
    let aircraft_path = file
        .path(a.aircraft.clone(), "aircraft")?
        .ok_or_else(|| usage("missing required --aircraft"))?;
    let out = file.path(a.common.out.clone(), "out")?;
    let lo = file.get(a.range_min, "range_min", 500.0)?;
    let hi = file.get(a.range_max, "range_max", 5000.0)?;
    let points = count(file.get(a.points, "points", 50)?, "points")?;
    let scale = file.get(a.scale, "scale", 1.0)?;
    if !(lo > 0.0 && hi > lo) || points < 3 || !(scale > 0.0) {
        return Err(usage("need 0 < range-min < range-max, points >= 3 and scale > 0"));
    }
    for (key, v) in [
        ("aircraft", json!(aircraft_path)),
        ("range_min", json!(lo)),
        ("range_max", json!(hi)),
        ("points", json!(points)),
        ("scale", json!(scale)),
        ("out", json!(out)),
    ] {
        m.set(key, v);
    }
    m.input(&aircraft_path);
    let text = std::fs::read_to_string(&aircraft_path)
        .map_err(|e| usage(format!("cannot read {}: {e}", aircraft_path.display())))?;
    let aircraft = AircraftParams::from_json(&text).map_err(|e| usage(format!("aircraft: {e}")))?;
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    let ranges: Vec<f64> = (0..points).map(|i| lo * (ratio * i as f64).exp()).collect();
    let per_km =
        hubfield::cost_per_ton_km_curve(&ranges, &aircraft, scale).map_err(CliError::from_lib("airfreight"))?;
    let total = hubfield::integrate_cost_curve(&per_km).map_err(CliError::from_lib("airfreight"))?;
    let q = hubfield::fit_cost_exponent(&total).map_err(CliError::from_lib("airfreight"))?;
    if let Some(path) = &out {
        let mut csv = String::from("R,cost_per_ton_km,cost_per_ton\n");
        for (pk, t) in per_km.iter().zip(&total) {
            let _ = writeln!(csv, "{},{},{}", pk.0, pk.1, t.1);
        }
        write_text(&csv, path, &mut m)?;
    }
    let summary = json!({ "q": q });
    print_json(&summary);
    m.finish(summary)
}

pub fn pureloc(a: PurelocArgs) -> Res<()> {
    let file = ConfigFile::load(a.common.config.as_deref())?;
    let mut m = RunManifest::start("pureloc");
    let rho_path = file
        .path(a.rho.clone(), "rho")?
        .ok_or_else(|| usage("missing required --rho"))?;
    let out = file
        .path(a.common.out.clone(), "out")?
        .ok_or_else(|| usage("missing required --out"))?;
    let p = file.get(a.p, "p", 1.0)?;
    let d = dim(file.get(a.d, "d", 1)?)?;
    if !(p > 0.0) {
        return Err(usage(format!("p must be positive, got {p}")));
    }
    for (key, v) in [
        ("rho", json!(rho_path)),
        ("p", json!(p)),
        ("d", json!(d)),
        ("out", json!(out)),
    ] {
        m.set(key, v);
    }
    let rho = read_rho(&rho_path, &mut m)?;
    if rho.grid().dim() != d {
        return Err(usage(format!("d = {d} but the density is {}D", rho.grid().dim())));
    }
    let mu = hubfield::optimal_pure_location_density(&rho, p, d).map_err(CliError::from_lib("asymptotics"))?;
    write_field(&mu, &out, &mut m)?;
    let loc = hubfield::location_term(&rho, &mu, p, d).map_err(CliError::from_lib("asymptotics"))?;
    let summary = json!({ "location": loc, "mass": mu.integrate() });
    print_json(&summary);
    m.finish(summary)
}
