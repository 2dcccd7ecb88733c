//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test -p hubfield-cli --test acceptance`.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use hubfield::io::parse_density_csv;
use hubfield::{fit_cost_exponent, location_term, optimal_pure_location_density, DensityField, Grid};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hubfield")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

struct Run {
    stdout: String,
    elapsed: Duration,
    ok: bool,
}

fn run(args: &[&str]) -> Run {
    let t = Instant::now();
    let out = Command::new(bin()).args(args).output().expect("spawn hubfield");
    Run {
        stdout: String::from_utf8_lossy(&out.stdout).into_owned(),
        elapsed: t.elapsed(),
        ok: out.status.success(),
    }
}

fn json(r: &Run) -> Value {
    serde_json::from_str(&r.stdout).unwrap_or(Value::Null)
}

fn read(path: &Path) -> DensityField {
    parse_density_csv(&std::fs::read_to_string(path).unwrap()).unwrap()
}

struct Report {
    failed: usize,
}

impl Report {
    fn check(&mut self, id: &str, pass: bool, detail: String) {
        println!("{} criterion {id}: {detail}", if pass { "PASS" } else { "FAIL" });
        if !pass {
            self.failed += 1;
        }
    }
}

fn hexagon(rep: &mut Report) {
    let mut values = Vec::new();
    let mut slowest = Duration::ZERO;
    for p in ["0", "1", "2"] {
        let r = run(&["hexconst", "--p", p]);
        slowest = slowest.max(r.elapsed);
        values.push(r.stdout.trim().parse::<f64>().unwrap_or(f64::NAN));
    }
    let c2 = 5.0 * 3f64.sqrt() / 54.0;
    let pass = (values[0] - 1.0).abs() <= 1e-6
        && (values[1] - 0.377).abs() <= 1e-3
        && (values[2] - c2).abs() <= 1e-6
        && (values[2] - 0.16).abs() <= 5e-3
        && slowest < Duration::from_secs(1);
    rep.check(
        "1 (hexagon constants)",
        pass,
        format!(
            "C0={} C1={} C2={} (5√3/54={c2}), slowest run {:.3}s",
            values[0],
            values[1],
            values[2],
            slowest.as_secs_f64()
        ),
    );
}

/// Returns the hub location the CLI reports for the step density.
fn main_hub(rep: &mut Report) -> f64 {
    let rho = configs().join("step_density.csv");
    let r = run(&[
        "hub",
        "--rho",
        rho.to_str().unwrap(),
        "--p",
        "1",
        "--d",
        "1",
        "--q",
        "2",
    ]);
    let v = json(&r);
    let x0 = v["x0"][0].as_f64().unwrap_or(f64::NAN);
    let value = v["value"].as_f64().unwrap_or(f64::NAN);
    let fast = r.elapsed < Duration::from_secs(1);
    rep.check(
        "2a (main hub location)",
        r.ok && (x0 - (-0.1464)).abs() <= 1e-3 && fast,
        format!(
            "x0={x0:.6}, expected -0.1464; the stated density (1 on [-1,0], 2 on [0,1]) has its minimizer at \
             +(2-√2)/4, the expected value belongs to the mirrored density"
        ),
    );
    rep.check(
        "2b (main hub value)",
        r.ok && (value - 1.17678).abs() <= 1e-3 && fast,
        format!("H(x0)={value:.6}, expected 1.17678, {:.3}s", r.elapsed.as_secs_f64()),
    );
    x0
}

fn concentration(rep: &mut Report, x0: f64) {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("mu.csv");
    let rho = configs().join("step_density.csv");
    let r = run(&[
        "solve",
        "--rho",
        rho.to_str().unwrap(),
        "--eps",
        "1e-1,1e-2,1e-3",
        "--p",
        "1",
        "--d",
        "1",
        "--q",
        "2",
        "--tol",
        "0.02",
        "--max-iter",
        "200",
        "--out",
        out.to_str().unwrap(),
    ]);
    let v = json(&r);
    let runs = v.as_array().cloned().unwrap_or_default();
    let mut detail = Vec::new();
    let mut pass = r.ok && runs.len() == 3 && r.elapsed < Duration::from_secs(90);
    for (run, eps) in runs.iter().zip(["0.1", "0.01", "0.001"]) {
        let mu = read(&dir.path().join(format!("mu_eps{eps}.csv")));
        let mass_ok = (mu.integrate() - 1.0).abs() <= 1e-10;
        let iters = run["iterations"].as_u64().unwrap_or(u64::MAX);
        let conv = run["converged"].as_bool().unwrap_or(false);
        pass &= mass_ok && conv && iters <= 200;
        detail.push(format!("eps={eps}: {iters} it, mass-1={:.1e}", mu.integrate() - 1.0));
        if eps == "0.001" {
            let h = mu.grid().cell_measure();
            let xm = mu.grid().center(mu.argmax())[0];
            let cells = (xm - x0).abs() / h;
            pass &= cells <= 2.0;
            detail.push(format!("argmax {xm:.4} is {cells:.2} cells from hub {x0:.4}"));
        }
    }
    rep.check(
        "3 (solver concentration)",
        pass,
        format!("{}; {:.2}s total", detail.join("; "), r.elapsed.as_secs_f64()),
    );
}

fn scaling(rep: &mut Report) {
    let rho = configs().join("step_density.csv");
    let eps: Vec<String> = (0..5)
        .map(|k| format!("{}", 10f64.powf(-1.0 - 0.5 * k as f64)))
        .collect();
    let r = run(&[
        "scaling",
        "--rho",
        rho.to_str().unwrap(),
        "--p",
        "1",
        "--d",
        "1",
        "--eps",
        &eps.join(","),
    ]);
    let slope = json(&r)["slope"].as_f64().unwrap_or(f64::NAN);
    rep.check(
        "4 (scaling law)",
        r.ok && (slope - 0.5).abs() <= 0.1 && r.elapsed < Duration::from_secs(180),
        format!("slope={slope:.4}, expected 0.5±0.1, {:.2}s", r.elapsed.as_secs_f64()),
    );
}

fn mass_coupled(rep: &mut Report) {
    let dir = tempfile::tempdir().unwrap();
    let g = Grid::new_1d(-1.0, 1.0, 400).unwrap();
    let shape = |x: f64| 0.75 * (1.0 - x * x).max(0.0);
    let rho = DensityField::from_fn(g, |x| shape(x[0])).unwrap();
    let rho_path = dir.path().join("rho.csv");
    std::fs::write(&rho_path, hubfield::io::density_to_csv(&rho)).unwrap();
    let out = dir.path().join("nu.csv");
    let r = run(&[
        "masscoupled1d",
        "--rho",
        rho_path.to_str().unwrap(),
        "--A",
        "1",
        "--B",
        "0.25",
        "--q",
        "2",
        "--out",
        out.to_str().unwrap(),
    ]);
    if !r.ok {
        rep.check("5 (mass-coupled closed form)", false, "masscoupled1d failed".into());
        return;
    }
    let nu = read(&out);
    let exact = |y: f64| 0.5 * shape(y / 2.0);
    let peak = (0..nu.grid().len())
        .map(|k| exact(nu.grid().center(k)[0]))
        .fold(0.0, f64::max);
    let err = (0..nu.grid().len())
        .map(|k| (nu.value(k) - exact(nu.grid().center(k)[0])).abs())
        .fold(0.0, f64::max)
        / peak;
    let mass_err = (nu.integrate() - rho.integrate()).abs() / rho.integrate();
    rep.check(
        "5 (mass-coupled closed form)",
        err <= 0.02 && mass_err <= 1e-6 && r.elapsed < Duration::from_secs(10),
        format!(
            "sup rel error {err:.2e}, mass error {mass_err:.1e}, {:.2}s",
            r.elapsed.as_secs_f64()
        ),
    );
}

fn projected_gradient_oracle(rho: &[f64], h: f64, s: f64) -> Vec<f64> {
    let n = rho.len();
    let cost = |w: &[f64]| -> f64 { rho.iter().zip(w).map(|(r, w)| r * h.powf(1.0 + s) * w.powf(-s)).sum() };
    let project = |v: &[f64]| -> Vec<f64> {
        let mut u = v.to_vec();
        u.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let (mut acc, mut theta) = (0.0, 0.0);
        for (i, ui) in u.iter().enumerate() {
            acc += ui;
            let t = (acc - 1.0) / (i + 1) as f64;
            if ui - t > 0.0 {
                theta = t;
            }
        }
        v.iter().map(|x| (x - theta).max(1e-12)).collect()
    };
    let mut w = vec![1.0 / n as f64; n];
    let mut lr = 1e-3;
    let mut f = cost(&w);
    for _ in 0..200_000 {
        let g: Vec<f64> = rho
            .iter()
            .zip(&w)
            .map(|(r, w)| -s * r * h.powf(1.0 + s) * w.powf(-s - 1.0))
            .collect();
        let cand = project(&w.iter().zip(&g).map(|(w, g)| w - lr * g).collect::<Vec<_>>());
        let fc = cost(&cand);
        if fc <= f {
            let moved = cand.iter().zip(&w).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
            w = cand;
            f = fc;
            lr *= 1.2;
            if moved < 1e-15 {
                break;
            }
        } else {
            lr *= 0.5;
        }
    }
    w.iter().map(|m| m / h).collect()
}

fn pure_location(rep: &mut Report) {
    let t = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (10, 10)).unwrap();
    let rand_field = |rng: &mut ChaCha8Rng| {
        DensityField::new(g.clone(), (0..g.len()).map(|_| rng.gen_range(0.01..3.0)).collect()).unwrap()
    };
    let rho = rand_field(&mut rng);
    let best = location_term(&rho, &optimal_pure_location_density(&rho, 2.0, 2).unwrap(), 2.0, 2).unwrap();
    let beaten = (0..100)
        .filter(|_| {
            let mu = rand_field(&mut rng).normalize(1.0).unwrap();
            best <= location_term(&rho, &mu, 2.0, 2).unwrap() + 1e-9
        })
        .count();

    let g16 = Grid::new_1d(-1.0, 1.0, 16).unwrap();
    let step = DensityField::from_fn(g16.clone(), |x| if x[0] < 0.0 { 1.0 } else { 2.0 }).unwrap();
    let mu = optimal_pure_location_density(&step, 1.0, 1).unwrap();
    let oracle = projected_gradient_oracle(step.values(), g16.cell_measure(), 1.0);
    let gap = mu
        .values()
        .iter()
        .zip(&oracle)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    let el = t.elapsed();
    rep.check(
        "6 (pure-location optimality)",
        beaten == 100 && gap <= 1e-6 && el < Duration::from_secs(5),
        format!(
            "beats {beaten}/100 random fields, oracle gap {gap:.1e}, {:.2}s",
            el.as_secs_f64()
        ),
    );
}

fn breguet(rep: &mut Report) {
    let synthetic: Vec<(f64, f64)> = (0..40)
        .map(|i| 500.0 * 1.06f64.powi(i))
        .map(|r| (r, r.powf(0.7)))
        .collect();
    let q_syn = fit_cost_exponent(&synthetic).unwrap_or(f64::NAN);
    let cfg = configs().join("aircraft_example.json");
    let r = run(&[
        "cost-curve",
        "--aircraft",
        cfg.to_str().unwrap(),
        "--range-min",
        "500",
        "--range-max",
        "5000",
        "--points",
        "50",
    ]);
    let q = json(&r)["q"].as_f64().unwrap_or(f64::NAN);
    rep.check(
        "7 (Breguet exponent pipeline)",
        r.ok && (q_syn - 0.7).abs() <= 1e-6 && q > 0.5 && q < 1.0 && (q - 0.7).abs() <= 0.05,
        format!("synthetic fit {q_syn:.9}, example aircraft q={q:.4}"),
    );
}

fn main() {
    let mut rep = Report { failed: 0 };
    hexagon(&mut rep);
    let x0 = main_hub(&mut rep);
    concentration(&mut rep, x0);
    scaling(&mut rep);
    mass_coupled(&mut rep);
    pure_location(&mut rep);
    breguet(&mut rep);
    println!("INFO criterion 8: map-scale results excluded; covered by the module invariant suites");
    println!("{} criteria failed", rep.failed);
    if rep.failed > 0 {
        std::process::exit(1);
    }
}
