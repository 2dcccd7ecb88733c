//! Fixed-point solver for the location–routing functional
//!
//! ```text
//! F_ε(μ) = ε ∫ ρ / μ^{p/d} dx + ∫∫ V(x − y) dμ(x) dμ(y)
//! ```
//!
//! over probability densities `μ`, together with its rescaled form `G_ε`,
//! ε-sweeps and the `min F_ε ∼ ε^β` scaling probe.
//!
//! Stationarity of `F_ε` under the mass constraint reads
//! `ε·(p/d)·ρ·μ^{−1−p/d} = c + 2V*μ`, where `c` (the negated Lagrange
//! multiplier) must exceed `−2·min(V*μ)` on the support of `ρ`. The default
//! [`IterationMode::Derived`] iteration inverts this relation pointwise:
//! `μ̂ = (ε(p/d)ρ / (c + 2V*μ))^{1/(1+p/d)}`.

use std::fmt;
use std::str::FromStr;

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::kernel::{ConvolutionOperator, RoutingKernel};

/// Exponent pair `(α, β) = ((p/d)/(1+p/d), 1/(1+p/d))`; `α + β = 1`.
pub fn exponents(p: f64, d: f64) -> (f64, f64) {
    let s = p / d;
    (s / (1.0 + s), 1.0 / (1.0 + s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IterationMode {
    /// Pointwise inversion of the stationarity condition.
    Derived,
    /// `μ̂ = (ερ / (c + V*μ))^{p/d+1}`, as printed alongside the numerical scheme.
    PaperLiteral,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MultiplierMode {
    /// Fixed `c = ε^β`, then rescale `μ̂` to unit mass.
    Renormalize,
    /// Solve `∫μ̂(c) = 1` for `c` (derived iteration only).
    Bisect,
}

impl FromStr for IterationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "derived" => Ok(IterationMode::Derived),
            "paper" | "paper_literal" => Ok(IterationMode::PaperLiteral),
            _ => Err(Error::InvalidConfig(format!("unknown iteration mode '{s}'"))),
        }
    }
}

impl FromStr for MultiplierMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "renorm" | "renormalize" => Ok(MultiplierMode::Renormalize),
            "bisect" => Ok(MultiplierMode::Bisect),
            _ => Err(Error::InvalidConfig(format!("unknown multiplier mode '{s}'"))),
        }
    }
}

impl fmt::Display for IterationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            IterationMode::Derived => "derived",
            IterationMode::PaperLiteral => "paper",
        })
    }
}

impl fmt::Display for MultiplierMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MultiplierMode::Renormalize => "renorm",
            MultiplierMode::Bisect => "bisect",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    pub eps: f64,
    pub p: f64,
    pub d: usize,
    pub kernel: RoutingKernel,
    pub iteration_mode: IterationMode,
    pub multiplier_mode: MultiplierMode,
    /// Relative sup-norm stop threshold.
    pub tol: f64,
    pub max_iter: usize,
    /// Relaxation weight θ ∈ (0, 1] of the new iterate.
    pub damping: f64,
}

impl SolverConfig {
    pub fn new(eps: f64, p: f64, d: usize, kernel: RoutingKernel) -> Self {
        SolverConfig {
            eps,
            p,
            d,
            kernel,
            iteration_mode: IterationMode::Derived,
            multiplier_mode: MultiplierMode::Bisect,
            tol: 0.02,
            max_iter: 200,
            damping: 1.0,
        }
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        SolverConfig { eps, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return bad(format!("eps must be positive, got {}", self.eps));
        }
        if !(self.p > 0.0 && self.p.is_finite()) {
            return bad(format!("p must be positive, got {}", self.p));
        }
        if !(self.d == 1 || self.d == 2) {
            return bad(format!("d must be 1 or 2, got {}", self.d));
        }
        if !(self.tol > 0.0) {
            return bad(format!("tol must be positive, got {}", self.tol));
        }
        if self.max_iter == 0 {
            return bad("max_iter must be at least 1".into());
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return bad(format!("damping must lie in (0, 1], got {}", self.damping));
        }
        if self.iteration_mode == IterationMode::PaperLiteral && self.multiplier_mode == MultiplierMode::Bisect {
            return bad("bisect multiplier is only defined for the derived iteration".into());
        }
        Ok(())
    }

    fn ratio(&self) -> f64 {
        self.p / self.d as f64
    }

    fn check_grid(&self, rho: &DensityField) -> Result<()> {
        if rho.grid().dim() != self.d {
            return Err(Error::InvalidConfig(format!(
                "d = {} but the density lives on a {}D grid",
                self.d,
                rho.grid().dim()
            )));
        }
        Ok(())
    }
}

/// Per-iteration diagnostics (`iter,change,F,location,routing,c`).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct IterationRecord {
    pub iter: usize,
    pub change: f64,
    pub total_cost: f64,
    pub location: f64,
    pub routing: f64,
    pub multiplier: f64,
}

impl IterationRecord {
    pub const CSV_HEADER: &'static str = "iter,change,F,location,routing,c";

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.iter, self.change, self.total_cost, self.location, self.routing, self.multiplier
        )
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub eps: f64,
    pub mu: DensityField,
    pub iterations: usize,
    pub final_change: f64,
    pub converged: bool,
    /// `∫ρ/μ^{p/d}` (without ε).
    pub cost_location: f64,
    pub cost_routing: f64,
    pub multiplier: f64,
    pub history: Vec<IterationRecord>,
}

impl SolveResult {
    /// `F_ε` at the returned density.
    pub fn total_cost(&self) -> f64 {
        self.eps * self.cost_location + self.cost_routing
    }
}

/// `Σ ρ/μ^{p/d}·|cell|` over cells with `ρ > 0`; `+∞` where `μ = 0 < ρ`.
pub fn location_term(rho: &DensityField, mu: &DensityField, p: f64, d: usize) -> Result<f64> {
    rho.grid().check_same(mu.grid())?;
    if rho.grid().dim() != d {
        return Err(Error::GridMismatch(format!("d = {d} on a {}D grid", rho.grid().dim())));
    }
    let s = p / d as f64;
    let mut total = 0.0;
    for (r, m) in rho.values().iter().zip(mu.values()) {
        if *r > 0.0 {
            if *m <= 0.0 {
                return Ok(f64::INFINITY);
            }
            total += r / m.powf(s);
        }
    }
    Ok(total * rho.grid().cell_measure())
}

/// `F_ε(μ) = ε·location_term + routing_energy`.
pub fn total_cost(rho: &DensityField, mu: &DensityField, cfg: &SolverConfig) -> Result<f64> {
    let loc = location_term(rho, mu, cfg.p, cfg.d)?;
    Ok(cfg.eps * loc + cfg.kernel.routing_energy(mu))
}

/// `G_ε(μ) = ε^α·location_term + ε^{−β}·routing_energy`.
pub fn rescaled_cost(rho: &DensityField, mu: &DensityField, cfg: &SolverConfig) -> Result<f64> {
    let (alpha, beta) = exponents(cfg.p, cfg.d as f64);
    let loc = location_term(rho, mu, cfg.p, cfg.d)?;
    Ok(cfg.eps.powf(alpha) * loc + cfg.eps.powf(-beta) * cfg.kernel.routing_energy(mu))
}

/// One update `μ_n ↦ μ_{n+1}`; returns the new density and the `c` used.
pub fn iterate_once(rho: &DensityField, mu_n: &DensityField, cfg: &SolverConfig) -> Result<(DensityField, f64)> {
    cfg.validate()?;
    cfg.check_grid(rho)?;
    rho.grid().check_same(mu_n.grid())?;
    let op = ConvolutionOperator::new(&cfg.kernel, rho.grid());
    let conv = op.apply(mu_n)?;
    step(rho, mu_n, &conv, cfg)
}

fn step(rho: &DensityField, mu_n: &DensityField, conv: &[f64], cfg: &SolverConfig) -> Result<(DensityField, f64)> {
    let s = cfg.ratio();
    let (_, beta) = exponents(cfg.p, cfg.d as f64);
    let r = rho.values();
    let (raw, c) = match (cfg.iteration_mode, cfg.multiplier_mode) {
        (IterationMode::Derived, MultiplierMode::Renormalize) => {
            let c = cfg.eps.powf(beta);
            let raw = pointwise(r, |k| (cfg.eps * s * r[k] / (c + 2.0 * conv[k])).powf(beta));
            (raw, c)
        }
        (IterationMode::PaperLiteral, MultiplierMode::Renormalize) => {
            let c = cfg.eps.powf(beta);
            let raw = pointwise(r, |k| (cfg.eps * r[k] / (c + conv[k])).powf(s + 1.0));
            (raw, c)
        }
        (IterationMode::Derived, MultiplierMode::Bisect) => solve_multiplier(rho, conv, cfg.eps * s, beta)?,
        (IterationMode::PaperLiteral, MultiplierMode::Bisect) => {
            return Err(Error::InvalidConfig(
                "bisect multiplier needs the derived iteration".into(),
            ))
        }
    };
    let hat = DensityField::new(rho.grid().clone(), raw)
        .map_err(|_| Error::MassEquationUnsolvable)?
        .normalize(1.0)?;
    let next = if cfg.damping < 1.0 {
        mu_n.combine(1.0 - cfg.damping, &hat, cfg.damping)?
    } else {
        hat
    };
    Ok((next, c))
}

fn pointwise(rho: &[f64], f: impl Fn(usize) -> f64) -> Vec<f64> {
    (0..rho.len()).map(|k| if rho[k] > 0.0 { f(k) } else { 0.0 }).collect()
}

/// Finds `c` with `Σ (a·ρ/(c + 2V*μ))^β·|cell| = 1`.
///
/// Works in the gap `g = c + min 2V*μ > 0` (minimum over the support of
/// `ρ`), bisecting geometrically so the concentrated cell keeps full relative
/// precision even when `g` is many orders of magnitude below `c`.
fn solve_multiplier(rho: &DensityField, conv: &[f64], a: f64, beta: f64) -> Result<(Vec<f64>, f64)> {
    let r = rho.values();
    let h = rho.grid().cell_measure();
    let floor = r
        .iter()
        .zip(conv)
        .filter(|(r, _)| **r > 0.0)
        .map(|(_, v)| 2.0 * v)
        .fold(f64::INFINITY, f64::min);
    if !floor.is_finite() {
        return Err(Error::DegenerateDensity);
    }
    let excess: Vec<f64> = conv.iter().map(|v| 2.0 * v - floor).collect();
    let values = |g: f64| pointwise(r, |k| (a * r[k] / (g + excess[k].max(0.0))).powf(beta));
    let mass = |g: f64| values(g).iter().sum::<f64>() * h;

    let (mut lo, mut hi) = (1.0, 1.0);
    while mass(hi) > 1.0 {
        hi *= 4.0;
        if !hi.is_finite() {
            return Err(Error::MassEquationUnsolvable);
        }
    }
    while mass(lo) < 1.0 {
        lo *= 0.25;
        if lo < 1e-300 {
            return Err(Error::MassEquationUnsolvable);
        }
    }
    for _ in 0..400 {
        let mid = (lo * hi).sqrt();
        if !(mid > lo && mid < hi) {
            break;
        }
        let m = mass(mid);
        if (m - 1.0).abs() <= 1e-14 {
            lo = mid;
            hi = mid;
            break;
        }
        if m > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let g = 0.5 * (lo + hi);
    let m = mass(g);
    if !m.is_finite() || (m - 1.0).abs() > 1e-8 {
        return Err(Error::MassEquationUnsolvable);
    }
    Ok((values(g), g - floor))
}

fn relative_change(old: &DensityField, new: &DensityField) -> f64 {
    let diff = old
        .values()
        .iter()
        .zip(new.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    diff / new.max_value()
}

/// Runs the iteration from the uniform probability on the active cells.
pub fn fixed_point_solve(rho: &DensityField, cfg: &SolverConfig) -> Result<SolveResult> {
    let start = DensityField::uniform_probability(rho.grid().clone());
    fixed_point_solve_from(rho, cfg, start)
}

/// Runs the iteration from a given probability density.
pub fn fixed_point_solve_from(rho: &DensityField, cfg: &SolverConfig, start: DensityField) -> Result<SolveResult> {
    cfg.validate()?;
    cfg.check_grid(rho)?;
    rho.grid().check_same(start.grid())?;
    if !(rho.integrate() > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    if cfg.eps < 1e-4 {
        warn!(
            "eps = {} is below 1e-4; expect round-off in the concentrated cell",
            cfg.eps
        );
    }
    let op = ConvolutionOperator::new(&cfg.kernel, rho.grid());
    let mut mu = start.normalize(1.0)?;
    let mut conv = op.apply(&mu)?;
    let mut history = Vec::new();
    let mut change = f64::INFINITY;
    let mut c = f64::NAN;
    let mut iterations = 0;
    let mut location = f64::NAN;
    let mut routing = f64::NAN;
    for it in 1..=cfg.max_iter {
        let (next, c_used) = step(rho, &mu, &conv, cfg)?;
        change = relative_change(&mu, &next);
        mu = next;
        c = c_used;
        iterations = it;
        conv = op.apply(&mu)?;
        location = location_term(rho, &mu, cfg.p, cfg.d)?;
        routing = op.energy_from(&mu, &conv);
        let rec = IterationRecord {
            iter: it,
            change,
            total_cost: cfg.eps * location + routing,
            location,
            routing,
            multiplier: c,
        };
        debug!("{}", rec.csv_row());
        history.push(rec);
        if change <= cfg.tol {
            break;
        }
    }
    Ok(SolveResult {
        eps: cfg.eps,
        mu,
        iterations,
        final_change: change,
        converged: change <= cfg.tol,
        cost_location: location,
        cost_routing: routing,
        multiplier: c,
        history,
    })
}

/// Solves for each ε in order, starting each solve from the previous
/// solution (the first from the uniform density).
///
/// Decreasing sweeps keep the concentration point on the hub: a cold start
/// at small ε collapses onto whichever cell the first iterate favors and
/// cannot move by less than half a cell per step afterwards.
pub fn eps_sweep(rho: &DensityField, cfg: &SolverConfig, eps_list: &[f64]) -> Result<Vec<SolveResult>> {
    let mut out: Vec<SolveResult> = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        let start = match out.last() {
            Some(prev) => prev.mu.clone(),
            None => DensityField::uniform_probability(rho.grid().clone()),
        };
        out.push(fixed_point_solve_from(rho, &cfg.with_eps(eps), start)?);
    }
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct ScalingReport {
    pub slope: f64,
    pub intercept: f64,
    /// `(ε, min F_ε)` per solve.
    pub points: Vec<(f64, f64)>,
    pub iterations: Vec<usize>,
}

/// Least-squares slope of `log min F_ε` against `log ε` over a decreasing sweep.
pub fn scaling_probe(rho: &DensityField, cfg: &SolverConfig, eps_list: &[f64]) -> Result<ScalingReport> {
    if eps_list.len() < 3 {
        return Err(Error::InvalidConfig(
            "scaling probe needs at least 3 values of eps".into(),
        ));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidConfig("eps values must be strictly decreasing".into()));
    }
    if let Some(e) = eps_list.iter().find(|&&e| e < 1e-4) {
        return Err(Error::InvalidConfig(format!("eps = {e} is below 1e-4")));
    }
    let results = eps_sweep(rho, cfg, eps_list)?;
    let failed: Vec<f64> = results.iter().filter(|r| !r.converged).map(|r| r.eps).collect();
    if !failed.is_empty() {
        return Err(Error::NotConverged(failed));
    }
    let points: Vec<(f64, f64)> = results.iter().map(|r| (r.eps, r.total_cost())).collect();
    let xy: Vec<(f64, f64)> = points.iter().map(|(e, f)| (e.ln(), f.ln())).collect();
    let (slope, intercept) = least_squares(&xy);
    Ok(ScalingReport {
        slope,
        intercept,
        points,
        iterations: results.iter().map(|r| r.iterations).collect(),
    })
}

/// Ordinary least-squares line `y = slope·x + intercept`.
pub(crate) fn least_squares(xy: &[(f64, f64)]) -> (f64, f64) {
    let n = xy.len() as f64;
    let mx = xy.iter().map(|p| p.0).sum::<f64>() / n;
    let my = xy.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = xy.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xy.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use approx::assert_relative_eq;

    fn step_density(n: usize) -> DensityField {
        let g = Grid::new_1d(-1.0, 1.0, n).unwrap();
        DensityField::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 2.0 })
            .unwrap()
            .normalize(1.0)
            .unwrap()
    }

    fn cfg(eps: f64) -> SolverConfig {
        SolverConfig::new(eps, 1.0, 1, RoutingKernel::quadratic())
    }

    #[test]
    fn exponents_sum_to_one() {
        for (p, d) in [(1.0, 1.0), (2.0, 2.0), (1.0, 2.0), (0.3, 1.0), (5.0, 2.0)] {
            let (a, b) = exponents(p, d);
            assert_relative_eq!(a + b, 1.0, epsilon = 1e-15);
            assert_relative_eq!(a, b * p / d, epsilon = 1e-15);
        }
    }

    #[test]
    fn location_term_examples() {
        let g = Grid::new_1d(0.0, 1.0, 50).unwrap();
        let u = DensityField::uniform_probability(g);
        assert_relative_eq!(location_term(&u, &u, 1.0, 1).unwrap(), 1.0, epsilon = 1e-12);
        assert_relative_eq!(location_term(&u, &u, 0.37, 1).unwrap(), 1.0, epsilon = 1e-12);

        let rho = step_density(40);
        let mu = DensityField::uniform_probability(rho.grid().clone());
        assert_relative_eq!(location_term(&rho, &mu, 1.0, 1).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn location_term_reports_infinity() {
        let g = Grid::new_1d(0.0, 1.0, 4).unwrap();
        let rho = DensityField::uniform_probability(g.clone());
        let mu = DensityField::new(g, vec![0.0, 4.0 / 3.0, 4.0 / 3.0, 4.0 / 3.0]).unwrap();
        assert_eq!(location_term(&rho, &mu, 1.0, 1).unwrap(), f64::INFINITY);
    }

    #[test]
    fn location_term_grid_mismatch() {
        let a = DensityField::uniform_probability(Grid::new_1d(0.0, 1.0, 4).unwrap());
        let b = DensityField::uniform_probability(Grid::new_1d(0.0, 1.0, 5).unwrap());
        assert!(matches!(location_term(&a, &b, 1.0, 1), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn total_cost_uniform_unit_interval() {
        let g = Grid::new_1d(0.0, 1.0, 1000).unwrap();
        let u = DensityField::uniform_probability(g);
        let f = total_cost(&u, &u, &cfg(0.01)).unwrap();
        assert!((f - (0.01 + 1.0 / 6.0)).abs() < 1e-6);
    }

    #[test]
    fn dirac_has_only_location_cost() {
        let rho = step_density(20);
        let mut v = vec![0.0; 20];
        v[7] = 1.0 / rho.grid().cell_measure();
        let mu = DensityField::new(rho.grid().clone(), v).unwrap();
        let c = cfg(0.1);
        // μ vanishes where ρ > 0, so both costs are infinite through the location term
        assert_eq!(total_cost(&rho, &mu, &c).unwrap(), f64::INFINITY);
        let rho_point = mu.clone();
        let f = total_cost(&rho_point, &mu, &c).unwrap();
        assert_relative_eq!(
            f,
            0.1 * location_term(&rho_point, &mu, 1.0, 1).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn rescaled_cost_relation() {
        let rho = step_density(30);
        let mu = DensityField::uniform_probability(rho.grid().clone());
        let c = cfg(0.04);
        let (alpha, beta) = exponents(1.0, 1.0);
        let loc = location_term(&rho, &mu, 1.0, 1).unwrap();
        let e = c.kernel.routing_energy(&mu);
        let g = rescaled_cost(&rho, &mu, &c).unwrap();
        assert_relative_eq!(g, 0.04f64.powf(alpha) * loc + 0.04f64.powf(-beta) * e, epsilon = 1e-14);
    }

    #[test]
    fn constant_potential_gives_power_of_rho() {
        // flat V*μ fed straight into the update
        let rho = step_density(10);
        let mu = DensityField::uniform_probability(rho.grid().clone());
        let flat = vec![0.7; 10];
        let mut c = cfg(0.3);
        c.multiplier_mode = MultiplierMode::Renormalize;
        let (next, _) = step(&rho, &mu, &flat, &c).unwrap();
        let expect = rho.map(|v| v.sqrt()).unwrap().normalize(1.0).unwrap();
        for k in 0..10 {
            assert_relative_eq!(next.value(k), expect.value(k), epsilon = 1e-12);
        }
        c.multiplier_mode = MultiplierMode::Bisect;
        let (next, _) = step(&rho, &mu, &flat, &c).unwrap();
        for k in 0..10 {
            assert_relative_eq!(next.value(k), expect.value(k), epsilon = 1e-10);
        }
    }

    #[test]
    fn single_cell_support_collects_all_mass() {
        let g = Grid::new_1d(-1.0, 1.0, 16).unwrap();
        let mut v = vec![0.0; 16];
        v[5] = 3.0;
        let rho = DensityField::new(g.clone(), v).unwrap();
        for mult in [MultiplierMode::Renormalize, MultiplierMode::Bisect] {
            let mut c = cfg(0.01);
            c.multiplier_mode = mult;
            let (next, _) = iterate_once(&rho, &DensityField::uniform_probability(g.clone()), &c).unwrap();
            assert_relative_eq!(next.value(5) * g.cell_measure(), 1.0, epsilon = 1e-12);
            assert_eq!(next.values().iter().filter(|&&x| x > 0.0).count(), 1);
        }
    }

    #[test]
    fn iterate_preserves_symmetry() {
        let g = Grid::new_1d(-1.0, 1.0, 60).unwrap();
        let rho = DensityField::from_fn(g.clone(), |x| 1.0 + x[0] * x[0])
            .unwrap()
            .normalize(1.0)
            .unwrap();
        let mu = DensityField::from_fn(g, |x| 2.0 - x[0].abs())
            .unwrap()
            .normalize(1.0)
            .unwrap();
        for (mode, mult) in [
            (IterationMode::Derived, MultiplierMode::Bisect),
            (IterationMode::Derived, MultiplierMode::Renormalize),
            (IterationMode::PaperLiteral, MultiplierMode::Renormalize),
        ] {
            let mut c = cfg(0.05);
            c.iteration_mode = mode;
            c.multiplier_mode = mult;
            let (next, _) = iterate_once(&rho, &mu, &c).unwrap();
            for k in 0..60 {
                assert!((next.value(k) - next.value(59 - k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn bisect_satisfies_stationarity() {
        let rho = step_density(80);
        let c = cfg(0.02);
        let mu = DensityField::uniform_probability(rho.grid().clone());
        let (next, mult) = iterate_once(&rho, &mu, &c).unwrap();
        assert_relative_eq!(next.integrate(), 1.0, epsilon = 1e-12);
        let conv = c.kernel.convolve(&mu);
        for k in 0..80 {
            let lhs = 0.02 * rho.value(k) * next.value(k).powi(-2);
            assert_relative_eq!(lhs, mult + 2.0 * conv.value(k), max_relative = 1e-9);
        }
    }

    #[test]
    fn paper_literal_with_bisect_is_rejected() {
        let mut c = cfg(0.1);
        c.iteration_mode = IterationMode::PaperLiteral;
        assert!(c.validate().is_err());
        c.multiplier_mode = MultiplierMode::Renormalize;
        assert!(c.validate().is_ok());
    }

    #[test]
    fn uniform_rho_solution_is_centered() {
        let g = Grid::new_1d(-1.0, 1.0, 101).unwrap();
        let rho = DensityField::uniform_probability(g.clone());
        let r = fixed_point_solve(&rho, &cfg(0.01)).unwrap();
        assert!(r.converged);
        let k = r.mu.argmax();
        assert!(g.center(k)[0].abs() <= g.cell_measure());
        for k in 0..101 {
            assert!((r.mu.value(k) - r.mu.value(100 - k)).abs() < 1e-10 * r.mu.max_value());
        }
    }

    #[test]
    fn scaling_probe_rejects_bad_lists() {
        let rho = step_density(20);
        assert!(scaling_probe(&rho, &cfg(0.1), &[0.1, 0.01]).is_err());
        assert!(scaling_probe(&rho, &cfg(0.1), &[0.01, 0.1, 0.001]).is_err());
        assert!(scaling_probe(&rho, &cfg(0.1), &[0.1, 0.01, 1e-5]).is_err());
    }

    #[test]
    fn least_squares_exact_line() {
        let xy: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, 0.5 * i as f64 - 2.0)).collect();
        let (s, b) = least_squares(&xy);
        assert_relative_eq!(s, 0.5, epsilon = 1e-14);
        assert_relative_eq!(b, -2.0, epsilon = 1e-14);
    }
}
