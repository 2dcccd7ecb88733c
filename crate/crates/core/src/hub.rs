//! Main hub search: the limit of the optimal densities as ε → 0 is a Dirac
//! mass at the minimizer of
//!
//! ```text
//! H(x₀) = ∫ ρ(x)^β · |x − x₀|^{αq} dx
//! ```
//!
//! with `α = (p/d)/(1+p/d)` and `β = 1/(1+p/d)`. The multiplicative constant
//! [`hub_constant`] does not move the minimizer and is kept out of `H`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{distance, to_point, DensityField, Grid};
use crate::solver::exponents;

/// Subcells per axis used for the 2D cell integrals.
const SUBCELLS_2D: usize = 4;

#[derive(Clone, Debug)]
pub struct HubResult {
    pub x0: Vec<f64>,
    pub value: f64,
    /// `H` evaluated at every active cell center.
    pub scan: DensityField,
    pub refined: bool,
}

/// `(1 + p/d)·(2d/p)^α`.
pub fn hub_constant(p: f64, d: f64) -> f64 {
    let (alpha, _) = exponents(p, d);
    (1.0 + p / d) * (2.0 * d / p).powf(alpha)
}

fn validate(rho: &DensityField, p: f64, d: usize, q: f64) -> Result<()> {
    if !(p > 0.0 && q > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "p and q must be positive, got p={p}, q={q}"
        )));
    }
    if rho.grid().dim() != d {
        return Err(Error::InvalidConfig(format!("d = {d} on a {}D grid", rho.grid().dim())));
    }
    Ok(())
}

/// Evaluates `H(x₀)` with `ρ` taken constant on each cell.
///
/// In 1D each cell integral `∫|x − x₀|^γ dx` is done in closed form, so the
/// result is exact for piecewise-constant densities and `H` stays smooth in
/// `x₀` between cell centers. In 2D each cell is split into a 4×4 midpoint
/// rule.
pub fn hub_functional(x0: &[f64], rho: &DensityField, p: f64, d: usize, q: f64) -> Result<f64> {
    validate(rho, p, d, q)?;
    if x0.len() != d {
        return Err(Error::InvalidConfig(format!(
            "x0 has {} coordinates, expected {d}",
            x0.len()
        )));
    }
    let weights = cell_weights(rho, p, d);
    Ok(evaluate(rho.grid(), &weights, to_point(x0), gamma(p, d, q)))
}

fn gamma(p: f64, d: usize, q: f64) -> f64 {
    exponents(p, d as f64).0 * q
}

/// `ρ^β` per cell, zero on inactive cells.
fn cell_weights(rho: &DensityField, p: f64, d: usize) -> Vec<f64> {
    let (_, beta) = exponents(p, d as f64);
    rho.values()
        .iter()
        .map(|&r| if r > 0.0 { r.powf(beta) } else { 0.0 })
        .collect()
}

fn evaluate(grid: &Grid, weights: &[f64], x0: [f64; 2], gamma: f64) -> f64 {
    let mut total = 0.0;
    match grid.axes() {
        [axis] => {
            let h = axis.step();
            let prim = |u: f64| u.signum() * u.abs().powf(gamma + 1.0) / (gamma + 1.0);
            for (k, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let left = axis.lo + k as f64 * h;
                total += w * (prim(left + h - x0[0]) - prim(left - x0[0]));
            }
        }
        [ax, ay] => {
            let (hx, hy) = (ax.step(), ay.step());
            let m = SUBCELLS_2D as f64;
            let sub_area = hx * hy / (m * m);
            for (k, &w) in weights.iter().enumerate() {
                if w == 0.0 {
                    continue;
                }
                let (i, j) = grid.multi_index(k);
                let (x_lo, y_lo) = (ax.lo + i as f64 * hx, ay.lo + j as f64 * hy);
                let mut cell = 0.0;
                for a in 0..SUBCELLS_2D {
                    for b in 0..SUBCELLS_2D {
                        let pt = [x_lo + (a as f64 + 0.5) * hx / m, y_lo + (b as f64 + 0.5) * hy / m];
                        let r = distance(pt, x0);
                        if r > 0.0 {
                            cell += r.powf(gamma);
                        }
                    }
                }
                total += w * cell * sub_area;
            }
        }
        _ => unreachable!(),
    }
    total
}

/// Golden-section minimization of `f` on `[a, b]` to interval width `tol`.
fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc <= fd {
        c
    } else {
        d
    }
}

/// Scans `H` over all active cell centers, then refines the best cell by
/// per-axis golden-section search (two coordinate sweeps, tolerance h/100)
/// inside its 3-cell neighborhood.
///
/// Ties in the scan go to the lowest cell index.
pub fn find_main_hub(rho: &DensityField, p: f64, d: usize, q: f64) -> Result<HubResult> {
    validate(rho, p, d, q)?;
    if !(rho.integrate() > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let grid = rho.grid();
    let weights = cell_weights(rho, p, d);
    let gamma = gamma(p, d, q);
    let scan_values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if grid.is_active(k) {
                evaluate(grid, &weights, grid.center(k), gamma)
            } else {
                0.0
            }
        })
        .collect();

    let mut best = usize::MAX;
    let mut best_value = f64::INFINITY;
    for k in grid.active_indices() {
        let v = scan_values[k];
        if v < best_value - 1e-12 * best_value.abs().min(1e300) {
            best = k;
            best_value = v;
        }
    }
    let scan = DensityField::new(grid.clone(), scan_values)?;

    let mut point = grid.center(best);
    let steps = grid.steps();
    for _sweep in 0..2 {
        for (axis_idx, axis) in grid.axes().iter().enumerate() {
            let h = steps[axis_idx];
            let centre = grid.center(best)[axis_idx];
            let lo = (centre - h).max(axis.lo);
            let hi = (centre + h).min(axis.hi);
            let along = |t: f64| {
                let mut pt = point;
                pt[axis_idx] = t;
                evaluate(grid, &weights, pt, gamma)
            };
            point[axis_idx] = golden_section(along, lo, hi, h / 100.0);
        }
    }
    let refined_value = evaluate(grid, &weights, point, gamma);
    let coords = &point[..d];
    let inside = grid.cell_of(coords).is_some_and(|k| grid.is_active(k));
    let (x0, value, refined) = if inside && refined_value <= best_value {
        (coords.to_vec(), refined_value, true)
    } else {
        (grid.center(best)[..d].to_vec(), best_value, false)
    };
    Ok(HubResult {
        x0,
        value,
        scan,
        refined,
    })
}
