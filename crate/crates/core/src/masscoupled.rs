//! One-dimensional scheme for mass-dependent routing costs.
//!
//! The optimal `ν` couples a transport map and a Monge–Ampère pushforward:
//!
//! ```text
//! A(x − T(x)) + (2B/m)(∇V*ν)(x) = 0
//! ρ = ν(T)·T′
//! ```
//!
//! Starting from `ν₀ = ρ`, each sweep builds `T` from the current `ν` and
//! pushes `ρ` forward through it. Because `T(Ω)` generally exceeds `Ω`, every
//! `ν` lives on its own grid, aligned with the cells of `ρ`'s grid and
//! extended to cover the image of the domain.

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};
use crate::kernel::RoutingKernel;

#[derive(Clone, Debug, PartialEq)]
pub struct MassCoupledConfig {
    /// Location cost coefficient.
    pub a: f64,
    /// Routing cost coefficient.
    pub b: f64,
    /// Wasserstein exponent used when evaluating the total cost.
    pub p: f64,
    pub kernel: RoutingKernel,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
}

impl MassCoupledConfig {
    pub fn new(a: f64, b: f64, p: f64, kernel: RoutingKernel) -> Self {
        MassCoupledConfig {
            a,
            b,
            p,
            kernel,
            tol: 1e-10,
            max_iter: 200,
            damping: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) {
            return Err(Error::InvalidConfig(format!("A must be positive, got {}", self.a)));
        }
        if !(self.b >= 0.0) {
            return Err(Error::InvalidConfig(format!("B must be nonnegative, got {}", self.b)));
        }
        if !(self.p > 0.0) {
            return Err(Error::InvalidConfig(format!("p must be positive, got {}", self.p)));
        }
        if self.kernel.exponent() <= 1.0 {
            return Err(Error::SingularKernelGradient(self.kernel.exponent()));
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidConfig("tol and max_iter must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Map values `T(x_k)` at the cell centers of a 1D grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TransportMap1D {
    grid: Grid,
    values: Vec<f64>,
    monotone: bool,
}

impl TransportMap1D {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid("transport maps are 1D".into()));
        }
        if values.len() != grid.len() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("map needs one finite value per cell".into()));
        }
        let monotone = values.windows(2).all(|w| w[1] > w[0]);
        Ok(TransportMap1D { grid, values, monotone })
    }

    pub fn identity(grid: &Grid) -> Result<Self> {
        let xs = (0..grid.len()).map(|k| grid.center(k)[0]).collect();
        Self::new(grid.clone(), xs)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn is_monotone(&self) -> bool {
        self.monotone
    }

    /// `T′` by centered differences, one-sided at the ends.
    pub fn derivative(&self) -> Vec<f64> {
        let h = self.grid.cell_measure();
        let t = &self.values;
        let n = t.len();
        (0..n)
            .map(|k| match k {
                0 => (t[1] - t[0]) / h,
                k if k == n - 1 => (t[n - 1] - t[n - 2]) / h,
                k => (t[k + 1] - t[k - 1]) / (2.0 * h),
            })
            .collect()
    }

    /// `φ′(x) = x − T(x)`.
    pub fn potential_derivative(&self) -> Vec<f64> {
        (0..self.values.len())
            .map(|k| self.grid.center(k)[0] - self.values[k])
            .collect()
    }

    /// Breakpoints `(x, T(x))` of the piecewise-linear map, including the
    /// domain ends reached by linear extrapolation of the end segments.
    fn knots(&self) -> Vec<(f64, f64)> {
        let axis = self.grid.axes()[0];
        let t = &self.values;
        let n = t.len();
        let mut knots = Vec::with_capacity(n + 2);
        knots.push((axis.lo, t[0] - 0.5 * (t[1] - t[0])));
        knots.extend((0..n).map(|k| (self.grid.center(k)[0], t[k])));
        knots.push((axis.hi, t[n - 1] + 0.5 * (t[n - 1] - t[n - 2])));
        knots
    }

    /// Image `[T(a), T(b)]` of the domain.
    pub fn image(&self) -> (f64, f64) {
        let k = self.knots();
        (k[0].1, k[k.len() - 1].1)
    }
}

/// Solves the first equation for `T` given `ν`, at the cell centers of `domain`.
pub fn transport_map_step(domain: &Grid, nu: &DensityField, cfg: &MassCoupledConfig) -> Result<TransportMap1D> {
    cfg.validate()?;
    if domain.dim() != 1 || nu.grid().dim() != 1 {
        return Err(Error::InvalidGrid("mass-coupled scheme is 1D".into()));
    }
    let m = nu.integrate();
    if !(m > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let xs: Vec<f64> = (0..domain.len()).map(|k| domain.center(k)[0]).collect();
    let grad = cfg.kernel.gradient_convolve_at(nu, &xs)?;
    let coef = 2.0 * cfg.b / (cfg.a * m);
    let values = xs.iter().zip(&grad).map(|(x, g)| x + coef * g).collect();
    TransportMap1D::new(domain.clone(), values)
}

/// Snaps `v` to the nearest integer when within round-off of it.
fn snap(v: f64, round: impl Fn(f64) -> f64) -> i64 {
    let r = v.round();
    if (v - r).abs() < 1e-7 {
        r as i64
    } else {
        round(v) as i64
    }
}

/// Grid with the cell size of `domain`, aligned to its cell edges, covering `[lo, hi]`.
fn aligned_grid(domain: &Grid, lo: f64, hi: f64) -> Result<Grid> {
    let axis = domain.axes()[0];
    let h = axis.step();
    let k_lo = snap((lo - axis.lo) / h, f64::floor);
    let mut k_hi = snap((hi - axis.lo) / h, f64::ceil);
    if k_hi < k_lo + 2 {
        k_hi = k_lo + 2;
    }
    Grid::new_1d(
        axis.lo + k_lo as f64 * h,
        axis.lo + k_hi as f64 * h,
        (k_hi - k_lo) as usize,
    )
}

fn interp(knots: &[(f64, f64)], y: f64) -> f64 {
    // knots sorted by .1; returns the .0 coordinate
    if y <= knots[0].1 {
        return knots[0].0;
    }
    let last = knots[knots.len() - 1];
    if y >= last.1 {
        return last.0;
    }
    let i = knots.partition_point(|k| k.1 <= y);
    let (a, b) = (knots[i - 1], knots[i]);
    a.0 + (y - a.1) * (b.0 - a.0) / (b.1 - a.1)
}

/// Cumulative mass of `rho` up to `x` (piecewise linear across cells).
fn cumulative(rho: &DensityField, prefix: &[f64], x: f64) -> f64 {
    let axis = rho.grid().axes()[0];
    let h = axis.step();
    if x <= axis.lo {
        return 0.0;
    }
    if x >= axis.hi {
        return prefix[prefix.len() - 1];
    }
    let t = (x - axis.lo) / h;
    let k = (t.floor() as usize).min(axis.n - 1);
    prefix[k] + rho.value(k) * (x - (axis.lo + k as f64 * h))
}

/// Density of `T#ρ` on the aligned grid covering `T(Ω)`.
///
/// Each output cell receives the `ρ`-mass of its preimage under the
/// piecewise-linear `T`, i.e. the cell average of `ρ(T⁻¹(y))/T′(T⁻¹(y))`;
/// total mass is preserved to round-off.
pub fn pushforward_1d(rho: &DensityField, map: &TransportMap1D) -> Result<DensityField> {
    rho.grid().check_same(map.grid())?;
    if !map.is_monotone() {
        return Err(Error::MapNotInvertible);
    }
    let knots = map.knots();
    let (lo, hi) = map.image();
    let out_grid = aligned_grid(rho.grid(), lo, hi)?;
    let h_in = rho.grid().cell_measure();
    let mut prefix = Vec::with_capacity(rho.values().len() + 1);
    prefix.push(0.0);
    let mut acc = 0.0;
    for v in rho.values() {
        acc += v * h_in;
        prefix.push(acc);
    }
    let out_axis = out_grid.axes()[0];
    let h_out = out_axis.step();
    let edge_mass: Vec<f64> = (0..=out_axis.n)
        .map(|j| cumulative(rho, &prefix, interp(&knots, out_axis.lo + j as f64 * h_out)))
        .collect();
    let values = edge_mass.windows(2).map(|w| ((w[1] - w[0]) / h_out).max(0.0)).collect();
    DensityField::new(out_grid, values)
}

/// Represents two aligned 1D fields on their common covering grid.
fn on_common_grid(a: &DensityField, b: &DensityField) -> Result<(Vec<f64>, Vec<f64>, Grid)> {
    if a.grid() == b.grid() {
        return Ok((a.values().to_vec(), b.values().to_vec(), a.grid().clone()));
    }
    let (ga, gb) = (a.grid().axes()[0], b.grid().axes()[0]);
    let h = ga.step();
    if (gb.step() - h).abs() > 1e-12 * h {
        return Err(Error::GridMismatch("cell sizes differ".into()));
    }
    let lo = ga.lo.min(gb.lo);
    let hi = ga.hi.max(gb.hi);
    let n = ((hi - lo) / h).round() as usize;
    let grid = Grid::new_1d(lo, hi, n)?;
    let place = |f: &DensityField| {
        let off = ((f.grid().axes()[0].lo - lo) / h).round() as usize;
        let mut out = vec![0.0; n];
        out[off..off + f.values().len()].copy_from_slice(f.values());
        out
    };
    Ok((place(a), place(b), grid))
}

#[derive(Clone, Debug)]
pub struct MassCoupledResult {
    pub nu: DensityField,
    /// Map built from the returned `ν`.
    pub map: TransportMap1D,
    pub iterations: usize,
    pub final_change: f64,
    pub converged: bool,
}

/// Alternates [`transport_map_step`] and [`pushforward_1d`] from `ν₀ = ρ`.
pub fn mass_coupled_solve(rho: &DensityField, cfg: &MassCoupledConfig) -> Result<MassCoupledResult> {
    cfg.validate()?;
    if rho.grid().dim() != 1 {
        return Err(Error::InvalidGrid("mass-coupled scheme is 1D".into()));
    }
    if !(rho.integrate() > 0.0) {
        return Err(Error::DegenerateDensity);
    }
    let domain = rho.grid();
    let mut nu = rho.clone();
    let mut change = f64::INFINITY;
    let mut iterations = 0;
    for it in 1..=cfg.max_iter {
        let map = transport_map_step(domain, &nu, cfg)?;
        let pushed = pushforward_1d(rho, &map)?;
        let (old, new, grid) = on_common_grid(&nu, &pushed)?;
        let theta = cfg.damping;
        let mixed: Vec<f64> = old
            .iter()
            .zip(&new)
            .map(|(o, n)| (1.0 - theta) * o + theta * n)
            .collect();
        let diff = old.iter().zip(&mixed).map(|(o, n)| (o - n).abs()).fold(0.0, f64::max);
        let peak = mixed.iter().copied().fold(0.0, f64::max);
        change = diff / peak;
        nu = if theta < 1.0 {
            DensityField::new(grid, mixed)?
        } else {
            pushed
        };
        iterations = it;
        if change <= cfg.tol {
            break;
        }
    }
    let map = transport_map_step(domain, &nu, cfg)?;
    Ok(MassCoupledResult {
        nu,
        map,
        iterations,
        final_change: change,
        converged: change <= cfg.tol,
    })
}

/// Piecewise-linear quantile function as segments `(t₀, t₁, x₀, x₁)`.
fn quantile_segments(f: &DensityField) -> Vec<(f64, f64, f64, f64)> {
    let axis = f.grid().axes()[0];
    let h = axis.step();
    let mut t = 0.0;
    let mut segs = Vec::new();
    for (k, &v) in f.values().iter().enumerate() {
        let m = v * h;
        if m > 0.0 {
            let x0 = axis.lo + k as f64 * h;
            segs.push((t, t + m, x0, x0 + h));
            t += m;
        }
    }
    segs
}

/// `∫₀¹ |d₀ + (d₁ − d₀)s|^p ds`.
fn mean_abs_pow(d0: f64, d1: f64, p: f64) -> f64 {
    let scale = d0.abs().max(d1.abs());
    if scale == 0.0 {
        return 0.0;
    }
    if (d1 - d0).abs() <= 1e-9 * scale {
        return (0.5 * (d0 + d1)).abs().powf(p);
    }
    if d0 * d1 >= 0.0 {
        let (a, b) = (d0.abs(), d1.abs());
        (b.powf(p + 1.0) - a.powf(p + 1.0)) / ((p + 1.0) * (b - a))
    } else {
        let root = d0 / (d0 - d1);
        (root * d0.abs().powf(p) + (1.0 - root) * d1.abs().powf(p)) / (p + 1.0)
    }
}

/// `W_p^p(ρ, ν) = ∫₀^m |Q_ρ(t) − Q_ν(t)|^p dt` from the piecewise-linear
/// quantile functions; exact for the piecewise-constant densities.
pub fn wasserstein_1d(rho: &DensityField, nu: &DensityField, p: f64) -> Result<f64> {
    if rho.grid().dim() != 1 || nu.grid().dim() != 1 {
        return Err(Error::InvalidGrid("wasserstein_1d needs 1D fields".into()));
    }
    if !(p > 0.0) {
        return Err(Error::InvalidConfig(format!("p must be positive, got {p}")));
    }
    let (ma, mb) = (rho.integrate(), nu.integrate());
    if (ma - mb).abs() > 1e-8 * ma.max(mb) {
        return Err(Error::MassMismatch(ma, mb));
    }
    let (sa, sb) = (quantile_segments(rho), quantile_segments(nu));
    let end = sa.last().map_or(0.0, |s| s.1).min(sb.last().map_or(0.0, |s| s.1));
    let at = |s: &(f64, f64, f64, f64), t: f64| s.2 + (t - s.0) / (s.1 - s.0) * (s.3 - s.2);
    let (mut i, mut j) = (0, 0);
    let mut t = 0.0;
    let mut total = 0.0;
    while i < sa.len() && j < sb.len() && t < end {
        let t_next = sa[i].1.min(sb[j].1).min(end);
        if t_next > t {
            let d0 = at(&sa[i], t) - at(&sb[j], t);
            let d1 = at(&sa[i], t_next) - at(&sb[j], t_next);
            total += (t_next - t) * mean_abs_pow(d0, d1, p);
        }
        t = t_next;
        if sa[i].1 <= t {
            i += 1;
        }
        if sb[j].1 <= t {
            j += 1;
        }
    }
    Ok(total)
}

/// `A·W_p^p(ρ, ν) + (B/m)·∫∫V d(ν⊗ν)`.
pub fn total_cost_mass(rho: &DensityField, nu: &DensityField, cfg: &MassCoupledConfig) -> Result<f64> {
    let w = wasserstein_1d(rho, nu, cfg.p)?;
    let m = rho.integrate();
    Ok(cfg.a * w + cfg.b / m * cfg.kernel.routing_energy(nu))
}
