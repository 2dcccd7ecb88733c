//! Uniform cell-centered grids on an interval or a rectangle, and the
//! nonnegative density fields that live on them.
//!
//! Values are stored per cell center as densities (mass per unit length or
//! area); every integral is the midpoint sum `Σ value · cell_measure` over the
//! active cells. Polygonal domains are rasterized into a boolean mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One grid axis `[lo, hi]` split into `n` equal cells.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
            return Err(Error::InvalidGrid(format!("bounds [{lo}, {hi}] must satisfy lo < hi")));
        }
        if n < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 cells per axis, got {n}")));
        }
        Ok(Axis { lo, hi, n })
    }

    #[inline]
    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / self.n as f64
    }

    #[inline]
    pub fn center(&self, k: usize) -> f64 {
        self.lo + (k as f64 + 0.5) * self.step()
    }

    /// Index of the cell containing `x`, if `x` lies in `[lo, hi]`.
    pub fn cell_of(&self, x: f64) -> Option<usize> {
        if !(x >= self.lo && x <= self.hi) {
            return None;
        }
        let k = ((x - self.lo) / self.step()).floor() as usize;
        Some(k.min(self.n - 1))
    }
}

/// Tensor grid in one or two dimensions with an optional activity mask.
///
/// Cells are indexed linearly; in 2D the index of cell `(i, j)` (with `i`
/// along the first axis) is `i * ny + j`.
#[derive(Clone, Debug, PartialEq)]
pub struct Grid {
    axes: Vec<Axis>,
    mask: Option<Vec<bool>>,
}

impl Grid {
    pub fn new_1d(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Self::from_axes(vec![Axis::new(lo, hi, n)?], None)
    }

    pub fn new_2d(x: (f64, f64), y: (f64, f64), n: (usize, usize)) -> Result<Self> {
        Self::from_axes(vec![Axis::new(x.0, x.1, n.0)?, Axis::new(y.0, y.1, n.1)?], None)
    }

    pub fn from_axes(axes: Vec<Axis>, mask: Option<Vec<bool>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 2 {
            return Err(Error::InvalidGrid(format!(
                "dimension must be 1 or 2, got {}",
                axes.len()
            )));
        }
        for a in &axes {
            Axis::new(a.lo, a.hi, a.n)?;
        }
        let grid = Grid { axes, mask: None };
        match mask {
            Some(m) => grid.with_mask(m),
            None => Ok(grid),
        }
    }

    /// Replaces the mask. An all-true mask is stored as no mask.
    pub fn with_mask(mut self, mask: Vec<bool>) -> Result<Self> {
        if mask.len() != self.len() {
            return Err(Error::InvalidGrid(format!(
                "mask has {} entries for {} cells",
                mask.len(),
                self.len()
            )));
        }
        if !mask.iter().any(|&m| m) {
            return Err(Error::InvalidGrid("mask leaves no active cell".into()));
        }
        self.mask = if mask.iter().all(|&m| m) { None } else { Some(mask) };
        Ok(self)
    }

    /// Activates exactly the cells whose centers lie inside `polygon`
    /// (even-odd rule). 2D grids only.
    pub fn with_polygon(self, polygon: &[[f64; 2]]) -> Result<Self> {
        if self.dim() != 2 {
            return Err(Error::InvalidGrid("polygon masks need a 2D grid".into()));
        }
        if polygon.len() < 3 {
            return Err(Error::InvalidGrid("polygon needs at least 3 vertices".into()));
        }
        let mask = (0..self.len())
            .map(|k| point_in_polygon(self.center(k), polygon))
            .collect();
        self.with_mask(mask)
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn mask(&self) -> Option<&[bool]> {
        self.mask.as_deref()
    }

    /// Total number of cells, active or not.
    #[inline]
    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.n).product()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn steps(&self) -> Vec<f64> {
        self.axes.iter().map(Axis::step).collect()
    }

    /// Length (1D) or area (2D) of one cell.
    #[inline]
    pub fn cell_measure(&self) -> f64 {
        self.axes.iter().map(Axis::step).product()
    }

    #[inline]
    pub fn is_active(&self, k: usize) -> bool {
        self.mask.as_ref().is_none_or(|m| m[k])
    }

    pub fn active_indices(&self) -> Vec<usize> {
        (0..self.len()).filter(|&k| self.is_active(k)).collect()
    }

    pub fn active_count(&self) -> usize {
        self.mask
            .as_ref()
            .map_or(self.len(), |m| m.iter().filter(|&&b| b).count())
    }

    /// Per-axis indices of linear cell `k`.
    pub fn multi_index(&self, k: usize) -> (usize, usize) {
        match self.axes.as_slice() {
            [_] => (k, 0),
            [_, y] => (k / y.n, k % y.n),
            _ => unreachable!(),
        }
    }

    pub fn linear_index(&self, i: usize, j: usize) -> usize {
        match self.axes.as_slice() {
            [_] => i,
            [_, y] => i * y.n + j,
            _ => unreachable!(),
        }
    }

    /// Cell center; the second coordinate is 0 on 1D grids.
    #[inline]
    pub fn center(&self, k: usize) -> [f64; 2] {
        let (i, j) = self.multi_index(k);
        match self.axes.as_slice() {
            [x] => [x.center(i), 0.0],
            [x, y] => [x.center(i), y.center(j)],
            _ => unreachable!(),
        }
    }

    pub fn centers(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|k| self.center(k)).collect()
    }

    /// Cell containing `point`, whether active or not.
    pub fn cell_of(&self, point: &[f64]) -> Option<usize> {
        if point.len() != self.dim() {
            return None;
        }
        match self.axes.as_slice() {
            [x] => x.cell_of(point[0]),
            [x, y] => Some(self.linear_index(x.cell_of(point[0])?, y.cell_of(point[1])?)),
            _ => unreachable!(),
        }
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        point.len() == self.dim() && self.axes.iter().zip(point).all(|(a, &x)| x >= a.lo && x <= a.hi)
    }

    /// Distance between the centers of cells `a` and `b`, computed from the
    /// index offsets so it depends only on the relative position of the cells.
    #[inline]
    pub(crate) fn cell_distance(&self, a: usize, b: usize) -> f64 {
        let (ai, aj) = self.multi_index(a);
        let (bi, bj) = self.multi_index(b);
        let dx = (ai as f64 - bi as f64) * self.axes[0].step();
        let dy = match self.axes.get(1) {
            Some(y) => (aj as f64 - bj as f64) * y.step(),
            None => 0.0,
        };
        dx.hypot(dy)
    }

    pub(crate) fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch("fields live on different grids".into()))
        }
    }
}

/// Converts a point slice into the internal two-slot representation.
pub(crate) fn to_point(p: &[f64]) -> [f64; 2] {
    [p.first().copied().unwrap_or(0.0), p.get(1).copied().unwrap_or(0.0)]
}

#[inline]
pub(crate) fn distance(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

fn point_in_polygon(p: [f64; 2], poly: &[[f64; 2]]) -> bool {
    let mut inside = false;
    let mut j = poly.len() - 1;
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[j]);
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x_cross = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
            if p[0] < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

/// Nonnegative density on a grid. Inactive cells hold exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityField {
    grid: Grid,
    values: Vec<f64>,
}

impl DensityField {
    /// Validates `values` (one per cell) and zeroes inactive cells.
    pub fn new(grid: Grid, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                values.len(),
                grid.len()
            )));
        }
        for (k, v) in values.iter_mut().enumerate() {
            if !v.is_finite() || *v < 0.0 {
                return Err(Error::InvalidDensity(format!("cell {k} has value {v}")));
            }
            if !grid.is_active(k) {
                *v = 0.0;
            }
        }
        Ok(DensityField { grid, values })
    }

    /// Builds a field from values already known to satisfy the invariants.
    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        debug_assert!(values.iter().all(|v| *v >= 0.0));
        DensityField { grid, values }
    }

    pub fn zeros(grid: Grid) -> Self {
        let n = grid.len();
        DensityField::from_raw(grid, vec![0.0; n])
    }

    pub fn uniform(grid: Grid, value: f64) -> Result<Self> {
        let n = grid.len();
        DensityField::new(grid, vec![value; n])
    }

    /// Uniform probability on the active cells.
    pub fn uniform_probability(grid: Grid) -> Self {
        let v = 1.0 / (grid.active_count() as f64 * grid.cell_measure());
        let values = (0..grid.len())
            .map(|k| if grid.is_active(k) { v } else { 0.0 })
            .collect();
        DensityField::from_raw(grid, values)
    }

    /// Evaluates `f` at every active cell center.
    pub fn from_fn(grid: Grid, f: impl Fn([f64; 2]) -> f64) -> Result<Self> {
        let values = (0..grid.len())
            .map(|k| if grid.is_active(k) { f(grid.center(k)) } else { 0.0 })
            .collect();
        DensityField::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    #[inline]
    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Piecewise-constant lookup; zero outside the grid.
    pub fn value_at(&self, point: &[f64]) -> f64 {
        self.grid.cell_of(point).map_or(0.0, |k| self.values[k])
    }

    /// Midpoint-rule integral over the active cells.
    pub fn integrate(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_measure()
    }

    /// Rescales to total mass `target_mass`.
    pub fn normalize(&self, target_mass: f64) -> Result<Self> {
        if !(target_mass > 0.0 && target_mass.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "target mass must be positive, got {target_mass}"
            )));
        }
        let mass = self.integrate();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegenerateDensity);
        }
        Ok(self.scaled(target_mass / mass))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        assert!(factor >= 0.0, "negative scale factor");
        let values = self.values.iter().map(|v| v * factor).collect();
        DensityField::from_raw(self.grid.clone(), values)
    }

    /// `a·self + b·other` for nonnegative `a`, `b`.
    pub fn combine(&self, a: f64, other: &DensityField, b: f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        if a < 0.0 || b < 0.0 {
            return Err(Error::InvalidConfig("combination weights must be nonnegative".into()));
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(x, y)| a * x + b * y)
            .collect();
        Ok(DensityField::from_raw(self.grid.clone(), values))
    }

    /// Applies `f` pointwise; results must be nonnegative.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        DensityField::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    /// Lowest-index active cell attaining the maximum value.
    pub fn argmax(&self) -> usize {
        let mut best = usize::MAX;
        let mut best_v = f64::NEG_INFINITY;
        for k in 0..self.values.len() {
            if self.grid.is_active(k) && self.values[k] > best_v {
                best_v = self.values[k];
                best = k;
            }
        }
        best
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// One Gaussian bump `A·exp(−B·|X − x|²)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPeak {
    #[serde(rename = "A")]
    pub height: f64,
    #[serde(rename = "B")]
    pub inv_width: f64,
    #[serde(rename = "X")]
    pub center: Vec<f64>,
}

impl GaussianPeak {
    pub fn new(height: f64, inv_width: f64, center: Vec<f64>) -> Self {
        GaussianPeak {
            height,
            inv_width,
            center,
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        if !(self.height >= 0.0) {
            return Err(Error::InvalidDensity(format!(
                "peak height {} is negative",
                self.height
            )));
        }
        if !(self.inv_width > 0.0) {
            return Err(Error::InvalidDensity(format!(
                "peak width parameter {} must be positive",
                self.inv_width
            )));
        }
        if !grid.contains(&self.center) {
            return Err(Error::InvalidDensity(format!(
                "peak center {:?} lies outside the grid",
                self.center
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn eval(&self, x: [f64; 2]) -> f64 {
        let r = distance(to_point(&self.center), x);
        self.height * (-self.inv_width * r * r).exp()
    }
}

/// Sum of Gaussian peaks sampled at the active cell centers.
pub fn gaussian_sum_density(peaks: &[GaussianPeak], grid: &Grid) -> Result<DensityField> {
    for p in peaks {
        p.validate(grid)?;
    }
    DensityField::from_fn(grid.clone(), |x| peaks.iter().map(|p| p.eval(x)).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn cell_centers_are_midpoints() {
        let g = Grid::new_1d(-1.0, 1.0, 4).unwrap();
        let xs: Vec<f64> = g.centers().iter().map(|c| c[0]).collect();
        assert_eq!(xs, vec![-0.75, -0.25, 0.25, 0.75]);
        assert_eq!(g.cell_measure(), 0.5);
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(Grid::new_1d(1.0, 1.0, 10).is_err());
        assert!(Grid::new_1d(0.0, 1.0, 1).is_err());
        let g = Grid::new_1d(0.0, 1.0, 3).unwrap();
        assert!(g.with_mask(vec![false; 3]).is_err());
    }

    #[test]
    fn single_peak_values() {
        let g = Grid::new_1d(-1.5, 1.5, 3).unwrap();
        let f = gaussian_sum_density(&[GaussianPeak::new(1.0, 1.0, vec![0.0])], &g).unwrap();
        assert_eq!(f.value(1), 1.0);
        assert_relative_eq!(f.value(2), (-1.0f64).exp(), epsilon = 1e-15);
        assert_relative_eq!(f.value(0), 0.36787944117144233, epsilon = 1e-12);
    }

    #[test]
    fn empty_peak_list_is_zero() {
        let g = Grid::new_1d(0.0, 1.0, 10).unwrap();
        let f = gaussian_sum_density(&[], &g).unwrap();
        assert!(f.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn peak_outside_grid_is_rejected() {
        let g = Grid::new_1d(0.0, 1.0, 10).unwrap();
        assert!(gaussian_sum_density(&[GaussianPeak::new(1.0, 1.0, vec![2.0])], &g).is_err());
    }

    #[test]
    fn normalize_examples() {
        let g = Grid::new_1d(-1.0, 1.0, 10).unwrap();
        let f = DensityField::uniform(g.clone(), 2.0).unwrap().normalize(1.0).unwrap();
        assert!(f.values().iter().all(|&v| (v - 0.5).abs() < 1e-15));

        let again = f.normalize(1.0).unwrap();
        assert_eq!(again, f);

        let step = DensityField::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 2.0 }).unwrap();
        let n = step.normalize(1.0).unwrap();
        assert_relative_eq!(n.value(0), 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(n.value(9), 2.0 / 3.0, epsilon = 1e-15);
    }

    #[test]
    fn normalize_zero_mass_fails() {
        let g = Grid::new_1d(0.0, 1.0, 4).unwrap();
        let err = DensityField::zeros(g).normalize(1.0).unwrap_err();
        assert!(err.to_string().contains("degenerate density"));
    }

    #[test]
    fn integrate_examples() {
        for n in [2, 7, 100] {
            let g = Grid::new_1d(0.0, 1.0, n).unwrap();
            assert_relative_eq!(DensityField::uniform(g, 1.0).unwrap().integrate(), 1.0, epsilon = 1e-14);
        }
        let g = Grid::new_1d(0.0, 1.0, 1000).unwrap();
        assert_eq!(DensityField::zeros(g.clone()).integrate(), 0.0);
        let lin = DensityField::from_fn(g, |x| x[0]).unwrap();
        assert!((lin.integrate() - 0.5).abs() < 1e-6);
    }

    #[test]
    fn negative_values_rejected() {
        let g = Grid::new_1d(0.0, 1.0, 2).unwrap();
        assert!(DensityField::new(g, vec![1.0, -1.0]).is_err());
    }

    #[test]
    fn polygon_mask_zeroes_outside() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (10, 10)).unwrap();
        let tri = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let g = g.with_polygon(&tri).unwrap();
        // centers with x + y < 1 are inside
        assert_eq!(g.active_count(), 45);
        let f = DensityField::uniform(g.clone(), 1.0).unwrap();
        for k in 0..g.len() {
            let c = g.center(k);
            assert_eq!(f.value(k) > 0.0, c[0] + c[1] < 1.0);
        }
        let u = DensityField::uniform_probability(g);
        assert_relative_eq!(u.integrate(), 1.0, epsilon = 1e-14);
    }

    #[test]
    fn reflection_symmetric_peaks_give_symmetric_field() {
        let g = Grid::new_1d(-1.0, 1.0, 101).unwrap();
        let peaks = [
            GaussianPeak::new(1.0, 3.0, vec![-0.4]),
            GaussianPeak::new(1.0, 3.0, vec![0.4]),
            GaussianPeak::new(0.5, 10.0, vec![0.0]),
        ];
        let f = gaussian_sum_density(&peaks, &g).unwrap();
        for k in 0..101 {
            assert!((f.value(k) - f.value(100 - k)).abs() < 1e-12);
        }
    }

    #[test]
    fn midpoint_refinement_is_second_order() {
        // ∫_{-1}^{1} e^{-4x²} dx = √(π)/2 · erf(2)
        let peaks = [GaussianPeak::new(1.0, 4.0, vec![0.0])];
        let integral = |n| {
            let g = Grid::new_1d(-1.0, 1.0, n).unwrap();
            gaussian_sum_density(&peaks, &g).unwrap().integrate()
        };
        let (a, b, c) = (integral(20), integral(40), integral(80));
        let order = ((a - b) / (b - c)).abs().log2();
        assert!(order >= 1.9, "observed order {order}");
    }

    #[test]
    fn multi_index_roundtrip() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 2.0), (3, 5)).unwrap();
        for k in 0..g.len() {
            let (i, j) = g.multi_index(k);
            assert_eq!(g.linear_index(i, j), k);
            assert_eq!(g.cell_of(&g.center(k)), Some(k));
        }
    }
}
