//! Routing kernel `V(x) = K·|x|^q` and its grid convolutions.
//!
//! All sums run over active cells in ascending index order, one output cell
//! per task, so parallel evaluation gives bit-identical results.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{distance, to_point, DensityField, Grid};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RoutingKernel {
    k: f64,
    q: f64,
}

impl RoutingKernel {
    pub fn new(k: f64, q: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kernel coefficient K must be positive, got {k}"
            )));
        }
        if !(q > 0.0 && q.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "kernel exponent q must be positive, got {q}"
            )));
        }
        Ok(RoutingKernel { k, q })
    }

    /// `|s|²` with unit coefficient.
    pub fn quadratic() -> Self {
        RoutingKernel { k: 1.0, q: 2.0 }
    }

    pub fn coefficient(&self) -> f64 {
        self.k
    }

    pub fn exponent(&self) -> f64 {
        self.q
    }

    /// `K·r^q` for a distance `r ≥ 0`; exactly 0 at the origin.
    #[inline]
    pub fn of_distance(&self, r: f64) -> f64 {
        if r == 0.0 {
            0.0
        } else if self.q == 2.0 {
            self.k * r * r
        } else {
            self.k * r.powf(self.q)
        }
    }

    /// `K·|x − y|^q` (Euclidean norm).
    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        self.of_distance(distance(to_point(x), to_point(y)))
    }

    /// Derivative of `s ↦ K|s|^q` in 1D: `K·q·|s|^{q−1}·sign(s)`.
    #[inline]
    fn derivative_1d(&self, s: f64) -> f64 {
        if s == 0.0 {
            0.0
        } else {
            self.k * self.q * s.abs().powf(self.q - 1.0) * s.signum()
        }
    }

    /// `(V*μ)(x) = Σ_y V(x − y)·μ(y)·|cell|` at every active cell center.
    pub fn convolve(&self, mu: &DensityField) -> DensityField {
        let grid = mu.grid();
        let active = grid.active_indices();
        let h = grid.cell_measure();
        let values: Vec<f64> = (0..grid.len())
            .into_par_iter()
            .map(|i| {
                if !grid.is_active(i) {
                    return 0.0;
                }
                active
                    .iter()
                    .map(|&j| self.of_distance(grid.cell_distance(i, j)) * mu.value(j))
                    .sum::<f64>()
                    * h
            })
            .collect();
        DensityField::from_raw(grid.clone(), values)
    }

    /// `(∇V*ν)(x)` at every cell center of a 1D field (0 on inactive cells).
    pub fn gradient_convolve(&self, nu: &DensityField) -> Result<Vec<f64>> {
        let grid = nu.grid();
        if grid.dim() != 1 {
            return Err(Error::InvalidConfig("gradient convolution is 1D only".into()));
        }
        let xs: Vec<f64> = (0..grid.len()).map(|k| grid.center(k)[0]).collect();
        let mut out = self.gradient_convolve_at(nu, &xs)?;
        for (k, v) in out.iter_mut().enumerate() {
            if !grid.is_active(k) {
                *v = 0.0;
            }
        }
        Ok(out)
    }

    /// `(∇V*ν)(x)` at arbitrary 1D points.
    pub fn gradient_convolve_at(&self, nu: &DensityField, points: &[f64]) -> Result<Vec<f64>> {
        if self.q <= 1.0 {
            return Err(Error::SingularKernelGradient(self.q));
        }
        let grid = nu.grid();
        if grid.dim() != 1 {
            return Err(Error::InvalidConfig("gradient convolution is 1D only".into()));
        }
        let h = grid.cell_measure();
        let support: Vec<(f64, f64)> = grid
            .active_indices()
            .into_iter()
            .map(|j| (grid.center(j)[0], nu.value(j)))
            .collect();
        Ok(points
            .par_iter()
            .map(|&x| support.iter().map(|&(y, w)| self.derivative_1d(x - y) * w).sum::<f64>() * h)
            .collect())
    }

    /// `∫∫ V(x − y) dμ(x) dμ(y)` as a direct double sum.
    pub fn routing_energy(&self, mu: &DensityField) -> f64 {
        let grid = mu.grid();
        let h = grid.cell_measure();
        let support: Vec<(usize, f64)> = grid
            .active_indices()
            .into_iter()
            .filter(|&j| mu.value(j) != 0.0)
            .map(|j| (j, mu.value(j)))
            .collect();
        let rows: Vec<f64> = support
            .par_iter()
            .map(|&(i, wx)| {
                wx * support
                    .iter()
                    .map(|&(j, wy)| self.of_distance(grid.cell_distance(i, j)) * wy)
                    .sum::<f64>()
            })
            .collect();
        rows.iter().sum::<f64>() * h * h
    }
}

/// Dense convolution operator restricted to the active cells of one grid.
///
/// Holds `V(x_i − x_j)` for every active pair, so repeated
/// convolutions (one per solver iteration) avoid re-evaluating `powf`.
#[derive(Clone, Debug)]
pub struct ConvolutionOperator {
    grid: Grid,
    active: Vec<usize>,
    weights: Vec<f64>,
}

impl ConvolutionOperator {
    pub fn new(kernel: &RoutingKernel, grid: &Grid) -> Self {
        let active = grid.active_indices();
        let m = active.len();
        let weights: Vec<f64> = (0..m)
            .into_par_iter()
            .flat_map_iter(|i| {
                let active = &active;
                (0..m).map(move |j| kernel.of_distance(grid.cell_distance(active[i], active[j])))
            })
            .collect();
        ConvolutionOperator {
            grid: grid.clone(),
            active,
            weights,
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Same result as [`RoutingKernel::convolve`], from the cached weights.
    pub fn apply(&self, mu: &DensityField) -> Result<Vec<f64>> {
        self.grid.check_same(mu.grid())?;
        let m = self.active.len();
        let h = self.grid.cell_measure();
        let w: Vec<f64> = self.active.iter().map(|&j| mu.value(j)).collect();
        let rows: Vec<f64> = (0..m)
            .into_par_iter()
            .map(|i| {
                let row = &self.weights[i * m..(i + 1) * m];
                row.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() * h
            })
            .collect();
        let mut out = vec![0.0; self.grid.len()];
        for (i, &k) in self.active.iter().enumerate() {
            out[k] = rows[i];
        }
        Ok(out)
    }

    /// Routing energy `Σ_x (V*μ)(x)·μ(x)·|cell|` given a precomputed `V*μ`.
    pub fn energy_from(&self, mu: &DensityField, conv: &[f64]) -> f64 {
        self.active.iter().map(|&k| conv[k] * mu.value(k)).sum::<f64>() * self.grid.cell_measure()
    }
}
