//! Shared inputs for the criterion benchmarks in `benches/`.

use hubfield::{DensityField, Grid};

/// Step density on `[-1, 1]`: 1 on the left half, 2 on the right.
pub fn step_density(n: usize) -> DensityField {
    let g = Grid::new_1d(-1.0, 1.0, n).expect("valid grid");
    DensityField::from_fn(g, |x| if x[0] < 0.0 { 1.0 } else { 2.0 }).expect("nonnegative")
}

/// Two Gaussian bumps on a square grid of `n × n` cells.
pub fn two_peaks(n: usize) -> DensityField {
    let g = Grid::new_2d((-1.0, 1.0), (-1.0, 1.0), (n, n)).expect("valid grid");
    DensityField::from_fn(g, |x| {
        (-8.0 * ((x[0] - 0.4).powi(2) + x[1].powi(2))).exp()
            + 0.6 * (-8.0 * ((x[0] + 0.5).powi(2) + (x[1] - 0.3).powi(2))).exp()
    })
    .expect("nonnegative")
}
