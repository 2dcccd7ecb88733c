//! Quantization constants and the many-facility limit of the location cost.

use crate::error::{Error, Result};
use crate::grid::DensityField;
use crate::solver::location_term;

/// Gauss–Legendre nodes and weights on [-1, 1], 8 points.
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];

fn composite_gauss(f: impl Fn(f64) -> f64, pieces: usize) -> f64 {
    let w = 1.0 / pieces as f64;
    let mut total = 0.0;
    for i in 0..pieces {
        let mid = (i as f64 + 0.5) * w;
        let s: f64 = GL_NODES
            .iter()
            .zip(&GL_WEIGHTS)
            .map(|(x, wt)| wt * f(mid + 0.5 * w * x))
            .sum();
        total += 0.5 * w * s;
    }
    total
}

/// `C_{p,2} = ∫_E |x|^p dx` over the regular hexagon of unit area centered at the origin.
///
/// The hexagon splits into six congruent triangles sharing the origin. On
/// one of them, `x = s·(v₁ + t(v₂ − v₁))` turns the integral into
/// `|v₁×v₂|/(p+2) · ∫₀¹ |v₁ + t(v₂ − v₁)|^p dt`, the radial part being exact.
/// The edge integral uses a composite Gauss rule, doubled until two
/// successive values agree to 1e-12.
pub fn hexagon_constant(p: f64) -> Result<f64> {
    if !(p >= 0.0) || !p.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "p must be a finite nonnegative number, got {p}"
        )));
    }
    // circumradius r with (3√3/2) r² = 1; flat-top vertices at angles 0 and 60°
    let r = (2.0 / (3.0 * 3f64.sqrt())).sqrt();
    let v1 = [r, 0.0];
    let v2 = [0.5 * r, 0.5 * 3f64.sqrt() * r];
    let cross = v1[0] * v2[1] - v1[1] * v2[0];
    let edge = |t: f64| {
        let x = v1[0] + t * (v2[0] - v1[0]);
        let y = v1[1] + t * (v2[1] - v1[1]);
        x.hypot(y).powf(p)
    };
    let mut pieces = 1;
    let mut prev = composite_gauss(edge, pieces);
    loop {
        pieces *= 2;
        let next = composite_gauss(edge, pieces);
        if (next - prev).abs() < 1e-12 || pieces >= 1 << 12 {
            return Ok(6.0 * cross / (p + 2.0) * next);
        }
        prev = next;
    }
}

/// `A · C · N^{−p/d} · ∫ρ/μ^{p/d}`.
///
/// `constant` overrides the quantization constant; it is required for
/// `d = 1`, where no hexagon analogue is provided.
pub fn limit_location_cost(
    rho: &DensityField,
    mu: &DensityField,
    n: f64,
    p: f64,
    a_coef: f64,
    constant: Option<f64>,
) -> Result<f64> {
    if !(n > 0.0) {
        return Err(Error::InvalidConfig(format!("N must be positive, got {n}")));
    }
    let d = rho.grid().dim();
    let c = match (constant, d) {
        (Some(c), _) => c,
        (None, 2) => hexagon_constant(p)?,
        (None, _) => {
            return Err(Error::InvalidConfig(
                "quantization constant only known for d=2; pass one explicitly".into(),
            ))
        }
    };
    let loc = location_term(rho, mu, p, d)?;
    if loc == 0.0 {
        return Ok(0.0);
    }
    Ok(a_coef * c * n.powf(-p / d as f64) * loc)
}

/// Minimizer of `∫ρ/μ^{p/d}` over probability fields: `μ* ∝ ρ^{d/(d+p)}`.
pub fn optimal_pure_location_density(rho: &DensityField, p: f64, d: usize) -> Result<DensityField> {
    if !(p > 0.0) || d == 0 {
        return Err(Error::InvalidConfig(format!("need p>0 and d>=1, got p={p}, d={d}")));
    }
    let e = d as f64 / (d as f64 + p);
    rho.map(|v| v.powf(e))?.normalize(1.0)
}
