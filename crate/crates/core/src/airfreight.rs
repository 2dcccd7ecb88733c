//! Airfreight inputs: Breguet fuel costs, cost exponent fitting and the
//! socio-economic demand regression spread onto a grid.

use std::io::Read;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{DensityField, Grid};
use crate::solver::least_squares;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AircraftParams {
    /// Aerodynamic efficiency.
    #[serde(rename = "E")]
    pub e: f64,
    /// Specific fuel consumption, per unit length.
    pub k_c: f64,
    /// Propeller efficiency.
    pub eta_p: f64,
}

impl AircraftParams {
    pub fn new(e: f64, k_c: f64, eta_p: f64) -> Result<Self> {
        let a = AircraftParams { e, k_c, eta_p };
        a.validate()?;
        Ok(a)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.e > 0.0 && self.e.is_finite()) {
            return Err(Error::InvalidConfig(format!("E must be positive, got {}", self.e)));
        }
        if !(self.k_c > 0.0 && self.k_c.is_finite()) {
            return Err(Error::InvalidConfig(format!("k_c must be positive, got {}", self.k_c)));
        }
        if !(self.eta_p > 0.0 && self.eta_p <= 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eta_p must lie in (0, 1], got {}",
                self.eta_p
            )));
        }
        Ok(())
    }

    /// `k_c/(η_p E)`: the exponent rate per unit range.
    pub fn rate(&self) -> f64 {
        self.k_c / (self.eta_p * self.e)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let a: AircraftParams = serde_json::from_str(text)?;
        a.validate()?;
        Ok(a)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DemandCoefficients {
    #[serde(rename = "C0")]
    pub c0: f64,
    #[serde(rename = "C1")]
    pub c1: f64,
    /// Accepted for completeness; the TSE covariate is never used.
    #[serde(rename = "C2", default)]
    pub c2: f64,
    #[serde(rename = "C3")]
    pub c3: f64,
    #[serde(rename = "C4")]
    pub c4: f64,
    #[serde(rename = "C5")]
    pub c5: f64,
}

impl DemandCoefficients {
    pub fn validate(&self) -> Result<()> {
        let all = [self.c0, self.c1, self.c2, self.c3, self.c4, self.c5];
        if all.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidConfig("demand coefficients must be finite".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let c: DemandCoefficients = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CentroidRecord {
    pub x: f64,
    pub y: f64,
    /// Per-capita income, $1000.
    #[serde(rename = "PC")]
    pub pc: f64,
    /// Logistics employment share, percent.
    #[serde(rename = "TSL")]
    pub tsl: f64,
    /// Medical diagnostic establishments.
    #[serde(rename = "MD")]
    pub md: f64,
    /// Average high-tech wage, $1000.
    #[serde(rename = "HT")]
    pub ht: f64,
    #[serde(rename = "TSE", default, skip_serializing_if = "Option::is_none")]
    pub tse: Option<f64>,
}

impl CentroidRecord {
    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let vals = [self.x, self.y, self.pc, self.tsl, self.md, self.ht];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err("non-finite value".into());
        }
        if self.md < 0.0 || self.md.fract() != 0.0 {
            return Err(format!("MD must be a nonnegative integer, got {}", self.md));
        }
        if !(0.0..=100.0).contains(&self.tsl) {
            return Err(format!("TSL must lie in [0, 100], got {}", self.tsl));
        }
        if let Some(t) = self.tse {
            if !(0.0..=100.0).contains(&t) {
                return Err(format!("TSE must lie in [0, 100], got {t}"));
            }
        }
        Ok(())
    }
}

/// Reads `x,y,PC,TSL,MD,HT[,TSE]` rows with a header line.
pub fn parse_centroids<R: Read>(reader: R) -> Result<Vec<CentroidRecord>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let mut out = Vec::new();
    for (i, row) in rdr.deserialize::<CentroidRecord>().enumerate() {
        // header is line 1
        let line = i + 2;
        let rec = row.map_err(|e| Error::parse(line, e.to_string()))?;
        rec.validate().map_err(|m| Error::parse(line, m))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_centroids(path: &Path) -> Result<Vec<CentroidRecord>> {
    parse_centroids(std::fs::File::open(path)?)
}

/// `1 − exp(−R·k_c/(η_p E))`.
pub fn breguet_fuel_fraction(range: f64, a: &AircraftParams) -> f64 {
    -(-range * a.rate()).exp_m1()
}

/// Fuel cost per unit payload and distance at each range.
pub fn cost_per_ton_km_curve(ranges: &[f64], a: &AircraftParams, fuel_price_scale: f64) -> Result<Vec<(f64, f64)>> {
    check_ranges(ranges)?;
    a.validate()?;
    Ok(ranges
        .iter()
        .map(|&r| (r, fuel_price_scale * breguet_fuel_fraction(r, a) / r))
        .collect())
}

fn check_ranges(ranges: &[f64]) -> Result<()> {
    if ranges.is_empty() || !(ranges[0] > 0.0) || ranges.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidConfig(
            "ranges must be positive and strictly increasing".into(),
        ));
    }
    Ok(())
}

/// Total cost per ton up to each range: trapezoid over the given points,
/// with `c(R₀)·R₀` for the first segment `[0, R₀]`.
pub fn integrate_cost_curve(per_km: &[(f64, f64)]) -> Result<Vec<(f64, f64)>> {
    let ranges: Vec<f64> = per_km.iter().map(|p| p.0).collect();
    check_ranges(&ranges)?;
    let mut out = Vec::with_capacity(per_km.len());
    let (r0, c0) = per_km[0];
    let mut acc = r0 * c0;
    out.push((r0, acc));
    for w in per_km.windows(2) {
        acc += 0.5 * (w[0].1 + w[1].1) * (w[1].0 - w[0].0);
        out.push((w[1].0, acc));
    }
    Ok(out)
}

/// Least-squares slope of `log(total cost)` against `log(R)`.
pub fn fit_cost_exponent(total: &[(f64, f64)]) -> Result<f64> {
    if total.len() < 3 {
        return Err(Error::InvalidConfig(format!(
            "need at least 3 points, got {}",
            total.len()
        )));
    }
    if total
        .iter()
        .any(|&(r, c)| !(r > 0.0) || !(c > 0.0) || !r.is_finite() || !c.is_finite())
    {
        return Err(Error::InvalidConfig("ranges and costs must be positive".into()));
    }
    let pts: Vec<(f64, f64)> = total.iter().map(|&(r, c)| (r.ln(), c.ln())).collect();
    Ok(least_squares(&pts).0)
}

/// `exp(C0 + C1·PC + C3·TSL + C4·MD + C5·HT)`.
pub fn demand_at(rec: &CentroidRecord, c: &DemandCoefficients) -> f64 {
    (c.c0 + c.c1 * rec.pc + c.c3 * rec.tsl + c.c4 * rec.md + c.c5 * rec.ht).exp()
}

/// Spreads each record's demand as a Gaussian bump of the given bandwidth.
///
/// Each bump is normalized by its own discrete integral over the active
/// cells, so the field carries exactly `Σ AF_i`. Records outside the active
/// domain are skipped.
pub fn demand_field(
    records: &[CentroidRecord],
    c: &DemandCoefficients,
    grid: &Grid,
    bandwidth: f64,
) -> Result<DensityField> {
    c.validate()?;
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "bandwidth must be positive, got {bandwidth}"
        )));
    }
    let inside: Vec<&CentroidRecord> = records
        .iter()
        .filter(|r| {
            let p = &r.position()[..grid.dim()];
            grid.cell_of(p).is_some_and(|k| grid.is_active(k))
        })
        .collect();
    if inside.is_empty() {
        return Err(Error::NoRecordsInDomain);
    }
    if inside.len() < records.len() {
        log::warn!(
            "{} of {} records lie outside the domain and were skipped",
            records.len() - inside.len(),
            records.len()
        );
    }
    let centers = grid.centers();
    let active = grid.active_indices();
    let h = grid.cell_measure();
    let two_b2 = 2.0 * bandwidth * bandwidth;
    let dist2 = |x: [f64; 2], r: &CentroidRecord| {
        let dx = x[0] - r.x;
        let dy = if grid.dim() == 2 { x[1] - r.y } else { 0.0 };
        dx * dx + dy * dy
    };
    // per record: weight AF_i / Σ_k exp(-(d²_k − d²_min)/2b²)·h
    let weights: Vec<(f64, f64)> = inside
        .iter()
        .map(|r| {
            let d2: Vec<f64> = active.iter().map(|&k| dist2(centers[k], r)).collect();
            let shift = d2.iter().copied().fold(f64::INFINITY, f64::min);
            let z: f64 = d2.iter().map(|d| (-(d - shift) / two_b2).exp()).sum::<f64>() * h;
            (demand_at(r, c) / z, shift)
        })
        .collect();
    let values: Vec<f64> = (0..grid.len())
        .into_par_iter()
        .map(|k| {
            if !grid.is_active(k) {
                return 0.0;
            }
            inside
                .iter()
                .zip(&weights)
                .map(|(r, (w, shift))| w * (-(dist2(centers[k], r) - shift) / two_b2).exp())
                .sum()
        })
        .collect();
    DensityField::new(grid.clone(), values)
}
