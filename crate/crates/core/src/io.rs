//! File formats for density fields and model inputs.
//!
//! Density CSV:
//!
//! ```text
//! # dim=2 bounds=a1,b1,a2,b2 n=n1,n2
//! i,j,value
//! ```
//!
//! Every cell is listed once. Masked grids add ` mask=sparse` to the header
//! and list exactly the active cells. Floats are written in shortest
//! round-trip form, so reading a written file reproduces it bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, DensityField, GaussianPeak, Grid};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DensityFormat {
    Csv,
    Json,
}

impl DensityFormat {
    /// `.json` selects JSON, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => DensityFormat::Json,
            _ => DensityFormat::Csv,
        }
    }
}

pub fn read_density(path: &Path, format: DensityFormat) -> Result<DensityField> {
    let text = fs::read_to_string(path)?;
    match format {
        DensityFormat::Csv => parse_density_csv(&text),
        DensityFormat::Json => parse_density_json(&text),
    }
}

pub fn write_density(field: &DensityField, path: &Path, format: DensityFormat) -> Result<()> {
    let text = match format {
        DensityFormat::Csv => density_to_csv(field),
        DensityFormat::Json => density_to_json(field)?,
    };
    fs::write(path, text)?;
    Ok(())
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

pub fn density_to_csv(field: &DensityField) -> String {
    let grid = field.grid();
    let bounds = join(grid.axes().iter().flat_map(|a| [a.lo, a.hi]));
    let ns = join(grid.axes().iter().map(|a| a.n));
    let mut out = format!("# dim={} bounds={} n={}", grid.dim(), bounds, ns);
    if grid.mask().is_some() {
        out.push_str(" mask=sparse");
    }
    out.push('\n');
    for k in 0..grid.len() {
        if !grid.is_active(k) {
            continue;
        }
        let (i, j) = grid.multi_index(k);
        let v = field.value(k);
        if grid.dim() == 1 {
            let _ = writeln!(out, "{i},{v}");
        } else {
            let _ = writeln!(out, "{i},{j},{v}");
        }
    }
    out
}

fn header_value<'a>(tokens: &[&'a str], key: &str) -> Option<&'a str> {
    tokens
        .iter()
        .find_map(|t| t.strip_prefix(key).and_then(|r| r.strip_prefix('=')))
}

fn parse_list<T: std::str::FromStr>(s: &str, line: usize, what: &str) -> Result<Vec<T>> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse()
                .map_err(|_| Error::parse(line, format!("bad {what} entry '{x}'")))
        })
        .collect()
}

pub fn parse_density_csv(text: &str) -> Result<DensityField> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let (hline, header) = lines
        .find(|(_, l)| !l.is_empty())
        .ok_or_else(|| Error::parse(1, "missing header"))?;
    let header = header
        .strip_prefix('#')
        .ok_or_else(|| Error::parse(hline, "header must start with '#'"))?;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    let dim: usize = header_value(&tokens, "dim")
        .ok_or_else(|| Error::parse(hline, "header lacks dim="))?
        .parse()
        .map_err(|_| Error::parse(hline, "bad dim"))?;
    let bounds: Vec<f64> = parse_list(
        header_value(&tokens, "bounds").ok_or_else(|| Error::parse(hline, "header lacks bounds="))?,
        hline,
        "bounds",
    )?;
    let ns: Vec<usize> = parse_list(
        header_value(&tokens, "n").ok_or_else(|| Error::parse(hline, "header lacks n="))?,
        hline,
        "n",
    )?;
    let sparse = match header_value(&tokens, "mask") {
        None => false,
        Some("sparse") => true,
        Some(other) => return Err(Error::parse(hline, format!("unknown mask mode '{other}'"))),
    };
    if !(dim == 1 || dim == 2) || bounds.len() != 2 * dim || ns.len() != dim {
        return Err(Error::parse(hline, "header dimensions are inconsistent"));
    }
    let axes = (0..dim)
        .map(|a| Axis::new(bounds[2 * a], bounds[2 * a + 1], ns[a]))
        .collect::<Result<Vec<_>>>()
        .map_err(|e| Error::parse(hline, e.to_string()))?;
    let shape = Grid::from_axes(axes.clone(), None).map_err(|e| Error::parse(hline, e.to_string()))?;

    let mut values = vec![0.0; shape.len()];
    let mut seen = vec![false; shape.len()];
    let mut rows = 0usize;
    for (ln, line) in lines {
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != dim + 1 {
            return Err(Error::parse(
                ln,
                format!("expected {} columns, found {}", dim + 1, fields.len()),
            ));
        }
        let idx = |s: &str, n: usize| -> Result<usize> {
            let i: usize = s.parse().map_err(|_| Error::parse(ln, format!("bad index '{s}'")))?;
            if i >= n {
                return Err(Error::parse(
                    ln,
                    format!("grid mismatch: index {i} out of range 0..{n}"),
                ));
            }
            Ok(i)
        };
        let i = idx(fields[0], ns[0])?;
        let j = if dim == 2 { idx(fields[1], ns[1])? } else { 0 };
        let v: f64 = fields[dim]
            .parse()
            .map_err(|_| Error::parse(ln, format!("bad value '{}'", fields[dim])))?;
        if !v.is_finite() || v < 0.0 {
            return Err(Error::parse(ln, format!("negative or non-finite value {v}")));
        }
        let k = shape.linear_index(i, j);
        if seen[k] {
            return Err(Error::parse(ln, format!("duplicate row for cell {k}")));
        }
        seen[k] = true;
        values[k] = v;
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyField);
    }
    let grid = if sparse {
        shape.with_mask(seen).map_err(|e| Error::parse(hline, e.to_string()))?
    } else {
        if let Some(k) = seen.iter().position(|s| !s) {
            return Err(Error::parse(hline, format!("grid mismatch: no row for cell {k}")));
        }
        shape
    };
    DensityField::new(grid, values)
}

#[derive(Serialize, Deserialize)]
struct DensityJson {
    dim: usize,
    bounds: Vec<f64>,
    n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    mask: Option<Vec<bool>>,
    values: Vec<f64>,
}

pub fn density_to_json(field: &DensityField) -> Result<String> {
    let grid = field.grid();
    let doc = DensityJson {
        dim: grid.dim(),
        bounds: grid.axes().iter().flat_map(|a| [a.lo, a.hi]).collect(),
        n: grid.axes().iter().map(|a| a.n).collect(),
        mask: grid.mask().map(<[bool]>::to_vec),
        values: field.values().to_vec(),
    };
    Ok(serde_json::to_string_pretty(&doc)?)
}

pub fn parse_density_json(text: &str) -> Result<DensityField> {
    let doc: DensityJson = serde_json::from_str(text)?;
    if doc.bounds.len() != 2 * doc.dim || doc.n.len() != doc.dim {
        return Err(Error::InvalidGrid("bounds/n do not match dim".into()));
    }
    let axes = (0..doc.dim)
        .map(|a| Axis::new(doc.bounds[2 * a], doc.bounds[2 * a + 1], doc.n[a]))
        .collect::<Result<Vec<_>>>()?;
    let grid = Grid::from_axes(axes, doc.mask)?;
    if doc.values.is_empty() {
        return Err(Error::EmptyField);
    }
    DensityField::new(grid, doc.values)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PeakModel {
    pub peaks: Vec<GaussianPeak>,
}

pub fn read_peaks(path: &Path) -> Result<Vec<GaussianPeak>> {
    let model: PeakModel = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(model.peaks)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PolygonMask {
    pub polygon: Vec<[f64; 2]>,
}

pub fn read_polygon(path: &Path) -> Result<Vec<[f64; 2]>> {
    let poly: PolygonMask = serde_json::from_str(&fs::read_to_string(path)?)?;
    Ok(poly.polygon)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn two_cell_roundtrip() {
        let g = Grid::new_1d(0.0, 1.0, 2).unwrap();
        let f = DensityField::new(g, vec![0.1, 1.0 / 3.0]).unwrap();
        let back = parse_density_csv(&density_to_csv(&f)).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn negative_value_names_row() {
        let err = parse_density_csv("# dim=1 bounds=0,1 n=2\n0,1.0\n1,-2\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn header_only_is_empty() {
        let err = parse_density_csv("# dim=1 bounds=0,1 n=2\n").unwrap_err();
        assert_eq!(err.to_string(), "empty field");
    }

    #[test]
    fn missing_row_is_grid_mismatch() {
        let err = parse_density_csv("# dim=1 bounds=0,1 n=3\n0,1\n1,1\n").unwrap_err();
        assert!(err.to_string().contains("grid mismatch"));
        let err = parse_density_csv("# dim=1 bounds=0,1 n=2\n0,1\n5,1\n").unwrap_err();
        assert!(err.to_string().contains("line 3"));
    }

    #[test]
    fn masked_roundtrip_csv_and_json() {
        let g = Grid::new_2d((0.0, 1.0), (0.0, 1.0), (6, 4))
            .unwrap()
            .with_polygon(&[[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
            .unwrap();
        let f = DensityField::from_fn(g, |x| 0.3 + x[0] * x[1]).unwrap();
        assert_eq!(parse_density_csv(&density_to_csv(&f)).unwrap(), f);
        assert_eq!(parse_density_json(&density_to_json(&f).unwrap()).unwrap(), f);
    }

    #[test]
    fn file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let g = Grid::new_1d(-1.0, 1.0, 5).unwrap();
        let f = DensityField::from_fn(g, |x| x[0] * x[0]).unwrap();
        for name in ["f.csv", "f.json"] {
            let p = dir.path().join(name);
            let fmt = DensityFormat::from_path(&p);
            write_density(&f, &p, fmt).unwrap();
            assert_eq!(read_density(&p, fmt).unwrap(), f);
        }
    }

    #[test]
    fn peaks_and_polygon_schema() {
        let m: PeakModel = serde_json::from_str(r#"{"peaks":[{"A":1.5,"B":2,"X":[0.1,0.2]}]}"#).unwrap();
        assert_eq!(m.peaks[0], GaussianPeak::new(1.5, 2.0, vec![0.1, 0.2]));
        let p: PolygonMask = serde_json::from_str(r#"{"polygon":[[0,0],[1,0],[0,1]]}"#).unwrap();
        assert_eq!(p.polygon.len(), 3);
    }

    proptest! {
        #[test]
        fn csv_roundtrip_is_bit_exact(
            vals in proptest::collection::vec(0.0f64..1e6, 2..40),
            lo in -10.0f64..0.0,
            width in 1e-3f64..10.0,
        ) {
            let g = Grid::new_1d(lo, lo + width, vals.len()).unwrap();
            let f = DensityField::new(g, vals).unwrap();
            let back = parse_density_csv(&density_to_csv(&f)).unwrap();
            prop_assert_eq!(back, f);
        }
    }
}
