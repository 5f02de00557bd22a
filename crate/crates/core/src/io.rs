//! File formats: dataset CSV with a JSON sidecar, field CSV with a JSON
//! header, curve CSV, and JSON reports.
//!
//! Every JSON document carries `schema_version`. Floats are written in the
//! shortest form that parses back to the same value.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::estimators::{FitResult, Method};
use crate::excess_mass::ExcessMassCurve;
use crate::grid::{DenseField, GridSpec, LatticeField};
use crate::model::{Dataset, DualLine, Observation, Provenance, Theta};
use crate::SCHEMA_VERSION;

#[derive(Serialize)]
struct Versioned<'a, T: Serialize> {
    schema_version: u32,
    #[serde(flatten)]
    body: &'a T,
}

/// Pretty JSON with a leading `schema_version` field.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(&Versioned { schema_version: SCHEMA_VERSION, body: value })?;
    s.push('\n');
    Ok(s)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

fn check_schema(value: &serde_json::Value) -> Result<()> {
    match value.get("schema_version").and_then(|v| v.as_u64()) {
        Some(v) if v == SCHEMA_VERSION as u64 => Ok(()),
        Some(v) => invalid(format!("unsupported schema_version {v}")),
        None => invalid("missing schema_version"),
    }
}

/// `<stem>.json` next to a CSV path.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

#[derive(Serialize, Deserialize)]
struct XyRow {
    x: f64,
    y: f64,
}

pub fn write_dataset_csv<W: Write>(data: &Dataset, w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for p in data.points() {
        out.serialize(XyRow { x: p.x, y: p.y })?;
    }
    out.flush()?;
    Ok(())
}

pub fn read_dataset_csv<R: Read>(r: R) -> Result<Dataset> {
    let mut rd = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(r);
    let headers = rd.headers()?.clone();
    if headers.len() != 2 || &headers[0] != "x" || &headers[1] != "y" {
        return invalid(format!("dataset header must be `x,y`, found `{}`", headers.iter().collect::<Vec<_>>().join(",")));
    }
    let mut points = Vec::new();
    for (line, row) in rd.deserialize::<XyRow>().enumerate() {
        let row = row?;
        points.push(Observation::new(row.x, row.y).map_err(|e| Error::InvalidArgument(format!("row {}: {e}", line + 1)))?);
    }
    Dataset::new(points)
}

/// Writes `path` and, when the dataset has provenance, its JSON sidecar.
pub fn save_dataset(data: &Dataset, path: &Path) -> Result<()> {
    write_dataset_csv(data, BufWriter::new(File::create(path)?))?;
    if let Some(meta) = &data.metadata {
        write_json(&sidecar_path(path), meta)?;
    }
    Ok(())
}

/// Reads `path` and attaches its sidecar if one exists.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let data = read_dataset_csv(File::open(path)?)?;
    let side = sidecar_path(path);
    if side.exists() {
        let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&side)?)?;
        check_schema(&raw)?;
        let meta: Provenance = serde_json::from_value(raw)?;
        if meta.n != data.len() {
            return invalid(format!("sidecar says n = {} but the file has {} rows", meta.n, data.len()));
        }
        return Ok(data.with_metadata(meta));
    }
    Ok(data)
}

/// JSON header accompanying a field CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub resolution: Vec<usize>,
    pub r: Option<f64>,
    pub n: Option<usize>,
}

#[derive(Serialize, Deserialize)]
struct FieldRow {
    a: f64,
    b: f64,
    value: f64,
}

pub fn write_field_csv<F: LatticeField + ?Sized, W: Write>(field: &F, w: W) -> Result<()> {
    let grid = field.grid();
    if grid.dim() != 2 {
        return invalid("field export needs a planar grid");
    }
    let mut out = csv::Writer::from_writer(w);
    for k in 0..grid.node_count() {
        let t = grid.node(k);
        out.serialize(FieldRow { a: t.a(), b: t.b(), value: field.value(k) })?;
    }
    out.flush()?;
    Ok(())
}

/// Writes `<path>` (CSV) and `<path>.json` (header).
pub fn save_field<F: LatticeField + ?Sized>(field: &F, r: Option<f64>, n: Option<usize>, path: &Path) -> Result<()> {
    write_field_csv(field, BufWriter::new(File::create(path)?))?;
    let g = field.grid();
    let header = FieldHeader { lo: g.lo.clone(), hi: g.hi.clone(), resolution: g.resolution.clone(), r, n };
    write_json(&sidecar_path(path), &header)
}

pub fn load_field(path: &Path) -> Result<(DenseField, FieldHeader)> {
    let raw: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(path))?)?;
    check_schema(&raw)?;
    let header: FieldHeader = serde_json::from_value(raw)?;
    let grid = GridSpec::new(header.lo.clone(), header.hi.clone(), header.resolution.clone())?;
    if grid.dim() != 2 {
        return invalid("field files are planar");
    }
    let mut rd = csv::Reader::from_reader(File::open(path)?);
    let mut values = Vec::with_capacity(grid.node_count());
    for row in rd.deserialize::<FieldRow>() {
        values.push(row?.value);
    }
    if values.len() != grid.node_count() {
        return invalid(format!("expected {} field rows, found {}", grid.node_count(), values.len()));
    }
    Ok((DenseField { grid, values }, header))
}

#[derive(Serialize)]
struct CurveRow<'a> {
    lambda: f64,
    value: f64,
    kind: &'a str,
}

pub fn write_curves_csv<W: Write>(curves: &[&ExcessMassCurve], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for c in curves {
        let kind = c.kind.to_string();
        for (&lambda, &value) in c.lambdas.iter().zip(&c.values) {
            out.serialize(CurveRow { lambda, value, kind: &kind })?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn write_dual_lines_csv<W: Write>(lines: &[DualLine], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for l in lines {
        out.serialize(l)?;
    }
    out.flush()?;
    Ok(())
}

/// External shape of a fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub method: Method,
    pub theta_hat: Theta,
    pub max_value: f64,
    pub r: Option<f64>,
    pub n_solution_nodes: usize,
    pub n_components: usize,
    pub grid: GridSpec,
    pub warnings: Vec<String>,
}

impl From<&FitResult> for FitSummary {
    fn from(f: &FitResult) -> Self {
        Self {
            method: f.method,
            theta_hat: f.theta_hat.clone(),
            max_value: f.max_value,
            r: f.r,
            n_solution_nodes: f.solution_nodes.len(),
            n_components: f.n_components,
            grid: f.grid.clone(),
            warnings: f.warnings.clone(),
        }
    }
}

pub fn fit_json(fit: &FitResult) -> Result<String> {
    to_json(&FitSummary::from(fit))
}

pub fn parse_fit_json(s: &str) -> Result<FitSummary> {
    let raw: serde_json::Value = serde_json::from_str(s)?;
    check_schema(&raw)?;
    Ok(serde_json::from_value(raw)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fit_ht;
    use crate::excess_mass::CurveKind;
    use crate::objective::objective_field;
    use crate::robustness::breakdown_points;

    fn sample() -> Dataset {
        Dataset::from_xy(&[0.1, 1.0 / 3.0, -2.5], &[1e-17, 2.0, 7.125]).unwrap()
    }

    #[test]
    fn dataset_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        let data = sample().with_metadata(Provenance { generator: "test".into(), seed: 9, n: 3, theta0: Some(Theta::planar(1.0, 2.0)) });
        save_dataset(&data, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("x,y\n"));
        assert!(!text.contains('\r'));
        let back = load_dataset(&path).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn dataset_rejects_bad_input() {
        assert!(read_dataset_csv("a,b\n1,2\n".as_bytes()).is_err());
        assert!(read_dataset_csv("x,y\n1,NaN\n".as_bytes()).is_err());
        assert!(read_dataset_csv("x,y\n1,zz\n".as_bytes()).is_err());
        assert!(read_dataset_csv("x,y\n".as_bytes()).is_err());
    }

    #[test]
    fn field_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let data = sample();
        let grid = GridSpec::planar((-1.0, 3.0), (-2.0, 8.0), (7, 9)).unwrap();
        let field = objective_field(&data, &grid, 0.5).unwrap();
        save_field(&field, Some(0.5), Some(3), &path).unwrap();
        let (back, header) = load_field(&path).unwrap();
        assert_eq!(back.grid, grid);
        assert_eq!(back.values, field.values());
        assert_eq!(header.r, Some(0.5));
        let first = std::fs::read_to_string(&path).unwrap();
        assert!(first.starts_with("a,b,value\n"));
    }

    #[test]
    fn json_carries_schema_version() {
        let data = sample();
        let fit = fit_ht(&data, &GridSpec::square(-3.0, 3.0, 11).unwrap(), 0.4).unwrap();
        let s = fit_json(&fit).unwrap();
        let v: serde_json::Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["schema_version"], SCHEMA_VERSION);
        assert_eq!(v["method"], "ht");
        assert_eq!(parse_fit_json(&s).unwrap(), FitSummary::from(&fit));
        let b = to_json(&breakdown_points(10, 7).unwrap()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&b).unwrap();
        assert_eq!(v["eps_add"]["num"], 3);
        assert_eq!(v["eps_add"]["den"], 8);
    }

    #[test]
    fn curve_csv_layout() {
        let c = ExcessMassCurve { lambdas: vec![0.1, 0.5], values: vec![0.25, 0.0], kind: CurveKind::Null };
        let mut buf = Vec::new();
        write_curves_csv(&[&c], &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "lambda,value,kind\n0.1,0.25,null\n0.5,0.0,null\n");
    }
}
