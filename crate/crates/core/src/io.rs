//! On-disk formats.
//!
//! * Field: `<name>.json` header plus `<name>.bin` with the values as
//!   little-endian `f64` in field layout. 1D fields also convert to and from
//!   CSV with columns `t,x,value`.
//! * Design: `design.json` header plus `design.bin` holding `Θ` row-major
//!   followed by `U_t`.
//! * Stability profile: CSV with header `lambda_star,<label_1>,…,<label_p>`.
//! * Recovered model: JSON.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use nalgebra::{DMatrix, DVector};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::dictionary::design::StandardizationRecord;
use crate::dictionary::{DesignSystem, Provenance};
use crate::error::{Error, Result};
use crate::experiments::AchievabilityRow;
use crate::field::Field;
use crate::stability::{ModelMeta, RecoveredModel, StabilityProfile};

pub const DTYPE: &str = "f64le";
pub const FIELD_LAYOUT: &str = "t-major,x-fastest";
pub const DESIGN_LAYOUT: &str = "theta row-major, then ut";

fn format_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Format(msg.into()))
}

/// Pretty-printed JSON with a trailing newline.
pub fn write_json<T: Serialize + ?Sized>(value: &T, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let r = BufReader::new(File::open(path)?);
    serde_json::from_reader(r).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

fn write_f64s(values: impl IntoIterator<Item = f64>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_f64s(path: &Path, expected: usize, header: &Path) -> Result<Vec<f64>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() != expected * 8 {
        return format_err(format!(
            "{} holds {} bytes but {} describes {expected} values ({} bytes)",
            path.display(),
            bytes.len(),
            header.display(),
            expected * 8
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect())
}

/// The binary file that sits next to `header`, named by `data`.
fn sibling(header: &Path, data: &str) -> PathBuf {
    header.parent().unwrap_or(Path::new("")).join(data)
}

/// `prefix.json` and `prefix.bin`.
pub fn paths_for(prefix: &Path) -> (PathBuf, PathBuf) {
    (prefix.with_extension("json"), prefix.with_extension("bin"))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHeader {
    pub name: String,
    /// Spatial extents followed by the number of time slices.
    pub dims: Vec<usize>,
    /// Spatial spacings followed by the time step.
    pub spacing: Vec<f64>,
    pub dtype: String,
    pub layout: String,
    /// File name of the values, relative to the header.
    pub data: String,
}

impl FieldHeader {
    pub fn of(field: &Field, data: &str) -> FieldHeader {
        let mut dims = field.shape().to_vec();
        dims.push(field.nt());
        let mut spacing = field.spacing().to_vec();
        spacing.push(field.dt());
        FieldHeader {
            name: field.name().to_string(),
            dims,
            spacing,
            dtype: DTYPE.into(),
            layout: FIELD_LAYOUT.into(),
            data: data.into(),
        }
    }
}

/// Writes `header` (a `.json` path) and its `.bin` sibling.
pub fn write_field(field: &Field, header: &Path) -> Result<()> {
    let bin = header.with_extension("bin");
    let data = bin.file_name().and_then(|s| s.to_str()).unwrap_or("field.bin");
    write_json(&FieldHeader::of(field, data), header)?;
    write_f64s(field.values().iter().copied(), &bin)
}

pub fn read_field(header: &Path) -> Result<Field> {
    let h: FieldHeader = read_json(header)?;
    if h.dtype != DTYPE || h.layout != FIELD_LAYOUT {
        return format_err(format!(
            "{}: unsupported dtype/layout '{}'/'{}'",
            header.display(),
            h.dtype,
            h.layout
        ));
    }
    if h.dims.len() < 2 || h.dims.len() != h.spacing.len() {
        return format_err(format!(
            "{}: dims and spacing must list space then time",
            header.display()
        ));
    }
    let count: usize = h.dims.iter().product();
    let values = read_f64s(&sibling(header, &h.data), count, header)?;
    let d = h.dims.len() - 1;
    Field::new(
        h.name,
        h.dims[..d].to_vec(),
        h.dims[d],
        h.spacing[..d].to_vec(),
        h.spacing[d],
        values,
    )
    .map_err(|e| Error::Format(format!("{}: {e}", header.display())))
}

#[derive(Serialize, Deserialize)]
struct CsvRow {
    t: f64,
    x: f64,
    value: f64,
}

/// Writes a 1D field as `t,x,value` rows, time-major, with coordinates
/// `index·spacing`.
pub fn write_field_csv(field: &Field, path: &Path) -> Result<()> {
    if field.dims() != 1 {
        return Err(Error::Argument(format!(
            "CSV export is for 1D fields, '{}' has {}",
            field.name(),
            field.dims()
        )));
    }
    let nx = field.shape()[0];
    let mut w = csv::Writer::from_path(path)?;
    for t in 0..field.nt() {
        for (i, &value) in field.slice(t).iter().enumerate() {
            w.serialize(CsvRow {
                t: t as f64 * field.dt(),
                x: i as f64 * field.spacing()[0],
                value,
            })?;
        }
    }
    debug_assert_eq!(field.values().len(), nx * field.nt());
    w.flush()?;
    Ok(())
}

/// Reads a CSV written by [`write_field_csv`]. Spacings are recovered from
/// the coordinates of index 1 along each axis.
pub fn read_field_csv(path: &Path, name: &str) -> Result<Field> {
    let mut r = csv::Reader::from_path(path)?;
    let rows: Vec<CsvRow> = r.deserialize().collect::<std::result::Result<_, _>>()?;
    let bad = |msg: &str| Error::Format(format!("{}: {msg}", path.display()));
    let first_t = rows.first().ok_or_else(|| bad("no rows"))?.t;
    let nx = rows.iter().take_while(|r| r.t == first_t).count();
    if nx < 3 || !rows.len().is_multiple_of(nx) {
        return Err(bad("rows do not form a complete t × x grid"));
    }
    let nt = rows.len() / nx;
    if nt < 3 {
        return Err(bad("fewer than 3 time slices"));
    }
    let dx = rows[1].x - rows[0].x;
    let dt = rows[nx].t - first_t;
    for (j, row) in rows.iter().enumerate() {
        let (t, i) = (j / nx, j % nx);
        if row.x != rows[i].x || row.t != rows[t * nx].t {
            return Err(bad(&format!("row {} breaks the t-major, x-fastest order", j + 2)));
        }
    }
    Field::new(name, vec![nx], nt, vec![dx], dt, rows.iter().map(|r| r.value).collect())
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignHeader {
    pub labels: Vec<String>,
    pub n: usize,
    pub p: usize,
    pub constant: Option<usize>,
    /// Column statistics of the full design, for reference.
    pub standardization: StandardizationRecord,
    pub provenance: Provenance,
    pub dtype: String,
    pub layout: String,
    pub data: String,
}

pub fn write_design(design: &DesignSystem, header: &Path) -> Result<()> {
    let bin = header.with_extension("bin");
    let h = DesignHeader {
        labels: design.labels.clone(),
        n: design.n(),
        p: design.p(),
        constant: design.constant,
        standardization: design.standardize().record(),
        provenance: design.provenance.clone(),
        dtype: DTYPE.into(),
        layout: DESIGN_LAYOUT.into(),
        data: bin.file_name().and_then(|s| s.to_str()).unwrap_or("design.bin").into(),
    };
    write_json(&h, header)?;
    let theta = &design.theta;
    let rows = (0..design.n()).flat_map(|i| (0..design.p()).map(move |k| theta[(i, k)]));
    write_f64s(rows.chain(design.ut.iter().copied()), &bin)
}

pub fn read_design(header: &Path) -> Result<DesignSystem> {
    let h: DesignHeader = read_json(header)?;
    if h.dtype != DTYPE || h.layout != DESIGN_LAYOUT || h.labels.len() != h.p {
        return format_err(format!("{}: inconsistent design header", header.display()));
    }
    let values = read_f64s(&sibling(header, &h.data), h.n * h.p + h.n, header)?;
    let theta = DMatrix::from_row_slice(h.n, h.p, &values[..h.n * h.p]);
    let ut = DVector::from_column_slice(&values[h.n * h.p..]);
    let mut d =
        DesignSystem::new(theta, ut, h.labels).map_err(|e| Error::Format(format!("{}: {e}", header.display())))?;
    d.constant = h.constant;
    d.provenance = h.provenance;
    Ok(d)
}

/// Profile rows keyed by `λ* = λ/λ_max`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileTable {
    pub labels: Vec<String>,
    pub lambda_star: Vec<f64>,
    pub pi: Vec<Vec<f64>>,
}

pub fn write_profile_csv(profile: &StabilityProfile, path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["lambda_star".to_string()];
    header.extend(profile.labels.iter().cloned());
    w.write_record(&header)?;
    for (ls, row) in profile.path.normalized().iter().zip(&profile.pi) {
        let mut rec = vec![ls.to_string()];
        rec.extend(row.iter().map(f64::to_string));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads and validates a profile CSV: first column `lambda_star` in
/// `(0, 1]` and strictly decreasing, every importance in `[0, 1]`.
pub fn read_profile_csv(path: &Path) -> Result<ProfileTable> {
    let mut r = csv::Reader::from_path(path)?;
    let header = r.headers()?.clone();
    if header.get(0) != Some("lambda_star") || header.len() < 2 {
        return format_err(format!("{}: header must start with lambda_star", path.display()));
    }
    let labels: Vec<String> = header.iter().skip(1).map(String::from).collect();
    let mut lambda_star = Vec::new();
    let mut pi = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec?;
        let nums: Vec<f64> = rec
            .iter()
            .map(|s| s.parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Format(format!("{} row {}: {e}", path.display(), i + 2)))?;
        if !(nums[0] > 0.0 && nums[0] <= 1.0) || nums[1..].iter().any(|v| !(0.0..=1.0).contains(v)) {
            return format_err(format!("{} row {}: value out of range", path.display(), i + 2));
        }
        if lambda_star.last().is_some_and(|&prev| nums[0] >= prev) {
            return format_err(format!("{} row {}: lambda_star must decrease", path.display(), i + 2));
        }
        lambda_star.push(nums[0]);
        pi.push(nums[1..].to_vec());
    }
    if lambda_star.is_empty() {
        return format_err(format!("{}: no rows", path.display()));
    }
    Ok(ProfileTable {
        labels,
        lambda_star,
        pi,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelTerm {
    pub label: String,
    pub coefficient: f64,
    pub importance: f64,
}

/// The constant term; `reported` when its magnitude exceeds `1e-12`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InterceptEntry {
    pub label: String,
    pub coefficient: f64,
    pub reported: bool,
}

/// `model.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub support: Vec<ModelTerm>,
    pub intercept: InterceptEntry,
    pub meta: ModelMeta,
}

impl From<&RecoveredModel> for ModelFile {
    fn from(m: &RecoveredModel) -> ModelFile {
        ModelFile {
            support: m
                .support
                .iter()
                .map(|t| ModelTerm {
                    label: t.label.clone(),
                    coefficient: t.coefficient,
                    importance: t.importance,
                })
                .collect(),
            intercept: InterceptEntry {
                label: "1".into(),
                coefficient: m.intercept,
                reported: m.has_intercept_term(),
            },
            meta: m.meta.clone(),
        }
    }
}

pub fn write_model(model: &RecoveredModel, path: &Path) -> Result<()> {
    write_json(&ModelFile::from(model), path)
}

/// Columns `model,p,sigma,n,reps,successes,frequency,variance`.
pub fn write_achievability_csv(rows: &[AchievabilityRow], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_achievability_csv(path: &Path) -> Result<Vec<AchievabilityRow>> {
    let mut r = csv::Reader::from_path(path)?;
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field_1d() -> Field {
        Field::from_fn("u", vec![7], 5, vec![0.3], 0.01, |x, t| (x[0] * 1.7).sin() + t.exp()).unwrap()
    }

    #[test]
    fn field_binary_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let f = Field::from_fn("w", vec![4, 3, 5], 3, vec![0.1, 0.2, 0.3], 0.5, |x, t| {
            x[0] - x[1] * x[2] + t
        })
        .unwrap();
        let h = dir.path().join("w.json");
        write_field(&f, &h).unwrap();
        assert_eq!(read_field(&h).unwrap(), f);
        let header: FieldHeader = read_json(&h).unwrap();
        assert_eq!(header.dims, vec![4, 3, 5, 3]);
        assert_eq!(header.data, "w.bin");
    }

    #[test]
    fn truncated_binary_names_both_files() {
        let dir = tempfile::tempdir().unwrap();
        let h = dir.path().join("u.json");
        write_field(&field_1d(), &h).unwrap();
        let bin = dir.path().join("u.bin");
        let bytes = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &bytes[..bytes.len() - 8]).unwrap();
        let msg = read_field(&h).unwrap_err().to_string();
        assert!(msg.contains("u.bin") && msg.contains("u.json"), "{msg}");
    }

    #[test]
    fn csv_round_trip_is_bitwise() {
        let dir = tempfile::tempdir().unwrap();
        let f = field_1d();
        let p = dir.path().join("u.csv");
        write_field_csv(&f, &p).unwrap();
        let back = read_field_csv(&p, "u").unwrap();
        assert_eq!(back, f);
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("t,x,value\n"));
    }

    #[test]
    fn csv_rejects_shuffled_rows() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("u.csv");
        write_field_csv(&field_1d(), &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(9, 10);
        std::fs::write(&p, lines.join("\n")).unwrap();
        assert!(read_field_csv(&p, "u").is_err());
    }

    #[test]
    fn design_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut d = DesignSystem::new(
            DMatrix::from_fn(6, 3, |i, k| {
                if k == 0 {
                    1.0
                } else {
                    (i as f64 * 0.37 - 1.0).powi(k as i32)
                }
            }),
            DVector::from_fn(6, |i, _| i as f64 / 7.0),
            vec!["1".into(), "u".into(), "u^2".into()],
        )
        .unwrap();
        d.provenance.sigma = Some(0.02);
        let h = dir.path().join("design.json");
        write_design(&d, &h).unwrap();
        assert_eq!(read_design(&h).unwrap(), d);
    }

    #[test]
    fn achievability_csv_columns() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("table.csv");
        let rows = vec![AchievabilityRow {
            model: "burgers".into(),
            p: 19,
            sigma: 0.02,
            n: 300,
            reps: 20,
            successes: 19,
            frequency: 0.95,
            variance: 0.95 * 0.05 / 20.0,
        }];
        write_achievability_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("model,p,sigma,n,reps,successes,frequency,variance\n"));
        assert_eq!(read_achievability_csv(&p).unwrap(), rows);
    }
}
