//! File formats: JSON for specifications and reports, CSV for datasets and
//! evaluation grids. Parse errors carry the file name and line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, QuadratureConfig};
use crate::simulate::{format_time, BivariateObservation, DatasetWriter};

const DATASET_COLUMNS: [&str; 7] = ["pair_id", "t1", "j1", "d1", "t2", "j2", "d2"];

fn json_error(path: &Path, e: serde_json::Error) -> Error {
    Error::Parse(format!("{}:{}:{}: {e}", path.display(), e.line(), e.column()))
}

/// Parses JSON text; `origin` names the source in error messages.
pub fn parse_json<T: DeserializeOwned>(text: &str, origin: &Path) -> Result<T> {
    serde_json::from_str(text).map_err(|e| json_error(origin, e))
}

pub fn load_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)?;
    parse_json(&text, path)
}

pub fn load_model(path: &Path) -> Result<ModelSpec> {
    load_json(path)
}

/// Pretty-printed JSON with a trailing newline.
pub fn save_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn parse_field<T: std::str::FromStr>(record: &csv::StringRecord, i: usize, origin: &Path, line: u64) -> Result<T> {
    let raw = record.get(i).unwrap_or("");
    raw.trim().parse().map_err(|_| {
        Error::Parse(format!(
            "{}:{line}: column `{}` has invalid value `{raw}`",
            origin.display(),
            DATASET_COLUMNS.get(i).copied().unwrap_or("atom_id")
        ))
    })
}

fn parse_flag(record: &csv::StringRecord, i: usize, origin: &Path, line: u64) -> Result<bool> {
    match parse_field::<u8>(record, i, origin, line)? {
        0 => Ok(false),
        1 => Ok(true),
        v => Err(Error::Parse(format!(
            "{}:{line}: column `{}` must be 0 or 1, got {v}",
            origin.display(),
            DATASET_COLUMNS[i]
        ))),
    }
}

/// Reads a dataset in the simulation CSV layout from any reader.
pub fn read_dataset_from<R: std::io::Read>(reader: R, origin: &Path) -> Result<Vec<BivariateObservation>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = rdr.headers().map_err(|e| Error::Parse(format!("{}:1: {e}", origin.display())))?.clone();
    let names: Vec<&str> = header.iter().map(str::trim).collect();
    let with_atom = names.len() == 8 && names[7] == "atom_id";
    if names.len() < 7 || names[..7] != DATASET_COLUMNS || (names.len() > 7 && !with_atom) {
        return Err(Error::Parse(format!(
            "{}:1: expected header `{}` (optionally followed by atom_id), got `{}`",
            origin.display(),
            DATASET_COLUMNS.join(","),
            names.join(",")
        )));
    }
    let mut out = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::Parse(format!("{}:{line}: {e}", origin.display()))
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let t1: f64 = parse_field(&record, 1, origin, line)?;
        let j1: usize = parse_field(&record, 2, origin, line)?;
        let d1 = parse_flag(&record, 3, origin, line)?;
        let t2: f64 = parse_field(&record, 4, origin, line)?;
        let j2: usize = parse_field(&record, 5, origin, line)?;
        let d2 = parse_flag(&record, 6, origin, line)?;
        if !(t1 > 0.0 && t2 > 0.0 && t1.is_finite() && t2.is_finite()) {
            return Err(Error::Parse(format!("{}:{line}: times must be positive and finite", origin.display())));
        }
        if d1 != (j1 != 0) || d2 != (j2 != 0) {
            return Err(Error::Parse(format!(
                "{}:{line}: event indicator disagrees with cause label (cause 0 means censored)",
                origin.display()
            )));
        }
        let atom = if with_atom {
            let w: usize = parse_field(&record, 7, origin, line)?;
            if w == 0 {
                return Err(Error::Parse(format!("{}:{line}: atom ids are 1-based", origin.display())));
            }
            Some(w - 1)
        } else {
            None
        };
        out.push(BivariateObservation { t1, j1, d1, t2, j2, d2, atom });
    }
    Ok(out)
}

pub fn read_dataset(path: &Path) -> Result<Vec<BivariateObservation>> {
    read_dataset_from(File::open(path)?, path)
}

pub fn write_dataset(path: &Path, data: &[BivariateObservation], record_atom: bool) -> Result<()> {
    let mut w = DatasetWriter::new(BufWriter::new(File::create(path)?), record_atom)?;
    for o in data {
        w.write(o)?;
    }
    w.finish()
}

/// Joint sub-distributions and sub-densities on `t1s × t2s` as CSV rows
/// `t1,t2,j1,j2,F,f` (1-based causes).
pub fn write_evaluation<W: Write>(m: &ModelSpec, t1s: &[f64], t2s: &[f64], q: &QuadratureConfig, writer: W) -> Result<()> {
    let grid = m.joint_sub_distribution_grid(t1s, t2s, q)?;
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["t1", "t2", "j1", "j2", "F", "f"])?;
    for j1 in 0..grid.l1 {
        for j2 in 0..grid.l2 {
            for (i1, &t1) in t1s.iter().enumerate() {
                for (i2, &t2) in t2s.iter().enumerate() {
                    let f = m.joint_sub_density(j1, j2, t1, t2)?;
                    w.write_record([
                        format_time(t1),
                        format_time(t2),
                        (j1 + 1).to_string(),
                        (j2 + 1).to_string(),
                        format_time(grid.get(j1, j2, i1, i2)),
                        format_time(f),
                    ])?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn origin() -> &'static Path {
        Path::new("data.csv")
    }

    #[test]
    fn reads_simulation_layout() {
        let text = "pair_id,t1,j1,d1,t2,j2,d2\n1,1.5e0,2,1,0.25,0,0\n2,3,1,1,4,1,1\n";
        let data = read_dataset_from(text.as_bytes(), origin()).unwrap();
        assert_eq!(data.len(), 2);
        assert_eq!((data[0].j1, data[0].d1, data[0].j2, data[0].d2), (2, true, 0, false));
        assert_eq!(data[1].t2, 4.0);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "pair_id,t1,j1,d1,t2,j2,d2\n1,1,1,1,1,1,1\n2,abc,1,1,1,1,1\n";
        let err = read_dataset_from(text.as_bytes(), origin()).unwrap_err().to_string();
        assert!(err.contains("data.csv:3"), "{err}");
        assert!(err.contains("`t1`"), "{err}");

        let text = "pair_id,t1,j1,d1,t2,j2,d2\n1,1,1,1,1,1,1\n2,1,1,1\n";
        let err = read_dataset_from(text.as_bytes(), origin()).unwrap_err().to_string();
        assert!(err.contains("data.csv:3"), "{err}");

        let text = "pair_id,t1,j1,d1,t2,j2,d2\n1,1,0,1,1,1,1\n";
        assert!(read_dataset_from(text.as_bytes(), origin()).is_err());
        assert!(read_dataset_from("a,b\n".as_bytes(), origin()).is_err());
    }

    #[test]
    fn json_errors_carry_position() {
        let err = parse_json::<ModelSpec>("{\n  \"structure\": [1,\n", Path::new("m.json")).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("m.json:"), "{msg}");
        assert!(matches!(err, Error::Parse(_)));
    }
}
