use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::transmute::DiscreteOperator;

/// Output encoding for tables and dense operators.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Csv,
    Json,
    /// Binary for dense operators, CSV for tables.
    Bin,
}

impl Format {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "bin" => Ok(Self::Bin),
            _ => Err(Error::Config(format!("format must be csv, json or bin, got {s:?}"))),
        }
    }
}

/// Writes to a temporary sibling and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        if !dir.as_os_str().is_empty() {
            fs::create_dir_all(dir)?;
        }
    }
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("artifact");
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    fs::write(&tmp, bytes)?;
    fs::rename(&tmp, path)?;
    Ok(())
}

#[derive(Serialize)]
struct JsonTable {
    columns: Vec<String>,
    rows: Vec<Vec<f64>>,
}

fn csv_to_json(csv_bytes: &[u8]) -> Result<Vec<u8>> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(csv_bytes);
    let columns = r.headers()?.iter().map(String::from).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|v| v.parse::<f64>().map_err(|e| Error::Config(format!("non-numeric cell {v:?}: {e}"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(serde_json::to_vec_pretty(&JsonTable { columns, rows })?)
}

/// Writes a table produced by `fill` (CSV with header) as `<stem>.csv` or `<stem>.json`.
pub fn write_table(
    dir: &Path,
    stem: &str,
    format: Format,
    fill: impl FnOnce(&mut Vec<u8>) -> Result<()>,
) -> Result<PathBuf> {
    let mut buf = Vec::new();
    fill(&mut buf)?;
    let (path, bytes) = match format {
        Format::Json => (dir.join(format!("{stem}.json")), csv_to_json(&buf)?),
        Format::Csv | Format::Bin => (dir.join(format!("{stem}.csv")), buf),
    };
    write_atomic(&path, &bytes)?;
    Ok(path)
}

/// Dense operator as CSV (no header), JSON rows, or the binary format.
pub fn write_operator(dir: &Path, stem: &str, format: Format, op: &DiscreteOperator) -> Result<PathBuf> {
    let mut buf = Vec::new();
    let path = match format {
        Format::Csv => {
            op.write_csv(&mut buf)?;
            dir.join(format!("{stem}.csv"))
        }
        Format::Bin => {
            op.write_binary(&mut buf)?;
            dir.join(format!("{stem}.bin"))
        }
        Format::Json => {
            let rows: Vec<Vec<f64>> = op.matrix().rows().into_iter().map(|r| r.to_vec()).collect();
            buf = serde_json::to_vec(&serde_json::json!({
                "recipe": op.recipe(),
                "n": op.grid().len(),
                "rows": rows,
            }))?;
            dir.join(format!("{stem}.json"))
        }
    };
    write_atomic(&path, &buf)?;
    Ok(path)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grids::SpaceGrid;

    #[test]
    fn atomic_write_leaves_no_temp() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("sub/a.txt");
        write_atomic(&p, b"hello").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"hello");
        let names: Vec<_> = fs::read_dir(p.parent().unwrap()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names.len(), 1);
    }

    #[test]
    fn table_formats() {
        let dir = tempfile::tempdir().unwrap();
        let fill = |b: &mut Vec<u8>| {
            b.extend_from_slice(b"a,b\n1,2\n3,4.5\n");
            Ok(())
        };
        let p = write_table(dir.path(), "t", Format::Json, fill).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&fs::read(p).unwrap()).unwrap();
        assert_eq!(v["columns"][1], "b");
        assert_eq!(v["rows"][1][1], 4.5);
        let g = SpaceGrid::new(1.0, 8).unwrap();
        let op = DiscreteOperator::identity(&g);
        let p = write_operator(dir.path(), "op", Format::Bin, &op).unwrap();
        let back = DiscreteOperator::read_binary(&g, fs::File::open(p).unwrap()).unwrap();
        assert_eq!(back.matrix(), op.matrix());
        assert!(Format::parse("xml").is_err());
    }
}
