//! Path files: CSV with header `t,x` and a JSON side file with the hit
//! annotations.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::MutSelParams;
use crate::sde::{ApproachTrace, SamplePath};

/// 17 significant digits, which round-trips every `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_path_csv<W: Write>(path: &SamplePath, out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["t", "x"]).map_err(io)?;
    for (t, x) in path.times.iter().zip(&path.values) {
        w.write_record([fmt_f64(*t), fmt_f64(*x)]).map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a `t,x` file and validates the result as a path on `[0,1]`.
pub fn read_path_csv<R: Read>(input: R) -> Result<SamplePath> {
    let mut r = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = r.headers().map_err(|e| Error::Parse(e.to_string()))?.clone();
    if headers.len() != 2 || &headers[0] != "t" || &headers[1] != "x" {
        return Err(Error::Parse(format!(
            "expected header `t,x`, found `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for (i, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(e.to_string()))?;
        let line = i + 2;
        let num = |k: usize| -> Result<f64> {
            rec.get(k)
                .ok_or_else(|| Error::Parse(format!("line {line}: missing column")))?
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("line {line}: {e}")))
        };
        times.push(num(0)?);
        values.push(num(1)?);
    }
    SamplePath::new(times, values)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathMeta {
    pub points: usize,
    pub horizon: f64,
    pub hit0: Option<f64>,
    pub hit1: Option<f64>,
    pub first_return0: Option<f64>,
    pub first_return1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub params: Option<MutSelParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stream: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach0: Option<ApproachTrace>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub approach1: Option<ApproachTrace>,
}

impl PathMeta {
    pub fn of(path: &SamplePath) -> Self {
        PathMeta {
            points: path.times.len(),
            horizon: path.horizon(),
            hit0: path.hit0,
            hit1: path.hit1,
            first_return0: path.first_return0,
            first_return1: path.first_return1,
            params: None,
            seed: None,
            stream: None,
            approach0: path.approach0.clone(),
            approach1: path.approach1.clone(),
        }
    }

    pub fn apply(&self, path: &mut SamplePath) {
        path.hit0 = self.hit0;
        path.hit1 = self.hit1;
        path.first_return0 = self.first_return0;
        path.first_return1 = self.first_return1;
        path.approach0 = self.approach0.clone();
        path.approach1 = self.approach1.clone();
    }
}

/// `paths/run.csv` → `paths/run.json`.
pub fn meta_path_for(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn save_path(path: &SamplePath, meta: &PathMeta, csv_path: &Path) -> Result<()> {
    write_path_csv(path, BufWriter::new(File::create(csv_path)?))?;
    let mut json = serde_json::to_string_pretty(meta).map_err(|e| Error::Io(e.to_string()))?;
    json.push('\n');
    std::fs::write(meta_path_for(csv_path), json)?;
    Ok(())
}

/// Reads the CSV and, when present, restores annotations from the side
/// file.
pub fn load_path(csv_path: &Path) -> Result<SamplePath> {
    let mut path = read_path_csv(File::open(csv_path)?)?;
    let side = meta_path_for(csv_path);
    if side.exists() {
        let meta: PathMeta =
            serde_json::from_str(&std::fs::read_to_string(&side)?).map_err(|e| Error::Parse(format!("{}: {e}", side.display())))?;
        if meta.points != path.times.len() {
            return Err(Error::Parse(format!(
                "{} describes {} points but the CSV has {}",
                side.display(),
                meta.points,
                path.times.len()
            )));
        }
        meta.apply(&mut path);
    }
    Ok(path)
}
