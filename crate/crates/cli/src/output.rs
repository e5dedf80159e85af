//! CSV tables and run manifests. Everything is written from one thread
//! after results are in seed order, so reruns are byte-identical.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use wfsep_core::io::fmt_f64;
use wfsep_core::{Error, Result};

pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Table {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }

    pub fn write(&self, dir: &Path, name: &str) -> Result<()> {
        std::fs::write(dir.join(name), self.render())?;
        Ok(())
    }
}

/// Number cell; non-finite values are spelled `inf`, `-inf`, `nan`.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        fmt_f64(v)
    }
}

/// `key,value` table.
pub fn summary(pairs: &[(String, String)]) -> Table {
    let mut t = Table::new(&["key", "value"]);
    for (k, v) in pairs {
        t.push(vec![k.clone(), v.clone()]);
    }
    t
}

#[derive(Serialize)]
struct Manifest<'a, S: Serialize> {
    tool: &'static str,
    version: &'static str,
    subcommand: &'a str,
    master_seed: Option<u64>,
    settings: &'a S,
}

pub fn write_manifest<S: Serialize>(dir: &Path, subcommand: &str, master_seed: Option<u64>, settings: &S) -> Result<()> {
    let m = Manifest {
        tool: "wfsep",
        version: env!("CARGO_PKG_VERSION"),
        subcommand,
        master_seed,
        settings,
    };
    let mut json = serde_json::to_string_pretty(&m).map_err(|e| Error::Io(e.to_string()))?;
    json.push('\n');
    std::fs::write(dir.join("manifest.json"), json)?;
    Ok(())
}

pub fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("{}: {e}", dir.display())))
}

/// `k1=v1 k2=v2 ...`
pub fn kv_line(pairs: &[(&str, String)]) -> String {
    let mut s = String::new();
    for (i, (k, v)) in pairs.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        let _ = write!(s, "{k}={v}");
    }
    s
}
