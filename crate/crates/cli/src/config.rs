//! Flat `key = value` config files, merged in front of the command line so
//! that explicit flags win.

use std::ffi::OsString;
use std::path::Path;

use wfsep_core::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("config line {}: expected key = value", i + 1)))?;
        let k = k.trim().replace('_', "-");
        if k.is_empty() || k == "config" {
            return Err(Error::Parse(format!("config line {}: invalid key `{}`", i + 1, k)));
        }
        out.push((k, v.trim().to_string()));
    }
    Ok(out)
}

/// Finds `--config FILE` or `--config=FILE` anywhere after the subcommand.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// `[prog, sub, rest...]` becomes `[prog, sub, file flags..., rest...]`.
/// Boolean keys take `true`/`false`.
pub fn merge(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(file) = config_path(&args) else {
        return Ok(args);
    };
    if args.len() < 2 {
        return Ok(args);
    }
    let text = std::fs::read_to_string(Path::new(&file))
        .map_err(|e| Error::Io(format!("{}: {e}", Path::new(&file).display())))?;
    let mut merged: Vec<OsString> = args[..2].to_vec();
    for (k, v) in parse_config(&text)? {
        match v.as_str() {
            "true" => merged.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                merged.push(format!("--{k}").into());
                merged.push(v.into());
            }
        }
    }
    merged.extend(args[2..].iter().cloned());
    Ok(merged)
}
