//! Flat `key=value` configuration files.
//!
//! Values from the file are spliced into the argument list right after the
//! subcommand name, so clap validates them like ordinary flags and any flag
//! given on the command line (which comes later) overrides them.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

pub const SUBCOMMANDS: [&str; 6] = ["factors", "wigner", "evolve", "coherent", "rotator", "entangle"];

/// Parsed `key=value` pairs in file order. Keys use `-` or `_` freely.
pub fn read(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    parse(&text).with_context(|| format!("in config {}", path.display()))
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got {line:?}", no + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("line {}: empty key", no + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(rest) = s.strip_prefix("--config=") {
            return Some(rest.into());
        }
    }
    None
}

/// Expand `--config FILE` into explicit flags.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let pairs = read(Path::new(&path))?;
    let Some(pos) = args
        .iter()
        .skip(1)
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        // Let clap report the missing subcommand.
        return Ok(args);
    };
    let pos = pos + 1;
    let mut injected: Vec<OsString> = Vec::new();
    for (k, v) in pairs {
        if k == "config" {
            continue;
        }
        match v.as_str() {
            "true" => injected.push(format!("--{k}").into()),
            "false" => {}
            _ => {
                injected.push(format!("--{k}").into());
                injected.push(v.into());
            }
        }
    }
    let mut out = args[..=pos].to_vec();
    out.extend(injected);
    out.extend_from_slice(&args[pos + 1..]);
    Ok(out)
}
