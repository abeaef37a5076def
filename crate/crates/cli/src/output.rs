use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

use crate::UnitArgs;

/// JSON report: resolved configuration, tool version, tolerances, results.
///
/// No timestamps or host data, so identical inputs give identical bytes.
pub fn provenance(command: &str, config: &impl Serialize, units: &UnitArgs, tolerances: Value, results: Value) -> Value {
    json!({
        "tool": "fvps",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "units": units,
        "config": config,
        "tolerances": tolerances,
        "results": results,
    })
}

pub fn sidecar_path(data: &Path) -> PathBuf {
    data.with_extension("json")
}

/// Write the data file (if any) and its JSON sidecar; without a data path
/// the report goes to stdout.
pub fn emit(out: Option<&Path>, report: &Value, data: impl FnOnce(&mut dyn Write) -> Result<()>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)?;
    match out {
        Some(path) => {
            let f = File::create(path).with_context(|| format!("creating {}", path.display()))?;
            let mut w = BufWriter::new(f);
            data(&mut w)?;
            w.flush()?;
            let side = sidecar_path(path);
            std::fs::write(&side, text + "\n").with_context(|| format!("writing {}", side.display()))?;
            eprintln!("wrote {} and {}", path.display(), side.display());
        }
        None => {
            let mut so = std::io::stdout().lock();
            if let Err(e) = writeln!(so, "{text}").and_then(|_| so.flush()) {
                // A closed pipe (`| head`) is not a failure of the run.
                if e.kind() != std::io::ErrorKind::BrokenPipe {
                    return Err(e.into());
                }
            }
        }
    }
    Ok(())
}

/// `key=value` pairs for the `#` header of CSV outputs.
pub fn meta(pairs: &[(&'static str, String)]) -> Vec<(&'static str, String)> {
    let mut v = vec![("fvps_version", env!("CARGO_PKG_VERSION").to_string())];
    v.extend_from_slice(pairs);
    v
}
