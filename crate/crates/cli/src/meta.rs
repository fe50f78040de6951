//! `run_meta.json`: the provenance record written by every command.
//!
//! It echoes the resolved configuration, the tool version and digests of every
//! input and output file. Thread count and output location are deliberately
//! left out so that reruns anywhere produce identical directories.

use std::path::Path;

use georep_core::FORMAT_VERSION;
use serde_json::{json, Value};

use crate::error::Result;
use crate::formats::{read_file, sha256_hex, write_json};

pub const META_FILE: &str = "run_meta.json";

/// Writes `dir/run_meta.json`. `outputs` are `(file name, sha256)` pairs of
/// files written to `dir`; they are listed sorted by name.
pub fn write_run_meta(
    dir: &Path,
    command: &str,
    config: Value,
    inputs: &[&Path],
    outputs: &[(String, String)],
) -> Result<()> {
    let mut input_rows = Vec::new();
    for p in inputs {
        let bytes = read_file(p)?;
        input_rows.push(json!({
            "path": p.display().to_string(),
            "bytes": bytes.len(),
            "sha256": sha256_hex(&bytes),
        }));
    }
    let mut outs: Vec<&(String, String)> = outputs.iter().collect();
    outs.sort();
    let output_rows: Vec<Value> = outs
        .iter()
        .map(|(f, d)| json!({"file": f, "sha256": d}))
        .collect();
    let meta = json!({
        "format_version": FORMAT_VERSION,
        "tool": env!("CARGO_PKG_NAME"),
        "tool_version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "config": config,
        "inputs": input_rows,
        "outputs": output_rows,
    });
    write_json(&dir.join(META_FILE), &meta)?;
    Ok(())
}
