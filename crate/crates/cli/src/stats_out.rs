//! `stats.json`: `{"format_version": 1, "entries": [...]}`, one entry per
//! test run, appended in order.

use std::path::Path;

use georep_core::hypotest::{LeveneResult, PearsonResult, TTestResult};
use georep_core::spatialstats::MoranResult;
use georep_core::FORMAT_VERSION;
use serde::Deserialize;
use serde_json::{json, Value};

use crate::canon::num;
use crate::error::{Error, Result};
use crate::formats::{load_typed, write_json};

pub const STATS_FILE: &str = "stats.json";

pub fn moran_entry(r: &MoranResult, kind: &str, seed: u64) -> Value {
    json!({
        "test": "morans_i",
        "kind": kind,
        "n_used": r.n_used,
        "i_obs": num(r.i_obs),
        "e_null": num(r.e_null),
        "pseudo_p": num(r.pseudo_p),
        "z_sim": num(r.z_sim),
        "n_perm": r.n_perm,
        "seed": seed,
    })
}

pub fn ttest_entry(r: &TTestResult) -> Value {
    json!({
        "test": "paired_t",
        "n": r.n,
        "t": num(r.t),
        "df": r.df,
        "p": num(r.p_two_sided),
        "mean_diff": num(r.mean_diff),
        "sd_diff": num(r.sd_diff),
    })
}

pub fn levene_entry(r: &LeveneResult) -> Value {
    json!({"test": "levene", "w": num(r.w), "df1": r.df1, "df2": r.df2, "p": num(r.p)})
}

pub fn pearson_entry(r: &PearsonResult) -> Value {
    json!({
        "test": "pearson",
        "n": r.n,
        "r": num(r.r),
        "p": num(r.p_two_sided),
        "t": num(r.t),
        "df": r.df,
    })
}

/// Entry for a test that could not be computed.
pub fn error_entry(test: &str, e: &georep_core::Error) -> Value {
    json!({"test": test, "error": e.name(), "message": e.to_string()})
}

/// Adds `extra`'s keys to an entry object.
pub fn with(mut entry: Value, extra: Value) -> Value {
    if let (Some(e), Value::Object(x)) = (entry.as_object_mut(), extra) {
        e.extend(x);
    }
    entry
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct StatsFile {
    format_version: u32,
    entries: Vec<Value>,
}

pub fn stats_json(entries: Vec<Value>) -> Value {
    json!({"format_version": FORMAT_VERSION, "entries": entries})
}

/// Appends to `dir/stats.json`, creating it if needed. Returns the digest of
/// the new file.
pub fn append(dir: &Path, entries: Vec<Value>) -> Result<String> {
    let path = dir.join(STATS_FILE);
    let mut all = if path.exists() {
        let file: StatsFile = load_typed(&path)?;
        if file.format_version != FORMAT_VERSION {
            return Err(Error::parse(&path, format!("unsupported format_version {}", file.format_version)));
        }
        file.entries
    } else {
        Vec::new()
    };
    all.extend(entries);
    write_json(&path, &stats_json(all))
}
