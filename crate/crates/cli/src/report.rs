//! Report assembly: provenance-stamped JSON, plot-ready CSV, and merging.
//!
//! Reports serialize through `serde_json`, whose maps are ordered, so a
//! report is a deterministic function of configuration and seed. The
//! provenance block records the tool version, the root seed, the
//! configuration that produced the run, and FNV-1a fingerprints of any
//! files read, which is enough to reproduce or to refuse to merge.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{CliError, CliResult, ExperimentConfig};

/// Schema tag written into every report.
pub const REPORT_SCHEMA: &str = "nbwalk-report/1";

/// Starts a report for one subcommand: schema, tool identity, seed, and the
/// configuration echo. Results are attached by the caller under `results`.
pub fn report_skeleton(subcommand: &str, cfg: &ExperimentConfig) -> Map<String, Value> {
    let mut m = Map::new();
    m.insert("schema".into(), json!(REPORT_SCHEMA));
    m.insert(
        "tool".into(),
        json!({
            "name": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        }),
    );
    m.insert("subcommand".into(), json!(subcommand));
    m.insert("seed".into(), json!(cfg.seed));
    m.insert(
        "config".into(),
        serde_json::to_value(cfg).expect("config serializes"),
    );
    m
}

/// Attaches the fingerprint of a file the run consumed.
pub fn stamp_input(report: &mut Map<String, Value>, path: &str, hash: u64) {
    let inputs = report
        .entry("inputs")
        .or_insert_with(|| Value::Object(Map::new()));
    if let Value::Object(map) = inputs {
        map.insert(path.into(), json!(format!("fnv1a:{hash:016x}")));
    }
}

/// Renders one CSV line. Fields containing separators or quotes are quoted
/// with doubled inner quotes; everything the tool emits is plain, so the
/// quoting path is dormant but present for file-derived labels.
pub fn csv_line(fields: &[String]) -> String {
    let mut out = String::new();
    for (i, f) in fields.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        if f.contains([',', '"', '\n']) {
            out.push('"');
            out.push_str(&f.replace('"', "\"\""));
            out.push('"');
        } else {
            out.push_str(f);
        }
    }
    out.push('\n');
    out
}

/// Fixed-precision float for CSV cells: enough digits to plot, stable
/// across runs.
pub fn csv_float(x: f64) -> String {
    format!("{x:.12e}")
}

/// Merges finished reports into one document.
///
/// Each input lands under `runs` keyed by its file stem; two inputs with the
/// same stem would silently shadow each other, so that is an error, as is an
/// empty input list or an input missing the schema tag. Numeric leaves are
/// also flattened into `plot` rows (`source,path,value`) for the CSV writer.
pub fn merge_reports(paths: &[&Path]) -> CliResult<(Map<String, Value>, String)> {
    if paths.is_empty() {
        return Err(CliError::Config("nothing to merge: no input reports".into()));
    }
    let mut runs = Map::new();
    let mut plot = String::from("source,path,value\n");
    for path in paths {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let value: Value = serde_json::from_str(&text)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let schema = value.get("schema").and_then(Value::as_str);
        if schema != Some(REPORT_SCHEMA) {
            return Err(CliError::Config(format!(
                "{}: expected schema `{REPORT_SCHEMA}`, found {:?}",
                path.display(),
                schema
            )));
        }
        let stem = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        if runs.contains_key(&stem) {
            return Err(CliError::Config(format!(
                "duplicate report key `{stem}`: refusing to merge colliding inputs"
            )));
        }
        let mut rows = BTreeMap::new();
        flatten_numeric(&value, String::new(), &mut rows);
        for (key, num) in rows {
            plot.push_str(&csv_line(&[stem.clone(), key, num]));
        }
        runs.insert(stem, value);
    }
    let mut merged = Map::new();
    merged.insert("schema".into(), json!(REPORT_SCHEMA));
    merged.insert(
        "tool".into(),
        json!({
            "name": env!("CARGO_PKG_NAME"),
            "version": env!("CARGO_PKG_VERSION"),
        }),
    );
    merged.insert("merged".into(), json!(paths.len()));
    merged.insert("runs".into(), Value::Object(runs));
    Ok((merged, plot))
}

/// Collects every numeric leaf of a JSON tree under its dotted path.
fn flatten_numeric(value: &Value, prefix: String, out: &mut BTreeMap<String, String>) {
    match value {
        Value::Number(n) => {
            out.insert(prefix, n.to_string());
        }
        Value::Bool(b) => {
            out.insert(prefix, (*b as u8).to_string());
        }
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_numeric(v, key, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten_numeric(v, format!("{prefix}[{i}]"), out);
            }
        }
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_lines_quote_only_when_needed() {
        assert_eq!(csv_line(&["a".into(), "1".into()]), "a,1\n");
        assert_eq!(
            csv_line(&["a,b".into(), "say \"hi\"".into()]),
            "\"a,b\",\"say \"\"hi\"\"\"\n"
        );
    }

    #[test]
    fn merging_unions_reports_and_flattens_numbers() {
        let dir = std::env::temp_dir().join("nbwalk-report-tests");
        fs::create_dir_all(&dir).unwrap();
        let a = dir.join("alpha.json");
        let b = dir.join("beta.json");
        fs::write(
            &a,
            format!("{{\"schema\": \"{REPORT_SCHEMA}\", \"results\": {{\"x\": 1}}}}"),
        )
        .unwrap();
        fs::write(
            &b,
            format!("{{\"schema\": \"{REPORT_SCHEMA}\", \"results\": {{\"y\": [2.5, 3]}}}}"),
        )
        .unwrap();

        let (merged, plot) = merge_reports(&[&a, &b]).unwrap();
        let runs = merged["runs"].as_object().unwrap();
        assert_eq!(runs.len(), 2);
        assert!(runs.contains_key("alpha") && runs.contains_key("beta"));
        assert!(plot.contains("alpha,results.x,1"));
        assert!(plot.contains("beta,results.y[0],2.5"));

        assert!(merge_reports(&[]).is_err());
        assert!(merge_reports(&[&a, &a]).is_err());

        let c = dir.join("gamma.json");
        fs::write(&c, "{\"schema\": \"elsewhere/9\"}").unwrap();
        let err = merge_reports(&[&c]).unwrap_err().to_string();
        assert!(err.contains("schema"), "{err}");
    }
}
