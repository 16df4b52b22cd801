use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::CliError;

/// Provenance attached to every output.
#[derive(Debug, Clone, Serialize)]
pub struct RunMetadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub params: Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rng: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
}

impl RunMetadata {
    pub fn new(command: &str, params: Value, with_timestamp: bool) -> Self {
        Self {
            tool: "gee",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            params,
            seed: None,
            rng: None,
            timestamp: with_timestamp.then(|| {
                chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
            }),
        }
    }

    pub fn with_rng(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self.rng = Some(gee_core::montecarlo::RNG_ALGORITHM);
        self
    }
}

pub enum Output {
    Csv {
        header: Vec<&'static str>,
        rows: Vec<Vec<String>>,
    },
    Json(Map<String, Value>),
}

/// Rounds to 12 significant digits and prints the shortest representation
/// that reads back to the rounded value.
pub fn fmt_float(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    if x == 0.0 {
        return "0".into();
    }
    let rounded: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    let a = rounded.abs();
    if (1e-5..1e15).contains(&a) {
        format!("{rounded}")
    } else {
        format!("{rounded:e}")
    }
}

fn render(meta: &RunMetadata, output: &Output) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    match output {
        Output::Csv { header, rows } => {
            let meta = serde_json::to_value(meta).map_err(CliError::compute)?;
            if let Value::Object(fields) = meta {
                for (k, v) in fields {
                    let v = match v {
                        Value::String(s) => s,
                        other => other.to_string(),
                    };
                    writeln!(buf, "# {k}: {v}").map_err(CliError::io)?;
                }
            }
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(header).map_err(CliError::io)?;
            for row in rows {
                w.write_record(row).map_err(CliError::io)?;
            }
            w.flush().map_err(CliError::io)?;
        }
        Output::Json(fields) => {
            let mut doc = Map::new();
            doc.insert(
                "metadata".into(),
                serde_json::to_value(meta).map_err(CliError::compute)?,
            );
            doc.extend(fields.clone());
            serde_json::to_writer_pretty(&mut buf, &doc).map_err(CliError::compute)?;
            buf.push(b'\n');
        }
    }
    Ok(buf)
}

/// Writes the rendered output to `path`, or to stdout.
pub fn emit(meta: &RunMetadata, output: &Output, path: Option<&Path>) -> Result<(), CliError> {
    let bytes = render(meta, output)?;
    match path {
        Some(p) => std::fs::write(p, bytes)
            .map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(&bytes).map_err(CliError::io),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(-0.0), "0");
        assert_eq!(fmt_float(0.49), "0.49");
        assert_eq!(fmt_float(1.0 / 3.0), "0.333333333333");
        assert_eq!(fmt_float(2.0), "2");
        assert_eq!(fmt_float(1234567.891011121), "1234567.89101");
        assert_eq!(fmt_float(1.5e-7), "1.5e-7");
        assert_eq!(fmt_float(0.045611940021316), "0.0456119400213");
    }

    #[test]
    fn csv_has_comment_header() {
        let meta = RunMetadata::new("region", Value::Null, false);
        let out = Output::Csv {
            header: vec!["a", "b"],
            rows: vec![vec!["1".into(), "2".into()]],
        };
        let text = String::from_utf8(render(&meta, &out).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# command: region");
        assert!(lines.contains(&"# tool: gee"));
        assert!(!text.contains("timestamp"));
        assert_eq!(&lines[lines.len() - 2..], &["a,b", "1,2"]);
    }
}
