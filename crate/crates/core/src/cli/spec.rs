//! Channel specifications: named channels or JSON files.

use std::path::Path;

use serde::Deserialize;

use crate::info::{BroadcastChannel, TransitionMatrix, INGEST_TOL};
use crate::sampling::{blackwell, bssc};

/// A probability written either as a JSON number or as a decimal string.
#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Prob {
    Number(f64),
    Text(String),
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum SpecFile {
    Named {
        named: String,
    },
    Explicit {
        input_size: usize,
        to_y: Vec<Vec<Prob>>,
        to_z: Vec<Vec<Prob>>,
    },
}

/// Resolves `bssc:<skew>` and `blackwell`.
pub fn named_channel(name: &str) -> Result<BroadcastChannel, String> {
    let name = name.trim();
    if name == "blackwell" {
        return Ok(blackwell());
    }
    if let Some(skew) = name.strip_prefix("bssc:") {
        let skew: f64 = skew
            .parse()
            .map_err(|_| format!("bssc skew `{skew}` is not a number"))?;
        return bssc(skew).map_err(|e| e.to_string());
    }
    Err(format!("unknown channel name `{name}` (expected `bssc:<skew>` or `blackwell`)"))
}

fn matrix(field: &str, rows: &[Vec<Prob>], input_size: usize) -> Result<TransitionMatrix, String> {
    if rows.len() != input_size {
        return Err(format!(
            "field `{field}`: expected {input_size} rows (input_size), found {}",
            rows.len()
        ));
    }
    let mut parsed = Vec::with_capacity(rows.len());
    for (r, row) in rows.iter().enumerate() {
        let mut out = Vec::with_capacity(row.len());
        for (c, p) in row.iter().enumerate() {
            let v = match p {
                Prob::Number(v) => *v,
                Prob::Text(s) => s
                    .trim()
                    .parse()
                    .map_err(|_| format!("field `{field}` row {r} column {c}: `{s}` is not a number"))?,
            };
            out.push(v);
        }
        parsed.push(out);
    }
    for (r, row) in parsed.iter().enumerate() {
        TransitionMatrix::from_rows(std::slice::from_ref(row), INGEST_TOL)
            .map_err(|e| format!("field `{field}` row {r}: {e}"))?;
    }
    TransitionMatrix::from_rows(&parsed, INGEST_TOL).map_err(|e| format!("field `{field}`: {e}"))
}

/// Parses the JSON text of a channel specification.
pub fn parse_channel_json(text: &str) -> Result<BroadcastChannel, String> {
    let spec: SpecFile = serde_json::from_str(text).map_err(|e| {
        format!(
            "line {} column {}: {e}; expected {{\"named\": ...}} or {{\"input_size\", \"to_y\", \"to_z\"}}",
            e.line(),
            e.column()
        )
    })?;
    match spec {
        SpecFile::Named { named } => named_channel(&named),
        SpecFile::Explicit { input_size, to_y, to_z } => {
            if input_size == 0 {
                return Err("field `input_size`: must be positive".into());
            }
            let y = matrix("to_y", &to_y, input_size)?;
            let z = matrix("to_z", &to_z, input_size)?;
            BroadcastChannel::new(y, z).map_err(|e| e.to_string())
        }
    }
}

/// A channel name, or the path of a JSON specification file.
pub fn load_channel(arg: &str) -> Result<BroadcastChannel, String> {
    if arg == "blackwell" || arg.starts_with("bssc:") {
        return named_channel(arg);
    }
    let path = Path::new(arg);
    let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    parse_channel_json(&text).map_err(|e| format!("{}: {e}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn explicit_and_named_specs() {
        let bc = parse_channel_json(
            r#"{"input_size": 2, "to_y": [["0.5", "0.5"], [1, 0]], "to_z": [[0.25, 0.75], [0.5, 0.5]]}"#,
        )
        .unwrap();
        assert_eq!(bc.to_y().row(1), &[1.0, 0.0]);
        assert_eq!(parse_channel_json(r#"{"named": "blackwell"}"#).unwrap(), blackwell());
        assert_eq!(named_channel("bssc:0.5").unwrap(), bssc(0.5).unwrap());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let e = parse_channel_json(r#"{"input_size": 2, "to_y": [[0.5, 0.6], [1, 0]], "to_z": [[1, 0], [0, 1]]}"#)
            .unwrap_err();
        assert!(e.contains("to_y") && e.contains("row 0"), "{e}");
        let e = parse_channel_json(r#"{"input_size": 3, "to_y": [[1, 0], [1, 0]], "to_z": [[1, 0], [0, 1]]}"#)
            .unwrap_err();
        assert!(e.contains("expected 3 rows"), "{e}");
        let e = parse_channel_json("{\n  \"input_size\": 2,\n  oops }").unwrap_err();
        assert!(e.starts_with("line 3"), "{e}");
        assert!(named_channel("bssc:x").is_err());
        assert!(named_channel("bssc:1.5").is_err());
    }

    #[test]
    fn ingestion_tolerance() {
        let ok = r#"{"input_size": 2, "to_y": [[0.5, 0.5000000001], [1, 0]], "to_z": [[1, 0], [0, 1]]}"#;
        assert!(parse_channel_json(ok).is_ok());
        let bad = r#"{"input_size": 2, "to_y": [[0.5, 0.500001], [1, 0]], "to_z": [[1, 0], [0, 1]]}"#;
        assert!(parse_channel_json(bad).is_err());
    }
}
