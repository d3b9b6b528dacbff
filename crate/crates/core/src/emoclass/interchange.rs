//! Prediction exchange format: one JSON object per line,
//! `{"message_id": str, "probs": [7 floats], "source": str}`.
//! Lines starting with `#` are metadata and skipped on load.

use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{EmotionDistribution, N_EMOTIONS};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub message_id: String,
    pub probs: EmotionDistribution,
    pub source: String,
}

#[derive(Deserialize)]
struct RawRecord {
    message_id: String,
    probs: Vec<f64>,
    source: String,
}

/// Writes `header` lines (each prefixed with `# `) followed by the records.
pub fn write_predictions<W: Write>(mut w: W, header: &[String], records: &[PredictionRecord]) -> std::io::Result<()> {
    for h in header {
        writeln!(w, "# {h}")?;
    }
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

pub fn write_predictions_file(path: &Path, header: &[String], records: &[PredictionRecord]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_predictions(std::io::BufWriter::new(file), header, records).map_err(|e| Error::io(path, e))
}

pub fn load_predictions(path: &Path) -> Result<Vec<PredictionRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_predictions(file, path)
}

/// Parses and validates every row; the first bad row fails the whole file.
pub fn read_predictions<R: Read>(reader: R, origin: &Path) -> Result<Vec<PredictionRecord>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line.map_err(|e| Error::io(origin, e))?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let bad = |msg: String| Error::parse(origin, i + 1, msg);
        let raw: RawRecord = serde_json::from_str(t).map_err(|e| bad(e.to_string()))?;
        let probs: [f64; N_EMOTIONS] = raw
            .probs
            .as_slice()
            .try_into()
            .map_err(|_| bad(format!("expected {N_EMOTIONS} probabilities, got {}", raw.probs.len())))?;
        let probs = EmotionDistribution::new(probs).map_err(|e| bad(e.to_string()))?;
        out.push(PredictionRecord {
            message_id: raw.message_id,
            probs,
            source: raw.source,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Vec<PredictionRecord>> {
        read_predictions(text.as_bytes(), Path::new("p.jsonl"))
    }

    fn line_of(err: Error) -> usize {
        match err {
            Error::Parse { line, .. } => line,
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn round_trip_hundred_records() {
        let records: Vec<PredictionRecord> = (0..100)
            .map(|i| {
                let mut w = [1.0; N_EMOTIONS];
                w[i % N_EMOTIONS] += i as f64 / 7.0;
                PredictionRecord {
                    message_id: format!("m{i}"),
                    probs: EmotionDistribution::from_weights(w).unwrap(),
                    source: "softmax".into(),
                }
            })
            .collect();
        let mut buf = Vec::new();
        write_predictions(&mut buf, &["seed: 42".to_string()], &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("# seed: 42\n{\"message_id\":\"m0\",\"probs\":["));
        assert_eq!(parse(&text).unwrap(), records);
    }

    #[test]
    fn rejects_bad_rows_with_line_numbers() {
        let ok = r#"{"message_id":"a","probs":[1,0,0,0,0,0,0],"source":"neural"}"#;
        let short_sum = r#"{"message_id":"b","probs":[0.8,0,0,0,0,0,0],"source":"neural"}"#;
        let negative = r#"{"message_id":"c","probs":[1.1,-0.1,0,0,0,0,0],"source":"neural"}"#;
        let six = r#"{"message_id":"d","probs":[1,0,0,0,0,0],"source":"neural"}"#;
        assert_eq!(line_of(parse(&format!("# h\n{ok}\n{short_sum}\n")).unwrap_err()), 3);
        assert_eq!(line_of(parse(&format!("{ok}\n\n{negative}\n")).unwrap_err()), 3);
        assert_eq!(line_of(parse(&format!("{six}\n")).unwrap_err()), 1);
        assert_eq!(line_of(parse("not json\n").unwrap_err()), 1);
        assert_eq!(parse(&format!("{ok}\n")).unwrap().len(), 1);
    }

    #[test]
    fn tolerates_small_rounding() {
        let row = r#"{"message_id":"a","probs":[0.3333333,0.3333333,0.3333333,0,0,0,0],"source":"neural"}"#;
        assert!(parse(row).is_ok());
    }
}
