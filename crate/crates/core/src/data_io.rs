//! Dataset loading and result persistence.
//!
//! Triplets are line-delimited JSON objects with `id`, `query`, `context` and
//! `reference`. Complaint records come as a delimiter-separated table with a
//! header row. Results are written as JSON lines, atomically.

use std::collections::HashSet;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{AqsError, Result};
use crate::metrics::EvalRecord;
use crate::pipeline::PipelineTrace;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Triplet {
    pub id: String,
    pub query: String,
    pub context: String,
    pub reference: String,
}

pub fn load_triplets(path: impl AsRef<Path>) -> Result<Vec<Triplet>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_triplets(&text, path)
}

fn parse_triplets(text: &str, path: &Path) -> Result<Vec<Triplet>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let schema = |message: String| AqsError::SchemaError {
            path: path.to_owned(),
            line: line_no,
            message,
        };
        let value: Value = serde_json::from_str(line).map_err(|e| AqsError::ParseError {
            path: path.to_owned(),
            line: line_no,
            message: e.to_string(),
        })?;
        let get = |key: &str| -> Result<String> {
            match value.get(key) {
                Some(Value::String(s)) => Ok(s.clone()),
                Some(_) => Err(schema(format!("field {key:?} is not a string"))),
                None => Err(schema(format!("missing field {key:?}"))),
            }
        };
        let t = Triplet {
            id: get("id")?,
            query: get("query")?,
            context: get("context")?,
            reference: get("reference")?,
        };
        if t.query.trim().is_empty() || t.context.trim().is_empty() {
            return Err(schema("query and context must be non-empty".into()));
        }
        if !seen.insert(t.id.clone()) {
            return Err(schema(format!("duplicate id {:?}", t.id)));
        }
        out.push(t);
    }
    Ok(out)
}

/// One complaint/feedback record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EcfRecord {
    pub record_key: String,
    pub subject: Option<String>,
    pub category: String,
    pub sub_category: String,
    pub description: String,
}

/// Fixed topical queries asked of every complaint record.
pub const COMPLAINT_QUERY: &str = "What is complained?";
pub const EMOTION_QUERY: &str = "What is the emotion?";

const KEY_COLUMNS: &[&str] = &["unique case record key", "record key", "record_key"];
const SUBJECT_COLUMNS: &[&str] = &["subject"];
const CATEGORY_COLUMNS: &[&str] = &["reporting category", "category"];
const SUB_CATEGORY_COLUMNS: &[&str] = &["reporting sub category", "sub category", "sub_category"];
const DESCRIPTION_COLUMNS: &[&str] = &["description"];

/// Loads a comma-separated file, or tab-separated if the extension is `.tsv`.
pub fn load_ecf(path: impl AsRef<Path>) -> Result<Vec<EcfRecord>> {
    let path = path.as_ref();
    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("tsv") => b'\t',
        _ => b',',
    };
    load_ecf_with_delimiter(path, delimiter)
}

pub fn load_ecf_with_delimiter(path: impl AsRef<Path>, delimiter: u8) -> Result<Vec<EcfRecord>> {
    let path = path.as_ref();
    let parse_err = |line: usize, e: csv::Error| AqsError::ParseError {
        path: path.to_owned(),
        line,
        message: e.to_string(),
    };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(false)
        .from_path(path)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => AqsError::Io(io),
            other => AqsError::ParseError {
                path: path.to_owned(),
                line: 1,
                message: format!("{other:?}"),
            },
        })?;
    let headers = reader.headers().map_err(|e| parse_err(1, e))?.clone();
    let column = |names: &[&str], label: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| names.contains(&h.trim().to_lowercase().as_str()))
            .ok_or_else(|| AqsError::SchemaError {
                path: path.to_owned(),
                line: 1,
                message: format!("header lacks a {label} column"),
            })
    };
    let key = column(KEY_COLUMNS, "record key")?;
    let subject = column(SUBJECT_COLUMNS, "subject")?;
    let category = column(CATEGORY_COLUMNS, "category")?;
    let sub_category = column(SUB_CATEGORY_COLUMNS, "sub category")?;
    let description = column(DESCRIPTION_COLUMNS, "description")?;

    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        let row = row.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            parse_err(line, e)
        })?;
        let line = row.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize| row.get(i).unwrap_or("").to_owned();
        let schema = |message: String| AqsError::SchemaError {
            path: path.to_owned(),
            line,
            message,
        };
        let rec = EcfRecord {
            record_key: field(key),
            subject: Some(field(subject)).filter(|s| !s.trim().is_empty()),
            category: field(category),
            sub_category: field(sub_category),
            description: field(description),
        };
        if rec.description.trim().is_empty() {
            return Err(schema("empty description".into()));
        }
        if !seen.insert(rec.record_key.clone()) {
            return Err(schema(format!("duplicate record key {:?}", rec.record_key)));
        }
        out.push(rec);
    }
    Ok(out)
}

/// Two tasks per record, complaint query first; the reference is the
/// sub-category verbatim.
pub fn ecf_to_tasks(records: &[EcfRecord]) -> Vec<Triplet> {
    records
        .iter()
        .flat_map(|r| {
            [("complaint", COMPLAINT_QUERY), ("emotion", EMOTION_QUERY)].map(|(tag, q)| Triplet {
                id: format!("{}#{tag}", r.record_key),
                query: q.to_owned(),
                context: r.description.clone(),
                reference: r.sub_category.clone(),
            })
        })
        .collect()
}

/// One output line: the run trace and, if the run succeeded, its scores.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultLine {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub trace: PipelineTrace,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics: Option<EvalRecord>,
}

/// Writes `items` as JSON lines to a temporary file next to `path`, then
/// renames it over `path`.
pub fn write_jsonl_atomic<S: Serialize>(items: &[S], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file_mut());
        for item in items {
            serde_json::to_writer(&mut w, item)
                .map_err(|e| AqsError::Io(std::io::Error::other(e)))?;
            w.write_all(b"\n")?;
        }
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| AqsError::Io(e.error))?;
    Ok(())
}

/// Pairs traces with their scores line by line. Both slices must be the same
/// length; `None` marks an item without scores.
pub fn write_results(
    traces: &[PipelineTrace],
    records: &[Option<EvalRecord>],
    out_path: impl AsRef<Path>,
) -> Result<()> {
    if traces.len() != records.len() {
        return Err(AqsError::LengthMismatch {
            left: traces.len(),
            right: records.len(),
        });
    }
    let lines: Vec<ResultLine> = traces
        .iter()
        .zip(records)
        .map(|(t, r)| ResultLine {
            id: None,
            trace: t.clone(),
            metrics: r.clone(),
        })
        .collect();
    write_jsonl_atomic(&lines, out_path)
}

pub fn load_results(path: impl AsRef<Path>) -> Result<Vec<ResultLine>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| AqsError::ParseError {
                path: path.to_owned(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}
