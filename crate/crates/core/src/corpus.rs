//! Response corpora: loading, validation and serialization.
//!
//! Two on-disk layouts are understood. JSONL carries one object per line with
//! a required `"response"` string and optional `"id"` / `"context"` strings.
//! TSV carries a fixed header `id<TAB>context<TAB>response`. Records keep file
//! order, and row `i` of any embedding matrix paired with a corpus describes
//! `records[i]`.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const TSV_HEADER: &str = "id\tcontext\tresponse";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    Jsonl,
    Tsv,
}

impl CorpusFormat {
    /// Guesses the format from the file extension, defaulting to JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => CorpusFormat::Tsv,
            _ => CorpusFormat::Jsonl,
        }
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(CorpusFormat::Jsonl),
            "tsv" => Ok(CorpusFormat::Tsv),
            other => Err(Error::arg(format!("unknown corpus format {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub context: Option<String>,
    pub response: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResponseCorpus {
    pub records: Vec<ResponseRecord>,
    pub source_path: PathBuf,
}

#[derive(Deserialize)]
struct JsonlLine {
    id: Option<String>,
    context: Option<String>,
    response: String,
}

impl ResponseCorpus {
    /// Builds a corpus from in-memory records, enforcing id uniqueness and
    /// non-empty responses.
    pub fn new(records: Vec<ResponseRecord>, source_path: impl Into<PathBuf>) -> Result<Self> {
        validate(&records)?;
        Ok(ResponseCorpus {
            records,
            source_path: source_path.into(),
        })
    }

    /// Corpus from bare response strings, numbered by position.
    pub fn from_responses<I, S>(responses: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let records = responses
            .into_iter()
            .enumerate()
            .map(|(i, r)| ResponseRecord {
                id: i.to_string(),
                context: None,
                response: r.into(),
            })
            .collect();
        Self::new(records, PathBuf::new())
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.id.as_str())
    }

    pub fn responses(&self) -> impl Iterator<Item = &str> {
        self.records.iter().map(|r| r.response.as_str())
    }
}

fn validate(records: &[ResponseRecord]) -> Result<()> {
    let mut seen = HashSet::with_capacity(records.len());
    for r in records {
        if !seen.insert(r.id.as_str()) {
            return Err(Error::DuplicateId(r.id.clone()));
        }
    }
    let empty: Vec<String> = records
        .iter()
        .filter(|r| r.response.trim().is_empty())
        .map(|r| r.id.clone())
        .collect();
    if !empty.is_empty() {
        return Err(Error::EmptyResponses(empty));
    }
    Ok(())
}

/// Reads a corpus file in the given format.
pub fn load_responses(path: &Path, format: CorpusFormat) -> Result<ResponseCorpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let records = match format {
        CorpusFormat::Jsonl => parse_jsonl(path, &text)?,
        CorpusFormat::Tsv => parse_tsv(path, &text)?,
    };
    ResponseCorpus::new(records, path)
}

fn parse_jsonl(path: &Path, text: &str) -> Result<Vec<ResponseRecord>> {
    let mut records = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: JsonlLine = serde_json::from_str(line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message: e.to_string(),
        })?;
        let id = parsed.id.unwrap_or_else(|| records.len().to_string());
        records.push(ResponseRecord {
            id,
            context: parsed.context,
            response: parsed.response,
        });
    }
    Ok(records)
}

fn parse_tsv(path: &Path, text: &str) -> Result<Vec<ResponseRecord>> {
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.trim_end_matches('\r') == TSV_HEADER => {}
        Some((_, header)) => {
            return Err(parse_err(
                1,
                format!("expected header {TSV_HEADER:?}, found {header:?}"),
            ))
        }
        None => return Err(parse_err(1, "missing header row".into())),
    }

    let mut records = Vec::new();
    for (lineno, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                lineno + 1,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let id = if fields[0].is_empty() {
            records.len().to_string()
        } else {
            fields[0].to_string()
        };
        let context = (!fields[1].is_empty()).then(|| fields[1].to_string());
        records.push(ResponseRecord {
            id,
            context,
            response: fields[2].to_string(),
        });
    }
    Ok(records)
}

/// Serializes a corpus; `load_responses` on the output reproduces it.
pub fn render_responses(corpus: &ResponseCorpus, format: CorpusFormat) -> Result<String> {
    let mut out = String::new();
    match format {
        CorpusFormat::Jsonl => {
            for r in &corpus.records {
                let line = serde_json::to_string(r).expect("record serialization is infallible");
                out.push_str(&line);
                out.push('\n');
            }
        }
        CorpusFormat::Tsv => {
            out.push_str(TSV_HEADER);
            out.push('\n');
            for r in &corpus.records {
                let ctx = r.context.as_deref().unwrap_or("");
                for field in [r.id.as_str(), ctx, r.response.as_str()] {
                    if field.contains(['\t', '\n', '\r']) {
                        return Err(Error::arg(format!(
                            "record {:?} contains a tab or newline and cannot be written as TSV",
                            r.id
                        )));
                    }
                }
                let _ = writeln!(out, "{}\t{}\t{}", r.id, ctx, r.response);
            }
        }
    }
    Ok(out)
}

pub fn save_responses(corpus: &ResponseCorpus, path: &Path, format: CorpusFormat) -> Result<()> {
    let text = render_responses(corpus, format)?;
    write_atomic(path, text.as_bytes())
}
