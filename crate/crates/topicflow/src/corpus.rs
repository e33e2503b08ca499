//! Loading, validating, dumping and time-bucketing document streams.

use std::collections::HashSet;
use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use topicflow_core::{normalize_token, Document, TimeSlice};

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";
const MAX_LABELS: usize = 3;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: io::Error },
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate document id {id:?}")]
    DuplicateId { line: usize, id: String },
    #[error("line {line}: unparseable timestamp {value:?}")]
    Timestamp { line: usize, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Jsonl,
    Tsv,
}

impl Format {
    /// `.tsv` files are TSV, everything else JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("tsv") => Format::Tsv,
            _ => Format::Jsonl,
        }
    }
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "jsonl" => Ok(Format::Jsonl),
            "tsv" => Ok(Format::Tsv),
            other => Err(format!("unknown corpus format {other:?} (expected jsonl or tsv)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Granularity {
    #[default]
    Day,
    Hour,
}

impl Granularity {
    fn seconds(self) -> i64 {
        match self {
            Granularity::Day => 86_400,
            Granularity::Hour => 3_600,
        }
    }

    fn label(self, start: i64) -> String {
        let at = DateTime::<Utc>::from_timestamp(start, 0).expect("bucket start within chrono range");
        match self {
            Granularity::Day => at.format("%Y-%m-%d").to_string(),
            Granularity::Hour => at.format("%Y-%m-%dT%H").to_string(),
        }
    }
}

impl FromStr for Granularity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "day" => Ok(Granularity::Day),
            "hour" => Ok(Granularity::Hour),
            other => Err(format!("unknown granularity {other:?} (expected day or hour)")),
        }
    }
}

impl fmt::Display for Granularity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Granularity::Day => "day",
            Granularity::Hour => "hour",
        })
    }
}

/// A validated document stream in input order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Corpus {
    pub documents: Vec<Document>,
}

impl Corpus {
    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    /// Documents left without tokens after normalization.
    pub fn flagged(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| !d.has_tokens())
    }

    pub fn has_labels(&self) -> bool {
        self.documents.iter().any(|d| d.labels.is_some())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct JsonRecord {
    id: String,
    timestamp: String,
    tokens: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

pub fn load_corpus(path: &Path, format: Format) -> Result<Corpus, CorpusError> {
    let file = File::open(path).map_err(|source| CorpusError::Io { path: path.display().to_string(), source })?;
    read_corpus(BufReader::new(file), format).map_err(|e| match e {
        CorpusError::Io { source, .. } => CorpusError::Io { path: path.display().to_string(), source },
        other => other,
    })
}

pub fn read_corpus(reader: impl BufRead, format: Format) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    let mut ids = HashSet::new();
    for (n, line) in reader.lines().enumerate() {
        let line_no = n + 1;
        let line = line.map_err(|source| CorpusError::Io { path: String::new(), source })?;
        if line.trim().is_empty() {
            continue;
        }
        let record = match format {
            Format::Jsonl => serde_json::from_str::<JsonRecord>(&line)
                .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?,
            Format::Tsv => parse_tsv_line(&line, line_no)?,
        };
        let doc = validate(record, line_no)?;
        if !ids.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId { line: line_no, id: doc.id });
        }
        documents.push(doc);
    }
    Ok(Corpus { documents })
}

fn parse_tsv_line(line: &str, line_no: usize) -> Result<JsonRecord, CorpusError> {
    let cols: Vec<&str> = line.split('\t').collect();
    if !(3..=4).contains(&cols.len()) {
        return Err(CorpusError::Malformed {
            line: line_no,
            message: format!("expected 3 or 4 tab-separated columns, found {}", cols.len()),
        });
    }
    let list = |s: &str| -> Vec<String> { s.split('|').filter(|t| !t.is_empty()).map(str::to_owned).collect() };
    Ok(JsonRecord {
        id: cols[0].to_owned(),
        timestamp: cols[1].to_owned(),
        tokens: list(cols[2]),
        labels: cols.get(3).map(|s| list(s)).filter(|l| !l.is_empty()),
    })
}

fn validate(record: JsonRecord, line: usize) -> Result<Document, CorpusError> {
    if record.id.trim().is_empty() {
        return Err(CorpusError::Malformed { line, message: "empty document id".into() });
    }
    let timestamp = NaiveDateTime::parse_from_str(&record.timestamp, TIMESTAMP_FORMAT)
        .map_err(|_| CorpusError::Timestamp { line, value: record.timestamp.clone() })?
        .and_utc()
        .timestamp();
    let tokens = record.tokens.iter().map(|t| normalize_token(t)).filter(|t| !t.is_empty()).collect();
    let labels = match record.labels {
        Some(raw) if raw.len() > MAX_LABELS => {
            return Err(CorpusError::Malformed {
                line,
                message: format!("{} labels given, at most {MAX_LABELS} allowed", raw.len()),
            })
        }
        Some(raw) => {
            let mut labels: Vec<String> = raw.iter().map(|l| normalize_token(l)).filter(|l| !l.is_empty()).collect();
            labels.dedup();
            (!labels.is_empty()).then_some(labels)
        }
        None => None,
    };
    Ok(Document { id: record.id, timestamp, tokens, labels })
}

pub fn format_timestamp(secs: i64) -> String {
    DateTime::<Utc>::from_timestamp(secs, 0)
        .map(|t| t.format(TIMESTAMP_FORMAT).to_string())
        .unwrap_or_default()
}

/// Writes the corpus back in either input format.
pub fn write_corpus(corpus: &Corpus, mut out: impl Write, format: Format) -> io::Result<()> {
    for doc in &corpus.documents {
        let record = JsonRecord {
            id: doc.id.clone(),
            timestamp: format_timestamp(doc.timestamp),
            tokens: doc.tokens.clone(),
            labels: doc.labels.clone(),
        };
        match format {
            Format::Jsonl => {
                serde_json::to_writer(&mut out, &record)?;
                writeln!(out)?;
            }
            Format::Tsv => {
                write!(out, "{}\t{}\t{}", record.id, record.timestamp, record.tokens.join("|"))?;
                if let Some(labels) = &record.labels {
                    write!(out, "\t{}", labels.join("|"))?;
                }
                writeln!(out)?;
            }
        }
    }
    Ok(())
}

/// Splits the corpus into consecutive buckets from the first to the last
/// occupied one. Buckets without documents are kept as empty slices.
pub fn partition_by_timepoint(corpus: &Corpus, granularity: Granularity) -> Vec<TimeSlice> {
    let width = granularity.seconds();
    let bucket = |d: &Document| d.timestamp.div_euclid(width);
    let (Some(first), Some(last)) =
        (corpus.documents.iter().map(bucket).min(), corpus.documents.iter().map(bucket).max())
    else {
        return Vec::new();
    };
    let mut slices: Vec<TimeSlice> = (first..=last)
        .map(|b| TimeSlice::new(granularity.label(b * width), b * width, Vec::new()))
        .collect();
    for doc in &corpus.documents {
        slices[(bucket(doc) - first) as usize].documents.push(doc.clone());
    }
    slices
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, format: Format) -> Result<Corpus, CorpusError> {
        read_corpus(text.as_bytes(), format)
    }

    const THREE: &str = r##"{"id":"d1","timestamp":"2020-08-19T10:00:00Z","tokens":["Mask","#MaskUp"]}
{"id":"d2","timestamp":"2020-08-19T11:00:00Z","tokens":["school"],"labels":["Schools"]}

{"id":"d3","timestamp":"2020-08-21T09:30:00Z","tokens":["  "]}
"##;

    #[test]
    fn loads_jsonl() {
        let c = parse(THREE, Format::Jsonl).unwrap();
        assert_eq!(c.len(), 3);
        assert_eq!(c.documents[0].tokens, ["mask", "#maskup"]);
        assert_eq!(c.documents[1].labels.as_deref(), Some(&["schools".to_string()][..]));
        assert_eq!(c.flagged().count(), 1);
    }

    #[test]
    fn reports_bad_records() {
        let missing = r#"{"id":"d1","timestamp":"2020-08-19T10:00:00Z"}"#;
        let err = parse(missing, Format::Jsonl).unwrap_err();
        assert!(matches!(err, CorpusError::Malformed { line: 1, .. }), "{err}");
        assert!(err.to_string().contains("tokens"));

        let dup = "{\"id\":\"d1\",\"timestamp\":\"2020-08-19T10:00:00Z\",\"tokens\":[\"a\"]}\n".repeat(2);
        assert!(matches!(parse(&dup, Format::Jsonl), Err(CorpusError::DuplicateId { line: 2, .. })));

        let ts = r#"{"id":"d1","timestamp":"19/08/2020","tokens":["a"]}"#;
        assert!(matches!(parse(ts, Format::Jsonl), Err(CorpusError::Timestamp { line: 1, .. })));

        let many = r#"{"id":"d1","timestamp":"2020-08-19T10:00:00Z","tokens":["a"],"labels":["a","b","c","d"]}"#;
        assert!(matches!(parse(many, Format::Jsonl), Err(CorpusError::Malformed { .. })));
    }

    #[test]
    fn loads_tsv() {
        let text = "d1\t2020-08-19T10:00:00Z\tA|b\tx|y\nd2\t2020-08-20T10:00:00Z\tc\n";
        let c = parse(text, Format::Tsv).unwrap();
        assert_eq!(c.documents[0].tokens, ["a", "b"]);
        assert_eq!(c.documents[0].labels.as_ref().unwrap().len(), 2);
        assert_eq!(c.documents[1].labels, None);
        assert!(matches!(parse("d1\tonly-two", Format::Tsv), Err(CorpusError::Malformed { line: 1, .. })));
    }

    #[test]
    fn partitions_with_gaps() {
        let c = parse(THREE, Format::Jsonl).unwrap();
        let slices = partition_by_timepoint(&c, Granularity::Day);
        let shape: Vec<(&str, usize)> = slices.iter().map(|s| (s.timepoint.as_str(), s.len())).collect();
        assert_eq!(shape, [("2020-08-19", 2), ("2020-08-20", 0), ("2020-08-21", 1)]);

        let hourly = partition_by_timepoint(&c, Granularity::Hour);
        assert_eq!(hourly[0].timepoint, "2020-08-19T10");
        assert_eq!(hourly.iter().map(TimeSlice::len).sum::<usize>(), 3);
        assert!(partition_by_timepoint(&Corpus::default(), Granularity::Day).is_empty());
    }

    #[test]
    fn same_day_is_one_slice() {
        let text = "a\t2020-08-19T00:00:00Z\tx\nb\t2020-08-19T23:59:59Z\ty\n";
        let slices = partition_by_timepoint(&parse(text, Format::Tsv).unwrap(), Granularity::Day);
        assert_eq!(slices.len(), 1);
        assert_eq!(slices[0].len(), 2);
    }

    #[test]
    fn dump_and_reload_is_stable() {
        let c = parse(THREE, Format::Jsonl).unwrap();
        for format in [Format::Jsonl, Format::Tsv] {
            let mut buf = Vec::new();
            write_corpus(&c, &mut buf, format).unwrap();
            let again = read_corpus(&buf[..], format).unwrap();
            assert_eq!(
                partition_by_timepoint(&again, Granularity::Day),
                partition_by_timepoint(&c, Granularity::Day)
            );
        }
    }
}
