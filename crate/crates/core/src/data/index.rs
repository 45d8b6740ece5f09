//! The dataset index CSV.
//!
//! ```text
//! #classes:neutral,anger,contempt,...
//! images/s005_001.pgm,S005,neutral
//! images/s005_011.pgm,S005,anger
//! ```
//!
//! Rows are `path,subject_id,label_name`, UTF-8, unquoted. Blank lines are
//! skipped.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

const HEADER_PREFIX: &str = "#classes:";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleRecord {
    pub image_path: String,
    pub subject_id: String,
    pub label: usize,
    pub label_name: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub class_names: Vec<String>,
    pub records: Vec<SampleRecord>,
}

impl DatasetIndex {
    pub fn classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.classes()];
        for r in &self.records {
            counts[r.label] += 1;
        }
        counts
    }

    /// Record count per subject, keyed by subject id.
    pub fn subject_counts(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for r in &self.records {
            *counts.entry(r.subject_id.as_str()).or_default() += 1;
        }
        counts
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{HEADER_PREFIX}{}\n", self.class_names.join(","));
        for r in &self.records {
            writeln!(out, "{},{},{}", r.image_path, r.subject_id, r.label_name).unwrap();
        }
        out
    }
}

pub fn parse_index(text: &str) -> Result<DatasetIndex> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or(Error::Parse { line: 1, message: "empty index".into() })?;
    let names = header.strip_prefix(HEADER_PREFIX).ok_or_else(|| Error::Parse {
        line: 1,
        message: format!("first line must start with {HEADER_PREFIX:?}"),
    })?;
    let class_names: Vec<String> = names.split(',').map(|s| s.trim().to_string()).collect();
    let mut seen = HashSet::new();
    for name in &class_names {
        if name.is_empty() {
            return Err(Error::Parse { line: 1, message: "empty class name".into() });
        }
        if !seen.insert(name.as_str()) {
            return Err(Error::Parse { line: 1, message: format!("duplicate class name {name:?}") });
        }
    }
    let lookup: BTreeMap<&str, usize> = class_names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();

    let mut records = Vec::new();
    let mut paths = HashSet::new();
    for (line, row) in lines {
        if row.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = row.split(',').map(str::trim).collect();
        let [path, subject, label_name] = fields[..] else {
            return Err(Error::Parse { line, message: format!("expected 3 fields, found {}", fields.len()) });
        };
        if path.is_empty() || subject.is_empty() {
            return Err(Error::Parse { line, message: "empty path or subject id".into() });
        }
        let label = *lookup
            .get(label_name)
            .ok_or_else(|| Error::UnknownLabel { line, label: label_name.to_string() })?;
        if !paths.insert(path.to_string()) {
            return Err(Error::DuplicatePath { line, path: path.to_string() });
        }
        records.push(SampleRecord {
            image_path: path.to_string(),
            subject_id: subject.to_string(),
            label,
            label_name: label_name.to_string(),
        });
    }
    Ok(DatasetIndex { class_names, records })
}

pub fn load_index(path: impl AsRef<Path>) -> Result<DatasetIndex> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_index(&text)
}
