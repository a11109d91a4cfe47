//! Dataset, knowledge-base and query files.
//!
//! CSV: a header line of attribute names, then one line per row with cells in
//! `0`, `1`, `*` (`?` is read as `*`). JSONL: a first line
//! `{"attributes":[...]}`, then `{"values":"1*0"}` per row.

use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};

use abduction_core::{parse_formula, Dataset, DatasetError, Formula, FormulaError, KbError, KnowledgeBase, PartialExample, TriValue};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    InFile { path: PathBuf, source: Box<IoError> },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
    #[error("missing header line")]
    MissingHeader,
    #[error("row {row}, column {column}: illegal cell `{value}` (expected 0, 1 or *)")]
    IllegalCell { row: usize, column: usize, value: String },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Kb(#[from] KbError),
    #[error("query: {0}")]
    Query(#[from] FormulaError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum DatasetFormat {
    Csv,
    Jsonl,
}

impl DatasetFormat {
    /// `.jsonl` and `.ndjson` are JSONL, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "ndjson") => DatasetFormat::Jsonl,
            _ => DatasetFormat::Csv,
        }
    }
}

fn parse_cell(text: &str, row: usize, column: usize) -> Result<TriValue, IoError> {
    let mut chars = text.chars();
    match (chars.next().and_then(TriValue::from_char), chars.next()) {
        (Some(v), None) => Ok(v),
        _ => Err(IoError::IllegalCell { row, column, value: text.to_string() }),
    }
}

pub fn read_dataset<R: Read>(source: R, format: DatasetFormat) -> Result<Dataset, IoError> {
    match format {
        DatasetFormat::Csv => read_csv(source),
        DatasetFormat::Jsonl => read_jsonl(source),
    }
}

fn read_csv<R: Read>(source: R) -> Result<Dataset, IoError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(true).from_reader(source);
    let names: Vec<String> = reader.headers()?.iter().map(str::to_string).collect();
    if names.is_empty() {
        return Err(IoError::MissingHeader);
    }
    let n = names.len();
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != n {
            return Err(DatasetError::Ragged { row: i + 1, found: record.len(), expected: n }.into());
        }
        let values = record.iter().enumerate().map(|(j, cell)| parse_cell(cell.trim(), i + 1, j + 1)).collect::<Result<_, _>>()?;
        rows.push(PartialExample(values));
    }
    Ok(Dataset::new(n, Some(names), rows)?)
}

#[derive(Serialize, Deserialize)]
struct JsonHeader {
    attributes: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    values: String,
}

fn read_jsonl<R: Read>(source: R) -> Result<Dataset, IoError> {
    let mut lines = BufReader::new(source).lines().enumerate().filter(|(_, l)| !matches!(l, Ok(s) if s.trim().is_empty()));
    let (_, first) = lines.next().ok_or(IoError::MissingHeader)?;
    let header: JsonHeader = serde_json::from_str(&first?).map_err(|e| IoError::Json { line: 1, message: e.to_string() })?;
    let n = header.attributes.len();
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let row: JsonRow = serde_json::from_str(&line?).map_err(|e| IoError::Json { line: idx + 1, message: e.to_string() })?;
        let r = rows.len() + 1;
        let found = row.values.chars().count();
        if found != n {
            return Err(DatasetError::Ragged { row: r, found, expected: n }.into());
        }
        let mut buf = [0u8; 4];
        let values = row
            .values
            .chars()
            .enumerate()
            .map(|(j, ch)| parse_cell(ch.encode_utf8(&mut buf), r, j + 1))
            .collect::<Result<_, _>>()?;
        rows.push(PartialExample(values));
    }
    Ok(Dataset::new(n, Some(header.attributes), rows)?)
}

pub fn write_dataset<W: Write>(sink: W, d: &Dataset, format: DatasetFormat) -> Result<(), IoError> {
    match format {
        DatasetFormat::Csv => {
            let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(sink);
            w.write_record(d.attribute_names())?;
            let mut cell = [0u8; 4];
            for row in d.rows() {
                w.write_record(row.values().iter().map(|v| v.to_char().encode_utf8(&mut cell).to_string()))?;
            }
            w.flush()?;
        }
        DatasetFormat::Jsonl => {
            let mut w = std::io::BufWriter::new(sink);
            let header = JsonHeader { attributes: d.attribute_names().to_vec() };
            writeln!(w, "{}", serde_json::to_string(&header).expect("strings serialize"))?;
            for row in d.rows() {
                writeln!(w, "{}", serde_json::to_string(&JsonRow { values: row.to_string() }).expect("strings serialize"))?;
            }
            w.flush()?;
        }
    }
    Ok(())
}

fn in_file(path: &Path, e: IoError) -> IoError {
    match e {
        IoError::Io(source) => IoError::File { path: path.to_path_buf(), source },
        other => IoError::InFile { path: path.to_path_buf(), source: Box::new(other) },
    }
}

fn open(path: &Path) -> Result<fs::File, IoError> {
    fs::File::open(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })
}

/// Loads a dataset, picking the format from the extension.
pub fn load_dataset(path: &Path) -> Result<Dataset, IoError> {
    read_dataset(open(path)?, DatasetFormat::from_path(path)).map_err(|e| in_file(path, e))
}

pub fn save_dataset(path: &Path, d: &Dataset) -> Result<(), IoError> {
    let file = fs::File::create(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    write_dataset(file, d, DatasetFormat::from_path(path)).map_err(|e| in_file(path, e))
}

pub fn load_kb(path: &Path, n: usize) -> Result<KnowledgeBase, IoError> {
    let text = fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
    KnowledgeBase::parse(&text, n).map_err(|e| in_file(path, e.into()))
}

/// `arg` is a formula, or `@PATH` naming a file that holds one.
pub fn read_query(arg: &str, n: usize) -> Result<Formula, IoError> {
    match arg.strip_prefix('@') {
        Some(path) => {
            let path = Path::new(path);
            let text = fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_path_buf(), source })?;
            parse_formula(text.trim(), Some(n)).map_err(|e| in_file(path, e.into()))
        }
        None => Ok(parse_formula(arg.trim(), Some(n))?),
    }
}
