//! Table-backed evaluator and the oracle CSV format.
//!
//! Header: one column per dimension, then `input_size,accuracy,time_s,status`.
//! Accuracy may be a fraction or a percentage; values above 1 are read as
//! percentages. Combinations absent from the table evaluate as
//! `incompatible`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{EvaluatorError, ParseError};
use crate::evaluators::{Evaluation, Evaluator, Status};
use crate::space::{Combination, Dimension, SearchSpace};

/// Benchmark measurements (mIoU on Pascal VOC 2012 val, single-frame time on a
/// Raspberry Pi Zero 2) at input sizes 513 and 284.
pub const BUNDLED_CSV: &str = include_str!("../../data/benchmarks.csv");

/// The canonical network x framework x compression space of the 513 block.
pub const BUNDLED_SPACE_JSON: &str = include_str!("../../data/space.json");

pub const DEFAULT_INPUT_SIZE: u32 = 513;

const TAIL: [&str; 4] = ["input_size", "accuracy", "time_s", "status"];

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub labels: Vec<String>,
    pub input_size: u32,
    pub evaluation: Evaluation,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleDataset {
    pub dimension_names: Vec<String>,
    pub rows: Vec<OracleRow>,
}

/// A non-fatal remark produced while loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LoadWarning {
    pub line: u64,
    pub message: String,
}

impl std::fmt::Display for LoadWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

pub fn bundled_space() -> SearchSpace {
    serde_json::from_str(BUNDLED_SPACE_JSON).expect("bundled space is valid")
}

pub fn bundled_dataset() -> OracleDataset {
    OracleDataset::parse(BUNDLED_CSV).expect("bundled table is valid").0
}

/// Reads an accuracy cell. Values in (1, 100] are percentages; the division
/// is done on the decimal text so `56.39` becomes the f64 nearest 0.5639.
fn parse_accuracy(cell: &str, line: u64, warnings: &mut Vec<LoadWarning>) -> Result<f64, ParseError> {
    let value: f64 =
        cell.parse().map_err(|_| ParseError::new(line, format!("accuracy `{cell}` is not a number")))?;
    if !(0.0..=100.0).contains(&value) {
        return Err(ParseError::new(line, format!("accuracy {cell} out of range [0, 100]")));
    }
    if value <= 1.0 {
        return Ok(value);
    }
    if value < 10.0 {
        warnings
            .push(LoadWarning { line, message: format!("accuracy {cell} read as a percentage ({cell}%)") });
    }
    let fraction: f64 = format!("{cell}e-2").parse().expect("valid float text");
    Ok(fraction)
}

impl OracleDataset {
    /// Parses the full file (every input size).
    pub fn parse(text: &str) -> Result<(Self, Vec<LoadWarning>), ParseError> {
        if text.trim().is_empty() {
            return Err(ParseError::new(1, "no rows"));
        }
        let mut reader =
            csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(text.as_bytes());
        let header: Vec<String> = reader
            .headers()
            .map_err(|e| ParseError::new(1, format!("unreadable header: {e}")))?
            .iter()
            .map(str::to_string)
            .collect();
        if header.len() < TAIL.len() + 2 || header[header.len() - TAIL.len()..] != TAIL {
            return Err(ParseError::new(
                1,
                format!(
                    "header must be <dimension>,<dimension>[,...],{}; got `{}`",
                    TAIL.join(","),
                    header.join(",")
                ),
            ));
        }
        let dims = header.len() - TAIL.len();
        let dimension_names = header[..dims].to_vec();
        let mut unique = HashSet::new();
        for name in &dimension_names {
            if name.is_empty() || !unique.insert(name) {
                return Err(ParseError::new(1, format!("bad or duplicate dimension column `{name}`")));
            }
        }

        let mut rows = Vec::new();
        let mut warnings = Vec::new();
        let mut keys = HashSet::new();
        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line());
                ParseError::new(line, e.to_string())
            })?;
            let line = record.position().map_or(0, |p| p.line());
            if record.len() != header.len() {
                return Err(ParseError::new(
                    line,
                    format!("expected {} fields, found {}", header.len(), record.len()),
                ));
            }
            let labels: Vec<String> = record.iter().take(dims).map(str::to_string).collect();
            if let Some(empty) = labels.iter().position(String::is_empty) {
                return Err(ParseError::new(line, format!("empty `{}` label", dimension_names[empty])));
            }
            let input_size: u32 = record[dims].parse().map_err(|_| {
                ParseError::new(line, format!("input_size `{}` is not a positive integer", &record[dims]))
            })?;
            if input_size == 0 {
                return Err(ParseError::new(line, "input_size must be positive"));
            }
            let status: Status = record[dims + 3].parse().map_err(|e: String| ParseError::new(line, e))?;
            let (acc_cell, time_cell) = (&record[dims + 1], &record[dims + 2]);
            let evaluation = if status.is_ok() {
                if acc_cell.is_empty() || time_cell.is_empty() {
                    return Err(ParseError::new(line, "ok rows need accuracy and time_s"));
                }
                let accuracy = parse_accuracy(acc_cell, line, &mut warnings)?;
                let time_s: f64 = time_cell
                    .parse()
                    .map_err(|_| ParseError::new(line, format!("time_s `{time_cell}` is not a number")))?;
                Evaluation::ok(accuracy, time_s).map_err(|e| ParseError::new(line, e.to_string()))?
            } else {
                Evaluation::failure(status)
            };
            if !keys.insert((labels.clone(), input_size)) {
                return Err(ParseError::new(
                    line,
                    format!("duplicate combination ({}) at input size {input_size}", labels.join(", ")),
                ));
            }
            rows.push(OracleRow { labels, input_size, evaluation });
        }
        if rows.is_empty() {
            return Err(ParseError::new(1, "no rows"));
        }
        Ok((OracleDataset { dimension_names, rows }, warnings))
    }

    pub fn input_sizes(&self) -> Vec<u32> {
        let mut sizes: Vec<u32> = self.rows.iter().map(|r| r.input_size).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes.dedup();
        sizes
    }

    pub fn ok_count(&self, input_size: u32) -> usize {
        self.rows.iter().filter(|r| r.input_size == input_size && r.evaluation.status().is_ok()).count()
    }

    pub fn filtered(&self, input_size: u32) -> OracleDataset {
        OracleDataset {
            dimension_names: self.dimension_names.clone(),
            rows: self.rows.iter().filter(|r| r.input_size == input_size).cloned().collect(),
        }
    }

    /// Space over the union of labels, in order of first appearance.
    pub fn infer_space(&self) -> Result<SearchSpace, crate::error::SpaceError> {
        let mut dims: Vec<Dimension> =
            self.dimension_names.iter().map(|n| Dimension::new(n.clone(), Vec::<String>::new())).collect();
        for row in &self.rows {
            for (dim, label) in dims.iter_mut().zip(&row.labels) {
                if dim.position(label).is_none() {
                    dim.values.push(label.clone());
                }
            }
        }
        SearchSpace::new(dims)
    }

    /// Serializes in the oracle CSV schema (accuracy as a fraction).
    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        let mut header = self.dimension_names.clone();
        header.extend(TAIL.iter().map(|s| s.to_string()));
        writer.write_record(&header).expect("in-memory write");
        for row in &self.rows {
            let mut fields = row.labels.clone();
            fields.push(row.input_size.to_string());
            fields.push(row.evaluation.accuracy().map(|a| a.to_string()).unwrap_or_default());
            fields.push(row.evaluation.time_s().map(|t| t.to_string()).unwrap_or_default());
            fields.push(row.evaluation.status().to_string());
            writer.write_record(&fields).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
    }
}

/// Loads an oracle file, keeps the rows at `input_size` and infers the
/// space from their labels.
pub fn load_oracle(
    path: impl AsRef<Path>,
    input_size: u32,
) -> Result<(OracleDataset, SearchSpace, Vec<LoadWarning>), ParseError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ParseError::new(0, format!("cannot read {}: {e}", path.display())))?;
    load_oracle_str(&text, input_size)
}

pub fn load_oracle_str(
    text: &str,
    input_size: u32,
) -> Result<(OracleDataset, SearchSpace, Vec<LoadWarning>), ParseError> {
    let (dataset, warnings) = OracleDataset::parse(text)?;
    let filtered = dataset.filtered(input_size);
    if filtered.rows.is_empty() {
        return Err(ParseError::new(0, format!("no rows at input size {input_size}")));
    }
    let space = filtered.infer_space().map_err(|e| ParseError::new(0, e.to_string()))?;
    Ok((filtered, space, warnings))
}

/// Answers from a measured table at one input size.
#[derive(Debug, Clone)]
pub struct TableOracle {
    dimension_names: Vec<String>,
    input_size: u32,
    rows: HashMap<Vec<String>, Evaluation>,
}

impl TableOracle {
    pub fn new(dataset: &OracleDataset, input_size: u32) -> Self {
        let rows = dataset
            .rows
            .iter()
            .filter(|r| r.input_size == input_size)
            .map(|r| (r.labels.clone(), r.evaluation))
            .collect();
        TableOracle { dimension_names: dataset.dimension_names.clone(), input_size, rows }
    }

    /// Oracle over the bundled benchmark table at `input_size`.
    pub fn bundled(input_size: u32) -> Self {
        TableOracle::new(&bundled_dataset(), input_size)
    }

    pub fn input_size(&self) -> u32 {
        self.input_size
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Checks that `space` has the table's dimensions and contains every
    /// label the table uses.
    pub fn check_space(&self, space: &SearchSpace) -> Result<(), String> {
        let names: Vec<&str> = space.dimensions().iter().map(|d| d.name.as_str()).collect();
        if names != self.dimension_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Err(format!(
                "space dimensions ({}) differ from table columns ({})",
                names.join(", "),
                self.dimension_names.join(", ")
            ));
        }
        let mut missing = String::new();
        for labels in self.rows.keys() {
            if space.combination_of(labels).is_err() {
                let _ = write!(missing, " ({})", labels.join(", "));
            }
        }
        if missing.is_empty() {
            Ok(())
        } else {
            Err(format!("labels absent from the space:{missing}"))
        }
    }
}

impl Evaluator for TableOracle {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        let labels: Vec<String> = space.labels(combination)?.into_iter().map(str::to_string).collect();
        Ok(self.rows.get(&labels).copied().unwrap_or_else(|| Evaluation::failure(Status::Incompatible)))
    }
}
