//! Text reports of a results table.

use std::cmp::Ordering;
use std::fmt::Write as _;

use crate::results::{ResultRecord, ResultsTable};
use crate::sampling::SamplingState;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

/// Successful rows by descending score, then failed rows; ties by flat index.
fn ordered(table: &ResultsTable) -> Vec<&ResultRecord> {
    let mut rows: Vec<&ResultRecord> = table.records().iter().collect();
    rows.sort_by(|a, b| match (a.m, b.m) {
        (Some(x), Some(y)) => {
            y.partial_cmp(&x).unwrap_or(Ordering::Equal).then(a.flat_index.cmp(&b.flat_index))
        }
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.flat_index.cmp(&b.flat_index),
    });
    rows
}

/// Accuracy as a percentage with up to two decimals and at least one.
pub fn percent(accuracy: f64) -> String {
    let text = format!("{:.2}", accuracy * 100.0);
    let trimmed = text.trim_end_matches('0');
    if trimmed.ends_with('.') {
        format!("{trimmed}0%")
    } else {
        format!("{trimmed}%")
    }
}

fn opt(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

pub fn emit_report<S: Scalar>(
    table: &ResultsTable,
    state: &SamplingState<S>,
    format: ReportFormat,
) -> String {
    match format {
        ReportFormat::Csv => emit_csv(table, state),
        ReportFormat::Markdown => emit_markdown(table, state),
    }
}

fn probability<S: Scalar>(state: &SamplingState<S>, flat: u64) -> f64 {
    if (flat as usize) < state.len() {
        state.probability(flat).to_f64_lossy()
    } else {
        f64::NAN
    }
}

fn emit_csv<S: Scalar>(table: &ResultsTable, state: &SamplingState<S>) -> String {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = table.dimension_names().to_vec();
    header.extend(
        ["input_size", "accuracy", "time_s", "status", "m", "hit_count", "probability"].map(String::from),
    );
    writer.write_record(&header).expect("in-memory write");
    let input_size = table.input_size().map(|s| s.to_string()).unwrap_or_default();
    for r in ordered(table) {
        let mut fields = r.labels.clone();
        fields.push(input_size.clone());
        fields.push(opt(r.accuracy));
        fields.push(opt(r.time_s));
        fields.push(r.status.to_string());
        fields.push(opt(r.m));
        fields.push(r.hit_count.to_string());
        fields.push(probability(state, r.flat_index).to_string());
        writer.write_record(&fields).expect("in-memory write");
    }
    String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8")
}

fn emit_markdown<S: Scalar>(table: &ResultsTable, state: &SamplingState<S>) -> String {
    let mut out = String::new();
    if let Some(size) = table.input_size() {
        let _ = writeln!(out, "### Input image size {size}×{size}×3\n");
    }
    let mut header: Vec<String> = table.dimension_names().to_vec();
    header.extend(["Inference Time [sec]", "mIoU", "Status", "m", "Hits", "Probability"].map(String::from));
    let _ = writeln!(out, "| {} |", header.join(" | "));
    let _ = writeln!(out, "|{}", "---|".repeat(header.len()));
    for r in ordered(table) {
        let mut cells = r.labels.clone();
        cells.push(opt(r.time_s));
        cells.push(r.accuracy.map(percent).unwrap_or_default());
        cells.push(r.status.to_string());
        cells.push(r.m.map(|m| format!("{m:.4}")).unwrap_or_default());
        cells.push(r.hit_count.to_string());
        cells.push(format!("{:.6}", probability(state, r.flat_index)));
        let _ = writeln!(out, "| {} |", cells.join(" | "));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SearchConfig;
    use crate::evaluators::{Evaluation, Status};
    use crate::sampling::init_state;
    use crate::space::{Combination, SearchSpace};

    #[test]
    fn percent_rendering() {
        assert_eq!(percent(0.5639), "56.39%");
        assert_eq!(percent(0.61), "61.0%");
        assert_eq!(percent(0.606), "60.6%");
        assert_eq!(percent(1.0), "100.0%");
    }

    #[test]
    fn empty_table_is_header_only() {
        let space = SearchSpace::from_sizes(&[2, 2]).unwrap();
        let state: SamplingState<f64> = init_state(&space, &SearchConfig::default()).unwrap();
        let table = ResultsTable::new(&space, None);
        assert_eq!(
            emit_report(&table, &state, ReportFormat::Csv),
            "d0,d1,input_size,accuracy,time_s,status,m,hit_count,probability\n"
        );
        let md = emit_report(&table, &state, ReportFormat::Markdown);
        assert_eq!(md.lines().count(), 2);
    }

    #[test]
    fn rows_sorted_by_score() {
        let space = SearchSpace::from_sizes(&[2, 2]).unwrap();
        let state: SamplingState<f64> = init_state(&space, &SearchConfig::default()).unwrap();
        let mut table = ResultsTable::new(&space, Some(284));
        table
            .record(&space, &Combination::new(vec![0, 0]), &Evaluation::failure(Status::Timeout), 0)
            .unwrap();
        table.record(&space, &Combination::new(vec![0, 1]), &Evaluation::ok(0.5, 1.0).unwrap(), 1).unwrap();
        table.record(&space, &Combination::new(vec![1, 1]), &Evaluation::ok(0.5, 0.5).unwrap(), 2).unwrap();
        let csv = emit_report(&table, &state, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,1,284,0.5,0.5,ok,1,1,0.25");
        assert_eq!(lines[2], "0,1,284,0.5,1,ok,0.5,1,0.25");
        assert_eq!(lines[3], "0,0,284,,,timeout,,1,0.25");
        let md = emit_report(&table, &state, ReportFormat::Markdown);
        assert!(md.starts_with("### Input image size 284×284×3"));
        assert!(md.contains("| 1 | 1 | 0.5 | 50.0% | ok | 1.0000 | 1 | 0.250000 |"));
    }
}
