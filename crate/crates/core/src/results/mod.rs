//! The global results table: one row per evaluated combination.

use std::cmp::Ordering;
use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{ResultError, SpaceError};
use crate::evaluators::{Evaluation, Status};
use crate::space::{Combination, SearchSpace};

pub mod persist;
pub mod report;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResultRecord {
    pub labels: Vec<String>,
    pub flat_index: u64,
    pub iteration_first_seen: u64,
    pub accuracy: Option<f64>,
    pub time_s: Option<f64>,
    pub status: Status,
    pub m: Option<f64>,
    pub hit_count: u64,
}

impl ResultRecord {
    pub fn evaluation(&self) -> Evaluation {
        match (self.status, self.accuracy, self.time_s) {
            (Status::Ok, Some(acc), Some(time)) => Evaluation::ok(acc, time).expect("record invariants hold"),
            (status, _, _) => Evaluation::failure(status),
        }
    }

    fn check(&self) -> Result<(), String> {
        if self.hit_count < 1 {
            return Err(format!("record {} has hit_count 0", self.flat_index));
        }
        match (self.status, self.accuracy, self.time_s, self.m) {
            (Status::Ok, Some(acc), Some(time), Some(m)) => {
                Evaluation::ok(acc, time).map_err(|e| e.to_string())?;
                let expected = acc / time;
                if (m - expected).abs() > 1e-12 * expected.abs().max(1.0) {
                    return Err(format!("record {} has m {m}, expected {expected}", self.flat_index));
                }
                Ok(())
            }
            (Status::Ok, ..) => Err(format!("ok record {} lacks measurements", self.flat_index)),
            (_, None, None, None) => Ok(()),
            (status, ..) => Err(format!("{status} record {} carries measurements", self.flat_index)),
        }
    }
}

/// Results keyed by combination, in order of first evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTable", into = "RawTable")]
pub struct ResultsTable {
    dimension_names: Vec<String>,
    input_size: Option<u32>,
    records: Vec<ResultRecord>,
    index: HashMap<u64, usize>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTable {
    dimension_names: Vec<String>,
    input_size: Option<u32>,
    records: Vec<ResultRecord>,
}

impl TryFrom<RawTable> for ResultsTable {
    type Error = String;

    fn try_from(raw: RawTable) -> Result<Self, Self::Error> {
        let mut index = HashMap::new();
        for (i, record) in raw.records.iter().enumerate() {
            record.check()?;
            if record.labels.len() != raw.dimension_names.len() {
                return Err(format!("record {} has the wrong number of labels", record.flat_index));
            }
            if index.insert(record.flat_index, i).is_some() {
                return Err(format!("duplicate record for flat index {}", record.flat_index));
            }
        }
        Ok(ResultsTable {
            dimension_names: raw.dimension_names,
            input_size: raw.input_size,
            records: raw.records,
            index,
        })
    }
}

impl From<ResultsTable> for RawTable {
    fn from(t: ResultsTable) -> Self {
        RawTable { dimension_names: t.dimension_names, input_size: t.input_size, records: t.records }
    }
}

impl ResultsTable {
    pub fn new(space: &SearchSpace, input_size: Option<u32>) -> Self {
        ResultsTable {
            dimension_names: space.dimensions().iter().map(|d| d.name.clone()).collect(),
            input_size,
            records: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn dimension_names(&self) -> &[String] {
        &self.dimension_names
    }

    pub fn input_size(&self) -> Option<u32> {
        self.input_size
    }

    pub fn records(&self) -> &[ResultRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, flat: u64) -> Option<&ResultRecord> {
        self.index.get(&flat).map(|&i| &self.records[i])
    }

    /// Stored evaluation of a combination, for memoized re-sampling.
    pub fn cached(&self, flat: u64) -> Option<Evaluation> {
        self.get(flat).map(ResultRecord::evaluation)
    }

    pub fn total_hits(&self) -> u64 {
        self.records.iter().map(|r| r.hit_count).sum()
    }

    /// Saves one evaluation: a new row on first sight, otherwise the hit
    /// count of the existing row goes up.
    pub fn record(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
        evaluation: &Evaluation,
        iteration: u64,
    ) -> Result<(), SpaceError> {
        let flat = space.encode(combination)?;
        if let Some(&i) = self.index.get(&flat) {
            self.records[i].hit_count += 1;
            return Ok(());
        }
        let labels = space.labels(combination)?.into_iter().map(str::to_string).collect();
        self.index.insert(flat, self.records.len());
        self.records.push(ResultRecord {
            labels,
            flat_index: flat,
            iteration_first_seen: iteration,
            accuracy: evaluation.accuracy(),
            time_s: evaluation.time_s(),
            status: evaluation.status(),
            m: evaluation.m(),
            hit_count: 1,
        });
        Ok(())
    }

    pub fn ok_records(&self) -> impl Iterator<Item = &ResultRecord> {
        self.records.iter().filter(|r| r.status.is_ok())
    }

    pub fn pareto_front(&self) -> Vec<&ResultRecord> {
        pareto_front(self)
    }

    pub fn best_by_m(&self) -> Result<&ResultRecord, ResultError> {
        best_by_m(self)
    }
}

/// Indices of the non-dominated `(time, accuracy)` points, where lower time
/// and higher accuracy are better. Sorted by ascending time, then by input
/// order. Points tied exactly on both axes are all kept.
pub fn pareto_indices(points: &[(f64, f64)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_by(|&a, &b| {
        let (ta, aa) = points[a];
        let (tb, ab) = points[b];
        ta.partial_cmp(&tb)
            .unwrap_or(Ordering::Equal)
            .then(ab.partial_cmp(&aa).unwrap_or(Ordering::Equal))
            .then(a.cmp(&b))
    });
    let mut front = Vec::new();
    // best accuracy among strictly faster points
    let mut best_faster = f64::NEG_INFINITY;
    let mut i = 0;
    while i < order.len() {
        let time = points[order[i]].0;
        let group_best = points[order[i]].1;
        let mut j = i;
        while j < order.len() && points[order[j]].0 == time {
            if points[order[j]].1 == group_best && group_best > best_faster {
                front.push(order[j]);
            }
            j += 1;
        }
        best_faster = best_faster.max(group_best);
        i = j;
    }
    front
}

/// Successful records not dominated in the (time, accuracy) plane, fastest
/// first.
pub fn pareto_front(table: &ResultsTable) -> Vec<&ResultRecord> {
    let ok: Vec<&ResultRecord> = table.ok_records().collect();
    let points: Vec<(f64, f64)> =
        ok.iter().map(|r| (r.time_s.expect("ok"), r.accuracy.expect("ok"))).collect();
    let mut front: Vec<&ResultRecord> = pareto_indices(&points).into_iter().map(|i| ok[i]).collect();
    front.sort_by(|a, b| {
        a.time_s.partial_cmp(&b.time_s).unwrap_or(Ordering::Equal).then(a.flat_index.cmp(&b.flat_index))
    });
    front
}

/// Record with the highest score, lowest flat index on ties.
pub fn best_by_m(table: &ResultsTable) -> Result<&ResultRecord, ResultError> {
    let mut best: Option<&ResultRecord> = None;
    for record in table.ok_records() {
        let m = record.m.expect("ok");
        best = match best {
            Some(b) => {
                let bm = b.m.expect("ok");
                if m > bm || (m == bm && record.flat_index < b.flat_index) {
                    Some(record)
                } else {
                    Some(b)
                }
            }
            None => Some(record),
        };
    }
    best.ok_or(ResultError::NoResult)
}
