//! The evaluation contract and its implementations.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{EvaluatorError, ScoreError};
use crate::space::{Combination, SearchSpace};

pub mod external;
pub mod oracle;
pub mod protocol;
pub mod synthetic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    Incompatible,
    ResourceExhausted,
    Timeout,
    ProtocolError,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Incompatible => "incompatible",
            Status::ResourceExhausted => "resource_exhausted",
            Status::Timeout => "timeout",
            Status::ProtocolError => "protocol_error",
        }
    }

    pub fn is_ok(self) -> bool {
        self == Status::Ok
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Status {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "ok" => Status::Ok,
            "incompatible" => Status::Incompatible,
            "resource_exhausted" => Status::ResourceExhausted,
            "timeout" => Status::Timeout,
            "protocol_error" => Status::ProtocolError,
            other => return Err(format!("unknown status `{other}`")),
        })
    }
}

/// Outcome of evaluating one combination: accuracy (mIoU, as a fraction)
/// and single-frame inference time in seconds, or a typed failure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEvaluation", into = "RawEvaluation")]
pub struct Evaluation {
    status: Status,
    accuracy: Option<f64>,
    time_s: Option<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    time_s: Option<f64>,
}

impl TryFrom<RawEvaluation> for Evaluation {
    type Error = String;

    fn try_from(raw: RawEvaluation) -> Result<Self, Self::Error> {
        match (raw.status, raw.accuracy, raw.time_s) {
            (Status::Ok, Some(acc), Some(time)) => Evaluation::ok(acc, time).map_err(|e| e.to_string()),
            (Status::Ok, _, _) => Err("ok evaluation needs accuracy and time_s".into()),
            (status, None, None) => Ok(Evaluation::failure(status)),
            (status, _, _) => Err(format!("{status} evaluation must not carry measurements")),
        }
    }
}

impl From<Evaluation> for RawEvaluation {
    fn from(e: Evaluation) -> Self {
        RawEvaluation { status: e.status, accuracy: e.accuracy, time_s: e.time_s }
    }
}

impl Evaluation {
    pub fn ok(accuracy: f64, time_s: f64) -> Result<Self, ScoreError> {
        if !(0.0..=1.0).contains(&accuracy) {
            return Err(ScoreError::Accuracy(accuracy));
        }
        if !(time_s > 0.0 && time_s.is_finite()) {
            return Err(ScoreError::NonPositiveTime(time_s));
        }
        Ok(Evaluation { status: Status::Ok, accuracy: Some(accuracy), time_s: Some(time_s) })
    }

    /// A failed evaluation. Passing [`Status::Ok`] is a logic error and is
    /// mapped to [`Status::ProtocolError`].
    pub fn failure(status: Status) -> Self {
        let status = if status.is_ok() { Status::ProtocolError } else { status };
        Evaluation { status, accuracy: None, time_s: None }
    }

    pub fn status(&self) -> Status {
        self.status
    }

    pub fn accuracy(&self) -> Option<f64> {
        self.accuracy
    }

    pub fn time_s(&self) -> Option<f64> {
        self.time_s
    }

    /// Score `accuracy / time_s`, present iff the evaluation succeeded.
    pub fn m(&self) -> Option<f64> {
        Some(self.accuracy? / self.time_s?)
    }
}

/// Anything that can measure a combination.
///
/// `Err` is reserved for failures of the evaluator itself (a dead child
/// process, say); a combination that cannot be run is an `Ok` evaluation
/// with a failure status.
pub trait Evaluator {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError>;
}

impl<E: Evaluator + ?Sized> Evaluator for &mut E {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        (**self).evaluate(space, combination)
    }
}

impl<E: Evaluator + ?Sized> Evaluator for Box<E> {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        (**self).evaluate(space, combination)
    }
}

/// Wraps an evaluator and counts calls per flat combination index.
#[derive(Debug)]
pub struct CountingEvaluator<E> {
    inner: E,
    calls: std::collections::BTreeMap<u64, u64>,
}

impl<E> CountingEvaluator<E> {
    pub fn new(inner: E) -> Self {
        CountingEvaluator { inner, calls: Default::default() }
    }

    pub fn calls(&self) -> &std::collections::BTreeMap<u64, u64> {
        &self.calls
    }

    pub fn total_calls(&self) -> u64 {
        self.calls.values().sum()
    }

    pub fn into_inner(self) -> E {
        self.inner
    }
}

impl<E: Evaluator> Evaluator for CountingEvaluator<E> {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        *self.calls.entry(space.encode(combination)?).or_default() += 1;
        self.inner.evaluate(space, combination)
    }
}
