//! Versioned JSON snapshots of a run, for resuming.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::PersistError;
use crate::evaluators::synthetic::LandscapeSpec;
use crate::results::ResultsTable;
use crate::sampling::SamplingState;
use crate::search::{Search, Termination};
use crate::space::SearchSpace;

pub const FORMAT_VERSION: u64 = 1;

/// Enough to rebuild the evaluator of a saved run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum EvaluatorSource {
    /// Table oracle; `path: None` is the bundled table.
    Oracle {
        path: Option<String>,
    },
    Synthetic {
        spec: LandscapeSpec,
        seed: u64,
    },
    External {
        command: String,
        args: Vec<String>,
        timeout_s: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunState {
    pub format_version: u64,
    pub config: SearchConfig,
    pub space: SearchSpace,
    pub input_size: Option<u32>,
    pub evaluator: Option<EvaluatorSource>,
    pub state: SamplingState<f64>,
    pub table: ResultsTable,
    pub iterations_done: u64,
    pub termination: Option<Termination>,
    pub degenerate_updates: u64,
}

impl RunState {
    pub fn capture(search: &Search<f64>, evaluator: Option<EvaluatorSource>) -> Self {
        RunState {
            format_version: FORMAT_VERSION,
            config: search.config.clone(),
            space: search.space.clone(),
            input_size: search.table.input_size(),
            evaluator,
            state: search.state.clone(),
            table: search.table.clone(),
            iterations_done: search.iterations_done,
            termination: search.termination,
            degenerate_updates: search.degenerate_updates,
        }
    }

    pub fn into_search(self) -> Search<f64> {
        Search {
            space: self.space,
            config: self.config,
            state: self.state,
            table: self.table,
            iterations_done: self.iterations_done,
            termination: self.termination,
            degenerate_updates: self.degenerate_updates,
        }
    }

    fn check(&self) -> Result<(), String> {
        self.config.validate().map_err(|e| e.to_string())?;
        if self.state.len() as u64 != self.space.total() {
            return Err("sampling state does not match the space".into());
        }
        if self.iterations_done > self.config.k {
            return Err(format!("iterations_done {} exceeds k {}", self.iterations_done, self.config.k));
        }
        if self.table.total_hits() != self.iterations_done {
            return Err("hit counts do not add up to iterations_done".into());
        }
        if self.table.dimension_names().len() != self.space.dimension_count() {
            return Err("results table does not match the space".into());
        }
        self.state.check_invariants(1e-9)
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("run state serializes");
        text.push('\n');
        text
    }

    pub fn from_json(text: &str) -> Result<Self, PersistError> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        let version = value
            .get("format_version")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| PersistError::Corrupt("missing format_version".into()))?;
        if version != FORMAT_VERSION {
            return Err(PersistError::Version { found: version, expected: FORMAT_VERSION });
        }
        let run: RunState =
            serde_json::from_value(value).map_err(|e| PersistError::Corrupt(e.to_string()))?;
        run.check().map_err(PersistError::Corrupt)?;
        Ok(run)
    }
}

pub fn save_run(path: impl AsRef<Path>, run: &RunState) -> Result<(), PersistError> {
    std::fs::write(path, run.to_json())?;
    Ok(())
}

pub fn load_run(path: impl AsRef<Path>) -> Result<RunState, PersistError> {
    let text = std::fs::read_to_string(path)?;
    RunState::from_json(&text)
}
