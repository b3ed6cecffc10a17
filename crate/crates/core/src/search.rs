//! The search loop: sample, evaluate, record, update; `k` times.

use serde::{Deserialize, Serialize};

use crate::config::SearchConfig;
use crate::error::SearchError;
use crate::evaluators::{Evaluation, Evaluator};
use crate::results::ResultsTable;
use crate::sampling::{init_state, score, SamplingState, UpdateOutcome};
use crate::scalar::Scalar;
use crate::space::{Combination, SearchSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// All `k` iterations ran.
    Completed,
    /// Every combination was excluded before the budget ran out.
    Exhausted,
}

impl std::fmt::Display for Termination {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Termination::Completed => "completed",
            Termination::Exhausted => "exhausted",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Step {
    Evaluated { combination: Combination, evaluation: Evaluation, cached: bool, update: UpdateOutcome },
    Finished(Termination),
}

/// A resumable search run.
#[derive(Debug, Clone, PartialEq)]
pub struct Search<S = f64> {
    pub(crate) space: SearchSpace,
    pub(crate) config: SearchConfig,
    pub(crate) state: SamplingState<S>,
    pub(crate) table: ResultsTable,
    pub(crate) iterations_done: u64,
    pub(crate) termination: Option<Termination>,
    pub(crate) degenerate_updates: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome<S = f64> {
    pub table: ResultsTable,
    pub state: SamplingState<S>,
    pub termination: Termination,
    pub iterations_done: u64,
    /// Updates after which only one combination was left active.
    pub degenerate_updates: u64,
}

impl<S: Scalar> Search<S> {
    pub fn new(
        space: SearchSpace,
        config: SearchConfig,
        input_size: Option<u32>,
    ) -> Result<Self, SearchError> {
        let state = init_state(&space, &config)?;
        Self::with_state(space, config, state, input_size)
    }

    /// Starts from an explicit sampling state instead of the uniform one.
    pub fn with_state(
        space: SearchSpace,
        config: SearchConfig,
        state: SamplingState<S>,
        input_size: Option<u32>,
    ) -> Result<Self, SearchError> {
        config.validate()?;
        if state.len() as u64 != space.total() {
            return Err(SearchError::StateMismatch { state: state.len(), space: space.total() });
        }
        let table = ResultsTable::new(&space, input_size);
        Ok(Search {
            space,
            config,
            state,
            table,
            iterations_done: 0,
            termination: None,
            degenerate_updates: 0,
        })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.space
    }

    pub fn config(&self) -> &SearchConfig {
        &self.config
    }

    pub fn state(&self) -> &SamplingState<S> {
        &self.state
    }

    pub fn table(&self) -> &ResultsTable {
        &self.table
    }

    pub fn iterations_done(&self) -> u64 {
        self.iterations_done
    }

    pub fn termination(&self) -> Option<Termination> {
        self.termination
    }

    pub fn degenerate_updates(&self) -> u64 {
        self.degenerate_updates
    }

    pub fn is_finished(&self) -> bool {
        self.termination.is_some()
    }

    /// Raises the iteration budget by `extra` and reopens a completed run.
    pub fn extend(&mut self, extra: u64) {
        self.config.k += extra;
        if self.termination == Some(Termination::Completed) {
            self.termination = None;
        }
    }

    /// Runs one iteration.
    pub fn step<E: Evaluator + ?Sized>(&mut self, evaluator: &mut E) -> Result<Step, SearchError> {
        if let Some(t) = self.termination {
            return Ok(Step::Finished(t));
        }
        if self.iterations_done >= self.config.k {
            self.termination = Some(Termination::Completed);
            return Ok(Step::Finished(Termination::Completed));
        }
        let iteration = self.iterations_done;
        let combination = match self.state.sample(&self.space) {
            Ok(c) => c,
            Err(SearchError::Exhausted) => {
                self.termination = Some(Termination::Exhausted);
                return Ok(Step::Finished(Termination::Exhausted));
            }
            Err(e) => return Err(e),
        };
        let flat = self.space.encode(&combination)?;
        let cached = if self.config.cache_evaluations { self.table.cached(flat) } else { None };
        let (evaluation, was_cached) = match cached {
            Some(e) => (e, true),
            None => {
                let e = evaluator.evaluate(&self.space, &combination).map_err(|source| {
                    SearchError::Evaluator {
                        iteration,
                        combination: self.space.describe(&combination),
                        source,
                    }
                })?;
                (e, false)
            }
        };
        self.table.record(&self.space, &combination, &evaluation, iteration)?;
        let update = match (evaluation.accuracy(), evaluation.time_s()) {
            (Some(acc), Some(time)) => {
                let m = score(acc, time)?;
                self.state.pair_checker(&self.space, &combination, m, &self.config)?
            }
            _ => self.state.record_failure(&self.space, &combination, &self.config)?,
        };
        if update.degenerate {
            self.degenerate_updates += 1;
        }
        self.iterations_done += 1;
        if self.iterations_done >= self.config.k {
            self.termination = Some(Termination::Completed);
        }
        Ok(Step::Evaluated { combination, evaluation, cached: was_cached, update })
    }

    /// Runs at most `iterations` more steps, stopping early at termination.
    pub fn run_for<E: Evaluator + ?Sized>(
        &mut self,
        evaluator: &mut E,
        iterations: u64,
    ) -> Result<Option<Termination>, SearchError> {
        for _ in 0..iterations {
            if let Step::Finished(_) = self.step(evaluator)? {
                break;
            }
        }
        Ok(self.termination)
    }

    /// Runs until the budget is spent or the space is exhausted.
    pub fn run<E: Evaluator + ?Sized>(&mut self, evaluator: &mut E) -> Result<Termination, SearchError> {
        loop {
            if let Step::Finished(t) = self.step(evaluator)? {
                return Ok(t);
            }
        }
    }

    pub fn into_outcome(self) -> SearchOutcome<S> {
        SearchOutcome {
            table: self.table,
            state: self.state,
            termination: self.termination.unwrap_or(Termination::Completed),
            iterations_done: self.iterations_done,
            degenerate_updates: self.degenerate_updates,
        }
    }
}

/// Runs a full search of `config.k` iterations from the uniform state.
pub fn run_search<S: Scalar, E: Evaluator + ?Sized>(
    space: &SearchSpace,
    evaluator: &mut E,
    config: &SearchConfig,
) -> Result<SearchOutcome<S>, SearchError> {
    let mut search = Search::<S>::new(space.clone(), config.clone(), None)?;
    search.run(evaluator)?;
    Ok(search.into_outcome())
}
