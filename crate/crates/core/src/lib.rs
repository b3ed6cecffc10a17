//! Adaptive search for the best network / framework / compression
//! combination under an accuracy-per-second objective.
//!
//! Each iteration samples a combination from a probability vector over the
//! whole space, evaluates it, records the result, and multiplies the mass of
//! every combination sharing a dimension pair with it by the clamped ratio
//! of its score to a reference level. Failed evaluations apply a fixed
//! penalty the same way; entries that fall below a floor are excluded.
//!
//! The sampling state is generic over [`Scalar`]; the aliases below fix the
//! common choices.

pub mod config;
pub mod error;
pub mod evaluators;
pub mod results;
pub mod sampling;
pub mod scalar;
pub mod search;
pub mod space;

pub use config::{AlphaMode, SearchConfig, UpdatePolicy};
pub use error::{
    ConfigError, EvaluatorError, ParseError, PersistError, ResultError, ScoreError, SearchError, SpaceError,
};
pub use evaluators::external::{external_evaluator, ExternalEvaluator};
pub use evaluators::oracle::{load_oracle, OracleDataset, TableOracle};
pub use evaluators::synthetic::{synthetic_landscape, LandscapeSpec, SyntheticLandscape};
pub use evaluators::{CountingEvaluator, Evaluation, Evaluator, Status};
pub use results::persist::{load_run, save_run, EvaluatorSource, RunState};
pub use results::report::{emit_report, ReportFormat};
pub use results::{best_by_m, pareto_front, ResultRecord, ResultsTable};
pub use sampling::{init_state, score, AlphaEstimator, SamplingState, UpdateOutcome};
pub use scalar::Scalar;
pub use search::{run_search, Search, SearchOutcome, Step, Termination};
pub use space::{shared_pair_count, Combination, Dimension, SearchSpace};

pub use num_rational::BigRational;

/// Double-precision sampling state, the production default.
pub type SamplingState64 = SamplingState<f64>;
/// Single-precision sampling state.
pub type SamplingState32 = SamplingState<f32>;
/// Exact rational sampling state.
pub type ExactSamplingState = SamplingState<BigRational>;

pub type Search64 = Search<f64>;
pub type ExactSearch = Search<BigRational>;
