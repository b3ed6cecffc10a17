//! Synthetic score landscapes with planted pair effects.
//!
//! Every combination has a base score, multiplied by the effect of each
//! planted pair it contains and by deterministic per-combination noise.
//! A planted pair may also fail with some probability. The score is split
//! into accuracy and time so that `accuracy / time_s` gives it back.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{EvaluatorError, SpaceError};
use crate::evaluators::{Evaluation, Evaluator, Status};
use crate::space::{Combination, SearchSpace};

/// One `(dimension, label)` coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Coordinate {
    pub dimension: String,
    pub label: String,
}

impl Coordinate {
    pub fn new(dimension: impl Into<String>, label: impl Into<String>) -> Self {
        Coordinate { dimension: dimension.into(), label: label.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlantedPair {
    pub first: Coordinate,
    pub second: Coordinate,
    /// Score multiplier for combinations containing both coordinates.
    #[serde(default = "one")]
    pub multiplier: f64,
    #[serde(default)]
    pub failure_probability: f64,
}

fn one() -> f64 {
    1.0
}

fn default_t0() -> f64 {
    0.1
}

impl PlantedPair {
    pub fn bonus(first: Coordinate, second: Coordinate, multiplier: f64) -> Self {
        PlantedPair { first, second, multiplier, failure_probability: 0.0 }
    }

    pub fn failing(first: Coordinate, second: Coordinate, probability: f64) -> Self {
        PlantedPair { first, second, multiplier: 1.0, failure_probability: probability }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LandscapeSpec {
    pub space: SearchSpace,
    pub base_m: f64,
    #[serde(default)]
    pub pairs: Vec<PlantedPair>,
    /// Log-uniform noise half-width: each score is scaled by
    /// `exp(noise * z)` with `z` uniform in `[-1, 1]`.
    #[serde(default)]
    pub noise: f64,
    /// Reference frame time used to split a score into accuracy and time.
    #[serde(default = "default_t0")]
    pub t0: f64,
}

impl LandscapeSpec {
    pub fn new(space: SearchSpace, base_m: f64) -> Self {
        LandscapeSpec { space, base_m, pairs: Vec::new(), noise: 0.0, t0: default_t0() }
    }

    pub fn with_pair(mut self, pair: PlantedPair) -> Self {
        self.pairs.push(pair);
        self
    }

    pub fn with_noise(mut self, noise: f64) -> Self {
        self.noise = noise;
        self
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum LandscapeError {
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error("planted pair uses dimension `{0}` twice")]
    SameDimension(String),
    #[error("{0}")]
    Range(String),
}

#[derive(Debug, Clone)]
struct ResolvedPair {
    dims: (usize, usize),
    values: (usize, usize),
    multiplier: f64,
    failure_probability: f64,
}

/// Deterministic evaluator over a [`LandscapeSpec`].
#[derive(Debug, Clone)]
pub struct SyntheticLandscape {
    spec: LandscapeSpec,
    pairs: Vec<ResolvedPair>,
    seed: u64,
}

pub fn synthetic_landscape(spec: LandscapeSpec, seed: u64) -> Result<SyntheticLandscape, LandscapeError> {
    SyntheticLandscape::new(spec, seed)
}

impl SyntheticLandscape {
    pub fn new(spec: LandscapeSpec, seed: u64) -> Result<Self, LandscapeError> {
        if !(spec.base_m.is_finite() && spec.base_m >= 0.0) {
            return Err(LandscapeError::Range(format!("base_m must be >= 0, got {}", spec.base_m)));
        }
        if !(spec.noise.is_finite() && spec.noise >= 0.0) {
            return Err(LandscapeError::Range(format!("noise must be >= 0, got {}", spec.noise)));
        }
        if !(spec.t0.is_finite() && spec.t0 > 0.0) {
            return Err(LandscapeError::Range(format!("t0 must be > 0, got {}", spec.t0)));
        }
        let resolve = |c: &Coordinate| -> Result<(usize, usize), SpaceError> {
            let d = spec
                .space
                .dimension_index(&c.dimension)
                .ok_or_else(|| SpaceError::UnknownDimension(c.dimension.clone()))?;
            let v = spec.space.dimensions()[d].position(&c.label).ok_or_else(|| {
                SpaceError::UnknownLabel { dimension: c.dimension.clone(), label: c.label.clone() }
            })?;
            Ok((d, v))
        };
        let mut pairs = Vec::new();
        for pair in &spec.pairs {
            let (d1, v1) = resolve(&pair.first)?;
            let (d2, v2) = resolve(&pair.second)?;
            if d1 == d2 {
                return Err(LandscapeError::SameDimension(pair.first.dimension.clone()));
            }
            if !(pair.multiplier.is_finite() && pair.multiplier >= 0.0) {
                return Err(LandscapeError::Range(format!("multiplier {} must be >= 0", pair.multiplier)));
            }
            if !(0.0..=1.0).contains(&pair.failure_probability) {
                return Err(LandscapeError::Range(format!(
                    "failure probability {} outside [0, 1]",
                    pair.failure_probability
                )));
            }
            pairs.push(ResolvedPair {
                dims: (d1, d2),
                values: (v1, v2),
                multiplier: pair.multiplier,
                failure_probability: pair.failure_probability,
            });
        }
        Ok(SyntheticLandscape { spec, pairs, seed })
    }

    pub fn space(&self) -> &SearchSpace {
        &self.spec.space
    }

    pub fn spec(&self) -> &LandscapeSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn contains(&self, pair: &ResolvedPair, combination: &Combination) -> bool {
        let idx = combination.indices();
        idx[pair.dims.0] == pair.values.0 && idx[pair.dims.1] == pair.values.1
    }

    /// Closed-form score of a combination, or `None` when a planted pair
    /// makes it fail.
    pub fn expected_m(&self, combination: &Combination) -> Result<Option<f64>, SpaceError> {
        let flat = self.spec.space.encode(combination)?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(flat);
        let z: f64 = rng.gen_range(-1.0..=1.0);
        let mut m = self.spec.base_m * (self.spec.noise * z).exp();
        for pair in &self.pairs {
            if !self.contains(pair, combination) {
                continue;
            }
            let draw: f64 = rng.gen();
            if draw < pair.failure_probability {
                return Ok(None);
            }
            m *= pair.multiplier;
        }
        Ok(Some(m))
    }

    /// Number of combinations containing a planted pair.
    pub fn carriers(&self, pair_index: usize) -> usize {
        let pair = &self.pairs[pair_index];
        self.spec.space.combinations().filter(|c| self.contains(pair, c)).count()
    }
}

impl Evaluator for SyntheticLandscape {
    fn evaluate(
        &mut self,
        space: &SearchSpace,
        combination: &Combination,
    ) -> Result<Evaluation, EvaluatorError> {
        if space != &self.spec.space {
            return Err(SpaceError::Arity {
                expected: self.spec.space.dimension_count(),
                got: space.dimension_count(),
            }
            .into());
        }
        let Some(m) = self.expected_m(combination)? else {
            return Ok(Evaluation::failure(Status::Incompatible));
        };
        let t0 = self.spec.t0;
        let accuracy = m * t0;
        let evaluation =
            if accuracy <= 1.0 { Evaluation::ok(accuracy, t0) } else { Evaluation::ok(1.0, 1.0 / m) };
        Ok(evaluation.expect("landscape scores are finite and non-negative"))
    }
}
