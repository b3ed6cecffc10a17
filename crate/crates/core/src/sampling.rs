//! The sampling state machine: a probability vector over every combination
//! of the space, sampled once per iteration and reshaped by pairwise
//! multiplicative updates.

use log::warn;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{AlphaMode, SearchConfig, UpdatePolicy};
use crate::error::{ScoreError, SearchError};
use crate::scalar::{clamp, Scalar};
use crate::space::{shared_pairs_unchecked, Combination, SearchSpace};

/// Scores observed so far, kept sorted for the running median.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AlphaEstimator {
    observed: Vec<f64>,
}

impl AlphaEstimator {
    pub fn observe(&mut self, m: f64) {
        let at = self.observed.partition_point(|&x| x <= m);
        self.observed.insert(at, m);
    }

    pub fn len(&self) -> usize {
        self.observed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observed.is_empty()
    }

    pub fn median(&self) -> Option<f64> {
        let n = self.observed.len();
        match n {
            0 => None,
            _ if n % 2 == 1 => Some(self.observed[n / 2]),
            _ => Some((self.observed[n / 2 - 1] + self.observed[n / 2]) / 2.0),
        }
    }

    /// Sorted view of every observed score.
    pub fn observed(&self) -> &[f64] {
        &self.observed
    }
}

/// Result of one multiplicative update.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct UpdateOutcome {
    /// True when the factor was exactly 1 and the vector was left untouched.
    pub skipped: bool,
    pub newly_excluded: usize,
    /// Every remaining entry fell below the floor; the largest one was kept.
    pub degenerate: bool,
}

/// Probability vector `u` over all combinations plus exclusion flags, the
/// score history and the RNG.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, bound(serialize = "S: Serialize", deserialize = "S: Deserialize<'de>"))]
pub struct SamplingState<S> {
    u: Vec<S>,
    excluded: Vec<bool>,
    alpha: AlphaEstimator,
    #[serde(with = "rng_snapshot")]
    rng: ChaCha8Rng,
    seed: u64,
}

/// Score of one successful evaluation: accuracy per second of inference.
/// Low is bad, high is good.
pub fn score(accuracy: f64, time_s: f64) -> Result<f64, ScoreError> {
    if time_s.is_nan() || time_s <= 0.0 || !time_s.is_finite() {
        return Err(ScoreError::NonPositiveTime(time_s));
    }
    if !(0.0..=1.0).contains(&accuracy) {
        return Err(ScoreError::Accuracy(accuracy));
    }
    Ok(accuracy / time_s)
}

/// Uniform state over every combination of `space`, RNG seeded from the config.
pub fn init_state<S: Scalar>(
    space: &SearchSpace,
    config: &SearchConfig,
) -> Result<SamplingState<S>, SearchError> {
    config.validate()?;
    let n = space.total() as usize;
    let mass = S::one() / S::from_u64(space.total()).expect("count fits the scalar");
    Ok(SamplingState {
        u: vec![mass; n],
        excluded: vec![false; n],
        alpha: AlphaEstimator::default(),
        rng: ChaCha8Rng::seed_from_u64(config.seed),
        seed: config.seed,
    })
}

impl<S: Scalar> SamplingState<S> {
    /// Builds a state from explicit masses. Entries that are exactly zero are
    /// flagged excluded; the rest are renormalized to sum to 1.
    pub fn from_masses(masses: Vec<S>, seed: u64) -> Result<Self, SearchError> {
        let excluded: Vec<bool> = masses.iter().map(|m| !m.is_positive_scalar()).collect();
        if excluded.iter().all(|&e| e) {
            return Err(SearchError::Exhausted);
        }
        let mut state = SamplingState {
            u: masses.into_iter().map(|m| if m.is_positive_scalar() { m } else { S::zero() }).collect(),
            excluded,
            alpha: AlphaEstimator::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            seed,
        };
        state.renormalize();
        Ok(state)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn masses(&self) -> &[S] {
        &self.u
    }

    pub fn probability(&self, flat: u64) -> &S {
        &self.u[flat as usize]
    }

    pub fn is_excluded(&self, flat: u64) -> bool {
        self.excluded[flat as usize]
    }

    pub fn excluded_flags(&self) -> &[bool] {
        &self.excluded
    }

    pub fn active_count(&self) -> usize {
        self.excluded.iter().filter(|&&e| !e).count()
    }

    pub fn alpha(&self) -> &AlphaEstimator {
        &self.alpha
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Number of 32-bit words the RNG has produced so far.
    pub fn rng_position(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Flat index of the most probable non-excluded entry, lowest index on ties.
    pub fn argmax(&self) -> Option<u64> {
        let mut best: Option<usize> = None;
        for (i, mass) in self.u.iter().enumerate() {
            if self.excluded[i] {
                continue;
            }
            match best {
                Some(b) if *mass <= self.u[b] => {}
                _ => best = Some(i),
            }
        }
        best.map(|i| i as u64)
    }

    /// Sum of the non-excluded masses.
    pub fn active_mass(&self) -> S {
        self.u.iter().zip(&self.excluded).filter(|(_, &e)| !e).fold(S::zero(), |acc, (m, _)| acc + m.clone())
    }

    /// Draws one combination with probability equal to its mass.
    pub fn sample(&mut self, space: &SearchSpace) -> Result<Combination, SearchError> {
        self.check_space(space)?;
        let flat = self.sample_flat()?;
        Ok(space.decode(flat)?)
    }

    pub fn sample_flat(&mut self) -> Result<u64, SearchError> {
        let mut last_live = None;
        for (i, mass) in self.u.iter().enumerate() {
            if !self.excluded[i] && mass.is_positive_scalar() {
                last_live = Some(i);
            }
        }
        let last_live = last_live.ok_or(SearchError::Exhausted)?;
        let r: f64 = self.rng.gen();
        let target = S::from_f64_lossy(r) * self.active_mass();
        let mut cumulative = S::zero();
        for (i, mass) in self.u.iter().enumerate() {
            if self.excluded[i] || !mass.is_positive_scalar() {
                continue;
            }
            cumulative = cumulative + mass.clone();
            if target < cumulative {
                return Ok(i as u64);
            }
        }
        Ok(last_live as u64)
    }

    /// Learns from one successful evaluation of `sampled` with score `m`.
    ///
    /// The score is added to the history first; the reference level is then
    /// the fixed value or the median of the history. Every entry sharing at
    /// least one dimension pair with `sampled` is multiplied by the clamped
    /// ratio `m / alpha` (or its power under [`UpdatePolicy::PerPair`]).
    pub fn pair_checker(
        &mut self,
        space: &SearchSpace,
        sampled: &Combination,
        m: f64,
        config: &SearchConfig,
    ) -> Result<UpdateOutcome, SearchError> {
        self.check_space(space)?;
        space.check(sampled)?;
        if !(m >= 0.0 && m.is_finite()) {
            return Err(ScoreError::Accuracy(m).into());
        }
        self.alpha.observe(m);
        let alpha = match config.alpha_mode {
            AlphaMode::Fixed(value) => value,
            AlphaMode::RunningMedian if self.alpha.len() == 1 => {
                return Ok(UpdateOutcome { skipped: true, ..Default::default() })
            }
            AlphaMode::RunningMedian => self.alpha.median().expect("non-empty history"),
        };
        let lo = S::from_f64_lossy(config.gamma_min);
        let hi = S::from_f64_lossy(config.gamma_max);
        let raw = if alpha > 0.0 {
            S::from_f64_lossy(m) / S::from_f64_lossy(alpha)
        } else if m > 0.0 {
            // every score so far was zero; any positive score is an improvement
            hi.clone()
        } else {
            S::one()
        };
        let gamma = clamp(raw, &lo, &hi);
        Ok(self.apply_factor(space, sampled, gamma, config.update_policy, config.exclusion_floor))
    }

    /// Penalizes the pairs of a combination whose evaluation failed, with the
    /// fixed failure factor. The score history is left alone.
    pub fn record_failure(
        &mut self,
        space: &SearchSpace,
        sampled: &Combination,
        config: &SearchConfig,
    ) -> Result<UpdateOutcome, SearchError> {
        self.check_space(space)?;
        space.check(sampled)?;
        let beta = S::from_f64_lossy(config.failure_factor);
        Ok(self.apply_factor(space, sampled, beta, config.update_policy, config.exclusion_floor))
    }

    /// Multiplies every non-excluded entry sharing a pair with `sampled` by
    /// `gamma` (per policy), excludes entries below `floor / total`, then
    /// renormalizes. A factor of exactly one leaves the state untouched.
    pub fn apply_factor(
        &mut self,
        space: &SearchSpace,
        sampled: &Combination,
        gamma: S,
        policy: UpdatePolicy,
        floor: f64,
    ) -> UpdateOutcome {
        if gamma == S::one() {
            return UpdateOutcome { skipped: true, ..Default::default() };
        }
        let pairs = space.pair_count();
        let powers: Vec<S> = (0..=pairs).map(|p| gamma.powu(p)).collect();
        let sampled = sampled.indices();
        for (flat, combo) in space.combinations().enumerate() {
            if self.excluded[flat] {
                continue;
            }
            let shared = shared_pairs_unchecked(combo.indices(), sampled);
            if shared == 0 {
                continue;
            }
            let factor = match policy {
                UpdatePolicy::Once => &powers[1],
                UpdatePolicy::PerPair => &powers[shared as usize],
            };
            self.u[flat] = self.u[flat].clone() * factor.clone();
        }

        let mut outcome = UpdateOutcome::default();
        if floor > 0.0 {
            let threshold = S::from_f64_lossy(floor) / S::from_u64(space.total()).expect("count fits");
            let below: Vec<usize> =
                (0..self.u.len()).filter(|&i| !self.excluded[i] && self.u[i] < threshold).collect();
            let survivors = self.active_count() - below.len();
            let keep = if survivors == 0 {
                // keep the largest entry, lowest index on ties
                let mut best = below[0];
                for &i in &below[1..] {
                    if self.u[i] > self.u[best] {
                        best = i;
                    }
                }
                warn!(
                    "every remaining combination fell below the exclusion floor; keeping flat index {best}"
                );
                outcome.degenerate = true;
                Some(best)
            } else {
                None
            };
            for i in below {
                if Some(i) == keep {
                    continue;
                }
                self.u[i] = S::zero();
                self.excluded[i] = true;
                outcome.newly_excluded += 1;
            }
        }
        self.renormalize();
        outcome
    }

    fn renormalize(&mut self) {
        let total = self.active_mass();
        if total == S::one() || !total.is_positive_scalar() {
            return;
        }
        for (mass, &excluded) in self.u.iter_mut().zip(&self.excluded) {
            if !excluded {
                *mass = mass.clone() / total.clone();
            }
        }
    }

    fn check_space(&self, space: &SearchSpace) -> Result<(), SearchError> {
        if self.u.len() as u64 != space.total() {
            return Err(SearchError::StateMismatch { state: self.u.len(), space: space.total() });
        }
        Ok(())
    }

    /// Checks the distribution invariants: non-negative entries, excluded
    /// entries exactly zero, at least one live entry, and active mass within
    /// `tolerance` of one.
    pub fn check_invariants(&self, tolerance: f64) -> Result<(), String> {
        for (i, (mass, &excluded)) in self.u.iter().zip(&self.excluded).enumerate() {
            if *mass < S::zero() {
                return Err(format!("entry {i} is negative: {mass:?}"));
            }
            if excluded && *mass != S::zero() {
                return Err(format!("excluded entry {i} has mass {mass:?}"));
            }
        }
        if self.active_count() == 0 {
            return Err("no active entry".into());
        }
        let total = self.active_mass().to_f64_lossy();
        if (total - 1.0).abs() > tolerance {
            return Err(format!("active mass sums to {total}"));
        }
        Ok(())
    }
}

mod rng_snapshot {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    /// The RNG is persisted as its 32-byte key plus stream and word position.
    #[derive(Serialize, Deserialize)]
    #[serde(deny_unknown_fields)]
    struct Snapshot {
        key: String,
        stream: u64,
        word_pos: u128,
    }

    pub fn serialize<Ser: Serializer>(rng: &ChaCha8Rng, ser: Ser) -> Result<Ser::Ok, Ser::Error> {
        let key: String = rng.get_seed().iter().map(|b| format!("{b:02x}")).collect();
        Snapshot { key, stream: rng.get_stream(), word_pos: rng.get_word_pos() }.serialize(ser)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> Result<ChaCha8Rng, D::Error> {
        use serde::de::Error;
        let snap = Snapshot::deserialize(de)?;
        if snap.key.len() != 64 {
            return Err(D::Error::custom("rng key must be 64 hex digits"));
        }
        let mut seed = [0u8; 32];
        for (i, byte) in seed.iter_mut().enumerate() {
            *byte = u8::from_str_radix(&snap.key[2 * i..2 * i + 2], 16)
                .map_err(|_| D::Error::custom("rng key is not hex"))?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_stream(snap.stream);
        rng.set_word_pos(snap.word_pos);
        Ok(rng)
    }
}
