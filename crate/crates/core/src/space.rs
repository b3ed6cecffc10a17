//! Categorical search spaces and their combinations.
//!
//! A space is an ordered list of named dimensions. Combinations are encoded
//! to a flat index in mixed radix, row-major over dimension order (the last
//! dimension varies fastest).

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::SpaceError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Dimension {
    pub name: String,
    pub values: Vec<String>,
}

impl Dimension {
    pub fn new<N, I, V>(name: N, values: I) -> Self
    where
        N: Into<String>,
        I: IntoIterator<Item = V>,
        V: Into<String>,
    {
        Dimension { name: name.into(), values: values.into_iter().map(Into::into).collect() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn position(&self, label: &str) -> Option<usize> {
        self.values.iter().position(|v| v == label)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawSpace", into = "RawSpace")]
pub struct SearchSpace {
    dimensions: Vec<Dimension>,
    total: u64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    dimensions: Vec<Dimension>,
}

impl TryFrom<RawSpace> for SearchSpace {
    type Error = SpaceError;

    fn try_from(raw: RawSpace) -> Result<Self, Self::Error> {
        SearchSpace::new(raw.dimensions)
    }
}

impl From<SearchSpace> for RawSpace {
    fn from(space: SearchSpace) -> Self {
        RawSpace { dimensions: space.dimensions }
    }
}

/// Largest combination count accepted. The dense probability vector is
/// allocated up front, so this is a memory bound as much as an index bound.
pub const MAX_COMBINATIONS: u64 = 1 << 32;

impl SearchSpace {
    pub fn new(dimensions: Vec<Dimension>) -> Result<Self, SpaceError> {
        if dimensions.len() < 2 {
            return Err(SpaceError::TooFewDimensions(dimensions.len()));
        }
        let mut names = HashSet::new();
        let mut total: u64 = 1;
        for dim in &dimensions {
            if dim.is_empty() {
                return Err(SpaceError::EmptyDimension(dim.name.clone()));
            }
            if !names.insert(dim.name.as_str()) {
                return Err(SpaceError::DuplicateDimension(dim.name.clone()));
            }
            let mut seen = HashSet::new();
            for label in &dim.values {
                if !seen.insert(label.as_str()) {
                    return Err(SpaceError::DuplicateLabel {
                        dimension: dim.name.clone(),
                        label: label.clone(),
                    });
                }
            }
            total = total.checked_mul(dim.len() as u64).ok_or(SpaceError::TooLarge)?;
        }
        if total > MAX_COMBINATIONS {
            return Err(SpaceError::TooLarge);
        }
        Ok(SearchSpace { dimensions, total })
    }

    /// Space with dimensions `d0, d1, ...` whose values are `"0", "1", ...`.
    pub fn from_sizes(sizes: &[usize]) -> Result<Self, SpaceError> {
        Self::new(
            sizes
                .iter()
                .enumerate()
                .map(|(i, &n)| Dimension::new(format!("d{i}"), (0..n).map(|v| v.to_string())))
                .collect(),
        )
    }

    pub fn dimensions(&self) -> &[Dimension] {
        &self.dimensions
    }

    pub fn dimension_count(&self) -> usize {
        self.dimensions.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.dimensions.iter().map(Dimension::len).collect()
    }

    /// Number of combinations, i.e. the product of dimension sizes.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn dimension_index(&self, name: &str) -> Option<usize> {
        self.dimensions.iter().position(|d| d.name == name)
    }

    /// Number of unordered dimension pairs, C(D, 2).
    pub fn pair_count(&self) -> u32 {
        let d = self.dimensions.len() as u32;
        d * (d - 1) / 2
    }

    pub fn check(&self, combination: &Combination) -> Result<(), SpaceError> {
        if combination.0.len() != self.dimensions.len() {
            return Err(SpaceError::Arity { expected: self.dimensions.len(), got: combination.0.len() });
        }
        for (dim, &index) in self.dimensions.iter().zip(&combination.0) {
            if index >= dim.len() {
                return Err(SpaceError::IndexOutOfRange {
                    dimension: dim.name.clone(),
                    index,
                    size: dim.len(),
                });
            }
        }
        Ok(())
    }

    pub fn encode(&self, combination: &Combination) -> Result<u64, SpaceError> {
        self.check(combination)?;
        Ok(self
            .dimensions
            .iter()
            .zip(&combination.0)
            .fold(0u64, |flat, (dim, &i)| flat * dim.len() as u64 + i as u64))
    }

    pub fn decode(&self, flat: u64) -> Result<Combination, SpaceError> {
        if flat >= self.total {
            return Err(SpaceError::FlatOutOfRange(flat));
        }
        let mut rest = flat;
        let mut indices = vec![0usize; self.dimensions.len()];
        for (slot, dim) in indices.iter_mut().zip(&self.dimensions).rev() {
            let n = dim.len() as u64;
            *slot = (rest % n) as usize;
            rest /= n;
        }
        Ok(Combination(indices))
    }

    pub fn labels<'a>(&'a self, combination: &Combination) -> Result<Vec<&'a str>, SpaceError> {
        self.check(combination)?;
        Ok(self.dimensions.iter().zip(&combination.0).map(|(dim, &i)| dim.values[i].as_str()).collect())
    }

    /// Resolves one label per dimension, in dimension order.
    pub fn combination_of<S: AsRef<str>>(&self, labels: &[S]) -> Result<Combination, SpaceError> {
        if labels.len() != self.dimensions.len() {
            return Err(SpaceError::Arity { expected: self.dimensions.len(), got: labels.len() });
        }
        self.dimensions
            .iter()
            .zip(labels)
            .map(|(dim, label)| {
                dim.position(label.as_ref()).ok_or_else(|| SpaceError::UnknownLabel {
                    dimension: dim.name.clone(),
                    label: label.as_ref().to_string(),
                })
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Combination)
    }

    /// `(N, F, C)`-style rendering used in error messages and logs.
    pub fn describe(&self, combination: &Combination) -> String {
        match self.labels(combination) {
            Ok(labels) => format!("({})", labels.join(", ")),
            Err(_) => format!("{combination}"),
        }
    }

    pub fn combinations(&self) -> impl Iterator<Item = Combination> + '_ {
        (0..self.total).map(move |flat| self.decode(flat).expect("in range"))
    }
}

/// One value index per dimension, in dimension order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Combination(pub Vec<usize>);

impl Combination {
    pub fn new(indices: Vec<usize>) -> Self {
        Combination(indices)
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Combination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, idx) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{idx}")?;
        }
        write!(f, "]")
    }
}

/// Number of unordered dimension pairs `{i, j}` on which `a` and `b` agree
/// in both coordinates.
///
/// If `q` coordinates agree, every pair drawn from them qualifies, so the
/// count is `q * (q - 1) / 2`.
pub fn shared_pair_count(a: &Combination, b: &Combination) -> Result<u32, SpaceError> {
    if a.0.len() != b.0.len() {
        return Err(SpaceError::Arity { expected: a.0.len(), got: b.0.len() });
    }
    Ok(shared_pairs_unchecked(&a.0, &b.0))
}

#[inline]
pub(crate) fn shared_pairs_unchecked(a: &[usize], b: &[usize]) -> u32 {
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as u32;
    agree * agree.saturating_sub(1) / 2
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(v: &[usize]) -> Combination {
        Combination(v.to_vec())
    }

    #[test]
    fn rejects_invalid_spaces() {
        assert_eq!(SearchSpace::new(vec![Dimension::new("a", ["x"])]), Err(SpaceError::TooFewDimensions(1)));
        let empty = SearchSpace::new(vec![
            Dimension::new("a", ["x"]),
            Dimension::new("framework", Vec::<String>::new()),
        ]);
        assert_eq!(empty, Err(SpaceError::EmptyDimension("framework".into())));
        let dup = SearchSpace::new(vec![Dimension::new("a", ["x"]), Dimension::new("a", ["y"])]);
        assert_eq!(dup, Err(SpaceError::DuplicateDimension("a".into())));
        let dup_label = SearchSpace::new(vec![Dimension::new("a", ["x", "x"]), Dimension::new("b", ["y"])]);
        assert!(matches!(dup_label, Err(SpaceError::DuplicateLabel { .. })));
        assert_eq!(SearchSpace::from_sizes(&[1 << 20, 1 << 20]), Err(SpaceError::TooLarge));
    }

    #[test]
    fn flat_index_is_row_major() {
        let space = SearchSpace::from_sizes(&[2, 3, 4]).unwrap();
        assert_eq!(space.total(), 24);
        assert_eq!(space.encode(&c(&[0, 0, 1])).unwrap(), 1);
        assert_eq!(space.encode(&c(&[0, 1, 0])).unwrap(), 4);
        assert_eq!(space.encode(&c(&[1, 0, 0])).unwrap(), 12);
        assert_eq!(space.decode(23).unwrap(), c(&[1, 2, 3]));
        assert!(space.decode(24).is_err());
        assert!(space.encode(&c(&[0, 3, 0])).is_err());
    }

    #[test]
    fn encode_decode_exhaustive_up_to_10x10x10() {
        for sizes in [[1, 1, 1], [2, 3, 4], [10, 10, 10], [7, 1, 9]] {
            let space = SearchSpace::from_sizes(&sizes).unwrap();
            for flat in 0..space.total() {
                let combo = space.decode(flat).unwrap();
                assert_eq!(space.encode(&combo).unwrap(), flat);
            }
        }
    }

    #[test]
    fn shared_pair_examples() {
        assert_eq!(shared_pair_count(&c(&[0, 0, 0]), &c(&[0, 0, 0])).unwrap(), 3);
        assert_eq!(shared_pair_count(&c(&[0, 0, 0]), &c(&[0, 0, 1])).unwrap(), 1);
        assert_eq!(shared_pair_count(&c(&[0, 0, 0]), &c(&[1, 1, 0])).unwrap(), 0);
        assert!(shared_pair_count(&c(&[0, 0]), &c(&[0, 0, 0])).is_err());
    }

    #[test]
    fn labels_and_lookup() {
        let space = SearchSpace::new(vec![
            Dimension::new("network", ["a", "b"]),
            Dimension::new("framework", ["tvm"]),
        ])
        .unwrap();
        let combo = space.combination_of(&["b", "tvm"]).unwrap();
        assert_eq!(combo, c(&[1, 0]));
        assert_eq!(space.describe(&combo), "(b, tvm)");
        assert!(matches!(space.combination_of(&["z", "tvm"]), Err(SpaceError::UnknownLabel { .. })));
    }

    #[test]
    fn serde_validates() {
        let bad = r#"{"dimensions":[{"name":"a","values":["x"]}]}"#;
        assert!(serde_json::from_str::<SearchSpace>(bad).is_err());
        let good = r#"{"dimensions":[{"name":"a","values":["x"]},{"name":"b","values":["y","z"]}]}"#;
        let space: SearchSpace = serde_json::from_str(good).unwrap();
        assert_eq!(space.total(), 2);
    }
}
