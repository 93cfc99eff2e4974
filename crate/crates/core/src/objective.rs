//! Moment-matching objectives `sum_F D(F, E(F)) / N(F, E(F))`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Feature, FeatureCounts};
use crate::moments::{expected_features, ExpectedFeatures};
use crate::params::KroneckerParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("absolute distance cannot be paired with a squared normalization")]
    ForbiddenPair,
    #[error("the feature set is empty")]
    NoFeatures,
    #[error("fitting three parameters needs at least three features, got {0}")]
    TooFewFeatures(usize),
    #[error(
        "unknown objective {0:?} (expected one of dsq-f, dsq-f2, dsq-e, dsq-e2, dabs-f, dabs-e)"
    )]
    UnknownObjective(String),
    #[error("{0}")]
    BadFeature(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Distance {
    Squared,
    Absolute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    /// Divide by the observed count.
    Observed,
    /// Divide by the squared observed count.
    ObservedSquared,
    /// Divide by the expected count.
    Expected,
    /// Divide by the squared expected count.
    ExpectedSquared,
}

impl Normalization {
    fn is_squared(self) -> bool {
        matches!(
            self,
            Normalization::ObservedSquared | Normalization::ExpectedSquared
        )
    }

    fn uses_observed(self) -> bool {
        matches!(
            self,
            Normalization::Observed | Normalization::ObservedSquared
        )
    }
}

/// A non-empty subset of the four features, iterated in canonical order.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FeatureSet(u8);

impl FeatureSet {
    pub const fn all() -> Self {
        FeatureSet(0b1111)
    }

    pub fn from_features(features: impl IntoIterator<Item = Feature>) -> Self {
        FeatureSet(
            features
                .into_iter()
                .fold(0, |bits, f| bits | (1 << f.index())),
        )
    }

    pub fn contains(self, f: Feature) -> bool {
        self.0 & (1 << f.index()) != 0
    }

    pub fn without(self, f: Feature) -> Self {
        FeatureSet(self.0 & !(1 << f.index()))
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn iter(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |&f| self.contains(f))
    }

    /// Features outside the set.
    pub fn complement(self) -> impl Iterator<Item = Feature> {
        Feature::ALL.into_iter().filter(move |&f| !self.contains(f))
    }
}

impl fmt::Debug for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<_> = self.iter().map(Feature::name).collect();
        f.write_str(&names.join(","))
    }
}

impl FromStr for FeatureSet {
    type Err = SpecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.trim().eq_ignore_ascii_case("all") {
            return Ok(FeatureSet::all());
        }
        let features = s
            .split(',')
            .filter(|t| !t.trim().is_empty())
            .map(|t| t.parse::<Feature>().map_err(SpecError::BadFeature))
            .collect::<Result<Vec<_>, _>>()?;
        let set = FeatureSet::from_features(features);
        if set.is_empty() {
            return Err(SpecError::NoFeatures);
        }
        Ok(set)
    }
}

impl Serialize for FeatureSet {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.iter())
    }
}

impl<'de> Deserialize<'de> for FeatureSet {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let features = Vec::<Feature>::deserialize(deserializer)?;
        Ok(FeatureSet::from_features(features))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub distance: Distance,
    pub normalization: Normalization,
    pub features: FeatureSet,
}

impl ObjectiveSpec {
    pub fn new(
        distance: Distance,
        normalization: Normalization,
        features: FeatureSet,
    ) -> Result<Self, SpecError> {
        if distance == Distance::Absolute && normalization.is_squared() {
            return Err(SpecError::ForbiddenPair);
        }
        if features.is_empty() {
            return Err(SpecError::NoFeatures);
        }
        Ok(ObjectiveSpec {
            distance,
            normalization,
            features,
        })
    }

    /// Sum of squared relative errors over all four features.
    pub fn squared_relative() -> Self {
        ObjectiveSpec {
            distance: Distance::Squared,
            normalization: Normalization::ObservedSquared,
            features: FeatureSet::all(),
        }
    }

    pub fn with_features(self, features: FeatureSet) -> Result<Self, SpecError> {
        Self::new(self.distance, self.normalization, features)
    }

    /// Checks the extra requirement for fitting three parameters.
    pub fn validate_for_fit(&self) -> Result<(), SpecError> {
        match self.features.len() {
            n if n < 3 => Err(SpecError::TooFewFeatures(n)),
            _ => Ok(()),
        }
    }

    /// Short name such as `dsq-f2`.
    pub fn name(&self) -> &'static str {
        match (self.distance, self.normalization) {
            (Distance::Squared, Normalization::Observed) => "dsq-f",
            (Distance::Squared, Normalization::ObservedSquared) => "dsq-f2",
            (Distance::Squared, Normalization::Expected) => "dsq-e",
            (Distance::Squared, Normalization::ExpectedSquared) => "dsq-e2",
            (Distance::Absolute, Normalization::Observed) => "dabs-f",
            (Distance::Absolute, Normalization::Expected) => "dabs-e",
            (Distance::Absolute, _) => "dabs-invalid",
        }
    }
}

impl FromStr for ObjectiveSpec {
    type Err = SpecError;

    /// Parses `dsq-f`, `dsq-f2`, `dsq-e`, `dsq-e2`, `dabs-f` or `dabs-e`
    /// (all four features).
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let lower = s.trim().to_ascii_lowercase();
        let (distance, normalization) = match lower.as_str() {
            "dsq-f" => (Distance::Squared, Normalization::Observed),
            "dsq-f2" => (Distance::Squared, Normalization::ObservedSquared),
            "dsq-e" => (Distance::Squared, Normalization::Expected),
            "dsq-e2" => (Distance::Squared, Normalization::ExpectedSquared),
            "dabs-f" => (Distance::Absolute, Normalization::Observed),
            "dabs-e" => (Distance::Absolute, Normalization::Expected),
            "dabs-f2" | "dabs-e2" => return Err(SpecError::ForbiddenPair),
            _ => return Err(SpecError::UnknownObjective(s.to_string())),
        };
        ObjectiveSpec::new(distance, normalization, FeatureSet::all())
    }
}

/// An objective value plus anything noteworthy about how it was formed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Objective {
    pub value: f64,
    pub warnings: Vec<String>,
}

enum Term {
    Value(f64),
    Dropped,
    Infinite,
}

fn term(spec: &ObjectiveSpec, observed: f64, expected: f64) -> Term {
    let diff = observed - expected;
    let numerator = match spec.distance {
        Distance::Squared => diff * diff,
        Distance::Absolute => diff.abs(),
    };
    let base = if spec.normalization.uses_observed() {
        observed
    } else {
        expected
    };
    if base == 0.0 {
        if spec.normalization.uses_observed() {
            return Term::Dropped;
        }
        return if numerator == 0.0 {
            Term::Value(0.0)
        } else {
            Term::Infinite
        };
    }
    let denominator = if spec.normalization.is_squared() {
        base * base
    } else {
        base
    };
    Term::Value(numerator / denominator)
}

/// Objective value from already-computed expectations, without warnings.
pub fn objective_value(
    expected: &ExpectedFeatures,
    spec: &ObjectiveSpec,
    observed: &FeatureCounts,
) -> f64 {
    let mut total = 0.0;
    for f in spec.features.iter() {
        match term(spec, observed.get(f) as f64, expected.get(f)) {
            Term::Value(v) => total += v,
            Term::Dropped => {}
            Term::Infinite => return f64::INFINITY,
        }
    }
    total
}

/// Objective value from expectations, collecting warnings for dropped and
/// infinite terms.
pub fn objective_from_expected(
    expected: &ExpectedFeatures,
    spec: &ObjectiveSpec,
    observed: &FeatureCounts,
) -> Objective {
    let mut warnings = Vec::new();
    let mut value = 0.0;
    for f in spec.features.iter() {
        match term(spec, observed.get(f) as f64, expected.get(f)) {
            Term::Value(v) => value += v,
            Term::Dropped => warnings.push(format!(
                "observed {f} count is 0; term dropped from the {} objective",
                spec.name()
            )),
            Term::Infinite => {
                warnings.push(format!(
                    "expected {f} count is 0 but {} were observed; term is infinite",
                    observed.get(f)
                ));
                value = f64::INFINITY;
            }
        }
    }
    Objective { value, warnings }
}

pub fn evaluate_objective(
    p: &KroneckerParams,
    spec: &ObjectiveSpec,
    observed: &FeatureCounts,
) -> Objective {
    objective_from_expected(&expected_features(p), spec, observed)
}
