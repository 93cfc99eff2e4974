//! Fitting `(a, b, c)` to observed feature counts.
//!
//! Three procedures are available: an exhaustive grid over the canonical
//! region `a >= c`, multistart bounded Nelder–Mead, and leading-term
//! matching, which solves the dominant-power equations for edges and
//! hairpins in closed form and then picks `b` by a one-dimensional search on
//! the triangle equation. [`fit_best`] runs all three and keeps the lowest
//! objective.

use std::cmp::Ordering;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::features::{Feature, FeatureCounts};
use crate::moments::{expected_features, ExpectedFeatures};
use crate::objective::{objective_from_expected, objective_value, ObjectiveSpec, SpecError};
use crate::optimize::{lex_cmp, NelderMead};
use crate::params::{KroneckerParams, ParamError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FitError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("leading-term matching needs r >= 1")]
    ZeroPower,
    #[error("leading-term matching needs a positive {0} count")]
    MissingFeature(Feature),
    #[error(
        "the leading-term equations do not have real valued solutions \
         (need h <= e^2 <= 2h, got e^2 = {e_squared:.6}, h = {h:.6}); \
         the degree variance is smaller than the degree mean"
    )]
    Infeasible { e_squared: f64, h: f64 },
    #[error("partial fits leave out exactly one feature; the objective uses {0}")]
    NotPartial(usize),
    #[error("every start produced a non-finite objective")]
    NoFiniteStart,
    #[error("all fitting procedures failed: {0}")]
    AllMethodsFailed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMethod {
    Direct,
    Grid,
    Leading,
    Best,
}

impl FitMethod {
    pub fn name(self) -> &'static str {
        match self {
            FitMethod::Direct => "direct",
            FitMethod::Grid => "grid",
            FitMethod::Leading => "leading",
            FitMethod::Best => "best",
        }
    }
}

impl std::str::FromStr for FitMethod {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "direct" => Ok(FitMethod::Direct),
            "grid" => Ok(FitMethod::Grid),
            "leading" => Ok(FitMethod::Leading),
            "best" | "all" => Ok(FitMethod::Best),
            other => Err(format!(
                "unknown method {other:?} (expected direct, grid, leading or best)"
            )),
        }
    }
}

impl std::fmt::Display for FitMethod {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    /// Random starts for the direct search.
    pub starts: usize,
    /// Grid resolution: each coordinate takes the values `k / grid_points`,
    /// `k = 0..=grid_points`.
    pub grid_points: usize,
    pub seed: u64,
    /// Step of the `b` search in leading-term matching.
    pub leading_step: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            starts: 50,
            grid_points: 100,
            seed: 0,
            leading_step: 1e-4,
        }
    }
}

/// `E(F) / F_obs` per feature; `None` when the observed count is zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct FeatureRatios {
    pub edges: Option<f64>,
    pub hairpins: Option<f64>,
    pub tripins: Option<f64>,
    pub triangles: Option<f64>,
}

impl FeatureRatios {
    pub fn new(expected: &ExpectedFeatures, observed: &FeatureCounts) -> Self {
        let ratio = |f: Feature| {
            let obs = observed.get(f);
            (obs > 0).then(|| expected.get(f) / obs as f64)
        };
        FeatureRatios {
            edges: ratio(Feature::Edges),
            hairpins: ratio(Feature::Hairpins),
            tripins: ratio(Feature::Tripins),
            triangles: ratio(Feature::Triangles),
        }
    }

    pub fn get(&self, f: Feature) -> Option<f64> {
        match f {
            Feature::Edges => self.edges,
            Feature::Hairpins => self.hairpins,
            Feature::Tripins => self.tripins,
            Feature::Triangles => self.triangles,
        }
    }
}

/// Transformed counts `(2E)^{1/r}`, `(2H)^{1/r}`, `(6Δ)^{1/r}`, `(6T)^{1/r}`
/// and the solved sums `x = a + b`, `y = b + c` of the leading-term equations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeadingTransforms {
    pub e: f64,
    pub h: f64,
    pub delta: f64,
    pub t: f64,
    pub x: f64,
    pub y: f64,
}

impl LeadingTransforms {
    pub fn new(observed: &FeatureCounts, r: u32) -> Result<Self, FitError> {
        if r == 0 {
            return Err(FitError::ZeroPower);
        }
        for f in [Feature::Edges, Feature::Hairpins, Feature::Triangles] {
            if observed.get(f) == 0 {
                return Err(FitError::MissingFeature(f));
            }
        }
        let root = |count: u64, factor: f64| (factor * count as f64).powf(1.0 / f64::from(r));
        let e = root(observed.edges, 2.0);
        let h = root(observed.hairpins, 2.0);
        let delta = root(observed.triangles, 6.0);
        let t = root(observed.tripins, 6.0);
        let discriminant = 2.0 * h - e * e;
        if discriminant < 0.0 || e < discriminant.sqrt() {
            return Err(FitError::Infeasible {
                e_squared: e * e,
                h,
            });
        }
        let s = discriminant.sqrt();
        Ok(LeadingTransforms {
            e,
            h,
            delta,
            t,
            x: 0.5 * (e + s),
            y: 0.5 * (e - s),
        })
    }
}

/// Degree-sequence form of the leading-term feasibility condition:
/// `sum d(d-1) <= (sum d)^2 <= N sum d(d-1)` with `N = 2^r`.
pub fn leading_feasible_by_degrees(degrees: &[u64], r: u32) -> bool {
    let sum: u128 = degrees.iter().map(|&d| u128::from(d)).sum();
    let pairs: u128 = degrees
        .iter()
        .map(|&d| u128::from(d) * u128::from(d.saturating_sub(1)))
        .sum();
    let n = 1u128 << r;
    pairs <= sum * sum && sum * sum <= n * pairs
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeldOut {
    pub feature: Feature,
    /// `E(F) / F_obs` for the feature left out of the objective.
    pub ratio: Option<f64>,
}

/// How one procedure fared inside [`fit_best`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodOutcome {
    pub method: FitMethod,
    pub params: Option<KroneckerParams>,
    pub objective_value: Option<f64>,
    pub elapsed_seconds: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub method: FitMethod,
    /// Procedure whose parameters were kept; differs from `method` only for
    /// [`FitMethod::Best`].
    pub selected: FitMethod,
    pub params: KroneckerParams,
    pub objective: ObjectiveSpec,
    pub objective_value: f64,
    pub expected: ExpectedFeatures,
    pub feature_ratios: FeatureRatios,
    /// `2^r`, the vertex count of the fitted model.
    pub vertices: u64,
    pub elapsed_seconds: f64,
    pub warnings: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub diagnostics: Vec<MethodOutcome>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub held_out: Option<HeldOut>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub leading: Option<LeadingTransforms>,
}

fn finish(
    method: FitMethod,
    params: KroneckerParams,
    spec: &ObjectiveSpec,
    observed: &FeatureCounts,
    started: Instant,
    mut warnings: Vec<String>,
) -> FitResult {
    let params = params.canonical();
    let expected = expected_features(&params);
    let objective = objective_from_expected(&expected, spec, observed);
    warnings.extend(objective.warnings);
    FitResult {
        method,
        selected: method,
        params,
        objective: *spec,
        objective_value: objective.value,
        expected,
        feature_ratios: FeatureRatios::new(&expected, observed),
        vertices: params.num_vertices(),
        elapsed_seconds: started.elapsed().as_secs_f64(),
        warnings,
        diagnostics: Vec::new(),
        held_out: None,
        leading: None,
    }
}

fn point_objective(abc: &[f64; 3], r: u32, spec: &ObjectiveSpec, observed: &FeatureCounts) -> f64 {
    match KroneckerParams::as_given(abc[0], abc[1], abc[2], r) {
        Ok(p) => objective_value(&expected_features(&p), spec, observed),
        Err(_) => f64::INFINITY,
    }
}

/// Orders candidates by objective, then lexicographically by `(a, b, c)`.
fn candidate_cmp(x: &(f64, [f64; 3]), y: &(f64, [f64; 3])) -> Ordering {
    x.0.total_cmp(&y.0).then_with(|| lex_cmp(&x.1, &y.1))
}

/// Exhaustive search over `{k / points : k = 0..=points}^3` restricted to
/// `a >= c`.
pub fn fit_grid(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    points_per_dim: usize,
) -> Result<FitResult, FitError> {
    spec.validate_for_fit()?;
    let started = Instant::now();
    KroneckerParams::new(0.0, 0.0, 0.0, r)?;
    let points = points_per_dim.max(1);
    let level = |k: usize| k as f64 / points as f64;
    let best = (0..=points)
        .into_par_iter()
        .map(|ia| {
            let a = level(ia);
            let mut best = (f64::INFINITY, [f64::INFINITY; 3]);
            for ib in 0..=points {
                for ic in 0..=ia {
                    let abc = [a, level(ib), level(ic)];
                    let candidate = (point_objective(&abc, r, spec, observed), abc);
                    if candidate_cmp(&candidate, &best) == Ordering::Less {
                        best = candidate;
                    }
                }
            }
            best
        })
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(candidate_cmp)
        .expect("grid has at least one point");
    let [a, b, c] = best.1;
    let params = KroneckerParams::new(a, b, c, r)?;
    Ok(finish(
        FitMethod::Grid,
        params,
        spec,
        observed,
        started,
        Vec::new(),
    ))
}

/// Best of `starts` bounded Nelder–Mead runs from uniform random starts in
/// the canonical region. Deterministic for a given `(seed, starts)`.
pub fn fit_direct(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    starts: usize,
    seed: u64,
) -> Result<FitResult, FitError> {
    spec.validate_for_fit()?;
    let started = Instant::now();
    KroneckerParams::new(0.0, 0.0, 0.0, r)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let initial: Vec<[f64; 3]> = (0..starts.max(1))
        .map(|_| {
            let (a, b, c): (f64, f64, f64) = (rng.gen(), rng.gen(), rng.gen());
            [a.max(c), b, a.min(c)]
        })
        .collect();
    let search = NelderMead::default();
    let runs: Vec<_> = initial
        .par_iter()
        .map(|&x0| search.minimize(|x: &[f64; 3]| point_objective(x, r, spec, observed), x0))
        .collect();
    let best = runs
        .iter()
        .filter(|m| m.value.is_finite())
        .min_by(|x, y| candidate_cmp(&(x.value, x.point), &(y.value, y.point)))
        .ok_or(FitError::NoFiniteStart)?;
    let mut warnings = Vec::new();
    if !best.converged {
        warnings.push(format!(
            "best direct start stopped after {} iterations without meeting the simplex tolerance",
            best.iterations
        ));
    }
    let [a, b, c] = best.point;
    let params = KroneckerParams::new(a, b, c, r)?;
    Ok(finish(
        FitMethod::Direct,
        params,
        spec,
        observed,
        started,
        warnings,
    ))
}

/// Leading-term matching with the default `b` step of `1e-4`.
pub fn fit_leading(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
) -> Result<FitResult, FitError> {
    fit_leading_with_step(observed, r, spec, FitOptions::default().leading_step)
}

/// Solves the edge and hairpin leading-term equations for `a + b` and
/// `b + c`, then scans `b` in `[0, 1]` for the smallest triangle mismatch
/// `|a^3 + c^3 + 3b^2(a + c) - δ|` with `a = x - b`, `c = y - b` clamped to
/// `[0, 1]`. The objective is only evaluated on the result.
pub fn fit_leading_with_step(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    step: f64,
) -> Result<FitResult, FitError> {
    spec.validate_for_fit()?;
    let started = Instant::now();
    KroneckerParams::new(0.0, 0.0, 0.0, r)?;
    let lt = LeadingTransforms::new(observed, r)?;
    let steps = (1.0 / step).round().max(1.0) as usize;
    let mut best = (f64::INFINITY, [f64::INFINITY; 3]);
    for k in 0..=steps {
        let b = k as f64 / steps as f64;
        let a = (lt.x - b).clamp(0.0, 1.0);
        let c = (lt.y - b).clamp(0.0, 1.0);
        let mismatch = (a.powi(3) + c.powi(3) + 3.0 * b * b * (a + c) - lt.delta).abs();
        let candidate = (mismatch, [a, b, c]);
        if candidate_cmp(&candidate, &best) == Ordering::Less {
            best = candidate;
        }
    }
    let [a, b, c] = best.1;
    let params = KroneckerParams::new(a, b, c, r)?;
    let mut result = finish(
        FitMethod::Leading,
        params,
        spec,
        observed,
        started,
        Vec::new(),
    );
    result.leading = Some(lt);
    Ok(result)
}

/// Runs direct, grid and leading-term fits and keeps the lowest objective.
/// An infeasible leading-term fit is skipped.
pub fn fit_best(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    spec.validate_for_fit()?;
    let started = Instant::now();
    let attempts = [
        (
            FitMethod::Direct,
            fit_direct(observed, r, spec, options.starts, options.seed),
        ),
        (
            FitMethod::Grid,
            fit_grid(observed, r, spec, options.grid_points),
        ),
        (
            FitMethod::Leading,
            fit_leading_with_step(observed, r, spec, options.leading_step),
        ),
    ];

    let mut diagnostics = Vec::new();
    let mut winner: Option<FitResult> = None;
    let mut failures = Vec::new();
    for (method, attempt) in attempts {
        match attempt {
            Ok(result) => {
                diagnostics.push(MethodOutcome {
                    method,
                    params: Some(result.params),
                    objective_value: Some(result.objective_value),
                    elapsed_seconds: result.elapsed_seconds,
                    error: None,
                });
                let better = match &winner {
                    None => true,
                    Some(w) => {
                        candidate_cmp(
                            &(result.objective_value, result.params.abc()),
                            &(w.objective_value, w.params.abc()),
                        ) == Ordering::Less
                    }
                };
                if better {
                    winner = Some(result);
                }
            }
            Err(e) => {
                failures.push(format!("{method}: {e}"));
                diagnostics.push(MethodOutcome {
                    method,
                    params: None,
                    objective_value: None,
                    elapsed_seconds: 0.0,
                    error: Some(e.to_string()),
                });
            }
        }
    }
    let mut result = winner.ok_or_else(|| FitError::AllMethodsFailed(failures.join("; ")))?;
    for failure in failures {
        result.warnings.push(format!("skipped {failure}"));
    }
    result.method = FitMethod::Best;
    result.diagnostics = diagnostics;
    result.elapsed_seconds = started.elapsed().as_secs_f64();
    Ok(result)
}

/// [`fit_best`] on a three-feature objective, additionally reporting the
/// left-out feature's ratio as a cross-validated check.
pub fn fit_partial(
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    if spec.features.len() != 3 {
        return Err(FitError::NotPartial(spec.features.len()));
    }
    let mut result = fit_best(observed, r, spec, options)?;
    let feature = spec
        .features
        .complement()
        .next()
        .expect("three of four features leaves one out");
    result.held_out = Some(HeldOut {
        feature,
        ratio: result.feature_ratios.get(feature),
    });
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::FeatureSet;

    fn rounded_counts(p: &KroneckerParams) -> FeatureCounts {
        let e = expected_features(p);
        FeatureCounts {
            vertices: p.num_vertices(),
            edges: e.edges.round() as u64,
            hairpins: e.hairpins.round() as u64,
            tripins: e.tripins.round() as u64,
            triangles: e.triangles.round() as u64,
        }
    }

    #[test]
    fn grid_hits_exact_grid_point() {
        let truth = KroneckerParams::new(0.9, 0.5, 0.2, 16).unwrap();
        let observed = rounded_counts(&truth);
        let fit = fit_grid(&observed, 16, &ObjectiveSpec::squared_relative(), 100).unwrap();
        assert_eq!(fit.params.abc(), [0.9, 0.5, 0.2]);
        // Only integer rounding of the counts remains.
        assert!(fit.objective_value < 1e-5, "{}", fit.objective_value);
    }

    #[test]
    fn grid_is_canonical_and_deterministic() {
        let truth = KroneckerParams::new(0.3, 0.6, 0.9, 10).unwrap();
        let observed = rounded_counts(&truth);
        let spec = ObjectiveSpec::squared_relative();
        let x = fit_grid(&observed, 10, &spec, 20).unwrap();
        let y = fit_grid(&observed, 10, &spec, 20).unwrap();
        assert_eq!(x.params, y.params);
        assert!(x.params.is_canonical());
        assert!((x.params.a() - 0.9).abs() < 0.051 && (x.params.c() - 0.3).abs() < 0.051);
    }

    #[test]
    fn direct_round_trip() {
        let truth = KroneckerParams::new(0.8, 0.4, 0.3, 12).unwrap();
        let observed = rounded_counts(&truth);
        let spec = ObjectiveSpec::squared_relative();
        let fit = fit_direct(&observed, 12, &spec, 20, 1).unwrap();
        for (got, want) in fit.params.abc().iter().zip(truth.abc()) {
            assert!((got - want).abs() < 0.02, "{:?}", fit.params);
        }
        let again = fit_direct(&observed, 12, &spec, 20, 1).unwrap();
        assert_eq!(fit.params, again.params);
        assert_eq!(fit.objective_value, again.objective_value);
    }

    #[test]
    fn leading_inverts_forward_constructed_transforms() {
        // Counts whose r-th roots equal the leading-term values exactly.
        let (a, b, c, r) = (0.9f64, 0.5f64, 0.2f64, 30u32);
        let target_e = a + 2.0 * b + c;
        let target_h = (a + b).powi(2) + (b + c).powi(2);
        let target_d = a.powi(3) + c.powi(3) + 3.0 * b * b * (a + c);
        let observed = FeatureCounts {
            vertices: 1 << r,
            edges: (target_e.powi(r as i32) / 2.0).round() as u64,
            hairpins: (target_h.powi(r as i32) / 2.0).round() as u64,
            tripins: 1,
            triangles: (target_d.powi(r as i32) / 6.0).round() as u64,
        };
        let fit = fit_leading(&observed, r, &ObjectiveSpec::squared_relative()).unwrap();
        let lt = fit.leading.unwrap();
        assert!(lt.x >= lt.y);
        assert!((lt.x - (a + b)).abs() < 1e-6 && (lt.y - (b + c)).abs() < 1e-6);
        for (got, want) in fit.params.abc().iter().zip([a, b, c]) {
            assert!((got - want).abs() <= 2e-4, "{:?}", fit.params);
        }
    }

    #[test]
    fn leading_rejects_regular_graphs() {
        // A 100-cycle: every degree is 2, so H = E = 100.
        let observed = FeatureCounts {
            vertices: 100,
            edges: 100,
            hairpins: 100,
            tripins: 0,
            triangles: 1,
        };
        let err = fit_leading(&observed, 7, &ObjectiveSpec::squared_relative()).unwrap_err();
        assert!(matches!(err, FitError::Infeasible { .. }));
        assert!(err
            .to_string()
            .contains("do not have real valued solutions"));
        assert!(!leading_feasible_by_degrees(&[2; 100], 7));
    }

    #[test]
    fn leading_needs_positive_counts() {
        let observed = FeatureCounts {
            vertices: 10,
            edges: 10,
            hairpins: 30,
            tripins: 5,
            triangles: 0,
        };
        assert_eq!(
            fit_leading(&observed, 4, &ObjectiveSpec::squared_relative()).unwrap_err(),
            FitError::MissingFeature(Feature::Triangles)
        );
        assert_eq!(
            fit_leading(&observed, 0, &ObjectiveSpec::squared_relative()).unwrap_err(),
            FitError::ZeroPower
        );
    }

    #[test]
    fn best_is_no_worse_than_each_method() {
        let truth = KroneckerParams::new(0.95, 0.55, 0.3, 11).unwrap();
        let observed = rounded_counts(&truth);
        let spec = ObjectiveSpec::squared_relative();
        let options = FitOptions {
            starts: 10,
            grid_points: 25,
            ..FitOptions::default()
        };
        let best = fit_best(&observed, 11, &spec, &options).unwrap();
        assert_eq!(best.method, FitMethod::Best);
        assert_eq!(best.diagnostics.len(), 3);
        for d in &best.diagnostics {
            if let Some(v) = d.objective_value {
                assert!(best.objective_value <= v);
            }
        }
    }

    #[test]
    fn best_survives_infeasible_leading() {
        let observed = FeatureCounts {
            vertices: 100,
            edges: 100,
            hairpins: 100,
            tripins: 0,
            triangles: 1,
        };
        let options = FitOptions {
            starts: 4,
            grid_points: 10,
            ..FitOptions::default()
        };
        let fit = fit_best(&observed, 7, &ObjectiveSpec::squared_relative(), &options).unwrap();
        assert_ne!(fit.selected, FitMethod::Leading);
        assert!(fit.warnings.iter().any(|w| w.contains("leading")));
    }

    #[test]
    fn partial_fit_reports_held_out_ratio() {
        let truth = KroneckerParams::new(0.9, 0.5, 0.3, 10).unwrap();
        let e = expected_features(&truth);
        let observed = rounded_counts(&truth);
        let spec = ObjectiveSpec::squared_relative()
            .with_features(FeatureSet::all().without(Feature::Triangles))
            .unwrap();
        let options = FitOptions {
            starts: 10,
            grid_points: 20,
            ..FitOptions::default()
        };
        let fit = fit_partial(&observed, 10, &spec, &options).unwrap();
        let held = fit.held_out.unwrap();
        assert_eq!(held.feature, Feature::Triangles);
        let expected_ratio = e.triangles / observed.triangles as f64;
        assert!((held.ratio.unwrap() - expected_ratio).abs() < 0.05);

        assert_eq!(
            fit_partial(&observed, 10, &ObjectiveSpec::squared_relative(), &options).unwrap_err(),
            FitError::NotPartial(4)
        );
    }

    #[test]
    fn two_feature_objectives_cannot_fit() {
        let spec = ObjectiveSpec::squared_relative()
            .with_features("edges,hairpins".parse().unwrap())
            .unwrap();
        let observed = FeatureCounts::default();
        assert!(matches!(
            fit_best(&observed, 5, &spec, &FitOptions::default()),
            Err(FitError::Spec(SpecError::TooFewFeatures(2)))
        ));
    }
}
