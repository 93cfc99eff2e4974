//! Batch experiments: synthetic recovery studies and fits to real graphs.
//!
//! A TOML file lists `[[synthetic]]` parameter sets and `[[graph]]` sources.
//! Synthetic replication `k` samples its graph with seed `seed + k` and each
//! fitted model is re-sampled with seed `seed + replications + k`.
//!
//! ```toml
//! seed = 7
//! output = "results"
//!
//! [[synthetic]]
//! name = "dense-core"
//! a = 0.99
//! b = 0.48
//! c = 0.25
//! r = 10
//! replications = 20
//!
//! [[graph]]
//! name = "ca-GrQc"
//! path = "ca-GrQc.txt"
//! r = 13
//! methods = ["direct", "grid", "leading"]
//! ```

use std::cmp::Ordering;
use std::fs::{self, File};
use std::io::{BufWriter, Read};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::estimator::{
    fit_best, fit_direct, fit_grid, fit_leading_with_step, fit_partial, FitError, FitMethod,
    FitOptions, FitResult,
};
use crate::features::{count_features, Feature, FeatureCounts, FeatureError};
use crate::generator::{GenerateError, GeneratorJob, MAX_IN_MEMORY_POWER};
use crate::graph::{choose_r, load_edge_list, GraphError, LoadReport};
use crate::objective::{FeatureSet, ObjectiveSpec, SpecError};
use crate::params::{KroneckerParams, ParamError};
use crate::report::{write_records, TableRow, TABLE_HEADER};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("config {path}: {message}")]
    Config { path: PathBuf, message: String },
    #[error("{name}: {source}")]
    Spec {
        name: String,
        #[source]
        source: SpecError,
    },
    #[error("{name}: {source}")]
    Param {
        name: String,
        #[source]
        source: ParamError,
    },
    #[error("{name}: replications must be at least 1")]
    NoReplications { name: String },
    #[error("{name}: input {path} does not exist")]
    MissingInput { name: String, path: PathBuf },
    #[error("counts file {path}: {message}")]
    Counts { path: PathBuf, message: String },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Generate(#[from] GenerateError),
    #[error("{name}, replication {replication}: {source}")]
    Fit {
        name: String,
        replication: usize,
        #[source]
        source: FitError,
    },
    #[error("writing {path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
}

fn default_objective() -> String {
    "dsq-f2".to_string()
}

fn default_features() -> FeatureSet {
    FeatureSet::all()
}

fn default_methods() -> Vec<FitMethod> {
    vec![FitMethod::Best]
}

fn default_replications() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticConfig {
    pub name: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: u32,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_features")]
    pub features: FeatureSet,
    #[serde(default = "default_methods")]
    pub methods: Vec<FitMethod>,
}

/// Extra parameter sets evaluated on a graph's counts without fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComparisonConfig {
    pub label: String,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphConfig {
    pub name: String,
    /// Edge list, or a `.json` file of feature counts.
    pub path: PathBuf,
    #[serde(default)]
    pub directed: bool,
    /// Defaults to `ceil(log2(vertices))`.
    pub r: Option<u32>,
    #[serde(default = "default_objective")]
    pub objective: String,
    #[serde(default = "default_features")]
    pub features: FeatureSet,
    #[serde(default = "default_methods")]
    pub methods: Vec<FitMethod>,
    #[serde(default)]
    pub compare: Vec<ComparisonConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    /// Output directory, relative to the config file.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default = "default_starts")]
    pub starts: usize,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    #[serde(default)]
    pub synthetic: Vec<SyntheticConfig>,
    #[serde(default)]
    pub graph: Vec<GraphConfig>,
}

fn default_output() -> PathBuf {
    PathBuf::from("results")
}

fn default_starts() -> usize {
    FitOptions::default().starts
}

fn default_grid_points() -> usize {
    FitOptions::default().grid_points
}

impl ExperimentConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self, ExperimentError> {
        toml::from_str(text).map_err(|e| ExperimentError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Reads a config and resolves relative paths against its directory.
    pub fn from_path(path: &Path) -> Result<Self, ExperimentError> {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut config = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        config.output = base.join(&config.output);
        for g in &mut config.graph {
            g.path = base.join(&g.path);
        }
        Ok(config)
    }

    fn options(&self) -> FitOptions {
        FitOptions {
            starts: self.starts,
            grid_points: self.grid_points,
            seed: self.seed,
            ..FitOptions::default()
        }
    }

    /// Checks everything that can fail before any work starts.
    pub fn validate(&self) -> Result<(), ExperimentError> {
        for s in &self.synthetic {
            if s.replications == 0 {
                return Err(ExperimentError::NoReplications {
                    name: s.name.clone(),
                });
            }
            resolve_spec(&s.name, &s.objective, s.features)?;
            if s.r > MAX_IN_MEMORY_POWER {
                return Err(ExperimentError::Generate(GenerateError::PowerTooLarge {
                    r: s.r,
                    max: MAX_IN_MEMORY_POWER,
                }));
            }
            KroneckerParams::as_given(s.a, s.b, s.c, s.r).map_err(|source| {
                ExperimentError::Param {
                    name: s.name.clone(),
                    source,
                }
            })?;
        }
        for g in &self.graph {
            if !g.path.exists() {
                return Err(ExperimentError::MissingInput {
                    name: g.name.clone(),
                    path: g.path.clone(),
                });
            }
            resolve_spec(&g.name, &g.objective, g.features)?;
            for c in &g.compare {
                KroneckerParams::as_given(c.a, c.b, c.c, 0).map_err(|source| {
                    ExperimentError::Param {
                        name: format!("{} / {}", g.name, c.label),
                        source,
                    }
                })?;
            }
        }
        Ok(())
    }
}

fn resolve_spec(
    name: &str,
    objective: &str,
    features: FeatureSet,
) -> Result<ObjectiveSpec, ExperimentError> {
    let wrap = |source| ExperimentError::Spec {
        name: name.to_string(),
        source,
    };
    let spec = objective
        .parse::<ObjectiveSpec>()
        .and_then(|s| s.with_features(features))
        .map_err(wrap)?;
    spec.validate_for_fit().map_err(wrap)?;
    Ok(spec)
}

/// Observed counts for a source, plus the load report when it was an edge
/// list rather than a counts file.
#[derive(Debug, Clone, PartialEq)]
pub struct Observed {
    pub counts: FeatureCounts,
    pub load_report: Option<LoadReport>,
}

/// Reads feature counts from a JSON file (as printed by the `features`
/// command) or counts them from an edge list.
pub fn read_observed(path: &Path, directed: bool) -> Result<Observed, ExperimentError> {
    if looks_like_json(path)? {
        let text = fs::read_to_string(path).map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let counts = serde_json::from_str(&text).map_err(|e| ExperimentError::Counts {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        return Ok(Observed {
            counts,
            load_report: None,
        });
    }
    let (graph, report) = load_edge_list(path, directed)?;
    Ok(Observed {
        counts: count_features(&graph)?,
        load_report: Some(report),
    })
}

fn looks_like_json(path: &Path) -> Result<bool, ExperimentError> {
    if path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
    {
        return Ok(true);
    }
    let mut head = [0u8; 64];
    let read = File::open(path)
        .and_then(|mut f| f.read(&mut head))
        .map_err(|source| ExperimentError::Io {
            path: path.to_path_buf(),
            source,
        })?;
    Ok(head[..read]
        .iter()
        .find(|b| !b.is_ascii_whitespace())
        .is_some_and(|&b| b == b'{'))
}

/// One fitted model, from a synthetic replication or a real graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitRow {
    pub source: String,
    pub replication: usize,
    pub method: FitMethod,
    pub selected: FitMethod,
    pub seed: Option<u64>,
    pub true_a: Option<f64>,
    pub true_b: Option<f64>,
    pub true_c: Option<f64>,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub r: u32,
    pub objective: String,
    pub objective_value: f64,
    pub seconds: f64,
}

pub const FIT_HEADER: [&str; 15] = [
    "source",
    "replication",
    "method",
    "selected",
    "seed",
    "true_a",
    "true_b",
    "true_c",
    "a",
    "b",
    "c",
    "r",
    "objective",
    "objective_value",
    "seconds",
];

/// Per-feature discrepancies of a synthetic fit: against the fitted
/// model's expectation and against one re-sampled graph from the fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureErrorRow {
    pub source: String,
    pub replication: usize,
    pub method: FitMethod,
    pub feature: Feature,
    pub observed: u64,
    pub expected: f64,
    /// `(F_obs - E_fit(F)) / F_obs`.
    pub relative_expected: Option<f64>,
    pub resampled: u64,
    /// `(F_obs - F_resampled) / F_obs`.
    pub relative_resampled: Option<f64>,
}

pub const FEATURE_ERROR_HEADER: [&str; 9] = [
    "source",
    "replication",
    "method",
    "feature",
    "observed",
    "expected",
    "relative_expected",
    "resampled",
    "relative_resampled",
];

/// Feature counts of one sampled graph.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRow {
    pub source: String,
    pub replication: usize,
    /// `truth`, or the fitting method whose parameters were re-sampled.
    pub sampled_from: String,
    pub seed: u64,
    pub vertices: u64,
    pub edges: u64,
    pub hairpins: u64,
    pub tripins: u64,
    pub triangles: u64,
}

pub const SAMPLE_HEADER: [&str; 9] = [
    "source",
    "replication",
    "sampled_from",
    "seed",
    "vertices",
    "edges",
    "hairpins",
    "tripins",
    "triangles",
];

/// Medians over replications of one synthetic set and method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub source: String,
    pub method: FitMethod,
    pub replications: usize,
    pub true_a: f64,
    pub true_b: f64,
    pub true_c: f64,
    pub median_a: f64,
    pub median_b: f64,
    pub median_c: f64,
    pub median_objective: f64,
}

pub const SUMMARY_HEADER: [&str; 10] = [
    "source",
    "method",
    "replications",
    "true_a",
    "true_b",
    "true_c",
    "median_a",
    "median_b",
    "median_c",
    "median_objective",
];

/// A graph block's table with the graph name prepended.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphTable {
    pub graph: String,
    pub rows: Vec<TableRow>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub fits: Vec<FitRow>,
    pub feature_errors: Vec<FeatureErrorRow>,
    pub samples: Vec<SampleRow>,
    pub summary: Vec<SummaryRow>,
    pub tables: Vec<GraphTable>,
    pub warnings: Vec<String>,
}

fn run_method(
    method: FitMethod,
    observed: &FeatureCounts,
    r: u32,
    spec: &ObjectiveSpec,
    options: &FitOptions,
) -> Result<FitResult, FitError> {
    match method {
        FitMethod::Direct => fit_direct(observed, r, spec, options.starts, options.seed),
        FitMethod::Grid => fit_grid(observed, r, spec, options.grid_points),
        FitMethod::Leading => fit_leading_with_step(observed, r, spec, options.leading_step),
        FitMethod::Best if spec.features.len() == 3 => fit_partial(observed, r, spec, options),
        FitMethod::Best => fit_best(observed, r, spec, options),
    }
}

struct Replication {
    fits: Vec<FitRow>,
    errors: Vec<FeatureErrorRow>,
    samples: Vec<SampleRow>,
    warnings: Vec<String>,
}

fn sample_counts(params: KroneckerParams, seed: u64) -> Result<FeatureCounts, ExperimentError> {
    // Replications already run in parallel; sample each graph on the
    // ambient pool.
    let graph = GeneratorJob::new(params, seed).generate()?;
    Ok(count_features(&graph)?)
}

fn sample_row(
    source: &str,
    replication: usize,
    from: &str,
    seed: u64,
    c: &FeatureCounts,
) -> SampleRow {
    SampleRow {
        source: source.to_string(),
        replication,
        sampled_from: from.to_string(),
        seed,
        vertices: c.vertices,
        edges: c.edges,
        hairpins: c.hairpins,
        tripins: c.tripins,
        triangles: c.triangles,
    }
}

fn relative(observed: u64, other: f64) -> Option<f64> {
    (observed > 0).then(|| (observed as f64 - other) / observed as f64)
}

fn run_replication(
    s: &SyntheticConfig,
    spec: &ObjectiveSpec,
    options: &FitOptions,
    base_seed: u64,
    k: usize,
) -> Result<Replication, ExperimentError> {
    let truth =
        KroneckerParams::as_given(s.a, s.b, s.c, s.r).map_err(|source| ExperimentError::Param {
            name: s.name.clone(),
            source,
        })?;
    let seed = base_seed.wrapping_add(k as u64);
    let resample_seed = base_seed.wrapping_add((s.replications + k) as u64);
    let observed = sample_counts(truth, seed)?;

    let mut out = Replication {
        fits: Vec::new(),
        errors: Vec::new(),
        samples: vec![sample_row(&s.name, k, "truth", seed, &observed)],
        warnings: Vec::new(),
    };
    for &method in &s.methods {
        let fit = run_method(method, &observed, s.r, spec, options).map_err(|source| {
            ExperimentError::Fit {
                name: s.name.clone(),
                replication: k,
                source,
            }
        })?;
        out.warnings.extend(
            fit.warnings
                .iter()
                .map(|w| format!("{} rep {k} {method}: {w}", s.name)),
        );
        let resampled = sample_counts(fit.params, resample_seed)?;
        out.samples.push(sample_row(
            &s.name,
            k,
            method.name(),
            resample_seed,
            &resampled,
        ));
        for f in Feature::ALL {
            let obs = observed.get(f);
            let expected = fit.expected.get(f);
            out.errors.push(FeatureErrorRow {
                source: s.name.clone(),
                replication: k,
                method,
                feature: f,
                observed: obs,
                expected,
                relative_expected: relative(obs, expected),
                resampled: resampled.get(f),
                relative_resampled: relative(obs, resampled.get(f) as f64),
            });
        }
        out.fits.push(FitRow {
            source: s.name.clone(),
            replication: k,
            method,
            selected: fit.selected,
            seed: Some(seed),
            true_a: Some(truth.a()),
            true_b: Some(truth.b()),
            true_c: Some(truth.c()),
            a: fit.params.a(),
            b: fit.params.b(),
            c: fit.params.c(),
            r: s.r,
            objective: spec.name().to_string(),
            objective_value: fit.objective_value,
            seconds: fit.elapsed_seconds,
        });
    }
    Ok(out)
}

/// Median of a non-empty slice; the mean of the middle pair for even length.
pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn summarize(s: &SyntheticConfig, fits: &[FitRow]) -> Vec<SummaryRow> {
    s.methods
        .iter()
        .map(|&method| {
            let rows: Vec<&FitRow> = fits
                .iter()
                .filter(|f| f.source == s.name && f.method == method)
                .collect();
            let column =
                |get: fn(&FitRow) -> f64| median(&rows.iter().map(|r| get(r)).collect::<Vec<_>>());
            let truth = KroneckerParams::new(s.a, s.b, s.c, s.r).expect("validated");
            SummaryRow {
                source: s.name.clone(),
                method,
                replications: rows.len(),
                true_a: truth.a(),
                true_b: truth.b(),
                true_c: truth.c(),
                median_a: column(|r| r.a),
                median_b: column(|r| r.b),
                median_c: column(|r| r.c),
                median_objective: column(|r| r.objective_value),
            }
        })
        .collect()
}

fn run_graph(
    g: &GraphConfig,
    options: &FitOptions,
    report: &mut ExperimentReport,
) -> Result<(), ExperimentError> {
    let spec = resolve_spec(&g.name, &g.objective, g.features)?;
    let observed = read_observed(&g.path, g.directed)?;
    let counts = observed.counts;
    let r = g.r.unwrap_or_else(|| choose_r(counts.vertices));
    let mut rows = vec![TableRow::source(&counts)];
    for c in &g.compare {
        let params = KroneckerParams::as_given(c.a, c.b, c.c, r).map_err(|source| {
            ExperimentError::Param {
                name: g.name.clone(),
                source,
            }
        })?;
        rows.push(TableRow::at_params(&c.label, &params, &spec, &counts));
    }
    for &method in &g.methods {
        match run_method(method, &counts, r, &spec, options) {
            Ok(fit) => {
                report.warnings.extend(
                    fit.warnings
                        .iter()
                        .map(|w| format!("{} {method}: {w}", g.name)),
                );
                rows.push(TableRow::from_fit(&fit));
                report.fits.push(FitRow {
                    source: g.name.clone(),
                    replication: 0,
                    method,
                    selected: fit.selected,
                    seed: None,
                    true_a: None,
                    true_b: None,
                    true_c: None,
                    a: fit.params.a(),
                    b: fit.params.b(),
                    c: fit.params.c(),
                    r,
                    objective: spec.name().to_string(),
                    objective_value: fit.objective_value,
                    seconds: fit.elapsed_seconds,
                });
            }
            // An infeasible leading-term fit is a result worth reporting,
            // not a reason to abandon the other methods.
            Err(e @ (FitError::Infeasible { .. } | FitError::MissingFeature(_))) => {
                report.warnings.push(format!("{} {method}: {e}", g.name));
            }
            Err(source) => {
                return Err(ExperimentError::Fit {
                    name: g.name.clone(),
                    replication: 0,
                    source,
                })
            }
        }
    }
    report.tables.push(GraphTable {
        graph: g.name.clone(),
        rows,
    });
    Ok(())
}

fn method_order(m: FitMethod) -> usize {
    m as usize
}

/// Runs every block of `config`. Output is deterministic in the config.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport, ExperimentError> {
    config.validate()?;
    let options = config.options();
    let mut report = ExperimentReport::default();

    for s in &config.synthetic {
        let spec = resolve_spec(&s.name, &s.objective, s.features)?;
        let replications: Vec<Replication> = (0..s.replications)
            .into_par_iter()
            .map(|k| run_replication(s, &spec, &options, config.seed, k))
            .collect::<Result<_, _>>()?;
        let first_fit = report.fits.len();
        for rep in replications {
            report.fits.extend(rep.fits);
            report.feature_errors.extend(rep.errors);
            report.samples.extend(rep.samples);
            report.warnings.extend(rep.warnings);
        }
        report
            .summary
            .extend(summarize(s, &report.fits[first_fit..]));
    }
    for g in &config.graph {
        run_graph(g, &options, &mut report)?;
    }

    report.fits.sort_by(|x, y| {
        x.source
            .cmp(&y.source)
            .then(method_order(x.method).cmp(&method_order(y.method)))
            .then(x.replication.cmp(&y.replication))
    });
    report.feature_errors.sort_by(|x, y| {
        x.source
            .cmp(&y.source)
            .then(method_order(x.method).cmp(&method_order(y.method)))
            .then(x.replication.cmp(&y.replication))
            .then(x.feature.cmp(&y.feature))
    });
    report.samples.sort_by(|x, y| {
        x.source
            .cmp(&y.source)
            .then(x.replication.cmp(&y.replication))
            .then(sample_order(&x.sampled_from).cmp(&sample_order(&y.sampled_from)))
    });
    Ok(report)
}

fn sample_order(from: &str) -> (u8, String) {
    match from {
        "truth" => (0, String::new()),
        other => (1, other.to_string()),
    }
}

impl ExperimentReport {
    /// Writes `fits.csv`, `feature_errors.csv`, `feature_samples.csv`,
    /// `summary.csv` and `table.csv` into `dir`, creating it if needed.
    pub fn write_to(&self, dir: &Path) -> Result<Vec<PathBuf>, ExperimentError> {
        fs::create_dir_all(dir).map_err(|source| ExperimentError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        let mut emit = |name: &str, write: &dyn Fn(BufWriter<File>) -> csv::Result<()>| {
            let path = dir.join(name);
            let file = File::create(&path).map_err(|source| ExperimentError::Io {
                path: path.clone(),
                source,
            })?;
            write(BufWriter::new(file)).map_err(|source| ExperimentError::Csv {
                path: path.clone(),
                source,
            })?;
            written.push(path);
            Ok::<_, ExperimentError>(())
        };
        emit("fits.csv", &|w| write_records(&self.fits, &FIT_HEADER, w))?;
        emit("feature_errors.csv", &|w| {
            write_records(&self.feature_errors, &FEATURE_ERROR_HEADER, w)
        })?;
        emit("feature_samples.csv", &|w| {
            write_records(&self.samples, &SAMPLE_HEADER, w)
        })?;
        emit("summary.csv", &|w| {
            write_records(&self.summary, &SUMMARY_HEADER, w)
        })?;
        emit("table.csv", &|w| write_graph_tables(&self.tables, w))?;
        Ok(written)
    }
}

fn write_graph_tables<W: std::io::Write>(tables: &[GraphTable], out: W) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    let mut header = vec!["graph"];
    header.extend(TABLE_HEADER);
    writer.write_record(&header)?;
    for table in tables {
        for row in &table.rows {
            writer.serialize((&table.graph, row))?;
        }
    }
    writer.flush()?;
    Ok(())
}

/// Sorting helper used by callers that merge reports.
pub fn compare_fit_rows(x: &FitRow, y: &FitRow) -> Ordering {
    x.source
        .cmp(&y.source)
        .then(method_order(x.method).cmp(&method_order(y.method)))
        .then(x.replication.cmp(&y.replication))
}
