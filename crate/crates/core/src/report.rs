//! Fit tables in a fixed CSV layout.
//!
//! Columns are `fit_type, a, b, c, verts, edges, hairpins, tripins,
//! triangles, objective, seconds`. The `Source` row carries the observed
//! counts in the four feature columns; every fitted row carries the ratios
//! `E(F) / F_obs` there instead.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::estimator::{FitMethod, FitResult};
use crate::features::{Feature, FeatureCounts};
use crate::moments::expected_features;
use crate::objective::{objective_from_expected, ObjectiveSpec};
use crate::params::KroneckerParams;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub fit_type: String,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub c: Option<f64>,
    pub verts: u64,
    pub edges: Option<f64>,
    pub hairpins: Option<f64>,
    pub tripins: Option<f64>,
    pub triangles: Option<f64>,
    pub objective: Option<f64>,
    pub seconds: Option<f64>,
}

impl TableRow {
    pub fn source(observed: &FeatureCounts) -> Self {
        TableRow {
            fit_type: "Source".to_string(),
            a: None,
            b: None,
            c: None,
            verts: observed.vertices,
            edges: Some(observed.edges as f64),
            hairpins: Some(observed.hairpins as f64),
            tripins: Some(observed.tripins as f64),
            triangles: Some(observed.triangles as f64),
            objective: None,
            seconds: None,
        }
    }

    pub fn from_fit(fit: &FitResult) -> Self {
        let ratios = &fit.feature_ratios;
        TableRow {
            fit_type: fit_label(fit),
            a: Some(fit.params.a()),
            b: Some(fit.params.b()),
            c: Some(fit.params.c()),
            verts: fit.vertices,
            edges: ratios.edges,
            hairpins: ratios.hairpins,
            tripins: ratios.tripins,
            triangles: ratios.triangles,
            objective: Some(fit.objective_value),
            seconds: Some(fit.elapsed_seconds),
        }
    }

    /// Row for externally supplied parameters, e.g. another estimator's
    /// published fit.
    pub fn at_params(
        label: &str,
        params: &KroneckerParams,
        spec: &ObjectiveSpec,
        observed: &FeatureCounts,
    ) -> Self {
        let expected = expected_features(params);
        let ratio = |f: Feature| {
            let obs = observed.get(f);
            (obs > 0).then(|| expected.get(f) / obs as f64)
        };
        TableRow {
            fit_type: label.to_string(),
            a: Some(params.a()),
            b: Some(params.b()),
            c: Some(params.c()),
            verts: params.num_vertices(),
            edges: ratio(Feature::Edges),
            hairpins: ratio(Feature::Hairpins),
            tripins: ratio(Feature::Tripins),
            triangles: ratio(Feature::Triangles),
            objective: Some(objective_from_expected(&expected, spec, observed).value),
            seconds: None,
        }
    }
}

/// `Grid`, `Best (direct)`, or `-Triangles` style labels for partial fits.
pub fn fit_label(fit: &FitResult) -> String {
    let title = |m: FitMethod| {
        let name = m.name();
        name[..1].to_ascii_uppercase() + &name[1..]
    };
    let base = if fit.method == FitMethod::Best {
        format!("Best ({})", fit.selected.name())
    } else {
        title(fit.method)
    };
    match fit.held_out {
        Some(h) => {
            let name = h.feature.name();
            format!("{base} -{}{}", name[..1].to_ascii_uppercase(), &name[1..])
        }
        None => base,
    }
}

pub fn write_table<W: Write>(rows: &[TableRow], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    for row in rows {
        writer.serialize(row)?;
    }
    writer.flush()?;
    Ok(())
}

/// Serializes any sequence of records with a header row, even when empty.
pub fn write_records<W: Write, T: Serialize>(
    records: &[T],
    header: &[&str],
    out: W,
) -> csv::Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    writer.write_record(header)?;
    for record in records {
        writer.serialize(record)?;
    }
    writer.flush()?;
    Ok(())
}

pub const TABLE_HEADER: [&str; 11] = [
    "fit_type",
    "a",
    "b",
    "c",
    "verts",
    "edges",
    "hairpins",
    "tripins",
    "triangles",
    "objective",
    "seconds",
];
