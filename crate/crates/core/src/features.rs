//! Exact counts of the four moment features of a [`SimpleGraph`].

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{SimpleGraph, VertexId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FeatureError {
    #[error("{feature} count overflows a 64-bit counter")]
    Overflow { feature: Feature },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Feature {
    Edges,
    Hairpins,
    Tripins,
    Triangles,
}

impl Feature {
    pub const ALL: [Feature; 4] = [
        Feature::Edges,
        Feature::Hairpins,
        Feature::Tripins,
        Feature::Triangles,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Feature::Edges => "edges",
            Feature::Hairpins => "hairpins",
            Feature::Tripins => "tripins",
            Feature::Triangles => "triangles",
        }
    }

    pub(crate) fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "edges" | "e" => Ok(Feature::Edges),
            "hairpins" | "wedges" | "h" => Ok(Feature::Hairpins),
            "tripins" | "t" => Ok(Feature::Tripins),
            "triangles" | "tris" | "tri" => Ok(Feature::Triangles),
            other => Err(format!(
                "unknown feature {other:?} (expected edges, hairpins, tripins or triangles)"
            )),
        }
    }
}

/// Observed feature counts of a concrete graph.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCounts {
    pub vertices: u64,
    pub edges: u64,
    pub hairpins: u64,
    pub tripins: u64,
    pub triangles: u64,
}

impl FeatureCounts {
    pub fn get(&self, feature: Feature) -> u64 {
        match feature {
            Feature::Edges => self.edges,
            Feature::Hairpins => self.hairpins,
            Feature::Tripins => self.tripins,
            Feature::Triangles => self.triangles,
        }
    }
}

/// Edge, hairpin and tripin counts, which depend only on the degrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DegreeFeatures {
    pub edges: u64,
    pub hairpins: u64,
    pub tripins: u64,
}

fn narrow(value: u128, feature: Feature) -> Result<u64, FeatureError> {
    u64::try_from(value).map_err(|_| FeatureError::Overflow { feature })
}

/// `E = sum(d)/2`, `H = sum(d(d-1))/2`, `T = sum(d(d-1)(d-2))/6`.
pub fn count_degree_features(g: &SimpleGraph) -> Result<DegreeFeatures, FeatureError> {
    let degrees: Vec<u64> = g.degrees().collect();
    degree_features_from(&degrees)
}

pub(crate) fn degree_features_from(degrees: &[u64]) -> Result<DegreeFeatures, FeatureError> {
    type Sums = Option<(u128, u128, u128)>;
    let add = |x: Sums, y: Sums| -> Sums {
        let (x, y) = (x?, y?);
        Some((
            x.0.checked_add(y.0)?,
            x.1.checked_add(y.1)?,
            x.2.checked_add(y.2)?,
        ))
    };
    let sums = degrees
        .par_iter()
        .map(|&d| {
            let d = u128::from(d);
            // d < 2^64 so every product fits comfortably in 128 bits.
            let pairs = d * d.saturating_sub(1) / 2;
            let triples = if d >= 3 { d * (d - 1) * (d - 2) / 6 } else { 0 };
            Some((d, pairs, triples))
        })
        .reduce(|| Some((0, 0, 0)), add);
    let Some((degree_sum, hairpins, tripins)) = sums else {
        return Err(FeatureError::Overflow {
            feature: Feature::Tripins,
        });
    };
    Ok(DegreeFeatures {
        edges: narrow(degree_sum / 2, Feature::Edges)?,
        hairpins: narrow(hairpins, Feature::Hairpins)?,
        tripins: narrow(tripins, Feature::Tripins)?,
    })
}

/// Exact triangle count by degree-ordered forward intersection.
///
/// Vertices are ranked by `(degree, id)` and each edge is oriented from the
/// lower to the higher rank; every triangle is then found exactly once, from
/// its lowest-ranked corner, in `O(E^{3/2})` time.
pub fn count_triangles(g: &SimpleGraph) -> Result<u64, FeatureError> {
    let n = g.num_vertices() as usize;
    let mut order: Vec<VertexId> = (0..n as VertexId).collect();
    order.sort_unstable_by_key(|&v| (g.degree(v), v));
    let mut rank = vec![0 as VertexId; n];
    for (position, &v) in order.iter().enumerate() {
        rank[v as usize] = position as VertexId;
    }

    // Forward adjacency in rank space: only higher-ranked neighbors, sorted.
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    let mut forward: Vec<VertexId> = Vec::with_capacity(g.num_edges() as usize);
    for &v in &order {
        let start = forward.len();
        let own = rank[v as usize];
        forward.extend(
            g.neighbors(v)
                .iter()
                .map(|&w| rank[w as usize])
                .filter(|&w| w > own),
        );
        forward[start..].sort_unstable();
        offsets.push(forward.len());
    }
    let out = |u: usize| &forward[offsets[u]..offsets[u + 1]];

    let total: Option<u128> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mine = out(u);
            let mut found = 0u64;
            for &v in mine {
                found += intersection_size(mine, out(v as usize));
            }
            found
        })
        .fold(|| Some(0u128), |acc, x| acc?.checked_add(u128::from(x)))
        .reduce(|| Some(0u128), |x, y| x?.checked_add(y?));
    let total = total.ok_or(FeatureError::Overflow {
        feature: Feature::Triangles,
    })?;
    narrow(total, Feature::Triangles)
}

fn intersection_size(xs: &[VertexId], ys: &[VertexId]) -> u64 {
    let (mut i, mut j, mut count) = (0, 0, 0u64);
    while i < xs.len() && j < ys.len() {
        match xs[i].cmp(&ys[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                count += 1;
                i += 1;
                j += 1;
            }
        }
    }
    count
}

pub fn count_features(g: &SimpleGraph) -> Result<FeatureCounts, FeatureError> {
    let degree = count_degree_features(g)?;
    Ok(FeatureCounts {
        vertices: g.num_vertices(),
        edges: degree.edges,
        hairpins: degree.hairpins,
        tripins: degree.tripins,
        triangles: count_triangles(g)?,
    })
}
