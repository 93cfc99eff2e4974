//! Edge-list ingestion into a deduplicated, loop-free undirected graph.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

/// Dense vertex index. Original file labels are kept in a side table.
pub type VertexId = u32;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },
    #[error("graph has more than {max} vertices")]
    TooManyVertices { max: u64 },
    #[error("edge ({u}, {v}) references a vertex outside 0..{num_vertices}")]
    VertexOutOfRange { u: u64, v: u64, num_vertices: u64 },
}

/// Undirected simple graph in compressed sparse row form.
///
/// Adjacency lists are sorted ascending, contain no self-loops and no
/// repeated neighbors.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimpleGraph {
    offsets: Vec<u64>,
    neighbors: Vec<VertexId>,
    labels: Vec<u64>,
}

/// What happened while reading an edge list.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LoadReport {
    pub lines: u64,
    pub comment_lines: u64,
    pub pairs_read: u64,
    pub loops_dropped: u64,
    /// Exact repeats, plus reversed pairs when the input is undirected.
    pub duplicates_dropped: u64,
    /// Reversed pairs folded into one undirected edge (directed input only).
    pub reciprocal_merged: u64,
    /// Vertices that end up with degree zero (they only appeared in loops).
    pub isolated_vertices: u64,
}

impl SimpleGraph {
    /// Builds a graph on `0..num_vertices` from arbitrary pairs; loops and
    /// repeated pairs (in either orientation) are discarded.
    pub fn from_edges<I>(num_vertices: u64, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (u64, u64)>,
    {
        if num_vertices > u64::from(VertexId::MAX) + 1 {
            return Err(GraphError::TooManyVertices {
                max: u64::from(VertexId::MAX) + 1,
            });
        }
        let mut pairs = Vec::new();
        for (u, v) in edges {
            if u >= num_vertices || v >= num_vertices {
                return Err(GraphError::VertexOutOfRange { u, v, num_vertices });
            }
            if u != v {
                pairs.push((u.min(v) as VertexId, u.max(v) as VertexId));
            }
        }
        pairs.sort_unstable();
        pairs.dedup();
        Ok(Self::from_sorted_unique(
            (0..num_vertices).collect(),
            &pairs,
        ))
    }

    /// `pairs` must be sorted, unique, with `u < v`.
    pub(crate) fn from_sorted_unique(labels: Vec<u64>, pairs: &[(VertexId, VertexId)]) -> Self {
        let n = labels.len();
        let mut degree = vec![0u64; n];
        for &(u, v) in pairs {
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0u64);
        let mut acc = 0u64;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut fill: Vec<u64> = offsets[..n].to_vec();
        let mut neighbors = vec![0 as VertexId; acc as usize];
        // Pairs are sorted by (u, v); pushing v into u and u into v in this
        // order leaves every list ascending: a vertex's smaller neighbors
        // arrive (as second coordinates) before its larger ones.
        for &(u, v) in pairs {
            neighbors[fill[v as usize] as usize] = u;
            fill[v as usize] += 1;
        }
        for &(u, v) in pairs {
            neighbors[fill[u as usize] as usize] = v;
            fill[u as usize] += 1;
        }
        SimpleGraph {
            offsets,
            neighbors,
            labels,
        }
    }

    pub fn num_vertices(&self) -> u64 {
        self.labels.len() as u64
    }

    pub fn num_edges(&self) -> u64 {
        self.neighbors.len() as u64 / 2
    }

    pub fn degree(&self, v: VertexId) -> u64 {
        let v = v as usize;
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn degrees(&self) -> impl ExactSizeIterator<Item = u64> + '_ {
        self.offsets.windows(2).map(|w| w[1] - w[0])
    }

    pub fn neighbors(&self, v: VertexId) -> &[VertexId] {
        let v = v as usize;
        &self.neighbors[self.offsets[v] as usize..self.offsets[v + 1] as usize]
    }

    /// Label the vertex carried in the source file.
    pub fn label(&self, v: VertexId) -> u64 {
        self.labels[v as usize]
    }

    /// Each undirected edge once, as `(u, v)` with `u < v`, in ascending order.
    pub fn edges(&self) -> impl Iterator<Item = (VertexId, VertexId)> + '_ {
        (0..self.labels.len() as VertexId).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .copied()
                .filter(move |&v| v > u)
                .map(move |v| (u, v))
        })
    }
}

/// Reads a SNAP-style edge list from `path`.
///
/// With `directed_input` the direction of each arc is dropped and reversed
/// arcs are reported as `reciprocal_merged` instead of duplicates.
pub fn load_edge_list(
    path: impl AsRef<Path>,
    directed_input: bool,
) -> Result<(SimpleGraph, LoadReport), GraphError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| GraphError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_edge_list(BufReader::new(file), directed_input).map_err(|e| match e {
        GraphError::Io { source, .. } => GraphError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => other,
    })
}

/// Streaming parser behind [`load_edge_list`]. Vertices are numbered in
/// order of first appearance.
pub fn read_edge_list<R: BufRead>(
    reader: R,
    directed_input: bool,
) -> Result<(SimpleGraph, LoadReport), GraphError> {
    let mut report = LoadReport::default();
    let mut ids: HashMap<u64, VertexId> = HashMap::new();
    let mut labels: Vec<u64> = Vec::new();
    // (min, max, reversed) so exact repeats and reversals can be told apart.
    let mut arcs: Vec<(VertexId, VertexId, bool)> = Vec::new();

    let mut intern = |label: u64, labels: &mut Vec<u64>| -> Result<VertexId, GraphError> {
        if let Some(&id) = ids.get(&label) {
            return Ok(id);
        }
        if labels.len() as u64 > u64::from(VertexId::MAX) {
            return Err(GraphError::TooManyVertices {
                max: u64::from(VertexId::MAX) + 1,
            });
        }
        let id = labels.len() as VertexId;
        labels.push(label);
        ids.insert(label, id);
        Ok(id)
    };

    for (index, line) in reader.lines().enumerate() {
        let line_no = index as u64 + 1;
        let line = line.map_err(|source| GraphError::Io {
            path: PathBuf::new(),
            source,
        })?;
        report.lines += 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('#') {
            report.comment_lines += 1;
            continue;
        }
        let mut tokens = trimmed.split_ascii_whitespace();
        let (Some(first), Some(second)) = (tokens.next(), tokens.next()) else {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("expected two vertex labels, found {trimmed:?}"),
            });
        };
        if let Some(extra) = tokens.next() {
            return Err(GraphError::Parse {
                line: line_no,
                message: format!("unexpected third field {extra:?}"),
            });
        }
        let parse = |tok: &str| {
            tok.parse::<u64>().map_err(|_| GraphError::Parse {
                line: line_no,
                message: format!("{tok:?} is not a non-negative integer label"),
            })
        };
        let (lu, lv) = (parse(first)?, parse(second)?);
        report.pairs_read += 1;
        let u = intern(lu, &mut labels)?;
        let v = intern(lv, &mut labels)?;
        if u == v {
            report.loops_dropped += 1;
            continue;
        }
        arcs.push((u.min(v), u.max(v), u > v));
    }

    let total = arcs.len() as u64;
    arcs.sort_unstable();
    arcs.dedup();
    let exact_repeats = total - arcs.len() as u64;
    let pairs: Vec<(VertexId, VertexId)> = {
        let mut p: Vec<_> = arcs.iter().map(|&(u, v, _)| (u, v)).collect();
        p.dedup();
        p
    };
    let reversed = arcs.len() as u64 - pairs.len() as u64;
    if directed_input {
        report.duplicates_dropped = exact_repeats;
        report.reciprocal_merged = reversed;
    } else {
        report.duplicates_dropped = exact_repeats + reversed;
    }

    let graph = SimpleGraph::from_sorted_unique(labels, &pairs);
    report.isolated_vertices = graph.degrees().filter(|&d| d == 0).count() as u64;
    Ok((graph, report))
}

/// Smallest `r` with `2^r >= num_vertices`; 0 for graphs with at most one vertex.
pub fn choose_r(num_vertices: u64) -> u32 {
    if num_vertices <= 1 {
        0
    } else {
        u64::BITS - (num_vertices - 1).leading_zeros()
    }
}
