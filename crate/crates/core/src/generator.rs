//! Exact stochastic Kronecker sampling by flipping one coin per cell.
//!
//! Every unordered pair `i < j` is included independently with probability
//! `P_ij`. Row `i` draws its coins, in column order, from a ChaCha8 stream
//! keyed by `(seed, i)`, so each coin depends only on `(seed, i, j)` and the
//! output is identical for any number of workers.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::graph::{SimpleGraph, VertexId};
use crate::params::KroneckerParams;

/// Largest power for [`GeneratorJob::generate`].
pub const MAX_IN_MEMORY_POWER: u32 = 17;

/// Largest power for streamed output; vertex ids are 32-bit.
pub const MAX_STREAM_POWER: u32 = 32;

const ROWS_PER_BLOCK: u64 = 256;
const BLOCKS_PER_WORKER: usize = 4;
/// `2^53`: uniform deviates are 53-bit integers compared against `p * 2^53`.
const UNIT: f64 = 9_007_199_254_740_992.0;

#[derive(Debug, Error)]
pub enum GenerateError {
    #[error("r = {r} is above the limit of {max} for this output")]
    PowerTooLarge { r: u32, max: u32 },
    #[error("could not start {workers} worker threads: {message}")]
    ThreadPool { workers: usize, message: String },
    #[error("writing {}: {source}", display_path(.path))]
    Io {
        path: Option<PathBuf>,
        #[source]
        source: std::io::Error,
    },
}

fn display_path(path: &Option<PathBuf>) -> String {
    path.as_ref()
        .map_or_else(|| "edge list".to_string(), |p| p.display().to_string())
}

/// `P_ij` for the initiator as stored in `p`, computed from logarithms.
/// Exactly zero when any contributing initiator entry is zero.
pub fn cell_probability(p: &KroneckerParams, i: u64, j: u64) -> f64 {
    let (ka, kb, kc) = bit_counts(i, j, p.r());
    log_product(p, ka, kb, kc)
}

/// Number of bit positions (among the low `r`) where `(i_s, j_s)` is
/// `(0, 0)`, mixed, and `(1, 1)`.
fn bit_counts(i: u64, j: u64, r: u32) -> (u32, u32, u32) {
    let kb = (i ^ j).count_ones();
    let kc = (i & j).count_ones();
    (r - kb - kc, kb, kc)
}

fn log_product(p: &KroneckerParams, ka: u32, kb: u32, kc: u32) -> f64 {
    let mut log = 0.0;
    for (value, k) in [(p.a(), ka), (p.b(), kb), (p.c(), kc)] {
        if k == 0 {
            continue;
        }
        if value == 0.0 {
            return 0.0;
        }
        log += f64::from(k) * value.ln();
    }
    log.exp()
}

/// Inclusion thresholds indexed by `(kb, kc)`.
struct Thresholds {
    stride: usize,
    values: Vec<f64>,
}

impl Thresholds {
    fn new(p: &KroneckerParams) -> Self {
        let r = p.r();
        let stride = r as usize + 1;
        let mut values = vec![0.0; stride * stride];
        for kb in 0..=r {
            for kc in 0..=(r - kb) {
                values[kb as usize * stride + kc as usize] =
                    log_product(p, r - kb - kc, kb, kc) * UNIT;
            }
        }
        Thresholds { stride, values }
    }

    #[inline]
    fn get(&self, i: u64, j: u64) -> f64 {
        let kb = (i ^ j).count_ones() as usize;
        let kc = (i & j).count_ones() as usize;
        self.values[kb * self.stride + kc]
    }
}

/// A sampling request: parameters, seed and worker count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorJob {
    pub params: KroneckerParams,
    pub seed: u64,
    /// Worker threads; `0` uses the ambient rayon pool.
    pub workers: usize,
}

impl GeneratorJob {
    pub fn new(params: KroneckerParams, seed: u64) -> Self {
        GeneratorJob {
            params,
            seed,
            workers: 0,
        }
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn num_vertices(&self) -> u64 {
        self.params.num_vertices()
    }

    /// Samples the graph into memory. Vertex `k` has label `k`.
    pub fn generate(&self) -> Result<SimpleGraph, GenerateError> {
        self.check_power(MAX_IN_MEMORY_POWER)?;
        let mut pairs = Vec::new();
        self.sweep(|block| {
            pairs.extend_from_slice(block);
            Ok(())
        })?;
        let labels = (0..self.num_vertices()).collect();
        Ok(SimpleGraph::from_sorted_unique(labels, &pairs))
    }

    /// Streams the edge list: header comments, then one `u\tv` line per edge
    /// in ascending `(u, v)` order. Returns the number of edges written.
    pub fn write_edge_list<W: Write>(&self, out: W) -> Result<u64, GenerateError> {
        self.write_inner(out, None)
    }

    pub fn write_to_path(&self, path: &Path) -> Result<u64, GenerateError> {
        let io = |source| GenerateError::Io {
            path: Some(path.to_path_buf()),
            source,
        };
        let file = File::create(path).map_err(io)?;
        self.write_inner(BufWriter::new(file), Some(path))
    }

    fn write_inner<W: Write>(&self, out: W, path: Option<&Path>) -> Result<u64, GenerateError> {
        self.check_power(MAX_STREAM_POWER)?;
        let io = |source| GenerateError::Io {
            path: path.map(Path::to_path_buf),
            source,
        };
        let mut out = out;
        let p = &self.params;
        writeln!(out, "# stochastic Kronecker graph, exact coin flipping").map_err(io)?;
        writeln!(
            out,
            "# a={} b={} c={} r={} seed={}",
            p.a(),
            p.b(),
            p.c(),
            p.r(),
            self.seed
        )
        .map_err(io)?;
        writeln!(out, "# vertices: {}", self.num_vertices()).map_err(io)?;
        let mut written = 0u64;
        self.sweep(|block| {
            for &(u, v) in block {
                writeln!(out, "{u}\t{v}")?;
            }
            written += block.len() as u64;
            Ok(())
        })
        .map_err(|e| match e {
            GenerateError::Io { source, .. } => io(source),
            other => other,
        })?;
        out.flush().map_err(io)?;
        Ok(written)
    }

    fn check_power(&self, max: u32) -> Result<(), GenerateError> {
        let r = self.params.r();
        if r > max {
            return Err(GenerateError::PowerTooLarge { r, max });
        }
        Ok(())
    }

    /// Visits the edges block by block in ascending row order.
    fn sweep<F>(&self, mut sink: F) -> Result<(), GenerateError>
    where
        F: FnMut(&[(VertexId, VertexId)]) -> std::io::Result<()>,
    {
        let pool = match self.workers {
            0 => None,
            workers => Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(workers)
                    .build()
                    .map_err(|e| GenerateError::ThreadPool {
                        workers,
                        message: e.to_string(),
                    })?,
            ),
        };
        let workers = pool
            .as_ref()
            .map_or_else(rayon::current_num_threads, |p| p.current_num_threads());
        let thresholds = Thresholds::new(&self.params);
        let n = self.num_vertices();
        let num_blocks = n.div_ceil(ROWS_PER_BLOCK);
        let wave = (workers * BLOCKS_PER_WORKER) as u64;

        let mut first = 0u64;
        while first < num_blocks {
            let last = (first + wave).min(num_blocks);
            let run = || {
                (first..last)
                    .into_par_iter()
                    .map(|block| {
                        let start = block * ROWS_PER_BLOCK;
                        let end = (start + ROWS_PER_BLOCK).min(n);
                        let mut edges = Vec::new();
                        for i in start..end {
                            sample_row(&thresholds, self.seed, i, n, &mut edges);
                        }
                        edges
                    })
                    .collect::<Vec<_>>()
            };
            let blocks = match &pool {
                Some(pool) => pool.install(run),
                None => run(),
            };
            for block in &blocks {
                sink(block).map_err(|source| GenerateError::Io { path: None, source })?;
            }
            first = last;
        }
        Ok(())
    }
}

fn sample_row(
    thresholds: &Thresholds,
    seed: u64,
    i: u64,
    n: u64,
    edges: &mut Vec<(VertexId, VertexId)>,
) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(i);
    for j in (i + 1)..n {
        let deviate = (rng.next_u64() >> 11) as f64;
        if deviate < thresholds.get(i, j) {
            edges.push((i as VertexId, j as VertexId));
        }
    }
}
