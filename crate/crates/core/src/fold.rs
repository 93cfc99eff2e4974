//! Identities that turn sums over distinct index tuples into sums over full
//! index ranges.
//!
//! `restricted_sum` enumerates the distinct tuples directly; each
//! [`FoldIdentity`] evaluates the same quantity from full-range sums. The
//! moment closed forms rest on these identities, so they are checked here on
//! arbitrary tensors.

use rand::Rng;
use serde::Serialize;
use twofloat::TwoFloat;

/// Dense tensor of order 2, 3 or 4 with `n` levels per index.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    order: usize,
    n: usize,
    data: Vec<f64>,
}

impl Tensor {
    pub fn from_fn(order: usize, n: usize, mut f: impl FnMut(&[usize]) -> f64) -> Self {
        assert!((2..=4).contains(&order), "tensor order must be 2, 3 or 4");
        let len = n.pow(order as u32);
        let mut data = Vec::with_capacity(len);
        let mut idx = vec![0usize; order];
        for flat in 0..len {
            let mut rem = flat;
            for slot in idx.iter_mut().rev() {
                *slot = rem % n;
                rem /= n;
            }
            data.push(f(&idx));
        }
        Tensor { order, n, data }
    }

    pub fn random<R: Rng + ?Sized>(order: usize, n: usize, rng: &mut R) -> Self {
        Self::from_fn(order, n, |_| rng.gen::<f64>())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn levels(&self) -> usize {
        self.n
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        debug_assert_eq!(idx.len(), self.order);
        let flat = idx.iter().fold(0, |acc, &i| acc * self.n + i);
        self.data[flat]
    }

    /// Averages over permutations of every index after the first.
    pub fn symmetrize_tail(&self) -> Tensor {
        let perms = permutations(self.order - 1);
        Tensor::from_fn(self.order, self.n, |idx| {
            let mut permuted = idx.to_vec();
            perms
                .iter()
                .map(|perm| {
                    for (slot, &src) in perm.iter().enumerate() {
                        permuted[slot + 1] = idx[src + 1];
                    }
                    self.get(&permuted)
                })
                .sum::<f64>()
                / perms.len() as f64
        })
    }

    /// Averages over all permutations of the indices.
    pub fn symmetrize_all(&self) -> Tensor {
        let perms = permutations(self.order);
        Tensor::from_fn(self.order, self.n, |idx| {
            let mut permuted = idx.to_vec();
            perms
                .iter()
                .map(|perm| {
                    for (slot, &src) in perm.iter().enumerate() {
                        permuted[slot] = idx[src];
                    }
                    self.get(&permuted)
                })
                .sum::<f64>()
                / perms.len() as f64
        })
    }

    fn sum_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).sum()
    }
}

fn permutations(k: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                go(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; k], &mut out);
    out
}

/// Sum over index tuples whose entries are pairwise distinct, by enumeration.
pub fn restricted_sum(t: &Tensor) -> f64 {
    let n = t.n;
    // Accumulated in double-double; the identities are checked at 1e-12.
    let mut total = TwoFloat::from(0.0);
    match t.order {
        2 => {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    total += t.get(&[i, j]);
                }
            }
        }
        3 => {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    for k in (0..n).filter(|&k| k != i && k != j) {
                        total += t.get(&[i, j, k]);
                    }
                }
            }
        }
        4 => {
            for i in 0..n {
                for j in (0..n).filter(|&j| j != i) {
                    for k in (0..n).filter(|&k| k != i && k != j) {
                        for l in (0..n).filter(|&l| l != i && l != j && l != k) {
                            total += t.get(&[i, j, k, l]);
                        }
                    }
                }
            }
        }
        _ => unreachable!(),
    }
    f64::from(total)
}

/// Which distinct-index fold formula to apply.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum FoldIdentity {
    /// Two indices, no symmetry.
    Pairs,
    /// Three indices, no symmetry.
    Triples,
    /// Four indices, no symmetry.
    Quads,
    /// Three indices, `f_ijk = f_ikj`.
    TriplesTailExchangeable,
    /// Four indices, the last three exchangeable.
    QuadsTailExchangeable,
    /// Three indices, fully symmetric.
    TriplesSymmetric,
}

impl FoldIdentity {
    pub const ALL: [FoldIdentity; 6] = [
        FoldIdentity::Pairs,
        FoldIdentity::Triples,
        FoldIdentity::Quads,
        FoldIdentity::TriplesTailExchangeable,
        FoldIdentity::QuadsTailExchangeable,
        FoldIdentity::TriplesSymmetric,
    ];

    pub fn order(self) -> usize {
        match self {
            FoldIdentity::Pairs => 2,
            FoldIdentity::Triples
            | FoldIdentity::TriplesTailExchangeable
            | FoldIdentity::TriplesSymmetric => 3,
            FoldIdentity::Quads | FoldIdentity::QuadsTailExchangeable => 4,
        }
    }

    /// Puts a tensor into the symmetry class the identity assumes.
    pub fn prepare(self, t: &Tensor) -> Tensor {
        match self {
            FoldIdentity::TriplesTailExchangeable | FoldIdentity::QuadsTailExchangeable => {
                t.symmetrize_tail()
            }
            FoldIdentity::TriplesSymmetric => t.symmetrize_all(),
            _ => t.clone(),
        }
    }

    /// Evaluates the distinct-index sum from full-range sums.
    pub fn apply(self, t: &Tensor) -> f64 {
        assert_eq!(
            t.order,
            self.order(),
            "{self:?} needs an order-{} tensor",
            self.order()
        );
        let n = t.n;
        let r = 0..n;
        let f = |idx: &[usize]| t.get(idx);
        let zero = TwoFloat::from(0.0);
        let sum1 = |g: &dyn Fn(usize) -> f64| r.clone().map(g).fold(zero, |acc, x| acc + x);
        let sum2 = |g: &dyn Fn(usize, usize) -> f64| {
            r.clone()
                .flat_map(|i| r.clone().map(move |j| (i, j)))
                .map(|(i, j)| g(i, j))
                .fold(zero, |acc, x| acc + x)
        };
        let sum3 = |g: &dyn Fn(usize, usize, usize) -> f64| {
            let mut s = zero;
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        s += g(i, j, k);
                    }
                }
            }
            s
        };
        let full = t.data.iter().fold(zero, |acc, &x| acc + x);
        let folded = match self {
            FoldIdentity::Pairs => full - sum1(&|i| f(&[i, i])),
            FoldIdentity::Triples => {
                full - sum2(&|i, j| f(&[i, j, j]) + f(&[i, j, i]) + f(&[i, i, j]))
                    + 2.0 * sum1(&|i| f(&[i, i, i]))
            }
            FoldIdentity::Quads => {
                full - sum3(&|i, j, k| {
                    f(&[i, j, k, i])
                        + f(&[i, j, k, j])
                        + f(&[i, j, k, k])
                        + f(&[i, j, i, k])
                        + f(&[i, j, j, k])
                        + f(&[i, i, j, k])
                }) + sum2(&|i, j| {
                    2.0 * (f(&[i, j, j, j])
                        + f(&[i, j, i, i])
                        + f(&[i, i, j, i])
                        + f(&[i, i, i, j]))
                        + f(&[i, j, i, j])
                        + f(&[i, j, j, i])
                        + f(&[i, i, j, j])
                }) - 6.0 * sum1(&|i| f(&[i, i, i, i]))
            }
            FoldIdentity::TriplesTailExchangeable => {
                full - sum2(&|i, j| f(&[i, j, j]) + 2.0 * f(&[i, i, j]))
                    + 2.0 * sum1(&|i| f(&[i, i, i]))
            }
            // With the last three indices exchangeable, f_ijki, f_ijik and
            // f_iijk coincide, as do f_ijkj and f_ijkk with f_ijjk; among the
            // two-index terms f_ijii and f_iiji join f_iiij, and f_ijij and
            // f_ijji join f_iijj. That leaves 2 f_ijjj + 3 f_iijj + 6 f_iiij.
            FoldIdentity::QuadsTailExchangeable => {
                full - 3.0 * sum3(&|i, j, k| f(&[i, i, j, k]) + f(&[i, j, j, k]))
                    + sum2(&|i, j| {
                        2.0 * f(&[i, j, j, j]) + 3.0 * f(&[i, i, j, j]) + 6.0 * f(&[i, i, i, j])
                    })
                    - 6.0 * sum1(&|i| f(&[i, i, i, i]))
            }
            FoldIdentity::TriplesSymmetric => {
                full - 3.0 * sum2(&|i, j| f(&[i, i, j])) + 2.0 * sum1(&|i| f(&[i, i, i]))
            }
        };
        f64::from(folded)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FoldCheck {
    pub identity: FoldIdentity,
    pub levels: usize,
    pub direct: f64,
    pub folded: f64,
    pub relative_error: f64,
    pub passed: bool,
}

/// Compares `identity` against direct enumeration on `t` (which must already
/// carry the symmetry the identity assumes).
///
/// The error is relative to the larger of the two results, floored at
/// `rel_tol` times the tensor's absolute mass so that exactly-zero
/// restricted sums (fewer levels than indices) compare sensibly.
pub fn fold_identity_check(identity: FoldIdentity, t: &Tensor, rel_tol: f64) -> FoldCheck {
    let direct = restricted_sum(t);
    let folded = identity.apply(t);
    let scale = direct.abs().max(folded.abs()).max(t.sum_abs() * 1e-3);
    let relative_error = if scale == 0.0 {
        0.0
    } else {
        (direct - folded).abs() / scale
    };
    FoldCheck {
        identity,
        levels: t.n,
        direct,
        folded,
        relative_error,
        passed: relative_error <= rel_tol,
    }
}
