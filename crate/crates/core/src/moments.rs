//! Expected feature counts of a stochastic Kronecker graph.
//!
//! Every expectation is a signed combination of full-range sums over the
//! probability matrix `P = Θ^[r]`, and every full-range sum of products of
//! entries of a Kronecker power is the `r`-th power of the same sum for the
//! 2x2 initiator. The closed forms below are those combinations.
//!
//! The signed combinations cancel heavily when `b` is small relative to
//! `a + c` (the later terms nearly equal the first), so they are evaluated in
//! double-double arithmetic and rounded once at the end.

use serde::{Deserialize, Serialize};
use thiserror::Error;
use twofloat::TwoFloat;

use crate::features::Feature;
use crate::params::KroneckerParams;

/// Expected counts below this are reported as exactly zero.
pub const ZERO_FLOOR: f64 = 1e-9;

/// Largest power accepted by [`brute_force_expected`].
pub const MAX_BRUTE_FORCE_POWER: u32 = 7;

/// Largest power for which a dense [`ProbabilityMatrix`] may be built.
pub const MAX_MATRIX_POWER: u32 = 12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MomentError {
    #[error("r = {r} is too large for explicit enumeration (maximum {max})")]
    PowerTooLarge { r: u32, max: u32 },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ExpectedFeatures {
    pub edges: f64,
    pub hairpins: f64,
    pub tripins: f64,
    pub triangles: f64,
}

impl ExpectedFeatures {
    pub fn get(&self, feature: Feature) -> f64 {
        match feature {
            Feature::Edges => self.edges,
            Feature::Hairpins => self.hairpins,
            Feature::Tripins => self.tripins,
            Feature::Triangles => self.triangles,
        }
    }
}

/// A full-range sum of products of entries of `P`, e.g.
/// `sum_{ijk} P_ij P_ik`. Indices range over all of `0..2^r`, coincident
/// values included.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FullSum {
    /// `sum_i P_ii^m`
    Diagonal { m: u32 },
    /// `sum_{ij} P_ii^m P_ij^n`
    DiagonalRow { m: u32, n: u32 },
    /// `sum_{ijk} P_ij P_ik`
    Wedge,
    /// `sum_{ijk} P_ij^2 P_ik`
    SquaredWedge,
    /// `sum_{ijk} P_ij P_ik P_jk`
    Triangle,
    /// `sum_{ijk} P_ii P_ij P_ik`
    DiagonalWedge,
    /// `sum_{ijkl} P_ij P_ik P_il`
    Claw,
}

impl FullSum {
    /// Every sum the four expectations use.
    pub const USED: [FullSum; 14] = [
        FullSum::Diagonal { m: 1 },
        FullSum::Diagonal { m: 2 },
        FullSum::Diagonal { m: 3 },
        FullSum::DiagonalRow { m: 0, n: 1 },
        FullSum::DiagonalRow { m: 0, n: 2 },
        FullSum::DiagonalRow { m: 0, n: 3 },
        FullSum::DiagonalRow { m: 1, n: 1 },
        FullSum::DiagonalRow { m: 1, n: 2 },
        FullSum::DiagonalRow { m: 2, n: 1 },
        FullSum::Wedge,
        FullSum::SquaredWedge,
        FullSum::Triangle,
        FullSum::DiagonalWedge,
        FullSum::Claw,
    ];

    /// The sum's value for the 2x2 initiator (`r = 1`), in double-double.
    fn initiator_value(self, a: TwoFloat, b: TwoFloat, c: TwoFloat) -> TwoFloat {
        let pow = |x: TwoFloat, k: u32| -> TwoFloat { pow_dd(x, k) };
        match self {
            FullSum::Diagonal { m } => pow(a, m) + pow(c, m),
            FullSum::DiagonalRow { m, n } => {
                pow(a, m) * (pow(a, n) + pow(b, n)) + pow(c, m) * (pow(b, n) + pow(c, n))
            }
            FullSum::Wedge => pow(a + b, 2) + pow(b + c, 2),
            FullSum::SquaredWedge => {
                pow(a, 3)
                    + pow(c, 3)
                    + b * (pow(a, 2) + pow(c, 2))
                    + pow(b, 2) * (a + c)
                    + 2.0 * pow(b, 3)
            }
            FullSum::Triangle => pow(a, 3) + 3.0 * pow(b, 2) * (a + c) + pow(c, 3),
            FullSum::DiagonalWedge => a * pow(a + b, 2) + c * pow(b + c, 2),
            FullSum::Claw => pow(a + b, 3) + pow(b + c, 3),
        }
    }

    /// `initiator_value^r`, which equals the sum over `P = Θ^[r]`.
    pub fn kronecker_value(self, p: &KroneckerParams) -> f64 {
        f64::from(self.power_dd(p))
    }

    fn power_dd(self, p: &KroneckerParams) -> TwoFloat {
        let [a, b, c] = p.abc().map(TwoFloat::from);
        pow_dd(self.initiator_value(a, b, c), p.r())
    }
}

fn pow_dd(x: TwoFloat, k: u32) -> TwoFloat {
    match k {
        0 => TwoFloat::from(1.0),
        _ => x.powi(k as i32),
    }
}

fn finish(twice_or_six: TwoFloat, divisor: f64) -> f64 {
    let value = f64::from(twice_or_six / divisor);
    if value < ZERO_FLOOR {
        0.0
    } else {
        value
    }
}

/// Closed-form `E(E)`, `E(H)`, `E(T)` and `E(Δ)`.
///
/// ```text
/// 2E(E) = (a+2b+c)^r - (a+c)^r
/// 2E(H) = ((a+b)^2+(b+c)^2)^r - 2(a(a+b)+c(c+b))^r - (a^2+2b^2+c^2)^r + 2(a^2+c^2)^r
/// 6E(Δ) = (a^3+3b^2(a+c)+c^3)^r - 3(a(a^2+b^2)+c(b^2+c^2))^r + 2(a^3+c^3)^r
/// 6E(T) = ((a+b)^3+(b+c)^3)^r - 3(a(a+b)^2+c(b+c)^2)^r
///         - 3(a^3+c^3+b(a^2+c^2)+b^2(a+c)+2b^3)^r + 2(a^3+2b^3+c^3)^r
///         + 3(a^3+c^3+b^2(a+c))^r + 6(a^3+c^3+b(a^2+c^2))^r - 6(a^3+c^3)^r
/// ```
///
/// Results below [`ZERO_FLOOR`] (including negative round-off) are
/// returned as 0.
pub fn expected_features(p: &KroneckerParams) -> ExpectedFeatures {
    let s = |sum: FullSum| sum.power_dd(p);
    let diag = |m| s(FullSum::Diagonal { m });
    let diag_row = |m, n| s(FullSum::DiagonalRow { m, n });

    let two_edges = diag_row(0, 1) - diag(1);
    let two_hairpins = s(FullSum::Wedge) - 2.0 * diag_row(1, 1) - diag_row(0, 2) + 2.0 * diag(2);
    let six_triangles = s(FullSum::Triangle) - 3.0 * diag_row(1, 2) + 2.0 * diag(3);
    let six_tripins =
        s(FullSum::Claw) - 3.0 * s(FullSum::DiagonalWedge) - 3.0 * s(FullSum::SquaredWedge)
            + 2.0 * diag_row(0, 3)
            + 3.0 * diag_row(1, 2)
            + 6.0 * diag_row(2, 1)
            - 6.0 * diag(3);

    ExpectedFeatures {
        edges: finish(two_edges, 2.0),
        hairpins: finish(two_hairpins, 2.0),
        tripins: finish(six_tripins, 6.0),
        triangles: finish(six_triangles, 6.0),
    }
}

/// Dense `2^r x 2^r` edge-probability matrix, entry by entry as the product
/// of initiator entries over bit positions.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMatrix {
    r: u32,
    n: usize,
    entries: Vec<f64>,
}

impl ProbabilityMatrix {
    pub fn new(p: &KroneckerParams) -> Result<Self, MomentError> {
        if p.r() > MAX_MATRIX_POWER {
            return Err(MomentError::PowerTooLarge {
                r: p.r(),
                max: MAX_MATRIX_POWER,
            });
        }
        let theta = [[p.a(), p.b()], [p.b(), p.c()]];
        let n = 1usize << p.r();
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut product = 1.0;
                for s in 0..p.r() {
                    product *= theta[(i >> s) & 1][(j >> s) & 1];
                }
                entries.push(product);
            }
        }
        Ok(ProbabilityMatrix {
            r: p.r(),
            n,
            entries,
        })
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    pub fn size(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.n + j]
    }

    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| (0..i).all(|j| self.get(i, j) == self.get(j, i)))
    }

    /// Direct summation of a [`FullSum`] over every index combination.
    pub fn full_sum(&self, sum: FullSum) -> f64 {
        let n = self.n;
        let p = |i, j| self.get(i, j);
        let row = |i: usize, k: i32| -> f64 { (0..n).map(|j| p(i, j).powi(k)).sum() };
        match sum {
            FullSum::Diagonal { m } => (0..n).map(|i| p(i, i).powi(m as i32)).sum(),
            FullSum::DiagonalRow { m, n: k } => (0..n)
                .map(|i| p(i, i).powi(m as i32) * row(i, k as i32))
                .sum(),
            FullSum::Wedge => (0..n)
                .map(|i| {
                    let mut t = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            t += p(i, j) * p(i, k);
                        }
                    }
                    t
                })
                .sum(),
            FullSum::SquaredWedge => (0..n)
                .map(|i| {
                    let mut t = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            t += p(i, j) * p(i, j) * p(i, k);
                        }
                    }
                    t
                })
                .sum(),
            FullSum::Triangle => {
                let mut t = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            t += p(i, j) * p(i, k) * p(j, k);
                        }
                    }
                }
                t
            }
            FullSum::DiagonalWedge => (0..n)
                .map(|i| {
                    let mut t = 0.0;
                    for j in 0..n {
                        for k in 0..n {
                            t += p(i, i) * p(i, j) * p(i, k);
                        }
                    }
                    t
                })
                .sum(),
            FullSum::Claw => {
                let mut t = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            for l in 0..n {
                                t += p(i, j) * p(i, k) * p(i, l);
                            }
                        }
                    }
                }
                t
            }
        }
    }
}

/// Expected features by explicit enumeration over distinct index tuples of
/// the dense probability matrix. Independent of the closed forms; used to
/// check them.
pub fn brute_force_expected(p: &KroneckerParams) -> Result<ExpectedFeatures, MomentError> {
    if p.r() > MAX_BRUTE_FORCE_POWER {
        return Err(MomentError::PowerTooLarge {
            r: p.r(),
            max: MAX_BRUTE_FORCE_POWER,
        });
    }
    let m = ProbabilityMatrix::new(p)?;
    let n = m.size();
    let mut edges = 0.0;
    let mut hairpins = 0.0;
    let mut triangles = 0.0;
    let mut tripins = 0.0;
    // Each feature is counted once per unordered set of distinct indices,
    // which is the restricted sum divided by its symmetry factor.
    for i in 0..n {
        for j in 0..n {
            if j == i {
                continue;
            }
            let pij = m.get(i, j);
            if j > i {
                edges += pij;
            }
            for k in (j + 1)..n {
                if k == i {
                    continue;
                }
                let pik = m.get(i, k);
                hairpins += pij * pik;
                if i < j {
                    triangles += pij * pik * m.get(j, k);
                }
                for l in (k + 1)..n {
                    if l == i {
                        continue;
                    }
                    tripins += pij * pik * m.get(i, l);
                }
            }
        }
    }
    Ok(ExpectedFeatures {
        edges,
        hairpins,
        tripins,
        triangles,
    })
}

/// How quickly the non-leading terms fade relative to sampling noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Dominance {
    /// `log2((a+2b+c)/(a+c))`; `+inf` when `a + c = 0`.
    pub alpha: f64,
    /// `alpha <= 1/2`: dropping the loop correction from `E(E)` is not
    /// safely below the sampling error.
    pub weak: bool,
    /// `a + c = 0`, so there are no diagonal terms at all.
    pub zero_diagonal: bool,
}

pub fn dominance_exponent(p: &KroneckerParams) -> Dominance {
    let diagonal = p.a() + p.c();
    if diagonal == 0.0 {
        return Dominance {
            alpha: f64::INFINITY,
            weak: false,
            zero_diagonal: true,
        };
    }
    let alpha = ((diagonal + 2.0 * p.b()) / diagonal).log2();
    Dominance {
        alpha,
        weak: alpha <= 0.5,
        zero_diagonal: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: f64, b: f64, c: f64, r: u32) -> KroneckerParams {
        KroneckerParams::new(a, b, c, r).unwrap()
    }

    fn close(x: f64, y: f64, rel: f64) -> bool {
        (x - y).abs() <= rel * x.abs().max(y.abs()) + ZERO_FLOOR
    }

    #[test]
    fn b_zero_gives_nothing() {
        for (a, c) in [(0.3, 0.7), (1.0, 1.0), (0.99, 0.25), (0.0, 0.0)] {
            let e = expected_features(&params(a, 0.0, c, 10));
            assert_eq!(e, ExpectedFeatures::default());
        }
    }

    #[test]
    fn complete_graph_on_four_vertices() {
        let e = expected_features(&params(1.0, 1.0, 1.0, 2));
        assert_eq!(
            (e.edges, e.hairpins, e.tripins, e.triangles),
            (6.0, 12.0, 4.0, 4.0)
        );
        let brute = brute_force_expected(&params(1.0, 1.0, 1.0, 2)).unwrap();
        assert_eq!(brute, e);
    }

    #[test]
    fn dual_matching_when_diagonal_vanishes() {
        let e = expected_features(&params(0.0, 0.5, 0.0, 3));
        assert_eq!(e.edges, 0.5);
        assert_eq!((e.hairpins, e.tripins, e.triangles), (0.0, 0.0, 0.0));
    }

    #[test]
    fn power_zero_is_a_single_vertex() {
        let e = expected_features(&params(0.9, 0.4, 0.3, 0));
        assert_eq!(e, ExpectedFeatures::default());
    }

    #[test]
    fn closed_form_matches_enumeration() {
        for (a, b, c, r) in [
            (0.7, 0.4, 0.2, 4),
            (0.99, 0.48, 0.25, 5),
            (0.3, 0.9, 0.1, 3),
            (0.2, 0.004, 0.9, 5),
        ] {
            let p = params(a, b, c, r);
            let closed = expected_features(&p);
            let brute = brute_force_expected(&p).unwrap();
            for f in Feature::ALL {
                assert!(
                    close(closed.get(f), brute.get(f), 1e-10),
                    "{f} at {:?}: {} vs {}",
                    p,
                    closed.get(f),
                    brute.get(f)
                );
            }
        }
    }

    #[test]
    fn brute_force_refuses_large_powers() {
        assert_eq!(
            brute_force_expected(&params(0.5, 0.5, 0.5, 8)),
            Err(MomentError::PowerTooLarge { r: 8, max: 7 })
        );
        assert_eq!(
            brute_force_expected(&params(0.5, 0.0, 0.2, 3)).unwrap(),
            ExpectedFeatures::default()
        );
    }

    #[test]
    fn probability_matrix_layout() {
        let m = ProbabilityMatrix::new(&params(0.99, 0.48, 0.25, 3)).unwrap();
        assert!(m.is_symmetric());
        assert!((m.get(0, 0) - 0.99f64.powi(3)).abs() < 1e-15);
        assert!((m.get(0, 7) - 0.48f64.powi(3)).abs() < 1e-15);
        // 5 = 101b, 3 = 011b: bit pairs (1,1), (0,1), (1,0).
        assert!((m.get(5, 3) - 0.25 * 0.48 * 0.48).abs() < 1e-15);
        assert!(ProbabilityMatrix::new(&params(0.5, 0.5, 0.5, 13)).is_err());
    }

    #[test]
    fn full_sums_reduce_to_powers() {
        let base = params(0.8, 0.35, 0.45, 1);
        for r in 1..=4 {
            let p = base.with_power(r).unwrap();
            let m = ProbabilityMatrix::new(&p).unwrap();
            for sum in FullSum::USED {
                let direct = m.full_sum(sum);
                let reduced = sum.kronecker_value(&p);
                assert!(
                    close(direct, reduced, 1e-12),
                    "{sum:?} r={r}: {direct} vs {reduced}"
                );
            }
        }
    }

    #[test]
    fn dominance() {
        let d = dominance_exponent(&params(1.0, 0.0, 1.0, 5));
        assert_eq!(d.alpha, 0.0);
        assert!(d.weak);

        let b = (2f64.sqrt() - 1.0) / 2.0;
        let d = dominance_exponent(&params(0.5, b, 0.5, 5));
        assert!((d.alpha - 0.5).abs() < 1e-15);

        let d = dominance_exponent(&params(0.99, 0.48, 0.25, 5));
        assert!((d.alpha - (2.2f64 / 1.24).log2()).abs() < 1e-14);
        assert!(!d.weak);

        let d = dominance_exponent(&params(0.0, 0.3, 0.0, 5));
        assert!(d.alpha.is_infinite() && d.zero_diagonal);
    }
}
