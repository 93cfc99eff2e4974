use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest supported Kronecker power. The biggest bracketed base in the
/// moment formulas is 4, and 4^60 stays far from `f64` overflow.
pub const MAX_POWER: u32 = 60;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParamError {
    #[error("parameter {name} = {value} is outside [0, 1]")]
    OutOfRange { name: &'static str, value: f64 },
    #[error("power r = {r} exceeds the supported maximum {max}")]
    PowerTooLarge { r: u32, max: u32 },
}

/// Initiator `[[a, b], [b, c]]` and Kronecker power `r`.
///
/// [`KroneckerParams::new`] stores the canonical representative `a >= c` of
/// the `(a, b, c) ~ (c, b, a)` symmetry class and remembers whether it had
/// to swap.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KroneckerParams {
    a: f64,
    b: f64,
    c: f64,
    r: u32,
    #[serde(default)]
    swapped: bool,
}

impl KroneckerParams {
    pub fn new(a: f64, b: f64, c: f64, r: u32) -> Result<Self, ParamError> {
        Ok(Self::as_given(a, b, c, r)?.canonical())
    }

    /// Keeps the orientation exactly as supplied.
    pub fn as_given(a: f64, b: f64, c: f64, r: u32) -> Result<Self, ParamError> {
        for (name, value) in [("a", a), ("b", b), ("c", c)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(ParamError::OutOfRange { name, value });
            }
        }
        if r > MAX_POWER {
            return Err(ParamError::PowerTooLarge { r, max: MAX_POWER });
        }
        Ok(KroneckerParams {
            a,
            b,
            c,
            r,
            swapped: false,
        })
    }

    pub fn canonical(self) -> Self {
        if self.a < self.c {
            KroneckerParams {
                a: self.c,
                c: self.a,
                swapped: !self.swapped,
                ..self
            }
        } else {
            self
        }
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn b(&self) -> f64 {
        self.b
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn r(&self) -> u32 {
        self.r
    }

    /// True when canonicalization exchanged the user's `a` and `c`.
    pub fn swapped(&self) -> bool {
        self.swapped
    }

    pub fn is_canonical(&self) -> bool {
        self.a >= self.c
    }

    pub fn abc(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn with_power(self, r: u32) -> Result<Self, ParamError> {
        Self::as_given(self.a, self.b, self.c, r).map(|p| KroneckerParams {
            swapped: self.swapped,
            ..p
        })
    }

    /// Number of vertices `2^r`.
    pub fn num_vertices(&self) -> u64 {
        1u64 << self.r
    }
}
