//! Exponent bookkeeping for the bilinear fractional setting.
//!
//! Given `(n, α, p₁, p₂)`, the Hölder exponent `p` satisfies
//! `1/p = 1/p₁ + 1/p₂` and the Sobolev target exponent `q` satisfies
//! `1/q = 1/p₁ + 1/p₂ − α/n`. All dual exponents used elsewhere in the crate
//! come from here.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Hölder dual `p' = p / (p − 1)`.
pub fn dual(p: f64) -> f64 {
    p / (p - 1.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawExponents", into = "RawExponents")]
pub struct ExponentConfig {
    dim: usize,
    alpha: f64,
    p1: f64,
    p2: f64,
    p: f64,
    q: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
struct RawExponents {
    n: usize,
    alpha: f64,
    p1: f64,
    p2: f64,
}

impl TryFrom<RawExponents> for ExponentConfig {
    type Error = Error;
    fn try_from(r: RawExponents) -> Result<Self> {
        ExponentConfig::new(r.n, r.alpha, r.p1, r.p2)
    }
}

impl From<ExponentConfig> for RawExponents {
    fn from(c: ExponentConfig) -> Self {
        RawExponents { n: c.dim, alpha: c.alpha, p1: c.p1, p2: c.p2 }
    }
}

impl ExponentConfig {
    pub fn new(dim: usize, alpha: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::Exponents(format!("dimension n = {dim} must be 1 or 2")));
        }
        let n = dim as f64;
        if !(alpha > 0.0 && alpha < 2.0 * n) {
            return Err(Error::Exponents(format!("requires 0 < α < 2n, got α = {alpha}")));
        }
        for (name, v) in [("p₁", p1), ("p₂", p2)] {
            if !(v > 1.0 && v.is_finite()) {
                return Err(Error::Exponents(format!("requires 1 < {name} < ∞, got {v}")));
            }
        }
        let inv_p = 1.0 / p1 + 1.0 / p2;
        if alpha / n >= inv_p {
            return Err(Error::Exponents(format!(
                "requires α/n < 1/p₁ + 1/p₂ (α/n = {}, 1/p₁ + 1/p₂ = {inv_p})",
                alpha / n
            )));
        }
        let p = 1.0 / inv_p;
        if p <= 1.0 {
            return Err(Error::Exponents(format!(
                "requires p > 1 where 1/p = 1/p₁ + 1/p₂ (got p = {p})"
            )));
        }
        let inv_q = inv_p - alpha / n;
        let q = 1.0 / inv_q;
        if !(q > 1.0 && q.is_finite()) {
            return Err(Error::Exponents(format!(
                "requires 1 < q < ∞ where 1/q = 1/p₁ + 1/p₂ − α/n (got q = {q})"
            )));
        }
        Ok(ExponentConfig { dim, alpha, p1, p2, p, q })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p1_dual(&self) -> f64 {
        dual(self.p1)
    }

    pub fn p2_dual(&self) -> f64 {
        dual(self.p2)
    }

    pub fn p_dual(&self) -> f64 {
        dual(self.p)
    }

    /// Homogeneity degree of the kernel, `2n − α`.
    pub fn kernel_degree(&self) -> f64 {
        2.0 * self.dim as f64 - self.alpha
    }

    /// `1/p₁' + 1/p₂'`, the power of `|Q|` in the witness pointwise bounds.
    pub fn witness_volume_power(&self) -> f64 {
        1.0 / self.p1_dual() + 1.0 / self.p2_dual()
    }

    /// Tail-mass exponent `n − (n − α)q` from the vanishing-tail bound.
    pub fn tail_exponent(&self) -> f64 {
        let n = self.dim as f64;
        n - (n - self.alpha) * self.q
    }
}
