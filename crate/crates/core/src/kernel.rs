//! The bilinear fractional kernel `(|x−y|² + |x−z|²)^{−(n−α/2)}` and its
//! smooth truncations.
//!
//! The truncated kernel multiplies by a cutoff in the Euclidean radius
//! `ρ = (|x−y|² + |x−z|²)^{1/2}` that vanishes for `ρ ≤ √2·δ` and equals one
//! for `ρ ≥ 2δ`, with a quintic smoothstep in between. Since
//! `max(|x−y|, |x−z|) ≤ ρ ≤ √2·max(|x−y|, |x−z|)`, the truncation is zero
//! whenever both distances are below `δ` and agrees with the full kernel once
//! either exceeds `2δ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelParams {
    dim: usize,
    alpha: f64,
    delta: Option<f64>,
}

impl KernelParams {
    pub fn new(dim: usize, alpha: f64, delta: Option<f64>) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidArgument(format!("kernel dimension {dim} must be 1 or 2")));
        }
        if !(alpha > 0.0 && alpha < 2.0 * dim as f64) {
            return Err(Error::InvalidArgument(format!("kernel requires 0 < α < 2n, got {alpha}")));
        }
        if let Some(d) = delta {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::InvalidArgument(format!("truncation δ = {d} must be positive")));
            }
        }
        Ok(KernelParams { dim, alpha, delta })
    }

    pub fn from_config(cfg: &ExponentConfig, delta: Option<f64>) -> Result<Self> {
        KernelParams::new(cfg.dim(), cfg.alpha(), delta)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn delta(&self) -> Option<f64> {
        self.delta
    }

    pub fn with_delta(&self, delta: Option<f64>) -> Result<Self> {
        KernelParams::new(self.dim, self.alpha, delta)
    }

    /// Homogeneity degree `2n − α`.
    pub fn degree(&self) -> f64 {
        2.0 * self.dim as f64 - self.alpha
    }

    /// Constant `C` with `|∇K^δ| ≤ C·(|x−y| + |x−z|)^{−(2n−α+1)}`, uniformly
    /// in `δ`, for the gradient in all `3n` variables.
    ///
    /// `ρ` has gradient norm at most `√3`; on the transition window
    /// `|ψ'| ≤ (15/8)/((2 − √2)δ) ≤ 6.4/ρ`; and `ρ ≥ (|x−y| + |x−z|)/√2`.
    pub fn gradient_bound_constant(&self) -> f64 {
        let d = self.degree();
        3f64.sqrt() * (6.4 + d) * 2f64.powf(0.5 * (d + 1.0))
    }

    /// Kernel value as a function of `ρ² = |x−y|² + |x−z|²`.
    ///
    /// At `ρ² = 0` the untruncated profile is `+∞`; callers apply their own
    /// singular-node policy before reaching it.
    #[inline]
    pub fn profile(&self, rho2: f64) -> f64 {
        let e = -0.5 * self.degree();
        match self.delta {
            None => rho2.powf(e),
            Some(d) => {
                let cut = cutoff_sq(rho2, d);
                if cut == 0.0 {
                    0.0
                } else {
                    cut * rho2.powf(e)
                }
            }
        }
    }
}

/// Quintic smoothstep `6s⁵ − 15s⁴ + 10s³`, clamped to `[0, 1]`.
#[inline]
pub fn smoothstep(s: f64) -> f64 {
    if s <= 0.0 {
        0.0
    } else if s >= 1.0 {
        1.0
    } else {
        s * s * s * (s * (6.0 * s - 15.0) + 10.0)
    }
}

/// Cutoff `ψ_δ(ρ)`: zero for `ρ ≤ √2·δ`, one for `ρ ≥ 2δ`.
pub fn cutoff(rho: f64, delta: f64) -> f64 {
    cutoff_sq(rho * rho, delta)
}

#[inline]
fn cutoff_sq(rho2: f64, delta: f64) -> f64 {
    let d2 = delta * delta;
    if rho2 <= 2.0 * d2 {
        return 0.0;
    }
    let two_d = 2.0 * delta;
    if rho2 >= two_d * two_d {
        return 1.0;
    }
    let lo = std::f64::consts::SQRT_2 * delta;
    smoothstep((rho2.sqrt() - lo) / (two_d - lo))
}

fn rho_sq(x: &[f64], y: &[f64], z: &[f64], dim: usize) -> Result<f64> {
    if x.len() != dim || y.len() != dim || z.len() != dim {
        return Err(Error::InvalidArgument(format!("points must have {dim} coordinates")));
    }
    let mut s = 0.0;
    for i in 0..dim {
        let a = x[i] - y[i];
        let b = x[i] - z[i];
        s += a * a + b * b;
    }
    Ok(s)
}

/// Untruncated kernel `(|x−y|² + |x−z|²)^{−(n−α/2)}`. Any truncation scale in
/// `params` is ignored.
pub fn k_alpha(x: &[f64], y: &[f64], z: &[f64], params: &KernelParams) -> Result<f64> {
    let r2 = rho_sq(x, y, z, params.dim)?;
    if r2 == 0.0 {
        return Err(Error::SingularNode);
    }
    Ok(r2.powf(-0.5 * params.degree()))
}

/// Smoothly truncated kernel `ψ_δ(ρ)·k_alpha`. Zero at the singular point.
pub fn k_delta(x: &[f64], y: &[f64], z: &[f64], params: &KernelParams) -> Result<f64> {
    let delta = params
        .delta
        .ok_or_else(|| Error::InvalidArgument("k_delta needs a truncation scale".into()))?;
    let r2 = rho_sq(x, y, z, params.dim)?;
    let cut = cutoff_sq(r2, delta);
    if cut == 0.0 {
        return Ok(0.0);
    }
    Ok(cut * r2.powf(-0.5 * params.degree()))
}

/// Central-difference estimate of `|∇K^δ|` over all `3n` coordinates of
/// `(x, y, z)` with step `step`.
pub fn fd_gradient_norm(x: &[f64], y: &[f64], z: &[f64], params: &KernelParams, step: f64) -> Result<f64> {
    let n = params.dim;
    rho_sq(x, y, z, n)?;
    let mut point: Vec<f64> = x.iter().chain(y).chain(z).copied().collect();
    let eval = |p: &[f64]| k_delta(&p[..n], &p[n..2 * n], &p[2 * n..], params);
    let mut sq = 0.0;
    for i in 0..3 * n {
        let keep = point[i];
        point[i] = keep + step;
        let up = eval(&point)?;
        point[i] = keep - step;
        let down = eval(&point)?;
        point[i] = keep;
        let d = (up - down) / (2.0 * step);
        sq += d * d;
    }
    Ok(sq.sqrt())
}
