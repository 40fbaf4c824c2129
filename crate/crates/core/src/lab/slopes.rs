use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::fit::log_log_fit;
use crate::grid::{Cube, SampledFunction};
use crate::kernel::KernelParams;
use crate::operator::{ApplyMode, BilinearOperator};

use super::witness::witness_pair_with;

/// Directions sampled on each circle in two dimensions.
const DIRECTIONS_2D: usize = 16;
/// Radial samples per annulus `[r, 1.1 r]`.
const RADIAL_SAMPLES: usize = 3;

/// Fitted decay exponents of the witness images away from the cube.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SlopeEstimate {
    /// Slope of the annulus mean of `|I((b − b_Q) f, g)|`.
    pub s1: f64,
    /// Slope of the annulus minimum of the same quantity.
    pub s2: f64,
    /// Slope of the annulus mean of `|I(f, g)|`.
    pub s3: f64,
    pub r_squared: [f64; 3],
    /// `min_r` of annulus-min / `(ε |Q|^{1/p₁′+1/p₂′} r^{−(2n−α)})`.
    pub est2_constant: f64,
    /// Ratio of the largest to the smallest per-radius constant.
    pub est2_spread: f64,
    pub epsilon: f64,
    pub radii: Vec<f64>,
    pub est1_mean: Vec<f64>,
    pub est1_min: Vec<f64>,
    pub est3_mean: Vec<f64>,
}

fn annulus_points(center: &[f64], r: f64) -> Vec<Vec<f64>> {
    let mut pts = Vec::new();
    for k in 0..RADIAL_SAMPLES {
        let rho = r * (1.0 + 0.1 * k as f64 / (RADIAL_SAMPLES - 1) as f64);
        if center.len() == 1 {
            pts.push(vec![center[0] + rho]);
            pts.push(vec![center[0] - rho]);
        } else {
            for j in 0..DIRECTIONS_2D {
                let th = std::f64::consts::TAU * j as f64 / DIRECTIONS_2D as f64;
                pts.push(vec![center[0] + rho * th.cos(), center[1] + rho * th.sin()]);
            }
        }
    }
    pts
}

/// Evaluates the witness images on annuli around `q` and fits log-log slopes.
pub fn estimate_slopes(b: &SampledFunction, q: &Cube, cfg: &ExponentConfig, radii: &[f64]) -> Result<SlopeEstimate> {
    estimate_slopes_with(b, q, &KernelParams::from_config(cfg, None)?, cfg.p1(), cfg.p2(), radii)
}

/// [`estimate_slopes`] for an untruncated kernel and Lebesgue exponents given
/// directly. The decay estimates do not involve the Sobolev exponent `q`, so
/// this also covers `(n, α)` for which no admissible `q` exists.
pub fn estimate_slopes_with(
    b: &SampledFunction,
    q: &Cube,
    params: &KernelParams,
    p1: f64,
    p2: f64,
    radii: &[f64],
) -> Result<SlopeEstimate> {
    let grid = b.grid();
    if params.delta().is_some() {
        return Err(Error::InvalidArgument("decay estimates use the untruncated kernel".into()));
    }
    let n = grid.dim() as f64;
    let inner = 2.0 * n.sqrt() * q.side;
    if radii.len() < 2 {
        return Err(Error::InvalidArgument("slope fits need at least two radii".into()));
    }
    for &r in radii {
        if !(r > inner) {
            return Err(Error::InvalidArgument(format!("radius {r} is inside 2√n·d = {inner}")));
        }
        if annulus_points(&q.center, r).iter().any(|p| !grid.contains_point(p)) {
            return Err(Error::AnnulusOffGrid { radius: r });
        }
    }
    let w = witness_pair_with(b, q, p1, p2)?;
    let shifted = b.add_constant(-w.average).mul(&w.f)?;
    let op = BilinearOperator::new(grid, *params, ApplyMode::Direct)?;
    let power = (1.0 - 1.0 / p1) + (1.0 - 1.0 / p2);
    let degree = params.degree();

    let (mut m1, mut lo1, mut m3, mut consts) = (vec![], vec![], vec![], vec![]);
    for &r in radii {
        let pts = annulus_points(&q.center, r);
        let e1 = op.apply_at(&shifted, &w.g, &pts)?;
        let e3 = op.apply_at(&w.f, &w.g, &pts)?;
        let k = pts.len() as f64;
        m1.push(e1.iter().map(|v| v.abs()).sum::<f64>() / k);
        let lo = e1.iter().map(|v| v.abs()).fold(f64::INFINITY, f64::min);
        lo1.push(lo);
        m3.push(e3.iter().map(|v| v.abs()).sum::<f64>() / k);
        consts.push(lo / (w.epsilon_achieved * w.measure.powf(power) * r.powf(-degree)));
    }
    let f1 = log_log_fit(radii, &m1)?;
    let f2 = log_log_fit(radii, &lo1)?;
    let f3 = log_log_fit(radii, &m3)?;
    let cmin = consts.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = consts.iter().copied().fold(0.0, f64::max);
    Ok(SlopeEstimate {
        s1: f1.slope,
        s2: f2.slope,
        s3: f3.slope,
        r_squared: [f1.r_squared, f2.r_squared, f3.r_squared],
        est2_constant: cmin,
        est2_spread: cmax / cmin,
        epsilon: w.epsilon_achieved,
        radii: radii.to_vec(),
        est1_mean: m1,
        est1_min: lo1,
        est3_mean: m3,
    })
}

/// `count` radii log-spaced over `[lo, hi]`.
pub fn log_radii(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count)
        .map(|i| lo * (hi / lo).powf(i as f64 / (count - 1) as f64))
        .collect()
}
