//! Named test functions and weights.
//!
//! | fixture        | exercises                                                        |
//! |----------------|------------------------------------------------------------------|
//! | `bump`         | smooth compactly supported symbol (CMO-like; compactness holds)  |
//! | `haar`         | jump symbol with unit oscillation on its cube                    |
//! | `sine`         | bounded symbol with non-vanishing large-scale and translation oscillation |
//! | `log_distance` | unbounded BMO symbol with oscillation at every scale             |
//! | `power_weight` | Muckenhoupt power weights `|x − c|^a`                             |

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Cube, GridSpec, SampledFunction};

fn dist(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn check_center(grid: &GridSpec, center: &[f64]) -> Result<()> {
    if center.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!(
            "center has {} coordinates, grid is {}-dimensional",
            center.len(),
            grid.dim()
        )));
    }
    Ok(())
}

/// `amplitude · exp(1 − 1/(1 − r²))` with `r = |x − center|/radius`, zero for
/// `r ≥ 1`; equals `amplitude` at the center.
pub fn bump(grid: &GridSpec, center: &[f64], radius: f64, amplitude: f64) -> Result<SampledFunction> {
    check_center(grid, center)?;
    if !(radius > 0.0) {
        return Err(Error::InvalidArgument(format!("bump radius {radius} must be positive")));
    }
    SampledFunction::from_fn(grid, |x| {
        let r = dist(x, center) / radius;
        if r < 1.0 {
            amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
        } else {
            0.0
        }
    })
}

/// Largest gradient magnitude of [`bump`], by a fine one-dimensional scan of
/// the radial profile.
pub fn bump_gradient_bound(radius: f64, amplitude: f64) -> f64 {
    let steps = 20_000;
    (1..steps)
        .map(|i| {
            let r = i as f64 / steps as f64;
            let s = 1.0 - r * r;
            // d/dr exp(1 − 1/s) = exp(1 − 1/s) · (−2r/s²)
            (1.0 - 1.0 / s).exp() * 2.0 * r / (s * s)
        })
        .fold(0.0, f64::max)
        * amplitude.abs()
        / radius
}

/// `+1` on the lower half of `cube` along the first axis, `−1` on the upper
/// half, zero outside the cube.
pub fn haar(grid: &GridSpec, cube: &Cube) -> Result<SampledFunction> {
    check_center(grid, &cube.center)?;
    let half = cube.side / 2.0;
    SampledFunction::from_fn(grid, |x| {
        let inside = x.iter().zip(&cube.center).all(|(a, c)| *a >= c - half && *a < c + half);
        if !inside {
            0.0
        } else if x[0] < cube.center[0] {
            1.0
        } else {
            -1.0
        }
    })
}

/// `amplitude · sin(frequency · x₀ + phase)`.
pub fn sine(grid: &GridSpec, frequency: f64, phase: f64, amplitude: f64) -> Result<SampledFunction> {
    SampledFunction::from_fn(grid, |x| amplitude * (frequency * x[0] + phase).sin())
}

/// `ln |x − center|`, with `center` moved by half a cell on every axis when it
/// falls on a node.
pub fn log_distance(grid: &GridSpec, center: &[f64]) -> Result<SampledFunction> {
    let c = off_node_center(grid, center)?;
    SampledFunction::from_fn(grid, |x| dist(x, &c).ln())
}

/// `|x − center|^exponent`, strictly positive: a center that falls on a node
/// is moved by half a cell on every axis.
pub fn power_weight(grid: &GridSpec, center: &[f64], exponent: f64) -> Result<SampledFunction> {
    let c = off_node_center(grid, center)?;
    SampledFunction::from_fn(grid, |x| dist(x, &c).powf(exponent))
}

fn off_node_center(grid: &GridSpec, center: &[f64]) -> Result<Vec<f64>> {
    check_center(grid, center)?;
    let on_node = (0..grid.len()).any(|i| dist(&grid.coord(i)[..grid.dim()], center) == 0.0);
    Ok(if on_node {
        center.iter().map(|c| c + 0.5 * grid.h()).collect()
    } else {
        center.to_vec()
    })
}

/// Declarative fixture choice, as read from experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fixture {
    Bump {
        center: Vec<f64>,
        radius: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    Haar {
        center: Vec<f64>,
        side: f64,
    },
    Sine {
        #[serde(default = "one")]
        frequency: f64,
        #[serde(default)]
        phase: f64,
        #[serde(default = "one")]
        amplitude: f64,
    },
    LogDistance {
        center: Vec<f64>,
    },
    Power {
        center: Vec<f64>,
        exponent: f64,
    },
    Constant {
        value: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl Fixture {
    pub fn sample(&self, grid: &GridSpec) -> Result<SampledFunction> {
        match self {
            Fixture::Bump { center, radius, amplitude } => bump(grid, center, *radius, *amplitude),
            Fixture::Haar { center, side } => haar(grid, &Cube::new(center.clone(), *side)?),
            Fixture::Sine { frequency, phase, amplitude } => sine(grid, *frequency, *phase, *amplitude),
            Fixture::LogDistance { center } => log_distance(grid, center),
            Fixture::Power { center, exponent } => power_weight(grid, center, *exponent),
            Fixture::Constant { value } => SampledFunction::constant(grid, *value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        let g = GridSpec::new(1, vec![-2.0], 0.01, 400).unwrap();
        let b = bump(&g, &[0.0], 1.0, 2.0).unwrap();
        assert!((b.max_abs() - 2.0).abs() < 1e-3);
        assert!(b.values().iter().enumerate().all(|(i, &v)| g.coord(i)[0].abs() < 1.0 || v == 0.0));
        // sampled finite differences stay under the analytic bound
        let bound = bump_gradient_bound(1.0, 2.0);
        let fd = b.values().windows(2).map(|w| (w[1] - w[0]).abs() / g.h()).fold(0.0, f64::max);
        assert!(fd <= bound * 1.001, "{fd} vs {bound}");
    }

    #[test]
    fn power_weight_is_positive_on_symmetric_grid() {
        let g = GridSpec::new(2, vec![-1.0, -1.0], 0.25, 8).unwrap();
        let w = power_weight(&g, &[0.0, 0.0], -0.5).unwrap();
        assert!(w.values().iter().all(|&v| v > 0.0 && v.is_finite()));
        // a center on a node is moved off it
        let w = power_weight(&g, &[-0.875, -0.875], -0.5).unwrap();
        assert!(w.values().iter().all(|&v| v.is_finite()));
    }

    #[test]
    fn config_round_trip() {
        let f: Fixture = serde_json::from_str(r#"{"kind":"sine","frequency":2.0}"#).unwrap();
        assert_eq!(f, Fixture::Sine { frequency: 2.0, phase: 0.0, amplitude: 1.0 });
        let json = serde_json::to_string(&f).unwrap();
        let back: Fixture = serde_json::from_str(&json).unwrap();
        assert_eq!(f, back);
        let g = GridSpec::new(1, vec![0.0], 0.5, 4).unwrap();
        let h = Fixture::Haar { center: vec![1.0], side: 2.0 }.sample(&g).unwrap();
        assert_eq!(h.values(), &[1.0, 1.0, -1.0, -1.0]);
    }
}
