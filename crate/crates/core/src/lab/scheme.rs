use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Cube;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeKind {
    Shrinking,
    Growing,
    Translating,
}

/// A cube sequence along which a symbol keeps oscillating.
///
/// * shrinking: `d_{j+1}/d_j < ratio_bound`;
/// * growing: `d_j/d_{j+1} < ratio_bound`;
/// * translating: equal sides `d`, with the balls `|x − y_j| < γ₂ d` pairwise
///   disjoint.
///
/// For the scale schemes `ratio_bound` plays the role of `β/(2γ₂)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeScheme {
    pub kind: SchemeKind,
    pub ratio_bound: Option<f64>,
    pub disjoint_gamma: Option<f64>,
    pub cubes: Vec<Cube>,
}

impl CubeScheme {
    /// Concentric cubes with sides `d₀, d₀·ratio, d₀·ratio², …`.
    pub fn shrinking(center: Vec<f64>, d0: f64, ratio: f64, len: usize, ratio_bound: f64) -> Result<Self> {
        if !(ratio > 0.0 && ratio < ratio_bound && ratio_bound < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "shrinking scheme needs 0 < ratio ({ratio}) < bound ({ratio_bound}) < 1"
            )));
        }
        let cubes = geometric(center, d0, ratio, len)?;
        Ok(CubeScheme { kind: SchemeKind::Shrinking, ratio_bound: Some(ratio_bound), disjoint_gamma: None, cubes })
    }

    /// Concentric cubes with sides `d₀, d₀·factor, d₀·factor², …`.
    pub fn growing(center: Vec<f64>, d0: f64, factor: f64, len: usize, ratio_bound: f64) -> Result<Self> {
        if !(factor > 1.0 && 1.0 / factor < ratio_bound && ratio_bound < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "growing scheme needs 1/factor ({}) < bound ({ratio_bound}) < 1",
                1.0 / factor
            )));
        }
        let cubes = geometric(center, d0, factor, len)?;
        Ok(CubeScheme { kind: SchemeKind::Growing, ratio_bound: Some(ratio_bound), disjoint_gamma: None, cubes })
    }

    /// Cubes of side `d` centered at `start + j·step`.
    pub fn translating(start: Vec<f64>, d: f64, step: Vec<f64>, len: usize, gamma2: f64) -> Result<Self> {
        if step.len() != start.len() {
            return Err(Error::InvalidArgument("step and start differ in dimension".into()));
        }
        let step_len = step.iter().map(|s| s * s).sum::<f64>().sqrt();
        if !(step_len > 2.0 * gamma2 * d) {
            return Err(Error::InvalidArgument(format!(
                "balls of radius γ₂d = {} overlap for step length {step_len}",
                gamma2 * d
            )));
        }
        let cubes = (0..len)
            .map(|j| {
                let c = start.iter().zip(&step).map(|(s, t)| s + j as f64 * t).collect();
                Cube::new(c, d)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CubeScheme { kind: SchemeKind::Translating, ratio_bound: None, disjoint_gamma: Some(gamma2), cubes })
    }

    pub fn len(&self) -> usize {
        self.cubes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cubes.is_empty()
    }

    /// Re-checks the defining inequality of the scheme.
    pub fn check(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        for w in self.cubes.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            match self.kind {
                SchemeKind::Shrinking => {
                    if !(b.side / a.side < self.ratio_bound.unwrap_or(0.0)) {
                        return bad(format!("side ratio {} violates the bound", b.side / a.side));
                    }
                }
                SchemeKind::Growing => {
                    if !(a.side / b.side < self.ratio_bound.unwrap_or(0.0)) {
                        return bad(format!("side ratio {} violates the bound", a.side / b.side));
                    }
                }
                SchemeKind::Translating => {}
            }
        }
        if let (SchemeKind::Translating, Some(g2)) = (self.kind, self.disjoint_gamma) {
            for (i, a) in self.cubes.iter().enumerate() {
                for b in &self.cubes[i + 1..] {
                    let dist = a.center.iter().zip(&b.center).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
                    if !(dist >= g2 * (a.side + b.side)) {
                        return bad(format!("balls around {:?} and {:?} intersect", a.center, b.center));
                    }
                }
            }
        }
        Ok(())
    }
}

fn geometric(center: Vec<f64>, d0: f64, factor: f64, len: usize) -> Result<Vec<Cube>> {
    (0..len).map(|j| Cube::new(center.clone(), d0 * factor.powi(j as i32))).collect()
}
