use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::grid::{range_mean, Cube, SampledFunction};

/// The pair `(f, g)` built on a cube where the symbol oscillates:
///
/// `f = |Q|^{−1/p₁} (sgn(b − b_Q) − c₀) χ_Q`, `g = |Q|^{−1/p₂} χ_Q`,
/// `c₀ = ⨍_Q sgn(b − b_Q)`.
///
/// `|Q|` is the quadrature measure of the cube and `sgn(0) = 0`, so `f` has
/// exactly zero discrete mean up to rounding and `(b − b_Q) f ≥ 0` holds at
/// every node.
#[derive(Clone, Debug, PartialEq)]
pub struct WitnessPair {
    pub f: SampledFunction,
    pub g: SampledFunction,
    pub cube: Cube,
    pub c0: f64,
    /// Mean oscillation of `b` on the cube.
    pub epsilon_achieved: f64,
    /// `b_Q`, the average of the symbol over the cube.
    pub average: f64,
    /// Quadrature measure `|Q|`.
    pub measure: f64,
}

/// Scalar data of a [`WitnessPair`], for reports.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessSummary {
    pub cube: Cube,
    pub c0: f64,
    pub epsilon_achieved: f64,
    pub average: f64,
    pub measure: f64,
}

impl WitnessPair {
    pub fn summary(&self) -> WitnessSummary {
        WitnessSummary {
            cube: self.cube.clone(),
            c0: self.c0,
            epsilon_achieved: self.epsilon_achieved,
            average: self.average,
            measure: self.measure,
        }
    }
}

fn sgn(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

pub fn witness_pair(b: &SampledFunction, q: &Cube, cfg: &ExponentConfig) -> Result<WitnessPair> {
    if cfg.dim() != b.grid().dim() {
        return Err(Error::GridMismatch("exponent dimension differs from the symbol grid".into()));
    }
    witness_pair_with(b, q, cfg.p1(), cfg.p2())
}

/// [`witness_pair`] from the two Lebesgue exponents alone; no Sobolev target
/// exponent is needed to build the pair.
pub fn witness_pair_with(b: &SampledFunction, q: &Cube, p1: f64, p2: f64) -> Result<WitnessPair> {
    let grid = b.grid();
    if !(p1 > 1.0 && p2 > 1.0) {
        return Err(Error::Exponents(format!("witness needs p₁, p₂ > 1, got {p1}, {p2}")));
    }
    let range = grid.cube_nodes(q)?;
    let count = range.count() as f64;
    let measure = count * grid.cell_volume();
    let bq = range_mean(b.values(), &range);

    let signs: Vec<(usize, f64)> = range.iter().map(|i| (i, sgn(b.value(i) - bq))).collect();
    let epsilon: f64 = range.iter().map(|i| (b.value(i) - bq).abs()).sum::<f64>() / count;
    let scale = range.iter().map(|i| b.value(i).abs()).fold(0.0, f64::max);
    let has_pos = signs.iter().any(|s| s.1 > 0.0);
    let has_neg = signs.iter().any(|s| s.1 < 0.0);
    // A symbol that is constant on the cube up to rounding gives either no
    // nonzero sign or a single sign everywhere (c₀ = ±1, f ≡ 0).
    if !(has_pos && has_neg) || epsilon <= 1e-14 * scale {
        return Err(Error::ZeroOscillation);
    }
    let c0 = signs.iter().map(|s| s.1).sum::<f64>() / count;

    let amp_f = measure.powf(-1.0 / p1);
    let amp_g = measure.powf(-1.0 / p2);
    let mut f = vec![0.0; grid.len()];
    let mut g = vec![0.0; grid.len()];
    for &(i, s) in &signs {
        f[i] = amp_f * (s - c0);
        g[i] = amp_g;
    }
    Ok(WitnessPair {
        f: SampledFunction::new(grid.clone(), f)?,
        g: SampledFunction::new(grid.clone(), g)?,
        cube: q.clone(),
        c0,
        epsilon_achieved: epsilon,
        average: bq,
        measure,
    })
}

/// Measured deviations of one witness pair from its defining properties.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessAudit {
    /// `|Σ f h^n|`.
    pub mean_error: f64,
    /// Nodes outside the cube where `f` or `g` is nonzero.
    pub support_violations: usize,
    /// Nodes where `(b − b_Q) f < 0`.
    pub sign_violations: usize,
    /// Nodes where `|f| > 2 |Q|^{−1/p₁}`.
    pub amplitude_violations: usize,
    /// `|‖g‖_{L^{p₂}} − 1|`.
    pub g_norm_error: f64,
    /// Relative error in `Σ (b − b_Q) f h^n = |Q|^{−1/p₁} Σ_Q |b − b_Q| h^n`.
    pub pairing_error: f64,
    pub c0_in_open_unit_interval: bool,
}

/// Re-derives every witness property directly from the sampled data.
pub fn audit_witness(b: &SampledFunction, w: &WitnessPair, cfg: &ExponentConfig) -> Result<WitnessAudit> {
    let grid = b.grid();
    let range = grid.cube_nodes(&w.cube)?;
    let cv = grid.cell_volume();
    let mut inside = vec![false; grid.len()];
    for i in range.iter() {
        inside[i] = true;
    }
    let (f, g) = (&w.f, &w.g);
    let amp = 2.0 * w.measure.powf(-1.0 / cfg.p1());
    let mut support_violations = 0;
    let mut sign_violations = 0;
    let mut amplitude_violations = 0;
    let mut pairing = 0.0;
    let mut abs_dev = 0.0;
    for i in 0..grid.len() {
        let (fv, gv) = (f.value(i), g.value(i));
        if !inside[i] {
            if fv != 0.0 || gv != 0.0 {
                support_violations += 1;
            }
            continue;
        }
        let d = b.value(i) - w.average;
        if d * fv < 0.0 {
            sign_violations += 1;
        }
        if fv.abs() > amp {
            amplitude_violations += 1;
        }
        pairing += d * fv;
        abs_dev += d.abs();
    }
    let expected = w.measure.powf(-1.0 / cfg.p1()) * abs_dev * cv;
    pairing *= cv;
    Ok(WitnessAudit {
        mean_error: f.integral().abs(),
        support_violations,
        sign_violations,
        amplitude_violations,
        g_norm_error: (crate::grid::lq_norm(g, cfg.p2(), None)? - 1.0).abs(),
        pairing_error: ((pairing - expected) / expected).abs(),
        c0_in_open_unit_interval: w.c0 > -1.0 && w.c0 < 1.0,
    })
}
