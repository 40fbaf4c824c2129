use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::grid::{lq_norm, SampledFunction};
use crate::kernel::KernelParams;
use crate::operator::{ApplyMode, BilinearOperator, Slot};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationPoint {
    pub delta: f64,
    /// `‖[b, I^δ]_1(f, g) − [b, I]_1(f, g)‖_{L^q(w)}`.
    pub difference: f64,
}

/// Distance between the truncated and the full commutator at fixed inputs,
/// for each `δ` in a decreasing list.
pub fn truncation_convergence(
    b: &SampledFunction,
    f: &SampledFunction,
    g: &SampledFunction,
    cfg: &ExponentConfig,
    deltas: &[f64],
    weight: Option<&SampledFunction>,
    mode: ApplyMode,
) -> Result<Vec<TruncationPoint>> {
    let grid = b.grid();
    let min = 2.0 * grid.h();
    if let Some(&d) = deltas.iter().find(|&&d| d < min * (1.0 - 1e-12)) {
        return Err(Error::UnderResolvedTruncation { delta: d, min });
    }
    if deltas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument("truncation scales must be strictly decreasing".into()));
    }
    let full_params = KernelParams::from_config(cfg, None)?;
    let full = BilinearOperator::new(grid, full_params, mode)?.commutator(b, f, g, Slot::First)?;
    deltas
        .iter()
        .map(|&delta| {
            let op = BilinearOperator::new(grid, full_params.with_delta(Some(delta))?, mode)?;
            let t = op.commutator(b, f, g, Slot::First)?;
            Ok(TruncationPoint { delta, difference: lq_norm(&t.sub(&full)?, cfg.q(), weight)? })
        })
        .collect()
}

/// `true` when the differences never increase by more than `tol` (relative to
/// the first value) as `δ` decreases.
pub fn is_nonincreasing(points: &[TruncationPoint], tol: f64) -> bool {
    let scale = points.first().map_or(0.0, |p| p.difference);
    points.windows(2).all(|w| w[1].difference <= w[0].difference + tol * scale)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bump;
    use crate::grid::GridSpec;

    fn setup() -> (GridSpec, ExponentConfig, SampledFunction, SampledFunction) {
        let g = GridSpec::centered(1, 1.0, 128).unwrap();
        let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
        let f = SampledFunction::from_fn(&g, |x| (1.0 - x[0] * x[0]) * (2.0 * x[0]).cos()).unwrap();
        let gg = SampledFunction::from_fn(&g, |x| 1.0 + 0.5 * x[0]).unwrap();
        (g, cfg, f, gg)
    }

    #[test]
    fn constant_symbol_gives_zero_differences() {
        let (g, cfg, f, gg) = setup();
        let b = SampledFunction::constant(&g, 1.5).unwrap();
        let pts = truncation_convergence(&b, &f, &gg, &cfg, &[0.2, 0.1], None, ApplyMode::Direct).unwrap();
        assert!(pts.iter().all(|p| p.difference < 1e-12));
    }

    #[test]
    fn huge_delta_recovers_the_full_commutator() {
        let (g, cfg, f, gg) = setup();
        let b = bump(&g, &[0.1], 0.6, 1.0).unwrap();
        let pts = truncation_convergence(&b, &f, &gg, &cfg, &[10.0], None, ApplyMode::Direct).unwrap();
        let full = BilinearOperator::new(&g, KernelParams::from_config(&cfg, None).unwrap(), ApplyMode::Direct)
            .unwrap()
            .commutator(&b, &f, &gg, Slot::First)
            .unwrap();
        let norm = lq_norm(&full, cfg.q(), None).unwrap();
        assert!((pts[0].difference - norm).abs() <= 1e-12 * norm);
    }

    #[test]
    fn halving_sequence_decreases() {
        let (g, cfg, f, gg) = setup();
        let b = bump(&g, &[0.1], 0.6, 1.0).unwrap();
        let h = g.h();
        let deltas: Vec<f64> = (0..5).map(|k| 32.0 * h / 2f64.powi(k)).collect();
        let pts = truncation_convergence(&b, &f, &gg, &cfg, &deltas, None, ApplyMode::Direct).unwrap();
        assert!(is_nonincreasing(&pts, 1e-6), "{pts:?}");
        assert!(pts[4].difference <= 0.1 * pts[0].difference, "{pts:?}");
        assert!(matches!(
            truncation_convergence(&b, &f, &gg, &cfg, &[h], None, ApplyMode::Direct),
            Err(Error::UnderResolvedTruncation { .. })
        ));
    }
}
