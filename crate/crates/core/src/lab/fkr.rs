use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{log_log_fit, proportional_fit, LineFit};
use crate::grid::{lq_mass_on, lq_norm, GridSpec, SampledFunction};
use crate::operator::shift_values;
use crate::oscillation::shift_in_cells;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Recipe for a seeded family of pairs on the unit sphere of
/// `L^{p₁} × L^{p₂}`.
///
/// `f` is random in `[0, 1)` on the ball `|x| < f_radius`; `g` is random in
/// `[½, 1)` times a plateau that equals one for `|x| ≤ g_plateau` and falls
/// smoothly to zero over a further `g_taper`. A spread-out `g` is what makes
/// far-field decay of the commutator follow `|x|^{−(n−α)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairSampling {
    pub count: usize,
    pub seed: u64,
    pub f_radius: f64,
    pub g_plateau: f64,
    pub g_taper: f64,
}

/// Draws the family described by `sampling`, normalized to unit `L^{p₁}` and
/// `L^{p₂}` norms. Identical inputs always give identical pairs.
pub fn sample_unit_pairs(
    grid: &GridSpec,
    p1: f64,
    p2: f64,
    sampling: &PairSampling,
) -> Result<Vec<(SampledFunction, SampledFunction)>> {
    if !(sampling.f_radius > 0.0 && sampling.g_plateau >= 0.0 && sampling.g_taper > 0.0) {
        return Err(Error::InvalidArgument("sampling radii must be positive".into()));
    }
    let radius: Vec<f64> = (0..grid.len())
        .map(|i| grid.coord(i)[..grid.dim()].iter().map(|c| c * c).sum::<f64>().sqrt())
        .collect();
    let profile: Vec<f64> = radius
        .iter()
        .map(|&r| {
            let t = (r - sampling.g_plateau) / sampling.g_taper;
            if t <= 0.0 {
                1.0
            } else if t < 1.0 {
                (1.0 - t * t).powi(2)
            } else {
                0.0
            }
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
    let mut out = Vec::with_capacity(sampling.count);
    for _ in 0..sampling.count {
        let f: Vec<f64> = radius
            .iter()
            .map(|&r| if r < sampling.f_radius { rng.gen_range(0.0..1.0) } else { 0.0 })
            .collect();
        let g: Vec<f64> = profile.iter().map(|&w| w * rng.gen_range(0.5..1.0)).collect();
        out.push((unit(grid, f, p1)?, unit(grid, g, p2)?));
    }
    Ok(out)
}

fn unit(grid: &GridSpec, values: Vec<f64>, p: f64) -> Result<SampledFunction> {
    let f = SampledFunction::new(grid.clone(), values)?;
    let norm = lq_norm(&f, p, None)?;
    if norm == 0.0 {
        return Err(Error::InvalidArgument("sampling support contains no grid node".into()));
    }
    Ok(f.scale(1.0 / norm))
}

/// Uniform moduli of a finite family of outputs in `L^q(w)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FkrReport {
    /// `sup ‖F‖_{L^q(w)}`.
    pub bound: f64,
    /// `(A, sup ∫_{|x|>A} |F|^q w)`.
    pub tail: Vec<(f64, f64)>,
    /// `(|t|, sup ‖F(· + t) − F‖_{L^q(w)})`.
    pub translation: Vec<(f64, f64)>,
}

impl FkrReport {
    /// Log-log fit of the tail mass against `A`, over entries with positive mass.
    pub fn tail_fit(&self) -> Result<LineFit> {
        let (a, m): (Vec<f64>, Vec<f64>) = self.tail.iter().filter(|t| t.1 > 0.0).copied().unzip();
        log_log_fit(&a, &m)
    }

    /// Fit of the translation modulus as `C·|t|`.
    pub fn translation_fit(&self) -> Result<LineFit> {
        let (t, v): (Vec<f64>, Vec<f64>) = self.translation.iter().copied().unzip();
        proportional_fit(&t, &v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,parameter (radius or shift length),value (L^q(w) mass or norm)\n");
        out.push_str(&format!("bound,,{:?}\n", self.bound));
        for (a, v) in &self.tail {
            out.push_str(&format!("tail,{a:?},{v:?}\n"));
        }
        for (t, v) in &self.translation {
            out.push_str(&format!("translation,{t:?},{v:?}\n"));
        }
        out
    }
}

/// Norm bound, tail masses beyond `|x| > A` and translation moduli, each the
/// supremum over `outputs`. Shifts are whole cells; values moved in from
/// outside the box are zero.
pub fn fkr_moduli(
    outputs: &[SampledFunction],
    q: f64,
    w: Option<&SampledFunction>,
    radii: &[f64],
    shifts: &[Vec<f64>],
) -> Result<FkrReport> {
    let first = outputs.first().ok_or_else(|| Error::InvalidArgument("empty output family".into()))?;
    let grid = first.grid();
    for o in outputs {
        grid.check_same(o.grid())?;
    }
    let cells = shifts.iter().map(|t| shift_in_cells(grid, t)).collect::<Result<Vec<_>>>()?;
    let norm_sq: Vec<f64> = (0..grid.len())
        .map(|i| grid.coord(i).iter().map(|c| c * c).sum::<f64>())
        .collect();

    let per_output = outputs
        .par_iter()
        .map(|f| -> Result<(f64, Vec<f64>, Vec<f64>)> {
            let bound = lq_norm(f, q, w)?;
            let tails = radii
                .iter()
                .map(|&a| lq_mass_on(f, q, w, |i| norm_sq[i] > a * a))
                .collect::<Result<Vec<_>>>()?;
            let trans = cells
                .iter()
                .map(|c| {
                    let moved = SampledFunction::new(grid.clone(), shift_values(f, c))?;
                    lq_norm(&moved.sub(f)?, q, w)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok((bound, tails, trans))
        })
        .collect::<Result<Vec<_>>>()?;

    let bound = per_output.iter().map(|p| p.0).fold(0.0, f64::max);
    let tail = radii
        .iter()
        .enumerate()
        .map(|(k, &a)| (a, per_output.iter().map(|p| p.1[k]).fold(0.0, f64::max)))
        .collect();
    let translation = shifts
        .iter()
        .enumerate()
        .map(|(k, t)| {
            let len = t.iter().map(|v| v * v).sum::<f64>().sqrt();
            (len, per_output.iter().map(|p| p.2[k]).fold(0.0, f64::max))
        })
        .collect();
    Ok(FkrReport { bound, tail, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::bump;
    use crate::grid::GridSpec;

    #[test]
    fn sampled_pairs_are_unit_and_reproducible() {
        let g = GridSpec::centered(1, 32.0, 64).unwrap();
        let sampling = PairSampling { count: 3, seed: 5, f_radius: 3.0, g_plateau: 10.0, g_taper: 8.0 };
        let a = sample_unit_pairs(&g, 3.0, 2.0, &sampling).unwrap();
        let b = sample_unit_pairs(&g, 3.0, 2.0, &sampling).unwrap();
        assert_eq!(a, b);
        for (f, h) in &a {
            assert!((lq_norm(f, 3.0, None).unwrap() - 1.0).abs() < 1e-12);
            assert!((lq_norm(h, 2.0, None).unwrap() - 1.0).abs() < 1e-12);
            assert!(f.values().iter().enumerate().all(|(i, &v)| v == 0.0 || g.coord(i)[0].abs() < 3.0));
            assert!(h.values().iter().enumerate().all(|(i, &v)| v == 0.0 || g.coord(i)[0].abs() < 18.0));
        }
        assert_ne!(a[0], a[1]);
    }

    #[test]
    fn zero_family() {
        let g = GridSpec::centered(1, 4.0, 64).unwrap();
        let z = SampledFunction::zeros(&g);
        let r = fkr_moduli(&[z], 2.0, None, &[1.0, 2.0], &[vec![g.h()]]).unwrap();
        assert_eq!(r.bound, 0.0);
        assert!(r.tail.iter().all(|t| t.1 == 0.0));
        assert!(r.translation.iter().all(|t| t.1 == 0.0));
    }

    #[test]
    fn compact_support_and_linear_translation() {
        let g = GridSpec::centered(1, 4.0, 800).unwrap();
        let f = bump(&g, &[0.0], 1.0, 1.0).unwrap();
        let h = g.h();
        let shifts: Vec<Vec<f64>> = (1..=4).map(|k| vec![k as f64 * h]).collect();
        let r = fkr_moduli(&[f], 2.0, None, &[0.5, 1.0, 1.5], &shifts).unwrap();
        assert!(r.tail[0].1 > 0.0);
        assert_eq!(r.tail[1].1, 0.0);
        assert_eq!(r.tail[2].1, 0.0);
        let fit = r.translation_fit().unwrap();
        assert!(fit.r_squared > 0.999);
        assert!(fit.slope > 0.0);
        assert!(matches!(
            fkr_moduli(&[SampledFunction::zeros(&g)], 2.0, None, &[], &[vec![0.3 * h]]),
            Err(Error::ShiftNotOnGrid(_))
        ));
    }
}
