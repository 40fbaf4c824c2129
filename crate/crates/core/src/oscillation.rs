//! Mean oscillation, family-supremum BMO norms and the three CMO moduli.
//!
//! The CMO moduli are reported as finite sequences:
//!
//! * small and large scales: for a cube volume `a`, the largest mean
//!   oscillation over every grid-aligned cube of that volume (stride one node);
//! * translation: for a fixed reference cube `Q` and shifts `y`, the quantity
//!   `(1/|Q|) Σ_{x ∈ Q} |b(x + y) − b_Q|`, where `b_Q` is the average over the
//!   unshifted cube.
//!
//! Whether a sequence "tends to zero" is judged from a fitted trend, never
//! claimed as a limit.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{line_fit, LineFit};
use crate::grid::{dyadic_cubes, range_mean, Cube, GridSpec, NodeRange, SampledFunction};

/// `(1/|Q|) Σ_{x ∈ Q} |b(x) − b_Q|` over the nodes of `q`.
pub fn mean_oscillation(b: &SampledFunction, q: &Cube) -> Result<f64> {
    let range = b.grid().cube_nodes(q)?;
    Ok(range_oscillation(b.values(), &range))
}

fn range_oscillation(values: &[f64], range: &NodeRange) -> f64 {
    let mean = range_mean(values, range);
    let dev: f64 = range.iter().map(|i| (values[i] - mean).abs()).sum();
    dev / range.count() as f64
}

/// Family supremum of the mean oscillation; a lower bound for `‖b‖_BMO`.
pub fn bmo_norm(b: &SampledFunction, cubes: &[Cube]) -> Result<f64> {
    if cubes.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let osc = cubes
        .par_iter()
        .map(|q| mean_oscillation(b, q))
        .collect::<Result<Vec<f64>>>()?;
    Ok(osc.into_iter().fold(0.0, f64::max))
}

/// Rescales `b` to unit family-supremum BMO norm and returns it together with
/// the original norm. The rescaled norm is re-checked against 1.
pub fn normalize_bmo(b: &SampledFunction, cubes: &[Cube]) -> Result<(SampledFunction, f64)> {
    let norm = bmo_norm(b, cubes)?;
    if norm == 0.0 {
        return Err(Error::ZeroOscillation);
    }
    let scaled = b.scale(1.0 / norm);
    let check = bmo_norm(&scaled, cubes)?;
    if (check - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidArgument(format!("rescaled BMO norm is {check}, expected 1")));
    }
    Ok((scaled, norm))
}

/// Every dyadic level of the grid box that resolves at least two nodes per
/// side, with half-shifts.
pub fn full_dyadic_family(grid: &GridSpec) -> Result<Vec<Cube>> {
    let mut max_level = 0u32;
    while grid.m() >> (max_level + 1) >= 2 {
        max_level += 1;
    }
    dyadic_cubes(grid, 0, max_level)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModulusKind {
    SmallScale,
    LargeScale,
    Translation,
}

impl ModulusKind {
    fn tag(self) -> &'static str {
        match self {
            ModulusKind::SmallScale => "small_scale",
            ModulusKind::LargeScale => "large_scale",
            ModulusKind::Translation => "translation",
        }
    }
}

/// One entry of a modulus sequence: the cube volume (scales) or shift length
/// (translation), and the modulus there.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusPoint {
    pub parameter: f64,
    pub modulus: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscillationReport {
    /// Family supremum over the full dyadic family and every scanned cube.
    pub bmo_norm: f64,
    pub small_scale: Vec<ModulusPoint>,
    pub large_scale: Vec<ModulusPoint>,
    pub translation: Vec<ModulusPoint>,
}

impl OscillationReport {
    pub fn points(&self, kind: ModulusKind) -> &[ModulusPoint] {
        match kind {
            ModulusKind::SmallScale => &self.small_scale,
            ModulusKind::LargeScale => &self.large_scale,
            ModulusKind::Translation => &self.translation,
        }
    }

    /// Least-squares slope of the modulus against `ln(parameter)`.
    pub fn trend(&self, kind: ModulusKind) -> Result<LineFit> {
        let pts = self.points(kind);
        let x: Vec<f64> = pts.iter().map(|p| p.parameter.ln()).collect();
        let y: Vec<f64> = pts.iter().map(|p| p.modulus).collect();
        line_fit(&x, &y)
    }

    /// One row per `(kind, parameter, modulus)`, preceded by the BMO norm.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("kind,parameter (volume or shift length),modulus (units of b)\n");
        out.push_str(&format!("bmo_norm,,{:?}\n", self.bmo_norm));
        for kind in [ModulusKind::SmallScale, ModulusKind::LargeScale, ModulusKind::Translation] {
            for p in self.points(kind) {
                out.push_str(&format!("{},{:?},{:?}\n", kind.tag(), p.parameter, p.modulus));
            }
        }
        out
    }
}

/// Largest mean oscillation over all grid-aligned cubes of volume `a`.
/// Returns the realized quadrature volume alongside the modulus.
pub fn scale_modulus(b: &SampledFunction, a: f64) -> Result<ModulusPoint> {
    let grid = b.grid();
    let dim = grid.dim();
    let h = grid.h();
    if !(a > 0.0 && a.is_finite()) {
        return Err(Error::InvalidArgument(format!("cube volume {a} must be positive")));
    }
    let side = a.powf(1.0 / dim as f64);
    let k = (side / h).round() as usize;
    if k < 2 {
        return Err(Error::CubeUnderResolved { side, min: 2.0 * h });
    }
    if k > grid.m() {
        return Err(Error::InvalidArgument(format!(
            "cube volume {a} exceeds the grid box volume {}",
            grid.box_side().powi(dim as i32)
        )));
    }
    let positions = grid.m() - k + 1;
    let total = positions.pow(dim as u32);
    let values = b.values();
    let m = grid.m();
    let best = (0..total)
        .into_par_iter()
        .map(|p| {
            let (r, c) = if dim == 1 { (0, p) } else { (p / positions, p % positions) };
            let mean_dev = |centre: f64| -> f64 {
                let mut s = 0.0;
                if dim == 1 {
                    for v in &values[c..c + k] {
                        s += (v - centre).abs();
                    }
                } else {
                    for row in r..r + k {
                        for v in &values[row * m + c..row * m + c + k] {
                            s += (v - centre).abs();
                        }
                    }
                }
                s
            };
            let count = k.pow(dim as u32) as f64;
            let mut sum = 0.0;
            if dim == 1 {
                sum = values[c..c + k].iter().sum();
            } else {
                for row in r..r + k {
                    sum += values[row * m + c..row * m + c + k].iter().sum::<f64>();
                }
            }
            mean_dev(sum / count) / count
        })
        .reduce(|| 0.0, f64::max);
    Ok(ModulusPoint { parameter: ((k as f64) * h).powi(dim as i32), modulus: best })
}

/// `(1/|Q|) Σ_{x ∈ Q} |b(x + y) − b_Q|` with `b_Q` over the unshifted cube.
/// Nodes whose translate leaves the grid box are skipped; the shift must be a
/// whole number of cells on each axis.
pub fn translation_modulus(b: &SampledFunction, q: &Cube, shift: &[f64]) -> Result<f64> {
    let grid = b.grid();
    let cells = shift_in_cells(grid, shift)?;
    let range = grid.cube_nodes(q)?;
    let bq = range_mean(b.values(), &range);
    let m = grid.m() as isize;
    let mut sum = 0.0;
    let mut count = 0usize;
    for lin in range.iter() {
        let idx = grid.multi_index(lin);
        let mut out = [0usize; 2];
        let mut inside = true;
        for a in 0..grid.dim() {
            let j = idx[a] as isize + cells[a];
            if j < 0 || j >= m {
                inside = false;
                break;
            }
            out[a] = j as usize;
        }
        if inside {
            sum += (b.value(grid.linear_index(out)) - bq).abs();
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::CubeOffGrid);
    }
    Ok(sum / count as f64)
}

/// Converts a shift vector to whole cells, rejecting off-lattice shifts.
pub fn shift_in_cells(grid: &GridSpec, shift: &[f64]) -> Result<Vec<isize>> {
    if shift.len() != grid.dim() {
        return Err(Error::InvalidArgument(format!("shift must have {} components", grid.dim())));
    }
    shift
        .iter()
        .map(|&t| {
            let c = t / grid.h();
            let r = c.round();
            if (c - r).abs() > 1e-9 {
                Err(Error::ShiftNotOnGrid(t))
            } else {
                Ok(r as isize)
            }
        })
        .collect()
}

/// All three CMO moduli plus the family-supremum BMO norm.
pub fn cmo_moduli(
    b: &SampledFunction,
    small_scales: &[f64],
    large_scales: &[f64],
    ref_cube: &Cube,
    shifts: &[Vec<f64>],
) -> Result<OscillationReport> {
    let small = small_scales.iter().map(|&a| scale_modulus(b, a)).collect::<Result<Vec<_>>>()?;
    let large = large_scales.iter().map(|&a| scale_modulus(b, a)).collect::<Result<Vec<_>>>()?;
    let translation = shifts
        .iter()
        .map(|y| {
            let len = y.iter().map(|v| v * v).sum::<f64>().sqrt();
            Ok(ModulusPoint { parameter: len, modulus: translation_modulus(b, ref_cube, y)? })
        })
        .collect::<Result<Vec<_>>>()?;
    // The scale moduli are mean oscillations of genuine cubes, so they enter
    // the family supremum; the translation modulus is not a mean oscillation.
    let family = bmo_norm(b, &full_dyadic_family(b.grid())?)?;
    let bmo = small.iter().chain(&large).map(|p| p.modulus).fold(family, f64::max);
    Ok(OscillationReport { bmo_norm: bmo, small_scale: small, large_scale: large, translation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;

    fn unit(m: usize) -> GridSpec {
        GridSpec::new(1, vec![0.0], 1.0 / m as f64, m).unwrap()
    }

    fn haar(g: &GridSpec) -> SampledFunction {
        SampledFunction::from_fn(g, |x| if x[0] < 0.5 { 1.0 } else { -1.0 }).unwrap()
    }

    #[test]
    fn constant_has_zero_oscillation() {
        let g = unit(64);
        let b = SampledFunction::constant(&g, 5.0).unwrap();
        assert_eq!(mean_oscillation(&b, &g.box_cube()).unwrap(), 0.0);
        let fam = dyadic_cubes(&g, 0, 4).unwrap();
        assert_eq!(bmo_norm(&b, &fam).unwrap(), 0.0);
        assert_eq!(normalize_bmo(&b, &fam), Err(Error::ZeroOscillation));
    }

    #[test]
    fn haar_oscillation_is_one() {
        let g = unit(64);
        let b = haar(&g);
        assert!((mean_oscillation(&b, &g.box_cube()).unwrap() - 1.0).abs() < 1e-15);
        let fam = dyadic_cubes(&g, 0, 4).unwrap();
        assert!((bmo_norm(&b, &fam).unwrap() - 1.0).abs() < g.h());
    }

    #[test]
    fn invariant_under_constants_and_homogeneous() {
        let g = unit(50);
        let b = SampledFunction::from_fn(&g, |x| (7.0 * x[0]).sin()).unwrap();
        let q = Cube::new(vec![0.4], 0.3).unwrap();
        // dyadic-exact shift keeps the floating point arithmetic exact
        let m0 = mean_oscillation(&b, &q).unwrap();
        let m1 = mean_oscillation(&b.add_constant(4.0), &q).unwrap();
        assert!((m0 - m1).abs() < 1e-14);
        let fam = dyadic_cubes(&unit(64), 0, 3).unwrap();
        let b64 = SampledFunction::from_fn(&unit(64), |x| (7.0 * x[0]).sin()).unwrap();
        assert_eq!(bmo_norm(&b64.scale(-2.0), &fam).unwrap(), 2.0 * bmo_norm(&b64, &fam).unwrap());
        assert_eq!(bmo_norm(&b64, &[]), Err(Error::EmptyFamily));
    }

    #[test]
    fn normalizer_yields_unit_norm() {
        let g = unit(64);
        let b = SampledFunction::from_fn(&g, |x| 3.0 * x[0] * x[0]).unwrap();
        let fam = full_dyadic_family(&g).unwrap();
        let (nb, norm) = normalize_bmo(&b, &fam).unwrap();
        assert!(norm > 0.0);
        assert!((bmo_norm(&nb, &fam).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scale_modulus_matches_brute_force() {
        let g = GridSpec::new(2, vec![0.0, 0.0], 0.1, 12).unwrap();
        let b = SampledFunction::from_fn(&g, |x| (3.0 * x[0]).sin() * x[1]).unwrap();
        let got = scale_modulus(&b, 0.16).unwrap();
        assert!((got.parameter - 0.16).abs() < 1e-12);
        let mut best = 0.0f64;
        for i in 0..=8 {
            for j in 0..=8 {
                let q = Cube::from_corner(&[i as f64 * 0.1, j as f64 * 0.1], 0.4).unwrap();
                best = best.max(mean_oscillation(&b, &q).unwrap());
            }
        }
        assert!((got.modulus - best).abs() < 1e-14);
        assert!(matches!(scale_modulus(&b, 0.001), Err(Error::CubeUnderResolved { .. })));
    }

    #[test]
    fn sine_large_scale_modulus() {
        // 40 whole periods on [0, 80π]
        let m = 8000;
        let g = GridSpec::new(1, vec![0.0], 80.0 * std::f64::consts::PI / m as f64, m).unwrap();
        let b = SampledFunction::from_fn(&g, |x| x[0].sin()).unwrap();
        let r = scale_modulus(&b, g.box_side()).unwrap();
        assert!((r.modulus - 2.0 / std::f64::consts::PI).abs() < 0.02 * 2.0 / std::f64::consts::PI);
    }

    #[test]
    fn translation_uses_unshifted_average() {
        let g = unit(16);
        let b = SampledFunction::from_fn(&g, |x| if x[0] < 0.5 { 0.0 } else { 1.0 }).unwrap();
        let q = Cube::from_corner(&[0.0], 0.25).unwrap();
        assert_eq!(translation_modulus(&b, &q, &[0.0]).unwrap(), 0.0);
        // shifting the quarter cube into the right half: |1 − 0| everywhere
        assert_eq!(translation_modulus(&b, &q, &[0.5]).unwrap(), 1.0);
        assert!(matches!(translation_modulus(&b, &q, &[0.03]), Err(Error::ShiftNotOnGrid(_))));
    }

    #[test]
    fn report_csv_layout() {
        let g = unit(32);
        let b = SampledFunction::from_fn(&g, |x| x[0]).unwrap();
        let q = Cube::from_corner(&[0.0], 0.25).unwrap();
        let r = cmo_moduli(&b, &[0.0625, 0.125], &[0.5, 1.0], &q, &[vec![0.25]]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("kind,parameter"));
        assert_eq!(csv.lines().count(), 1 + 1 + 5);
        for p in r.small_scale.iter().chain(&r.large_scale) {
            assert!(r.bmo_norm >= p.modulus);
        }
        assert!(r.trend(ModulusKind::SmallScale).unwrap().slope > 0.0);
    }
}
