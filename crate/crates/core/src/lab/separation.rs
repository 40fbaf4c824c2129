//! Pairwise separation of commutator images of witness pairs.
//!
//! For a cube sequence on which the symbol keeps a fixed amount of
//! oscillation, the images `T_j = [b, I_α]_1(f_j, g_j)` are compared in
//! `L^q`. Around each cube the image carries a definite mass on the annulus
//! `γ₁d_j < |x − y_j| < γ₂d_j` (the lower bound γ₃), little mass beyond
//! `γ₂d_j` (at most γ₃/4), and little mass on thin slivers of the annulus.
//! For a pair `(a, o)` where `a` has the larger cube, the sets
//!
//! `G = annulus(a)`, `G₂ = {|x − y_o| > γ₂ d_o}`, `G₁ = G ∩ G₂`
//!
//! give the lower bound `‖T_a − T_o‖ ≥ (‖T_a‖_G^q − ‖T_a‖_{G∖G₂}^q)^{1/q} − ‖T_o‖_{G₂}`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::grid::{lq_mass_on, lq_norm, Cube, GridSpec, SampledFunction};
use crate::kernel::KernelParams;
use crate::operator::{ApplyMode, BilinearOperator, Slot};

use super::scheme::{CubeScheme, SchemeKind};
use super::witness::{witness_pair, WitnessSummary};

pub const GAMMA1_GRID: [f64; 4] = [2.5, 4.0, 8.0, 16.0];
pub const GAMMA2_FACTORS: [f64; 3] = [4.0, 8.0, 16.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Gammas {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Smallest annulus mass `(∫_{γ₁d_j<|x−y_j|<γ₂d_j} |T_j|^q)^{1/q}` over the sequence.
    pub gamma3: f64,
    /// Largest outer tail `(∫_{|x−y_j|>γ₂d_j} |T_j|^q)^{1/q}` over the sequence.
    pub max_outer_tail: f64,
    /// `γ₃ / max_outer_tail`; (C12) asks for at least 4.
    pub gap: f64,
    pub c12_met: bool,
    /// Half the largest sliver scale for which every worst-case sliver
    /// `E ⊂ annulus`, `|E|/|Q_j| < β^n`, carries at most γ₃/4.
    pub beta: f64,
    /// `2γ₂ · ratio_bound` for the scale schemes.
    pub beta_scheme: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    pub j: usize,
    pub k: usize,
    /// Index whose annulus defines `G` (the larger cube).
    pub anchor: usize,
    pub other: usize,
    pub distance: f64,
    /// `‖T_anchor‖` on `G`.
    pub annulus_mass: f64,
    /// `‖T_anchor‖` on `G ∖ G₂`.
    pub sliver_mass: f64,
    /// `‖T_other‖` on `G₂`.
    pub other_tail: f64,
    pub lower_bound: f64,
    /// `distance ≥ lower_bound`.
    pub chain_holds: bool,
    pub g1_subset_g2: bool,
    pub g1_identity: bool,
    /// `|G₂^c ∩ G| / |Q_anchor|`.
    pub sliver_ratio: f64,
    /// `(C11)`, `(C12)` and `(C2)` thresholds hold for this pair.
    pub thresholds_met: bool,
    /// When the thresholds hold: `lower_bound ≥ (A^q − (γ₃/4)^q)^{1/q} − γ₃/4`.
    pub threshold_chain_holds: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeparationReport {
    pub scheme: SchemeKind,
    pub q: f64,
    pub weighted: bool,
    pub witnesses: Vec<WitnessSummary>,
    /// `min_j ε_j`, the common oscillation level of the sequence.
    pub epsilon: f64,
    pub distances: Vec<Vec<f64>>,
    pub output_norms: Vec<f64>,
    pub gammas: Option<Gammas>,
    pub pairs: Vec<PairRecord>,
    /// `|G₂^c ∩ G|/|Q_k| ≤ β^n` on every pair (shrinking schemes only).
    pub g3_holds: Option<bool>,
}

impl SeparationReport {
    pub fn min_max_distance(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for (j, row) in self.distances.iter().enumerate() {
            for &d in &row[j + 1..] {
                lo = lo.min(d);
                hi = hi.max(d);
            }
        }
        (lo, hi)
    }

    /// Distances between consecutive members, `D(j, j+1)`.
    pub fn consecutive_distances(&self) -> Vec<f64> {
        (0..self.distances.len().saturating_sub(1)).map(|j| self.distances[j][j + 1]).collect()
    }

    pub fn distances_csv(&self) -> String {
        let mut out = String::from("j,k,distance (L^q norm)\n");
        for (j, row) in self.distances.iter().enumerate() {
            for (k, d) in row.iter().enumerate() {
                out.push_str(&format!("{j},{k},{d:?}\n"));
            }
        }
        out
    }
}

#[derive(Clone, Debug, Default)]
pub struct SeparationOptions {
    /// Measure distances in `L^q(weight)` instead of `L^q`.
    pub weight: Option<SampledFunction>,
    pub budget: Option<u64>,
}

fn dist_sq(grid: &GridSpec, i: usize, c: &[f64]) -> f64 {
    let x = grid.coord(i);
    c.iter().enumerate().map(|(a, v)| (x[a] - v).powi(2)).sum()
}

fn ball_fits(grid: &GridSpec, cube: &Cube, radius: f64) -> bool {
    (0..grid.dim()).all(|a| {
        let lo = grid.origin()[a];
        cube.center[a] - radius >= lo && cube.center[a] + radius <= lo + grid.box_side()
    })
}

/// Longest prefix of the scheme whose cubes resolve on the grid and whose
/// smallest candidate annulus fits in the box.
fn feasible_prefix(grid: &GridSpec, scheme: &CubeScheme) -> usize {
    let min_gamma2 = GAMMA1_GRID[0] * GAMMA2_FACTORS[0];
    scheme
        .cubes
        .iter()
        .take_while(|q| {
            q.side >= 2.0 * grid.h() * (1.0 - 1e-9)
                && grid.cube_nodes(q).is_ok()
                && ball_fits(grid, q, min_gamma2 * q.side)
        })
        .count()
}

pub fn separation_experiment(
    b: &SampledFunction,
    scheme: &CubeScheme,
    cfg: &ExponentConfig,
    params: &KernelParams,
    mode: ApplyMode,
    opts: &SeparationOptions,
) -> Result<SeparationReport> {
    let grid = b.grid();
    scheme.check()?;
    let feasible = feasible_prefix(grid, scheme);
    if feasible < scheme.len() || scheme.len() < 2 {
        return Err(Error::InfeasibleScheme {
            reason: "cubes or their annuli do not fit inside the grid box".into(),
            feasible,
        });
    }
    let q = cfg.q();
    let w = opts.weight.as_ref();
    let n = grid.dim() as i32;

    let witnesses = scheme.cubes.iter().map(|c| witness_pair(b, c, cfg)).collect::<Result<Vec<_>>>()?;
    let epsilon = witnesses.iter().map(|w| w.epsilon_achieved).fold(f64::INFINITY, f64::min);
    let op = match opts.budget {
        Some(budget) => BilinearOperator::with_budget(grid, *params, mode, budget)?,
        None => BilinearOperator::new(grid, *params, mode)?,
    };
    let outputs = witnesses
        .iter()
        .map(|wp| op.commutator(b, &wp.f, &wp.g, Slot::First))
        .collect::<Result<Vec<_>>>()?;

    let len = outputs.len();
    let cells: Vec<(usize, usize)> = (0..len).flat_map(|j| (j + 1..len).map(move |k| (j, k))).collect();
    let upper = cells
        .par_iter()
        .map(|&(j, k)| lq_norm(&outputs[j].sub(&outputs[k])?, q, w))
        .collect::<Result<Vec<_>>>()?;
    let mut distances = vec![vec![0.0; len]; len];
    for (&(j, k), d) in cells.iter().zip(upper) {
        distances[j][k] = d;
        distances[k][j] = d;
    }
    let output_norms = outputs.iter().map(|o| lq_norm(o, q, w)).collect::<Result<Vec<_>>>()?;

    let centres: Vec<&Cube> = scheme.cubes.iter().collect();
    let mass = |j: usize, keep: &dyn Fn(f64) -> bool| -> Result<f64> {
        let c = &centres[j].center;
        Ok(lq_mass_on(&outputs[j], q, w, |i| keep(dist_sq(grid, i, c).sqrt()))?.powf(1.0 / q))
    };

    // γ-search over annuli that fit in the box for every cube.
    let mut best: Option<(f64, f64, f64, f64)> = None;
    for &g1 in &GAMMA1_GRID {
        for &fac in &GAMMA2_FACTORS {
            let g2 = g1 * fac;
            if let Some(limit) = scheme.disjoint_gamma {
                if g2 > limit {
                    continue;
                }
            }
            if !centres.iter().all(|c| ball_fits(grid, c, g2 * c.side)) {
                continue;
            }
            let mut g3 = f64::INFINITY;
            let mut tail: f64 = 0.0;
            for (j, c) in centres.iter().enumerate() {
                let d = c.side;
                g3 = g3.min(mass(j, &|r| r > g1 * d && r < g2 * d)?);
                tail = tail.max(mass(j, &|r| r > g2 * d)?);
            }
            let gap = if tail > 0.0 { g3 / tail } else { f64::INFINITY };
            if best.map_or(true, |b| gap > b.3) {
                best = Some((g1, g2, g3, gap));
            }
        }
    }

    let mut gammas = None;
    let mut pairs = Vec::new();
    let mut g3_holds = None;
    if let Some((g1, g2, g3, gap)) = best {
        let in_annulus = |j: usize, i: usize| {
            let r = dist_sq(grid, i, &centres[j].center).sqrt();
            let d = centres[j].side;
            r > g1 * d && r < g2 * d
        };
        let max_tail = if gap.is_finite() { g3 / gap } else { 0.0 };

        // Largest sliver scale passing the sliver bound on every cube.
        let mut beta_max = g2;
        let cv = grid.cell_volume();
        for j in 0..len {
            let mut vals: Vec<f64> = (0..grid.len())
                .filter(|&i| in_annulus(j, i))
                .map(|i| {
                    let v = outputs[j].value(i).abs().powf(q);
                    w.map_or(v, |w| v * w.value(i)) * cv
                })
                .collect();
            vals.sort_by(|a, b| b.total_cmp(a));
            let limit = (g3 / 4.0).powf(q);
            let mut acc = 0.0;
            let mut k = 0;
            while k < vals.len() && acc + vals[k] <= limit {
                acc += vals[k];
                k += 1;
            }
            let measure = crate::grid::cube_measure(grid, centres[j])?;
            beta_max = beta_max.min((((k + 1) as f64) * cv / measure).powf(1.0 / n as f64));
        }
        let beta = beta_max / 2.0;
        let beta_scheme = scheme.ratio_bound.map(|r| 2.0 * g2 * r);
        gammas = Some(Gammas {
            gamma1: g1,
            gamma2: g2,
            gamma3: g3,
            max_outer_tail: max_tail,
            gap,
            c12_met: max_tail <= g3 / 4.0,
            beta,
            beta_scheme,
        });

        let mut all_g3 = true;
        for &(j, k) in &cells {
            let (a, o) = match scheme.kind {
                SchemeKind::Growing => (k, j),
                _ => (j, k),
            };
            let (yo, d_o) = (&centres[o].center, centres[o].side);
            let in_ball_o = |i: usize| dist_sq(grid, i, yo).sqrt() <= g2 * d_o;
            let g_set: Vec<bool> = (0..grid.len()).map(|i| in_annulus(a, i)).collect();
            let g2_set: Vec<bool> = (0..grid.len()).map(|i| !in_ball_o(i)).collect();
            let g1_set: Vec<bool> = (0..grid.len()).map(|i| g_set[i] && !in_ball_o(i)).collect();
            let g1_subset_g2 = (0..grid.len()).all(|i| !g1_set[i] || g2_set[i]);
            let g1_identity = (0..grid.len()).all(|i| g1_set[i] == (g_set[i] && !(!g2_set[i] && g_set[i])));
            let sliver_nodes = (0..grid.len()).filter(|&i| g_set[i] && !g2_set[i]).count();
            let sliver_ratio = sliver_nodes as f64 * cv / crate::grid::cube_measure(grid, centres[a])?;

            let root = |f: &SampledFunction, sel: &[bool]| -> Result<f64> {
                Ok(lq_mass_on(f, q, w, |i| sel[i])?.powf(1.0 / q))
            };
            let sliver_sel: Vec<bool> = (0..grid.len()).map(|i| g_set[i] && !g2_set[i]).collect();
            let big_a = root(&outputs[a], &g_set)?;
            let s = root(&outputs[a], &sliver_sel)?;
            let t_o = root(&outputs[o], &g2_set)?;
            let lower_bound = (big_a.powf(q) - s.powf(q)).max(0.0).powf(1.0 / q) - t_o;
            let distance = distances[j][k];
            let thresholds_met = big_a >= g3 && s <= g3 / 4.0 && t_o <= g3 / 4.0;
            let threshold_chain_holds = thresholds_met.then(|| {
                let floor = (big_a.powf(q) - (g3 / 4.0).powf(q)).max(0.0).powf(1.0 / q) - g3 / 4.0;
                lower_bound >= floor * (1.0 - 1e-12)
            });
            if scheme.kind == SchemeKind::Shrinking {
                let beta_n = beta_scheme.unwrap_or(f64::NAN).powi(n);
                all_g3 &= sliver_ratio <= beta_n;
            }
            pairs.push(PairRecord {
                j,
                k,
                anchor: a,
                other: o,
                distance,
                annulus_mass: big_a,
                sliver_mass: s,
                other_tail: t_o,
                lower_bound,
                chain_holds: distance >= lower_bound - 1e-12 * distance.abs(),
                g1_subset_g2,
                g1_identity,
                sliver_ratio,
                thresholds_met,
                threshold_chain_holds,
            });
        }
        if scheme.kind == SchemeKind::Shrinking {
            g3_holds = Some(all_g3);
        }
    }

    Ok(SeparationReport {
        scheme: scheme.kind,
        q,
        weighted: w.is_some(),
        witnesses: witnesses.iter().map(|w| w.summary()).collect(),
        epsilon,
        distances,
        output_norms,
        gammas,
        pairs,
        g3_holds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_symbol_errors() {
        let g = GridSpec::centered(1, 512.0, 1024).unwrap();
        let b = SampledFunction::constant(&g, 2.0).unwrap();
        let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
        let p = KernelParams::from_config(&cfg, None).unwrap();
        let s = CubeScheme::growing(vec![0.0], 2.0, 3.0, 3, 0.4).unwrap();
        let r = separation_experiment(&b, &s, &cfg, &p, ApplyMode::Direct, &SeparationOptions::default());
        assert_eq!(r.unwrap_err(), Error::ZeroOscillation);
    }

    #[test]
    fn infeasible_scheme_reports_prefix() {
        let g = GridSpec::centered(1, 256.0, 512).unwrap();
        let b = SampledFunction::from_fn(&g, |x| x[0].sin()).unwrap();
        let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
        let p = KernelParams::from_config(&cfg, None).unwrap();
        let s = CubeScheme::growing(vec![0.0], 4.0, 3.0, 4, 0.4).unwrap();
        match separation_experiment(&b, &s, &cfg, &p, ApplyMode::Direct, &SeparationOptions::default()) {
            Err(Error::InfeasibleScheme { feasible, .. }) => assert_eq!(feasible, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
