//! Discretized bilinear fractional integral, its commutators and the bilinear
//! fractional maximal function.
//!
//! On a grid with spacing `h` the operator is the quadrature sum
//! `I(f, g)(x) = h^{2n} Σ_{y,z} K(x, y, z) f(y) g(z)` over grid nodes. The
//! direct path evaluates the sum term by term; the FFT path computes the same
//! sum as the diagonal of a zero-padded convolution. For the untruncated
//! kernel the single term `y = z = x` is dropped.

mod fft;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::ExponentConfig;
use crate::grid::{range_mean, Cube, GridSpec, SampledFunction};
use crate::kernel::KernelParams;

pub use fft::fft_required_bytes;
use fft::KernelSpectrum;

/// Default memory cap for the FFT kernel spectrum, 2 GiB.
pub const DEFAULT_BUDGET: u64 = 2 << 30;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ApplyMode {
    #[default]
    Direct,
    Fft,
}

impl std::str::FromStr for ApplyMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(ApplyMode::Direct),
            "fft" => Ok(ApplyMode::Fft),
            other => Err(Error::Parse(format!("unknown mode {other:?} (direct|fft)"))),
        }
    }
}

/// Which input the commutator multiplies by the symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Slot {
    First,
    Second,
}

/// The bilinear operator bound to one grid and kernel, reusable across
/// applications. In FFT mode the kernel spectrum is computed once here.
pub struct BilinearOperator {
    grid: GridSpec,
    params: KernelParams,
    mode: ApplyMode,
    spectrum: Option<KernelSpectrum>,
}

impl BilinearOperator {
    pub fn new(grid: &GridSpec, params: KernelParams, mode: ApplyMode) -> Result<Self> {
        BilinearOperator::with_budget(grid, params, mode, DEFAULT_BUDGET)
    }

    pub fn with_budget(grid: &GridSpec, params: KernelParams, mode: ApplyMode, budget: u64) -> Result<Self> {
        if params.dim() != grid.dim() {
            return Err(Error::GridMismatch(format!(
                "kernel dimension {} on a {}-dimensional grid",
                params.dim(),
                grid.dim()
            )));
        }
        if let Some(delta) = params.delta() {
            let min = 2.0 * grid.h();
            if delta < min * (1.0 - 1e-12) {
                return Err(Error::UnderResolvedTruncation { delta, min });
            }
        }
        let spectrum = match mode {
            ApplyMode::Direct => None,
            ApplyMode::Fft => Some(KernelSpectrum::build(grid, &params, budget)?),
        };
        Ok(BilinearOperator { grid: grid.clone(), params, mode, spectrum })
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn mode(&self) -> ApplyMode {
        self.mode
    }

    /// `I(f, g)` at every grid node.
    pub fn apply(&self, f: &SampledFunction, g: &SampledFunction) -> Result<SampledFunction> {
        self.grid.check_same(f.grid())?;
        self.grid.check_same(g.grid())?;
        // Evaluate in a canonical argument order so that I(f, g) and I(g, f)
        // are bitwise identical.
        let (a, b) = if canonical_le(f.values(), g.values()) { (f, g) } else { (g, f) };
        let values = match &self.spectrum {
            Some(s) => s.apply(a.values(), b.values(), self.grid.h()),
            None => self.direct(a.values(), b.values()),
        };
        SampledFunction::new(self.grid.clone(), values)
    }

    fn direct(&self, f: &[f64], g: &[f64]) -> Vec<f64> {
        let coords = self.grid.coords();
        let fy = support(f);
        let gz = support(g);
        let singular_skip = self.params.delta().is_none();
        let cv2 = self.grid.cell_volume().powi(2);
        (0..self.grid.len())
            .into_par_iter()
            .map(|x| {
                let cx = coords[x];
                let sum = self.sum_at(&cx, &coords, &fy, &gz, |y, z| singular_skip && y == x && z == x);
                sum * cv2
            })
            .collect()
    }

    fn sum_at(
        &self,
        cx: &[f64; 2],
        coords: &[[f64; 2]],
        fy: &[(usize, f64)],
        gz: &[(usize, f64)],
        skip: impl Fn(usize, usize) -> bool,
    ) -> f64 {
        let dz: Vec<f64> = gz.iter().map(|&(z, _)| dist_sq(cx, &coords[z])).collect();
        let mut total = 0.0;
        for &(y, fv) in fy {
            let dy = dist_sq(cx, &coords[y]);
            let mut inner = 0.0;
            for (k, &(z, gv)) in gz.iter().enumerate() {
                if skip(y, z) {
                    continue;
                }
                inner += self.params.profile(dy + dz[k]) * gv;
            }
            total += fv * inner;
        }
        total
    }

    /// `I(f, g)` at arbitrary points by direct quadrature. With the
    /// untruncated kernel, terms with `y = z = x` are dropped.
    pub fn apply_at(&self, f: &SampledFunction, g: &SampledFunction, points: &[Vec<f64>]) -> Result<Vec<f64>> {
        self.grid.check_same(f.grid())?;
        self.grid.check_same(g.grid())?;
        let dim = self.grid.dim();
        if let Some(p) = points.iter().find(|p| p.len() != dim) {
            return Err(Error::InvalidArgument(format!("point {p:?} is not {dim}-dimensional")));
        }
        let coords = self.grid.coords();
        let (a, b) = if canonical_le(f.values(), g.values()) { (f, g) } else { (g, f) };
        let fy = support(a.values());
        let gz = support(b.values());
        let untruncated = self.params.delta().is_none();
        let cv2 = self.grid.cell_volume().powi(2);
        Ok(points
            .par_iter()
            .map(|p| {
                let mut cx = [0.0; 2];
                cx[..dim].copy_from_slice(p);
                let skip = |y: usize, z: usize| {
                    untruncated && dist_sq(&cx, &coords[y]) == 0.0 && dist_sq(&cx, &coords[z]) == 0.0
                };
                self.sum_at(&cx, &coords, &fy, &gz, skip) * cv2
            })
            .collect())
    }

    /// `[b, I]_1(f, g) = I(bf, g) − b·I(f, g)` or `[b, I]_2(f, g) = I(f, bg) − b·I(f, g)`.
    pub fn commutator(
        &self,
        b: &SampledFunction,
        f: &SampledFunction,
        g: &SampledFunction,
        slot: Slot,
    ) -> Result<SampledFunction> {
        self.grid.check_same(b.grid())?;
        let plain = self.apply(f, g)?;
        let weighted = match slot {
            Slot::First => self.apply(&b.mul(f)?, g)?,
            Slot::Second => self.apply(f, &b.mul(g)?)?,
        };
        let bi = b.mul(&plain)?;
        weighted.sub(&bi)
    }

    /// Splits `T(x+t) − T(x)` for `T = [b, I]_1(f, g)` into
    /// `I(x,t) = (b(x) − b(x+t))·I(f,g)(x)` and
    /// `II(x,t) = h^{2n} Σ (b(y) − b(x+t)) f(y) g(z) (K(x+t,y,z) − K(x,y,z))`.
    ///
    /// The shift is a whole number of cells per axis; `b(x+t)` is taken as zero
    /// when `x+t` leaves the grid box.
    pub fn translation_split(
        &self,
        b: &SampledFunction,
        f: &SampledFunction,
        g: &SampledFunction,
        shift_cells: &[isize],
    ) -> Result<(SampledFunction, SampledFunction)> {
        self.grid.check_same(b.grid())?;
        self.grid.check_same(f.grid())?;
        self.grid.check_same(g.grid())?;
        let dim = self.grid.dim();
        if shift_cells.len() != dim {
            return Err(Error::InvalidArgument(format!("shift must have {dim} components")));
        }
        let h = self.grid.h();
        let coords = self.grid.coords();
        let b_shifted = shift_values(b, shift_cells);
        let plain = self.apply(f, g)?;
        let term_one: Vec<f64> = (0..self.grid.len())
            .map(|x| (b.value(x) - b_shifted[x]) * plain.value(x))
            .collect();

        let fy = support(f.values());
        let gz = support(g.values());
        let untruncated = self.params.delta().is_none();
        let cv2 = self.grid.cell_volume().powi(2);
        let term_two: Vec<f64> = (0..self.grid.len())
            .into_par_iter()
            .map(|x| {
                let cx = coords[x];
                let mut ct = cx;
                for a in 0..dim {
                    ct[a] += shift_cells[a] as f64 * h;
                }
                let bt = b_shifted[x];
                let dzx: Vec<f64> = gz.iter().map(|&(z, _)| dist_sq(&cx, &coords[z])).collect();
                let dzt: Vec<f64> = gz.iter().map(|&(z, _)| dist_sq(&ct, &coords[z])).collect();
                let mut total = 0.0;
                for &(y, fv) in &fy {
                    let dyx = dist_sq(&cx, &coords[y]);
                    let dyt = dist_sq(&ct, &coords[y]);
                    let mut inner = 0.0;
                    for (k, &(_, gv)) in gz.iter().enumerate() {
                        let kx = self.profile_or_skip(dyx + dzx[k], untruncated);
                        let kt = self.profile_or_skip(dyt + dzt[k], untruncated);
                        inner += (kt - kx) * gv;
                    }
                    total += (b.value(y) - bt) * fv * inner;
                }
                total * cv2
            })
            .collect();
        Ok((
            SampledFunction::new(self.grid.clone(), term_one)?,
            SampledFunction::new(self.grid.clone(), term_two)?,
        ))
    }

    fn profile_or_skip(&self, r2: f64, untruncated: bool) -> f64 {
        if untruncated && r2 == 0.0 {
            0.0
        } else {
            self.params.profile(r2)
        }
    }
}

/// Values of `b(· + t)` on the grid for a whole-cell shift, zero off the box.
pub(crate) fn shift_values(b: &SampledFunction, shift_cells: &[isize]) -> Vec<f64> {
    let g = b.grid();
    let m = g.m() as isize;
    (0..g.len())
        .map(|lin| {
            let idx = g.multi_index(lin);
            let mut out = [0usize; 2];
            for a in 0..g.dim() {
                let j = idx[a] as isize + shift_cells[a];
                if j < 0 || j >= m {
                    return 0.0;
                }
                out[a] = j as usize;
            }
            b.value(g.linear_index(out))
        })
        .collect()
}

#[inline]
fn dist_sq(a: &[f64; 2], b: &[f64; 2]) -> f64 {
    let d0 = a[0] - b[0];
    let d1 = a[1] - b[1];
    d0 * d0 + d1 * d1
}

fn support(v: &[f64]) -> Vec<(usize, f64)> {
    v.iter().enumerate().filter(|(_, &x)| x != 0.0).map(|(i, &x)| (i, x)).collect()
}

fn canonical_le(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    true
}

fn check_kernel(cfg: &ExponentConfig, params: &KernelParams) -> Result<()> {
    if cfg.dim() != params.dim() || cfg.alpha() != params.alpha() {
        return Err(Error::InvalidArgument(format!(
            "kernel (n = {}, α = {}) does not match exponents (n = {}, α = {})",
            params.dim(),
            params.alpha(),
            cfg.dim(),
            cfg.alpha()
        )));
    }
    Ok(())
}

/// One-shot `I(f, g)`; build a [`BilinearOperator`] to reuse an FFT plan.
pub fn apply(
    f: &SampledFunction,
    g: &SampledFunction,
    cfg: &ExponentConfig,
    params: &KernelParams,
    mode: ApplyMode,
) -> Result<SampledFunction> {
    check_kernel(cfg, params)?;
    f.grid().check_same(g.grid())?;
    BilinearOperator::new(f.grid(), *params, mode)?.apply(f, g)
}

/// One-shot commutator `[b, I]_slot(f, g)`.
pub fn commutator(
    b: &SampledFunction,
    f: &SampledFunction,
    g: &SampledFunction,
    cfg: &ExponentConfig,
    params: &KernelParams,
    mode: ApplyMode,
    slot: Slot,
) -> Result<SampledFunction> {
    check_kernel(cfg, params)?;
    BilinearOperator::new(f.grid(), *params, mode)?.commutator(b, f, g, slot)
}

/// `M_α(f, g)(x) = max_{Q ∋ x} |Q|^{α/n} (⨍_Q |f|)(⨍_Q |g|)` over the given
/// cubes, with `|Q|` the quadrature measure. Nodes covered by no cube get 0.
pub fn maximal(
    f: &SampledFunction,
    g: &SampledFunction,
    cfg: &ExponentConfig,
    cubes: &[Cube],
) -> Result<SampledFunction> {
    if cubes.is_empty() {
        return Err(Error::EmptyFamily);
    }
    let grid = f.grid();
    grid.check_same(g.grid())?;
    if cfg.dim() != grid.dim() {
        return Err(Error::GridMismatch("exponent dimension differs from grid".into()));
    }
    let abs_f: Vec<f64> = f.values().iter().map(|v| v.abs()).collect();
    let abs_g: Vec<f64> = g.values().iter().map(|v| v.abs()).collect();
    let power = cfg.alpha() / cfg.dim() as f64;
    let mut out = vec![0.0f64; grid.len()];
    for cube in cubes {
        let range = grid.cube_nodes(cube)?;
        let measure = range.count() as f64 * grid.cell_volume();
        let v = measure.powf(power) * range_mean(&abs_f, &range) * range_mean(&abs_g, &range);
        for i in range.iter() {
            if v > out[i] {
                out[i] = v;
            }
        }
    }
    SampledFunction::new(grid.clone(), out)
}
