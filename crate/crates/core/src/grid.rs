//! Uniform grids, sampled functions, cubes and midpoint quadrature.
//!
//! A grid of `M` cells per axis with spacing `h` covers the box
//! `[origin, origin + M·h]^n`. Node `i` sits at the center of its cell,
//! `origin + (i + 1/2)·h`, and owns a cell of volume `h^n`; every integral in
//! the crate is the midpoint sum over nodes. Cube membership is half-open on
//! each axis, so the dyadic subcubes of the box partition its nodes exactly.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest node count a single grid may hold (128 MiB of `f64`).
pub const MAX_NODES: usize = 1 << 24;

/// Snapping tolerance, in units of `h`, for cube faces that fall on cell faces.
const FACE_SNAP: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    dim: usize,
    origin: Vec<f64>,
    h: f64,
    m: usize,
}

impl GridSpec {
    pub fn new(dim: usize, origin: Vec<f64>, h: f64, m: usize) -> Result<Self> {
        if !(1..=2).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if origin.len() != dim {
            return Err(Error::InvalidGrid(format!(
                "origin has {} coordinates, expected {dim}",
                origin.len()
            )));
        }
        if origin.iter().any(|o| !o.is_finite()) {
            return Err(Error::InvalidGrid("origin is not finite".into()));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("spacing h = {h} must be positive")));
        }
        if m < 2 {
            return Err(Error::InvalidGrid(format!("extent M = {m} must be at least 2")));
        }
        let nodes = m.checked_pow(dim as u32).filter(|&n| n <= MAX_NODES);
        if nodes.is_none() {
            return Err(Error::InvalidGrid(format!(
                "{m}^{dim} nodes exceeds the limit of {MAX_NODES}"
            )));
        }
        Ok(GridSpec { dim, origin, h, m })
    }

    /// Grid on the centered box `[-half_width, half_width]^dim`.
    pub fn centered(dim: usize, half_width: f64, m: usize) -> Result<Self> {
        let h = 2.0 * half_width / m as f64;
        GridSpec::new(dim, vec![-half_width; dim], h, m)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> &[f64] {
        &self.origin
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Number of nodes, `M^n`.
    pub fn len(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn cell_volume(&self) -> f64 {
        self.h.powi(self.dim as i32)
    }

    /// Side length of the grid box.
    pub fn box_side(&self) -> f64 {
        self.m as f64 * self.h
    }

    pub fn box_center(&self) -> Vec<f64> {
        self.origin.iter().map(|o| o + 0.5 * self.box_side()).collect()
    }

    /// The whole box as a cube.
    pub fn box_cube(&self) -> Cube {
        Cube { center: self.box_center(), side: self.box_side() }
    }

    /// Row-major multi-index of a linear node index (unused axes are zero).
    pub fn multi_index(&self, lin: usize) -> [usize; 2] {
        match self.dim {
            1 => [lin, 0],
            _ => [lin / self.m, lin % self.m],
        }
    }

    pub fn linear_index(&self, idx: [usize; 2]) -> usize {
        match self.dim {
            1 => idx[0],
            _ => idx[0] * self.m + idx[1],
        }
    }

    pub fn axis_coord(&self, axis: usize, i: usize) -> f64 {
        self.origin[axis] + (i as f64 + 0.5) * self.h
    }

    /// Node coordinates, padded with zeros to two components.
    pub fn coord(&self, lin: usize) -> [f64; 2] {
        let idx = self.multi_index(lin);
        let mut c = [0.0; 2];
        for (axis, ci) in c.iter_mut().enumerate().take(self.dim) {
            *ci = self.axis_coord(axis, idx[axis]);
        }
        c
    }

    pub fn coords(&self) -> Vec<[f64; 2]> {
        (0..self.len()).map(|i| self.coord(i)).collect()
    }

    /// True when the point lies in the closed grid box.
    pub fn contains_point(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(&self.origin)
            .all(|(&xi, &o)| xi >= o && xi <= o + self.box_side())
    }

    /// Nodes of the half-open cube `[c - d/2, c + d/2)^n` clipped to the grid.
    pub fn cube_nodes(&self, cube: &Cube) -> Result<NodeRange> {
        if cube.center.len() != self.dim {
            return Err(Error::InvalidCube(format!(
                "cube has dimension {}, grid has {}",
                cube.center.len(),
                self.dim
            )));
        }
        let mut lo = [0usize; 2];
        let mut hi = [1usize; 2];
        for axis in 0..self.dim {
            let a = cube.center[axis] - 0.5 * cube.side;
            let b = cube.center[axis] + 0.5 * cube.side;
            lo[axis] = self.first_node_at_or_after(axis, a);
            hi[axis] = self.first_node_at_or_after(axis, b);
            if hi[axis] <= lo[axis] {
                return Err(Error::CubeOffGrid);
            }
        }
        Ok(NodeRange { dim: self.dim, m: self.m, lo, hi })
    }

    fn first_node_at_or_after(&self, axis: usize, t: f64) -> usize {
        let s = (t - self.origin[axis]) / self.h - 0.5;
        let r = s.round();
        let s = if (s - r).abs() < FACE_SNAP { r } else { s.ceil() };
        s.clamp(0.0, self.m as f64) as usize
    }

    pub(crate) fn check_same(&self, other: &GridSpec) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

/// Axis-aligned box of node indices, `lo <= idx < hi` on each axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeRange {
    dim: usize,
    m: usize,
    lo: [usize; 2],
    hi: [usize; 2],
}

impl NodeRange {
    pub fn count(&self) -> usize {
        (0..self.dim).map(|a| self.hi[a] - self.lo[a]).product()
    }

    pub fn lo(&self) -> [usize; 2] {
        self.lo
    }

    pub fn hi(&self) -> [usize; 2] {
        self.hi
    }

    pub fn contains(&self, idx: [usize; 2]) -> bool {
        (0..self.dim).all(|a| idx[a] >= self.lo[a] && idx[a] < self.hi[a])
    }

    /// Linear indices of the nodes in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        let (rows, cols) = match self.dim {
            1 => (0..1, self.lo[0]..self.hi[0]),
            _ => (self.lo[0]..self.hi[0], self.lo[1]..self.hi[1]),
        };
        let m = self.m;
        let dim = self.dim;
        rows.flat_map(move |r| {
            cols.clone()
                .map(move |c| if dim == 1 { c } else { r * m + c })
        })
    }
}

/// Axis-parallel cube given by its center and side length.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cube {
    pub center: Vec<f64>,
    pub side: f64,
}

impl Cube {
    pub fn new(center: Vec<f64>, side: f64) -> Result<Self> {
        if !(side > 0.0 && side.is_finite()) {
            return Err(Error::InvalidCube(format!("side {side} must be positive")));
        }
        if center.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidCube("center is not finite".into()));
        }
        Ok(Cube { center, side })
    }

    /// Cube with lower corner `corner`.
    pub fn from_corner(corner: &[f64], side: f64) -> Result<Self> {
        Cube::new(corner.iter().map(|c| c + 0.5 * side).collect(), side)
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn volume(&self) -> f64 {
        self.side.powi(self.dim() as i32)
    }

    pub fn translated(&self, shift: &[f64]) -> Cube {
        Cube {
            center: self.center.iter().zip(shift).map(|(c, s)| c + s).collect(),
            side: self.side,
        }
    }

    pub fn scaled(&self, factor: f64) -> Cube {
        Cube { center: self.center.clone(), side: self.side * factor }
    }
}

/// Values of a real function at the nodes of a grid, in row-major node order.
#[derive(Clone, Debug, PartialEq)]
pub struct SampledFunction {
    grid: GridSpec,
    values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for {} nodes",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(SampledFunction { grid, values })
    }

    /// Samples `f` at every node. Non-finite samples are rejected.
    pub fn from_fn(grid: &GridSpec, f: impl Fn(&[f64]) -> f64) -> Result<Self> {
        let dim = grid.dim();
        let values = (0..grid.len()).map(|i| f(&grid.coord(i)[..dim])).collect();
        SampledFunction::new(grid.clone(), values)
    }

    pub fn zeros(grid: &GridSpec) -> Self {
        SampledFunction { grid: grid.clone(), values: vec![0.0; grid.len()] }
    }

    pub fn constant(grid: &GridSpec, c: f64) -> Result<Self> {
        SampledFunction::new(grid.clone(), vec![c; grid.len()])
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn value(&self, lin: usize) -> f64 {
        self.values[lin]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        SampledFunction::new(self.grid.clone(), self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        SampledFunction::new(self.grid.clone(), values)
    }

    pub fn scale(&self, lambda: f64) -> Self {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| lambda * v).collect(),
        }
    }

    pub fn add_constant(&self, c: f64) -> Self {
        SampledFunction {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Midpoint integral over the whole box.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_volume()
    }

    /// Serializes as CSV: a commented header naming the geometry fields, a
    /// commented line with their values, then one value per line in node
    /// order. Floats use the shortest representation that round-trips.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = String::with_capacity(24 * (self.values.len() + 2));
        let names: Vec<String> = (0..g.dim).map(|a| format!("origin_{a}")).collect();
        out.push_str(&format!("# dim,{},h,M\n", names.join(",")));
        let origin: Vec<String> = g.origin.iter().map(|o| format!("{o:?}")).collect();
        out.push_str(&format!("# {},{},{:?},{}\n", g.dim, origin.join(","), g.h, g.m));
        for v in &self.values {
            out.push_str(&format!("{v:?}\n"));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let names = lines.next().ok_or_else(|| Error::Parse("missing header".into()))?;
        if !names.starts_with("# dim,") {
            return Err(Error::Parse(format!("unexpected header {names:?}")));
        }
        let geom = lines
            .next()
            .and_then(|l| l.strip_prefix("# "))
            .ok_or_else(|| Error::Parse("missing geometry line".into()))?;
        let fields: Vec<&str> = geom.split(',').map(str::trim).collect();
        let parse_f = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let parse_u = |s: &str| s.parse::<usize>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
        let dim = parse_u(fields.first().copied().unwrap_or(""))?;
        if fields.len() != dim + 3 {
            return Err(Error::Parse(format!("geometry line has {} fields", fields.len())));
        }
        let origin = fields[1..=dim].iter().map(|s| parse_f(s)).collect::<Result<Vec<_>>>()?;
        let h = parse_f(fields[dim + 1])?;
        let m = parse_u(fields[dim + 2])?;
        let grid = GridSpec::new(dim, origin, h, m)?;
        let values = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| parse_f(l.trim()))
            .collect::<Result<Vec<_>>>()?;
        SampledFunction::new(grid, values)
    }
}

/// Quadrature measure of the cube: node count times `h^n`.
pub fn cube_measure(grid: &GridSpec, cube: &Cube) -> Result<f64> {
    Ok(grid.cube_nodes(cube)?.count() as f64 * grid.cell_volume())
}

/// Mean of `b` over the grid nodes inside `cube`.
pub fn cube_average(b: &SampledFunction, cube: &Cube) -> Result<f64> {
    let range = b.grid().cube_nodes(cube)?;
    Ok(range_mean(b.values(), &range))
}

pub(crate) fn range_mean(values: &[f64], range: &NodeRange) -> f64 {
    let sum: f64 = range.iter().map(|i| values[i]).sum();
    sum / range.count() as f64
}

fn check_weight(f: &SampledFunction, w: Option<&SampledFunction>) -> Result<()> {
    if let Some(w) = w {
        f.grid().check_same(w.grid())?;
        if let Some(i) = w.values().iter().position(|&v| v <= 0.0) {
            return Err(Error::NonPositiveWeight(i));
        }
    }
    Ok(())
}

/// `(Σ |f|^q · w · h^n)^{1/q}`; an absent weight is `w ≡ 1`.
pub fn lq_norm(f: &SampledFunction, q: f64, w: Option<&SampledFunction>) -> Result<f64> {
    lq_norm_on(f, q, w, |_| true)
}

/// [`lq_norm`] restricted to the nodes selected by `keep`.
pub fn lq_norm_on(
    f: &SampledFunction,
    q: f64,
    w: Option<&SampledFunction>,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    Ok(lq_mass_on(f, q, w, keep)?.powf(1.0 / q))
}

/// `Σ |f|^q · w · h^n` over the nodes selected by `keep` (no final root).
pub fn lq_mass_on(
    f: &SampledFunction,
    q: f64,
    w: Option<&SampledFunction>,
    keep: impl Fn(usize) -> bool,
) -> Result<f64> {
    if !(q >= 1.0 && q.is_finite()) {
        return Err(Error::InvalidArgument(format!("exponent q = {q} must be >= 1")));
    }
    check_weight(f, w)?;
    // Factor out the largest magnitude so |f|^q neither overflows nor
    // underflows; this also keeps the norm exactly homogeneous.
    let scale = f.max_abs();
    if scale == 0.0 {
        return Ok(0.0);
    }
    let vals = f.values();
    let mut sum = 0.0;
    for i in (0..vals.len()).filter(|&i| keep(i)) {
        let t = (vals[i].abs() / scale).powf(q);
        sum += match w {
            Some(w) => t * w.value(i),
            None => t,
        };
    }
    Ok(sum * f.grid().cell_volume() * scale.powf(q))
}

/// Dyadic subcubes of the grid box at levels `min_level..=max_level`, plus
/// for each level the cubes shifted by half a side along every axis that
/// still fit inside the box. Level `L` cubes have side `box_side · 2^-L`.
pub fn dyadic_cubes(grid: &GridSpec, min_level: u32, max_level: u32) -> Result<Vec<Cube>> {
    if min_level > max_level {
        return Err(Error::InvalidArgument(format!(
            "min_level {min_level} > max_level {max_level}"
        )));
    }
    let side_at = |level: u32| grid.box_side() / 2f64.powi(level as i32);
    let finest = side_at(max_level);
    if finest < 2.0 * grid.h() * (1.0 - FACE_SNAP) {
        return Err(Error::CubeUnderResolved { side: finest, min: 2.0 * grid.h() });
    }
    let dim = grid.dim();
    let mut cubes = Vec::new();
    for level in min_level..=max_level {
        let side = side_at(level);
        let per_axis = 1usize << level;
        push_lattice(grid, side, 0.0, per_axis, dim, &mut cubes)?;
        if per_axis > 1 {
            push_lattice(grid, side, 0.5, per_axis - 1, dim, &mut cubes)?;
        }
    }
    Ok(cubes)
}

fn push_lattice(
    grid: &GridSpec,
    side: f64,
    offset: f64,
    per_axis: usize,
    dim: usize,
    out: &mut Vec<Cube>,
) -> Result<()> {
    let total = per_axis.pow(dim as u32);
    for k in 0..total {
        let idx = [k % per_axis, k / per_axis];
        let corner: Vec<f64> = (0..dim)
            .map(|a| grid.origin()[a] + (idx[dim - 1 - a] as f64 + offset) * side)
            .collect();
        out.push(Cube::from_corner(&corner, side)?);
    }
    Ok(())
}

/// Number of cubes [`dyadic_cubes`] returns, by closed form.
pub fn dyadic_family_size(dim: usize, min_level: u32, max_level: u32) -> usize {
    (min_level..=max_level)
        .map(|l| {
            let k = 1usize << l;
            k.pow(dim as u32) + (k - 1).pow(dim as u32)
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_grid(m: usize) -> GridSpec {
        GridSpec::new(1, vec![0.0], 1.0 / m as f64, m).unwrap()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(3, vec![0.0; 3], 0.1, 4).is_err());
        assert!(GridSpec::new(1, vec![0.0], 0.0, 4).is_err());
        assert!(GridSpec::new(1, vec![0.0], 0.1, 1).is_err());
        assert!(GridSpec::new(2, vec![0.0], 0.1, 4).is_err());
        assert!(GridSpec::new(2, vec![0.0, 0.0], 0.1, 1 << 13).is_err());
    }

    #[test]
    fn sampled_function_rejects_nan() {
        let g = unit_grid(4);
        assert_eq!(
            SampledFunction::new(g, vec![0.0, f64::NAN, 1.0, 2.0]),
            Err(Error::NonFinite(1))
        );
    }

    #[test]
    fn average_of_constant() {
        let g = GridSpec::new(2, vec![-1.0, 2.0], 0.125, 16).unwrap();
        let b = SampledFunction::constant(&g, 5.0).unwrap();
        let q = Cube::new(vec![-0.3, 2.9], 0.7).unwrap();
        assert_eq!(cube_average(&b, &q).unwrap(), 5.0);
    }

    #[test]
    fn average_of_identity_on_unit_interval() {
        let g = unit_grid(64);
        let b = SampledFunction::from_fn(&g, |x| x[0]).unwrap();
        let avg = cube_average(&b, &g.box_cube()).unwrap();
        assert!((avg - 0.5).abs() <= g.h());
    }

    #[test]
    fn average_of_haar_step() {
        let g = unit_grid(64);
        let b = SampledFunction::from_fn(&g, |x| if x[0] < 0.5 { 1.0 } else { -1.0 }).unwrap();
        let avg = cube_average(&b, &g.box_cube()).unwrap();
        assert!(avg.abs() <= g.h());
    }

    #[test]
    fn cube_off_grid_is_an_error() {
        let g = unit_grid(8);
        let b = SampledFunction::zeros(&g);
        let q = Cube::new(vec![5.0], 0.5).unwrap();
        assert_eq!(cube_average(&b, &q), Err(Error::CubeOffGrid));
        // a cube thinner than a cell that misses every node
        let q = Cube::new(vec![0.125], 0.01).unwrap();
        assert_eq!(cube_average(&b, &q), Err(Error::CubeOffGrid));
    }

    #[test]
    fn half_open_membership_partitions() {
        let g = unit_grid(16);
        let left = g.cube_nodes(&Cube::from_corner(&[0.0], 0.5).unwrap()).unwrap();
        let right = g.cube_nodes(&Cube::from_corner(&[0.5], 0.5).unwrap()).unwrap();
        assert_eq!(left.count() + right.count(), 16);
        assert_eq!(left.hi()[0], right.lo()[0]);
    }

    #[test]
    fn norm_of_indicator() {
        let g = GridSpec::new(2, vec![-1.0, -1.0], 1.0 / 32.0, 96).unwrap();
        let f = SampledFunction::from_fn(&g, |x| {
            if (0.0..1.0).contains(&x[0]) && (0.0..1.0).contains(&x[1]) { 1.0 } else { 0.0 }
        })
        .unwrap();
        let n = lq_norm(&f, 2.0, None).unwrap();
        assert!((n - 1.0).abs() < 1e-12);
        assert_eq!(lq_norm(&SampledFunction::zeros(&g), 2.0, None).unwrap(), 0.0);
    }

    #[test]
    fn weighted_norm_matches_closed_form() {
        // (∫_0^1 (1 + x) dx)^{1/4} = 1.5^{1/4}; midpoint is exact for linear w.
        let g = unit_grid(256);
        let f = SampledFunction::constant(&g, 1.0).unwrap();
        let w = SampledFunction::from_fn(&g, |x| 1.0 + x[0]).unwrap();
        let n = lq_norm(&f, 4.0, Some(&w)).unwrap();
        assert!((n - 1.5f64.powf(0.25)).abs() < 1e-12);
    }

    #[test]
    fn norm_errors() {
        let g = unit_grid(8);
        let f = SampledFunction::constant(&g, 1.0).unwrap();
        let mut wv = vec![1.0; 8];
        wv[3] = 0.0;
        let w = SampledFunction::new(g.clone(), wv).unwrap();
        assert_eq!(lq_norm(&f, 2.0, Some(&w)), Err(Error::NonPositiveWeight(3)));
        let other = SampledFunction::constant(&unit_grid(16), 1.0).unwrap();
        assert!(matches!(lq_norm(&f, 2.0, Some(&other)), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn dyadic_family_in_one_dimension() {
        let g = unit_grid(16);
        let cubes = dyadic_cubes(&g, 0, 1).unwrap();
        let spans: Vec<(f64, f64)> = cubes
            .iter()
            .map(|c| (c.center[0] - c.side / 2.0, c.center[0] + c.side / 2.0))
            .collect();
        assert_eq!(spans, vec![(0.0, 1.0), (0.0, 0.5), (0.5, 1.0), (0.25, 0.75)]);
        assert_eq!(dyadic_cubes(&g, 0, 0).unwrap().len(), 1);
    }

    #[test]
    fn dyadic_family_count_in_two_dimensions() {
        let g = GridSpec::new(2, vec![0.0, 0.0], 0.125, 8).unwrap();
        let cubes = dyadic_cubes(&g, 0, 2).unwrap();
        // brute-force enumeration: every corner on the half-side lattice whose
        // cube fits in the box and is either unshifted or shifted on all axes
        let mut expected = 0;
        for level in 0..=2u32 {
            let side = 1.0 / 2f64.powi(level as i32);
            let steps = 1usize << (level + 1);
            for i in 0..steps {
                for j in 0..steps {
                    let (a, b) = (i as f64 * side / 2.0, j as f64 * side / 2.0);
                    let fits = a + side <= 1.0 + 1e-12 && b + side <= 1.0 + 1e-12;
                    if fits && i % 2 == j % 2 {
                        expected += 1;
                    }
                }
            }
        }
        assert_eq!(cubes.len(), expected);
        assert_eq!(cubes.len(), dyadic_family_size(2, 0, 2));
        assert_eq!(cubes.len(), 1 + (4 + 1) + (16 + 9));
    }

    #[test]
    fn dyadic_under_resolved() {
        let g = unit_grid(8);
        assert!(matches!(dyadic_cubes(&g, 0, 3), Err(Error::CubeUnderResolved { .. })));
        assert!(dyadic_cubes(&g, 0, 2).is_ok());
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let g = GridSpec::new(2, vec![-0.1, 1.0 / 3.0], 0.1, 4).unwrap();
        let f = SampledFunction::from_fn(&g, |x| (x[0] * 7.3).sin() / 3.0 + x[1].exp()).unwrap();
        let text = f.to_csv();
        assert!(text.starts_with("# dim,origin_0,origin_1,h,M\n"));
        let back = SampledFunction::from_csv(&text).unwrap();
        assert_eq!(back.grid(), f.grid());
        for (a, b) in back.values().iter().zip(f.values()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }
}
