//! Experiment configuration files (TOML).
//!
//! One file describes one experiment: exponents, grid, fixtures and the
//! section belonging to the experiment being run. Unknown keys are rejected
//! so that typos do not silently fall back to defaults.

use std::path::PathBuf;

use bifrac_core::fixtures::Fixture;
use bifrac_core::lab::PairSampling;
use bifrac_core::{ApplyMode, Cube, ExponentConfig, GridSpec};
use serde::{Deserialize, Serialize};

use crate::Failure;

pub const EXPERIMENTS: [&str; 10] =
    ["apply", "commutator", "bmo", "cmo", "weights", "lemma1", "fkr", "witness", "separation", "truncation"];

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Optional; when present it must match the experiment named on the
    /// command line.
    pub experiment: Option<String>,
    pub exponents: ExponentsSection,
    pub grid: GridSection,
    #[serde(default)]
    pub fixtures: FixtureSection,
    #[serde(default)]
    pub mode: ApplyMode,
    /// Memory cap for FFT plans, in bytes.
    pub budget: Option<u64>,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    /// Truncation scale δ for the kernel; absent means untruncated.
    pub delta: Option<f64>,
    /// Commutator slot, 1 or 2.
    #[serde(default = "default_slot")]
    pub slot: u8,
    pub oscillation: Option<OscillationSection>,
    pub weights: Option<WeightsSection>,
    pub fkr: Option<FkrSection>,
    pub witness: Option<WitnessSection>,
    pub separation: Option<SeparationSection>,
    pub truncation: Option<TruncationSection>,
}

fn default_slot() -> u8 {
    1
}

#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExponentsSection {
    pub n: usize,
    pub alpha: f64,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub origin: Vec<f64>,
    pub h: f64,
    pub m: usize,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FixtureSection {
    pub b: Option<Fixture>,
    pub f: Option<Fixture>,
    pub g: Option<Fixture>,
    pub w1: Option<Fixture>,
    pub w2: Option<Fixture>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct CubeSection {
    pub center: Vec<f64>,
    pub side: f64,
}

impl CubeSection {
    pub fn cube(&self) -> Result<Cube, Failure> {
        Ok(Cube::new(self.center.clone(), self.side)?)
    }
}

/// `count` logarithmically spaced values in `[lo, hi]`.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct LogRange {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct OscillationSection {
    #[serde(default)]
    pub small_scales: Vec<f64>,
    #[serde(default)]
    pub large_scales: Vec<f64>,
    pub reference_cube: Option<CubeSection>,
    #[serde(default)]
    pub shifts: Vec<Vec<f64>>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsSection {
    /// Exponents at which `[w₁]_{A_p}` is reported.
    #[serde(default)]
    pub p_values: Vec<f64>,
    pub hypothesis_cap: Option<f64>,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct FkrSection {
    pub count: usize,
    pub f_radius: f64,
    pub g_plateau: f64,
    pub g_taper: f64,
    pub radii: LogRange,
    /// Shifts in whole cells.
    pub shifts: Vec<Vec<i64>>,
    #[serde(default)]
    pub weighted: bool,
}

impl FkrSection {
    pub fn sampling(&self, seed: u64) -> PairSampling {
        PairSampling {
            count: self.count,
            seed,
            f_radius: self.f_radius,
            g_plateau: self.g_plateau,
            g_taper: self.g_taper,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct WitnessSection {
    #[serde(default)]
    pub cubes: Vec<CubeSection>,
    pub random: Option<RandomCubes>,
    /// Annulus radii for the decay-slope fit around the first cube.
    pub radii: Option<LogRange>,
}

/// Seeded random cubes with sides between `min_cells` and `max_cells` grid
/// cells, placed anywhere inside the box.
#[derive(Clone, Copy, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RandomCubes {
    pub count: usize,
    pub min_cells: usize,
    pub max_cells: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SchemeChoice {
    Shrinking,
    Growing,
    Translating,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SeparationSection {
    pub scheme: SchemeChoice,
    /// Common center (scale schemes) or first center (translating).
    pub center: Vec<f64>,
    /// First side length.
    pub side: f64,
    pub len: usize,
    /// Side ratio between consecutive cubes (< 1 shrinking, > 1 growing).
    pub ratio: Option<f64>,
    /// Bound on the ratio, playing the role of `β/(2γ₂)`.
    pub ratio_bound: Option<f64>,
    /// Translation step between consecutive centers.
    pub step: Option<Vec<f64>>,
    /// Disjointness radius factor for translating schemes.
    pub gamma2: Option<f64>,
    #[serde(default)]
    pub weighted: bool,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationSection {
    /// Explicit strictly decreasing scales; otherwise `start` halved
    /// `halvings` times.
    #[serde(default)]
    pub deltas: Vec<f64>,
    pub start: Option<f64>,
    pub halvings: Option<usize>,
    #[serde(default)]
    pub weighted: bool,
}

impl TruncationSection {
    pub fn scales(&self) -> Result<Vec<f64>, Failure> {
        if !self.deltas.is_empty() {
            return Ok(self.deltas.clone());
        }
        match (self.start, self.halvings) {
            (Some(s), Some(k)) => Ok((0..=k).map(|i| s / 2f64.powi(i as i32)).collect()),
            _ => Err(Failure::Usage("[truncation] needs `deltas` or both `start` and `halvings`".into())),
        }
    }
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, Failure> {
        toml::from_str(text).map_err(|e| Failure::Usage(format!("invalid config: {e}")))
    }

    pub fn exponents(&self) -> Result<ExponentConfig, Failure> {
        let e = self.exponents;
        Ok(ExponentConfig::new(e.n, e.alpha, e.p1, e.p2)?)
    }

    pub fn grid(&self) -> Result<GridSpec, Failure> {
        let g = &self.grid;
        Ok(GridSpec::new(g.origin.len(), g.origin.clone(), g.h, g.m)?)
    }

    pub fn fixture(&self, name: &str) -> Result<&Fixture, Failure> {
        let f = &self.fixtures;
        let slot = match name {
            "b" => &f.b,
            "f" => &f.f,
            "g" => &f.g,
            "w1" => &f.w1,
            "w2" => &f.w2,
            _ => unreachable!("fixture slots are fixed"),
        };
        slot.as_ref().ok_or_else(|| Failure::Usage(format!("missing fixture `fixtures.{name}`")))
    }

    pub fn section<'a, T>(&self, value: &'a Option<T>, name: &str) -> Result<&'a T, Failure> {
        value.as_ref().ok_or_else(|| Failure::Usage(format!("missing section [{name}]")))
    }
}
