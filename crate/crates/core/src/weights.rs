//! Muckenhoupt constants as family suprema, the composite weights `ν_w` and
//! `μ_w`, and a cube-by-cube verifier for the weight lemma:
//! if `w₁^{p₁q/p}, w₂^{p₂q/p} ∈ A_p` then `w ∈ A_{P,q}` and `μ_w ∈ A_p ⊂ A_q`.
//!
//! Every constant here is a maximum over a finite cube family and therefore
//! a lower bound for the true supremum over all cubes.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exponents::{dual, ExponentConfig};
use crate::grid::{range_mean, Cube, NodeRange, SampledFunction};

/// Default ceiling above which a hypothesis constant counts as blown up.
pub const DEFAULT_HYPOTHESIS_CAP: f64 = 1e3;

fn check_positive(w: &SampledFunction) -> Result<()> {
    match w.values().iter().position(|&v| !(v > 0.0)) {
        Some(i) => Err(Error::NonPositiveWeight(i)),
        None => Ok(()),
    }
}

fn ranges(w: &SampledFunction, cubes: &[Cube]) -> Result<Vec<NodeRange>> {
    if cubes.is_empty() {
        return Err(Error::EmptyFamily);
    }
    cubes.iter().map(|q| w.grid().cube_nodes(q)).collect()
}

fn powered(w: &SampledFunction, e: f64) -> Vec<f64> {
    w.values().iter().map(|v| v.powf(e)).collect()
}

/// Per-cube value of a weight functional together with the family supremum.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilySup {
    pub value: f64,
    pub worst_cube: usize,
    #[serde(skip)]
    pub per_cube: Vec<f64>,
}

impl FamilySup {
    fn from_values(per_cube: Vec<f64>) -> Self {
        let (worst_cube, value) = per_cube
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
        FamilySup { value, worst_cube, per_cube }
    }
}

fn per_cube(rs: &[NodeRange], f: impl Fn(&NodeRange) -> f64 + Sync + Send) -> Vec<f64> {
    rs.par_iter().map(f).collect()
}

/// `[w]_{A_p}` products `(⨍ w)(⨍ w^{1−p′})^{p/p′}` on every cube.
pub fn ap_products(w: &SampledFunction, p: f64, cubes: &[Cube]) -> Result<FamilySup> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Exponents(format!("A_p needs 1 < p < ∞, got {p}")));
    }
    check_positive(w)?;
    let rs = ranges(w, cubes)?;
    let pd = dual(p);
    let dual_pow = powered(w, 1.0 - pd);
    let vals = w.values();
    Ok(FamilySup::from_values(per_cube(&rs, |r| {
        range_mean(vals, r) * range_mean(&dual_pow, r).powf(p / pd)
    })))
}

/// Family supremum of `(⨍_Q w)(⨍_Q w^{1−p′})^{p/p′}`.
pub fn ap_constant(w: &SampledFunction, p: f64, cubes: &[Cube]) -> Result<f64> {
    Ok(ap_products(w, p, cubes)?.value)
}

/// `[w]_{A_{p,q}}` together with its evaluation through `[w^q]_{A_{1+q/p′}}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ApqConstant {
    pub value: f64,
    pub via_identity: f64,
    /// Largest per-cube relative gap between the two evaluations.
    pub identity_gap: f64,
    pub worst_cube: usize,
}

/// Family supremum of `(⨍ w^q)(⨍ w^{−p′})^{q/p′}`, cross-checked cube by cube
/// against `[w^q]_{A_{1+q/p′}}`.
pub fn apq_constant(w: &SampledFunction, p: f64, q: f64, cubes: &[Cube]) -> Result<ApqConstant> {
    if !(p > 1.0 && p <= q && q.is_finite()) {
        return Err(Error::Exponents(format!("A_{{p,q}} needs 1 < p ≤ q < ∞, got p = {p}, q = {q}")));
    }
    check_positive(w)?;
    let rs = ranges(w, cubes)?;
    let pd = dual(p);
    let wq = powered(w, q);
    let wneg = powered(w, -pd);
    let direct = FamilySup::from_values(per_cube(&rs, |r| {
        range_mean(&wq, r) * range_mean(&wneg, r).powf(q / pd)
    }));
    let wq_fn = SampledFunction::new(w.grid().clone(), wq)?;
    let other = ap_products(&wq_fn, 1.0 + q / pd, cubes)?;
    let identity_gap = direct
        .per_cube
        .iter()
        .zip(&other.per_cube)
        .map(|(a, b)| (a - b).abs() / a.abs())
        .fold(0.0, f64::max);
    Ok(ApqConstant {
        value: direct.value,
        via_identity: other.value,
        identity_gap,
        worst_cube: direct.worst_cube,
    })
}

/// Positive weights `(w₁, w₂)` with their exponents.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightPair {
    w1: SampledFunction,
    w2: SampledFunction,
    cfg: ExponentConfig,
}

impl WeightPair {
    pub fn new(w1: SampledFunction, w2: SampledFunction, cfg: ExponentConfig) -> Result<Self> {
        w1.grid().check_same(w2.grid())?;
        check_positive(&w1)?;
        check_positive(&w2)?;
        if cfg.dim() != w1.grid().dim() {
            return Err(Error::GridMismatch("exponent dimension differs from the weight grid".into()));
        }
        Ok(WeightPair { w1, w2, cfg })
    }

    pub fn w1(&self) -> &SampledFunction {
        &self.w1
    }

    pub fn w2(&self) -> &SampledFunction {
        &self.w2
    }

    pub fn config(&self) -> &ExponentConfig {
        &self.cfg
    }

    /// `ν_w = w₁^{p/p₁} w₂^{p/p₂}`.
    pub fn nu(&self) -> SampledFunction {
        let (p, p1, p2) = (self.cfg.p(), self.cfg.p1(), self.cfg.p2());
        self.w1.zip_with(&self.w2, |a, b| a.powf(p / p1) * b.powf(p / p2)).expect("grids checked")
    }

    /// `μ_w = w₁^q w₂^q`.
    pub fn mu(&self) -> SampledFunction {
        let q = self.cfg.q();
        self.w1.zip_with(&self.w2, |a, b| a.powf(q) * b.powf(q)).expect("grids checked")
    }
}

fn vector_ap_products(w1: &SampledFunction, w2: &SampledFunction, cfg: &ExponentConfig, rs: &[NodeRange]) -> Vec<f64> {
    let (p, p1, p2) = (cfg.p(), cfg.p1(), cfg.p2());
    let (p1d, p2d) = (cfg.p1_dual(), cfg.p2_dual());
    let nu: Vec<f64> = w1.values().iter().zip(w2.values()).map(|(a, b)| a.powf(p / p1) * b.powf(p / p2)).collect();
    let d1 = powered(w1, 1.0 - p1d);
    let d2 = powered(w2, 1.0 - p2d);
    per_cube(rs, |r| {
        range_mean(&nu, r) * range_mean(&d1, r).powf(p / p1d) * range_mean(&d2, r).powf(p / p2d)
    })
}

fn vector_apq_products(pair: &WeightPair, rs: &[NodeRange]) -> Vec<f64> {
    let cfg = &pair.cfg;
    let q = cfg.q();
    let (p1d, p2d) = (cfg.p1_dual(), cfg.p2_dual());
    let mu = pair.mu();
    let d1 = powered(&pair.w1, -p1d);
    let d2 = powered(&pair.w2, -p2d);
    per_cube(rs, |r| {
        range_mean(mu.values(), r) * range_mean(&d1, r).powf(q / p1d) * range_mean(&d2, r).powf(q / p2d)
    })
}

/// Family supremum of `(⨍ ν_w)(⨍ w₁^{1−p₁′})^{p/p₁′}(⨍ w₂^{1−p₂′})^{p/p₂′}`.
pub fn vector_ap_constant(pair: &WeightPair, cubes: &[Cube]) -> Result<f64> {
    let rs = ranges(&pair.w1, cubes)?;
    Ok(FamilySup::from_values(vector_ap_products(&pair.w1, &pair.w2, &pair.cfg, &rs)).value)
}

/// Family supremum of `(⨍ w₁^q w₂^q)(⨍ w₁^{−p₁′})^{q/p₁′}(⨍ w₂^{−p₂′})^{q/p₂′}`.
pub fn vector_apq_constant(pair: &WeightPair, cubes: &[Cube]) -> Result<f64> {
    let rs = ranges(&pair.w1, cubes)?;
    Ok(FamilySup::from_values(vector_apq_products(pair, &rs)).value)
}

/// Worst case of a cube-wise inequality `lhs ≤ rhs`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeInequality {
    /// `min_Q (rhs − lhs) / rhs`; nonnegative when the inequality holds everywhere.
    pub min_relative_slack: f64,
    pub worst_cube: Cube,
    pub lhs_at_worst: f64,
    pub rhs_at_worst: f64,
    pub holds: bool,
}

fn cube_inequality(lhs: &[f64], rhs: &[f64], cubes: &[Cube], tol: f64) -> CubeInequality {
    let (i, slack) = lhs
        .iter()
        .zip(rhs)
        .map(|(l, r)| (r - l) / r)
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, s)| if s < acc.1 { (i, s) } else { acc });
    CubeInequality {
        min_relative_slack: slack,
        worst_cube: cubes[i].clone(),
        lhs_at_worst: lhs[i],
        rhs_at_worst: rhs[i],
        holds: slack >= -tol,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstantInequality {
    pub lhs: f64,
    pub rhs: f64,
    pub relative_slack: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Lemma1Record {
    pub hypothesis_satisfied: bool,
    /// `[w₁^{p₁q/p}]_{A_p}` and `[w₂^{p₂q/p}]_{A_p}`.
    pub hypothesis_constants: [f64; 2],
    pub hypothesis_cap: f64,
    /// Cube-wise Hölder chain: the `A_{P,q}` product of `w` is at most the
    /// `A_P` product of `(w₁^{p₁q/p}, w₂^{p₂q/p})`.
    pub chain_i: Option<CubeInequality>,
    /// `[μ_w]_{A_p} ≤ [w₁^{p₁q/p}]_{A_p}^{p/p₁} [w₂^{p₂q/p}]_{A_p}^{p/p₂}`.
    pub bound_ii: Option<ConstantInequality>,
    /// The same bound checked on each cube separately.
    pub bound_ii_cubewise: Option<CubeInequality>,
    /// `[μ_w]_{A_q}`; finite and at most `[μ_w]_{A_p}` since `q > p`.
    pub mu_aq: Option<f64>,
    pub mu_aq_below_ap: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightReport {
    /// Family-supremum constants keyed by class tag.
    pub ap_constants: BTreeMap<String, f64>,
    pub apq_identity_gap: f64,
    pub lemma1: Lemma1Record,
    pub family_size: usize,
}

/// Verifies the weight lemma on a cube family, cube by cube.
///
/// If either hypothesis constant exceeds `cap` the record is marked as not
/// satisfying the hypothesis and no verdicts are produced.
pub fn lemma1_check(pair: &WeightPair, cubes: &[Cube], cap: f64) -> Result<WeightReport> {
    const TOL: f64 = 1e-9;
    let cfg = pair.cfg;
    let (p, q, p1, p2) = (cfg.p(), cfg.q(), cfg.p1(), cfg.p2());
    let rs = ranges(&pair.w1, cubes)?;

    let u1 = pair.w1.map(|v| v.powf(p1 * q / p))?;
    let u2 = pair.w2.map(|v| v.powf(p2 * q / p))?;
    let h1 = ap_products(&u1, p, cubes)?;
    let h2 = ap_products(&u2, p, cubes)?;
    let hypothesis_satisfied = h1.value.is_finite() && h2.value.is_finite() && h1.value <= cap && h2.value <= cap;

    let mut constants = BTreeMap::new();
    constants.insert("A_p[w1^(p1 q/p)]".to_string(), h1.value);
    constants.insert("A_p[w2^(p2 q/p)]".to_string(), h2.value);
    let vap = FamilySup::from_values(vector_ap_products(&pair.w1, &pair.w2, &cfg, &rs));
    let vapq = FamilySup::from_values(vector_apq_products(pair, &rs));
    constants.insert("A_P[w]".to_string(), vap.value);
    constants.insert("A_(P,q)[w]".to_string(), vapq.value);
    let mu = pair.mu();
    let mu_ap = ap_products(&mu, p, cubes)?;
    constants.insert("A_p[mu_w]".to_string(), mu_ap.value);
    let nu = pair.nu();
    constants.insert("A_p[nu_w]".to_string(), ap_constant(&nu, p, cubes)?);
    // Reported for reference: A_{P,q} membership is known to force
    // w_i^{-p_i'} ∈ A_{2p_i'} and μ_w ∈ A_{2q}.
    let (p1d, p2d) = (cfg.p1_dual(), cfg.p2_dual());
    constants.insert("A_(2p1')[w1^(-p1')]".to_string(), ap_constant(&pair.w1.map(|v| v.powf(-p1d))?, 2.0 * p1d, cubes)?);
    constants.insert("A_(2p2')[w2^(-p2')]".to_string(), ap_constant(&pair.w2.map(|v| v.powf(-p2d))?, 2.0 * p2d, cubes)?);
    constants.insert("A_(2q)[mu_w]".to_string(), ap_constant(&mu, 2.0 * q, cubes)?);

    let identity = apq_constant(&pair.w1.mul(&pair.w2)?, p, q, cubes)?;
    constants.insert("A_(p,q)[w1 w2]".to_string(), identity.value);

    let mut lemma1 = Lemma1Record {
        hypothesis_satisfied,
        hypothesis_constants: [h1.value, h2.value],
        hypothesis_cap: cap,
        chain_i: None,
        bound_ii: None,
        bound_ii_cubewise: None,
        mu_aq: None,
        mu_aq_below_ap: None,
    };
    if hypothesis_satisfied {
        let rhs_i = vector_ap_products(&u1, &u2, &cfg, &rs);
        lemma1.chain_i = Some(cube_inequality(&vapq.per_cube, &rhs_i, cubes, TOL));

        let bound = h1.value.powf(p / p1) * h2.value.powf(p / p2);
        let slack = (bound - mu_ap.value) / bound;
        lemma1.bound_ii = Some(ConstantInequality {
            lhs: mu_ap.value,
            rhs: bound,
            relative_slack: slack,
            holds: slack >= -TOL,
        });
        let rhs_cw: Vec<f64> = h1
            .per_cube
            .iter()
            .zip(&h2.per_cube)
            .map(|(a, b)| a.powf(p / p1) * b.powf(p / p2))
            .collect();
        lemma1.bound_ii_cubewise = Some(cube_inequality(&mu_ap.per_cube, &rhs_cw, cubes, TOL));

        let aq = ap_constant(&mu, q, cubes)?;
        lemma1.mu_aq = Some(aq);
        lemma1.mu_aq_below_ap = Some(aq <= mu_ap.value * (1.0 + TOL));
    }
    Ok(WeightReport {
        ap_constants: constants,
        apq_identity_gap: identity.identity_gap,
        lemma1,
        family_size: cubes.len(),
    })
}
