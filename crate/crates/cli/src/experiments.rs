//! One function per experiment. Each returns the JSON report plus any
//! plot-ready CSV files; writing them to disk is the caller's job.

use bifrac_core::fixtures::bump_gradient_bound;
use bifrac_core::grid::{cube_measure, lq_norm};
use bifrac_core::lab::{
    audit_witness, estimate_slopes, fkr_moduli, is_nonincreasing, log_radii, sample_unit_pairs,
    separation_experiment, truncation_convergence, witness_pair, CubeScheme, SeparationOptions,
};
use bifrac_core::oscillation::{bmo_norm, cmo_moduli, full_dyadic_family, mean_oscillation, normalize_bmo, ModulusKind};
use bifrac_core::weights::{
    ap_constant, apq_constant, lemma1_check, vector_ap_constant, vector_apq_constant, WeightPair,
    DEFAULT_HYPOTHESIS_CAP,
};
use bifrac_core::{BilinearOperator, Cube, ExponentConfig, GridSpec, KernelParams, SampledFunction, Slot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{ExperimentConfig, LogRange, SchemeChoice};
use crate::Failure;

pub struct Outcome {
    pub report: Value,
    /// `(file name, contents)`.
    pub csv: Vec<(String, String)>,
}

/// Everything an experiment needs besides its own config section.
pub struct Context<'a> {
    pub config: &'a ExperimentConfig,
    pub cfg: ExponentConfig,
    pub grid: GridSpec,
    pub budget: u64,
}

impl Context<'_> {
    fn sample(&self, name: &str) -> Result<SampledFunction, Failure> {
        Ok(self.config.fixture(name)?.sample(&self.grid)?)
    }

    fn params(&self) -> Result<KernelParams, Failure> {
        Ok(KernelParams::from_config(&self.cfg, self.config.delta)?)
    }

    fn operator(&self, params: KernelParams) -> Result<BilinearOperator, Failure> {
        Ok(BilinearOperator::with_budget(&self.grid, params, self.config.mode, self.budget)?)
    }

    fn pair(&self) -> Result<WeightPair, Failure> {
        Ok(WeightPair::new(self.sample("w1")?, self.sample("w2")?, self.cfg)?)
    }

    /// `μ_w` when `weighted`, otherwise no weight.
    fn target_weight(&self, weighted: bool) -> Result<Option<SampledFunction>, Failure> {
        Ok(if weighted { Some(self.pair()?.mu()) } else { None })
    }
}

pub fn run(name: &str, ctx: &Context) -> Result<Outcome, Failure> {
    match name {
        "apply" => apply(ctx),
        "commutator" => commutator(ctx),
        "bmo" => bmo(ctx),
        "cmo" => cmo(ctx),
        "weights" => weights(ctx),
        "lemma1" => lemma1(ctx),
        "fkr" => fkr(ctx),
        "witness" => witness(ctx),
        "separation" => separation(ctx),
        "truncation" => truncation(ctx),
        other => Err(Failure::unknown_experiment(other)),
    }
}

fn radii(r: &LogRange) -> Vec<f64> {
    log_radii(r.lo, r.hi, r.count)
}

fn function_csv(f: &SampledFunction, quantity: &str) -> String {
    let g = f.grid();
    let n = g.dim();
    let mut out = String::new();
    let coords: Vec<String> = (0..n).map(|a| format!("x{a} (length)")).collect();
    out.push_str(&format!("{},{quantity}\n", coords.join(",")));
    for i in 0..g.len() {
        let c = g.coord(i);
        let xs: Vec<String> = c[..n].iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&format!("{},{:?}\n", xs.join(","), f.value(i)));
    }
    out
}

fn summarize(f: &SampledFunction, q: f64) -> Result<Value, Failure> {
    Ok(json!({
        "lq_norm": lq_norm(f, q, None)?,
        "q": q,
        "max_abs": f.max_abs(),
        "integral": f.integral(),
    }))
}

fn apply(ctx: &Context) -> Result<Outcome, Failure> {
    let (f, g) = (ctx.sample("f")?, ctx.sample("g")?);
    let out = ctx.operator(ctx.params()?)?.apply(&f, &g)?;
    Ok(Outcome {
        report: json!({ "experiment": "apply", "output": summarize(&out, ctx.cfg.q())? }),
        csv: vec![("output.csv".into(), function_csv(&out, "I(f,g) (value)"))],
    })
}

fn commutator(ctx: &Context) -> Result<Outcome, Failure> {
    let slot = match ctx.config.slot {
        1 => Slot::First,
        2 => Slot::Second,
        s => return Err(Failure::Usage(format!("slot must be 1 or 2, got {s}"))),
    };
    let (b, f, g) = (ctx.sample("b")?, ctx.sample("f")?, ctx.sample("g")?);
    let out = ctx.operator(ctx.params()?)?.commutator(&b, &f, &g, slot)?;
    Ok(Outcome {
        report: json!({
            "experiment": "commutator",
            "slot": ctx.config.slot,
            "output": summarize(&out, ctx.cfg.q())?,
        }),
        csv: vec![("output.csv".into(), function_csv(&out, "[b,I](f,g) (value)"))],
    })
}

fn bmo(ctx: &Context) -> Result<Outcome, Failure> {
    let b = ctx.sample("b")?;
    let family = full_dyadic_family(&ctx.grid)?;
    let norm = bmo_norm(&b, &family)?;
    // worst mean oscillation per cube side
    let mut by_side: Vec<(f64, f64)> = Vec::new();
    for q in &family {
        let osc = mean_oscillation(&b, q)?;
        match by_side.iter_mut().find(|(s, _)| *s == q.side) {
            Some(entry) => entry.1 = entry.1.max(osc),
            None => by_side.push((q.side, osc)),
        }
    }
    by_side.sort_by(|a, b| a.0.total_cmp(&b.0));
    let normalized = if norm > 0.0 { Some(bmo_norm(&normalize_bmo(&b, &family)?.0, &family)?) } else { None };
    let mut csv = String::from("side (length),max mean oscillation (units of b)\n");
    for (s, o) in &by_side {
        csv.push_str(&format!("{s:?},{o:?}\n"));
    }
    Ok(Outcome {
        report: json!({
            "experiment": "bmo",
            "bmo_norm_lower_bound": norm,
            "family_size": family.len(),
            "normalized_bmo_norm": normalized,
        }),
        csv: vec![("bmo_by_side.csv".into(), csv)],
    })
}

fn cmo(ctx: &Context) -> Result<Outcome, Failure> {
    let b = ctx.sample("b")?;
    let sec = ctx.config.section(&ctx.config.oscillation, "oscillation")?;
    let reference = match &sec.reference_cube {
        Some(c) => c.cube()?,
        None => Cube::new(ctx.grid.box_center(), 1.0)?,
    };
    let report = cmo_moduli(&b, &sec.small_scales, &sec.large_scales, &reference, &sec.shifts)?;
    let trend = |kind| report.trend(kind).ok().map(|f| f.slope);
    Ok(Outcome {
        report: json!({
            "experiment": "cmo",
            "moduli": report,
            "trend_slopes": {
                "small_scale": trend(ModulusKind::SmallScale),
                "large_scale": trend(ModulusKind::LargeScale),
                "translation": trend(ModulusKind::Translation),
            },
            "bump_gradient_bound": match ctx.config.fixture("b")? {
                bifrac_core::fixtures::Fixture::Bump { radius, amplitude, .. } => Some(bump_gradient_bound(*radius, *amplitude)),
                _ => None,
            },
        }),
        csv: vec![("moduli.csv".into(), report.to_csv())],
    })
}

fn weights(ctx: &Context) -> Result<Outcome, Failure> {
    let family = full_dyadic_family(&ctx.grid)?;
    let w1 = ctx.sample("w1")?;
    let p_values = match &ctx.config.weights {
        Some(s) if !s.p_values.is_empty() => s.p_values.clone(),
        _ => vec![ctx.cfg.p1(), ctx.cfg.p2()],
    };
    let mut csv = String::from("weight,class,exponent,constant (dimensionless; family lower bound)\n");
    let mut ap = Vec::new();
    for &p in &p_values {
        let c = ap_constant(&w1, p, &family)?;
        csv.push_str(&format!("w1,A_p,{p:?},{c:?}\n"));
        ap.push(json!({ "p": p, "constant": c }));
    }
    let (p, q) = (ctx.cfg.p(), ctx.cfg.q());
    let apq = apq_constant(&w1, p, q, &family)?;
    csv.push_str(&format!("w1,A_(p;q),{p:?};{q:?},{:?}\n", apq.value));
    let vector = if ctx.config.fixtures.w2.is_some() {
        let pair = ctx.pair()?;
        let vap = vector_ap_constant(&pair, &family)?;
        let vapq = vector_apq_constant(&pair, &family)?;
        csv.push_str(&format!("(w1;w2),A_P,{p:?},{vap:?}\n"));
        csv.push_str(&format!("(w1;w2),A_(P;q),{q:?},{vapq:?}\n"));
        Some(json!({ "A_P": vap, "A_(P,q)": vapq }))
    } else {
        None
    };
    Ok(Outcome {
        report: json!({
            "experiment": "weights",
            "family_size": family.len(),
            "w1_ap": ap,
            "w1_apq": apq,
            "vector": vector,
        }),
        csv: vec![("constants.csv".into(), csv)],
    })
}

fn lemma1(ctx: &Context) -> Result<Outcome, Failure> {
    let family = full_dyadic_family(&ctx.grid)?;
    let cap = ctx.config.weights.as_ref().and_then(|w| w.hypothesis_cap).unwrap_or(DEFAULT_HYPOTHESIS_CAP);
    let report = lemma1_check(&ctx.pair()?, &family, cap)?;
    let mut csv = String::from("class,constant (dimensionless; family lower bound)\n");
    for (k, v) in &report.ap_constants {
        csv.push_str(&format!("{k},{v:?}\n"));
    }
    Ok(Outcome {
        report: json!({ "experiment": "lemma1", "result": report }),
        csv: vec![("constants.csv".into(), csv)],
    })
}

fn fkr(ctx: &Context) -> Result<Outcome, Failure> {
    let sec = ctx.config.section(&ctx.config.fkr, "fkr")?;
    let b = ctx.sample("b")?;
    let op = ctx.operator(ctx.params()?)?;
    let pairs = sample_unit_pairs(&ctx.grid, ctx.cfg.p1(), ctx.cfg.p2(), &sec.sampling(ctx.config.seed))?;
    let outputs = pairs
        .iter()
        .map(|(f, g)| op.commutator(&b, f, g, Slot::First))
        .collect::<Result<Vec<_>, _>>()?;
    let h = ctx.grid.h();
    let shifts: Vec<Vec<f64>> = sec.shifts.iter().map(|s| s.iter().map(|&c| c as f64 * h).collect()).collect();
    let w = ctx.target_weight(sec.weighted)?;
    let report = fkr_moduli(&outputs, ctx.cfg.q(), w.as_ref(), &radii(&sec.radii), &shifts)?;
    Ok(Outcome {
        report: json!({
            "experiment": "fkr",
            "pairs": pairs.len(),
            "weighted": sec.weighted,
            "moduli": report,
            "tail_fit": report.tail_fit().ok(),
            "expected_tail_exponent": ctx.cfg.tail_exponent(),
            "translation_fit": report.translation_fit().ok(),
        }),
        csv: vec![("fkr.csv".into(), report.to_csv())],
    })
}

fn random_cubes(grid: &GridSpec, seed: u64, count: usize, min_cells: usize, max_cells: usize) -> Result<Vec<Cube>, Failure> {
    if !(2 <= min_cells && min_cells <= max_cells && max_cells <= grid.m()) {
        return Err(Failure::Usage("[witness.random] needs 2 ≤ min_cells ≤ max_cells ≤ M".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let h = grid.h();
    (0..count)
        .map(|_| {
            let k = rng.gen_range(min_cells..=max_cells);
            let corner: Vec<f64> = grid
                .origin()
                .iter()
                .map(|o| o + rng.gen_range(0..=grid.m() - k) as f64 * h)
                .collect();
            Ok(Cube::from_corner(&corner, k as f64 * h)?)
        })
        .collect()
}

fn witness(ctx: &Context) -> Result<Outcome, Failure> {
    let sec = ctx.config.section(&ctx.config.witness, "witness")?;
    let b = ctx.sample("b")?;
    let mut cubes = sec.cubes.iter().map(|c| c.cube()).collect::<Result<Vec<_>, _>>()?;
    if let Some(r) = sec.random {
        cubes.extend(random_cubes(&ctx.grid, ctx.config.seed, r.count, r.min_cells, r.max_cells)?);
    }
    if cubes.is_empty() {
        return Err(Failure::Usage("[witness] lists no cubes".into()));
    }
    let n = ctx.grid.dim();
    let centers: Vec<String> = (0..n).map(|a| format!("center{a} (length)")).collect();
    let mut csv = format!(
        "{},side (length),measure (volume),c0 (dimensionless),epsilon (units of b),mean_error (abs),pairing_error (relative),g_norm_error (abs),violations (count)\n",
        centers.join(",")
    );
    let mut records = Vec::new();
    for cube in &cubes {
        let w = witness_pair(&b, cube, &ctx.cfg)?;
        let audit = audit_witness(&b, &w, &ctx.cfg)?;
        let cs: Vec<String> = cube.center.iter().map(|c| format!("{c:?}")).collect();
        csv.push_str(&format!(
            "{},{:?},{:?},{:?},{:?},{:?},{:?},{:?},{}\n",
            cs.join(","),
            cube.side,
            cube_measure(&ctx.grid, cube)?,
            w.c0,
            w.epsilon_achieved,
            audit.mean_error,
            audit.pairing_error,
            audit.g_norm_error,
            audit.support_violations + audit.sign_violations + audit.amplitude_violations
        ));
        records.push(json!({ "witness": w.summary(), "audit": audit }));
    }
    let slopes = match &sec.radii {
        Some(r) => Some(estimate_slopes(&b, &cubes[0], &ctx.cfg, &radii(r))?),
        None => None,
    };
    let mut files = vec![("witnesses.csv".into(), csv)];
    if let Some(s) = &slopes {
        let mut t = String::from("radius (length),est1 annulus mean (value),est1 annulus min (value),est3 annulus mean (value)\n");
        for i in 0..s.radii.len() {
            t.push_str(&format!("{:?},{:?},{:?},{:?}\n", s.radii[i], s.est1_mean[i], s.est1_min[i], s.est3_mean[i]));
        }
        files.push(("slopes.csv".into(), t));
    }
    Ok(Outcome {
        report: json!({
            "experiment": "witness",
            "instances": records,
            "slopes": slopes,
            "expected_slopes": {
                "est1": -ctx.cfg.kernel_degree(),
                "est3": -(ctx.cfg.kernel_degree() + 1.0),
            },
        }),
        csv: files,
    })
}

fn separation(ctx: &Context) -> Result<Outcome, Failure> {
    let sec = ctx.config.section(&ctx.config.separation, "separation")?;
    let need = |v: Option<f64>, key: &str| v.ok_or_else(|| Failure::Usage(format!("[separation] needs `{key}`")));
    let scheme = match sec.scheme {
        SchemeChoice::Shrinking => CubeScheme::shrinking(
            sec.center.clone(),
            sec.side,
            need(sec.ratio, "ratio")?,
            sec.len,
            need(sec.ratio_bound, "ratio_bound")?,
        )?,
        SchemeChoice::Growing => CubeScheme::growing(
            sec.center.clone(),
            sec.side,
            need(sec.ratio, "ratio")?,
            sec.len,
            need(sec.ratio_bound, "ratio_bound")?,
        )?,
        SchemeChoice::Translating => CubeScheme::translating(
            sec.center.clone(),
            sec.side,
            sec.step.clone().ok_or_else(|| Failure::Usage("[separation] needs `step`".into()))?,
            sec.len,
            need(sec.gamma2, "gamma2")?,
        )?,
    };
    let b = ctx.sample("b")?;
    let opts = SeparationOptions { weight: ctx.target_weight(sec.weighted)?, budget: Some(ctx.budget) };
    let report = separation_experiment(&b, &scheme, &ctx.cfg, &ctx.params()?, ctx.config.mode, &opts)?;
    let (lo, hi) = report.min_max_distance();
    Ok(Outcome {
        report: json!({
            "experiment": "separation",
            "result": report,
            "min_distance": lo,
            "max_distance": hi,
            "consecutive_distances": report.consecutive_distances(),
        }),
        csv: vec![("distances.csv".into(), report.distances_csv())],
    })
}

fn truncation(ctx: &Context) -> Result<Outcome, Failure> {
    let sec = ctx.config.section(&ctx.config.truncation, "truncation")?;
    let (b, f, g) = (ctx.sample("b")?, ctx.sample("f")?, ctx.sample("g")?);
    let w = ctx.target_weight(sec.weighted)?;
    // the budget check is the same for every δ, so do it once up front
    ctx.operator(KernelParams::from_config(&ctx.cfg, None)?)?;
    let points = truncation_convergence(&b, &f, &g, &ctx.cfg, &sec.scales()?, w.as_ref(), ctx.config.mode)?;
    let mut csv = String::from("delta (length),difference (L^q norm)\n");
    for p in &points {
        csv.push_str(&format!("{:?},{:?}\n", p.delta, p.difference));
    }
    let ratio = match (points.first(), points.last()) {
        (Some(a), Some(z)) if a.difference > 0.0 => Some(z.difference / a.difference),
        _ => None,
    };
    Ok(Outcome {
        report: json!({
            "experiment": "truncation",
            "weighted": sec.weighted,
            "points": points,
            "nonincreasing": is_nonincreasing(&points, 1e-6),
            "final_over_first": ratio,
        }),
        csv: vec![("truncation.csv".into(), csv)],
    })
}
