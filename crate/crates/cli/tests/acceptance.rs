//! Acceptance suite: one check per criterion, each printing a PASS/FAIL line
//! with its measured numbers. Run with `--nocapture` to see the table.
//!
//! Thresholds marked "frozen" were fixed from the first run on the stated
//! fixture and act as regression guards.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;
use std::time::Instant;

use bifrac_core::fixtures::{bump, power_weight, sine};
use bifrac_core::kernel::{fd_gradient_norm, k_alpha, k_delta};
use bifrac_core::lab::*;
use bifrac_core::oscillation::full_dyadic_family;
use bifrac_core::weights::{apq_constant, lemma1_check, WeightPair, DEFAULT_HYPOTHESIS_CAP};
use bifrac_core::{ApplyMode, BilinearOperator, Cube, ExponentConfig, GridSpec, KernelParams, SampledFunction, Slot};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Verdict = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Verdict {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// 1. FFT and direct evaluation agree node-wise.
fn fft_matches_direct() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    let mut worst: f64 = 0.0;
    for m in [32, 64, 128] {
        let grid = GridSpec::centered(1, 1.0, m).unwrap();
        for alpha in [0.5, 1.0] {
            let params = KernelParams::new(1, alpha, None).unwrap();
            let direct = BilinearOperator::new(&grid, params, ApplyMode::Direct).unwrap();
            let fft = BilinearOperator::new(&grid, params, ApplyMode::Fft).unwrap();
            for _ in 0..10 {
                let mut draw = || {
                    let v = (0..m).map(|_| rng.gen_range(0.0..1.0)).collect();
                    SampledFunction::new(grid.clone(), v).unwrap()
                };
                let (f, g) = (draw(), draw());
                let a = direct.apply(&f, &g).unwrap();
                let b = fft.apply(&f, &g).unwrap();
                for (x, y) in a.values().iter().zip(b.values()) {
                    worst = worst.max((x - y).abs() / x.abs());
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-10 && secs <= 60.0, format!("max relative difference {worst:.2e}, {secs:.1} s"))
}

// 2. Support, sandwich and gradient contract of the truncated kernel.
fn kernel_contract() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    let delta = 0.5;
    let mut failures = 0;
    let mut worst_gradient_ratio: f64 = 0.0;
    for sample in 0..10_000 {
        let (n, alpha) = [(1, 0.5), (1, 1.0), (2, 1.0)][sample % 3];
        let p = KernelParams::new(n, alpha, Some(delta)).unwrap();
        let mut pt = || (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect::<Vec<f64>>();
        let (x, y, z) = (pt(), pt(), pt());
        let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
        let (dy, dz) = (dist(&x, &y), dist(&x, &z));
        let (full, t) = (k_alpha(&x, &y, &z, &p).unwrap(), k_delta(&x, &y, &z, &p).unwrap());
        let max = dy.max(dz);
        let support_ok = (max <= 2.0 * delta || t == full) && (max >= delta || t == 0.0);
        let sandwich_ok = (0.0..=full).contains(&t);
        let grad = fd_gradient_norm(&x, &y, &z, &p, 1e-6).unwrap();
        let ratio = grad * (dy + dz).powf(p.degree() + 1.0) / p.gradient_bound_constant();
        worst_gradient_ratio = worst_gradient_ratio.max(ratio);
        if !(support_ok && sandwich_ok && ratio <= 1.0) {
            failures += 1;
        }
    }
    ensure(
        failures == 0,
        format!("{failures} violations in 10⁴ samples; worst |∇K^δ| / bound = {worst_gradient_ratio:.3}"),
    )
}

// 3. Witness pairs on random symbols and cubes.
fn witness_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let cfg1 = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
    let cfg2 = ExponentConfig::new(2, 1.0, 3.0, 3.0).unwrap();
    let (g1, g2) = (GridSpec::centered(1, 4.0, 128).unwrap(), GridSpec::centered(2, 2.0, 32).unwrap());
    let mut bad = Vec::new();
    let (mut mean, mut pairing, mut gnorm): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for i in 0..200 {
        let (grid, cfg) = if i % 2 == 0 { (&g1, &cfg1) } else { (&g2, &cfg2) };
        let values = (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = SampledFunction::new(grid.clone(), values).unwrap();
        let k = rng.gen_range(2..=grid.m() / 2);
        let corner: Vec<f64> =
            grid.origin().iter().map(|o| o + rng.gen_range(0..=grid.m() - k) as f64 * grid.h()).collect();
        let cube = Cube::from_corner(&corner, k as f64 * grid.h()).unwrap();
        let w = witness_pair(&b, &cube, cfg).unwrap();
        let a = audit_witness(&b, &w, cfg).unwrap();
        mean = mean.max(a.mean_error);
        pairing = pairing.max(a.pairing_error);
        gnorm = gnorm.max(a.g_norm_error / grid.h());
        let ok = a.mean_error <= 1e-12
            && a.support_violations + a.sign_violations + a.amplitude_violations == 0
            && a.pairing_error <= 1e-10
            && a.g_norm_error <= 2.0 * grid.h()
            && a.c0_in_open_unit_interval;
        if !ok {
            bad.push(i);
        }
    }
    ensure(
        bad.is_empty(),
        format!(
            "{} of 200 failed; max |mean| {mean:.1e}, max pairing error {pairing:.1e}, max |‖g‖−1|/h {gnorm:.2}",
            bad.len()
        ),
    )
}

// 4. Decay exponents of the pointwise estimates.
fn decay_exponents() -> Verdict {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut ok = true;
    let cases = [(1usize, 0.5), (1, 1.0), (2, 1.0)];
    for (n, alpha) in cases {
        let (grid, side, lo) = if n == 1 {
            (GridSpec::centered(1, 512.0, 1024).unwrap(), 8.0, 40.0)
        } else {
            (GridSpec::centered(2, 320.0, 640).unwrap(), 4.0, 4.0 * 2f64.sqrt() * 4.0)
        };
        let b = SampledFunction::from_fn(&grid, |x| (0.3 * x[0]).sin()).unwrap();
        let cube = Cube::new(vec![0.0; n], side).unwrap();
        let params = KernelParams::new(n, alpha, None).unwrap();
        let est = estimate_slopes_with(&b, &cube, &params, 3.0, 3.0, &log_radii(lo, 10.0 * lo, 8)).unwrap();
        let d = 2.0 * n as f64 - alpha;
        let pass = (est.s1 + d).abs() <= 0.15 && (est.s3 + d + 1.0).abs() <= 0.15 && est.est2_constant > 0.0;
        ok &= pass;
        lines.push(format!(
            "(n={n}, α={alpha}): s1 {:.3} vs {:.1}, s3 {:.3} vs {:.1}, Est2 c {:.3}",
            est.s1,
            -d,
            est.s3,
            -d - 1.0,
            est.est2_constant
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(ok && secs <= 600.0, format!("{}; {secs:.1} s", lines.join("; ")))
}

struct SeparationRuns {
    growing: SeparationReport,
    shrinking: SeparationReport,
    translating: SeparationReport,
}

fn separation_runs() -> &'static SeparationRuns {
    static RUNS: OnceLock<SeparationRuns> = OnceLock::new();
    RUNS.get_or_init(|| {
        let grid = GridSpec::centered(1, 2048.0, 4096).unwrap();
        let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
        let params = KernelParams::from_config(&cfg, None).unwrap();
        let opts = SeparationOptions::default();
        let run = |b: &SampledFunction, scheme: &CubeScheme| {
            separation_experiment(b, scheme, &cfg, &params, ApplyMode::Direct, &opts).unwrap()
        };
        let s = sine(&grid, 1.0, 0.0, 1.0).unwrap();
        let growing = run(&s, &CubeScheme::growing(vec![0.5], 4.0, 3.0, 4, 0.4).unwrap());
        let translating = run(&s, &CubeScheme::translating(vec![-500.0], 4.0, vec![330.0], 4, 40.0).unwrap());
        let bmp = bump(&grid, &[0.0], 1500.0, 1.0).unwrap();
        let shrinking = run(&bmp, &CubeScheme::shrinking(vec![700.5], 96.0, 1.0 / 3.0, 4, 0.35).unwrap());
        SeparationRuns { growing, shrinking, translating }
    })
}

// 5. Separated images for sin, shrinking distances for a bump.
fn separation_dichotomy() -> Verdict {
    let runs = separation_runs();
    let (lo, hi) = runs.growing.min_max_distance();
    let consecutive = runs.shrinking.consecutive_distances();
    let decreasing = consecutive.windows(2).all(|w| w[1] < w[0]);
    // frozen: min/max ≈ 0.54 and last/first consecutive ≈ 0.125 on these fixtures
    let ratio = lo / hi;
    let decay = consecutive.last().unwrap() / consecutive[0];
    ensure(
        ratio > 0.25 && ratio >= 0.5 && decreasing && decay <= 0.2,
        format!("growing sin min/max {ratio:.3}; shrinking bump consecutive {consecutive:.4?}"),
    )
}

// 6. Weight lemma on power-weight pairs and the A_{p,q} identity.
fn weight_lemma() -> Verdict {
    let grid = GridSpec::centered(1, 1.0, 64).unwrap();
    let family = full_dyadic_family(&grid).unwrap();
    let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
    let mut worst_slack = f64::INFINITY;
    let mut worst_gap: f64 = 0.0;
    let mut ok = true;
    for (a1, a2) in [(0.02, 0.03), (-0.05, 0.02), (0.03, -0.06), (-0.02, -0.04), (0.01, 0.035)] {
        let pair = WeightPair::new(
            power_weight(&grid, &[0.0], a1).unwrap(),
            power_weight(&grid, &[0.0], a2).unwrap(),
            cfg,
        )
        .unwrap();
        let r = lemma1_check(&pair, &family, DEFAULT_HYPOTHESIS_CAP).unwrap();
        let l = &r.lemma1;
        ok &= l.hypothesis_satisfied;
        if let (Some(chain), Some(bound)) = (&l.chain_i, &l.bound_ii) {
            worst_slack = worst_slack.min(chain.min_relative_slack).min(bound.relative_slack);
        } else {
            ok = false;
        }
        worst_gap = worst_gap.max(r.apq_identity_gap);
    }
    let fixtures = [
        power_weight(&grid, &[0.0], 0.5).unwrap(),
        power_weight(&grid, &[0.0], -0.4).unwrap(),
        power_weight(&grid, &[0.3], 0.1).unwrap(),
        SampledFunction::from_fn(&grid, |x| 2.0 + x[0].sin()).unwrap(),
    ];
    for w in &fixtures {
        for (p, q) in [(1.5, 6.0), (2.0, 4.0), (3.0, 3.0)] {
            worst_gap = worst_gap.max(apq_constant(w, p, q, &family).unwrap().identity_gap);
        }
    }
    ensure(
        ok && worst_slack >= -1e-9 && worst_gap <= 1e-10,
        format!("5 pairs, worst slack {worst_slack:.2e}; worst identity gap {worst_gap:.2e}"),
    )
}

// 7. Truncated commutators converge at fixed inputs.
fn truncation() -> Verdict {
    let grid = GridSpec::centered(1, 16.0, 256).unwrap();
    let cfg = ExponentConfig::new(1, 0.5, 3.0, 3.0).unwrap();
    let b = bump(&grid, &[0.5], 4.0, 1.0).unwrap();
    let f = SampledFunction::from_fn(&grid, |x| (-(x[0] - 1.0).powi(2) / 4.0).exp()).unwrap();
    let g = SampledFunction::from_fn(&grid, |x| 1.0 / (1.0 + x[0] * x[0])).unwrap();
    let deltas: Vec<f64> = (0..5).map(|k| 32.0 * grid.h() / 2f64.powi(k)).collect();
    let pts = truncation_convergence(&b, &f, &g, &cfg, &deltas, None, ApplyMode::Fft).unwrap();
    let diffs: Vec<f64> = pts.iter().map(|p| p.difference).collect();
    let ratio = diffs[4] / diffs[0];
    ensure(is_nonincreasing(&pts, 1e-6) && ratio <= 0.1, format!("δ = 32h … 2h: {diffs:.4?}, last/first {ratio:.3}"))
}

// 8. Compactness moduli of truncated commutator images.
fn fkr_moduli_behaviour() -> Verdict {
    let grid = GridSpec::centered(1, 1024.0, 2048).unwrap();
    let cfg = ExponentConfig::new(1, 0.2, 3.0, 3.0).unwrap();
    let op = BilinearOperator::new(&grid, KernelParams::from_config(&cfg, Some(4.0)).unwrap(), ApplyMode::Fft).unwrap();
    let b = bump(&grid, &[0.0], 4.0, 1.0).unwrap();
    let sampling = PairSampling { count: 20, seed: 7, f_radius: 4.0, g_plateau: 940.0, g_taper: 64.0 };
    let outputs: Vec<SampledFunction> = sample_unit_pairs(&grid, 3.0, 3.0, &sampling)
        .unwrap()
        .iter()
        .map(|(f, g)| op.commutator(&b, f, g, Slot::First).unwrap())
        .collect();
    let shifts: Vec<Vec<f64>> = (1..=4).map(|k| vec![k as f64]).collect();
    let r = fkr_moduli(&outputs, cfg.q(), None, &log_radii(8.0, 32.0, 8), &shifts).unwrap();
    let tail = r.tail_fit().unwrap();
    let trans = r.translation_fit().unwrap();
    let c = r.translation.iter().map(|(t, v)| v / t).fold(0.0, f64::max);
    let target = cfg.tail_exponent();
    ensure(
        (tail.slope - target).abs() <= 0.3 && trans.r_squared >= 0.95 && c.is_finite(),
        format!(
            "tail slope {:.3} vs {target:.3}; translation ≤ {c:.3}|t|, linear R² {:.4}",
            tail.slope, trans.r_squared
        ),
    )
}

// 9. Node-set identities of the separation sets.
fn g_set_algebra() -> Verdict {
    let runs = separation_runs();
    let all = [&runs.growing, &runs.shrinking, &runs.translating];
    let pairs: usize = all.iter().map(|r| r.pairs.len()).sum();
    let sets_ok = all.iter().all(|r| r.pairs.iter().all(|p| p.g1_subset_g2 && p.g1_identity));
    let g3 = runs.shrinking.g3_holds == Some(true);
    ensure(sets_ok && g3, format!("{pairs} pairs over 3 schemes; sliver bound on shrinking scheme: {g3}"))
}

// 10. Identical config and seed give byte-identical CLI outputs.
fn cli_determinism() -> Verdict {
    let configs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    let mut differing = Vec::new();
    for e in ["apply", "commutator", "bmo", "cmo", "weights", "lemma1", "fkr", "witness", "separation", "truncation"] {
        let mut outs = Vec::new();
        for run in 0..2 {
            let out = dir.path().join(format!("{e}-{run}"));
            let status = Command::new(env!("CARGO_BIN_EXE_bifrac"))
                .args([e, "--config", configs.join(format!("{e}.toml")).to_str().unwrap()])
                .args(["--out", out.to_str().unwrap()])
                .output()
                .unwrap()
                .status;
            if !status.success() {
                return Err(format!("{e} exited with {status}"));
            }
            outs.push(out);
        }
        let mut names: Vec<_> = std::fs::read_dir(&outs[0])
            .unwrap()
            .map(|d| d.unwrap().file_name().into_string().unwrap())
            .filter(|n| n != "timing.json")
            .collect();
        names.sort();
        for name in names {
            compared += 1;
            if std::fs::read(outs[0].join(&name)).unwrap() != std::fs::read(outs[1].join(&name)).unwrap() {
                differing.push(format!("{e}/{name}"));
            }
        }
    }
    ensure(differing.is_empty(), format!("{compared} files compared across 10 experiments; differing: {differing:?}"))
}

#[test]
fn acceptance_criteria() {
    let criteria: [(&str, fn() -> Verdict); 10] = [
        ("FFT/direct equivalence", fft_matches_direct),
        ("kernel contract", kernel_contract),
        ("witness invariants", witness_invariants),
        ("decay exponents", decay_exponents),
        ("separation vs. decay", separation_dichotomy),
        ("weight lemma", weight_lemma),
        ("truncation convergence", truncation),
        ("FKR moduli", fkr_moduli_behaviour),
        ("G-set algebra", g_set_algebra),
        ("CLI determinism", cli_determinism),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let verdict = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match verdict {
            Ok(detail) => println!("[PASS] {:>2}. {name}: {detail}", i + 1),
            Err(detail) => {
                println!("[FAIL] {:>2}. {name}: {detail}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
