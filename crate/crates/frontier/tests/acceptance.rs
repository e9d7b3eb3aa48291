//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails. Runs without the libtest harness so the
//! lines always appear in the output.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use frontier::config::{load_experiment, Experiment, Overrides};
use frontier::io::read_json;
use frontier::run::{execute, MeanSd};
use frontier_core::algorithms::{run_adc_observed, AdcConfig, Phase};
use frontier_core::metrics::{
    dominated_area_2d, hypervolume_points, sample_histogram, NormalizationSpec,
};
use frontier_core::policy::{PolicyConfig, PolicyParams};
use frontier_core::rewards::{adc_reward, desirability, AdcSpec, DesirabilitySpec};
use frontier_core::schedule::{target_at, zigzag_traversal, TemperatureSchedule};
use frontier_core::space::BenchmarkDef;
use frontier_core::{
    extract_pareto_front, ArchiveEntry, Encoding, ObjectiveSpec, ObjectiveVector, Orientation,
    ParetoArchive, Problem,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

fn repo() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn experiment(config: &str, seeds: &[u64]) -> Experiment {
    let overrides = Overrides {
        seeds: seeds.to_vec(),
        ..Overrides::default()
    };
    load_experiment(&repo().join("configs").join(config), &overrides)
        .expect("shipped config resolves")
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn gradient_correctness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let arities: Vec<usize> = (0..rng.random_range(1..=6))
            .map(|_| rng.random_range(2..=6))
            .collect();
        let t = rng.random_range(1.0..=25.0);
        let logits: Vec<Vec<f64>> = arities
            .iter()
            .map(|&k| {
                (0..k)
                    .map(|_| rng.random_range(-2.0 * t..2.0 * t))
                    .collect()
            })
            .collect();
        let policy = PolicyParams::new(&arities, PolicyConfig::default())
            .unwrap()
            .with_logits(logits.clone())
            .unwrap();
        let e = Encoding::new(arities.iter().map(|&k| rng.random_range(0..k)).collect());
        let g = policy.grad_log_prob(&e, t).unwrap();
        let (mut diff, mut norm) = (0.0f64, 0.0f64);
        for (pos, row) in logits.iter().enumerate() {
            for j in 0..row.len() {
                let at = |dz: f64| {
                    let mut l = logits.clone();
                    l[pos][j] += dz;
                    policy
                        .clone()
                        .with_logits(l)
                        .unwrap()
                        .log_prob(&e, t)
                        .unwrap()
                };
                let fd = (at(h) - at(-h)) / (2.0 * h);
                diff += (g[pos][j] - fd).powi(2);
                norm += g[pos][j].powi(2);
            }
        }
        worst = worst.max(diff.sqrt() / norm.sqrt().max(f64::MIN_POSITIVE));
    }
    check(
        worst <= 1e-6,
        format!("max relative error {worst:.2e} over 100 triples"),
    )
}

fn tiny_problem(rng: &mut ChaCha8Rng, seed: u64) -> Problem {
    let positions = rng.random_range(2..=4);
    let def = BenchmarkDef {
        seed,
        positions,
        arities: (0..positions).map(|_| rng.random_range(2..=4)).collect(),
        correlation_strength: [0.0, 0.05, 0.3][rng.random_range(0..3)],
        ..BenchmarkDef::standard(seed)
    };
    Problem::from_def(&def).unwrap()
}

fn archive_oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut checks = 0usize;
    for run in 0..50u64 {
        let problem = tiny_problem(&mut rng, run);
        let spec = problem.objective_spec();
        let mut cfg = AdcConfig::for_problem(&problem);
        cfg.n_steps = 500;
        let policy = PolicyParams::new(
            problem.space.arities(),
            PolicyConfig {
                learning_rate: 0.05,
                ..PolicyConfig::default()
            },
        )
        .unwrap();
        let mut mismatch = None;
        run_adc_observed(
            &problem,
            policy,
            &cfg,
            &mut ChaCha8Rng::seed_from_u64(run),
            |archive, samples| {
                let entries: Vec<ArchiveEntry> = samples
                    .iter()
                    .map(|s| ArchiveEntry::new(s.encoding.clone(), s.objectives.clone()))
                    .collect();
                let batch = extract_pareto_front(&entries, &spec).unwrap();
                checks += 1;
                if mismatch.is_none() && archive.canonical() != batch.canonical() {
                    mismatch = Some(samples.len());
                }
            },
        )
        .unwrap();
        if let Some(step) = mismatch {
            return Err(format!(
                "run {run}: archive differs from the batch front at step {step}"
            ));
        }
    }
    check(
        checks == 50 * 500,
        format!("{checks} prefixes identical over 50 runs"),
    )
}

fn brute_front(points: &[ArchiveEntry], orientations: &[Orientation]) -> Vec<ArchiveEntry> {
    let dominates = |a: &[f64], b: &[f64]| {
        let mut strict = false;
        for ((&x, &y), o) in a.iter().zip(b).zip(orientations) {
            let (x, y) = if *o == Orientation::Maximize {
                (x, y)
            } else {
                (-x, -y)
            };
            if x < y {
                return false;
            }
            strict |= x > y;
        }
        strict
    };
    let mut keep: Vec<ArchiveEntry> = points
        .iter()
        .filter(|p| {
            !points
                .iter()
                .any(|q| dominates(q.objectives.values(), p.objectives.values()))
        })
        .cloned()
        .collect();
    keep.sort_by(|a, b| a.encoding.cmp(&b.encoding));
    keep
}

fn front_extraction() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut sizes = Vec::new();
    for seed in 0..20 {
        let m = 2 + seed % 2;
        let orientations: Vec<Orientation> = (0..m)
            .map(|_| {
                if rng.random_bool(0.5) {
                    Orientation::Maximize
                } else {
                    Orientation::Minimize
                }
            })
            .collect();
        let spec = ObjectiveSpec::new(
            orientations.clone(),
            (0..m).map(|i| format!("f{i}")).collect(),
            vec![(0.0, 1.0); m],
        )
        .unwrap();
        // every other cloud sits on a coarse lattice so ties are common
        let levels = if seed % 4 < 2 { 12.0 } else { 1e9 };
        let points: Vec<ArchiveEntry> = (0..1000)
            .map(|i| {
                let v: Vec<f64> = (0..m)
                    .map(|_| (rng.random::<f64>() * levels).floor() / levels)
                    .collect();
                ArchiveEntry::new(Encoding::new(vec![i]), ObjectiveVector::new(v).unwrap())
            })
            .collect();
        let got = extract_pareto_front(&points, &spec).unwrap().canonical();
        let want = brute_front(&points, &orientations);
        if got != want {
            return Err(format!(
                "cloud {seed}: {} vs {} survivors",
                got.len(),
                want.len()
            ));
        }
        sizes.push(got.len());
    }
    Ok(format!("20 clouds agree, front sizes {sizes:?}"))
}

fn schedule_exactness() -> Outcome {
    let mut worst: f64 = 0.0;
    for (t_min, t_max, nu) in [(5.0, 10.0, 50u64), (1.0, 25.0, 1200)] {
        let s = TemperatureSchedule::new(t_min, t_max, nu).unwrap();
        for step in [0, nu / 2, nu, nu + 1, 7 * (nu + 1)] {
            let phase = (step % (nu + 1)) as f64;
            let want = t_min
                + 0.5 * (t_max - t_min) * (1.0 + (std::f64::consts::PI * phase / nu as f64).cos());
            worst = worst.max((s.temperature_at(step) - want).abs());
        }
    }
    let hit = target_at(0.1, 2.0, 6000, 6000).unwrap() == 2.0
        && target_at(0.02, 0.31, 11990, 11990).unwrap() == 0.31;
    check(
        worst <= 1e-12 && hit,
        format!("max deviation {worst:.1e}, target reaches tau_max exactly: {hit}"),
    )
}

fn reward_closed_forms() -> Outcome {
    // apex and feet exactly; the midpoint exactly where it is representable
    // (1.525 is not, so that case can only land within an ulp of 0.5)
    let d = DesirabilitySpec::new(1.05, 0.95).unwrap();
    let dyadic = DesirabilitySpec::new(1.0, 0.5).unwrap();
    let shape = desirability(1.05, &d) == 1.0
        && desirability(1.05 + 0.95, &d) == 0.0
        && desirability(1.05 - 0.95, &d) == 0.0
        && (desirability(1.525, &d) - 0.5).abs() <= 1e-15
        && desirability(1.25, &dyadic) == 0.5
        && desirability(0.75, &dyadic) == 0.5;
    let spec = ObjectiveSpec::new(
        vec![Orientation::Maximize, Orientation::Minimize],
        vec!["q".into(), "p".into()],
        vec![(0.0, 1.0), (0.0, 10.0)],
    )
    .unwrap();
    let archive = |pts: &[[f64; 2]]| {
        let entries: Vec<ArchiveEntry> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                ArchiveEntry::new(
                    Encoding::new(vec![i]),
                    ObjectiveVector::new(p.to_vec()).unwrap(),
                )
            })
            .collect();
        ParetoArchive::from_entries(spec.clone(), entries).unwrap()
    };
    // four front points, two of them dominated by the candidate: (4 + 2) / 10
    let a = archive(&[[0.9, 9.0], [0.8, 8.0], [0.5, 5.0], [0.4, 4.0]]);
    let plus = adc_reward(
        &ObjectiveVector::new(vec![0.85, 5.0]).unwrap(),
        &a,
        &AdcSpec::new(vec![0.0, 0.0], 10.0).unwrap(),
    )
    .unwrap();
    // three dominators plus one front point in the box: -(3 + 1) / 10
    let a = archive(&[[0.9, 1.0], [0.8, 0.9], [0.7, 0.8], [0.1, 0.1]]);
    let minus = adc_reward(
        &ObjectiveVector::new(vec![0.65, 1.02]).unwrap(),
        &a,
        &AdcSpec::new(vec![0.3, 0.05], 10.0).unwrap(),
    )
    .unwrap();
    check(
        shape && (plus - 0.537050).abs() <= 1e-6 && (minus + 0.379949).abs() <= 1e-6,
        format!("triangle exact: {shape}; credits {plus:.6} and {minus:.6}"),
    )
}

fn metric_exactness() -> Outcome {
    let spec = ObjectiveSpec::new(
        vec![Orientation::Maximize, Orientation::Minimize],
        vec!["q".into(), "p".into()],
        vec![(0.0, 1.0), (0.0, 1.0)],
    )
    .unwrap();
    let norm = NormalizationSpec::from_spec(&spec);
    // (quality, cost) in native units; cost is minimized
    let area = |pts: &[[f64; 2]]| {
        let entries: Vec<ArchiveEntry> = pts
            .iter()
            .enumerate()
            .map(|(i, p)| {
                ArchiveEntry::new(
                    Encoding::new(vec![i]),
                    ObjectiveVector::new(p.to_vec()).unwrap(),
                )
            })
            .collect();
        dominated_area_2d(&extract_pareto_front(&entries, &spec).unwrap(), &norm).unwrap()
    };
    let rects = [
        area(&[[1.0, 0.0]]),
        area(&[[0.5, 0.5]]),
        area(&[[0.4, 0.2], [0.9, 0.6]]),
    ];
    let exact = rects == [1.0, 0.25, 0.52];

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let n = 1_000_000usize;
    let mut worst_z: f64 = 0.0;
    for _ in 0..10 {
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random::<f64>()).collect())
            .collect();
        let hv = hypervolume_points(&pts, &[0.0; 3]).unwrap();
        let hits = (0..n)
            .filter(|_| {
                let x: [f64; 3] = [rng.random(), rng.random(), rng.random()];
                pts.iter()
                    .any(|p| x[0] <= p[0] && x[1] <= p[1] && x[2] <= p[2])
            })
            .count();
        let sigma = (hv * (1.0 - hv) / n as f64).sqrt();
        worst_z = worst_z.max((hits as f64 / n as f64 - hv).abs() / sigma);
    }
    check(
        exact && worst_z <= 3.0,
        format!("rectangles {rects:?}; worst Monte-Carlo deviation {worst_z:.2} sigma"),
    )
}

fn mean_area(exp: &Experiment, norm: &NormalizationSpec) -> (MeanSd, Vec<f64>) {
    let areas: Vec<f64> = exp
        .seeds
        .iter()
        .map(|&s| dominated_area_2d(&execute(exp, s).unwrap().0.final_front, norm).unwrap())
        .collect();
    (MeanSd::of(&areas).unwrap(), areas)
}

fn ordering_against_random() -> Outcome {
    let fixture =
        Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/oracle_front_seed0.json");
    let oracle: ParetoArchive = read_json(&fixture).unwrap();
    let norm = NormalizationSpec::from_spec(oracle.spec());
    let oracle_area = dominated_area_2d(&oracle, &norm).unwrap();
    let seeds = [0, 1, 2, 3, 4];
    let (adf, adf_all) = mean_area(&experiment("adf.toml", &seeds), &norm);
    let (adc, adc_all) = mean_area(&experiment("adc.toml", &seeds), &norm);
    let (rs, rs_all) = mean_area(&experiment("rs.toml", &seeds), &norm);
    let optimal = adf_all
        .iter()
        .chain(&adc_all)
        .chain(&rs_all)
        .all(|&a| a <= oracle_area);
    check(
        adf.mean >= rs.mean
            && adc.mean >= rs.mean
            && adf.mean >= 0.9 * oracle_area
            && adc.mean >= 0.9 * oracle_area
            && optimal,
        format!(
            "oracle {oracle_area:.4}; ADF {:.4} ({:.3}x), ADC {:.4} ({:.3}x), RS {:.4} ({:.3}x)",
            adf.mean,
            adf.mean / oracle_area,
            adc.mean,
            adc.mean / oracle_area,
            rs.mean,
            rs.mean / oracle_area
        ),
    )
}

fn spread_repetitions(cosine: &str, fixed: &str, norm: &NormalizationSpec) -> (usize, Vec<String>) {
    let mut passes = 0;
    let mut detail = Vec::new();
    for start in [0u64, 5, 10] {
        let seeds: Vec<u64> = (start..start + 5).collect();
        let (c, _) = mean_area(&experiment(cosine, &seeds), norm);
        let (f, _) = mean_area(&experiment(fixed, &seeds), norm);
        if c.sd <= f.sd {
            passes += 1;
        }
        detail.push(format!(
            "seeds {start}-{}: SD {:.5} vs {:.5}",
            start + 4,
            c.sd,
            f.sd
        ));
    }
    (passes, detail)
}

fn temperature_variance() -> Outcome {
    let norm = NormalizationSpec::from_spec(&experiment("adc.toml", &[0]).problem.objective_spec());
    let (passes, detail) = spread_repetitions("adc_adam.toml", "adc_adam_fixed_t5.toml", &norm);
    let (plain, _) = spread_repetitions("adc.toml", "adc_fixed_t5.toml", &norm);
    check(
        passes >= 2,
        format!(
            "adc_adam.toml: {passes}/3 repetitions hold ({}); plain-ascent defaults: {plain}/3",
            detail.join("; ")
        ),
    )
}

fn min_decile_fraction(exp: &Experiment) -> (f64, Vec<usize>) {
    let norm = NormalizationSpec::from_spec(&exp.problem.objective_spec());
    let mut worst = (1.0, Vec::new());
    for &s in &exp.seeds {
        let record = execute(exp, s).unwrap().0;
        assert!(record.samples.iter().all(|x| x.phase == Phase::Search));
        let counts = sample_histogram(&record, 1, 10, &norm).unwrap();
        let frac = *counts.iter().min().unwrap() as f64 / record.samples.len() as f64;
        if frac < worst.0 {
            worst = (frac, counts);
        }
    }
    worst
}

fn sampling_uniformity() -> Outcome {
    let seeds = [0, 1, 2, 3, 4];
    let (tuned, counts) = min_decile_fraction(&experiment("adf_uniform.toml", &seeds));
    let (plain, _) = min_decile_fraction(&experiment("adf.toml", &seeds));
    check(
        tuned >= 0.02,
        format!(
            "adf_uniform.toml: smallest decile {:.2}% (worst seed {counts:?}); plain-ascent defaults reach {:.2}%",
            100.0 * tuned,
            100.0 * plain
        ),
    )
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let mut compared = 0;
    for config in ["adf.toml", "adc.toml", "rs.toml", "mdf.toml"] {
        let mut outs = Vec::new();
        for (i, workers) in ["1", "4"].iter().enumerate() {
            let out = dir.path().join(format!("{i}"));
            let status = Command::new(env!("CARGO_BIN_EXE_frontier"))
                .args(["run", "--config"])
                .arg(repo().join("configs").join(config))
                .args(["--seed", "0", "--seed", "1", "--out"])
                .arg(&out)
                .env("FRONTIER_WORKERS", workers)
                .output()
                .unwrap();
            if !status.status.success() {
                return Err(format!(
                    "{config}: {}",
                    String::from_utf8_lossy(&status.stderr)
                ));
            }
            outs.push(out);
        }
        let tag = experiment(config, &[0]).algorithm().tag();
        for seed in ["0", "1"] {
            for f in ["samples.csv", "front.json", "metrics.json"] {
                let a = std::fs::read(outs[0].join(tag).join(seed).join(f)).unwrap();
                let b = std::fs::read(outs[1].join(tag).join(seed).join(f)).unwrap();
                if a != b {
                    return Err(format!("{tag}/{seed}/{f} differs between invocations"));
                }
                compared += 1;
            }
        }
    }
    Ok(format!(
        "{compared} files byte-identical across two invocations"
    ))
}

fn zigzag_locality() -> Outcome {
    for r in 1..=20 {
        for c in 1..=20 {
            let t = zigzag_traversal(r, c);
            let mut seen = vec![false; r * c];
            for &(i, j) in &t {
                if i >= r || j >= c || std::mem::replace(&mut seen[i * c + j], true) {
                    return Err(format!("{r}x{c}: not a permutation"));
                }
            }
            if t.len() != r * c
                || t.windows(2)
                    .any(|w| w[0].0.abs_diff(w[1].0) > 1 || w[0].1.abs_diff(w[1].1) > 1)
            {
                return Err(format!("{r}x{c}: locality violated"));
            }
        }
    }
    let n = zigzag_traversal(110, 109).len();
    check(
        n == 11990,
        format!("all grids up to 20x20 local permutations; 110x109 has {n} points"),
    )
}

fn main() -> ExitCode {
    let criteria: [(&str, fn() -> Outcome, Duration); 11] = [
        (
            "gradient matches central differences",
            gradient_correctness,
            Duration::from_secs(5),
        ),
        (
            "live archive equals batch front at every step",
            archive_oracle_equivalence,
            Duration::from_secs(30),
        ),
        (
            "front extraction equals all-pairs filter",
            front_extraction,
            Duration::from_secs(5),
        ),
        (
            "schedules exact",
            schedule_exactness,
            Duration::from_secs(5),
        ),
        (
            "reward closed forms",
            reward_closed_forms,
            Duration::from_secs(5),
        ),
        (
            "dominated area and hypervolume exact",
            metric_exactness,
            Duration::from_secs(60),
        ),
        (
            "ADF and ADC beat random search and near the oracle",
            ordering_against_random,
            Duration::from_secs(180),
        ),
        (
            "warm restarts reduce spread against fixed T=5",
            temperature_variance,
            Duration::from_secs(360),
        ),
        (
            "ADF samples every cost decile",
            sampling_uniformity,
            Duration::from_secs(180),
        ),
        (
            "identical config and seed give identical files",
            determinism,
            Duration::from_secs(180),
        ),
        (
            "zig-zag traversal is local",
            zigzag_locality,
            Duration::from_secs(5),
        ),
    ];
    let mut failed = 0;
    for (i, (name, f, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = f();
        let took = start.elapsed();
        let (ok, detail) = match outcome {
            Ok(d) if took <= *limit => (true, d),
            Ok(d) => (
                false,
                format!("{d}; exceeded the {}s budget", limit.as_secs()),
            ),
            Err(d) => (false, d),
        };
        failed += usize::from(!ok);
        println!(
            "{} criterion {:>2} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            i + 1,
            took.as_secs_f64()
        );
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
