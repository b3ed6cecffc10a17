//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::process::{Command, ExitCode};
use std::time::Instant;

use acnf::evaluators::oracle::{bundled_dataset, bundled_space, OracleDataset};
use acnf::evaluators::synthetic::{Coordinate, PlantedPair};
use acnf::results::pareto_indices;
use acnf::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TARGET: [&str; 3] = ["LRASPP-MobileNetV3-Small", "Apache TVM", "none"];
const CONVERGENCE_THRESHOLD: usize = 3;
const CONVERGENCE_ORIGINAL: usize = 16;
const EXCLUSION_THRESHOLD: usize = 18;

type Criterion = (&'static str, fn() -> Verdict);

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Verdict {
    Verdict { pass, detail: detail.into() }
}

fn transcription() -> Verdict {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_acnf")).arg("validate").output().expect("acnf runs");
    let text = String::from_utf8_lossy(&out.stdout).trim_end().to_string();
    let counts = out.status.success() && text.ends_with("; 12 ok rows @513, 4 @284");

    let space = bundled_space();
    let mut oracle = TableOracle::bundled(513);
    let mut spot = |labels: [&str; 3]| {
        let e = oracle.evaluate(&space, &space.combination_of(&labels).unwrap()).unwrap();
        (e.time_s(), e.accuracy())
    };
    let small = spot(TARGET);
    let alds = spot(["LRASPP-MobileNetV3-Large", "Apache TVM", "alds-45"]);
    let spots = small == (Some(0.39), Some(0.61)) && alds == (Some(0.6), Some(0.5639));
    let elapsed = start.elapsed();
    verdict(
        counts && spots && elapsed.as_secs_f64() < 1.0,
        format!(
            "validate: \"{text}\"; spot values {small:?} {alds:?}; {:.0} ms",
            elapsed.as_secs_f64() * 1e3
        ),
    )
}

fn convergence() -> Verdict {
    let space = bundled_space();
    let target = space.encode(&space.combination_of(&TARGET).unwrap()).unwrap();
    let hits = (0..20u64)
        .filter(|&seed| {
            let config = SearchConfig { k: 60, seed, ..SearchConfig::default() };
            let out: SearchOutcome = run_search(&space, &mut TableOracle::bundled(513), &config).unwrap();
            out.state.argmax() == Some(target)
        })
        .count();
    verdict(
        hits >= CONVERGENCE_THRESHOLD,
        format!(
            "{hits}/20 runs end with argmax at ({}); re-derived threshold >= {CONVERGENCE_THRESHOLD}/20; \
             original {CONVERGENCE_ORIGINAL}/20 {}",
            TARGET.join(", "),
            if hits >= CONVERGENCE_ORIGINAL { "met" } else { "not met" }
        ),
    )
}

fn bad_pair_exclusion() -> Verdict {
    let space = SearchSpace::from_sizes(&[4, 3, 5]).unwrap();
    let spec = LandscapeSpec::new(space.clone(), 1.0).with_noise(1.0).with_pair(PlantedPair::failing(
        Coordinate::new("d0", "0"),
        Coordinate::new("d1", "0"),
        1.0,
    ));
    let carriers: Vec<u64> = space
        .combinations()
        .filter(|c| c.indices()[0] == 0 && c.indices()[1] == 0)
        .map(|c| space.encode(&c).unwrap())
        .collect();
    let hits = (0..20u64)
        .filter(|&seed| {
            let config = SearchConfig { k: 30, seed, ..SearchConfig::default() };
            let mut land = SyntheticLandscape::new(spec.clone(), seed).unwrap();
            let out: SearchOutcome = run_search(&space, &mut land, &config).unwrap();
            carriers.iter().all(|&f| out.state.is_excluded(f) && out.state.masses()[f as usize] == 0.0)
        })
        .count();
    verdict(
        hits >= EXCLUSION_THRESHOLD,
        format!(
            "{hits}/20 seeds exclude all {} carriers of the failing pair within 30 iterations (need >= {EXCLUSION_THRESHOLD}/20)",
            carriers.len()
        ),
    )
}

/// Independent reference for one PairChecker step on plain vectors.
fn reference_update(
    sizes: &[usize],
    u: &[f64],
    excluded: &[bool],
    history: &[f64],
    sampled: &[usize],
    m: f64,
    config: &SearchConfig,
) -> (Vec<f64>, Vec<bool>) {
    let mut hist = history.to_vec();
    hist.push(m);
    hist.sort_by(f64::total_cmp);
    let alpha = match config.alpha_mode {
        AlphaMode::Fixed(a) => a,
        AlphaMode::RunningMedian if hist.len() == 1 => return (u.to_vec(), excluded.to_vec()),
        AlphaMode::RunningMedian => {
            let n = hist.len();
            if n % 2 == 1 {
                hist[n / 2]
            } else {
                (hist[n / 2 - 1] + hist[n / 2]) / 2.0
            }
        }
    };
    let raw = if alpha > 0.0 {
        m / alpha
    } else if m > 0.0 {
        config.gamma_max
    } else {
        1.0
    };
    let gamma = raw.max(config.gamma_min).min(config.gamma_max);
    if gamma == 1.0 {
        return (u.to_vec(), excluded.to_vec());
    }
    let total: usize = sizes.iter().product();
    let mut u = u.to_vec();
    let mut excluded = excluded.to_vec();
    for flat in 0..total {
        if excluded[flat] {
            continue;
        }
        let mut combo = vec![0; sizes.len()];
        let mut rest = flat;
        for d in (0..sizes.len()).rev() {
            combo[d] = rest % sizes[d];
            rest /= sizes[d];
        }
        let mut shared = 0;
        for i in 0..sizes.len() {
            for j in i + 1..sizes.len() {
                if combo[i] == sampled[i] && combo[j] == sampled[j] {
                    shared += 1;
                }
            }
        }
        if shared == 0 {
            continue;
        }
        let factor = match config.update_policy {
            UpdatePolicy::Once => gamma,
            UpdatePolicy::PerPair => gamma.powi(shared),
        };
        u[flat] *= factor;
    }
    if config.exclusion_floor > 0.0 {
        let threshold = config.exclusion_floor / total as f64;
        let active: Vec<usize> = (0..total).filter(|&i| !excluded[i]).collect();
        let below: Vec<usize> = active.iter().copied().filter(|&i| u[i] < threshold).collect();
        let keep = if below.len() == active.len() {
            let mut best = below[0];
            for &i in &below {
                if u[i] > u[best] {
                    best = i;
                }
            }
            Some(best)
        } else {
            None
        };
        for i in below {
            if Some(i) != keep {
                u[i] = 0.0;
                excluded[i] = true;
            }
        }
    }
    let sum: f64 = (0..total).filter(|&i| !excluded[i]).map(|i| u[i]).sum();
    for i in 0..total {
        if !excluded[i] {
            u[i] /= sum;
        }
    }
    (u, excluded)
}

fn random_config(rng: &mut ChaCha8Rng, policy: UpdatePolicy) -> SearchConfig {
    SearchConfig {
        alpha_mode: if rng.gen_bool(0.5) {
            AlphaMode::Fixed(rng.gen_range(0.05..5.0))
        } else {
            AlphaMode::RunningMedian
        },
        update_policy: policy,
        gamma_min: rng.gen_range(0.01..1.0),
        gamma_max: rng.gen_range(1.0..20.0),
        failure_factor: rng.gen_range(0.05..0.95),
        exclusion_floor: if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(0.0..0.9) },
        seed: rng.gen(),
        ..SearchConfig::default()
    }
}

fn update_oracle_equivalence() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    let mut mismatches = 0;
    let mut per_policy = [0, 0];
    let mut case = 0;
    while per_policy[0] + per_policy[1] < 1000 {
        case += 1;
        let policy = if case % 2 == 0 { UpdatePolicy::Once } else { UpdatePolicy::PerPair };
        let sizes: Vec<usize> = (0..3).map(|_| rng.gen_range(1..=5)).collect();
        let space = SearchSpace::from_sizes(&sizes).unwrap();
        let config = random_config(&mut rng, policy);
        let n = space.total() as usize;
        let masses: Vec<f64> =
            (0..n).map(|_| if rng.gen_bool(0.15) { 0.0 } else { rng.gen_range(0.01..1.0) }).collect();
        let Ok(mut state) = SamplingState64::from_masses(masses, 0) else { continue };
        per_policy[case % 2] += 1;
        let warmup = SearchConfig { exclusion_floor: 0.0, ..config.clone() };
        for _ in 0..rng.gen_range(0..5) {
            let c: Vec<usize> = sizes.iter().map(|&s| rng.gen_range(0..s)).collect();
            state.pair_checker(&space, &Combination(c), rng.gen_range(0.0..3.0), &warmup).unwrap();
        }
        let before_u = state.masses().to_vec();
        let before_x = state.excluded_flags().to_vec();
        let history = state.alpha().observed().to_vec();
        let sampled: Vec<usize> = sizes.iter().map(|&s| rng.gen_range(0..s)).collect();
        let m = if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(0.0..4.0) };
        state.pair_checker(&space, &Combination(sampled.clone()), m, &config).unwrap();
        let (u, x) = reference_update(&sizes, &before_u, &before_x, &history, &sampled, m, &config);
        if x != state.excluded_flags() {
            mismatches += 1;
            continue;
        }
        for (a, b) in u.iter().zip(state.masses()) {
            worst = worst.max((a - b).abs());
        }
    }
    verdict(
        mismatches == 0 && worst <= 1e-12,
        format!(
            "1000 cases ({} once, {} per_pair); max |diff| {worst:.2e}; {mismatches} exclusion mismatches",
            per_policy[0], per_policy[1]
        ),
    )
}

fn fuzz_invariants() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut violations = Vec::new();
    let mut ops = 0u64;
    for seq in 0..10_000 {
        let dims = rng.gen_range(2..=4);
        let sizes: Vec<usize> = (0..dims).map(|_| rng.gen_range(1..=4)).collect();
        let space = SearchSpace::from_sizes(&sizes).unwrap();
        let policy = if rng.gen_bool(0.5) { UpdatePolicy::Once } else { UpdatePolicy::PerPair };
        let config = random_config(&mut rng, policy);
        let mut state: SamplingState64 = init_state(&space, &config).unwrap();
        let mut seen_excluded = vec![false; space.total() as usize];
        for _ in 0..rng.gen_range(1..=30) {
            ops += 1;
            let c = match rng.gen_range(0..3) {
                0 => state.sample(&space).unwrap(),
                _ => Combination(sizes.iter().map(|&s| rng.gen_range(0..s)).collect()),
            };
            if rng.gen_bool(0.3) {
                state.record_failure(&space, &c, &config).unwrap();
            } else {
                let m = rng.gen_range(0.0..5.0);
                state.pair_checker(&space, &c, m, &config).unwrap();
            }
            if let Err(e) = state.check_invariants(1e-9) {
                violations.push(format!("sequence {seq}: {e}"));
            }
            for (i, seen) in seen_excluded.iter_mut().enumerate() {
                if *seen && !state.is_excluded(i as u64) {
                    violations.push(format!("sequence {seq}: entry {i} revived"));
                }
                *seen = state.is_excluded(i as u64);
            }
        }
    }
    verdict(
        violations.is_empty(),
        match violations.first() {
            None => format!("10000 sequences, {ops} operations, no violation"),
            Some(v) => format!("{} violations, first: {v}", violations.len()),
        },
    )
}

fn brute_pareto(points: &[(f64, f64)]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| {
            let (ti, ai) = points[i];
            !points.iter().any(|&(tj, aj)| tj <= ti && aj >= ai && (tj < ti || aj > ai))
        })
        .collect()
}

fn pareto_correctness() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let space = SearchSpace::from_sizes(&[10, 10, 10]).unwrap();
    let mut failures = 0;
    for _ in 0..500 {
        let mut table = ResultsTable::new(&space, None);
        for _ in 0..rng.gen_range(0..200) {
            let flat = rng.gen_range(0..space.total());
            let combo = space.decode(flat).unwrap();
            let e = if rng.gen_bool(0.2) {
                Evaluation::failure(Status::Incompatible)
            } else {
                let t = rng.gen_range(1..30) as f64 * 0.1;
                let a = rng.gen_range(0..20) as f64 * 0.05;
                Evaluation::ok(a, t).unwrap()
            };
            if table.get(flat).is_none() {
                table.record(&space, &combo, &e, 0).unwrap();
            }
        }
        let ok: Vec<&ResultRecord> = table.ok_records().collect();
        let points: Vec<(f64, f64)> = ok.iter().map(|r| (r.time_s.unwrap(), r.accuracy.unwrap())).collect();
        let mut expected: Vec<u64> = brute_pareto(&points).into_iter().map(|i| ok[i].flat_index).collect();
        let mut got: Vec<u64> = pareto_front(&table).iter().map(|r| r.flat_index).collect();
        let mut via_points: Vec<u64> =
            pareto_indices(&points).into_iter().map(|i| ok[i].flat_index).collect();
        expected.sort_unstable();
        got.sort_unstable();
        via_points.sort_unstable();
        if got != expected || via_points != expected {
            failures += 1;
        }
    }

    let bundled = bundled_space();
    let dataset: OracleDataset = bundled_dataset();
    let mut tvm = ResultsTable::new(&bundled, Some(513));
    for row in dataset.rows.iter().filter(|r| r.input_size == 513 && r.labels[1] == "Apache TVM") {
        let combo = bundled.combination_of(&row.labels).unwrap();
        tvm.record(&bundled, &combo, &row.evaluation, 0).unwrap();
    }
    let front: Vec<(f64, f64)> =
        pareto_front(&tvm).iter().map(|r| (r.time_s.unwrap(), r.accuracy.unwrap())).collect();
    let tvm_ok = front == [(0.39, 0.61), (1.02, 0.65)];
    verdict(
        failures == 0 && tvm_ok,
        format!("{failures}/500 random tables differ from brute force; TVM@513 front {front:?}"),
    )
}

fn determinism_and_resume() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut problems = Vec::new();
    for case in 0..10 {
        let policy = if rng.gen_bool(0.5) { UpdatePolicy::Once } else { UpdatePolicy::PerPair };
        let mut config = random_config(&mut rng, policy);
        config.k = rng.gen_range(2..120);
        config.cache_evaluations = rng.gen_bool(0.7);
        let split = rng.gen_range(1..config.k);
        let synthetic = case % 2 == 1;
        let (space, source) = if synthetic {
            let sizes: Vec<usize> = (0..3).map(|_| rng.gen_range(2..=5)).collect();
            let space = SearchSpace::from_sizes(&sizes).unwrap();
            let spec = LandscapeSpec::new(space.clone(), 1.0)
                .with_noise(1.0)
                .with_pair(PlantedPair::failing(Coordinate::new("d0", "0"), Coordinate::new("d1", "1"), 0.7));
            (space, EvaluatorSource::Synthetic { spec, seed: case })
        } else {
            (bundled_space(), EvaluatorSource::Oracle { path: None })
        };
        let evaluator = |source: &EvaluatorSource| -> Box<dyn Evaluator> {
            match source {
                EvaluatorSource::Synthetic { spec, seed } => {
                    Box::new(SyntheticLandscape::new(spec.clone(), *seed).unwrap())
                }
                _ => Box::new(TableOracle::bundled(513)),
            }
        };
        let artifacts = |search: &Search| {
            (
                RunState::capture(search, Some(source.clone())).to_json(),
                emit_report(search.table(), search.state(), ReportFormat::Csv),
                emit_report(search.table(), search.state(), ReportFormat::Markdown),
            )
        };
        let whole = |source: &EvaluatorSource| {
            let mut s: Search = Search::new(space.clone(), config.clone(), Some(513)).unwrap();
            s.run(evaluator(source).as_mut()).unwrap();
            s
        };
        let a = artifacts(&whole(&source));
        let b = artifacts(&whole(&source));
        let mut first: Search = Search::new(space.clone(), config.clone(), Some(513)).unwrap();
        first.run_for(evaluator(&source).as_mut(), split).unwrap();
        let saved = RunState::capture(&first, Some(source.clone())).to_json();
        let mut resumed = RunState::from_json(&saved).unwrap().into_search();
        resumed.run(evaluator(&source).as_mut()).unwrap();
        let c = artifacts(&resumed);
        if a != b {
            problems.push(format!("config {case}: repeated run differs"));
        }
        if a != c {
            problems.push(format!("config {case}: split at {split}/{} differs", config.k));
        }
    }
    verdict(
        problems.is_empty(),
        match problems.first() {
            None => "10 configs: repeated and save/load-split runs byte-identical (run state, CSV, markdown)"
                .into(),
            Some(p) => p.clone(),
        },
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("Benchmark table transcription", transcription),
        ("Convergence on the benchmark landscape", convergence),
        ("Bad-pair exclusion", bad_pair_exclusion),
        ("Update-rule oracle equivalence", update_oracle_equivalence),
        ("Distribution invariants under fuzzing", fuzz_invariants),
        ("Pareto correctness", pareto_correctness),
        ("Determinism & resume", determinism_and_resume),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let v = check();
        if !v.pass {
            failed += 1;
        }
        println!(
            "{} {}. {name}: {} ({:.2} s)",
            if v.pass { "PASS" } else { "FAIL" },
            i + 1,
            v.detail,
            start.elapsed().as_secs_f64()
        );
    }
    println!("{}/{} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
