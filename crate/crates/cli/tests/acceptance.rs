//! Acceptance suite. Each criterion runs under its time budget and prints one
//! PASS/FAIL line; the process exits non-zero if any criterion fails.

use std::collections::HashSet;
use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tarsim_core::features::{build_index, build_vocabulary, vectorize_corpus, SparseVector};
use tarsim_core::metrics::{
    display_pct, find_cutoff, pct_requiring_review, remaining_positives_needed,
    training_set_recall, RecallTarget, ReviewStats,
};
use tarsim_core::model::{sigmoid, train, LinearModel, Objective, Solver, TrainConfig};
use tarsim_core::scorer::{score_all, ScoreTable};
use tarsim_core::selection::{select_random, select_top_ranked, select_uncertain};
use tarsim_core::sim::{run_matrix, RunResult, RunSummary, SimulationConfig};
use tarsim_core::synth::{generate, SynthConfig};
use tarsim_core::{LabeledCorpus, StrategyKind};

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Suite {
    failures: usize,
}

impl Suite {
    /// Runs one criterion; `extra` is time already spent on shared work.
    fn criterion(
        &mut self,
        id: u32,
        name: &str,
        budget: Duration,
        extra: Duration,
        f: impl FnOnce() -> Check,
    ) {
        let start = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let elapsed = start.elapsed() + extra;
        let (pass, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over time budget")),
            Err(e) => (false, e),
        };
        if !pass {
            self.failures += 1;
        }
        println!(
            "{} [{id}] {name} ({:.3?} / budget {:?}): {detail}",
            if pass { "PASS" } else { "FAIL" },
            elapsed,
            budget
        );
    }
}

fn worked_example() -> Check {
    let target = RecallTarget::new(0.75).map_err(|e| e.to_string())?;
    let training_size = 10 * 1_000;
    let needed = remaining_positives_needed(target, 50_000, 7_000);
    ensure(needed == 30_500, || format!("needed {needed}"))?;
    let pct = pct_requiring_review(60_000, training_size, 300_000);
    ensure(pct == 70_000.0 * 100.0 / 300_000.0, || format!("pct {pct}"))?;
    ensure(display_pct(pct) == "23.3", || {
        format!("display {}", display_pct(pct))
    })?;
    ensure(training_set_recall(7_000, 50_000) == 14.0, || {
        "training recall".into()
    })?;
    Ok(format!("pct {pct}, needed {needed}"))
}

fn scorer_oracle() -> Check {
    let mut worst = 0.0f64;
    for seed in 0..10 {
        let corpus = generate(&SynthConfig {
            total: 1_000,
            richness: 0.2,
            vocabulary_size: 800,
            separation: 0.2,
            mean_length: 40,
            seed,
        })
        .map_err(|e| e.to_string())?;
        let vocab = build_vocabulary(&corpus, 20_000).map_err(|e| e.to_string())?;
        let vectors = vectorize_corpus(&corpus, &vocab);
        let index = build_index(&vectors, vocab.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let weights: Vec<f64> = (0..vocab.len()).map(|_| rng.gen_range(-6.0..6.0)).collect();
        let model = LinearModel::new(weights.clone(), rng.gen_range(-2.0..2.0))
            .map_err(|e| e.to_string())?;
        let targets: Vec<usize> = (0..corpus.total()).collect();
        let table = score_all(&model, &index, &targets, 0).map_err(|e| e.to_string())?;
        ensure(table.len() == corpus.total(), || "missing scores".into())?;
        for &(d, s) in &table.entries {
            let margin = model.bias() + vectors[d].iter().map(|(i, x)| weights[i] * x).sum::<f64>();
            let naive = 1.0 / (1.0 + (-margin).exp());
            worst = worst.max((s - naive).abs());
        }
    }
    ensure(worst <= 1e-9, || format!("max deviation {worst:e}"))?;
    Ok(format!("max deviation {worst:.1e} over 10 seeds"))
}

fn random_vector(rng: &mut ChaCha8Rng, dim: usize) -> SparseVector {
    let mut idx: Vec<usize> = (0..rng.gen_range(1..=6))
        .map(|_| rng.gen_range(0..dim))
        .collect();
    idx.sort_unstable();
    idx.dedup();
    let w: Vec<f64> = idx.iter().map(|_| rng.gen_range(0.1..1.0)).collect();
    SparseVector::new(idx, w).unwrap()
}

fn gradient_oracle() -> Check {
    let dim = 15;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs: Vec<SparseVector> = (0..50).map(|_| random_vector(&mut rng, dim)).collect();
    let mut ys: Vec<bool> = (0..50).map(|_| rng.gen_bool(0.4)).collect();
    ys[0] = true;
    ys[1] = false;
    let refs: Vec<&SparseVector> = xs.iter().collect();
    let objective = Objective::new(&refs, &ys, dim, 1e-2).map_err(|e| e.to_string())?;

    // Independent loss: mean log-loss plus (λ/2)·‖w‖², bias unpenalized.
    let loss = |p: &[f64]| {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(&ys) {
            let z = p[dim] + x.iter().map(|(i, v)| p[i] * v).sum::<f64>();
            let q = sigmoid(z);
            total -= if y { q.ln() } else { (1.0 - q).ln() };
        }
        total / xs.len() as f64 + 0.5 * 1e-2 * p[..dim].iter().map(|w| w * w).sum::<f64>()
    };
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let p: Vec<f64> = (0..=dim).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let mut g = vec![0.0; p.len()];
        let value = objective.value_and_gradient(&p, &mut g);
        ensure((value - loss(&p)).abs() <= 1e-10, || {
            format!("loss {value} vs {}", loss(&p))
        })?;
        let h = 1e-5;
        let mut q = p.clone();
        let mut diff = 0.0;
        let mut scale = 0.0f64;
        for i in 0..p.len() {
            q[i] = p[i] + h;
            let up = loss(&q);
            q[i] = p[i] - h;
            let down = loss(&q);
            q[i] = p[i];
            let numeric = (up - down) / (2.0 * h);
            diff += (numeric - g[i]).powi(2);
            scale = scale.max(numeric.abs()).max(g[i].abs());
        }
        worst = worst.max(diff.sqrt() / scale.max(1e-12));
    }
    ensure(worst <= 1e-5, || format!("relative error {worst:e}"))?;

    for solver in [Solver::Lbfgs, Solver::GradientDescent] {
        let config = TrainConfig {
            solver,
            tolerance: 0.0,
            max_epochs: 300,
            ..TrainConfig::default()
        };
        let (_, report) = train(&refs, &ys, dim, &config, None).map_err(|e| e.to_string())?;
        for w in report.loss_history.windows(2) {
            ensure(w[1] <= w[0], || {
                format!("{solver:?} loss rose {} -> {}", w[0], w[1])
            })?;
        }
    }
    Ok(format!(
        "max relative error {worst:.1e}; loss monotone for both solvers"
    ))
}

fn cutoff_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut checked = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=500);
        let pool: Vec<(usize, f64, bool)> = (0..n)
            .map(|i| {
                (
                    i,
                    f64::from(rng.gen_range(0..60u32)) / 59.0,
                    rng.gen_bool(0.3),
                )
            })
            .collect();
        let positives = pool.iter().filter(|r| r.2).count();
        if positives == 0 {
            continue;
        }
        let needed = rng.gen_range(1..=positives);
        let got = find_cutoff(&pool, needed).map_err(|e| e.to_string())?;
        let mut thresholds: Vec<f64> = pool.iter().map(|r| r.1).collect();
        thresholds.sort_by(|a, b| b.total_cmp(a));
        thresholds.dedup();
        let feasible: Vec<f64> = thresholds
            .into_iter()
            .filter(|&c| pool.iter().filter(|r| r.1 >= c && r.2).count() >= needed)
            .collect();
        let best = feasible.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        ensure(got.score == Some(best), || {
            format!("cutoff {:?} vs {best}", got.score)
        })?;
        let docs = pool.iter().filter(|r| r.1 >= best).count();
        ensure(got.docs_at_or_above == docs, || {
            format!("docs {} vs {docs}", got.docs_at_or_above)
        })?;
        checked += 1;
    }
    ensure(checked >= 90, || {
        format!("only {checked} pools had positives")
    })?;
    Ok(format!("{checked} pools match enumeration"))
}

fn random_table(rng: &mut ChaCha8Rng) -> ScoreTable {
    let n = rng.gen_range(1..300);
    ScoreTable::new(
        0,
        (0..n)
            .map(|i| (i * 2 + 1, f64::from(rng.gen_range(0..25u32)) / 24.0))
            .collect(),
    )
}

fn selection_oracles() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..100 {
        let table = random_table(&mut rng);
        let k = rng.gen_range(1..=table.len());
        let mut by_score = table.entries.clone();
        by_score.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let want: Vec<usize> = by_score.iter().take(k).map(|e| e.0).collect();
        ensure(select_top_ranked(&table, k).ordinals == want, || {
            "top-ranked mismatch".into()
        })?;
        let mut by_distance = table.entries.clone();
        by_distance.sort_by(|a, b| {
            (a.1 - 0.5)
                .abs()
                .total_cmp(&(b.1 - 0.5).abs())
                .then(a.1.total_cmp(&b.1))
                .then(a.0.cmp(&b.0))
        });
        let want: Vec<usize> = by_distance.iter().take(k).map(|e| e.0).collect();
        ensure(select_uncertain(&table, k).ordinals == want, || {
            "uncertain mismatch".into()
        })?;
    }
    let pool: Vec<usize> = (0..10_000).collect();
    let mut positives = 0;
    for seed in 0..30 {
        let batch = select_random(&pool, 1_000, seed, 1);
        ensure(batch.len() == 1_000, || "short random batch".into())?;
        positives += batch.ordinals.iter().filter(|&&o| o % 10 == 0).count();
    }
    let mean = positives as f64 / 30.0;
    ensure((mean - 100.0).abs() <= 10.0, || {
        format!("random mean {mean}")
    })?;
    Ok(format!(
        "100 tables match; random mean {mean:.1} positives per batch"
    ))
}

fn fixture() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures/desk50.jsonl")
}

/// Recomputes every round's review statistics from the selection log and
/// the kept score tables.
fn recompute(
    corpus: &LabeledCorpus,
    run: &RunResult,
    targets: &[RecallTarget],
) -> Result<(), String> {
    let total_positives = corpus.positives();
    let mut training = HashSet::new();
    for record in &run.records {
        training.extend(record.added.iter().copied());
        let training_positives = training.iter().filter(|&&o| corpus.label(o)).count();
        let recall = 100.0 * training_positives as f64 / total_positives as f64;
        ensure(record.training_recall_pct == recall, || {
            format!("round {} recall", record.round)
        })?;
        let scores = record.scores.as_ref().ok_or("scores not kept")?;
        let scored: HashSet<usize> = scores.ordinals().collect();
        let remaining: HashSet<usize> = (0..corpus.total())
            .filter(|o| !training.contains(o))
            .collect();
        ensure(scored == remaining, || {
            format!("round {} scored set", record.round)
        })?;
        for (stats, &t) in record.review_stats().iter().zip(targets) {
            let want = (t.fraction() * total_positives as f64 - 1e-9).ceil() as usize;
            let needed = want.saturating_sub(training_positives);
            let mut cutoff = None;
            let mut docs = 0;
            if needed > 0 {
                let mut thresholds: Vec<f64> = scores.entries.iter().map(|e| e.1).collect();
                thresholds.sort_by(|a, b| b.total_cmp(a));
                thresholds.dedup();
                for c in thresholds {
                    let above: Vec<usize> = scores
                        .entries
                        .iter()
                        .filter(|e| e.1 >= c)
                        .map(|e| e.0)
                        .collect();
                    if above.iter().filter(|&&o| corpus.label(o)).count() >= needed {
                        cutoff = Some(c);
                        docs = above.len();
                        break;
                    }
                }
            }
            let expected = ReviewStats {
                round: record.round,
                recall_target: t,
                cutoff_score: cutoff,
                docs_at_or_above_cutoff: docs,
                training_docs_reviewed: training.len(),
                pct_requiring_review: 100.0 * (docs + training.len()) as f64
                    / corpus.total() as f64,
                training_set_recall: recall,
            };
            ensure(*stats == expected, || {
                format!(
                    "round {} target {t}: {stats:?} vs {expected:?}",
                    record.round
                )
            })?;
        }
    }
    Ok(())
}

fn desk_end_to_end() -> Check {
    let corpus = LabeledCorpus::load(fixture()).map_err(|e| e.to_string())?;
    let targets = vec![
        RecallTarget::new(0.75).unwrap(),
        RecallTarget::new(0.9).unwrap(),
    ];
    let mut rounds = 0;
    for seed in 0..3 {
        let config = SimulationConfig {
            batch_size: 5,
            seed_size: 5,
            master_seed: seed,
            keep_scores: true,
            ..SimulationConfig::default()
        };
        let summary = run_matrix(&corpus, &config, &StrategyKind::ALL, &targets)
            .map_err(|e| e.to_string())?;
        for run in &summary.runs {
            recompute(&corpus, run, &targets)?;
            rounds += run.records.len();
        }
    }
    Ok(format!("{rounds} rounds recomputed exactly"))
}

const SYNTH_SEPARATION: f64 = 0.12;

fn acceptance_corpus() -> SynthConfig {
    SynthConfig {
        total: 10_000,
        richness: 0.3,
        separation: SYNTH_SEPARATION,
        seed: 2024,
        ..SynthConfig::default()
    }
}

fn acceptance_runs() -> Result<(LabeledCorpus, Vec<RunSummary>), String> {
    let corpus = generate(&acceptance_corpus()).map_err(|e| e.to_string())?;
    let targets = vec![
        RecallTarget::new(0.75).unwrap(),
        RecallTarget::new(0.9).unwrap(),
    ];
    let mut summaries = Vec::new();
    for master_seed in 1..=10 {
        let config = SimulationConfig {
            batch_size: 100,
            seed_size: 100,
            master_seed,
            ..SimulationConfig::default()
        };
        summaries.push(
            run_matrix(&corpus, &config, &StrategyKind::ALL, &targets)
                .map_err(|e| e.to_string())?,
        );
    }
    Ok((corpus, summaries))
}

fn recall_ordering(corpus: &LabeledCorpus, summaries: &[RunSummary]) -> Check {
    let recall_at =
        |s: &RunSummary, k: StrategyKind| s.run(k).unwrap().records[10].training_recall_pct;
    let mut ordered = 0;
    let mut line = Vec::new();
    for s in summaries {
        let (t, u, r) = (
            recall_at(s, StrategyKind::TopRanked),
            recall_at(s, StrategyKind::Uncertain),
            recall_at(s, StrategyKind::Random),
        );
        if t >= u && u >= r {
            ordered += 1;
        }
        line.push(format!("{t:.0}/{u:.0}/{r:.0}"));
    }
    // Random batches add positives at the corpus rate, so expected training
    // recall is the share of the corpus already reviewed.
    let mut deviation = 0.0;
    let mut count = 0;
    for s in summaries {
        for rec in &s.run(StrategyKind::Random).unwrap().records {
            let expected = 100.0 * rec.training_size as f64 / corpus.total() as f64;
            deviation += (rec.training_recall_pct - expected).abs();
            count += 1;
        }
    }
    let mean_dev = deviation / f64::from(count);
    ensure(ordered >= 8, || {
        format!("ordering held in {ordered}/10 seeds ({})", line.join(" "))
    })?;
    ensure(mean_dev <= 3.0, || {
        format!("random recall off by {mean_dev:.2} points on average")
    })?;
    Ok(format!(
        "ordering in {ordered}/10 seeds (round-10 recall T/U/R {}); random mean |dev| {mean_dev:.2}",
        line.join(" ")
    ))
}

fn optimum_shape(summaries: &[RunSummary]) -> Check {
    let targets = [
        RecallTarget::new(0.75).unwrap(),
        RecallTarget::new(0.9).unwrap(),
    ];
    let mut notes = Vec::new();
    for kind in [StrategyKind::Uncertain, StrategyKind::Random] {
        let mut ok = 0;
        for s in summaries {
            let run = s.run(kind).unwrap();
            let last = run.records.len() - 1;
            let holds = targets.iter().all(|&t| {
                let op = run.optimum(t).unwrap();
                let final_pct = run.records[last].cost_pct(t).unwrap();
                op.round < last && final_pct > op.pct_requiring_review
            });
            ok += usize::from(holds);
        }
        ensure(ok >= 8, || {
            format!("{}: minimum-then-rise in {ok}/10 seeds", kind.name())
        })?;
        notes.push(format!("{} rise {ok}/10", kind.name()));
    }
    for kind in StrategyKind::ALL {
        let ok = summaries
            .iter()
            .filter(|s| {
                s.row(kind, targets[0]).unwrap().round <= s.row(kind, targets[1]).unwrap().round
            })
            .count();
        ensure(ok >= 8, || {
            format!("{}: OP75 <= OP90 in {ok}/10 seeds", kind.name())
        })?;
        notes.push(format!("{} OP75<=OP90 {ok}/10", kind.name()));
    }
    Ok(notes.join(", "))
}

fn determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let corpus_path = dir.path().join("corpus.jsonl");
    let corpus = generate(&acceptance_corpus()).map_err(|e| e.to_string())?;
    corpus
        .write_jsonl(fs::File::create(&corpus_path).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    for out in ["first", "second"] {
        let status = Command::new(env!("CARGO_BIN_EXE_tarsim"))
            .args([
                "run",
                "--corpus",
                corpus_path.to_str().unwrap(),
                "--seed",
                "42",
            ])
            .args(["--batch-size", "100", "--seed-size", "100", "--out"])
            .arg(dir.path().join(out))
            .stderr(std::process::Stdio::null())
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(|e| e.to_string())?;
        ensure(status.success(), || format!("run exited with {status}"))?;
    }
    let mut files = vec!["summary.json".to_string()];
    files.extend(
        StrategyKind::ALL
            .iter()
            .map(|k| format!("{}/rounds.csv", k.name())),
    );
    for f in &files {
        let a = fs::read(dir.path().join("first").join(f)).map_err(|e| e.to_string())?;
        let b = fs::read(dir.path().join("second").join(f)).map_err(|e| e.to_string())?;
        ensure(a == b, || format!("{f} differs"))?;
    }
    Ok(format!("{} files byte-identical", files.len()))
}

fn main() -> ExitCode {
    // Keep panic messages in the criterion line rather than on stderr.
    panic::set_hook(Box::new(|_| {}));
    let mut suite = Suite { failures: 0 };
    let zero = Duration::ZERO;
    let secs = Duration::from_secs;

    suite.criterion(
        1,
        "worked example",
        Duration::from_millis(1),
        zero,
        worked_example,
    );
    suite.criterion(
        2,
        "term-at-a-time scorer oracle",
        secs(10),
        zero,
        scorer_oracle,
    );
    suite.criterion(
        3,
        "gradient oracle and monotone loss",
        secs(10),
        zero,
        gradient_oracle,
    );
    suite.criterion(4, "cutoff oracle", secs(10), zero, cutoff_oracle);
    suite.criterion(5, "selection oracles", secs(30), zero, selection_oracles);
    suite.criterion(
        6,
        "desk-scale end-to-end oracle",
        secs(30),
        zero,
        desk_end_to_end,
    );

    let start = Instant::now();
    let shared = acceptance_runs();
    let shared_time = start.elapsed();
    match &shared {
        Ok((corpus, summaries)) => {
            suite.criterion(
                7,
                "training recall ordering on synthetic corpus",
                secs(300),
                shared_time,
                || recall_ordering(corpus, summaries),
            );
            suite.criterion(
                8,
                "optimum performance shape on synthetic corpus",
                secs(600),
                shared_time,
                || optimum_shape(summaries),
            );
        }
        Err(e) => {
            for (id, name) in [
                (7, "training recall ordering"),
                (8, "optimum performance shape"),
            ] {
                suite.failures += 1;
                println!("FAIL [{id}] {name}: synthetic runs failed: {e}");
            }
        }
    }
    suite.criterion(
        9,
        "determinism of rounds.csv and summary.json",
        secs(120),
        zero,
        determinism,
    );

    println!("{} of 9 criteria passed", 9 - suite.failures);
    if suite.failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
