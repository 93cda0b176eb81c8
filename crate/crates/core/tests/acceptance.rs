//! Acceptance suite. Every criterion prints one `ACCEPTANCE PASS|FAIL` line
//! to stderr and then asserts.

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use common::{copy_dir, planted_config, report, run_all, verdict};
use medcoder::classifier::{
    ce_loss, smooth_labels, Smoothing, TextClassifier, TextModel, TextModelConfig, TextModelShape,
};
use medcoder::corpus::{generate_synthetic, split_by_patient, CodeCatalog, GeneratorConfig, PlantedMapping, SplitPart};
use medcoder::ensemble::{fuse, EnsembleWeights, ModalityPrediction};
use medcoder::explain::{jaccard_ids, jaccard_text, word_influence, EvidenceReport};
use medcoder::metrics::{apply_thresholds, auc_scores, f1_scores, MetricReport};
use medcoder::pipeline::{
    load_ingested, read_jsonl, run_command, Command, SearchSummary, EVIDENCE_FILE, METRICS_FILE, PREDICTIONS_FILE,
    SEARCH_FILE,
};
use medcoder::ranker::{mine_corpus_negatives, train_ranker, RankerConfig, SynonymCorpus};
use medcoder::text::{bundled_guidelines, phrase_tokens};
use medcoder::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const INSTANCES: usize = 200;

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> T {
    serde_json::from_slice(&std::fs::read(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))).unwrap()
}

// ---------------------------------------------------------------------------
// Independent oracles

fn oracle_bce(p: f64, t: f64) -> f64 {
    let p = p.clamp(1e-7, 1.0 - 1e-7);
    -t * p.ln() - (1.0 - t) * (1.0 - p).ln()
}

fn oracle_ce(p: &[Vec<f64>], t: &[Vec<f64>]) -> f64 {
    let mut s = 0.0;
    let mut n = 0.0;
    for i in 0..p.len() {
        for j in 0..p[i].len() {
            s += oracle_bce(p[i][j], t[i][j]);
            n += 1.0;
        }
    }
    s / n
}

fn oracle_triplet(a: &[Vec<f64>], p: &[Vec<f64>], n: &[Vec<f64>], margin: f64) -> f64 {
    let dist = |x: &Vec<f64>, y: &Vec<f64>| {
        let mut s = 0.0;
        for k in 0..x.len() {
            s += (x[k] - y[k]).powi(2);
        }
        s.sqrt()
    };
    let mut total = 0.0;
    for i in 0..a.len() {
        let h = dist(&a[i], &p[i]) - dist(&a[i], &n[i]) + margin;
        if h > 0.0 {
            total += h;
        }
    }
    total / a.len() as f64
}

/// Per-code TP/FP/FN by direct counting.
fn oracle_f1(d: &[Vec<bool>], y: &[Vec<bool>]) -> (f64, f64, Vec<f64>) {
    let c = y[0].len();
    let (mut tp_all, mut fp_all, mut fn_all) = (0.0, 0.0, 0.0);
    let mut per = Vec::new();
    for j in 0..c {
        let (mut tp, mut fp, mut fneg) = (0.0, 0.0, 0.0);
        for i in 0..y.len() {
            match (d[i][j], y[i][j]) {
                (true, true) => tp += 1.0,
                (true, false) => fp += 1.0,
                (false, true) => fneg += 1.0,
                _ => {}
            }
        }
        per.push(if tp == 0.0 { 0.0 } else { 2.0 * tp / (2.0 * tp + fp + fneg) });
        tp_all += tp;
        fp_all += fp;
        fn_all += fneg;
    }
    let micro = if tp_all == 0.0 { 0.0 } else { 2.0 * tp_all / (2.0 * tp_all + fp_all + fn_all) };
    (per.iter().sum::<f64>() / c as f64, micro, per)
}

/// All-pairs AUC: concordant plus half the ties over all pairs.
fn oracle_pairs_auc(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let (mut good, mut pairs) = (0.0, 0.0);
    for i in 0..scores.len() {
        for k in 0..scores.len() {
            if labels[i] && !labels[k] {
                pairs += 1.0;
                if scores[i] > scores[k] {
                    good += 1.0;
                } else if scores[i] == scores[k] {
                    good += 0.5;
                }
            }
        }
    }
    (pairs > 0.0).then(|| good / pairs)
}

/// Largest one-to-one matching by trying every injective assignment.
fn oracle_matching(adj: &[Vec<bool>], i: usize, used: &mut Vec<bool>) -> usize {
    if i == adj.len() {
        return 0;
    }
    let mut best = oracle_matching(adj, i + 1, used);
    for j in 0..used.len() {
        if adj[i][j] && !used[j] {
            used[j] = true;
            best = best.max(1 + oracle_matching(adj, i + 1, used));
            used[j] = false;
        }
    }
    best
}

fn oracle_jaccard_text(a: &[String], b: &[String], threshold: f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    fn set(s: &str) -> BTreeSet<&str> {
        s.split_whitespace().collect()
    }
    let adj: Vec<Vec<bool>> = a
        .iter()
        .map(|x| {
            b.iter()
                .map(|y| {
                    let (sx, sy) = (set(x), set(y));
                    let inter = sx.intersection(&sy).count() as f64;
                    let union = sx.union(&sy).count() as f64;
                    let overlap = if union == 0.0 { 1.0 } else { inter / union };
                    overlap >= threshold
                })
                .collect()
        })
        .collect();
    let m = oracle_matching(&adj, 0, &mut vec![false; b.len()]) as f64;
    m / (a.len() as f64 + b.len() as f64 - m)
}

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Vec<Vec<f64>> {
    (0..r).map(|_| (0..c).map(|_| rng.random::<f64>()).collect()).collect()
}

fn rand_bools(rng: &mut ChaCha8Rng, r: usize, c: usize, p: f64) -> Vec<Vec<bool>> {
    (0..r).map(|_| (0..c).map(|_| rng.random_bool(p)).collect()).collect()
}

#[test]
fn formula_oracles() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: BTreeMap<&'static str, f64> = BTreeMap::new();
    let mut note = |name: &'static str, err: f64| {
        let w = worst.entry(name).or_insert(0.0);
        *w = w.max(err);
    };
    for _ in 0..INSTANCES {
        let (n, c) = (rng.random_range(1..8), rng.random_range(1..6));

        // Smoothed labels and the loss on them.
        let y = rand_bools(&mut rng, n, c, 0.4);
        let eps: f64 = if rng.random_bool(0.2) { 0.0 } else { rng.random() };
        let smoothed = smooth_labels(&Matrix::from_rows(&y).unwrap(), eps, c).unwrap().targets;
        for i in 0..n {
            for j in 0..c {
                let expect = if y[i][j] { 1.0 - eps + eps / c as f64 } else { eps / c as f64 };
                note("smooth_labels", (smoothed.get(i, j) - expect).abs());
            }
        }
        let mut p = rand_matrix(&mut rng, n, c);
        if rng.random_bool(0.1) {
            p[0][0] = 0.0;
        }
        let t: Vec<Vec<f64>> = (0..n).map(|i| smoothed.row(i).to_vec()).collect();
        let got = ce_loss(&Matrix::from_rows(&p).unwrap(), &smoothed).unwrap();
        note("ce_loss", (got - oracle_ce(&p, &t)).abs());

        // Triplet hinge.
        let (b, d) = (rng.random_range(1..6), rng.random_range(1..6));
        let (a, pos, neg) = (rand_matrix(&mut rng, b, d), rand_matrix(&mut rng, b, d), rand_matrix(&mut rng, b, d));
        let margin = rng.random_range(0.1..2.0);
        let got = medcoder::ranker::triplet_loss(&a, &pos, &neg, margin).unwrap();
        note("triplet_loss", (got - oracle_triplet(&a, &pos, &neg, margin)).abs());

        // Fusion with random availability; the fallback is always present.
        let k = rng.random_range(1..5);
        let mut w: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let s: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= s);
        let ids: Vec<String> = (0..k).map(|i| format!("m{i}")).collect();
        let fallback = rng.random_range(0..k);
        let weights = EnsembleWeights::new(ids.clone(), w.clone(), fallback).unwrap();
        let probs = rand_matrix(&mut rng, k, c);
        let avail: Vec<bool> = (0..k).map(|i| i == fallback || rng.random_bool(0.6)).collect();
        let preds: Vec<ModalityPrediction> = (0..k)
            .map(|i| {
                if avail[i] {
                    ModalityPrediction::available(ids[i].clone(), probs[i].clone())
                } else {
                    ModalityPrediction::missing(ids[i].clone())
                }
            })
            .collect();
        let got = fuse(&preds, &weights).unwrap();
        let moved: f64 = (0..k).filter(|&i| !avail[i]).map(|i| w[i]).sum();
        for j in 0..c {
            let mut expect = 0.0;
            for i in 0..k {
                let wi = if i == fallback { w[i] + moved } else if avail[i] { w[i] } else { 0.0 };
                expect += wi * probs[i][j];
            }
            note("fuse", (got[j] - expect.clamp(0.0, 1.0)).abs());
        }

        // F1 and AUC.
        let (n, c) = (rng.random_range(2..12), rng.random_range(1..5));
        let y = rand_bools(&mut rng, n, c, 0.4);
        let dec = rand_bools(&mut rng, n, c, 0.5);
        let r = f1_scores(&Matrix::from_rows(&dec).unwrap(), &Matrix::from_rows(&y).unwrap()).unwrap();
        let (macro_f1, micro_f1, per) = oracle_f1(&dec, &y);
        note("f1_scores", (r.macro_f1 - macro_f1).abs().max((r.micro_f1 - micro_f1).abs()));
        for j in 0..c {
            note("f1_scores", (r.per_code[j] - per[j]).abs());
        }
        // Coarse scores force ties.
        let scores: Vec<Vec<f64>> =
            (0..n).map(|_| (0..c).map(|_| rng.random_range(0..5) as f64 / 4.0).collect()).collect();
        let col = |m: &Vec<Vec<bool>>, j: usize| m.iter().map(|r| r[j]).collect::<Vec<bool>>();
        let defined: Vec<f64> = (0..c)
            .filter_map(|j| oracle_pairs_auc(&scores.iter().map(|r| r[j]).collect::<Vec<_>>(), &col(&y, j)))
            .collect();
        let auc = auc_scores(&Matrix::from_rows(&scores).unwrap(), &Matrix::from_rows(&y).unwrap());
        let pooled = oracle_pairs_auc(&scores.concat(), &y.concat());
        match (auc, defined.is_empty()) {
            (Ok(a), false) => {
                for j in 0..c {
                    let o = oracle_pairs_auc(&scores.iter().map(|r| r[j]).collect::<Vec<_>>(), &col(&y, j));
                    match (a.per_code[j], o) {
                        (Some(x), Some(e)) => note("auc_scores", (x - e).abs()),
                        (None, None) => {}
                        _ => note("auc_scores", f64::INFINITY),
                    }
                }
                note("auc_scores", (a.macro_auc - defined.iter().sum::<f64>() / defined.len() as f64).abs());
                note("auc_scores", (a.micro_auc - pooled.unwrap()).abs());
            }
            (Err(_), true) => {}
            _ => note("auc_scores", f64::INFINITY),
        }

        // Jaccard over ids and over snippets.
        const WORDS: [&str; 6] = ["renal", "acute", "failure", "kidney", "low", "iron"];
        let ids_a: Vec<String> = (0..rng.random_range(0..5)).map(|_| format!("f{}", rng.random_range(0..6))).collect();
        let ids_b: Vec<String> = (0..rng.random_range(0..5)).map(|_| format!("f{}", rng.random_range(0..6))).collect();
        let (sa, sb): (BTreeSet<&String>, BTreeSet<&String>) = (ids_a.iter().collect(), ids_b.iter().collect());
        let expect = if sa.is_empty() && sb.is_empty() {
            1.0
        } else {
            sa.intersection(&sb).count() as f64 / sa.union(&sb).count() as f64
        };
        note("jaccard", (jaccard_ids(&ids_a, &ids_b) - expect).abs());
        let snippet = |rng: &mut ChaCha8Rng| {
            (0..rng.random_range(1..4)).map(|_| WORDS[rng.random_range(0..6)]).collect::<Vec<_>>().join(" ")
        };
        let ta: Vec<String> = (0..rng.random_range(0..5)).map(|_| snippet(&mut rng)).collect();
        let tb: Vec<String> = (0..rng.random_range(0..5)).map(|_| snippet(&mut rng)).collect();
        let threshold = [0.3, 0.5, 1.0][rng.random_range(0..3)];
        note("jaccard", (jaccard_text(&ta, &tb, threshold) - oracle_jaccard_text(&ta, &tb, threshold)).abs());
    }
    let elapsed = start.elapsed();
    let tolerance = |name: &str| if matches!(name, "f1_scores" | "auc_scores" | "jaccard") { 1e-12 } else { 1e-9 };
    let pass = worst.iter().all(|(n, e)| *e <= tolerance(n)) && worst.len() == 7 && elapsed < Duration::from_secs(30);
    let detail = worst.iter().map(|(n, e)| format!("{n} {e:.1e}")).collect::<Vec<_>>().join(", ");
    verdict(
        "formula oracles",
        pass,
        &format!("{INSTANCES} instances each, max |error|: {detail}; {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(pass);
}

#[test]
fn gradient_check() {
    let start = Instant::now();
    let (worst, failures) = common::gradient_check(0, 50, 1e-3);
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        "gradient check",
        pass,
        &format!("50 coordinates, worst relative error {worst:.2e} (< 1e-3); {:.2}s", elapsed.as_secs_f64()),
    );
    assert!(pass, "{failures:#?}");
}

// ---------------------------------------------------------------------------
// Planted-corpus pipeline, run once and shared

struct PlantedRun {
    _tmp: tempfile::TempDir,
    out: PathBuf,
    elapsed: Duration,
}

fn planted_run() -> &'static PlantedRun {
    static RUN: OnceLock<PlantedRun> = OnceLock::new();
    RUN.get_or_init(|| {
        let tmp = tempfile::tempdir().unwrap();
        let out = tmp.path().join("run");
        let start = Instant::now();
        run_all(&planted_config(&out, 7));
        PlantedRun {
            out,
            elapsed: start.elapsed(),
            _tmp: tmp,
        }
    })
}

fn metrics(out: &Path) -> MetricReport {
    read_json(&out.join(Command::Evaluate.as_str()).join(METRICS_FILE))
}

#[test]
fn planted_signal_classification() {
    let run = planted_run();
    let m = metrics(&run.out);
    let search: SearchSummary = read_json(&run.out.join(Command::TuneEnsemble.as_str()).join(SEARCH_FILE));
    let dominates = search.single_predictor_micro_f1.values().all(|&s| search.validation_micro_f1 >= s);
    let pass = m.micro_f1 >= 0.90 && m.micro_auc >= 0.95 && dominates && run.elapsed < Duration::from_secs(600);
    let singles = search
        .single_predictor_micro_f1
        .iter()
        .map(|(k, v)| format!("{k} {v:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        "planted-signal classification",
        pass,
        &format!(
            "test micro-F1 {:.4} (>= 0.90), micro-AUC {:.4} (>= 0.95); validation micro-F1 ensemble {:.4} vs {singles}; weights {:?}; {:.1}s",
            m.micro_f1,
            m.micro_auc,
            search.validation_micro_f1,
            search.weights,
            run.elapsed.as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn missing_modality_robustness() {
    let run = planted_run();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    for stage in [Command::Ingest, Command::TrainText, Command::TrainRanker, Command::TuneEnsemble] {
        copy_dir(&run.out.join(stage.as_str()), &out.join(stage.as_str()));
    }
    let config = planted_config(&out, 7);
    run_command(&config, Command::Predict).unwrap();
    run_command(&config, Command::Evaluate).unwrap();

    let search: SearchSummary = read_json(&run.out.join(Command::TuneEnsemble.as_str()).join(SEARCH_FILE));
    let summary: serde_json::Value = read_json(&out.join(Command::Predict.as_str()).join("summary.json"));
    let effective: BTreeMap<String, f64> = serde_json::from_value(summary["effective_weights"].clone()).unwrap();
    let tuned: BTreeMap<&str, f64> = search.predictors.iter().map(String::as_str).zip(search.weights.iter().copied()).collect();
    let sum: f64 = effective.values().sum();
    let moved = (effective["text"] - (tuned["text"] + tuned["tabular"])).abs() < 1e-12 && effective["tabular"] == 0.0;
    let (full, partial) = (metrics(&run.out).micro_f1, metrics(&out).micro_f1);
    let pass = (sum - 1.0).abs() <= 1e-9 && moved && full - partial < 0.15;
    verdict(
        "missing-modality robustness",
        pass,
        &format!(
            "tabular weight {:.2} moved to text ({:.2} -> {:.2}), weights sum {sum:.12}; test micro-F1 {full:.4} -> {partial:.4} (drop {:.4} < 0.15)",
            tuned["tabular"],
            tuned["text"],
            effective["text"],
            full - partial
        ),
    );
    assert!(pass);
}

#[test]
fn determinism() {
    let run = planted_run();
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("run");
    run_all(&planted_config(&out, 7));
    let path = |o: &Path| o.join(Command::Evaluate.as_str()).join(METRICS_FILE);
    let (a, b) = (std::fs::read(path(&run.out)).unwrap(), std::fs::read(path(&out)).unwrap());
    let pass = a == b;
    verdict(
        "determinism",
        pass,
        &format!("metric reports of two runs with seed 7: {} bytes each, identical = {pass}", a.len()),
    );
    assert!(pass);
}

fn contains_run(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

#[test]
fn interpretability_recovery() {
    let run = planted_run();
    let data = load_ingested(run.out.join(Command::Ingest.as_str())).unwrap();
    let planted: PlantedMapping = read_json(&run.out.join(Command::GenSynthetic.as_str()).join("planted.json"));
    let evidence: Vec<EvidenceReport> = read_jsonl(run.out.join(Command::Explain.as_str()).join(EVIDENCE_FILE)).unwrap();
    let by_id: BTreeMap<&str, _> = data.records.iter().map(|r| (r.admission_id.as_str(), r)).collect();

    let mut per_code = Vec::new();
    let mut pass = true;
    let (mut words, mut phrases) = (0usize, 0usize);
    for code in &planted.codes {
        let j = data.catalog.index_of(&code.code).unwrap();
        let keywords: Vec<Vec<String>> = code.keywords.iter().map(|k| phrase_tokens(k)).collect();
        let features: BTreeSet<String> = code.features.iter().map(|f| f.to_string()).collect();
        let (mut tp, mut kw_hits, mut feat_hits) = (0usize, 0usize, 0usize);
        for e in evidence.iter().filter(|e| e.code == code.code) {
            if !by_id[e.admission_id.as_str()].labels[j] {
                continue;
            }
            tp += 1;
            for p in &e.phrases {
                words += phrase_tokens(&p.phrase).len();
                phrases += 1;
            }
            if e.phrases.iter().take(3).any(|p| {
                let toks = phrase_tokens(&p.phrase);
                keywords.iter().any(|k| contains_run(&toks, k))
            }) {
                kw_hits += 1;
            }
            if e.features.iter().take(3).any(|f| features.contains(&f.feature.to_string())) {
                feat_hits += 1;
            }
        }
        let rate = |h: usize| if tp == 0 { f64::NAN } else { h as f64 / tp as f64 };
        pass &= tp > 0 && rate(kw_hits) >= 0.9 && rate(feat_hits) >= 0.9;
        per_code.push(format!(
            "{} keyword {:.2} feature {:.2} (n={tp})",
            code.code,
            rate(kw_hits),
            rate(feat_hits)
        ));
    }

    // Path-sum conservation on a zero-bias model.
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let config = TextModelConfig {
            embedding_dim: 6,
            kernel_widths: vec![2, 3],
            feature_maps: 4,
            dropout: 0.0,
            ..TextModelConfig::default()
        };
        let shape = TextModelShape {
            vocab_size: 15,
            num_codes: 3,
            tfidf_dim: 0,
        };
        let mut model = TextModel::new(config, shape, &mut rng).unwrap();
        model.mark_trained();
        let ids: Vec<u32> = (0..rng.random_range(3..12)).map(|_| rng.random_range(1..15)).collect();
        let trace = model.forward_trace::<ChaCha8Rng>(&ids, None, None).unwrap();
        for c in 0..3 {
            let s: f64 = word_influence(&model, &ids, c).unwrap().iter().sum();
            worst = worst.max((s - trace.logits[c]).abs());
        }
    }
    pass &= worst <= 1e-6;
    verdict(
        "interpretability recovery",
        pass,
        &format!(
            "top-3 hit rates over true positives: {}; mean phrase length {:.1} words; conservation error {worst:.1e} (<= 1e-6)",
            per_code.join("; "),
            words as f64 / phrases.max(1) as f64
        ),
    );
    assert!(pass);
}

#[test]
fn ranker_ordering() {
    let start = Instant::now();
    let catalog = CodeCatalog::fixture_5();
    let full = SynonymCorpus::for_catalog(&catalog, Some(&SynonymCorpus::bundled())).unwrap();
    let (train, held_out) = full.split_held_out();
    let config = RankerConfig {
        char_embedding_dim: 16,
        char_filters: 8,
        word_embedding_dim: 32,
        hidden_units: 32,
        learning_rate: 0.003,
        epochs: 200,
        seed: 3,
        ..RankerConfig::default()
    };
    let mined = mine_corpus_negatives(&train, &[] as &[&str], config.ngram_range, config.negatives_per_anchor).unwrap();
    let (ranker, _) = train_ranker(&config, &mined, &catalog, &held_out).unwrap();
    let accuracy = ranker.top1_accuracy(&held_out).unwrap();

    // Single phrases must hit both ends of the min-max range; averaged
    // multi-phrase scores only need to stay inside it.
    let mut checked = 0;
    let mut shape_ok = true;
    let mut singles: Vec<String> = held_out.iter().map(|h| h.phrase.clone()).collect();
    singles.extend(["renal failure", "low iron", "sugar high", "edema", "chest pain"].map(String::from));
    for q in &singles {
        let s = ranker.rank_codes(&[q]).unwrap();
        let distinct: BTreeSet<u64> = s.iter().map(|x| x.to_bits()).collect();
        if distinct.len() < 2 {
            continue;
        }
        checked += 1;
        let ones = s.iter().filter(|&&x| x == 1.0).count();
        let zeros = s.iter().filter(|&&x| x == 0.0).count();
        shape_ok &= s.iter().all(|x| (0.0..=1.0).contains(x)) && ones == 1 && zeros == 1;
    }
    for q in [vec!["renal failure", "low iron"], vec!["sugar high", "blood pressure elevated", "edema"]] {
        shape_ok &= ranker.rank_codes(&q).unwrap().iter().all(|x| (0.0..=1.0).contains(x));
    }
    let pass = accuracy >= 0.8 && shape_ok && checked > 0;
    verdict(
        "ranker ordering",
        pass,
        &format!(
            "held-out top-1 accuracy {accuracy:.3} over {} phrases (>= 0.8); {checked} single-phrase score vectors in [0,1] with one 1 and one 0 = {shape_ok}; {:.1}s",
            held_out.len(),
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

const RARE_CODE: usize = 4;

/// Macro-F1 at 0.5 on the test split of an imbalanced planted corpus, the
/// rare code's F1 and its test positives.
fn smoothing_macro_f1(seed: u64, smoothing: Smoothing) -> (f64, f64, usize) {
    let mut generator = GeneratorConfig::planted_fixture(1000);
    generator.codes[RARE_CODE].prevalence = 0.02;
    let corpus = generate_synthetic(&generator, seed).unwrap();
    let split = split_by_patient(&corpus.records, [0.7, 0.15, 0.15], seed).unwrap();
    let mut config = medcoder::classifier::TextClassifierConfig::default();
    config.min_frequency = 3;
    // Default optimizer schedule with a smaller network.
    config.model = TextModelConfig {
        embedding_dim: 64,
        feature_maps: 32,
        smoothing,
        seed,
        ..TextModelConfig::default()
    };
    let (model, _) = TextClassifier::fit(
        &config,
        &corpus.catalog,
        &split.select(&corpus.records, SplitPart::Train),
        &split.select(&corpus.records, SplitPart::Validation),
        &bundled_guidelines(&corpus.catalog),
    )
    .unwrap();
    let test = split.select(&corpus.records, SplitPart::Test);
    let probs: Vec<Vec<f64>> = test.iter().map(|r| model.predict(r).unwrap()).collect();
    let labels: Vec<Vec<bool>> = test.iter().map(|r| r.labels.clone()).collect();
    let c = corpus.catalog.len();
    let decisions = apply_thresholds(&Matrix::from_rows(&probs).unwrap(), &vec![0.5; c]).unwrap();
    let f1 = f1_scores(&decisions, &Matrix::from_rows(&labels).unwrap()).unwrap();
    let rare = test.iter().filter(|r| r.labels[RARE_CODE]).count();
    (f1.macro_f1, f1.per_code[RARE_CODE], rare)
}

#[test]
fn label_smoothing_effect() {
    let median = |mut v: Vec<f64>| {
        v.sort_by(f64::total_cmp);
        v[v.len() / 2]
    };
    let seeds = [1u64, 2, 3];
    let with: Vec<(f64, f64, usize)> =
        seeds.iter().map(|&s| smoothing_macro_f1(s, Smoothing::Beta { alpha: 0.3 })).collect();
    let without: Vec<(f64, f64, usize)> = seeds.iter().map(|&s| smoothing_macro_f1(s, Smoothing::off())).collect();
    let (mw, mo) = (median(with.iter().map(|r| r.0).collect()), median(without.iter().map(|r| r.0).collect()));
    let pass = mw >= mo;
    let show = |v: &[(f64, f64, usize)]| {
        v.iter().map(|(m, r, n)| format!("{m:.4} (rare {r:.2}, n={n})")).collect::<Vec<_>>().join(", ")
    };
    verdict(
        "label-smoothing effect",
        pass,
        &format!(
            "median test macro-F1 with alpha 0.3 {mw:.4} [{}] vs epsilon 0 {mo:.4} [{}]",
            show(&with),
            show(&without)
        ),
    );
    assert!(pass);
}

#[test]
fn predictions_cover_the_test_split() {
    let run = planted_run();
    let data = load_ingested(run.out.join(Command::Ingest.as_str())).unwrap();
    let preds: Vec<serde_json::Value> = read_jsonl(run.out.join(Command::Predict.as_str()).join(PREDICTIONS_FILE)).unwrap();
    assert_eq!(preds.len(), data.split.test.len());
    report(&format!("planted run: {} test admissions predicted", preds.len()));
}
