//! Acceptance criteria for the whole toolkit. Each check prints one
//! `PASS`/`FAIL` line; the process exits non-zero if any check fails.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use faithsum_core::corpus::{generate_corpus, split_corpus, CorpusSpec, EvalItem};
use faithsum_core::corruption::{
    build_top_entities, swap_antonym, tag_entities, toggle_negation, Corrupter, CorruptionKind,
    DefectLexicon, Gazetteer, Policy, Triplet, DEFAULT_TOP_K,
};
use faithsum_core::eval::{
    compare_models, evaluate_model, lcs_len, rouge_l_tokens, rouge_n_tokens, EvalReport,
};
use faithsum_core::losses::{
    contrastive_objective, contrastive_objective_with_grad, loss_cc, loss_cn, loss_dc, LossConfig,
    LossVariant,
};
use faithsum_core::model::{ModelConfig, Precision, Seq2Seq, Transformer};
use faithsum_core::text::Vocabulary;
use faithsum_core::trainer::{
    gradient_check, train, NoHooks, Optimizer, TrainConfig, TrainData, GRADCHECK_EPSILON,
    GRADCHECK_SAMPLES,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

const LOSS_TOL: f64 = 1e-9;
const GRAD_REL_TOL: f64 = 1e-4;
const INACTIVE_TOL: f64 = 1e-10;
const MAX_GRADCHECK_PARAMS: usize = 50_000;
const MIN_WED_IPD_REDUCTION: f64 = 0.20;
const MAX_CONSISTENT_TO_INCONSISTENT: f64 = 0.10;
const MAX_ROUGE_DROP_POINTS: f64 = 1.0;
const EXPERIMENT_SEEDS: [u64; 3] = [0, 1, 2];

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- losses

fn loss_arithmetic() -> Check {
    let cases = [
        ("loss_dc(2,3,0.05)", loss_dc(2.0, 3.0, 0.05), 1.85),
        ("loss_cn(2,3,0.5,2)", loss_cn(2.0, 3.0, 0.5, 2.0), 2.0),
        ("loss_cc(1,4,0.5,5)", loss_cc(1.0, 4.0, 0.5, 5.0), 2.0),
    ];
    for (name, got, want) in cases {
        ensure((got - want).abs() <= LOSS_TOL, || format!("{name} = {got}, want {want}"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let (p, n, m) = (rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0), rng.gen_range(0.0..10.0));
        for (v, got) in [
            ("DC", loss_dc(p, n, 0.0)),
            ("CN", loss_cn(p, n, 0.0, m)),
            ("CC", loss_cc(p, n, 0.0, m)),
        ] {
            ensure(got == p, || format!("{v} with alpha 0 gave {got} for l_pos {p}"))?;
        }
    }
    Ok("3 worked values within 1e-9; alpha=0 collapses DC/CN/CC on 1000 draws".into())
}

// ------------------------------------------------------------- gradients

fn small_triplets(n: usize) -> (Vec<Triplet>, Vocabulary) {
    let spec = CorpusSpec {
        n_examples: 40,
        seed: 11,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).expect("corpus");
    let (gaz, lex) = tables(&spec);
    let top = build_top_entities(corpus.iter().map(|e| e.source.as_str()), &gaz, DEFAULT_TOP_K).unwrap();
    let c = Corrupter {
        tagger: &gaz,
        lexicon: &lex,
        top: &top,
        policy: Policy::RandomEither,
    };
    let (mut triplets, _) = c.build_triplets(&corpus, 3);
    // Short documents keep the check quick.
    triplets.sort_by_key(|t| t.d.len());
    triplets.truncate(n);
    let vocab = Vocabulary::build(triplets.iter().flat_map(|t| [t.d.as_str(), &t.s_plus, &t.s_minus]));
    (triplets, vocab)
}

fn gradcheck_model(vocab: &Vocabulary, seed: u64) -> Transformer<f64> {
    Transformer::new(ModelConfig {
        d_model: 16,
        n_heads: 2,
        n_layers: 1,
        ffn_dim: 32,
        max_len: 64,
        vocab_size: vocab.len(),
        init_seed: seed,
        dropout: 0.0,
    })
    .expect("model")
}

fn gradients() -> Check {
    let (triplets, vocab) = small_triplets(10);
    let variants = [
        LossConfig::new(LossVariant::Ordinary),
        LossConfig::new(LossVariant::Dc),
        LossConfig::new(LossVariant::Cn),
        LossConfig::new(LossVariant::Cc),
    ];
    let mut worst: f64 = 0.0;
    let mut n_params = 0;
    for seed in 0..10u64 {
        let mut model = gradcheck_model(&vocab, seed);
        n_params = model.num_parameters();
        ensure(n_params <= MAX_GRADCHECK_PARAMS, || format!("{n_params} parameters"))?;
        let t = &triplets[seed as usize % triplets.len()];
        for loss in &variants {
            let err = gradient_check(&mut model, t, loss, &vocab, GRADCHECK_EPSILON, GRADCHECK_SAMPLES, seed)
                .map_err(|e| e.to_string())?;
            ensure(err < GRAD_REL_TOL, || {
                format!("{} seed {seed}: max relative error {err:.3e}", loss.variant)
            })?;
            worst = worst.max(err);
        }

        // Orient the pair and pick a margin so the CC hinge is closed.
        let mut t = t.clone();
        let probe = contrastive_objective(&model, &t, &LossConfig::default(), &vocab).map_err(|e| e.to_string())?;
        if probe.l_neg < probe.l_pos {
            std::mem::swap(&mut t.s_plus, &mut t.s_minus);
        }
        let gap = (probe.l_neg - probe.l_pos).abs();
        let cc = LossConfig::with(LossVariant::Cc, 0.5, gap / 2.0).map_err(|e| e.to_string())?;
        let (value, g_cc) = contrastive_objective_with_grad(&model, &t, &cc, &vocab).map_err(|e| e.to_string())?;
        let (_, g_ord) =
            contrastive_objective_with_grad(&model, &t, &LossConfig::default(), &vocab).map_err(|e| e.to_string())?;
        ensure(!value.hinge_active, || format!("seed {seed}: hinge unexpectedly open"))?;
        let diff = g_cc.iter().zip(&g_ord).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        ensure(diff <= INACTIVE_TOL, || format!("seed {seed}: inactive CC differs by {diff:.3e}"))?;
    }
    Ok(format!(
        "4 variants x 10 seeds on {n_params} params, worst relative error {worst:.2e}; inactive CC equals ORDINARY"
    ))
}

// ------------------------------------------------------------------ ROUGE

fn brute_ngram_overlap(c: &[String], r: &[String], n: usize) -> usize {
    // Greedy one-to-one matching of identical n-grams equals the clipped count.
    let grams = |xs: &[String]| -> Vec<Vec<String>> {
        if xs.len() < n {
            Vec::new()
        } else {
            xs.windows(n).map(|w| w.to_vec()).collect()
        }
    };
    let cg = grams(c);
    let mut used = vec![false; grams(r).len()];
    let rg = grams(r);
    let mut hits = 0;
    for g in &cg {
        if let Some(j) = (0..rg.len()).find(|&j| !used[j] && rg[j] == *g) {
            used[j] = true;
            hits += 1;
        }
    }
    hits
}

fn oracle_f1(hits: usize, c_total: usize, r_total: usize) -> (f64, f64, f64) {
    let p = if c_total == 0 { 0.0 } else { hits as f64 / c_total as f64 };
    let r = if r_total == 0 { 0.0 } else { hits as f64 / r_total as f64 };
    let f = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f)
}

fn table_lcs(a: &[String], b: &[String]) -> usize {
    let mut t = vec![vec![0usize; b.len() + 1]; a.len() + 1];
    for i in 1..=a.len() {
        for j in 1..=b.len() {
            t[i][j] = if a[i - 1] == b[j - 1] {
                t[i - 1][j - 1] + 1
            } else {
                t[i - 1][j].max(t[i][j - 1])
            };
        }
    }
    t[a.len()][b.len()]
}

fn rouge_oracle() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let alphabet = ["a", "b", "c", "d", "e"];
    let draw = |rng: &mut ChaCha8Rng| -> Vec<String> {
        let len = rng.gen_range(0..=20);
        (0..len).map(|_| alphabet[rng.gen_range(0..alphabet.len())].to_string()).collect()
    };
    for pair in 0..100 {
        let (c, r) = (draw(&mut rng), draw(&mut rng));
        for n in 1..=3 {
            let got = rouge_n_tokens(&c, &r, n);
            let hits = brute_ngram_overlap(&c, &r, n);
            let want = oracle_f1(hits, (c.len() + 1).saturating_sub(n), (r.len() + 1).saturating_sub(n));
            ensure((got.precision, got.recall, got.f1) == want, || {
                format!("pair {pair} n={n}: got {got:?}, oracle {want:?}")
            })?;
        }
        let lcs = table_lcs(&c, &r);
        ensure(lcs_len(&c, &r) == lcs, || format!("pair {pair}: LCS {} vs {lcs}", lcs_len(&c, &r)))?;
        let got = rouge_l_tokens(&c, &r);
        let want = oracle_f1(lcs, c.len(), r.len());
        ensure((got.precision, got.recall, got.f1) == want, || {
            format!("pair {pair} ROUGE-L: got {got:?}, oracle {want:?}")
        })?;
    }
    Ok("100 pairs x n in {1,2,3} plus LCS agree exactly".into())
}

// ------------------------------------------------------------- corruption

fn tables(spec: &CorpusSpec) -> (Gazetteer, DefectLexicon) {
    let gaz = Gazetteer::new(spec.entity_pool.iter().map(|(s, t)| (s.as_str(), *t))).expect("gazetteer");
    let lex = DefectLexicon::from_pool(&spec.defect_pool).expect("lexicon");
    (gaz, lex)
}

fn corruption_invariants() -> Check {
    let spec = CorpusSpec {
        n_examples: 2000,
        seed: 99,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).map_err(|e| e.to_string())?;
    let (gaz, lex) = tables(&spec);
    let top = build_top_entities(corpus.iter().map(|e| e.source.as_str()), &gaz, DEFAULT_TOP_K)
        .map_err(|e| e.to_string())?;
    let mut kinds: BTreeMap<&str, usize> = BTreeMap::new();
    let mut total = 0;
    for policy in [Policy::RandomEither, Policy::EntityOnly, Policy::DefectOnly] {
        let c = Corrupter {
            tagger: &gaz,
            lexicon: &lex,
            top: &top,
            policy,
        };
        let (triplets, _) = c.build_triplets(&corpus, 5);
        for t in &triplets {
            check_triplet(t, &gaz, &lex, &top).map_err(|e| format!("{policy} {}: {e}", t.id))?;
            *kinds.entry(t.corruption_kind.as_str()).or_default() += 1;
        }
        total += triplets.len();
    }
    ensure(total > 0, || "no triplets produced".into())?;
    Ok(format!("{total} triplets over three policies, all valid {kinds:?}"))
}

fn check_triplet(
    t: &Triplet,
    gaz: &Gazetteer,
    lex: &DefectLexicon,
    top: &faithsum_core::corruption::TopEntities,
) -> Result<(), String> {
    ensure(t.s_minus != t.s_plus, || "s- equals s+".into())?;
    let rebuilt = t.edit.apply(&t.s_plus).map_err(|e| e.to_string())?;
    ensure(rebuilt == t.s_minus, || format!("edit rebuilds {rebuilt:?}"))?;
    match t.corruption_kind {
        CorruptionKind::EntitySwap => {
            let ty = gaz.entity_type(&t.edit.original);
            ensure(ty.is_some() && ty == gaz.entity_type(&t.edit.replacement), || {
                format!("{} -> {} changes type", t.edit.original, t.edit.replacement)
            })?;
            let in_doc = tag_entities(&t.d, gaz)
                .iter()
                .any(|s| s.surface.to_lowercase() == t.edit.replacement.to_lowercase());
            ensure(in_doc || top.contains(&t.edit.replacement, ty.unwrap()), || {
                format!("{} comes from neither the document nor the top entities", t.edit.replacement)
            })?;
        }
        CorruptionKind::NegationAdd | CorruptionKind::NegationRemove => {
            let m = lex.find(&t.s_minus).into_iter().next().ok_or("no defect phrase in s-")?;
            let back = toggle_negation(&t.s_minus, &m);
            ensure(back.s_minus == t.s_plus, || format!("negation toggled back to {:?}", back.s_minus))?;
        }
        CorruptionKind::AntonymSwap => {
            let (a, b) = (t.edit.original.to_lowercase(), t.edit.replacement.to_lowercase());
            ensure(lex.antonym(&a) == Some(b.as_str()) && lex.antonym(&b) == Some(a.as_str()), || {
                format!("{a} <-> {b} is not a symmetric antonym pair")
            })?;
            let m = lex.find(&t.s_minus).into_iter().next().ok_or("no defect phrase in s-")?;
            let back = swap_antonym(&t.s_minus, &m, &a);
            ensure(back.s_minus == t.s_plus, || format!("antonym swapped back to {:?}", back.s_minus))?;
        }
    }
    Ok(())
}

// ----------------------------------------------------------- experiment

struct SeedOutcome {
    report: EvalReport,
    secs: f64,
}

const PRETRAIN_EPOCHS: usize = 10;
const FINETUNE_EPOCHS: usize = 5;

fn experiment_config(variant: LossVariant, epochs: usize, seed: u64) -> TrainConfig {
    TrainConfig {
        learning_rate: 1e-3,
        epochs,
        batch_size: 16,
        loss: LossConfig::new(variant),
        seed,
        precision: Precision::F32,
        optimizer: Optimizer::Adam,
        max_grad_norm: Some(1.0),
        d_model: 64,
        n_heads: 2,
        n_layers: 2,
        ffn_dim: 128,
        ..TrainConfig::default()
    }
}

/// Both arms fine-tune the same ORDINARY-pretrained model, so they differ
/// only in the fine-tuning objective.
fn run_seed(seed: u64) -> Result<SeedOutcome, String> {
    let t0 = Instant::now();
    let spec = CorpusSpec {
        n_examples: 2300,
        seed,
        ..CorpusSpec::default()
    };
    let corpus = generate_corpus(&spec).map_err(|e| e.to_string())?;
    let (train_set, test_set) = split_corpus(&corpus, 2000.0 / 2300.0, seed).map_err(|e| e.to_string())?;
    ensure(train_set.len() == 2000 && test_set.len() == 300, || {
        format!("split gave {}/{}", train_set.len(), test_set.len())
    })?;
    let (gaz, lex) = tables(&spec);
    let top = build_top_entities(train_set.iter().map(|e| e.source.as_str()), &gaz, DEFAULT_TOP_K)
        .map_err(|e| e.to_string())?;
    let corrupter = Corrupter {
        tagger: &gaz,
        lexicon: &lex,
        top: &top,
        policy: Policy::RandomEither,
    };
    let (triplets, plain) = corrupter.build_triplets(&train_set, seed);
    let vocab = Vocabulary::build(
        triplets
            .iter()
            .flat_map(|t| [t.d.as_str(), &t.s_plus, &t.s_minus])
            .chain(plain.iter().flat_map(|s| [s.d.as_str(), &s.s_plus])),
    );
    let data = TrainData { triplets, plain };
    let items: Vec<EvalItem> = test_set.into_iter().map(EvalItem::from).collect();

    let pre_cfg = experiment_config(LossVariant::Ordinary, PRETRAIN_EPOCHS, seed);
    let mut pretrained = Transformer::<f32>::new(pre_cfg.model_config(vocab.len())).map_err(|e| e.to_string())?;
    train(&mut pretrained, &data, &vocab, &pre_cfg, &mut NoHooks).map_err(|e| e.to_string())?;

    let mut runs = Vec::new();
    for variant in [LossVariant::Ordinary, LossVariant::Cc] {
        let cfg = experiment_config(variant, FINETUNE_EPOCHS, seed);
        let mut model = pretrained.clone();
        train(&mut model, &data, &vocab, &cfg, &mut NoHooks).map_err(|e| e.to_string())?;
        runs.push(evaluate_model(&model, &vocab, &items, &gaz, &lex).map_err(|e| e.to_string())?);
    }
    let report = compare_models(&runs[0], &runs[1]).map_err(|e| e.to_string())?;
    Ok(SeedOutcome {
        report,
        secs: t0.elapsed().as_secs_f64(),
    })
}

struct Experiment {
    seeds: Vec<SeedOutcome>,
}

impl Experiment {
    fn mean(&self, f: impl Fn(&EvalReport) -> f64) -> f64 {
        self.seeds.iter().map(|s| f(&s.report)).sum::<f64>() / self.seeds.len() as f64
    }
}

fn consistency_effect(exp: &Experiment) -> Check {
    let per_seed: Vec<String> = exp
        .seeds
        .iter()
        .map(|s| {
            let r = &s.report;
            format!(
                "WED+IPD {}->{} c->i {:.1}% ({:.0}s)",
                r.baseline_wed_ipd,
                r.treated_wed_ipd,
                r.pct_consistent_to_inconsistent,
                s.secs
            )
        })
        .collect();
    // Report fields are percentages.
    let reduction = exp.mean(|r| r.wed_ipd_reduction) / 100.0;
    let churn = exp.mean(|r| r.pct_consistent_to_inconsistent) / 100.0;
    let detail = format!(
        "mean WED+IPD reduction {:.1}% (need >= {:.0}%), mean c->i {:.1}% (need <= {:.0}%); {}",
        100.0 * reduction,
        100.0 * MIN_WED_IPD_REDUCTION,
        100.0 * churn,
        100.0 * MAX_CONSISTENT_TO_INCONSISTENT,
        per_seed.join("; ")
    );
    if reduction >= MIN_WED_IPD_REDUCTION && churn <= MAX_CONSISTENT_TO_INCONSISTENT {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rouge_non_degradation(exp: &Experiment) -> Check {
    let deltas: Vec<f64> = (0..3).map(|k| 100.0 * exp.mean(|r| r.rouge_f1_delta[k])).collect();
    let detail = format!(
        "mean F1 delta R1 {:+.2} R2 {:+.2} RL {:+.2} points (floor -{MAX_ROUGE_DROP_POINTS:.1})",
        deltas[0], deltas[1], deltas[2]
    );
    if deltas.iter().all(|&d| d >= -MAX_ROUGE_DROP_POINTS) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

// -------------------------------------------------------- reproducibility

fn sha256_hex(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).expect("readable output")))
}

fn faithsum(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_faithsum"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

/// Runs every stage inside `dir` with relative paths and returns the digest
/// of each output file, manifests excluded.
fn pipeline_digests(dir: &Path) -> Result<BTreeMap<String, String>, String> {
    fs::write(dir.join("spec.toml"), "n_examples = 60\nseed = 3\n").map_err(|e| e.to_string())?;
    fs::write(
        dir.join("train.toml"),
        "learning_rate = 0.003\noptimizer = \"ADAM\"\nepochs = 2\nbatch_size = 8\n\
         loss_variant = \"CC\"\nd_model = 16\nn_layers = 1\nffn_dim = 32\ncheckpoint_every = 5\n",
    )
    .map_err(|e| e.to_string())?;
    let stages: [&[&str]; 7] = [
        &["generate-corpus", "--config", "spec.toml", "--out", "corpus.jsonl"],
        &[
            "split-corpus", "--corpus", "corpus.jsonl", "--train-fraction", "0.8", "--seed", "4",
            "--train-out", "train.jsonl", "--test-out", "test.jsonl",
        ],
        &[
            "build-triplets", "--corpus", "train.jsonl", "--gazetteer", "corpus.gazetteer.tsv",
            "--lexicon", "corpus.lexicon.tsv", "--seed", "6", "--out", "triplets.jsonl",
        ],
        &[
            "train", "--triplets", "triplets.jsonl", "--skipped", "triplets.skipped.jsonl",
            "--config", "train.toml", "--out", "cc",
        ],
        &[
            "train", "--triplets", "triplets.jsonl", "--skipped", "triplets.skipped.jsonl",
            "--config", "train.toml", "--seed", "1", "--init", "cc/model.json", "--out", "cc1",
        ],
        &[
            "evaluate", "--checkpoint", "cc/model.json", "--corpus", "test.jsonl",
            "--gazetteer", "corpus.gazetteer.tsv", "--lexicon", "corpus.lexicon.tsv", "--out", "cc.eval.json",
        ],
        &[
            "evaluate", "--checkpoint", "cc1/model.json", "--corpus", "test.jsonl",
            "--gazetteer", "corpus.gazetteer.tsv", "--lexicon", "corpus.lexicon.tsv", "--out", "cc1.eval.json",
        ],
    ];
    for args in stages {
        faithsum(dir, args)?;
    }
    faithsum(dir, &["compare", "--baseline", "cc.eval.json", "--treated", "cc1.eval.json", "--out", "report.json"])?;
    let mut digests = BTreeMap::new();
    for entry in walkdir::WalkDir::new(dir).sort_by_file_name() {
        let entry = entry.map_err(|e| e.to_string())?;
        let name = entry.path().strip_prefix(dir).unwrap().to_string_lossy().into_owned();
        if entry.file_type().is_file() && !name.ends_with("manifest.json") {
            digests.insert(name, sha256_hex(entry.path()));
        }
    }
    Ok(digests)
}

fn reproducibility() -> Check {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let da = pipeline_digests(a.path())?;
    let db = pipeline_digests(b.path())?;
    ensure(da.keys().eq(db.keys()), || format!("file sets differ: {:?} vs {:?}", da.keys(), db.keys()))?;
    let differing: Vec<&String> = da.iter().filter(|(k, v)| db[*k] != **v).map(|(k, _)| k).collect();
    ensure(differing.is_empty(), || format!("differing outputs: {differing:?}"))?;
    ensure(da.keys().any(|k| k.contains("checkpoint-")), || "no checkpoints written".into())?;
    Ok(format!("{} output files hash-identical across two full pipeline runs", da.len()))
}

// ------------------------------------------------------------------ main

fn report(name: &str, outcome: Check, failures: &mut usize) {
    match outcome {
        Ok(detail) => println!("PASS  {name:<28} {detail}"),
        Err(detail) => {
            *failures += 1;
            println!("FAIL  {name:<28} {detail}");
        }
    }
}

fn main() {
    let mut failures = 0;
    report("loss arithmetic", loss_arithmetic(), &mut failures);
    report("gradient correctness", gradients(), &mut failures);
    report("ROUGE oracle equivalence", rouge_oracle(), &mut failures);
    report("corruption invariants", corruption_invariants(), &mut failures);
    report("reproducibility", reproducibility(), &mut failures);

    let seeds: Result<Vec<SeedOutcome>, String> = EXPERIMENT_SEEDS.iter().map(|&s| run_seed(s)).collect();
    match seeds {
        Ok(seeds) => {
            let exp = Experiment { seeds };
            report("consistency improvement", consistency_effect(&exp), &mut failures);
            report("ROUGE non-degradation", rouge_non_degradation(&exp), &mut failures);
        }
        Err(e) => {
            report("consistency improvement", Err(e.clone()), &mut failures);
            report("ROUGE non-degradation", Err(e), &mut failures);
        }
    }

    if failures > 0 {
        println!("{failures} acceptance check(s) failed");
        std::process::exit(1);
    }
    println!("all acceptance checks passed");
}
