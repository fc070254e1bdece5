use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use faithsum_core::autograd::Scalar;
use faithsum_core::corpus::{self, load_corpus, load_eval_items, save_corpus, CorpusSpec, LabeledExample};
use faithsum_core::corruption::{
    build_top_entities, load_skips, load_triplets, save_skips, save_triplets, Corrupter, CorruptionKind,
    DefectLexicon, Gazetteer, TopEntities,
};
use faithsum_core::eval::{compare_models, evaluate_model, ConsistencyLabel, EvalRun};
use faithsum_core::model::{Checkpoint, ModelConfig, Precision, Transformer};
use faithsum_core::text::Vocabulary;
use faithsum_core::trainer::{self, StepRecord, TrainConfig, TrainData, TrainHooks};
use faithsum_core::Error;

use crate::manifest::{manifest_path, write_atomic, ManifestBuilder};
use crate::{CompareArgs, EvaluateArgs, GenerateArgs, SplitArgs, TrainArgs, TripletArgs};

/// 3 for a non-finite training loss, 4 for misaligned comparisons,
/// 2 for every other failure.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::NonFinite { .. }) => 3,
        Some(Error::Misaligned { .. }) => 4,
        _ => 2,
    }
}

/// `dir/stem.suffix` for an output `dir/stem.ext`.
fn sibling(path: &Path, suffix: &str) -> PathBuf {
    path.with_extension(suffix)
}

fn ensure_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn generate_corpus(a: GenerateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("generate-corpus");
    let mut spec = match &a.config {
        Some(p) => {
            manifest.input(p);
            CorpusSpec::from_file(p)?
        }
        None => CorpusSpec::default(),
    };
    if let Some(seed) = a.seed {
        spec.seed = seed;
        spec.validate()?;
    }
    let examples = corpus::generate_corpus(&spec)?;
    ensure_parent(&a.out)?;
    save_corpus(&examples, &a.out)?;

    let gazetteer = Gazetteer::new(spec.entity_pool.iter().map(|(s, t)| (s.as_str(), *t)))?;
    let lexicon = DefectLexicon::from_pool(&spec.defect_pool)?;
    let gaz_path = sibling(&a.out, "gazetteer.tsv");
    let lex_path = sibling(&a.out, "lexicon.tsv");
    fs::write(&gaz_path, gazetteer.to_tsv()).with_context(|| format!("writing {}", gaz_path.display()))?;
    fs::write(&lex_path, lexicon.to_tsv()).with_context(|| format!("writing {}", lex_path.display()))?;

    manifest
        .seed(spec.seed)
        .config(&spec)
        .output(&a.out)
        .output(&gaz_path)
        .output(&lex_path)
        .write(&manifest_path(&a.out))?;
    println!("wrote {} examples to {}", examples.len(), a.out.display());
    println!("gazetteer: {}", gaz_path.display());
    println!("lexicon:   {}", lex_path.display());
    Ok(())
}

pub fn split_corpus(a: SplitArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("split-corpus");
    let examples = load_corpus(&a.corpus)?;
    let (train, test) = corpus::split_corpus(&examples, a.train_fraction, a.seed)?;
    ensure_parent(&a.train_out)?;
    ensure_parent(&a.test_out)?;
    save_corpus(&train, &a.train_out)?;
    save_corpus(&test, &a.test_out)?;
    manifest
        .seed(a.seed)
        .config(&serde_json::json!({ "train_fraction": a.train_fraction }))
        .input(&a.corpus)
        .output(&a.train_out)
        .output(&a.test_out)
        .write(&manifest_path(&a.train_out))?;
    println!("train: {} examples -> {}", train.len(), a.train_out.display());
    println!("test:  {} examples -> {}", test.len(), a.test_out.display());
    Ok(())
}

fn top_entities(examples: &[LabeledExample], gazetteer: &Gazetteer, k: usize) -> Result<TopEntities> {
    Ok(build_top_entities(examples.iter().map(|e| e.source.as_str()), gazetteer, k)?)
}

pub fn build_triplets(a: TripletArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("build-triplets");
    let examples = load_corpus(&a.corpus)?;
    let gazetteer = Gazetteer::load(&a.gazetteer)?;
    let lexicon = DefectLexicon::load(&a.lexicon)?;
    let top = top_entities(&examples, &gazetteer, a.top_k)?;
    let corrupter = Corrupter {
        tagger: &gazetteer,
        lexicon: &lexicon,
        top: &top,
        policy: a.policy,
    };
    let (triplets, skipped) = corrupter.build_triplets(&examples, a.seed);

    let skip_path = a.skip_log.clone().unwrap_or_else(|| sibling(&a.out, "skipped.jsonl"));
    ensure_parent(&a.out)?;
    ensure_parent(&skip_path)?;
    save_triplets(&triplets, &a.out)?;
    save_skips(&skipped, &skip_path)?;
    manifest
        .seed(a.seed)
        .config(&serde_json::json!({ "policy": a.policy, "top_k": a.top_k }))
        .input(&a.corpus)
        .input(&a.gazetteer)
        .input(&a.lexicon)
        .output(&a.out)
        .output(&skip_path)
        .write(&manifest_path(&a.out))?;

    let mut counts: BTreeMap<CorruptionKind, usize> = CorruptionKind::ALL.into_iter().map(|k| (k, 0)).collect();
    for t in &triplets {
        *counts.entry(t.corruption_kind).or_default() += 1;
    }
    for (kind, n) in &counts {
        println!("{:<16} {n}", kind.as_str());
    }
    println!("{:<16} {}", "skipped", skipped.len());
    println!("triplets -> {}", a.out.display());
    println!("skip log -> {}", skip_path.display());
    Ok(())
}

struct CliHooks<'a> {
    out: &'a Path,
    vocab: &'a Vocabulary,
    checkpoints: Vec<PathBuf>,
    resample: Option<Resampler>,
    log_every: usize,
}

struct Resampler {
    examples: Vec<LabeledExample>,
    gazetteer: Gazetteer,
    lexicon: DefectLexicon,
    top: TopEntities,
    seed: u64,
}

impl<T: Scalar> TrainHooks<Transformer<T>> for CliHooks<'_> {
    fn on_step(&mut self, r: &StepRecord) {
        if self.log_every > 0 && r.step.is_multiple_of(self.log_every) {
            eprintln!(
                "step {:>6}  total {:.4}  l_pos {:.4}  l_neg {:.4}  hinge {:.2}",
                r.step, r.total, r.l_pos, r.l_neg, r.hinge_frac
            );
        }
    }

    fn on_checkpoint(&mut self, step: usize, model: &Transformer<T>) -> faithsum_core::Result<()> {
        let path = self.out.join(format!("checkpoint-{step:06}.json"));
        Checkpoint::from_model(model, self.vocab).save(&path)?;
        self.checkpoints.push(path);
        Ok(())
    }

    fn resample(&mut self, epoch: usize) -> Option<TrainData> {
        let r = self.resample.as_ref()?;
        let corrupter = Corrupter {
            tagger: &r.gazetteer,
            lexicon: &r.lexicon,
            top: &r.top,
            policy: Default::default(),
        };
        let (triplets, plain) = corrupter.build_triplets(&r.examples, r.seed.wrapping_add(epoch as u64));
        Some(TrainData { triplets, plain })
    }
}

fn check_init_matches(model: &ModelConfig, config: &TrainConfig) -> Result<()> {
    let pairs = [
        ("d_model", model.d_model, config.d_model),
        ("n_heads", model.n_heads, config.n_heads),
        ("n_layers", model.n_layers, config.n_layers),
        ("ffn_dim", model.ffn_dim, config.ffn_dim),
        ("max_len", model.max_len, config.max_len),
    ];
    for (field, have, want) in pairs {
        if have != want {
            bail!(Error::validation(
                field,
                format!("initial checkpoint has {have}, config asks for {want}")
            ));
        }
    }
    Ok(())
}

fn vocabulary_for(data: &TrainData) -> Vocabulary {
    let mut texts: Vec<&str> = Vec::new();
    for t in &data.triplets {
        texts.extend([t.d.as_str(), &t.s_plus, &t.s_minus]);
    }
    for s in &data.plain {
        texts.extend([s.d.as_str(), &s.s_plus]);
    }
    Vocabulary::build(texts)
}

fn run_training<T: Scalar>(
    config: &TrainConfig,
    init: Option<&Checkpoint>,
    data: &TrainData,
    vocab: &Vocabulary,
    hooks: &mut CliHooks<'_>,
) -> Result<(Transformer<T>, trainer::TrainHistory)> {
    let mut model = match init {
        Some(c) => c.to_model::<T>()?,
        None => Transformer::<T>::new(config.model_config(vocab.len()))?,
    };
    let history = trainer::train(&mut model, data, vocab, config, hooks)?;
    Ok((model, history))
}

pub fn train(a: TrainArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("train");
    let mut config = TrainConfig::from_file(&a.config)?;
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    config.validate()?;
    manifest.input(&a.config).input(&a.triplets);

    let triplets = load_triplets(&a.triplets)?;
    let plain = match &a.skipped {
        Some(p) => {
            manifest.input(p);
            load_skips(p)?
        }
        None => Vec::new(),
    };
    let data = TrainData { triplets, plain };
    if data.is_empty() {
        bail!(Error::validation("triplets", "no training samples"));
    }

    let resample = match (&a.resample_corpus, config.resample_negatives) {
        (Some(corpus_path), true) => {
            let gaz_path = a.gazetteer.as_ref().context("--gazetteer is required with --resample-corpus")?;
            let lex_path = a.lexicon.as_ref().context("--lexicon is required with --resample-corpus")?;
            manifest.input(corpus_path).input(gaz_path).input(lex_path);
            let examples = load_corpus(corpus_path)?;
            let gazetteer = Gazetteer::load(gaz_path)?;
            let lexicon = DefectLexicon::load(lex_path)?;
            let top = top_entities(&examples, &gazetteer, faithsum_core::corruption::DEFAULT_TOP_K)?;
            Some(Resampler {
                examples,
                gazetteer,
                lexicon,
                top,
                seed: config.seed,
            })
        }
        (None, true) => bail!(Error::validation(
            "resample_negatives",
            "needs --resample-corpus, --gazetteer and --lexicon"
        )),
        (Some(_), false) => {
            eprintln!("warning: --resample-corpus ignored because resample_negatives is off");
            None
        }
        (None, false) => None,
    };

    let init = match &a.init {
        Some(path) => {
            manifest.input(path);
            let c = Checkpoint::load(path)?;
            check_init_matches(&c.model_config, &config)?;
            Some(c)
        }
        None => None,
    };

    fs::create_dir_all(&a.out).with_context(|| format!("creating {}", a.out.display()))?;
    let vocab = match &init {
        Some(c) => c.vocabulary.clone(),
        None => vocabulary_for(&data),
    };
    let steps_per_epoch = data.len().div_ceil(config.batch_size);
    let mut hooks = CliHooks {
        out: &a.out,
        vocab: &vocab,
        checkpoints: Vec::new(),
        resample,
        log_every: steps_per_epoch.max(1),
    };
    let (checkpoint, history) = match config.precision {
        Precision::F32 => {
            let (m, h) = run_training::<f32>(&config, init.as_ref(), &data, &vocab, &mut hooks)?;
            (Checkpoint::from_model(&m, &vocab), h)
        }
        Precision::F64 => {
            let (m, h) = run_training::<f64>(&config, init.as_ref(), &data, &vocab, &mut hooks)?;
            (Checkpoint::from_model(&m, &vocab), h)
        }
    };

    let model_path = a.out.join("model.json");
    let history_path = a.out.join("history.csv");
    let config_path = a.out.join("train_config.toml");
    checkpoint.save(&model_path)?;
    history.save(&history_path)?;
    write_atomic(&config_path, config.to_toml().as_bytes())?;
    manifest.seed(config.seed).config(&config);
    manifest.output(&model_path).output(&history_path).output(&config_path);
    for c in &hooks.checkpoints {
        manifest.output(c);
    }
    manifest.write(&a.out.join("manifest.json"))?;

    if let Some(last) = history.records.last() {
        println!(
            "trained {} steps: total {:.4}  l_pos {:.4}  l_neg {:.4}  hinge {:.2}",
            last.step, last.total, last.l_pos, last.l_neg, last.hinge_frac
        );
    }
    println!("model -> {}", model_path.display());
    Ok(())
}

fn evaluate_checkpoint<T: Scalar>(
    checkpoint: &Checkpoint,
    items: &[corpus::EvalItem],
    gazetteer: &Gazetteer,
    lexicon: &DefectLexicon,
) -> Result<EvalRun> {
    let model = checkpoint.to_model::<T>()?;
    Ok(evaluate_model(&model, &checkpoint.vocabulary, items, gazetteer, lexicon)?)
}

pub fn evaluate(a: EvaluateArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("evaluate");
    let checkpoint = Checkpoint::load(&a.checkpoint)?;
    let items = load_eval_items(&a.corpus)?;
    let gazetteer = Gazetteer::load(&a.gazetteer)?;
    let lexicon = DefectLexicon::load(&a.lexicon)?;
    let unlabeled = items.iter().filter(|i| i.gold.is_none()).count();
    if unlabeled > 0 {
        eprintln!(
            "warning: {unlabeled} of {} items carry no gold labels; consistency verdicts refused for them",
            items.len()
        );
    }
    let run = match checkpoint.precision {
        Precision::F32 => evaluate_checkpoint::<f32>(&checkpoint, &items, &gazetteer, &lexicon)?,
        Precision::F64 => evaluate_checkpoint::<f64>(&checkpoint, &items, &gazetteer, &lexicon)?,
    };
    ensure_parent(&a.out)?;
    let verdicts_path = sibling(&a.out, "verdicts.jsonl");
    run.save(&a.out)?;
    run.save_verdicts(&verdicts_path)?;
    manifest
        .input(&a.checkpoint)
        .input(&a.corpus)
        .input(&a.gazetteer)
        .input(&a.lexicon)
        .output(&a.out)
        .output(&verdicts_path)
        .write(&manifest_path(&a.out))?;

    let f = run.rouge.f1s();
    println!(
        "{} examples  ROUGE-1 {:.2}  ROUGE-2 {:.2}  ROUGE-L {:.2}",
        run.n_examples,
        100.0 * f[0],
        100.0 * f[1],
        100.0 * f[2]
    );
    if run.n_judged > 0 {
        let counts: Vec<String> = ConsistencyLabel::ALL
            .iter()
            .map(|l| format!("{} {}", l.as_str(), run.count(*l)))
            .collect();
        println!("verdicts: {}", counts.join("  "));
    }
    println!("evaluation -> {}", a.out.display());
    Ok(())
}

pub fn compare(a: CompareArgs) -> Result<()> {
    let mut manifest = ManifestBuilder::new("compare");
    let baseline = EvalRun::load(&a.baseline)?;
    let treated = EvalRun::load(&a.treated)?;
    let report = compare_models(&baseline, &treated)?;
    ensure_parent(&a.out)?;
    let table_path = sibling(&a.out, "txt");
    report.save(&a.out)?;
    fs::write(&table_path, report.to_table()).with_context(|| format!("writing {}", table_path.display()))?;
    manifest
        .input(&a.baseline)
        .input(&a.treated)
        .output(&a.out)
        .output(&table_path)
        .write(&manifest_path(&a.out))?;
    print!("{}", report.to_table());
    Ok(())
}
