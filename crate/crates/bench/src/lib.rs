//! Shared fixtures for the benchmarks.

use faithsum_core::corpus::{generate_corpus, CorpusSpec, LabeledExample};
use faithsum_core::corruption::{build_top_entities, DefectLexicon, Gazetteer, TopEntities, DEFAULT_TOP_K};
use faithsum_core::model::{ModelConfig, Transformer};
use faithsum_core::text::Vocabulary;

pub struct Fixture {
    pub spec: CorpusSpec,
    pub corpus: Vec<LabeledExample>,
    pub gazetteer: Gazetteer,
    pub lexicon: DefectLexicon,
    pub top: TopEntities,
    pub vocab: Vocabulary,
}

impl Fixture {
    pub fn new(n_examples: usize) -> Self {
        let spec = CorpusSpec {
            n_examples,
            ..CorpusSpec::default()
        };
        let corpus = generate_corpus(&spec).expect("default spec is valid");
        let gazetteer = Gazetteer::new(spec.entity_pool.iter().map(|(s, t)| (s.as_str(), *t))).expect("gazetteer");
        let lexicon = DefectLexicon::from_pool(&spec.defect_pool).expect("lexicon");
        let top = build_top_entities(corpus.iter().map(|e| e.source.as_str()), &gazetteer, DEFAULT_TOP_K)
            .expect("non-empty corpus");
        let vocab = Vocabulary::build(corpus.iter().flat_map(|e| [e.source.as_str(), e.reference.as_str()]));
        Self {
            spec,
            corpus,
            gazetteer,
            lexicon,
            top,
            vocab,
        }
    }

    /// The experiment-sized model.
    pub fn model(&self) -> Transformer<f32> {
        Transformer::new(ModelConfig {
            vocab_size: self.vocab.len(),
            ..ModelConfig::default()
        })
        .expect("valid config")
    }
}
