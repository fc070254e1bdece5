//! Corrupted-summary construction: entity swaps and defect-description flips.

mod corrupt;
mod gazetteer;
mod lexicon;
mod top;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use corrupt::{
    corrupt_defect_description, corrupt_entity, swap_antonym, toggle_negation, Corruption, CorruptionKind, Edit,
    NoCandidate, ReplacementOrigin,
};
pub use gazetteer::{tag_entities, EntitySpan, EntityTagger, Gazetteer};
pub use lexicon::{DefectLexicon, DefectMatch};
pub use top::{build_top_entities, TopEntities, DEFAULT_TOP_K};

use crate::corpus::io::{read_jsonl, write_jsonl};
use crate::corpus::LabeledExample;
use crate::error::{Error, Result};

/// A training triplet: document, faithful summary, corrupted summary.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Triplet {
    pub id: String,
    pub d: String,
    pub s_plus: String,
    pub s_minus: String,
    pub corruption_kind: CorruptionKind,
    pub edit: Edit,
}

impl Triplet {
    /// Checks that `s_minus` is `s_plus` with exactly the recorded edit applied.
    pub fn check(&self) -> Result<()> {
        if self.s_minus == self.s_plus {
            return Err(Error::Contract(format!("{}: s_minus equals s_plus", self.id)));
        }
        if self.edit.apply(&self.s_plus)? != self.s_minus {
            return Err(Error::Contract(format!("{}: edit does not reproduce s_minus", self.id)));
        }
        Ok(())
    }
}

/// A sample that received no corruption.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SkipRecord {
    pub id: String,
    pub d: String,
    pub s_plus: String,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Policy {
    EntityOnly,
    DefectOnly,
    #[default]
    RandomEither,
}

impl Policy {
    pub fn as_str(self) -> &'static str {
        match self {
            Policy::EntityOnly => "ENTITY_ONLY",
            Policy::DefectOnly => "DEFECT_ONLY",
            Policy::RandomEither => "RANDOM_EITHER",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Policy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().replace('-', "_").as_str() {
            "ENTITY_ONLY" => Ok(Policy::EntityOnly),
            "DEFECT_ONLY" => Ok(Policy::DefectOnly),
            "RANDOM_EITHER" => Ok(Policy::RandomEither),
            _ => Err(format!(
                "unknown policy `{s}` (expected ENTITY_ONLY, DEFECT_ONLY or RANDOM_EITHER)"
            )),
        }
    }
}

/// Everything needed to corrupt summaries of one corpus.
pub struct Corrupter<'a, T: EntityTagger> {
    pub tagger: &'a T,
    pub lexicon: &'a DefectLexicon,
    pub top: &'a TopEntities,
    pub policy: Policy,
}

impl<T: EntityTagger> Corrupter<'_, T> {
    fn entity<R: Rng + ?Sized>(&self, ex: &LabeledExample, rng: &mut R) -> std::result::Result<Corruption, NoCandidate> {
        corrupt_entity(&ex.reference, &ex.source, self.tagger, self.top, rng)
    }

    fn defect<R: Rng + ?Sized>(&self, ex: &LabeledExample, rng: &mut R) -> std::result::Result<Corruption, NoCandidate> {
        corrupt_defect_description(&ex.reference, self.lexicon, rng)
    }

    /// Corrupts the reference summary of `ex`, or explains why it cannot.
    pub fn make_triplet<R: Rng + ?Sized>(
        &self,
        ex: &LabeledExample,
        rng: &mut R,
    ) -> std::result::Result<Triplet, SkipRecord> {
        let outcome = match self.policy {
            Policy::EntityOnly => self.entity(ex, rng).map_err(|e| format!("entity: {e}")),
            Policy::DefectOnly => self.defect(ex, rng).map_err(|e| format!("defect: {e}")),
            Policy::RandomEither => {
                let entity_first = rng.gen_bool(0.5);
                let first = if entity_first { self.entity(ex, rng) } else { self.defect(ex, rng) };
                match first {
                    Ok(c) => Ok(c),
                    Err(e1) => {
                        let second = if entity_first { self.defect(ex, rng) } else { self.entity(ex, rng) };
                        second.map_err(|e2| {
                            let (ent, def) = if entity_first { (e1, e2) } else { (e2, e1) };
                            format!("entity: {ent}; defect: {def}")
                        })
                    }
                }
            }
        };
        match outcome {
            Ok(c) => Ok(Triplet {
                id: ex.id.clone(),
                d: ex.source.clone(),
                s_plus: ex.reference.clone(),
                s_minus: c.s_minus,
                corruption_kind: c.kind,
                edit: c.edit,
            }),
            Err(reason) => Err(SkipRecord {
                id: ex.id.clone(),
                d: ex.source.clone(),
                s_plus: ex.reference.clone(),
                reason,
            }),
        }
    }

    /// Corrupts every example. Example `i` draws from its own stream of
    /// `seed`, so results do not depend on order or on other examples.
    pub fn build_triplets(&self, examples: &[LabeledExample], seed: u64) -> (Vec<Triplet>, Vec<SkipRecord>) {
        let mut triplets = Vec::new();
        let mut skipped = Vec::new();
        for (i, ex) in examples.iter().enumerate() {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            match self.make_triplet(ex, &mut rng) {
                Ok(t) => triplets.push(t),
                Err(s) => skipped.push(s),
            }
        }
        (triplets, skipped)
    }
}

const TRIPLET_KEYS: [&str; 6] = ["id", "d", "s_plus", "s_minus", "corruption_kind", "edit"];
const SKIP_KEYS: [&str; 4] = ["id", "d", "s_plus", "reason"];

pub fn save_triplets(triplets: &[Triplet], path: &Path) -> Result<()> {
    write_jsonl(path, triplets)
}

/// Loads triplets and re-checks each one.
pub fn load_triplets(path: &Path) -> Result<Vec<Triplet>> {
    let triplets: Vec<Triplet> = read_jsonl(path, &TRIPLET_KEYS)?;
    for t in &triplets {
        t.check()?;
    }
    Ok(triplets)
}

pub fn save_skips(skips: &[SkipRecord], path: &Path) -> Result<()> {
    write_jsonl(path, skips)
}

pub fn load_skips(path: &Path) -> Result<Vec<SkipRecord>> {
    read_jsonl(path, &SKIP_KEYS)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusSpec, DefectPolarity, EntityType};
    use proptest::prelude::*;

    fn milk_example() -> LabeledExample {
        LabeledExample {
            id: "t2".into(),
            source: "I've bought cheese from this store for many times, and they were very good. \
                     Then I ordered several bottles of milk. But they are clearly expired."
                .into(),
            reference: "Milk delivered is expired.".into(),
            primary_entity: "milk".into(),
            entity_type: EntityType::Product,
            distractors: vec![("cheese".into(), EntityType::Product)],
            defect_phrase: "expired".into(),
            defect_polarity: DefectPolarity::Affirmed,
        }
    }

    fn resources() -> (Gazetteer, DefectLexicon) {
        let gaz = Gazetteer::new(["milk", "cheese", "eggs"].map(|s| (s, EntityType::Product))).unwrap();
        let lex = DefectLexicon::new(["broken", "expired"], [("bad", "good")]).unwrap();
        (gaz, lex)
    }

    #[test]
    fn table_example_entity_only() {
        let (gaz, lex) = resources();
        let top = TopEntities::default();
        let c = Corrupter {
            tagger: &gaz,
            lexicon: &lex,
            top: &top,
            policy: Policy::EntityOnly,
        };
        let t = c.make_triplet(&milk_example(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(t.corruption_kind, CorruptionKind::EntitySwap);
        assert_eq!(t.s_minus, "Cheese delivered is expired.");
        t.check().unwrap();
    }

    #[test]
    fn random_either_falls_back_and_skips() {
        let (gaz, lex) = resources();
        let top = TopEntities::default();
        let c = Corrupter {
            tagger: &gaz,
            lexicon: &lex,
            top: &top,
            policy: Policy::RandomEither,
        };
        let mut ex = milk_example();
        ex.reference = "Milk delivered late.".into();
        for seed in 0..16 {
            let t = c.make_triplet(&ex, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(t.corruption_kind, CorruptionKind::EntitySwap);
        }
        ex.reference = "Arrived late.".into();
        let skip = c.make_triplet(&ex, &mut ChaCha8Rng::seed_from_u64(0)).unwrap_err();
        assert!(skip.reason.contains("entity") && skip.reason.contains("defect"));
    }

    #[test]
    fn policy_parses() {
        assert_eq!("entity-only".parse::<Policy>(), Ok(Policy::EntityOnly));
        assert_eq!("RANDOM_EITHER".parse::<Policy>(), Ok(Policy::RandomEither));
        assert!("both".parse::<Policy>().is_err());
    }

    #[test]
    fn triplets_round_trip_through_jsonl() {
        let (gaz, lex) = resources();
        let top = TopEntities::default();
        let c = Corrupter {
            tagger: &gaz,
            lexicon: &lex,
            top: &top,
            policy: Policy::RandomEither,
        };
        let (ts, skips) = c.build_triplets(&[milk_example()], 3);
        assert!(skips.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.jsonl");
        save_triplets(&ts, &path).unwrap();
        assert_eq!(load_triplets(&path).unwrap(), ts);
        let line = std::fs::read_to_string(&path).unwrap();
        let v: serde_json::Value = serde_json::from_str(line.lines().next().unwrap()).unwrap();
        let mut keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        keys.sort();
        assert_eq!(keys, ["corruption_kind", "d", "edit", "id", "s_minus", "s_plus"]);
    }

    fn corpus_setup(seed: u64) -> (Vec<LabeledExample>, Gazetteer, DefectLexicon, TopEntities) {
        let spec = CorpusSpec {
            n_examples: 60,
            seed,
            ..CorpusSpec::default()
        };
        let corpus = generate_corpus(&spec).unwrap();
        let gaz = Gazetteer::new(spec.entity_pool.iter().map(|(s, t)| (s.as_str(), *t))).unwrap();
        let lex = DefectLexicon::from_pool(&spec.defect_pool).unwrap();
        let top = build_top_entities(corpus.iter().map(|e| e.source.as_str()), &gaz, DEFAULT_TOP_K).unwrap();
        (corpus, gaz, lex, top)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn every_triplet_is_one_valid_edit(corpus_seed in 0u64..1000, seed in any::<u64>(), policy_idx in 0usize..3) {
            let policy = [Policy::EntityOnly, Policy::DefectOnly, Policy::RandomEither][policy_idx];
            let (corpus, gaz, lex, top) = corpus_setup(corpus_seed);
            let c = Corrupter { tagger: &gaz, lexicon: &lex, top: &top, policy };
            let (ts, _) = c.build_triplets(&corpus, seed);
            for t in &ts {
                let ex = corpus.iter().find(|e| e.id == t.id).unwrap();
                prop_assert!(t.check().is_ok());
                prop_assert_eq!(&t.d, &ex.source);
                if t.corruption_kind == CorruptionKind::EntitySwap {
                    let orig = gaz.entity_type(&t.edit.original);
                    let repl = gaz.entity_type(&t.edit.replacement);
                    prop_assert!(orig.is_some());
                    prop_assert_eq!(orig, repl);
                    let in_doc = tag_entities(&t.d, &gaz)
                        .iter()
                        .any(|s| s.surface.eq_ignore_ascii_case(&t.edit.replacement));
                    prop_assert!(in_doc || top.contains(&t.edit.replacement, repl.unwrap()));
                }
            }
            let again = c.build_triplets(&corpus, seed);
            prop_assert_eq!(again.0, ts);
        }

        #[test]
        fn negation_toggle_is_an_involution(words in proptest::collection::vec("[a-z]{1,6}", 0..5), cap in any::<bool>(), neg in any::<bool>()) {
            let lex = DefectLexicon::new(["broken"], []).unwrap();
            let mut s = words.join(" ");
            let phrase = if neg { "not broken" } else { "broken" };
            if !s.is_empty() { s.push(' '); }
            s.push_str(phrase);
            s.push_str(" today.");
            if cap {
                s = {
                    let mut c = s.chars();
                    let first = c.next().unwrap().to_uppercase().collect::<String>();
                    first + c.as_str()
                };
            }
            let m = lex.find(&s).remove(0);
            let once = toggle_negation(&s, &m);
            let m2 = lex.find(&once.s_minus).remove(0);
            let twice = toggle_negation(&once.s_minus, &m2);
            prop_assert_ne!(&once.s_minus, &s);
            prop_assert_eq!(twice.s_minus, s);
        }

        #[test]
        fn antonym_swap_twice_restores(prefix in "[a-z ]{0,12}", idx in 0usize..3) {
            let pairs = [("bad", "good"), ("opened", "sealed"), ("dirty", "clean")];
            let lex = DefectLexicon::new([], pairs).unwrap();
            let s = format!("{prefix} {} box", pairs[idx].0);
            let m = lex.find(&s).remove(0);
            let once = swap_antonym(&s, &m, lex.antonym(&m.phrase).unwrap());
            prop_assert_eq!(lex.antonym(pairs[idx].1), Some(pairs[idx].0));
            let m2 = lex.find(&once.s_minus).remove(0);
            let twice = swap_antonym(&once.s_minus, &m2, lex.antonym(&m2.phrase).unwrap());
            prop_assert_eq!(twice.s_minus, s);
        }
    }
}
