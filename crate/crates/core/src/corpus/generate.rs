use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CorpusSpec, DefectPolarity, EntityType, LabeledExample};
use crate::error::Result;
use crate::text::tokenize;

/// Filler sentences are dropped from documents longer than this.
const MAX_SOURCE_TOKENS: usize = 60;

const OPENERS: &[&str] = &[
    "I have been a loyal customer for years.",
    "This is my second order this month.",
    "I usually love shopping here.",
    "I placed the order last week.",
    "Honestly I expected better.",
];

const CLOSERS: &[&str] = &[
    "Please help me with a refund.",
    "I want a replacement as soon as possible.",
    "Very disappointed.",
    "I expect a quick answer.",
];

/// Ordering sentence that introduces the primary item alongside a distractor.
const INTROS: &[&str] = &[
    "I ordered this {P} for my {D}.",
    "I bought this {P} to go with my {D}.",
];

const AFFIRMED_EXPLICIT: &[&str] = &[
    "However, when I received the {P}, it was {X}.",
    "But the {P} is clearly {X}.",
    "When the box arrived, the {P} was {X}.",
    "Sadly the {P} arrived {X}.",
    "The {P} I got is {X}.",
];

const AFFIRMED_PRONOUN: &[&str] = &[
    "However, when I received it, it was {X}.",
    "But when it arrived, it was {X}.",
];

const NEGATED_EXPLICIT: &[&str] = &[
    "The {P} is not {X}, but {C}.",
    "I checked the {P} and it is not {X}, but {C}.",
    "Although the box was wet, the {P} inside is not {X}. Still, {C}.",
];

const NEGATED_PRONOUN: &[&str] = &[
    "It is not {X}, but {C}.",
    "I checked it and it is not {X}, but {C}.",
];

/// (complaint as written in feedback, complaint as summarized)
const COMPLAINTS: &[(&str, &str)] = &[
    ("it arrived two weeks late", "arrived late"),
    ("the seller never answered my messages", "the seller never replied"),
    ("the color is different from the picture", "the color is wrong"),
    ("the manual was missing", "the manual was missing"),
    (
        "the serial number doesn't match the one on the website",
        "the serial number doesn't match",
    ),
];

/// Summary wordings are picked independently of the document, like the
/// stylistic variation between human-written summaries.
const REFERENCE_AFFIRMED: &[&str] = &[
    "The {P} delivered is {X}.",
    "The {P} arrived {X}.",
    "The {P} is {X}.",
];

const REFERENCE_NEGATED: &[&str] = &["The {P} is not {X} but {C}."];

const DISTRACTOR_NEUTRAL: &[&str] = &[
    "I also bought a {D} from this store and it works fine.",
    "The {D} I got last time was great.",
    "My old {D} still works well.",
    "I have bought a {D} here many times, and it was always good.",
    "The {D} from the same order is fine.",
];

const SHORTEST_DISTRACTOR: &str = "My old {D} still works well.";

/// Distractor sentences that reuse the gold defect phrase, with either polarity.
const DISTRACTOR_TRAP_AFFIRMED: &[&str] = &["The {D} was {X} last time, but they replaced it."];
const DISTRACTOR_TRAP_NEGATED: &[&str] = &["Luckily the {D} is not {X}."];

fn fill(template: &str, primary: &str, distractor: &str, defect: &str, complaint: &str) -> String {
    template
        .replace("{P}", primary)
        .replace("{D}", distractor)
        .replace("{X}", defect)
        .replace("{C}", complaint)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, xs: &'a [T]) -> &'a T {
    xs.choose(rng).expect("template tables are non-empty")
}

fn sample_distractors(
    spec: &CorpusSpec,
    primary: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<(String, EntityType)> {
    let ptype = spec.entity_pool[primary].1;
    let mut same: Vec<usize> = (0..spec.entity_pool.len())
        .filter(|&i| i != primary && spec.entity_pool[i].1 == ptype)
        .collect();
    same.shuffle(rng);
    let mut chosen = Vec::with_capacity(count);
    // The first distractor shares the primary's type when the pool allows it,
    // so an in-document replacement candidate exists.
    if let Some(&first) = same.first() {
        chosen.push(first);
    }
    let mut rest: Vec<usize> = (0..spec.entity_pool.len())
        .filter(|&i| i != primary && !chosen.contains(&i))
        .collect();
    rest.shuffle(rng);
    chosen.extend(rest.into_iter().take(count - chosen.len()));
    chosen.truncate(count);
    chosen.into_iter().map(|i| spec.entity_pool[i].clone()).collect()
}

fn generate_one(spec: &CorpusSpec, index: usize) -> LabeledExample {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(index as u64);

    let primary_idx = rng.gen_range(0..spec.entity_pool.len());
    let (primary, entity_type) = spec.entity_pool[primary_idx].clone();
    let defect = pick(&mut rng, &spec.defect_pool).phrase.clone();
    let polarity = if rng.gen_bool(spec.negated_fraction) {
        DefectPolarity::Negated
    } else {
        DefectPolarity::Affirmed
    };
    let [lo, hi] = spec.distractor_range;
    let n_distractors = rng.gen_range(lo..=hi);
    let distractors = sample_distractors(spec, primary_idx, n_distractors, &mut rng);
    let &(complaint_long, complaint_short) = pick(&mut rng, COMPLAINTS);

    let with_intro = rng.gen_bool(0.5);
    let pronoun = with_intro && rng.gen_bool(0.5);
    let defect_template = match (polarity, pronoun) {
        (DefectPolarity::Affirmed, false) => pick(&mut rng, AFFIRMED_EXPLICIT),
        (DefectPolarity::Affirmed, true) => pick(&mut rng, AFFIRMED_PRONOUN),
        (DefectPolarity::Negated, false) => pick(&mut rng, NEGATED_EXPLICIT),
        (DefectPolarity::Negated, true) => pick(&mut rng, NEGATED_PRONOUN),
    };

    let mut core = Vec::new();
    let mut remaining = distractors.iter().map(|(d, _)| d.as_str());
    if with_intro {
        let d = remaining.next().expect("at least one distractor");
        core.push(fill(pick(&mut rng, INTROS), &primary, d, &defect, complaint_long));
    }
    core.push(fill(defect_template, &primary, "", &defect, complaint_long));

    // (distractor, sentence) pairs placed before and after the core sentences.
    let mut before = Vec::new();
    let mut after = Vec::new();
    for d in remaining {
        let trap = rng.gen_bool(0.3);
        let template = match (trap, rng.gen_bool(0.5)) {
            (true, true) => pick(&mut rng, DISTRACTOR_TRAP_AFFIRMED),
            (true, false) => pick(&mut rng, DISTRACTOR_TRAP_NEGATED),
            (false, _) => pick(&mut rng, DISTRACTOR_NEUTRAL),
        };
        let sentence = fill(template, &primary, d, &defect, complaint_long);
        if rng.gen_bool(0.5) {
            before.push((d, sentence));
        } else {
            after.push((d, sentence));
        }
    }

    let mut opener = rng
        .gen_bool(0.5)
        .then(|| pick(&mut rng, OPENERS).to_string());
    let mut closer = rng
        .gen_bool(0.4)
        .then(|| pick(&mut rng, CLOSERS).to_string());
    let assemble = |opener: &Option<String>,
                    before: &[(&str, String)],
                    after: &[(&str, String)],
                    closer: &Option<String>| {
        opener
            .iter()
            .chain(before.iter().map(|(_, s)| s))
            .chain(&core)
            .chain(after.iter().map(|(_, s)| s))
            .chain(closer.iter())
            .cloned()
            .collect::<Vec<_>>()
            .join(" ")
    };
    let mut source = assemble(&opener, &before, &after, &closer);
    if tokenize(&source).len() > MAX_SOURCE_TOKENS {
        opener = None;
        source = assemble(&opener, &before, &after, &closer);
    }
    if tokenize(&source).len() > MAX_SOURCE_TOKENS {
        closer = None;
        source = assemble(&opener, &before, &after, &closer);
    }
    if tokenize(&source).len() > MAX_SOURCE_TOKENS {
        for (d, s) in before.iter_mut().chain(after.iter_mut()) {
            *s = fill(SHORTEST_DISTRACTOR, &primary, d, &defect, complaint_long);
        }
        source = assemble(&opener, &before, &after, &closer);
    }

    let reference_template = match polarity {
        DefectPolarity::Affirmed => pick(&mut rng, REFERENCE_AFFIRMED),
        DefectPolarity::Negated => pick(&mut rng, REFERENCE_NEGATED),
    };
    let reference = fill(reference_template, &primary, "", &defect, complaint_short);

    LabeledExample {
        id: format!("ex-{index:06}"),
        source,
        reference,
        primary_entity: primary,
        entity_type,
        distractors,
        defect_phrase: defect,
        defect_polarity: polarity,
    }
}

/// Generates `spec.n_examples` examples. Example `i` depends only on
/// `(spec, i)`, so the output is reproducible and order-independent.
pub fn generate_corpus(spec: &CorpusSpec) -> Result<Vec<LabeledExample>> {
    spec.validate()?;
    Ok((0..spec.n_examples).map(|i| generate_one(spec, i)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use std::collections::HashSet;

    #[test]
    fn is_deterministic() {
        let spec = CorpusSpec {
            n_examples: 3,
            seed: 7,
            ..CorpusSpec::default()
        };
        let a = serde_json::to_string(&generate_corpus(&spec).unwrap()).unwrap();
        let b = serde_json::to_string(&generate_corpus(&spec).unwrap()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn primaries_come_from_closed_pool() {
        let spec = CorpusSpec {
            n_examples: 40,
            entity_pool: vec![
                ("mouse".into(), EntityType::Product),
                ("laptop".into(), EntityType::Product),
            ],
            distractor_range: [1, 1],
            ..CorpusSpec::default()
        };
        for ex in generate_corpus(&spec).unwrap() {
            assert!(ex.primary_entity == "mouse" || ex.primary_entity == "laptop");
        }
    }

    #[test]
    fn zero_negated_fraction() {
        let spec = CorpusSpec {
            n_examples: 200,
            negated_fraction: 0.0,
            ..CorpusSpec::default()
        };
        assert!(generate_corpus(&spec)
            .unwrap()
            .iter()
            .all(|e| e.defect_polarity == DefectPolarity::Affirmed));
    }

    #[test]
    fn every_example_satisfies_invariants() {
        let spec = CorpusSpec {
            n_examples: 2000,
            seed: 3,
            ..CorpusSpec::default()
        };
        let corpus = generate_corpus(&spec).unwrap();
        let mut ids = HashSet::new();
        for ex in &corpus {
            ex.check_invariants().unwrap_or_else(|e| panic!("{}: {e}", ex.id));
            assert!(!ex.distractors.is_empty());
            assert!(ids.insert(ex.id.clone()), "duplicate id {}", ex.id);
        }
        let negated = corpus
            .iter()
            .filter(|e| e.defect_polarity == DefectPolarity::Negated)
            .count();
        assert!((600..1000).contains(&negated), "negated count {negated}");
    }

    #[test]
    fn invalid_spec_is_rejected() {
        let spec = CorpusSpec {
            negated_fraction: 1.5,
            ..CorpusSpec::default()
        };
        assert!(matches!(
            generate_corpus(&spec),
            Err(Error::Validation { field, .. }) if field == "negated_fraction"
        ));
    }
}
