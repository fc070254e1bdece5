use std::fmt;

use serde::{Deserialize, Serialize};

use crate::corpus::{DefectPolarity, EvalItem, LabeledExample};
use crate::corruption::{DefectLexicon, EntityTagger};
use crate::error::{Error, Result};
use crate::text::word_spans;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ConsistencyLabel {
    Consistent,
    /// Wrong entity named as the subject of the complaint.
    Wed,
    /// Defect description with the wrong polarity.
    Ipd,
    Other,
}

impl ConsistencyLabel {
    pub const ALL: [ConsistencyLabel; 4] = [
        ConsistencyLabel::Consistent,
        ConsistencyLabel::Wed,
        ConsistencyLabel::Ipd,
        ConsistencyLabel::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ConsistencyLabel::Consistent => "CONSISTENT",
            ConsistencyLabel::Wed => "WED",
            ConsistencyLabel::Ipd => "IPD",
            ConsistencyLabel::Other => "OTHER",
        }
    }

    pub fn is_consistent(self) -> bool {
        self == ConsistencyLabel::Consistent
    }
}

impl fmt::Display for ConsistencyLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConsistencyVerdict {
    pub label: ConsistencyLabel,
    pub evidence: String,
}

impl ConsistencyVerdict {
    fn new(label: ConsistencyLabel, evidence: impl Into<String>) -> Self {
        Self {
            label,
            evidence: evidence.into(),
        }
    }
}

fn preceded_by_not(text: &str, start: usize) -> bool {
    word_spans(&text[..start]).last().is_some_and(|&(s, e)| {
        text[s..e].eq_ignore_ascii_case("not") && text[e..start].chars().all(char::is_whitespace)
    })
}

/// Judges a generated summary against the gold labels of `example`.
///
/// Rules, first match wins:
/// * WED: the first entity named is a distractor, or the primary entity is
///   absent while a distractor is named.
/// * IPD: the gold defect phrase (or its antonym) appears and its effective
///   polarity, after an immediately preceding `not` and antonym flips,
///   contradicts the gold polarity.
/// * OTHER: the primary entity is absent and either no gold defect phrase
///   appears or the summary names an entity the document does not list.
/// * Otherwise CONSISTENT.
pub fn classify_consistency(
    generated: &str,
    example: &LabeledExample,
    tagger: &impl EntityTagger,
    lexicon: &DefectLexicon,
) -> ConsistencyVerdict {
    use ConsistencyLabel::*;

    let primary = example.primary_entity.to_lowercase();
    let is_distractor = |s: &str| example.distractors.iter().any(|(d, _)| d.to_lowercase() == s);
    let mentions: Vec<String> = tagger.tag(generated).into_iter().map(|s| s.surface.to_lowercase()).collect();
    let has_primary = mentions.contains(&primary);

    if let Some(subject) = mentions.first() {
        if *subject != primary && is_distractor(subject) {
            return ConsistencyVerdict::new(Wed, format!("subject `{subject}` instead of `{primary}`"));
        }
    }
    if !has_primary {
        if let Some(d) = mentions.iter().find(|m| is_distractor(m)) {
            return ConsistencyVerdict::new(Wed, format!("names `{d}` but not `{primary}`"));
        }
    }

    let gold = example.defect_phrase.to_lowercase();
    let antonym = lexicon.antonym(&gold).map(str::to_string);
    let found = lexicon
        .find(generated)
        .into_iter()
        .find(|m| m.phrase == gold || Some(&m.phrase) == antonym.as_ref());
    if let Some(m) = &found {
        let negated = preceded_by_not(generated, m.start) != (m.phrase != gold);
        let polarity = if negated {
            DefectPolarity::Negated
        } else {
            DefectPolarity::Affirmed
        };
        if polarity != example.defect_polarity {
            let shown = if preceded_by_not(generated, m.start) {
                format!("not {}", m.phrase)
            } else {
                m.phrase.clone()
            };
            return ConsistencyVerdict::new(
                Ipd,
                format!("`{shown}` reads as {polarity:?}, gold is {:?} `{gold}`", example.defect_polarity),
            );
        }
    }

    if !has_primary {
        if found.is_none() {
            return ConsistencyVerdict::new(Other, format!("neither `{primary}` nor `{gold}` found"));
        }
        if let Some(m) = mentions.first() {
            return ConsistencyVerdict::new(Other, format!("names `{m}`, which the document does not list"));
        }
    }
    let evidence = match (&found, has_primary) {
        (Some(m), true) => format!("`{primary}` with `{}`", m.phrase),
        (None, true) => format!("`{primary}` without a defect phrase"),
        (_, false) => format!("no entity named; `{gold}` polarity matches"),
    };
    ConsistencyVerdict::new(Consistent, evidence)
}

/// Like [`classify_consistency`], but refuses items without gold labels.
pub fn classify_item(
    generated: &str,
    item: &EvalItem,
    tagger: &impl EntityTagger,
    lexicon: &DefectLexicon,
) -> Result<ConsistencyVerdict> {
    let example = item.labeled().ok_or_else(|| Error::Unlabeled(item.id.clone()))?;
    Ok(classify_consistency(generated, &example, tagger, lexicon))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{generate_corpus, CorpusSpec, EntityType};
    use crate::corruption::Gazetteer;

    fn setup() -> (Gazetteer, DefectLexicon) {
        let g = Gazetteer::new(
            ["mouse", "laptop", "phone", "tv"].map(|s| (s, EntityType::Product)),
        )
        .unwrap();
        let l = DefectLexicon::new(["scratched", "defective", "broken"], [("opened", "sealed")]).unwrap();
        (g, l)
    }

    fn example(primary: &str, distractor: &str, defect: &str, polarity: DefectPolarity) -> LabeledExample {
        LabeledExample {
            id: "x".into(),
            source: String::new(),
            reference: String::new(),
            primary_entity: primary.into(),
            entity_type: EntityType::Product,
            distractors: vec![(distractor.into(), EntityType::Product)],
            defect_phrase: defect.into(),
            defect_polarity: polarity,
        }
    }

    fn label(s: &str, ex: &LabeledExample) -> ConsistencyLabel {
        let (g, l) = setup();
        classify_consistency(s, ex, &g, &l).label
    }

    #[test]
    fn wrong_subject_is_wed() {
        let ex = example("mouse", "laptop", "scratched", DefectPolarity::Affirmed);
        assert_eq!(label("The laptop came with many scratches", &ex), ConsistencyLabel::Wed);
        assert_eq!(label("The laptop and the mouse are scratched", &ex), ConsistencyLabel::Wed);
    }

    #[test]
    fn wrong_polarity_is_ipd() {
        let ex = example("phone", "tv", "defective", DefectPolarity::Negated);
        assert_eq!(
            label("This phone is defective and the serial number doesn't match", &ex),
            ConsistencyLabel::Ipd
        );
        assert_eq!(label("This phone is not defective", &ex), ConsistencyLabel::Consistent);
    }

    #[test]
    fn antonym_flips_polarity() {
        let ex = example("phone", "tv", "opened", DefectPolarity::Affirmed);
        assert_eq!(label("The phone is sealed.", &ex), ConsistencyLabel::Ipd);
        assert_eq!(label("The phone is not sealed.", &ex), ConsistencyLabel::Consistent);
        assert_eq!(label("The phone is not opened.", &ex), ConsistencyLabel::Ipd);
    }

    #[test]
    fn wed_takes_precedence_over_ipd() {
        let ex = example("phone", "tv", "broken", DefectPolarity::Affirmed);
        assert_eq!(label("The tv is not broken", &ex), ConsistencyLabel::Wed);
    }

    #[test]
    fn missing_everything_is_other() {
        let ex = example("phone", "tv", "broken", DefectPolarity::Affirmed);
        assert_eq!(label("Arrived late.", &ex), ConsistencyLabel::Other);
        assert_eq!(label("The laptop is broken.", &ex), ConsistencyLabel::Other);
        assert_eq!(label("It is broken.", &ex), ConsistencyLabel::Consistent);
        assert_eq!(label("The phone arrived.", &ex), ConsistencyLabel::Consistent);
    }

    #[test]
    fn unlabeled_items_are_refused() {
        let (g, l) = setup();
        let item = EvalItem {
            id: "u1".into(),
            source: "s".into(),
            reference: "r".into(),
            gold: None,
        };
        assert!(matches!(classify_item("x", &item, &g, &l), Err(Error::Unlabeled(id)) if id == "u1"));
    }

    #[test]
    fn references_are_self_consistent() {
        let spec = CorpusSpec {
            n_examples: 2000,
            seed: 11,
            ..CorpusSpec::default()
        };
        let g = Gazetteer::new(spec.entity_pool.iter().map(|(s, t)| (s.as_str(), *t))).unwrap();
        let l = DefectLexicon::from_pool(&spec.defect_pool).unwrap();
        for ex in generate_corpus(&spec).unwrap() {
            let v = classify_consistency(&ex.reference, &ex, &g, &l);
            assert_eq!(v.label, ConsistencyLabel::Consistent, "{}: {}", ex.reference, v.evidence);
        }
    }
}
