use std::collections::HashMap;

use super::gazetteer::EntityTagger;
use crate::corpus::EntityType;
use crate::error::{Error, Result};

pub const DEFAULT_TOP_K: usize = 50;

/// Most frequent entities of a corpus, by descending count.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TopEntities {
    pub ranked: Vec<(String, EntityType, usize)>,
}

impl TopEntities {
    pub fn of_type(&self, ty: EntityType) -> impl Iterator<Item = &str> {
        self.ranked
            .iter()
            .filter(move |(_, t, _)| *t == ty)
            .map(|(s, _, _)| s.as_str())
    }

    pub fn contains(&self, surface: &str, ty: EntityType) -> bool {
        let surface = surface.to_lowercase();
        self.ranked.iter().any(|(s, t, _)| *s == surface && *t == ty)
    }
}

/// Counts entity mentions (case-folded) over all `documents`. Ties break by
/// surface so the ranking is deterministic.
pub fn build_top_entities<'a, I>(documents: I, tagger: &impl EntityTagger, k: usize) -> Result<TopEntities>
where
    I: IntoIterator<Item = &'a str>,
{
    if k < 1 {
        return Err(Error::validation("k", "must be at least 1"));
    }
    let mut counts: HashMap<(String, EntityType), usize> = HashMap::new();
    let mut n_docs = 0;
    for doc in documents {
        n_docs += 1;
        for span in tagger.tag(doc) {
            *counts
                .entry((span.surface.to_lowercase(), span.entity_type))
                .or_default() += 1;
        }
    }
    if n_docs == 0 {
        return Err(Error::validation("corpus", "must not be empty"));
    }
    let mut ranked: Vec<(String, EntityType, usize)> =
        counts.into_iter().map(|((s, t), c)| (s, t, c)).collect();
    ranked.sort_by(|a, b| b.2.cmp(&a.2).then_with(|| a.0.cmp(&b.0)).then_with(|| a.1.cmp(&b.1)));
    ranked.truncate(k);
    Ok(TopEntities { ranked })
}
