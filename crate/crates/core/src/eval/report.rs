use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::consistency::{classify_consistency, ConsistencyLabel, ConsistencyVerdict};
use super::rouge::RougeTriple;
use crate::corpus::io::write_jsonl;
use crate::corpus::EvalItem;
use crate::corruption::{DefectLexicon, EntityTagger};
use crate::error::{Error, Result};
use crate::model::Seq2Seq;
use crate::text::Vocabulary;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRecord {
    pub id: String,
    pub reference: String,
    pub generated: String,
    pub rouge: RougeTriple,
    /// Absent for items without gold labels.
    pub verdict: Option<ConsistencyVerdict>,
}

/// One model's outputs on an evaluation set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRun {
    pub n_examples: usize,
    pub n_judged: usize,
    pub rouge: RougeTriple,
    pub label_counts: BTreeMap<ConsistencyLabel, usize>,
    pub records: Vec<EvalRecord>,
}

#[derive(Serialize)]
struct VerdictLine<'a> {
    id: &'a str,
    label: ConsistencyLabel,
    evidence: &'a str,
}

impl EvalRun {
    pub fn from_records(records: Vec<EvalRecord>) -> Self {
        let mut label_counts: BTreeMap<ConsistencyLabel, usize> =
            ConsistencyLabel::ALL.into_iter().map(|l| (l, 0)).collect();
        for v in records.iter().filter_map(|r| r.verdict.as_ref()) {
            *label_counts.entry(v.label).or_default() += 1;
        }
        Self {
            n_examples: records.len(),
            n_judged: records.iter().filter(|r| r.verdict.is_some()).count(),
            rouge: RougeTriple::mean(records.iter().map(|r| &r.rouge)),
            label_counts,
            records,
        }
    }

    pub fn count(&self, label: ConsistencyLabel) -> usize {
        self.label_counts.get(&label).copied().unwrap_or(0)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Contract(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Writes `id, label, evidence` lines for the judged records.
    pub fn save_verdicts(&self, path: &Path) -> Result<()> {
        let lines: Vec<VerdictLine<'_>> = self
            .records
            .iter()
            .filter_map(|r| {
                r.verdict.as_ref().map(|v| VerdictLine {
                    id: &r.id,
                    label: v.label,
                    evidence: &v.evidence,
                })
            })
            .collect();
        write_jsonl(path, &lines)
    }
}

/// Scores one generated summary per item.
pub fn evaluate_outputs(
    items: &[EvalItem],
    generated: &[String],
    tagger: &impl EntityTagger,
    lexicon: &DefectLexicon,
) -> Result<EvalRun> {
    if items.len() != generated.len() {
        return Err(Error::Contract(format!(
            "{} items but {} generated summaries",
            items.len(),
            generated.len()
        )));
    }
    let records = items
        .iter()
        .zip(generated)
        .map(|(item, g)| EvalRecord {
            id: item.id.clone(),
            reference: item.reference.clone(),
            generated: g.clone(),
            rouge: RougeTriple::score(g, &item.reference),
            verdict: item.labeled().map(|ex| classify_consistency(g, &ex, tagger, lexicon)),
        })
        .collect();
    Ok(EvalRun::from_records(records))
}

/// Greedy-decodes a summary for every item and scores it.
pub fn evaluate_model(
    model: &dyn Seq2Seq,
    vocab: &Vocabulary,
    items: &[EvalItem],
    tagger: &impl EntityTagger,
    lexicon: &DefectLexicon,
) -> Result<EvalRun> {
    let generated = items
        .iter()
        .map(|item| {
            let ids = model.generate(&vocab.encode_source(&item.source), model.max_len())?;
            Ok(vocab.decode(&ids))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate_outputs(items, &generated, tagger, lexicon)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorrectionCount {
    pub baseline: usize,
    pub corrected: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerdictPair {
    pub id: String,
    pub baseline: ConsistencyLabel,
    pub treated: ConsistencyLabel,
}

/// Baseline-versus-treated comparison on the same evaluation set. ROUGE
/// values are fractions in [0, 1]; every `pct_*` and `*_reduction` value is
/// a percentage. Reductions are signed: a treated model with more errors
/// than the baseline yields a negative value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub n_examples: usize,
    pub n_judged: usize,
    pub baseline_rouge: RougeTriple,
    pub treated_rouge: RougeTriple,
    /// Treated minus baseline F1 for ROUGE-1, ROUGE-2, ROUGE-L.
    pub rouge_f1_delta: [f64; 3],
    pub baseline_counts: BTreeMap<ConsistencyLabel, usize>,
    pub treated_counts: BTreeMap<ConsistencyLabel, usize>,
    pub corrected_by_type: BTreeMap<ConsistencyLabel, CorrectionCount>,
    pub pct_corrected_by_type: BTreeMap<ConsistencyLabel, f64>,
    pub baseline_consistent: usize,
    pub consistent_to_inconsistent: usize,
    pub pct_consistent_to_inconsistent: f64,
    pub baseline_inconsistent: usize,
    pub treated_inconsistent: usize,
    pub overall_inconsistency_reduction: f64,
    pub baseline_wed_ipd: usize,
    pub treated_wed_ipd: usize,
    pub wed_ipd_reduction: f64,
    pub verdicts: Vec<VerdictPair>,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

fn reduction(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        100.0 * (before as f64 - after as f64) / before as f64
    }
}

/// Compares two runs over the same ids. Only items judged in both runs
/// enter the verdict statistics; ROUGE uses every item.
pub fn compare_models(baseline: &EvalRun, treated: &EvalRun) -> Result<EvalReport> {
    let b_ids: BTreeSet<&str> = baseline.records.iter().map(|r| r.id.as_str()).collect();
    let t_ids: BTreeSet<&str> = treated.records.iter().map(|r| r.id.as_str()).collect();
    let missing: Vec<String> = b_ids.symmetric_difference(&t_ids).map(|s| s.to_string()).collect();
    if !missing.is_empty() {
        return Err(Error::Misaligned { missing });
    }
    if b_ids.len() != baseline.records.len() || t_ids.len() != treated.records.len() {
        return Err(Error::Contract("duplicate ids in an evaluation run".into()));
    }

    let treated_by_id: HashMap<&str, &EvalRecord> = treated.records.iter().map(|r| (r.id.as_str(), r)).collect();
    let mut verdicts = Vec::new();
    for b in &baseline.records {
        let t = treated_by_id[b.id.as_str()];
        if let (Some(bv), Some(tv)) = (&b.verdict, &t.verdict) {
            verdicts.push(VerdictPair {
                id: b.id.clone(),
                baseline: bv.label,
                treated: tv.label,
            });
        }
    }

    let tally = |pick: fn(&VerdictPair) -> ConsistencyLabel| {
        let mut m: BTreeMap<ConsistencyLabel, usize> = ConsistencyLabel::ALL.into_iter().map(|l| (l, 0)).collect();
        for v in &verdicts {
            *m.entry(pick(v)).or_default() += 1;
        }
        m
    };
    let baseline_counts = tally(|v| v.baseline);
    let treated_counts = tally(|v| v.treated);

    let mut corrected_by_type = BTreeMap::new();
    let mut pct_corrected_by_type = BTreeMap::new();
    for label in [ConsistencyLabel::Wed, ConsistencyLabel::Ipd] {
        let base = baseline_counts[&label];
        let fixed = verdicts
            .iter()
            .filter(|v| v.baseline == label && v.treated.is_consistent())
            .count();
        corrected_by_type.insert(
            label,
            CorrectionCount {
                baseline: base,
                corrected: fixed,
            },
        );
        pct_corrected_by_type.insert(label, pct(fixed, base));
    }

    let baseline_consistent = baseline_counts[&ConsistencyLabel::Consistent];
    let consistent_to_inconsistent = verdicts
        .iter()
        .filter(|v| v.baseline.is_consistent() && !v.treated.is_consistent())
        .count();
    let baseline_inconsistent = verdicts.len() - baseline_consistent;
    let treated_inconsistent = verdicts.len() - treated_counts[&ConsistencyLabel::Consistent];
    let wed_ipd = |m: &BTreeMap<ConsistencyLabel, usize>| m[&ConsistencyLabel::Wed] + m[&ConsistencyLabel::Ipd];
    let baseline_wed_ipd = wed_ipd(&baseline_counts);
    let treated_wed_ipd = wed_ipd(&treated_counts);

    let (bf, tf) = (baseline.rouge.f1s(), treated.rouge.f1s());
    Ok(EvalReport {
        n_examples: baseline.records.len(),
        n_judged: verdicts.len(),
        baseline_rouge: baseline.rouge,
        treated_rouge: treated.rouge,
        rouge_f1_delta: [tf[0] - bf[0], tf[1] - bf[1], tf[2] - bf[2]],
        baseline_counts,
        treated_counts,
        corrected_by_type,
        pct_corrected_by_type,
        baseline_consistent,
        consistent_to_inconsistent,
        pct_consistent_to_inconsistent: pct(consistent_to_inconsistent, baseline_consistent),
        baseline_inconsistent,
        treated_inconsistent,
        overall_inconsistency_reduction: reduction(baseline_inconsistent, treated_inconsistent),
        baseline_wed_ipd,
        treated_wed_ipd,
        wed_ipd_reduction: reduction(baseline_wed_ipd, treated_wed_ipd),
        verdicts,
    })
}

impl EvalReport {
    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Contract(e.to_string()))?;
        std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        })
    }

    /// Human-readable summary tables.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "examples: {} (judged: {})", self.n_examples, self.n_judged);
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<10} {:>9} {:>9} {:>9}", "metric", "baseline", "treated", "delta");
        let names = ["ROUGE-1", "ROUGE-2", "ROUGE-L"];
        let (bf, tf) = (self.baseline_rouge.f1s(), self.treated_rouge.f1s());
        for k in 0..3 {
            let _ = writeln!(
                out,
                "{:<10} {:>9.2} {:>9.2} {:>+9.2}",
                names[k],
                100.0 * bf[k],
                100.0 * tf[k],
                100.0 * self.rouge_f1_delta[k]
            );
        }
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<12} {:>9} {:>9}", "verdict", "baseline", "treated");
        for l in ConsistencyLabel::ALL {
            let _ = writeln!(
                out,
                "{:<12} {:>9} {:>9}",
                l.as_str(),
                self.baseline_counts.get(&l).copied().unwrap_or(0),
                self.treated_counts.get(&l).copied().unwrap_or(0)
            );
        }
        let _ = writeln!(out);
        for (l, c) in &self.corrected_by_type {
            let _ = writeln!(
                out,
                "corrected {:<4} {:>6.1}%  ({}/{})",
                l.as_str(),
                self.pct_corrected_by_type[l],
                c.corrected,
                c.baseline
            );
        }
        let _ = writeln!(
            out,
            "consistent -> inconsistent {:>6.1}%  ({}/{})",
            self.pct_consistent_to_inconsistent, self.consistent_to_inconsistent, self.baseline_consistent
        );
        let _ = writeln!(
            out,
            "inconsistency reduction    {:>+6.1}%  ({} -> {})",
            self.overall_inconsistency_reduction, self.baseline_inconsistent, self.treated_inconsistent
        );
        let _ = writeln!(
            out,
            "WED+IPD reduction          {:>+6.1}%  ({} -> {})",
            self.wed_ipd_reduction, self.baseline_wed_ipd, self.treated_wed_ipd
        );
        out
    }
}
