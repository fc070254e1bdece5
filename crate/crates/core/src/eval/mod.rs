//! Summary quality and factual-consistency evaluation.

mod consistency;
mod report;
mod rouge;

pub use consistency::{classify_consistency, classify_item, ConsistencyLabel, ConsistencyVerdict};
pub use report::{
    compare_models, evaluate_model, evaluate_outputs, CorrectionCount, EvalRecord, EvalReport, EvalRun, VerdictPair,
};
pub use rouge::{lcs_len, rouge_l, rouge_l_tokens, rouge_n, rouge_n_tokens, RougeScore, RougeTriple};
