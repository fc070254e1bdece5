use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::text::tokenize;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl RougeScore {
    /// Score from an overlap count and the candidate/reference sizes.
    /// Empty sides give zero components.
    pub fn from_counts(overlap: usize, candidate: usize, reference: usize) -> Self {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(overlap, candidate);
        let recall = ratio(overlap, reference);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self { precision, recall, f1 }
    }
}

fn ngram_counts<S: AsRef<str>>(tokens: &[S], n: usize) -> HashMap<Vec<&str>, usize> {
    let mut counts = HashMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for w in tokens.windows(n) {
        *counts.entry(w.iter().map(AsRef::as_ref).collect()).or_insert(0) += 1;
    }
    counts
}

/// Clipped n-gram overlap between token sequences.
pub fn rouge_n_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S], n: usize) -> RougeScore {
    assert!(n >= 1, "n-gram order must be at least 1");
    let c = ngram_counts(candidate, n);
    let r = ngram_counts(reference, n);
    let overlap = c
        .iter()
        .map(|(g, &k)| k.min(r.get(g).copied().unwrap_or(0)))
        .sum();
    RougeScore::from_counts(
        overlap,
        candidate.len().saturating_sub(n - 1),
        reference.len().saturating_sub(n - 1),
    )
}

pub fn lcs_len<S: AsRef<str>>(a: &[S], b: &[S]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x.as_ref() == y.as_ref() {
                prev[j] + 1
            } else {
                cur[j].max(prev[j + 1])
            };
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// LCS-based F-measure with beta = 1.
pub fn rouge_l_tokens<S: AsRef<str>>(candidate: &[S], reference: &[S]) -> RougeScore {
    RougeScore::from_counts(lcs_len(candidate, reference), candidate.len(), reference.len())
}

pub fn rouge_n(candidate: &str, reference: &str, n: usize) -> RougeScore {
    rouge_n_tokens(&tokenize(candidate), &tokenize(reference), n)
}

pub fn rouge_l(candidate: &str, reference: &str) -> RougeScore {
    rouge_l_tokens(&tokenize(candidate), &tokenize(reference))
}

/// ROUGE-1, ROUGE-2 and ROUGE-L for one pair, or their means over many.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct RougeTriple {
    pub rouge1: RougeScore,
    pub rouge2: RougeScore,
    pub rouge_l: RougeScore,
}

impl RougeTriple {
    pub fn score(candidate: &str, reference: &str) -> Self {
        let c = tokenize(candidate);
        let r = tokenize(reference);
        Self {
            rouge1: rouge_n_tokens(&c, &r, 1),
            rouge2: rouge_n_tokens(&c, &r, 2),
            rouge_l: rouge_l_tokens(&c, &r),
        }
    }

    /// Component-wise mean; empty input gives zeros.
    pub fn mean<'a>(items: impl IntoIterator<Item = &'a RougeTriple>) -> Self {
        let mut sum = [0.0f64; 9];
        let mut n = 0usize;
        for t in items {
            n += 1;
            for (k, s) in [t.rouge1, t.rouge2, t.rouge_l].iter().enumerate() {
                sum[3 * k] += s.precision;
                sum[3 * k + 1] += s.recall;
                sum[3 * k + 2] += s.f1;
            }
        }
        let d = n.max(1) as f64;
        let at = |k: usize| RougeScore {
            precision: sum[3 * k] / d,
            recall: sum[3 * k + 1] / d,
            f1: sum[3 * k + 2] / d,
        };
        Self {
            rouge1: at(0),
            rouge2: at(1),
            rouge_l: at(2),
        }
    }

    pub fn f1s(&self) -> [f64; 3] {
        [self.rouge1.f1, self.rouge2.f1, self.rouge_l.f1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Counts every candidate n-gram occurrence against unused reference
    /// occurrences, position by position.
    fn brute_overlap(c: &[String], r: &[String], n: usize) -> usize {
        if c.len() < n || r.len() < n {
            return 0;
        }
        let mut used = vec![false; r.len() - n + 1];
        let mut hits = 0;
        for i in 0..=c.len() - n {
            for j in 0..=r.len() - n {
                if !used[j] && c[i..i + n] == r[j..j + n] {
                    used[j] = true;
                    hits += 1;
                    break;
                }
            }
        }
        hits
    }

    /// Exhaustive LCS by recursion with memo, independent from the rolling table.
    fn brute_lcs(a: &[String], b: &[String]) -> usize {
        fn go(a: &[String], b: &[String], i: usize, j: usize, memo: &mut HashMap<(usize, usize), usize>) -> usize {
            if i == a.len() || j == b.len() {
                return 0;
            }
            if let Some(&v) = memo.get(&(i, j)) {
                return v;
            }
            let v = if a[i] == b[j] {
                1 + go(a, b, i + 1, j + 1, memo)
            } else {
                go(a, b, i + 1, j, memo).max(go(a, b, i, j + 1, memo))
            };
            memo.insert((i, j), v);
            v
        }
        go(a, b, 0, 0, &mut HashMap::new())
    }

    fn close(a: RougeScore, p: f64, r: f64, f: f64) -> bool {
        (a.precision - p).abs() < 1e-12 && (a.recall - r).abs() < 1e-12 && (a.f1 - f).abs() < 1e-12
    }

    #[test]
    fn worked_examples() {
        let s = rouge_n("the cat sat", "the cat sat", 1);
        assert!(close(s, 1.0, 1.0, 1.0));
        assert!(close(rouge_n("a b", "c d", 1), 0.0, 0.0, 0.0));
        let t = 2.0 / 3.0;
        assert!(close(rouge_n("the cat sat", "the cat ran", 1), t, t, t));
        assert!(close(rouge_n("the cat sat", "the cat ran", 2), 0.5, 0.5, 0.5));
        assert!(close(rouge_l("a b c d", "a c b d"), 0.75, 0.75, 0.75));
        assert!(close(rouge_l("x y", "x y"), 1.0, 1.0, 1.0));
        assert!(close(rouge_l("", "a b"), 0.0, 0.0, 0.0));
        assert!(close(rouge_n("", "", 2), 0.0, 0.0, 0.0));
    }

    #[test]
    fn case_folded() {
        assert!(close(rouge_n("The Cat", "the cat", 2), 1.0, 1.0, 1.0));
    }

    #[test]
    fn clipping_limits_repeats() {
        let s = rouge_n("the the the", "the cat", 1);
        assert!(close(s, 1.0 / 3.0, 0.5, 0.4));
    }

    fn seq() -> impl Strategy<Value = Vec<String>> {
        proptest::collection::vec(proptest::sample::select(vec!["a", "b", "c", "d"]).prop_map(String::from), 0..=20)
    }

    proptest! {
        #[test]
        fn rouge_n_matches_brute_force(c in seq(), r in seq(), n in 1usize..=3) {
            let s = rouge_n_tokens(&c, &r, n);
            let expected = RougeScore::from_counts(
                brute_overlap(&c, &r, n),
                c.len().saturating_sub(n - 1),
                r.len().saturating_sub(n - 1),
            );
            prop_assert_eq!(s, expected);
        }

        #[test]
        fn rouge_l_matches_brute_force(c in seq(), r in seq()) {
            prop_assert_eq!(lcs_len(&c, &r), brute_lcs(&c, &r));
        }

        #[test]
        fn rouge_l_is_symmetric(c in seq(), r in seq()) {
            let a = rouge_l_tokens(&c, &r);
            let b = rouge_l_tokens(&r, &c);
            prop_assert_eq!(a.precision, b.recall);
            prop_assert_eq!(a.recall, b.precision);
            prop_assert_eq!(a.f1, b.f1);
        }

        #[test]
        fn scores_are_bounded_and_self_perfect(c in seq(), r in seq(), n in 1usize..=3) {
            for s in [rouge_n_tokens(&c, &r, n), rouge_l_tokens(&c, &r)] {
                for v in [s.precision, s.recall, s.f1] {
                    prop_assert!((0.0..=1.0).contains(&v));
                }
            }
            if c.len() >= n {
                prop_assert_eq!(rouge_n_tokens(&c, &c, n).f1, 1.0);
            }
        }
    }
}
