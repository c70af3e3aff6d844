//! Lexical diversity baselines: Dist-n, Ent-n and Low-Frequency (LF).
//!
//! All three pool n-grams over the whole corpus rather than averaging per
//! response. Ent-n is reported in bits.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::ResponseCorpus;
use crate::error::{Error, Result};
use crate::tokenize::{accumulate_ngrams, tokenize, NgramCounts, TokenSequence};

pub const DEFAULT_LF_THRESHOLD: u64 = 100;
pub const DEFAULT_NGRAM_ORDERS: [usize; 3] = [1, 2, 3];

/// Token occurrence counts over a (training) corpus.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VocabCounts {
    counts: HashMap<String, u64>,
    total: u64,
}

impl VocabCounts {
    pub fn get(&self, token: &str) -> u64 {
        self.counts.get(token).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.counts.iter().map(|(k, v)| (k.as_str(), *v))
    }

    fn add(&mut self, token: &str) {
        *self.counts.entry(token.to_owned()).or_insert(0) += 1;
        self.total += 1;
    }
}

impl FromIterator<(String, u64)> for VocabCounts {
    fn from_iter<I: IntoIterator<Item = (String, u64)>>(iter: I) -> Self {
        let mut out = VocabCounts::default();
        for (tok, c) in iter {
            *out.counts.entry(tok).or_insert(0) += c;
            out.total += c;
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LexicalReport {
    pub dist: BTreeMap<usize, f64>,
    pub ent: BTreeMap<usize, f64>,
    pub lf: Option<f64>,
}

/// Tokenizes every response, preserving corpus order.
pub fn tokenize_corpus(corpus: &ResponseCorpus) -> Vec<TokenSequence> {
    corpus
        .records
        .par_iter()
        .map(|r| tokenize(&r.response))
        .collect()
}

pub fn pooled_ngrams(seqs: &[TokenSequence], n: usize) -> Result<NgramCounts> {
    let mut counts = NgramCounts::new();
    if n == 0 {
        return Err(Error::arg("n-gram order must be at least 1"));
    }
    for s in seqs {
        accumulate_ngrams(s, n, &mut counts)?;
    }
    Ok(counts)
}

/// Distinct over total n-grams; 0 when there are none.
pub fn dist_n_tokens(seqs: &[TokenSequence], n: usize) -> Result<f64> {
    let counts = pooled_ngrams(seqs, n)?;
    let total: usize = counts.values().sum();
    if total == 0 {
        return Ok(0.0);
    }
    Ok(counts.len() as f64 / total as f64)
}

/// Base-2 Shannon entropy of a count multiset.
///
/// Terms are summed in ascending count order so the result does not depend
/// on map iteration order.
pub fn entropy_bits<I: IntoIterator<Item = usize>>(counts: I) -> f64 {
    let mut counts: Vec<usize> = counts.into_iter().filter(|&c| c > 0).collect();
    counts.sort_unstable();
    let total: usize = counts.iter().sum();
    if total <= 1 {
        return 0.0;
    }
    let total = total as f64;
    let h: f64 = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / total;
            -p * p.log2()
        })
        .sum();
    h.max(0.0)
}

pub fn ent_n_tokens(seqs: &[TokenSequence], n: usize) -> Result<f64> {
    let counts = pooled_ngrams(seqs, n)?;
    Ok(entropy_bits(counts.into_values()))
}

pub fn dist_n(corpus: &ResponseCorpus, n: usize) -> Result<f64> {
    dist_n_tokens(&tokenize_corpus(corpus), n)
}

pub fn ent_n(corpus: &ResponseCorpus, n: usize) -> Result<f64> {
    ent_n_tokens(&tokenize_corpus(corpus), n)
}

pub fn vocab_counts_tokens(seqs: &[TokenSequence]) -> VocabCounts {
    let mut vocab = VocabCounts::default();
    for tok in seqs.iter().flat_map(|s| s.tokens()) {
        vocab.add(tok);
    }
    vocab
}

pub fn build_vocab_counts(corpus: &ResponseCorpus) -> VocabCounts {
    vocab_counts_tokens(&tokenize_corpus(corpus))
}

/// Fraction of generated tokens whose training count is strictly below
/// `threshold`. Tokens unseen in training count as frequency 0.
pub fn low_frequency_tokens(generated: &[TokenSequence], train: &VocabCounts, threshold: u64) -> Result<f64> {
    if threshold == 0 {
        return Err(Error::arg("LF threshold must be at least 1"));
    }
    let mut total = 0u64;
    let mut low = 0u64;
    for tok in generated.iter().flat_map(|s| s.tokens()) {
        total += 1;
        if train.get(tok) < threshold {
            low += 1;
        }
    }
    if total == 0 {
        return Ok(0.0);
    }
    Ok(low as f64 / total as f64)
}

pub fn low_frequency(generated: &ResponseCorpus, train: &VocabCounts, threshold: u64) -> Result<f64> {
    low_frequency_tokens(&tokenize_corpus(generated), train, threshold)
}

/// Dist-n and Ent-n for each order in `orders`, plus LF when a training
/// vocabulary is supplied.
pub fn lexical_report(
    generated: &ResponseCorpus,
    orders: &[usize],
    train: Option<&VocabCounts>,
    threshold: u64,
) -> Result<LexicalReport> {
    let seqs = tokenize_corpus(generated);
    let mut dist = BTreeMap::new();
    let mut ent = BTreeMap::new();
    for &n in orders {
        dist.insert(n, dist_n_tokens(&seqs, n)?);
        ent.insert(n, ent_n_tokens(&seqs, n)?);
    }
    let lf = train
        .map(|v| low_frequency_tokens(&seqs, v, threshold))
        .transpose()?;
    Ok(LexicalReport { dist, ent, lf })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(rs: &[&str]) -> ResponseCorpus {
        ResponseCorpus::from_responses(rs.iter().copied()).unwrap()
    }

    #[test]
    fn dist_fixtures() {
        assert_eq!(dist_n(&corpus(&["a b", "a c"]), 1).unwrap(), 0.75);
        assert_eq!(dist_n(&corpus(&["a b c", "a b d"]), 3).unwrap(), 1.0);
        assert_eq!(dist_n(&corpus(&["x"]), 2).unwrap(), 0.0);
        assert!(dist_n(&corpus(&["x"]), 0).is_err());
    }

    #[test]
    fn ent_fixtures() {
        assert_eq!(ent_n(&corpus(&["a a b c"]), 1).unwrap(), 1.5);
        assert_eq!(ent_n(&corpus(&["z z", "z"]), 1).unwrap(), 0.0);
        assert_eq!(ent_n(&corpus(&["q"]), 1).unwrap(), 0.0);
        let h = ent_n(&corpus(&["a b c d e"]), 1).unwrap();
        assert!((h - 5f64.log2()).abs() < 1e-12);
        assert!(ent_n(&corpus(&["x"]), 0).is_err());
    }

    #[test]
    fn vocab_fixtures() {
        let v = build_vocab_counts(&corpus(&["a a b"]));
        assert_eq!((v.get("a"), v.get("b"), v.total()), (2, 1, 3));
        let empty = build_vocab_counts(&corpus(&[]));
        assert_eq!((empty.distinct(), empty.total()), (0, 0));
    }

    #[test]
    fn lf_fixtures() {
        let train: VocabCounts = [("the".to_string(), 500), ("cat".to_string(), 50)]
            .into_iter()
            .collect();
        let lf = low_frequency(&corpus(&["the cat the"]), &train, 100).unwrap();
        assert_eq!(lf, 1.0 / 3.0);
        assert_eq!(low_frequency(&corpus(&["the the"]), &train, 100).unwrap(), 0.0);
        assert_eq!(low_frequency(&corpus(&["dog bird"]), &train, 100).unwrap(), 1.0);
        assert!(low_frequency(&corpus(&["the"]), &train, 0).is_err());
    }

    #[test]
    fn report_shape() {
        let c = corpus(&["a b", "a c"]);
        let r = lexical_report(&c, &[1, 2], None, 100).unwrap();
        assert_eq!(r.dist[&1], 0.75);
        assert_eq!(r.lf, None);
        let json = serde_json::to_string(&r).unwrap();
        assert!(json.starts_with("{\"dist\":{\"1\":0.75"));
    }

    fn seqs_strategy() -> impl Strategy<Value = Vec<TokenSequence>> {
        proptest::collection::vec(proptest::collection::vec("[a-d]", 0..6), 0..6)
            .prop_map(|v| v.into_iter().map(TokenSequence::from).collect())
    }

    proptest! {
        #[test]
        fn dist_bounds_and_uniqueness(seqs in seqs_strategy(), n in 1usize..4) {
            let d = dist_n_tokens(&seqs, n).unwrap();
            prop_assert!((0.0..=1.0).contains(&d));
            let counts = pooled_ngrams(&seqs, n).unwrap();
            let all_unique = !counts.is_empty() && counts.values().all(|&c| c == 1);
            prop_assert_eq!(d == 1.0, all_unique);
        }

        #[test]
        fn ent_bounded_by_log_distinct(seqs in seqs_strategy(), n in 1usize..4) {
            let h = ent_n_tokens(&seqs, n).unwrap();
            let counts = pooled_ngrams(&seqs, n).unwrap();
            prop_assert!(h >= 0.0);
            if !counts.is_empty() {
                prop_assert!(h <= (counts.len() as f64).log2() + 1e-12);
            }
        }

        #[test]
        fn duplication_invariance(seqs in seqs_strategy(), n in 1usize..4) {
            let doubled: Vec<_> = seqs.iter().chain(seqs.iter()).cloned().collect();
            let h1 = ent_n_tokens(&seqs, n).unwrap();
            let h2 = ent_n_tokens(&doubled, n).unwrap();
            prop_assert!((h1 - h2).abs() < 1e-12);
            let counts = pooled_ngrams(&seqs, n).unwrap();
            if !counts.is_empty() && counts.values().all(|&c| c == 1) {
                let d2 = dist_n_tokens(&doubled, n).unwrap();
                prop_assert_eq!(d2, 0.5);
            }
        }

        #[test]
        fn lf_monotone_in_threshold(seqs in seqs_strategy(), train in seqs_strategy(), t in 1u64..5) {
            let vocab = vocab_counts_tokens(&train);
            let lo = low_frequency_tokens(&seqs, &vocab, t).unwrap();
            let hi = low_frequency_tokens(&seqs, &vocab, t + 1).unwrap();
            prop_assert!(lo <= hi);
        }
    }
}
