//! Edit-distance negative mining.

use std::collections::BTreeSet;

use log::warn;

use super::synonyms::{normalized, SynonymCorpus};
use crate::error::{Error, Result};
use crate::text::phrase_tokens;

/// Character-level Levenshtein distance.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let b: Vec<char> = b.chars().collect();
    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.chars().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let up = row[j + 1];
            row[j + 1] = (up + 1).min(row[j] + 1).min(diag + usize::from(ca != *cb));
            diag = up;
        }
    }
    row[b.len()]
}

/// All normalized n-grams of `min..=max` tokens, deduplicated and sorted.
pub fn candidate_ngrams<S: AsRef<str>>(texts: &[S], min: usize, max: usize) -> Vec<String> {
    let mut out = BTreeSet::new();
    for t in texts {
        let tokens = phrase_tokens(t.as_ref());
        for n in min.max(1)..=max {
            for w in tokens.windows(n) {
                out.insert(w.join(" "));
            }
        }
    }
    out.into_iter().collect()
}

/// The `k` candidates nearest to `anchor` by edit distance that are not
/// positives; ties break lexicographically.
pub fn mine_negatives<S: AsRef<str>>(anchor: &str, positives: &[S], candidates: &[String], k: usize) -> Result<Vec<String>> {
    let excluded: BTreeSet<String> = positives.iter().map(|p| normalized(p.as_ref())).collect();
    let anchor = normalized(anchor);
    let mut scored: Vec<(usize, String)> = candidates
        .iter()
        .map(|c| normalized(c))
        .filter(|c| !c.is_empty() && !excluded.contains(c))
        .collect::<BTreeSet<_>>()
        .into_iter()
        .map(|c| (levenshtein(&anchor, &c), c))
        .collect();
    if scored.is_empty() {
        return Err(Error::Data(format!("no negative candidates for {anchor:?}")));
    }
    if k > scored.len() {
        warn!("only {} negative candidates for {anchor:?}, {k} requested", scored.len());
    }
    scored.sort();
    Ok(scored.into_iter().take(k).map(|(_, c)| c).collect())
}

/// Adds mined negatives to every code. Candidates are n-grams and whole
/// strings from other codes' positives and from `extra_texts`.
pub fn mine_corpus_negatives<S: AsRef<str>>(
    corpus: &SynonymCorpus,
    extra_texts: &[S],
    ngram_range: [usize; 2],
    k: usize,
) -> Result<SynonymCorpus> {
    let mut mined = corpus.clone();
    let codes: Vec<String> = corpus.codes().map(String::from).collect();
    for code in &codes {
        let entry = corpus.get(code).expect("code listed");
        let mut sources: Vec<String> = corpus
            .entries()
            .filter(|(c, _)| c != code)
            .flat_map(|(_, e)| e.positives.iter().cloned())
            .collect();
        sources.extend(extra_texts.iter().map(|t| t.as_ref().to_string()));
        let mut candidates = candidate_ngrams(&sources, ngram_range[0], ngram_range[1]);
        candidates.extend(sources.iter().map(|s| normalized(s)));
        let found = mine_negatives(&entry.positives[0], &entry.positives, &candidates, k)?;
        let target = mined.get_mut(code).expect("code listed");
        for n in found {
            if !target.negatives.iter().any(|x| normalized(x) == n) {
                target.negatives.push(n);
            }
        }
    }
    Ok(mined)
}
