use std::collections::BTreeSet;

use crate::text::token_strings;

/// Exact set Jaccard; two empty sets score 1.
pub fn jaccard_ids<S: AsRef<str>>(a: &[S], b: &[S]) -> f64 {
    let a: BTreeSet<&str> = a.iter().map(AsRef::as_ref).collect();
    let b: BTreeSet<&str> = b.iter().map(AsRef::as_ref).collect();
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let inter = a.intersection(&b).count();
    inter as f64 / (a.len() + b.len() - inter) as f64
}

/// Token-set Jaccard between two snippets.
pub fn token_overlap(a: &str, b: &str) -> f64 {
    let ta: Vec<String> = token_strings(a);
    let tb: Vec<String> = token_strings(b);
    jaccard_ids(&ta, &tb)
}

/// Snippet-set Jaccard: two snippets match when their token overlap is at
/// least `threshold`; matches are one-to-one and as many as possible. The
/// score is |matched| / (|A| + |B| - |matched|); two empty sets score 1.
pub fn jaccard_text<S: AsRef<str>>(a: &[S], b: &[S], threshold: f64) -> f64 {
    if a.is_empty() && b.is_empty() {
        return 1.0;
    }
    let adj: Vec<Vec<usize>> = a
        .iter()
        .map(|x| {
            (0..b.len())
                .filter(|&j| token_overlap(x.as_ref(), b[j].as_ref()) >= threshold)
                .collect()
        })
        .collect();
    let matched = max_matching(&adj, b.len());
    matched as f64 / (a.len() + b.len() - matched) as f64
}

/// Maximum bipartite matching by augmenting paths.
fn max_matching(adj: &[Vec<usize>], right: usize) -> usize {
    fn augment(u: usize, adj: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &adj[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, adj, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right];
    (0..adj.len())
        .filter(|&u| augment(u, adj, &mut vec![false; right], &mut owner))
        .count()
}
