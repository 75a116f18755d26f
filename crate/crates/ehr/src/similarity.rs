use std::collections::HashMap;

/// Scores how well a dictionary title matches a free-text query.
pub trait SimilarityBackend: Send + Sync {
    /// Similarity in `[0, 1]`; 1 means identical under the backend.
    fn score(&self, query: &str, title: &str) -> f64;

    fn name(&self) -> &str;
}

/// Cosine similarity of lowercased character-trigram count vectors.
///
/// Strings shorter than three characters contribute themselves as a single
/// gram so that short codes remain matchable.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrigramCosine;

pub(crate) fn trigram_counts(s: &str) -> HashMap<String, u32> {
    let chars: Vec<char> = s.to_lowercase().chars().collect();
    let mut counts = HashMap::new();
    if chars.is_empty() {
        return counts;
    }
    if chars.len() < 3 {
        counts.insert(chars.iter().collect(), 1);
        return counts;
    }
    for w in chars.windows(3) {
        *counts.entry(w.iter().collect()).or_insert(0) += 1;
    }
    counts
}

impl SimilarityBackend for TrigramCosine {
    fn score(&self, query: &str, title: &str) -> f64 {
        let a = trigram_counts(query);
        let b = trigram_counts(title);
        if a.is_empty() || b.is_empty() {
            return 0.0;
        }
        let dot: f64 = a
            .iter()
            .filter_map(|(g, &x)| b.get(g).map(|&y| x as f64 * y as f64))
            .sum();
        let norm = |m: &HashMap<String, u32>| m.values().map(|&v| (v as f64).powi(2)).sum::<f64>().sqrt();
        (dot / (norm(&a) * norm(&b))).clamp(0.0, 1.0)
    }

    fn name(&self) -> &str {
        "trigram-cosine"
    }
}
