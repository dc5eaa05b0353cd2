//! Independent reference computations the engine is checked against.

use std::collections::BTreeMap;

use mealprint_core::catalog::{DatabaseSource, ProductStore};

/// Trigram hash buckets in f64, written without the engine's helpers.
pub fn bag(text: &str) -> Vec<f64> {
    let lowered = text.trim().to_lowercase();
    let chars: Vec<char> = std::iter::once(' ').chain(lowered.chars()).chain(std::iter::once(' ')).collect();
    let mut v = vec![0.0; 256];
    for i in 0..chars.len().saturating_sub(2) {
        let tri: String = chars[i..i + 3].iter().collect();
        let mut h: u32 = 2166136261;
        for b in tri.as_bytes() {
            h ^= *b as u32;
            h = h.wrapping_mul(16777619);
        }
        v[(h % 256) as usize] += 1.0;
    }
    v
}

pub fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Brute-force top-k `(key, similarity)` over one source of the store.
/// Scores are compared at six decimals, the engine's tie resolution.
pub fn top_k(store: &ProductStore, source: DatabaseSource, query: &str, k: usize) -> Vec<(String, f64)> {
    let mut names: BTreeMap<String, String> = BTreeMap::new();
    for r in store.records().iter().filter(|r| r.source == source) {
        names.entry(r.key().to_string()).or_insert_with(|| r.name.clone());
    }
    let q = bag(query);
    let mut scored: Vec<(String, f64)> = names.into_iter().map(|(key, name)| (key, (cosine(&q, &bag(&name)) * 1e6).round() / 1e6)).collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    scored
}

/// Plain sum of `(min, max)` pairs plus midpoint average.
pub fn sum_ranges(ranges: &[(f64, f64)]) -> (f64, f64, f64) {
    let mut lo = 0.0;
    let mut hi = 0.0;
    let mut avg = 0.0;
    for &(a, b) in ranges {
        lo += a;
        hi += b;
        avg += (a + b) / 2.0;
    }
    (lo, hi, avg)
}
