//! Seeded random matrices for tests, `verify` and `bench`.

use rand::Rng;

use crate::matio::EdgeList;

/// Each cell is a 1 independently with probability `density`.
pub fn random_edges<R: Rng>(rng: &mut R, n_rows: usize, n_cols: usize, density: f64) -> EdgeList {
    let mut edges = Vec::new();
    for r in 0..n_rows as u32 {
        for c in 0..n_cols as u32 {
            if rng.random_bool(density.clamp(0.0, 1.0)) {
                edges.push((r, c));
            }
        }
    }
    EdgeList::from_sorted(n_rows, n_cols, edges).expect("generated in order")
}

/// Rows copied from a small pool of templates with a few random flips, so
/// that reference and grammar encodings have redundancy to find.
pub fn clustered_edges<R: Rng>(
    rng: &mut R,
    n_rows: usize,
    n_cols: usize,
    templates: usize,
    density: f64,
) -> EdgeList {
    let pool: Vec<Vec<bool>> = (0..templates.max(1))
        .map(|_| (0..n_cols).map(|_| rng.random_bool(density)).collect())
        .collect();
    let mut edges = Vec::new();
    for r in 0..n_rows {
        let t = &pool[rng.random_range(0..pool.len())];
        for (c, &bit) in t.iter().enumerate() {
            let flip = rng.random_bool(0.02);
            if bit ^ flip {
                edges.push((r as u32, c as u32));
            }
        }
    }
    EdgeList::from_sorted(n_rows, n_cols, edges).expect("generated in order")
}

/// Uniform vector in `[0, 1)`.
pub fn random_vector<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.random::<f64>()).collect()
}
