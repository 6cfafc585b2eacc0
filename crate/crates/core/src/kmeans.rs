//! Lloyd's k-means with k-means++ seeding over row-major `f64` data.

use rand::Rng;

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest centroid; ties go to the lowest index.
pub(crate) fn nearest(centroids: &[f64], dim: usize, v: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(dim).enumerate() {
        let d = squared_distance(c, v);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

/// k-means++ seeding. Points already covered by a centroid (distance zero)
/// are never picked again unless every point is covered.
pub(crate) fn plus_plus_init<R: Rng>(data: &[f64], dim: usize, k: usize, rng: &mut R) -> Vec<f64> {
    let n = data.len() / dim;
    assert!(n > 0, "k-means++ needs at least one point");
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(&data[first * dim..(first + 1) * dim]);

    let mut d2: Vec<f64> = data
        .chunks_exact(dim)
        .map(|x| squared_distance(x, &centroids[..dim]))
        .collect();

    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let threshold = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            let mut last_positive = 0;
            for (i, &w) in d2.iter().enumerate() {
                if w <= 0.0 {
                    continue;
                }
                last_positive = i;
                acc += w;
                if acc > threshold {
                    chosen = Some(i);
                    break;
                }
            }
            chosen.unwrap_or(last_positive)
        } else {
            rng.random_range(0..n)
        };
        let row = &data[pick * dim..(pick + 1) * dim];
        centroids.extend_from_slice(row);
        for (i, x) in data.chunks_exact(dim).enumerate() {
            let d = squared_distance(x, row);
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Runs Lloyd iterations in place until assignments stop changing or
/// `max_iters` is reached. Empty clusters keep their previous centroid.
/// Returns the final assignment of every point.
pub(crate) fn lloyd(data: &[f64], dim: usize, centroids: &mut [f64], max_iters: usize) -> Vec<usize> {
    let k = centroids.len() / dim;
    let mut assign: Vec<usize> = data.chunks_exact(dim).map(|x| nearest(centroids, dim, x).0).collect();
    for _ in 0..max_iters {
        let mut sums = vec![0.0; k * dim];
        let mut counts = vec![0usize; k];
        for (x, &a) in data.chunks_exact(dim).zip(&assign) {
            counts[a] += 1;
            for (s, v) in sums[a * dim..(a + 1) * dim].iter_mut().zip(x) {
                *s += v;
            }
        }
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let inv = 1.0 / counts[c] as f64;
            for j in 0..dim {
                centroids[c * dim + j] = sums[c * dim + j] * inv;
            }
        }
        let next: Vec<usize> = data.chunks_exact(dim).map(|x| nearest(centroids, dim, x).0).collect();
        if next == assign {
            break;
        }
        assign = next;
    }
    assign
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;

    #[test]
    fn plus_plus_picks_distinct_points() {
        let data = [0.0, 0.0, 1.0, 1.0, 5.0, 5.0, 9.0, 0.0];
        for seed in 0..20 {
            let c = plus_plus_init(&data, 2, 4, &mut stream_rng(seed, 0, 0));
            let mut rows: Vec<Vec<u64>> = c
                .chunks_exact(2)
                .map(|r| r.iter().map(|v| v.to_bits()).collect())
                .collect();
            rows.sort();
            rows.dedup();
            assert_eq!(rows.len(), 4);
        }
    }

    #[test]
    fn nearest_breaks_ties_low() {
        let c = [1.0, -1.0];
        assert_eq!(nearest(&c, 1, &[0.0]).0, 0);
    }
}
