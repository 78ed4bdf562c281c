use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use super::{dist2, nearest, SelectionError};

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub tol: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 20,
            seed: 0,
            max_iters: 100,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub centroids: Vec<[f64; 2]>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to assigned centroids, recorded after every
    /// assignment step. Non-increasing under Lloyd iteration.
    pub inertia_trace: Vec<f64>,
    pub iterations: usize,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().unwrap_or(&f64::INFINITY)
    }
}

/// Seeded k-means++ initialization followed by Lloyd iteration until the
/// largest centroid shift drops below `tol` or `max_iters` is reached. Empty
/// clusters are reseeded to the point currently farthest from its centroid.
pub fn kmeans(points: &[[f64; 2]], config: &KMeansConfig) -> Result<KMeansResult, SelectionError> {
    let n = points.len();
    let k = config.k;
    if n == 0 {
        return Err(SelectionError::EmptyPool);
    }
    if n < k {
        return Err(SelectionError::PoolTooSmall { pool: n, wanted: k });
    }

    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_init(points, k, &mut rng);

    let mut assignments = vec![0usize; n];
    let mut inertia_trace = Vec::new();
    let mut iterations = 0;

    let assign = |centroids: &[[f64; 2]], assignments: &mut [usize]| -> f64 {
        let mut inertia = 0.0;
        for (i, p) in points.iter().enumerate() {
            let c = nearest(p, centroids);
            assignments[i] = c;
            inertia += dist2(p, &centroids[c]);
        }
        inertia
    };

    inertia_trace.push(assign(&centroids, &mut assignments));

    for _ in 0..config.max_iters {
        iterations += 1;
        // Update step: means of members.
        let mut sums = vec![[0.0f64; 2]; k];
        let mut counts = vec![0usize; k];
        for (p, &c) in points.iter().zip(assignments.iter()) {
            sums[c][0] += p[0];
            sums[c][1] += p[1];
            counts[c] += 1;
        }
        let mut new_centroids = centroids.clone();
        for c in 0..k {
            if counts[c] > 0 {
                new_centroids[c] = [sums[c][0] / counts[c] as f64, sums[c][1] / counts[c] as f64];
            }
        }
        // Reseed empty clusters to the farthest point.
        for c in 0..k {
            if counts[c] == 0 {
                let far = points
                    .iter()
                    .enumerate()
                    .max_by(|(_, a), (_, b)| {
                        dist2(a, &new_centroids[assignments_centroid(a, &new_centroids)])
                            .partial_cmp(&dist2(
                                b,
                                &new_centroids[assignments_centroid(b, &new_centroids)],
                            ))
                            .unwrap_or(std::cmp::Ordering::Equal)
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                new_centroids[c] = points[far];
            }
        }

        let shift = centroids
            .iter()
            .zip(new_centroids.iter())
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0f64, f64::max);
        centroids = new_centroids;
        inertia_trace.push(assign(&centroids, &mut assignments));
        if shift < config.tol {
            break;
        }
    }

    Ok(KMeansResult {
        centroids,
        assignments,
        inertia_trace,
        iterations,
    })
}

fn assignments_centroid(point: &[f64; 2], centroids: &[[f64; 2]]) -> usize {
    nearest(point, centroids)
}

fn plus_plus_init(points: &[[f64; 2]], k: usize, rng: &mut ChaCha20Rng) -> Vec<[f64; 2]> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..n)]);
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| dist2(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining mass at distance 0 (duplicate points): pick uniformly.
            rng.random_range(0..n)
        } else {
            let mut target = rng.random_range(0.0..total);
            let mut chosen = n - 1;
            for (i, &d) in d2.iter().enumerate() {
                if target < d {
                    chosen = i;
                    break;
                }
                target -= d;
            }
            chosen
        };
        centroids.push(points[next]);
        for (i, p) in points.iter().enumerate() {
            let d = dist2(p, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

/// Mean silhouette over all points: `(b - a) / max(a, b)` with `a` the mean
/// intra-cluster distance and `b` the smallest mean distance to another
/// cluster. Points in singleton clusters and points with `max(a, b) = 0`
/// contribute 0.
pub fn silhouette(points: &[[f64; 2]], assignments: &[usize], k: usize) -> Result<f64, SelectionError> {
    if k < 2 {
        return Err(SelectionError::DegenerateClustering(k));
    }
    let n = points.len();
    if n == 0 {
        return Err(SelectionError::EmptyPool);
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignments.iter().enumerate() {
        members[c].push(i);
    }

    let mut total = 0.0;
    for i in 0..n {
        let own = assignments[i];
        if members[own].len() <= 1 {
            continue; // singleton contributes 0
        }
        let a = members[own]
            .iter()
            .filter(|&&j| j != i)
            .map(|&j| dist2(&points[i], &points[j]).sqrt())
            .sum::<f64>()
            / (members[own].len() - 1) as f64;
        let mut b = f64::INFINITY;
        for (c, cluster) in members.iter().enumerate() {
            if c == own || cluster.is_empty() {
                continue;
            }
            let mean = cluster
                .iter()
                .map(|&j| dist2(&points[i], &points[j]).sqrt())
                .sum::<f64>()
                / cluster.len() as f64;
            if mean < b {
                b = mean;
            }
        }
        if !b.is_finite() {
            continue;
        }
        let denom = a.max(b);
        if denom > 0.0 {
            total += (b - a) / denom;
        }
    }
    Ok(total / n as f64)
}
