//! Lloyd's k-means with k-means++ seeding and best-of-restarts selection.

use rand::Rng;

use super::ClusterAssignment;
use crate::error::{param, Result};
use crate::rng::{rng_from_seed, SimRng};

pub const RESTARTS: usize = 10;
pub const MAX_ITERATIONS: usize = 100;

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Nearest centroid; ties go to the lowest centroid index.
fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(point, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn plus_plus_seed(points: &[Vec<f64>], k: usize, rng: &mut SimRng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut chosen = vec![rng.random_range(0..n)];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[chosen[0]])).collect();
    while chosen.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc > target {
                    pick = Some(i);
                    break;
                }
            }
            // rounding can leave `target` above the final partial sum
            pick.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).unwrap())
        } else {
            (0..n).find(|i| !chosen.contains(i)).unwrap()
        };
        chosen.push(next);
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
    }
    chosen.into_iter().map(|i| points[i].clone()).collect()
}

fn centroids_of(points: &[Vec<f64>], labels: &[usize], previous: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let dim = points[0].len();
    let k = previous.len();
    let mut sums = vec![vec![0.0; dim]; k];
    let mut counts = vec![0usize; k];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.into_iter()
        .zip(counts)
        .zip(previous)
        .map(|((s, c), prev)| if c == 0 { prev.clone() } else { s.into_iter().map(|x| x / c as f64).collect() })
        .collect()
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>) -> (Vec<usize>, f64) {
    let mut labels: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
    for _ in 0..MAX_ITERATIONS {
        centroids = centroids_of(points, &labels, &centroids);
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    let centroids = centroids_of(points, &labels, &centroids);
    let inertia = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
    (labels, inertia)
}

/// Fills empty clusters by repeatedly moving the point farthest from the
/// centroid of the largest cluster into an empty one.
pub(crate) fn repair_empty_clusters(points: &[Vec<f64>], labels: &mut [usize], k: usize) {
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            return;
        };
        let largest = (0..k).fold(0, |best, c| if sizes[c] > sizes[best] { c } else { best });
        let dim = points[0].len();
        let mut centroid = vec![0.0; dim];
        for (p, _) in points.iter().zip(labels.iter()).filter(|(_, &l)| l == largest) {
            for (c, x) in centroid.iter_mut().zip(p) {
                *c += x / sizes[largest] as f64;
            }
        }
        let mut far = (usize::MAX, -1.0);
        for (i, p) in points.iter().enumerate() {
            if labels[i] == largest {
                let d = sq_dist(p, &centroid);
                if d > far.1 {
                    far = (i, d);
                }
            }
        }
        labels[far.0] = empty;
    }
}

/// Partitions `points` into `k` non-empty clusters, keeping the lowest-inertia
/// result of [`RESTARTS`] seeded runs.
pub fn kmeans(points: &[Vec<f64>], k: usize, seed: u64) -> Result<ClusterAssignment> {
    if k == 0 {
        return param("k must be at least 1");
    }
    if k > points.len() {
        return param(format!("k = {k} exceeds the {} points", points.len()));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return param("points must share one dimension");
    }
    let mut rng = rng_from_seed(seed);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for _ in 0..RESTARTS {
        let init = plus_plus_seed(points, k, &mut rng);
        let (mut labels, _) = lloyd(points, init);
        repair_empty_clusters(points, &mut labels, k);
        let centroids = centroids_of(points, &labels, &vec![vec![0.0; dim]; k]);
        let inertia: f64 = points.iter().zip(&labels).map(|(p, &l)| sq_dist(p, &centroids[l])).sum();
        if best.as_ref().is_none_or(|(_, b)| inertia < *b) {
            best = Some((labels, inertia));
        }
    }
    let (labels, _) = best.unwrap();
    ClusterAssignment::from_labels(&labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::adjusted_rand_index;
    use rand_distr::{Distribution, StandardNormal};

    #[test]
    fn one_cluster() {
        let pts = vec![vec![0.0], vec![5.0], vec![9.0]];
        let a = kmeans(&pts, 1, 3).unwrap();
        assert_eq!(a.labels(), &[0, 0, 0]);
    }

    #[test]
    fn singletons_when_k_equals_n() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let a = kmeans(&pts, 6, 1).unwrap();
        assert_eq!(a.labels(), &[0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn duplicate_points_still_fill_every_cluster() {
        let pts = vec![vec![1.0]; 4];
        let a = kmeans(&pts, 3, 0).unwrap();
        assert_eq!(a.sizes().iter().sum::<usize>(), 4);
        assert!(a.sizes().iter().all(|&s| s > 0));
    }

    #[test]
    fn planted_blobs_are_recovered() {
        let mut rng = rng_from_seed(77);
        let spread = 0.1;
        let mut pts = Vec::new();
        let mut truth = Vec::new();
        for (c, centre) in [[0.0, 0.0], [1.0, 1.0]].iter().enumerate() {
            for _ in 0..20 {
                let dx: f64 = StandardNormal.sample(&mut rng);
                let dy: f64 = StandardNormal.sample(&mut rng);
                pts.push(vec![centre[0] + spread * dx, centre[1] + spread * dy]);
                truth.push(c);
            }
        }
        for seed in 0..5 {
            let a = kmeans(&pts, 2, seed).unwrap();
            assert_eq!(adjusted_rand_index(a.labels(), &truth), 1.0);
        }
    }

    #[test]
    fn too_many_clusters() {
        assert!(kmeans(&[vec![0.0]], 2, 0).is_err());
        assert!(kmeans(&[vec![0.0]], 0, 0).is_err());
    }

    #[test]
    fn repair_moves_farthest_point() {
        let pts = vec![vec![0.0], vec![0.1], vec![10.0]];
        let mut labels = vec![0, 0, 0];
        repair_empty_clusters(&pts, &mut labels, 2);
        assert_eq!(labels, vec![0, 0, 1]);
    }
}
