use rand::seq::SliceRandom;
use rand_distr::{Distribution, Gamma};

use super::{ClientDataset, Dataset};
use crate::error::{param, Error, Result};
use crate::rng::rng_from_seed;

/// Whole-partition redraws allowed before giving up on a non-empty split.
pub const MAX_PARTITION_ATTEMPTS: u64 = 100;

/// Splits every class across clients with proportions drawn from a symmetric
/// Dirichlet(alpha). If any client ends up empty the whole partition is redrawn
/// with seed `seed + attempt`.
pub fn dirichlet_partition(dataset: &Dataset, n_clients: usize, alpha: f64, seed: u64) -> Result<Vec<ClientDataset>> {
    if n_clients == 0 {
        return param("n_clients must be at least 1");
    }
    if !(alpha.is_finite() && alpha > 0.0) {
        return param(format!("alpha must be positive and finite, got {alpha}"));
    }
    if dataset.len() < n_clients {
        return Err(Error::Partition(format!(
            "{} samples cannot cover {n_clients} clients",
            dataset.len()
        )));
    }
    let gamma = Gamma::new(alpha, 1.0).map_err(|e| Error::Parameter(e.to_string()))?;
    let by_class: Vec<Vec<usize>> = (0..dataset.classes()).map(|c| dataset.indices_of_class(c)).collect();

    for attempt in 0..MAX_PARTITION_ATTEMPTS {
        let mut rng = rng_from_seed(seed.wrapping_add(attempt));
        let mut shards = vec![Vec::new(); n_clients];
        let mut degenerate = false;
        for members in &by_class {
            let mut members = members.clone();
            members.shuffle(&mut rng);
            let draws: Vec<f64> = (0..n_clients).map(|_| gamma.sample(&mut rng)).collect();
            let total: f64 = draws.iter().sum();
            if !(total > 0.0) {
                // Every gamma draw underflowed; the simplex point is undefined.
                degenerate = true;
                break;
            }
            let mut cumulative = 0.0;
            let mut start = 0;
            for (k, shard) in shards.iter_mut().enumerate() {
                cumulative += draws[k] / total;
                let end = if k + 1 == n_clients {
                    members.len()
                } else {
                    ((cumulative * members.len() as f64).floor() as usize).clamp(start, members.len())
                };
                shard.extend_from_slice(&members[start..end]);
                start = end;
            }
        }
        if degenerate || shards.iter().any(Vec::is_empty) {
            continue;
        }
        return Ok(shards
            .into_iter()
            .enumerate()
            .map(|(client_id, mut indices)| {
                indices.sort_unstable();
                ClientDataset { client_id, indices }
            })
            .collect());
    }
    Err(Error::Partition(format!(
        "no partition with every client non-empty after {MAX_PARTITION_ATTEMPTS} attempts (alpha={alpha}, n_clients={n_clients})"
    )))
}
