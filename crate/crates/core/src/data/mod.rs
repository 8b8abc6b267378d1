//! Datasets, client partitions and class-distribution statistics.

mod idx;
mod partition;
mod synthetic;

pub use idx::{assemble_idx, load_idx, parse_idx_images, parse_idx_labels, IdxImages, IMAGES_MAGIC, LABELS_MAGIC};
pub use partition::{dirichlet_partition, MAX_PARTITION_ATTEMPTS};
pub use synthetic::{class_mean, generate_synthetic, train_test_split, MEAN_SCALE, TEST_FRACTION};

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};

/// Labelled samples with a fixed feature dimension. Features are stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    labels: Vec<usize>,
    dim: usize,
    classes: usize,
}

impl Dataset {
    pub fn new(features: Vec<f64>, labels: Vec<usize>, dim: usize, classes: usize) -> Result<Self> {
        if dim == 0 {
            return param("feature dimension must be at least 1");
        }
        if features.len() != labels.len() * dim {
            return param(format!(
                "{} feature values do not match {} labels of dimension {dim}",
                features.len(),
                labels.len()
            ));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= classes) {
            return param(format!("label {bad} outside 0..{classes}"));
        }
        Ok(Self { features, labels, dim, classes })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn feature(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// Copies the selected rows, in the given order, into a new dataset.
    pub fn subset(&self, indices: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.feature(i));
            labels.push(self.labels[i]);
        }
        Dataset { features, labels, dim: self.dim, classes: self.classes }
    }

    /// Indices of every sample of class `c`, ascending.
    pub fn indices_of_class(&self, c: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter_map(|(i, &l)| (l == c).then_some(i))
            .collect()
    }
}

/// One client's shard: positions into the training dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClientDataset {
    pub client_id: usize,
    pub indices: Vec<usize>,
}

impl ClientDataset {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

/// Per-class sample proportions of a client together with its sample count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassDistribution {
    pub proportions: Vec<f64>,
    pub count: usize,
}

impl ClassDistribution {
    /// Builds a distribution from raw per-class counts.
    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        let total: usize = counts.iter().sum();
        if total == 0 {
            return param("class distribution of an empty client");
        }
        let proportions = counts.iter().map(|&c| c as f64 / total as f64).collect();
        Ok(Self { proportions, count: total })
    }

    pub fn classes(&self) -> usize {
        self.proportions.len()
    }
}

pub fn class_distribution(client: &ClientDataset, dataset: &Dataset) -> Result<ClassDistribution> {
    if client.is_empty() {
        return param(format!("client {} has no samples", client.client_id));
    }
    let mut counts = vec![0usize; dataset.classes()];
    for &i in &client.indices {
        if i >= dataset.len() {
            return param(format!("client {} references sample {i} out of range", client.client_id));
        }
        counts[dataset.label(i)] += 1;
    }
    ClassDistribution::from_counts(&counts)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labelled(labels: &[usize], classes: usize) -> Dataset {
        Dataset::new(vec![0.0; labels.len()], labels.to_vec(), 1, classes).unwrap()
    }

    #[test]
    fn distribution_counts_labels() {
        let ds = labelled(&[0, 0, 1, 3], 4);
        let client = ClientDataset { client_id: 0, indices: vec![0, 1, 2, 3] };
        let d = class_distribution(&client, &ds).unwrap();
        assert_eq!(d.proportions, vec![0.5, 0.25, 0.0, 0.25]);
        assert_eq!(d.count, 4);
    }

    #[test]
    fn single_sample_client() {
        let ds = labelled(&[0, 1, 2, 3], 4);
        let client = ClientDataset { client_id: 7, indices: vec![2] };
        let d = class_distribution(&client, &ds).unwrap();
        assert_eq!(d.proportions, vec![0.0, 0.0, 1.0, 0.0]);
        assert_eq!(d.count, 1);
    }

    #[test]
    fn empty_client_is_rejected() {
        let ds = labelled(&[0, 1], 2);
        let client = ClientDataset { client_id: 0, indices: vec![] };
        assert!(matches!(class_distribution(&client, &ds), Err(crate::Error::Parameter(_))));
    }

    #[test]
    fn dataset_rejects_out_of_range_label() {
        assert!(Dataset::new(vec![0.0, 0.0], vec![0, 2], 1, 2).is_err());
        assert!(Dataset::new(vec![0.0], vec![0, 1], 1, 2).is_err());
        assert!(Dataset::new(vec![], vec![], 0, 2).is_err());
    }
}
