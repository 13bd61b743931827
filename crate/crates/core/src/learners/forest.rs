use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{build, BinnedData, Criterion, SampleStats, Tree, TreeParams};
use crate::rng::derive_seed_index;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub trees: usize,
    pub max_depth: usize,
    pub min_leaf: usize,
    /// Resample rows with replacement for each tree.
    pub bootstrap: bool,
}

impl Default for ForestParams {
    fn default() -> Self {
        Self {
            trees: 200,
            max_depth: 8,
            min_leaf: 3,
            bootstrap: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Mean leaf class frequency across trees.
    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }
}

pub fn fit(x: &[Vec<f64>], y: &[bool], params: &ForestParams, seed: u64) -> ForestModel {
    let data = BinnedData::new(x);
    let n = data.n_rows();
    let d = data.n_features();
    let tree_params = TreeParams {
        max_depth: params.max_depth,
        min_leaf: params.min_leaf as f64,
        features_per_split: Some(((d as f64).sqrt().floor() as usize).max(1)),
        criterion: Criterion::Gini,
    };
    let trees = (0..params.trees.max(1))
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed_index(seed, t as u64));
            let mut weight = vec![0.0; n];
            if params.bootstrap {
                for _ in 0..n {
                    weight[rng.random_range(0..n)] += 1.0;
                }
            } else {
                weight.iter_mut().for_each(|w| *w = 1.0);
            }
            let b = weight.iter().zip(y).map(|(w, &l)| if l { *w } else { 0.0 }).collect();
            let a = vec![0.0; n];
            build(&data, &SampleStats { weight, a, b }, &tree_params, &mut rng)
        })
        .collect();
    ForestModel { trees }
}
