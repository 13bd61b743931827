use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ResponseSet;
use crate::rng::rng_for;

pub const DEFAULT_GROUP_SIZE: usize = 30;

/// A fixed-size sample of one problem's response pool.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VirtualGroup {
    pub group_id: String,
    pub problem_id: String,
    pub responses: ResponseSet,
}

/// Draws `count_per_problem` groups of `size` responses (without replacement
/// within a group) from every pool. Group ids are `{problem_id}#{k}`.
///
/// Each problem's draws depend only on the seed and its id, so adding or
/// reordering pools leaves other problems' groups unchanged.
pub fn sample_virtual_groups(
    pools: &[ResponseSet],
    size: usize,
    count_per_problem: usize,
    seed: u64,
) -> Result<Vec<VirtualGroup>> {
    let mut groups = Vec::with_capacity(pools.len() * count_per_problem);
    for pool in pools {
        if size == 0 || pool.len() < size {
            return Err(Error::PoolTooSmall {
                problem_id: pool.problem_id().to_string(),
                pool: pool.len(),
                size,
            });
        }
        let mut rng = rng_for(seed, pool.problem_id());
        for k in 0..count_per_problem {
            let mut idx = sample(&mut rng, pool.len(), size).into_vec();
            idx.sort_unstable();
            groups.push(VirtualGroup {
                group_id: format!("{}#{k}", pool.problem_id()),
                problem_id: pool.problem_id().to_string(),
                responses: pool.subset(&idx)?,
            });
        }
    }
    Ok(groups)
}

/// Treats every pool as a single group without resampling.
pub fn whole_pools(pools: &[ResponseSet]) -> Vec<VirtualGroup> {
    pools
        .iter()
        .map(|p| VirtualGroup {
            group_id: p.problem_id().to_string(),
            problem_id: p.problem_id().to_string(),
            responses: p.clone(),
        })
        .collect()
}
