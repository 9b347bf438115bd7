//! Random three-way partition into labeled calibration, unlabeled
//! calibration, and evaluation index sets.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ScoreDataset;
use crate::error::{Error, Result};

/// Disjoint sample index sets; their union covers the full dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub labeled: Vec<usize>,
    pub unlabeled: Vec<usize>,
    pub eval: Vec<usize>,
}

/// Split a dataset into labeled / unlabeled / evaluation partitions.
///
/// The remainder after the two calibration partitions becomes the evaluation
/// set, so `n_labeled + n_unlabeled` must stay below the sample count.
/// Deterministic given `seed`; indices are returned sorted within each
/// partition.
pub fn split(
    dataset: &ScoreDataset,
    n_labeled: usize,
    n_unlabeled: usize,
    seed: u64,
) -> Result<SplitIndices> {
    let n = dataset.len();
    let requested = n_labeled
        .checked_add(n_unlabeled)
        .ok_or(Error::SplitCounts {
            requested: usize::MAX,
            available: n,
        })?;
    if requested >= n {
        return Err(Error::SplitCounts {
            requested,
            available: n,
        });
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let mut labeled = order[..n_labeled].to_vec();
    let mut unlabeled = order[n_labeled..n_labeled + n_unlabeled].to_vec();
    let mut eval = order[n_labeled + n_unlabeled..].to_vec();
    labeled.sort_unstable();
    unlabeled.sort_unstable();
    eval.sort_unstable();
    Ok(SplitIndices {
        labeled,
        unlabeled,
        eval,
    })
}

impl SplitIndices {
    /// Materialize the three partitions. The unlabeled partition drops its
    /// labels; the other two keep them when present.
    pub fn materialize(
        &self,
        dataset: &ScoreDataset,
    ) -> Result<(ScoreDataset, ScoreDataset, ScoreDataset)> {
        Ok((
            dataset.subset(&self.labeled, true)?,
            dataset.subset(&self.unlabeled, false)?,
            dataset.subset(&self.eval, true)?,
        ))
    }
}
