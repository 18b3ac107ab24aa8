use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{CliError, Result};

/// Row indices (into the source file) of each partition.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Subset of `train`, in sampling order.
    pub reference: Vec<usize>,
}

/// Seeded shuffle of `0..n`; the first `⌈fraction·n⌉` rows train, the rest
/// test, and `n_ref` train rows are drawn without replacement as reference.
pub fn split_and_sample(n: usize, fraction: f64, n_ref: usize, seed: u64) -> Result<Split> {
    if n < 3 {
        return Err(CliError::Data(format!("need at least 3 rows, found {n}")));
    }
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(CliError::Config(format!("split fraction {fraction} not in (0, 1)")));
    }
    if n_ref == 0 {
        return Err(CliError::Config("reference size must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = ((fraction * n as f64).ceil() as usize).min(n);
    let test = order.split_off(n_train);
    let train = order;
    if n_ref > train.len() {
        return Err(CliError::Config(format!(
            "reference size {n_ref} exceeds train size {}",
            train.len()
        )));
    }
    let reference = index::sample(&mut rng, train.len(), n_ref)
        .into_iter()
        .map(|k| train[k])
        .collect();
    Ok(Split { train, test, reference })
}
