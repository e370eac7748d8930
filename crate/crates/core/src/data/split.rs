use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::DataError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub shuffle: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self { train_fraction: 0.8, seed: 42, shuffle: true }
    }
}

/// Train and test row indices: `floor(train_fraction * n)` rows go to train.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<(Vec<usize>, Vec<usize>), DataError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::DegenerateSplit(format!(
            "train_fraction must lie strictly between 0 and 1, got {}",
            spec.train_fraction
        )));
    }
    let n_train = (spec.train_fraction * n as f64).floor() as usize;
    if n_train == 0 || n_train == n {
        return Err(DataError::DegenerateSplit(format!("{n} rows give an empty partition")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if spec.shuffle {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(spec.seed));
    }
    let test = order.split_off(n_train);
    Ok((order, test))
}

pub fn split<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>), DataError> {
    let (train, test) = split_indices(items.len(), spec)?;
    Ok((
        train.into_iter().map(|i| items[i].clone()).collect(),
        test.into_iter().map(|i| items[i].clone()).collect(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn full_dataset_sizes() {
        let (train, test) = split_indices(125_973, &SplitSpec::default()).unwrap();
        assert_eq!(train.len(), 100_778);
        assert_eq!(test.len(), 25_195);
    }

    #[test]
    fn reproducible_under_seed() {
        let spec = SplitSpec { train_fraction: 0.8, seed: 7, shuffle: true };
        let a = split_indices(10, &spec).unwrap();
        let b = split_indices(10, &spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.0.len(), 8);
        assert_eq!(a.1.len(), 2);
    }

    #[test]
    fn degenerate_fractions() {
        for f in [0.0, 1.0, 1.5, -0.1, f64::NAN] {
            let spec = SplitSpec { train_fraction: f, ..Default::default() };
            assert!(matches!(split_indices(10, &spec), Err(DataError::DegenerateSplit(_))));
        }
        let spec = SplitSpec { train_fraction: 0.5, ..Default::default() };
        assert!(matches!(split_indices(1, &spec), Err(DataError::DegenerateSplit(_))));
    }

    #[test]
    fn unshuffled_split_keeps_order() {
        let spec = SplitSpec { train_fraction: 0.6, seed: 0, shuffle: false };
        let (train, test) = split(&["a", "b", "c", "d", "e"], &spec).unwrap();
        assert_eq!(train, vec!["a", "b", "c"]);
        assert_eq!(test, vec!["d", "e"]);
    }

    proptest! {
        #[test]
        fn partitions_disjoint_and_exhaustive(n in 2usize..500, frac in 0.05f64..0.95, seed in any::<u64>()) {
            let spec = SplitSpec { train_fraction: frac, seed, shuffle: true };
            if let Ok((train, test)) = split_indices(n, &spec) {
                prop_assert_eq!(train.len(), (frac * n as f64).floor() as usize);
                let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
                all.sort_unstable();
                prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            }
        }
    }
}
