use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::segments::N_CLASSES;
use crate::error::{Error, Result};

/// Assignment of every segment to one of `k` folds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldSplit {
    pub k: usize,
    pub fold_assignments: Vec<usize>,
}

impl FoldSplit {
    pub fn val_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_assignments.len())
            .filter(|&i| self.fold_assignments[i] == fold)
            .collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.fold_assignments.len())
            .filter(|&i| self.fold_assignments[i] != fold)
            .collect()
    }

    /// `counts[fold][class]`.
    pub fn class_counts(&self, labels: &[u8]) -> Vec<[usize; N_CLASSES]> {
        let mut counts = vec![[0; N_CLASSES]; self.k];
        for (&f, &l) in self.fold_assignments.iter().zip(labels) {
            counts[f][l as usize] += 1;
        }
        counts
    }
}

fn members_by_class(labels: &[u8], k: usize) -> Result<Vec<Vec<usize>>> {
    if k < 2 {
        return Err(Error::config(format!("cross-validation needs k >= 2, got {k}")));
    }
    let mut members = vec![Vec::new(); N_CLASSES];
    for (i, &l) in labels.iter().enumerate() {
        let slot = members
            .get_mut(l as usize)
            .ok_or_else(|| Error::Index(format!("label {l} outside {{0, 1, 2}}")))?;
        slot.push(i);
    }
    for (class, m) in members.iter().enumerate() {
        if !m.is_empty() && m.len() < k {
            return Err(Error::Stratification(format!(
                "class {class} has {} members, fewer than k = {k}",
                m.len()
            )));
        }
    }
    Ok(members)
}

/// Seeded shuffle within each class, then round-robin over folds.
///
/// The round-robin cursor carries over between classes so fold totals also differ by at most one.
pub fn stratified_kfold(labels: &[u8], k: usize, seed: u64) -> Result<FoldSplit> {
    let mut members = members_by_class(labels, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut cursor = 0;
    for class in members.iter_mut() {
        class.shuffle(&mut rng);
        for &i in class.iter() {
            assignments[i] = cursor % k;
            cursor += 1;
        }
    }
    Ok(FoldSplit {
        k,
        fold_assignments: assignments,
    })
}

/// Block-wise variant: each class is cut, in original order, into `k` contiguous runs.
pub fn contiguous_kfold(labels: &[u8], k: usize) -> Result<FoldSplit> {
    let members = members_by_class(labels, k)?;
    let mut assignments = vec![0; labels.len()];
    for class in &members {
        let n = class.len();
        for (r, &i) in class.iter().enumerate() {
            assignments[i] = r * k / n.max(1);
        }
    }
    Ok(FoldSplit {
        k,
        fold_assignments: assignments,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spread(split: &FoldSplit, labels: &[u8]) -> usize {
        let counts = split.class_counts(labels);
        (0..N_CLASSES)
            .map(|c| {
                let col: Vec<usize> = counts.iter().map(|f| f[c]).collect();
                col.iter().max().unwrap() - col.iter().min().unwrap()
            })
            .max()
            .unwrap()
    }

    #[test]
    fn five_of_each_class_gives_one_per_fold() {
        let labels: Vec<u8> = (0..15).map(|i| (i % 3) as u8).collect();
        let split = stratified_kfold(&labels, 5, 1).unwrap();
        for fold in split.class_counts(&labels) {
            assert_eq!(fold, [1, 1, 1]);
        }
    }

    #[test]
    fn balanced_300_gives_60_per_fold() {
        let labels: Vec<u8> = (0..300).map(|i| (i % 3) as u8).collect();
        let split = stratified_kfold(&labels, 5, 9).unwrap();
        for f in 0..5 {
            assert_eq!(split.val_indices(f).len(), 60);
        }
        for fold in split.class_counts(&labels) {
            assert_eq!(fold, [20, 20, 20]);
        }
        assert_eq!(split, stratified_kfold(&labels, 5, 9).unwrap());
        assert_ne!(split, stratified_kfold(&labels, 5, 10).unwrap());
    }

    #[test]
    fn too_few_members_is_an_error() {
        let labels = [0u8, 0, 0, 0, 1, 1, 1, 1, 1];
        assert!(matches!(stratified_kfold(&labels, 5, 0), Err(Error::Stratification(_))));
    }

    proptest! {
        #[test]
        fn spread_at_most_one(counts in prop::array::uniform3(5usize..60), seed in any::<u64>()) {
            let mut labels = Vec::new();
            for (c, &n) in counts.iter().enumerate() {
                labels.extend(std::iter::repeat(c as u8).take(n));
            }
            labels.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let split = stratified_kfold(&labels, 5, seed).unwrap();
            prop_assert!(spread(&split, &labels) <= 1);
            let contiguous = contiguous_kfold(&labels, 5).unwrap();
            prop_assert!(spread(&contiguous, &labels) <= 1);
            for f in 0..5 {
                let val = split.val_indices(f);
                let train = split.train_indices(f);
                prop_assert_eq!(val.len() + train.len(), labels.len());
                prop_assert!(val.iter().all(|i| !train.contains(i)));
            }
        }
    }
}
