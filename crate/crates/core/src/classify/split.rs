use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded, label-stratified split. Returns `(train, test)` row indices, each
/// ascending. The test side holds `round(n * test_fraction)` rows shared out
/// between the classes by largest remainder (class 0 wins ties), clamped so
/// both sides keep at least one row of every class.
pub fn split_train_test(labels: &[u8], test_fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "test_fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let classes: Vec<Vec<usize>> = [0u8, 1]
        .iter()
        .map(|&c| (0..labels.len()).filter(|&i| labels[i] == c).collect())
        .collect();
    for (class, members) in classes.iter().enumerate() {
        if members.len() < 2 {
            return Err(Error::ClassTooSmall {
                class: class as u8,
                count: members.len(),
            });
        }
    }
    let quotas: Vec<f64> = classes.iter().map(|m| m.len() as f64 * test_fraction).collect();
    let mut n_test: Vec<usize> = quotas.iter().map(|q| (q + 1e-9).floor() as usize).collect();
    let total = ((labels.len() as f64 * test_fraction) + 1e-9).round() as usize;
    let mut by_remainder = [0usize, 1];
    by_remainder.sort_by(|&a, &b| (quotas[b] - n_test[b] as f64).total_cmp(&(quotas[a] - n_test[a] as f64)));
    for &c in by_remainder
        .iter()
        .cycle()
        .take(total.saturating_sub(n_test.iter().sum()))
    {
        n_test[c] += 1;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (mut members, k) in classes.into_iter().zip(n_test) {
        members.shuffle(&mut rng);
        let k = k.clamp(1, members.len() - 1);
        test.extend_from_slice(&members[..k]);
        train.extend_from_slice(&members[k..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn count(labels: &[u8], idx: &[usize], class: u8) -> usize {
        idx.iter().filter(|&&i| labels[i] == class).count()
    }

    #[test]
    fn stratified_proportions() {
        let labels: Vec<u8> = (0..100).map(|i| u8::from(i % 5 < 2)).collect();
        let (train, test) = split_train_test(&labels, 0.2, 4).unwrap();
        assert_eq!(count(&labels, &test, 0), 12);
        assert_eq!(count(&labels, &test, 1), 8);
        assert_eq!(train.len() + test.len(), 100);
    }

    #[test]
    fn same_seed_same_partition() {
        let labels: Vec<u8> = (0..37).map(|i| u8::from(i % 3 == 0)).collect();
        assert_eq!(
            split_train_test(&labels, 0.2, 9).unwrap(),
            split_train_test(&labels, 0.2, 9).unwrap()
        );
        assert_ne!(
            split_train_test(&labels, 0.2, 9).unwrap(),
            split_train_test(&labels, 0.2, 10).unwrap()
        );
    }

    #[test]
    fn half_split_of_ten() {
        let labels = [0, 1, 0, 1, 0, 1, 0, 1, 0, 1];
        let (train, test) = split_train_test(&labels, 0.5, 1).unwrap();
        assert_eq!((count(&labels, &test, 0), count(&labels, &test, 1)), (3, 2));
        assert_eq!(train.len(), 5);
        assert_eq!(test.len(), 5);
    }

    #[test]
    fn tiny_class_rejected() {
        assert!(matches!(
            split_train_test(&[0, 0, 0, 1], 0.2, 0),
            Err(Error::ClassTooSmall { class: 1, count: 1 })
        ));
        assert!(split_train_test(&[0, 0, 1, 1], 1.0, 0).is_err());
    }
}
