//! Stratified train/validation/test partitioning.

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Splits indices so every class is divided in the given proportions
/// (largest-remainder rounding, so within one sample of exact). Each
/// partition with a nonzero fraction receives at least one sample per class.
pub fn stratified_split(labels: &[usize], fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let f = [fractions.0, fractions.1, fractions.2];
    if f.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!("split fractions {f:?} must be nonnegative and sum to 1")));
    }
    let active = f.iter().filter(|v| **v > 0.0).count();
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for class in 0..n_classes {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.is_empty() {
            continue;
        }
        if idx.len() < active {
            return Err(Error::Stratification(format!(
                "class {class} has {} samples for {active} partitions",
                idx.len()
            )));
        }
        idx.shuffle(&mut rng::substream(seed, "split", class as u64));
        let counts = allocate(idx.len(), &f);
        let mut start = 0;
        for (p, c) in parts.iter_mut().zip(counts) {
            p.extend_from_slice(&idx[start..start + c]);
            start += c;
        }
    }
    for p in &mut parts {
        p.sort_unstable();
    }
    let [train, val, test] = parts;
    Ok(Split { train, val, test })
}

fn allocate(n: usize, f: &[f64; 3]) -> [usize; 3] {
    let exact: Vec<f64> = f.iter().map(|v| v * n as f64).collect();
    let mut counts = [0usize; 3];
    for (c, e) in counts.iter_mut().zip(&exact) {
        *c = e.floor() as usize;
    }
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| (exact[b] - exact[b].floor()).total_cmp(&(exact[a] - exact[a].floor())).then(a.cmp(&b)));
    let mut left = n - counts.iter().sum::<usize>();
    for &k in order.iter().cycle() {
        if left == 0 {
            break;
        }
        if f[k] > 0.0 {
            counts[k] += 1;
            left -= 1;
        }
    }
    for k in 0..3 {
        if f[k] > 0.0 && counts[k] == 0 {
            let donor = (0..3).max_by_key(|&j| counts[j]).unwrap_or(0);
            counts[donor] -= 1;
            counts[k] += 1;
        }
    }
    counts
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn sixty_twenty_twenty() {
        let labels: Vec<usize> = (0..100).map(|i| if i < 34 { 0 } else if i < 67 { 1 } else { 2 }).collect();
        let s = stratified_split(&labels, (0.6, 0.2, 0.2), 5).unwrap();
        for class in 0..3 {
            let n = labels.iter().filter(|&&l| l == class).count() as f64;
            for (part, frac) in [(&s.train, 0.6), (&s.val, 0.2), (&s.test, 0.2)] {
                let got = part.iter().filter(|&&i| labels[i] == class).count() as f64;
                assert!((got - frac * n).abs() <= 1.0, "class {class}: {got} vs {}", frac * n);
            }
        }
        assert_eq!(s, stratified_split(&labels, (0.6, 0.2, 0.2), 5).unwrap());
        assert_ne!(s, stratified_split(&labels, (0.6, 0.2, 0.2), 6).unwrap());
    }

    #[test]
    fn all_train_and_errors() {
        let labels = vec![0, 1, 1, 0, 2];
        let s = stratified_split(&labels, (1.0, 0.0, 0.0), 1).unwrap();
        assert_eq!(s.train, vec![0, 1, 2, 3, 4]);
        assert!(s.val.is_empty() && s.test.is_empty());
        assert!(matches!(
            stratified_split(&labels, (0.6, 0.2, 0.2), 1),
            Err(Error::Stratification(_))
        ));
        assert!(stratified_split(&labels, (0.6, 0.2, 0.3), 1).is_err());
    }

    proptest! {
        #[test]
        fn disjoint_exhaustive_proportional(
            labels in proptest::collection::vec(0usize..4, 12..200),
            seed in 0u64..1000,
            a in 0.3f64..0.8,
        ) {
            let b = (1.0 - a) / 2.0;
            match stratified_split(&labels, (a, b, 1.0 - a - b), seed) {
                Ok(s) => {
                    let mut all: Vec<usize> = s.train.iter().chain(&s.val).chain(&s.test).copied().collect();
                    all.sort_unstable();
                    prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
                    for class in 0..4 {
                        let n = labels.iter().filter(|&&l| l == class).count() as f64;
                        let got = s.train.iter().filter(|&&i| labels[i] == class).count() as f64;
                        // Within one of the ideal share, plus one per minority
                        // partition whose share had to be raised to a single sample.
                        let floors = [b, 1.0 - a - b].iter().filter(|&&f| f * n < 1.0).count() as f64;
                        prop_assert!((got - a * n).abs() <= 1.0 + floors + 1e-9, "class {} n {} got {}", class, n, got);
                    }
                }
                Err(Error::Stratification(_)) => {}
                Err(e) => prop_assert!(false, "{e}"),
            }
        }
    }
}
