use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::phasor::{Dataset, EventClass};
use crate::rng::{self, stream};

/// Index partition of a dataset; both sides in ascending dataset order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

fn class_indices(ds: &Dataset, class: EventClass) -> Vec<usize> {
    (0..ds.len()).filter(|&i| ds.records[i].label == class).collect()
}

/// Per-class random partition with `round(fraction · n_class)` training
/// records from each class.
pub fn stratified_split(ds: &Dataset, fraction: f64, seed: u64) -> Result<Split> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!("training fraction {fraction} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for class in EventClass::ALL {
        let mut idx = class_indices(ds, class);
        let n_train = (fraction * idx.len() as f64).round() as usize;
        if n_train == 0 || n_train == idx.len() {
            return Err(Error::invalid(format!(
                "fraction {fraction} leaves an empty side for {class} ({} records)",
                idx.len()
            )));
        }
        let mut r = rng::rng(rng::derive(seed, stream::SPLIT, class.code() as u64));
        idx.shuffle(&mut r);
        train.extend_from_slice(&idx[..n_train]);
        test.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, test })
}

/// `per_class` random records of each class, in dataset order.
pub fn stratified_subsample(ds: &Dataset, per_class: usize, seed: u64) -> Result<Dataset> {
    let mut keep = Vec::new();
    for class in EventClass::ALL {
        let mut idx = class_indices(ds, class);
        if idx.len() < per_class {
            return Err(Error::invalid(format!(
                "{class} has {} records, {per_class} requested",
                idx.len()
            )));
        }
        let mut r = rng::rng(rng::derive(seed, stream::SUBSAMPLE, class.code() as u64));
        idx.shuffle(&mut r);
        keep.extend_from_slice(&idx[..per_class]);
    }
    keep.sort_unstable();
    Ok(ds.subset(&keep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::Exec;
    use crate::phasor::class_counts;
    use crate::synth::{build_dataset, GeneratorConfig};
    use std::collections::BTreeSet;

    fn dataset() -> Dataset {
        build_dataset(&GeneratorConfig::default().with_seed(1), Exec::Parallel).unwrap()
    }

    #[test]
    fn half_split_has_75_per_class() {
        let ds = dataset();
        let s = stratified_split(&ds, 0.5, 3).unwrap();
        let test = ds.subset(&s.test);
        assert!(class_counts(&test).values().all(|&n| n == 75));
        let train: BTreeSet<usize> = s.train.iter().copied().collect();
        let test: BTreeSet<usize> = s.test.iter().copied().collect();
        assert!(train.is_disjoint(&test));
        assert_eq!(train.union(&test).count(), ds.len());
        assert_eq!(stratified_split(&ds, 0.5, 3).unwrap(), s);
        assert_ne!(stratified_split(&ds, 0.5, 4).unwrap(), s);
    }

    #[test]
    fn train_sizes_round() {
        let ds = dataset();
        for (f, n) in [(0.2, 30), (0.9, 135), (0.33, 50)] {
            let s = stratified_split(&ds, f, 0).unwrap();
            assert_eq!(s.train.len(), 3 * n);
        }
    }

    #[test]
    fn bad_fractions() {
        let ds = dataset();
        for f in [0.0, 1.0, 1.5, -0.2, 0.001, 0.999] {
            assert!(stratified_split(&ds, f, 0).is_err(), "{f}");
        }
    }

    #[test]
    fn subsample_is_stratified() {
        let ds = dataset();
        let sub = stratified_subsample(&ds, 30, 2).unwrap();
        assert_eq!(sub.len(), 90);
        assert!(class_counts(&sub).values().all(|&n| n == 30));
        assert!(stratified_subsample(&ds, 151, 2).is_err());
    }
}
