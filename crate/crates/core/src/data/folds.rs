//! Subject-independent fold assignment.
//!
//! Distinct subject ids are sorted ascending (numerically when every id is
//! an integer, lexicographically otherwise) and the subject at sorted
//! position `p` goes to fold `p mod n_folds`. In trial `t` fold `t` is the
//! test fold, fold `(t + 1) mod n_folds` the validation fold and the rest
//! are for training.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::data::index::DatasetIndex;
use crate::error::{Error, Result};
use crate::rng::SplitMix64;

pub const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n_folds: usize,
    /// Subjects in assignment order.
    pub subjects: Vec<String>,
    assignment: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TrialRoles {
    pub test: usize,
    pub validation: usize,
    pub train: Vec<usize>,
}

/// Ascending subject order, numeric when all ids parse as integers.
pub fn sort_subjects(mut ids: Vec<String>) -> Vec<String> {
    ids.sort_unstable();
    ids.dedup();
    let numeric: Option<Vec<u128>> = ids.iter().map(|s| s.trim().parse::<u128>().ok()).collect();
    if let Some(keys) = numeric {
        let mut keyed: Vec<(u128, String)> = keys.into_iter().zip(ids).collect();
        keyed.sort();
        keyed.into_iter().map(|(_, s)| s).collect()
    } else {
        ids
    }
}

pub fn subject_folds(index: &DatasetIndex, n_folds: usize) -> Result<FoldPlan> {
    let ids = index.records.iter().map(|r| r.subject_id.clone()).collect();
    FoldPlan::from_subjects(ids, n_folds)
}

impl FoldPlan {
    pub fn from_subjects(ids: Vec<String>, n_folds: usize) -> Result<Self> {
        if n_folds < 3 {
            return Err(Error::InvalidConfig(format!("need at least 3 folds, got {n_folds}")));
        }
        let subjects = sort_subjects(ids);
        if subjects.len() < n_folds {
            return Err(Error::TooFewSubjects { needed: n_folds, found: subjects.len() });
        }
        let assignment = subjects.iter().enumerate().map(|(p, s)| (s.clone(), p % n_folds)).collect();
        Ok(FoldPlan { n_folds, subjects, assignment })
    }

    pub fn fold_of(&self, subject: &str) -> Option<usize> {
        self.assignment.get(subject).copied()
    }

    pub fn subjects_in(&self, fold: usize) -> Vec<&str> {
        self.subjects.iter().filter(|s| self.assignment[s.as_str()] == fold).map(String::as_str).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in self.assignment.values() {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn trial(&self, t: usize) -> TrialRoles {
        let t = t % self.n_folds;
        let validation = (t + 1) % self.n_folds;
        let train = (0..self.n_folds).filter(|&f| f != t && f != validation).collect();
        TrialRoles { test: t, validation, train }
    }

    /// `subject_id,fold` rows in assignment order.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("subject_id,fold\n");
        for s in &self.subjects {
            writeln!(out, "{s},{}", self.assignment[s]).unwrap();
        }
        out
    }

    /// Reads a plan written by [`FoldPlan::to_csv`]. The fold count is taken
    /// as one more than the largest fold index.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut subjects = Vec::new();
        let mut assignment = BTreeMap::new();
        for (i, row) in text.lines().enumerate() {
            let line = i + 1;
            let row = row.trim();
            if row.is_empty() || (line == 1 && row == "subject_id,fold") {
                continue;
            }
            let (subject, fold) = row
                .split_once(',')
                .ok_or_else(|| Error::Parse { line, message: "expected subject_id,fold".into() })?;
            let fold: usize = fold
                .trim()
                .parse()
                .map_err(|_| Error::Parse { line, message: format!("bad fold index {fold:?}") })?;
            if assignment.insert(subject.to_string(), fold).is_some() {
                return Err(Error::Parse { line, message: format!("subject {subject:?} listed twice") });
            }
            subjects.push(subject.to_string());
        }
        let n_folds = assignment.values().max().map_or(0, |m| m + 1);
        if n_folds == 0 {
            return Err(Error::Parse { line: 1, message: "fold plan lists no subjects".into() });
        }
        Ok(FoldPlan { n_folds, subjects, assignment })
    }
}

/// Keeps 4 of the 8 training folds of a trial, chosen by `seed`.
pub fn reduce_training_folds(train_folds: &[usize], seed: u64) -> Result<Vec<usize>> {
    if train_folds.len() != 8 {
        return Err(Error::WrongFoldCount { expected: 8, found: train_folds.len() });
    }
    let mut folds = train_folds.to_vec();
    SplitMix64::derived(seed, 2).shuffle(&mut folds);
    let mut kept = folds[..4].to_vec();
    kept.sort_unstable();
    Ok(kept)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ids(n: usize, fmt: impl Fn(usize) -> String) -> Vec<String> {
        (0..n).map(fmt).collect()
    }

    #[test]
    fn ten_subjects_one_per_fold() {
        let plan = FoldPlan::from_subjects(ids(10, |i| format!("S{:03}", 10 - i)), 10).unwrap();
        assert_eq!(plan.fold_sizes(), vec![1; 10]);
        assert_eq!(plan.subjects_in(0), vec!["S001"]);
        assert_eq!(plan.subjects_in(9), vec!["S010"]);
    }

    #[test]
    fn twenty_five_subjects() {
        let plan = FoldPlan::from_subjects(ids(25, |i| format!("p{i:02}")), 10).unwrap();
        assert_eq!(plan.fold_sizes(), vec![3, 3, 3, 3, 3, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn fold_two_of_123() {
        let plan = FoldPlan::from_subjects(ids(123, |i| format!("S{:03}", i + 1)), 10).unwrap();
        let expected: Vec<String> = (0..13).map(|k| format!("S{:03}", 2 + 10 * k + 1)).collect();
        assert_eq!(plan.subjects_in(2), expected.iter().map(String::as_str).collect::<Vec<_>>());
    }

    #[test]
    fn numeric_ids_sort_numerically() {
        let sorted = sort_subjects(vec!["10".into(), "9".into(), "100".into(), "9".into()]);
        assert_eq!(sorted, vec!["9", "10", "100"]);
        let mixed = sort_subjects(vec!["10".into(), "9".into(), "a".into()]);
        assert_eq!(mixed, vec!["10", "9", "a"]);
    }

    #[test]
    fn too_few_subjects() {
        assert!(matches!(
            FoldPlan::from_subjects(ids(9, |i| i.to_string()), 10),
            Err(Error::TooFewSubjects { needed: 10, found: 9 })
        ));
    }

    #[test]
    fn trial_roles() {
        let plan = FoldPlan::from_subjects(ids(10, |i| i.to_string()), 10).unwrap();
        let last = plan.trial(9);
        assert_eq!((last.test, last.validation), (9, 0));
        assert_eq!(last.train, (1..9).collect::<Vec<_>>());
    }

    #[test]
    fn csv_round_trip() {
        let plan = FoldPlan::from_subjects(ids(23, |i| format!("sub{i}")), 10).unwrap();
        assert_eq!(FoldPlan::from_csv(&plan.to_csv()).unwrap(), plan);
    }

    #[test]
    fn reduction_contract() {
        let train = vec![2, 3, 4, 5, 6, 7, 8, 9];
        let kept = reduce_training_folds(&train, 17).unwrap();
        assert_eq!(kept, reduce_training_folds(&train, 17).unwrap());
        assert_eq!(kept.len(), 4);
        assert!(kept.iter().all(|f| train.contains(f)));
        assert!(matches!(reduce_training_folds(&train[..7], 0), Err(Error::WrongFoldCount { expected: 8, found: 7 })));
    }

    #[test]
    fn reduction_is_unbiased() {
        let train: Vec<usize> = (2..10).collect();
        let mut kept = [0usize; 10];
        for seed in 0..100 {
            for f in reduce_training_folds(&train, seed).unwrap() {
                kept[f] += 1;
            }
        }
        for f in &train {
            let freq = kept[*f] as f64 / 100.0;
            assert!((freq - 0.5).abs() <= 0.15, "fold {f} kept {freq}");
        }
    }
}
