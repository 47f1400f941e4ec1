use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::profile::{split_subsequences, MeasurementProfile};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FoldRole {
    Train,
    Fold1,
    Fold2,
    Generalization,
}

/// User-supplied assignment of profile ids to the four disjoint sets.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FoldPlan {
    #[serde(default)]
    pub train: Vec<String>,
    #[serde(default)]
    pub fold_1: Vec<String>,
    #[serde(default)]
    pub fold_2: Vec<String>,
    #[serde(default)]
    pub generalization: Vec<String>,
}

impl FoldPlan {
    pub fn assignments(&self) -> Result<BTreeMap<&str, FoldRole>> {
        let mut map = BTreeMap::new();
        let groups = [
            (FoldRole::Train, &self.train),
            (FoldRole::Fold1, &self.fold_1),
            (FoldRole::Fold2, &self.fold_2),
            (FoldRole::Generalization, &self.generalization),
        ];
        for (role, ids) in groups {
            for id in ids {
                if let Some(prev) = map.insert(id.as_str(), role) {
                    return Err(Error::Plan(format!(
                        "profile `{id}` assigned to both {prev:?} and {role:?}"
                    )));
                }
            }
        }
        Ok(map)
    }

    pub fn role_of(&self, id: &str) -> Option<FoldRole> {
        self.assignments().ok()?.get(id).copied()
    }
}

/// Profiles partitioned by a [`FoldPlan`].
#[derive(Debug, Clone)]
pub struct FoldSets {
    pub train: Vec<MeasurementProfile>,
    pub fold_1: Vec<MeasurementProfile>,
    pub fold_2: Vec<MeasurementProfile>,
    pub generalization: Vec<MeasurementProfile>,
}

/// Which fold plays validation (early stopping) and which plays test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CvIteration {
    /// validate on fold 1, test on fold 2
    First,
    /// validate on fold 2, test on fold 1
    Second,
}

/// Data for one training run.
#[derive(Debug, Clone)]
pub struct CvSplit {
    pub train: Vec<MeasurementProfile>,
    pub validation: Vec<MeasurementProfile>,
    pub test: Vec<MeasurementProfile>,
}

impl CvSplit {
    /// Replaces every training profile by its subsequences.
    pub fn with_subsequences(mut self, length: usize) -> Result<Self> {
        let mut train = Vec::new();
        for p in &self.train {
            train.extend(split_subsequences(p, length)?);
        }
        self.train = train;
        Ok(self)
    }
}

impl FoldSets {
    pub fn split(&self, iteration: CvIteration) -> CvSplit {
        let (validation, test) = match iteration {
            CvIteration::First => (&self.fold_1, &self.fold_2),
            CvIteration::Second => (&self.fold_2, &self.fold_1),
        };
        CvSplit {
            train: self.train.clone(),
            validation: validation.clone(),
            test: test.clone(),
        }
    }

    pub fn all(&self) -> impl Iterator<Item = &MeasurementProfile> {
        self.train
            .iter()
            .chain(&self.fold_1)
            .chain(&self.fold_2)
            .chain(&self.generalization)
    }
}

/// Partitions profiles according to `plan`.
///
/// Every profile must be assigned; each of the four sets must end up non-empty.
/// Plan entries naming unknown profiles are ignored with a warning.
pub fn make_folds(profiles: &[MeasurementProfile], plan: &FoldPlan) -> Result<FoldSets> {
    let assignments = plan.assignments()?;
    let mut sets = FoldSets {
        train: Vec::new(),
        fold_1: Vec::new(),
        fold_2: Vec::new(),
        generalization: Vec::new(),
    };
    let mut seen = HashSet::new();
    for p in profiles {
        if !seen.insert(p.id()) {
            return Err(Error::Plan(format!("profile id `{}` occurs twice", p.id())));
        }
        let role = assignments
            .get(p.id())
            .ok_or_else(|| Error::Plan(format!("profile `{}` is not assigned to any set", p.id())))?;
        let target = match role {
            FoldRole::Train => &mut sets.train,
            FoldRole::Fold1 => &mut sets.fold_1,
            FoldRole::Fold2 => &mut sets.fold_2,
            FoldRole::Generalization => &mut sets.generalization,
        };
        target.push(p.clone());
    }
    let unknown: Vec<&str> = assignments.keys().copied().filter(|id| !seen.contains(id)).collect();
    if !unknown.is_empty() {
        log::warn!("fold plan names unknown profiles: {}", unknown.join(", "));
    }
    for (name, set) in [
        ("train", &sets.train),
        ("fold_1", &sets.fold_1),
        ("fold_2", &sets.fold_2),
        ("generalization", &sets.generalization),
    ] {
        if set.is_empty() {
            return Err(Error::Plan(format!("set `{name}` is empty")));
        }
    }
    Ok(sets)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::ProfileDims;

    fn profiles(n: usize) -> Vec<MeasurementProfile> {
        let dims = ProfileDims {
            ancillary: 0,
            exogenous: 0,
            targets: 1,
        };
        (0..n)
            .map(|i| MeasurementProfile::new(format!("p{i}"), dims, vec![i as f64; 3]).unwrap())
            .collect()
    }

    fn ids(r: std::ops::Range<usize>) -> Vec<String> {
        r.map(|i| format!("p{i}")).collect()
    }

    #[test]
    fn empty_generalization_rejected() {
        let plan = FoldPlan {
            train: ids(0..4),
            fold_1: ids(4..5),
            fold_2: ids(5..6),
            generalization: vec![],
        };
        assert!(matches!(make_folds(&profiles(6), &plan), Err(Error::Plan(_))));
    }

    #[test]
    fn partition_is_disjoint_and_complete() {
        let plan = FoldPlan {
            train: ids(0..4),
            fold_1: ids(4..5),
            fold_2: ids(5..6),
            generalization: ids(6..8),
        };
        let all = profiles(8);
        let sets = make_folds(&all, &plan).unwrap();
        let mut union: Vec<&str> = sets.all().map(|p| p.id()).collect();
        assert_eq!(union.len(), 8);
        union.sort();
        union.dedup();
        assert_eq!(union.len(), 8);
    }

    #[test]
    fn swapping_iterations_keeps_training_contents() {
        let plan = FoldPlan {
            train: ids(0..4),
            fold_1: ids(4..5),
            fold_2: ids(5..6),
            generalization: ids(6..8),
        };
        let sets = make_folds(&profiles(8), &plan).unwrap();
        let a = sets.split(CvIteration::First);
        let b = sets.split(CvIteration::Second);
        let train_ids = |s: &CvSplit| s.train.iter().map(|p| p.id().to_string()).collect::<Vec<_>>();
        assert_eq!(train_ids(&a), train_ids(&b));
        assert_eq!(a.validation[0].id(), b.test[0].id());
        assert_eq!(a.test[0].id(), b.validation[0].id());
        for s in [&a, &b] {
            for p in s.validation.iter().chain(&s.test) {
                assert!(!plan.generalization.contains(&p.id().to_string()));
            }
        }
    }

    #[test]
    fn unassigned_and_duplicate_rejected() {
        let plan = FoldPlan {
            train: ids(0..2),
            fold_1: ids(2..3),
            fold_2: ids(3..4),
            generalization: ids(4..5),
        };
        assert!(make_folds(&profiles(6), &plan).is_err());
        let dup = FoldPlan {
            train: ids(0..2),
            fold_1: ids(1..3),
            ..plan
        };
        assert!(dup.assignments().is_err());
    }
}
