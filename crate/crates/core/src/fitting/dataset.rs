use std::collections::{BTreeMap, BTreeSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::TrialOutcome;

/// One distance-error measurement.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub participant_id: u32,
    pub condition: String,
    /// Target distance from home along the reach line (m).
    pub target_distance: f64,
    /// Observed distance error (m).
    pub distance_error: f64,
}

/// Valid outcomes as observations; rejected trials are skipped.
pub fn observations_from_outcomes(outcomes: &[TrialOutcome]) -> Vec<Observation> {
    outcomes
        .iter()
        .filter_map(|o| {
            Some(Observation {
                participant_id: o.participant_id,
                condition: o.condition.clone(),
                target_distance: o.target_distance_m,
                distance_error: o.distance_error_m.filter(|_| o.valid)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// Observations with a deterministic stratified train/test assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct FitDataset {
    observations: Vec<Observation>,
    split: Vec<Split>,
    split_seed: u64,
    train_fraction: f64,
}

fn distance_key(d: f64) -> i64 {
    (d * 1e6).round() as i64
}

impl FitDataset {
    /// Each (participant, condition, target distance) stratum is shuffled
    /// independently and `round(train_fraction · n)` of it goes to training.
    pub fn new(
        observations: Vec<Observation>,
        train_fraction: f64,
        split_seed: u64,
    ) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::invalid(
                "split",
                format!("train fraction must lie in (0, 1), got {train_fraction}"),
            ));
        }
        if observations.is_empty() {
            return Err(Error::InsufficientSamples { needed: 1, got: 0 });
        }
        for (i, o) in observations.iter().enumerate() {
            if !(o.target_distance > 0.0) || !o.distance_error.is_finite() {
                return Err(Error::invalid(
                    "observations",
                    format!("observation {i}: target distance must be positive and error finite"),
                ));
            }
        }
        let mut strata: BTreeMap<(u32, &str, i64), Vec<usize>> = BTreeMap::new();
        for (i, o) in observations.iter().enumerate() {
            strata
                .entry((
                    o.participant_id,
                    &o.condition,
                    distance_key(o.target_distance),
                ))
                .or_default()
                .push(i);
        }
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed);
        let mut split = vec![Split::Test; observations.len()];
        for idx in strata.values_mut() {
            idx.shuffle(&mut rng);
            let n_train = (train_fraction * idx.len() as f64).round() as usize;
            for &i in &idx[..n_train] {
                split[i] = Split::Train;
            }
        }
        Ok(Self {
            observations,
            split,
            split_seed,
            train_fraction,
        })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn split(&self) -> &[Split] {
        &self.split
    }

    pub fn split_seed(&self) -> u64 {
        self.split_seed
    }

    pub fn train_fraction(&self) -> f64 {
        self.train_fraction
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    /// Observations in one split, in input order.
    pub fn subset(&self, which: Split) -> impl Iterator<Item = &Observation> {
        self.observations
            .iter()
            .zip(&self.split)
            .filter(move |(_, s)| **s == which)
            .map(|(o, _)| o)
    }

    /// Participant ids, ascending.
    pub fn participants(&self) -> Vec<u32> {
        self.observations
            .iter()
            .map(|o| o.participant_id)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// Condition labels, ascending.
    pub fn conditions(&self) -> Vec<String> {
        self.observations
            .iter()
            .map(|o| o.condition.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    }

    /// The observations of one condition, keeping their split assignment.
    pub fn for_condition(&self, condition: &str) -> Self {
        let (observations, split) = self
            .observations
            .iter()
            .zip(&self.split)
            .filter(|(o, _)| o.condition == condition)
            .map(|(o, s)| (o.clone(), *s))
            .unzip();
        Self {
            observations,
            split,
            split_seed: self.split_seed,
            train_fraction: self.train_fraction,
        }
    }

    /// Participants whose training data cover fewer than two target
    /// distances; for them the offset and the IPD cannot be separated.
    pub fn identifiability_warnings(&self) -> Vec<String> {
        let mut seen: BTreeMap<u32, BTreeSet<i64>> = BTreeMap::new();
        for o in self.subset(Split::Train) {
            seen.entry(o.participant_id)
                .or_default()
                .insert(distance_key(o.target_distance));
        }
        self.participants()
            .into_iter()
            .filter(|p| seen.get(p).map_or(0, BTreeSet::len) < 2)
            .map(|p| {
                format!(
                    "participant {p}: fewer than two target distances in training data; \
                     offset and IPD trade off"
                )
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(p: u32, d: f64) -> Observation {
        Observation {
            participant_id: p,
            condition: "original".into(),
            target_distance: d,
            distance_error: -0.01,
        }
    }

    fn grid(reps: usize) -> Vec<Observation> {
        let mut v = Vec::new();
        for p in 1..=3 {
            for d in [0.2, 0.25, 0.3] {
                v.extend(std::iter::repeat_n(obs(p, d), reps));
            }
        }
        v
    }

    #[test]
    fn stratified_fraction() {
        let ds = FitDataset::new(grid(10), 0.7, 5).unwrap();
        assert_eq!(ds.subset(Split::Train).count(), 9 * 7);
        assert_eq!(ds.subset(Split::Test).count(), 9 * 3);
        for p in 1..=3 {
            for d in [0.2, 0.25, 0.3] {
                let n = ds
                    .subset(Split::Train)
                    .filter(|o| o.participant_id == p && o.target_distance == d)
                    .count();
                assert_eq!(n, 7);
            }
        }
    }

    #[test]
    fn split_is_deterministic() {
        let a = FitDataset::new(grid(10), 0.7, 42).unwrap();
        let b = FitDataset::new(grid(10), 0.7, 42).unwrap();
        let c = FitDataset::new(grid(10), 0.7, 43).unwrap();
        assert_eq!(a.split(), b.split());
        assert_ne!(a.split(), c.split());
    }

    #[test]
    fn single_distance_warns() {
        let mut v = grid(4);
        v.extend(std::iter::repeat_n(obs(9, 0.25), 10));
        let ds = FitDataset::new(v, 0.7, 1).unwrap();
        let w = ds.identifiability_warnings();
        assert_eq!(w.len(), 1);
        assert!(w[0].starts_with("participant 9"));
        assert!(FitDataset::new(grid(4), 0.7, 1)
            .unwrap()
            .identifiability_warnings()
            .is_empty());
    }

    #[test]
    fn validation() {
        assert!(FitDataset::new(grid(2), 1.0, 0).is_err());
        assert!(FitDataset::new(vec![], 0.7, 0).is_err());
        let mut v = grid(2);
        v[0].distance_error = f64::NAN;
        assert!(FitDataset::new(v, 0.7, 0).is_err());
    }
}
