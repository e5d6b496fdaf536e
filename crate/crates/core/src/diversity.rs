//! Feature-disjoint explanation sets.
//!
//! Each round solves for a group delta with every previously used feature
//! black-listed, then adds the new delta's support to the black-list.

use std::collections::BTreeSet;

use ndarray::ArrayView1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::general::GroupDelta;
use crate::models::{InstanceSet, Scorer};

/// Features whose magnitude in `delta` exceeds `tol`.
pub fn support(delta: ArrayView1<f64>, tol: f64) -> BTreeSet<usize> {
    delta
        .iter()
        .enumerate()
        .filter(|(_, v)| v.abs() > tol)
        .map(|(j, _)| j)
        .collect()
}

/// Features a solver may not move.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blacklist {
    feature_indices: BTreeSet<usize>,
}

impl Blacklist {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indices(indices: impl IntoIterator<Item = usize>, d: usize) -> Result<Self> {
        let feature_indices: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&j) = feature_indices.iter().find(|&&j| j >= d) {
            return Err(Error::Dimension(format!("black-listed feature {j} out of range for d = {d}")));
        }
        Ok(Blacklist { feature_indices })
    }

    pub fn contains(&self, j: usize) -> bool {
        self.feature_indices.contains(&j)
    }

    pub fn len(&self) -> usize {
        self.feature_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.feature_indices.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.feature_indices.iter().copied()
    }

    pub fn extend(&mut self, features: impl IntoIterator<Item = usize>) {
        self.feature_indices.extend(features);
    }

    /// Per-feature mask with `false` on black-listed features.
    pub fn mask(&self, d: usize) -> Vec<bool> {
        (0..d).map(|j| !self.contains(j)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    CompletedK,
    /// A solve under the current black-list flipped nobody.
    Infeasible,
    /// A solve flipped someone without moving any feature past the tolerance.
    ZeroDelta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExplanationSet {
    pub deltas: Vec<GroupDelta>,
    pub final_blacklist: Blacklist,
    pub termination: Termination,
}

/// Up to `k` deltas with pairwise disjoint supports, starting from an empty
/// black-list.
pub fn diverse_explanations<S, F>(
    instances: &InstanceSet,
    scorer: &S,
    k: usize,
    tol: f64,
    solve: F,
) -> Result<ExplanationSet>
where
    S: Scorer + ?Sized,
    F: FnMut(&Blacklist) -> Result<GroupDelta>,
{
    diverse_explanations_from(instances, scorer, k, tol, Blacklist::new(), solve)
}

/// As [`diverse_explanations`], with features in `initial` forbidden from the
/// first round on.
pub fn diverse_explanations_from<S, F>(
    instances: &InstanceSet,
    scorer: &S,
    k: usize,
    tol: f64,
    initial: Blacklist,
    mut solve: F,
) -> Result<ExplanationSet>
where
    S: Scorer + ?Sized,
    F: FnMut(&Blacklist) -> Result<GroupDelta>,
{
    if k < 1 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("support tolerance must be > 0".into()));
    }
    instances.verify(scorer)?;

    let mut blacklist = initial;
    let mut deltas = Vec::with_capacity(k);
    let mut termination = Termination::CompletedK;
    for _ in 0..k {
        let next = solve(&blacklist)?;
        let used = next.support(tol);
        if crate::report::coverage(next.delta.view(), instances, scorer)? == 0.0 {
            termination = Termination::Infeasible;
            break;
        }
        if used.is_empty() {
            termination = Termination::ZeroDelta;
            break;
        }
        debug_assert!(used.iter().all(|&j| !blacklist.contains(j)));
        blacklist.extend(used);
        deltas.push(next);
    }
    Ok(ExplanationSet {
        deltas,
        final_blacklist: blacklist,
        termination,
    })
}
