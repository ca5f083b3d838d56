use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Fold index for every observation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
}

impl FoldPlan {
    /// `(train, test)` indices for `fold`, each in ascending order.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignments.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified k-fold assignment: each class is shuffled with a seeded
/// ChaCha8 stream and dealt round-robin, the negative class continuing
/// where the positive class stopped so fold sizes stay balanced.
pub fn stratified_kfold(labels: &[bool], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    if k > labels.len() {
        return Err(Error::config(format!(
            "k = {k} exceeds the number of observations ({})",
            labels.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut next_fold = 0;
    for class in [true, false] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            log::warn!(
                "class {class} has {} members, fewer than k = {k}; some folds will lack it",
                members.len()
            );
        }
        members.shuffle(&mut rng);
        for i in members {
            assignments[i] = next_fold;
            next_fold = (next_fold + 1) % k;
        }
    }
    Ok(FoldPlan { k, assignments })
}

/// Label-stratified k-fold that never splits a group across folds.
///
/// Groups are shuffled with a seeded ChaCha8 stream, ordered by size
/// (largest first, stable), and each is placed in the fold where it least
/// increases the squared deviation from the per-fold positive and negative
/// targets; ties go to the lowest fold index. Every fold must end up with
/// both classes.
pub fn grouped_stratified_kfold(
    labels: &[bool],
    groups: &[usize],
    k: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if labels.len() != groups.len() {
        return Err(Error::data("labels and groups differ in length"));
    }
    if k < 2 {
        return Err(Error::config(format!("k-fold needs k >= 2, got {k}")));
    }
    let n_groups = groups.iter().max().map_or(0, |&g| g + 1);
    if k > n_groups {
        return Err(Error::data(format!(
            "k = {k} exceeds the number of distinct groups ({n_groups})"
        )));
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_groups];
    for (i, &g) in groups.iter().enumerate() {
        members[g].push(i);
    }
    let counts: Vec<(f64, f64)> = members
        .iter()
        .map(|m| {
            let pos = m.iter().filter(|&&i| labels[i]).count();
            (pos as f64, (m.len() - pos) as f64)
        })
        .collect();
    let n_pos = labels.iter().filter(|&&l| l).count() as f64;
    let (target_pos, target_neg) = (n_pos / k as f64, (labels.len() as f64 - n_pos) / k as f64);

    let mut order: Vec<usize> = (0..n_groups).filter(|&g| !members[g].is_empty()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    order.sort_by_key(|&g| std::cmp::Reverse(members[g].len()));

    let mut pos = vec![0.0; k];
    let mut neg = vec![0.0; k];
    let mut assignments = vec![0; labels.len()];
    for g in order {
        let (gp, gn) = counts[g];
        let best = (0..k)
            .map(|f| {
                let before = (pos[f] - target_pos).powi(2) + (neg[f] - target_neg).powi(2);
                let after =
                    (pos[f] + gp - target_pos).powi(2) + (neg[f] + gn - target_neg).powi(2);
                (f, after - before)
            })
            .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
            .map(|(f, _)| f)
            .expect("k >= 2");
        pos[best] += gp;
        neg[best] += gn;
        for &i in &members[g] {
            assignments[i] = best;
        }
    }
    if (0..k).any(|f| pos[f] == 0.0 || neg[f] == 0.0) {
        return Err(Error::data(
            "grouped folds could not give every fold both classes",
        ));
    }
    Ok(FoldPlan { k, assignments })
}
