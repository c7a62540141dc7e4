//! Frequent action-subsequence mining and the augmented action space.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::envs::ActionId;
use crate::error::{Error, Result};

/// A fixed primitive sequence executed as one decision.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MacroAction(pub Vec<ActionId>);

impl MacroAction {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn primitives(&self) -> &[ActionId] {
        &self.0
    }
}

/// Occurrence counts of contiguous subsequences; counts from disjoint corpus
/// shards can be merged in any order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SubsequenceCounts {
    counts: HashMap<Vec<ActionId>, u64>,
}

impl SubsequenceCounts {
    /// Counts every window with length in `[l_min, l_max]` at every offset,
    /// overlaps included.
    pub fn count(trajectory: &[ActionId], l_min: usize, l_max: usize) -> Self {
        let mut out = Self::default();
        out.add(trajectory, l_min, l_max);
        out
    }

    pub fn add(&mut self, trajectory: &[ActionId], l_min: usize, l_max: usize) {
        for len in l_min..=l_max.min(trajectory.len()) {
            for window in trajectory.windows(len) {
                *self.counts.entry(window.to_vec()).or_insert(0) += 1;
            }
        }
    }

    pub fn merge(&mut self, other: SubsequenceCounts) {
        for (k, v) in other.counts {
            *self.counts.entry(k).or_insert(0) += v;
        }
    }

    pub fn get(&self, seq: &[ActionId]) -> u64 {
        self.counts.get(seq).copied().unwrap_or(0)
    }

    pub fn distinct(&self) -> usize {
        self.counts.len()
    }

    /// All subsequences ordered by count desc, then length asc, then
    /// lexicographically.
    pub fn ranked(&self) -> Vec<(Vec<ActionId>, u64)> {
        let mut all: Vec<_> = self.counts.iter().map(|(k, &v)| (k.clone(), v)).collect();
        all.sort_by(|(a, ca), (b, cb)| {
            cb.cmp(ca)
                .then_with(|| a.len().cmp(&b.len()))
                .then_with(|| a.cmp(b))
        });
        all
    }
}

/// The `k` most frequent contiguous subsequences with length in
/// `[l_min, l_max]`.
pub fn mine_macros<T: AsRef<[ActionId]>>(
    corpus: &[T],
    k: usize,
    l_min: usize,
    l_max: usize,
) -> Result<Vec<MacroAction>> {
    if k == 0 {
        return Err(Error::config("k", "must be at least 1"));
    }
    if l_min < 2 || l_min > l_max {
        return Err(Error::config(
            "l_min",
            format!("need 2 <= l_min <= l_max, got l_min={l_min}, l_max={l_max}"),
        ));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut counts = SubsequenceCounts::default();
    for traj in corpus {
        counts.add(traj.as_ref(), l_min, l_max);
    }
    Ok(counts
        .ranked()
        .into_iter()
        .take(k)
        .map(|(seq, _)| MacroAction(seq))
        .collect())
}

/// An index into the augmented action space, decoded.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AugmentedAction {
    Primitive(ActionId),
    Macro(usize),
}

/// Primitives first (`0..num_primitives`), then macros in order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionSpace {
    num_primitives: usize,
    macros: Vec<MacroAction>,
}

/// Result of [`build_action_space`]: the space and how many input macros were
/// dropped as duplicates or single primitives.
#[derive(Clone, Debug, PartialEq)]
pub struct BuiltSpace {
    pub space: ActionSpace,
    pub dropped: usize,
}

pub fn build_action_space(num_primitives: usize, macros: &[MacroAction]) -> Result<BuiltSpace> {
    validate_macros(num_primitives, macros)?;
    let mut kept: Vec<MacroAction> = Vec::with_capacity(macros.len());
    let mut dropped = 0;
    for m in macros {
        if m.len() <= 1 || kept.contains(m) {
            dropped += 1;
        } else {
            kept.push(m.clone());
        }
    }
    if dropped > 0 {
        log::warn!("dropped {dropped} duplicate or single-primitive macro(s)");
    }
    Ok(BuiltSpace {
        space: ActionSpace {
            num_primitives,
            macros: kept,
        },
        dropped,
    })
}

fn validate_macros(num_primitives: usize, macros: &[MacroAction]) -> Result<()> {
    for (i, m) in macros.iter().enumerate() {
        if let Some(bad) = m.0.iter().find(|&&a| a >= num_primitives) {
            return Err(Error::Validation(format!(
                "macro {i} references primitive {bad}, but only {num_primitives} exist"
            )));
        }
    }
    Ok(())
}

impl ActionSpace {
    pub fn primitives_only(num_primitives: usize) -> Self {
        Self {
            num_primitives,
            macros: Vec::new(),
        }
    }

    /// Space whose macros were corrupted by [`inject_noise`]; duplicates are
    /// kept so the ablation sees the redundant actions it asked for.
    pub fn with_noisy_macros(num_primitives: usize, macros: Vec<MacroAction>) -> Result<Self> {
        validate_macros(num_primitives, &macros)?;
        if macros.iter().any(|m| m.len() < 2) {
            return Err(Error::Validation("noisy macros must have length >= 2".into()));
        }
        Ok(Self {
            num_primitives,
            macros,
        })
    }

    pub fn num_primitives(&self) -> usize {
        self.num_primitives
    }

    pub fn macros(&self) -> &[MacroAction] {
        &self.macros
    }

    pub fn len(&self) -> usize {
        self.num_primitives + self.macros.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn decode(&self, index: usize) -> Option<AugmentedAction> {
        if index < self.num_primitives {
            Some(AugmentedAction::Primitive(index))
        } else if index < self.len() {
            Some(AugmentedAction::Macro(index - self.num_primitives))
        } else {
            None
        }
    }

    pub fn encode(&self, action: AugmentedAction) -> Option<usize> {
        match action {
            AugmentedAction::Primitive(a) if a < self.num_primitives => Some(a),
            AugmentedAction::Macro(m) if m < self.macros.len() => Some(self.num_primitives + m),
            _ => None,
        }
    }

    /// Primitive sequence executed by augmented action `index`.
    pub fn primitives_of(&self, index: usize) -> Option<&[ActionId]> {
        match self.decode(index)? {
            AugmentedAction::Primitive(_) => None,
            AugmentedAction::Macro(m) => Some(self.macros[m].primitives()),
        }
    }

    /// Human-readable labels, macros joined with `+`.
    pub fn labels(&self, primitive_names: &[&str]) -> Vec<String> {
        let name = |a: ActionId| {
            primitive_names
                .get(a)
                .map_or_else(|| a.to_string(), |s| (*s).to_string())
        };
        (0..self.num_primitives)
            .map(name)
            .chain(
                self.macros
                    .iter()
                    .map(|m| m.0.iter().map(|&a| name(a)).collect::<Vec<_>>().join("+")),
            )
            .collect()
    }
}

/// Independently per macro, with probability `p_replace`, swap it for a
/// uniformly random primitive sequence of the same length.
pub fn inject_noise(
    macros: &[MacroAction],
    p_replace: f64,
    num_primitives: usize,
    seed: u64,
) -> Result<Vec<MacroAction>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    inject_noise_with(macros, p_replace, num_primitives, &mut rng)
}

pub fn inject_noise_with<R: Rng + ?Sized>(
    macros: &[MacroAction],
    p_replace: f64,
    num_primitives: usize,
    rng: &mut R,
) -> Result<Vec<MacroAction>> {
    if !(0.0..=1.0).contains(&p_replace) {
        return Err(Error::config("p_replace", format!("must lie in [0, 1], got {p_replace}")));
    }
    if num_primitives == 0 {
        return Err(Error::Validation("no primitives to draw noise from".into()));
    }
    Ok(macros
        .iter()
        .map(|m| {
            if rng.gen::<f64>() < p_replace {
                MacroAction((0..m.len()).map(|_| rng.gen_range(0..num_primitives)).collect())
            } else {
                m.clone()
            }
        })
        .collect())
}

/// On-disk macro set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MacroManifest {
    pub primitives: usize,
    pub macros: Vec<Vec<ActionId>>,
    pub k: usize,
    pub l_min: usize,
    pub l_max: usize,
}

impl MacroManifest {
    pub fn new(primitives: usize, macros: &[MacroAction], k: usize, l_min: usize, l_max: usize) -> Self {
        Self {
            primitives,
            macros: macros.iter().map(|m| m.0.clone()).collect(),
            k,
            l_min,
            l_max,
        }
    }

    pub fn macro_actions(&self) -> Vec<MacroAction> {
        self.macros.iter().cloned().map(MacroAction).collect()
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string(self)?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::File {
            path: path.to_path_buf(),
            source,
            hint: " (run `masp-lab mine` to produce a manifest)",
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// Histogram of macro lengths as `(length, count)` pairs, ascending.
    pub fn length_histogram(&self) -> Vec<(usize, usize)> {
        let mut hist = std::collections::BTreeMap::new();
        for m in &self.macros {
            *hist.entry(m.len()).or_insert(0) += 1;
        }
        hist.into_iter().collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seqs(m: &[MacroAction]) -> Vec<Vec<usize>> {
        m.iter().map(|x| x.0.clone()).collect()
    }

    #[test]
    fn alternating_corpus_ranks_with_tie_breaks() {
        let corpus = vec![vec![0, 1, 0, 1, 0, 1]];
        let counts = SubsequenceCounts::count(&corpus[0], 2, 3);
        assert_eq!(counts.get(&[0, 1]), 3);
        assert_eq!(counts.get(&[1, 0]), 2);
        assert_eq!(counts.get(&[0, 1, 0]), 2);
        assert_eq!(counts.get(&[1, 0, 1]), 2);
        let top = mine_macros(&corpus, 2, 2, 3).unwrap();
        assert_eq!(seqs(&top), vec![vec![0, 1], vec![1, 0]]);
    }

    #[test]
    fn short_trajectory_yields_nothing() {
        assert!(mine_macros(&[vec![3usize]], 4, 2, 3).unwrap().is_empty());
    }

    #[test]
    fn exhaustion_returns_all_sorted() {
        let corpus = vec![vec![2usize, 1, 2]];
        let all = mine_macros(&corpus, 100, 2, 3).unwrap();
        assert_eq!(seqs(&all), vec![vec![1, 2], vec![2, 1], vec![2, 1, 2]]);
    }

    #[test]
    fn empty_corpus_and_bad_params_error() {
        let empty: Vec<Vec<usize>> = vec![];
        assert!(matches!(mine_macros(&empty, 1, 2, 3), Err(Error::EmptyCorpus)));
        assert!(mine_macros(&[vec![0usize, 1]], 0, 2, 3).is_err());
        assert!(mine_macros(&[vec![0usize, 1]], 1, 1, 3).is_err());
        assert!(mine_macros(&[vec![0usize, 1]], 1, 3, 2).is_err());
    }

    #[test]
    fn merged_counts_equal_whole_corpus() {
        let a = [0usize, 1, 2, 0, 1];
        let b = [1usize, 2, 0];
        let mut left = SubsequenceCounts::count(&a, 2, 3);
        left.merge(SubsequenceCounts::count(&b, 2, 3));
        let mut right = SubsequenceCounts::count(&b, 2, 3);
        right.merge(SubsequenceCounts::count(&a, 2, 3));
        assert_eq!(left, right);
        assert_eq!(left.get(&[1, 2]), 2);
    }

    #[test]
    fn action_space_layout() {
        let built = build_action_space(6, &[]).unwrap();
        assert_eq!(built.space.len(), 6);
        let macros: Vec<MacroAction> = (0..32)
            .map(|i| MacroAction(vec![i % 6, (i / 6) % 6, 5 - i % 6]))
            .collect();
        let built = build_action_space(6, &macros).unwrap();
        assert_eq!(built.space.len(), 38);
        assert_eq!(built.space.decode(6), Some(AugmentedAction::Macro(0)));
        assert_eq!(built.space.decode(5), Some(AugmentedAction::Primitive(5)));
        assert_eq!(built.space.decode(38), None);
    }

    #[test]
    fn duplicates_and_singletons_dropped() {
        let m = vec![
            MacroAction(vec![0, 1]),
            MacroAction(vec![0, 1]),
            MacroAction(vec![2]),
            MacroAction(vec![1, 1, 1]),
        ];
        let built = build_action_space(3, &m).unwrap();
        assert_eq!(built.space.len(), 5);
        assert_eq!(built.dropped, 2);
    }

    #[test]
    fn unknown_primitive_rejected() {
        assert!(matches!(
            build_action_space(3, &[MacroAction(vec![0, 3])]),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn noise_extremes() {
        let macros: Vec<MacroAction> = (2..6).map(|l| MacroAction(vec![0; l])).collect();
        assert_eq!(inject_noise(&macros, 0.0, 6, 9).unwrap(), macros);
        let noisy = inject_noise(&macros, 1.0, 6, 9).unwrap();
        assert_eq!(
            noisy.iter().map(MacroAction::len).collect::<Vec<_>>(),
            vec![2, 3, 4, 5]
        );
        assert_ne!(noisy, macros);
        assert!(inject_noise(&macros, 1.5, 6, 9).is_err());
    }

    #[test]
    fn labels_join_primitive_names() {
        let built = build_action_space(2, &[MacroAction(vec![1, 0])]).unwrap();
        assert_eq!(built.space.labels(&["l", "r"]), vec!["l", "r", "r+l"]);
    }

    #[test]
    fn manifest_histogram() {
        let m = MacroManifest::new(
            6,
            &[MacroAction(vec![0, 1]), MacroAction(vec![0, 1, 2]), MacroAction(vec![2, 2])],
            8,
            2,
            4,
        );
        assert_eq!(m.length_histogram(), vec![(2, 2), (3, 1)]);
    }
}
