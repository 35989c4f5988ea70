//! Window-difficulty classification from accelerometer features.
//!
//! Four statistics of the per-sample acceleration magnitude (mean, energy,
//! standard deviation, count of discrete-derivative sign changes) feed a
//! small random forest of 8 trees with depth at most 5 that maps each
//! window to one of the 9 activity levels.

use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::signal::{ActivityId, SampleWindow};

/// Trees in a forest.
pub const FOREST_TREES: usize = 8;
/// Maximum internal nodes on any root-to-leaf path.
pub const MAX_DEPTH: usize = 5;
/// Features sampled per split (sqrt of the 4 features).
const SPLIT_FEATURES: usize = 2;
/// Forest JSON format version.
pub const FOREST_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Error)]
pub enum ForestError {
    #[error("forest has {0} trees, need exactly {FOREST_TREES}")]
    WrongTreeCount(usize),
    #[error("tree {tree}: depth {depth} exceeds {MAX_DEPTH}")]
    TooDeep { tree: usize, depth: usize },
    #[error("tree {tree}: split references feature {feature}, need 0..4")]
    BadFeature { tree: usize, feature: usize },
    #[error("unsupported forest format version {0}")]
    BadVersion(u32),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

// ---------------------------------------------------------------------------
// Features
// ---------------------------------------------------------------------------

/// The four accelerometer statistics, computed on the magnitude signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub mean: f64,
    /// Mean of the squared samples.
    pub energy: f64,
    pub std: f64,
    /// Count of strict sign changes of the discrete derivative.
    pub n_peaks: u32,
}

impl FeatureVector {
    pub fn as_array(&self) -> [f64; 4] {
        [self.mean, self.energy, self.std, self.n_peaks as f64]
    }
}

/// Extract the 4 features from a 3 x N accel block.
///
/// Works on the magnitude m[n] = sqrt(ax^2 + ay^2 + az^2), so the features
/// are invariant to axis permutations and rotations. A derivative step of
/// exactly zero (plateau) does not count toward `n_peaks`.
pub fn extract_features(accel: &[Vec<f64>; 3]) -> FeatureVector {
    let n = accel[0].len();
    let mag: Vec<f64> = (0..n)
        .map(|i| (accel[0][i].powi(2) + accel[1][i].powi(2) + accel[2][i].powi(2)).sqrt())
        .collect();
    let mean = mag.iter().sum::<f64>() / n as f64;
    let energy = mag.iter().map(|m| m * m).sum::<f64>() / n as f64;
    let var = mag.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / n as f64;
    let std = var.sqrt();
    let mut n_peaks = 0u32;
    for i in 1..n.saturating_sub(1) {
        let d1 = mag[i] - mag[i - 1];
        let d2 = mag[i + 1] - mag[i];
        if (d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0) {
            n_peaks += 1;
        }
    }
    FeatureVector {
        mean,
        energy,
        std,
        n_peaks,
    }
}

/// Convenience wrapper over a window's accel block.
pub fn features_of_window(window: &SampleWindow) -> FeatureVector {
    extract_features(window.accel())
}

// ---------------------------------------------------------------------------
// Forest
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        leaf: ActivityId,
    },
}

impl TreeNode {
    fn depth(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn max_feature(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 0,
            TreeNode::Split {
                feature,
                left,
                right,
                ..
            } => (*feature).max(left.max_feature()).max(right.max_feature()),
        }
    }

    /// Walk to a leaf; counts internal nodes visited.
    fn predict_counting(&self, f: &[f64; 4], visited: &mut usize) -> ActivityId {
        match self {
            TreeNode::Leaf { leaf } => *leaf,
            TreeNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                *visited += 1;
                if f[*feature] <= *threshold {
                    left.predict_counting(f, visited)
                } else {
                    right.predict_counting(f, visited)
                }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
}

impl DecisionTree {
    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn predict(&self, f: &FeatureVector) -> ActivityId {
        let mut visited = 0;
        self.root.predict_counting(&f.as_array(), &mut visited)
    }
}

/// Ensemble of 8 depth-bounded trees voting on the activity level.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomForest {
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn new(trees: Vec<DecisionTree>) -> Result<Self, ForestError> {
        if trees.len() != FOREST_TREES {
            return Err(ForestError::WrongTreeCount(trees.len()));
        }
        for (i, t) in trees.iter().enumerate() {
            let depth = t.depth();
            if depth > MAX_DEPTH {
                return Err(ForestError::TooDeep { tree: i, depth });
            }
            let feature = t.root.max_feature();
            if feature >= 4 {
                return Err(ForestError::BadFeature { tree: i, feature });
            }
        }
        Ok(RandomForest { trees })
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Majority vote over the 8 trees; ties break toward the higher
    /// (harder) activity.
    pub fn predict(&self, f: &FeatureVector) -> ActivityId {
        rf_predict(self, f)
    }

    /// Largest number of internal nodes any tree visits for this input.
    pub fn max_nodes_visited(&self, f: &FeatureVector) -> usize {
        let arr = f.as_array();
        self.trees
            .iter()
            .map(|t| {
                let mut visited = 0;
                t.root.predict_counting(&arr, &mut visited);
                visited
            })
            .max()
            .unwrap_or(0)
    }

    pub fn save_json(&self, path: &Path) -> Result<(), ForestError> {
        let file = ForestFile {
            format_version: FOREST_FORMAT_VERSION,
            trees: self.trees.clone(),
        };
        std::fs::write(path, serde_json::to_string_pretty(&file)?)?;
        Ok(())
    }

    pub fn load_json(path: &Path) -> Result<Self, ForestError> {
        let text = std::fs::read_to_string(path)?;
        let file: ForestFile = serde_json::from_str(&text)?;
        if file.format_version != FOREST_FORMAT_VERSION {
            return Err(ForestError::BadVersion(file.format_version));
        }
        RandomForest::new(file.trees)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct ForestFile {
    format_version: u32,
    trees: Vec<DecisionTree>,
}

/// Majority vote with ties broken toward the higher activity id.
pub fn rf_predict(forest: &RandomForest, f: &FeatureVector) -> ActivityId {
    let mut votes = [0usize; 10];
    for tree in &forest.trees {
        votes[tree.predict(f).get() as usize] += 1;
    }
    let mut best = 1u8;
    for id in 1..=9u8 {
        if votes[id as usize] >= votes[best as usize] {
            best = id;
        }
    }
    ActivityId::new(best).expect("vote ids are valid")
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

/// Majority class of a sample set; ties toward the higher activity.
fn majority_class(labels: impl Iterator<Item = ActivityId>) -> ActivityId {
    let mut counts = [0usize; 10];
    for l in labels {
        counts[l.get() as usize] += 1;
    }
    let mut best = 1u8;
    for id in 1..=9u8 {
        if counts[id as usize] >= counts[best as usize] {
            best = id;
        }
    }
    ActivityId::new(best).expect("valid id")
}

fn gini(counts: &[usize; 10], total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let mut sum_sq = 0.0;
    for &c in &counts[1..] {
        let p = c as f64 / total as f64;
        sum_sq += p * p;
    }
    1.0 - sum_sq
}

struct Split {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

/// Best Gini split over the candidate features, deterministic tie-breaks:
/// lower impurity, then lower feature index, then lower threshold.
fn best_split(
    dataset: &[(FeatureVector, ActivityId)],
    indices: &[usize],
    features: &[usize],
) -> Option<Split> {
    let parent_counts = {
        let mut c = [0usize; 10];
        for &i in indices {
            c[dataset[i].1.get() as usize] += 1;
        }
        c
    };
    let parent_gini = gini(&parent_counts, indices.len());
    let mut best: Option<Split> = None;
    for &feature in features {
        let mut values: Vec<(f64, ActivityId)> = indices
            .iter()
            .map(|&i| (dataset[i].0.as_array()[feature], dataset[i].1))
            .collect();
        values.sort_by(|a, b| a.0.total_cmp(&b.0));
        let total = values.len();
        let mut left_counts = [0usize; 10];
        let mut right_counts = parent_counts;
        for i in 0..total - 1 {
            let class = values[i].1.get() as usize;
            left_counts[class] += 1;
            right_counts[class] -= 1;
            if values[i].0 == values[i + 1].0 {
                continue;
            }
            let threshold = (values[i].0 + values[i + 1].0) / 2.0;
            let n_left = i + 1;
            let n_right = total - n_left;
            let impurity = (n_left as f64 * gini(&left_counts, n_left)
                + n_right as f64 * gini(&right_counts, n_right))
                / total as f64;
            let better = match &best {
                None => impurity < parent_gini - 1e-12,
                Some(b) => {
                    impurity < b.impurity - 1e-12
                        || (impurity <= b.impurity + 1e-12
                            && (feature, threshold) < (b.feature, b.threshold))
                }
            };
            if better {
                best = Some(Split {
                    feature,
                    threshold,
                    impurity,
                });
            }
        }
    }
    best
}

fn grow_tree(
    dataset: &[(FeatureVector, ActivityId)],
    indices: &[usize],
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> TreeNode {
    let first = dataset[indices[0]].1;
    let pure = indices.iter().all(|&i| dataset[i].1 == first);
    if depth >= MAX_DEPTH || pure || indices.len() < 2 {
        return TreeNode::Leaf {
            leaf: majority_class(indices.iter().map(|&i| dataset[i].1)),
        };
    }
    // Sample 2 of the 4 features for this split.
    let mut features: Vec<usize> = {
        let mut pool = [0usize, 1, 2, 3];
        for i in (1..pool.len()).rev() {
            let j = rng.random_range(0..=i);
            pool.swap(i, j);
        }
        pool[..SPLIT_FEATURES].to_vec()
    };
    features.sort_unstable();
    let Some(split) = best_split(dataset, indices, &features) else {
        return TreeNode::Leaf {
            leaf: majority_class(indices.iter().map(|&i| dataset[i].1)),
        };
    };
    let (left_idx, right_idx): (Vec<usize>, Vec<usize>) = indices
        .iter()
        .partition(|&&i| dataset[i].0.as_array()[split.feature] <= split.threshold);
    if left_idx.is_empty() || right_idx.is_empty() {
        return TreeNode::Leaf {
            leaf: majority_class(indices.iter().map(|&i| dataset[i].1)),
        };
    }
    TreeNode::Split {
        feature: split.feature,
        threshold: split.threshold,
        left: Box::new(grow_tree(dataset, &left_idx, depth + 1, rng)),
        right: Box::new(grow_tree(dataset, &right_idx, depth + 1, rng)),
    }
}

/// Train a forest of 8 bagged CART trees (Gini impurity, 2 features per
/// split, depth at most 5). Deterministic for a fixed seed and dataset.
pub fn rf_train(
    dataset: &[(FeatureVector, ActivityId)],
    seed: u64,
) -> Result<RandomForest, TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let mut trees = Vec::with_capacity(FOREST_TREES);
    for _ in 0..FOREST_TREES {
        let mut rng = ChaCha8Rng::seed_from_u64(master.random());
        let indices: Vec<usize> = (0..dataset.len())
            .map(|_| rng.random_range(0..dataset.len()))
            .collect();
        trees.push(DecisionTree {
            root: grow_tree(dataset, &indices, 0, &mut rng),
        });
    }
    Ok(RandomForest::new(trees).expect("trainer respects forest invariants"))
}

// ---------------------------------------------------------------------------
// Classifier abstraction
// ---------------------------------------------------------------------------

/// Anything that can assign a difficulty level to a window.
pub trait ActivityClassifier: Sync {
    fn classify(&self, window: &SampleWindow) -> ActivityId;
}

impl ActivityClassifier for RandomForest {
    fn classify(&self, window: &SampleWindow) -> ActivityId {
        self.predict(&features_of_window(window))
    }
}

/// Returns the window's true label; the perfect-classifier baseline.
pub struct OracleClassifier;

impl ActivityClassifier for OracleClassifier {
    fn classify(&self, window: &SampleWindow) -> ActivityId {
        window.activity()
    }
}
