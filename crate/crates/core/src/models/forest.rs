//! Random forest regressor with the absolute-error split criterion.
//!
//! Each tree is grown on a bootstrap resample. A node is split on the
//! feature/threshold pair that minimises the summed absolute deviation of the
//! children's targets from their per-output medians; leaves predict the
//! per-output median. Thresholds are midpoints between consecutive distinct
//! feature values. Child costs for every threshold of a feature come from one
//! left-to-right and one right-to-left sweep with running medians.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use ndarray::{Array2, ArrayView1, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{median_of_sorted, Scalar};
use crate::seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
    pub bootstrap: bool,
    /// Features tried per split; `None` tries them all.
    pub max_features: Option<usize>,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 20,
            max_depth: None,
            min_samples_split: 2,
            bootstrap: true,
            max_features: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub enum Node<T> {
    Leaf {
        value: Vec<T>,
    },
    Split {
        feature: usize,
        threshold: T,
        left: usize,
        right: usize,
    },
}

/// One regression tree stored as a node arena; node 0 is the root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct RegressionTree<T> {
    pub nodes: Vec<Node<T>>,
}

impl<T: Scalar> RegressionTree<T> {
    pub fn predict_row(&self, row: ArrayView1<T>) -> &[T] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { value } => return value,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go<T>(nodes: &[Node<T>], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(nodes, *left).max(go(nodes, *right)),
            }
        }
        go(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ForestModel<T> {
    pub config: ForestConfig,
    pub trees: Vec<RegressionTree<T>>,
    /// Seed each tree's bootstrap stream was derived from.
    pub tree_seeds: Vec<u64>,
}

/// Total-ordered wrapper for the running-median heaps.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Key<T>(T);

impl<T: PartialOrd> Eq for Key<T> {}

impl<T: PartialOrd> PartialOrd for Key<T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<T: PartialOrd> Ord for Key<T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.partial_cmp(&other.0).expect("finite targets")
    }
}

/// Insert-only multiset that reports Σ|v − median| after every insertion.
struct RunningAbsDeviation<T> {
    low: BinaryHeap<Key<T>>,
    high: BinaryHeap<Reverse<Key<T>>>,
    sum_low: T,
    sum_high: T,
}

impl<T: Scalar> RunningAbsDeviation<T> {
    fn new() -> Self {
        Self {
            low: BinaryHeap::new(),
            high: BinaryHeap::new(),
            sum_low: T::zero(),
            sum_high: T::zero(),
        }
    }

    fn push(&mut self, v: T) {
        match self.low.peek() {
            Some(top) if v > top.0 => {
                self.high.push(Reverse(Key(v)));
                self.sum_high += v;
            }
            _ => {
                self.low.push(Key(v));
                self.sum_low += v;
            }
        }
        // Keep |low| == |high| or |low| == |high| + 1.
        if self.low.len() > self.high.len() + 1 {
            let Key(m) = self.low.pop().expect("non-empty");
            self.sum_low -= m;
            self.high.push(Reverse(Key(m)));
            self.sum_high += m;
        } else if self.high.len() > self.low.len() {
            let Reverse(Key(m)) = self.high.pop().expect("non-empty");
            self.sum_high -= m;
            self.low.push(Key(m));
            self.sum_low += m;
        }
    }

    fn abs_deviation(&self) -> T {
        let odd = self.low.len() > self.high.len();
        let centre = if odd {
            self.low.peek().map_or(T::zero(), |k| k.0)
        } else {
            T::zero()
        };
        (self.sum_high - self.sum_low + centre).max(T::zero())
    }
}

struct Grower<'a, T> {
    x: ArrayView2<'a, T>,
    y: ArrayView2<'a, T>,
    config: &'a ForestConfig,
    nodes: Vec<Node<T>>,
}

/// Best split found at a node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitChoice<T> {
    pub feature: usize,
    pub threshold: T,
    /// Summed absolute deviation of both children from their medians.
    pub cost: T,
    /// Rows going left (`x <= threshold`).
    pub n_left: usize,
}

fn leaf_value<T: Scalar>(y: ArrayView2<T>, rows: &[usize]) -> Vec<T> {
    (0..y.ncols())
        .map(|o| {
            let mut v: Vec<T> = rows.iter().map(|&r| y[[r, o]]).collect();
            v.sort_by(|a, b| a.partial_cmp(b).expect("finite targets"));
            median_of_sorted(&v)
        })
        .collect()
}

/// Exhaustive absolute-error split search over `features` for the given rows.
pub fn best_split<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    rows: &[usize],
    features: &[usize],
) -> Option<SplitChoice<T>> {
    let m = rows.len();
    let outputs = y.ncols();
    let mut best: Option<SplitChoice<T>> = None;
    let mut sorted = rows.to_vec();
    let mut left_cost = vec![T::zero(); m];
    let mut right_cost = vec![T::zero(); m];
    for &f in features {
        sorted.sort_by(|&a, &b| x[[a, f]].partial_cmp(&x[[b, f]]).expect("finite features"));
        if x[[sorted[0], f]] == x[[sorted[m - 1], f]] {
            continue;
        }
        left_cost.iter_mut().for_each(|c| *c = T::zero());
        right_cost.iter_mut().for_each(|c| *c = T::zero());
        for o in 0..outputs {
            // left_cost[i]: rows sorted[..=i]; right_cost[i]: rows sorted[i..]
            let mut acc = RunningAbsDeviation::new();
            for (i, &r) in sorted.iter().enumerate() {
                acc.push(y[[r, o]]);
                left_cost[i] += acc.abs_deviation();
            }
            let mut acc = RunningAbsDeviation::new();
            for (i, &r) in sorted.iter().enumerate().rev() {
                acc.push(y[[r, o]]);
                right_cost[i] += acc.abs_deviation();
            }
        }
        for i in 0..m - 1 {
            let lo = x[[sorted[i], f]];
            let hi = x[[sorted[i + 1], f]];
            if lo == hi {
                continue;
            }
            let cost = left_cost[i] + right_cost[i + 1];
            if best.is_none_or(|b| cost < b.cost) {
                let mut threshold = (lo + hi) / T::lit(2.0);
                if threshold >= hi {
                    threshold = lo;
                }
                best = Some(SplitChoice {
                    feature: f,
                    threshold,
                    cost,
                    n_left: i + 1,
                });
            }
        }
    }
    best
}

impl<T: Scalar> Grower<'_, T> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut impl Rng) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            value: leaf_value(self.y, &rows),
        });
        let depth_ok = self.config.max_depth.is_none_or(|d| depth < d);
        let pure = (0..self.y.ncols()).all(|o| {
            let first = self.y[[rows[0], o]];
            rows.iter().all(|&r| self.y[[r, o]] == first)
        });
        if !depth_ok || pure || rows.len() < self.config.min_samples_split.max(2) {
            return id;
        }
        let p = self.x.ncols();
        let features: Vec<usize> = match self.config.max_features {
            Some(k) if k < p => rand::seq::index::sample(rng, p, k).into_vec(),
            _ => (0..p).collect(),
        };
        let Some(split) = best_split(self.x, self.y, &rows, &features) else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[[r, split.feature]] <= split.threshold);
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

/// Grow a single tree on the given rows.
pub fn fit_tree<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    rows: Vec<usize>,
    config: &ForestConfig,
    rng: &mut impl Rng,
) -> RegressionTree<T> {
    let mut g = Grower {
        x,
        y,
        config,
        nodes: Vec::new(),
    };
    g.grow(rows, 0, rng);
    RegressionTree { nodes: g.nodes }
}

pub fn fit_forest<T: Scalar>(
    x: ArrayView2<T>,
    y: ArrayView2<T>,
    config: &ForestConfig,
    seed: u64,
) -> Result<ForestModel<T>> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    if y.nrows() != n {
        return Err(Error::validation("feature and target row counts differ"));
    }
    if config.n_trees == 0 {
        return Err(Error::validation("forest needs at least one tree"));
    }
    if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
        return Err(Error::validation("forest inputs must be finite"));
    }
    let tree_seeds: Vec<u64> = (0..config.n_trees)
        .map(|t| seed::derive_seed(seed, "forest.tree", t as u64))
        .collect();
    let trees = tree_seeds
        .iter()
        .map(|&s| {
            let mut rng = seed::rng_for(s, "forest.bootstrap", 0);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            fit_tree(x, y, rows, config, &mut rng)
        })
        .collect();
    Ok(ForestModel {
        config: config.clone(),
        trees,
        tree_seeds,
    })
}

pub fn predict_forest<T: Scalar>(model: &ForestModel<T>, x: ArrayView2<T>) -> Array2<T> {
    let outputs = model.trees[0]
        .nodes
        .iter()
        .find_map(|n| match n {
            Node::Leaf { value } => Some(value.len()),
            Node::Split { .. } => None,
        })
        .expect("tree has a leaf");
    let mut out = Array2::zeros((x.nrows(), outputs));
    let nt = T::from_usize_lossy(model.trees.len());
    for (row, mut o) in x.rows().into_iter().zip(out.rows_mut()) {
        for tree in &model.trees {
            for (slot, &v) in o.iter_mut().zip(tree.predict_row(row)) {
                *slot += v;
            }
        }
        o.mapv_inplace(|v| v / nt);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::median;
    use ndarray::{array, Array1};
    use proptest::prelude::{prop, prop_assert, proptest, any, ProptestConfig};
    use rand::SeedableRng;

    fn memorizing() -> ForestConfig {
        ForestConfig {
            n_trees: 1,
            bootstrap: false,
            ..ForestConfig::default()
        }
    }

    #[test]
    fn running_deviation_matches_direct_sum() {
        let vals = [3.0_f64, -1.0, 7.5, 2.0, 2.0, 10.0, -4.0];
        let mut acc = RunningAbsDeviation::new();
        for i in 0..vals.len() {
            acc.push(vals[i]);
            let m = median(&vals[..=i]);
            let direct: f64 = vals[..=i].iter().map(|v| (v - m).abs()).sum();
            assert!((acc.abs_deviation() - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn full_tree_memorizes_distinct_rows() {
        let x = array![[0.1_f64, 3.0], [0.4, 1.0], [0.2, 2.0], [0.9, 0.0], [0.5, 5.0]];
        let y = array![[1.0_f64, -1.0], [4.0, 2.0], [2.0, 0.5], [9.0, 3.0], [5.0, 1.0]];
        let f = fit_forest(x.view(), y.view(), &memorizing(), 0).unwrap();
        assert_eq!(predict_forest(&f, x.view()), y);
    }

    #[test]
    fn constant_targets() {
        let x = array![[0.0_f64], [1.0], [2.0], [3.0]];
        let y = Array2::from_elem((4, 2), 7.5_f64);
        let f = fit_forest(x.view(), y.view(), &ForestConfig::default(), 3).unwrap();
        let p = predict_forest(&f, array![[-10.0], [1.5], [99.0]].view());
        assert!(p.iter().all(|&v| v == 7.5));
    }

    #[test]
    fn six_point_stump() {
        let x = array![[1.0_f64], [2.0], [3.0], [4.0], [5.0], [6.0]];
        let y = array![[0.0_f64], [0.0], [0.0], [10.0], [10.0], [10.0]];
        let cfg = ForestConfig {
            max_depth: Some(1),
            ..memorizing()
        };
        let f = fit_forest(x.view(), y.view(), &cfg, 0).unwrap();
        match &f.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 3.5);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(f.trees[0].depth(), 1);
    }

    #[test]
    fn deterministic_under_seed() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let x = Array2::from_shape_fn((40, 3), |_| rng.random::<f64>());
        let y = Array2::from_shape_fn((40, 3), |(i, j)| x[[i, j]] * 10.0 + x[[i, (j + 1) % 3]]);
        let a = fit_forest(x.view(), y.view(), &ForestConfig::default(), 11).unwrap();
        let b = fit_forest(x.view(), y.view(), &ForestConfig::default(), 11).unwrap();
        assert_eq!(a, b);
        let c = fit_forest(x.view(), y.view(), &ForestConfig::default(), 12).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn thresholds_stay_inside_the_training_range() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let x = Array2::from_shape_fn((60, 3), |_| rng.random::<f64>() * 4.0 - 2.0);
        let y = Array2::from_shape_fn((60, 3), |(i, _)| x[[i, 0]].sin());
        let f = fit_forest(x.view(), y.view(), &ForestConfig::default(), 1).unwrap();
        for tree in &f.trees {
            for node in &tree.nodes {
                match node {
                    Node::Split { feature, threshold, .. } => {
                        let col = x.column(*feature);
                        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        assert!(*threshold >= lo && *threshold <= hi);
                    }
                    Node::Leaf { value } => assert!(value.iter().all(|v| v.is_finite())),
                }
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn predictions_within_target_range(
            rows in prop::collection::vec((prop::array::uniform3(-5.0..5.0_f64), prop::array::uniform3(-100.0..100.0_f64)), 2..40),
            queries in prop::collection::vec(prop::array::uniform3(-10.0..10.0_f64), 1..10),
            seed in any::<u64>(),
        ) {
            let n = rows.len();
            let x = Array2::from_shape_vec((n, 3), rows.iter().flat_map(|r| r.0).collect()).unwrap();
            let y = Array2::from_shape_vec((n, 3), rows.iter().flat_map(|r| r.1).collect()).unwrap();
            let q = Array2::from_shape_vec((queries.len(), 3), queries.concat()).unwrap();
            let cfg = ForestConfig { n_trees: 5, ..ForestConfig::default() };
            let f = fit_forest(x.view(), y.view(), &cfg, seed).unwrap();
            let p = predict_forest(&f, q.view());
            for o in 0..3 {
                let col: Array1<f64> = y.column(o).to_owned();
                let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                for v in p.column(o) {
                    prop_assert!(*v >= lo - 1e-9 && *v <= hi + 1e-9);
                }
            }
        }
    }
}
