//! Random forest of Gini decision trees over sparse vectors.
//!
//! Each tree is grown on a bootstrap bag of `ceil(p * n)` rows drawn with
//! replacement. At every node `K` features are drawn without replacement and
//! evaluated in ascending index order; if none of them separates the node,
//! further features are drawn one at a time until one does or all are
//! exhausted. Split candidates are compared exactly on integer counts, ties go
//! to the lower feature index and then the lower threshold.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::learners::RandomForestParams;
use crate::seeds;
use crate::textproc::FeatureVector;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf {
        positive: bool,
    },
    Split {
        feature: u32,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &FeatureVector) -> bool {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive } => return *positive,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if x.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    }
                }
            }
        }
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    dim: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub(crate) fn fit(
        params: &RandomForestParams,
        xs: &[FeatureVector],
        ys: &[bool],
        seed: u64,
    ) -> RandomForest {
        let dim = xs[0].dim();
        let trees = (0..params.trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = tree_rng(seed, t);
                let bag = draw_bag(xs.len(), params.bag_fraction, &mut rng);
                grow_tree(xs, ys, &bag, params.features, params.max_depth, &mut rng)
            })
            .collect();
        RandomForest { dim, trees }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Fraction of trees voting positive.
    pub fn score(&self, x: &FeatureVector) -> f64 {
        let votes = self.trees.iter().filter(|t| t.predict(x)).count();
        votes as f64 / self.trees.len() as f64
    }

    #[cfg(test)]
    pub(crate) fn from_trees(dim: usize, trees: Vec<DecisionTree>) -> Self {
        RandomForest { dim, trees }
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    seeds::rng(seeds::derive(seed, &[seeds::tag::TREE, tree as u64]))
}

fn draw_bag(n: usize, fraction: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let size = ((fraction * n as f64).ceil() as usize).clamp(1, n.max(1));
    (0..size).map(|_| rng.gen_range(0..n)).collect()
}

/// The bootstrap bag (row indices, with repeats) that tree `tree` of a
/// forest trained with `seed` is grown on.
pub fn tree_bag(n: usize, fraction: f64, seed: u64, tree: usize) -> Vec<usize> {
    draw_bag(n, fraction, &mut tree_rng(seed, tree))
}

/// Sum of squared class counts over node size, as an exact fraction.
/// Larger is purer; maximizing it minimizes weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Purity {
    num: u128,
    den: u128,
}

impl Purity {
    fn of_partition(lp: u64, ln: u64, rp: u64, rn: u64) -> Purity {
        let (nl, nr) = ((lp + ln) as u128, (rp + rn) as u128);
        let a = (lp as u128).pow(2) + (ln as u128).pow(2);
        let b = (rp as u128).pow(2) + (rn as u128).pow(2);
        Purity {
            num: a * nr + b * nl,
            den: nl * nr,
        }
    }

    fn of_node(p: u64, n: u64) -> Purity {
        Purity {
            num: (p as u128).pow(2) + (n as u128).pow(2),
            den: (p + n) as u128,
        }
    }

    fn cmp(&self, other: &Purity) -> Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

struct Candidate {
    feature: u32,
    threshold: f64,
    purity: Purity,
}

/// Best split of `rows` on `feature`, or `None` if every row has the same
/// value. Feature values are non-negative and zeros are not stored, so rows
/// split into an implicit zero block followed by the sorted non-zeros.
fn best_split_on(
    xs: &[FeatureVector],
    ys: &[bool],
    rows: &[usize],
    feature: u32,
) -> Option<Candidate> {
    let mut nonzero: Vec<(f64, bool)> = Vec::new();
    let (mut zp, mut zn) = (0u64, 0u64);
    for &r in rows {
        let v = xs[r].get(feature);
        if v == 0.0 {
            if ys[r] {
                zp += 1
            } else {
                zn += 1
            }
        } else {
            nonzero.push((v, ys[r]));
        }
    }
    nonzero.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total_p = zp + nonzero.iter().filter(|e| e.1).count() as u64;
    let total_n = rows.len() as u64 - total_p;

    let mut best: Option<Candidate> = None;
    let (mut lp, mut ln) = (zp, zn);
    let mut prev = if zp + zn > 0 { Some(0.0) } else { None };
    let mut i = 0;
    while i < nonzero.len() {
        let v = nonzero[i].0;
        if let Some(pv) = prev {
            let purity = Purity::of_partition(lp, ln, total_p - lp, total_n - ln);
            if best
                .as_ref()
                .is_none_or(|b| purity.cmp(&b.purity) == Ordering::Greater)
            {
                best = Some(Candidate {
                    feature,
                    threshold: pv + (v - pv) / 2.0,
                    purity,
                });
            }
        }
        while i < nonzero.len() && nonzero[i].0 == v {
            if nonzero[i].1 {
                lp += 1
            } else {
                ln += 1
            }
            i += 1;
        }
        prev = Some(v);
    }
    best
}

fn majority(ys: &[bool], rows: &[usize]) -> bool {
    let p = rows.iter().filter(|&&r| ys[r]).count();
    2 * p > rows.len()
}

fn grow_tree(
    xs: &[FeatureVector],
    ys: &[bool],
    bag: &[usize],
    features: usize,
    max_depth: Option<usize>,
    rng: &mut ChaCha8Rng,
) -> DecisionTree {
    let dim = xs[0].dim();
    let mut nodes = Vec::new();
    // (node slot, rows, depth)
    let mut stack = vec![(0usize, bag.to_vec(), 0usize)];
    nodes.push(Node::Leaf { positive: false });
    let mut order: Vec<u32> = (0..dim as u32).collect();
    while let Some((slot, rows, depth)) = stack.pop() {
        let p = rows.iter().filter(|&&r| ys[r]).count() as u64;
        let n = rows.len() as u64 - p;
        let leaf = Node::Leaf {
            positive: majority(ys, &rows),
        };
        if p == 0 || n == 0 || max_depth.is_some_and(|d| depth >= d) {
            nodes[slot] = leaf;
            continue;
        }
        let parent = Purity::of_node(p, n);
        let k = features.clamp(1, dim);
        let (chosen, rest) = order.partial_shuffle(rng, k);
        let mut first: Vec<u32> = chosen.to_vec();
        first.sort_unstable();
        let improves = |c: &Candidate| c.purity.cmp(&parent) == Ordering::Greater;
        let mut best: Option<Candidate> = None;
        for &f in &first {
            if let Some(c) = best_split_on(xs, ys, &rows, f).filter(improves) {
                if best
                    .as_ref()
                    .is_none_or(|b| c.purity.cmp(&b.purity) == Ordering::Greater)
                {
                    best = Some(c);
                }
            }
        }
        if best.is_none() {
            rest.shuffle(rng);
            best = rest
                .iter()
                .find_map(|&f| best_split_on(xs, ys, &rows, f).filter(improves));
        }
        let Some(split) = best else {
            nodes[slot] = leaf;
            continue;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| xs[r].get(split.feature) <= split.threshold);
        let left = nodes.len();
        nodes.push(Node::Leaf { positive: false });
        let right = nodes.len();
        nodes.push(Node::Leaf { positive: false });
        nodes[slot] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        stack.push((right, right_rows, depth + 1));
        stack.push((left, left_rows, depth + 1));
    }
    DecisionTree { nodes }
}
