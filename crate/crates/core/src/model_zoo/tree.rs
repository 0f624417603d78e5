//! Binary CART trees over a dense feature matrix.
//!
//! One builder serves both classification trees (Gini or entropy on 0/1
//! targets, leaf value = positive fraction) and the regression trees used by
//! gradient boosting (squared error on residuals, caller-supplied leaf values).

use rand::seq::index::sample as sample_indices;
use rand::Rng;

use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    Gini,
    Entropy,
    SquaredError,
}

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tree {
    nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut idx = 0;
        loop {
            match &self.nodes[idx] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => idx = if row[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf(_) => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }

    pub fn leaves(&self) -> usize {
        self.nodes.iter().filter(|n| matches!(n, Node::Leaf(_))).count()
    }
}

#[derive(Debug, Clone, Copy)]
pub struct TreeParams {
    pub max_depth: usize,
    pub min_leaf: usize,
    pub criterion: Criterion,
    /// Features considered per node; `None` = all.
    pub max_features: Option<usize>,
}

#[derive(Clone, Copy, Default)]
struct Stats {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Stats {
    fn add(&mut self, t: f64) {
        self.n += 1.0;
        self.sum += t;
        self.sum_sq += t * t;
    }

    fn sub(&mut self, t: f64) {
        self.n -= 1.0;
        self.sum -= t;
        self.sum_sq -= t * t;
    }

    /// Impurity times node size.
    fn weighted_impurity(&self, criterion: Criterion) -> f64 {
        if self.n <= 0.0 {
            return 0.0;
        }
        match criterion {
            Criterion::Gini => {
                let p = self.sum / self.n;
                self.n * 2.0 * p * (1.0 - p)
            }
            Criterion::Entropy => {
                let p = self.sum / self.n;
                let h = |q: f64| if q <= 0.0 { 0.0 } else { -q * q.ln() };
                self.n * (h(p) + h(1.0 - p))
            }
            Criterion::SquaredError => (self.sum_sq - self.sum * self.sum / self.n).max(0.0),
        }
    }
}

struct Builder<'a, R, L> {
    x: &'a FeatureMatrix,
    targets: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
    leaf_value: L,
    nodes: Vec<Node>,
}

impl<R: Rng, L: FnMut(&[usize]) -> f64> Builder<'_, R, L> {
    fn grow(&mut self, indices: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let mut stats = Stats::default();
        for &i in indices.iter() {
            stats.add(self.targets[i]);
        }
        let parent = stats.weighted_impurity(self.params.criterion);
        let splittable =
            depth < self.params.max_depth && indices.len() >= 2 * self.params.min_leaf.max(1) && parent > 1e-12;
        let split = if splittable {
            self.best_split(indices, stats)
        } else {
            None
        };
        match split {
            None => {
                self.nodes[id] = Node::Leaf((self.leaf_value)(indices));
            }
            Some((feature, threshold)) => {
                let mut cut = 0;
                for k in 0..indices.len() {
                    if self.x.get(indices[k], feature) <= threshold {
                        indices.swap(k, cut);
                        cut += 1;
                    }
                }
                let (lo, hi) = indices.split_at_mut(cut);
                let left = self.grow(lo, depth + 1);
                let right = self.grow(hi, depth + 1);
                self.nodes[id] = Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                };
            }
        }
        id
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.x.cols();
        match self.params.max_features {
            Some(k) if k < d => {
                let mut f = sample_indices(self.rng, d, k.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, indices: &[usize], total: Stats) -> Option<(usize, f64)> {
        let min_leaf = self.params.min_leaf.max(1);
        let n = indices.len();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut order: Vec<(f64, usize)> = Vec::with_capacity(n);
        for feature in self.candidate_features() {
            order.clear();
            order.extend(indices.iter().map(|&i| (self.x.get(i, feature), i)));
            order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            if order[0].0 == order[n - 1].0 {
                continue;
            }
            let mut left = Stats::default();
            let mut right = total;
            for k in 0..n - 1 {
                let t = self.targets[order[k].1];
                left.add(t);
                right.sub(t);
                let (here, next) = (order[k].0, order[k + 1].0);
                if here == next || k + 1 < min_leaf || n - k - 1 < min_leaf {
                    continue;
                }
                let score =
                    left.weighted_impurity(self.params.criterion) + right.weighted_impurity(self.params.criterion);
                if best.is_none_or(|(s, _, _)| score < s - 1e-12) {
                    let mut threshold = 0.5 * (here + next);
                    if threshold >= next {
                        threshold = here;
                    }
                    best = Some((score, feature, threshold));
                }
            }
        }
        best.map(|(_, f, t)| (f, t))
    }
}

/// Grows a tree on the rows listed in `indices` (duplicates allowed).
pub fn grow<R: Rng>(
    x: &FeatureMatrix,
    targets: &[f64],
    indices: &[usize],
    params: TreeParams,
    rng: &mut R,
    leaf_value: impl FnMut(&[usize]) -> f64,
) -> Tree {
    let mut work = indices.to_vec();
    let mut builder = Builder {
        x,
        targets,
        params,
        rng,
        leaf_value,
        nodes: Vec::new(),
    };
    builder.grow(&mut work, 0);
    Tree { nodes: builder.nodes }
}

/// Classification tree whose leaves hold the fraction of positive targets.
pub fn grow_classifier<R: Rng>(
    x: &FeatureMatrix,
    y: &[f64],
    indices: &[usize],
    params: TreeParams,
    rng: &mut R,
) -> Tree {
    grow(x, y, indices, params, rng, |rows| {
        rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn matrix(rows: &[[f64; 2]]) -> FeatureMatrix {
        FeatureMatrix::new(
            rows.len(),
            2,
            rows.iter().flatten().copied().collect(),
            vec!["a".into(), "b".into()],
        )
    }

    fn params(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            min_leaf: 1,
            criterion: Criterion::Gini,
            max_features: None,
        }
    }

    #[test]
    fn separable_split_is_exact() {
        let x = matrix(&[[0.0, 5.0], [1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]);
        let y = [0.0, 0.0, 1.0, 1.0];
        let t = grow_classifier(&x, &y, &[0, 1, 2, 3], params(3), &mut seed::rng(0));
        assert_eq!(t.depth(), 1);
        for (i, &yi) in y.iter().enumerate() {
            assert_eq!(t.predict_row(x.row(i)), yi);
        }
    }

    #[test]
    fn xor_needs_two_levels() {
        let x = matrix(&[[0.0, 0.0], [0.0, 1.0], [1.0, 0.0], [1.0, 1.0]]);
        let y = [0.0, 1.0, 1.0, 0.0];
        let deep = grow_classifier(&x, &y, &[0, 1, 2, 3], params(2), &mut seed::rng(0));
        for (i, &yi) in y.iter().enumerate() {
            assert_eq!(deep.predict_row(x.row(i)), yi);
        }
    }

    #[test]
    fn min_leaf_blocks_small_children() {
        let x = matrix(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let y = [1.0, 0.0, 0.0, 0.0];
        let t = grow_classifier(
            &x,
            &y,
            &[0, 1, 2, 3],
            TreeParams {
                min_leaf: 2,
                ..params(5)
            },
            &mut seed::rng(0),
        );
        assert_eq!(t.leaves(), 2);
    }

    #[test]
    fn regression_leaves_use_callback() {
        let x = matrix(&[[0.0, 0.0], [1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let g = [-1.0, -1.0, 2.0, 2.0];
        let t = grow(
            &x,
            &g,
            &[0, 1, 2, 3],
            TreeParams {
                criterion: Criterion::SquaredError,
                ..params(1)
            },
            &mut seed::rng(0),
            |rows| rows.iter().map(|&i| g[i]).sum::<f64>() / rows.len() as f64,
        );
        assert_eq!(t.predict_row(&[0.5, 0.0]), -1.0);
        assert_eq!(t.predict_row(&[2.5, 0.0]), 2.0);
    }
}
