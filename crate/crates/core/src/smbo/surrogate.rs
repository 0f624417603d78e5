//! Random-forest regression surrogate over mixed coordinates.
//!
//! Numeric coordinates split on thresholds; categorical coordinates split on
//! one value against the rest. Predictions return the mean and spread of the
//! per-tree estimates.

use rand::Rng;
use statrs::function::erf::erfc;

const TREES: usize = 10;
const MAX_DEPTH: usize = 12;
const MIN_LEAF: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Test {
    LessEq(f64),
    Equals(f64),
}

impl Test {
    fn goes_left(self, v: f64) -> bool {
        match self {
            Test::LessEq(t) => v <= t,
            Test::Equals(c) => v == c,
        }
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        coord: usize,
        test: Test,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct RegTree {
    nodes: Vec<Node>,
}

impl RegTree {
    fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf(v) => return *v,
                Node::Split {
                    coord,
                    test,
                    left,
                    right,
                } => {
                    i = if test.goes_left(x[*coord]) { *left } else { *right };
                }
            }
        }
    }
}

fn sse(sum: f64, sum_sq: f64, n: f64) -> f64 {
    if n <= 0.0 {
        0.0
    } else {
        (sum_sq - sum * sum / n).max(0.0)
    }
}

struct Grower<'a> {
    xs: &'a [Vec<f64>],
    ys: &'a [f64],
    categorical: &'a [bool],
    nodes: Vec<Node>,
}

impl Grower<'_> {
    fn grow(&mut self, rows: &mut [usize], depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf(0.0));
        let n = rows.len() as f64;
        let sum: f64 = rows.iter().map(|&r| self.ys[r]).sum();
        let sum_sq: f64 = rows.iter().map(|&r| self.ys[r] * self.ys[r]).sum();
        let parent = sse(sum, sum_sq, n);
        let split = if depth < MAX_DEPTH && rows.len() >= 2 * MIN_LEAF && parent > 1e-18 {
            self.best_split(rows, sum, sum_sq, parent)
        } else {
            None
        };
        match split {
            None => self.nodes[id] = Node::Leaf(sum / n),
            Some((coord, test)) => {
                let mut cut = 0;
                for k in 0..rows.len() {
                    if test.goes_left(self.xs[rows[k]][coord]) {
                        rows.swap(k, cut);
                        cut += 1;
                    }
                }
                let (lo, hi) = rows.split_at_mut(cut);
                let left = self.grow(lo, depth + 1);
                let right = self.grow(hi, depth + 1);
                self.nodes[id] = Node::Split {
                    coord,
                    test,
                    left,
                    right,
                };
            }
        }
        id
    }

    fn best_split(&self, rows: &[usize], sum: f64, sum_sq: f64, parent: f64) -> Option<(usize, Test)> {
        let n = rows.len();
        let mut best: Option<(f64, usize, Test)> = None;
        let consider = |score: f64, coord: usize, test: Test, best: &mut Option<(f64, usize, Test)>| {
            if score < parent - 1e-12 && best.is_none_or(|(s, _, _)| score < s - 1e-15) {
                *best = Some((score, coord, test));
            }
        };
        let dims = self.xs[rows[0]].len();
        let mut order: Vec<(f64, f64)> = Vec::with_capacity(n);
        for coord in 0..dims {
            order.clear();
            order.extend(rows.iter().map(|&r| (self.xs[r][coord], self.ys[r])));
            order.sort_by(|a, b| a.0.total_cmp(&b.0));
            if self.categorical[coord] {
                let mut k = 0;
                while k < n {
                    let value = order[k].0;
                    let (mut s, mut sq, mut cnt) = (0.0, 0.0, 0usize);
                    while k < n && order[k].0 == value {
                        s += order[k].1;
                        sq += order[k].1 * order[k].1;
                        cnt += 1;
                        k += 1;
                    }
                    if cnt >= MIN_LEAF && n - cnt >= MIN_LEAF {
                        let score = sse(s, sq, cnt as f64) + sse(sum - s, sum_sq - sq, (n - cnt) as f64);
                        consider(score, coord, Test::Equals(value), &mut best);
                    }
                }
            } else {
                let (mut s, mut sq) = (0.0, 0.0);
                for k in 0..n - 1 {
                    s += order[k].1;
                    sq += order[k].1 * order[k].1;
                    let left = k + 1;
                    if order[k].0 == order[k + 1].0 || left < MIN_LEAF || n - left < MIN_LEAF {
                        continue;
                    }
                    let score = sse(s, sq, left as f64) + sse(sum - s, sum_sq - sq, (n - left) as f64);
                    consider(
                        score,
                        coord,
                        Test::LessEq(0.5 * (order[k].0 + order[k + 1].0)),
                        &mut best,
                    );
                }
            }
        }
        best.map(|(_, c, t)| (c, t))
    }
}

#[derive(Debug, Clone)]
pub struct Surrogate {
    trees: Vec<RegTree>,
}

impl Surrogate {
    /// Bootstrapped ensemble; `categorical[c]` marks index-valued coordinates.
    pub fn fit<R: Rng + ?Sized>(xs: &[Vec<f64>], ys: &[f64], categorical: &[bool], rng: &mut R) -> Self {
        let n = xs.len();
        let trees = (0..TREES)
            .map(|_| {
                let mut rows: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                let mut g = Grower {
                    xs,
                    ys,
                    categorical,
                    nodes: Vec::new(),
                };
                g.grow(&mut rows, 0);
                RegTree { nodes: g.nodes }
            })
            .collect();
        Self { trees }
    }

    /// Mean and standard deviation across trees.
    pub fn predict(&self, x: &[f64]) -> (f64, f64) {
        let k = self.trees.len() as f64;
        let preds: Vec<f64> = self.trees.iter().map(|t| t.predict(x)).collect();
        let mean = preds.iter().sum::<f64>() / k;
        let var = preds.iter().map(|p| (p - mean) * (p - mean)).sum::<f64>() / k;
        (mean, var.sqrt())
    }
}

fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

fn normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Expected improvement below `incumbent` for a minimisation problem.
pub fn expected_improvement(mean: f64, std: f64, incumbent: f64) -> f64 {
    let gap = incumbent - mean;
    if std <= 1e-12 {
        return gap.max(0.0);
    }
    let z = gap / std;
    gap * normal_cdf(z) + std * normal_pdf(z)
}
