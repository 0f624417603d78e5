//! L2-regularised logistic regression trained by full-batch gradient descent.
//!
//! Inputs are standardised internally so one learning-rate range works for
//! every dataset. The standardisation is folded back into the coefficients,
//! so the fitted model acts on raw features. Because of that standardisation,
//! shifting a column does not change the fit, so each column is stored as
//! offsets from a common value and training touches only the non-zero offsets.
//! One-hot columns stay sparse even after a scaling component.

use crate::tabular::FeatureMatrix;

use super::ZooError;

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticModel {
    coef: Vec<f64>,
    intercept: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct LogisticParams {
    pub learning_rate: f64,
    pub l2: f64,
    pub epochs: usize,
}

struct Sparse {
    row_start: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl Sparse {
    /// Per column, the most frequent of the values in the first few rows.
    fn bases(x: &FeatureMatrix, rows: &[usize]) -> Vec<f64> {
        let probe: Vec<&[f64]> = rows.iter().take(3).map(|&r| x.row(r)).collect();
        let mut counts = vec![[0usize; 3]; x.cols()];
        for &r in rows {
            for (c, &v) in x.row(r).iter().enumerate() {
                for (k, p) in probe.iter().enumerate() {
                    counts[c][k] += usize::from(p[c] == v);
                }
            }
        }
        (0..x.cols())
            .map(|c| {
                let mut best = 0;
                for k in 1..probe.len() {
                    if counts[c][k] > counts[c][best] {
                        best = k;
                    }
                }
                probe.get(best).map_or(0.0, |p| p[c])
            })
            .collect()
    }

    fn from_rows(x: &FeatureMatrix, rows: &[usize], base: &[f64]) -> Self {
        let mut row_start = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_start.push(0);
        for &r in rows {
            for (c, &v) in x.row(r).iter().enumerate() {
                if v != base[c] {
                    cols.push(c);
                    vals.push(v - base[c]);
                }
            }
            row_start.push(cols.len());
        }
        Self { row_start, cols, vals }
    }

    fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_start[i]..self.row_start[i + 1];
        self.cols[span.clone()]
            .iter()
            .copied()
            .zip(self.vals[span].iter().copied())
    }
}

impl LogisticModel {
    pub fn fit(x: &FeatureMatrix, y: &[u8], rows: &[usize], params: LogisticParams) -> Result<Self, ZooError> {
        let n = rows.len();
        let d = x.cols();
        let nf = n as f64;
        let base = Sparse::bases(x, rows);
        let data = Sparse::from_rows(x, rows, &base);
        let targets: Vec<f64> = rows.iter().map(|&r| f64::from(y[r])).collect();

        let mut mean = vec![0.0; d];
        let mut sq = vec![0.0; d];
        for i in 0..n {
            for (c, v) in data.row(i) {
                mean[c] += v;
                sq[c] += v * v;
            }
        }
        let mut scale = vec![1.0; d];
        for c in 0..d {
            mean[c] /= nf;
            let var = sq[c] / nf - mean[c] * mean[c];
            if var > 1e-24 {
                scale[c] = var.sqrt();
            }
        }

        // weights live in the standardised space
        let mut w = vec![0.0; d];
        let mut b = 0.0;
        let mut eff = vec![0.0; d];
        let mut grad = vec![0.0; d];
        for _ in 0..params.epochs {
            let mut offset = b;
            for c in 0..d {
                eff[c] = w[c] / scale[c];
                offset -= eff[c] * mean[c];
            }
            grad.iter_mut().for_each(|g| *g = 0.0);
            let mut residual_sum = 0.0;
            for (i, &t) in targets.iter().enumerate() {
                let z = offset + data.row(i).map(|(c, v)| eff[c] * v).sum::<f64>();
                let r = sigmoid(z) - t;
                residual_sum += r;
                for (c, v) in data.row(i) {
                    grad[c] += r * v;
                }
            }
            for c in 0..d {
                let g = (grad[c] - mean[c] * residual_sum) / (scale[c] * nf) + params.l2 * w[c];
                w[c] -= params.learning_rate * g;
            }
            b -= params.learning_rate * residual_sum / nf;
            if !b.is_finite() || w.iter().any(|v| !v.is_finite()) {
                return Err(ZooError::NumericOverflow("logistic regression weights".into()));
            }
        }

        let mut intercept = b;
        let coef: Vec<f64> = (0..d)
            .map(|c| {
                let k = w[c] / scale[c];
                intercept -= k * (mean[c] + base[c]);
                k
            })
            .collect();
        Ok(Self { coef, intercept })
    }

    pub fn logit(&self, row: &[f64]) -> f64 {
        self.intercept + self.coef.iter().zip(row).map(|(w, v)| w * v).sum::<f64>()
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows()).map(|r| sigmoid(self.logit(x.row(r)))).collect()
    }
}
