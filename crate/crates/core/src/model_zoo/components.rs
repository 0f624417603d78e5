use crate::tabular::FeatureMatrix;

use super::ComponentKind;

/// Preprocessing state fitted on the training split only.
#[derive(Debug, Clone, PartialEq)]
pub enum FittedComponent {
    None,
    Standardize {
        mean: Vec<f64>,
        scale: Vec<f64>,
    },
    MinMax {
        min: Vec<f64>,
        range: Vec<f64>,
    },
    VarianceTopK {
        keep: Vec<usize>,
    },
    /// Resamples training rows; a no-op at prediction time.
    Rebalance,
}

fn column_mean_var(x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut mean = vec![0.0; d];
    for r in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for r in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(r)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    var.iter_mut().for_each(|s| *s /= n);
    (mean, var)
}

/// Number of columns VarianceTopK keeps out of `width`.
pub fn top_k_width(width: usize) -> usize {
    width.min(2.max(width.div_ceil(2)))
}

impl FittedComponent {
    pub fn fit(kind: ComponentKind, x: &FeatureMatrix) -> Self {
        match kind {
            ComponentKind::None => FittedComponent::None,
            ComponentKind::Rebalance => FittedComponent::Rebalance,
            ComponentKind::Standardize => {
                let (mean, var) = column_mean_var(x);
                let scale = var
                    .into_iter()
                    .map(|v| if v > 1e-24 { v.sqrt() } else { 1.0 })
                    .collect();
                FittedComponent::Standardize { mean, scale }
            }
            ComponentKind::MinMax => {
                let d = x.cols();
                let mut min = vec![f64::INFINITY; d];
                let mut max = vec![f64::NEG_INFINITY; d];
                for r in 0..x.rows() {
                    for (c, &v) in x.row(r).iter().enumerate() {
                        min[c] = min[c].min(v);
                        max[c] = max[c].max(v);
                    }
                }
                let range = min.iter().zip(&max).map(|(lo, hi)| hi - lo).collect();
                FittedComponent::MinMax { min, range }
            }
            ComponentKind::VarianceTopK => {
                let (_, var) = column_mean_var(x);
                let mut order: Vec<usize> = (0..x.cols()).collect();
                // highest variance first, ties to the lower column index
                order.sort_by(|&a, &b| var[b].total_cmp(&var[a]).then(a.cmp(&b)));
                let mut keep = order[..top_k_width(x.cols())].to_vec();
                keep.sort_unstable();
                FittedComponent::VarianceTopK { keep }
            }
        }
    }

    pub fn transform(&self, x: &FeatureMatrix) -> FeatureMatrix {
        match self {
            FittedComponent::None | FittedComponent::Rebalance => x.clone(),
            FittedComponent::Standardize { mean, scale } => x.map_columns(|c, v| (v - mean[c]) / scale[c]),
            FittedComponent::MinMax { min, range } => {
                x.map_columns(|c, v| if range[c] > 0.0 { (v - min[c]) / range[c] } else { 0.0 })
            }
            FittedComponent::VarianceTopK { keep } => x.select_cols(keep),
        }
    }
}

/// Training row order after rebalancing: all rows, then minority-class rows
/// repeated cyclically until both classes have equal counts.
pub fn rebalance_rows(y: &[u8]) -> Vec<usize> {
    let ones: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 1).collect();
    let zeros: Vec<usize> = (0..y.len()).filter(|&i| y[i] == 0).collect();
    let deficit = ones.len().abs_diff(zeros.len());
    let minority = if ones.len() < zeros.len() { ones } else { zeros };
    let mut rows: Vec<usize> = (0..y.len()).collect();
    if !minority.is_empty() {
        rows.extend(minority.iter().cycle().take(deficit));
    }
    rows
}
