use crate::tabular::FeatureMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct KnnModel {
    x: FeatureMatrix,
    y: Vec<u8>,
    k: usize,
    distance_weighted: bool,
}

impl KnnModel {
    pub fn fit(x: &FeatureMatrix, y: &[u8], rows: &[usize], k: usize, distance_weighted: bool) -> Self {
        Self {
            x: x.select_rows(rows),
            y: rows.iter().map(|&r| y[r]).collect(),
            k: k.clamp(1, rows.len().max(1)),
            distance_weighted,
        }
    }

    /// Weighted share of positive neighbours. Distance ties go to the lower
    /// training index; exact matches outvote everything else under distance weighting.
    fn positive_share(&self, row: &[f64], dist: &mut Vec<(f64, usize)>) -> f64 {
        dist.clear();
        dist.extend((0..self.x.rows()).map(|i| {
            let d2: f64 = self.x.row(i).iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum();
            (d2, i)
        }));
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        let neighbours = &dist[..];
        let weight = |d2: f64| if self.distance_weighted { 1.0 / d2.sqrt() } else { 1.0 };
        let exact: Vec<&(f64, usize)> = neighbours.iter().filter(|(d2, _)| *d2 == 0.0).collect();
        let (pos, total) = if self.distance_weighted && !exact.is_empty() {
            let pos = exact.iter().filter(|(_, i)| self.y[*i] == 1).count() as f64;
            (pos, exact.len() as f64)
        } else {
            neighbours.iter().fold((0.0, 0.0), |(p, t), &(d2, i)| {
                let w = weight(d2);
                (p + w * f64::from(self.y[i]), t + w)
            })
        };
        pos / total
    }

    pub fn predict_proba(&self, x: &FeatureMatrix) -> Vec<f64> {
        let mut scratch = Vec::with_capacity(self.x.rows());
        (0..x.rows())
            .map(|r| self.positive_share(x.row(r), &mut scratch))
            .collect()
    }
}
