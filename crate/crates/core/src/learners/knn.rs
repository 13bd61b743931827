use serde::{Deserialize, Serialize};

/// k-nearest-neighbour vote over stored (standardized) training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
}

impl KnnModel {
    /// Fraction of True labels among the `k` nearest rows; equal distances
    /// favour the lower row index.
    pub fn predict(&self, row: &[f64]) -> f64 {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(row).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let hits = dist[..k].iter().filter(|(_, i)| self.labels[*i]).count();
        hits as f64 / k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(k: usize) -> KnnModel {
        KnnModel {
            k,
            rows: vec![vec![0.0], vec![1.0], vec![2.0], vec![3.0], vec![10.0]],
            labels: vec![true, true, false, true, false],
        }
    }

    #[test]
    fn identity_with_one_neighbour() {
        let m = model(1);
        for (r, l) in m.rows.clone().iter().zip(m.labels.clone()) {
            assert_eq!(m.predict(r), if l { 1.0 } else { 0.0 });
        }
    }

    #[test]
    fn counts_and_limits() {
        assert!((model(3).predict(&[0.9]) - 2.0 / 3.0).abs() < 1e-12);
        let all = model(5);
        for q in [-4.0, 1.5, 100.0] {
            assert!((all.predict(&[q]) - 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn distance_ties_prefer_low_index() {
        // rows 0 and 2 are both at distance 1 from the query
        let m = KnnModel {
            k: 1,
            rows: vec![vec![0.0], vec![5.0], vec![2.0]],
            labels: vec![true, false, false],
        };
        assert_eq!(m.predict(&[1.0]), 1.0);
    }
}
