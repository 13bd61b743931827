#![allow(dead_code)]

use crowd_agg::model::{AnswerSet, Response, ResponseSet};
use rand::Rng;

/// A normalized random distribution over `m` answers; `sparse` zeroes some
/// coordinates (always keeping one positive).
pub fn random_distribution<R: Rng>(rng: &mut R, m: usize, sparse: bool) -> Vec<f64> {
    let keep = rng.random_range(0..m);
    let mut v: Vec<f64> = (0..m)
        .map(|a| {
            if sparse && a != keep && rng.random_bool(0.3) {
                0.0
            } else {
                rng.random::<f64>() + 1e-3
            }
        })
        .collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Random labeled response set with `m` answers and `n` responses. A quarter
/// of the sets concentrate votes on one answer so unanimity occurs.
pub fn random_set<R: Rng>(rng: &mut R, m: usize, n: usize) -> ResponseSet {
    let favourite = rng.random_range(0..m);
    let skew = rng.random_bool(0.25);
    let sparse = rng.random_bool(0.3);
    let responses = (0..n)
        .map(|i| {
            let vote = if skew && rng.random_bool(0.9) {
                favourite
            } else {
                rng.random_range(0..m)
            };
            Response {
                respondent_id: format!("r{i}"),
                vote,
                confidence: rng.random::<f64>(),
                predicted_support: random_distribution(rng, m, sparse),
            }
        })
        .collect();
    let correct = rng.random_range(0..m);
    ResponseSet::new(AnswerSet::new("p", m, Some(correct)).unwrap(), responses).unwrap()
}

/// Random set with `m` in `2..=6` and `5..=40` responses.
pub fn random_case<R: Rng>(rng: &mut R) -> ResponseSet {
    let m = rng.random_range(2..=6);
    let n = rng.random_range(5..=40);
    random_set(rng, m, n)
}

pub fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (mut s, mut k) = (0.0, 0usize);
    for x in xs {
        s += x;
        k += 1;
    }
    (k > 0).then(|| s / k as f64)
}

/// `½ Σ (p−q)²/(p+q)`, with 0/0 terms dropped.
pub fn chi(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .filter(|(a, b)| *a + *b > 0.0)
        .map(|(a, b)| (a - b) * (a - b) / (a + b))
        .sum::<f64>()
}
