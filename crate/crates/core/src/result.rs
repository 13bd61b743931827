use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Outcome of running one aggregation method on one response set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregationResult {
    pub method_name: String,
    pub chosen: usize,
    /// Criterion value per answer; answers outside the method's candidate set
    /// hold `-inf` (serialized as `null`).
    #[serde(serialize_with = "ser_scores", deserialize_with = "de_scores")]
    pub scores: Vec<f64>,
    pub tie_broken: bool,
    /// Classifier probabilities: per response for RCR-Agg, per answer for ACR-Agg.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub probabilities: Option<Vec<f64>>,
}

impl AggregationResult {
    pub(crate) fn from_scores(method_name: impl Into<String>, scores: Vec<f64>) -> Self {
        let (chosen, tie_broken) = argmax_lowest(&scores);
        Self {
            method_name: method_name.into(),
            chosen,
            scores,
            tie_broken,
            probabilities: None,
        }
    }
}

/// Index of the largest score, lowest index among exact ties, and whether a
/// tie occurred.
pub(crate) fn argmax_lowest(scores: &[f64]) -> (usize, bool) {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut winners = scores.iter().enumerate().filter(|(_, &s)| s == best).map(|(i, _)| i);
    let first = winners.next().unwrap_or(0);
    (first, winners.next().is_some())
}

/// Indices attaining the maximum score.
pub(crate) fn argmax_set(scores: &[f64]) -> Vec<usize> {
    let best = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s == best)
        .map(|(i, _)| i)
        .collect()
}

fn ser_scores<S: Serializer>(scores: &[f64], s: S) -> Result<S::Ok, S::Error> {
    let opt: Vec<Option<f64>> = scores.iter().map(|v| v.is_finite().then_some(*v)).collect();
    opt.serialize(s)
}

fn de_scores<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    let opt: Vec<Option<f64>> = Vec::deserialize(d)?;
    Ok(opt.into_iter().map(|v| v.unwrap_or(f64::NEG_INFINITY)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ties_go_low() {
        assert_eq!(argmax_lowest(&[0.2, 0.5, 0.5]), (1, true));
        assert_eq!(argmax_lowest(&[0.9, 0.5]), (0, false));
        assert_eq!(argmax_lowest(&[f64::NEG_INFINITY, 0.1]), (1, false));
    }

    #[test]
    fn json_nulls_for_excluded_answers() {
        let r = AggregationResult::from_scores("hac", vec![0.5, f64::NEG_INFINITY]);
        let text = serde_json::to_string(&r).unwrap();
        assert!(text.contains("[0.5,null]"));
        let back: AggregationResult = serde_json::from_str(&text).unwrap();
        assert_eq!(back, r);
    }
}
