//! Responses, answer sets and the support statistics every other module
//! is built on.
//!
//! Confidence and predicted support are stored as fractions in `[0, 1]`.
//! Raw survey records on other scales go through [`validate_and_normalize`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance within which a predicted-support vector is accepted as summing to one.
pub const PS_SUM_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerSet {
    pub problem_id: String,
    pub m: usize,
    /// Index of the correct answer; absent for unlabeled inference.
    pub correct_index: Option<usize>,
}

impl AnswerSet {
    pub fn new(problem_id: impl Into<String>, m: usize, correct_index: Option<usize>) -> Result<Self> {
        let problem_id = problem_id.into();
        if m < 2 {
            return Err(Error::InvalidAnswerSet(format!(
                "problem {problem_id}: need at least 2 answers, got {m}"
            )));
        }
        if let Some(c) = correct_index {
            if c >= m {
                return Err(Error::InvalidAnswerSet(format!(
                    "problem {problem_id}: correct index {c} out of range for {m} answers"
                )));
            }
        }
        Ok(Self {
            problem_id,
            m,
            correct_index,
        })
    }
}

/// One respondent's vote, confidence and predicted support distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub respondent_id: String,
    pub vote: usize,
    pub confidence: f64,
    pub predicted_support: Vec<f64>,
}

impl Response {
    /// Predicted support the respondent gave to their own vote.
    pub fn ps_of_vote(&self) -> f64 {
        self.predicted_support[self.vote]
    }
}

/// Scale on which a raw confidence value was elicited.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum ConfidenceScale {
    #[default]
    Fraction,
    Percent,
    /// Integer points `1..=points`, mapped linearly onto `[0, 1]`.
    Likert {
        points: u32,
    },
}

impl ConfidenceScale {
    fn to_fraction(self, value: f64) -> Option<f64> {
        match self {
            ConfidenceScale::Fraction => (0.0..=1.0).contains(&value).then_some(value),
            ConfidenceScale::Percent => (0.0..=100.0).contains(&value).then_some(value / 100.0),
            ConfidenceScale::Likert { points } => {
                let top = f64::from(points);
                if points < 2 || !(1.0..=top).contains(&value) {
                    None
                } else {
                    Some((value - 1.0) / (top - 1.0))
                }
            }
        }
    }
}

/// Scale on which predicted-support entries were elicited.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SupportScale {
    #[default]
    Fraction,
    Percent,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestOptions {
    pub confidence_scale: ConfidenceScale,
    pub support_scale: SupportScale,
}

impl IngestOptions {
    pub fn percent() -> Self {
        Self {
            confidence_scale: ConfidenceScale::Percent,
            support_scale: SupportScale::Percent,
        }
    }
}

/// A response record as it arrives from a form, before scale conversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawResponse {
    pub respondent_id: String,
    pub vote: usize,
    pub confidence: f64,
    pub predicted_support: Vec<f64>,
}

/// Rescale confidence and predicted support to fractions and renormalize the
/// prediction vector so it sums to one.
pub fn validate_and_normalize(raw: &RawResponse, m: usize, opts: &IngestOptions) -> Result<Response> {
    let id = || raw.respondent_id.clone();
    if raw.vote >= m {
        return Err(Error::VoteOutOfRange {
            respondent_id: id(),
            vote: raw.vote,
            m,
        });
    }
    if raw.predicted_support.len() != m {
        return Err(Error::PredictionLength {
            respondent_id: id(),
            expected: m,
            got: raw.predicted_support.len(),
        });
    }
    if !raw.confidence.is_finite() || raw.predicted_support.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { respondent_id: id() });
    }
    let confidence = opts
        .confidence_scale
        .to_fraction(raw.confidence)
        .ok_or_else(|| Error::ConfidenceOutOfRange {
            respondent_id: id(),
            value: raw.confidence,
        })?;
    if raw.predicted_support.iter().any(|&v| v < 0.0) {
        return Err(Error::NegativeEntry { respondent_id: id() });
    }
    let divisor = match opts.support_scale {
        SupportScale::Fraction => 1.0,
        SupportScale::Percent => 100.0,
    };
    let mut ps: Vec<f64> = raw.predicted_support.iter().map(|v| v / divisor).collect();
    let sum: f64 = ps.iter().sum();
    if sum <= 0.0 {
        return Err(Error::AllZeroPrediction { respondent_id: id() });
    }
    if (sum - 1.0).abs() > PS_SUM_TOLERANCE {
        ps.iter_mut().for_each(|v| *v /= sum);
    }
    Ok(Response {
        respondent_id: raw.respondent_id.clone(),
        vote: raw.vote,
        confidence,
        predicted_support: ps,
    })
}

/// All responses to one problem together with its answer set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseSet {
    answer_set: AnswerSet,
    responses: Vec<Response>,
}

impl ResponseSet {
    pub fn new(answer_set: AnswerSet, responses: Vec<Response>) -> Result<Self> {
        if responses.is_empty() {
            return Err(Error::EmptyResponseSet);
        }
        let m = answer_set.m;
        for r in &responses {
            if r.predicted_support.len() != m {
                return Err(Error::PredictionLength {
                    respondent_id: r.respondent_id.clone(),
                    expected: m,
                    got: r.predicted_support.len(),
                });
            }
            if r.vote >= m {
                return Err(Error::VoteOutOfRange {
                    respondent_id: r.respondent_id.clone(),
                    vote: r.vote,
                    m,
                });
            }
        }
        Ok(Self { answer_set, responses })
    }

    pub fn answer_set(&self) -> &AnswerSet {
        &self.answer_set
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn m(&self) -> usize {
        self.answer_set.m
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn problem_id(&self) -> &str {
        &self.answer_set.problem_id
    }

    /// Same responses with the ground truth stripped.
    pub fn unlabeled(&self) -> Self {
        let mut out = self.clone();
        out.answer_set.correct_index = None;
        out
    }

    /// Vote counts per answer.
    pub fn vote_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.m()];
        for r in &self.responses {
            counts[r.vote] += 1;
        }
        counts
    }

    /// Subset that keeps the responses at `indices`, in that order.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        let responses = indices.iter().map(|&i| self.responses[i].clone()).collect();
        Self::new(self.answer_set.clone(), responses)
    }
}

/// Actual vote share of each answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportDistribution {
    pub support: Vec<f64>,
}

impl SupportDistribution {
    pub fn get(&self, a: usize) -> f64 {
        self.support[a]
    }
}

pub fn support_distribution(rs: &ResponseSet) -> SupportDistribution {
    let n = rs.len() as f64;
    SupportDistribution {
        support: rs.vote_counts().into_iter().map(|c| c as f64 / n).collect(),
    }
}

/// Split responses into the supporters of `a` and everyone else.
pub fn partition(rs: &ResponseSet, a: usize) -> Result<(Vec<&Response>, Vec<&Response>)> {
    if a >= rs.m() {
        return Err(Error::IndexOutOfRange { index: a, m: rs.m() });
    }
    Ok(rs.responses().iter().partition(|r| r.vote == a))
}

/// Mean of `ps[a]` over `subset`; `None` when the subset is empty.
pub fn avg_predicted_support(subset: &[&Response], a: usize) -> Option<f64> {
    if subset.is_empty() {
        return None;
    }
    let total: f64 = subset.iter().map(|r| r.predicted_support[a]).sum();
    Some(total / subset.len() as f64)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn resp(vote: usize, confidence: f64, ps: &[f64]) -> Response {
        Response {
            respondent_id: String::new(),
            vote,
            confidence,
            predicted_support: ps.to_vec(),
        }
    }

    pub(crate) fn set(m: usize, responses: Vec<Response>) -> ResponseSet {
        let responses = responses
            .into_iter()
            .enumerate()
            .map(|(i, mut r)| {
                r.respondent_id = format!("r{i}");
                r
            })
            .collect();
        ResponseSet::new(AnswerSet::new("p", m, Some(0)).unwrap(), responses).unwrap()
    }

    fn votes(m: usize, votes: &[usize]) -> ResponseSet {
        let ps = vec![1.0 / m as f64; m];
        set(m, votes.iter().map(|&v| resp(v, 0.5, &ps)).collect())
    }

    fn raw(vote: usize, confidence: f64, ps: &[f64]) -> RawResponse {
        RawResponse {
            respondent_id: "x".into(),
            vote,
            confidence,
            predicted_support: ps.to_vec(),
        }
    }

    #[test]
    fn percent_scale_is_divided() {
        let r = validate_and_normalize(&raw(1, 80.0, &[25.0, 50.0, 25.0]), 3, &IngestOptions::percent()).unwrap();
        assert!((r.confidence - 0.8).abs() < 1e-12);
        for (got, want) in r.predicted_support.iter().zip([0.25, 0.5, 0.25]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn short_prediction_is_renormalized() {
        let r = validate_and_normalize(&raw(0, 0.5, &[0.2, 0.2, 0.2]), 3, &IngestOptions::default()).unwrap();
        for v in &r.predicted_support {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn ingestion_errors() {
        let o = IngestOptions::default();
        assert!(matches!(
            validate_and_normalize(&raw(3, 0.5, &[0.3, 0.3, 0.4]), 3, &o),
            Err(Error::VoteOutOfRange { vote: 3, m: 3, .. })
        ));
        assert!(matches!(
            validate_and_normalize(&raw(0, 0.5, &[-0.1, 0.6, 0.5]), 3, &o),
            Err(Error::NegativeEntry { .. })
        ));
        assert!(matches!(
            validate_and_normalize(&raw(0, 0.5, &[0.0, 0.0]), 2, &o),
            Err(Error::AllZeroPrediction { .. })
        ));
        assert!(matches!(
            validate_and_normalize(&raw(0, 1.5, &[0.5, 0.5]), 2, &o),
            Err(Error::ConfidenceOutOfRange { .. })
        ));
    }

    #[test]
    fn likert_confidence() {
        let o = IngestOptions {
            confidence_scale: ConfidenceScale::Likert { points: 5 },
            support_scale: SupportScale::Fraction,
        };
        let r = validate_and_normalize(&raw(0, 4.0, &[0.5, 0.5]), 2, &o).unwrap();
        assert!((r.confidence - 0.75).abs() < 1e-12);
        assert!(validate_and_normalize(&raw(0, 0.0, &[0.5, 0.5]), 2, &o).is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        let o = IngestOptions::default();
        let first = validate_and_normalize(&raw(1, 0.3, &[0.1, 0.7, 0.5]), 3, &o).unwrap();
        let again =
            validate_and_normalize(&raw(first.vote, first.confidence, &first.predicted_support), 3, &o).unwrap();
        assert_eq!(first, again);
    }

    #[test]
    fn support_counts() {
        let rs = votes(2, &[0, 0, 0, 0, 0, 0, 1, 1, 1, 1]);
        assert_eq!(support_distribution(&rs).support, vec![0.6, 0.4]);
        assert_eq!(support_distribution(&votes(3, &[2, 2, 2])).support, vec![0.0, 0.0, 1.0]);
        assert_eq!(support_distribution(&votes(2, &[0])).support, vec![1.0, 0.0]);
    }

    #[test]
    fn empty_set_rejected() {
        assert!(matches!(
            ResponseSet::new(AnswerSet::new("p", 2, None).unwrap(), vec![]),
            Err(Error::EmptyResponseSet)
        ));
        assert!(AnswerSet::new("p", 1, None).is_err());
        assert!(AnswerSet::new("p", 3, Some(3)).is_err());
    }

    #[test]
    fn partition_cases() {
        let rs = votes(3, &[0, 0, 1]);
        let (s, n) = partition(&rs, 0).unwrap();
        assert_eq!(
            s.iter().map(|r| r.respondent_id.as_str()).collect::<Vec<_>>(),
            ["r0", "r1"]
        );
        assert_eq!(n[0].respondent_id, "r2");

        let all_b = votes(2, &[1, 1]);
        let (s, n) = partition(&all_b, 0).unwrap();
        assert!(s.is_empty());
        assert_eq!(n.len(), 2);

        let mixed = votes(3, &[0, 1, 2, 0]);
        let (s, n) = partition(&mixed, 0).unwrap();
        assert_eq!((s.len(), n.len()), (2, 2));

        assert!(matches!(partition(&rs, 3), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn average_prediction() {
        let a = resp(0, 0.5, &[0.2, 0.8]);
        let b = resp(0, 0.5, &[0.4, 0.6]);
        assert!((avg_predicted_support(&[&a, &b], 0).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(avg_predicted_support(&[], 0), None);
        let c = resp(0, 0.5, &[0.5, 0.5]);
        let d = resp(0, 0.5, &[0.25, 0.75]);
        let e = resp(0, 0.5, &[0.25, 0.75]);
        assert!((avg_predicted_support(&[&c, &d, &e], 0).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }
}
