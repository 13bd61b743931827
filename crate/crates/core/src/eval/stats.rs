use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use super::logo::EvaluationOutcome;
use crate::error::{Error, Result};

/// Fraction of `method_name`'s outcomes that picked the correct answer
/// (0 when the method has no outcomes).
pub fn success_rate(outcomes: &[EvaluationOutcome], method_name: &str) -> f64 {
    let (hits, total) = outcomes
        .iter()
        .filter(|o| o.method_name == method_name)
        .fold((0usize, 0usize), |(h, t), o| (h + usize::from(o.correct), t + 1));
    if total == 0 {
        0.0
    } else {
        hits as f64 / total as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Groups where only the first method succeeded.
    pub b: usize,
    /// Groups where only the second method succeeded.
    pub c: usize,
    pub p_value: f64,
}

/// Exact two-sided sign test on `b` and `c` discordant pairs.
pub fn mcnemar_p(b: usize, c: usize) -> f64 {
    let n = (b + c) as u64;
    if n == 0 {
        return 1.0;
    }
    let half_n = n as f64 * std::f64::consts::LN_2;
    let tail: f64 = (b.max(c) as u64..=n).map(|k| (ln_binomial(n, k) - half_n).exp()).sum();
    (2.0 * tail).min(1.0)
}

/// Pairs two methods' outcomes by group id and runs the exact test.
pub fn mcnemar_exact(a: &[EvaluationOutcome], b: &[EvaluationOutcome]) -> Result<McNemarResult> {
    let index = |outs: &[EvaluationOutcome]| -> Result<BTreeMap<String, bool>> {
        let mut m = BTreeMap::new();
        for o in outs {
            if m.insert(o.group_id.clone(), o.correct).is_some() {
                return Err(Error::UnpairedOutcomes(format!("group `{}` appears twice", o.group_id)));
            }
        }
        Ok(m)
    };
    let (ia, ib) = (index(a)?, index(b)?);
    if ia.len() != ib.len() || ia.keys().ne(ib.keys()) {
        let missing = ia
            .keys()
            .find(|k| !ib.contains_key(*k))
            .or_else(|| ib.keys().find(|k| !ia.contains_key(*k)));
        return Err(Error::UnpairedOutcomes(format!(
            "group `{}` is missing from one side",
            missing.map(String::as_str).unwrap_or("?")
        )));
    }
    let (mut only_a, mut only_b) = (0, 0);
    for (k, &ca) in &ia {
        match (ca, ib[k]) {
            (true, false) => only_a += 1,
            (false, true) => only_b += 1,
            _ => {}
        }
    }
    Ok(McNemarResult {
        b: only_a,
        c: only_b,
        p_value: mcnemar_p(only_a, only_b),
    })
}
