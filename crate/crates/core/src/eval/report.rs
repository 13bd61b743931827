//! Report bundle writers. Column orders are fixed and documented per function.

use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::attribution::{Attribution, FeatureImportance};
use super::logo::EvaluationOutcome;
use super::stats::{mcnemar_exact, McNemarResult};
use crate::aggregators::StrategySpec;
use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodSummary {
    pub method: String,
    pub groups: usize,
    pub correct: usize,
    pub success_rate: f64,
    pub tie_broken: usize,
}

/// One summary per label, in the order given.
pub fn summarize(outcomes: &[EvaluationOutcome], labels: &[String]) -> Vec<MethodSummary> {
    labels
        .iter()
        .map(|label| {
            let mine: Vec<&EvaluationOutcome> = outcomes.iter().filter(|o| &o.method_name == label).collect();
            let correct = mine.iter().filter(|o| o.correct).count();
            MethodSummary {
                method: label.clone(),
                groups: mine.len(),
                correct,
                success_rate: if mine.is_empty() {
                    0.0
                } else {
                    correct as f64 / mine.len() as f64
                },
                tie_broken: mine.iter().filter(|o| o.tie_broken).count(),
            }
        })
        .collect()
}

fn fmt6(v: f64) -> String {
    format!("{v:.6}")
}

/// `method,groups,correct,success_rate,tie_broken`
pub fn write_success_rates<W: Write>(summaries: &[MethodSummary], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["method", "groups", "correct", "success_rate", "tie_broken"])?;
    for s in summaries {
        w.write_record([
            s.method.clone(),
            s.groups.to_string(),
            s.correct.to_string(),
            fmt6(s.success_rate),
            s.tie_broken.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `strategy,tie_breaker,groups,correct,success_rate`; summaries must be
/// labeled with [`StrategySpec`] display strings.
pub fn write_strategy_grid<W: Write>(summaries: &[(StrategySpec, MethodSummary)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["strategy", "tie_breaker", "groups", "correct", "success_rate"])?;
    for (spec, s) in summaries {
        let text = spec.to_string();
        let (strategy, tie) = text.split_once('/').unwrap_or((&text, ""));
        w.write_record([
            strategy.to_string(),
            tie.to_string(),
            s.groups.to_string(),
            s.correct.to_string(),
            fmt6(s.success_rate),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `method,group_id,problem_id,chosen,correct_index,correct,tie_broken`
pub fn write_outcomes<W: Write>(outcomes: &[EvaluationOutcome], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record([
        "method",
        "group_id",
        "problem_id",
        "chosen",
        "correct_index",
        "correct",
        "tie_broken",
    ])?;
    for o in outcomes {
        w.write_record([
            o.method_name.clone(),
            o.group_id.clone(),
            o.problem_id.clone(),
            o.chosen.to_string(),
            o.correct_index.to_string(),
            u8::from(o.correct).to_string(),
            u8::from(o.tie_broken).to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseTest {
    pub method_a: String,
    pub method_b: String,
    pub result: McNemarResult,
}

/// Exact McNemar test for every unordered pair of labels.
pub fn pairwise_mcnemar(outcomes: &[EvaluationOutcome], labels: &[String]) -> Result<Vec<PairwiseTest>> {
    let by: Vec<Vec<EvaluationOutcome>> = labels
        .iter()
        .map(|l| outcomes.iter().filter(|o| &o.method_name == l).cloned().collect())
        .collect();
    let mut out = Vec::new();
    for i in 0..labels.len() {
        for j in i + 1..labels.len() {
            out.push(PairwiseTest {
                method_a: labels[i].clone(),
                method_b: labels[j].clone(),
                result: mcnemar_exact(&by[i], &by[j])?,
            });
        }
    }
    Ok(out)
}

/// `method_a,method_b,b,c,p_value`
pub fn write_mcnemar<W: Write>(tests: &[PairwiseTest], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["method_a", "method_b", "b", "c", "p_value"])?;
    for t in tests {
        w.write_record([
            t.method_a.clone(),
            t.method_b.clone(),
            t.result.b.to_string(),
            t.result.c.to_string(),
            format!("{:.8}", t.result.p_value),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// `representation,rank,feature,importance,std`, ranks starting at 1.
pub fn write_importances<W: Write>(sections: &[(String, Vec<FeatureImportance>)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["representation", "rank", "feature", "importance", "std"])?;
    for (rep, imps) in sections {
        for (rank, f) in imps.iter().enumerate() {
            w.write_record([
                rep.clone(),
                (rank + 1).to_string(),
                f.feature.clone(),
                format!("{:.8}", f.importance),
                format!("{:.8}", f.std),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `instance,feature,value,base_value,prediction,exact`, one row per
/// (instance, feature) pair.
pub fn write_attributions<W: Write>(feature_names: &[String], rows: &[(usize, Attribution)], w: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(w);
    w.write_record(["instance", "feature", "value", "base_value", "prediction", "exact"])?;
    for (instance, a) in rows {
        for (name, v) in feature_names.iter().zip(&a.values) {
            w.write_record([
                instance.to_string(),
                name.clone(),
                format!("{v:.10}"),
                format!("{:.10}", a.base_value),
                format!("{:.10}", a.prediction),
                u8::from(a.exact).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

/// Horizontal bar chart; negative values are drawn as zero-length bars.
pub fn bar_chart_svg(title: &str, bars: &[(String, f64)]) -> String {
    let (label_w, bar_w, row_h, top) = (180.0, 360.0, 22.0, 40.0);
    let max = bars.iter().map(|b| b.1).fold(0.0f64, f64::max).max(f64::MIN_POSITIVE);
    let height = top + row_h * bars.len() as f64 + 20.0;
    let width = label_w + bar_w + 90.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(
        s,
        r#"<text x="10" y="22" font-size="14" font-weight="bold">{}</text>"#,
        escape(title)
    );
    for (i, (label, v)) in bars.iter().enumerate() {
        let y = top + i as f64 * row_h;
        let len = (v.max(0.0) / max) * bar_w;
        let _ = writeln!(
            s,
            r#"<text x="{}" y="{}" text-anchor="end">{}</text>"#,
            label_w - 6.0,
            y + 14.0,
            escape(label)
        );
        let _ = writeln!(
            s,
            r##"<rect x="{label_w}" y="{}" width="{len:.2}" height="{}" fill="#4a78b0"/>"##,
            y + 3.0,
            row_h - 6.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.2}" y="{}">{v:.4}</text>"#,
            label_w + len + 4.0,
            y + 14.0
        );
    }
    s.push_str("</svg>\n");
    s
}
