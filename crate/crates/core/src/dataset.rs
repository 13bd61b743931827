//! Labeled feature matrices and their CSV form.
//!
//! Column order is fixed: feature columns (including mask flags), then
//! `label`, `group_id`, `problem_id`, and `answer_index` for answer rows.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{AcrOptions, LabeledAnswerRow, LabeledResponseRow, RcrOptions};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Representation {
    Rcr,
    Acr,
}

impl std::str::FromStr for Representation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rcr" => Ok(Self::Rcr),
            "acr" => Ok(Self::Acr),
            other => Err(Error::InvalidConfig(format!("unknown representation `{other}`"))),
        }
    }
}

impl std::fmt::Display for Representation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Rcr => "rcr",
            Self::Acr => "acr",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainingMatrix {
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<bool>,
    pub feature_names: Vec<String>,
    pub group_ids: Vec<String>,
    pub problem_ids: Vec<String>,
    /// Present for answer-centered matrices.
    pub answer_index: Option<Vec<usize>>,
}

impl TrainingMatrix {
    pub fn from_rcr(rows: &[LabeledResponseRow], opts: &RcrOptions) -> Self {
        Self {
            rows: rows.iter().map(|r| r.features.model_row(opts)).collect(),
            labels: rows.iter().map(|r| r.label).collect(),
            feature_names: opts.column_names(),
            group_ids: rows.iter().map(|r| r.group_id.clone()).collect(),
            problem_ids: rows.iter().map(|r| r.problem_id.clone()).collect(),
            answer_index: None,
        }
    }

    pub fn from_acr(rows: &[LabeledAnswerRow], opts: &AcrOptions) -> Self {
        Self {
            rows: rows.iter().map(|r| r.features.model_row()).collect(),
            labels: rows.iter().map(|r| r.label).collect(),
            feature_names: opts.column_names(),
            group_ids: rows.iter().map(|r| r.group_id.clone()).collect(),
            problem_ids: rows.iter().map(|r| r.problem_id.clone()).collect(),
            answer_index: Some(rows.iter().map(|r| r.answer_index).collect()),
        }
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positive_rate(&self) -> f64 {
        self.labels.iter().filter(|&&l| l).count() as f64 / self.labels.len().max(1) as f64
    }

    /// Rejects empty matrices, ragged rows and non-finite entries.
    pub fn validate(&self) -> Result<()> {
        if self.rows.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        let d = self.n_features();
        for (i, row) in self.rows.iter().enumerate() {
            if row.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: row.len(),
                });
            }
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteMatrix { row: i, col: j });
            }
        }
        if self.labels.len() != self.rows.len() {
            return Err(Error::LengthMismatch {
                left: self.rows.len(),
                right: self.labels.len(),
            });
        }
        Ok(())
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|&l| l) && self.labels.iter().any(|&l| !l)
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Self {
        Self {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            group_ids: indices.iter().map(|&i| self.group_ids[i].clone()).collect(),
            problem_ids: indices.iter().map(|&i| self.problem_ids[i].clone()).collect(),
            answer_index: self
                .answer_index
                .as_ref()
                .map(|a| indices.iter().map(|&i| a[i]).collect()),
        }
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<&str> = self.feature_names.iter().map(String::as_str).collect();
        header.extend(["label", "group_id", "problem_id"]);
        if self.answer_index.is_some() {
            header.push("answer_index");
        }
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = self.rows[i].iter().map(|v| v.to_string()).collect();
            record.push(if self.labels[i] { "1" } else { "0" }.to_string());
            record.push(self.group_ids[i].clone());
            record.push(self.problem_ids[i].clone());
            if let Some(a) = &self.answer_index {
                record.push(a[i].to_string());
            }
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(reader: R, source: &str) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let label_col = header.iter().position(|h| h == "label").ok_or_else(|| Error::Parse {
            path: source.to_string(),
            line: 1,
            message: "missing `label` column".into(),
        })?;
        let has_answer = header.last().map(|h| h == "answer_index").unwrap_or(false);
        let mut out = TrainingMatrix {
            feature_names: header[..label_col].to_vec(),
            answer_index: has_answer.then(Vec::new),
            ..Default::default()
        };
        let parse_err = |line: usize, message: String| Error::Parse {
            path: source.to_string(),
            line,
            message,
        };
        for (i, rec) in r.records().enumerate() {
            let rec = rec?;
            let line = i + 2;
            let row = (0..label_col)
                .map(|j| {
                    rec[j]
                        .parse::<f64>()
                        .map_err(|e| parse_err(line, format!("column {}: {e}", header[j])))
                })
                .collect::<Result<Vec<_>>>()?;
            out.rows.push(row);
            out.labels.push(match &rec[label_col] {
                "1" | "true" | "True" => true,
                "0" | "false" | "False" => false,
                other => return Err(parse_err(line, format!("bad label `{other}`"))),
            });
            out.group_ids.push(rec[label_col + 1].to_string());
            out.problem_ids.push(rec[label_col + 2].to_string());
            if let Some(a) = out.answer_index.as_mut() {
                a.push(
                    rec[label_col + 3]
                        .parse()
                        .map_err(|e| parse_err(line, format!("answer_index: {e}")))?,
                );
            }
        }
        Ok(out)
    }
}
