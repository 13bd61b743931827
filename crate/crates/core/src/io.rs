//! Response and answer-key files.
//!
//! Responses are JSON lines `{problem_id, respondent_id, vote, confidence,
//! predicted_support}` or CSV with columns `problem_id, respondent_id, vote,
//! confidence, ps_0..ps_{m-1}`. The answer key is JSON lines
//! `{problem_id, m, correct_index}`. A data directory holds
//! `responses.jsonl` (or `responses.csv`) next to `answer_key.jsonl`.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_and_normalize, AnswerSet, IngestOptions, RawResponse, ResponseSet};

pub const RESPONSES_JSONL: &str = "responses.jsonl";
pub const RESPONSES_CSV: &str = "responses.csv";
pub const ANSWER_KEY: &str = "answer_key.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseRecord {
    pub problem_id: String,
    pub respondent_id: String,
    pub vote: usize,
    pub confidence: f64,
    pub predicted_support: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnswerKeyEntry {
    pub problem_id: String,
    pub m: usize,
    #[serde(default)]
    pub correct_index: Option<usize>,
}

fn parse_error(source: &str, line: usize, message: impl ToString) -> Error {
    Error::Parse {
        path: source.to_string(),
        line,
        message: message.to_string(),
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>, R: Read>(reader: R, source: &str) -> Result<Vec<(usize, T)>> {
    let mut out = Vec::new();
    for (i, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| parse_error(source, i + 1, e))?;
        out.push((i + 1, record));
    }
    Ok(out)
}

pub fn read_responses_jsonl<R: Read>(reader: R, source: &str) -> Result<Vec<(usize, ResponseRecord)>> {
    read_jsonl(reader, source)
}

pub fn read_answer_key<R: Read>(reader: R, source: &str) -> Result<Vec<AnswerKeyEntry>> {
    Ok(read_jsonl(reader, source)?.into_iter().map(|(_, e)| e).collect())
}

/// Reads the CSV layout; `ps_*` columns are taken in header order.
pub fn read_responses_csv<R: Read>(reader: R, source: &str) -> Result<Vec<(usize, ResponseRecord)>> {
    let mut rdr = csv::ReaderBuilder::new().flexible(false).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_error(source, 1, format!("missing column `{name}`")))
    };
    let (pid, rid, vote, conf) = (
        col("problem_id")?,
        col("respondent_id")?,
        col("vote")?,
        col("confidence")?,
    );
    let ps_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("ps_"))
        .map(|(i, _)| i)
        .collect();
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| parse_error(source, line, e))?;
        let num = |c: usize| -> Result<f64> {
            rec[c]
                .trim()
                .parse::<f64>()
                .map_err(|e| parse_error(source, line, format!("column `{}`: {e}", &headers[c])))
        };
        // a trailing empty ps cell marks a problem with fewer answers than the widest
        let predicted_support = ps_cols
            .iter()
            .filter(|&&c| !rec[c].trim().is_empty())
            .map(|&c| num(c))
            .collect::<Result<Vec<f64>>>()?;
        out.push((
            line,
            ResponseRecord {
                problem_id: rec[pid].to_string(),
                respondent_id: rec[rid].to_string(),
                vote: rec[vote]
                    .trim()
                    .parse()
                    .map_err(|e| parse_error(source, line, format!("column `vote`: {e}")))?,
                confidence: num(conf)?,
                predicted_support,
            },
        ));
    }
    Ok(out)
}

/// Groups records into one `ResponseSet` per problem, sorted by problem id.
///
/// Problems missing from the key are rejected; key entries without responses
/// are skipped.
pub fn assemble(
    records: Vec<(usize, ResponseRecord)>,
    key: &[AnswerKeyEntry],
    opts: &IngestOptions,
    source: &str,
) -> Result<Vec<ResponseSet>> {
    let mut answer_sets = BTreeMap::new();
    for e in key {
        answer_sets.insert(
            e.problem_id.clone(),
            AnswerSet::new(&e.problem_id, e.m, e.correct_index)?,
        );
    }
    let mut grouped: BTreeMap<String, Vec<_>> = BTreeMap::new();
    for (line, r) in records {
        let a = answer_sets.get(&r.problem_id).ok_or_else(|| {
            parse_error(
                source,
                line,
                format!("problem `{}` is not in the answer key", r.problem_id),
            )
        })?;
        let raw = RawResponse {
            respondent_id: r.respondent_id,
            vote: r.vote,
            confidence: r.confidence,
            predicted_support: r.predicted_support,
        };
        grouped
            .entry(r.problem_id)
            .or_default()
            .push(validate_and_normalize(&raw, a.m, opts)?);
    }
    grouped
        .into_iter()
        .map(|(pid, responses)| ResponseSet::new(answer_sets[&pid].clone(), responses))
        .collect()
}

pub fn write_responses_jsonl<W: Write>(sets: &[ResponseSet], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for rs in sets {
        for r in rs.responses() {
            let rec = ResponseRecord {
                problem_id: rs.problem_id().to_string(),
                respondent_id: r.respondent_id.clone(),
                vote: r.vote,
                confidence: r.confidence,
                predicted_support: r.predicted_support.clone(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n")?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_responses_csv<W: Write>(sets: &[ResponseSet], writer: W) -> Result<()> {
    let width = sets.iter().map(ResponseSet::m).max().unwrap_or(0);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec![
        "problem_id".to_string(),
        "respondent_id".into(),
        "vote".into(),
        "confidence".into(),
    ];
    header.extend((0..width).map(|i| format!("ps_{i}")));
    w.write_record(&header)?;
    for rs in sets {
        for r in rs.responses() {
            let mut row = vec![
                rs.problem_id().to_string(),
                r.respondent_id.clone(),
                r.vote.to_string(),
                r.confidence.to_string(),
            ];
            row.extend((0..width).map(|i| r.predicted_support.get(i).map(f64::to_string).unwrap_or_default()));
            w.write_record(&row)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_answer_key<W: Write>(sets: &[ResponseSet], writer: W) -> Result<()> {
    let mut w = BufWriter::new(writer);
    for rs in sets {
        let a = rs.answer_set();
        let e = AnswerKeyEntry {
            problem_id: a.problem_id.clone(),
            m: a.m,
            correct_index: a.correct_index,
        };
        serde_json::to_writer(&mut w, &e)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::FileNotFound(path.display().to_string()),
        _ => Error::Io(e),
    })
}

/// Loads a response file plus answer key. `responses` may be a data
/// directory or a response file whose key sits alongside it.
pub fn load_responses(responses: &Path, opts: &IngestOptions) -> Result<Vec<ResponseSet>> {
    let (file, key_path) = if responses.is_dir() {
        let jsonl = responses.join(RESPONSES_JSONL);
        let file = if jsonl.exists() {
            jsonl
        } else {
            responses.join(RESPONSES_CSV)
        };
        (file, responses.join(ANSWER_KEY))
    } else {
        let dir = responses
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        (responses.to_path_buf(), dir.join(ANSWER_KEY))
    };
    let source = file.display().to_string();
    let records = if file.extension().is_some_and(|e| e == "csv") {
        read_responses_csv(open(&file)?, &source)?
    } else {
        read_responses_jsonl(open(&file)?, &source)?
    };
    let key = read_answer_key(open(&key_path)?, &key_path.display().to_string())?;
    assemble(records, &key, opts, &source)
}

/// Writes `responses.jsonl` (and optionally `responses.csv`) plus the answer key.
pub fn save_dataset(dir: &Path, sets: &[ResponseSet], with_csv: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    write_responses_jsonl(sets, File::create(dir.join(RESPONSES_JSONL))?)?;
    if with_csv {
        write_responses_csv(sets, File::create(dir.join(RESPONSES_CSV))?)?;
    }
    write_answer_key(sets, File::create(dir.join(ANSWER_KEY))?)
}
