use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_reader, field, location, read_to_string, record_line, write_string, Format, Header};
use crate::error::{Error, Result};

/// Sentinel stored in the answer matrix for an abstention or missing cell.
pub const MISSING: u8 = u8::MAX;

/// Multiple-choice answers of M models on Q items, with the answer key.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseDataset {
    model_ids: Vec<String>,
    item_ids: Vec<String>,
    /// Row-major M×Q; [`MISSING`] marks abstentions.
    answers: Vec<u8>,
    answer_key: Vec<u8>,
    choice_counts: Vec<u8>,
    model_index: HashMap<String, usize>,
}

impl ResponseDataset {
    /// Build and validate a dataset. `answers` holds one row per model.
    pub fn new(
        model_ids: Vec<String>,
        item_ids: Vec<String>,
        answers: Vec<Vec<Option<u8>>>,
        answer_key: Vec<u8>,
        choice_counts: Vec<u8>,
    ) -> Result<Self> {
        if model_ids.is_empty() {
            return Err(Error::EmptyDataset("no models".into()));
        }
        if item_ids.is_empty() {
            return Err(Error::EmptyDataset("no items".into()));
        }
        let q = item_ids.len();
        if answers.len() != model_ids.len() {
            return Err(Error::schema(
                "answers",
                format!("{} answer rows for {} models", answers.len(), model_ids.len()),
            ));
        }
        if answer_key.len() != q || choice_counts.len() != q {
            return Err(Error::schema("answer key", "key length does not match item count"));
        }
        let mut flat = Vec::with_capacity(model_ids.len() * q);
        for (m, row) in answers.iter().enumerate() {
            if row.len() != q {
                return Err(Error::schema(
                    format!("model {}", model_ids[m]),
                    format!("{} answers for {} items", row.len(), q),
                ));
            }
            flat.extend(row.iter().map(|a| a.unwrap_or(MISSING)));
        }
        Self::from_flat(model_ids, item_ids, flat, answer_key, choice_counts)
    }

    pub(crate) fn from_flat(
        model_ids: Vec<String>,
        item_ids: Vec<String>,
        answers: Vec<u8>,
        answer_key: Vec<u8>,
        choice_counts: Vec<u8>,
    ) -> Result<Self> {
        let q = item_ids.len();
        let mut seen = HashMap::new();
        for (i, id) in item_ids.iter().enumerate() {
            if seen.insert(id.as_str(), i).is_some() {
                return Err(Error::schema(format!("item {id}"), "duplicate item id"));
            }
        }
        for (qi, (&k, &key)) in choice_counts.iter().zip(&answer_key).enumerate() {
            if k < 2 || k == MISSING {
                return Err(Error::schema(
                    format!("item {}", item_ids[qi]),
                    format!("choice count {k} must be in [2, 254]"),
                ));
            }
            if key >= k {
                return Err(Error::schema(
                    format!("item {}", item_ids[qi]),
                    format!("correct answer {key} out of range for {k} choices"),
                ));
            }
        }
        let mut model_index = HashMap::with_capacity(model_ids.len());
        for (m, id) in model_ids.iter().enumerate() {
            if model_index.insert(id.clone(), m).is_some() {
                return Err(Error::schema(format!("model {id}"), "duplicate model id"));
            }
            for qi in 0..q {
                let a = answers[m * q + qi];
                if a != MISSING && a >= choice_counts[qi] {
                    return Err(Error::schema(
                        format!("model {id}, item {}", item_ids[qi]),
                        format!("answer {a} out of range for {} choices", choice_counts[qi]),
                    ));
                }
            }
        }
        Ok(ResponseDataset {
            model_ids,
            item_ids,
            answers,
            answer_key,
            choice_counts,
            model_index,
        })
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn item_ids(&self) -> &[String] {
        &self.item_ids
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn num_items(&self) -> usize {
        self.item_ids.len()
    }

    pub fn answer_key(&self) -> &[u8] {
        &self.answer_key
    }

    pub fn choice_counts(&self) -> &[u8] {
        &self.choice_counts
    }

    pub fn index_of(&self, model: &str) -> Result<usize> {
        self.model_index
            .get(model)
            .copied()
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    /// Raw answer row of model `m`, [`MISSING`] for abstentions.
    pub fn row(&self, m: usize) -> &[u8] {
        let q = self.num_items();
        &self.answers[m * q..(m + 1) * q]
    }

    pub fn answer(&self, m: usize, q: usize) -> Option<u8> {
        let a = self.row(m)[q];
        (a != MISSING).then_some(a)
    }

    /// Number of items model `m` answers correctly.
    pub fn correct_count(&self, m: usize) -> usize {
        self.row(m)
            .iter()
            .zip(&self.answer_key)
            .filter(|(a, k)| a == k)
            .count()
    }

    /// Accuracy by model index; missing answers count as incorrect.
    pub fn accuracy_at(&self, m: usize) -> f64 {
        self.correct_count(m) as f64 / self.num_items() as f64
    }

    pub fn accuracies(&self) -> Vec<f64> {
        (0..self.num_models()).map(|m| self.accuracy_at(m)).collect()
    }

    /// Fraction of items with each choice count, as `(k, p_k)` sorted by k.
    pub fn choice_count_histogram(&self) -> Vec<(u8, f64)> {
        let mut counts = [0usize; 256];
        for &k in &self.choice_counts {
            counts[k as usize] += 1;
        }
        let q = self.num_items() as f64;
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (k as u8, c as f64 / q))
            .collect()
    }

    /// Reorder items by `perm` (new position i takes old item `perm[i]`).
    pub fn permute_items(&self, perm: &[usize]) -> Result<Self> {
        assert_eq!(perm.len(), self.num_items());
        let q = self.num_items();
        let item_ids = perm.iter().map(|&i| self.item_ids[i].clone()).collect();
        let key = perm.iter().map(|&i| self.answer_key[i]).collect();
        let counts = perm.iter().map(|&i| self.choice_counts[i]).collect();
        let mut answers = Vec::with_capacity(self.answers.len());
        for m in 0..self.num_models() {
            let row = &self.answers[m * q..(m + 1) * q];
            answers.extend(perm.iter().map(|&i| row[i]));
        }
        Self::from_flat(self.model_ids.clone(), item_ids, answers, key, counts)
    }
}

/// Accuracy of model `model`: fraction of items answered as the key says.
pub fn model_accuracy(d: &ResponseDataset, model: &str) -> Result<f64> {
    Ok(d.accuracy_at(d.index_of(model)?))
}

fn parse_choice(raw: &str, loc: impl FnOnce() -> String) -> Result<Option<u8>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("null") {
        return Ok(None);
    }
    if let Ok(v) = s.parse::<u32>() {
        if v >= MISSING as u32 {
            return Err(Error::schema(loc(), format!("choice index {v} too large")));
        }
        return Ok(Some(v as u8));
    }
    let mut chars = s.chars();
    match (chars.next(), chars.next()) {
        (Some(c), None) if c.is_ascii_alphabetic() => {
            Ok(Some(c.to_ascii_uppercase() as u8 - b'A'))
        }
        _ => Err(Error::parse(loc(), format!("cannot parse answer `{s}`"))),
    }
}

struct KeyEntry {
    item_id: String,
    correct: u8,
    choices: u8,
    loc: String,
}

struct AnswerEntry {
    model_id: String,
    item_id: String,
    answer: Option<u8>,
    loc: String,
}

#[derive(Deserialize)]
struct JsonKey {
    item_id: String,
    correct_answer: serde_json::Value,
    num_choices: u32,
}

#[derive(Deserialize)]
struct JsonAnswer {
    model_id: String,
    item_id: String,
    #[serde(default)]
    answer: serde_json::Value,
}

fn json_choice(v: &serde_json::Value, loc: &str) -> Result<Option<u8>> {
    match v {
        serde_json::Value::Null => Ok(None),
        serde_json::Value::Number(n) => match n.as_u64() {
            Some(x) if x < MISSING as u64 => Ok(Some(x as u8)),
            _ => Err(Error::parse(loc, format!("invalid choice index {n}"))),
        },
        serde_json::Value::String(s) => parse_choice(s, || loc.to_string()),
        other => Err(Error::parse(loc, format!("invalid answer value {other}"))),
    }
}

fn read_key(path: &Path, format: Format) -> Result<Vec<KeyEntry>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut rdr = csv_reader(&text);
            let header = Header::new(rdr.headers().map_err(|e| Error::parse(location(path, 1), e.to_string()))?);
            let c_item = header.require("item_id", path)?;
            let c_key = header.require("correct_answer", path)?;
            let c_k = header.require("num_choices", path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
                let loc = location(path, record_line(&rec));
                let correct = parse_choice(field(&rec, c_key), || loc.clone())?
                    .ok_or_else(|| Error::schema(&loc, "missing correct answer"))?;
                let choices: u32 = field(&rec, c_k)
                    .parse()
                    .map_err(|_| Error::parse(&loc, format!("bad num_choices `{}`", field(&rec, c_k))))?;
                out.push(KeyEntry {
                    item_id: field(&rec, c_item).to_string(),
                    correct,
                    choices: choices.min(MISSING as u32) as u8,
                    loc,
                });
            }
        }
        Format::Jsonl => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let loc = location(path, i as u64 + 1);
                let k: JsonKey = serde_json::from_str(line).map_err(|e| Error::parse(&loc, e.to_string()))?;
                let correct = json_choice(&k.correct_answer, &loc)?
                    .ok_or_else(|| Error::schema(&loc, "missing correct answer"))?;
                out.push(KeyEntry {
                    item_id: k.item_id,
                    correct,
                    choices: k.num_choices.min(MISSING as u32) as u8,
                    loc,
                });
            }
        }
    }
    Ok(out)
}

fn read_answers(path: &Path, format: Format) -> Result<Vec<AnswerEntry>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut rdr = csv_reader(&text);
            let header = Header::new(rdr.headers().map_err(|e| Error::parse(location(path, 1), e.to_string()))?);
            let c_model = header.require("model_id", path)?;
            let c_item = header.require("item_id", path)?;
            let c_ans = header.require("answer", path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
                let loc = location(path, record_line(&rec));
                if rec.len() < 3 {
                    return Err(Error::parse(loc, "expected model_id,item_id,answer"));
                }
                let answer = parse_choice(field(&rec, c_ans), || loc.clone())?;
                out.push(AnswerEntry {
                    model_id: field(&rec, c_model).to_string(),
                    item_id: field(&rec, c_item).to_string(),
                    answer,
                    loc,
                });
            }
        }
        Format::Jsonl => {
            for (i, line) in text.lines().enumerate() {
                if line.trim().is_empty() {
                    continue;
                }
                let loc = location(path, i as u64 + 1);
                let a: JsonAnswer = serde_json::from_str(line).map_err(|e| Error::parse(&loc, e.to_string()))?;
                let answer = json_choice(&a.answer, &loc)?;
                out.push(AnswerEntry {
                    model_id: a.model_id,
                    item_id: a.item_id,
                    answer,
                    loc,
                });
            }
        }
    }
    Ok(out)
}

/// Load answers and their companion answer key.
///
/// Models are ordered by first appearance in the answers file, items by the
/// key file. Cells never mentioned are missing.
pub fn load_responses(answers: &Path, key: &Path, format: Format) -> Result<ResponseDataset> {
    let key_rows = read_key(key, format)?;
    if key_rows.is_empty() {
        return Err(Error::EmptyDataset(format!("{} has no items", key.display())));
    }
    let mut item_index = HashMap::with_capacity(key_rows.len());
    let mut item_ids = Vec::with_capacity(key_rows.len());
    let mut answer_key = Vec::with_capacity(key_rows.len());
    let mut choice_counts = Vec::with_capacity(key_rows.len());
    for row in key_rows {
        if row.choices < 2 {
            return Err(Error::schema(row.loc, format!("item `{}` has fewer than 2 choices", row.item_id)));
        }
        if row.correct >= row.choices {
            return Err(Error::schema(
                row.loc,
                format!("correct answer {} out of range for {} choices", row.correct, row.choices),
            ));
        }
        if item_index.insert(row.item_id.clone(), item_ids.len()).is_some() {
            return Err(Error::schema(row.loc, format!("duplicate item `{}`", row.item_id)));
        }
        item_ids.push(row.item_id);
        answer_key.push(row.correct);
        choice_counts.push(row.choices);
    }

    let q = item_ids.len();
    let entries = read_answers(answers, format)?;
    let mut model_index: HashMap<String, usize> = HashMap::new();
    let mut model_ids = Vec::new();
    let mut matrix: Vec<u8> = Vec::new();
    let mut filled: Vec<bool> = Vec::new();
    for e in entries {
        let qi = *item_index
            .get(&e.item_id)
            .ok_or_else(|| Error::schema(&e.loc, format!("unknown item `{}`", e.item_id)))?;
        let m = match model_index.get(&e.model_id) {
            Some(&m) => m,
            None => {
                let m = model_ids.len();
                model_index.insert(e.model_id.clone(), m);
                model_ids.push(e.model_id.clone());
                matrix.resize(matrix.len() + q, MISSING);
                filled.resize(filled.len() + q, false);
                m
            }
        };
        let cell = m * q + qi;
        if filled[cell] {
            return Err(Error::schema(
                &e.loc,
                format!("duplicate answer for model `{}`, item `{}`", e.model_id, e.item_id),
            ));
        }
        filled[cell] = true;
        if let Some(a) = e.answer {
            if a >= choice_counts[qi] {
                return Err(Error::schema(
                    &e.loc,
                    format!(
                        "answer {a} for model `{}`, item `{}` out of range for {} choices",
                        e.model_id, e.item_id, choice_counts[qi]
                    ),
                ));
            }
            matrix[cell] = a;
        }
    }
    if model_ids.is_empty() {
        return Err(Error::EmptyDataset(format!("{} has no answers", answers.display())));
    }
    ResponseDataset::from_flat(model_ids, item_ids, matrix, answer_key, choice_counts)
}

#[derive(Serialize)]
struct JsonKeyOut<'a> {
    item_id: &'a str,
    correct_answer: u8,
    num_choices: u8,
}

#[derive(Serialize)]
struct JsonAnswerOut<'a> {
    model_id: &'a str,
    item_id: &'a str,
    answer: Option<u8>,
}

/// Write the canonical form: key in item order, answers model-major with
/// every cell present (missing cells as empty / null).
pub fn save_responses(d: &ResponseDataset, answers: &Path, key: &Path, format: Format) -> Result<()> {
    let mut key_out = String::new();
    let mut ans_out = String::with_capacity(d.num_models() * d.num_items() * 16);
    match format {
        Format::Csv => {
            key_out.push_str("item_id,correct_answer,num_choices\n");
            for (qi, id) in d.item_ids.iter().enumerate() {
                writeln!(key_out, "{},{},{}", csv_escape(id), d.answer_key[qi], d.choice_counts[qi]).unwrap();
            }
            ans_out.push_str("model_id,item_id,answer\n");
            for (m, mid) in d.model_ids.iter().enumerate() {
                let mid = csv_escape(mid);
                for (qi, iid) in d.item_ids.iter().enumerate() {
                    match d.answer(m, qi) {
                        Some(a) => writeln!(ans_out, "{},{},{}", mid, csv_escape(iid), a).unwrap(),
                        None => writeln!(ans_out, "{},{},", mid, csv_escape(iid)).unwrap(),
                    }
                }
            }
        }
        Format::Jsonl => {
            for (qi, id) in d.item_ids.iter().enumerate() {
                let row = JsonKeyOut {
                    item_id: id,
                    correct_answer: d.answer_key[qi],
                    num_choices: d.choice_counts[qi],
                };
                key_out.push_str(&serde_json::to_string(&row).expect("serializable"));
                key_out.push('\n');
            }
            for (m, mid) in d.model_ids.iter().enumerate() {
                for (qi, iid) in d.item_ids.iter().enumerate() {
                    let row = JsonAnswerOut {
                        model_id: mid,
                        item_id: iid,
                        answer: d.answer(m, qi),
                    };
                    ans_out.push_str(&serde_json::to_string(&row).expect("serializable"));
                    ans_out.push('\n');
                }
            }
        }
    }
    write_string(key, &key_out)?;
    write_string(answers, &ans_out)
}

pub(crate) fn csv_escape(s: &str) -> std::borrow::Cow<'_, str> {
    if s.contains([',', '"', '\n', '\r']) || s.trim() != s {
        std::borrow::Cow::Owned(format!("\"{}\"", s.replace('"', "\"\"")))
    } else {
        std::borrow::Cow::Borrowed(s)
    }
}
