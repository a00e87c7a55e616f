use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::responses::csv_escape;
use super::{csv_reader, field, fmt_f64, location, read_to_string, record_line, write_string, Format, Header};
use crate::error::{Error, Result};

/// Inclusive bounds of the rating scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        RatingScale { min: 1.0, max: 10.0 }
    }
}

impl RatingScale {
    pub fn contains(&self, x: f64) -> bool {
        x.is_finite() && x >= self.min && x <= self.max
    }
}

/// Numeric fit scores of M models on P (resume, job) pairs, plus optional
/// human labels on a subset of the pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct RatingDataset {
    model_ids: Vec<String>,
    pair_ids: Vec<(String, String)>,
    /// Row-major M×P.
    scores: Vec<Option<f64>>,
    human: Vec<Option<f64>>,
    scale: RatingScale,
    model_index: HashMap<String, usize>,
    pair_index: HashMap<(String, String), usize>,
}

impl RatingDataset {
    pub fn new(
        model_ids: Vec<String>,
        pair_ids: Vec<(String, String)>,
        scores: Vec<Vec<Option<f64>>>,
        human: Option<Vec<Option<f64>>>,
        scale: RatingScale,
    ) -> Result<Self> {
        if model_ids.is_empty() {
            return Err(Error::EmptyDataset("no models".into()));
        }
        if pair_ids.is_empty() {
            return Err(Error::EmptyDataset("no resume-job pairs".into()));
        }
        if scale.min.partial_cmp(&scale.max) != Some(std::cmp::Ordering::Less) {
            return Err(Error::schema("scale", "min must be below max"));
        }
        let p = pair_ids.len();
        if scores.len() != model_ids.len() {
            return Err(Error::schema("scores", "one score row per model required"));
        }
        let mut model_index = HashMap::new();
        for (m, id) in model_ids.iter().enumerate() {
            if model_index.insert(id.clone(), m).is_some() {
                return Err(Error::schema(format!("model {id}"), "duplicate model id"));
            }
        }
        let mut pair_index = HashMap::new();
        for (i, pair) in pair_ids.iter().enumerate() {
            if pair_index.insert(pair.clone(), i).is_some() {
                return Err(Error::schema(format!("pair {}/{}", pair.0, pair.1), "duplicate pair"));
            }
        }
        let mut flat = Vec::with_capacity(model_ids.len() * p);
        for (m, row) in scores.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::schema(format!("model {}", model_ids[m]), "score row length mismatch"));
            }
            for (i, s) in row.iter().enumerate() {
                if let Some(x) = s {
                    if !scale.contains(*x) {
                        return Err(Error::schema(
                            format!("model {}, pair {}/{}", model_ids[m], pair_ids[i].0, pair_ids[i].1),
                            format!("score {x} outside [{}, {}]", scale.min, scale.max),
                        ));
                    }
                }
            }
            flat.extend(row);
        }
        let human = human.unwrap_or_else(|| vec![None; p]);
        if human.len() != p {
            return Err(Error::schema("human labels", "label vector length mismatch"));
        }
        for (i, h) in human.iter().enumerate() {
            if let Some(x) = h {
                if !scale.contains(*x) {
                    return Err(Error::schema(
                        format!("human label {}/{}", pair_ids[i].0, pair_ids[i].1),
                        format!("score {x} outside [{}, {}]", scale.min, scale.max),
                    ));
                }
            }
        }
        Ok(RatingDataset {
            model_ids,
            pair_ids,
            scores: flat,
            human,
            scale,
            model_index,
            pair_index,
        })
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn pair_ids(&self) -> &[(String, String)] {
        &self.pair_ids
    }

    pub fn num_models(&self) -> usize {
        self.model_ids.len()
    }

    pub fn num_pairs(&self) -> usize {
        self.pair_ids.len()
    }

    pub fn scale(&self) -> RatingScale {
        self.scale
    }

    pub fn index_of(&self, model: &str) -> Result<usize> {
        self.model_index
            .get(model)
            .copied()
            .ok_or_else(|| Error::UnknownModel(model.to_string()))
    }

    pub fn pair_index(&self, resume: &str, job: &str) -> Option<usize> {
        self.pair_index.get(&(resume.to_string(), job.to_string())).copied()
    }

    pub fn row(&self, m: usize) -> &[Option<f64>] {
        let p = self.num_pairs();
        &self.scores[m * p..(m + 1) * p]
    }

    pub fn score(&self, m: usize, pair: usize) -> Option<f64> {
        self.row(m)[pair]
    }

    pub fn human_scores(&self) -> &[Option<f64>] {
        &self.human
    }

    pub fn has_human_labels(&self) -> bool {
        self.human.iter().any(Option::is_some)
    }

    pub fn labeled_count(&self) -> usize {
        self.human.iter().filter(|h| h.is_some()).count()
    }

    /// Distinct resume ids in first-appearance order.
    pub fn resume_ids(&self) -> Vec<String> {
        distinct(self.pair_ids.iter().map(|p| &p.0))
    }

    /// Distinct job ids in first-appearance order.
    pub fn job_ids(&self) -> Vec<String> {
        distinct(self.pair_ids.iter().map(|p| &p.1))
    }
}

fn distinct<'a>(it: impl Iterator<Item = &'a String>) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    it.filter(|s| seen.insert(s.as_str())).cloned().collect()
}

fn parse_score(raw: &str, loc: &str) -> Result<Option<f64>> {
    let s = raw.trim();
    if s.is_empty() || s.eq_ignore_ascii_case("na") || s.eq_ignore_ascii_case("nan") {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| Error::parse(loc, format!("cannot parse score `{s}`")))
}

#[derive(Deserialize)]
struct JsonRating {
    model_id: String,
    resume_id: String,
    job_id: String,
    #[serde(default)]
    score: Option<f64>,
}

#[derive(Deserialize)]
struct JsonLabel {
    resume_id: String,
    job_id: String,
    score: f64,
}

#[derive(Serialize)]
struct JsonRatingOut<'a> {
    model_id: &'a str,
    resume_id: &'a str,
    job_id: &'a str,
    score: Option<f64>,
}

#[derive(Serialize)]
struct JsonLabelOut<'a> {
    resume_id: &'a str,
    job_id: &'a str,
    score: f64,
}

struct Row {
    model: Option<String>,
    resume: String,
    job: String,
    score: Option<f64>,
    loc: String,
}

fn read_rows(path: &Path, format: Format, with_model: bool) -> Result<Vec<Row>> {
    let text = read_to_string(path)?;
    let mut out = Vec::new();
    match format {
        Format::Csv => {
            let mut rdr = csv_reader(&text);
            let header = Header::new(rdr.headers().map_err(|e| Error::parse(location(path, 1), e.to_string()))?);
            let c_model = if with_model { Some(header.require("model_id", path)?) } else { None };
            let c_resume = header.require("resume_id", path)?;
            let c_job = header.require("job_id", path)?;
            let c_score = header.require("score", path)?;
            for rec in rdr.records() {
                let rec = rec.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
                let loc = location(path, record_line(&rec));
                out.push(Row {
                    model: c_model.map(|c| field(&rec, c).to_string()),
                    resume: field(&rec, c_resume).to_string(),
                    job: field(&rec, c_job).to_string(),
                    score: parse_score(field(&rec, c_score), &loc)?,
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
                if with_model {
                    let r: JsonRating = serde_json::from_str(line).map_err(|e| Error::parse(&loc, e.to_string()))?;
                    out.push(Row {
                        model: Some(r.model_id),
                        resume: r.resume_id,
                        job: r.job_id,
                        score: r.score,
                        loc,
                    });
                } else {
                    let r: JsonLabel = serde_json::from_str(line).map_err(|e| Error::parse(&loc, e.to_string()))?;
                    out.push(Row {
                        model: None,
                        resume: r.resume_id,
                        job: r.job_id,
                        score: Some(r.score),
                        loc,
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Load model ratings and, optionally, human labels for a subset of pairs.
pub fn load_ratings(
    ratings: &Path,
    human: Option<&Path>,
    format: Format,
    scale: RatingScale,
) -> Result<RatingDataset> {
    let rows = read_rows(ratings, format, true)?;
    let mut model_index: HashMap<String, usize> = HashMap::new();
    let mut model_ids = Vec::new();
    let mut pair_index: HashMap<(String, String), usize> = HashMap::new();
    let mut pair_ids = Vec::new();
    let mut cells: Vec<(usize, usize, Option<f64>, String)> = Vec::with_capacity(rows.len());
    for r in rows {
        let model = r.model.expect("model column");
        if let Some(s) = r.score {
            if !scale.contains(s) {
                return Err(Error::schema(
                    &r.loc,
                    format!("score {s} outside [{}, {}]", scale.min, scale.max),
                ));
            }
        }
        let m = *model_index.entry(model.clone()).or_insert_with(|| {
            model_ids.push(model);
            model_ids.len() - 1
        });
        let key = (r.resume, r.job);
        let p = match pair_index.get(&key) {
            Some(&p) => p,
            None => {
                pair_index.insert(key.clone(), pair_ids.len());
                pair_ids.push(key);
                pair_ids.len() - 1
            }
        };
        cells.push((m, p, r.score, r.loc));
    }
    if model_ids.is_empty() {
        return Err(Error::EmptyDataset(format!("{} has no ratings", ratings.display())));
    }
    let np = pair_ids.len();
    let mut scores = vec![vec![None; np]; model_ids.len()];
    let mut filled = vec![false; model_ids.len() * np];
    for (m, p, s, loc) in cells {
        if std::mem::replace(&mut filled[m * np + p], true) {
            return Err(Error::schema(
                loc,
                format!(
                    "duplicate rating for model `{}`, pair {}/{}",
                    model_ids[m], pair_ids[p].0, pair_ids[p].1
                ),
            ));
        }
        scores[m][p] = s;
    }

    let mut labels = vec![None; np];
    if let Some(path) = human {
        let mut seen = vec![false; np];
        for r in read_rows(path, format, false)? {
            let p = *pair_index.get(&(r.resume.clone(), r.job.clone())).ok_or_else(|| {
                Error::schema(&r.loc, format!("labeled pair {}/{} has no model ratings", r.resume, r.job))
            })?;
            if std::mem::replace(&mut seen[p], true) {
                return Err(Error::schema(&r.loc, format!("duplicate label for {}/{}", r.resume, r.job)));
            }
            let s = r
                .score
                .ok_or_else(|| Error::schema(&r.loc, "human label must not be empty"))?;
            if !scale.contains(s) {
                return Err(Error::schema(&r.loc, format!("score {s} outside [{}, {}]", scale.min, scale.max)));
            }
            labels[p] = Some(s);
        }
    }
    RatingDataset::new(model_ids, pair_ids, scores, Some(labels), scale)
}

/// Write ratings model-major over every pair (missing as empty / null) and,
/// when any labels exist, the human labels in pair order.
pub fn save_ratings(r: &RatingDataset, ratings: &Path, human: Option<&Path>, format: Format) -> Result<()> {
    let mut out = String::new();
    let mut lab = String::new();
    match format {
        Format::Csv => {
            out.push_str("model_id,resume_id,job_id,score\n");
            for (m, mid) in r.model_ids.iter().enumerate() {
                let mid = csv_escape(mid);
                for (p, (res, job)) in r.pair_ids.iter().enumerate() {
                    let s = r.score(m, p).map(fmt_f64).unwrap_or_default();
                    writeln!(out, "{},{},{},{}", mid, csv_escape(res), csv_escape(job), s).unwrap();
                }
            }
            lab.push_str("resume_id,job_id,score\n");
            for (p, (res, job)) in r.pair_ids.iter().enumerate() {
                if let Some(h) = r.human[p] {
                    writeln!(lab, "{},{},{}", csv_escape(res), csv_escape(job), fmt_f64(h)).unwrap();
                }
            }
        }
        Format::Jsonl => {
            for (m, mid) in r.model_ids.iter().enumerate() {
                for (p, (res, job)) in r.pair_ids.iter().enumerate() {
                    let row = JsonRatingOut {
                        model_id: mid,
                        resume_id: res,
                        job_id: job,
                        score: r.score(m, p),
                    };
                    out.push_str(&serde_json::to_string(&row).expect("serializable"));
                    out.push('\n');
                }
            }
            for (p, (res, job)) in r.pair_ids.iter().enumerate() {
                if let Some(h) = r.human[p] {
                    let row = JsonLabelOut {
                        resume_id: res,
                        job_id: job,
                        score: h,
                    };
                    lab.push_str(&serde_json::to_string(&row).expect("serializable"));
                    lab.push('\n');
                }
            }
        }
    }
    write_string(ratings, &out)?;
    if let Some(path) = human {
        write_string(path, &lab)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    #[test]
    fn out_of_scale_score_is_schema_error() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        fs::write(&p, "model_id,resume_id,job_id,score\nm1,r1,j1,5\nm1,r2,j1,11\n").unwrap();
        match load_ratings(&p, None, Format::Csv, RatingScale::default()) {
            Err(Error::Schema { location, .. }) => assert!(location.ends_with(":3")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn labels_must_be_subset_of_rated_pairs() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let h = dir.path().join("h.csv");
        fs::write(&p, "model_id,resume_id,job_id,score\nm1,r1,j1,5\n").unwrap();
        fs::write(&h, "resume_id,job_id,score\nr9,j1,4\n").unwrap();
        assert!(matches!(
            load_ratings(&p, Some(&h), Format::Csv, RatingScale::default()),
            Err(Error::Schema { .. })
        ));
    }

    #[test]
    fn missing_cells_survive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.csv");
        let h = dir.path().join("h.csv");
        fs::write(&p, "model_id,resume_id,job_id,score\nm1,r1,j1,5\nm1,r2,j1,\nm2,r1,j1,7.5\n").unwrap();
        fs::write(&h, "resume_id,job_id,score\nr1,j1,6\n").unwrap();
        let d = load_ratings(&p, Some(&h), Format::Csv, RatingScale::default()).unwrap();
        assert_eq!(d.score(0, 1), None);
        // m2 never rated r2/j1
        assert_eq!(d.score(1, 1), None);
        let p2 = dir.path().join("r2.csv");
        let h2 = dir.path().join("h2.csv");
        save_ratings(&d, &p2, Some(&h2), Format::Csv).unwrap();
        let back = load_ratings(&p2, Some(&h2), Format::Csv, RatingScale::default()).unwrap();
        assert_eq!(back, d);
        assert_eq!(back.labeled_count(), 1);
    }
}
