//! LLM-as-judge: score every model against a judge model's answers instead
//! of the answer key, and report the resulting accuracy inflation.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{MetadataTable, ResponseDataset, MISSING};

/// Which metadata field defines "same group as the judge".
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grouping {
    Company,
    Architecture,
}

impl std::str::FromStr for Grouping {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "company" | "provider" => Ok(Grouping::Company),
            "architecture" => Ok(Grouping::Architecture),
            _ => Err(Error::InvalidConfig(format!("unknown grouping `{s}`"))),
        }
    }
}

fn group_of<'a>(meta: &'a MetadataTable, model: &str, grouping: Grouping) -> Option<&'a str> {
    let m = meta.get(model)?;
    let g = match grouping {
        Grouping::Company => Some(m.company.as_str()),
        Grouping::Architecture => m.architecture.as_deref(),
    };
    g.filter(|g| !g.is_empty())
}

/// Judged accuracy with its supporting counts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JudgedCounts {
    pub matches: usize,
    /// Items the judge answered.
    pub graded: usize,
    /// Items the judge abstained on (excluded from `graded`).
    pub judge_missing: usize,
}

impl JudgedCounts {
    /// `None` when the judge answered nothing.
    pub fn accuracy(&self) -> Option<f64> {
        (self.graded > 0).then(|| self.matches as f64 / self.graded as f64)
    }
}

pub fn judged_counts(d: &ResponseDataset, m: usize, judge: usize) -> JudgedCounts {
    let mut c = JudgedCounts {
        matches: 0,
        graded: 0,
        judge_missing: 0,
    };
    for (&a, &j) in d.row(m).iter().zip(d.row(judge)) {
        if j == MISSING {
            c.judge_missing += 1;
        } else {
            c.graded += 1;
            c.matches += (a == j) as usize;
        }
    }
    c
}

/// Fraction of the judge's answered items on which `model` gives the
/// judge's answer.
pub fn judged_accuracy(d: &ResponseDataset, model: &str, judge: &str) -> Result<f64> {
    judged_counts(d, d.index_of(model)?, d.index_of(judge)?)
        .accuracy()
        .ok_or_else(|| no_answers(judge))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeRow {
    pub model_id: String,
    pub true_accuracy: f64,
    pub judged_accuracy: f64,
    pub inflation: f64,
    pub same_group: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JudgeReport {
    pub judge_id: String,
    pub judge_accuracy: f64,
    pub grouping: Grouping,
    pub judge_missing: usize,
    pub rows: Vec<JudgeRow>,
}

impl JudgeReport {
    pub fn row(&self, model: &str) -> Option<&JudgeRow> {
        self.rows.iter().find(|r| r.model_id == model)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("judge_id,model_id,true_accuracy,judged_accuracy,inflation,same_group\n");
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{}",
                crate::ingest::csv_escape(&self.judge_id),
                crate::ingest::csv_escape(&r.model_id),
                r.true_accuracy,
                r.judged_accuracy,
                r.inflation,
                r.same_group
            )
            .unwrap();
        }
        out
    }
}

fn no_answers(judge: &str) -> Error {
    Error::EmptyDataset(format!("judge `{judge}` answered no items"))
}

/// Per-model true accuracy, judged accuracy and inflation for one judge.
pub fn judge_report(
    d: &ResponseDataset,
    meta: &MetadataTable,
    judge: &str,
    grouping: Grouping,
    exec: Execution,
) -> Result<JudgeReport> {
    let j = d.index_of(judge)?;
    let judge_group = group_of(meta, judge, grouping);
    let acc = d.accuracies();
    let self_counts = judged_counts(d, j, j);
    if self_counts.graded == 0 {
        return Err(no_answers(judge));
    }
    let judge_missing = self_counts.judge_missing;
    let rows = exec.map(d.num_models(), |m| {
        let judged = judged_counts(d, m, j).accuracy().expect("judge answered some items");
        let id = &d.model_ids()[m];
        JudgeRow {
            model_id: id.clone(),
            true_accuracy: acc[m],
            judged_accuracy: judged,
            inflation: judged - acc[m],
            same_group: m == j || (judge_group.is_some() && group_of(meta, id, grouping) == judge_group),
        }
    });
    Ok(JudgeReport {
        judge_id: judge.to_string(),
        judge_accuracy: acc[j],
        grouping,
        judge_missing,
        rows,
    })
}

/// The most accurate model of every group (ties broken by dataset order).
/// Models without a group value are skipped.
pub fn group_maximal_judges(d: &ResponseDataset, meta: &MetadataTable, grouping: Grouping) -> Vec<String> {
    let acc = d.accuracies();
    let mut best: Vec<(&str, usize)> = Vec::new();
    for (m, id) in d.model_ids().iter().enumerate() {
        let Some(g) = group_of(meta, id, grouping) else { continue };
        match best.iter_mut().find(|(bg, _)| *bg == g) {
            Some(entry) => {
                if acc[m] > acc[entry.1] {
                    entry.1 = m;
                }
            }
            None => best.push((g, m)),
        }
    }
    best.into_iter().map(|(_, m)| d.model_ids()[m].clone()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::ModelMeta;

    fn fixture() -> (ResponseDataset, MetadataTable) {
        let d = ResponseDataset::new(
            vec!["a".into(), "b".into(), "c".into()],
            (0..4).map(|i| format!("q{i}")).collect(),
            vec![
                vec![Some(0), Some(1), Some(2), Some(0)],
                vec![Some(0), Some(1), Some(1), Some(1)],
                vec![Some(0), Some(2), Some(2), Some(1)],
            ],
            vec![0, 1, 2, 3],
            vec![4; 4],
        )
        .unwrap();
        let meta = MetadataTable::new(vec![
            ModelMeta::new("a", "x"),
            ModelMeta::new("b", "x"),
            ModelMeta::new("c", "y"),
        ])
        .unwrap();
        (d, meta)
    }

    #[test]
    fn self_judging_and_groups() {
        let (d, meta) = fixture();
        let rep = judge_report(&d, &meta, "a", Grouping::Company, Execution::Sequential).unwrap();
        let own = rep.row("a").unwrap();
        assert_eq!(own.judged_accuracy, 1.0);
        assert_eq!(own.inflation, 1.0 - own.true_accuracy);
        assert!(rep.row("b").unwrap().same_group);
        assert!(!rep.row("c").unwrap().same_group);
        assert_eq!(group_maximal_judges(&d, &meta, Grouping::Company), vec!["a", "c"]);
        // no architecture recorded
        assert!(group_maximal_judges(&d, &meta, Grouping::Architecture).is_empty());
    }

    #[test]
    fn judge_abstentions_are_excluded() {
        let d = ResponseDataset::new(
            vec!["m".into(), "j".into()],
            vec!["q0".into(), "q1".into()],
            vec![vec![Some(0), Some(1)], vec![Some(0), None]],
            vec![0, 0],
            vec![2, 2],
        )
        .unwrap();
        let c = judged_counts(&d, 0, 1);
        assert_eq!((c.matches, c.graded, c.judge_missing), (1, 1, 1));
        assert_eq!(judged_accuracy(&d, "m", "j").unwrap(), 1.0);
        assert!(matches!(judged_accuracy(&d, "m", "zz"), Err(Error::UnknownModel(_))));
    }
}
