//! Pairwise similarity between models: agreement rates (overall and
//! conditioned on errors), residual correlation against human labels, the
//! analytic random-error baseline, and accuracy-sorted all-pairs matrices.

use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{RatingDataset, ResponseDataset, MISSING};
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    AgreementOverall,
    AgreementBothWrong,
    AgreementEitherWrong,
    ResidualCorrelation,
    /// Correlation of raw ratings over every pair both models scored.
    RatingCorrelation,
}

impl MetricKind {
    pub const RESPONSE_KINDS: [MetricKind; 3] = [
        MetricKind::AgreementBothWrong,
        MetricKind::AgreementEitherWrong,
        MetricKind::AgreementOverall,
    ];
    pub const RATING_KINDS: [MetricKind; 2] = [MetricKind::ResidualCorrelation, MetricKind::RatingCorrelation];

    pub fn name(self) -> &'static str {
        match self {
            MetricKind::AgreementOverall => "agreement_overall",
            MetricKind::AgreementBothWrong => "agreement_both_wrong",
            MetricKind::AgreementEitherWrong => "agreement_either_wrong",
            MetricKind::ResidualCorrelation => "residual_correlation",
            MetricKind::RatingCorrelation => "rating_correlation",
        }
    }

    pub fn short_name(self) -> &'static str {
        match self {
            MetricKind::AgreementOverall => "overall",
            MetricKind::AgreementBothWrong => "both_wrong",
            MetricKind::AgreementEitherWrong => "either_wrong",
            MetricKind::ResidualCorrelation => "residual",
            MetricKind::RatingCorrelation => "rating",
        }
    }

    /// Human-readable description used as a dependent-variable label.
    pub fn description(self) -> &'static str {
        match self {
            MetricKind::AgreementOverall => "Agreement rate overall",
            MetricKind::AgreementBothWrong => "Agreement rate when both models are wrong",
            MetricKind::AgreementEitherWrong => "Agreement rate when either model is wrong",
            MetricKind::ResidualCorrelation => "Correlation in residual (predicted - human evaluation)",
            MetricKind::RatingCorrelation => "Correlation",
        }
    }

    pub fn is_agreement(self) -> bool {
        matches!(
            self,
            MetricKind::AgreementOverall | MetricKind::AgreementBothWrong | MetricKind::AgreementEitherWrong
        )
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            MetricKind::AgreementOverall,
            MetricKind::AgreementBothWrong,
            MetricKind::AgreementEitherWrong,
            MetricKind::ResidualCorrelation,
            MetricKind::RatingCorrelation,
        ]
        .into_iter()
        .find(|k| k.name() == s || k.short_name() == s)
        .ok_or_else(|| Error::InvalidConfig(format!("unknown metric `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrelationMethod {
    #[default]
    Pearson,
    Spearman,
}

impl CorrelationMethod {
    fn apply(self, xs: &[f64], ys: &[f64]) -> Option<f64> {
        match self {
            CorrelationMethod::Pearson => stats::pearson(xs, ys),
            CorrelationMethod::Spearman => stats::spearman(xs, ys),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairMetric {
    pub model_a: String,
    pub model_b: String,
    pub kind: MetricKind,
    pub value: f64,
    /// Items (or labeled pairs) the value was computed over.
    pub support: usize,
}

/// Joint outcome counts for two models over all items. Missing answers are
/// wrong and never agree with anything, including another missing answer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PairCounts {
    pub items: usize,
    pub agree: usize,
    pub both_correct: usize,
    pub both_wrong: usize,
    pub both_wrong_agree: usize,
    pub either_wrong: usize,
}

pub fn pair_counts(d: &ResponseDataset, a: usize, b: usize) -> PairCounts {
    let key = d.answer_key();
    let mut c = PairCounts {
        items: d.num_items(),
        ..Default::default()
    };
    for ((&x, &y), &k) in d.row(a).iter().zip(d.row(b)).zip(key) {
        let same = x == y && x != MISSING;
        let (ra, rb) = (x == k, y == k);
        c.agree += same as usize;
        if ra && rb {
            c.both_correct += 1;
        } else {
            c.either_wrong += 1;
            if !ra && !rb {
                c.both_wrong += 1;
                c.both_wrong_agree += same as usize;
            }
        }
    }
    c
}

/// Agreement metric for models at indices `a`, `b`.
pub fn response_metric_at(d: &ResponseDataset, a: usize, b: usize, kind: MetricKind) -> Result<PairMetric> {
    let c = pair_counts(d, a, b);
    let ids = d.model_ids();
    let (value, support) = match kind {
        MetricKind::AgreementOverall => (c.agree as f64 / c.items as f64, c.items),
        MetricKind::AgreementBothWrong => {
            if c.both_wrong == 0 {
                return Err(Error::NoJointErrors(ids[a].clone(), ids[b].clone()));
            }
            (c.both_wrong_agree as f64 / c.both_wrong as f64, c.both_wrong)
        }
        MetricKind::AgreementEitherWrong => {
            if c.either_wrong == 0 {
                return Err(Error::NoErrors(ids[a].clone(), ids[b].clone()));
            }
            // a right and a wrong answer never coincide
            (c.both_wrong_agree as f64 / c.either_wrong as f64, c.either_wrong)
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "{} needs a rating dataset",
                other.name()
            )))
        }
    };
    Ok(PairMetric {
        model_a: ids[a].clone(),
        model_b: ids[b].clone(),
        kind,
        value,
        support,
    })
}

fn response_metric(d: &ResponseDataset, m1: &str, m2: &str, kind: MetricKind) -> Result<PairMetric> {
    response_metric_at(d, d.index_of(m1)?, d.index_of(m2)?, kind)
}

pub fn agreement_overall(d: &ResponseDataset, m1: &str, m2: &str) -> Result<PairMetric> {
    response_metric(d, m1, m2, MetricKind::AgreementOverall)
}

/// Among items both models get wrong, the fraction where their answers
/// coincide. Undefined (`NoJointErrors`) when they never err together.
pub fn agreement_both_wrong(d: &ResponseDataset, m1: &str, m2: &str) -> Result<PairMetric> {
    response_metric(d, m1, m2, MetricKind::AgreementBothWrong)
}

pub fn agreement_either_wrong(d: &ResponseDataset, m1: &str, m2: &str) -> Result<PairMetric> {
    response_metric(d, m1, m2, MetricKind::AgreementEitherWrong)
}

/// Expected both-wrong agreement of two models that pick wrong answers
/// uniformly at random: Σ_k p_k / (k − 1).
pub fn random_error_baseline(d: &ResponseDataset) -> f64 {
    d.choice_count_histogram()
        .into_iter()
        .map(|(k, p)| p / (k as f64 - 1.0))
        .sum()
}

/// Residuals (model − human) over the labeled pairs both models scored.
fn common_residuals(r: &RatingDataset, a: usize, b: usize) -> (Vec<f64>, Vec<f64>) {
    let human = r.human_scores();
    let mut ra = Vec::new();
    let mut rb = Vec::new();
    for (p, h) in human.iter().enumerate() {
        if let (Some(h), Some(x), Some(y)) = (h, r.score(a, p), r.score(b, p)) {
            ra.push(x - h);
            rb.push(y - h);
        }
    }
    (ra, rb)
}

fn correlation_value(
    r: &RatingDataset,
    a: usize,
    b: usize,
    xs: &[f64],
    ys: &[f64],
    method: CorrelationMethod,
    what: &str,
) -> Result<f64> {
    let ids = r.model_ids();
    if xs.len() < 2 {
        return Err(Error::InsufficientSupport {
            a: ids[a].clone(),
            b: ids[b].clone(),
            found: xs.len(),
            needed: 2,
        });
    }
    for (vals, m) in [(xs, a), (ys, b)] {
        if vals.iter().all(|v| *v == vals[0]) {
            return Err(Error::ZeroVariance(format!("{what} of `{}`", ids[m])));
        }
    }
    method
        .apply(xs, ys)
        .ok_or_else(|| Error::ZeroVariance(format!("{what} of `{}`/`{}`", ids[a], ids[b])))
}

/// Rating-dataset metric for models at indices `a`, `b`.
pub fn rating_metric_at(
    r: &RatingDataset,
    a: usize,
    b: usize,
    kind: MetricKind,
    method: CorrelationMethod,
) -> Result<PairMetric> {
    let (xs, ys, what) = match kind {
        MetricKind::ResidualCorrelation => {
            let (x, y) = common_residuals(r, a, b);
            (x, y, "residuals")
        }
        MetricKind::RatingCorrelation => {
            let mut x = Vec::new();
            let mut y = Vec::new();
            for (s, t) in r.row(a).iter().zip(r.row(b)) {
                if let (Some(s), Some(t)) = (s, t) {
                    x.push(*s);
                    y.push(*t);
                }
            }
            (x, y, "ratings")
        }
        other => {
            return Err(Error::InvalidConfig(format!(
                "{} needs a response dataset",
                other.name()
            )))
        }
    };
    let value = correlation_value(r, a, b, &xs, &ys, method, what)?;
    Ok(PairMetric {
        model_a: r.model_ids()[a].clone(),
        model_b: r.model_ids()[b].clone(),
        kind,
        value,
        support: xs.len(),
    })
}

/// Pearson correlation of (model − human) residuals over the labeled pairs
/// both models scored.
pub fn residual_correlation(r: &RatingDataset, m1: &str, m2: &str) -> Result<PairMetric> {
    residual_correlation_with(r, m1, m2, CorrelationMethod::Pearson)
}

pub fn residual_correlation_with(
    r: &RatingDataset,
    m1: &str,
    m2: &str,
    method: CorrelationMethod,
) -> Result<PairMetric> {
    rating_metric_at(r, r.index_of(m1)?, r.index_of(m2)?, MetricKind::ResidualCorrelation, method)
}

pub fn rating_correlation(r: &RatingDataset, m1: &str, m2: &str, method: CorrelationMethod) -> Result<PairMetric> {
    rating_metric_at(r, r.index_of(m1)?, r.index_of(m2)?, MetricKind::RatingCorrelation, method)
}

/// Correlation between a model's ratings and the human labels.
pub fn human_correlation(r: &RatingDataset, m: usize) -> Option<f64> {
    let mut xs = Vec::new();
    let mut hs = Vec::new();
    for (p, h) in r.human_scores().iter().enumerate() {
        if let (Some(h), Some(x)) = (h, r.score(m, p)) {
            xs.push(x);
            hs.push(*h);
        }
    }
    stats::pearson(&xs, &hs)
}

/// Symmetric all-pairs matrix with models sorted ascending by `sort_key`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AgreementMatrix {
    pub kind: MetricKind,
    pub model_ids: Vec<String>,
    /// Accuracy (responses) or human correlation (ratings) of each model.
    pub sort_key: Vec<f64>,
    /// Row-major n×n; `None` where the metric is undefined.
    pub values: Vec<Option<f64>>,
}

impl AgreementMatrix {
    pub fn len(&self) -> usize {
        self.model_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model_ids.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.values[i * self.len() + j]
    }

    /// Defined off-diagonal values of the upper triangle.
    pub fn off_diagonal(&self) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter_map(|(i, j)| self.get(i, j))
            .collect()
    }

    pub fn undefined_pairs(&self) -> usize {
        let n = self.len();
        n * (n - 1) / 2 - self.off_diagonal().len()
    }

    /// CSV with model ids as header and row labels; undefined cells empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("model_id");
        for id in &self.model_ids {
            out.push(',');
            out.push_str(&crate::ingest::csv_escape(id));
        }
        out.push('\n');
        for (i, id) in self.model_ids.iter().enumerate() {
            out.push_str(&crate::ingest::csv_escape(id));
            for j in 0..self.len() {
                out.push(',');
                if let Some(v) = self.get(i, j) {
                    write!(out, "{v}").unwrap();
                }
            }
            out.push('\n');
        }
        out
    }
}

fn ascending_order(keys: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    order
}

fn build_matrix<F>(kind: MetricKind, ids: &[String], keys: &[f64], exec: Execution, cell: F) -> AgreementMatrix
where
    F: Fn(usize, usize) -> Option<f64> + Sync + Send,
{
    let order = ascending_order(keys);
    let n = ids.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let computed = exec.map(pairs.len(), |c| {
        let (i, j) = pairs[c];
        cell(order[i], order[j])
    });
    let mut values = vec![None; n * n];
    for i in 0..n {
        values[i * n + i] = Some(1.0);
    }
    for (&(i, j), v) in pairs.iter().zip(computed) {
        values[i * n + j] = v;
        values[j * n + i] = v;
    }
    AgreementMatrix {
        kind,
        model_ids: order.iter().map(|&i| ids[i].clone()).collect(),
        sort_key: order.iter().map(|&i| keys[i]).collect(),
        values,
    }
}

/// All-pairs agreement matrix sorted by accuracy. Undefined cells are `None`.
pub fn agreement_matrix(d: &ResponseDataset, kind: MetricKind, exec: Execution) -> Result<AgreementMatrix> {
    if !kind.is_agreement() {
        return Err(Error::InvalidConfig(format!("{} is not an agreement metric", kind.name())));
    }
    if d.num_models() < 2 {
        return Err(Error::InvalidConfig("agreement matrix needs at least two models".into()));
    }
    Ok(build_matrix(kind, d.model_ids(), &d.accuracies(), exec, |a, b| {
        response_metric_at(d, a, b, kind).ok().map(|m| m.value)
    }))
}

/// All-pairs correlation matrix over a rating dataset, sorted by each
/// model's correlation with the human labels (input order without labels).
pub fn rating_matrix(
    r: &RatingDataset,
    kind: MetricKind,
    method: CorrelationMethod,
    exec: Execution,
) -> Result<AgreementMatrix> {
    if kind.is_agreement() {
        return Err(Error::InvalidConfig(format!("{} needs a response dataset", kind.name())));
    }
    if r.num_models() < 2 {
        return Err(Error::InvalidConfig("correlation matrix needs at least two models".into()));
    }
    let keys: Vec<f64> = (0..r.num_models())
        .map(|m| human_correlation(r, m).unwrap_or(0.0))
        .collect();
    Ok(build_matrix(kind, r.model_ids(), &keys, exec, |a, b| {
        rating_metric_at(r, a, b, kind, method).ok().map(|m| m.value)
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::RatingScale;

    fn ds(rows: Vec<Vec<Option<u8>>>, key: Vec<u8>, k: u8) -> ResponseDataset {
        let q = key.len();
        let m = rows.len();
        ResponseDataset::new(
            (0..m).map(|i| format!("m{i}")).collect(),
            (0..q).map(|i| format!("q{i}")).collect(),
            rows,
            key,
            vec![k; q],
        )
        .unwrap()
    }

    #[test]
    fn identity_and_disjoint() {
        let d = ds(
            vec![
                vec![Some(0), Some(1), Some(2)],
                vec![Some(1), Some(2), Some(3)],
            ],
            vec![0, 0, 0],
            4,
        );
        assert_eq!(agreement_overall(&d, "m0", "m0").unwrap().value, 1.0);
        assert_eq!(agreement_overall(&d, "m0", "m1").unwrap().value, 0.0);
        // m0 vs itself with accuracy 1/3 < 1
        assert_eq!(agreement_either_wrong(&d, "m0", "m0").unwrap().value, 1.0);
        assert!(matches!(agreement_overall(&d, "m0", "x"), Err(Error::UnknownModel(_))));
    }

    #[test]
    fn perfect_models_have_no_joint_errors() {
        let d = ds(vec![vec![Some(0), Some(1)], vec![Some(0), Some(1)]], vec![0, 1], 4);
        assert!(matches!(agreement_both_wrong(&d, "m0", "m1"), Err(Error::NoJointErrors(..))));
        assert!(matches!(agreement_either_wrong(&d, "m0", "m1"), Err(Error::NoErrors(..))));
    }

    #[test]
    fn perfect_vs_always_wrong_either_wrong_is_zero() {
        let d = ds(vec![vec![Some(0), Some(1)], vec![Some(2), Some(3)]], vec![0, 1], 4);
        let m = agreement_either_wrong(&d, "m0", "m1").unwrap();
        assert_eq!(m.value, 0.0);
        assert_eq!(m.support, 2);
    }

    #[test]
    fn missing_never_agrees() {
        let d = ds(vec![vec![None, Some(1)], vec![None, Some(1)]], vec![0, 0], 4);
        let c = pair_counts(&d, 0, 1);
        assert_eq!(c.agree, 1);
        assert_eq!(c.both_wrong, 2);
        assert_eq!(c.both_wrong_agree, 1);
        assert_eq!(agreement_both_wrong(&d, "m0", "m1").unwrap().value, 0.5);
    }

    #[test]
    fn baseline_values() {
        let d = ds(vec![vec![Some(0); 3]], vec![0; 3], 4);
        assert!((random_error_baseline(&d) - 1.0 / 3.0).abs() < 1e-15);
        let d2 = ds(vec![vec![Some(0); 3]], vec![0; 3], 2);
        assert_eq!(random_error_baseline(&d2), 1.0);
    }

    #[test]
    fn two_identical_models_matrix_is_all_ones() {
        let d = ds(vec![vec![Some(0), Some(2)], vec![Some(0), Some(2)]], vec![0, 1], 4);
        let m = agreement_matrix(&d, MetricKind::AgreementOverall, Execution::Sequential).unwrap();
        assert_eq!(m.values, vec![Some(1.0); 4]);
        let csv = m.to_csv();
        assert!(csv.starts_with("model_id,m0,m1\n"));
    }

    #[test]
    fn matrix_is_sorted_and_flags_undefined() {
        let d = ds(
            vec![
                vec![Some(0), Some(0), Some(0)],
                vec![Some(1), Some(1), Some(0)],
                vec![Some(1), Some(0), Some(1)],
            ],
            vec![0, 0, 0],
            3,
        );
        let m = agreement_matrix(&d, MetricKind::AgreementBothWrong, Execution::Sequential).unwrap();
        assert_eq!(m.model_ids, vec!["m1", "m2", "m0"]);
        assert!(m.sort_key.windows(2).all(|w| w[0] <= w[1]));
        // m0 is perfect: no joint errors with anyone
        assert_eq!(m.get(2, 0), None);
        assert_eq!(m.undefined_pairs(), 2);
        assert!(m.to_csv().contains("m0,,,1\n"));
    }

    #[test]
    fn residual_affine_shift_is_perfectly_correlated() {
        let human = vec![Some(3.0), Some(5.0), Some(7.0), Some(2.0), None];
        let a = vec![Some(4.0), Some(5.0), Some(9.0), Some(2.0), Some(1.0)];
        let b: Vec<_> = a.iter().map(|x: &Option<f64>| x.map(|v| v + 1.0)).collect();
        let r = RatingDataset::new(
            vec!["a".into(), "b".into()],
            (0..5).map(|i| (format!("r{i}"), "j".to_string())).collect(),
            vec![a, b],
            Some(human),
            RatingScale { min: 1.0, max: 11.0 },
        )
        .unwrap();
        let m = residual_correlation(&r, "a", "b").unwrap();
        assert!((m.value - 1.0).abs() < 1e-12);
        assert_eq!(m.support, 4);
    }

    #[test]
    fn residual_errors() {
        let r = RatingDataset::new(
            vec!["a".into(), "b".into()],
            vec![("r0".into(), "j".into()), ("r1".into(), "j".into())],
            vec![vec![Some(2.0), Some(3.0)], vec![Some(2.0), None]],
            Some(vec![Some(2.0), Some(3.0)]),
            RatingScale::default(),
        )
        .unwrap();
        assert!(matches!(residual_correlation(&r, "a", "b"), Err(Error::InsufficientSupport { .. })));
        let r2 = RatingDataset::new(
            vec!["a".into(), "b".into()],
            vec![("r0".into(), "j".into()), ("r1".into(), "j".into())],
            vec![vec![Some(2.0), Some(3.0)], vec![Some(5.0), Some(4.0)]],
            Some(vec![Some(2.0), Some(3.0)]),
            RatingScale::default(),
        )
        .unwrap();
        assert!(matches!(residual_correlation(&r2, "a", "b"), Err(Error::ZeroVariance(_))));
    }
}
