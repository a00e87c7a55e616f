//! Pair-level regressions: one row per unordered model pair, slot order
//! randomised by seed, numeric covariates standardised over retained rows,
//! then an OLS fit with classical standard errors.

use std::fmt::Write as _;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::correlation::{self, CorrelationMethod, MetricKind};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{MetadataTable, RatingDataset, ResponseDataset};
use crate::seed;
use crate::stats;

/// Regression terms. Names follow the usual formula-style labels
/// (`same_company[T.True]`, `accuracy_1:accuracy_2`, ...).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Term {
    SameCompany,
    SameArchitecture,
    IsMoe1,
    IsMoe2,
    ParamsLog1,
    ParamsLog2,
    Generation1,
    Generation2,
    ParamDiff,
    Accuracy1,
    Accuracy2,
    AccuracyInteraction,
    LatestModel1,
    LatestModel2,
    HumanCorr1,
    HumanCorr2,
    HumanCorrInteraction,
}

impl Term {
    pub fn label(self) -> &'static str {
        match self {
            Term::SameCompany => "same_company[T.True]",
            Term::SameArchitecture => "same_architecture[T.True]",
            Term::IsMoe1 => "is_moe[T.True]",
            Term::IsMoe2 => "is_moe_2[T.True]",
            Term::ParamsLog1 => "params_billions_log",
            Term::ParamsLog2 => "params_billions_log_2",
            Term::Generation1 => "generation",
            Term::Generation2 => "generation_2",
            Term::ParamDiff => "param_diff",
            Term::Accuracy1 => "accuracy_1",
            Term::Accuracy2 => "accuracy_2",
            Term::AccuracyInteraction => "accuracy_1:accuracy_2",
            Term::LatestModel1 => "latest_model_1[T.True]",
            Term::LatestModel2 => "latest_model_2[T.True]",
            Term::HumanCorr1 => "correlation_with_human_score_1",
            Term::HumanCorr2 => "correlation_with_human_score_2",
            Term::HumanCorrInteraction => "correlation_with_human_score_1:correlation_with_human_score_2",
        }
    }

    /// Numeric (standardised) as opposed to a 0/1 indicator or an
    /// interaction of standardised columns.
    fn is_standardized(self) -> bool {
        matches!(
            self,
            Term::ParamsLog1
                | Term::ParamsLog2
                | Term::Generation1
                | Term::Generation2
                | Term::ParamDiff
                | Term::Accuracy1
                | Term::Accuracy2
                | Term::HumanCorr1
                | Term::HumanCorr2
        )
    }
}

/// Named covariate sets matching the three dataset shapes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CovariateSet {
    /// Open-model leaderboard: architecture, size, generation, MoE flags.
    Hf,
    /// Proprietary leaderboard: company and accuracy only.
    Helm,
    /// Resume ratings: company, latest flags, correlation with humans.
    Resumes,
}

impl CovariateSet {
    pub fn terms(self) -> Vec<Term> {
        use Term::*;
        match self {
            CovariateSet::Hf => vec![
                SameCompany,
                SameArchitecture,
                IsMoe1,
                IsMoe2,
                ParamsLog1,
                ParamsLog2,
                Generation1,
                Generation2,
                ParamDiff,
                Accuracy1,
                Accuracy2,
                AccuracyInteraction,
            ],
            CovariateSet::Helm => vec![SameCompany, Accuracy1, Accuracy2, AccuracyInteraction],
            CovariateSet::Resumes => vec![
                SameCompany,
                LatestModel1,
                LatestModel2,
                HumanCorr1,
                HumanCorr2,
                HumanCorrInteraction,
            ],
        }
    }
}

impl std::str::FromStr for CovariateSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hf" | "huggingface" => Ok(CovariateSet::Hf),
            "helm" => Ok(CovariateSet::Helm),
            "resumes" => Ok(CovariateSet::Resumes),
            _ => Err(Error::InvalidConfig(format!("unknown covariate set `{s}`"))),
        }
    }
}

/// Per-model inputs to the pair table.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelCovariates {
    pub model_id: String,
    pub company: Option<String>,
    pub architecture: Option<String>,
    pub is_moe: Option<bool>,
    pub params_log: Option<f64>,
    pub generation: Option<f64>,
    pub accuracy: Option<f64>,
    pub latest_model: Option<bool>,
    pub human_corr: Option<f64>,
}

/// One unordered model pair. Numeric fields hold standardised values once
/// the table is built; raw indicator fields stay 0/1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairFeatureRow {
    pub model_1: String,
    pub model_2: String,
    pub dependent: f64,
    pub same_company: Option<bool>,
    pub same_architecture: Option<bool>,
    pub is_moe_1: Option<bool>,
    pub is_moe_2: Option<bool>,
    pub params_log_1: Option<f64>,
    pub params_log_2: Option<f64>,
    pub generation_1: Option<f64>,
    pub generation_2: Option<f64>,
    pub param_diff: Option<f64>,
    pub accuracy_1: Option<f64>,
    pub accuracy_2: Option<f64>,
    pub accuracy_interaction: Option<f64>,
    pub latest_model_1: Option<bool>,
    pub latest_model_2: Option<bool>,
    pub human_corr_1: Option<f64>,
    pub human_corr_2: Option<f64>,
    pub human_corr_interaction: Option<f64>,
}

fn ind(b: Option<bool>) -> Option<f64> {
    b.map(|b| if b { 1.0 } else { 0.0 })
}

impl PairFeatureRow {
    fn new(dependent: f64, a: &ModelCovariates, b: &ModelCovariates) -> Self {
        let both = |x: &Option<String>, y: &Option<String>| match (x, y) {
            (Some(x), Some(y)) => Some(x == y),
            _ => None,
        };
        PairFeatureRow {
            model_1: a.model_id.clone(),
            model_2: b.model_id.clone(),
            dependent,
            same_company: both(&a.company, &b.company),
            same_architecture: both(&a.architecture, &b.architecture),
            is_moe_1: a.is_moe,
            is_moe_2: b.is_moe,
            params_log_1: a.params_log,
            params_log_2: b.params_log,
            generation_1: a.generation,
            generation_2: b.generation,
            param_diff: a.params_log.zip(b.params_log).map(|(x, y)| (x - y).abs()),
            accuracy_1: a.accuracy,
            accuracy_2: b.accuracy,
            accuracy_interaction: None,
            latest_model_1: a.latest_model,
            latest_model_2: b.latest_model,
            human_corr_1: a.human_corr,
            human_corr_2: b.human_corr,
            human_corr_interaction: None,
        }
    }

    pub fn value(&self, term: Term) -> Option<f64> {
        match term {
            Term::SameCompany => ind(self.same_company),
            Term::SameArchitecture => ind(self.same_architecture),
            Term::IsMoe1 => ind(self.is_moe_1),
            Term::IsMoe2 => ind(self.is_moe_2),
            Term::ParamsLog1 => self.params_log_1,
            Term::ParamsLog2 => self.params_log_2,
            Term::Generation1 => self.generation_1,
            Term::Generation2 => self.generation_2,
            Term::ParamDiff => self.param_diff,
            Term::Accuracy1 => self.accuracy_1,
            Term::Accuracy2 => self.accuracy_2,
            Term::AccuracyInteraction => self.accuracy_interaction,
            Term::LatestModel1 => ind(self.latest_model_1),
            Term::LatestModel2 => ind(self.latest_model_2),
            Term::HumanCorr1 => self.human_corr_1,
            Term::HumanCorr2 => self.human_corr_2,
            Term::HumanCorrInteraction => self.human_corr_interaction,
        }
    }

    fn slot(&mut self, term: Term) -> &mut Option<f64> {
        match term {
            Term::ParamsLog1 => &mut self.params_log_1,
            Term::ParamsLog2 => &mut self.params_log_2,
            Term::Generation1 => &mut self.generation_1,
            Term::Generation2 => &mut self.generation_2,
            Term::ParamDiff => &mut self.param_diff,
            Term::Accuracy1 => &mut self.accuracy_1,
            Term::Accuracy2 => &mut self.accuracy_2,
            Term::HumanCorr1 => &mut self.human_corr_1,
            Term::HumanCorr2 => &mut self.human_corr_2,
            other => unreachable!("{other:?} is not a standardised column"),
        }
    }

    /// Whether every input needed for `term` is present.
    fn has(&self, term: Term) -> bool {
        match term {
            Term::AccuracyInteraction => self.accuracy_1.is_some() && self.accuracy_2.is_some(),
            Term::HumanCorrInteraction => self.human_corr_1.is_some() && self.human_corr_2.is_some(),
            t => self.value(t).is_some(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PairTable {
    pub metric: MetricKind,
    pub terms: Vec<Term>,
    pub rows: Vec<PairFeatureRow>,
    /// Pairs whose metric was undefined.
    pub dropped_undefined: usize,
    /// Pairs dropped because a requested covariate was absent.
    pub dropped_missing_covariate: usize,
}

/// Assemble the table from per-model covariates and a metric over model
/// indices. `metric(i, j)` is only called with `i < j`.
pub fn build_table<F>(
    models: &[ModelCovariates],
    metric_kind: MetricKind,
    metric: F,
    terms: &[Term],
    seed: u64,
    exec: Execution,
) -> Result<PairTable>
where
    F: Fn(usize, usize) -> Option<f64> + Sync + Send,
{
    let n = models.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let mut order_rng = seed::stream(seed, "pair-order", 0);
    let swaps: Vec<bool> = pairs.iter().map(|_| order_rng.random::<bool>()).collect();
    let values = exec.map(pairs.len(), |c| metric(pairs[c].0, pairs[c].1));

    let mut rows = Vec::with_capacity(pairs.len());
    let (mut undefined, mut missing) = (0, 0);
    for ((&(i, j), swap), v) in pairs.iter().zip(swaps).zip(values) {
        let Some(v) = v else {
            undefined += 1;
            continue;
        };
        let (a, b) = if swap { (j, i) } else { (i, j) };
        let row = PairFeatureRow::new(v, &models[a], &models[b]);
        if terms.iter().all(|&t| row.has(t)) {
            rows.push(row);
        } else {
            missing += 1;
        }
    }
    if rows.is_empty() {
        return Err(Error::NoUsablePairs);
    }

    for &t in terms.iter().filter(|t| t.is_standardized()) {
        let col: Vec<f64> = rows.iter().map(|r| r.value(t).expect("checked")).collect();
        let z = stats::standardize(&col).map_err(|_| Error::ZeroVariance(format!("column `{}`", t.label())))?;
        for (r, v) in rows.iter_mut().zip(z) {
            *r.slot(t) = Some(v);
        }
    }
    if terms.contains(&Term::AccuracyInteraction) {
        for r in &mut rows {
            r.accuracy_interaction = Some(r.accuracy_1.unwrap() * r.accuracy_2.unwrap());
        }
    }
    if terms.contains(&Term::HumanCorrInteraction) {
        for r in &mut rows {
            r.human_corr_interaction = Some(r.human_corr_1.unwrap() * r.human_corr_2.unwrap());
        }
    }
    Ok(PairTable {
        metric: metric_kind,
        terms: terms.to_vec(),
        rows,
        dropped_undefined: undefined,
        dropped_missing_covariate: missing,
    })
}

fn covariates_from_meta(ids: &[String], meta: &MetadataTable) -> Result<Vec<ModelCovariates>> {
    ids.iter()
        .map(|id| {
            let m = meta
                .get(id)
                .ok_or_else(|| Error::schema("metadata", format!("no metadata row for model `{id}`")))?;
            Ok(ModelCovariates {
                model_id: id.clone(),
                company: (!m.company.is_empty()).then(|| m.company.clone()),
                architecture: m.architecture.clone(),
                is_moe: m.is_moe,
                params_log: m.params_billions.map(f64::ln),
                generation: m.generation.map(|g| g as f64),
                accuracy: None,
                latest_model: m.latest_model,
                human_corr: m.correlation_with_human_score,
            })
        })
        .collect()
}

/// Pair table over a response dataset; accuracy covariates come from the
/// data, the rest from `meta`.
pub fn build_pair_table(
    d: &ResponseDataset,
    meta: &MetadataTable,
    metric: MetricKind,
    terms: &[Term],
    seed: u64,
    exec: Execution,
) -> Result<PairTable> {
    if !metric.is_agreement() {
        return Err(Error::InvalidConfig(format!("{} needs a rating dataset", metric.name())));
    }
    let mut models = covariates_from_meta(d.model_ids(), meta)?;
    for (m, acc) in models.iter_mut().zip(d.accuracies()) {
        m.accuracy = Some(acc);
    }
    build_table(
        &models,
        metric,
        |i, j| correlation::response_metric_at(d, i, j, metric).ok().map(|m| m.value),
        terms,
        seed,
        exec,
    )
}

/// Pair table over a rating dataset. Correlation with human labels comes
/// from `meta` when given there, otherwise from the data.
pub fn build_rating_pair_table(
    r: &RatingDataset,
    meta: &MetadataTable,
    metric: MetricKind,
    method: CorrelationMethod,
    terms: &[Term],
    seed: u64,
    exec: Execution,
) -> Result<PairTable> {
    if metric.is_agreement() {
        return Err(Error::InvalidConfig(format!("{} needs a response dataset", metric.name())));
    }
    let mut models = covariates_from_meta(r.model_ids(), meta)?;
    for (i, m) in models.iter_mut().enumerate() {
        if m.human_corr.is_none() {
            m.human_corr = correlation::human_correlation(r, i);
        }
        m.accuracy = m.human_corr;
    }
    build_table(
        &models,
        metric,
        |i, j| correlation::rating_metric_at(r, i, j, metric, method).ok().map(|m| m.value),
        terms,
        seed,
        exec,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsTerm {
    pub name: String,
    pub coef: f64,
    pub std_err: f64,
    pub t: f64,
    pub p_value: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OlsFit {
    pub dependent: String,
    pub terms: Vec<OlsTerm>,
    pub r_squared: f64,
    pub observations: usize,
    pub df_resid: usize,
}

impl OlsFit {
    pub fn term(&self, name: &str) -> Option<&OlsTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("term,coef,std_err,t,p_value,ci_low,ci_high\n");
        for t in &self.terms {
            writeln!(
                out,
                "{},{},{},{},{},{},{}",
                crate::ingest::csv_escape(&t.name),
                t.coef,
                t.std_err,
                t.t,
                t.p_value,
                t.ci_low,
                t.ci_high
            )
            .unwrap();
        }
        out
    }

    /// Fixed-width report: coef, std err, t, P>|t|, 95% interval, then the
    /// observation count and R².
    pub fn to_table(&self) -> String {
        let width = self.terms.iter().map(|t| t.name.len()).max().unwrap_or(9).max(9);
        let mut out = String::new();
        writeln!(
            out,
            "{:width$} {:>10} {:>10} {:>10} {:>8} {:>10} {:>10}",
            "", "coef", "std err", "t", "P>|t|", "[0.025", "0.975]"
        )
        .unwrap();
        writeln!(out, "{}", "-".repeat(width + 64)).unwrap();
        for t in &self.terms {
            writeln!(
                out,
                "{:width$} {:>10.4} {:>10.3} {:>10.3} {:>8.3} {:>10.3} {:>10.3}",
                t.name, t.coef, t.std_err, t.t, t.p_value, t.ci_low, t.ci_high
            )
            .unwrap();
        }
        writeln!(out, "{}", "-".repeat(width + 64)).unwrap();
        writeln!(
            out,
            "Dependent variable: {}. No. observations: {}. R^2={:.3}.",
            self.dependent, self.observations, self.r_squared
        )
        .unwrap();
        out
    }
}

/// Ordinary least squares on a row-major `n × p` design (include the
/// intercept column yourself). Solved by Householder QR.
pub fn ols(names: &[String], x: &[f64], y: &[f64], dependent: &str) -> Result<OlsFit> {
    let p = names.len();
    let n = y.len();
    assert_eq!(x.len(), n * p, "design shape");
    if n <= p {
        return Err(Error::TooFewObservations {
            observations: n,
            terms: p,
        });
    }
    let xm = DMatrix::from_row_slice(n, p, x);
    let yv = DVector::from_column_slice(y);
    let col_norms: Vec<f64> = (0..p).map(|j| xm.column(j).norm()).collect();
    let qr = xm.clone().qr();
    let r = qr.r();
    let collinear: Vec<String> = (0..p)
        .filter(|&j| !(r[(j, j)].abs() > 1e-9 * col_norms[j].max(f64::MIN_POSITIVE)) || col_norms[j] == 0.0)
        .map(|j| names[j].clone())
        .collect();
    if !collinear.is_empty() {
        return Err(Error::RankDeficient(collinear));
    }
    let qty = qr.q().transpose() * &yv;
    let beta = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(p, p))
        .ok_or_else(|| Error::RankDeficient(names.to_vec()))?;

    let resid = &yv - &xm * &beta;
    let ssr = resid.norm_squared();
    let ybar = y.iter().sum::<f64>() / n as f64;
    let sst: f64 = y.iter().map(|v| (v - ybar).powi(2)).sum();
    let r_squared = if sst > 0.0 {
        1.0 - ssr / sst
    } else if ssr == 0.0 {
        1.0
    } else {
        0.0
    };
    let df = n - p;
    let sigma2 = ssr / df as f64;
    let q975 = stats::student_t_quantile(0.975, df as f64);
    let terms = (0..p)
        .map(|j| {
            // [(XᵀX)⁻¹]_jj = Σ_k (R⁻¹)_jk²
            let v: f64 = r_inv.row(j).iter().map(|e| e * e).sum();
            let se = (sigma2 * v).sqrt();
            let coef = beta[j];
            let t = coef / se;
            OlsTerm {
                name: names[j].clone(),
                coef,
                std_err: se,
                t,
                p_value: stats::student_t_two_sided_p(t, df as f64),
                ci_low: coef - q975 * se,
                ci_high: coef + q975 * se,
            }
        })
        .collect();
    Ok(OlsFit {
        dependent: dependent.to_string(),
        terms,
        r_squared,
        observations: n,
        df_resid: df,
    })
}

/// Fit `dependent ~ 1 + terms` on a pair table.
pub fn ols_fit(table: &PairTable, terms: &[Term]) -> Result<OlsFit> {
    let mut names = vec!["Intercept".to_string()];
    names.extend(terms.iter().map(|t| t.label().to_string()));
    let mut x = Vec::with_capacity(table.rows.len() * names.len());
    let mut y = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        x.push(1.0);
        for &t in terms {
            x.push(row.value(t).ok_or_else(|| {
                Error::InvalidConfig(format!("term `{}` was not built into the pair table", t.label()))
            })?);
        }
        y.push(row.dependent);
    }
    ols(&names, &x, &y, table.metric.description())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(p: usize) -> Vec<String> {
        (0..p).map(|i| format!("x{i}")).collect()
    }

    #[test]
    fn exact_linear_fit() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let mut x = Vec::new();
        let mut y = Vec::new();
        for &v in &xs {
            x.extend([1.0, v]);
            y.push(2.0 - 3.0 * v);
        }
        let fit = ols(&names(2), &x, &y, "y").unwrap();
        assert!((fit.terms[0].coef - 2.0).abs() < 1e-12);
        assert!((fit.terms[1].coef + 3.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficiency_names_the_term() {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for i in 0..10 {
            let v = i as f64;
            x.extend([1.0, v, 2.0 * v]);
            y.push(v + (i % 3) as f64);
        }
        match ols(&names(3), &x, &y, "y") {
            Err(Error::RankDeficient(t)) => assert_eq!(t, vec!["x2".to_string()]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            ols(&names(3), &x[..9], &y[..3], "y"),
            Err(Error::TooFewObservations { .. })
        ));
    }

    fn toy_models() -> Vec<ModelCovariates> {
        (0..3)
            .map(|i| ModelCovariates {
                model_id: format!("m{i}"),
                company: Some(if i < 2 { "a".into() } else { "b".into() }),
                accuracy: Some(0.5 + 0.1 * i as f64),
                ..Default::default()
            })
            .collect()
    }

    #[test]
    fn three_models_give_three_rows() {
        let terms = CovariateSet::Helm.terms();
        let t = build_table(
            &toy_models(),
            MetricKind::AgreementOverall,
            |i, j| Some((i + j) as f64),
            &terms,
            1,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(t.rows.len(), 3);
        let acc1: Vec<f64> = t.rows.iter().map(|r| r.accuracy_1.unwrap()).collect();
        assert!(stats::mean(&acc1).abs() < 1e-12);
        for r in &t.rows {
            let prod = r.accuracy_1.unwrap() * r.accuracy_2.unwrap();
            assert_eq!(r.accuracy_interaction, Some(prod));
        }
    }

    #[test]
    fn undefined_metrics_and_missing_covariates_are_counted() {
        let mut models = toy_models();
        models.push(ModelCovariates {
            model_id: "m3".into(),
            company: None,
            accuracy: Some(0.9),
            ..Default::default()
        });
        let t = build_table(
            &models,
            MetricKind::AgreementBothWrong,
            |i, j| (i != 0 || j != 1).then_some(0.5 + 0.01 * (i * j) as f64),
            &[Term::SameCompany],
            2,
            Execution::Sequential,
        )
        .unwrap();
        assert_eq!(t.dropped_undefined, 1);
        assert_eq!(t.dropped_missing_covariate, 3);
        assert_eq!(t.rows.len(), 2);
        let none = build_table(&models, MetricKind::AgreementBothWrong, |_, _| None, &[], 2, Execution::Sequential);
        assert!(matches!(none, Err(Error::NoUsablePairs)));
    }

    #[test]
    fn seed_controls_slots_not_pair_set() {
        let models: Vec<ModelCovariates> = (0..8)
            .map(|i| ModelCovariates {
                model_id: format!("m{i}"),
                company: Some("c".into()),
                accuracy: Some(i as f64),
                ..Default::default()
            })
            .collect();
        let terms = [Term::Accuracy1, Term::Accuracy2];
        let build = |seed| {
            build_table(&models, MetricKind::AgreementOverall, |i, j| Some((i * 10 + j) as f64), &terms, seed, Execution::Sequential)
                .unwrap()
        };
        let (a, b, c) = (build(5), build(5), build(6));
        assert_eq!(a.rows, b.rows);
        let key = |t: &PairTable| {
            let mut v: Vec<(String, String)> = t
                .rows
                .iter()
                .map(|r| {
                    let mut p = [r.model_1.clone(), r.model_2.clone()];
                    p.sort();
                    (p[0].clone(), p[1].clone())
                })
                .collect();
            v.sort();
            v
        };
        assert_eq!(key(&a), key(&c));
        assert_ne!(a.rows, c.rows);
    }
}
