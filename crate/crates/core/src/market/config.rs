use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{csv_reader, field, location, read_to_string, record_line, Header};

/// How firms form their rankings of applicants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreferenceMethod {
    /// One model drawn per market, used by every firm.
    SameLlm,
    /// One company drawn per market; each firm draws a model from it.
    SameCompanyLlm,
    /// Each firm draws from the models flagged `latest_model`.
    LatestLlm,
    /// Each firm draws from all models.
    RandomLlms,
    /// Each firm ranks applicants by a uniform random permutation.
    #[serde(alias = "uniform")]
    UniformlyRandom,
}

impl PreferenceMethod {
    pub const ALL: [PreferenceMethod; 5] = [
        PreferenceMethod::SameLlm,
        PreferenceMethod::SameCompanyLlm,
        PreferenceMethod::LatestLlm,
        PreferenceMethod::RandomLlms,
        PreferenceMethod::UniformlyRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PreferenceMethod::SameLlm => "same_llm",
            PreferenceMethod::SameCompanyLlm => "same_company_llm",
            PreferenceMethod::LatestLlm => "latest_llm",
            PreferenceMethod::RandomLlms => "random_llms",
            PreferenceMethod::UniformlyRandom => "uniformly_random",
        }
    }

    pub fn uses_ratings(self) -> bool {
        self != PreferenceMethod::UniformlyRandom
    }
}

impl std::str::FromStr for PreferenceMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let s = s.replace('-', "_");
        match s.as_str() {
            "same_llm" | "same" => Ok(PreferenceMethod::SameLlm),
            "same_company_llm" | "same_company" => Ok(PreferenceMethod::SameCompanyLlm),
            "latest_llm" | "latest" => Ok(PreferenceMethod::LatestLlm),
            "random_llms" | "random" => Ok(PreferenceMethod::RandomLlms),
            "uniformly_random" | "uniform" => Ok(PreferenceMethod::UniformlyRandom),
            _ => Err(Error::InvalidConfig(format!("unknown preference method `{s}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicantPreferenceSource {
    #[default]
    UniformRandom,
    /// Rank firms by scores supplied in an applicant-preference file.
    RatingFile,
}

/// How many firms each applicant applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BudgetRule {
    #[default]
    AllFirms,
    /// t ~ Uniform{1, ..., |F|} per applicant, then a uniform subset of t firms.
    #[serde(alias = "uniform")]
    Uniform1ToF,
}

/// Which resumes form the applicant pool when ratings are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApplicantPool {
    /// Every resume in the rating data (jobs: every job).
    #[default]
    All,
    /// Resumes and jobs that appear in the human-labeled subset.
    Labeled,
}

fn default_p() -> f64 {
    0.25
}
fn default_capacity() -> usize {
    1
}
fn default_replicates() -> usize {
    1500
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarketConfig {
    pub method: PreferenceMethod,
    pub firms: usize,
    #[serde(default = "default_p")]
    pub interview_fraction: f64,
    #[serde(default = "default_capacity")]
    pub capacity: usize,
    #[serde(default)]
    pub applicant_preferences: ApplicantPreferenceSource,
    #[serde(default)]
    pub budget: BudgetRule,
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub pool: ApplicantPool,
    /// Keep only the first N applicants of the pool; required when no
    /// ratings are supplied (ids are then generated).
    #[serde(default)]
    pub applicants: Option<usize>,
    /// Fixed job description; otherwise drawn per replicate from the pool.
    #[serde(default)]
    pub job: Option<String>,
    /// Restrict the models firms may draw from.
    #[serde(default)]
    pub models: Option<Vec<String>>,
}

impl MarketConfig {
    pub fn new(method: PreferenceMethod, firms: usize) -> Self {
        MarketConfig {
            method,
            firms,
            interview_fraction: default_p(),
            capacity: default_capacity(),
            applicant_preferences: ApplicantPreferenceSource::UniformRandom,
            budget: BudgetRule::AllFirms,
            replicates: default_replicates(),
            seed: 0,
            pool: ApplicantPool::All,
            applicants: None,
            job: None,
            models: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.firms == 0 {
            return Err(Error::InvalidConfig("firm count must be at least 1".into()));
        }
        if !(self.interview_fraction > 0.0 && self.interview_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "interview fraction must be in (0, 1), got {}",
                self.interview_fraction
            )));
        }
        if self.capacity == 0 {
            return Err(Error::InvalidConfig("capacity must be at least 1".into()));
        }
        if self.replicates == 0 {
            return Err(Error::InvalidConfig("replicate count must be at least 1".into()));
        }
        if self.applicants == Some(0) {
            return Err(Error::InvalidConfig("applicant count must be at least 1".into()));
        }
        Ok(())
    }
}

/// Applicant-side scores of firms, used to rank firms from data.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ApplicantScores {
    scores: HashMap<String, HashMap<usize, f64>>,
}

impl ApplicantScores {
    pub fn insert(&mut self, applicant: &str, firm: usize, score: f64) {
        self.scores.entry(applicant.to_string()).or_default().insert(firm, score);
    }

    pub fn get(&self, applicant: &str, firm: usize) -> Option<f64> {
        self.scores.get(applicant)?.get(&firm).copied()
    }
}

/// Load `applicant_id,firm,score` rows (firm is a 0-based index).
pub fn load_applicant_scores(path: &Path) -> Result<ApplicantScores> {
    let text = read_to_string(path)?;
    let mut rdr = csv_reader(&text);
    let header = Header::new(rdr.headers().map_err(|e| Error::parse(location(path, 1), e.to_string()))?);
    let (ca, cf, cs) = (
        header.require("applicant_id", path)?,
        header.require("firm", path)?,
        header.require("score", path)?,
    );
    let mut out = ApplicantScores::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(path.display().to_string(), e.to_string()))?;
        let loc = location(path, record_line(&rec));
        let firm: usize = field(&rec, cf)
            .parse()
            .map_err(|_| Error::parse(&loc, format!("bad firm index `{}`", field(&rec, cf))))?;
        let score: f64 = field(&rec, cs)
            .parse()
            .map_err(|_| Error::parse(&loc, format!("bad score `{}`", field(&rec, cs))))?;
        let a = field(&rec, ca);
        if out.get(a, firm).is_some() {
            return Err(Error::schema(loc, format!("duplicate score for applicant `{a}`, firm {firm}")));
        }
        out.insert(a, firm, score);
    }
    Ok(out)
}
