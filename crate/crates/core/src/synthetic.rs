//! Synthetic ensembles with a known correlation structure.
//!
//! Responses: every item has one wrong "attractor" option shared by all
//! models, and each company has its own attractor per item. A model answers
//! correctly with probability `accuracy`; when wrong it is attracted with
//! probability `attractor` (ρ), in which case it picks the company attractor
//! with probability `company_weight` (w) and the global attractor otherwise.
//! Unattracted errors are uniform over all k − 1 wrong options.
//!
//! For two models the both-wrong agreement is then
//!
//! ```text
//! ρ₁ρ₂·s + (1 − ρ₁ρ₂·s)/(k − 1),   s = (1 − w₁)(1 − w₂) + [same company]·w₁w₂
//! ```
//!
//! where s is the probability two attracted models draw from the same
//! attractor source. With w = 0 this is ρ₁ρ₂ + (1 − ρ₁ρ₂)/(k − 1).
//!
//! Ratings: `score = clamp(round(true + λ·z + κ·c + σ·ε))` with z a standard
//! normal shared by all models on a pair, c shared within a company, and ε
//! idiosyncratic. Human labels are `clamp(round(true))`. Without rounding or
//! clamping the residual correlation of two models is
//! `(λ₁λ₂ + [same company]·κ₁κ₂) / sqrt((λ₁² + κ₁² + σ₁²)(λ₂² + κ₂² + σ₂²))`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{MetadataTable, ModelMeta, RatingDataset, RatingScale, ResponseDataset};
use crate::seed::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticModel {
    pub id: String,
    pub accuracy: f64,
    /// Probability of choosing an attractor when wrong (ρ).
    #[serde(default)]
    pub attractor: f64,
    #[serde(default)]
    pub company: String,
    #[serde(default)]
    pub architecture: Option<String>,
    /// Probability an attracted error goes to the company attractor.
    #[serde(default)]
    pub company_weight: f64,
    #[serde(default)]
    pub params_billions: Option<f64>,
    #[serde(default)]
    pub generation: Option<i64>,
    #[serde(default)]
    pub is_moe: Option<bool>,
    #[serde(default)]
    pub latest_model: Option<bool>,
}

impl SyntheticModel {
    pub fn new(id: impl Into<String>, accuracy: f64, attractor: f64) -> Self {
        SyntheticModel {
            id: id.into(),
            accuracy,
            attractor,
            company: String::new(),
            architecture: None,
            company_weight: 0.0,
            params_billions: None,
            generation: None,
            is_moe: None,
            latest_model: None,
        }
    }

    pub fn with_company(mut self, company: impl Into<String>, weight: f64) -> Self {
        self.company = company.into();
        self.company_weight = weight;
        self
    }
}

/// Number of options per item: a constant or a weighted mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ChoiceCounts {
    Constant(u8),
    Mixture(Vec<ChoiceWeight>),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChoiceWeight {
    pub k: u8,
    pub weight: f64,
}

impl ChoiceCounts {
    /// `(k, probability)` with weights normalised.
    pub fn distribution(&self) -> Vec<(u8, f64)> {
        match self {
            ChoiceCounts::Constant(k) => vec![(*k, 1.0)],
            ChoiceCounts::Mixture(ws) => {
                let total: f64 = ws.iter().map(|w| w.weight).sum();
                ws.iter().map(|w| (w.k, w.weight / total)).collect()
            }
        }
    }

    fn draw(&self, rng: &mut StreamRng) -> u8 {
        match self {
            ChoiceCounts::Constant(k) => *k,
            ChoiceCounts::Mixture(ws) => {
                let total: f64 = ws.iter().map(|w| w.weight).sum();
                let mut u = rng.random::<f64>() * total;
                for w in ws {
                    if u < w.weight {
                        return w.k;
                    }
                    u -= w.weight;
                }
                ws.last().expect("nonempty mixture").k
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticEnsembleSpec {
    pub models: Vec<SyntheticModel>,
    pub items: usize,
    pub choices: ChoiceCounts,
    #[serde(default)]
    pub seed: u64,
}

fn check_prob(x: f64, what: &str, id: &str) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!("{what} of `{id}` must be in [0, 1], got {x}")))
    }
}

impl SyntheticEnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() {
            return Err(Error::InvalidConfig("synthetic ensemble needs at least one model".into()));
        }
        if self.items == 0 {
            return Err(Error::InvalidConfig("item count must be at least 1".into()));
        }
        for m in &self.models {
            check_prob(m.accuracy, "accuracy", &m.id)?;
            check_prob(m.attractor, "attractor weight", &m.id)?;
            check_prob(m.company_weight, "company weight", &m.id)?;
        }
        let dist = self.choices.distribution();
        if dist.is_empty() {
            return Err(Error::InvalidConfig("choice mixture is empty".into()));
        }
        for (k, p) in dist {
            if !(2..=254).contains(&k) {
                return Err(Error::InvalidConfig(format!("choice count {k} must be in [2, 254]")));
            }
            if !(p >= 0.0) || !p.is_finite() {
                return Err(Error::InvalidConfig("choice weights must be non-negative".into()));
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> Result<MetadataTable> {
        MetadataTable::new(
            self.models
                .iter()
                .map(|m| ModelMeta {
                    model_id: m.id.clone(),
                    company: m.company.clone(),
                    architecture: m.architecture.clone(),
                    params_billions: m.params_billions,
                    generation: m.generation,
                    is_moe: m.is_moe,
                    latest_model: m.latest_model,
                    correlation_with_human_score: None,
                })
                .collect(),
        )
    }

    /// Expected both-wrong agreement of models `i` and `j`, averaged over the
    /// choice-count distribution.
    pub fn expected_both_wrong(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.models[i], &self.models[j]);
        let same = !a.company.is_empty() && a.company == b.company;
        self.choices
            .distribution()
            .into_iter()
            .map(|(k, p)| {
                p * expected_blended_agreement(a.attractor, a.company_weight, b.attractor, b.company_weight, same, k)
            })
            .sum()
    }
}

/// Both-wrong agreement of two models under the single shared attractor:
/// ρ₁ρ₂ + (1 − ρ₁ρ₂)/(k − 1).
pub fn expected_conditional_agreement(rho1: f64, rho2: f64, k: u8) -> f64 {
    let rr = rho1 * rho2;
    rr + (1.0 - rr) / (k as f64 - 1.0)
}

/// Both-wrong agreement when attracted errors are split between a global
/// and a per-company attractor (see module docs).
pub fn expected_blended_agreement(rho1: f64, w1: f64, rho2: f64, w2: f64, same_company: bool, k: u8) -> f64 {
    let s = (1.0 - w1) * (1.0 - w2) + if same_company { w1 * w2 } else { 0.0 };
    expected_conditional_agreement(rho1 * rho2 * s, 1.0, k)
}

/// Uniform draw among the k − 1 options different from `key`.
fn wrong_option(rng: &mut StreamRng, k: u8, key: u8) -> u8 {
    let r = rng.random_range(0..k - 1);
    if r < key {
        r
    } else {
        r + 1
    }
}

pub fn generate_responses(spec: &SyntheticEnsembleSpec) -> Result<ResponseDataset> {
    spec.validate()?;
    let q = spec.items;
    let mut choice_rng = seed::stream(spec.seed, "choices", 0);
    let mut key_rng = seed::stream(spec.seed, "key", 0);
    let mut attractor_rng = seed::stream(spec.seed, "attractor", 0);
    let mut counts = Vec::with_capacity(q);
    let mut key = Vec::with_capacity(q);
    let mut attractor = Vec::with_capacity(q);
    for _ in 0..q {
        let k = spec.choices.draw(&mut choice_rng);
        let c = key_rng.random_range(0..k);
        counts.push(k);
        key.push(c);
        attractor.push(wrong_option(&mut attractor_rng, k, c));
    }

    let company_attractor = |company: &str| -> Vec<u8> {
        let mut rng = seed::keyed_stream(spec.seed, "company-attractor", company);
        (0..q).map(|i| wrong_option(&mut rng, counts[i], key[i])).collect()
    };
    let mut companies: std::collections::BTreeMap<&str, Vec<u8>> = Default::default();
    for m in &spec.models {
        if m.company_weight > 0.0 && !companies.contains_key(m.company.as_str()) {
            companies.insert(&m.company, company_attractor(&m.company));
        }
    }

    let mut answers = Vec::with_capacity(spec.models.len() * q);
    for m in &spec.models {
        let mut rng = seed::keyed_stream(spec.seed, "model", &m.id);
        let own = companies.get(m.company.as_str());
        for i in 0..q {
            let a = if rng.random::<f64>() < m.accuracy {
                key[i]
            } else if rng.random::<f64>() < m.attractor {
                match own {
                    Some(c) if rng.random::<f64>() < m.company_weight => c[i],
                    _ => attractor[i],
                }
            } else {
                wrong_option(&mut rng, counts[i], key[i])
            };
            answers.push(a);
        }
    }
    let width = digits(q);
    ResponseDataset::from_flat(
        spec.models.iter().map(|m| m.id.clone()).collect(),
        (0..q).map(|i| format!("q{i:0width$}")).collect(),
        answers,
        key,
        counts,
    )
}

fn digits(n: usize) -> usize {
    n.saturating_sub(1).to_string().len()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRater {
    pub id: String,
    #[serde(default)]
    pub company: String,
    /// Loading on the component shared by all models (λ).
    #[serde(default)]
    pub shared_loading: f64,
    /// Loading on the component shared within the company (κ).
    #[serde(default)]
    pub company_loading: f64,
    /// Idiosyncratic noise sd (σ).
    #[serde(default)]
    pub noise_sd: f64,
    #[serde(default)]
    pub latest_model: Option<bool>,
}

impl SyntheticRater {
    pub fn new(id: impl Into<String>, shared_loading: f64, noise_sd: f64) -> Self {
        SyntheticRater {
            id: id.into(),
            company: String::new(),
            shared_loading,
            company_loading: 0.0,
            noise_sd,
            latest_model: None,
        }
    }

    pub fn with_company(mut self, company: impl Into<String>, loading: f64) -> Self {
        self.company = company.into();
        self.company_loading = loading;
        self
    }
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticRatingSpec {
    pub models: Vec<SyntheticRater>,
    pub resumes: usize,
    pub jobs: usize,
    /// Human labels cover resumes `0..labeled_resumes` × jobs `0..labeled_jobs`.
    #[serde(default)]
    pub labeled_resumes: usize,
    #[serde(default)]
    pub labeled_jobs: usize,
    /// Latent true fit is drawn as `true_mean + true_sd·N(0,1)`.
    pub true_mean: f64,
    pub true_sd: f64,
    #[serde(default)]
    pub scale: RatingScale,
    #[serde(default = "default_true")]
    pub round: bool,
    #[serde(default = "default_true")]
    pub clamp: bool,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticRatingSpec {
    pub fn validate(&self) -> Result<()> {
        if self.models.is_empty() || self.resumes == 0 || self.jobs == 0 {
            return Err(Error::InvalidConfig("rating spec needs models, resumes and jobs".into()));
        }
        if self.labeled_resumes > self.resumes || self.labeled_jobs > self.jobs {
            return Err(Error::InvalidConfig("labeled subset exceeds the pair grid".into()));
        }
        if !(self.scale.min < self.scale.max) {
            return Err(Error::InvalidConfig("scale min must be below max".into()));
        }
        if !(self.true_sd >= 0.0) {
            return Err(Error::InvalidConfig("true_sd must be non-negative".into()));
        }
        for m in &self.models {
            if !(m.shared_loading >= 0.0 && m.company_loading >= 0.0 && m.noise_sd >= 0.0) {
                return Err(Error::InvalidConfig(format!("loadings and noise of `{}` must be >= 0", m.id)));
            }
        }
        Ok(())
    }

    pub fn metadata(&self) -> Result<MetadataTable> {
        MetadataTable::new(
            self.models
                .iter()
                .map(|m| ModelMeta {
                    model_id: m.id.clone(),
                    company: m.company.clone(),
                    latest_model: m.latest_model,
                    ..Default::default()
                })
                .collect(),
        )
    }

    /// Residual correlation of models `i`, `j` ignoring rounding and clamping.
    pub fn expected_residual_correlation(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.models[i], &self.models[j]);
        let same = !a.company.is_empty() && a.company == b.company;
        let cov = a.shared_loading * b.shared_loading + if same { a.company_loading * b.company_loading } else { 0.0 };
        let var = |m: &SyntheticRater| m.shared_loading.powi(2) + m.company_loading.powi(2) + m.noise_sd.powi(2);
        cov / (var(a) * var(b)).sqrt()
    }

    fn finish(&self, x: f64) -> f64 {
        let x = if self.round { x.round() } else { x };
        if self.clamp {
            x.clamp(self.scale.min, self.scale.max)
        } else {
            x
        }
    }
}

pub fn generate_ratings(spec: &SyntheticRatingSpec) -> Result<RatingDataset> {
    spec.validate()?;
    let p = spec.resumes * spec.jobs;
    let (rw, jw) = (digits(spec.resumes), digits(spec.jobs));
    let mut pair_ids = Vec::with_capacity(p);
    for r in 0..spec.resumes {
        for j in 0..spec.jobs {
            pair_ids.push((format!("r{r:0rw$}"), format!("j{j:0jw$}")));
        }
    }
    let mut truth_rng = seed::stream(spec.seed, "truth", 0);
    let truth: Vec<f64> = (0..p)
        .map(|_| spec.true_mean + spec.true_sd * truth_rng.sample::<f64, _>(StandardNormal))
        .collect();
    let mut shared_rng = seed::stream(spec.seed, "shared", 0);
    let shared: Vec<f64> = (0..p).map(|_| shared_rng.sample(StandardNormal)).collect();
    let mut company_comp: std::collections::BTreeMap<&str, Vec<f64>> = Default::default();
    for m in &spec.models {
        if m.company_loading > 0.0 && !company_comp.contains_key(m.company.as_str()) {
            let mut rng = seed::keyed_stream(spec.seed, "company-component", &m.company);
            company_comp.insert(&m.company, (0..p).map(|_| rng.sample(StandardNormal)).collect());
        }
    }

    let mut human = vec![None; p];
    for r in 0..spec.labeled_resumes {
        for j in 0..spec.labeled_jobs {
            let i = r * spec.jobs + j;
            human[i] = Some(spec.finish(truth[i]));
        }
    }
    let scores = spec
        .models
        .iter()
        .map(|m| {
            let mut rng = seed::keyed_stream(spec.seed, "rater", &m.id);
            let comp = company_comp.get(m.company.as_str());
            (0..p)
                .map(|i| {
                    let eps: f64 = rng.sample(StandardNormal);
                    let c = comp.map(|c| c[i]).unwrap_or(0.0);
                    Some(spec.finish(truth[i] + m.shared_loading * shared[i] + m.company_loading * c + m.noise_sd * eps))
                })
                .collect()
        })
        .collect();
    let scale = if spec.clamp {
        spec.scale
    } else {
        RatingScale {
            min: f64::MIN,
            max: f64::MAX,
        }
    };
    RatingDataset::new(
        spec.models.iter().map(|m| m.id.clone()).collect(),
        pair_ids,
        scores,
        Some(human),
        scale,
    )
}
