use rand::Rng;
use serde::Serialize;

use super::config::{ApplicantPool, ApplicantPreferenceSource, ApplicantScores, BudgetRule, MarketConfig, PreferenceMethod};
use super::matching::{deferred_acceptance, MatchingOutcome};
use super::metrics::{
    avg_applicant_rank, budget_counts, budget_stats, interview_set, match_prob_by_bucket, systemic_exclusion_rate,
    BucketStat, BudgetStat, Estimate,
};
use super::preferences::{firm_preferences, order_by_scores, FirmPreferences};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::ingest::{csv_escape, fmt_f64, MetadataTable, RatingDataset};
use crate::seed;

/// Inputs a market may draw on. Uniformly random markets need none of them.
#[derive(Debug, Clone, Copy, Default)]
pub struct MarketData<'a> {
    pub ratings: Option<&'a RatingDataset>,
    pub meta: Option<&'a MetadataTable>,
    pub applicant_scores: Option<&'a ApplicantScores>,
}

/// Human label of a (resume, job) pair.
type HumanLookup<'a> = Box<dyn Fn(&str, &str) -> Option<f64> + 'a>;

/// A validated market with every score lookup precomputed.
#[derive(Debug, Clone)]
pub struct Market {
    cfg: MarketConfig,
    applicants: Vec<String>,
    jobs: Vec<String>,
    model_ids: Vec<String>,
    /// `scores[m][job][applicant]`, `None` for models outside the eligible
    /// set or with incomplete ratings.
    scores: Vec<Option<Vec<Vec<f64>>>>,
    /// First missing (resume, job) per model.
    missing: Vec<Option<(String, String)>>,
    eligible: Vec<usize>,
    companies: Vec<(String, Vec<usize>)>,
    latest: Vec<usize>,
    /// `human[job][applicant]`.
    human: Vec<Vec<Option<f64>>>,
    has_human: bool,
    bucket_range: (i64, i64),
    /// `firm_scores[applicant][firm]` for rating-file applicant preferences.
    firm_scores: Option<Vec<Vec<f64>>>,
}

/// Everything produced by one simulated market.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateOutcome {
    pub index: usize,
    pub seed: u64,
    pub job: String,
    pub firm_preferences: FirmPreferences,
    pub applicant_preferences: Vec<Vec<usize>>,
    pub applied: Vec<Vec<bool>>,
    pub outcome: MatchingOutcome,
    pub exclusion: f64,
    /// `None` when nobody matched.
    pub avg_rank: Option<f64>,
}

impl ReplicateOutcome {
    /// `rank[f][a]` as used by the matching.
    pub fn firm_ranks(&self) -> Vec<Vec<usize>> {
        self.firm_preferences.ranks()
    }
}

/// Per-replicate numbers kept by the ensemble.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicateSummary {
    pub index: usize,
    pub job: String,
    pub exclusion: f64,
    pub avg_rank: Option<f64>,
    pub matched: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MarketEnsembleResult {
    pub method: PreferenceMethod,
    pub firms: usize,
    pub applicants: usize,
    pub replicates: usize,
    pub exclusion: Estimate,
    /// Over replicates with at least one match; `None` if there were none.
    pub avg_rank: Option<Estimate>,
    pub match_rate: Estimate,
    /// Empty when no human labels cover the applicant pool.
    pub buckets: Vec<BucketStat>,
    pub budget: Vec<BudgetStat>,
    pub per_replicate: Vec<ReplicateSummary>,
}

impl MarketEnsembleResult {
    /// P_relative(t) for every budget t; errors when P_match(1) is zero or
    /// no applicant applied to a single firm.
    pub fn relative_match_probability(&self) -> Result<Vec<(usize, f64)>> {
        match self.budget.first() {
            Some(b) if b.p_match.unwrap_or(0.0) > 0.0 => {}
            _ => return Err(Error::UndefinedBaseline),
        }
        Ok(self.budget.iter().filter_map(|b| b.p_relative.map(|r| (b.t, r))).collect())
    }

    pub fn budget_stat(&self, t: usize) -> Option<&BudgetStat> {
        self.budget.iter().find(|b| b.t == t)
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("metric,mean,se,n\n");
        let mut row = |name: &str, e: Option<Estimate>| match e {
            Some(e) => out.push_str(&format!("{name},{},{},{}\n", fmt_f64(e.mean), fmt_f64(e.se), e.n)),
            None => out.push_str(&format!("{name},,,0\n")),
        };
        row("systemic_exclusion", Some(self.exclusion));
        row("avg_applicant_rank", self.avg_rank);
        row("match_rate", Some(self.match_rate));
        out
    }

    pub fn replicates_csv(&self) -> String {
        let mut out = String::from("replicate,job,systemic_exclusion,avg_applicant_rank,matched\n");
        for r in &self.per_replicate {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                r.index,
                csv_escape(&r.job),
                fmt_f64(r.exclusion),
                opt(r.avg_rank),
                r.matched
            ));
        }
        out
    }

    pub fn buckets_csv(&self) -> String {
        let mut out = String::from("bucket_lower,bucket_upper,observations,matched,match_probability,se\n");
        for b in &self.buckets {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                b.lower,
                b.lower + 1,
                b.observations,
                b.matched,
                opt(b.probability),
                opt(b.se)
            ));
        }
        out
    }

    pub fn budget_csv(&self) -> String {
        let mut out = String::from("applications,applicants,matched,p_match,p_match_se,p_relative,p_relative_se\n");
        for b in &self.budget {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                b.t,
                b.applicants,
                b.matched,
                opt(b.p_match),
                opt(b.p_match_se),
                opt(b.p_relative),
                opt(b.p_relative_se)
            ));
        }
        out
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

impl Market {
    pub fn new(cfg: &MarketConfig, data: MarketData<'_>) -> Result<Market> {
        cfg.validate()?;
        let method = cfg.method;
        let ratings = data.ratings;
        if ratings.is_none() && method.uses_ratings() {
            return Err(Error::InvalidConfig(format!("method `{}` needs rating data", method.name())));
        }

        let (mut applicants, jobs, human_of): (Vec<String>, Vec<String>, HumanLookup<'_>) =
            match ratings {
                Some(r) => {
                    let (resumes, jobs) = match cfg.pool {
                        ApplicantPool::All => (r.resume_ids(), r.job_ids()),
                        ApplicantPool::Labeled => labeled_pool(r)?,
                    };
                    (
                        resumes,
                        jobs,
                        Box::new(move |a: &str, j: &str| r.pair_index(a, j).and_then(|p| r.human_scores()[p])),
                    )
                }
                None => {
                    let n = cfg.applicants.ok_or_else(|| {
                        Error::InvalidConfig("an applicant count is required when no ratings are supplied".into())
                    })?;
                    let width = n.saturating_sub(1).to_string().len();
                    let ids = (0..n).map(|i| format!("a{i:0width$}")).collect();
                    let job = cfg.job.clone().unwrap_or_else(|| "job".into());
                    (ids, vec![job], Box::new(|_: &str, _: &str| None))
                }
            };
        if let Some(n) = cfg.applicants {
            if n > applicants.len() {
                return Err(Error::InvalidConfig(format!(
                    "{n} applicants requested but the pool has {}",
                    applicants.len()
                )));
            }
            applicants.truncate(n);
        }
        if applicants.is_empty() {
            return Err(Error::EmptyDataset("applicant pool is empty".into()));
        }
        let jobs = match (&cfg.job, ratings) {
            (Some(job), Some(r)) => {
                if !r.job_ids().contains(job) {
                    return Err(Error::InvalidConfig(format!("unknown job `{job}`")));
                }
                vec![job.clone()]
            }
            _ => jobs,
        };
        if jobs.is_empty() {
            return Err(Error::EmptyDataset("job pool is empty".into()));
        }

        let model_ids: Vec<String> = ratings.map(|r| r.model_ids().to_vec()).unwrap_or_default();
        let eligible: Vec<usize> = match &cfg.models {
            Some(names) => {
                let r = ratings.ok_or_else(|| Error::InvalidConfig("a model list needs rating data".into()))?;
                let mut idx = names.iter().map(|n| r.index_of(n)).collect::<Result<Vec<_>>>()?;
                idx.sort_unstable();
                idx.dedup();
                idx
            }
            None => (0..model_ids.len()).collect(),
        };
        if method.uses_ratings() && eligible.is_empty() {
            return Err(Error::InvalidConfig("no models to draw from".into()));
        }

        let mut scores = vec![None; model_ids.len()];
        let mut missing = vec![None; model_ids.len()];
        if let Some(r) = ratings {
            for &m in &eligible {
                let mut per_job = Vec::with_capacity(jobs.len());
                'jobs: for job in &jobs {
                    let mut row = Vec::with_capacity(applicants.len());
                    for a in &applicants {
                        match r.pair_index(a, job).and_then(|p| r.score(m, p)) {
                            Some(s) => row.push(s),
                            None => {
                                missing[m] = Some((a.clone(), job.clone()));
                                break 'jobs;
                            }
                        }
                    }
                    per_job.push(row);
                }
                if missing[m].is_none() {
                    scores[m] = Some(per_job);
                }
            }
        }

        let mut companies: Vec<(String, Vec<usize>)> = Vec::new();
        let mut latest = Vec::new();
        if let Some(meta) = data.meta {
            for &m in &eligible {
                let Some(info) = meta.get(&model_ids[m]) else {
                    log::warn!("model `{}` has no metadata row", model_ids[m]);
                    continue;
                };
                match companies.iter_mut().find(|(c, _)| *c == info.company) {
                    Some((_, members)) => members.push(m),
                    None => companies.push((info.company.clone(), vec![m])),
                }
                if info.latest_model == Some(true) {
                    latest.push(m);
                }
            }
        }
        companies.sort_by(|a, b| a.0.cmp(&b.0));

        let drawable: Vec<usize> = match method {
            PreferenceMethod::UniformlyRandom => vec![],
            PreferenceMethod::LatestLlm => {
                if latest.is_empty() {
                    return Err(Error::NoLatestModels);
                }
                latest.clone()
            }
            PreferenceMethod::SameCompanyLlm => {
                if companies.is_empty() {
                    return Err(Error::InvalidConfig("same-company markets need model metadata".into()));
                }
                companies.iter().flat_map(|(_, m)| m.iter().copied()).collect()
            }
            _ => eligible.clone(),
        };
        for &m in &drawable {
            if let Some((resume, job)) = &missing[m] {
                return Err(Error::MissingRatings {
                    model: model_ids[m].clone(),
                    resume: resume.clone(),
                    job: job.clone(),
                });
            }
        }

        let human: Vec<Vec<Option<f64>>> = jobs
            .iter()
            .map(|j| applicants.iter().map(|a| human_of(a, j)).collect())
            .collect();
        let has_human = human.iter().flatten().any(Option::is_some);
        let bucket_range = bucket_range(ratings, &human);

        let firm_scores = match cfg.applicant_preferences {
            ApplicantPreferenceSource::UniformRandom => None,
            ApplicantPreferenceSource::RatingFile => {
                let s = data.applicant_scores.ok_or_else(|| {
                    Error::InvalidConfig("rating-file applicant preferences need an applicant score file".into())
                })?;
                let mut rows = Vec::with_capacity(applicants.len());
                for a in &applicants {
                    let row = (0..cfg.firms)
                        .map(|f| {
                            s.get(a, f).ok_or_else(|| {
                                Error::schema("applicant scores", format!("no score for applicant `{a}`, firm {f}"))
                            })
                        })
                        .collect::<Result<Vec<_>>>()?;
                    rows.push(row);
                }
                Some(rows)
            }
        };

        Ok(Market {
            cfg: cfg.clone(),
            applicants,
            jobs,
            model_ids,
            scores,
            missing,
            eligible,
            companies,
            latest,
            human,
            has_human,
            bucket_range,
            firm_scores,
        })
    }

    pub fn config(&self) -> &MarketConfig {
        &self.cfg
    }

    pub fn applicants(&self) -> &[String] {
        &self.applicants
    }

    pub fn jobs(&self) -> &[String] {
        &self.jobs
    }

    pub fn eligible_models(&self) -> &[usize] {
        &self.eligible
    }

    pub fn companies(&self) -> &[(String, Vec<usize>)] {
        &self.companies
    }

    pub fn latest_models(&self) -> &[usize] {
        &self.latest
    }

    pub fn model_id(&self, m: usize) -> &str {
        &self.model_ids[m]
    }

    /// Scores of model `m` for every applicant on job `job`.
    pub fn scores(&self, m: usize, job: usize) -> &[f64] {
        &self.scores[m].as_ref().expect("scores precomputed for drawable models")[job]
    }

    /// Human labels of every applicant on job `job`.
    pub fn human_labels(&self, job: usize) -> &[Option<f64>] {
        &self.human[job]
    }

    pub fn replicate_seed(&self, index: usize) -> u64 {
        seed::derive(self.cfg.seed, "replicate", index as u64)
    }

    /// Simulate replicate `index` of this market.
    pub fn run_replicate(&self, index: usize) -> Result<ReplicateOutcome> {
        self.simulate(index, self.replicate_seed(index), self.cfg.firms, None)
    }

    fn simulate(&self, index: usize, rseed: u64, firms: usize, fixed: Option<&[usize]>) -> Result<ReplicateOutcome> {
        let job = if self.jobs.len() == 1 {
            0
        } else {
            seed::stream(rseed, "job", 0).random_range(0..self.jobs.len())
        };
        let prefs = firm_preferences(self, firms, fixed, rseed, job)?;
        let n = self.applicants.len();
        let p = self.cfg.interview_fraction;
        let interview_sets: Vec<Vec<usize>> = prefs.orders.iter().map(|o| interview_set(o, p)).collect();
        let exclusion = systemic_exclusion_rate(&interview_sets, n);

        let mut applied = Vec::with_capacity(n);
        let mut budgets = Vec::with_capacity(n);
        let mut applicant_prefs = Vec::with_capacity(n);
        for a in 0..n {
            let row = match self.cfg.budget {
                BudgetRule::AllFirms => vec![true; firms],
                BudgetRule::Uniform1ToF => {
                    let mut rng = seed::stream(rseed, "budget", a as u64);
                    let t = rng.random_range(1..=firms);
                    let mut row = vec![false; firms];
                    for f in rand::seq::index::sample(&mut rng, firms, t) {
                        row[f] = true;
                    }
                    row
                }
            };
            budgets.push(row.iter().filter(|x| **x).count());
            applied.push(row);
            let mut rng = seed::stream(rseed, "applicant-prefs", a as u64);
            let scores = self.firm_scores.as_ref().map(|s| &s[a][..firms]);
            applicant_prefs.push(order_by_scores(scores, firms, &mut rng));
        }

        let firm_rank = prefs.ranks();
        let assignment = deferred_acceptance(&firm_rank, &applicant_prefs, &applied, self.cfg.capacity);
        let applicant_rank = assignment
            .iter()
            .zip(&applicant_prefs)
            .map(|(m, order)| m.map(|f| order.iter().position(|&g| g == f).expect("firm in list") + 1))
            .collect();
        let outcome = MatchingOutcome {
            assignment,
            applicant_rank,
            budgets,
            interview_sets,
        };
        let avg_rank = avg_applicant_rank(&outcome).ok();
        Ok(ReplicateOutcome {
            index,
            seed: rseed,
            job: self.jobs[job].clone(),
            firm_preferences: prefs,
            applicant_preferences: applicant_prefs,
            applied,
            outcome,
            exclusion,
            avg_rank,
        })
    }

    /// Run every replicate and aggregate. Replicates are independent, so the
    /// result does not depend on `exec`.
    pub fn run(&self, exec: Execution) -> Result<MarketEnsembleResult> {
        let reps = self.cfg.replicates;
        let results = exec.map(reps, |i| {
            self.run_replicate(i).map(|r| {
                let human = self.human[self.jobs.iter().position(|j| *j == r.job).expect("job in pool")].clone();
                (r, human)
            })
        });
        let mut outcomes = Vec::with_capacity(reps);
        let mut humans = Vec::with_capacity(reps);
        let mut per_replicate = Vec::with_capacity(reps);
        for (i, res) in results.into_iter().enumerate() {
            let (r, human) = res.map_err(|e| Error::Replicate {
                index: i,
                source: Box::new(e),
            })?;
            per_replicate.push(ReplicateSummary {
                index: i,
                job: r.job,
                exclusion: r.exclusion,
                avg_rank: r.avg_rank,
                matched: r.outcome.matched_count(),
            });
            outcomes.push(r.outcome);
            humans.push(human);
        }
        let n = self.applicants.len();
        let exclusion: Vec<f64> = per_replicate.iter().map(|r| r.exclusion).collect();
        let ranks: Vec<f64> = per_replicate.iter().filter_map(|r| r.avg_rank).collect();
        let rates: Vec<f64> = per_replicate.iter().map(|r| r.matched as f64 / n as f64).collect();
        let buckets = if self.has_human {
            match_prob_by_bucket(&outcomes, &humans, self.bucket_range.0, self.bucket_range.1)
        } else {
            Vec::new()
        };
        let budget = budget_stats(&budget_counts(&outcomes, self.cfg.firms));
        Ok(MarketEnsembleResult {
            method: self.cfg.method,
            firms: self.cfg.firms,
            applicants: n,
            replicates: reps,
            exclusion: Estimate::from_samples(&exclusion).expect("at least one replicate"),
            avg_rank: Estimate::from_samples(&ranks),
            match_rate: Estimate::from_samples(&rates).expect("at least one replicate"),
            buckets,
            budget,
            per_replicate,
        })
    }
}

/// Buckets span the rating scale, or the observed labels when the scale is
/// unbounded.
fn bucket_range(ratings: Option<&RatingDataset>, human: &[Vec<Option<f64>>]) -> (i64, i64) {
    let Some(r) = ratings else { return (1, 10) };
    let scale = r.scale();
    if scale.max - scale.min <= 1000.0 {
        return (scale.min.floor() as i64, scale.max.floor() as i64);
    }
    let labels = human.iter().flatten().flatten();
    let lo = labels.clone().fold(f64::INFINITY, |a, &b| a.min(b));
    let hi = labels.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    if lo.is_finite() {
        (lo.floor() as i64, hi.floor() as i64)
    } else {
        (1, 10)
    }
}

fn labeled_pool(r: &RatingDataset) -> Result<(Vec<String>, Vec<String>)> {
    let mut resumes = Vec::new();
    let mut jobs = Vec::new();
    for ((resume, job), h) in r.pair_ids().iter().zip(r.human_scores()) {
        if h.is_some() {
            if !resumes.contains(resume) {
                resumes.push(resume.clone());
            }
            if !jobs.contains(job) {
                jobs.push(job.clone());
            }
        }
    }
    if resumes.is_empty() {
        return Err(Error::EmptyDataset("no human-labeled resume-job pairs".into()));
    }
    Ok((resumes, jobs))
}

pub fn run_ensemble(cfg: &MarketConfig, data: MarketData<'_>) -> Result<MarketEnsembleResult> {
    run_ensemble_with(cfg, data, Execution::default())
}

pub fn run_ensemble_with(cfg: &MarketConfig, data: MarketData<'_>, exec: Execution) -> Result<MarketEnsembleResult> {
    Market::new(cfg, data)?.run(exec)
}

/// Mean exclusion for `n` firms each using a distinct model, against the
/// same number of uniformly random firms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepPoint {
    pub n: usize,
    pub combinations: usize,
    pub model_exclusion: Estimate,
    pub uniform_exclusion: Estimate,
    /// (1 − ⌈p|A|⌉/|A|)^n.
    pub uniform_expected: f64,
}

impl SweepPoint {
    pub fn to_csv(points: &[SweepPoint]) -> String {
        let mut out = String::from(
            "models,combinations,model_exclusion,model_exclusion_se,uniform_exclusion,uniform_exclusion_se,uniform_expected\n",
        );
        for p in points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                p.n,
                p.combinations,
                fmt_f64(p.model_exclusion.mean),
                fmt_f64(p.model_exclusion.se),
                fmt_f64(p.uniform_exclusion.mean),
                fmt_f64(p.uniform_exclusion.se),
                fmt_f64(p.uniform_expected)
            ));
        }
        out
    }
}

/// Exclusion against the number of distinct models in use. For each `n` in
/// `1..=max_models`, every n-subset of the eligible models is used when
/// there are at most `max_combinations` of them, otherwise that many
/// distinct random subsets. Each subset runs `replicates_per_combination`
/// markets with one firm per model.
pub fn exclusion_by_model_count(
    cfg: &MarketConfig,
    data: MarketData<'_>,
    max_models: usize,
    max_combinations: usize,
    replicates_per_combination: usize,
    exec: Execution,
) -> Result<Vec<SweepPoint>> {
    let mut base = cfg.clone();
    base.method = PreferenceMethod::RandomLlms;
    let market = Market::new(&base, data)?;
    if max_combinations == 0 || replicates_per_combination == 0 {
        return Err(Error::InvalidConfig("sweep needs at least one combination and replicate".into()));
    }
    for &m in &market.eligible {
        if let Some((resume, job)) = &market.missing[m] {
            return Err(Error::MissingRatings {
                model: market.model_ids[m].clone(),
                resume: resume.clone(),
                job: job.clone(),
            });
        }
    }
    let pool = market.eligible.len();
    if max_models == 0 || max_models > pool {
        return Err(Error::InvalidConfig(format!(
            "model count must be in 1..={pool}, got {max_models}"
        )));
    }
    let n_app = market.applicants.len();
    let k = super::metrics::interview_count(cfg.interview_fraction, n_app);
    let single = 1.0 - k as f64 / n_app as f64;

    let mut points = Vec::with_capacity(max_models);
    for n in 1..=max_models {
        let combos = combinations(&market.eligible, n, max_combinations, seed::derive(cfg.seed, "sweep-combos", n as u64));
        let nseed = seed::derive(cfg.seed, "sweep", n as u64);
        let total = combos.len() * replicates_per_combination;
        let runs = exec.map(total, |i| {
            let (c, r) = (i / replicates_per_combination, i % replicates_per_combination);
            let cseed = seed::derive(nseed, "combination", c as u64);
            let rseed = seed::derive(cseed, "replicate", r as u64);
            let with_models = market.simulate(i, rseed, n, Some(&combos[c]))?.exclusion;
            let uniform_seed = seed::derive(nseed, "uniform", i as u64);
            let uniform = market.uniform_exclusion(uniform_seed, n);
            Ok::<_, Error>((with_models, uniform))
        });
        let mut model_ex = Vec::with_capacity(total);
        let mut uniform_ex = Vec::with_capacity(total);
        for (i, r) in runs.into_iter().enumerate() {
            let (a, b) = r.map_err(|e| Error::Replicate {
                index: i,
                source: Box::new(e),
            })?;
            model_ex.push(a);
            uniform_ex.push(b);
        }
        points.push(SweepPoint {
            n,
            combinations: combos.len(),
            model_exclusion: Estimate::from_samples(&model_ex).expect("nonempty"),
            uniform_exclusion: Estimate::from_samples(&uniform_ex).expect("nonempty"),
            uniform_expected: single.powi(n as i32),
        });
    }
    Ok(points)
}

impl Market {
    fn uniform_exclusion(&self, rseed: u64, firms: usize) -> f64 {
        let n = self.applicants.len();
        let sets: Vec<Vec<usize>> = (0..firms)
            .map(|f| {
                let mut rng = seed::stream(rseed, "firm-ties", f as u64);
                interview_set(&order_by_scores(None, n, &mut rng), self.cfg.interview_fraction)
            })
            .collect();
        systemic_exclusion_rate(&sets, n)
    }
}

/// All n-subsets of `items` if there are at most `limit`, else `limit`
/// distinct random ones, each sorted.
fn combinations(items: &[usize], n: usize, limit: usize, seed_value: u64) -> Vec<Vec<usize>> {
    let total = binomial(items.len(), n);
    if total <= limit as f64 {
        let mut out = Vec::new();
        let mut idx: Vec<usize> = (0..n).collect();
        loop {
            out.push(idx.iter().map(|&i| items[i]).collect());
            let mut i = n;
            while i > 0 && idx[i - 1] == items.len() - n + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..n {
                idx[j] = idx[j - 1] + 1;
            }
        }
        return out;
    }
    let mut rng = seed::stream(seed_value, "combination", 0);
    let mut seen = std::collections::BTreeSet::new();
    let mut out = Vec::with_capacity(limit);
    while out.len() < limit {
        let mut pick: Vec<usize> = rand::seq::index::sample(&mut rng, items.len(), n)
            .into_iter()
            .map(|i| items[i])
            .collect();
        pick.sort_unstable();
        if seen.insert(pick.clone()) {
            out.push(pick);
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn combinations_enumerate_or_sample() {
        let items: Vec<usize> = (0..5).collect();
        let all = combinations(&items, 2, 100, 1);
        assert_eq!(all.len(), 10);
        assert_eq!(all[0], vec![0, 1]);
        assert_eq!(all[9], vec![3, 4]);
        let some = combinations(&(0..20).collect::<Vec<_>>(), 10, 7, 1);
        assert_eq!(some.len(), 7);
        let distinct: std::collections::BTreeSet<_> = some.iter().collect();
        assert_eq!(distinct.len(), 7);
    }

    #[test]
    fn uniform_market_without_ratings() {
        let mut cfg = MarketConfig::new(PreferenceMethod::UniformlyRandom, 3);
        cfg.applicants = Some(12);
        cfg.replicates = 4;
        let res = run_ensemble(&cfg, MarketData::default()).unwrap();
        assert_eq!(res.per_replicate.len(), 4);
        assert!(res.buckets.is_empty());
        // 3 firms with capacity 1 and everyone applying everywhere fill up
        assert!(res.per_replicate.iter().all(|r| r.matched == 3));
    }

    #[test]
    fn rating_methods_need_ratings() {
        let mut cfg = MarketConfig::new(PreferenceMethod::SameLlm, 3);
        cfg.applicants = Some(12);
        assert!(matches!(Market::new(&cfg, MarketData::default()), Err(Error::InvalidConfig(_))));
    }
}
