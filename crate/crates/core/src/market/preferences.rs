use rand::Rng;
use serde::Serialize;

use super::config::PreferenceMethod;
use super::ensemble::Market;
use crate::error::Result;
use crate::seed::{self, StreamRng};

/// Each firm's strict ranking of the applicant pool (best first) and the
/// model that produced it (`None` for uniformly random rankings).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirmPreferences {
    pub orders: Vec<Vec<usize>>,
    pub models: Vec<Option<String>>,
}

impl FirmPreferences {
    /// `rank[f][a]`: 0-based position of applicant `a` in firm `f`'s order.
    pub fn ranks(&self) -> Vec<Vec<usize>> {
        self.orders
            .iter()
            .map(|order| {
                let mut r = vec![0; order.len()];
                for (pos, &a) in order.iter().enumerate() {
                    r[a] = pos;
                }
                r
            })
            .collect()
    }
}

/// Order items by descending score, breaking ties with independent uniform
/// keys. Without scores this is a uniform random permutation.
pub(crate) fn order_by_scores(scores: Option<&[f64]>, n: usize, rng: &mut StreamRng) -> Vec<usize> {
    let keys: Vec<u64> = (0..n).map(|_| rng.random()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    match scores {
        Some(s) => order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(keys[a].cmp(&keys[b]))),
        None => order.sort_by_key(|&a| keys[a]),
    }
    order
}

/// Pick the rating model of every firm, per the method. `fixed` assigns
/// models round-robin instead.
pub(crate) fn choose_models(
    market: &Market,
    method: PreferenceMethod,
    firms: usize,
    fixed: Option<&[usize]>,
    replicate_seed: u64,
) -> Vec<Option<usize>> {
    let mut rng = seed::stream(replicate_seed, "models", 0);
    if let Some(fixed) = fixed {
        return (0..firms).map(|f| Some(fixed[f % fixed.len()])).collect();
    }
    let pick = |rng: &mut StreamRng, from: &[usize]| from[rng.random_range(0..from.len())];
    match method {
        PreferenceMethod::UniformlyRandom => vec![None; firms],
        PreferenceMethod::SameLlm => {
            let m = pick(&mut rng, market.eligible_models());
            vec![Some(m); firms]
        }
        PreferenceMethod::SameCompanyLlm => {
            let companies = market.companies();
            let (_, members) = &companies[rng.random_range(0..companies.len())];
            (0..firms).map(|_| Some(pick(&mut rng, members))).collect()
        }
        PreferenceMethod::LatestLlm => (0..firms).map(|_| Some(pick(&mut rng, market.latest_models()))).collect(),
        PreferenceMethod::RandomLlms => (0..firms).map(|_| Some(pick(&mut rng, market.eligible_models()))).collect(),
    }
}

/// Firm rankings for one replicate on job `job` (index into the market's
/// job pool).
pub fn build_firm_preferences(market: &Market, replicate_seed: u64, job: usize) -> Result<FirmPreferences> {
    firm_preferences(market, market.config().firms, None, replicate_seed, job)
}

pub(crate) fn firm_preferences(
    market: &Market,
    firms: usize,
    fixed: Option<&[usize]>,
    replicate_seed: u64,
    job: usize,
) -> Result<FirmPreferences> {
    let n = market.applicants().len();
    let method = if fixed.is_some() { PreferenceMethod::RandomLlms } else { market.config().method };
    let models = choose_models(market, method, firms, fixed, replicate_seed);
    let orders = models
        .iter()
        .enumerate()
        .map(|(f, m)| {
            let mut rng = seed::stream(replicate_seed, "firm-ties", f as u64);
            let scores = m.map(|m| market.scores(m, job));
            order_by_scores(scores, n, &mut rng)
        })
        .collect();
    Ok(FirmPreferences {
        orders,
        models: models
            .iter()
            .map(|m| m.map(|m| market.model_id(m).to_string()))
            .collect(),
    })
}
