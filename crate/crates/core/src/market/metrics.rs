use serde::Serialize;

use super::matching::MatchingOutcome;
use crate::error::{Error, Result};

/// Mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl Estimate {
    pub fn from_samples(xs: &[f64]) -> Option<Estimate> {
        if xs.is_empty() {
            return None;
        }
        Some(Estimate {
            mean: crate::stats::mean(xs),
            se: crate::stats::std_error(xs),
            n: xs.len(),
        })
    }

    /// Binomial proportion `k / n` with standard error sqrt(p(1−p)/n).
    pub fn proportion(k: usize, n: usize) -> Option<Estimate> {
        if n == 0 {
            return None;
        }
        let p = k as f64 / n as f64;
        Some(Estimate {
            mean: p,
            se: (p * (1.0 - p) / n as f64).sqrt(),
            n,
        })
    }
}

/// Number of interviews per firm: ⌈p·|A|⌉, at least one.
pub fn interview_count(p: f64, applicants: usize) -> usize {
    // guard against 0.25 * 60 = 15.000000000000002 style rounding
    let raw = p * applicants as f64;
    let k = (raw - raw.abs() * 1e-12).ceil() as usize;
    k.clamp(1, applicants)
}

/// Top ⌈p·|A|⌉ applicants of a firm's order.
pub fn interview_set(order: &[usize], p: f64) -> Vec<usize> {
    order[..interview_count(p, order.len())].to_vec()
}

/// Fraction of applicants interviewed by no firm.
pub fn systemic_exclusion_rate(interview_sets: &[Vec<usize>], applicants: usize) -> f64 {
    let mut seen = vec![false; applicants];
    for set in interview_sets {
        for &a in set {
            seen[a] = true;
        }
    }
    seen.iter().filter(|s| !**s).count() as f64 / applicants as f64
}

/// Mean rank (1 = top choice) of matched applicants' firms.
pub fn avg_applicant_rank(outcome: &MatchingOutcome) -> Result<f64> {
    let ranks: Vec<usize> = outcome.applicant_rank.iter().flatten().copied().collect();
    if ranks.is_empty() {
        return Err(Error::NoMatches);
    }
    Ok(ranks.iter().sum::<usize>() as f64 / ranks.len() as f64)
}

/// Match probability for human-rating bucket `[lower, lower + 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BucketStat {
    pub lower: i64,
    pub observations: usize,
    pub matched: usize,
    /// `None` when the bucket is empty.
    pub probability: Option<f64>,
    pub se: Option<f64>,
}

/// Bucketed match probability over (applicant, replicate) observations.
/// `human[r][a]` is applicant `a`'s human rating in replicate `r`;
/// unlabeled applicants are skipped.
pub fn match_prob_by_bucket(
    outcomes: &[MatchingOutcome],
    human: &[Vec<Option<f64>>],
    lowest: i64,
    highest: i64,
) -> Vec<BucketStat> {
    let width = (highest - lowest + 1).max(0) as usize;
    let mut obs = vec![0usize; width];
    let mut hit = vec![0usize; width];
    for (o, h) in outcomes.iter().zip(human) {
        for (a, score) in h.iter().enumerate() {
            let Some(s) = score else { continue };
            let b = s.floor() as i64;
            if b < lowest || b > highest {
                continue;
            }
            let i = (b - lowest) as usize;
            obs[i] += 1;
            hit[i] += o.assignment[a].is_some() as usize;
        }
    }
    (0..width)
        .map(|i| {
            let est = Estimate::proportion(hit[i], obs[i]);
            BucketStat {
                lower: lowest + i as i64,
                observations: obs[i],
                matched: hit[i],
                probability: est.map(|e| e.mean),
                se: est.map(|e| e.se),
            }
        })
        .collect()
}

/// Match probability for applicants who applied to exactly `t` firms, and
/// its ratio to the single-application probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BudgetStat {
    pub t: usize,
    pub applicants: usize,
    pub matched: usize,
    pub p_match: Option<f64>,
    pub p_match_se: Option<f64>,
    pub p_relative: Option<f64>,
    pub p_relative_se: Option<f64>,
}

pub(crate) fn budget_stats(counts: &[(usize, usize)]) -> Vec<BudgetStat> {
    let base = counts.get(1).and_then(|&(n, k)| Estimate::proportion(k, n)).filter(|e| e.mean > 0.0);
    counts
        .iter()
        .enumerate()
        .skip(1)
        .map(|(t, &(n, k))| {
            let est = Estimate::proportion(k, n);
            let (rel, rel_se) = match (est, base) {
                (Some(e), Some(b)) => {
                    let r = e.mean / b.mean;
                    let var = (e.se / b.mean).powi(2) + (r * b.se / b.mean).powi(2);
                    (Some(r), Some(var.sqrt()))
                }
                _ => (None, None),
            };
            BudgetStat {
                t,
                applicants: n,
                matched: k,
                p_match: est.map(|e| e.mean),
                p_match_se: est.map(|e| e.se),
                p_relative: rel,
                p_relative_se: rel_se,
            }
        })
        .collect()
}

/// `(applicants, matched)` indexed by budget t.
pub(crate) fn budget_counts(outcomes: &[MatchingOutcome], max_t: usize) -> Vec<(usize, usize)> {
    let mut counts = vec![(0usize, 0usize); max_t + 1];
    for o in outcomes {
        for (a, &t) in o.budgets.iter().enumerate() {
            counts[t].0 += 1;
            counts[t].1 += o.assignment[a].is_some() as usize;
        }
    }
    counts
}

/// P_match(t) / P_match(1) for each budget t present in `outcomes`.
pub fn relative_match_probability(outcomes: &[MatchingOutcome]) -> Result<Vec<(usize, f64)>> {
    let max_t = outcomes.iter().flat_map(|o| o.budgets.iter()).copied().max().unwrap_or(0);
    let stats = budget_stats(&budget_counts(outcomes, max_t));
    match stats.first() {
        Some(s) if s.p_match.unwrap_or(0.0) > 0.0 => {}
        _ => return Err(Error::UndefinedBaseline),
    }
    Ok(stats.iter().filter_map(|s| s.p_relative.map(|r| (s.t, r))).collect())
}
