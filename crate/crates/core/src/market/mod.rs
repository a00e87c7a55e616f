//! Hiring-market simulation.
//!
//! Firms rank a shared applicant pool for one job description using model
//! ratings (or at random), interview the top fraction, and then fill
//! capacity through applicant-proposing deferred acceptance. Replicates are
//! seeded from the master seed by index and may run in parallel.

mod config;
mod ensemble;
mod matching;
mod metrics;
mod preferences;

pub use config::{
    load_applicant_scores, ApplicantPool, ApplicantPreferenceSource, ApplicantScores, BudgetRule, MarketConfig,
    PreferenceMethod,
};
pub use ensemble::{
    exclusion_by_model_count, run_ensemble, run_ensemble_with, Market,
    MarketData, MarketEnsembleResult, ReplicateOutcome, ReplicateSummary, SweepPoint,
};
pub use matching::{blocking_pairs, deferred_acceptance, MatchingOutcome};
pub use metrics::{
    avg_applicant_rank, interview_count, BucketStat, BudgetStat, Estimate, interview_set, match_prob_by_bucket, relative_match_probability,
    systemic_exclusion_rate,
};
pub use preferences::{build_firm_preferences, FirmPreferences};
