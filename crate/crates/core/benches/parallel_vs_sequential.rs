use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use monoculture::correlation::{agreement_matrix, MetricKind};
use monoculture::market::{run_ensemble_with, MarketConfig, MarketData, PreferenceMethod};
use monoculture::synthetic::{generate_ratings, generate_responses, ChoiceCounts, SyntheticEnsembleSpec, SyntheticModel, SyntheticRater, SyntheticRatingSpec};
use monoculture::ingest::RatingScale;
use monoculture::Execution;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn agreement(c: &mut Criterion) {
    let spec = SyntheticEnsembleSpec {
        models: (0..71).map(|i| SyntheticModel::new(format!("m{i}"), 0.3 + 0.008 * i as f64, 0.4)).collect(),
        items: 14_042,
        choices: ChoiceCounts::Constant(4),
        seed: 1,
    };
    let d = generate_responses(&spec).unwrap();
    let mut g = c.benchmark_group("agreement_matrix_71x14042");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| agreement_matrix(&d, MetricKind::AgreementBothWrong, exec).unwrap())
        });
    }
    g.finish();
}

fn market(c: &mut Criterion) {
    let spec = SyntheticRatingSpec {
        models: (0..20)
            .map(|i| SyntheticRater::new(format!("m{i:02}"), 1.0, 1.0).with_company(format!("c{}", i % 5), 0.8))
            .collect(),
        resumes: 60,
        jobs: 10,
        labeled_resumes: 30,
        labeled_jobs: 10,
        true_mean: 5.5,
        true_sd: 2.0,
        scale: RatingScale::default(),
        round: true,
        clamp: true,
        seed: 2,
    };
    let r = generate_ratings(&spec).unwrap();
    let meta = spec.metadata().unwrap();
    let data = MarketData {
        ratings: Some(&r),
        meta: Some(&meta),
        applicant_scores: None,
    };
    let mut cfg = MarketConfig::new(PreferenceMethod::RandomLlms, 30);
    cfg.replicates = 500;
    let mut g = c.benchmark_group("market_random_llms_30x60x500");
    g.sample_size(10);
    for (name, exec) in MODES {
        g.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| run_ensemble_with(&cfg, data, exec).unwrap())
        });
    }
    g.finish();
}

criterion_group!(benches, agreement, market);
criterion_main!(benches);
