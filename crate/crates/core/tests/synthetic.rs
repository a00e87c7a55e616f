use monoculture::correlation::{agreement_both_wrong, pair_counts, residual_correlation};
use monoculture::ingest::RatingScale;
use monoculture::synthetic::{
    expected_blended_agreement, expected_conditional_agreement, generate_ratings, generate_responses, ChoiceCounts,
    SyntheticEnsembleSpec, SyntheticModel, SyntheticRater, SyntheticRatingSpec,
};
use monoculture::Error;

fn spec(models: Vec<SyntheticModel>, k: u8, seed: u64) -> SyntheticEnsembleSpec {
    SyntheticEnsembleSpec {
        models,
        items: 14_042,
        choices: ChoiceCounts::Constant(k),
        seed,
    }
}

#[test]
fn closed_form_values() {
    assert!((expected_conditional_agreement(0.0, 0.0, 4) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(expected_conditional_agreement(1.0, 1.0, 7), 1.0);
    assert!((expected_conditional_agreement(0.6, 0.5, 4) - (0.3 + 0.7 / 3.0)).abs() < 1e-15);
    // no company weight reduces to the single-attractor form
    let plain = expected_conditional_agreement(0.6, 0.5, 4);
    assert!((expected_blended_agreement(0.6, 0.0, 0.5, 0.0, false, 4) - plain).abs() < 1e-15);
}

#[test]
fn accuracy_and_pairwise_agreement_within_three_se() {
    let models: Vec<SyntheticModel> = (0..8)
        .map(|i| {
            SyntheticModel::new(format!("m{i}"), 0.35 + 0.05 * i as f64, 0.1 * i as f64)
                .with_company(format!("c{}", i % 3), 0.5)
        })
        .collect();
    let s = spec(models, 4, 12);
    let d = generate_responses(&s).unwrap();
    let q = d.num_items() as f64;
    for (i, m) in s.models.iter().enumerate() {
        let se = (m.accuracy * (1.0 - m.accuracy) / q).sqrt();
        assert!((d.accuracy_at(i) - m.accuracy).abs() < 3.0 * se, "accuracy of {}", m.id);
    }
    for i in 0..8 {
        for j in i + 1..8 {
            let c = pair_counts(&d, i, j);
            let expected = s.expected_both_wrong(i, j);
            let got = c.both_wrong_agree as f64 / c.both_wrong as f64;
            let se = (expected * (1.0 - expected) / c.both_wrong as f64).sqrt();
            assert!((got - expected).abs() < 3.0 * se, "pair {i},{j}: {got} vs {expected}");
        }
    }
}

#[test]
fn full_attraction_and_perfect_models() {
    let d = generate_responses(&spec(
        vec![
            SyntheticModel::new("a", 0.4, 1.0),
            SyntheticModel::new("b", 0.5, 1.0),
            SyntheticModel::new("key", 1.0, 0.0),
        ],
        4,
        13,
    ))
    .unwrap();
    assert_eq!(agreement_both_wrong(&d, "a", "b").unwrap().value, 1.0);
    let key: Vec<u8> = d.row(2).to_vec();
    assert_eq!(key, d.answer_key());
}

#[test]
fn deterministic_and_independent_of_model_order() {
    let models: Vec<SyntheticModel> = (0..5).map(|i| SyntheticModel::new(format!("m{i}"), 0.5, 0.3)).collect();
    let a = generate_responses(&spec(models.clone(), 5, 14)).unwrap();
    let b = generate_responses(&spec(models.clone(), 5, 14)).unwrap();
    assert_eq!(a, b);
    let mut reversed = models;
    reversed.reverse();
    let r = generate_responses(&spec(reversed, 5, 14)).unwrap();
    for (i, id) in a.model_ids().iter().enumerate() {
        assert_eq!(a.row(i), r.row(r.index_of(id).unwrap()));
    }
    let other = generate_responses(&spec((0..5).map(|i| SyntheticModel::new(format!("m{i}"), 0.5, 0.3)).collect(), 5, 15)).unwrap();
    assert_ne!(a, other);
}

fn rating_spec(models: Vec<SyntheticRater>, round: bool) -> SyntheticRatingSpec {
    SyntheticRatingSpec {
        models,
        resumes: 30,
        jobs: 15,
        labeled_resumes: 30,
        labeled_jobs: 15,
        true_mean: 5.0,
        true_sd: 2.0,
        scale: RatingScale::default(),
        round,
        clamp: round,
        seed: 16,
    }
}

#[test]
fn noiseless_raters_reproduce_labels() {
    let r = generate_ratings(&rating_spec(vec![SyntheticRater::new("a", 0.0, 0.0), SyntheticRater::new("b", 0.0, 0.0)], true)).unwrap();
    assert_eq!(r.row(0), r.human_scores());
    assert!(matches!(residual_correlation(&r, "a", "b"), Err(Error::ZeroVariance(_))));
}

#[test]
fn residual_correlation_matches_closed_form_without_rounding() {
    let s = rating_spec(
        vec![
            SyntheticRater::new("a", 1.0, 1.0).with_company("x", 0.5),
            SyntheticRater::new("b", 1.0, 1.0).with_company("x", 0.5),
            SyntheticRater::new("c", 0.0, 1.0),
            SyntheticRater::new("d", 0.0, 1.0),
        ],
        false,
    );
    let r = generate_ratings(&s).unwrap();
    for (a, b, i, j) in [("a", "b", 0, 1), ("c", "d", 2, 3), ("a", "c", 0, 2)] {
        let got = residual_correlation(&r, a, b).unwrap().value;
        assert!((got - s.expected_residual_correlation(i, j)).abs() < 0.1, "{a}-{b}: {got}");
    }
    assert!((s.expected_residual_correlation(0, 1) - 1.25 / 2.25).abs() < 1e-12);
}
