use monoculture::ingest::{MetadataTable, ModelMeta, ResponseDataset};
use monoculture::judge::{group_maximal_judges, judge_report, judged_accuracy, judged_counts, Grouping};
use monoculture::synthetic::{generate_responses, ChoiceCounts, SyntheticEnsembleSpec, SyntheticModel};
use monoculture::correlation::agreement_overall;
use monoculture::{Error, Execution};
use proptest::prelude::*;

fn no_meta(d: &ResponseDataset) -> MetadataTable {
    MetadataTable::new(d.model_ids().iter().map(|id| ModelMeta::new(id.clone(), "")).collect()).unwrap()
}

fn complete_dataset() -> impl Strategy<Value = ResponseDataset> {
    (2usize..6, 1usize..40, 2u8..6).prop_flat_map(|(m, q, k)| {
        (prop::collection::vec(0..k, m * q), prop::collection::vec(0..k, q)).prop_map(move |(cells, key)| {
            ResponseDataset::new(
                (0..m).map(|i| format!("m{i}")).collect(),
                (0..q).map(|i| format!("q{i}")).collect(),
                cells.chunks(q).map(|c| c.iter().map(|&a| Some(a)).collect()).collect(),
                key,
                vec![k; q],
            )
            .unwrap()
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn swapping_roles_shifts_inflation_by_the_accuracy_gap(d in complete_dataset()) {
        let meta = no_meta(&d);
        let acc = d.accuracies();
        for (j, judge) in d.model_ids().iter().enumerate() {
            let rj = judge_report(&d, &meta, judge, Grouping::Company, Execution::Sequential).unwrap();
            for (m, model) in d.model_ids().iter().enumerate() {
                let rm = judge_report(&d, &meta, model, Grouping::Company, Execution::Sequential).unwrap();
                let lhs = rj.row(model).unwrap().inflation - rm.row(judge).unwrap().inflation;
                prop_assert!((lhs - (acc[j] - acc[m])).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn judged_accuracy_is_overall_agreement_without_abstentions(d in complete_dataset()) {
        let ids = d.model_ids();
        for a in ids {
            for b in ids {
                prop_assert_eq!(judged_accuracy(&d, a, b).unwrap(), agreement_overall(&d, a, b).unwrap().value);
            }
        }
    }
}

#[test]
fn identical_models_inflate_to_one() {
    let d = generate_responses(&SyntheticEnsembleSpec {
        models: vec![SyntheticModel::new("a", 0.6, 0.0)],
        items: 2_000,
        choices: ChoiceCounts::Constant(4),
        seed: 1,
    })
    .unwrap();
    let twin = ResponseDataset::new(
        vec!["a".into(), "b".into()],
        d.item_ids().to_vec(),
        (0..2).map(|_| (0..d.num_items()).map(|q| d.answer(0, q)).collect()).collect(),
        d.answer_key().to_vec(),
        d.choice_counts().to_vec(),
    )
    .unwrap();
    let r = judge_report(&twin, &no_meta(&twin), "a", Grouping::Company, Execution::Parallel).unwrap();
    for row in &r.rows {
        assert_eq!(row.judged_accuracy, 1.0);
        assert!((row.inflation - (1.0 - row.true_accuracy)).abs() < 1e-15);
    }
}

fn correlated(seed: u64) -> (ResponseDataset, MetadataTable) {
    let mut models: Vec<SyntheticModel> = (0..12)
        .map(|i| SyntheticModel::new(format!("m{i:02}"), 0.4 + 0.03 * i as f64, 0.6).with_company(format!("c{}", i % 3), 0.5))
        .collect();
    models.push(SyntheticModel::new("judge", 0.85, 0.6).with_company("c0", 0.5));
    let spec = SyntheticEnsembleSpec {
        models,
        items: 14_042,
        choices: ChoiceCounts::Constant(4),
        seed,
    };
    (generate_responses(&spec).unwrap(), spec.metadata().unwrap())
}

#[test]
fn less_accurate_models_gain_on_average() {
    // inflation of a weaker model is positive once its shared-error rate
    // with the judge exceeds acc / (1 - acc)
    let mut models: Vec<SyntheticModel> =
        (0..10).map(|i| SyntheticModel::new(format!("m{i}"), 0.25 + 0.02 * i as f64, 0.95)).collect();
    models.push(SyntheticModel::new("judge", 0.85, 0.95));
    let spec = SyntheticEnsembleSpec {
        models,
        items: 14_042,
        choices: ChoiceCounts::Constant(4),
        seed: 2,
    };
    let (d, meta) = (generate_responses(&spec).unwrap(), spec.metadata().unwrap());
    let r = judge_report(&d, &meta, "judge", Grouping::Company, Execution::Parallel).unwrap();
    let weaker: Vec<f64> = r
        .rows
        .iter()
        .filter(|row| row.true_accuracy < r.judge_accuracy)
        .map(|row| row.inflation)
        .collect();
    assert!(!weaker.is_empty());
    assert!(weaker.iter().sum::<f64>() / weaker.len() as f64 > 0.0);
}

#[test]
fn same_company_models_gain_more() {
    let (d, meta) = correlated(3);
    let r = judge_report(&d, &meta, "judge", Grouping::Company, Execution::Sequential).unwrap();
    let mean = |same: bool| {
        let v: Vec<f64> = r
            .rows
            .iter()
            .filter(|row| row.model_id != "judge" && row.same_group == same)
            .map(|row| row.inflation)
            .collect();
        v.iter().sum::<f64>() / v.len() as f64
    };
    // accuracies are spread evenly across companies, so the means compare at matched accuracy
    assert!(mean(true) > mean(false), "{} vs {}", mean(true), mean(false));
    assert!(r.row("judge").unwrap().same_group);
    let judges = group_maximal_judges(&d, &meta, Grouping::Company);
    assert_eq!(judges.len(), 3);
    assert!(judges.contains(&"judge".to_string()));
}

#[test]
fn abstentions_are_not_graded() {
    let d = ResponseDataset::new(
        vec!["m".into(), "j".into(), "silent".into()],
        (0..4).map(|i| format!("q{i}")).collect(),
        vec![
            vec![Some(0), Some(1), None, Some(3)],
            vec![Some(0), None, Some(2), Some(1)],
            vec![None; 4],
        ],
        vec![0, 1, 2, 3],
        vec![4; 4],
    )
    .unwrap();
    let c = judged_counts(&d, 0, 1);
    assert_eq!((c.matches, c.graded, c.judge_missing), (1, 3, 1));
    assert_eq!(judged_accuracy(&d, "m", "j").unwrap(), 1.0 / 3.0);
    let meta = no_meta(&d);
    let r = judge_report(&d, &meta, "j", Grouping::Company, Execution::Sequential).unwrap();
    assert_eq!(r.judge_missing, 1);
    assert_eq!(r.row("silent").unwrap().judged_accuracy, 0.0);
    assert!(matches!(judged_accuracy(&d, "m", "silent"), Err(Error::EmptyDataset(_))));
    assert!(matches!(
        judge_report(&d, &meta, "silent", Grouping::Company, Execution::Sequential),
        Err(Error::EmptyDataset(_))
    ));
}
