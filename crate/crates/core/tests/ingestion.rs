use std::fs;
use std::path::Path;

use monoculture::ingest::{
    load_metadata, load_ratings, load_responses, model_accuracy, save_metadata, save_ratings, save_responses, Format,
    MetadataTable, ModelMeta, RatingDataset, RatingScale, ResponseDataset,
};
use monoculture::synthetic::{generate_responses, ChoiceCounts, SyntheticEnsembleSpec, SyntheticModel};
use monoculture::Error;
use proptest::prelude::*;

fn roundtrip_bytes(d: &ResponseDataset, dir: &Path, format: Format) -> (Vec<u8>, Vec<u8>) {
    let ext = match format {
        Format::Csv => "csv",
        Format::Jsonl => "jsonl",
    };
    let (a, k) = (dir.join(format!("a.{ext}")), dir.join(format!("k.{ext}")));
    save_responses(d, &a, &k, format).unwrap();
    (fs::read(&a).unwrap(), fs::read(&k).unwrap())
}

#[test]
fn large_export_round_trips_byte_identically() {
    let spec = SyntheticEnsembleSpec {
        models: (0..71)
            .map(|i| SyntheticModel::new(format!("model-{i:02}"), 0.3 + 0.009 * i as f64, 0.4))
            .collect(),
        items: 14_042,
        choices: ChoiceCounts::Constant(4),
        seed: 1,
    };
    let d = generate_responses(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let first = roundtrip_bytes(&d, dir.path(), Format::Csv);
    let loaded = load_responses(&dir.path().join("a.csv"), &dir.path().join("k.csv"), Format::Csv).unwrap();
    assert_eq!(loaded, d);
    let other = tempfile::tempdir().unwrap();
    assert_eq!(roundtrip_bytes(&loaded, other.path(), Format::Csv), first);
}

#[test]
fn generated_accuracy_concentrates() {
    let spec = SyntheticEnsembleSpec {
        models: vec![SyntheticModel::new("a", 0.7, 0.5)],
        items: 14_042,
        choices: ChoiceCounts::Constant(4),
        seed: 9,
    };
    let d = generate_responses(&spec).unwrap();
    assert!((model_accuracy(&d, "a").unwrap() - 0.7).abs() < 0.02);
}

#[test]
fn letters_trailing_comma_and_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let k = dir.path().join("k.csv");
    fs::write(&k, "item_id,correct_answer,num_choices\nq1,B,4\nq2,0,2\n").unwrap();
    fs::write(&a, "model_id,item_id,answer,\nm1,q1,B,\nm1,q2,NA,\nm2,q1,3,\n").unwrap();
    let d = load_responses(&a, &k, Format::Csv).unwrap();
    assert_eq!(d.answer_key(), &[1, 0]);
    assert_eq!(d.answer(0, 0), Some(1));
    assert_eq!(d.answer(0, 1), None);
    assert_eq!(d.answer(1, 1), None);
    assert_eq!(model_accuracy(&d, "m1").unwrap(), 0.5);
    assert_eq!(model_accuracy(&d, "m2").unwrap(), 0.0);
}

#[test]
fn answer_out_of_range_names_cell() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let k = dir.path().join("k.csv");
    fs::write(&k, "item_id,correct_answer,num_choices\nq1,0,4\n").unwrap();
    fs::write(&a, "model_id,item_id,answer\nm1,q1,4\n").unwrap();
    match load_responses(&a, &k, Format::Csv) {
        Err(Error::Schema { location, message }) => {
            assert!(location.ends_with(":2"), "{location}");
            assert!(message.contains("m1") && message.contains("q1"), "{message}");
        }
        other => panic!("expected schema error, got {other:?}"),
    }
}

fn rating_fixture() -> RatingDataset {
    let models: Vec<String> = (0..20).map(|i| format!("r{i}")).collect();
    let pairs: Vec<(String, String)> = (0..120)
        .flat_map(|r| (0..15).map(move |j| (format!("res{r}"), format!("job{j}"))))
        .collect();
    let scores = (0..20)
        .map(|m| {
            (0..pairs.len())
                .map(|p| if (m + p) % 97 == 0 { None } else { Some(((m * 7 + p * 3) % 10 + 1) as f64) })
                .collect()
        })
        .collect();
    let human = (0..pairs.len())
        .map(|p| (p % 4 == 0).then_some((p % 9 + 1) as f64 + 0.5))
        .collect();
    RatingDataset::new(models, pairs, scores, Some(human), RatingScale::default()).unwrap()
}

#[test]
fn ratings_round_trip_keeps_missing_cells() {
    let r = rating_fixture();
    assert_eq!(r.num_pairs(), 1800);
    assert_eq!(r.labeled_count(), 450);
    let dir = tempfile::tempdir().unwrap();
    let (a, h) = (dir.path().join("r.csv"), dir.path().join("h.csv"));
    save_ratings(&r, &a, Some(&h), Format::Csv).unwrap();
    let back = load_ratings(&a, Some(&h), Format::Csv, RatingScale::default()).unwrap();
    assert_eq!(back, r);
    assert_eq!(back.score(0, 97), None);
}

#[test]
fn rating_above_scale_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("r.csv");
    fs::write(&a, "model_id,resume_id,job_id,score\nm,r1,j1,11\n").unwrap();
    assert!(matches!(
        load_ratings(&a, None, Format::Csv, RatingScale::default()),
        Err(Error::Schema { .. })
    ));
}

#[test]
fn metadata_round_trip_and_cross_reference() {
    let mut nova = ModelMeta::new("Nova-Pro", "Nova");
    nova.correlation_with_human_score = Some(0.73);
    nova.latest_model = Some(true);
    let mut other = ModelMeta::new("ghost", "Acme");
    other.params_billions = Some(7.0);
    let table = MetadataTable::new(vec![nova, other]).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("meta.csv");
    save_metadata(&table, &p).unwrap();
    let mut back = load_metadata(&p).unwrap();
    assert_eq!(back.models(), table.models());
    let ids = vec!["Nova-Pro".to_string()];
    let warnings = back.cross_reference(&[&ids]);
    assert_eq!(warnings.len(), 1);
    assert!(warnings[0].contains("ghost"));
    assert!(back.get("ghost").is_some());
}

fn small_dataset() -> impl Strategy<Value = ResponseDataset> {
    (1usize..5, 1usize..8).prop_flat_map(|(m, q)| {
        let ks = prop::collection::vec(2u8..6, q);
        ks.prop_flat_map(move |ks| {
            let key: Vec<BoxedStrategy<u8>> = ks.iter().map(|&k| (0..k).boxed()).collect();
            let cells: Vec<BoxedStrategy<Option<u8>>> = (0..m)
                .flat_map(|_| ks.iter().map(|&k| prop::option::weighted(0.8, 0..k).boxed()))
                .collect();
            let ks = ks.clone();
            (key, cells).prop_map(move |(key, cells)| {
                let q = ks.len();
                ResponseDataset::new(
                    (0..m).map(|i| format!("m{i}")).collect(),
                    (0..q).map(|i| format!("item,{i}")).collect(),
                    cells.chunks(q).map(|c| c.to_vec()).collect(),
                    key,
                    ks.clone(),
                )
                .unwrap()
            })
        })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn save_load_is_identity(d in small_dataset(), jsonl in any::<bool>()) {
        let format = if jsonl { Format::Jsonl } else { Format::Csv };
        let dir = tempfile::tempdir().unwrap();
        let bytes = roundtrip_bytes(&d, dir.path(), format);
        let ext = if jsonl { "jsonl" } else { "csv" };
        let back = load_responses(&dir.path().join(format!("a.{ext}")), &dir.path().join(format!("k.{ext}")), format).unwrap();
        prop_assert_eq!(&back, &d);
        let again = tempfile::tempdir().unwrap();
        prop_assert_eq!(roundtrip_bytes(&back, again.path(), format), bytes);
    }

    #[test]
    fn accuracy_ignores_item_order(d in small_dataset(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        use rand::SeedableRng;
        let mut perm: Vec<usize> = (0..d.num_items()).collect();
        perm.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
        let p = d.permute_items(&perm).unwrap();
        prop_assert_eq!(p.accuracies(), d.accuracies());
    }
}
