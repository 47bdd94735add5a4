mod common;

use can_core::corpus::{make_synthetic_corpus, Aspect, EncodedInstance, EvalMode, Overlap, Polarity, SyntheticSpec, Vocabulary};
use can_core::evaluation::*;
use can_core::network::ModelConfig;
use can_core::training::{init_params, EpochRecord, History};
use proptest::prelude::*;
use Polarity::*;

fn polarity() -> impl Strategy<Value = Polarity> {
    prop::sample::select(Polarity::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn alsc_metrics_match_confusion_matrix(
        pairs in prop::collection::vec((polarity(), polarity()), 1..60),
        binary in any::<bool>(),
    ) {
        let mode = if binary { EvalMode::Binary } else { EvalMode::ThreeWay };
        let (p, g): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        match (alsc_metrics(&p, &g, mode), common::alsc_oracle(&p, &g, mode)) {
            (Ok(r), Some(o)) => {
                prop_assert_eq!(r.accuracy, o.accuracy);
                prop_assert_eq!(r.macro_f1, o.macro_f1);
                prop_assert_eq!(r.count, o.count);
                for (c, e) in r.per_class.iter().zip(&o.per_class) {
                    prop_assert_eq!((c.precision, c.recall, c.f1), *e);
                }
                prop_assert!((0.0..=1.0).contains(&r.accuracy) && (0.0..=1.0).contains(&r.macro_f1));
            }
            (Err(EvalError::Empty), None) => {}
            (r, o) => prop_assert!(false, "{:?} vs oracle {}", r.map(|r| r.accuracy), o.is_some()),
        }
    }

    #[test]
    fn acd_metrics_match_counts(
        rows in prop::collection::vec(prop::collection::vec((0.0f64..1.0, any::<bool>()), 5), 1..30),
        threshold in 0.05f64..0.95,
    ) {
        let scores: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|x| x.0).collect()).collect();
        let golds: Vec<Vec<bool>> = rows.iter().map(|r| r.iter().map(|x| x.1).collect()).collect();
        let r = acd_metrics(&scores, &golds, threshold).unwrap();
        prop_assert_eq!((r.precision, r.recall, r.f1), common::acd_oracle(&scores, &golds, threshold));
    }
}

#[test]
fn binary_mode_drops_neutral_golds_from_the_denominator() {
    let r = alsc_metrics(&[Positive, Negative, Positive], &[Positive, Neutral, Negative], EvalMode::Binary).unwrap();
    assert_eq!(r.count, 2);
    assert_eq!(r.accuracy, 0.5);
    let three = alsc_metrics(&[Positive, Negative, Positive], &[Positive, Neutral, Negative], EvalMode::ThreeWay).unwrap();
    assert_eq!(three.count, 3);
}

#[test]
fn absent_class_counts_as_zero_f1() {
    let r = alsc_metrics(&[Positive, Negative], &[Positive, Negative], EvalMode::ThreeWay).unwrap();
    assert_eq!(r.accuracy, 1.0);
    assert!((r.macro_f1 - 2.0 / 3.0).abs() < 1e-15);
}

#[test]
fn detection_threshold_is_inclusive_and_validated() {
    let r = acd_metrics(&[vec![0.5, 0.49]], &[vec![true, true]], 0.5).unwrap();
    assert_eq!((r.true_positives, r.false_negatives), (1, 1));
    let none = acd_metrics(&[vec![0.1, 0.2]], &[vec![false, true]], 0.5).unwrap();
    assert_eq!((none.precision, none.recall, none.f1), (0.0, 0.0, 0.0));
    assert!(matches!(acd_metrics(&[vec![0.1]], &[vec![true]], 1.0), Err(EvalError::Threshold(_))));
}

fn tiny_model(name: &str, mode: EvalMode) -> (can_core::network::ModelParams, Vec<EncodedInstance>) {
    let config = ModelConfig::named(name, mode.num_classes(), 4).unwrap();
    let model = init_params(&config, 10, 3, 0.3, 4, None).unwrap();
    let insts = vec![
        EncodedInstance {
            id: "a".into(),
            token_ids: vec![1, 2, 3],
            aspects: vec![Aspect { category: 0, label: 0 }, Aspect { category: 2, label: 1 }],
            overlap: Overlap::NonOverlapping,
        },
        EncodedInstance { id: "b".into(), token_ids: vec![4, 5], aspects: vec![Aspect { category: 1, label: 1 }], overlap: Overlap::Single },
    ];
    (model, insts)
}

#[test]
fn evaluation_is_consistent_with_predictions() {
    let (model, insts) = tiny_model("M-CAN-2Ro", EvalMode::ThreeWay);
    let preds = predict(&model, &insts).unwrap();
    assert_eq!(preds.len(), 2);
    assert_eq!(preds[0].alsc_pred.len(), 2);
    for p in &preds {
        for (probs, &y) in p.alsc_probs.iter().zip(&p.alsc_pred) {
            assert_eq!(argmax(probs), y);
        }
        assert_eq!(p.acd_scores.as_ref().unwrap().len(), 3);
    }
    let eval = evaluate(&model, &insts, EvalMode::ThreeWay).unwrap();
    assert_eq!(eval.alsc.count, 3);
    assert!(eval.acd.is_some());
    assert_eq!(eval, evaluate(&model, &insts, EvalMode::ThreeWay).unwrap());

    let (single, insts) = tiny_model("AT-CAN-Rs", EvalMode::ThreeWay);
    assert!(evaluate(&single, &insts, EvalMode::ThreeWay).unwrap().acd.is_none());
}

#[test]
fn heatmaps_have_one_row_per_aspect_or_category() {
    let (insts, inventory) = make_synthetic_corpus(&SyntheticSpec { n_sentences: 30, multi_fraction: 1.0, ..Default::default() });
    let vocab = can_core::corpus::build_vocab(&insts);
    let config = ModelConfig::named("M-CAN-2Ro", 3, 4).unwrap();
    let model = init_params(&config, vocab.len(), inventory.len(), 0.3, 1, None).unwrap();
    let two = &insts[..1];
    let alsc = render_heatmaps(&model, &vocab, &inventory, EvalMode::ThreeWay, two, HeatmapTask::Alsc).unwrap();
    assert_eq!(alsc[0].rows.len(), 2);
    let acd = render_heatmaps(&model, &vocab, &inventory, EvalMode::ThreeWay, two, HeatmapTask::Acd).unwrap();
    assert_eq!(acd[0].rows.len(), inventory.len());
    for row in alsc[0].rows.iter().chain(&acd[0].rows) {
        assert_eq!(row.weights.len(), two[0].sentence.tokens.len());
        assert!((row.weights.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
    let html = render_html("x", &[alsc[0].clone(), acd[0].clone()]);
    assert_eq!(html, render_html("x", &[alsc[0].clone(), acd[0].clone()]));
    assert_eq!(html.matches("data-weight").count(), (2 + inventory.len()) * two[0].sentence.tokens.len());

    let small = Vocabulary::from_words(vec!["<unk>".into()]).unwrap();
    assert!(matches!(
        render_heatmaps(&model, &small, &inventory, EvalMode::ThreeWay, two, HeatmapTask::Alsc),
        Err(EvalError::Mismatch(_))
    ));
    let single = init_params(&ModelConfig::named("AT-LSTM", 3, 4).unwrap(), vocab.len(), inventory.len(), 0.3, 1, None).unwrap();
    assert!(render_heatmaps(&single, &vocab, &inventory, EvalMode::ThreeWay, two, HeatmapTask::Acd).is_err());
}

fn history(variant: &str, mode: &str, ro: &[f64]) -> History {
    History {
        meta: vec![("variant".into(), variant.into()), ("mode".into(), mode.into())],
        records: ro
            .iter()
            .enumerate()
            .map(|(i, &r)| EpochRecord { epoch: i + 1, r_o: r, val_acc: 0.5 + 0.01 * i as f64, ..Default::default() })
            .collect(),
    }
}

#[test]
fn comparison_keeps_modes_apart() {
    let runs = vec![
        ("a".to_string(), history("M-CAN-2Ro", "3way", &[1.0, 0.5])),
        ("b".to_string(), history("M-AT-LSTM", "binary", &[1.0])),
        ("c".to_string(), history("AT-CAN-Ro", "3way", &[0.9, 0.8, 0.7])),
    ];
    let cmp = compare_runs(runs).unwrap();
    assert_eq!(cmp.groups.len(), 2);
    assert_eq!(cmp.groups[0].runs.len(), 2);
    assert!(!cmp.flags.is_empty());
    let table = cmp.groups[0].table_tsv();
    assert_eq!(table.lines().count(), 3);
    assert!(table.contains("c\tAT-CAN-Ro\t3way\t3\t3"));
    let series = cmp.groups[0].series_tsv("R_o_component").unwrap();
    assert_eq!(series.lines().nth(3).unwrap(), "3\t\t0.700000");
    assert!(cmp.groups[0].series_tsv("nope").is_err());
    assert!(compare_runs(Vec::new()).is_err());
}

#[test]
fn moving_average_is_trailing() {
    assert_eq!(moving_average(&[4.0, 2.0, 0.0, 2.0], 2), vec![4.0, 3.0, 1.0, 1.0]);
    assert_eq!(moving_average(&[1.0, 2.0, 3.0], 10), vec![1.0, 1.5, 2.0]);
}
