mod common;

use can_core::autodiff::{finite_diff_check, Tape};
use can_core::corpus::{Aspect, Overlap};
use can_core::network::*;
use can_core::training::init_params;
use proptest::prelude::*;

use common::all_configs;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn matvec(m: &[f64], cols: usize, v: &[f64]) -> Vec<f64> {
    m.chunks(cols).map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

#[test]
fn config_enumeration_covers_named_variants() {
    let configs = all_configs(3, 3);
    for (name, ..) in NAMED_VARIANTS {
        assert!(configs.iter().any(|c| c.variant_name() == Some(name)), "{name}");
    }
    assert!(configs.iter().all(|c| !(c.variant == Architecture::Atae && c.multi_task)));
}

#[test]
fn every_variant_passes_finite_differences() {
    let tokens = [1, 4, 2, 5, 3];
    let mask = [true; 5];
    let aspects = [Aspect { category: 0, label: 2 }, Aspect { category: 2, label: 0 }];
    for (i, config) in all_configs(3, 3).into_iter().enumerate() {
        let model = init_params(&config, 6, 3, 0.5, 11 + i as u64, None).unwrap();
        let input = InstanceInput { token_ids: &tokens, mask: &mask, aspects: &aspects, overlap: Overlap::NonOverlapping };
        let report = finite_diff_check(model.store(), 1e-5, |tape: &mut Tape<'_>| {
            forward(tape, &model, &input, &mut NoNoise).map(|f| f.loss)
        })
        .unwrap();
        assert!(
            report.max_rel_error < 1e-4,
            "{config}: {} at {}[{}]",
            report.max_rel_error,
            report.worst_param,
            report.worst_index
        );
    }
}

/// Straightforward LSTM over the embedded tokens, gates ordered i, f, g, o.
fn lstm_oracle(model: &ModelParams, tokens: &[usize]) -> Vec<Vec<f64>> {
    let d = model.config().hidden;
    let words = model.tensor(WORDS).unwrap();
    let w_ih = model.tensor(LSTM_W_IH).unwrap().data();
    let w_hh = model.tensor(LSTM_W_HH).unwrap().data();
    let bias = model.tensor(LSTM_BIAS).unwrap().data();
    let (mut h, mut c) = (vec![0.0; d], vec![0.0; d]);
    let mut states = Vec::new();
    for &t in tokens {
        let x = words.row(t);
        let a = matvec(w_ih, x.len(), x);
        let b = matvec(w_hh, d, &h);
        let z: Vec<f64> = (0..4 * d).map(|k| a[k] + b[k] + bias[k]).collect();
        for j in 0..d {
            let (i, f, g, o) = (sigmoid(z[j]), sigmoid(z[d + j]), z[2 * d + j].tanh(), sigmoid(z[3 * d + j]));
            c[j] = f * c[j] + i * g;
            h[j] = o * c[j].tanh();
        }
        states.push(h.clone());
    }
    states
}

#[test]
fn encoder_matches_reference_lstm_over_six_steps() {
    let config = ModelConfig::named("AT-LSTM", 3, 4).unwrap();
    let model = init_params(&config, 9, 2, 0.8, 5, None).unwrap();
    let tokens = [3, 1, 8, 8, 0, 5];
    let mut tape = Tape::new(model.store());
    let x = embed(&mut tape, &model, &tokens).unwrap();
    let h = encode(&mut tape, &model, x).unwrap();
    let got = tape.value(h);
    assert_eq!(got.shape(), &[4, 6]);
    for (t, expected) in lstm_oracle(&model, &tokens).iter().enumerate() {
        for (j, e) in expected.iter().enumerate() {
            assert!((got.get2(j, t) - e).abs() < 1e-12, "h[{j}][{t}]");
        }
    }
}

#[test]
fn attention_matches_reference() {
    let config = ModelConfig::named("AT-LSTM", 3, 3).unwrap();
    let model = init_params(&config, 7, 3, 0.9, 2, None).unwrap();
    let tokens = [1, 2, 3, 4];
    let mask = [true, true, true, false];
    let states = lstm_oracle(&model, &tokens);
    let (w_h, w_u, z) = (
        model.tensor(ALSC_W_H).unwrap().data(),
        model.tensor(ALSC_W_U).unwrap().data(),
        model.tensor(ALSC_Z).unwrap().data(),
    );
    let u = model.tensor(ASPECTS).unwrap().row(1).to_vec();
    let wu = matvec(w_u, 3, &u);
    let scores: Vec<f64> = states
        .iter()
        .map(|h| {
            let wh = matvec(w_h, 3, h);
            (0..3).map(|k| z[k] * (wh[k] + wu[k]).tanh()).sum()
        })
        .collect();
    let norm: f64 = scores[..3].iter().map(|s| s.exp()).sum();
    let expected: Vec<f64> = (0..4).map(|l| if mask[l] { scores[l].exp() / norm } else { 0.0 }).collect();

    let mut tape = Tape::new(model.store());
    let x = embed(&mut tape, &model, &tokens).unwrap();
    let h = encode(&mut tape, &model, x).unwrap();
    let a = alsc_attention(&mut tape, &model, h, 1, &mask).unwrap();
    for (g, e) in tape.value(a).data().iter().zip(&expected) {
        assert!((g - e).abs() < 1e-12);
    }
    assert_eq!(tape.value(a).data()[3], 0.0);
}

#[test]
fn lstm_avg_predicts_the_same_for_every_aspect() {
    let config = ModelConfig::named("LSTM", 3, 4).unwrap();
    let model = init_params(&config, 6, 3, 0.5, 1, None).unwrap();
    let aspects = [Aspect { category: 0, label: 0 }, Aspect { category: 1, label: 1 }];
    let input = InstanceInput { token_ids: &[1, 2, 3], mask: &[true; 3], aspects: &aspects, overlap: Overlap::NonOverlapping };
    let mut tape = Tape::new(model.store());
    let out = forward(&mut tape, &model, &input, &mut NoNoise).unwrap().output(&tape);
    assert_eq!(out.alsc_probs.row(0), out.alsc_probs.row(1));
    assert_eq!(out.alsc_attention.row(0), &[1.0 / 3.0; 3]);
}

#[test]
fn single_aspect_sentence_gets_no_orthogonal_penalty() {
    let config = ModelConfig::named("AT-CAN-Ro", 3, 4).unwrap();
    let model = init_params(&config, 6, 3, 0.5, 1, None).unwrap();
    let aspects = [Aspect { category: 2, label: 1 }];
    let input = InstanceInput { token_ids: &[1, 2, 3], mask: &[true; 3], aspects: &aspects, overlap: Overlap::Single };
    let mut tape = Tape::new(model.store());
    let out = forward(&mut tape, &model, &input, &mut NoNoise).unwrap().output(&tape);
    let row = out.alsc_attention.row(0).to_vec();
    assert!((out.reg_value - sparse_reg_value(&row)).abs() < 1e-12);
}

#[test]
fn overlapping_sentence_falls_back_to_sparse_terms() {
    let config = ModelConfig::named("AT-CAN-Ro", 3, 4).unwrap();
    let model = init_params(&config, 6, 3, 0.5, 3, None).unwrap();
    let aspects = [Aspect { category: 0, label: 1 }, Aspect { category: 1, label: 0 }];
    let run = |overlap| {
        let input = InstanceInput { token_ids: &[1, 2, 3, 4], mask: &[true; 4], aspects: &aspects, overlap };
        let mut tape = Tape::new(model.store());
        forward(&mut tape, &model, &input, &mut NoNoise).unwrap().output(&tape)
    };
    let ol = run(Overlap::Overlapping);
    let rows: Vec<Vec<f64>> = (0..2).map(|k| ol.alsc_attention.row(k).to_vec()).collect();
    let sparse: f64 = rows.iter().map(|r| sparse_reg_value(r)).sum();
    assert!((ol.reg_value - sparse).abs() < 1e-12);
    let nol = run(Overlap::NonOverlapping);
    assert!((nol.reg_value - orthogonal_reg_value(&rows, Gram::Rows)).abs() < 1e-12);
}

fn instance_strategy() -> impl Strategy<Value = (Vec<usize>, usize, Vec<(usize, usize)>, u64)> {
    (
        prop::collection::vec(0usize..8, 1..9),
        0usize..4,
        prop::sample::subsequence(vec![0usize, 1, 2, 3], 1..=3).prop_flat_map(|cats| {
            let n = cats.len();
            (Just(cats), prop::collection::vec(0usize..3, n))
        }),
        any::<u64>(),
    )
        .prop_map(|(tokens, pad, (cats, labels), seed)| (tokens, pad, cats.into_iter().zip(labels).collect(), seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn outputs_are_distributions_and_padding_is_inert(
        (tokens, pad, aspects, seed) in instance_strategy(),
        name in prop::sample::select(vec!["LSTM", "AT-CAN-Rs", "ATAE-CAN-Ro", "M-CAN-2Ro", "M-CAN-2Rs"]),
    ) {
        let config = ModelConfig::named(name, 3, 4).unwrap();
        let model = init_params(&config, 8, 4, 0.5, seed, None).unwrap();
        let aspects: Vec<Aspect> = aspects.into_iter().map(|(category, label)| Aspect { category, label }).collect();
        let overlap = if aspects.len() > 1 { Overlap::NonOverlapping } else { Overlap::Single };
        let run = |tokens: &[usize], mask: &[bool]| {
            let input = InstanceInput { token_ids: tokens, mask, aspects: &aspects, overlap };
            let mut tape = Tape::new(model.store());
            forward(&mut tape, &model, &input, &mut NoNoise).unwrap().output(&tape)
        };
        let out = run(&tokens, &vec![true; tokens.len()]);
        for k in 0..aspects.len() {
            let s: f64 = out.alsc_probs.row(k).iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            let a: f64 = out.alsc_attention.row(k).iter().sum();
            prop_assert!((a - 1.0).abs() < 1e-12);
        }
        prop_assert!(out.loss.is_finite() && out.loss >= 0.0);
        prop_assert!(out.reg_value >= 0.0);
        if let Some(scores) = &out.acd_scores {
            prop_assert!(scores.iter().all(|&s| s > 0.0 && s < 1.0));
        }

        let mut padded = tokens.clone();
        padded.extend(std::iter::repeat(0).take(pad));
        let mask: Vec<bool> = (0..padded.len()).map(|i| i < tokens.len()).collect();
        let p = run(&padded, &mask);
        prop_assert!((p.loss - out.loss).abs() < 1e-10);
        for k in 0..aspects.len() {
            prop_assert!(p.alsc_attention.row(k)[tokens.len()..].iter().all(|&w| w == 0.0));
            for (x, y) in p.alsc_attention.row(k).iter().zip(out.alsc_attention.row(k)) {
                prop_assert!((x - y).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn regularizers_are_nonnegative_and_vanish_on_disjoint_one_hots(
        l in 2usize..12,
        seed in any::<u64>(),
    ) {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let k = rng.gen_range(1..=l.min(5));
        let rows: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let raw: Vec<f64> = (0..l).map(|_| rng.gen_range(0.0..1.0)).collect();
                let s: f64 = raw.iter().sum();
                raw.iter().map(|v| v / s).collect()
            })
            .collect();
        prop_assert!(orthogonal_reg_value(&rows, Gram::Rows) >= 0.0);
        prop_assert!(rows.iter().all(|r| sparse_reg_value(r) >= 0.0 && sparse_reg_value(r) < 1.0));
        let one_hots: Vec<Vec<f64>> = (0..k).map(|i| (0..l).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        prop_assert_eq!(orthogonal_reg_value(&one_hots, Gram::Rows), 0.0);
    }
}
