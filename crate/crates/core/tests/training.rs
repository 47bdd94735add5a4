use can_core::autodiff::{ParamStore, Tape, Tensor};
use can_core::corpus::{build_vocab, encode, make_synthetic_corpus, Aspect, EncodedInstance, EvalMode, Overlap, SyntheticSpec};
use can_core::evaluation::evaluate;
use can_core::network::{forward, InstanceInput, ModelConfig, ModelParams, NoNoise, Regularizer, ALSC_Z};
use can_core::training::*;
use proptest::prelude::*;

fn corpus(n: usize, seed: u64) -> (Vec<EncodedInstance>, usize, usize) {
    let (insts, inventory) = make_synthetic_corpus(&SyntheticSpec { n_sentences: n, seed, ..Default::default() });
    let vocab = build_vocab(&insts);
    let enc = encode(&insts, &vocab, &inventory, EvalMode::Binary).unwrap();
    (enc, vocab.len(), inventory.len())
}

fn quick_config(seed: u64, epochs: usize) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.05,
        batch_size: 8,
        dropout: 0.3,
        max_epochs: epochs,
        patience: epochs,
        seed,
        init_range: 0.1,
        ..Default::default()
    }
}

fn model(name: &str, vocab: usize, cats: usize, seed: u64) -> ModelParams {
    init_params(&ModelConfig::named(name, 2, 8).unwrap(), vocab, cats, 0.1, seed, None).unwrap()
}

#[test]
fn identical_inputs_give_identical_histories_and_parameters() {
    let (data, v, n) = corpus(24, 3);
    let run = || train(&data[..18], &data[18..], model("M-CAN-2Ro", v, n, 1), &quick_config(5, 4), EvalMode::Binary, vec![]).unwrap();
    let (a, b) = (run(), run());
    assert_eq!(a.history.to_tsv(), b.history.to_tsv());
    assert_eq!(a.best.store(), b.best.store());
    assert_eq!(a.fingerprint, b.fingerprint);
    let other = train(&data[..18], &data[18..], model("M-CAN-2Ro", v, n, 1), &quick_config(6, 4), EvalMode::Binary, vec![]).unwrap();
    assert_ne!(a.history.to_tsv(), other.history.to_tsv());
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let (data, v, n) = corpus(20, 4);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            train(&data[..15], &data[15..], model("AT-CAN-Ro", v, n, 2), &quick_config(1, 3), EvalMode::Binary, vec![]).unwrap()
        })
    };
    let (one, many) = (run(1), run(4));
    assert_eq!(one.history, many.history);
    assert_eq!(one.last.store(), many.last.store());
}

#[test]
fn one_full_batch_epoch_is_an_adagrad_step_on_the_mean_gradient() {
    let (data, v, n) = corpus(6, 9);
    let init = model("M-CAN-2Rs", v, n, 3);
    let cfg = TrainConfig { dropout: 0.0, batch_size: 6, max_epochs: 1, patience: 1, learning_rate: 0.02, ..quick_config(0, 1) };
    let out = train(&data, &data, init.clone(), &cfg, EvalMode::Binary, vec![]).unwrap();

    let mut store: ParamStore = init.store().clone();
    store.zero_grad();
    for inst in &data {
        let mask = vec![true; inst.token_ids.len()];
        let input = InstanceInput { token_ids: &inst.token_ids, mask: &mask, aspects: &inst.aspects, overlap: inst.overlap };
        let mut tape = Tape::new(init.store());
        let f = forward(&mut tape, &init, &input, &mut NoNoise).unwrap();
        store.accumulate(&tape.backward(f.loss).unwrap().params, 1.0 / data.len() as f64);
    }
    for ((_, expected), (_, got)) in store.iter().zip(out.last.store().iter()) {
        let before = init.store().iter().find(|(_, p)| p.name == expected.name).unwrap().1;
        for ((&g, &theta0), &theta) in expected.grad.data().iter().zip(before.value.data()).zip(got.value.data()) {
            let want = if g == 0.0 { theta0 } else { theta0 - 0.02 * g / (g.abs() + 1e-8) };
            assert!((theta - want).abs() < 1e-12, "{}: {theta} vs {want}", expected.name);
        }
    }
}

#[test]
fn history_terms_are_nonnegative_and_finite() {
    let (data, v, n) = corpus(20, 2);
    let out = train(&data[..16], &data[16..], model("M-CAN-2Ro", v, n, 4), &quick_config(2, 5), EvalMode::Binary, vec![]).unwrap();
    assert_eq!(out.history.records.len(), 5);
    for r in &out.history.records {
        for v in [r.train_loss, r.l_a, r.l_b, r.r_total, r.r_s, r.r_o] {
            assert!(v.is_finite() && v >= 0.0);
        }
    }
    let text = out.history.to_tsv();
    assert_eq!(History::from_tsv(&text, "h").unwrap().records.len(), 5);
}

#[test]
fn stops_after_patience_epochs_without_improvement() {
    let (data, v, n) = corpus(12, 1);
    let cfg = TrainConfig { learning_rate: 1e-300, patience: 3, max_epochs: 20, ..quick_config(0, 20) };
    let out = train(&data[..8], &data[8..], model("AT-LSTM", v, n, 0), &cfg, EvalMode::Binary, vec![]).unwrap();
    assert_eq!(out.best_epoch, 0);
    assert_eq!(out.epochs_run, 3);
    assert_eq!(out.history.records.len(), 3);
}

#[test]
fn restored_checkpoint_reproduces_its_metric() {
    let (insts, inventory) = make_synthetic_corpus(&SyntheticSpec { n_sentences: 20, seed: 8, ..Default::default() });
    let vocab = build_vocab(&insts);
    let data = encode(&insts, &vocab, &inventory, EvalMode::Binary).unwrap();
    let cfg = quick_config(3, 4);
    let out = train(&data[..15], &data[15..], model("M-CAN-2Ro", vocab.len(), inventory.len(), 6), &cfg, EvalMode::Binary, vec![]).unwrap();
    let ck = Checkpoint {
        epoch: out.best_epoch,
        metric: out.best_eval.key(),
        params: out.best,
        train_config: cfg,
        fingerprint: out.fingerprint,
        mode: EvalMode::Binary,
        vocab,
        categories: inventory,
    };
    let back = Checkpoint::from_text(&ck.to_text(), "ck").unwrap();
    assert_eq!(evaluate(&back.params, &data[15..], EvalMode::Binary).unwrap().key(), ck.metric);
}

#[test]
fn non_finite_loss_aborts_with_location() {
    let (data, v, n) = corpus(10, 1);
    let mut m = model("AT-LSTM", v, n, 0);
    m.tensor_mut(ALSC_Z).unwrap().fill(f64::NAN);
    let err = train(&data[..8], &data[8..], m, &quick_config(0, 2), EvalMode::Binary, vec![]).unwrap_err();
    match err {
        TrainError::NonFinite { epoch, batch, term, .. } => {
            assert_eq!((epoch, batch), (1, 0));
            assert_eq!(term, "L_a");
        }
        other => panic!("unexpected {other}"),
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    for bad in [
        TrainConfig { learning_rate: 0.0, ..Default::default() },
        TrainConfig { dropout: 1.0, ..Default::default() },
        TrainConfig { patience: 101, ..Default::default() },
        TrainConfig { batch_size: 0, ..Default::default() },
    ] {
        assert!(bad.validate().is_err());
    }
    let (data, v, n) = corpus(4, 1);
    assert!(train(&data, &[], model("AT-LSTM", v, n, 0), &TrainConfig::default(), EvalMode::Binary, vec![]).is_err());
}

#[test]
fn init_is_deterministic_and_within_range() {
    let config = ModelConfig::named("M-CAN-2Ro", 3, 5).unwrap();
    let a = init_params(&config, 12, 4, 0.01, 9, None).unwrap();
    assert_eq!(a, init_params(&config, 12, 4, 0.01, 9, None).unwrap());
    assert_ne!(a, init_params(&config, 12, 4, 0.01, 10, None).unwrap());
    let pretrained = Tensor::filled(&[12, 5], 0.5);
    let b = init_params(&config, 12, 4, 0.01, 9, Some(&pretrained)).unwrap();
    assert_eq!(b.tensor(can_core::network::WORDS).unwrap(), &pretrained);
    assert!(init_params(&config, 12, 4, 0.01, 9, Some(&Tensor::zeros(&[3, 5]))).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adagrad_accumulators_never_decrease(grads in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..12)) {
        let mut store = ParamStore::new();
        store.insert("w", Tensor::zeros(&[3]), true).unwrap();
        let mut state = AdagradState::new(&store);
        let mut prev = vec![0.0; 3];
        for g in grads {
            store.iter_mut().next().unwrap().grad = Tensor::vector(g);
            adagrad_step(&mut store, &mut state, 0.01, 1e-8);
            let acc = state.accumulators[0].data().to_vec();
            prop_assert!(acc.iter().zip(&prev).all(|(a, p)| a >= p));
            prev = acc;
        }
    }

    #[test]
    fn zero_lambda_loss_ignores_the_regularizer(
        tokens in prop::collection::vec(0usize..6, 2..7),
        seed in any::<u64>(),
        reg in prop::sample::select(vec![Regularizer::Rs, Regularizer::Ro]),
    ) {
        let base = ModelConfig { lambda: 0.0, ..ModelConfig::named("M-AT-LSTM", 3, 4).unwrap() };
        let with = ModelConfig { reg_alsc: reg, reg_acd: reg, ..base.clone() };
        let plain = init_params(&base, 6, 3, 0.3, seed, None).unwrap();
        let regd = ModelParams::from_store(with, plain.store().clone()).unwrap();
        let aspects = [Aspect { category: 0, label: 1 }, Aspect { category: 2, label: 2 }];
        let mask = vec![true; tokens.len()];
        let input = InstanceInput { token_ids: &tokens, mask: &mask, aspects: &aspects, overlap: Overlap::NonOverlapping };
        let loss = |m: &ModelParams| {
            let mut tape = Tape::new(m.store());
            let f = forward(&mut tape, m, &input, &mut NoNoise).unwrap();
            tape.value(f.loss).data()[0]
        };
        prop_assert_eq!(loss(&plain), loss(&regd));
    }

    #[test]
    fn dropout_is_identity_at_inference_and_scales_survivors(seed in any::<u64>(), p in 0.0f64..0.95) {
        use rand::SeedableRng;
        let x = Tensor::vector((0..50).map(|i| i as f64 + 1.0).collect());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        prop_assert_eq!(&dropout(&x, p, false, &mut rng), &x);
        let y = dropout(&x, p, true, &mut rng);
        for (a, b) in x.data().iter().zip(y.data()) {
            prop_assert!(*b == 0.0 || (b - a / (1.0 - p)).abs() < 1e-12);
        }
    }
}

