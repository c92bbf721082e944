use proptest::prelude::*;
use tocount_core::energy::{fit, integrate_power, tradeoff_select, Candidate, PowerTrace};
use tocount_core::model::feed_forward;
use tocount_core::oracle::OracleNetwork;
use tocount_core::{
    analyze, count_model, flops_model, model_family, Activation, AnalysisLevel, CostTable,
    FloatFormat, LayerSpec, LossKind, ModelSpec, ToCount, TrainingConfig,
};

const TRAINING: TrainingConfig = TrainingConfig {
    dataset_len: 1372,
    batch_size: 64,
    epochs: 2000,
};

fn any_activation() -> impl Strategy<Value = Activation> {
    prop::sample::select(Activation::ALL.to_vec())
}

/// Dense chains: depth 1..=4, every width 1..=8.
fn dense_model() -> impl Strategy<Value = ModelSpec> {
    (
        prop::collection::vec(1usize..=8, 2..=5),
        prop::collection::vec(any_activation(), 4),
    )
        .prop_map(|(widths, acts)| {
            let layers = widths
                .windows(2)
                .zip(acts)
                .map(|(w, a)| LayerSpec::fully_connected(w[0], w[1], a))
                .collect();
            ModelSpec::new("dense", FloatFormat::FP32, layers, LossKind::Mse, TRAINING).unwrap()
        })
}

/// Convolution chains with matching channels.
fn conv_model() -> impl Strategy<Value = ModelSpec> {
    prop::collection::vec(
        (1usize..=6, 1usize..=5, 1usize..=4, any_activation()),
        1..=3,
    )
    .prop_map(|spec| {
        let mut c_in = 3;
        let layers = spec
            .into_iter()
            .map(|(m, k, c_out, a)| {
                let l = LayerSpec::convolutional(m, k, c_in, c_out, a);
                c_in = c_out;
                l
            })
            .collect();
        ModelSpec::new("conv", FloatFormat::FP16, layers, LossKind::Mse, TRAINING).unwrap()
    })
}

proptest! {
    #[test]
    fn documents_round_trip(model in prop_oneof![dense_model(), conv_model()]) {
        let doc = model.to_document();
        let parsed = ModelSpec::parse(&doc).unwrap();
        prop_assert_eq!(&parsed, &model);
        prop_assert_eq!(ModelSpec::parse(&doc).unwrap(), parsed);
    }

    #[test]
    fn family_members_are_valid(
        base_width in 1usize..=8,
        lo in 1usize..=20,
        span in 0usize..=6,
        acts in prop::collection::vec(any_activation(), 1..=4),
    ) {
        let base = feed_forward("b", 4, base_width, 3, 1, Activation::Sigmoid, Activation::Sigmoid, TRAINING).unwrap();
        let family = model_family(&base, lo..=lo + span, &acts).unwrap();
        prop_assert_eq!(family.len(), (span + 1) * acts.len());
        for m in &family {
            prop_assert_eq!(&ModelSpec::parse(&m.to_document()).unwrap(), m);
        }
    }

    #[test]
    fn counter_agrees_with_execution(
        model in dense_model(),
        seed in any::<u64>(),
    ) {
        let counts = count_model(&model, AnalysisLevel::Training).unwrap();
        let inputs = match model.layers()[0].kind {
            tocount_core::LayerKind::FullyConnected { inputs, .. } => inputs,
            _ => unreachable!(),
        };
        let outputs = model.output_layer().output_units();
        let x: Vec<f64> = (0..inputs).map(|i| ((seed >> (i % 60)) & 7) as f64 / 7.0 - 0.5).collect();
        let y = vec![0.25; outputs];
        let mut net = OracleNetwork::from_model(&model).unwrap();
        let (_, fwd) = net.run_forward(&x).unwrap();
        prop_assert_eq!(fwd, counts.forward_total);
        let tally = net.run_training_step(&x, &y, 0.1).unwrap();
        prop_assert_eq!(tally.loss, counts.loss);
        for (l, layer) in counts.layers.iter().enumerate() {
            prop_assert_eq!(tally.forward[l], layer.forward);
            prop_assert_eq!(tally.backprop[l], layer.backprop);
            prop_assert_eq!(tally.update[l], layer.update_per_batch);
        }
        prop_assert_eq!(
            tally.total,
            counts.forward_total + counts.loss + counts.backprop_total + counts.update_per_batch_total
        );
    }

    #[test]
    fn flops_ignore_activation(width in 1usize..=32, level in prop::sample::select(vec![AnalysisLevel::Inference, AnalysisLevel::Training])) {
        let base = feed_forward("b", 4, 4, 3, 1, Activation::Sigmoid, Activation::Sigmoid, TRAINING).unwrap();
        let family = model_family(&base, [width], &Activation::ALL).unwrap();
        let first = flops_model(&family[0], level).unwrap();
        for m in &family[1..] {
            prop_assert_eq!(flops_model(m, level).unwrap(), first);
        }
    }

    #[test]
    fn polylines_integrate_exactly(
        steps in prop::collection::vec((0.001f64..5.0, 0.0f64..300.0), 1..100),
        p0 in 0.0f64..300.0,
    ) {
        let mut samples = vec![(0.0, p0)];
        let mut analytic = 0.0;
        for &(dt, p) in &steps {
            let &(t, prev) = samples.last().unwrap();
            // area of the linear piece: rectangle under the lower end plus triangle
            analytic += dt * prev.min(p) + dt * (p - prev).abs() / 2.0;
            samples.push((t + dt, p));
        }
        let got = integrate_power(&PowerTrace::new(samples).unwrap());
        prop_assert!(((got - analytic) / analytic.max(1e-300)).abs() <= 1e-12 || (got - analytic).abs() < 1e-12);
    }

    #[test]
    fn tradeoff_extremes_ignore_the_other_axis(
        energy in prop::collection::vec(0.0f64..1e4, 1..12),
        loss_a in prop::collection::vec(0.0f64..10.0, 12),
        loss_b in prop::collection::vec(0.0f64..10.0, 12),
    ) {
        let with = |losses: &[f64]| -> Vec<Candidate> {
            energy.iter().zip(losses).enumerate().map(|(i, (&e, &l))| Candidate::new(i.to_string(), e, l)).collect()
        };
        let (a, b) = (with(&loss_a), with(&loss_b));
        prop_assert_eq!(&tradeoff_select(&a, 1.0).unwrap().model_id, &tradeoff_select(&b, 1.0).unwrap().model_id);

        // swap roles: same losses, different energies
        let swap = |c: &[Candidate], energies: &[f64]| -> Vec<Candidate> {
            c.iter().zip(energies).map(|(c, &e)| Candidate::new(c.model_id.clone(), e * 1e3, c.loss)).collect()
        };
        let c1 = swap(&a, &loss_b);
        prop_assert_eq!(&tradeoff_select(&a, 0.0).unwrap().model_id, &tradeoff_select(&c1, 0.0).unwrap().model_id);
    }
}

fn d_total(model: &ModelSpec, level: AnalysisLevel) -> f64 {
    analyze(model, level, &CostTable::default())
        .unwrap()
        .per_run
        .total()
        .value()
}

#[test]
fn activation_closeness_on_forward_pass() {
    let base = feed_forward(
        "b",
        4,
        4,
        3,
        1,
        Activation::Sigmoid,
        Activation::Sigmoid,
        TRAINING,
    )
    .unwrap();
    let acts = [Activation::Sigmoid, Activation::Tanh, Activation::Gelu];
    for trio in model_family(&base, 4..=18, &acts).unwrap().chunks(3) {
        for level in [
            AnalysisLevel::Inference,
            AnalysisLevel::Validation,
            AnalysisLevel::Training,
        ] {
            assert!(d_total(&trio[0], level) < d_total(&trio[2], level));
        }
        let (t, g) = (
            d_total(&trio[1], AnalysisLevel::Inference),
            d_total(&trio[2], AnalysisLevel::Inference),
        );
        assert!((t - g).abs() / g < 0.02, "{} {t} {g}", trio[1].name());
    }
}

#[test]
fn inference_tos_are_quadratic_in_width() {
    let at = |w: usize| {
        let m = feed_forward(
            "q",
            4,
            w,
            3,
            1,
            Activation::Gelu,
            Activation::Sigmoid,
            TRAINING,
        )
        .unwrap();
        analyze(&m, AnalysisLevel::Inference, &CostTable::default())
            .unwrap()
            .per_instance
            .total()
            .value()
    };
    // second differences of a quadratic are constant
    let ys: Vec<f64> = (2..=30).map(at).collect();
    let second: Vec<f64> = ys.windows(3).map(|w| w[2] - 2.0 * w[1] + w[0]).collect();
    assert!(second.iter().all(|&d| d == second[0]), "{second:?}");
    assert!(second[0] > 0.0);
}

#[test]
fn tallies_do_not_depend_on_values() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(99);
    let model = feed_forward(
        "v",
        3,
        5,
        2,
        2,
        Activation::Gelu,
        Activation::Tanh,
        TRAINING,
    )
    .unwrap();
    let shapes: Vec<(usize, usize)> = vec![(5, 3), (5, 5), (2, 5)];
    let mut seen = None;
    for _ in 0..10 {
        let weights = shapes
            .iter()
            .map(|&(o, i)| {
                (0..o)
                    .map(|_| (0..i).map(|_| rng.random_range(-3.0..3.0)).collect())
                    .collect()
            })
            .collect();
        let bias = shapes
            .iter()
            .map(|&(o, _)| (0..o).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut net = OracleNetwork::from_model(&model)
            .unwrap()
            .with_parameters(weights, bias)
            .unwrap();
        let x: Vec<f64> = (0..3).map(|_| rng.random_range(-5.0..5.0)).collect();
        let y: Vec<f64> = (0..2).map(|_| rng.random_range(-1.0..1.0)).collect();
        let tally = net.run_training_step(&x, &y, 0.01).unwrap().total;
        assert_eq!(*seen.get_or_insert(tally), tally);
    }
}

#[test]
fn noiseless_pipeline_recovers_the_affine_model() {
    let base = feed_forward(
        "b",
        4,
        4,
        3,
        1,
        Activation::Sigmoid,
        Activation::Sigmoid,
        TRAINING,
    )
    .unwrap();
    let acts = [Activation::Sigmoid, Activation::Tanh, Activation::Gelu];
    let energy = |tos: f64| 2393.0 + 9.605e-6 * tos;
    let points: Vec<(ToCount, f64)> = model_family(&base, 4..=13, &acts)
        .unwrap()
        .iter()
        .map(|m| {
            let t = d_total(m, AnalysisLevel::Inference);
            (ToCount(t), energy(t))
        })
        .collect();
    let lm = fit(&points).unwrap();
    assert!((lm.slope / 9.605e-6 - 1.0).abs() < 1e-9);
    assert!((lm.r_squared - 1.0).abs() < 1e-12);
    for m in model_family(&base, 14..=18, &acts).unwrap() {
        let t = d_total(&m, AnalysisLevel::Inference);
        assert!((lm.predict(ToCount(t)) / energy(t) - 1.0).abs() < 1e-9);
    }
}
