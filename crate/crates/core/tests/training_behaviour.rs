mod common;

use chillax::hierarchy::Hierarchy;
use chillax::training::{preprocess, sigmoid, train_with_history, Dense, HeadModel};
use chillax::{
    evaluate, masked_bce_grad, masked_bce_loss, train, Error, HeadKind, LabeledExample, MaskKind,
    MaskedTarget, Method, SgdrSchedule, TrainConfig,
};
use common::{dag, example, id, rng, t1};
use rand::Rng;

fn constant_lr(lr: f64, steps: usize) -> SgdrSchedule {
    SgdrSchedule::new(lr, lr, steps, 0, 0.0, steps).unwrap()
}

fn config(
    schedule: SgdrSchedule,
    batch_size: usize,
    hidden: Option<usize>,
    seed: u64,
) -> TrainConfig {
    TrainConfig {
        schedule,
        batch_size,
        hidden,
        momentum: 0.0,
        weight_decay: 0.0,
        seed,
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

fn bce_of_logits(z: &[f64], t: &MaskedTarget) -> f64 {
    let p: Vec<f64> = z.iter().copied().map(sigmoid).collect();
    masked_bce_loss(&p, t).unwrap()
}

#[test]
fn logit_gradient_matches_central_differences() {
    let mut r = rng(10);
    for case in 0..100 {
        let h = dag(case, 2 + case as usize % 11);
        let y = h.nodes().nth(r.random_range(0..h.len())).unwrap();
        let kind = if r.random_bool(0.5) {
            MaskKind::Chillax
        } else {
            MaskKind::Original
        };
        let t = MaskedTarget::new(&h, y, kind).unwrap();
        let z: Vec<f64> = (0..h.len()).map(|_| r.random_range(-4.0..4.0)).collect();
        let p: Vec<f64> = z.iter().copied().map(sigmoid).collect();
        let g = masked_bce_grad(&p, &t).unwrap();
        let step = 1e-6;
        for i in 0..z.len() {
            let mut up = z.clone();
            let mut down = z.clone();
            up[i] += step;
            down[i] -= step;
            let fd = (bce_of_logits(&up, &t) - bce_of_logits(&down, &t)) / (2.0 * step);
            assert!(
                rel_err(g[i], fd) <= 1e-5,
                "case {case} component {i}: {} vs {fd}",
                g[i]
            );
            if t.mask[i] == 0 {
                assert_eq!(g[i], 0.0);
            }
        }
    }
}

fn params(m: &HeadModel) -> Vec<f64> {
    let layers: Vec<&Dense> = m.hidden.iter().chain([&m.output]).collect();
    layers
        .into_iter()
        .flat_map(|d| d.weights.iter().chain(&d.bias).copied())
        .collect()
}

fn set_param(m: &mut HeadModel, mut i: usize, v: f64) {
    let layers: Vec<&mut Dense> = m.hidden.iter_mut().chain([&mut m.output]).collect();
    for d in layers {
        if i < d.weights.len() {
            d.weights[i] = v;
            return;
        }
        i -= d.weights.len();
        if i < d.bias.len() {
            d.bias[i] = v;
            return;
        }
        i -= d.bias.len();
    }
    panic!("parameter index out of range");
}

#[test]
fn one_sgd_step_follows_the_loss_gradient() {
    // one full-batch step at a constant rate moves parameters by -lr * grad
    let h = t1();
    let lr = 1e-3;
    for (hidden, seed) in [(None, 1), (Some(4), 2), (Some(3), 3)] {
        let mut r = rng(seed);
        let labels = ["a1", "A", "b1", "R"];
        let ds: Vec<LabeledExample> = labels
            .iter()
            .enumerate()
            .map(|(i, l)| {
                example(
                    format!("x{i}"),
                    l,
                    (0..3).map(|_| r.random_range(-1.0..1.0)).collect(),
                )
            })
            .collect();
        let cfg = config(constant_lr(lr, 1), ds.len(), hidden, seed);
        let trained = train(&h, &ds, Method::Chillax, &cfg).unwrap();
        let init = HeadModel::init(
            HeadKind::Chillax,
            &h,
            3,
            hidden,
            &mut chillax::seed::rng(seed, "init"),
        );

        let loss = |m: &HeadModel| {
            ds.iter()
                .map(|e| {
                    let t = MaskedTarget::new(&h, id(&h, &e.label), MaskKind::Chillax).unwrap();
                    bce_of_logits(&m.logits(&e.features).unwrap(), &t)
                })
                .sum::<f64>()
                / ds.len() as f64
        };
        let before = params(&init);
        let after = params(&trained);
        for i in 0..before.len() {
            let step = 1e-6;
            let mut up = init.clone();
            let mut down = init.clone();
            set_param(&mut up, i, before[i] + step);
            set_param(&mut down, i, before[i] - step);
            let fd = (loss(&up) - loss(&down)) / (2.0 * step);
            let applied = (before[i] - after[i]) / lr;
            assert!(
                (applied - fd).abs() <= 1e-5 * fd.abs().max(1e-3),
                "hidden {hidden:?} param {i}: {applied} vs {fd}"
            );
        }
    }
}

#[test]
fn separable_leaves_are_learned() {
    let h = Hierarchy::parse("x\tR\ny\tR").unwrap();
    let mut r = rng(4);
    let ds: Vec<LabeledExample> = (0..40)
        .map(|i| {
            let (label, sign) = if i % 2 == 0 { ("x", 1.0) } else { ("y", -1.0) };
            let f = vec![sign + r.random_range(-0.3..0.3), r.random_range(-1.0..1.0)];
            example(format!("s{i}"), label, f)
        })
        .collect();
    let cfg = config(
        SgdrSchedule::new(0.5, 0.01, 200, 0, 0.0, 200).unwrap(),
        8,
        None,
        0,
    );
    for method in Method::ALL {
        let (model, history) = train_with_history(&h, &ds, method, &cfg).unwrap();
        assert_eq!(history.len(), 200);
        assert!(history[199] < history[0]);
        assert_eq!(
            evaluate(&h, &model, &ds, &[]).unwrap().top1,
            1.0,
            "{method}"
        );
    }
}

#[test]
fn masked_out_leaves_keep_their_initial_weights() {
    let h = Hierarchy::parse("animal\troot\ncat\tanimal\ndog\tanimal").unwrap();
    let mut r = rng(5);
    let ds: Vec<LabeledExample> = (0..30)
        .map(|i| {
            example(
                format!("a{i}"),
                "animal",
                vec![r.random_range(-1.0..1.0), 1.0],
            )
        })
        .collect();
    let cfg = config(
        SgdrSchedule::new(0.3, 0.01, 50, 0, 0.0, 50).unwrap(),
        4,
        None,
        6,
    );
    let model = train(&h, &ds, Method::Chillax, &cfg).unwrap();
    let init = HeadModel::init(
        HeadKind::Chillax,
        &h,
        2,
        None,
        &mut chillax::seed::rng(6, "init"),
    );
    for leaf in ["cat", "dog"] {
        let o = id(&h, leaf).index();
        assert_eq!(model.output.row(o), init.output.row(o));
        assert_eq!(model.output.bias[o], init.output.bias[o]);
    }
    let animal = id(&h, "animal").index();
    assert_ne!(model.output.row(animal), init.output.row(animal));
}

fn leaf_data(h: &Hierarchy, n: usize, seed: u64) -> Vec<LabeledExample> {
    let mut r = rng(seed);
    (0..n)
        .map(|i| {
            let leaf = h.leaves()[i % h.leaves().len()];
            let mut f = vec![0.0; h.len()];
            f[leaf.index()] = 2.0;
            for v in &mut f {
                *v += r.random_range(-0.5..0.5);
            }
            example(format!("p{i}"), h.name(leaf), f)
        })
        .collect()
}

#[test]
fn deterministic_per_seed() {
    let h = t1();
    let ds = leaf_data(&h, 60, 7);
    let cfg = config(constant_lr(0.1, 40), 8, Some(3), 7);
    for method in Method::ALL {
        assert_eq!(
            train(&h, &ds, method, &cfg).unwrap(),
            train(&h, &ds, method, &cfg).unwrap()
        );
    }
    let other = TrainConfig {
        seed: 8,
        ..cfg.clone()
    };
    assert_ne!(
        train(&h, &ds, Method::Chillax, &cfg).unwrap(),
        train(&h, &ds, Method::Chillax, &other).unwrap()
    );
}

#[test]
fn baselines_agree_without_imprecision() {
    let h = t1();
    let ds = leaf_data(&h, 50, 8);
    assert_eq!(
        preprocess(&h, &ds, Method::LeavesOnly, 3).unwrap(),
        preprocess(&h, &ds, Method::RandomLeaf, 3).unwrap()
    );
    let cfg = config(constant_lr(0.2, 30), 5, None, 3);
    assert_eq!(
        train(&h, &ds, Method::LeavesOnly, &cfg).unwrap(),
        train(&h, &ds, Method::RandomLeaf, &cfg).unwrap()
    );
}

#[test]
fn baselines_handle_imprecise_labels() {
    let h = t1();
    let ds = vec![
        example("i0", "A", vec![0.0]),
        example("i1", "R", vec![0.0]),
        example("i2", "b1", vec![0.0]),
    ];
    let kept = preprocess(&h, &ds, Method::LeavesOnly, 0).unwrap();
    assert_eq!(kept.len(), 1);
    let projected = preprocess(&h, &ds, Method::RandomLeaf, 0).unwrap();
    assert_eq!(projected.len(), 3);
    assert!(["a1", "a2"].contains(&projected[0].label.as_str()));
    assert!(h.is_leaf(id(&h, &projected[1].label)));
    assert_eq!(projected[2].label, "b1");
    assert_eq!(preprocess(&h, &ds, Method::Chillax, 0).unwrap(), ds);
}

#[test]
fn leaves_only_without_leaf_labels_is_empty() {
    let h = t1();
    let ds = vec![example("i0", "A", vec![0.0]), example("i1", "B", vec![1.0])];
    let cfg = config(constant_lr(0.1, 5), 2, None, 0);
    assert!(matches!(
        train(&h, &ds, Method::LeavesOnly, &cfg),
        Err(Error::EmptyDataset)
    ));
    assert!(train(&h, &ds, Method::Chillax, &cfg).is_ok());
}

#[test]
fn rejects_bad_inputs() {
    let h = t1();
    let cfg = config(constant_lr(0.1, 5), 2, None, 0);
    assert!(matches!(
        train(&h, &[], Method::Chillax, &cfg),
        Err(Error::EmptyDataset)
    ));
    let ragged = vec![
        example("i0", "a1", vec![0.0]),
        example("i1", "b1", vec![1.0, 2.0]),
    ];
    assert!(matches!(
        train(&h, &ragged, Method::Chillax, &cfg),
        Err(Error::DimensionMismatch { .. })
    ));
    let unknown = vec![example("i0", "zebra", vec![0.0])];
    assert!(matches!(
        train(&h, &unknown, Method::Chillax, &cfg),
        Err(Error::UnknownNode(_))
    ));
    // decay with lr * weight_decay > 2 multiplies the weights by -(lr - 1) each step
    let diverging = TrainConfig {
        weight_decay: 1.0,
        ..config(constant_lr(1e6, 100), 2, None, 0)
    };
    let big = vec![
        example("i0", "a1", vec![1e3]),
        example("i1", "b1", vec![-1e3]),
    ];
    let err = train(&h, &big, Method::LeavesOnly, &diverging).unwrap_err();
    assert!(matches!(err, Error::InvalidParameters(_)), "{err}");
}
