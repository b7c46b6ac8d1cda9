mod common;

use common::{sentence, tiny_config, toy_dialogue};
use hcrn::gradcheck::{grad_check, grad_check_model, Coords};
use hcrn::layers::{GruCell, Init};
use hcrn::model::{FlatConfig, FlatRnn, Hcrn, Model, SentenceClassifier, Stage};
use hcrn::rng::{stream, Stream};
use hcrn::tape::{softmax, PointwiseOp, Tape};
use hcrn::tensor::{ParamStore, Tensor};
use proptest::prelude::*;

const EPS: f64 = 1e-5;
const TOL: f64 = 1e-3;

fn vec_strategy(len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0f64..2.0, len)
}

/// `x` and `w` of equal length between 1 and 6.
fn pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|n| (vec_strategy(n), vec_strategy(n)))
}

fn check_pointwise(op: PointwiseOp, x: Vec<f64>, y: Vec<f64>, w: Vec<f64>) -> f64 {
    let mut params = ParamStore::<f64>::new();
    let xi = params.add("x", Tensor::vector(x)).unwrap();
    let yi = params.add("y", Tensor::vector(y)).unwrap();
    grad_check(&mut params, EPS, Coords::All, |tape, p| {
        let a = tape.param(p, xi);
        let b = tape.param(p, yi);
        let args = if op.arity() == 1 { vec![a] } else { vec![a, b] };
        let out = tape.pointwise(op, &args)?;
        let wv = tape.constant(Tensor::vector(w.clone()));
        let weighted = tape.mul(out, wv)?;
        Ok(tape.sum(weighted))
    })
    .unwrap()
    .max_rel_error
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn unary_ops_match_finite_differences((x, w) in pair(), which in 0usize..4) {
        let op = [PointwiseOp::Sigmoid, PointwiseOp::Tanh, PointwiseOp::Relu, PointwiseOp::OneMinus][which];
        // keep away from the relu kink
        let x: Vec<f64> = x.into_iter().map(|v| if v.abs() < 1e-2 { v + 0.1 } else { v }).collect();
        let y = vec![0.0; x.len()];
        prop_assert!(check_pointwise(op, x, y, w) < TOL);
    }

    #[test]
    fn binary_ops_match_finite_differences((x, w) in pair(), seed in any::<u64>(), which in 0usize..3) {
        let op = [PointwiseOp::Add, PointwiseOp::Sub, PointwiseOp::Mul][which];
        let y: Vec<f64> = x.iter().enumerate().map(|(i, v)| (v * 1.7 + (seed % 7) as f64 * 0.3 + i as f64).sin()).collect();
        prop_assert!(check_pointwise(op, x, y, w) < TOL);
    }

    #[test]
    fn matvec_row_concat_scale_match((rows, cols) in (1usize..5, 1usize..5), seed in any::<u64>()) {
        let mut params = ParamStore::<f64>::new();
        let init = Init::symmetric(1.0);
        let mut rng = stream(seed, Stream::Probe);
        let m = params.add("m", hcrn::layers::init_uniform(&[rows, cols], init.lo, init.hi, &mut rng)).unwrap();
        let x = params.add("x", hcrn::layers::init_uniform(&[cols], init.lo, init.hi, &mut rng)).unwrap();
        let report = grad_check(&mut params, EPS, Coords::All, |tape, p| {
            let (mv, xv) = (tape.param(p, m), tape.param(p, x));
            let y = tape.matvec(mv, xv)?;
            let r = tape.row(mv, rows - 1)?;
            let c = tape.concat(y, r)?;
            let t = tape.tanh(c);
            let s = tape.scale(t, 0.7);
            let sq = tape.mul(s, s)?;
            Ok(tape.sum(sq))
        }).unwrap();
        prop_assert!(report.max_rel_error < TOL, "{report:?}");
    }

    #[test]
    fn softmax_nll_matches(logits in (2usize..8).prop_flat_map(vec_strategy), target in 0usize..8) {
        let target = target % logits.len();
        let mut params = ParamStore::<f64>::new();
        let l = params.add("l", Tensor::vector(logits)).unwrap();
        let report = grad_check(&mut params, EPS, Coords::All, |tape, p| {
            let v = tape.param(p, l);
            tape.softmax_nll(v, target)
        }).unwrap();
        prop_assert!(report.max_rel_error < TOL, "{report:?}");
    }

    #[test]
    fn softmax_sums_to_one(logits in prop::collection::vec(-50.0f64..50.0, 1..12)) {
        let p = softmax(&logits);
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn gradient_is_linear_in_the_loss((x, w) in pair(), a in -3.0f64..3.0, b in -3.0f64..3.0) {
        // grad(a f + b g) = a grad f + b grad g
        let grads = |ca: f64, cb: f64| {
            let mut params = ParamStore::<f64>::new();
            let xi = params.add("x", Tensor::vector(x.clone())).unwrap();
            let mut tape = Tape::new();
            let v = tape.param(&params, xi);
            let f = { let t = tape.tanh(v); tape.sum(t) };
            let g = { let wv = tape.constant(Tensor::vector(w.clone())); let m = tape.mul(v, wv).unwrap(); let s = tape.sigmoid(m); tape.sum(s) };
            let fa = tape.scale(f, ca);
            let gb = tape.scale(g, cb);
            let loss = tape.add(fa, gb).unwrap();
            tape.backward(loss, &mut params).unwrap();
            params.get(xi).grad.data().to_vec()
        };
        let (ga, gb, gab) = (grads(1.0, 0.0), grads(0.0, 1.0), grads(a, b));
        for i in 0..x.len() {
            prop_assert!((gab[i] - (a * ga[i] + b * gb[i])).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gru_step_matches_finite_differences(input in 1usize..5, hidden in 1usize..5, seed in any::<u64>()) {
        let mut params = ParamStore::<f64>::new();
        let mut rng = stream(seed, Stream::Init);
        let cell = GruCell::new(&mut params, "g", input, hidden, Init::symmetric(0.5), &mut rng).unwrap();
        // non-zero biases so their gradients are exercised away from the init point
        for name in ["g.bz", "g.br", "g.bh"] {
            let id = params.id(name).unwrap();
            params.get_mut(id).value = hcrn::layers::init_uniform(&[hidden], -0.5, 0.5, &mut rng);
        }
        let x = params.add("x", hcrn::layers::init_uniform(&[input], -1.0, 1.0, &mut rng)).unwrap();
        let h = params.add("h", hcrn::layers::init_uniform(&[hidden], -1.0, 1.0, &mut rng)).unwrap();
        let w: Vec<f64> = (0..hidden).map(|i| 1.0 - 0.37 * i as f64).collect();
        let report = grad_check(&mut params, EPS, Coords::All, |tape, p| {
            let (xv, hv) = (tape.param(p, x), tape.param(p, h));
            let h1 = cell.step(tape, p, hv, xv)?;
            let h2 = cell.step(tape, p, h1, xv)?;
            let wv = tape.constant(Tensor::vector(w.clone()));
            let m = tape.mul(h2, wv)?;
            Ok(tape.sum(m))
        }).unwrap();
        prop_assert!(report.max_rel_error < TOL, "{report:?}");
    }
}

/// Moves every parameter to a generic point; zero biases can park a relu
/// exactly on its kink.
fn jitter<M: Model<f64>>(model: &mut M, seed: u64) {
    let mut rng = stream(seed, Stream::Probe);
    for p in model.params_mut().iter_mut() {
        p.value = hcrn::layers::init_uniform(p.value.shape(), -0.5, 0.5, &mut rng);
    }
}

#[test]
fn sentence_classifier_loss_matches_finite_differences() {
    let mut model = Hcrn::<f64>::new(tiny_config(Stage::Sentence, 3), &mut stream(3, Stream::Init)).unwrap();
    jitter(&mut model, 3);
    let s = sentence("A", "so i do", 2);
    let report = grad_check_model(&mut model, EPS, Coords::All, |tape, m| {
        let logits = m.sentence_logits(tape, &s)?;
        tape.softmax_nll(logits, s.label)
    })
    .unwrap();
    assert!(report.coords_checked > 300);
    assert!(report.max_rel_error < TOL, "{report:?}");
}

#[test]
fn discourse_dialogue_loss_matches_finite_differences() {
    let mut model = Hcrn::<f64>::new(tiny_config(Stage::Discourse, 3), &mut stream(4, Stream::Init)).unwrap();
    jitter(&mut model, 4);
    let dialogue = toy_dialogue();
    let report = grad_check_model(&mut model, EPS, Coords::All, |tape, m| m.dialogue_loss(tape, &dialogue, None)).unwrap();
    assert!(report.max_rel_error < TOL, "{report:?}");
    let truncated = grad_check_model(&mut model, EPS, Coords::All, |tape, m| {
        let logits = m.dialogue_logits(tape, &dialogue, Some(1))?;
        // only the last sentence: with truncation every step, the path to
        // earlier sentences is cut and the tape gradient must differ
        tape.softmax_nll(logits[2], dialogue[2].label)
    })
    .unwrap();
    assert!(truncated.max_rel_error > TOL, "truncation left the gradient path intact");
}

#[test]
fn word_reconstruction_loss_matches_finite_differences() {
    let mut model = Hcrn::<f64>::new(tiny_config(Stage::Word, 1), &mut stream(5, Stream::Init)).unwrap();
    jitter(&mut model, 5);
    let word = model.vocab().encode_word("cab");
    let report = grad_check_model(&mut model, EPS, Coords::All, |tape, m| m.word_loss(tape, &word)).unwrap();
    assert!(report.max_rel_error < TOL, "{report:?}");
}

#[test]
fn flat_baseline_loss_matches_finite_differences() {
    let mut c = FlatConfig::new(&[4, 3], 3);
    c.char_embed_dim = 3;
    c.mlp_hidden = 4;
    c.init_scale = 0.5;
    let mut model = FlatRnn::<f64>::new(c, &mut stream(6, Stream::Init)).unwrap();
    jitter(&mut model, 6);
    let s = sentence("A", "ab c", 1);
    let report = grad_check_model(&mut model, EPS, Coords::All, |tape, m| {
        let logits = m.sentence_logits(tape, &s)?;
        tape.softmax_nll(logits, s.label)
    })
    .unwrap();
    assert!(report.max_rel_error < TOL, "{report:?}");
}
