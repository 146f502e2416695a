mod common;

use common::*;
use explainbench::black::{
    exact_shapley, explain_lemna, explain_lime, explain_shap, fit_mixture, gen_perturbations, kernel_shap_exact, opposite_fraction,
    score_masks, total_variation, tv_prox, LemnaConfig, LimeConfig, PerturbationSet, Proximity, ShapConfig, MAX_EXACT_DIM,
};
use explainbench::metrics::AblationOperator;
use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::Error;
use proptest::prelude::*;
use rand::Rng;

fn binary_model() -> Model {
    Model::new(
        Modality::DenseBinary,
        2,
        4,
        vec![Layer::Dense(Dense::new(2, 4, vec![1.0, 2.0, -1.0, 0.5, -1.0, -2.0, 1.0, -0.5], vec![0.1, -0.1])), Layer::Softmax],
    )
    .unwrap()
}

fn uniform_lime(l: usize) -> LimeConfig {
    LimeConfig { l, proximity: Proximity::Uniform, alpha: 0.0, ..Default::default() }
}

fn set_with_labels(labels: Vec<usize>) -> PerturbationSet {
    let n = labels.len();
    PerturbationSet { masks: vec![vec![true]; n], scores: vec![0.0; n], labels, seed: 0 }
}

/// Value function `v(S) = f(x with the complement of S ablated)_class`.
fn coalition_value<'a>(m: &'a Model, s: &'a Sample, class: usize) -> impl Fn(&[bool]) -> f64 + 'a {
    move |keep: &[bool]| score_masks(m, s, class, &[keep.to_vec()], AblationOperator::Zero).unwrap().0[0]
}

#[test]
fn corner_masks_give_forward_and_ablated_scores() {
    let m = binary_model();
    let s = Sample::dense("s", vec![1.0, 1.0, 0.0, 1.0], 0);
    let (scores, labels) = score_masks(&m, &s, 1, &[vec![true; 4], vec![false; 4]], AblationOperator::Zero).unwrap();
    let full = m.forward(&s).unwrap();
    let empty = m.forward(&Sample::dense("z", vec![0.0; 4], 0)).unwrap();
    assert_eq!(scores, vec![full[1], empty[1]]);
    assert_eq!(labels, vec![m.predict(&s).unwrap(), 0]);
}

#[test]
fn perturbations_are_seeded() {
    let m = binary_model();
    let s = Sample::dense("s", vec![1.0, 1.0, 1.0, 1.0], 0);
    let a = gen_perturbations(&m, &s, 0, 50, 7, AblationOperator::Zero).unwrap();
    let b = gen_perturbations(&m, &s, 0, 50, 7, AblationOperator::Zero).unwrap();
    let c = gen_perturbations(&m, &s, 0, 50, 8, AblationOperator::Zero).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.masks, c.masks);
    assert!(matches!(gen_perturbations(&m, &s, 0, 0, 7, AblationOperator::Zero), Err(Error::InvalidInput(_))));
}

#[test]
fn opposite_fraction_examples() {
    assert_eq!(opposite_fraction(&set_with_labels(vec![0; 10]), 0), 0.0);
    assert_eq!(opposite_fraction(&set_with_labels(vec![0, 1, 0, 1]), 0), 0.5);
    let mut labels = vec![1; 90];
    labels.extend(vec![0; 10]);
    let p = opposite_fraction(&set_with_labels(labels), 1);
    assert_eq!(p, 0.1);
    assert!(p >= 0.05);
}

#[test]
fn lime_without_penalty_matches_least_squares_oracle() {
    let mut r = rng(31);
    let w = uniform(&mut r, 8, 1.0);
    let m = linear(&[w.clone(), uniform(&mut r, 8, 1.0)], &[0.2, -0.1]);
    let s = dense_sample(&mut r, 8);
    let x = s.input.as_dense().unwrap().to_vec();
    let cfg = uniform_lime(300);
    let e = explain_lime(&m, &s, 0, &cfg, 5).unwrap();
    let p = gen_perturbations(&m, &s, 0, cfg.l, 5, AblationOperator::Zero).unwrap();
    let oracle = wls_oracle(&p.masks, &p.scores, &vec![1.0; p.len()]);
    assert!(max_abs_diff(&e.relevance, &oracle[1..]) <= 1e-6);
    let wx: Vec<f64> = w.iter().zip(&x).map(|(a, b)| a * b).collect();
    assert!(max_abs_diff(&e.relevance, &wx) <= 1e-6);
}

#[test]
fn lime_cosine_weights_match_weighted_oracle() {
    let mut r = rng(32);
    let m = mlp(&mut r, 6, &[8], Act::Relu, Out::Softmax, true);
    let s = dense_sample(&mut r, 6);
    let cfg = LimeConfig { l: 400, alpha: 0.0, ..Default::default() };
    let e = explain_lime(&m, &s, 1, &cfg, 9).unwrap();
    let p = gen_perturbations(&m, &s, 1, cfg.l, 9, AblationOperator::Zero).unwrap();
    let w: Vec<f64> = p.masks.iter().map(|k| (k.iter().filter(|&&b| b).count() as f64 / 6.0).sqrt()).collect();
    let oracle = wls_oracle(&p.masks, &p.scores, &w);
    assert!(max_rel_err(&e.relevance, &oracle[1..], 1e-6) <= 1e-6);
}

#[test]
fn lime_penalty_shrinks_coefficients() {
    let mut r = rng(33);
    let m = linear(&[uniform(&mut r, 10, 1.0), uniform(&mut r, 10, 1.0)], &[0.0, 0.0]);
    let s = dense_sample(&mut r, 10);
    let l1 = |alpha: f64| {
        let cfg = LimeConfig { l: 300, proximity: Proximity::Uniform, alpha, ..Default::default() };
        explain_lime(&m, &s, 0, &cfg, 2).unwrap().relevance.iter().map(|v| v.abs()).sum::<f64>()
    };
    assert!(l1(0.05) < l1(1e-3));
    assert!(l1(10.0) == 0.0);
}

#[test]
fn constant_model_gives_degenerate_zero_vector() {
    let m = linear(&[vec![0.0; 5], vec![0.0; 5]], &[1.0, 0.0]);
    let s = Sample::dense("s", vec![1.0; 5], 0);
    let lime = explain_lime(&m, &s, 0, &uniform_lime(50), 1).unwrap();
    let shap = explain_shap(&m, &s, 0, &ShapConfig::default(), 1).unwrap();
    let lemna = explain_lemna(&m, &s, 0, &LemnaConfig { l: 50, ..Default::default() }, 1).unwrap();
    for e in [lime, shap, lemna] {
        assert!(e.degenerate);
        assert_eq!(e.relevance, vec![0.0; 5]);
        assert_eq!(e.opposite_fraction, Some(0.0));
    }
}

#[test]
fn exact_kernel_shap_matches_brute_force_shapley() {
    let mut r = rng(34);
    for _ in 0..5 {
        let m = mlp(&mut r, 8, &[10], Act::Relu, Out::Softmax, true);
        let s = dense_sample(&mut r, 8);
        let e = explain_shap(&m, &s, 1, &ShapConfig::default(), 0).unwrap();
        let oracle = brute_shapley(coalition_value(&m, &s, 1), 8);
        assert!(max_abs_diff(&e.relevance, &oracle) <= 1e-9);
        let direct = exact_shapley(&m, &s, 1).unwrap();
        assert!(max_abs_diff(&direct, &oracle) <= 1e-12);
    }
}

#[test]
fn shapley_axioms_on_constructed_games() {
    // features 0 and 1 enter symmetrically, feature 3 has zero weight
    let m = Model::new(
        Modality::DenseReal,
        2,
        4,
        vec![
            Layer::Dense(Dense::new(2, 4, vec![1.0, 1.0, 0.5, 0.0, 1.0, 1.0, -0.5, 0.0], vec![0.0, -1.0])),
            Layer::Relu,
            Layer::Dense(Dense::new(2, 2, vec![2.0, 1.0, -1.0, 0.0], vec![0.0, 0.0])),
        ],
    )
    .unwrap();
    let s = Sample::dense("s", vec![1.0, 1.0, 1.0, 1.0], 0);
    let phi = explain_shap(&m, &s, 0, &ShapConfig::default(), 0).unwrap().relevance;
    assert!((phi[0] - phi[1]).abs() < 1e-12, "symmetry {phi:?}");
    assert!(phi[3].abs() < 1e-12, "dummy {phi:?}");
    let v = coalition_value(&m, &s, 0);
    let total = v(&[true; 4]) - v(&[false; 4]);
    assert!((phi.iter().sum::<f64>() - total).abs() < 1e-12, "efficiency");
}

#[test]
fn exact_shapley_of_additive_model_is_weight_times_input() {
    let mut r = rng(35);
    let w = uniform(&mut r, 6, 1.0);
    let m = linear(&[w.clone(), vec![0.0; 6]], &[0.7, 0.0]);
    let s = dense_sample(&mut r, 6);
    let phi = exact_shapley(&m, &s, 0).unwrap();
    let want: Vec<f64> = w.iter().zip(s.input.as_dense().unwrap()).map(|(a, b)| a * b).collect();
    assert!(max_abs_diff(&phi, &want) < 1e-12);
}

#[test]
fn exact_shapley_single_feature_and_dimension_limit() {
    let m = linear(&[vec![3.0], vec![1.0]], &[0.5, 0.0]);
    let phi = exact_shapley(&m, &Sample::dense("s", vec![2.0], 0), 0).unwrap();
    assert_eq!(phi, vec![6.0]);
    let d = MAX_EXACT_DIM + 1;
    let big = linear(&[vec![1.0; d], vec![0.0; d]], &[0.0, 0.0]);
    assert!(matches!(
        exact_shapley(&big, &Sample::dense("s", vec![1.0; d], 0), 0),
        Err(Error::DimensionTooLarge { dim, max }) if dim == d && max == MAX_EXACT_DIM
    ));
    assert!(matches!(kernel_shap_exact(&[0.0; 3], 2), Err(Error::InvalidInput(_))));
}

#[test]
fn sampled_kernel_shap_is_seeded_and_locally_accurate() {
    let mut r = rng(36);
    let m = mlp(&mut r, 14, &[10], Act::Relu, Out::Softmax, true);
    let s = dense_sample(&mut r, 14);
    let cfg = ShapConfig { l: 400, ..Default::default() };
    let a = explain_shap(&m, &s, 1, &cfg, 4).unwrap();
    let b = explain_shap(&m, &s, 1, &cfg, 4).unwrap();
    assert_eq!(a.relevance, b.relevance);
    let v = coalition_value(&m, &s, 1);
    let total = v(&[true; 14]) - v(&[false; 14]);
    assert!((a.relevance.iter().sum::<f64>() - total).abs() < 1e-9);
    assert!(matches!(explain_shap(&m, &s, 1, &ShapConfig { l: 15, ..Default::default() }, 0), Err(Error::InvalidInput(_))));
}

#[test]
fn single_component_unpenalized_lemna_is_least_squares() {
    let mut r = rng(37);
    let m = mlp(&mut r, 7, &[9], Act::Relu, Out::Softmax, true);
    let s = dense_sample(&mut r, 7);
    let cfg = LemnaConfig { k: 1, l: 300, lambda: Some(0.0), ..Default::default() };
    let e = explain_lemna(&m, &s, 0, &cfg, 3).unwrap();
    let p = gen_perturbations(&m, &s, 0, cfg.l, 3, AblationOperator::Zero).unwrap();
    let oracle = wls_oracle(&p.masks, &p.scores, &vec![1.0; p.len()]);
    assert!(max_abs_diff(&e.relevance, &oracle[1..]) <= 1e-6);
    let fit = fit_mixture(&p.masks, &p.scores, &cfg, 0).unwrap();
    assert_eq!(fit.pi, vec![1.0]);
    assert!(max_abs_diff(&fit.beta[0], &oracle) <= 1e-6);
}

#[test]
fn strong_fusion_flattens_sequence_relevance() {
    let mut r = rng(38);
    let m = token_cnn(&mut r, 20, 12, 3, Out::Softmax);
    let s = token_sample(&mut r, 20, 12);
    let cfg = LemnaConfig { lambda: Some(1e4), ..LemnaConfig::for_modality(Modality::TokenSequence) };
    let e = explain_lemna(&m, &s, 1, &cfg, 6).unwrap();
    let equal = e.relevance.windows(2).filter(|w| (w[0] - w[1]).abs() <= 1e-6).count();
    assert!(equal as f64 >= 0.9 * 19.0, "{:?}", e.relevance);
}

#[test]
fn em_objective_never_decreases_and_weights_stay_on_simplex() {
    let mut r = rng(39);
    for trial in 0..5 {
        let m = mlp(&mut r, 10, &[12], Act::Relu, Out::Softmax, true);
        let s = dense_sample(&mut r, 10);
        let p = gen_perturbations(&m, &s, 0, 300, trial, AblationOperator::Zero).unwrap();
        let fit = fit_mixture(&p.masks, &p.scores, &LemnaConfig::default(), trial).unwrap();
        for w in fit.objective.windows(2) {
            assert!(w[1] >= w[0] - 1e-9 * (1.0 + w[0].abs()), "{:?}", fit.objective);
        }
        for pi in &fit.pi_history {
            assert!(pi.iter().all(|&v| v >= 0.0));
            assert!((pi.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }
}

#[test]
fn lemna_is_seeded() {
    let mut r = rng(40);
    let m = token_lstm(&mut r, 10, 8, 3, 4, Out::Softmax);
    let s = token_sample(&mut r, 10, 8);
    let cfg = LemnaConfig { l: 200, ..LemnaConfig::for_modality(Modality::TokenSequence) };
    assert_eq!(explain_lemna(&m, &s, 1, &cfg, 11).unwrap().relevance, explain_lemna(&m, &s, 1, &cfg, 11).unwrap().relevance);
}

#[test]
fn tv_prox_examples() {
    assert_eq!(tv_prox(&[1.0, 1.0, 1.0], 5.0), vec![1.0, 1.0, 1.0]);
    assert_eq!(tv_prox(&[0.0, 2.0], 0.0), vec![0.0, 2.0]);
    let x = tv_prox(&[0.0, 2.0], 0.5);
    assert!(max_abs_diff(&x, &[0.5, 1.5]) < 1e-12);
    let x = tv_prox(&[0.0, 2.0], 5.0);
    assert!(max_abs_diff(&x, &[1.0, 1.0]) < 1e-12);
    assert_eq!(total_variation(&[1.0, -1.0, 2.0]), 5.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn tv_prox_matches_dual_oracle(seed in any::<u64>(), n in 1usize..16, lambda in 0.0f64..2.0) {
        let mut r = rng(seed);
        let y: Vec<f64> = (0..n).map(|_| r.gen_range(-3.0..3.0)).collect();
        let fast = tv_prox(&y, lambda);
        let slow = tv_prox_dual(&y, lambda, 20_000);
        prop_assert!(max_abs_diff(&fast, &slow) <= 1e-6, "{:?} vs {:?}", fast, slow);
    }

    #[test]
    fn low_opposite_fraction_is_flagged(seed in any::<u64>()) {
        let mut r = rng(seed);
        let m = mlp(&mut r, 5, &[4], Act::Relu, Out::Softmax, true);
        let s = dense_sample(&mut r, 5);
        let e = explain_lime(&m, &s, 0, &LimeConfig { l: 60, ..Default::default() }, seed).unwrap();
        let p = gen_perturbations(&m, &s, 0, 60, seed, AblationOperator::Zero).unwrap();
        prop_assert_eq!(e.opposite_fraction, Some(opposite_fraction(&p, m.predict(&s).unwrap())));
        if e.opposite_fraction.unwrap() < 0.05 {
            prop_assert!(e.degenerate);
        }
    }
}
