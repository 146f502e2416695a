use explainbench::data::{Dataset, DatasetMeta};
use explainbench::nn::{Dense, Layer, Modality, Model, Sample};
use explainbench::rng::SeedSplitter;
use explainbench::train::{fit, input_spec, steal, HeadKind, ModelTemplate, SurrogateSpec, TrainConfig};
use explainbench::Error;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

fn meta(d: usize) -> DatasetMeta {
    DatasetMeta {
        modality: Modality::DenseReal,
        n_features: d,
        n_classes: 2,
        vocab_size: None,
        padding_token: None,
        noop_token: None,
        feature_names: vec![],
    }
}

/// Two well-separated clusters along the diagonal.
fn separable(n: usize, seed: u64) -> Dataset {
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let samples = (0..n)
        .map(|i| {
            let label = i % 2;
            let c = if label == 1 { 1.0 } else { -1.0 };
            let x = vec![c + rng.gen_range(-0.4..0.4), c + rng.gen_range(-0.4..0.4)];
            Sample::dense(format!("s{i}"), x, label)
        })
        .collect();
    Dataset::new(meta(2), samples).unwrap()
}

fn logistic() -> ModelTemplate {
    ModelTemplate::Mlp { hidden: vec![], head: HeadKind::Sigmoid, embed_dim: None }
}

#[test]
fn logistic_model_separates_separable_data() {
    let data = separable(200, 1);
    let cfg = TrainConfig { epochs: 50, learning_rate: 0.05, seed: 3, ..Default::default() };
    let (_, log) = fit(&logistic(), &data, &cfg).unwrap();
    assert_eq!(log.metrics.accuracy, 1.0);
}

#[test]
fn zero_epochs_returns_initialization() {
    let data = separable(20, 2);
    let cfg = TrainConfig { epochs: 0, seed: 9, ..Default::default() };
    let (model, log) = fit(&ModelTemplate::mlp(vec![4]), &data, &cfg).unwrap();
    let init = ModelTemplate::mlp(vec![4])
        .instantiate(&input_spec(&data.meta), SeedSplitter::new(9).derive("init", 0))
        .unwrap();
    assert_eq!(model, init);
    assert!(log.epochs.is_empty());
}

#[test]
fn fixed_seed_gives_identical_weights() {
    let data = separable(100, 4);
    let cfg = TrainConfig { epochs: 5, seed: 21, ..Default::default() };
    let (a, _) = fit(&ModelTemplate::mlp(vec![6]), &data, &cfg).unwrap();
    let (b, _) = fit(&ModelTemplate::mlp(vec![6]), &data, &cfg).unwrap();
    assert_eq!(a.to_json().unwrap(), b.to_json().unwrap());
}

#[test]
fn surrogate_of_linear_oracle_agrees() {
    let oracle = Model::new(
        Modality::DenseReal,
        2,
        2,
        vec![Layer::Dense(Dense::new(2, 2, vec![1.0, -0.5, -1.0, 0.5], vec![0.0, 0.0])), Layer::Softmax],
    )
    .unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let samples = (0..2000)
        .map(|i| Sample::dense(format!("q{i}"), vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)], 0))
        .collect();
    let queries = Dataset::new(meta(2), samples).unwrap();
    let cfg = TrainConfig { epochs: 60, learning_rate: 0.01, patience: 10, seed: 2, ..Default::default() };
    let (_, log) = steal(&oracle, &queries, &SurrogateSpec { n_hidden_layers: 1, units_per_layer: 32 }, &cfg).unwrap();
    assert!(log.agreement >= 0.95, "agreement {}", log.agreement);
}

#[test]
fn stealing_rejects_empty_queries_and_bad_depth() {
    let oracle = Model::new(
        Modality::DenseReal,
        2,
        2,
        vec![Layer::Dense(Dense::new(2, 2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 0.0]))],
    )
    .unwrap();
    let empty = Dataset::new(meta(2), vec![]).unwrap();
    let cfg = TrainConfig::default();
    assert!(matches!(
        steal(&oracle, &empty, &SurrogateSpec { n_hidden_layers: 1, units_per_layer: 8 }, &cfg),
        Err(Error::TrainingFailure { .. })
    ));
    let data = separable(10, 0);
    assert!(matches!(
        steal(&oracle, &data, &SurrogateSpec { n_hidden_layers: 4, units_per_layer: 8 }, &cfg),
        Err(Error::InvalidInput(_))
    ));
}
