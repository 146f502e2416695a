#[allow(dead_code)]
mod benchmark_report {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/benchmark_report.rs"));
}

#[test]
fn benchmark_report_example_runs() {
    benchmark_report::run_example().expect("benchmark_report example should run");
}

#[allow(dead_code)]
mod compare_methods {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/compare_methods.rs"));
}

#[test]
fn compare_methods_example_runs() {
    compare_methods::run_example().expect("compare_methods example should run");
}

#[allow(dead_code)]
mod deletion_and_sparsity {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/deletion_and_sparsity.rs"));
}

#[test]
fn deletion_and_sparsity_example_runs() {
    deletion_and_sparsity::run_example().expect("deletion_and_sparsity example should run");
}

#[allow(dead_code)]
mod efficiency {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/efficiency.rs"));
}

#[test]
fn efficiency_example_runs() {
    efficiency::run_example().expect("efficiency example should run");
}

#[allow(dead_code)]
mod forward_and_gradients {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/forward_and_gradients.rs"));
}

#[test]
fn forward_and_gradients_example_runs() {
    forward_and_gradients::run_example().expect("forward_and_gradients example should run");
}

#[allow(dead_code)]
mod heatmap {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/heatmap.rs"));
}

#[test]
fn heatmap_example_runs() {
    heatmap::run_example().expect("heatmap example should run");
}

#[allow(dead_code)]
mod integrated_gradients {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/integrated_gradients.rs"));
}

#[test]
fn integrated_gradients_example_runs() {
    integrated_gradients::run_example().expect("integrated_gradients example should run");
}

#[allow(dead_code)]
mod kernel_shap {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/kernel_shap.rs"));
}

#[test]
fn kernel_shap_example_runs() {
    kernel_shap::run_example().expect("kernel_shap example should run");
}

#[allow(dead_code)]
mod lemna_mixture {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lemna_mixture.rs"));
}

#[test]
fn lemna_mixture_example_runs() {
    lemna_mixture::run_example().expect("lemna_mixture example should run");
}

#[allow(dead_code)]
mod lime_surrogate {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lime_surrogate.rs"));
}

#[test]
fn lime_surrogate_example_runs() {
    lime_surrogate::run_example().expect("lime_surrogate example should run");
}

#[allow(dead_code)]
mod lrp_relevance {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/lrp_relevance.rs"));
}

#[test]
fn lrp_relevance_example_runs() {
    lrp_relevance::run_example().expect("lrp_relevance example should run");
}

#[allow(dead_code)]
mod model_stealing {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/model_stealing.rs"));
}

#[test]
fn model_stealing_example_runs() {
    model_stealing::run_example().expect("model_stealing example should run");
}

#[allow(dead_code)]
mod prevalence {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/prevalence.rs"));
}

#[test]
fn prevalence_example_runs() {
    prevalence::run_example().expect("prevalence example should run");
}

#[allow(dead_code)]
mod sequence_lstm {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/sequence_lstm.rs"));
}

#[test]
fn sequence_lstm_example_runs() {
    sequence_lstm::run_example().expect("sequence_lstm example should run");
}

#[allow(dead_code)]
mod stability_and_completeness {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/stability_and_completeness.rs"));
}

#[test]
fn stability_and_completeness_example_runs() {
    stability_and_completeness::run_example().expect("stability_and_completeness example should run");
}

#[allow(dead_code)]
mod train_fixture {
    include!(concat!(env!("CARGO_MANIFEST_DIR"), "/examples/train_fixture.rs"));
}

#[test]
fn train_fixture_example_runs() {
    train_fixture::run_example().expect("train_fixture example should run");
}
