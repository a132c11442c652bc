use std::hint::black_box;

use boga_bench::{embedder, labelled, random_sequences};
use boga_core::embed::{featurize, fit_pca, FeatureConfig};
use boga_core::engine::initialize_campaign;
use boga_core::{
    expected_improvement, fit_surrogate, CampaignConfig, Direction, Landscape, PosteriorPrediction, SurrogateConfig,
};
use criterion::{criterion_group, criterion_main, BatchSize, BenchmarkId, Criterion};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn surrogate_fit(c: &mut Criterion) {
    let mut group = c.benchmark_group("surrogate_fit");
    group.sample_size(10);
    for n in [200, 1000] {
        let seqs = random_sequences(n, 1);
        let data = labelled(&seqs, &embedder(&seqs), Landscape::Sheet);
        let config = SurrogateConfig::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &data, |b, data| {
            b.iter(|| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                fit_surrogate(black_box(data), &config, &mut rng).unwrap()
            })
        });
    }
    group.finish();
}

fn surrogate_predict(c: &mut Criterion) {
    let seqs = random_sequences(500, 2);
    let emb = embedder(&seqs);
    let data = labelled(&seqs, &emb, Landscape::Sheet);
    let model = fit_surrogate(&data, &SurrogateConfig::default(), &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
    let pool: Vec<_> = data.iter().map(|(z, _)| z.clone()).collect();
    c.bench_function("surrogate_predict/500", |b| b.iter(|| model.predict_batch(black_box(&pool)).unwrap()));
}

fn embedding(c: &mut Criterion) {
    let seqs = random_sequences(1000, 3);
    let config = FeatureConfig::default();
    c.bench_function("featurize/1000", |b| {
        b.iter(|| seqs.iter().map(|s| featurize(black_box(s), &config)).collect::<Vec<_>>())
    });
    let rows: Vec<Vec<f64>> = seqs.iter().map(|s| featurize(s, &config).values).collect();
    c.bench_function("fit_pca/1000x24", |b| b.iter(|| fit_pca(black_box(&rows), 20).unwrap()));
    let emb = embedder(&seqs);
    c.bench_function("embed/1000", |b| {
        b.iter(|| seqs.iter().map(|s| emb.embed(black_box(s)).unwrap()).collect::<Vec<_>>())
    });
}

fn generation(c: &mut Criterion) {
    let config = CampaignConfig::from_toml_str(
        r#"
master_seed = 1
n_init = 100
[objective]
name = "sheet"
evaluator = { kind = "builtin", landscape = "sheet" }
[[schedule]]
generations = 1
m_select = 10
k_propose = 500
"#,
    )
    .unwrap();
    let mut group = c.benchmark_group("generation");
    group.sample_size(10);
    group.bench_function("k500_m10_n100", |b| {
        b.iter_batched(
            || initialize_campaign(config.clone()).unwrap(),
            |mut state| {
                state.next_generation().unwrap();
                state
            },
            BatchSize::PerIteration,
        )
    });
    group.finish();
}

fn acquisition(c: &mut Criterion) {
    let preds: Vec<PosteriorPrediction> = (0..10_000)
        .map(|i| PosteriorPrediction { mean: (i as f64 * 0.37).sin(), std: 0.05 + (i % 17) as f64 * 0.03 })
        .collect();
    c.bench_function("expected_improvement/10000", |b| {
        b.iter(|| preds.iter().map(|p| expected_improvement(*p, black_box(0.4), Direction::Maximize)).sum::<f64>())
    });
}

criterion_group!(benches, surrogate_fit, surrogate_predict, embedding, generation, acquisition);
criterion_main!(benches);
