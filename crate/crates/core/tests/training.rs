mod common;

use std::f64::consts::LN_2;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::oracle::{rel_err, reference_loss, STEP};
use common::{small_config, topic_corpus, write_corpus, SyllablePool};
use sylvec::baseline::train_baseline;
use sylvec::eval::cosine;
use sylvec::text::Vocabulary;
use sylvec::{baseline_vector, train, BaselineModel, Error, TrainConfig};

fn quick(epochs: usize) -> TrainConfig {
    TrainConfig {
        epochs,
        ..small_config(16, 8)
    }
}

#[test]
fn same_seed_trains_identical_models() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(50, 3, 6, 1));
    let (a, ra) = train(&corpus, &quick(3)).unwrap();
    let (b, rb) = train(&corpus, &quick(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.epoch_losses(), rb.epoch_losses());

    let (c, _) = train(&corpus, &TrainConfig { seed: 2, ..quick(3) }).unwrap();
    assert_ne!(a.composer, c.composer);
}

#[test]
fn first_epoch_loss_is_below_the_zero_table_loss() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(100, 3, 6, 2));
    let (_, report) = train(&corpus, &quick(1)).unwrap();
    let first = report.epochs[0].mean_loss;
    assert!(first < 8.0 * LN_2, "{first}");
    assert!(first.is_finite());
}

#[test]
fn learning_rate_decays_to_the_floor() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(40, 3, 6, 3));
    let config = quick(4);
    let (_, report) = train(&corpus, &config).unwrap();
    let lrs: Vec<f64> = report.epochs.iter().map(|e| e.lr).collect();
    assert!(lrs.windows(2).all(|w| w[1] <= w[0]), "{lrs:?}");
    assert!(lrs.iter().all(|&lr| lr >= config.min_lr && lr <= config.initial_lr));
}

#[test]
fn fixed_window_pair_count_matches_enumeration() {
    let lines = topic_corpus(30, 2, 5, 4);
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &lines);
    let window = 3;
    let config = TrainConfig {
        window,
        dynamic_window: false,
        ..quick(2)
    };
    let expected: u64 = lines
        .iter()
        .map(|l| {
            let n = l.split_whitespace().count();
            (0..n).map(|i| (i.min(window) + (n - 1 - i).min(window)) as u64).sum::<u64>()
        })
        .sum();
    let (_, report) = train(&corpus, &config).unwrap();
    assert!(report.epochs.iter().all(|e| e.pairs == expected));
    assert_eq!(report.total_pairs(), 2 * expected);
}

#[test]
fn subsampling_drops_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(80, 2, 4, 5));
    let (_, full) = train(&corpus, &quick(1)).unwrap();
    let (_, sub) = train(&corpus, &TrainConfig { subsample: Some(1e-3), ..quick(1) }).unwrap();
    assert!(sub.total_pairs() < full.total_pairs());
    assert!(sub.total_pairs() > 0);
}

#[test]
fn words_sharing_contexts_end_up_closer() {
    let mut pool = SyllablePool::new();
    let topics: Vec<Vec<String>> = (0..2).map(|_| (0..5).map(|_| pool.word(2)).collect()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let lines: Vec<String> = (0..300)
        .map(|i| {
            let t = &topics[i % 2];
            (0..8).map(|_| t[rng.random_range(0..t.len())].as_str()).collect::<Vec<_>>().join(" ")
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &lines);
    let (model, _) = train(&corpus, &TrainConfig { epochs: 6, ..small_config(16, 8) }).unwrap();

    let vec = |w: &str| model.word_vector(w).unwrap();
    let mut within = Vec::new();
    let mut across = Vec::new();
    for (ti, t) in topics.iter().enumerate() {
        for (i, a) in t.iter().enumerate() {
            for b in &t[i + 1..] {
                within.push(cosine(&vec(a), &vec(b)).unwrap());
            }
            for b in &topics[1 - ti] {
                across.push(cosine(&vec(a), &vec(b)).unwrap());
            }
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    assert!(mean(&within) > mean(&across) + 0.1, "{} vs {}", mean(&within), mean(&across));
}

#[test]
fn baseline_is_deterministic_and_sees_the_same_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(60, 3, 6, 6));
    let (a, ra) = train_baseline(&corpus, &quick(3)).unwrap();
    let (b, rb) = train_baseline(&corpus, &quick(3)).unwrap();
    assert_eq!(a, b);
    assert_eq!(ra.epoch_losses(), rb.epoch_losses());

    let (_, rs) = train(&corpus, &quick(3)).unwrap();
    let pairs = |r: &sylvec::TrainReport| r.epochs.iter().map(|e| e.pairs).collect::<Vec<_>>();
    assert_eq!(pairs(&ra), pairs(&rs));
    assert!(ra.epoch_losses()[2] < ra.epoch_losses()[0]);
}

#[test]
fn baseline_gradients_match_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..30 {
        let words = rng.random_range(3..7usize);
        let list: Vec<String> = (0..words).map(|i| char::from_u32(0xAC00 + i as u32 * 31).unwrap().to_string()).collect();
        let vocab = Vocabulary::from_words(list, vec![1; words], words as u64, false).unwrap();
        let config = small_config(1, rng.random_range(1..=2));
        let mut m = BaselineModel::<f64>::new(vocab, config).unwrap();
        for w in 0..words as u32 {
            for x in m.output.vector_mut(w) {
                *x = rng.random_range(-1.0..1.0);
            }
            for x in m.input.vector_mut(w) {
                *x = rng.random_range(-1.0..1.0);
            }
        }
        let center = rng.random_range(0..words as u32);
        let context = rng.random_range(0..words as u32);
        let negs: Vec<u32> = (0..rng.random_range(1..5)).map(|_| rng.random_range(0..words as u32)).collect();
        let grads = m.sgns_gradients(center, context, &negs).unwrap();
        let loss = |m: &BaselineModel<f64>| reference_loss(m.input.vector(center), &m.output, context, &negs);
        assert!((grads.loss - loss(&m)).abs() < 1e-12);

        for w in 0..words as u32 {
            for i in 0..m.repr_dim() {
                let orig = m.input.vector(w)[i];
                m.input.vector_mut(w)[i] = orig + STEP;
                let up = loss(&m);
                m.input.vector_mut(w)[i] = orig - STEP;
                let down = loss(&m);
                m.input.vector_mut(w)[i] = orig;
                let analytic = if w == center { grads.encoder[i] } else { 0.0 };
                assert!(rel_err(analytic, (up - down) / (2.0 * STEP)) < 1e-4);

                let orig = m.output.vector(w)[i];
                m.output.vector_mut(w)[i] = orig + STEP;
                let up = loss(&m);
                m.output.vector_mut(w)[i] = orig - STEP;
                let down = loss(&m);
                m.output.vector_mut(w)[i] = orig;
                let analytic = grads.outputs.iter().find(|(id, _)| *id == w).map_or(0.0, |(_, g)| g[i]);
                assert!(rel_err(analytic, (up - down) / (2.0 * STEP)) < 1e-4);
            }
        }
    }
}

#[test]
fn rare_words_only_exist_for_the_syllable_model() {
    let dir = tempfile::tempdir().unwrap();
    let mut lines: Vec<String> = vec!["가나 다라 가나 다라 가나 다라".into(); 10];
    lines.push("나가 가나".into());
    let corpus = write_corpus(dir.path(), "c.txt", &lines);
    let config = TrainConfig {
        min_count: 2,
        ..quick(1)
    };
    let (syl, _) = train(&corpus, &config).unwrap();
    let (base, _) = train_baseline(&corpus, &config).unwrap();
    assert!(syl.vocab.id("나가").is_none());
    assert_eq!(syl.word_vector("나가").unwrap().len(), syl.repr_dim());
    assert!(matches!(baseline_vector(&base, "나가"), Err(Error::NoRepresentation(_))));
    assert!(matches!(
        syl.word_vector("가호"),
        Err(Error::UnknownSyllable { syllable: '호', .. })
    ));
}

#[test]
fn corpora_without_training_pairs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_corpus(dir.path(), "empty.txt", &[]);
    assert!(matches!(train(&empty, &quick(1)), Err(Error::Config(_))));
    let singletons = write_corpus(dir.path(), "one.txt", &["가나".into(), "다라".into()]);
    assert!(matches!(train(&singletons, &quick(1)), Err(Error::Config(_))));
}

#[test]
fn parallel_training_keeps_the_invariants() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = write_corpus(dir.path(), "c.txt", &topic_corpus(200, 4, 8, 11));
    let config = TrainConfig { threads: 2, ..quick(4) };
    let (model, report) = train(&corpus, &config).unwrap();
    let losses = report.epoch_losses();
    assert!(losses.iter().all(|l| l.is_finite()));
    assert!(losses[3] < losses[0], "{losses:?}");
    assert!(model.composer.syllable_vector(0).iter().all(|&x| x == 0.0));
    let (_, again) = train(&corpus, &config).unwrap();
    assert_eq!(report.total_pairs(), again.total_pairs());

    let fixed = TrainConfig { dynamic_window: false, ..quick(1) };
    let (_, parallel) = train(&corpus, &TrainConfig { threads: 3, ..fixed.clone() }).unwrap();
    let (_, sequential) = train(&corpus, &fixed).unwrap();
    assert_eq!(parallel.total_pairs(), sequential.total_pairs());
}
