use clcp_core::encoders::{ClcpModel, ModelConfig};
use clcp_core::ingest::SamplePlan;
use clcp_core::ndnn::Tensor;
use clcp_core::zeval::synth::{synth_pairs, SynthSplit};
use clcp_core::zeval::{prepare, run_ladder, text_to_code_match, zero_shot_match, Variant};

fn small() -> ModelConfig {
    let mut c = ModelConfig::family("lp").unwrap();
    c.img_len = 128;
    c.channel_base = 8;
    c.embed_dim = 16;
    c.text_embed_dim = 16;
    c.text_ff_dim = 32;
    c.text_heads = 2;
    c.max_epochs = 2;
    c.batch_size = 8;
    c
}

/// An untrained model matches like a coin: over 20 seeds the mean accuracy
/// on 50 pairs stays within three standard errors of 1/50.
#[test]
fn untrained_matching_is_at_chance() {
    let l = 50;
    let cfg = small();
    let train = synth_pairs(200, SynthSplit::Train, 0).unwrap();
    let test = synth_pairs(l, SynthSplit::Test, 1).unwrap();
    let prep = prepare(&train, &test, &cfg).unwrap();
    assert_eq!(prep.test.len(), l);
    let images: Vec<&[f32]> = prep.test.iter().map(|p| p.image.as_slice()).collect();
    let docs: Vec<Vec<usize>> = prep.test.iter().map(|p| p.text.clone()).collect();
    let seeds = 20;
    let mut total = 0.0;
    for seed in 0..seeds {
        let m = ClcpModel::<f32>::new(&cfg, prep.text_vocab.len(), 1000 + seed).unwrap();
        let r = zero_shot_match(&m.embed_code(&images).unwrap(), &m.embed_text(&docs).unwrap()).unwrap();
        assert_eq!(r.ea, 1.0 / l as f64);
        total += r.acc;
    }
    let ea = 1.0 / l as f64;
    let mean = total / seeds as f64;
    let se = (ea * (1.0 - ea) / l as f64).sqrt() / (seeds as f64).sqrt();
    assert!((mean - ea).abs() <= 3.0 * se, "mean {mean} vs {ea} +- {}", 3.0 * se);
}

fn unit_rows(n: usize, d: usize, salt: u64) -> Tensor<f64> {
    let mut t = Tensor::from_fn(&[n, d], |i| ((i as u64 * 2654435761 + salt) % 1000) as f64 / 500.0 - 1.0);
    for r in t.data_mut().chunks_mut(d) {
        let norm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        r.iter_mut().for_each(|v| *v /= norm);
    }
    t
}

fn permute_rows(t: &Tensor<f64>, perm: &[usize]) -> Tensor<f64> {
    let d = t.shape()[1];
    let data = perm.iter().flat_map(|&p| t.data()[p * d..(p + 1) * d].to_vec()).collect();
    Tensor::new(t.shape().to_vec(), data).unwrap()
}

/// Relabelling pairs jointly relabels predictions and keeps the score.
#[test]
fn matching_commutes_with_pair_relabelling() {
    let (n, d) = (30, 8);
    let c = unit_rows(n, d, 1);
    let t = unit_rows(n, d, 7);
    let perm: Vec<usize> = (0..n).map(|i| (i * 7 + 3) % n).collect();
    let a = zero_shot_match(&c, &t).unwrap();
    let b = zero_shot_match(&permute_rows(&c, &perm), &permute_rows(&t, &perm)).unwrap();
    assert_eq!(a.correct, b.correct);
    let inv: Vec<usize> = {
        let mut v = vec![0; n];
        for (i, &p) in perm.iter().enumerate() {
            v[p] = i;
        }
        v
    };
    for i in 0..n {
        assert_eq!(b.predictions[i], inv[a.predictions[perm[i]]]);
    }
    assert_eq!(zero_shot_match(&c, &t).unwrap(), a);
}

#[test]
fn directions_use_transposed_similarity() {
    let c = unit_rows(12, 4, 3);
    let t = unit_rows(12, 4, 5);
    assert_eq!(text_to_code_match(&c, &t).unwrap().predictions, zero_shot_match(&t, &c).unwrap().predictions);
}

#[test]
fn expected_accuracy_is_exactly_one_over_l() {
    for l in [1, 2, 3, 7, 50, 200, 1000] {
        let e = unit_rows(l, 3, 0);
        assert_eq!(zero_shot_match(&e, &e).unwrap().ea, 1.0 / l as f64);
    }
}

#[test]
fn ladder_emits_fixed_and_growing_rows() {
    let records = synth_pairs(120, SynthSplit::Train, 3).unwrap();
    let plan = SamplePlan {
        train_sizes: vec![16, 24],
        test_sizes: vec![8, 12],
        seed: 2,
    };
    let mut gp = small();
    gp.pool_scope = clcp_core::encoders::PoolScope::Global;
    let report = run_ladder(&records, &plan, &[small(), gp], Variant::Raw, &[0, 1]).unwrap();
    assert_eq!(report.rows.len(), 2 * 2 * 2 * (1 + 2));
    assert_eq!(report.failed(), 0);
    assert_eq!(report.logs.len(), 8);
    let fixed: Vec<_> = report.rows.iter().filter(|r| r.regime == "fixed").collect();
    assert_eq!(fixed.len(), 8);
    assert!(fixed.iter().all(|r| r.test_size == 8 && r.result.as_ref().unwrap().l == 8));
    for r in report.rows.iter().filter(|r| r.regime == "growing") {
        let e = r.result.as_ref().unwrap();
        assert_eq!(e.l, r.test_size);
        assert_eq!(e.ea, 1.0 / r.test_size as f64);
        assert_eq!(e.train_size, r.train_size);
    }
    let csv = report.to_csv();
    assert_eq!(csv.lines().count(), report.rows.len() + 1);
}

#[test]
fn failed_cells_are_reported_not_fatal() {
    let records = synth_pairs(80, SynthSplit::Train, 4).unwrap();
    let plan = SamplePlan {
        train_sizes: vec![16],
        test_sizes: vec![8, 10],
        seed: 0,
    };
    let mut broken = small();
    broken.img_len = 16;
    broken.blocks = 7;
    let report = run_ladder(&records, &plan, &[small(), broken], Variant::Cleaned, &[0]).unwrap();
    assert_eq!(report.rows.len(), 2 * 3);
    assert_eq!(report.failed(), 3);
    let failed: Vec<_> = report.rows.iter().filter(|r| r.status == "failed").collect();
    assert!(failed.iter().all(|r| r.config_id == "lp7" && r.error.is_some()));
    assert!(report.render_table().contains("failed"));
}
