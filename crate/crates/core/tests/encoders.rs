use clcp_core::encoders::{shape_plan, Arch, ClcpModel, ModelConfig, PoolScope};
use clcp_core::ndnn::{Graph, Tensor};
use clcp_core::Error;

fn small(family: &str) -> ModelConfig {
    let mut c = ModelConfig::family(family).unwrap();
    c.img_len = 64;
    c.channel_base = 4;
    c.embed_dim = 8;
    c.text_embed_dim = 8;
    c.text_ff_dim = 16;
    c.text_heads = 2;
    c.text_max_len = 12;
    c
}

fn images(n: usize, len: usize, salt: usize) -> Vec<Vec<f32>> {
    (0..n)
        .map(|i| (0..len).map(|j| (((i + salt) * 131 + j * 71) % 97) as f32 / 97.0).collect())
        .collect()
}

fn refs(v: &[Vec<f32>]) -> Vec<&[f32]> {
    v.iter().map(Vec::as_slice).collect()
}

fn row(t: &Tensor<f64>, i: usize) -> &[f64] {
    let d = t.shape()[1];
    &t.data()[i * d..(i + 1) * d]
}

#[test]
fn embeddings_have_unit_norm_and_batch_shape() {
    for fam in ["lp", "gp", "rn"] {
        let cfg = small(fam);
        let m = ClcpModel::<f64>::new(&cfg, 30, 1).unwrap();
        let imgs = images(5, cfg.img_len, 0);
        let c = m.embed_code(&refs(&imgs)).unwrap();
        let t = m.embed_text(&[vec![2, 3], vec![4], vec![5, 6, 7], vec![8, 9], vec![10]]).unwrap();
        for e in [&c, &t] {
            assert_eq!(e.shape(), [5, cfg.embed_dim]);
            for i in 0..5 {
                let n: f64 = row(e, i).iter().map(|v| v * v).sum::<f64>().sqrt();
                assert!((n - 1.0).abs() < 1e-5, "{fam}: norm {n}");
            }
        }
    }
}

#[test]
fn identical_inputs_give_identical_rows() {
    let cfg = small("lp");
    let m = ClcpModel::<f64>::new(&cfg, 30, 2).unwrap();
    let img = images(1, cfg.img_len, 3).remove(0);
    let c = m.embed_code(&[&img, &img]).unwrap();
    assert_eq!(row(&c, 0), row(&c, 1));
    let t = m.embed_text(&[vec![4, 5, 6], vec![4, 5, 6]]).unwrap();
    assert_eq!(row(&t, 0), row(&t, 1));
}

#[test]
fn text_embedding_ignores_padding_and_batch_order() {
    let cfg = small("lp");
    let m = ClcpModel::<f64>::new(&cfg, 30, 3).unwrap();
    let short = vec![7, 8];
    let long = vec![3, 9, 11, 12, 13, 14, 2];
    let alone = m.embed_text(&[short.clone()]).unwrap();
    let both = m.embed_text(&[long.clone(), short.clone()]).unwrap();
    for (a, b) in row(&alone, 0).iter().zip(row(&both, 1)) {
        assert!((a - b).abs() < 1e-12);
    }
    let swapped = m.embed_text(&[short, long]).unwrap();
    assert_eq!(row(&swapped, 0), row(&both, 1));
    assert_eq!(row(&swapped, 1), row(&both, 0));
}

#[test]
fn text_encoder_without_layers() {
    let mut cfg = small("gp");
    cfg.text_layers = 0;
    let m = ClcpModel::<f64>::new(&cfg, 30, 4).unwrap();
    let t = m.embed_text(&[vec![2, 3, 4], vec![5]]).unwrap();
    assert_eq!(t.shape(), [2, cfg.embed_dim]);
    assert!(m.params.find("text.layer1.wq").is_none());
}

#[test]
fn overlong_text_is_rejected() {
    let cfg = small("lp");
    let m = ClcpModel::<f64>::new(&cfg, 30, 5).unwrap();
    assert!(m.embed_text(&[vec![2; cfg.text_max_len + 1]]).is_err());
}

/// With every second convolution zeroed and identity shortcuts, each
/// residual block passes a centred crop of its input through unchanged.
#[test]
fn zeroed_residual_branch_leaves_the_shortcut() {
    let mut cfg = small("rn");
    cfg.use_pooling = false;
    cfg.img_len = 40;
    cfg.blocks = 3;
    let mut m = ClcpModel::<f64>::new(&cfg, 30, 6).unwrap();
    for i in 0..cfg.blocks {
        let (_, b, s) = m.code.residual_units(i).unwrap();
        let (bw, bb, sw) = (b.w, b.b, s.w);
        m.params.get_mut(bw).value.data_mut().fill(0.0);
        m.params.get_mut(bb).value.data_mut().fill(0.0);
        let entry = m.params.get_mut(sw);
        let (cout, cin) = (entry.value.shape()[0], entry.value.shape()[1]);
        let data = entry.value.data_mut();
        for o in 0..cout {
            for c in 0..cin {
                data[o * cin + c] = if o == c { 1.0 } else { 0.0 };
            }
        }
    }
    let x: Vec<f64> = (0..cfg.img_len).map(|j| ((j * 37 % 23) as f64 - 11.0) / 11.0).collect();

    let mut g = Graph::new(&m.params);
    let xv = g.input(Tensor::new(vec![1, 1, cfg.img_len], x.clone()).unwrap());
    let out = m.code.forward(&mut g, xv, false).unwrap();
    let got = g.value(out).to_vec();

    let p = &m.params;
    let stem_w = p.value(p.find("code.stem.w").unwrap());
    let stem_b = p.value(p.find("code.stem.b").unwrap());
    let mut g = Graph::new(p);
    let xv = g.input(Tensor::new(vec![1, 1, cfg.img_len], x).unwrap());
    let (w, b) = (g.input(stem_w.clone()), g.input(stem_b.clone()));
    let stem = g.conv1d(xv, w, Some(b), 1).unwrap();
    let stem = g.relu(stem);
    let (c0, ls) = (g.shape(stem)[1], g.shape(stem)[2]);
    let stem = g.value(stem).to_vec();
    let n = cfg.blocks;
    let len = ls - 4 * n;
    let ch = cfg.channels(n - 1);
    let mut feat = vec![0.0; ch * len];
    for c in 0..c0 {
        feat[c * len..(c + 1) * len].copy_from_slice(&stem[c * ls + 2 * n..c * ls + 2 * n + len]);
    }
    let hw = p.value(p.find("code.head.w").unwrap());
    let hb = p.value(p.find("code.head.b").unwrap());
    let d = cfg.embed_dim;
    assert_eq!(hw.shape(), [ch * len, d]);
    for j in 0..d {
        let want = hb.data()[j] + (0..ch * len).map(|f| feat[f] * hw.data()[f * d + j]).sum::<f64>();
        assert!((got[j] - want).abs() < 1e-9, "output {j}: {} vs {want}", got[j]);
    }
}

#[test]
fn geometry_plan_agrees_with_construction() {
    for family in ["lp", "gp", "rn"] {
        for blocks in 3..=7 {
            for (bn, pool, he) in [(false, true, true), (true, true, true), (false, false, true), (false, true, false)] {
                for (img_len, kernel) in [(64, 3), (128, 5), (512, 3), (512, 9)] {
                    let mut c = small(family);
                    c.blocks = blocks;
                    c.use_bn = bn;
                    c.use_pooling = pool;
                    c.use_he_init = he;
                    c.img_len = img_len;
                    c.kernel = kernel;
                    let plan = shape_plan(&c);
                    let model = ClcpModel::<f32>::new(&c, 20, 0);
                    assert_eq!(plan.is_ok(), model.is_ok(), "{} len {img_len} k {kernel}", c.id());
                    if let (Ok(plan), Ok(model)) = (plan, model) {
                        let imgs = images(2, img_len, 1);
                        let e = model.embed_code(&refs(&imgs)).unwrap();
                        assert_eq!(e.shape(), [2, c.embed_dim]);
                        let hw = model.params.value(model.code.head_w);
                        assert_eq!(hw.shape()[0], plan.features, "{}", c.id());
                    }
                }
            }
        }
    }
}

#[test]
fn global_family_has_one_position_before_head() {
    let mut c = small("gp");
    c.blocks = 4;
    let plan = shape_plan(&c).unwrap();
    assert_eq!(c.pool_scope, PoolScope::Global);
    assert_eq!(plan.stages.last().unwrap().len, 1);
    assert_eq!(plan.features, c.channels(3));
    let mut r = small("rn");
    r.arch = Arch::Residual;
    assert_eq!(shape_plan(&r).unwrap().stages.last().unwrap().len, 1);
}

#[test]
fn non_finite_activation_names_the_layer() {
    let cfg = small("lp");
    let imgs = images(2, cfg.img_len, 0);
    let mut m = ClcpModel::<f64>::new(&cfg, 30, 7).unwrap();
    let id = m.params.find("code.block2.conv.b").unwrap();
    m.params.get_mut(id).value.data_mut()[0] = f64::NAN;
    match m.embed_code(&refs(&imgs)) {
        Err(Error::NonFinite(msg)) => assert!(msg.contains("code.block2.conv"), "{msg}"),
        other => panic!("expected a non-finite error, got {other:?}"),
    }
    let mut m = ClcpModel::<f64>::new(&cfg, 30, 7).unwrap();
    let id = m.params.find("text.tok").unwrap();
    m.params.get_mut(id).value.data_mut().fill(f64::INFINITY);
    match m.embed_text(&[vec![2, 3]]) {
        Err(Error::NonFinite(msg)) => assert!(msg.contains("text.layer1"), "{msg}"),
        other => panic!("expected a non-finite error, got {other:?}"),
    }
}
