//! Acceptance suite. Criteria run one after another so the wall-clock
//! limits are measured without contention; each prints one PASS/FAIL line.

use std::fs;
use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use clcp_core::clcp::{clip_loss, train, TrainOptions};
use clcp_core::encoders::{ClcpModel, ModelConfig};
use clcp_core::ndnn::gradsuite::run_suite;
use clcp_core::ndnn::{he_init, Graph, ParamSet, PoolMode, Tensor};
use clcp_core::pylex::{tokenize, ComponentClass, Token};
use clcp_core::textclean::{clean_doc, Rule};
use clcp_core::vocab::{build_vocab, Decoded, IdRanges, NamespaceScope, Vocabulary};
use clcp_core::zeval::synth::{synth_distinct, synth_pairs, SynthSplit};
use clcp_core::zeval::{prepare, run_cell, zero_shot_match, Variant};

type Check = fn() -> Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn golden() -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../testdata/golden");
    let mut out: Vec<(String, String)> = fs::read_dir(&dir)
        .expect("golden corpus present")
        .filter_map(|e| {
            let p = e.ok()?.path();
            (p.extension()? == "py").then(|| {
                let stem = p.file_stem().unwrap().to_string_lossy().into_owned();
                (stem, fs::read_to_string(&p).unwrap())
            })
        })
        .collect();
    out.sort();
    out
}

fn streams(srcs: &[String]) -> Result<Vec<Vec<Token>>, String> {
    srcs.iter().map(|s| tokenize(s).map_err(|e| e.to_string())).collect()
}

fn vocab_of(streams: &[Vec<Token>]) -> Result<Vocabulary, String> {
    build_vocab(streams.iter().map(Vec::as_slice), &IdRanges::default()).map_err(|e| e.to_string())
}

fn ids(v: &Vocabulary, s: &[Token]) -> Result<(Vec<u32>, NamespaceScope), String> {
    let mut scope = NamespaceScope::new();
    let ids = v.assign_ids(s, &mut scope).map_err(|e| e.to_string())?;
    Ok((ids, scope))
}

fn clcp(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_clcp"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("clcp {args:?} failed: {}", String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn path(p: &Path) -> &str {
    p.to_str().expect("utf-8 temp path")
}

fn id_ranges() -> Result<String, String> {
    let t = Instant::now();
    let srcs: Vec<String> = golden().into_iter().map(|(_, s)| s).collect();
    ensure!(srcs.len() >= 200, "golden corpus has {} snippets", srcs.len());
    let st = streams(&srcs)?;
    let v = vocab_of(&st)?;
    let (mut tokens, mut keywords) = (0, 0);
    for s in &st {
        let (ids, _) = ids(&v, s)?;
        for (tok, id) in s.iter().zip(ids) {
            let r = v.ranges.get(tok.component);
            ensure!(r.contains(id), "{:?} {:?} got {id} outside {}-{}", tok.component, tok.text, r.lo, r.hi);
            if tok.component == ComponentClass::Keyword {
                ensure!((1..=35).contains(&id), "keyword {:?} got {id}", tok.text);
                keywords += 1;
            }
            tokens += 1;
        }
    }
    let secs = t.elapsed().as_secs_f64();
    ensure!(secs < 5.0, "took {secs:.2}s");
    Ok(format!("{} snippets, {tokens} tokens ({keywords} keywords) in range, {secs:.2}s", srcs.len()))
}

fn vocab_determinism() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let data = tmp.path().join("corpus.jsonl");
    clcp(&["synth", "--out", path(&data), "--n", "1000", "--seed", "5"])?;
    let (a, b) = (tmp.path().join("a.tsv"), tmp.path().join("b.tsv"));
    clcp(&["build-vocab", "--in", path(&data), "--out", path(&a)])?;
    clcp(&["build-vocab", "--in", path(&data), "--out", path(&b)])?;
    let (ba, bb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    ensure!(ba == bb, "vocabulary files differ");
    Ok(format!("two runs over 1000 snippets, {} identical bytes", ba.len()))
}

fn namespace_reuse() -> Result<String, String> {
    let pair = [
        "def f():\n    total = 1\n    return total\n".to_string(),
        "def g():\n    count = 2\n    return count\n".to_string(),
    ];
    let st = streams(&pair)?;
    let v = vocab_of(&st)?;
    for s in &st {
        let (ids, _) = ids(&v, s)?;
        let vars: Vec<u32> = s
            .iter()
            .zip(&ids)
            .filter(|(t, _)| t.component == ComponentClass::Variable)
            .map(|(_, &id)| id)
            .collect();
        ensure!(!vars.is_empty() && vars.iter().all(|&id| id == 7961), "variable ids {vars:?}");
    }

    let srcs: Vec<String> = golden().into_iter().map(|(_, s)| s).collect();
    let st = streams(&srcs)?;
    let base = vocab_of(&st)?;
    let base_ids: Vec<Vec<u32>> = st.iter().map(|s| ids(&base, s).map(|r| r.0)).collect::<Result<_, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for round in 0..5 {
        let mut order: Vec<usize> = (0..st.len()).collect();
        order.shuffle(&mut rng);
        let permuted: Vec<Vec<Token>> = order.iter().map(|&i| st[i].clone()).collect();
        let v = vocab_of(&permuted)?;
        for (i, s) in st.iter().enumerate() {
            ensure!(ids(&v, s)?.0 == base_ids[i], "permutation {round} changed snippet {i}");
        }
    }
    Ok(format!("both variables 7961; 5 permutations of {} snippets leave every sequence unchanged", st.len()))
}

fn shared_call(v: &Vocabulary, st: &[Vec<Token>], texts: [&str; 2]) -> Result<(ComponentClass, u32), String> {
    let mut found = Vec::new();
    for (s, want) in st.iter().zip(texts) {
        let (ids, _) = ids(v, s)?;
        let (tok, id) = s
            .iter()
            .zip(ids)
            .find(|(t, _)| t.text == want)
            .ok_or_else(|| format!("no token {want:?}"))?;
        found.push((tok.component, id));
    }
    ensure!(found[0] == found[1], "{texts:?} map to {found:?}");
    let list = v.lookup_list(found[0].1).ok_or_else(|| format!("no lookup list for {}", found[0].1))?;
    ensure!(texts.iter().all(|t| list.contains(*t)), "lookup list {list:?}");
    Ok(found[0])
}

fn call_abstraction() -> Result<String, String> {
    let refs = [
        "def f(a_param):\n    clean = a_param.strip\n    return clean()\n".to_string(),
        "def g(address):\n    trim = address.strip\n    return trim()\n".to_string(),
    ];
    let st = streams(&refs)?;
    let (class, id) = shared_call(&vocab_of(&st)?, &st, ["a_param.strip", "address.strip"])?;
    ensure!(class == ComponentClass::AttributeCall, "classified {class}");

    let calls = [
        "def f(a_param):\n    return a_param.strip()\n".to_string(),
        "def g(address):\n    return address.strip()\n".to_string(),
    ];
    let st = streams(&calls)?;
    let (ccls, cid) = shared_call(&vocab_of(&st)?, &st, ["a_param.strip", "address.strip"])?;
    Ok(format!("AttributeCall id {id} with lookup [a_param.strip, address.strip]; called form shares {ccls} id {cid}"))
}

fn round_trip() -> Result<String, String> {
    let srcs: Vec<String> = golden().into_iter().map(|(_, s)| s).collect();
    let st = streams(&srcs)?;
    let v = vocab_of(&st)?;
    let (mut tokens, mut via_lists) = (0, 0);
    for (i, s) in st.iter().enumerate() {
        let (ids, scope) = ids(&v, s)?;
        let decoded = v.decode(&ids, &scope).map_err(|e| e.to_string())?;
        for (tok, d) in s.iter().zip(&decoded) {
            ensure!(d.admits(&tok.text), "snippet {i}: {:?} decoded as {d:?}", tok.text);
            ensure!(d.component() == Some(tok.component), "snippet {i}: class of {:?}", tok.text);
            if matches!(d, Decoded::Candidates { .. }) {
                via_lists += 1;
            }
            tokens += 1;
        }
    }
    ensure!(via_lists > 0, "no call composites in the golden corpus");
    Ok(format!("{tokens} tokens recovered, {via_lists} through lookup lists"))
}

fn gradient_suite() -> Result<String, String> {
    let t = Instant::now();
    let reports = run_suite(20, 17).map_err(|e| e.to_string())?;
    let secs = t.elapsed().as_secs_f64();
    let mut worst = 0.0f64;
    for r in &reports {
        ensure!(r.shapes >= 20, "{}: {} shapes", r.op, r.shapes);
        ensure!(r.worst < 1e-4, "{}: relative error {:e} at {}", r.op, r.worst, r.worst_at);
        worst = worst.max(r.worst);
    }
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("{} ops x 20 shapes in f64, worst relative error {worst:.1e}, {secs:.1}s", reports.len()))
}

fn out_len(x: &[f64], k: usize, s: usize, conv: bool) -> Result<usize, String> {
    let ps = ParamSet::new();
    let mut g = Graph::new(&ps);
    let xv = g.input(Tensor::new(vec![1, 1, x.len()], x.to_vec()).unwrap());
    let y = if conv {
        let w = g.input(Tensor::full(&[1, 1, k], 1.0));
        g.conv1d(xv, w, None, s)
    } else {
        g.pool1d(xv, PoolMode::Max, k, s)
    }
    .map_err(|e| e.to_string())?;
    Ok(g.shape(y)[2])
}

fn shape_law() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let l = rng.random_range(1..=600);
        let k = rng.random_range(1..=l.min(16));
        let s = rng.random_range(1..=8);
        let x = vec![0.5; l];
        let want = (l - k) / s + 1;
        for conv in [true, false] {
            let got = out_len(&x, k, s, conv)?;
            ensure!(got == want, "L={l} k={k} s={s} conv={conv}: {got} != {want}");
        }
    }
    Ok("1000 (L, k, s) triples, conv and local pool".into())
}

fn he_statistics() -> Result<String, String> {
    let n = 100_000;
    let w: Tensor<f64> = he_init(&[n], 50, &mut ChaCha8Rng::seed_from_u64(11));
    let mean = w.data().iter().sum::<f64>() / n as f64;
    let var = w.data().iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
    ensure!(mean.abs() < 0.005, "mean {mean}");
    ensure!((var - 0.04).abs() < 0.004, "variance {var}");
    Ok(format!("mean {mean:+.5}, variance {var:.5} (target 0.04)"))
}

fn loss_sanity() -> Result<String, String> {
    let loss = |n: usize, d: Vec<f64>| clip_loss(&Tensor::new(vec![n, n], d).unwrap()).map_err(|e| e.to_string());
    let single = loss(1, vec![3.7])?;
    ensure!(single == 0.0, "N=1 loss {single}");
    let two = loss(2, vec![0.4; 4])?;
    ensure!((two - 2f64.ln()).abs() < 1e-9, "2x2 loss {two}");
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let n = rng.random_range(2..=8);
        let d: Vec<f64> = (0..n * n).map(|_| rng.random_range(-10.0..10.0)).collect();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let permuted: Vec<f64> = (0..n * n).map(|ij| d[perm[ij / n] * n + perm[ij % n]]).collect();
        let transposed: Vec<f64> = (0..n * n).map(|ij| d[(ij % n) * n + ij / n]).collect();
        let base = loss(n, d)?;
        for other in [loss(n, permuted)?, loss(n, transposed)?] {
            worst = worst.max((other - base).abs() / base.max(1e-12));
        }
    }
    ensure!(worst < 1e-12, "invariance broken by {worst:e}");
    Ok(format!("N=1 -> 0, 2x2 equal -> ln 2 ({:.1e} off), 200 permutation/transpose pairs agree", (two - 2f64.ln()).abs()))
}

fn overfit() -> Result<String, String> {
    let t = Instant::now();
    let mut cfg = ModelConfig::family("lp").map_err(|e| e.to_string())?;
    cfg.blocks = 3;
    cfg.batch_size = 32;
    cfg.patience = 0;
    cfg.val_fraction = 0.0;
    cfg.max_epochs = 200;
    let records = synth_distinct(32, 0).map_err(|e| e.to_string())?;
    let prep = prepare(&records, &[], &cfg).map_err(|e| e.to_string())?;
    ensure!(prep.train.len() == 32, "{} pairs encoded", prep.train.len());
    let mut model = ClcpModel::<f32>::new(&cfg, prep.text_vocab.len(), 0).map_err(|e| e.to_string())?;
    let opts = TrainOptions {
        track_train_acc: true,
        stop_at_train_acc: Some(1.0),
    };
    let out = train(&mut model, &prep.train, &opts, &mut |_| {}).map_err(|e| e.to_string())?;
    let last = out.metrics.last().ok_or("no epochs")?;
    let acc = last.train_acc.unwrap_or(0.0);
    let secs = t.elapsed().as_secs_f64();
    ensure!(acc == 1.0, "train matching {acc:.3} after {} epochs (loss {:.4})", last.epoch, last.train_loss);
    ensure!(secs < 600.0, "took {secs:.0}s");
    Ok(format!("{} reached 100% on 32 pairs at epoch {}, {secs:.1}s", cfg.id(), last.epoch))
}

fn zero_shot() -> Result<String, String> {
    let t = Instant::now();
    let cfg = ModelConfig::family("lp").map_err(|e| e.to_string())?;
    let train_set = synth_pairs(2000, SynthSplit::Train, 1).map_err(|e| e.to_string())?;
    let test_set = synth_pairs(200, SynthSplit::Test, 2).map_err(|e| e.to_string())?;
    let prep = prepare(&train_set, &test_set, &cfg).map_err(|e| e.to_string())?;
    let l = prep.test.len();
    ensure!(l == 200, "{l} test pairs encoded");
    let ea = 1.0 / l as f64;
    let sigma = (ea * (1.0 - ea) / l as f64).sqrt();
    let images: Vec<&[f32]> = prep.test.iter().map(|p| p.image.as_slice()).collect();
    let docs: Vec<Vec<usize>> = prep.test.iter().map(|p| p.text.clone()).collect();
    let seeds = [0u64, 1, 2];
    let mut trained = Vec::new();
    let mut untrained = Vec::new();
    for &seed in &seeds {
        let m = ClcpModel::<f32>::new(&cfg, prep.text_vocab.len(), seed).map_err(|e| e.to_string())?;
        let c = m.embed_code(&images).map_err(|e| e.to_string())?;
        let tx = m.embed_text(&docs).map_err(|e| e.to_string())?;
        let base = zero_shot_match(&c, &tx).map_err(|e| e.to_string())?.acc;
        ensure!((base - ea).abs() <= 3.0 * sigma, "untrained seed {seed}: {base:.3} vs EA {ea:.3} +- {:.3}", 3.0 * sigma);
        untrained.push(base);
        let cell = run_cell(&train_set, &test_set, &[l], &cfg, seed, Variant::Raw).map_err(|e| e.to_string())?;
        trained.push(cell.results[0].1.acc);
    }
    let mean = trained.iter().sum::<f64>() / seeds.len() as f64;
    let secs = t.elapsed().as_secs_f64();
    ensure!(mean > 5.0 * ea, "mean accuracy {mean:.3} <= 5 x EA {:.3} ({trained:?})", 5.0 * ea);
    ensure!(secs < 3600.0, "took {secs:.0}s");
    Ok(format!(
        "trained {trained:.3?} mean {mean:.3} > {:.3}; untrained {untrained:.3?} within 3 sigma ({:.3}) of {ea:.3}; {secs:.0}s",
        5.0 * ea,
        3.0 * sigma
    ))
}

fn ablation_matrix() -> Result<String, String> {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plan = tmp.path().join("plan.json");
    fs::write(&plan, r#"{"train_sizes": [500, 1000, 2000], "test_sizes": [50], "seed": 0}"#).unwrap();
    let out = tmp.path().join("ablate");
    clcp(&[
        "ablate", "--plan", path(&plan), "--out-dir", path(&out), "--family", "lp,gp,rn", "--blocks", "3",
        "--deltas", "none,+BN,-Pool,-Init", "--set", "img_len=256", "--set", "max_epochs=5",
    ])?;
    let dir = out.join("run-000");
    let table = fs::read_to_string(dir.join("ablation.txt")).map_err(|e| e.to_string())?;
    let csv = fs::read_to_string(dir.join("ablation.csv")).map_err(|e| e.to_string())?;
    let cells: Vec<&str> = csv.lines().skip(1).collect();
    ensure!(cells.len() == 12, "{} ablation cells", cells.len());
    for c in &cells {
        let f: Vec<&str> = c.split(',').collect();
        ensure!(f[5] == "0" && f[4] != "0", "cell without a completed run: {c}");
    }
    ensure!(!table.contains("failed"), "table has failed cells:\n{table}");
    let flags: Vec<serde_json::Value> =
        serde_json::from_str(&fs::read_to_string(dir.join("flags.json")).unwrap()).map_err(|e| e.to_string())?;
    let observed = flags.iter().filter(|f| f["observed"] == true).count();
    for line in table.lines() {
        println!("      | {line}");
    }
    Ok(format!("3 families x 4 deltas x 3 sizes complete; {observed}/{} direction flags observed", flags.len()))
}

fn text_cleaning() -> Result<String, String> {
    let url = "The algorithm used is based on streamlib's implementation of\n\"HyperLogLog in Practice: Algorithmic Engineering of a State\nof the Art Cardinality Estimation Algorithm\", available here\n<https://doi.org/10.1145/2452376.2452456>";
    let (out, rep) = clean_doc(url);
    ensure!(out.ends_with("available here") && !out.contains("doi") && !rep.dropped, "url example -> {out:?}");
    ensure!(rep.rules_fired.contains_key(&Rule::Url), "url rule not attributed");

    let demo = "Return the union of this RDD and another one.\n&amp;gt;&amp;gt;&amp;gt; rdd = sc.parallelize([1, 1, 2, 3])\n&amp;gt;&amp;gt;&amp;gt; rdd.union(rdd).collect()\n[1, 1, 2, 3, 1, 1, 2, 3]";
    let (out, _) = clean_doc(demo);
    ensure!(out == "Return the union of this RDD and another one.", "demonstration example -> {out:?}");

    let tree = "Structure:\ntrain_dir. person1 somename1.jpeg... somename1.jpeg ...";
    let (out, rep) = clean_doc(tree);
    ensure!(rep.rules_fired.contains_key(&Rule::DirectoryListing) && rep.dropped, "directory example -> {out:?}");

    let unclear = "[True, True, False, True, False], 2 -&gt;\n[[True,  True], [True, False], [False, True], [True, False],]";
    let (out, rep) = clean_doc(unclear);
    ensure!(rep.dropped, "demonstration-only example kept as {out:?}");

    let params = "Parameters\n----------\ni : int, slice, or sequence of integers\naxis : int";
    let (out, rep) = clean_doc(params);
    ensure!(out.is_empty() && rep.dropped && rep.rules_fired.contains_key(&Rule::ParameterTable), "parameter example -> {out:?}");

    let (out, rep) = clean_doc("no redundancy here");
    ensure!(out == "no redundancy here" && rep.rules_fired.is_empty(), "identity example -> {out:?}");

    let noise = [
        "",
        " See <https://example.org/docs/api> for details.",
        "\n>>> f(2)\n4",
        "\n&gt;&gt;&gt; x = g()\n&gt;&gt;&gt; x\n[1, 2]",
        "\n\nParameters\n----------\nx : int\n    The value.\n",
        "\nLayout:\ndata/train/a.png\ndata/train/b.png\n",
        "  \t  and   more   spacing ",
    ];
    let mut docs: Vec<String> = synth_pairs(4000, SynthSplit::Train, 9)
        .map_err(|e| e.to_string())?
        .into_iter()
        .enumerate()
        .map(|(i, r)| r.doc + noise[i % noise.len()])
        .collect();
    docs.extend([url, demo, tree, unclear, params].map(String::from));
    let mut changed = 0;
    for d in &docs {
        let once = clean_doc(d).0;
        ensure!(clean_doc(&once).0 == once, "not idempotent on {d:?}");
        changed += usize::from(&once != d);
    }

    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let plan = tmp.path().join("plan.json");
    fs::write(&plan, r#"{"train_sizes": [200, 400], "test_sizes": [50], "seed": 1}"#).unwrap();
    let out = tmp.path().join("ladder");
    clcp(&[
        "ladder", "--plan", path(&plan), "--out-dir", path(&out), "--variant", "cleaned", "--family", "lp",
        "--set", "img_len=128", "--set", "max_epochs=3",
    ])?;
    let results = fs::read_to_string(out.join("run-000/results.csv")).map_err(|e| e.to_string())?;
    let rows: Vec<&str> = results.lines().skip(1).collect();
    ensure!(rows.len() == 4, "{} ladder rows", rows.len());
    ensure!(rows.iter().all(|r| r.contains(",cleaned,") && r.contains(",ok,")), "ladder rows:\n{results}");
    Ok(format!(
        "6 examples as specified; idempotent on {} descriptions ({changed} changed); cleaned ladder {} rows ok",
        docs.len(),
        rows.len()
    ))
}

fn main() -> ExitCode {
    let criteria: [(&str, Check); 13] = [
        ("id ranges", id_ranges),
        ("vocabulary determinism", vocab_determinism),
        ("namespace reuse", namespace_reuse),
        ("call abstraction", call_abstraction),
        ("round trip", round_trip),
        ("gradient suite", gradient_suite),
        ("shape law", shape_law),
        ("he statistics", he_statistics),
        ("loss sanity", loss_sanity),
        ("overfit", overfit),
        ("zero-shot above chance", zero_shot),
        ("ablation matrix", ablation_matrix),
        ("text cleaning", text_cleaning),
    ];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    let total = Instant::now();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        if !only.is_empty() && !only.contains(&n) {
            continue;
        }
        let t = Instant::now();
        let result = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let took = fmt_secs(t.elapsed());
        match result {
            Ok(detail) => println!("criterion {n:>2} {name:<24} PASS {took:>8}  {detail}"),
            Err(why) => {
                println!("criterion {n:>2} {name:<24} FAIL {took:>8}  {why}");
                failed.push(n);
            }
        }
    }
    println!("acceptance: {} failed {:?}, {}", failed.len(), failed, fmt_secs(total.elapsed()));
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn fmt_secs(d: Duration) -> String {
    format!("{:.1}s", d.as_secs_f64())
}
