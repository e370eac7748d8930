//! Acceptance checks: one PASS/FAIL/BLOCKED line per criterion.
//!
//! Criteria that need the NSL-KDD training file read it from
//! `NIDSX_KDD_TRAIN` or `data/KDDTrain+.txt` at the workspace root and report
//! BLOCKED when it is absent. With the file present the model criterion uses
//! a seeded 20,000-row subsample unless `NIDSX_ACCEPTANCE_FULL=1` is set.
//! Only FAIL lines make the target exit non-zero.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use ndarray::{array, Array1, Array2, Array3, ArrayView1, ArrayView2};
use nidsx_core::data::synthetic::write_synthetic;
use nidsx_core::data::{class_distribution, encode_labels, read_nslkdd, AttackClass, NUM_FEATURES};
use nidsx_core::explain::{
    exact_shap_all, kernel_shap, kernel_shap_all, BackgroundSet, ExplainError, ExplanationBundle, FnModel,
    KernelShapConfig, Model,
};
use nidsx_core::metrics::{aggregate, auc, class_report, confusion_matrix, per_class_counts, roc_curve};
use nidsx_core::nn::{check_gradients, Activation, LayerSpec, ModelFamily, ModelSpec, Padding, Params, Targets};
use nidsx_core::pipeline::{MetricsArtifact, Pipeline, PipelineConfig};
use nidsx_core::survey::{cronbach_alpha, sus_score};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

enum Verdict {
    Pass(String),
    Fail(String),
    Blocked(String),
    /// Soft criteria are reported, never asserted.
    Soft(String),
}

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn dataset_path() -> Option<PathBuf> {
    let path = std::env::var_os("NIDSX_KDD_TRAIN")
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data/KDDTrain+.txt"));
    path.is_file().then_some(path)
}

fn blocked() -> Verdict {
    Verdict::Blocked("NSL-KDD KDDTrain+ not found (set NIDSX_KDD_TRAIN)".into())
}

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

// ---------------------------------------------------------------- dataset

fn dataset_integrity() -> Verdict {
    let Some(path) = dataset_path() else { return blocked() };
    let start = Instant::now();
    let records = match read_nslkdd(&path) {
        Ok(r) => r,
        Err(e) => return Verdict::Fail(format!("parse error: {e}")),
    };
    let labels = match encode_labels(&records) {
        Ok(l) => l,
        Err(e) => return Verdict::Fail(format!("label error: {e}")),
    };
    let elapsed = start.elapsed();
    let dist = class_distribution(&labels);
    let widths_ok = records.iter().all(|r| r.feature_values.len() == NUM_FEATURES);
    let normal = dist.get(AttackClass::Normal);
    let dos = dist.get(AttackClass::DoS);
    let ok = records.len() == 125_973
        && widths_ok
        && normal == 67_343
        && dos == 45_927
        && dist.total() == 125_973
        && elapsed < Duration::from_secs(10);
    check(
        ok,
        format!(
            "records {} (41 features each: {widths_ok}), Normal {normal}, DoS {dos}, sum {}, {:.2}s",
            records.len(),
            dist.total(),
            elapsed.as_secs_f64()
        ),
    )
}

// ------------------------------------------------------- dataset pipeline

struct DatasetRun {
    _dir: tempfile::TempDir,
    pipeline: Pipeline,
    full: bool,
    explain_seconds: Vec<(ModelFamily, f64)>,
    error: Option<String>,
}

/// Runs every stage once on the real dataset; shared by the model, Shapley
/// and qualitative criteria.
fn dataset_run() -> Option<DatasetRun> {
    let path = dataset_path()?;
    let full = std::env::var("NIDSX_ACCEPTANCE_FULL").is_ok_and(|v| v == "1");
    let dir = tempfile::tempdir().expect("temp dir");
    let mut config = PipelineConfig { out_dir: dir.path().join("run"), ..Default::default() };
    config.data.train_path = path;
    if !full {
        config.data.subsample = 20_000;
    }
    let pipeline = Pipeline::new(config).expect("valid default config");
    let mut run = DatasetRun { _dir: dir, pipeline, full, explain_seconds: Vec::new(), error: None };
    let result = (|| {
        run.pipeline.prepare_data()?;
        for family in [ModelFamily::Cnn, ModelFamily::Lstm] {
            run.pipeline.train_model(family)?;
            run.pipeline.evaluate_model(family)?;
            let start = Instant::now();
            run.pipeline.explain_model(family)?;
            run.explain_seconds.push((family, start.elapsed().as_secs_f64()));
        }
        Ok::<_, nidsx_core::pipeline::PipelineError>(())
    })();
    run.error = result.err().map(|e| e.to_string());
    Some(run)
}

fn model_accuracy(run: Option<&DatasetRun>) -> Verdict {
    let Some(run) = run else { return blocked() };
    if let Some(e) = &run.error {
        return Verdict::Fail(format!("pipeline error: {e}"));
    }
    let threshold = if run.full { 0.97 } else { 0.95 };
    let mut ok = true;
    let mut parts = vec![format!(
        "{} (threshold {threshold})",
        if run.full { "full split" } else { "20,000-row subsample" }
    )];
    for family in [ModelFamily::Cnn, ModelFamily::Lstm] {
        let bytes = std::fs::read(run.pipeline.metrics_path(family)).expect("metrics written");
        let m: MetricsArtifact = serde_json::from_slice(&bytes).expect("metrics parse");
        let f1 = |c: AttackClass| m.report.per_class[c.code()].metrics.f1;
        let (dos, normal) = (f1(AttackClass::DoS), f1(AttackClass::Normal));
        ok &= m.accuracy >= threshold;
        if run.full {
            ok &= dos >= 0.97 && normal >= 0.97;
        }
        parts.push(format!("{}: acc {:.4}, F1 DoS {dos:.4}, F1 Normal {normal:.4}", family.name(), m.accuracy));
    }
    check(ok, parts.join("; "))
}

fn shapley_dataset_parts(run: Option<&DatasetRun>) -> (bool, String) {
    let Some(run) = run else {
        return (true, "NSL-KDD local accuracy and batch runtime BLOCKED (dataset absent)".into());
    };
    if let Some(e) = &run.error {
        return (false, format!("pipeline error: {e}"));
    }
    let mut ok = true;
    let mut parts = Vec::new();
    for (family, seconds) in &run.explain_seconds {
        let bundle = ExplanationBundle::load(&run.pipeline.explanation_path(*family)).expect("bundle written");
        let attrs = bundle.attributions();
        let gap = attrs.iter().map(|a| a.local_accuracy_gap()).fold(0.0, f64::max);
        ok &= gap < 1e-3 && attrs.len() == 500 && *seconds < 600.0;
        parts.push(format!("{}: {} attributions, max gap {gap:.2e}, {seconds:.0}s", family.name(), attrs.len()));
    }
    (ok, parts.join("; "))
}

fn qualitative(run: Option<&DatasetRun>) -> Verdict {
    let Some(run) = run else { return blocked() };
    if run.error.is_some() {
        return Verdict::Soft("no explanations (pipeline error)".into());
    }
    let named = ["srv_serror_rate", "dst_host_srv_serror_rate", "serror_rate", "dst_host_serror_rate", "logged_in"];
    let mut met = true;
    let mut parts = Vec::new();
    for (family, _) in &run.explain_seconds {
        let bundle = ExplanationBundle::load(&run.pipeline.explanation_path(*family)).expect("bundle written");
        let dos = bundle.summaries.iter().find(|s| s.class_index == AttackClass::DoS.code()).expect("DoS summary");
        let top: Vec<&str> = dos.top(10).map(|f| f.feature.as_str()).collect();
        let hits = named.iter().filter(|n| top.contains(n)).count();
        met &= hits >= 2;
        parts.push(format!("{}: {hits} named features in DoS top-10 {top:?}", family.name()));
    }
    Verdict::Soft(format!("{} ({})", if met { "met" } else { "not met" }, parts.join("; ")))
}

// -------------------------------------------------------------- gradients

fn random_spec(kind: usize, rng: &mut ChaCha8Rng) -> ModelSpec {
    let act = [Activation::Tanh, Activation::Sigmoid, Activation::Relu, Activation::Linear][rng.random_range(0..4)];
    let smooth = [Activation::Tanh, Activation::Sigmoid][rng.random_range(0..2)];
    let len = rng.random_range(3..9);
    let ch = rng.random_range(1..4);
    let mut layers = match kind {
        0 => vec![
            LayerSpec::Dense { units: rng.random_range(2..7), activation: smooth },
            LayerSpec::Dropout { rate: 0.3 },
        ],
        1 => vec![
            LayerSpec::Conv1d {
                filters: rng.random_range(1..4),
                kernel_width: rng.random_range(1..4),
                stride: rng.random_range(1..3),
                padding: if rng.random_bool(0.5) { Padding::Same } else { Padding::Valid },
                activation: act,
            },
            LayerSpec::Conv1d { filters: 2, kernel_width: 2, stride: 1, padding: Padding::Same, activation: smooth },
        ],
        2 => vec![
            LayerSpec::Conv1d { filters: 2, kernel_width: 3, stride: 1, padding: Padding::Same, activation: smooth },
            LayerSpec::MaxPool1d { window: 2, stride: rng.random_range(1..3) },
        ],
        _ => vec![
            LayerSpec::Lstm { hidden_units: rng.random_range(2..5), return_sequences: true },
            LayerSpec::Dropout { rate: 0.3 },
            LayerSpec::Lstm { hidden_units: rng.random_range(2..5), return_sequences: false },
        ],
    };
    layers.push(LayerSpec::Dense { units: 5, activation: Activation::Linear });
    layers.push(LayerSpec::Softmax);
    let family = if kind == 3 { ModelFamily::Lstm } else { ModelFamily::Cnn };
    ModelSpec { family, layers, input_shape: (len, ch), output_classes: 5 }
}

fn gradient_correctness() -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let (mut worst, mut worst_at, mut cases) = (0.0f64, String::new(), 0);
    for case in 0..40u64 {
        let spec = random_spec((case % 4) as usize, &mut rng);
        if spec.shapes().is_err() {
            continue;
        }
        let mut params = Params::init(&spec, case).expect("init");
        for t in params.tensors_mut() {
            for v in t.iter_mut() {
                *v += rng.random_range(-0.1..0.1);
            }
        }
        let (len, ch) = spec.input_shape;
        let x = Array3::from_shape_fn((3, len, ch), |_| rng.random_range(-1.0..1.0));
        let y: Vec<usize> = (0..3).map(|_| rng.random_range(0..5)).collect();
        let targets = Targets::Sparse(&y);
        match check_gradients(&spec, &params, x.view(), targets, None, 1e-5) {
            Ok(r) if r.max_rel_error > worst => {
                worst = r.max_rel_error;
                worst_at = format!("case {case} {}", r.worst_entry);
            }
            Ok(_) => {}
            Err(e) => return Verdict::Fail(format!("case {case}: {e}")),
        }
        cases += 1;
    }
    let elapsed = start.elapsed();
    check(
        worst < 1e-4 && elapsed < Duration::from_secs(120),
        format!("{cases} random configs, max rel error {worst:.2e} ({worst_at}), {:.1}s", elapsed.as_secs_f64()),
    )
}

// ---------------------------------------------------------------- metrics

fn pair_auc(scores: &[f64], positive: &[bool]) -> f64 {
    let (mut wins, mut pairs) = (0.0, 0.0);
    for (&si, _) in scores.iter().zip(positive).filter(|(_, &p)| p) {
        for (&sj, _) in scores.iter().zip(positive).filter(|(_, &p)| !p) {
            pairs += 1.0;
            wins += if si > sj { 1.0 } else if si == sj { 0.5 } else { 0.0 };
        }
    }
    wins / pairs
}

fn metric_oracles() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let mut worst = 0.0f64;
    for case in 0..1000 {
        let n = rng.random_range(1..80);
        let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..5)).collect();
        let pred: Vec<usize> = truth.iter().map(|&t| if rng.random_bool(0.7) { t } else { rng.random_range(0..5) }).collect();
        let scores = Array2::from_shape_fn((n, 5), |_| rng.random_range(0..10) as f64 / 10.0);

        let cm = confusion_matrix(&truth, &pred, 5).expect("valid labels");
        let counts = per_class_counts(&cm);
        let report = class_report(&counts);
        let agg = aggregate(&report, &cm);
        let (mut weighted_recall, mut macro_f1) = (0.0, 0.0);
        for c in 0..5 {
            for p in 0..5 {
                let naive = truth.iter().zip(&pred).filter(|(&t, &q)| t == c && q == p).count() as u64;
                if cm.counts[c][p] != naive {
                    return Verdict::Fail(format!("case {case}: confusion[{c}][{p}]"));
                }
            }
            let tp = truth.iter().zip(&pred).filter(|(&t, &p)| t == c && p == c).count() as u64;
            let fp = truth.iter().zip(&pred).filter(|(&t, &p)| t != c && p == c).count() as u64;
            let fn_ = truth.iter().zip(&pred).filter(|(&t, &p)| t == c && p != c).count() as u64;
            let tn = n as u64 - tp - fp - fn_;
            let k = counts[c];
            if (k.tp, k.fp, k.fn_, k.tn) != (tp, fp, fn_, tn) {
                return Verdict::Fail(format!("case {case}: counts for class {c}"));
            }
            let prec = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let rec = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f1 = if prec + rec == 0.0 { 0.0 } else { 2.0 * prec * rec / (prec + rec) };
            for (got, want) in [(report[c].precision, prec), (report[c].recall, rec), (report[c].f1, f1)] {
                worst = worst.max((got - want).abs());
            }
            weighted_recall += rec * (tp + fn_) as f64 / n as f64;
            macro_f1 += f1 / 5.0;

            let positive: Vec<bool> = truth.iter().map(|&t| t == c).collect();
            if let Ok(curve) = roc_curve(scores.view(), &truth, c) {
                let col: Vec<f64> = scores.column(c).to_vec();
                worst = worst.max((auc(&curve) - pair_auc(&col, &positive)).abs());
            }
        }
        let acc = truth.iter().zip(&pred).filter(|(t, p)| t == p).count() as f64 / n as f64;
        worst = worst
            .max((agg.accuracy - acc).abs())
            .max((agg.weighted_avg.recall - weighted_recall).abs())
            .max((agg.macro_avg.f1 - macro_f1).abs())
            .max((agg.accuracy - agg.weighted_avg.recall).abs());
    }
    check(worst <= 1e-12, format!("1000 random cases, counts exact, max real deviation {worst:.1e}"))
}

// ---------------------------------------------------------------- shapley

struct Nonlinear {
    w: Array2<f64>,
    pairs: Vec<(usize, usize, f64)>,
}

impl Model for Nonlinear {
    fn num_outputs(&self) -> usize {
        self.w.ncols()
    }

    fn predict(&self, rows: ArrayView2<'_, f64>) -> Result<Array2<f64>, ExplainError> {
        let mut out = rows.dot(&self.w);
        for (r, mut o) in out.rows_mut().into_iter().enumerate() {
            let inter: f64 = self.pairs.iter().map(|&(a, b, c)| c * rows[[r, a]] * rows[[r, b]]).sum();
            o.mapv_inplace(|v| (v + inter).tanh());
        }
        Ok(out)
    }
}

fn shapley(run: Option<&DatasetRun>) -> Verdict {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(84);

    let mut enum_gap = 0.0f64;
    for case in 0..30u64 {
        let m = 2 + (case as usize % 9);
        let pairs = (0..m).map(|_| (rng.random_range(0..m), rng.random_range(0..m), rng.random_range(-2.0..2.0))).collect();
        let model = Nonlinear { w: random_matrix(m, 3, &mut rng), pairs };
        let bg = BackgroundSet::new(random_matrix(rng.random_range(1..5), m, &mut rng), 0).expect("background");
        let x = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
        let cfg = KernelShapConfig { n_coalitions: (1 << m) - 2, seed: case };
        let kernel = kernel_shap_all(&model, x.view(), &bg, &cfg, 0).expect("kernel");
        let exact = exact_shap_all(&model, x.view(), &bg, 0).expect("exact");
        for (k, e) in kernel.iter().zip(&exact) {
            enum_gap = k.phi.iter().zip(&e.phi).map(|(a, b)| (a - b).abs()).fold(enum_gap, f64::max);
        }
    }

    let w: Vec<f64> = (0..41).map(|_| rng.random_range(-1.0..1.0)).collect();
    let wc = w.clone();
    let linear = FnModel::new(1, move |x: ArrayView1<'_, f64>| vec![0.2 + x.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>()]);
    let bg = BackgroundSet::new(random_matrix(25, 41, &mut rng), 0).expect("background");
    let mean = bg.rows.mean_axis(ndarray::Axis(0)).expect("non-empty");
    let x = Array1::from_shape_fn(41, |_| rng.random_range(-1.0..1.0));
    let a = kernel_shap(&linear, x.view(), &bg, 0, &KernelShapConfig::default(), 0).expect("linear");
    let linear_gap = (0..41).map(|j| (a.phi[j] - w[j] * (x[j] - mean[j])).abs()).fold(0.0, f64::max);

    // Missingness: a feature equal to every background value gets zero.
    let pairs = vec![(0, 5, 1.5), (5, 9, -1.0)];
    let model = Nonlinear { w: random_matrix(10, 5, &mut rng), pairs };
    let mut bgm = random_matrix(6, 10, &mut rng);
    bgm.column_mut(5).fill(0.4);
    let bg = BackgroundSet::new(bgm, 0).expect("background");
    let mut x = Array1::from_shape_fn(10, |_| rng.random_range(-1.0..1.0));
    x[5] = 0.4;
    let full10 = KernelShapConfig { n_coalitions: (1 << 10) - 2, seed: 3 };
    let missing = kernel_shap_all(&model, x.view(), &bg, &full10, 0)
        .expect("kernel")
        .iter()
        .map(|a| a.phi[5].abs())
        .fold(0.0, f64::max);

    // Symmetry: exchangeable features with equal values get equal attributions.
    let sym = FnModel::new(1, |x: ArrayView1<'_, f64>| vec![(x[0] + x[1]).tanh() * x[2] + 0.3 * x[3]]);
    let mut bgs = random_matrix(6, 10, &mut rng);
    for mut row in bgs.rows_mut() {
        row[1] = row[0];
    }
    let bg = BackgroundSet::new(bgs, 0).expect("background");
    let mut x = Array1::from_shape_fn(10, |_| rng.random_range(-1.0..1.0));
    x[1] = x[0];
    let s = kernel_shap(&sym, x.view(), &bg, 0, &full10, 0).expect("kernel");
    let symmetry = (s.phi[0] - s.phi[1]).abs();

    let (data_ok, data_detail) = shapley_dataset_parts(run);
    let detail = format!(
        "enum vs brute {enum_gap:.1e} (M 2..=10), linear {linear_gap:.1e}, missingness {missing:.1e}, symmetry {symmetry:.1e}, {:.1}s; {data_detail}",
        start.elapsed().as_secs_f64()
    );
    let synthetic_ok = enum_gap < 1e-6 && linear_gap < 1e-9 && missing < 1e-9 && symmetry < 1e-9;
    match (synthetic_ok && data_ok, run.is_some()) {
        (false, _) => Verdict::Fail(detail),
        (true, true) => Verdict::Pass(detail),
        (true, false) => Verdict::Blocked(format!("synthetic parts pass; {detail}")),
    }
}

// ----------------------------------------------------------------- survey

fn survey() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let base: Vec<f64> = (0..20).map(|_| rng.random_range(1..=5) as f64).collect();
    let correlated = Array2::from_shape_fn((20, 4), |(r, c)| base[r] + c as f64);
    let alpha_one = cronbach_alpha(correlated.view()).map(|s| s.alpha).unwrap_or(f64::NAN);
    let hand = array![[3.0, 2.0, 4.0], [1.0, 3.0, 2.0], [4.0, 4.0, 3.0], [2.0, 2.0, 4.0]];
    let alpha_hand = cronbach_alpha(hand.view()).map(|s| s.alpha).unwrap_or(f64::NAN);
    let best = sus_score(&[5, 1, 5, 1, 5, 1, 5, 1, 5, 1]).unwrap_or(f64::NAN);
    let mid = sus_score(&[3; 10]).unwrap_or(f64::NAN);
    let mut mirror_ok = true;
    for _ in 0..200 {
        let r: Vec<u8> = (0..10).map(|_| rng.random_range(1..=5)).collect();
        let m: Vec<u8> = r.iter().map(|v| 6 - v).collect();
        mirror_ok &= sus_score(&r).unwrap_or(f64::NAN) + sus_score(&m).unwrap_or(f64::NAN) == 100.0;
    }
    check(
        (alpha_one - 1.0).abs() < 1e-12
            && (alpha_hand - 3.75 / 13.0).abs() < 1e-9
            && best == 100.0
            && mid == 50.0
            && mirror_ok,
        format!("alpha correlated {alpha_one}, hand 4x3 {alpha_hand:.12} (3.75/13), SUS best {best}, neutral {mid}, mirror sums 100: {mirror_ok}"),
    )
}

// ------------------------------------------------------------ determinism

fn determinism() -> Verdict {
    let dir = tempfile::tempdir().expect("temp dir");
    let data = dir.path().join("train.txt");
    write_synthetic(&data, 2000, 17).expect("synthetic data");
    let run = |name: &str| {
        let mut c = PipelineConfig { out_dir: dir.path().join(name), seed: 9, ..Default::default() };
        c.data.train_path = data.clone();
        c.train.epochs = 3;
        c.explain.background_size = 10;
        c.explain.instances = 5;
        c.explain.coalitions = 256;
        let p = Pipeline::new(c).expect("config");
        p.run_all().map(|_| p)
    };
    let (a, b) = match (run("a"), run("b")) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return Verdict::Fail(format!("pipeline error: {e}")),
    };
    let mut compared = 0;
    for family in [ModelFamily::Cnn, ModelFamily::Lstm] {
        for (pa, pb) in [
            (a.metrics_path(family), b.metrics_path(family)),
            (a.roc_path(family), b.roc_path(family)),
            (a.explanation_path(family), b.explanation_path(family)),
        ] {
            if std::fs::read(&pa).ok() != std::fs::read(&pb).ok() {
                return Verdict::Fail(format!("{} differs between runs", pa.display()));
            }
            compared += 1;
        }
    }
    Verdict::Pass(format!("{compared} metric/ROC/explanation artifacts byte-identical across two seeded runs (synthetic fixture)"))
}

fn main() {
    let run = dataset_run();
    let results = [
        ("Dataset integrity", dataset_integrity()),
        ("Model accuracy", model_accuracy(run.as_ref())),
        ("Gradient correctness", gradient_correctness()),
        ("Metric oracle equivalence", metric_oracles()),
        ("Shapley correctness", shapley(run.as_ref())),
        ("Qualitative explanation check", qualitative(run.as_ref())),
        ("Survey analytics", survey()),
        ("Determinism", determinism()),
    ];
    let mut failed = 0;
    println!("\nacceptance criteria");
    for (name, verdict) in &results {
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Verdict::Blocked(d) => ("BLOCKED", d),
            Verdict::Soft(d) => ("SOFT", d),
        };
        println!("{tag:<8} {name}: {detail}");
    }
    println!();
    if failed > 0 {
        std::process::exit(1);
    }
}
