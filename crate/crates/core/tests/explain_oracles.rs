use ndarray::{array, Array1, Array2, ArrayView1};
use nidsx_core::explain::{
    exact_shap_all, exact_shap_bruteforce, explain_batch, kernel_shap, kernel_shap_all, BackgroundSet, ExplainError,
    FnModel, KernelShapConfig, Model,
};
use nidsx_core::nn::{Classifier, ModelFamily, ModelSpec, Params};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-1.0..1.0))
}

/// Softmax over a few random nonlinear scores, with pairwise interactions.
struct RandomNonlinear {
    w: Array2<f64>,
    pair: Vec<(usize, usize, f64)>,
}

impl RandomNonlinear {
    fn new(m: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let pair = (0..m).map(|_| (rng.random_range(0..m), rng.random_range(0..m), rng.random_range(-2.0..2.0))).collect();
        Self { w: random_matrix(m, outputs, rng), pair }
    }
}

impl Model for RandomNonlinear {
    fn num_outputs(&self) -> usize {
        self.w.ncols()
    }

    fn predict(&self, rows: ndarray::ArrayView2<'_, f64>) -> Result<Array2<f64>, ExplainError> {
        let mut out = rows.dot(&self.w);
        for (r, mut o) in out.rows_mut().into_iter().enumerate() {
            let inter: f64 = self.pair.iter().map(|&(a, b, c)| c * rows[[r, a]] * rows[[r, b]]).sum();
            o.mapv_inplace(|v| (v + inter).tanh());
            let max = o.fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            o.mapv_inplace(|v| (v - max).exp());
            let s = o.sum();
            o /= s;
        }
        Ok(out)
    }
}

fn full(m: usize) -> KernelShapConfig {
    KernelShapConfig { n_coalitions: (1 << m) - 2, seed: 1 }
}

#[test]
fn linear_model_example() {
    let model = FnModel::new(1, |x: ArrayView1<'_, f64>| vec![2.0 * x[0] + 3.0 * x[1]]);
    let bg = BackgroundSet::new(array![[0.0, 0.0]], 0).unwrap();
    let a = kernel_shap(&model, array![1.0, 1.0].view(), &bg, 0, &KernelShapConfig::default(), 0).unwrap();
    assert!(a.base_value.abs() < 1e-12);
    assert!((a.phi[0] - 2.0).abs() < 1e-12 && (a.phi[1] - 3.0).abs() < 1e-12);
}

#[test]
fn symmetric_model_example() {
    let model = FnModel::new(1, |x: ArrayView1<'_, f64>| vec![x[0] + x[1]]);
    let bg = BackgroundSet::new(array![[0.0, 0.0], [0.5, 0.5]], 0).unwrap();
    let a = kernel_shap(&model, array![1.0, 1.0].view(), &bg, 0, &KernelShapConfig::default(), 0).unwrap();
    assert!((a.phi[0] - a.phi[1]).abs() < 1e-9);
}

#[test]
fn linear_closed_form_with_sampling_at_41_features() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w: Vec<f64> = (0..41).map(|_| rng.random_range(-1.0..1.0)).collect();
    let wc = w.clone();
    let model = FnModel::new(1, move |x: ArrayView1<'_, f64>| vec![0.3 + x.iter().zip(&wc).map(|(a, b)| a * b).sum::<f64>()]);
    let bg = BackgroundSet::new(random_matrix(20, 41, &mut rng), 0).unwrap();
    let x = Array1::from_shape_fn(41, |_| rng.random_range(-1.0..1.0));
    let a = kernel_shap(&model, x.view(), &bg, 0, &KernelShapConfig { n_coalitions: 2048, seed: 5 }, 3).unwrap();
    let mean = bg.rows.mean_axis(ndarray::Axis(0)).unwrap();
    for j in 0..41 {
        assert!((a.phi[j] - w[j] * (x[j] - mean[j])).abs() < 1e-9, "feature {j}");
    }
}

#[test]
fn nonlinear_eight_features_full_enumeration_matches_bruteforce() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for case in 0..5 {
        let model = RandomNonlinear::new(8, 5, &mut rng);
        let bg = BackgroundSet::new(random_matrix(6, 8, &mut rng), 0).unwrap();
        let x = Array1::from_shape_fn(8, |_| rng.random_range(-1.0..1.0));
        let kernel = kernel_shap_all(&model, x.view(), &bg, &full(8), case).unwrap();
        let exact = exact_shap_all(&model, x.view(), &bg, case).unwrap();
        for (k, e) in kernel.iter().zip(&exact) {
            assert!((k.base_value - e.base_value).abs() < 1e-12);
            assert!(!k.singular);
            for j in 0..8 {
                assert!((k.phi[j] - e.phi[j]).abs() < 1e-6, "case {case} class {} feature {j}", k.class_index);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn full_enumeration_equals_bruteforce(m in 2usize..=10, seed in 0u64..1000, b in 1usize..4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = RandomNonlinear::new(m, 3, &mut rng);
        let bg = BackgroundSet::new(random_matrix(b, m, &mut rng), 0).unwrap();
        let x = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
        let kernel = kernel_shap_all(&model, x.view(), &bg, &full(m), 0).unwrap();
        let exact = exact_shap_all(&model, x.view(), &bg, 0).unwrap();
        for (k, e) in kernel.iter().zip(&exact) {
            for j in 0..m {
                prop_assert!((k.phi[j] - e.phi[j]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn bruteforce_efficiency_and_base_values(m in 1usize..=8, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = RandomNonlinear::new(m, 5, &mut rng);
        let bg = BackgroundSet::new(random_matrix(3, m, &mut rng), 0).unwrap();
        let x = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
        let exact = exact_shap_all(&model, x.view(), &bg, 0).unwrap();
        for a in &exact {
            prop_assert!(a.local_accuracy_gap() < 1e-12);
        }
        let base_sum: f64 = exact.iter().map(|a| a.base_value).sum();
        prop_assert!((base_sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn bruteforce_linearity(m in 1usize..=7, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = RandomNonlinear::new(m, 1, &mut rng);
        let g = RandomNonlinear::new(m, 1, &mut rng);
        let bg = BackgroundSet::new(random_matrix(2, m, &mut rng), 0).unwrap();
        let x = Array1::from_shape_fn(m, |_| rng.random_range(-1.0..1.0));
        let both = FnModel::new(1, |row: ArrayView1<'_, f64>| {
            let r = row.insert_axis(ndarray::Axis(0));
            vec![f.predict(r).unwrap()[[0, 0]] + g.predict(r).unwrap()[[0, 0]]]
        });
        let pf = exact_shap_bruteforce(&f, x.view(), &bg, 0, 0).unwrap();
        let pg = exact_shap_bruteforce(&g, x.view(), &bg, 0, 0).unwrap();
        let pb = exact_shap_bruteforce(&both, x.view(), &bg, 0, 0).unwrap();
        for j in 0..m {
            prop_assert!((pb.phi[j] - pf.phi[j] - pg.phi[j]).abs() < 1e-12);
        }
    }
}

#[test]
fn constant_model_bruteforce() {
    let model = FnModel::new(2, |_x: ArrayView1<'_, f64>| vec![0.7, 0.3]);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let bg = BackgroundSet::new(random_matrix(4, 6, &mut rng), 0).unwrap();
    let a = exact_shap_bruteforce(&model, array![1.0, 2.0, 3.0, 4.0, 5.0, 6.0].view(), &bg, 0, 0).unwrap();
    assert_eq!(a.base_value, 0.7);
    assert!(a.phi.iter().all(|&p| p == 0.0));
}

#[test]
fn missingness_bruteforce_and_sampled() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let small = RandomNonlinear::new(7, 5, &mut rng);
    let mut bg = random_matrix(5, 7, &mut rng);
    bg.column_mut(2).fill(0.25);
    let bg = BackgroundSet::new(bg, 0).unwrap();
    let mut x = Array1::from_shape_fn(7, |_| rng.random_range(-1.0..1.0));
    x[2] = 0.25;
    for a in exact_shap_all(&small, x.view(), &bg, 0).unwrap() {
        assert_eq!(a.phi[2], 0.0);
    }

    let wide = RandomNonlinear::new(41, 5, &mut rng);
    let mut bg = random_matrix(10, 41, &mut rng);
    let mut x = Array1::from_shape_fn(41, |_| rng.random_range(-1.0..1.0));
    for j in [0, 17, 40] {
        bg.column_mut(j).fill(-0.5);
        x[j] = -0.5;
    }
    let bg = BackgroundSet::new(bg, 0).unwrap();
    for a in kernel_shap_all(&wide, x.view(), &bg, &KernelShapConfig::default(), 0).unwrap() {
        for j in [0, 17, 40] {
            assert!(a.phi[j].abs() < 1e-9);
        }
    }
}

#[test]
fn symmetry_of_exchangeable_features_full_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let model = FnModel::new(1, |x: ArrayView1<'_, f64>| vec![(x[0] + x[1]).tanh() + 0.1 * x[2] * x[3]]);
    let mut bg = random_matrix(8, 12, &mut rng);
    for mut row in bg.rows_mut() {
        row[1] = row[0];
    }
    let bg = BackgroundSet::new(bg, 0).unwrap();
    let mut x = Array1::from_shape_fn(12, |_| rng.random_range(-1.0..1.0));
    x[1] = x[0];
    let a = kernel_shap(&model, x.view(), &bg, 0, &full(12), 0).unwrap();
    assert!((a.phi[0] - a.phi[1]).abs() < 1e-9, "{} vs {}", a.phi[0], a.phi[1]);
}

#[test]
fn sampled_local_accuracy_and_base_value_normalisation() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let model = RandomNonlinear::new(41, 5, &mut rng);
    let bg = BackgroundSet::new(random_matrix(30, 41, &mut rng), 0).unwrap();
    let xs = random_matrix(4, 41, &mut rng);
    let ids = [10, 11, 12, 13];
    let all = explain_batch(&model, xs.view(), &ids, &bg, &KernelShapConfig::default()).unwrap();
    assert_eq!(all.len(), 20);
    for (i, chunk) in all.chunks(5).enumerate() {
        let direct = model.predict(xs.slice(ndarray::s![i..i + 1, ..])).unwrap();
        let sum: f64 = chunk.iter().map(|a| a.base_value).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        for a in chunk {
            assert_eq!(a.instance_id, ids[i]);
            assert!((a.prediction - direct[[0, a.class_index]]).abs() < 1e-12);
            assert!(a.local_accuracy_gap() < 1e-9);
        }
    }
}

#[test]
fn batch_of_one_matches_single_call_bit_exactly() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    let model = RandomNonlinear::new(41, 5, &mut rng);
    let bg = BackgroundSet::new(random_matrix(10, 41, &mut rng), 0).unwrap();
    let xs = random_matrix(3, 41, &mut rng);
    let cfg = KernelShapConfig { n_coalitions: 300, seed: 99 };
    let batch = explain_batch(&model, xs.view(), &[5, 6, 7], &bg, &cfg).unwrap();
    let one = explain_batch(&model, xs.slice(ndarray::s![1..2, ..]), &[6], &bg, &cfg).unwrap();
    let single = kernel_shap_all(&model, xs.row(1), &bg, &cfg, 6).unwrap();
    assert_eq!(one, single);
    assert_eq!(&batch[5..10], &single[..]);
    let again = explain_batch(&model, xs.view(), &[5, 6, 7], &bg, &cfg).unwrap();
    assert_eq!(batch, again);
}

#[test]
fn classifier_models_are_explainable() {
    for family in [ModelFamily::Cnn, ModelFamily::Lstm] {
        let spec = ModelSpec::reference(family);
        let params = Params::init(&spec, 3).unwrap();
        let clf = Classifier { spec, params };
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bg = BackgroundSet::new(Array2::from_shape_fn((5, 41), |_| rng.random_range(0.0..1.0)), 0).unwrap();
        let x = Array1::from_shape_fn(41, |_| rng.random_range(0.0..1.0));
        let attrs = kernel_shap_all(&clf, x.view(), &bg, &KernelShapConfig { n_coalitions: 100, seed: 1 }, 0).unwrap();
        let sum: f64 = attrs.iter().map(|a| a.base_value).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(attrs.iter().all(|a| a.local_accuracy_gap() < 1e-9));
    }
}

#[test]
fn error_cases() {
    let model = FnModel::new(1, |x: ArrayView1<'_, f64>| vec![x.sum()]);
    let bg = BackgroundSet::new(Array2::zeros((2, 13)), 0).unwrap();
    let x = Array1::ones(13);
    assert!(matches!(exact_shap_bruteforce(&model, x.view(), &bg, 0, 0), Err(ExplainError::TooManyFeatures(13))));
    assert!(matches!(
        kernel_shap(&model, x.view(), &bg, 0, &KernelShapConfig { n_coalitions: 5, seed: 0 }, 0),
        Err(ExplainError::InsufficientCoalitions { .. })
    ));
    assert!(matches!(kernel_shap(&model, Array1::ones(3).view(), &bg, 0, &KernelShapConfig::default(), 0), Err(ExplainError::ShapeMismatch(_))));
}
