//! Times prepare, train and explain on synthetic data: `explain_timing [cnn|lstm] [instances]`.

use std::time::Instant;

use nidsx_core::data::synthetic::write_synthetic;
use nidsx_core::nn::ModelFamily;
use nidsx_core::pipeline::{Pipeline, PipelineConfig};

fn main() {
    let family: ModelFamily = std::env::args().nth(1).unwrap_or_else(|| "cnn".into()).parse().unwrap();
    let instances: usize = std::env::args().nth(2).and_then(|s| s.parse().ok()).unwrap_or(2);
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.txt");
    write_synthetic(&data, 5000, 1).unwrap();
    let mut c = PipelineConfig { out_dir: dir.path().join("run"), models: vec![family], ..Default::default() };
    c.data.train_path = data;
    c.train.epochs = 2;
    c.explain.instances = instances;
    let p = Pipeline::new(c).unwrap();
    p.prepare_data().unwrap();
    p.train_model(family).unwrap();
    let start = Instant::now();
    let out = p.explain_model(family).unwrap();
    println!("{family:?}: {instances} instances in {:.2?}; {}", start.elapsed(), out.summary.trim());
}
