#![allow(dead_code)]

use fedsim_core::{
    datakit::{generate_synthetic, Dataset, SyntheticSpec},
    models::{Batch, Differentiable, ParamVector},
    numkit::make_rng_stream,
};

pub fn mixture(
    classes: usize,
    dim: usize,
    per_class: usize,
    separation: f64,
    seed: u64,
) -> Dataset {
    let spec = SyntheticSpec {
        num_classes: classes,
        input_dim: dim,
        samples_per_class: per_class,
        class_separation: separation,
        noise_scale: 1.0,
    };
    generate_synthetic(&spec, &mut make_rng_stream(seed, &[1])).unwrap()
}

/// Plain minibatch SGD written against raw slices, used as a reference.
pub fn reference_sgd_step<M: Differentiable>(
    model: &M,
    w: &[f64],
    batch: &Batch,
    lr: f64,
) -> Vec<f64> {
    let g = model
        .grad(&ParamVector::new(w.to_vec()).unwrap(), batch)
        .unwrap();
    w.iter()
        .zip(g.iter())
        .map(|(wi, gi)| wi - lr * gi)
        .collect()
}
