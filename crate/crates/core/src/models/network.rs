use super::{Batch, Classifier, Differentiable, ParamVector};
use crate::{error::check_dim, numkit::RngStream, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// Multinomial logistic regression (softmax over an affine map).
    Logistic,
    /// Fully connected network with ReLU hidden layers.
    Mlp,
}

/// Architecture of a dense softmax classifier.
///
/// Parameter layout is layer-major: for each affine layer with `fan_in`
/// inputs and `fan_out` outputs, the `fan_out × fan_in` weight matrix
/// (row-major, one row per output unit) followed by `fan_out` biases.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    kind: ModelKind,
    input_dim: usize,
    hidden_dims: Vec<usize>,
    num_classes: usize,
}

#[derive(Debug, Clone, Copy)]
struct Layer {
    fan_in: usize,
    fan_out: usize,
    offset: usize,
}

impl Layer {
    fn weight(&self, w: &[f64], out: usize, inp: usize) -> f64 {
        w[self.offset + out * self.fan_in + inp]
    }

    fn bias_offset(&self) -> usize {
        self.offset + self.fan_in * self.fan_out
    }

    fn len(&self) -> usize {
        (self.fan_in + 1) * self.fan_out
    }
}

impl ModelSpec {
    pub fn logistic(input_dim: usize, num_classes: usize) -> Result<Self> {
        Self::new(ModelKind::Logistic, input_dim, Vec::new(), num_classes)
    }

    pub fn mlp(input_dim: usize, hidden_dims: Vec<usize>, num_classes: usize) -> Result<Self> {
        Self::new(ModelKind::Mlp, input_dim, hidden_dims, num_classes)
    }

    pub fn new(
        kind: ModelKind,
        input_dim: usize,
        hidden_dims: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::domain("input_dim must be positive"));
        }
        if num_classes < 2 {
            return Err(Error::domain(format!(
                "need at least 2 classes, got {num_classes}"
            )));
        }
        match kind {
            ModelKind::Logistic if !hidden_dims.is_empty() => {
                return Err(Error::domain("logistic model takes no hidden layers"))
            }
            ModelKind::Mlp if hidden_dims.is_empty() => {
                return Err(Error::domain("mlp needs at least one hidden layer"))
            }
            _ => {}
        }
        if hidden_dims.contains(&0) {
            return Err(Error::domain("hidden layer widths must be positive"));
        }
        Ok(Self {
            kind,
            input_dim,
            hidden_dims,
            num_classes,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.hidden_dims
    }

    fn layers(&self) -> Vec<Layer> {
        let mut dims = Vec::with_capacity(self.hidden_dims.len() + 2);
        dims.push(self.input_dim);
        dims.extend_from_slice(&self.hidden_dims);
        dims.push(self.num_classes);
        let mut offset = 0;
        dims.windows(2)
            .map(|pair| {
                let layer = Layer {
                    fan_in: pair[0],
                    fan_out: pair[1],
                    offset,
                };
                offset += layer.len();
                layer
            })
            .collect()
    }

    pub fn param_count(&self) -> usize {
        self.layers().iter().map(Layer::len).sum()
    }

    /// Glorot-uniform weights, zero biases.
    pub fn init_params(&self, rng: &mut RngStream) -> ParamVector {
        let mut w = vec![0.0; self.param_count()];
        for layer in self.layers() {
            let limit = (6.0 / (layer.fan_in + layer.fan_out) as f64).sqrt();
            for x in &mut w[layer.offset..layer.bias_offset()] {
                *x = limit * (2.0 * rng.next_f64() - 1.0);
            }
        }
        ParamVector::from_raw(w)
    }

    fn check(&self, w: &ParamVector, batch: &Batch) -> Result<()> {
        check_dim(self.param_count(), w.len())?;
        check_dim(self.input_dim, batch.input_dim())?;
        if let Some(&bad) = batch.labels().iter().find(|&&y| y >= self.num_classes) {
            return Err(Error::domain(format!(
                "label {bad} out of range for {} classes",
                self.num_classes
            )));
        }
        Ok(())
    }

    /// Pre-activations of every layer (the last entry holds the logits).
    fn forward(&self, layers: &[Layer], w: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre: Vec<Vec<f64>> = Vec::with_capacity(layers.len());
        for (l, layer) in layers.iter().enumerate() {
            let z: Vec<f64> = {
                let input: &[f64] = if l == 0 { x } else { &pre[l - 1] };
                let bias = &w[layer.bias_offset()..layer.bias_offset() + layer.fan_out];
                (0..layer.fan_out)
                    .map(|o| {
                        let row = &w[layer.offset + o * layer.fan_in..][..layer.fan_in];
                        let dot: f64 = if l == 0 {
                            row.iter().zip(input).map(|(a, b)| a * b).sum()
                        } else {
                            row.iter().zip(input).map(|(a, b)| a * b.max(0.0)).sum()
                        };
                        dot + bias[o]
                    })
                    .collect()
            };
            pre.push(z);
        }
        pre
    }

    /// Smallest `|z|` over all hidden pre-activations of the batch; infinite
    /// for the logistic model. Used to keep gradient checks away from ReLU kinks.
    pub fn min_abs_preactivation(&self, w: &ParamVector, batch: &Batch) -> Result<f64> {
        self.check(w, batch)?;
        let layers = self.layers();
        let mut min = f64::INFINITY;
        for i in 0..batch.len() {
            let pre = self.forward(&layers, w, batch.row(i));
            for z in &pre[..pre.len() - 1] {
                min = z.iter().fold(min, |m, v| m.min(v.abs()));
            }
        }
        Ok(min)
    }

    pub fn logits(&self, w: &ParamVector, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.param_count(), w.len())?;
        check_dim(self.input_dim, x.len())?;
        let layers = self.layers();
        Ok(self
            .forward(&layers, w, x)
            .pop()
            .expect("at least one layer"))
    }
}

/// `(log Σ exp z, softmax(z))` with max subtraction.
fn log_softmax_parts(z: &[f64]) -> (f64, Vec<f64>) {
    let max = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    (max + sum.ln(), exps.into_iter().map(|e| e / sum).collect())
}

fn argmax_lowest(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate().skip(1) {
        if v > z[best] {
            best = i;
        }
    }
    best
}

impl Differentiable for ModelSpec {
    fn num_params(&self) -> usize {
        self.param_count()
    }

    fn loss(&self, w: &ParamVector, batch: &Batch) -> Result<f64> {
        self.check(w, batch)?;
        let layers = self.layers();
        let total: f64 = (0..batch.len())
            .map(|i| {
                let pre = self.forward(&layers, w, batch.row(i));
                let logits = pre.last().expect("at least one layer");
                let (lse, _) = log_softmax_parts(logits);
                lse - logits[batch.labels()[i]]
            })
            .sum();
        Ok(total / batch.len() as f64)
    }

    fn grad(&self, w: &ParamVector, batch: &Batch) -> Result<ParamVector> {
        self.check(w, batch)?;
        let layers = self.layers();
        let mut g = vec![0.0; w.len()];
        for i in 0..batch.len() {
            let x = batch.row(i);
            let pre = self.forward(&layers, w, x);
            let (_, mut delta) = log_softmax_parts(pre.last().expect("at least one layer"));
            delta[batch.labels()[i]] -= 1.0;
            for l in (0..layers.len()).rev() {
                let layer = layers[l];
                let bias = layer.bias_offset();
                for o in 0..layer.fan_out {
                    let d = delta[o];
                    if d == 0.0 {
                        continue;
                    }
                    let row = &mut g[layer.offset + o * layer.fan_in..][..layer.fan_in];
                    if l == 0 {
                        row.iter_mut().zip(x).for_each(|(gw, a)| *gw += d * a);
                    } else {
                        row.iter_mut()
                            .zip(&pre[l - 1])
                            .for_each(|(gw, z)| *gw += d * z.max(0.0));
                    }
                    g[bias + o] += d;
                }
                if l > 0 {
                    let below = &pre[l - 1];
                    delta = (0..layer.fan_in)
                        .map(|j| {
                            if below[j] > 0.0 {
                                (0..layer.fan_out)
                                    .map(|o| layer.weight(w, o, j) * delta[o])
                                    .sum()
                            } else {
                                0.0
                            }
                        })
                        .collect();
                }
            }
        }
        let n = batch.len() as f64;
        g.iter_mut().for_each(|x| *x /= n);
        Ok(ParamVector::from_raw(g))
    }
}

impl Classifier for ModelSpec {
    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn correct(&self, w: &ParamVector, batch: &Batch) -> Result<usize> {
        self.check(w, batch)?;
        let layers = self.layers();
        Ok((0..batch.len())
            .filter(|&i| {
                let pre = self.forward(&layers, w, batch.row(i));
                argmax_lowest(pre.last().expect("at least one layer")) == batch.labels()[i]
            })
            .count())
    }
}
