use super::{ClientState, FedAvgConfig, PerFedAvgConfig, Variant};
use crate::{
    datakit::Dataset,
    models::{Batch, Differentiable, ParamVector},
    numkit::RngStream,
    Error, Result,
};

/// `min(batch_size, n_train)` distinct training examples of `client`.
pub fn draw_batch(
    client: &ClientState,
    batch_size: usize,
    dataset: &Dataset,
    rng: &mut RngStream,
) -> Result<Batch> {
    if client.train.is_empty() {
        return Err(Error::domain(format!(
            "client {} has no training data",
            client.id
        )));
    }
    dataset.batch(&rng.sample_without_replacement(&client.train, batch_size))
}

/// The three independent batches `D, D′, D″` of one Per-FedAvg inner step.
/// Each is drawn without replacement; the three may overlap.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTriple {
    /// Adaptation batch for `w̃ = w − α′∇f(w, D)`.
    pub inner: Batch,
    /// Gradient at the adapted point, `∇f(w̃, D′)`.
    pub outer: Batch,
    /// Hessian batch for `∇²f(w, D″)`.
    pub hessian: Batch,
}

impl BatchTriple {
    pub fn draw(
        client: &ClientState,
        batch_size: usize,
        dataset: &Dataset,
        rng: &mut RngStream,
    ) -> Result<Self> {
        Ok(Self {
            inner: draw_batch(client, batch_size, dataset, rng)?,
            outer: draw_batch(client, batch_size, dataset, rng)?,
            hessian: draw_batch(client, batch_size, dataset, rng)?,
        })
    }
}

/// FedAvg local update: `τ` minibatch SGD steps from `w`.
pub fn local_sgd<M: Differentiable + ?Sized>(
    model: &M,
    client: &ClientState,
    w: &ParamVector,
    cfg: &FedAvgConfig,
    dataset: &Dataset,
    rng: &mut RngStream,
) -> Result<ParamVector> {
    let mut w = w.clone();
    for _ in 0..cfg.local_steps {
        let batch = draw_batch(client, cfg.batch_size, dataset, rng)?;
        w = w.step(cfg.local_lr, &model.grad(&w, &batch)?)?;
    }
    Ok(w)
}

/// Per-FedAvg local update: `τ` MAML steps from `w`.
///
/// Each step draws a [`BatchTriple`], adapts `w̃ = w − α′∇f(w, D)`, and moves
/// `w ← w − β(I − α′∇²f(w, D″))∇f(w̃, D′)` (Hessian form) or
/// `w ← w − β∇f(w̃, D′)` (first order).
pub fn perfedavg_local<M: Differentiable + ?Sized>(
    model: &M,
    client: &ClientState,
    w: &ParamVector,
    cfg: &PerFedAvgConfig,
    dataset: &Dataset,
    rng: &mut RngStream,
) -> Result<ParamVector> {
    let mut w = w.clone();
    for _ in 0..cfg.base.local_steps {
        let batches = BatchTriple::draw(client, cfg.base.batch_size, dataset, rng)?;
        let adapted = w.step(cfg.alpha_inner, &model.grad(&w, &batches.inner)?)?;
        let outer_grad = model.grad(&adapted, &batches.outer)?;
        let direction = match cfg.variant {
            Variant::Hessian if cfg.alpha_inner != 0.0 => {
                let curvature = model.hvp(&w, &outer_grad, &batches.hessian)?;
                outer_grad.step(cfg.alpha_inner, &curvature)?
            }
            _ => outer_grad,
        };
        w = w.step(cfg.beta, &direction)?;
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ModelSpec, QuadraticHarness};
    use crate::numkit::make_rng_stream;

    fn tiny() -> (Dataset, ClientState) {
        let ds = Dataset::new(vec![0.0, 1.0, 2.0, 3.0], 1, vec![0, 1, 0, 1], 2).unwrap();
        let client = ClientState {
            id: 0,
            train: vec![0, 1, 2, 3],
            test: vec![],
        };
        (ds, client)
    }

    fn scalar(x: f64) -> ParamVector {
        ParamVector::new(vec![x]).unwrap()
    }

    fn pfa(alpha: f64, beta: f64, steps: usize, variant: Variant) -> PerFedAvgConfig {
        PerFedAvgConfig {
            base: FedAvgConfig {
                local_steps: steps,
                batch_size: 4,
                ..FedAvgConfig::default()
            },
            alpha_inner: alpha,
            beta,
            variant,
        }
    }

    #[test]
    fn zero_steps_is_identity() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![1.0]).unwrap();
        let cfg = FedAvgConfig {
            local_steps: 0,
            ..FedAvgConfig::default()
        };
        let w = scalar(1.3);
        assert_eq!(
            local_sgd(&f, &client, &w, &cfg, &ds, &mut make_rng_stream(0, &[])).unwrap(),
            w
        );
    }

    #[test]
    fn one_sgd_step_on_quadratic() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![1.0]).unwrap();
        let cfg = FedAvgConfig {
            local_steps: 1,
            local_lr: 0.1,
            batch_size: 4,
            ..FedAvgConfig::default()
        };
        let w = local_sgd(
            &f,
            &client,
            &scalar(1.0),
            &cfg,
            &ds,
            &mut make_rng_stream(0, &[]),
        )
        .unwrap();
        assert!((w[0] - 0.9).abs() < 1e-15);
    }

    #[test]
    fn identical_clients_give_identical_updates() {
        let (ds, client) = tiny();
        let spec = ModelSpec::logistic(1, 2).unwrap();
        let w0 = spec.init_params(&mut make_rng_stream(3, &[]));
        let cfg = FedAvgConfig {
            batch_size: 2,
            ..FedAvgConfig::default()
        };
        let a = local_sgd(
            &spec,
            &client,
            &w0,
            &cfg,
            &ds,
            &mut make_rng_stream(9, &[1]),
        )
        .unwrap();
        let b = local_sgd(
            &spec,
            &client,
            &w0,
            &cfg,
            &ds,
            &mut make_rng_stream(9, &[1]),
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a, w0);
    }

    #[test]
    fn hessian_form_closed_form() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![1.0]).unwrap();
        let w = perfedavg_local(
            &f,
            &client,
            &scalar(1.0),
            &pfa(0.5, 1.0, 1, Variant::Hessian),
            &ds,
            &mut make_rng_stream(0, &[]),
        )
        .unwrap();
        assert!((w[0] - 0.75).abs() < 1e-8, "{}", w[0]);
    }

    #[test]
    fn first_order_closed_form() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![1.0]).unwrap();
        let w = perfedavg_local(
            &f,
            &client,
            &scalar(1.0),
            &pfa(0.5, 1.0, 1, Variant::FirstOrder),
            &ds,
            &mut make_rng_stream(0, &[]),
        )
        .unwrap();
        assert!((w[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hessian_update_matches_matrix_formula() {
        // w − β(I−α′A)A(I−α′A)w for A = diag(a)
        let (ds, client) = tiny();
        let a = [0.5, 1.0, 2.0, 3.0];
        let f = QuadraticHarness::new(a.to_vec()).unwrap();
        let w0 = ParamVector::new(vec![1.0, -2.0, 0.5, 0.3]).unwrap();
        let (alpha, beta) = (0.1, 0.2);
        let w = perfedavg_local(
            &f,
            &client,
            &w0,
            &pfa(alpha, beta, 1, Variant::Hessian),
            &ds,
            &mut make_rng_stream(0, &[]),
        )
        .unwrap();
        for i in 0..4 {
            let m = 1.0 - alpha * a[i];
            let expected = w0[i] - beta * m * a[i] * m * w0[i];
            assert!((w[i] - expected).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_inner_step_reduces_to_sgd() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![2.0, 0.5]).unwrap();
        let w0 = ParamVector::new(vec![1.0, -1.0]).unwrap();
        let sgd_cfg = FedAvgConfig {
            local_steps: 1,
            local_lr: 0.3,
            batch_size: 4,
            ..FedAvgConfig::default()
        };
        let sgd = local_sgd(
            &f,
            &client,
            &w0,
            &sgd_cfg,
            &ds,
            &mut make_rng_stream(0, &[]),
        )
        .unwrap();
        for variant in [Variant::Hessian, Variant::FirstOrder] {
            let w = perfedavg_local(
                &f,
                &client,
                &w0,
                &pfa(0.0, 0.3, 1, variant),
                &ds,
                &mut make_rng_stream(0, &[]),
            )
            .unwrap();
            assert_eq!(w, sgd);
        }

        // real model, full batches: only the summation order of the batch differs
        let spec = ModelSpec::mlp(1, vec![3], 2).unwrap();
        let w0 = spec.init_params(&mut make_rng_stream(2, &[]));
        let sgd = local_sgd(
            &spec,
            &client,
            &w0,
            &sgd_cfg,
            &ds,
            &mut make_rng_stream(5, &[]),
        )
        .unwrap();
        let hf = perfedavg_local(
            &spec,
            &client,
            &w0,
            &pfa(0.0, 0.3, 1, Variant::Hessian),
            &ds,
            &mut make_rng_stream(5, &[]),
        )
        .unwrap();
        let fo = perfedavg_local(
            &spec,
            &client,
            &w0,
            &pfa(0.0, 0.3, 1, Variant::FirstOrder),
            &ds,
            &mut make_rng_stream(5, &[]),
        )
        .unwrap();
        assert_eq!(hf, fo);
        assert!(hf
            .iter()
            .zip(sgd.iter())
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn variants_differ_at_first_order_in_alpha() {
        let (ds, client) = tiny();
        let f = QuadraticHarness::new(vec![1.0, 2.0, 3.0]).unwrap();
        let w0 = ParamVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let gap = |alpha: f64| {
            let run = |v| {
                perfedavg_local(
                    &f,
                    &client,
                    &w0,
                    &pfa(alpha, 0.1, 5, v),
                    &ds,
                    &mut make_rng_stream(0, &[]),
                )
                .unwrap()
            };
            let (h, o) = (run(Variant::Hessian), run(Variant::FirstOrder));
            h.iter()
                .zip(o.iter())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let mut prev = gap(0.04);
        for alpha in [0.02, 0.01, 0.005] {
            let g = gap(alpha);
            // linear in α′: halving α′ roughly halves the gap
            assert!(prev / g >= 1.9, "ratio {} at α′={alpha}", prev / g);
            prev = g;
        }
    }

    #[test]
    fn empty_train_set_is_an_error() {
        let (ds, mut client) = tiny();
        client.train.clear();
        let f = QuadraticHarness::new(vec![1.0]).unwrap();
        assert!(local_sgd(
            &f,
            &client,
            &scalar(1.0),
            &FedAvgConfig::default(),
            &ds,
            &mut make_rng_stream(0, &[])
        )
        .is_err());
    }
}
