use rayon::prelude::*;

use super::ClientState;
use crate::{
    datakit::Dataset,
    models::{Classifier, Differentiable, ParamVector},
    Error, Result,
};

/// One full-batch adaptation step on the client's training data:
/// `w − α′∇f(w, train)`.
pub fn personalize<M: Differentiable + ?Sized>(
    model: &M,
    w: &ParamVector,
    client: &ClientState,
    alpha_inner: f64,
    dataset: &Dataset,
) -> Result<ParamVector> {
    if client.train.is_empty() {
        return Err(Error::domain(format!(
            "client {} has no training data",
            client.id
        )));
    }
    if alpha_inner == 0.0 {
        return Ok(w.clone());
    }
    let batch = dataset.batch(&client.train)?;
    w.step(alpha_inner, &model.grad(w, &batch)?)
}

fn pooled_accuracy<F>(clients: &[ClientState], per_client: F) -> Result<f64>
where
    F: Fn(&ClientState) -> Result<usize> + Sync,
{
    let evaluated: Vec<&ClientState> = clients.iter().filter(|c| !c.test.is_empty()).collect();
    let total: usize = evaluated.iter().map(|c| c.test.len()).sum();
    if total == 0 {
        return Err(Error::domain("no client has test examples"));
    }
    let correct = evaluated
        .par_iter()
        .map(|c| per_client(c))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .sum::<usize>();
    Ok(correct as f64 / total as f64)
}

/// Accuracy of `w` on the pooled client test sets (example-weighted).
pub fn evaluate_global<M: Classifier + ?Sized>(
    model: &M,
    w: &ParamVector,
    clients: &[ClientState],
    dataset: &Dataset,
) -> Result<f64> {
    pooled_accuracy(clients, |c| model.correct(w, &dataset.batch(&c.test)?))
}

/// Accuracy after each client personalizes `w` with one step of
/// [`personalize`]. Clients without training data are evaluated on `w`.
pub fn evaluate_personalized<M: Classifier + ?Sized>(
    model: &M,
    w: &ParamVector,
    clients: &[ClientState],
    alpha_inner: f64,
    dataset: &Dataset,
) -> Result<f64> {
    pooled_accuracy(clients, |c| {
        let local = if c.train.is_empty() {
            w.clone()
        } else {
            personalize(model, w, c, alpha_inner, dataset)?
        };
        model.correct(&local, &dataset.batch(&c.test)?)
    })
}

/// `F(w) = mean_i f_i(w − α′∇f_i(w))` over clients, full batches.
pub fn meta_objective<M: Differentiable + ?Sized>(
    model: &M,
    w: &ParamVector,
    clients: &[ClientState],
    alpha_inner: f64,
    dataset: &Dataset,
) -> Result<f64> {
    if clients.is_empty() {
        return Err(Error::domain("meta objective needs at least one client"));
    }
    let losses = clients
        .par_iter()
        .map(|c| {
            let adapted = personalize(model, w, c, alpha_inner, dataset)?;
            model.loss(&adapted, &dataset.batch(&c.train)?)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Loss of `w` over every client's training data, example-weighted.
pub fn mean_train_loss<M: Differentiable + ?Sized>(
    model: &M,
    w: &ParamVector,
    clients: &[ClientState],
    dataset: &Dataset,
) -> Result<f64> {
    let active: Vec<&ClientState> = clients.iter().filter(|c| !c.train.is_empty()).collect();
    let total: usize = active.iter().map(|c| c.train.len()).sum();
    if total == 0 {
        return Err(Error::domain("no client has training data"));
    }
    let weighted = active
        .par_iter()
        .map(|c| Ok(model.loss(w, &dataset.batch(&c.train)?)? * c.train.len() as f64))
        .collect::<Result<Vec<f64>>>()?;
    Ok(weighted.iter().sum::<f64>() / total as f64)
}
