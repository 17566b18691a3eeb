//! Central finite-difference oracles used to check analytic derivatives.

use crate::{error::check_dim, Error, Result};

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "finite-difference step must be positive, got {h}"
        )))
    }
}

/// `(f(w + h·e_i) − f(w − h·e_i)) / 2h` for every coordinate `i`.
pub fn fd_grad_oracle<F>(f: F, w: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    check_step(h)?;
    let mut probe = w.to_vec();
    let mut out = Vec::with_capacity(w.len());
    for i in 0..w.len() {
        probe[i] = w[i] + h;
        let plus = f(&probe);
        probe[i] = w[i] - h;
        let minus = f(&probe);
        probe[i] = w[i];
        out.push((plus - minus) / (2.0 * h));
    }
    Ok(out)
}

/// `(grad(w + h·v) − grad(w − h·v)) / 2h`.
pub fn fd_hvp_oracle<G>(grad: G, w: &[f64], v: &[f64], h: f64) -> Result<Vec<f64>>
where
    G: Fn(&[f64]) -> Vec<f64>,
{
    check_step(h)?;
    check_dim(w.len(), v.len())?;
    let plus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a + h * b).collect();
    let minus: Vec<f64> = w.iter().zip(v).map(|(a, b)| a - h * b).collect();
    let gp = grad(&plus);
    let gm = grad(&minus);
    check_dim(w.len(), gp.len())?;
    check_dim(w.len(), gm.len())?;
    Ok(gp
        .iter()
        .zip(&gm)
        .map(|(p, m)| (p - m) / (2.0 * h))
        .collect())
}
