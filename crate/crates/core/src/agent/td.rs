use super::{network_input, Transition};
use crate::error::{Error, Result};
use crate::numcore::{Gradients, Mlp};

/// `y_i = R_i + (1 − done_i) · γ^{L_i} · max_a Q⁻(s'_i, a)`.
pub fn td_targets(target: &Mlp, gamma: f64, batch: &[&Transition], e_sigma: &[f64]) -> Result<Vec<f64>> {
    batch
        .iter()
        .map(|t| {
            if t.done {
                return Ok(t.reward);
            }
            let q_next = target.forward(&network_input(&t.next_state, e_sigma))?;
            let best = q_next.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(t.reward + gamma.powi(t.discount_exponent as i32) * best)
        })
        .collect()
}

/// Mean squared TD error and its gradient with respect to the online
/// parameters; targets are constants.
pub fn td_loss(
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
    batch: &[&Transition],
    e_sigma: &[f64],
) -> Result<(f64, Gradients)> {
    if batch.is_empty() {
        return Err(Error::Contract("TD loss needs a non-empty batch".into()));
    }
    let targets = td_targets(target, gamma, batch, e_sigma)?;
    let n = batch.len() as f64;
    let mut grads = Gradients::zeros_like(online);
    let mut loss = 0.0;
    for (t, y) in batch.iter().zip(&targets) {
        let trace = online.trace(&network_input(&t.state, e_sigma))?;
        let q = trace.output();
        if t.action >= q.len() {
            return Err(Error::shape("td_loss action index", q.len(), t.action));
        }
        let err = q[t.action] - y;
        loss += err * err;
        let mut cot = vec![0.0; q.len()];
        cot[t.action] = 2.0 * err / n;
        online.accumulate_param_backward(&trace, &cot, &mut grads)?;
    }
    Ok((loss / n, grads))
}
