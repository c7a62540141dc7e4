use crate::agent::{network_input, td_targets, Transition};
use crate::error::{Error, Result};
use crate::numcore::{Gradients, Matrix, Mlp};

/// `η · (1/n) · Σ_i ‖q_i − Σ q_i‖²` and its gradient with respect to each
/// `q_i`, `(2η/n) (I − Σ)ᵀ (I − Σ) q_i`.
pub fn masp_loss(q_batch: &[Vec<f64>], sigma: &Matrix, eta: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    if !sigma.is_square() {
        return Err(Error::shape("masp_loss sigma", "square", format!("{}x{}", sigma.rows(), sigma.cols())));
    }
    let n = q_batch.len();
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let scale = 2.0 * eta / n as f64;
    let mut loss = 0.0;
    let mut grads = Vec::with_capacity(n);
    for q in q_batch {
        if q.len() != sigma.rows() {
            return Err(Error::shape("masp_loss q", sigma.rows(), q.len()));
        }
        let residual = residual(sigma, q)?;
        loss += residual.iter().map(|r| r * r).sum::<f64>();
        // (I − Σ)ᵀ r = r − Σᵀ r
        let back = sigma.matvec_transposed(&residual)?;
        grads.push(
            residual
                .iter()
                .zip(&back)
                .map(|(r, b)| scale * (r - b))
                .collect(),
        );
    }
    Ok((eta * loss / n as f64, grads))
}

/// `(I − Σ) v`, computed as `v − Σ v`.
pub(crate) fn residual(sigma: &Matrix, v: &[f64]) -> Result<Vec<f64>> {
    let sv = sigma.matvec(v)?;
    Ok(v.iter().zip(&sv).map(|(a, b)| a - b).collect())
}

/// Loss terms and gradients of one regularized update.
#[derive(Clone, Debug)]
pub struct BatchLoss {
    pub td_loss: f64,
    pub masp_loss: f64,
    /// `∇θ (L_TD + L_MASP)`.
    pub grads: Gradients,
    /// `∂(L_TD + L_MASP)/∂e_Σ`, summed over the batch.
    pub embedding_grad: Vec<f64>,
}

/// TD loss plus the similarity penalty on one batch. The penalty is skipped
/// entirely when `eta == 0`.
pub fn regularized_td(
    online: &Mlp,
    target: &Mlp,
    gamma: f64,
    batch: &[&Transition],
    e_sigma: &[f64],
    sigma: &Matrix,
    eta: f64,
) -> Result<BatchLoss> {
    if batch.is_empty() {
        return Err(Error::Contract("regularized TD loss needs a non-empty batch".into()));
    }
    let targets = td_targets(target, gamma, batch, e_sigma)?;
    let n = batch.len() as f64;
    let traces = batch
        .iter()
        .map(|t| online.trace(&network_input(&t.state, e_sigma)))
        .collect::<Result<Vec<_>>>()?;

    let (masp, mut cotangents) = if eta != 0.0 {
        let qs: Vec<Vec<f64>> = traces.iter().map(|t| t.output().to_vec()).collect();
        masp_loss(&qs, sigma, eta)?
    } else {
        (0.0, vec![vec![0.0; online.output_dim()]; batch.len()])
    };

    let mut td = 0.0;
    let mut grads = Gradients::zeros_like(online);
    let state_dim = online.input_dim() - e_sigma.len();
    let mut embedding_grad = vec![0.0; e_sigma.len()];
    for ((t, y), (trace, cot)) in batch.iter().zip(&targets).zip(traces.iter().zip(&mut cotangents)) {
        let q = trace.output();
        if t.action >= q.len() {
            return Err(Error::shape("regularized_td action index", q.len(), t.action));
        }
        let err = q[t.action] - y;
        td += err * err;
        cot[t.action] += 2.0 * err / n;
        let input_grad = online.accumulate_backward(trace, cot, &mut grads)?;
        for (e, g) in embedding_grad.iter_mut().zip(&input_grad[state_dim..]) {
            *e += g;
        }
    }
    Ok(BatchLoss {
        td_loss: td / n,
        masp_loss: masp,
        grads,
        embedding_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_sigma_has_no_effect() {
        let q = vec![vec![1.5, -2.0, 0.25], vec![0.0, 3.0, -1.0]];
        let (loss, grads) = masp_loss(&q, &Matrix::identity(3), 0.7).unwrap();
        assert_eq!(loss, 0.0);
        assert!(grads.iter().flatten().all(|g| *g == 0.0));
    }

    #[test]
    fn two_action_hand_case() {
        let sigma = Matrix::filled(2, 2, 1.0);
        let (loss, grads) = masp_loss(&[vec![1.0, 0.0]], &sigma, 0.5).unwrap();
        assert_eq!(residual(&sigma, &[1.0, 0.0]).unwrap(), vec![0.0, -1.0]);
        assert_eq!(loss, 0.5);
        // (I−Σ)ᵀ r = [[0,−1],[−1,0]]·(0,−1) = (1, 0); times 2η/n = 1.
        assert_eq!(grads[0], vec![1.0, 0.0]);
    }

    #[test]
    fn shape_errors() {
        assert!(masp_loss(&[vec![1.0]], &Matrix::identity(2), 1.0).is_err());
        assert!(masp_loss(&[vec![1.0, 2.0]], &Matrix::zeros(2, 3), 1.0).is_err());
    }
}
