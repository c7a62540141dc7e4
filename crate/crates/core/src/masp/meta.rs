use super::penalty::{regularized_td, residual};
use crate::agent::{network_input, td_loss, Transition};
use crate::error::{Error, Result};
use crate::numcore::{JvpMode, Matrix, Mlp};

/// Everything the one-step bilevel problem depends on besides `Σ`.
///
/// The inner step is `θ' = θ − α ∇θ (L_TD(τ; θ) + L_MASP(τ; θ, Σ))`, the outer
/// objective is `L_TD(τ'; θ')`. Targets come from the fixed target network,
/// and `e_sigma` is held constant on both levels.
#[derive(Clone, Copy, Debug)]
pub struct MetaProblem<'a> {
    pub theta: &'a Mlp,
    pub target: &'a Mlp,
    pub gamma: f64,
    pub inner: &'a [&'a Transition],
    pub outer: &'a [&'a Transition],
    pub e_sigma: &'a [f64],
}

impl MetaProblem<'_> {
    /// The inner SGD step; `θ'` as a function of `Σ`.
    pub fn inner_update(&self, sigma: &Matrix, eta: f64, alpha: f64) -> Result<Mlp> {
        let loss = regularized_td(self.theta, self.target, self.gamma, self.inner, self.e_sigma, sigma, eta)?;
        self.theta.sgd_update(&loss.grads, alpha)
    }

    /// `L_TD(τ'; θ')`.
    pub fn outer_loss(&self, theta_prime: &Mlp) -> Result<f64> {
        Ok(td_loss(theta_prime, self.target, self.gamma, self.outer, self.e_sigma)?.0)
    }
}

/// Exact gradient of the outer TD loss with respect to `Σ` through one
/// inner SGD step, symmetrized.
///
/// With `g = ∇θ' L_TD(τ'; θ')`, `q_i = Q(s_i; θ)`, `v_i = J_i g` and
/// `A = I − Σ`:
/// `∇Σ = (2αη/n) Σ_i [(A q_i) v_iᵀ + (A v_i) q_iᵀ]`, returned as `(G + Gᵀ)/2`.
pub fn meta_gradient(
    problem: &MetaProblem<'_>,
    theta_prime: &Mlp,
    sigma: &Matrix,
    eta: f64,
    alpha: f64,
    jvp: JvpMode,
) -> Result<Matrix> {
    if alpha.is_nan() || alpha <= 0.0 {
        return Err(Error::config("lr", format!("inner learning rate must be > 0, got {alpha}")));
    }
    if eta.is_nan() || eta < 0.0 {
        return Err(Error::config("masp.eta", format!("must be >= 0, got {eta}")));
    }
    if !sigma.is_square() || sigma.rows() != problem.theta.output_dim() {
        return Err(Error::shape(
            "meta_gradient sigma",
            problem.theta.output_dim(),
            format!("{}x{}", sigma.rows(), sigma.cols()),
        ));
    }
    let n_actions = sigma.rows();
    let mut g_sigma = Matrix::zeros(n_actions, n_actions);
    if eta == 0.0 || problem.inner.is_empty() {
        return Ok(g_sigma);
    }
    let (_, outer_grad) = td_loss(theta_prime, problem.target, problem.gamma, problem.outer, problem.e_sigma)?;
    if outer_grad.is_zero() {
        return Ok(g_sigma);
    }
    for t in problem.inner {
        let x = network_input(&t.state, problem.e_sigma);
        let (q, v) = jvp.forward_and_apply(problem.theta, &x, &outer_grad)?;
        let aq = residual(sigma, &q)?;
        let av = residual(sigma, &v)?;
        for r in 0..n_actions {
            let row = g_sigma.row_mut(r);
            for c in 0..n_actions {
                row[c] += aq[r] * v[c] + av[r] * q[c];
            }
        }
    }
    let scale = 2.0 * alpha * eta / problem.inner.len() as f64;
    let mut sym = Matrix::zeros(n_actions, n_actions);
    for r in 0..n_actions {
        for c in r..n_actions {
            let v = 0.5 * scale * (g_sigma.get(r, c) + g_sigma.get(c, r));
            sym.set(r, c, v);
            sym.set(c, r, v);
        }
    }
    Ok(sym)
}
