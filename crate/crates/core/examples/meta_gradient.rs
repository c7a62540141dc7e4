//! Computes the one-step meta-gradient of the outer TD loss with respect to
//! the similarity matrix and checks it against perturbing each entry,
//! redoing the inner update and re-evaluating the outer loss.
//!
//! ```text
//! cargo run --example meta_gradient
//! ```

use masp_lab::agent::Transition;
use masp_lab::masp::{meta_gradient, project_sigma, MetaProblem};
use masp_lab::numcore::{Activation, JvpMode, Matrix, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn transition(rng: &mut ChaCha8Rng, actions: usize) -> Transition {
    Transition {
        state: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        action: rng.gen_range(0..actions),
        reward: rng.gen_range(-1.0..1.0),
        next_state: (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        done: rng.gen_bool(0.3),
        discount_exponent: rng.gen_range(1..=3),
    }
}

fn main() -> masp_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 3;
    let theta = Mlp::init(&[3, 5, n], Activation::Tanh, &mut rng);
    let target = Mlp::init(&[3, 5, n], Activation::Tanh, &mut rng);
    let inner: Vec<Transition> = (0..4).map(|_| transition(&mut rng, n)).collect();
    let outer: Vec<Transition> = (0..4).map(|_| transition(&mut rng, n)).collect();
    let (inner, outer): (Vec<&Transition>, Vec<&Transition>) = (inner.iter().collect(), outer.iter().collect());
    let problem = MetaProblem {
        theta: &theta,
        target: &target,
        gamma: 0.9,
        inner: &inner,
        outer: &outer,
        e_sigma: &[],
    };
    let (eta, alpha) = (0.5, 0.1);
    let raw = Matrix::from_vec(n, n, (0..n * n).map(|_| rng.gen_range(0.0..1.0)).collect())?;
    let sigma = project_sigma(&raw)?.into_matrix();

    let theta_prime = problem.inner_update(&sigma, eta, alpha)?;
    let exact = meta_gradient(&problem, &theta_prime, &sigma, eta, alpha, JvpMode::Exact)?;

    let h = 1e-5;
    let mut fd = Matrix::zeros(n, n);
    for r in 0..n {
        for c in r..n {
            let bump = |k: f64| -> masp_lab::Result<f64> {
                let mut s = sigma.clone();
                s.set(r, c, s.get(r, c) + k);
                if r != c {
                    s.set(c, r, s.get(c, r) + k);
                }
                problem.outer_loss(&problem.inner_update(&s, eta, alpha)?)
            };
            let d = (bump(h)? - bump(-h)?) / (2.0 * h);
            // A symmetric bump moves two entries at once.
            let v = if r == c { d } else { d / 2.0 };
            fd.set(r, c, v);
            fd.set(c, r, v);
        }
    }
    println!("exact:\n{exact:?}\nfinite differences:\n{fd:?}");
    println!("max |exact - fd| = {:.2e}", exact.sub(&fd)?.max_abs());
    Ok(())
}
