//! Compares the MLP's analytic parameter gradient and Jacobian-vector
//! product against central finite differences.
//!
//! ```text
//! cargo run --example gradient_check
//! ```

use masp_lab::numcore::{Activation, Gradients, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> masp_lab::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let net = Mlp::init(&[4, 6, 3], Activation::Tanh, &mut rng);
    let x: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let w: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let objective = |n: &Mlp| -> masp_lab::Result<f64> {
        Ok(n.forward(&x)?.iter().zip(&w).map(|(q, c)| q * c).sum())
    };

    let (grads, _) = net.backward(&x, &w)?;
    let analytic = grads.flatten();
    let theta = Gradients::zeros_like(&net).flatten();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for i in 0..theta.len() {
        let mut e = vec![0.0; theta.len()];
        e[i] = 1.0;
        let dir = Gradients::from_flat(&net, &e)?;
        let mut plus = net.clone();
        plus.add_scaled(h, &dir)?;
        let mut minus = net.clone();
        minus.add_scaled(-h, &dir)?;
        let fd = (objective(&plus)? - objective(&minus)?) / (2.0 * h);
        worst = worst.max((fd - analytic[i]).abs());
    }
    println!("{} parameters, max |analytic - fd| = {worst:.2e}", theta.len());

    let dir = Gradients::from_flat(&net, &(0..theta.len()).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>())?;
    let exact = net.jvp(&x, &dir)?;
    let fd = net.jvp_fd(&x, &dir, 1e-6)?;
    let gap = exact.iter().zip(&fd).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    println!("jvp exact {exact:.6?}\njvp fd    {fd:.6?}\nmax gap {gap:.2e}");
    Ok(())
}
