mod common;

use common::*;
use masp_lab::agent::{network_input, td_loss, Transition};
use masp_lab::masp::{entropy_reg, masp_loss, regularized_td};
use masp_lab::numcore::{JvpMode, Matrix, Mlp};
use rand::Rng;

const H: f64 = 1e-5;

fn refs(batch: &[Transition]) -> Vec<&Transition> {
    batch.iter().collect()
}

#[test]
fn mlp_backward_matches_finite_differences() {
    for seed in 0..25 {
        let mut r = rng(seed);
        let sizes = [r.gen_range(1..5), r.gen_range(1..6), r.gen_range(1..4), r.gen_range(1..4)];
        let net = smooth_net(&mut r, &sizes);
        let x = random_vec(&mut r, sizes[0], 1.0);
        let w = random_vec(&mut r, sizes[3], 1.0);
        let f = |p: &[f64]| {
            let out = with_params(&net, p).forward(&x).unwrap();
            out.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>()
        };
        let (grads, input_grad) = net.backward(&x, &w).unwrap();
        let fd = central_fd(&params(&net), H, f);
        assert!(rel_err(&grads.flatten(), &fd) <= 1e-5, "seed {seed}");

        let fx = central_fd(&x, H, |xi| {
            net.forward(xi).unwrap().iter().zip(&w).map(|(a, b)| a * b).sum()
        });
        assert!(rel_err(&input_grad, &fx) <= 1e-5, "seed {seed} input grad");
    }
}

#[test]
fn td_loss_matches_finite_differences() {
    for seed in 0..25 {
        let mut r = rng(100 + seed);
        let (sd, ed, na) = (r.gen_range(1..5), r.gen_range(0..3), r.gen_range(2..5));
        let hidden = r.gen_range(2..6);
        let online = smooth_net(&mut r, &[sd + ed, hidden, na]);
        let target = smooth_net(&mut r, &online.sizes());
        let e = random_vec(&mut r, ed, 1.0);
        let len = r.gen_range(1..6);
        let batch = random_batch(&mut r, len, sd, na);
        let b = refs(&batch);
        let (_, grads) = td_loss(&online, &target, 0.9, &b, &e).unwrap();
        let fd = central_fd(&params(&online), H, |p| td_loss(&with_params(&online, p), &target, 0.9, &b, &e).unwrap().0);
        assert!(rel_err(&grads.flatten(), &fd) <= 1e-5, "seed {seed}");
    }
}

#[test]
fn masp_gradient_wrt_q_matches_finite_differences() {
    for seed in 0..25 {
        let mut r = rng(200 + seed);
        let n_a = r.gen_range(2..6);
        let sigma = random_sigma(&mut r, n_a);
        let eta = r.gen_range(0.01..2.0);
        let qs: Vec<Vec<f64>> = (0..r.gen_range(1..5)).map(|_| random_vec(&mut r, n_a, 2.0)).collect();
        let (_, grads) = masp_loss(&qs, sigma.as_matrix(), eta).unwrap();
        let flat: Vec<f64> = qs.concat();
        let fd = central_fd(&flat, H, |p| {
            let q: Vec<Vec<f64>> = p.chunks(n_a).map(<[f64]>::to_vec).collect();
            masp_loss(&q, sigma.as_matrix(), eta).unwrap().0
        });
        assert!(rel_err(&grads.concat(), &fd) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn entropy_gradient_matches_finite_differences() {
    for seed in 0..25 {
        let mut r = rng(300 + seed);
        let n = r.gen_range(2..6);
        let sigma = random_sigma(&mut r, n);
        let coef = r.gen_range(1e-3..1.0);
        let (_, grad) = entropy_reg(sigma.as_matrix(), coef, 1e-6).unwrap();
        // Entries are perturbed independently; the matrix need not stay symmetric.
        // P log P curves on the scale of the entry itself, so step relative to it.
        let fd = central_fd_relative(sigma.as_matrix().as_slice(), 1e-5, 1e-6, |p| {
            entropy_reg(&Matrix::from_vec(n, n, p.to_vec()).unwrap(), coef, 1e-6).unwrap().0
        });
        assert!(rel_err(grad.as_slice(), &fd) <= 1e-6, "seed {seed}");
    }
}

#[test]
fn regularized_td_matches_finite_differences_for_theta_and_embedding() {
    for seed in 0..20 {
        let mut r = rng(400 + seed);
        let (sd, ed, na) = (r.gen_range(1..4), r.gen_range(1..3), r.gen_range(2..5));
        let hidden = r.gen_range(2..5);
        let online = smooth_net(&mut r, &[sd + ed, hidden, na]);
        let target = smooth_net(&mut r, &online.sizes());
        let sigma = random_sigma(&mut r, na);
        let e = random_vec(&mut r, ed, 1.0);
        let len = r.gen_range(1..5);
        let batch = random_batch(&mut r, len, sd, na);
        let b = refs(&batch);
        let eta = r.gen_range(0.1..1.0);
        let total = |net: &Mlp, e: &[f64]| {
            let l = regularized_td(net, &target, 0.95, &b, e, sigma.as_matrix(), eta).unwrap();
            l.td_loss + l.masp_loss
        };
        let loss = regularized_td(&online, &target, 0.95, &b, &e, sigma.as_matrix(), eta).unwrap();
        let fd = central_fd(&params(&online), H, |p| total(&with_params(&online, p), &e));
        assert!(rel_err(&loss.grads.flatten(), &fd) <= 1e-5, "seed {seed}");
        // e_Σ feeds both the online and the target network; only the online
        // path is differentiated, so hold the targets fixed.
        let fe = central_fd(&e, H, |ep| {
            let targets_fixed: Vec<Transition> = batch
                .iter()
                .map(|t| {
                    let mut t = t.clone();
                    if !t.done {
                        let q = target.forward(&network_input(&t.next_state, &e)).unwrap();
                        let best = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                        t.reward += 0.95f64.powi(t.discount_exponent as i32) * best;
                        t.done = true;
                    }
                    t
                })
                .collect();
            let l = regularized_td(&online, &target, 0.95, &refs(&targets_fixed), ep, sigma.as_matrix(), eta).unwrap();
            l.td_loss + l.masp_loss
        });
        assert!(rel_err(&loss.embedding_grad, &fe) <= 1e-5, "seed {seed} embedding");
    }
}

#[test]
fn jvp_matches_fd_and_dense_jacobian() {
    for seed in 0..25 {
        let mut r = rng(500 + seed);
        let sizes = [r.gen_range(1..5), r.gen_range(1..6), r.gen_range(1..4)];
        let net = smooth_net(&mut r, &sizes);
        let x = random_vec(&mut r, sizes[0], 1.0);
        let p = params(&net);
        let dir_flat = random_vec(&mut r, p.len(), 1.0);
        let dir = masp_lab::numcore::Gradients::from_flat(&net, &dir_flat).unwrap();
        let exact = net.jvp(&x, &dir).unwrap();
        // Directional derivative of every output by central differences.
        let shifted = |k: f64| {
            let q: Vec<f64> = p.iter().zip(&dir_flat).map(|(a, d)| a + k * d).collect();
            with_params(&net, &q).forward(&x).unwrap()
        };
        let (up, down) = (shifted(H), shifted(-H));
        let fd: Vec<f64> = up.iter().zip(&down).map(|(a, b)| (a - b) / (2.0 * H)).collect();
        assert!(rel_err(&exact, &fd) <= 1e-6, "seed {seed}");
        // Reverse-mode consistency: e_jᵀ (J d) = (Jᵀ e_j) · d.
        for j in 0..sizes[2] {
            let mut e = vec![0.0; sizes[2]];
            e[j] = 1.0;
            let (g, _) = net.backward(&x, &e).unwrap();
            let rev = g.dot(&dir);
            assert!((rev - exact[j]).abs() <= 1e-8 * rev.abs().max(1.0), "seed {seed} output {j}");
        }
        let via_mode = JvpMode::FiniteDifference { step: 1e-6 }.apply(&net, &x, &dir).unwrap();
        assert!(rel_err(&exact, &via_mode) <= 1e-6, "seed {seed} fd mode");
    }
}
