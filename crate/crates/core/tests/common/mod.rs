//! Independent oracles shared by the integration tests and the acceptance
//! suite. Nothing here calls the library's gradient code.
#![allow(dead_code)]

use std::collections::BTreeMap;

use masp_lab::agent::Transition;
use masp_lab::masp::{MetaProblem, SimilarityMatrix};
use masp_lab::numcore::{Activation, Gradients, Matrix, Mlp};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Central differences of `f` around `x`.
pub fn central_fd(x: &[f64], h: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

/// Central differences with a per-coordinate step `h · max(|x_i|, floor)`,
/// for functions whose curvature scales with the coordinate.
pub fn central_fd_relative(x: &[f64], h: f64, floor: f64, mut f: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            let step = h * x[i].abs().max(floor);
            probe[i] = x[i] + step;
            let up = f(&probe);
            probe[i] = x[i] - step;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

/// `max_i |a_i − b_i| / max(‖a‖∞, ‖b‖∞, 1e-12)`.
pub fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let scale = a
        .iter()
        .chain(b)
        .fold(1e-12f64, |m, v| m.max(v.abs()));
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max) / scale
}

/// Largest per-entry `|a − b| / max(|a|, |b|, floor)`.
pub fn max_entry_rel_err(a: &[f64], b: &[f64], floor: f64) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(floor))
        .fold(0.0, f64::max)
}

/// Network with the parameters of `template` replaced by `flat`.
pub fn with_params(template: &Mlp, flat: &[f64]) -> Mlp {
    let g = Gradients::from_flat(template, flat).unwrap();
    Mlp::from_layers(g.layers, template.activations().to_vec()).unwrap()
}

pub fn params(net: &Mlp) -> Vec<f64> {
    let mut g = Gradients::zeros_like(net);
    for (dst, src) in g.layers.iter_mut().zip(net.layers()) {
        *dst = src.clone();
    }
    g.flatten()
}

/// Smooth random network (tanh or identity hidden units) so finite
/// differences see no kinks.
pub fn smooth_net(r: &mut ChaCha8Rng, sizes: &[usize]) -> Mlp {
    let act = if r.gen_bool(0.5) { Activation::Tanh } else { Activation::Identity };
    let mut net = Mlp::init(sizes, act, r);
    let mut g = Gradients::zeros_like(&net);
    for l in &mut g.layers {
        for b in &mut l.bias {
            *b = r.gen_range(-0.5..0.5);
        }
    }
    net.add_scaled(1.0, &g).unwrap();
    net
}

pub fn random_vec(r: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n).map(|_| r.gen_range(-scale..scale)).collect()
}

pub fn random_batch(r: &mut ChaCha8Rng, n: usize, state_dim: usize, actions: usize) -> Vec<Transition> {
    (0..n)
        .map(|_| Transition {
            state: random_vec(r, state_dim, 1.0),
            action: r.gen_range(0..actions),
            reward: r.gen_range(-1.0..1.0),
            next_state: random_vec(r, state_dim, 1.0),
            done: r.gen_bool(0.3),
            discount_exponent: r.gen_range(1..=3),
        })
        .collect()
}

pub fn random_sigma(r: &mut ChaCha8Rng, n: usize) -> SimilarityMatrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if i == j { r.gen_range(0.5..1.0) } else { r.gen_range(0.0..0.8) };
            m.set(i, j, v);
            m.set(j, i, v);
        }
    }
    SimilarityMatrix::try_from(m).unwrap()
}

/// Q* of the deterministic chain: reward 1 for `right` in the last state,
/// which also terminates; `left` at state 0 stays put.
pub fn chain_q_star(states: usize, gamma: f64) -> Vec<[f64; 2]> {
    let mut q = vec![[0.0; 2]; states];
    for _ in 0..10_000 {
        let v: Vec<f64> = q.iter().map(|a: &[f64; 2]| a[0].max(a[1])).collect();
        let mut next = q.clone();
        for s in 0..states {
            next[s][0] = gamma * v[s.saturating_sub(1)];
            next[s][1] = if s + 1 == states { 1.0 } else { gamma * v[s + 1] };
        }
        let delta = next
            .iter()
            .zip(&q)
            .map(|(a, b)| (a[0] - b[0]).abs().max((a[1] - b[1]).abs()))
            .fold(0.0, f64::max);
        q = next;
        if delta < 1e-15 {
            break;
        }
    }
    q
}

/// Every window of every trajectory, counted, then sorted by (count desc,
/// length asc, lexicographic asc).
pub fn brute_force_mine(corpus: &[Vec<usize>], k: usize, l_min: usize, l_max: usize) -> Vec<(Vec<usize>, u64)> {
    let mut counts: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    for traj in corpus {
        for start in 0..traj.len() {
            for len in l_min..=l_max {
                if start + len <= traj.len() {
                    *counts.entry(traj[start..start + len].to_vec()).or_default() += 1;
                }
            }
        }
    }
    let mut all: Vec<(Vec<usize>, u64)> = counts.into_iter().collect();
    all.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.len().cmp(&b.0.len())).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

/// Random corpus with at most `max_total` actions over a small alphabet so
/// counts collide and tie-breaks matter.
pub fn random_corpus(r: &mut ChaCha8Rng, max_total: usize) -> Vec<Vec<usize>> {
    let alphabet = r.gen_range(2..=5);
    let trajs = r.gen_range(1..=6);
    let mut budget = r.gen_range(1..=max_total);
    let mut out = Vec::new();
    for i in 0..trajs {
        if budget == 0 {
            break;
        }
        let len = if i + 1 == trajs { budget } else { r.gen_range(0..=budget) };
        budget -= len;
        out.push((0..len).map(|_| r.gen_range(0..alphabet)).collect());
    }
    out
}

pub struct Instance {
    pub theta: Mlp,
    pub target: Mlp,
    pub inner: Vec<Transition>,
    pub outer: Vec<Transition>,
    pub e: Vec<f64>,
    pub sigma: SimilarityMatrix,
    pub eta: f64,
    pub alpha: f64,
}

/// |A| ≤ 4, at most 50 parameters.
pub fn meta_instance(seed: u64) -> Instance {
    let mut r = rng(seed);
    loop {
        let na = r.gen_range(2..=4);
        let sd = r.gen_range(1..=3);
        let ed = r.gen_range(0..=2);
        let hidden = r.gen_range(1..=5);
        let sizes = [sd + ed, hidden, na];
        let theta = smooth_net(&mut r, &sizes);
        if theta.num_params() > 50 {
            continue;
        }
        let target = smooth_net(&mut r, &sizes);
        let inner_len = r.gen_range(1..=4);
        let outer_len = r.gen_range(1..=4);
        return Instance {
            inner: random_batch(&mut r, inner_len, sd, na),
            outer: random_batch(&mut r, outer_len, sd, na),
            e: random_vec(&mut r, ed, 1.0),
            sigma: random_sigma(&mut r, na),
            eta: r.gen_range(0.2..2.0),
            alpha: r.gen_range(0.05..0.5),
            theta,
            target,
        };
    }
}

/// Perturbs `Σ_kl` and `Σ_lk` together, redoes the inner update and
/// re-evaluates the outer loss. Off-diagonal derivatives of a symmetric
/// perturbation are twice the symmetric gradient entry.
pub fn fd_meta(inst: &Instance, problem: &MetaProblem<'_>) -> Matrix {
    let n = inst.sigma.size();
    let h = 1e-5;
    let outer = |m: &Matrix| {
        let tp = problem.inner_update(m, inst.eta, inst.alpha).unwrap();
        problem.outer_loss(&tp).unwrap()
    };
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        for l in k..n {
            let mut up = inst.sigma.as_matrix().clone();
            let mut down = up.clone();
            for (m, d) in [(&mut up, h), (&mut down, -h)] {
                let v = m.get(k, l) + d;
                m.set(k, l, v);
                m.set(l, k, v);
            }
            let d = (outer(&up) - outer(&down)) / (2.0 * h);
            let v = if k == l { d } else { d / 2.0 };
            out.set(k, l, v);
            out.set(l, k, v);
        }
    }
    out
}
