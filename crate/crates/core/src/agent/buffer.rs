use rand::Rng;
use serde::{Deserialize, Serialize};

use super::Transition;
use crate::error::{Error, Result};

/// Fixed-capacity ring of transitions; the oldest entry is overwritten first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Transition>,
    cursor: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be positive");
        Self {
            capacity,
            items: Vec::with_capacity(capacity.min(1 << 16)),
            cursor: 0,
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() < self.capacity {
            self.items.push(t);
        } else {
            self.items[self.cursor] = t;
        }
        self.cursor = (self.cursor + 1) % self.capacity;
    }

    /// Contents from oldest to newest.
    pub fn iter_oldest_first(&self) -> impl Iterator<Item = &Transition> {
        let split = if self.items.len() < self.capacity { 0 } else { self.cursor };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `n` uniform indices drawn with replacement.
    pub fn sample_indices<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.items.len() < n || self.items.is_empty() {
            return Err(Error::NotReady {
                size: self.items.len(),
                requested: n,
            });
        }
        Ok((0..n).map(|_| rng.gen_range(0..self.items.len())).collect())
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<Vec<&Transition>> {
        Ok(self
            .sample_indices(n, rng)?
            .into_iter()
            .map(|i| &self.items[i])
            .collect())
    }

    pub fn get(&self, index: usize) -> Option<&Transition> {
        self.items.get(index)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(tag: f64) -> Transition {
        Transition {
            state: vec![tag],
            action: 0,
            reward: tag,
            next_state: vec![tag],
            done: false,
            discount_exponent: 1,
        }
    }

    #[test]
    fn ring_overwrites_oldest() {
        let mut b = ReplayBuffer::new(2);
        for i in 1..=3 {
            b.push(t(f64::from(i)));
        }
        let tags: Vec<f64> = b.iter_oldest_first().map(|x| x.reward).collect();
        assert_eq!(tags, vec![2.0, 3.0]);
    }

    #[test]
    fn undersized_sample_is_not_ready() {
        let mut b = ReplayBuffer::new(4);
        b.push(t(1.0));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(b.sample(2, &mut rng), Err(Error::NotReady { size: 1, requested: 2 })));
    }

    #[test]
    fn seeded_sampling_is_repeatable() {
        let mut b = ReplayBuffer::new(10);
        for i in 0..10 {
            b.push(t(f64::from(i)));
        }
        let a = b.sample_indices(8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let c = b.sample_indices(8, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        assert_eq!(a, c);
    }
}
