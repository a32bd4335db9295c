//! FIFO experience buffers with uniform with-replacement sampling.

use crate::error::{Error, Result};
use crate::rng::Rng;
use rand::Rng as _;
use std::collections::VecDeque;

pub const DEFAULT_CAPACITY: usize = 100_000;

/// Bounded FIFO buffer; pushing past capacity evicts the oldest item.
#[derive(Debug, Clone)]
pub struct RingBuffer<T> {
    items: VecDeque<T>,
    capacity: usize,
}

impl<T> RingBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity.min(4096)),
            capacity,
        }
    }

    pub fn push(&mut self, item: T) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn clear(&mut self) {
        self.items.clear();
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.items.iter()
    }

    /// Uniform sample of `batch_size` references, with replacement.
    pub fn sample(&self, batch_size: usize, rng: &mut Rng) -> Result<Vec<&T>> {
        if self.items.is_empty() {
            return Err(Error::InvalidState("cannot sample from an empty buffer".into()));
        }
        Ok((0..batch_size)
            .map(|_| &self.items[rng.gen_range(0..self.items.len())])
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    #[test]
    fn push_counts_up_to_capacity() {
        let mut buf = RingBuffer::new(10);
        for i in 0..3 {
            buf.push(i);
        }
        assert_eq!(buf.len(), 3);
    }

    #[test]
    fn eviction_is_oldest_first() {
        let mut buf = RingBuffer::new(2);
        buf.push('a');
        buf.push('b');
        buf.push('c');
        let contents: Vec<char> = buf.iter().copied().collect();
        assert_eq!(contents, vec!['b', 'c']);
    }

    #[test]
    fn size_saturates_at_capacity() {
        let mut buf = RingBuffer::new(100_000);
        for i in 0..100_001u32 {
            buf.push(i);
        }
        assert_eq!(buf.len(), 100_000);
        assert_eq!(buf.iter().next(), Some(&1));
    }

    #[test]
    fn single_item_sampled_with_replacement() {
        let mut buf = RingBuffer::new(4);
        buf.push(7);
        let mut rng = rng_from_seed(0);
        let batch = buf.sample(4, &mut rng).unwrap();
        assert_eq!(batch.len(), 4);
        assert!(batch.iter().all(|&&v| v == 7));
    }

    #[test]
    fn sampling_is_uniform() {
        let mut buf = RingBuffer::new(10);
        for i in 0..10 {
            buf.push(i);
        }
        let mut rng = rng_from_seed(123);
        let mut counts = [0u32; 10];
        let n = 100_000;
        for _ in 0..n {
            counts[*buf.sample(1, &mut rng).unwrap()[0] as usize] += 1;
        }
        for &c in &counts {
            let f = c as f64 / n as f64;
            assert!((0.09..=0.11).contains(&f), "frequency {f}");
        }
        // Chi-square against uniform, df = 9; 21.666 is the 0.01 cutoff.
        let expected = n as f64 / 10.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        assert!(chi2 < 21.666, "chi-square {chi2}");
    }

    #[test]
    fn same_seed_same_batch() {
        let mut buf = RingBuffer::new(8);
        for i in 0..8 {
            buf.push(i);
        }
        let a: Vec<i32> = buf
            .sample(16, &mut rng_from_seed(5))
            .unwrap()
            .into_iter()
            .copied()
            .collect();
        let b: Vec<i32> = buf
            .sample(16, &mut rng_from_seed(5))
            .unwrap()
            .into_iter()
            .copied()
            .collect();
        assert_eq!(a, b);
    }

    #[test]
    fn clear_empties_and_stays_usable() {
        let mut buf = RingBuffer::new(4);
        buf.push(1);
        buf.clear();
        buf.clear();
        assert!(buf.is_empty());
        let mut rng = rng_from_seed(0);
        assert!(buf.sample(1, &mut rng).is_err());
        buf.push(2);
        assert_eq!(buf.len(), 1);
        assert_eq!(*buf.sample(1, &mut rng).unwrap()[0], 2);
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn behaves_like_bounded_deque(ops in proptest::collection::vec(0u8..=1, 1..200)) {
                let mut buf = RingBuffer::new(5);
                let mut model: VecDeque<usize> = VecDeque::new();
                for (i, &op) in ops.iter().enumerate() {
                    match op {
                        0 => {
                            buf.push(i);
                            if model.len() == 5 {
                                model.pop_front();
                            }
                            model.push_back(i);
                        }
                        _ => {
                            buf.clear();
                            model.clear();
                        }
                    }
                    prop_assert!(buf.len() <= 5);
                    prop_assert_eq!(buf.len(), model.len());
                    let got: Vec<usize> = buf.iter().copied().collect();
                    let want: Vec<usize> = model.iter().copied().collect();
                    prop_assert_eq!(got, want);
                }
            }
        }
    }
}
