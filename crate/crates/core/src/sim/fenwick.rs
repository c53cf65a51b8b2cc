//! Growable Fenwick tree over integer weights, used to pick a genotype
//! class with probability proportional to its live count.

#[derive(Debug, Clone, Default)]
pub struct WeightedIndex {
    // 1-based implicit tree; tree[0] is unused.
    tree: Vec<u64>,
    total: u64,
}

#[inline]
fn lsb(i: usize) -> usize {
    i & i.wrapping_neg()
}

impl WeightedIndex {
    pub fn with_capacity(capacity: usize) -> Self {
        let mut tree = Vec::with_capacity(capacity + 1);
        tree.push(0);
        Self { tree, total: 0 }
    }

    pub fn len(&self) -> usize {
        self.tree.len().saturating_sub(1)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    /// Sum of weights with index `< end`.
    pub fn prefix_sum(&self, end: usize) -> u64 {
        let mut i = end;
        let mut sum = 0;
        while i > 0 {
            sum += self.tree[i];
            i -= lsb(i);
        }
        sum
    }

    /// Appends an item with the given weight; returns its index.
    pub fn push(&mut self, weight: u64) -> usize {
        if self.tree.is_empty() {
            self.tree.push(0);
        }
        let i = self.tree.len();
        // Node i covers (i - lsb(i), i].
        let covered = self.prefix_sum(i - 1) - self.prefix_sum(i - lsb(i));
        self.tree.push(covered + weight);
        self.total += weight;
        i - 1
    }

    pub fn add(&mut self, index: usize, delta: i64) {
        let mut i = index + 1;
        let n = self.tree.len();
        debug_assert!(i < n);
        while i < n {
            self.tree[i] = self.tree[i].wrapping_add_signed(delta);
            i += lsb(i);
        }
        self.total = self.total.wrapping_add_signed(delta);
    }

    /// Index `i` with `prefix_sum(i) <= target < prefix_sum(i + 1)`.
    /// Requires `target < total()`.
    pub fn find(&self, mut target: u64) -> usize {
        debug_assert!(target < self.total);
        let n = self.tree.len() - 1;
        let mut pos = 0;
        let mut step = if n == 0 {
            0
        } else {
            1 << (usize::BITS - 1 - n.leading_zeros())
        };
        while step > 0 {
            let next = pos + step;
            if next <= n && self.tree[next] <= target {
                pos = next;
                target -= self.tree[next];
            }
            step >>= 1;
        }
        pos
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn find_skips_zero_weights() {
        let mut w = WeightedIndex::with_capacity(4);
        for x in [0, 3, 0, 0, 2] {
            w.push(x);
        }
        assert_eq!(w.total(), 5);
        let picks: Vec<_> = (0..5).map(|t| w.find(t)).collect();
        assert_eq!(picks, vec![1, 1, 1, 4, 4]);
        w.add(1, -3);
        w.add(2, 1);
        assert_eq!((0..3).map(|t| w.find(t)).collect::<Vec<_>>(), vec![2, 4, 4]);
    }

    proptest! {
        #[test]
        fn matches_linear_scan(
            weights in proptest::collection::vec(0u64..20, 1..200),
            updates in proptest::collection::vec((0usize..200, 0u64..20), 0..50),
        ) {
            let mut w = WeightedIndex::with_capacity(0);
            let mut plain = weights.clone();
            for &x in &weights {
                w.push(x);
            }
            for (i, x) in updates {
                let i = i % plain.len();
                w.add(i, x as i64 - plain[i] as i64);
                plain[i] = x;
            }
            prop_assert_eq!(w.total(), plain.iter().sum::<u64>());
            for end in 0..=plain.len() {
                prop_assert_eq!(w.prefix_sum(end), plain[..end].iter().sum::<u64>());
            }
            let mut acc = 0;
            for (i, &x) in plain.iter().enumerate() {
                for t in acc..acc + x {
                    prop_assert_eq!(w.find(t), i);
                }
                acc += x;
            }
        }
    }
}
