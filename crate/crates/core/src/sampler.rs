//! Dynamic discrete distributions used by pair selection.

/// Binary indexed tree over nonnegative weights with O(log N) point updates
/// and inverse-CDF sampling.
///
/// Point updates accumulate rounding in the internal partial sums, so the
/// tree rebuilds itself from the stored weights every `rebuild_every`
/// updates.
#[derive(Clone, Debug)]
pub struct WeightTree {
    weights: Vec<f64>,
    // 1-based partial sums
    tree: Vec<f64>,
    top_step: usize,
    updates: usize,
    rebuild_every: usize,
}

impl WeightTree {
    pub fn new(weights: Vec<f64>) -> Self {
        let n = weights.len();
        let top_step = if n == 0 { 0 } else { 1 << (usize::BITS - 1 - n.leading_zeros()) };
        let mut t = Self {
            weights,
            tree: vec![0.0; n + 1],
            top_step,
            updates: 0,
            rebuild_every: 64 * n.max(256),
        };
        t.rebuild();
        t
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn rebuild(&mut self) {
        let n = self.weights.len();
        self.tree[1..].copy_from_slice(&self.weights);
        for i in 1..=n {
            let parent = i + (i & i.wrapping_neg());
            if parent <= n {
                self.tree[parent] += self.tree[i];
            }
        }
        self.updates = 0;
    }

    pub fn set(&mut self, i: usize, w: f64) {
        debug_assert!(w >= 0.0, "negative weight {w}");
        let delta = w - self.weights[i];
        self.weights[i] = w;
        if delta == 0.0 {
            return;
        }
        self.updates += 1;
        if self.updates >= self.rebuild_every {
            self.rebuild();
            return;
        }
        let n = self.weights.len();
        let mut k = i + 1;
        while k <= n {
            self.tree[k] += delta;
            k += k & k.wrapping_neg();
        }
    }

    /// Sum of weights with index < `i`.
    pub fn prefix(&self, i: usize) -> f64 {
        let mut k = i;
        let mut s = 0.0;
        while k > 0 {
            s += self.tree[k];
            k &= k - 1;
        }
        s
    }

    pub fn total(&self) -> f64 {
        self.prefix(self.weights.len()).max(0.0)
    }

    // Smallest index whose inclusive prefix sum exceeds `target`.
    fn descend(&self, mut target: f64) -> usize {
        let n = self.weights.len();
        let mut pos = 0;
        let mut step = self.top_step;
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

    /// Draws an index with probability proportional to its weight, `u` being
    /// a uniform draw on [0, 1). Returns `None` when the total weight is zero.
    pub fn sample(&self, u: f64) -> Option<usize> {
        let total = self.total();
        if total <= 0.0 {
            return None;
        }
        let idx = self.descend(u * total);
        self.settle(idx, None)
    }

    /// As [`sample`](Self::sample), restricted to indices other than `skip`.
    pub fn sample_excluding(&self, skip: usize, u: f64) -> Option<usize> {
        let skipped = self.weights[skip];
        let total = self.total() - skipped;
        if total <= 0.0 || self.weights.len() < 2 {
            return None;
        }
        let mut target = u * total;
        if target >= self.prefix(skip) {
            target += skipped;
        }
        let idx = self.descend(target);
        self.settle(idx, Some(skip))
    }

    // Rounding in the partial sums can land the descent on a zero-weight or
    // excluded slot (or one past the end); move to the nearest valid slot.
    fn settle(&self, idx: usize, skip: Option<usize>) -> Option<usize> {
        let ok = |k: usize| self.weights[k] > 0.0 && Some(k) != skip;
        let n = self.weights.len();
        let idx = idx.min(n - 1);
        if ok(idx) {
            return Some(idx);
        }
        (idx + 1..n).find(|&k| ok(k)).or_else(|| (0..idx).rev().find(|&k| ok(k)))
    }
}

/// Segment tree answering "index of the largest value", ties going to the
/// lowest index.
#[derive(Clone, Debug)]
pub struct MaxTree {
    n: usize,
    size: usize,
    // (value, index) per node, leaves at [size, 2*size)
    nodes: Vec<(f64, usize)>,
}

const EMPTY: (f64, usize) = (f64::NEG_INFINITY, usize::MAX);

fn better(a: (f64, usize), b: (f64, usize)) -> (f64, usize) {
    if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
        b
    } else {
        a
    }
}

impl MaxTree {
    pub fn new(values: &[f64]) -> Self {
        let n = values.len();
        let size = n.next_power_of_two().max(1);
        let mut nodes = vec![EMPTY; 2 * size];
        for (i, &v) in values.iter().enumerate() {
            nodes[size + i] = (v, i);
        }
        for k in (1..size).rev() {
            nodes[k] = better(nodes[2 * k], nodes[2 * k + 1]);
        }
        Self { n, size, nodes }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn set(&mut self, i: usize, v: f64) {
        let mut k = self.size + i;
        self.nodes[k] = (v, i);
        k /= 2;
        while k >= 1 {
            self.nodes[k] = better(self.nodes[2 * k], self.nodes[2 * k + 1]);
            k /= 2;
        }
    }

    pub fn argmax(&self) -> usize {
        self.nodes[1].1
    }

    // Best over the half-open index range [lo, hi).
    fn query(&self, lo: usize, hi: usize) -> (f64, usize) {
        let mut best = EMPTY;
        let (mut l, mut r) = (lo + self.size, hi + self.size);
        while l < r {
            if l & 1 == 1 {
                best = better(best, self.nodes[l]);
                l += 1;
            }
            if r & 1 == 1 {
                r -= 1;
                best = better(best, self.nodes[r]);
            }
            l /= 2;
            r /= 2;
        }
        best
    }

    pub fn argmax_excluding(&self, skip: usize) -> Option<usize> {
        let best = better(self.query(0, skip), self.query(skip + 1, self.n));
        (best.1 != usize::MAX).then_some(best.1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn samples_follow_cumulative_layout() {
        let t = WeightTree::new(vec![1.0, 0.0, 3.0]);
        assert_eq!(t.total(), 4.0);
        assert_eq!(t.sample(0.0), Some(0));
        assert_eq!(t.sample(0.249), Some(0));
        assert_eq!(t.sample(0.25), Some(2));
        assert_eq!(t.sample(0.999), Some(2));
        assert_eq!(t.sample_excluding(2, 0.7), Some(0));
        assert_eq!(t.sample_excluding(0, 0.1), Some(2));
    }

    #[test]
    fn zero_total_yields_none() {
        let t = WeightTree::new(vec![0.0, 0.0]);
        assert_eq!(t.sample(0.5), None);
        let t = WeightTree::new(vec![0.0, 2.0]);
        assert_eq!(t.sample_excluding(1, 0.5), None);
    }

    #[test]
    fn max_tree_breaks_ties_low() {
        let mut m = MaxTree::new(&[1.0, 3.0, 3.0, 2.0]);
        assert_eq!(m.argmax(), 1);
        assert_eq!(m.argmax_excluding(1), Some(2));
        m.set(3, 5.0);
        assert_eq!(m.argmax(), 3);
        assert_eq!(m.argmax_excluding(3), Some(1));
        assert_eq!(MaxTree::new(&[4.0]).argmax_excluding(0), None);
    }

    proptest! {
        #[test]
        fn prefix_sums_track_updates(
            init in prop::collection::vec(0.0f64..10.0, 1..40),
            updates in prop::collection::vec((0usize..40, 0.0f64..10.0), 0..200),
        ) {
            let mut t = WeightTree::new(init.clone());
            let mut plain = init;
            for (i, w) in updates {
                let i = i % plain.len();
                t.set(i, w);
                plain[i] = w;
            }
            for k in 0..=plain.len() {
                let expect: f64 = plain[..k].iter().sum();
                prop_assert!((t.prefix(k) - expect).abs() <= 1e-9 * (1.0 + expect));
            }
        }

        #[test]
        fn sampled_index_brackets_target(
            w in prop::collection::vec(0.0f64..5.0, 2..30),
            u in 0.0f64..1.0,
            skip in 0usize..30,
        ) {
            let skip = skip % w.len();
            let t = WeightTree::new(w.clone());
            if let Some(k) = t.sample_excluding(skip, u) {
                prop_assert!(k != skip && w[k] > 0.0);
            } else {
                prop_assert!(w.iter().enumerate().all(|(k, &x)| k == skip || x == 0.0));
            }
        }

        #[test]
        fn argmax_matches_scan(v in prop::collection::vec(0u8..6, 1..50), skip in 0usize..50) {
            let vals: Vec<f64> = v.iter().map(|&x| x as f64).collect();
            let m = MaxTree::new(&vals);
            let scan = |excl: Option<usize>| {
                let mut best: Option<usize> = None;
                for (k, &x) in vals.iter().enumerate() {
                    if Some(k) == excl { continue; }
                    if best.map_or(true, |b| x > vals[b]) { best = Some(k); }
                }
                best
            };
            prop_assert_eq!(Some(m.argmax()), scan(None));
            let skip = skip % vals.len();
            prop_assert_eq!(m.argmax_excluding(skip), scan(Some(skip)));
        }
    }
}
