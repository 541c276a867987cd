use std::cmp::Ordering;

/// Binary max-heap over a fixed vertex set with keyed updates.
///
/// Every vertex is in the heap for its whole life; only keys change. Equal
/// keys are ordered by vertex index, lowest first, so [`find_max`] is
/// deterministic.
///
/// [`find_max`]: IndexedMaxHeap::find_max
#[derive(Clone, Debug)]
pub struct IndexedMaxHeap {
    keys: Vec<f64>,
    heap: Vec<u32>,
    positions: Vec<u32>,
}

impl IndexedMaxHeap {
    pub fn from_keys(keys: Vec<f64>) -> Self {
        let n = keys.len();
        let mut h = IndexedMaxHeap { keys, heap: (0..n as u32).collect(), positions: (0..n as u32).collect() };
        for i in (0..n / 2).rev() {
            h.sift_down(i);
        }
        h
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn key(&self, v: usize) -> f64 {
        self.keys[v]
    }

    pub fn keys(&self) -> &[f64] {
        &self.keys
    }

    pub fn find_max(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&v| (v as usize, self.keys[v as usize]))
    }

    pub fn set_key(&mut self, v: usize, key: f64) {
        let old = self.keys[v];
        self.keys[v] = key;
        let i = self.positions[v] as usize;
        match key.total_cmp(&old) {
            Ordering::Greater => self.sift_up(i),
            Ordering::Less => self.sift_down(i),
            Ordering::Equal => {}
        }
    }

    #[inline]
    fn above(&self, a: u32, b: u32) -> bool {
        match self.keys[a as usize].total_cmp(&self.keys[b as usize]) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => a < b,
        }
    }

    fn swap(&mut self, i: usize, j: usize) {
        self.heap.swap(i, j);
        self.positions[self.heap[i] as usize] = i as u32;
        self.positions[self.heap[j] as usize] = j as u32;
    }

    fn sift_up(&mut self, mut i: usize) {
        while i > 0 {
            let p = (i - 1) / 2;
            if self.above(self.heap[i], self.heap[p]) {
                self.swap(i, p);
                i = p;
            } else {
                break;
            }
        }
    }

    fn sift_down(&mut self, mut i: usize) {
        let n = self.heap.len();
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut best = i;
            if l < n && self.above(self.heap[l], self.heap[best]) {
                best = l;
            }
            if r < n && self.above(self.heap[r], self.heap[best]) {
                best = r;
            }
            if best == i {
                break;
            }
            self.swap(i, best);
            i = best;
        }
    }

    /// Heap order holds and `positions` inverts `heap`.
    pub fn check_invariants(&self) -> bool {
        let n = self.heap.len();
        (0..n).all(|i| self.positions[self.heap[i] as usize] as usize == i)
            && (1..n).all(|i| !self.above(self.heap[i], self.heap[(i - 1) / 2]))
    }
}
