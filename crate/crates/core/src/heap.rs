//! Indexed binary min-heap over cell indices with O(log n) key change and
//! removal by index. Ties are broken by ascending index, so extraction order
//! is fully determined by the keys.

const ABSENT: u32 = u32::MAX;

#[derive(Debug, Clone)]
pub struct IndexedMinHeap {
    heap: Vec<(f64, u32)>,
    pos: Vec<u32>,
}

#[inline]
fn less(a: (f64, u32), b: (f64, u32)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

impl IndexedMinHeap {
    /// Heap able to hold indices `0..capacity`.
    pub fn new(capacity: usize) -> Self {
        assert!(capacity < ABSENT as usize, "heap capacity too large");
        IndexedMinHeap {
            heap: Vec::new(),
            pos: vec![ABSENT; capacity],
        }
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.pos[index] != ABSENT
    }

    pub fn key(&self, index: usize) -> Option<f64> {
        let p = self.pos[index];
        (p != ABSENT).then(|| self.heap[p as usize].0)
    }

    pub fn peek(&self) -> Option<(usize, f64)> {
        self.heap.first().map(|&(k, i)| (i as usize, k))
    }

    /// Inserts `index` or changes its key.
    pub fn push_or_update(&mut self, index: usize, key: f64) {
        debug_assert!(!key.is_nan());
        let p = self.pos[index];
        if p == ABSENT {
            let slot = self.heap.len();
            self.heap.push((key, index as u32));
            self.pos[index] = slot as u32;
            self.sift_up(slot);
        } else {
            let slot = p as usize;
            let old = self.heap[slot].0;
            self.heap[slot].0 = key;
            if key < old {
                self.sift_up(slot);
            } else if key > old {
                self.sift_down(slot);
            }
        }
    }

    pub fn remove(&mut self, index: usize) -> Option<f64> {
        let p = self.pos[index];
        if p == ABSENT {
            return None;
        }
        let slot = p as usize;
        let key = self.heap[slot].0;
        self.pos[index] = ABSENT;
        let last = self.heap.pop().expect("non-empty heap");
        if slot < self.heap.len() {
            self.heap[slot] = last;
            self.pos[last.1 as usize] = slot as u32;
            self.sift_up(slot);
            let slot = self.pos[last.1 as usize] as usize;
            self.sift_down(slot);
        }
        Some(key)
    }

    pub fn pop(&mut self) -> Option<(usize, f64)> {
        let (i, k) = self.peek()?;
        self.remove(i);
        Some((i, k))
    }

    fn sift_up(&mut self, mut slot: usize) {
        let item = self.heap[slot];
        while slot > 0 {
            let parent = (slot - 1) / 2;
            if !less(item, self.heap[parent]) {
                break;
            }
            self.heap[slot] = self.heap[parent];
            self.pos[self.heap[slot].1 as usize] = slot as u32;
            slot = parent;
        }
        self.heap[slot] = item;
        self.pos[item.1 as usize] = slot as u32;
    }

    fn sift_down(&mut self, mut slot: usize) {
        let item = self.heap[slot];
        let len = self.heap.len();
        loop {
            let left = 2 * slot + 1;
            if left >= len {
                break;
            }
            let right = left + 1;
            let child = if right < len && less(self.heap[right], self.heap[left]) {
                right
            } else {
                left
            };
            if !less(self.heap[child], item) {
                break;
            }
            self.heap[slot] = self.heap[child];
            self.pos[self.heap[slot].1 as usize] = slot as u32;
            slot = child;
        }
        self.heap[slot] = item;
        self.pos[item.1 as usize] = slot as u32;
    }

    /// Checks the heap order and the position map.
    pub fn check_consistency(&self) -> bool {
        let ordered = (1..self.heap.len()).all(|s| !less(self.heap[s], self.heap[(s - 1) / 2]));
        let mapped = self
            .heap
            .iter()
            .enumerate()
            .all(|(s, &(_, i))| self.pos[i as usize] == s as u32);
        let stored = self.pos.iter().filter(|&&p| p != ABSENT).count() == self.heap.len();
        ordered && mapped && stored
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[derive(Debug, Clone)]
    enum Op {
        Set(usize, i32),
        Remove(usize),
        Pop,
    }

    fn op() -> impl Strategy<Value = Op> {
        prop_oneof![
            (0..40usize, -20..20i32).prop_map(|(i, k)| Op::Set(i, k)),
            (0..40usize).prop_map(Op::Remove),
            Just(Op::Pop),
        ]
    }

    proptest! {
        #[test]
        fn agrees_with_ordered_model(ops in proptest::collection::vec(op(), 0..300)) {
            let mut heap = IndexedMinHeap::new(40);
            let mut model: BTreeMap<usize, i32> = BTreeMap::new();
            for op in ops {
                match op {
                    Op::Set(i, k) => {
                        heap.push_or_update(i, k as f64);
                        model.insert(i, k);
                    }
                    Op::Remove(i) => {
                        prop_assert_eq!(heap.remove(i), model.remove(&i).map(|k| k as f64));
                    }
                    Op::Pop => {
                        let expected = model.iter().map(|(&i, &k)| (k, i)).min();
                        if let Some((_, i)) = expected {
                            model.remove(&i);
                        }
                        prop_assert_eq!(heap.pop(), expected.map(|(k, i)| (i, k as f64)));
                    }
                }
                prop_assert!(heap.check_consistency());
                prop_assert_eq!(heap.len(), model.len());
            }
        }
    }

    #[test]
    fn ties_break_by_index() {
        let mut h = IndexedMinHeap::new(10);
        for i in [7, 3, 9, 1] {
            h.push_or_update(i, -1.0);
        }
        h.push_or_update(5, -2.0);
        let order: Vec<usize> = std::iter::from_fn(|| h.pop().map(|(i, _)| i)).collect();
        assert_eq!(order, vec![5, 1, 3, 7, 9]);
    }

    #[test]
    fn key_changes() {
        let mut h = IndexedMinHeap::new(4);
        h.push_or_update(0, 1.0);
        h.push_or_update(1, 2.0);
        h.push_or_update(1, 0.5);
        assert_eq!(h.peek(), Some((1, 0.5)));
        h.push_or_update(1, 3.0);
        assert_eq!(h.peek(), Some((0, 1.0)));
        assert_eq!(h.key(1), Some(3.0));
        assert!(!h.contains(2));
        assert_eq!(h.remove(2), None);
    }
}
