/// Canonical bijection between unordered node pairs `{i, j}` and flat γ slots.
///
/// Nodes `0..m` are the state nodes, `m..m+n` the ancillary ones. Pairs are
/// enumerated row by row: (0,1), (0,2), …, (0,N−1), (1,2), …
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConductancePairIndex {
    nodes: usize,
}

impl ConductancePairIndex {
    pub fn new(nodes: usize) -> Self {
        Self { nodes }
    }

    pub fn nodes(&self) -> usize {
        self.nodes
    }

    /// `N(N−1)/2`
    pub fn len(&self) -> usize {
        self.nodes * self.nodes.saturating_sub(1) / 2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Slot of the pair `{i, j}`; `None` for `i == j` or out-of-range nodes.
    #[inline]
    pub fn slot(&self, i: usize, j: usize) -> Option<usize> {
        if i == j || i >= self.nodes || j >= self.nodes {
            return None;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        Some(a * (2 * self.nodes - a - 1) / 2 + (b - a - 1))
    }

    pub fn pair(&self, slot: usize) -> Option<(usize, usize)> {
        if slot >= self.len() {
            return None;
        }
        let mut rest = slot;
        for a in 0..self.nodes {
            let row = self.nodes - a - 1;
            if rest < row {
                return Some((a, a + 1 + rest));
            }
            rest -= row;
        }
        None
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).filter_map(move |s| self.pair(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_round_trip() {
        for nodes in 0..12 {
            let idx = ConductancePairIndex::new(nodes);
            assert_eq!(idx.len(), nodes * nodes.saturating_sub(1) / 2);
            for s in 0..idx.len() {
                let (i, j) = idx.pair(s).unwrap();
                assert!(i < j);
                assert_eq!(idx.slot(i, j), Some(s));
                assert_eq!(idx.slot(j, i), Some(s));
            }
            assert_eq!(idx.pair(idx.len()), None);
            let mut seen = vec![false; idx.len()];
            for i in 0..nodes {
                assert_eq!(idx.slot(i, i), None);
                for j in 0..nodes {
                    if let Some(s) = idx.slot(i, j) {
                        seen[s] = true;
                    }
                }
            }
            assert!(seen.into_iter().all(|x| x));
        }
    }

    #[test]
    fn six_nodes_give_fifteen_slots() {
        assert_eq!(ConductancePairIndex::new(6).len(), 15);
        assert_eq!(ConductancePairIndex::new(6).pair(0), Some((0, 1)));
        assert_eq!(ConductancePairIndex::new(6).pair(14), Some((4, 5)));
    }
}
