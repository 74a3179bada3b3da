//! Label-setting shortest paths over implicit graphs.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

pub(crate) const NO_PRED: u32 = u32::MAX;

/// An implicit graph with nonnegative edge lengths.
pub(crate) trait SearchGraph {
    fn node_count(&self) -> usize;
    fn for_each_neighbor(&self, u: usize, f: impl FnMut(usize, f64));
}

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

// Min-heap on (dist, node): equal labels pop in node-index order.
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

pub(crate) struct Search {
    pub pred: Vec<u32>,
    pub relaxations: u64,
    /// First settled target and its label.
    pub reached: Option<(usize, f64)>,
}

impl Search {
    /// Node sequence from a source to `target`.
    pub fn path_to(&self, target: usize) -> Vec<usize> {
        let mut path = vec![target];
        let mut cur = target;
        while self.pred[cur] != NO_PRED {
            cur = self.pred[cur] as usize;
            path.push(cur);
        }
        path.reverse();
        path
    }
}

/// Runs from all `sources` (label 0) until a node with `is_target` is settled
/// or every remaining label is at least `bound`.
pub(crate) fn dijkstra<G: SearchGraph>(
    graph: &G,
    sources: &[usize],
    is_target: impl Fn(usize) -> bool,
    bound: f64,
) -> Search {
    let n = graph.node_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut pred = vec![NO_PRED; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut relaxations = 0u64;

    for &s in sources {
        if dist[s] > 0.0 {
            dist[s] = 0.0;
            heap.push(Entry { dist: 0.0, node: s });
        }
    }

    let mut reached = None;
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if done[u] {
            continue;
        }
        if d >= bound {
            break;
        }
        done[u] = true;
        if is_target(u) {
            reached = Some((u, d));
            break;
        }
        graph.for_each_neighbor(u, |v, len| {
            if done[v] {
                return;
            }
            relaxations += 1;
            let cand = d + len;
            if cand < dist[v] {
                dist[v] = cand;
                pred[v] = u as u32;
                heap.push(Entry { dist: cand, node: v });
            }
        });
    }

    Search {
        pred,
        relaxations,
        reached,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Adj(Vec<Vec<(usize, f64)>>);

    impl SearchGraph for Adj {
        fn node_count(&self) -> usize {
            self.0.len()
        }
        fn for_each_neighbor(&self, u: usize, mut f: impl FnMut(usize, f64)) {
            for &(v, w) in &self.0[u] {
                f(v, w);
            }
        }
    }

    #[test]
    fn small_graph() {
        // 0 -1- 1 -1- 2, 0 -5- 2, 3 isolated
        let g = Adj(vec![
            vec![(1, 1.0), (2, 5.0)],
            vec![(0, 1.0), (2, 1.0)],
            vec![(1, 1.0), (0, 5.0)],
            vec![],
        ]);
        let s = dijkstra(&g, &[0], |v| v == 2, f64::INFINITY);
        assert_eq!(s.reached, Some((2, 2.0)));
        assert_eq!(s.path_to(2), vec![0, 1, 2]);
        let s = dijkstra(&g, &[0], |v| v == 3, f64::INFINITY);
        assert!(s.reached.is_none());
        let s = dijkstra(&g, &[0], |v| v == 2, 1.5);
        assert!(s.reached.is_none());
    }

    #[test]
    fn ties_resolve_by_node_index() {
        // two equal routes 0-1-3 and 0-2-3: node 1 settles first and claims 3
        let g = Adj(vec![
            vec![(2, 1.0), (1, 1.0)],
            vec![(0, 1.0), (3, 1.0)],
            vec![(0, 1.0), (3, 1.0)],
            vec![(1, 1.0), (2, 1.0)],
        ]);
        let s = dijkstra(&g, &[0], |v| v == 3, f64::INFINITY);
        assert_eq!(s.path_to(3), vec![0, 1, 3]);
    }
}
