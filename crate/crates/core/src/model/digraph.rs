use std::collections::{BTreeSet, VecDeque};

use crate::model::{Relation, Subset};

/// A finite digraph on vertices `0..vertices`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct Digraph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl Digraph {
    pub fn new<I: IntoIterator<Item = (usize, usize)>>(vertices: usize, edges: I) -> Self {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        assert!(
            edges.iter().all(|&(u, v)| u < vertices && v < vertices),
            "edge endpoint out of range"
        );
        Digraph { vertices, edges }
    }

    /// Views a binary relation as a digraph.
    pub fn from_relation(vertices: usize, rel: &Relation) -> Self {
        assert_eq!(rel.arity(), 2);
        Digraph::new(vertices, rel.iter().map(|t| (t[0], t[1])))
    }

    pub fn vertices(&self) -> usize {
        self.vertices
    }

    pub fn edges(&self) -> &BTreeSet<(usize, usize)> {
        &self.edges
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.edges.contains(&(u, v))
    }

    pub fn insert(&mut self, u: usize, v: usize) {
        assert!(u < self.vertices && v < self.vertices);
        self.edges.insert((u, v));
    }

    pub fn successors(&self, u: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges.range((u, 0)..=(u, usize::MAX)).map(|&(_, v)| v)
    }

    pub fn is_subgraph_of(&self, other: &Digraph) -> bool {
        self.edges.is_subset(&other.edges)
    }

    /// Relational composition: `(u, w)` whenever `u -> v` here and `v -> w`
    /// in `other`.
    pub fn compose(&self, other: &Digraph) -> Digraph {
        let mut out = Digraph::new(self.vertices.max(other.vertices), []);
        for &(u, v) in &self.edges {
            for w in other.successors(v) {
                out.edges.insert((u, w));
            }
        }
        out
    }

    pub fn domain(&self) -> Subset {
        self.edges.iter().map(|&(u, _)| u).collect()
    }

    pub fn range(&self) -> Subset {
        self.edges.iter().map(|&(_, v)| v).collect()
    }

    /// Vertices with an edge into `set`.
    pub fn predecessors_of(&self, set: &Subset) -> Subset {
        self.edges
            .iter()
            .filter(|&&(_, v)| set.contains(v))
            .map(|&(u, _)| u)
            .collect()
    }

    /// Vertices reachable by one edge from `set`.
    pub fn successors_of(&self, set: &Subset) -> Subset {
        self.edges
            .iter()
            .filter(|&&(u, _)| set.contains(u))
            .map(|&(_, v)| v)
            .collect()
    }

    /// Vertices reachable from `from` by walks of length >= 0.
    pub fn reachable(&self, from: &Subset) -> Subset {
        let mut seen: Subset = from.iter().filter(|&v| v < self.vertices).collect();
        let mut queue: VecDeque<usize> = seen.iter().collect();
        while let Some(u) = queue.pop_front() {
            for v in self.successors(u) {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }

    /// A shortest walk from a vertex of `from` to a vertex of `to`; among
    /// shortest walks the lexicographically least vertex sequence. A single
    /// vertex when `from` and `to` meet.
    pub fn reach(&self, from: &Subset, to: &Subset) -> Option<Vec<usize>> {
        // distance to `to`, by BFS over reversed edges
        let mut dist = vec![usize::MAX; self.vertices];
        let mut queue = VecDeque::new();
        for v in to.iter().filter(|&v| v < self.vertices) {
            dist[v] = 0;
            queue.push_back(v);
        }
        let mut preds: Vec<Vec<usize>> = vec![Vec::new(); self.vertices];
        for &(u, v) in &self.edges {
            preds[v].push(u);
        }
        while let Some(v) = queue.pop_front() {
            for &u in &preds[v] {
                if dist[u] == usize::MAX {
                    dist[u] = dist[v] + 1;
                    queue.push_back(u);
                }
            }
        }
        let start = from
            .iter()
            .filter(|&v| v < self.vertices && dist[v] != usize::MAX)
            .min_by_key(|&v| (dist[v], v))?;
        let mut walk = vec![start];
        let mut cur = start;
        while dist[cur] > 0 {
            cur = self
                .successors(cur)
                .find(|&w| dist[w].checked_add(1) == Some(dist[cur]))
                .expect("BFS layers are consistent");
            walk.push(cur);
        }
        Some(walk)
    }

    /// Some closed walk of length >= 1 (first vertex repeated at the end),
    /// found by depth-first search from the lowest vertex. Self-loops are
    /// preferred.
    pub fn closed_walk(&self) -> Option<Vec<usize>> {
        if let Some(&(v, _)) = self.edges.iter().find(|&&(u, v)| u == v) {
            return Some(vec![v, v]);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state = vec![0u8; self.vertices];
        let mut stack_path: Vec<usize> = Vec::new();
        for root in 0..self.vertices {
            if state[root] != 0 {
                continue;
            }
            let mut frames: Vec<(usize, Vec<usize>, usize)> = Vec::new();
            state[root] = 1;
            stack_path.push(root);
            frames.push((root, self.successors(root).collect(), 0));
            while let Some((u, succ, next)) = frames.last_mut() {
                if *next < succ.len() {
                    let v = succ[*next];
                    *next += 1;
                    match state[v] {
                        0 => {
                            state[v] = 1;
                            stack_path.push(v);
                            let s = self.successors(v).collect();
                            frames.push((v, s, 0));
                        }
                        1 => {
                            let pos = stack_path.iter().position(|&w| w == v).unwrap();
                            let mut cycle = stack_path[pos..].to_vec();
                            cycle.push(v);
                            return Some(cycle);
                        }
                        _ => {}
                    }
                } else {
                    state[*u] = 2;
                    stack_path.pop();
                    frames.pop();
                }
            }
        }
        None
    }

    /// Whether some loop `(v, v)` is an edge.
    pub fn meets_diagonal(&self) -> bool {
        self.edges.iter().any(|&(u, v)| u == v)
    }

    /// Whether every consecutive pair of `walk` is an edge.
    pub fn is_walk(&self, walk: &[usize]) -> bool {
        !walk.is_empty() && walk.windows(2).all(|w| self.has_edge(w[0], w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(xs: &[usize]) -> Subset {
        Subset::new(xs.iter().copied())
    }

    #[test]
    fn reach_examples() {
        let d = Digraph::new(2, [(0, 0), (1, 1)]);
        assert_eq!(d.reach(&s(&[0]), &s(&[1])), None);
        let d = Digraph::new(2, [(0, 1)]);
        assert_eq!(d.reach(&s(&[0]), &s(&[1])), Some(vec![0, 1]));
        let d = Digraph::new(2, []);
        assert_eq!(d.reach(&s(&[0]), &s(&[0])), Some(vec![0]));
    }

    #[test]
    fn reach_prefers_lexicographically_least_shortest_walk() {
        // 0 -> {3, 2} -> 4 ; 1 -> 4 directly is shorter but 1 is not a source
        let d = Digraph::new(5, [(0, 3), (0, 2), (3, 4), (2, 4), (1, 4)]);
        assert_eq!(d.reach(&s(&[0]), &s(&[4])), Some(vec![0, 2, 4]));
        assert_eq!(d.reach(&s(&[0, 1]), &s(&[4])), Some(vec![1, 4]));
    }

    #[test]
    fn reach_skips_successors_that_cannot_reach_the_target() {
        // 1 is a dead end; the walk must go through 2
        let g = Digraph::new(4, [(0, 1), (0, 2), (2, 3)]);
        assert_eq!(g.reach(&s(&[0]), &s(&[3])), Some(vec![0, 2, 3]));
    }

    #[test]
    fn closed_walk_examples() {
        let d = Digraph::new(2, [(0, 1), (1, 0)]);
        assert_eq!(d.closed_walk(), Some(vec![0, 1, 0]));
        assert!(!d.meets_diagonal());
        let d = Digraph::new(2, [(0, 1)]);
        assert_eq!(d.closed_walk(), None);
        let d = Digraph::new(2, [(1, 1)]);
        assert_eq!(d.closed_walk(), Some(vec![1, 1]));
        assert!(d.meets_diagonal());
    }

    #[test]
    fn composition() {
        let p = Digraph::new(3, [(0, 1), (1, 2)]);
        assert_eq!(p.compose(&p), Digraph::new(3, [(0, 2)]));
    }
}
