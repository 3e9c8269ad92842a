//! The directed graph of functional orientations and the elimination
//! ordering derived from it.
//!
//! Every stored constraint contributes an edge `i -> j` for each orientation
//! functional on `j` (a bifunctional constraint contributes both). The
//! ordering condenses strongly connected components, topologically sorts the
//! condensation, and expands components back to their members, so that a
//! variable only ever substitutes for variables it can reach.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap};

use crate::csp::{Csp, VariableId};

#[derive(Debug, Clone)]
pub struct FunctionalGraph {
    adjacency: Vec<Vec<usize>>,
    edges: BTreeSet<(usize, usize)>,
}

impl FunctionalGraph {
    pub fn num_vertices(&self) -> usize {
        self.adjacency.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, i: VariableId, j: VariableId) -> bool {
        self.edges.contains(&(i.0, j.0))
    }

    pub fn edges(&self) -> impl Iterator<Item = (VariableId, VariableId)> + '_ {
        self.edges.iter().map(|&(i, j)| (VariableId(i), VariableId(j)))
    }

    pub fn out_neighbors(&self, i: VariableId) -> &[usize] {
        &self.adjacency[i.0]
    }

    /// Strongly connected components, members ascending within each.
    pub fn strongly_connected_components(&self) -> Vec<Vec<usize>> {
        let mut components = tarjan(&self.adjacency);
        for c in &mut components {
            c.sort_unstable();
        }
        components
    }

    /// `reach[i]` holds every vertex reachable from `i` through one or more
    /// edges (so a vertex reaches itself only via a cycle).
    pub fn reachability(&self) -> Reachability {
        let n = self.num_vertices();
        let words = n.div_ceil(64).max(1);
        let mut bits = vec![0u64; n * words];
        for start in 0..n {
            let row = start * words;
            let mut frontier: Vec<usize> = self.adjacency[start].clone();
            while let Some(v) = frontier.pop() {
                if bits[row + v / 64] >> (v % 64) & 1 == 1 {
                    continue;
                }
                bits[row + v / 64] |= 1 << (v % 64);
                frontier.extend_from_slice(&self.adjacency[v]);
            }
        }
        Reachability { words, bits }
    }
}

/// Packed reachable-set rows of a [`FunctionalGraph`].
#[derive(Debug, Clone)]
pub struct Reachability {
    words: usize,
    bits: Vec<u64>,
}

impl Reachability {
    pub fn reaches(&self, from: VariableId, to: VariableId) -> bool {
        self.bits[from.0 * self.words + to.0 / 64] >> (to.0 % 64) & 1 == 1
    }
}

/// Collects the functional orientations of every stored constraint.
pub fn build_functional_graph(csp: &Csp) -> FunctionalGraph {
    let n = csp.num_variables();
    let mut adjacency = vec![Vec::new(); n];
    let mut edges = BTreeSet::new();
    for (i, j, _, fwd) in csp.constraints() {
        if fwd.is_functional_on_right() && edges.insert((i.0, j.0)) {
            adjacency[i.0].push(j.0);
        }
        if fwd.transpose().is_functional_on_right() && edges.insert((j.0, i.0)) {
            adjacency[j.0].push(i.0);
        }
    }
    for row in &mut adjacency {
        row.sort_unstable();
    }
    FunctionalGraph { adjacency, edges }
}

/// A permutation of the variables in which a vertex precedes another only if
/// it has a path to it or the two are incomparable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EliminationOrdering {
    sequence: Vec<VariableId>,
}

impl EliminationOrdering {
    pub fn sequence(&self) -> &[VariableId] {
        &self.sequence
    }

    pub fn iter(&self) -> impl Iterator<Item = VariableId> + '_ {
        self.sequence.iter().copied()
    }
}

/// SCC condensation followed by a topological sort. Ties in the topological
/// order are broken by the smallest member id, and components expand to
/// their members in ascending order, so the result is deterministic.
pub fn functional_elimination_ordering(graph: &FunctionalGraph) -> EliminationOrdering {
    let n = graph.num_vertices();
    let components = graph.strongly_connected_components();
    let mut component_of = vec![0; n];
    for (ci, members) in components.iter().enumerate() {
        for &v in members {
            component_of[v] = ci;
        }
    }

    let mut cond_edges = BTreeSet::new();
    for &(i, j) in &graph.edges {
        let (a, b) = (component_of[i], component_of[j]);
        if a != b {
            cond_edges.insert((a, b));
        }
    }
    let mut indegree = vec![0usize; components.len()];
    let mut successors = vec![Vec::new(); components.len()];
    for &(a, b) in &cond_edges {
        indegree[b] += 1;
        successors[a].push(b);
    }

    let mut ready: BinaryHeap<Reverse<(usize, usize)>> = (0..components.len())
        .filter(|&c| indegree[c] == 0)
        .map(|c| Reverse((components[c][0], c)))
        .collect();
    let mut sequence = Vec::with_capacity(n);
    while let Some(Reverse((_, c))) = ready.pop() {
        sequence.extend(components[c].iter().map(|&v| VariableId(v)));
        for &s in &successors[c] {
            indegree[s] -= 1;
            if indegree[s] == 0 {
                ready.push(Reverse((components[s][0], s)));
            }
        }
    }
    debug_assert_eq!(sequence.len(), n);
    EliminationOrdering { sequence }
}

fn tarjan(adjacency: &[Vec<usize>]) -> Vec<Vec<usize>> {
    const UNVISITED: usize = usize::MAX;
    let n = adjacency.len();
    let mut index = vec![UNVISITED; n];
    let mut lowlink = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut next_index = 0;
    let mut components = Vec::new();

    // Iterative DFS: (vertex, next child position) frames.
    let mut frames: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        frames.push((root, 0));
        index[root] = next_index;
        lowlink[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut child)) = frames.last_mut() {
            if *child < adjacency[v].len() {
                let w = adjacency[v][*child];
                *child += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    lowlink[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    lowlink[v] = lowlink[v].min(index[w]);
                }
            } else {
                frames.pop();
                if let Some(&(parent, _)) = frames.last() {
                    lowlink[parent] = lowlink[parent].min(lowlink[v]);
                }
                if lowlink[v] == index[v] {
                    let mut component = Vec::new();
                    loop {
                        let w = stack.pop().expect("tarjan stack underflow");
                        on_stack[w] = false;
                        component.push(w);
                        if w == v {
                            break;
                        }
                    }
                    components.push(component);
                }
            }
        }
    }
    components
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::BinaryRelation;

    fn graph(n: usize, edges: &[(usize, usize)]) -> FunctionalGraph {
        let mut adjacency = vec![Vec::new(); n];
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if set.insert((i, j)) {
                adjacency[i].push(j);
            }
        }
        for row in &mut adjacency {
            row.sort_unstable();
        }
        FunctionalGraph { adjacency, edges: set }
    }

    #[test]
    fn graph_collects_functional_orientations_only() {
        let mut csp = Csp::new(3, 3);
        // 0 -> 1 functional one way only; 1 -- 2 not functional either way.
        csp.add_constraint(
            VariableId(0),
            VariableId(1),
            BinaryRelation::from_pairs(3, 3, &[(0, 0), (1, 0), (2, 1)]).unwrap(),
        )
        .unwrap();
        csp.add_constraint(
            VariableId(1),
            VariableId(2),
            BinaryRelation::from_pairs(3, 3, &[(0, 0), (0, 1), (1, 0), (1, 1)]).unwrap(),
        )
        .unwrap();
        let g = build_functional_graph(&csp);
        assert!(g.has_edge(VariableId(0), VariableId(1)));
        assert!(!g.has_edge(VariableId(1), VariableId(0)));
        assert!(!g.has_edge(VariableId(1), VariableId(2)));
        assert_eq!(g.num_edges(), 1);
    }

    #[test]
    fn bifunctional_constraints_contribute_both_directions() {
        let mut csp = Csp::new(2, 3);
        csp.add_constraint(VariableId(0), VariableId(1), BinaryRelation::identity(3)).unwrap();
        let g = build_functional_graph(&csp);
        assert!(g.has_edge(VariableId(0), VariableId(1)));
        assert!(g.has_edge(VariableId(1), VariableId(0)));
    }

    #[test]
    fn two_component_chain_orders_sources_first() {
        // Cycle {0,1,2} feeding cycle {3,4,5} through 1 -> 4.
        let g = graph(
            6,
            &[(0, 1), (1, 2), (2, 0), (3, 4), (4, 5), (5, 3), (1, 4)],
        );
        let order = functional_elimination_ordering(&g);
        let position: Vec<usize> = {
            let mut pos = vec![0; 6];
            for (at, v) in order.iter().enumerate() {
                pos[v.0] = at;
            }
            pos
        };
        for upstream in 0..3 {
            for downstream in 3..6 {
                assert!(position[upstream] < position[downstream]);
            }
        }
        // Deterministic expansion: members ascend inside each component.
        assert_eq!(
            order.sequence().iter().map(|v| v.0).collect::<Vec<_>>(),
            vec![0, 1, 2, 3, 4, 5]
        );
    }

    #[test]
    fn edgeless_graph_yields_ascending_permutation() {
        let g = graph(4, &[]);
        let order = functional_elimination_ordering(&g);
        assert_eq!(order.sequence().iter().map(|v| v.0).collect::<Vec<_>>(), vec![0, 1, 2, 3]);
    }

    /// Ordering validity per the reachability rule: `i` may precede `j`
    /// unless `j` reaches `i` while `i` does not reach `j`.
    fn ordering_respects_reachability(g: &FunctionalGraph, order: &EliminationOrdering) -> bool {
        let reach = g.reachability();
        let seq = order.sequence();
        for a in 0..seq.len() {
            for b in a + 1..seq.len() {
                let (i, j) = (seq[a], seq[b]);
                if reach.reaches(j, i) && !reach.reaches(i, j) {
                    return false;
                }
            }
        }
        true
    }

    #[test]
    fn random_digraph_orderings_pass_the_reachability_oracle() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
        for _ in 0..300 {
            let n = rng.gen_range(1..=10);
            let mut edges = Vec::new();
            for i in 0..n {
                for j in 0..n {
                    if i != j && rng.gen_bool(0.2) {
                        edges.push((i, j));
                    }
                }
            }
            let g = graph(n, &edges);
            let order = functional_elimination_ordering(&g);
            assert_eq!(order.sequence().len(), n);
            let mut seen: Vec<usize> = order.sequence().iter().map(|v| v.0).collect();
            seen.sort_unstable();
            assert_eq!(seen, (0..n).collect::<Vec<_>>());
            assert!(ordering_respects_reachability(&g, &order));
        }
    }

    #[test]
    fn scc_reverse_chain() {
        let g = graph(5, &[(4, 3), (3, 2), (2, 1), (1, 0)]);
        let order = functional_elimination_ordering(&g);
        assert_eq!(order.sequence().iter().map(|v| v.0).collect::<Vec<_>>(), vec![4, 3, 2, 1, 0]);
        assert_eq!(g.strongly_connected_components().len(), 5);
    }

    #[test]
    fn reachability_excludes_self_without_cycle() {
        let g = graph(3, &[(0, 1), (1, 2)]);
        let reach = g.reachability();
        assert!(reach.reaches(VariableId(0), VariableId(2)));
        assert!(!reach.reaches(VariableId(0), VariableId(0)));
        let cyclic = graph(2, &[(0, 1), (1, 0)]);
        assert!(cyclic.reachability().reaches(VariableId(0), VariableId(0)));
    }
}
