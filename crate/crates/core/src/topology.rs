//! Relation graph over branches induced by the structure set.
//!
//! Two branches are directly related when some triple declares them
//! coincident on an interval; the full relation is the symmetric transitive
//! closure. Everything here is deterministic: neighbors are explored in
//! ascending branch index and witness triples are resolved in declaration
//! order.

use std::collections::BTreeSet;
use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::model::StructureSet;

/// Undirected view of the declared branch pairs with duplicates collapsed.
#[derive(Clone, Debug)]
pub struct AdjacencyView {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
}

impl AdjacencyView {
    pub fn from_structure(structure: &StructureSet) -> Result<Self> {
        let m = structure.branch_count();
        let mut edges = BTreeSet::new();
        for (i, t) in structure.triples().iter().enumerate() {
            if t.d == t.k {
                return Err(Error::InvalidArgument(format!(
                    "triple {i} relates branch {} to itself",
                    t.d
                )));
            }
            if t.d == 0 || t.d > m || t.k == 0 || t.k > m {
                return Err(Error::InvalidArgument(format!(
                    "triple {i} references a branch outside 1..={m}"
                )));
            }
            edges.insert((t.d.min(t.k), t.d.max(t.k)));
        }
        Ok(AdjacencyView { m, edges })
    }

    pub fn branch_count(&self) -> usize {
        self.m
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn are_adjacent(&self, d: usize, k: usize) -> bool {
        self.edges.contains(&(d.min(k), d.max(k)))
    }

    /// Neighbors of `d` in ascending order.
    pub fn neighbors(&self, d: usize) -> Vec<usize> {
        let mut out: Vec<usize> = self
            .edges
            .iter()
            .filter_map(|&(a, b)| {
                if a == d {
                    Some(b)
                } else if b == d {
                    Some(a)
                } else {
                    None
                }
            })
            .collect();
        out.sort_unstable();
        out
    }
}

fn check_pair(structure: &StructureSet, d: usize, k: usize) -> Result<()> {
    let m = structure.branch_count();
    if d == 0 || d > m || k == 0 || k > m {
        return Err(Error::InvalidArgument(format!(
            "branch pair ({d}, {k}) outside 1..={m}"
        )));
    }
    if d == k {
        return Err(Error::InvalidArgument(format!(
            "relation depth is undefined for a branch and itself ({d})"
        )));
    }
    Ok(())
}

/// Length of the shortest chain of declared pairs joining `d` and `k`,
/// or `None` when no chain exists. Depth 1 means a direct declaration.
pub fn relation_depth(structure: &StructureSet, d: usize, k: usize) -> Result<Option<usize>> {
    check_pair(structure, d, k)?;
    let adj = AdjacencyView::from_structure(structure)?;
    let mut dist = vec![usize::MAX; adj.branch_count() + 1];
    dist[d] = 0;
    let mut queue = VecDeque::from([d]);
    while let Some(u) = queue.pop_front() {
        if u == k {
            return Ok(Some(dist[u]));
        }
        for v in adj.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }
    Ok(None)
}

/// Whether `d` and `k` lie in the same component of the relation graph.
pub fn related(structure: &StructureSet, d: usize, k: usize) -> Result<bool> {
    Ok(relation_depth(structure, d, k)?.is_some())
}

/// A structure set is connected when every branch can be reached from
/// branch 1 through declared pairs. A single branch is trivially connected.
pub fn is_connected(structure: &StructureSet) -> Result<bool> {
    let adj = AdjacencyView::from_structure(structure)?;
    let m = adj.branch_count();
    if m <= 1 {
        return Ok(true);
    }
    let mut seen = vec![false; m + 1];
    seen[1] = true;
    let mut queue = VecDeque::from([1usize]);
    let mut count = 1;
    while let Some(u) = queue.pop_front() {
        for v in adj.neighbors(u) {
            if !seen[v] {
                seen[v] = true;
                count += 1;
                queue.push_back(v);
            }
        }
    }
    Ok(count == m)
}

/// One breadth-first step: `target` becomes reachable through the triple at
/// list position `witness`, at the given BFS `depth` from the root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PropagationStep {
    pub target: usize,
    pub witness: usize,
    pub depth: usize,
}

/// Breadth-first traversal of the relation graph from a root branch.
///
/// Covers only the root's component; use [`is_connected`] first when full
/// coverage is required.
#[derive(Clone, Debug)]
pub struct PropagationOrder {
    pub root: usize,
    pub steps: Vec<PropagationStep>,
}

impl PropagationOrder {
    /// Branches in visit order, root first.
    pub fn covered(&self) -> Vec<usize> {
        let mut out = vec![self.root];
        out.extend(self.steps.iter().map(|s| s.target));
        out
    }

    /// BFS depth per covered branch, root at 0.
    pub fn depth_of(&self, branch: usize) -> Option<usize> {
        if branch == self.root {
            return Some(0);
        }
        self.steps
            .iter()
            .find(|s| s.target == branch)
            .map(|s| s.depth)
    }
}

/// Deterministic BFS from `root`: the queue is FIFO, neighbors are taken in
/// ascending branch index, and each step's witness is the first declared
/// triple joining the target to the branch it was discovered from.
pub fn propagation_order(structure: &StructureSet, root: usize) -> Result<PropagationOrder> {
    let m = structure.branch_count();
    if root == 0 || root > m {
        return Err(Error::InvalidArgument(format!(
            "root branch {root} outside 1..={m}"
        )));
    }
    let adj = AdjacencyView::from_structure(structure)?;
    let witness_for = |a: usize, b: usize| {
        structure
            .triples()
            .iter()
            .position(|t| (t.d == a && t.k == b) || (t.d == b && t.k == a))
            .expect("adjacent pair must come from some triple")
    };
    let mut depth = vec![usize::MAX; m + 1];
    depth[root] = 0;
    let mut queue = VecDeque::from([root]);
    let mut steps = Vec::new();
    while let Some(u) = queue.pop_front() {
        for v in adj.neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                steps.push(PropagationStep {
                    target: v,
                    witness: witness_for(u, v),
                    depth: depth[v],
                });
                queue.push_back(v);
            }
        }
    }
    Ok(PropagationOrder { root, steps })
}
