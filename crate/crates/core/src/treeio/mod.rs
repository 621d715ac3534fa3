//! Rooted phylogenetic trees, their text formats and their vectorization
//! into cophenetic distance vectors.

mod newick;
mod nexus;

use std::collections::{BTreeSet, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tropical::TorusPoint;

pub use newick::{parse_newick, parse_newick_many, write_newick};
pub use nexus::parse_nexus_trees;

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub label: Option<String>,
    /// Length of the edge above this node. `None` only for the root.
    pub length: Option<f64>,
    pub children: Vec<usize>,
    pub parent: Option<usize>,
}

impl Node {
    pub fn is_leaf(&self) -> bool {
        self.children.is_empty()
    }
}

/// A rooted tree with branch lengths. Leaves carry unique labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PhyloTree {
    nodes: Vec<Node>,
    root: usize,
}

impl PhyloTree {
    /// Validates and wraps an arena of nodes. Parent links are rebuilt from
    /// the child lists.
    pub fn new(mut nodes: Vec<Node>, root: usize) -> Result<Self> {
        if root >= nodes.len() {
            return Err(Error::invalid("root index out of range"));
        }
        for n in nodes.iter_mut() {
            n.parent = None;
        }
        for id in 0..nodes.len() {
            for c in nodes[id].children.clone() {
                if c >= nodes.len() || nodes[c].parent.is_some() || c == root {
                    return Err(Error::invalid(format!("node {c} has an invalid parent link")));
                }
                nodes[c].parent = Some(id);
            }
        }
        let tree = PhyloTree { nodes, root };
        let reachable = tree.preorder().len();
        if reachable != tree.nodes.len() {
            return Err(Error::invalid("tree contains nodes unreachable from the root"));
        }
        let mut seen = HashSet::new();
        for (id, n) in tree.nodes.iter().enumerate() {
            if let Some(len) = n.length {
                if !len.is_finite() || len < 0.0 {
                    return Err(Error::invalid(format!("branch length {len} must be finite and >= 0")));
                }
            } else if id != root {
                return Err(Error::invalid(format!("node {id} is missing a branch length")));
            }
            if n.is_leaf() {
                let label = n.label.as_deref().ok_or_else(|| Error::invalid("leaf without a label"))?;
                if !seen.insert(label.to_string()) {
                    return Err(Error::invalid(format!("duplicate leaf label '{label}'")));
                }
            }
        }
        Ok(tree)
    }

    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn root(&self) -> usize {
        self.root
    }

    /// Node ids in preorder (parents before children).
    pub fn preorder(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![self.root];
        while let Some(id) = stack.pop() {
            out.push(id);
            stack.extend(self.nodes[id].children.iter().rev());
        }
        out
    }

    pub fn leaves(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nodes.len()).filter(|&i| self.nodes[i].is_leaf())
    }

    pub fn num_leaves(&self) -> usize {
        self.leaves().count()
    }

    /// Leaf labels in sorted order.
    pub fn leaf_labels(&self) -> Vec<String> {
        let mut labels: Vec<String> =
            self.leaves().map(|i| self.nodes[i].label.clone().unwrap_or_default()).collect();
        labels.sort();
        labels
    }

    /// Distance from the root to every node (root edge excluded).
    pub fn node_depths(&self) -> Vec<f64> {
        let mut depth = vec![0.0; self.nodes.len()];
        for id in self.preorder() {
            if let Some(p) = self.nodes[id].parent {
                depth[id] = depth[p] + self.nodes[id].length.unwrap_or(0.0);
            }
        }
        depth
    }

    /// Largest root-to-leaf path length.
    pub fn height(&self) -> f64 {
        let d = self.node_depths();
        self.leaves().map(|i| d[i]).fold(0.0, f64::max)
    }

    /// Applies `f` to every leaf label. Fails if the result is not unique.
    pub fn relabel_leaves<F>(&mut self, mut f: F) -> Result<()>
    where
        F: FnMut(&str) -> Result<String>,
    {
        let mut seen = HashSet::new();
        for n in self.nodes.iter_mut().filter(|n| n.children.is_empty()) {
            let new = f(n.label.as_deref().unwrap_or(""))?;
            if !seen.insert(new.clone()) {
                return Err(Error::invalid(format!("duplicate leaf label '{new}'")));
            }
            n.label = Some(new);
        }
        Ok(())
    }

    /// Multiplies every branch length by `factor`.
    pub fn scale_lengths(&mut self, factor: f64) {
        for n in &mut self.nodes {
            if let Some(l) = n.length.as_mut() {
                *l *= factor;
            }
        }
    }

    /// Leaf sets (as sorted leaf indices into `leaf_labels()`) below each node.
    fn leaf_sets(&self, order: &[String]) -> Vec<Vec<usize>> {
        let mut sets: Vec<Vec<usize>> = vec![Vec::new(); self.nodes.len()];
        for id in self.preorder().into_iter().rev() {
            let n = &self.nodes[id];
            if n.is_leaf() {
                let label = n.label.as_deref().unwrap_or("");
                let idx = order.binary_search_by(|l| l.as_str().cmp(label)).expect("leaf label in order");
                sets[id] = vec![idx];
            } else {
                let mut s: Vec<usize> = n.children.iter().flat_map(|&c| sets[c].iter().copied()).collect();
                s.sort_unstable();
                sets[id] = s;
            }
        }
        sets
    }
}

impl fmt::Display for PhyloTree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_newick(self))
    }
}

/// Zero-based index of leaf pair `(i, j)`, `i < j < m`, in the vectorized
/// upper triangle `(0,1), (0,2), ..., (0,m-1), (1,2), ..., (m-2,m-1)`.
pub fn pair_index(i: usize, j: usize, m: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    debug_assert!(i != j && j < m);
    i * m - i * (i + 1) / 2 + (j - i - 1)
}

/// Number of leaves `m` with `m (m - 1) / 2 == e`, if any.
pub fn leaves_for_dim(e: usize) -> Option<usize> {
    let m = ((1.0 + (1.0 + 8.0 * e as f64).sqrt()) / 2.0).round() as usize;
    (m * (m - 1) / 2 == e).then_some(m)
}

/// Vectorized strictly-upper-triangular leaf distance matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceVector {
    pub values: Vec<f64>,
    pub leaf_order: Vec<String>,
}

impl DistanceVector {
    pub fn num_leaves(&self) -> usize {
        self.leaf_order.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else {
            self.values[pair_index(i, j, self.num_leaves())]
        }
    }

    pub fn to_torus(&self) -> Result<TorusPoint> {
        TorusPoint::new(&self.values)
    }

    /// Column names `A|B` in vector order.
    pub fn pair_names(leaf_order: &[String]) -> Vec<String> {
        let m = leaf_order.len();
        let mut out = Vec::with_capacity(m * (m.saturating_sub(1)) / 2);
        for i in 0..m {
            for j in i + 1..m {
                out.push(format!("{}|{}", leaf_order[i], leaf_order[j]));
            }
        }
        out
    }
}

/// Path-length distances between all leaf pairs, leaves in sorted label order.
pub fn cophenetic_vector(tree: &PhyloTree) -> Result<DistanceVector> {
    let order = tree.leaf_labels();
    let m = order.len();
    if m < 3 {
        return Err(Error::invalid(format!("cophenetic vectors need at least 3 leaves, got {m}")));
    }
    let depth = tree.node_depths();
    let sets = tree.leaf_sets(&order);
    let mut leaf_depth = vec![0.0; m];
    for id in tree.leaves() {
        leaf_depth[sets[id][0]] = depth[id];
    }
    let mut values = vec![0.0; m * (m - 1) / 2];
    for (id, n) in tree.nodes.iter().enumerate() {
        for (a, &ca) in n.children.iter().enumerate() {
            for &cb in &n.children[a + 1..] {
                for &i in &sets[ca] {
                    for &j in &sets[cb] {
                        values[pair_index(i, j, m)] = leaf_depth[i] + leaf_depth[j] - 2.0 * depth[id];
                    }
                }
            }
        }
    }
    Ok(DistanceVector { values, leaf_order: order })
}

/// True when, for every leaf triple, the two largest pairwise distances
/// differ by at most `tol`.
pub fn is_ultrametric(d: &DistanceVector, tol: f64) -> bool {
    let m = d.num_leaves();
    for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let mut t = [d.get(i, j), d.get(j, k), d.get(i, k)];
                t.sort_by(f64::total_cmp);
                if t[2] - t[1] > tol {
                    return false;
                }
            }
        }
    }
    true
}

/// True when all root-to-leaf path lengths agree within `tol`.
pub fn is_equidistant(tree: &PhyloTree, tol: f64) -> bool {
    let d = tree.node_depths();
    let (lo, hi) = tree.leaves().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), i| (lo.min(d[i]), hi.max(d[i])));
    hi - lo <= tol
}

/// Tolerance for trees read from text: `1e-6` times the tree height.
pub fn default_tolerance(tree: &PhyloTree) -> f64 {
    1e-6 * tree.height().max(f64::MIN_POSITIVE)
}

/// A set of leaf labels, stored sorted.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Clade(Vec<String>);

impl Clade {
    pub fn new<I: IntoIterator<Item = S>, S: Into<String>>(labels: I) -> Self {
        let mut v: Vec<String> = labels.into_iter().map(Into::into).collect();
        v.sort();
        v.dedup();
        Clade(v)
    }

    pub fn labels(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for Clade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{{}}}", self.0.join(","))
    }
}

/// Every clade with at least two leaves and fewer than all leaves.
pub fn clades(tree: &PhyloTree) -> BTreeSet<Clade> {
    let order = tree.leaf_labels();
    let m = order.len();
    tree.leaf_sets(&order)
        .into_iter()
        .filter(|s| s.len() >= 2 && s.len() < m)
        .map(|s| Clade(s.into_iter().map(|i| order[i].clone()).collect()))
        .collect()
}

/// Size of the symmetric difference of the two clade sets.
pub fn rf_distance(t1: &PhyloTree, t2: &PhyloTree) -> Result<usize> {
    if t1.leaf_labels() != t2.leaf_labels() {
        return Err(Error::LeafSetMismatch);
    }
    let a = clades(t1);
    let b = clades(t2);
    Ok(a.symmetric_difference(&b).count())
}
