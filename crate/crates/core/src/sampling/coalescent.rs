use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::exp1;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::treeio::{default_tolerance, is_equidistant, rf_distance, Node, PhyloTree};

/// An equidistant species tree with its effective population size `N`.
/// Times are in generations.
#[derive(Debug, Clone, PartialEq)]
pub struct SpeciesTree {
    tree: PhyloTree,
    pop_size: f64,
}

impl SpeciesTree {
    pub fn new(tree: PhyloTree, pop_size: f64) -> Result<Self> {
        if !(pop_size > 0.0 && pop_size.is_finite()) {
            return Err(Error::invalid(format!("population size must be positive, got {pop_size}")));
        }
        if !is_equidistant(&tree, default_tolerance(&tree)) {
            return Err(Error::invalid("species tree must be equidistant"));
        }
        if !(tree.height() > 0.0) {
            return Err(Error::invalid("species tree depth must be positive"));
        }
        Ok(SpeciesTree { tree, pop_size })
    }

    /// Rescales `tree` so that its depth equals `r * pop_size`.
    pub fn with_ratio(mut tree: PhyloTree, r: f64, pop_size: f64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::invalid(format!("R must be positive, got {r}")));
        }
        let h = tree.height();
        if !(h > 0.0) {
            return Err(Error::invalid("species tree depth must be positive"));
        }
        tree.scale_lengths(r * pop_size / h);
        Self::new(tree, pop_size)
    }

    pub fn tree(&self) -> &PhyloTree {
        &self.tree
    }

    pub fn depth(&self) -> f64 {
        self.tree.height()
    }

    pub fn pop_size(&self) -> f64 {
        self.pop_size
    }

    /// `R = depth / N`.
    pub fn ratio(&self) -> f64 {
        self.depth() / self.pop_size
    }
}

fn leaf_names(m: usize) -> Vec<String> {
    let width = m.to_string().len();
    (1..=m).map(|k| format!("t{k:0width$}")).collect()
}

/// Pure-birth tree with `m` leaves labeled `t1..tm` (zero-padded). Starting
/// from the root split, while `k` lineages exist the next event comes after
/// an `Exp(k * birth_rate)` wait and splits a uniformly chosen lineage; the
/// final wait (with `k = m`) extends every leaf to the common present.
pub fn yule_tree<R: Rng + ?Sized>(m: usize, birth_rate: f64, rng: &mut R) -> Result<PhyloTree> {
    if m < 2 {
        return Err(Error::invalid(format!("a Yule tree needs at least 2 leaves, got {m}")));
    }
    if !(birth_rate > 0.0 && birth_rate.is_finite()) {
        return Err(Error::invalid(format!("birth rate must be positive, got {birth_rate}")));
    }
    // start[i]: time at which node i's edge begins; split[i]: time it ends.
    let mut nodes = vec![Node { label: None, length: None, children: vec![1, 2], parent: None }];
    let mut start = vec![0.0, 0.0, 0.0];
    let mut split = vec![0.0];
    for _ in 0..2 {
        nodes.push(Node { label: None, length: None, children: Vec::new(), parent: Some(0) });
    }
    let mut active = vec![1usize, 2];
    let mut t = 0.0;
    loop {
        let k = active.len();
        t += exp1(rng) / (k as f64 * birth_rate);
        if k == m {
            break;
        }
        let slot = rng.random_range(0..k);
        let id = active[slot];
        let (a, b) = (nodes.len(), nodes.len() + 1);
        nodes[id].children = vec![a, b];
        while split.len() <= id {
            split.push(0.0);
        }
        split[id] = t;
        for _ in 0..2 {
            nodes.push(Node { label: None, length: None, children: Vec::new(), parent: Some(id) });
            start.push(t);
        }
        active[slot] = a;
        active.push(b);
    }
    split.resize(nodes.len(), 0.0);
    for &id in &active {
        split[id] = t;
    }
    let mut names = leaf_names(m);
    names.shuffle(rng);
    for (&id, name) in active.iter().zip(names) {
        nodes[id].label = Some(name);
    }
    for id in 1..nodes.len() {
        nodes[id].length = Some(split[id] - start[id]);
    }
    PhyloTree::new(nodes, 0)
}

#[derive(Clone, Copy)]
struct Lineage {
    node: usize,
    time: f64,
}

/// Gene tree under the multispecies coalescent, one lineage per species
/// leaf. Walking back in time, `k` lineages in a branch coalesce after an
/// `Exp(C(k,2) / N)` wait; lineages that reach the top of a branch join the
/// parent population, and the root population has no upper bound.
pub fn msc_gene_tree<R: Rng + ?Sized>(species: &SpeciesTree, rng: &mut R) -> Result<PhyloTree> {
    let st = species.tree();
    let height = st.height();
    let depth = st.node_depths();
    let n = species.pop_size();
    let mut gene: Vec<Node> = Vec::new();
    let mut times: Vec<f64> = Vec::new();
    let mut pools: Vec<Vec<Lineage>> = vec![Vec::new(); st.nodes().len()];
    for id in st.preorder().into_iter().rev() {
        let sn = &st.nodes()[id];
        let mut pool = if sn.is_leaf() {
            gene.push(Node { label: sn.label.clone(), length: None, children: Vec::new(), parent: None });
            times.push(0.0);
            vec![Lineage { node: gene.len() - 1, time: 0.0 }]
        } else {
            sn.children.iter().flat_map(|&c| std::mem::take(&mut pools[c])).collect()
        };
        let bottom = (height - depth[id]).max(0.0);
        let top = match sn.parent {
            Some(p) => (height - depth[p]).max(bottom),
            None => f64::INFINITY,
        };
        let mut t = bottom;
        while pool.len() >= 2 {
            let k = pool.len() as f64;
            t += exp1(rng) * n / (k * (k - 1.0) / 2.0);
            if t > top {
                break;
            }
            let a = pool.swap_remove(rng.random_range(0..pool.len()));
            let b = pool.swap_remove(rng.random_range(0..pool.len()));
            gene.push(Node { label: None, length: None, children: vec![a.node, b.node], parent: None });
            times.push(t);
            pool.push(Lineage { node: gene.len() - 1, time: t });
        }
        pools[id] = pool;
    }
    let root_pool = std::mem::take(&mut pools[st.root()]);
    let root = match root_pool.as_slice() {
        [only] => only.node,
        _ => return Err(Error::Degenerate("coalescent did not reach a single ancestor".into())),
    };
    debug_assert!(root_pool[0].time == times[root]);
    for id in 0..gene.len() {
        for c in gene[id].children.clone() {
            gene[c].length = Some(times[id] - times[c]);
        }
    }
    PhyloTree::new(gene, root)
}

/// Parameters of a two-class coalescent dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoalescentConfig {
    pub leaves: usize,
    pub per_class: usize,
    pub pop_size: f64,
    pub birth_rate: f64,
}

impl Default for CoalescentConfig {
    fn default() -> Self {
        CoalescentConfig { leaves: 10, per_class: 1000, pop_size: 1.0, birth_rate: 1.0 }
    }
}

/// Two Yule species trees with distinct topologies. They depend only on
/// `seed`, so a sweep over `R` rescales the same pair.
pub fn species_pair(cfg: &CoalescentConfig, seed: u64) -> Result<[PhyloTree; 2]> {
    let mut rng = stream(seed, "species", 0);
    let first = yule_tree(cfg.leaves, cfg.birth_rate, &mut rng)?;
    for _ in 0..1000 {
        let second = yule_tree(cfg.leaves, cfg.birth_rate, &mut rng)?;
        if rf_distance(&first, &second)? > 0 {
            return Ok([first, second]);
        }
    }
    Err(Error::Degenerate(format!("could not draw two distinct species trees with {} leaves", cfg.leaves)))
}

/// Gene trees for both classes at ratio `r`, plus their dataset
/// (class 0 rows first).
pub fn simulate_coalescent_dataset(
    cfg: &CoalescentConfig,
    r: f64,
    seed: u64,
) -> Result<([SpeciesTree; 2], [Vec<PhyloTree>; 2], Dataset)> {
    if cfg.leaves < 3 {
        return Err(Error::invalid(format!("need at least 3 leaves, got {}", cfg.leaves)));
    }
    if cfg.per_class == 0 {
        return Err(Error::invalid("need at least one tree per class"));
    }
    let [a, b] = species_pair(cfg, seed)?;
    let species = [SpeciesTree::with_ratio(a, r, cfg.pop_size)?, SpeciesTree::with_ratio(b, r, cfg.pop_size)?];
    let mut genes: [Vec<PhyloTree>; 2] = [Vec::new(), Vec::new()];
    for (class, sp) in species.iter().enumerate() {
        let mut rng = stream(seed, "genes", class as u64);
        genes[class] = (0..cfg.per_class).map(|_| msc_gene_tree(sp, &mut rng)).collect::<Result<_>>()?;
    }
    let ds = Dataset::from_trees(&genes[0], &genes[1])?;
    Ok((species, genes, ds))
}
