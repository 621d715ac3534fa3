//! Convergence diagnostics for two MCMC tree chains: ASDSF and the
//! held-out AUC of a two-species classifier separating the chains.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::evaluation::auc;
use crate::fermat_weber::FwConfig;
use crate::regression::{fit_two_species, Model};
use crate::rng::stream;
use crate::treeio::{clades, parse_newick_many, parse_nexus_trees, Clade, PhyloTree};

/// Sampled trees with strictly increasing iteration numbers over one leaf set.
#[derive(Debug, Clone)]
pub struct TreeChain {
    entries: Vec<(u64, PhyloTree)>,
}

impl TreeChain {
    pub fn new(entries: Vec<(u64, PhyloTree)>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Empty("chain"));
        }
        if entries.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::invalid("chain iterations must be strictly increasing"));
        }
        let labels = entries[0].1.leaf_labels();
        if entries.iter().any(|(_, t)| t.leaf_labels() != labels) {
            return Err(Error::LeafSetMismatch);
        }
        Ok(TreeChain { entries })
    }

    /// Numbers the trees `1, 2, ...`.
    pub fn from_trees(trees: Vec<PhyloTree>) -> Result<Self> {
        TreeChain::new(trees.into_iter().enumerate().map(|(i, t)| (i as u64 + 1, t)).collect())
    }

    /// Nexus (`#NEXUS` header) or one Newick tree per statement. Nexus tree
    /// names ending in digits (`gen.1000`, `STATE_1000`) give the iteration;
    /// otherwise trees are numbered by position.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().get(..6).is_some_and(|h| h.eq_ignore_ascii_case("#nexus")) {
            let named = parse_nexus_trees(text)?;
            let iters: Option<Vec<u64>> = named.iter().map(|(name, _)| trailing_number(name)).collect();
            let trees = named.into_iter().map(|(_, t)| t);
            match iters {
                Some(it) if it.windows(2).all(|w| w[0] < w[1]) => TreeChain::new(it.into_iter().zip(trees).collect()),
                _ => TreeChain::from_trees(trees.collect()),
            }
        } else {
            TreeChain::from_trees(parse_newick_many(text)?)
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        TreeChain::parse(&std::fs::read_to_string(path)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(u64, PhyloTree)] {
        &self.entries
    }

    pub fn trees(&self) -> impl Iterator<Item = &PhyloTree> {
        self.entries.iter().map(|(_, t)| t)
    }

    pub fn leaf_labels(&self) -> Vec<String> {
        self.entries[0].1.leaf_labels()
    }

    pub fn last_iteration(&self) -> u64 {
        self.entries[self.entries.len() - 1].0
    }

    /// Entries with iteration `<= iteration`, or `None` if there are none.
    pub fn prefix(&self, iteration: u64) -> Option<TreeChain> {
        let k = self.entries.partition_point(|(i, _)| *i <= iteration);
        (k > 0).then(|| TreeChain { entries: self.entries[..k].to_vec() })
    }
}

fn trailing_number(name: &str) -> Option<u64> {
    let digits = name.len() - name.trim_end_matches(|c: char| c.is_ascii_digit()).len();
    name[name.len() - digits..].parse().ok()
}

/// Keeps the last `ceil(frac * len)` entries.
pub fn truncate_last_fraction(chain: &TreeChain, frac: f64) -> Result<TreeChain> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(Error::invalid(format!("fraction must be in (0, 1], got {frac}")));
    }
    let n = chain.len();
    let keep = ((frac * n as f64).ceil() as usize).clamp(1, n);
    Ok(TreeChain { entries: chain.entries[n - keep..].to_vec() })
}

/// Counts of nontrivial clades over a growing set of trees.
#[derive(Debug, Clone, Default)]
pub struct SplitCounter {
    counts: BTreeMap<Clade, usize>,
    trees: usize,
}

impl SplitCounter {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, tree: &PhyloTree) {
        for c in clades(tree) {
            *self.counts.entry(c).or_insert(0) += 1;
        }
        self.trees += 1;
    }

    pub fn trees(&self) -> usize {
        self.trees
    }

    pub fn frequencies(&self) -> BTreeMap<Clade, f64> {
        let n = self.trees.max(1) as f64;
        self.counts.iter().map(|(c, &k)| (c.clone(), k as f64 / n)).collect()
    }
}

/// Fraction of trees containing each clade seen in the chain.
pub fn split_frequencies(chain: &TreeChain) -> BTreeMap<Clade, f64> {
    let mut counter = SplitCounter::new();
    chain.trees().for_each(|t| counter.add(t));
    counter.frequencies()
}

/// Standard deviation convention for two split frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SdConvention {
    /// Divisor `n - 1`: `|f_a - f_b| / sqrt(2)`.
    #[default]
    Sample,
    /// Divisor `n`: `|f_a - f_b| / 2`.
    Population,
}

impl SdConvention {
    fn sd(self, a: f64, b: f64) -> f64 {
        match self {
            SdConvention::Sample => (a - b).abs() / std::f64::consts::SQRT_2,
            SdConvention::Population => (a - b).abs() / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Asdsf {
    pub value: f64,
    pub splits: usize,
    /// Set when no split reached `min_freq`; `value` is then 0.
    pub no_qualifying_splits: bool,
}

/// Mean standard deviation of split frequencies over splits with frequency
/// at least `min_freq` in one of the chains.
pub fn asdsf(a: &TreeChain, b: &TreeChain, min_freq: f64, sd: SdConvention) -> Result<Asdsf> {
    if a.leaf_labels() != b.leaf_labels() {
        return Err(Error::LeafSetMismatch);
    }
    Ok(asdsf_from_frequencies(&split_frequencies(a), &split_frequencies(b), min_freq, sd))
}

pub fn asdsf_from_frequencies(
    fa: &BTreeMap<Clade, f64>,
    fb: &BTreeMap<Clade, f64>,
    min_freq: f64,
    sd: SdConvention,
) -> Asdsf {
    let mut total = 0.0;
    let mut splits = 0usize;
    let keys: std::collections::BTreeSet<&Clade> = fa.keys().chain(fb.keys()).collect();
    for c in keys {
        let x = fa.get(c).copied().unwrap_or(0.0);
        let y = fb.get(c).copied().unwrap_or(0.0);
        if x >= min_freq || y >= min_freq {
            total += sd.sd(x, y);
            splits += 1;
        }
    }
    if splits == 0 {
        return Asdsf { value: 0.0, splits, no_qualifying_splits: true };
    }
    Asdsf { value: total / splits as f64, splits, no_qualifying_splits: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucConfig {
    pub frac: f64,
    pub split: f64,
}

impl Default for AucConfig {
    fn default() -> Self {
        AucConfig { frac: 0.3, split: 0.5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AucMetric {
    /// `max(auc, 1 - auc)`.
    pub auc: f64,
    /// Held-out AUC with chain `b` as class 1.
    pub raw_auc: f64,
    /// Set when both chains have the same center; `auc` is then 0.5.
    pub degenerate: bool,
}

/// Truncates both chains, labels their trees by chain, fits the two-species
/// model on a stratified `split` share and scores the rest.
pub fn auc_convergence_metric(a: &TreeChain, b: &TreeChain, cfg: &AucConfig, seed: u64) -> Result<AucMetric> {
    if !(cfg.split > 0.0 && cfg.split < 1.0) {
        return Err(Error::invalid(format!("split must be in (0, 1), got {}", cfg.split)));
    }
    if a.leaf_labels() != b.leaf_labels() {
        return Err(Error::LeafSetMismatch);
    }
    let ta = truncate_last_fraction(a, cfg.frac)?;
    let tb = truncate_last_fraction(b, cfg.frac)?;
    if ta.len() < 4 || tb.len() < 4 {
        return Err(Error::invalid(format!(
            "need at least 4 trees per chain after truncation, got {} and {}",
            ta.len(),
            tb.len()
        )));
    }
    let ca: Vec<PhyloTree> = ta.trees().cloned().collect();
    let cb: Vec<PhyloTree> = tb.trees().cloned().collect();
    let ds = Dataset::from_trees(&ca, &cb)?;
    let (train, test) = ds.stratified_split(cfg.split, &mut stream(seed, "chain-split", 0))?;
    let model = match fit_two_species(&train, &FwConfig::default()) {
        Ok(m) => Model::from(m),
        Err(Error::Degenerate(_)) => return Ok(AucMetric { auc: 0.5, raw_auc: 0.5, degenerate: true }),
        Err(e) => return Err(e),
    };
    let raw = auc(&model.scores(&test)?, test.labels())?;
    Ok(AucMetric { auc: raw.max(1.0 - raw), raw_auc: raw, degenerate: false })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnoseConfig {
    pub diagnfreq: u64,
    pub frac: f64,
    pub split: f64,
    pub min_freq: f64,
    pub sd: SdConvention,
    pub seed: u64,
}

impl Default for DiagnoseConfig {
    fn default() -> Self {
        DiagnoseConfig { diagnfreq: 1000, frac: 0.3, split: 0.5, min_freq: 0.1, sd: SdConvention::default(), seed: 0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticRow {
    pub iteration: u64,
    pub asdsf: f64,
    /// `None` when a truncated prefix has fewer than 4 trees.
    pub auc: Option<f64>,
}

/// Checkpoints at every multiple of `diagnfreq` up to the last iteration
/// both chains reach (a single checkpoint there if no multiple fits). Both
/// metrics are computed on the last `frac` of each prefix.
pub fn diagnose(a: &TreeChain, b: &TreeChain, cfg: &DiagnoseConfig) -> Result<Vec<DiagnosticRow>> {
    if cfg.diagnfreq == 0 {
        return Err(Error::invalid("diagnfreq must be >= 1"));
    }
    if a.leaf_labels() != b.leaf_labels() {
        return Err(Error::LeafSetMismatch);
    }
    let end = a.last_iteration().min(b.last_iteration());
    let mut checkpoints: Vec<u64> = (1..=end / cfg.diagnfreq).map(|k| k * cfg.diagnfreq).collect();
    if checkpoints.is_empty() {
        checkpoints.push(end);
    }
    let auc_cfg = AucConfig { frac: cfg.frac, split: cfg.split };
    let mut rows = Vec::with_capacity(checkpoints.len());
    for it in checkpoints {
        let (Some(pa), Some(pb)) = (a.prefix(it), b.prefix(it)) else {
            continue;
        };
        let ta = truncate_last_fraction(&pa, cfg.frac)?;
        let tb = truncate_last_fraction(&pb, cfg.frac)?;
        let asd = asdsf(&ta, &tb, cfg.min_freq, cfg.sd)?.value;
        let auc = if ta.len() >= 4 && tb.len() >= 4 {
            Some(auc_convergence_metric(&pa, &pb, &auc_cfg, cfg.seed)?.auc)
        } else {
            None
        };
        rows.push(DiagnosticRow { iteration: it, asdsf: asd, auc });
    }
    Ok(rows)
}
