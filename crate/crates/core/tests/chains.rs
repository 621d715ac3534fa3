use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;

use troplr::chains::{
    asdsf, asdsf_from_frequencies, auc_convergence_metric, diagnose, split_frequencies, AucConfig, DiagnoseConfig,
    SdConvention, SplitCounter, TreeChain,
};
use troplr::dataset::Dataset;
use troplr::evaluation::auc;
use troplr::fermat_weber::FwConfig;
use troplr::regression::{fit_two_species, Model};
use troplr::rng::stream;
use troplr::sampling::{msc_gene_tree, yule_tree, SpeciesTree};
use troplr::treeio::{parse_newick, Clade, PhyloTree};

fn species() -> SpeciesTree {
    SpeciesTree::new(parse_newick("(((A:1,B:1):1,C:2):1,((D:1.5,E:1.5):1,F:2.5):0.5);").unwrap(), 1.0).unwrap()
}

fn gene_trees(n: usize, seed: u64, name: &str) -> Vec<PhyloTree> {
    let sp = species();
    let mut rng = stream(seed, name, 0);
    (0..n).map(|_| msc_gene_tree(&sp, &mut rng).unwrap()).collect()
}

// Fixed topology with edge lengths jittered around `scale`.
fn jittered<R: Rng>(rng: &mut R, scale: f64) -> PhyloTree {
    let mut l = || scale * rng.random_range(0.8..1.2);
    let text = format!(
        "(((A:{},B:{}):{},C:{}):{},((D:{},E:{}):{},F:{}):{});",
        l(), l(), l(), l(), l(), l(), l(), l(), l(), l()
    );
    parse_newick(&text).unwrap()
}

fn chain(trees: Vec<PhyloTree>) -> TreeChain {
    TreeChain::from_trees(trees).unwrap()
}

fn yule_chain(seed: u64, n: usize) -> Vec<PhyloTree> {
    let mut rng = stream(seed, "chain-yule", 0);
    (0..n).map(|_| yule_tree(6, 1.0, &mut rng).unwrap()).collect()
}

proptest! {
    #[test]
    fn asdsf_is_symmetric_and_order_free(sa in 0u64..500, sb in 0u64..500, n in 1usize..30, min_freq in 0.0..0.5f64) {
        let (a, b) = (yule_chain(sa, n), yule_chain(sb + 1000, n + 3));
        let mut shuffled = a.clone();
        shuffled.shuffle(&mut stream(sa, "chain-shuffle", 0));
        for sd in [SdConvention::Sample, SdConvention::Population] {
            let ab = asdsf(&chain(a.clone()), &chain(b.clone()), min_freq, sd).unwrap();
            prop_assert_eq!(ab, asdsf(&chain(b.clone()), &chain(a.clone()), min_freq, sd).unwrap());
            prop_assert_eq!(ab, asdsf(&chain(shuffled.clone()), &chain(b.clone()), min_freq, sd).unwrap());
            prop_assert!(ab.value >= 0.0);
        }
    }

    #[test]
    fn incremental_frequencies_equal_batch(seed in 0u64..500, n in 1usize..40) {
        let trees = yule_chain(seed, n);
        let mut counter = SplitCounter::new();
        for k in 0..n {
            counter.add(&trees[k]);
            prop_assert_eq!(counter.frequencies(), split_frequencies(&chain(trees[..=k].to_vec())));
        }
        let freq = counter.frequencies();
        prop_assert!(freq.values().all(|&f| (0.0..=1.0).contains(&f)));
        prop_assert!(freq.len() <= (6 - 2) * n);
    }

    #[test]
    fn pulling_frequencies_together_never_raises_asdsf(
        pairs in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 1..20),
        t in 0.0..=1.0f64,
    ) {
        let clade = |i: usize| Clade::new([format!("L{i}"), "Z".to_string()]);
        let fa: BTreeMap<Clade, f64> = pairs.iter().enumerate().map(|(i, p)| (clade(i), p.0)).collect();
        let fb: BTreeMap<Clade, f64> = pairs.iter().enumerate().map(|(i, p)| (clade(i), p.1)).collect();
        // Move each b frequency toward its a partner by the fraction t.
        let fc: BTreeMap<Clade, f64> = pairs.iter().enumerate().map(|(i, p)| (clade(i), p.1 + t * (p.0 - p.1))).collect();
        for sd in [SdConvention::Sample, SdConvention::Population] {
            let before = asdsf_from_frequencies(&fa, &fb, 0.0, sd).value;
            let after = asdsf_from_frequencies(&fa, &fc, 0.0, sd).value;
            prop_assert!(after <= before + 1e-15, "{} -> {}", before, after);
        }
    }
}

#[test]
fn two_run_deviation_examples() {
    let a = chain(vec![parse_newick("((A:1,B:1):1,(C:1,D:1):1);").unwrap()]);
    let b = chain(vec![parse_newick("((A:1,C:1):1,(B:1,D:1):1);").unwrap()]);
    let r = asdsf(&a, &b, 0.1, SdConvention::Sample).unwrap();
    assert!((r.value - std::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-15);
    assert_eq!(asdsf(&a, &a, 0.1, SdConvention::Sample).unwrap().value, 0.0);
    assert_eq!(asdsf(&a, &b, 0.1, SdConvention::Population).unwrap().value, 0.5);
}

#[test]
fn same_distribution_chains_are_calibrated() {
    let total: f64 = (0..50u64)
        .map(|seed| {
            let a = chain(gene_trees(200, seed, "null-a"));
            let b = chain(gene_trees(200, seed, "null-b"));
            auc_convergence_metric(&a, &b, &AucConfig::default(), seed).unwrap().auc
        })
        .sum();
    let mean = total / 50.0;
    assert!((0.5..=0.6).contains(&mean), "mean AUC {mean}");
}

#[test]
fn shuffled_copy_looks_converged() {
    let (mut raw, mut reported) = (0.0, 0.0);
    for seed in 0..20u64 {
        let trees = gene_trees(200, seed, "shuffle");
        let mut copy = trees.clone();
        copy.shuffle(&mut stream(seed, "shuffle-order", 0));
        let m = auc_convergence_metric(&chain(trees), &chain(copy), &AucConfig::default(), seed).unwrap();
        raw += m.raw_auc;
        reported += m.auc;
    }
    for mean in [raw / 20.0, reported / 20.0] {
        assert!((0.35..=0.65).contains(&mean), "mean AUC {mean}");
    }
}

#[test]
fn separated_chains_are_told_apart() {
    for seed in 0..5u64 {
        let mut ra = stream(seed, "sep", 0);
        let mut rb = stream(seed, "sep", 1);
        let a = chain((0..200).map(|_| jittered(&mut ra, 1.0)).collect());
        let b = chain((0..200).map(|_| jittered(&mut rb, 2.0)).collect());
        let m = auc_convergence_metric(&a, &b, &AucConfig::default(), seed).unwrap();
        assert!(m.auc > 0.95 && !m.degenerate, "seed {seed}: {m:?}");
        assert!((0.0..=1.0).contains(&m.raw_auc));
    }
}

#[test]
fn relabelled_chains_give_complementary_auc() {
    let mut ra = stream(3, "relabel", 0);
    let mut rb = stream(3, "relabel", 1);
    let a: Vec<PhyloTree> = (0..40).map(|_| jittered(&mut ra, 1.0)).collect();
    let b: Vec<PhyloTree> = (0..40).map(|_| jittered(&mut rb, 1.3)).collect();
    let ds = Dataset::from_trees(&a, &b).unwrap();
    let fw = FwConfig::default();
    let fwd = auc(&Model::from(fit_two_species(&ds, &fw).unwrap()).scores(&ds).unwrap(), ds.labels()).unwrap();
    let swapped = Model::from(fit_two_species(&ds.swap_labels(), &fw).unwrap());
    // Chain b as class 0 scores the original labelling in reverse.
    let back = auc(&swapped.scores(&ds).unwrap(), ds.labels()).unwrap();
    assert!((fwd + back - 1.0).abs() <= 1e-12, "{fwd} vs {back}");
}

#[test]
fn two_phase_chains_show_the_signature() {
    let mut ra = stream(4, "phase", 0);
    let mut rb = stream(4, "phase", 1);
    let a = chain((0..400).map(|_| jittered(&mut ra, 1.0)).collect());
    let b = chain((0..400).map(|i| jittered(&mut rb, if i < 300 { 1.6 } else { 1.0 })).collect());
    let rows = diagnose(&a, &b, &DiagnoseConfig { diagnfreq: 50, seed: 4, ..Default::default() }).unwrap();
    assert_eq!(rows.iter().map(|r| r.iteration).collect::<Vec<_>>(), (1..=8).map(|k| k * 50).collect::<Vec<_>>());
    assert!(rows.iter().all(|r| r.asdsf == 0.0));
    assert!(rows.iter().any(|r| r.auc.is_some_and(|x| x > 0.8)));
    let last = rows.last().unwrap().auc.unwrap();
    assert!(last < 0.8, "final AUC {last}");
}

#[test]
fn identical_chains_diagnose_as_converged() {
    let trees = gene_trees(300, 5, "ident");
    let c = chain(trees);
    let rows = diagnose(&c, &c, &DiagnoseConfig { diagnfreq: 100, seed: 5, ..Default::default() }).unwrap();
    assert_eq!(rows.len(), 3);
    for r in &rows {
        assert_eq!(r.asdsf, 0.0);
        assert!(r.auc.unwrap() <= 0.7, "{r:?}");
    }
    let late = diagnose(&c, &c, &DiagnoseConfig { diagnfreq: 10_000, ..Default::default() }).unwrap();
    assert_eq!(late.len(), 1);
    assert_eq!(late[0].iteration, 300);
}
