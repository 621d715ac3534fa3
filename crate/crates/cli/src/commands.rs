use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use troplr::chains::{diagnose as run_diagnose, DiagnoseConfig, SdConvention, TreeChain};
use troplr::dataset::Dataset;
use troplr::evaluation::{
    class_error_rates, gamma_fit_diagnostic, misclassification_rate, one_species_error, roc_and_auc,
    two_species_upper_bound, OneSpeciesError, RadiusLaw,
};
use troplr::fermat_weber::{fw_solve, FwConfig, FwResult};
use troplr::regression::{
    fit_classical_baseline, fit_one_species_with_prior, fit_two_species_with_prior, Model, ModelFile,
};
use troplr::rng::stream;
use troplr::sampling::{simulate_coalescent_dataset, CoalescentConfig, Geometry, TropicalLaplace};
use troplr::treeio::{parse_newick_many, parse_nexus_trees, write_newick, PhyloTree};
use troplr::tropical::trop_distance;
use troplr::{Error, TorusPoint};

use crate::{
    DataArgs, DiagnoseArgs, EvaluateArgs, FitArgs, FwArgs, ModelKind, PredictArgs, SampleArgs, SdArg, SimulateArgs,
};

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            Failure::Usage(m) | Failure::Data(m) => m,
        }
    }

    fn at(path: &Path, e: Error) -> Failure {
        Failure::Data(format!("{}: {e}", path.display()))
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Data(other.to_string()),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

#[derive(Debug, Clone, Copy)]
pub struct Log(pub bool);

impl Log {
    fn say(&self, msg: impl AsRef<str>) {
        if self.0 {
            eprintln!("[troplr] {}", msg.as_ref());
        }
    }
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn emit(out: Option<&PathBuf>, text: &str) -> Res<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::at(p, e.into())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Res<String> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| Failure::Data(e.to_string()))
}

fn read_trees(path: &Path) -> Res<Vec<PhyloTree>> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::at(path, e.into()))?;
    let is_nexus = text.trim_start().get(..6).is_some_and(|h| h.eq_ignore_ascii_case("#nexus"));
    let trees = if is_nexus {
        parse_nexus_trees(&text).map(|v| v.into_iter().map(|(_, t)| t).collect())
    } else {
        parse_newick_many(&text)
    };
    trees.map_err(|e| Failure::at(path, e))
}

fn load_data(args: &DataArgs) -> Res<Dataset> {
    match (&args.data, &args.class0, &args.class1) {
        (Some(p), _, _) => Dataset::load(p).map_err(|e| Failure::at(p, e)),
        (None, Some(a), Some(b)) => {
            let (ta, tb) = (read_trees(a)?, read_trees(b)?);
            Dataset::from_trees(&ta, &tb).map_err(|e| Failure::Data(format!("{} / {}: {e}", a.display(), b.display())))
        }
        _ => Err(usage("an input is required: --data FILE or --class0 FILE --class1 FILE")),
    }
}

fn input_name(args: &DataArgs) -> String {
    match (&args.data, &args.class0) {
        (Some(p), _) | (None, Some(p)) => p.display().to_string(),
        _ => String::new(),
    }
}

fn check_leaf_order(model: &ModelFile, ds: &Dataset) -> Res<()> {
    if let (Some(m), Some(d)) = (&model.leaf_order, ds.leaf_order()) {
        if m.as_slice() != d {
            return Err(Failure::Data("leaf order of the data differs from the model's".into()));
        }
    }
    if model.e != ds.dim() {
        return Err(Failure::Data(format!("model has e = {}, data has e = {}", model.e, ds.dim())));
    }
    Ok(())
}

fn load_model(path: &Path) -> Res<ModelFile> {
    ModelFile::load(path).map_err(|e| Failure::at(path, e))
}

#[derive(Serialize)]
struct SimulationMeta {
    seed: u64,
    ratio: f64,
    pop_size: f64,
    species_depth: f64,
    leaves: usize,
    per_class: usize,
    birth_rate: f64,
    dataset: String,
    leaf_order: Vec<String>,
    species_trees: [String; 2],
}

pub fn simulate(a: &SimulateArgs, log: Log) -> Res<()> {
    if a.leaves < 4 {
        return Err(usage(format!("--leaves must be >= 4, got {}", a.leaves)));
    }
    if a.per_class == 0 {
        return Err(usage("--per-class must be >= 1"));
    }
    if a.ratios.is_empty() || a.ratios.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(usage("--ratios must be a nonempty list of positive numbers"));
    }
    if !(a.pop_size > 0.0 && a.birth_rate > 0.0) {
        return Err(usage("--pop-size and --birth-rate must be positive"));
    }
    let cfg = CoalescentConfig { leaves: a.leaves, per_class: a.per_class, pop_size: a.pop_size, birth_rate: a.birth_rate };
    std::fs::create_dir_all(&a.out_dir).map_err(|e| Failure::at(&a.out_dir, e.into()))?;
    let runs: Vec<_> = a.ratios.par_iter().map(|&r| simulate_coalescent_dataset(&cfg, r, a.seed)).collect();
    for (&r, run) in a.ratios.iter().zip(runs) {
        let (species, genes, ds) = run?;
        let stem = format!("r{r}");
        let csv = format!("{stem}.csv");
        ds.save(a.out_dir.join(&csv)).map_err(|e| Failure::at(&a.out_dir.join(&csv), e))?;
        let meta = SimulationMeta {
            seed: a.seed,
            ratio: r,
            pop_size: a.pop_size,
            species_depth: species[0].depth(),
            leaves: a.leaves,
            per_class: a.per_class,
            birth_rate: a.birth_rate,
            dataset: csv,
            leaf_order: ds.leaf_order().map(|o| o.to_vec()).unwrap_or_default(),
            species_trees: [write_newick(species[0].tree()), write_newick(species[1].tree())],
        };
        emit(Some(&a.out_dir.join(format!("{stem}.json"))), &to_json(&meta)?)?;
        if a.newick {
            for (class, trees) in genes.iter().enumerate() {
                let mut text = String::new();
                for t in trees {
                    text.push_str(&write_newick(t));
                    text.push('\n');
                }
                emit(Some(&a.out_dir.join(format!("{stem}_class{class}.nwk"))), &text)?;
            }
        }
        log.say(format!("R = {r}: wrote {} rows to {stem}.csv", ds.len()));
    }
    Ok(())
}

pub fn sample(a: &SampleArgs, log: Log) -> Res<()> {
    let mut classes = vec![(a.center.clone(), a.sigma, a.n)];
    if let (Some(c), Some(s), Some(n)) = (&a.center1, a.sigma1, a.n1) {
        classes.push((c.clone(), s, n));
    }
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for (y, (center, sigma, n)) in classes.into_iter().enumerate() {
        let dist = TropicalLaplace::new(TorusPoint::new(&center).map_err(|e| usage(e.to_string()))?, sigma)
            .map_err(|e| usage(e.to_string()))?;
        points.extend(dist.sample_n(n, &mut stream(a.seed, "sample", y as u64)));
        labels.extend(std::iter::repeat_n(y as u8, n));
    }
    if points.is_empty() {
        return Err(usage("nothing to sample: --n is 0"));
    }
    if points.iter().any(|p| p.dim() != points[0].dim()) {
        return Err(usage("--center and --center1 differ in length"));
    }
    let ds = Dataset::from_points(points, labels)?;
    log.say(format!("sampled {} points in dimension {}", ds.len(), ds.dim()));
    emit(a.out.as_ref(), &ds.to_csv_string())
}

#[derive(Serialize)]
struct FwReport<'a> {
    n: usize,
    #[serde(flatten)]
    result: &'a FwResult,
}

pub fn fw(a: &FwArgs, log: Log) -> Res<()> {
    let ds = load_data(&a.input)?;
    let points = match a.class {
        Some(y @ (0 | 1)) => ds.class_points(y),
        Some(y) => return Err(usage(format!("--class must be 0 or 1, got {y}"))),
        None => ds.points().to_vec(),
    };
    if points.is_empty() {
        return Err(Failure::Data(format!("{}: no rows to summarize", input_name(&a.input))));
    }
    if a.step0.is_some_and(|s| !(s > 0.0)) || !(a.tol > 0.0) {
        return Err(usage("--step0 and --tol must be positive"));
    }
    let cfg = FwConfig { step0: a.step0, max_iters: a.max_iters, tol: a.tol };
    let res = fw_solve(&points, &cfg)?;
    log.say(format!("objective {} after {} iterations, certified: {}", res.objective, res.iterations, res.certified));
    emit(a.out.as_ref(), &to_json(&FwReport { n: points.len(), result: &res })?)
}

fn parse_prior(s: &str, ds: &Dataset) -> Res<f64> {
    if s.eq_ignore_ascii_case("empirical") {
        let (_, n1) = ds.class_counts();
        return Ok(n1 as f64 / ds.len() as f64);
    }
    match s.parse::<f64>() {
        Ok(r) if r > 0.0 && r < 1.0 => Ok(r),
        _ => Err(usage(format!("--prior must be a number in (0, 1) or 'empirical', got '{s}'"))),
    }
}

pub fn fit(a: &FitArgs, log: Log) -> Res<()> {
    let ds = load_data(&a.input)?;
    if ds.is_empty() {
        return Err(Failure::Data(format!("{}: no rows", input_name(&a.input))));
    }
    let prior = parse_prior(&a.prior, &ds)?;
    let fw = FwConfig::default();
    let model: Model = match a.model {
        ModelKind::One => fit_one_species_with_prior(&ds, &fw, prior)?.into(),
        ModelKind::Two => fit_two_species_with_prior(&ds, &fw, prior)?.into(),
        ModelKind::Classical => fit_classical_baseline(&ds)?.into(),
    };
    log.say(format!("fitted {:?} model on {} rows", a.model, ds.len()));
    let file = ModelFile::new(model, ds.leaf_order().map(|o| o.to_vec()));
    emit(a.out.as_ref(), &(file.to_json()? + "\n"))
}

pub fn predict(a: &PredictArgs, log: Log) -> Res<()> {
    let mf = load_model(&a.model)?;
    let ds = load_data(&a.input)?;
    check_leaf_order(&mf, &ds)?;
    let mut out = String::from("row,label,h,probability,class\n");
    for (i, (x, y)) in ds.points().iter().zip(ds.labels()).enumerate() {
        let h = mf.model.h(x)?;
        let p = troplr::regression::sigmoid(h);
        writeln!(out, "{},{y},{h},{p},{}", i + 1, u8::from(h >= 0.0)).expect("write to string");
    }
    log.say(format!("scored {} rows", ds.len()));
    emit(a.out.as_ref(), &out)
}

#[derive(Serialize)]
struct RadiusFit {
    class: u8,
    n: usize,
    sigma_hat: f64,
    ks_statistic: f64,
}

#[derive(Serialize)]
struct EvaluationReport {
    model: &'static str,
    n: usize,
    n0: usize,
    n1: usize,
    auc: Option<f64>,
    error: f64,
    class0_error: Option<f64>,
    class1_error: Option<f64>,
    center_distance: Option<f64>,
    two_species_bound: Option<f64>,
    one_species_error: Option<OneSpeciesError>,
    radius_fits: Vec<RadiusFit>,
}

pub fn evaluate(a: &EvaluateArgs, log: Log) -> Res<()> {
    let mf = load_model(&a.model)?;
    let ds = load_data(&a.input)?;
    check_leaf_order(&mf, &ds)?;
    if ds.is_empty() {
        return Err(Failure::Data(format!("{}: no rows", input_name(&a.input))));
    }
    let model = &mf.model;
    let e = ds.dim();
    let (n0, n1) = ds.class_counts();
    let scores = model.scores(&ds)?;
    let roc = if n0 > 0 && n1 > 0 { Some(roc_and_auc(&scores, ds.labels())?) } else { None };
    let (c0, c1) = class_error_rates(model, &ds)?;

    let mut centers: Vec<(u8, &TorusPoint)> = Vec::new();
    let mut center_distance = None;
    let mut bound = None;
    let mut one = None;
    let kind = match model {
        Model::OneSpecies(m) => {
            centers = vec![(0, &m.omega), (1, &m.omega)];
            if m.sigma0 < m.sigma1 {
                let r = one_species_error(e, m.sigma0, m.sigma1, 0.0)?;
                // The formula's class 0 is the tight class.
                one = Some(if m.swapped { OneSpeciesError { class0: r.class1, class1: r.class0, mean: r.mean } } else { r });
            }
            "one_species"
        }
        Model::TwoSpecies(m) => {
            centers = vec![(0, &m.omega0), (1, &m.omega1)];
            let d = trop_distance(&m.omega0, &m.omega1)?;
            center_distance = Some(d);
            bound = Some(two_species_upper_bound(e, d, m.sigma)?);
            "two_species"
        }
        Model::Classical(_) => "classical",
    };

    let mut fits = Vec::new();
    let mut pp = String::from("class,theoretical,empirical\n");
    for (y, center) in centers {
        let idx: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels()[i] == y).collect();
        if idx.is_empty() {
            continue;
        }
        let sub = ds.subset(&idx);
        let g = gamma_fit_diagnostic(&sub, center.coords(), Geometry::Tropical, RadiusLaw::Laplace)?;
        for p in &g.pp_points {
            writeln!(pp, "{y},{},{}", p.theoretical, p.empirical).expect("write to string");
        }
        fits.push(RadiusFit { class: y, n: sub.len(), sigma_hat: g.sigma_hat, ks_statistic: g.ks_statistic });
    }

    let report = EvaluationReport {
        model: kind,
        n: ds.len(),
        n0,
        n1,
        auc: roc.as_ref().map(|r| r.auc),
        error: misclassification_rate(model, &ds)?,
        class0_error: c0,
        class1_error: c1,
        center_distance,
        two_species_bound: bound,
        one_species_error: one,
        radius_fits: fits,
    };
    if let (Some(path), Some(r)) = (&a.roc, &roc) {
        let mut text = String::from("threshold,fpr,tpr\n");
        for i in 0..r.fpr.len() {
            writeln!(text, "{},{},{}", r.thresholds[i], r.fpr[i], r.tpr[i]).expect("write to string");
        }
        emit(Some(path), &text)?;
    }
    if let Some(path) = &a.pp {
        emit(Some(path), &pp)?;
    }
    log.say(format!("evaluated {} rows", ds.len()));
    emit(a.out.as_ref(), &to_json(&report)?)
}

pub fn diagnose(a: &DiagnoseArgs, log: Log) -> Res<()> {
    if a.diagnfreq == 0 {
        return Err(usage("--diagnfreq must be >= 1"));
    }
    if !(a.frac > 0.0 && a.frac <= 1.0) || !(a.split > 0.0 && a.split < 1.0) {
        return Err(usage("--frac must be in (0, 1] and --split in (0, 1)"));
    }
    let load = |p: &PathBuf| TreeChain::load(p).map_err(|e| Failure::at(p, e));
    let (ca, cb) = (load(&a.chain_a)?, load(&a.chain_b)?);
    let cfg = DiagnoseConfig {
        diagnfreq: a.diagnfreq,
        frac: a.frac,
        split: a.split,
        min_freq: a.min_freq,
        sd: match a.sd {
            SdArg::Sample => SdConvention::Sample,
            SdArg::Population => SdConvention::Population,
        },
        seed: a.seed,
    };
    let rows = run_diagnose(&ca, &cb, &cfg)?;
    let mut out = String::from("iteration,asdsf,auc\n");
    for r in &rows {
        let auc = r.auc.map(|v| v.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{auc}", r.iteration, r.asdsf).expect("write to string");
    }
    log.say(format!("{} checkpoints", rows.len()));
    emit(a.out.as_ref(), &out)
}
