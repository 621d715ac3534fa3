//! ROC/AUC, misclassification, generalization-error formulas, and the
//! Gamma-radius goodness-of-fit diagnostic.

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::regression::Model;
use crate::sampling::{radius_cdf, Geometry};
use crate::special::{gamma_p_int, gamma_q_int};
use crate::tropical::distance_unchecked;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    /// Descending; the first entry is `+inf` (nothing called positive).
    pub thresholds: Vec<f64>,
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// Mann-Whitney AUC with ties counted half. Scores are "higher means class 1".
pub fn auc(scores: &[f64], labels: &[u8]) -> Result<f64> {
    let (twice_u, n0, n1) = rank_statistic(scores, labels)?;
    Ok(twice_u as f64 / (2 * n0 * n1) as f64)
}

// Returns (2U, n0, n1) in exact integer arithmetic.
fn rank_statistic(scores: &[f64], labels: &[u8]) -> Result<(u64, u64, u64)> {
    if scores.len() != labels.len() {
        return Err(Error::DimensionMismatch { expected: labels.len(), found: scores.len() });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("scores must not be NaN"));
    }
    let n1 = labels.iter().filter(|&&y| y == 1).count() as u64;
    let n0 = labels.len() as u64 - n1;
    if n1 == 0 || n0 == 0 {
        return Err(Error::SingleClass);
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // Twice the sum of (mid-)ranks of the positives.
    let mut twice_rank_sum = 0u64;
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && scores[idx[end]] == scores[idx[start]] {
            end += 1;
        }
        let pos = idx[start..end].iter().filter(|&&i| labels[i] == 1).count() as u64;
        twice_rank_sum += pos * (start as u64 + 1 + end as u64);
        start = end;
    }
    Ok((twice_rank_sum - n1 * (n1 + 1), n0, n1))
}

pub fn roc_and_auc(scores: &[f64], labels: &[u8]) -> Result<RocCurve> {
    let auc = auc(scores, labels)?;
    let n1 = labels.iter().filter(|&&y| y == 1).count() as f64;
    let n0 = labels.len() as f64 - n1;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut thresholds = vec![f64::INFINITY];
    let (mut fpr, mut tpr) = (vec![0.0], vec![0.0]);
    let (mut fp, mut tp) = (0usize, 0usize);
    let mut k = 0;
    while k < idx.len() {
        let t = scores[idx[k]];
        while k < idx.len() && scores[idx[k]] == t {
            if labels[idx[k]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        thresholds.push(t);
        fpr.push(fp as f64 / n0);
        tpr.push(tp as f64 / n1);
    }
    Ok(RocCurve { thresholds, fpr, tpr, auc })
}

/// Fraction of points with `classify(x) != y`.
pub fn misclassification_rate(model: &Model, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut wrong = 0usize;
    for (x, &y) in ds.points().iter().zip(ds.labels()) {
        if model.classify(x)? != y {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / ds.len() as f64)
}

/// `(P(C=1 | Y=0), P(C=0 | Y=1))` estimated on `ds`; `None` for an absent class.
pub fn class_error_rates(model: &Model, ds: &Dataset) -> Result<(Option<f64>, Option<f64>)> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut wrong = [0usize; 2];
    let mut total = [0usize; 2];
    for (x, &y) in ds.points().iter().zip(ds.labels()) {
        let c = model.classify(x)?;
        total[y as usize] += 1;
        if c != y {
            wrong[y as usize] += 1;
        }
    }
    let rate = |k: usize| (total[k] > 0).then(|| wrong[k] as f64 / total[k] as f64);
    Ok((rate(0), rate(1)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneSpeciesError {
    /// `P(C = 1 | Y = 0)`.
    pub class0: Interval,
    /// `P(C = 0 | Y = 1)`.
    pub class1: Interval,
    pub mean: Interval,
}

/// `epsilon = (e - 1) d / (sigma0 sigma1)` for a center misplaced by `d`.
pub fn one_species_epsilon(e: usize, sigma0: f64, sigma1: f64, center_error: f64) -> f64 {
    (e as f64 - 1.0) * center_error / (sigma0 * sigma1)
}

/// Class-conditional error intervals of the one-species classifier when
/// the center is off by an amount encoded in `epsilon`. With
/// `alpha = (e-1) ln(sigma1/sigma0) / (sigma1 - sigma0)` and `F` the
/// `Gamma(e-1, 1)` CDF:
/// `P(C=1|Y=0) in [1 - F(sigma1 (alpha+eps)), 1 - F(sigma1 (alpha-eps))]` and
/// `P(C=0|Y=1) in [F(sigma0 (alpha-eps)), F(sigma0 (alpha+eps))]`.
pub fn one_species_error(e: usize, sigma0: f64, sigma1: f64, epsilon: f64) -> Result<OneSpeciesError> {
    if e < 3 {
        return Err(Error::invalid(format!("dimension must be >= 3, got {e}")));
    }
    if !(sigma0 > 0.0 && sigma1.is_finite()) {
        return Err(Error::invalid("sigmas must be positive and finite"));
    }
    if sigma0 >= sigma1 {
        return Err(Error::invalid(format!("need sigma0 < sigma1, got {sigma0} >= {sigma1}")));
    }
    if !(epsilon >= 0.0) {
        return Err(Error::invalid(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let n = (e - 1) as u32;
    let alpha = (e - 1) as f64 * (sigma1 / sigma0).ln() / (sigma1 - sigma0);
    let big_f = |x: f64| gamma_p_int(n, x.max(0.0));
    let tail = |x: f64| gamma_q_int(n, x.max(0.0));
    let class0 = Interval { lo: tail(sigma1 * (alpha + epsilon)), hi: tail(sigma1 * (alpha - epsilon)) };
    let class1 = Interval { lo: big_f(sigma0 * (alpha - epsilon)), hi: big_f(sigma0 * (alpha + epsilon)) };
    let mean = Interval { lo: 0.5 * (class0.lo + class1.lo), hi: 0.5 * (class0.hi + class1.hi) };
    Ok(OneSpeciesError { class0, class1, mean })
}

/// `Q(e - 1, d / (2 sigma)) / 2`, the error bound of the two-species
/// classifier with centers `d` apart.
pub fn two_species_upper_bound(e: usize, d_centers: f64, sigma: f64) -> Result<f64> {
    if e < 3 {
        return Err(Error::invalid(format!("dimension must be >= 3, got {e}")));
    }
    if !(d_centers >= 0.0) {
        return Err(Error::invalid(format!("center distance must be >= 0, got {d_centers}")));
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive and finite, got {sigma}")));
    }
    Ok(0.5 * gamma_q_int((e - 1) as u32, d_centers / (2.0 * sigma)))
}

/// Radius law: `i = 1` Laplace, `i = 2` Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusLaw {
    Laplace,
    Gaussian,
}

impl RadiusLaw {
    pub fn exponent(self) -> u32 {
        match self {
            RadiusLaw::Laplace => 1,
            RadiusLaw::Gaussian => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PpPoint {
    /// Fitted CDF at the order statistic.
    pub theoretical: f64,
    /// Plotting position `(k - 1/2) / n`.
    pub empirical: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GammaFit {
    pub sigma_hat: f64,
    pub ks_statistic: f64,
    pub pp_points: Vec<PpPoint>,
}

/// Distances from `center` under the chosen geometry: tropical distance on
/// the torus, or the Euclidean norm on the raw coordinates.
pub fn radii(ds: &Dataset, center: &[f64], geometry: Geometry) -> Result<Vec<f64>> {
    if center.len() != ds.dim() {
        return Err(Error::DimensionMismatch { expected: ds.dim(), found: center.len() });
    }
    Ok(match geometry {
        Geometry::Tropical => ds.raw().iter().map(|x| distance_unchecked(x, center)).collect(),
        Geometry::Euclidean => ds
            .raw()
            .iter()
            .map(|x| x.iter().zip(center).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
            .collect(),
    })
}

/// Fits `sigma` of the radius law by maximum likelihood
/// (`sigma^i = mean(d^i) / n`, `n = e - 1` tropical, `e` Euclidean) and
/// measures the fit with the Kolmogorov-Smirnov statistic.
pub fn gamma_fit_diagnostic(ds: &Dataset, center: &[f64], geometry: Geometry, law: RadiusLaw) -> Result<GammaFit> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let e = ds.dim();
    let i = law.exponent();
    let mut d = radii(ds, center, geometry)?;
    d.sort_by(f64::total_cmp);
    let n = geometry.degrees(e) as f64;
    let mean_pow = d.iter().map(|x| x.powi(i as i32)).sum::<f64>() / d.len() as f64;
    let sigma_hat = (mean_pow / n).powf(1.0 / f64::from(i));
    let len = d.len() as f64;
    let mut ks: f64 = 0.0;
    let mut pp = Vec::with_capacity(d.len());
    for (k, &x) in d.iter().enumerate() {
        // A point mass at 0 fits nothing.
        let f = if sigma_hat > 0.0 { radius_cdf(e, i, sigma_hat, x, geometry)? } else { 1.0 };
        ks = ks.max(f - k as f64 / len).max((k + 1) as f64 / len - f);
        pp.push(PpPoint { theoretical: f, empirical: (k as f64 + 0.5) / len });
    }
    if d.len() == 1 || !(sigma_hat > 0.0) {
        ks = 1.0;
    }
    Ok(GammaFit { sigma_hat, ks_statistic: ks, pp_points: pp })
}
