use nalgebra::DMatrix;

use super::logistic::{log_lik_term, newton_logistic, sigmoid};
use super::{check_prior, ClassicalModel, OneSpeciesModel, TwoSpeciesModel};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fermat_weber::{fw_solve, FwConfig};
use crate::tropical::{distance_unchecked, TorusPoint};

const LAMBDA_MIN: f64 = 1e-6;
const LAMBDA_MAX: f64 = 1e6;

fn distances(points: &[TorusPoint], center: &TorusPoint) -> Vec<f64> {
    points.iter().map(|p| distance_unchecked(p.coords(), center.coords())).collect()
}

fn labels_f64(ds: &Dataset) -> Vec<f64> {
    ds.labels().iter().map(|&y| f64::from(y)).collect()
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n.max(1) as f64
}

/// One-species fit with class prior 1/2.
pub fn fit_one_species(ds: &Dataset, fw: &FwConfig) -> Result<OneSpeciesModel> {
    fit_one_species_with_prior(ds, fw, 0.5)
}

/// The center is the Fermat-Weber point of all covariates. With
/// `lambda_y = 1/sigma_y`, the log-odds is `a d + b` where `a = lambda0 - lambda1`
/// and `b = (e-1) ln(lambda1/lambda0) + ln(r/(1-r))`; the likelihood is concave
/// in `(a, b)`, so it is maximized there by Newton's method (started at the
/// per-class Gamma estimates `sigma_y = mean_y d / (e-1)`) and mapped back.
/// If the unconstrained optimum has no preimage (`a` and `b - ln(r/(1-r))`
/// of equal sign), the maximum over the closure lies on `b = ln(r/(1-r))`,
/// reached by letting both rates grow to the upper bracket.
pub fn fit_one_species_with_prior(ds: &Dataset, fw: &FwConfig, prior: f64) -> Result<OneSpeciesModel> {
    ds.require_both_classes()?;
    let offset = check_prior(prior)?;
    let e = ds.dim();
    if e < 3 {
        return Err(Error::invalid(format!("dimension must be >= 3, got {e}")));
    }
    let n = (e - 1) as f64;
    let omega = fw_solve(ds.points(), fw)?.point;
    let d = distances(ds.points(), &omega);
    if d.iter().all(|&x| x == 0.0) {
        return Err(Error::Degenerate("all covariates coincide".into()));
    }
    let y = labels_f64(ds);
    let class_mean = |c: f64| mean(d.iter().zip(&y).filter(|(_, &l)| l == c).map(|(&x, _)| x));
    // Fit with the tighter class labelled 0 so relabelling gives the same numbers.
    if class_mean(0.0) > class_mean(1.0) {
        let flipped: Vec<f64> = y.iter().map(|l| 1.0 - l).collect();
        let (l0, l1) = one_species_rates(&d, &flipped, n, check_prior(1.0 - prior)?);
        let clamp = |l: f64| l.clamp(LAMBDA_MIN, LAMBDA_MAX);
        let m = OneSpeciesModel::new(omega, 1.0 / clamp(l0), 1.0 / clamp(l1), 1.0 - prior)?;
        return Ok(OneSpeciesModel { prior, ..m.swap_classes() });
    }
    let (lambda0, lambda1) = one_species_rates(&d, &y, n, offset);
    let clamp = |l: f64| l.clamp(LAMBDA_MIN, LAMBDA_MAX);
    OneSpeciesModel::new(omega, 1.0 / clamp(lambda0), 1.0 / clamp(lambda1), prior)
}

// Per-class rates `(1/sigma_0, 1/sigma_1)` maximizing the likelihood of
// `h = (l0 - l1) d + n ln(l1/l0) + offset`.
fn one_species_rates(d: &[f64], y: &[f64], n: f64, offset: f64) -> (f64, f64) {
    let class_mean = |c: f64| mean(d.iter().zip(y).filter(|(_, &l)| l == c).map(|(&x, _)| x));
    let pooled = mean(d.iter().copied()) / n;
    let init_sigma = |c: f64| {
        let s = class_mean(c) / n;
        if s > 0.0 {
            s
        } else {
            pooled
        }
    };
    let (l0, l1) = (1.0 / init_sigma(0.0), 1.0 / init_sigma(1.0));

    let x = DMatrix::from_fn(d.len(), 2, |i, k| if k == 0 { d[i] } else { 1.0 });
    let init = vec![l0 - l1, n * (l1 / l0).ln() + offset];
    let fit = newton_logistic(&x, y, &[0.0, 0.0], init, 1e-10, 500);
    let (a, b) = (fit.beta[0], fit.beta[1]);
    let u = (b - offset) / n;
    if a != 0.0 && a * u < 0.0 {
        // lambda1 / lambda0 = e^u and lambda0 - lambda1 = a.
        let l0 = a / -u.exp_m1();
        (l0, l0 * u.exp())
    } else {
        let xa = DMatrix::from_fn(d.len(), 1, |i, _| d[i]);
        let a_line = fit_with_offset(&xa, y, offset);
        if a_line >= 0.0 {
            (LAMBDA_MAX, LAMBDA_MAX - a_line.min(LAMBDA_MAX - LAMBDA_MIN))
        } else {
            (LAMBDA_MAX - (-a_line).min(LAMBDA_MAX - LAMBDA_MIN), LAMBDA_MAX)
        }
    }
}

// Maximizes the likelihood of h = a x + offset over a (concave in a).
fn fit_with_offset(x: &DMatrix<f64>, y: &[f64], offset: f64) -> f64 {
    let score = |a: f64| -> (f64, f64) {
        let mut g = 0.0;
        let mut info = 0.0;
        for i in 0..y.len() {
            let xi = x[(i, 0)];
            let p = sigmoid(a * xi + offset);
            g += (y[i] - p) * xi;
            info += p * (1.0 - p) * xi * xi;
        }
        (g, info)
    };
    let obj = |a: f64| (0..y.len()).map(|i| log_lik_term(y[i], a * x[(i, 0)] + offset)).sum::<f64>();
    let mut a = 0.0;
    for _ in 0..200 {
        let (g, info) = score(a);
        if g.abs() < 1e-10 * y.len() as f64 || info <= 0.0 {
            break;
        }
        let step = g / info;
        let f0 = obj(a);
        let mut t = 1.0;
        while t > 1e-12 && obj(a + t * step) < f0 {
            t *= 0.5;
        }
        a += t * step;
    }
    a
}

/// `dl/dlambda` of the mean log-likelihood for `h = lambda * delta + offset`.
pub fn two_species_score_derivative(delta: &[f64], y: &[f64], lambda: f64, offset: f64) -> f64 {
    let n = delta.len() as f64;
    delta.iter().zip(y).map(|(&dl, &yi)| (yi - sigmoid(lambda * dl + offset)) * dl).sum::<f64>() / n
}

/// Two-species fit with class prior 1/2.
pub fn fit_two_species(ds: &Dataset, fw: &FwConfig) -> Result<TwoSpeciesModel> {
    fit_two_species_with_prior(ds, fw, 0.5)
}

/// Per-class Fermat-Weber centers, then `lambda = 1/sigma` from the root of
/// the (decreasing) score `dl/dlambda`, found by bisection on `ln lambda`
/// over `[1e-6, 1e6]`.
pub fn fit_two_species_with_prior(ds: &Dataset, fw: &FwConfig, prior: f64) -> Result<TwoSpeciesModel> {
    ds.require_both_classes()?;
    let offset = check_prior(prior)?;
    let (p0, p1) = (ds.class_points(0), ds.class_points(1));
    let (r0, r1) = std::thread::scope(|s| {
        let h = s.spawn(|| fw_solve(&p1, fw));
        (fw_solve(&p0, fw), h.join().expect("solver thread panicked"))
    });
    let (omega0, omega1) = (r0?.point, r1?.point);
    if omega0 == omega1 {
        return Err(Error::Degenerate("the two class centers coincide; use the one-species model".into()));
    }
    let delta: Vec<f64> = ds
        .points()
        .iter()
        .map(|x| distance_unchecked(x.coords(), omega0.coords()) - distance_unchecked(x.coords(), omega1.coords()))
        .collect();
    let y = labels_f64(ds);
    let score = |ln_l: f64| two_species_score_derivative(&delta, &y, ln_l.exp(), offset);
    let (mut lo, mut hi) = (LAMBDA_MIN.ln(), LAMBDA_MAX.ln());
    let lambda = if score(hi) >= 0.0 {
        LAMBDA_MAX
    } else if score(lo) <= 0.0 {
        LAMBDA_MIN
    } else {
        while hi - lo > 1e-13 {
            let mid = 0.5 * (lo + hi);
            if score(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (0.5 * (lo + hi)).exp()
    };
    TwoSpeciesModel::new(omega0, omega1, 1.0 / lambda, prior)
}

/// Ridge-stabilized (`1e-6`) linear logistic regression on chart
/// coordinates, fitted by damped Newton to a gradient max-norm of `1e-8`.
pub fn fit_classical_baseline(ds: &Dataset) -> Result<ClassicalModel> {
    ds.require_both_classes()?;
    let e = ds.dim();
    let p = e - 1;
    let x = DMatrix::from_fn(ds.len(), e, |i, k| if k < p { ds.points()[i].coords()[k] } else { 1.0 });
    let mut ridge = vec![1e-6; e];
    ridge[p] = 0.0;
    let fit = newton_logistic(&x, &labels_f64(ds), &ridge, vec![0.0; e], 1e-8, 1000);
    Ok(ClassicalModel { weights: fit.beta[..p].to_vec(), intercept: fit.beta[p] })
}
