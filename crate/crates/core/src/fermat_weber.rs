//! Tropical Fermat-Weber points: minimizers of `sum_i d_tr(X_i, w)`.
//!
//! The objective is convex and piecewise linear. [`fw_solve`] runs
//! subgradient descent in the chart and then tries to certify the incumbent:
//! where every residual `w - X_i` has a strict unique maximum `M_i` and a
//! strict unique minimum `m_i`, the gradient exists and equals the integer
//! vector `#{i : M_i = j} - #{i : m_i = j}`; if that vector is zero the
//! incumbent is a global minimizer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tropical::{distance_unchecked, TorusPoint};

fn check_points(points: &[TorusPoint]) -> Result<usize> {
    let first = points.first().ok_or(Error::Empty("point set"))?;
    let e = first.dim();
    for p in points {
        if p.dim() != e {
            return Err(Error::DimensionMismatch { expected: e, found: p.dim() });
        }
    }
    Ok(e)
}

/// `sum_i d_tr(X_i, omega)`.
pub fn fw_objective(points: &[TorusPoint], omega: &TorusPoint) -> Result<f64> {
    let e = check_points(points)?;
    if omega.dim() != e {
        return Err(Error::DimensionMismatch { expected: e, found: omega.dim() });
    }
    Ok(points.iter().map(|p| distance_unchecked(p.coords(), omega.coords())).sum())
}

/// Outcome of [`integer_gradient`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum IntegerGradient {
    Defined(Vec<i64>),
    /// Residuals of these samples lack a strict unique maximum or minimum.
    Undefined(Vec<usize>),
}

impl IntegerGradient {
    pub fn is_zero(&self) -> bool {
        matches!(self, IntegerGradient::Defined(g) if g.iter().all(|&x| x == 0))
    }
}

// Index of the strict unique max and min of `r`, treating values within
// `tol` of the extreme as tied.
fn strict_extrema(r: &[f64], tol: f64) -> (Option<usize>, Option<usize>) {
    let (mut imax, mut imin) = (0, 0);
    for (k, &v) in r.iter().enumerate() {
        if v > r[imax] {
            imax = k;
        }
        if v < r[imin] {
            imin = k;
        }
    }
    let unique = |best: usize, sign: f64| {
        r.iter().enumerate().all(|(k, &v)| k == best || sign * (r[best] - v) > tol).then_some(best)
    };
    (unique(imax, 1.0), unique(imin, -1.0))
}

/// Exact integer gradient of the objective at `omega`, if it exists.
pub fn integer_gradient(points: &[TorusPoint], omega: &TorusPoint) -> Result<IntegerGradient> {
    integer_gradient_tol(points, omega, 0.0)
}

/// As [`integer_gradient`], with residual coordinates closer than `tol`
/// counted as tied.
pub fn integer_gradient_tol(points: &[TorusPoint], omega: &TorusPoint, tol: f64) -> Result<IntegerGradient> {
    let e = check_points(points)?;
    if omega.dim() != e {
        return Err(Error::DimensionMismatch { expected: e, found: omega.dim() });
    }
    let mut grad = vec![0i64; e];
    let mut bad = Vec::new();
    let mut r = vec![0.0; e];
    for (i, p) in points.iter().enumerate() {
        for ((rk, w), x) in r.iter_mut().zip(omega.coords()).zip(p.coords()) {
            *rk = w - x;
        }
        match strict_extrema(&r, tol) {
            (Some(hi), Some(lo)) => {
                grad[hi] += 1;
                grad[lo] -= 1;
            }
            _ => bad.push(i),
        }
    }
    Ok(if bad.is_empty() { IntegerGradient::Defined(grad) } else { IntegerGradient::Undefined(bad) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FwConfig {
    /// Initial step; `None` uses a tenth of the median pairwise distance.
    pub step0: Option<f64>,
    pub max_iters: usize,
    /// Stop once the step length falls below this.
    pub tol: f64,
}

impl Default for FwConfig {
    fn default() -> Self {
        FwConfig { step0: None, max_iters: 20_000, tol: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FwResult {
    pub point: TorusPoint,
    pub objective: f64,
    pub certified: bool,
    pub iterations: usize,
    pub final_gradient: Option<Vec<i64>>,
    /// Best objective after each iteration.
    #[serde(skip)]
    pub history: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn default_step(points: &[TorusPoint]) -> f64 {
    let head = &points[..points.len().min(100)];
    let mut d = Vec::new();
    for (a, p) in head.iter().enumerate() {
        for q in &head[a + 1..] {
            d.push(distance_unchecked(p.coords(), q.coords()));
        }
    }
    median(d) / 10.0
}

/// Coordinatewise median of the canonical coordinates.
fn start_point(points: &[TorusPoint], e: usize) -> Vec<f64> {
    (0..e).map(|k| median(points.iter().map(|p| p.coords()[k]).collect())).collect()
}

// Objective and one subgradient at `w`: for each residual, +1 on one maximal
// coordinate and -1 on one minimal coordinate (nothing when all are tied).
fn eval(points: &[TorusPoint], w: &[f64], g: &mut [f64]) -> f64 {
    g.iter_mut().for_each(|x| *x = 0.0);
    let mut total = 0.0;
    for p in points {
        let c = p.coords();
        let (mut hi, mut lo) = (0, 0);
        let (mut vhi, mut vlo) = (w[0] - c[0], w[0] - c[0]);
        for k in 1..w.len() {
            let v = w[k] - c[k];
            if v > vhi {
                vhi = v;
                hi = k;
            }
            if v < vlo {
                vlo = v;
                lo = k;
            }
        }
        total += vhi - vlo;
        if hi != lo {
            g[hi] += 1.0;
            g[lo] -= 1.0;
        }
    }
    total
}

/// Subgradient descent with steps `step0 / sqrt(t)` along the normalized
/// subgradient, keeping the best iterate, followed by a certification attempt.
pub fn fw_solve(points: &[TorusPoint], config: &FwConfig) -> Result<FwResult> {
    let e = check_points(points)?;
    if e < 3 {
        return Err(Error::invalid(format!("dimension must be >= 3, got {e}")));
    }
    let step0 = match config.step0 {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::invalid(format!("step0 must be positive, got {s}"))),
        None => default_step(points),
    };
    let mut w = start_point(points, e);
    let mut g = vec![0.0; e];
    let mut best_w = w.clone();
    let mut best = eval(points, &w, &mut g);
    let mut history = Vec::new();
    let mut iterations = 0;
    if step0 > 0.0 {
        for t in 1..=config.max_iters {
            iterations = t;
            let eta = step0 / (t as f64).sqrt();
            if eta < config.tol {
                break;
            }
            // The last coordinate is pinned by the chart.
            let norm = g[..e - 1].iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                break;
            }
            for k in 0..e - 1 {
                w[k] -= eta * g[k] / norm;
            }
            let f = eval(points, &w, &mut g);
            if f < best {
                best = f;
                best_w.copy_from_slice(&w);
            }
            history.push(best);
        }
    }
    let point = TorusPoint::new(&best_w)?;
    let objective = fw_objective(points, &point)?;
    let scale = point.coords().iter().chain(points[0].coords()).fold(1.0f64, |a, x| a.max(x.abs()));
    let (certified, final_gradient) = match integer_gradient_tol(points, &point, 1e-9 * scale)? {
        IntegerGradient::Defined(grad) => (grad.iter().all(|&x| x == 0), Some(grad)),
        IntegerGradient::Undefined(_) => (false, None),
    };
    Ok(FwResult { point, objective, certified, iterations, final_gradient, history })
}

/// Grid minimizer over the chart box `bounds` (e = 3 only), for tests.
pub fn fw_brute_force(points: &[TorusPoint], bounds: [(f64, f64); 2], grid_step: f64) -> Result<(TorusPoint, f64)> {
    let e = check_points(points)?;
    if e != 3 {
        return Err(Error::invalid(format!("grid search needs dimension 3, got {e}")));
    }
    if !(grid_step > 0.0) {
        return Err(Error::invalid("grid step must be positive"));
    }
    let steps = |(lo, hi): (f64, f64)| ((hi - lo) / grid_step).round() as usize;
    let (na, nb) = (steps(bounds[0]), steps(bounds[1]));
    let mut best = (f64::INFINITY, [0.0, 0.0, 0.0]);
    for a in 0..=na {
        for b in 0..=nb {
            let w = [bounds[0].0 + a as f64 * grid_step, bounds[1].0 + b as f64 * grid_step, 0.0];
            let f: f64 = points.iter().map(|p| distance_unchecked(p.coords(), &w)).sum();
            if f < best.0 {
                best = (f, w);
            }
        }
    }
    Ok((TorusPoint::new(&best.1)?, best.0))
}
