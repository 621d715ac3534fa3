//! Points of the tropical projective torus `R^e / R1` and the metric
//! primitives built on them.
//!
//! Every [`TorusPoint`] is stored in the chart that fixes the last
//! coordinate to zero, so two points are equal exactly when their stored
//! coordinates are equal. The max-plus semiring element `-inf` never
//! appears at runtime; all coordinates are finite.

use std::hash::{Hash, Hasher};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A point of `R^e / R1` in canonical form (last coordinate is `0`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TorusPoint {
    coords: Vec<f64>,
}

impl TorusPoint {
    /// Canonicalizes `raw` by subtracting its last coordinate.
    pub fn new(raw: &[f64]) -> Result<Self> {
        normalize(raw)
    }

    /// The origin `(0, ..., 0)` of dimension `e`.
    pub fn zero(e: usize) -> Result<Self> {
        if e < 2 {
            return Err(Error::invalid(format!("dimension must be >= 2, got {e}")));
        }
        Ok(TorusPoint { coords: vec![0.0; e] })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// The first `e - 1` coordinates, i.e. the point in `R^{e-1}`.
    pub fn chart(&self) -> &[f64] {
        &self.coords[..self.coords.len() - 1]
    }

    /// Builds a point from chart coordinates `(x_1, ..., x_{e-1})`.
    pub fn from_chart(chart: &[f64]) -> Result<Self> {
        let mut raw = chart.to_vec();
        raw.push(0.0);
        normalize(&raw)
    }

    /// `self + other`, canonicalized.
    pub fn translate(&self, other: &TorusPoint) -> Result<Self> {
        check_dims(self, other)?;
        let raw: Vec<f64> = self.coords.iter().zip(&other.coords).map(|(a, b)| a + b).collect();
        normalize(&raw)
    }

    /// Componentwise `self - other` in canonical coordinates.
    pub fn residual(&self, other: &TorusPoint) -> Result<Vec<f64>> {
        check_dims(self, other)?;
        Ok(self.coords.iter().zip(&other.coords).map(|(a, b)| a - b).collect())
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

impl Eq for TorusPoint {}

impl Hash for TorusPoint {
    fn hash<H: Hasher>(&self, state: &mut H) {
        for c in &self.coords {
            c.to_bits().hash(state);
        }
    }
}

impl TryFrom<Vec<f64>> for TorusPoint {
    type Error = Error;

    fn try_from(raw: Vec<f64>) -> Result<Self> {
        normalize(&raw)
    }
}

impl From<TorusPoint> for Vec<f64> {
    fn from(p: TorusPoint) -> Self {
        p.coords
    }
}

fn check_dims(a: &TorusPoint, b: &TorusPoint) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(())
}

/// Subtracts the last coordinate from every coordinate.
pub fn normalize(raw: &[f64]) -> Result<TorusPoint> {
    if raw.len() < 2 {
        return Err(Error::invalid(format!("torus points need at least 2 coordinates, got {}", raw.len())));
    }
    if let Some(pos) = raw.iter().position(|x| !x.is_finite()) {
        return Err(Error::invalid(format!("coordinate {pos} is not finite")));
    }
    let last = raw[raw.len() - 1];
    // `+ 0.0` folds -0.0 into +0.0 so bitwise hashing agrees with equality.
    let coords = raw.iter().map(|x| (x - last) + 0.0).collect();
    Ok(TorusPoint { coords })
}

/// Tropical distance `max_i(v_i - w_i) - min_i(v_i - w_i)`.
pub fn trop_distance(v: &TorusPoint, w: &TorusPoint) -> Result<f64> {
    check_dims(v, w)?;
    Ok(distance_unchecked(&v.coords, &w.coords))
}

/// Same as [`trop_distance`] on raw slices of equal length. Invariant under
/// adding a constant to either argument.
pub fn distance_unchecked(v: &[f64], w: &[f64]) -> f64 {
    debug_assert_eq!(v.len(), w.len());
    let mut hi = f64::NEG_INFINITY;
    let mut lo = f64::INFINITY;
    for (a, b) in v.iter().zip(w) {
        let d = a - b;
        hi = hi.max(d);
        lo = lo.min(d);
    }
    hi - lo
}

/// Norm `max(v) - min(v)` of a single vector, i.e. its distance to the origin.
pub fn trop_norm(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    hi - lo
}

fn check_index(v: &[f64], i: usize) -> Result<()> {
    if i >= v.len() {
        return Err(Error::IndexOutOfRange { index: i, dim: v.len() });
    }
    Ok(())
}

/// One-sided directional derivative of `d_tr(x, y)` along `+E_i`, where
/// `v = x - y`: `1` if `v_i` is a (possibly tied) maximum, `-1` if it is the
/// strict unique minimum, `0` otherwise. `i` is zero-based.
pub fn phi(v: &[f64], i: usize) -> Result<i8> {
    phi_tol(v, i, 0.0)
}

/// [`phi`] with values within `tol` of each other treated as tied.
pub fn phi_tol(v: &[f64], i: usize, tol: f64) -> Result<i8> {
    check_index(v, i)?;
    Ok(phi_signed(v, i, tol, 1.0))
}

// `sign = -1.0` evaluates phi(-v, i) without allocating.
fn phi_signed(v: &[f64], i: usize, tol: f64, sign: f64) -> i8 {
    let vi = sign * v[i];
    if v.iter().all(|&vj| vi >= sign * vj - tol) {
        return 1;
    }
    let unique_min = v.iter().enumerate().all(|(j, &vj)| j == i || vi < sign * vj - tol);
    if unique_min {
        -1
    } else {
        0
    }
}

/// `phi(v, i) + phi(-v, i)`: `2` when `v` is the zero vector, `1` when `v_i`
/// is a non-unique maximizer or minimizer, `0` otherwise. Measures the kink of
/// `d_tr` along coordinate `i`.
pub fn kink(v: &[f64], i: usize) -> Result<i8> {
    kink_tol(v, i, 0.0)
}

pub fn kink_tol(v: &[f64], i: usize, tol: f64) -> Result<i8> {
    check_index(v, i)?;
    Ok(phi_signed(v, i, tol, 1.0) + phi_signed(v, i, tol, -1.0))
}

fn check_ball_args(e: usize, r: f64) -> Result<()> {
    if e < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {e}")));
    }
    if !(r >= 0.0) || !r.is_finite() {
        return Err(Error::invalid(format!("radius must be finite and >= 0, got {r}")));
    }
    Ok(())
}

/// Volume `e * r^(e-1)` of the tropical ball of radius `r` in `R^e / R1`.
pub fn ball_volume(e: usize, r: f64) -> Result<f64> {
    check_ball_args(e, r)?;
    Ok(e as f64 * r.powi(e as i32 - 1))
}

/// Surface area `e (e-1) r^(e-2)` of the tropical sphere of radius `r`.
pub fn sphere_area(e: usize, r: f64) -> Result<f64> {
    check_ball_args(e, r)?;
    Ok(e as f64 * (e as f64 - 1.0) * r.powi(e as i32 - 2))
}

/// `ln(e! * sigma^(e-1))`, the log normalizer of the tropical Laplace density.
pub fn ln_normalizing_constant(e: usize, sigma: f64) -> Result<f64> {
    if e < 2 {
        return Err(Error::invalid(format!("dimension must be >= 2, got {e}")));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    let ln_fact: f64 = (2..=e).map(|k| (k as f64).ln()).sum();
    Ok(ln_fact + (e as f64 - 1.0) * sigma.ln())
}

/// `e! * sigma^(e-1)`. May overflow to infinity for large `e` and `sigma`;
/// use [`ln_normalizing_constant`] there.
pub fn normalizing_constant(e: usize, sigma: f64) -> Result<f64> {
    ln_normalizing_constant(e, sigma)?;
    let fact: f64 = (2..=e).map(|k| k as f64).product();
    Ok(fact * sigma.powi(e as i32 - 1))
}

/// `d_tr(x, omega) - c`.
pub fn tropical_inner_product(omega: &TorusPoint, x: &TorusPoint, c: f64) -> Result<f64> {
    Ok(trop_distance(x, omega)? - c)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(raw: &[f64]) -> TorusPoint {
        TorusPoint::new(raw).unwrap()
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(p(&[5.0, 4.0, 3.0]).coords(), &[2.0, 1.0, 0.0]);
        assert_eq!(p(&[0.0, 0.0, 0.0]).coords(), &[0.0, 0.0, 0.0]);
        let v = p(&[1.6, 2.0, 0.6, 2.0, 1.6, 2.0]);
        let expect = [-0.4, 0.0, -1.4, 0.0, -0.4, 0.0];
        for (a, b) in v.coords().iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let again = TorusPoint::new(v.coords()).unwrap();
        assert_eq!(again, v);
    }

    #[test]
    fn normalize_rejects_bad_input() {
        assert!(TorusPoint::new(&[1.0]).is_err());
        assert!(TorusPoint::new(&[1.0, f64::NAN]).is_err());
        assert!(TorusPoint::new(&[f64::INFINITY, 0.0]).is_err());
    }

    #[test]
    fn distance_examples() {
        let u = p(&[2.0, 2.0, 2.0, 1.4, 1.4, 1.0]);
        let v = p(&[1.6, 2.0, 0.6, 2.0, 1.6, 2.0]);
        assert!((trop_distance(&u, &v).unwrap() - 2.4).abs() < 1e-12);
        assert_eq!(trop_distance(&u, &u).unwrap(), 0.0);
        let shifted = p(&[3.0, 3.0, 3.0, 2.4, 2.4, 2.0]);
        assert_eq!(trop_distance(&shifted, &u).unwrap(), 0.0);
        assert_eq!(trop_distance(&p(&[0.0, 0.0, 0.0]), &p(&[3.0, 2.0, 0.0])).unwrap(), 3.0);
        assert!(trop_distance(&u, &p(&[0.0, 0.0, 0.0])).is_err());
    }

    #[test]
    fn phi_examples() {
        let v = [2.0, 0.0, 1.0];
        assert_eq!(phi(&v, 0).unwrap(), 1);
        assert_eq!(phi(&v, 1).unwrap(), -1);
        assert_eq!(phi(&v, 2).unwrap(), 0);
        assert!(phi(&v, 3).is_err());
        // tied maxima both report 1, a tied minimum reports 0
        assert_eq!(phi(&[1.0, 1.0, 0.0], 1).unwrap(), 1);
        assert_eq!(phi(&[1.0, 0.0, 0.0], 1).unwrap(), 0);
    }

    #[test]
    fn phi_tolerance() {
        let v = [1.0, 1.0 - 1e-12, 0.0];
        assert_eq!(phi(&v, 1).unwrap(), 0);
        assert_eq!(phi_tol(&v, 1, 1e-9).unwrap(), 1);
    }

    #[test]
    fn kink_examples() {
        for i in 0..3 {
            assert_eq!(kink(&[0.0, 0.0, 0.0], i).unwrap(), 2);
        }
        assert_eq!(kink(&[1.0, 1.0, 0.0], 0).unwrap(), 1);
        assert_eq!(kink(&[2.0, 0.0, 1.0], 2).unwrap(), 0);
        assert_eq!(kink(&[2.0, 0.0, 1.0], 0).unwrap(), 0);
        assert!(kink(&[2.0, 0.0], 2).is_err());
    }

    #[test]
    fn ball_and_sphere() {
        assert_eq!(ball_volume(3, 1.0).unwrap(), 3.0);
        assert_eq!(sphere_area(3, 2.0).unwrap(), 12.0);
        for e in 2..10 {
            assert_eq!(ball_volume(e, 0.0).unwrap(), 0.0);
        }
        assert!(ball_volume(1, 1.0).is_err());
        assert!(ball_volume(3, -1.0).is_err());
    }

    #[test]
    fn normalizing_constant_examples() {
        assert_eq!(normalizing_constant(3, 1.0).unwrap(), 6.0);
        assert_eq!(normalizing_constant(3, 2.0).unwrap(), 24.0);
        assert!(normalizing_constant(3, 0.0).is_err());
        assert!(normalizing_constant(3, -1.0).is_err());
        assert!(normalizing_constant(60, 1.0).unwrap().is_finite());
    }

    #[test]
    fn ln_normalizing_constant_matches_stirling() {
        // Stirling series for ln(45!) = ln Gamma(46), independent of the
        // log-sum used by the implementation.
        let n = 46.0_f64;
        let stirling = (n - 0.5) * n.ln() - n + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * n)
            - 1.0 / (360.0 * n.powi(3))
            + 1.0 / (1260.0 * n.powi(5))
            - 1.0 / (1680.0 * n.powi(7));
        let got = ln_normalizing_constant(45, 1.0).unwrap();
        assert!(((got - stirling) / stirling).abs() < 1e-10, "{got} vs {stirling}");
    }

    #[test]
    fn inner_product_examples() {
        let x = p(&[3.0, 2.0, 0.0]);
        let o = p(&[0.0, 0.0, 0.0]);
        assert_eq!(tropical_inner_product(&x, &x, 0.0).unwrap(), 0.0);
        assert_eq!(tropical_inner_product(&o, &x, 3.0).unwrap(), 0.0);
        assert_eq!(tropical_inner_product(&o, &x, 1.0).unwrap(), 2.0);
    }

    #[test]
    fn hashing_agrees_with_equality() {
        use std::collections::HashSet;
        let mut set = HashSet::new();
        set.insert(p(&[-0.0, 1.0, 0.0]));
        assert!(set.contains(&p(&[0.0, 1.0, 0.0])));
        assert!(set.contains(&p(&[5.0, 6.0, 5.0])));
    }
}
