//! Exact tropical Laplace sampling, radius laws, and coalescent simulation.

mod coalescent;

pub use coalescent::{
    msc_gene_tree, simulate_coalescent_dataset, species_pair, yule_tree, CoalescentConfig, SpeciesTree,
};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::special::gamma_p;
use crate::tropical::{ln_normalizing_constant, trop_distance, TorusPoint};

/// Density `exp(-d_tr(x, center) / sigma) / (e! sigma^(e-1))` on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TropicalLaplace {
    center: TorusPoint,
    sigma: f64,
}

impl TropicalLaplace {
    pub fn new(center: TorusPoint, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::invalid(format!("sigma must be positive and finite, got {sigma}")));
        }
        if center.dim() < 3 {
            return Err(Error::invalid(format!("dimension must be >= 3, got {}", center.dim())));
        }
        Ok(TropicalLaplace { center, sigma })
    }

    pub fn center(&self) -> &TorusPoint {
        &self.center
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    pub fn ln_density(&self, x: &TorusPoint) -> Result<f64> {
        let d = trop_distance(x, &self.center)?;
        Ok(-d / self.sigma - ln_normalizing_constant(self.dim(), self.sigma)?)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> TorusPoint {
        sample_tropical_laplace(self, rng)
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<TorusPoint> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

/// Unit exponential via inversion; `1 - U` lies in `(0, 1]`.
pub(crate) fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    -(1.0 - rng.random::<f64>()).ln()
}

/// Draws the radius `r ~ sigma * Gamma(e - 1)`, then a uniform point of the
/// tropical sphere of radius `r`: an ordered pair `(i, j)` picks the face
/// where coordinate `i` is the minimum `0` and coordinate `j` the maximum `r`,
/// and the other coordinates are uniform on `[0, r]`.
pub fn sample_tropical_laplace<R: Rng + ?Sized>(dist: &TropicalLaplace, rng: &mut R) -> TorusPoint {
    let e = dist.dim();
    let r = dist.sigma * (0..e - 1).map(|_| exp1(rng)).sum::<f64>();
    let lo = rng.random_range(0..e);
    let mut hi = rng.random_range(0..e - 1);
    if hi >= lo {
        hi += 1;
    }
    let c = dist.center.coords();
    let raw: Vec<f64> = (0..e)
        .map(|k| {
            let v = if k == lo {
                0.0
            } else if k == hi {
                r
            } else {
                r * rng.random::<f64>()
            };
            v + c[k]
        })
        .collect();
    TorusPoint::new(&raw).expect("finite sample")
}

/// Which space the radius law refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Geometry {
    /// Tropical torus, `n = e - 1` degrees of freedom.
    Tropical,
    /// Euclidean `R^e`, `n = e`.
    Euclidean,
}

impl Geometry {
    pub fn degrees(self, e: usize) -> usize {
        match self {
            Geometry::Tropical => e - 1,
            Geometry::Euclidean => e,
        }
    }
}

/// `P(d <= t)` when `d^i ~ i sigma^i Gamma(n / i)`: the Laplace law for
/// `i = 1`, the Gaussian (`sigma * sqrt(chi^2_n)`) law for `i = 2`.
pub fn radius_cdf(e: usize, i: u32, sigma: f64, t: f64, geometry: Geometry) -> Result<f64> {
    if !(i == 1 || i == 2) {
        return Err(Error::invalid(format!("radius law exponent must be 1 or 2, got {i}")));
    }
    if e < 2 || (geometry == Geometry::Tropical && e < 3) {
        return Err(Error::invalid(format!("dimension {e} too small for the radius law")));
    }
    if !(sigma > 0.0) {
        return Err(Error::invalid(format!("sigma must be positive, got {sigma}")));
    }
    if t.is_nan() || t < 0.0 {
        return Err(Error::invalid(format!("radius must be >= 0, got {t}")));
    }
    let fi = f64::from(i);
    let n = geometry.degrees(e) as f64;
    gamma_p(n / fi, t.powi(i as i32) / (fi * sigma.powi(i as i32)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn radius_cdf_values() {
        assert_eq!(radius_cdf(3, 1, 1.0, 0.0, Geometry::Tropical).unwrap(), 0.0);
        let c = 5.0 / 4.0 * 2.0 * 5f64.ln();
        assert!((radius_cdf(3, 1, 1.0, c, Geometry::Tropical).unwrap() - 0.9101).abs() < 5e-5);
        let x = 0.80472;
        let closed = 1.0 - (1.0 + x) * f64::exp(-x);
        assert!((radius_cdf(3, 1, 1.0, x, Geometry::Tropical).unwrap() - closed).abs() < 1e-14);
        assert!((closed - 0.1929).abs() < 5e-5);
        assert!(radius_cdf(3, 3, 1.0, 1.0, Geometry::Tropical).is_err());
    }

    #[test]
    fn gaussian_law_matches_chi() {
        // e = 2 Euclidean, i = 2: d^2 / sigma^2 ~ chi^2_2, so P(d <= t) = 1 - exp(-t^2 / (2 sigma^2)).
        let (s, t) = (1.5, 2.0);
        let want = 1.0 - f64::exp(-t * t / (2.0 * s * s));
        assert!((radius_cdf(2, 2, s, t, Geometry::Euclidean).unwrap() - want).abs() < 1e-14);
    }

    #[test]
    fn sample_lies_on_sphere_of_drawn_radius() {
        let d = TropicalLaplace::new(TorusPoint::new(&[3.0, 2.0, 0.0]).unwrap(), 1.0).unwrap();
        let mut rng = stream(3, "t", 0);
        for _ in 0..1000 {
            let x = d.sample(&mut rng);
            let res = x.residual(d.center()).unwrap();
            let r = trop_distance(&x, d.center()).unwrap();
            let hi = res.iter().cloned().fold(f64::MIN, f64::max);
            let lo = res.iter().cloned().fold(f64::MAX, f64::min);
            assert!((hi - lo - r).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_sigma_stays_at_center() {
        let c = TorusPoint::new(&[0.3, -1.0, 2.0, 0.0]).unwrap();
        let d = TropicalLaplace::new(c.clone(), 1e-12).unwrap();
        let mut rng = stream(4, "t", 0);
        for _ in 0..100 {
            assert!(trop_distance(&d.sample(&mut rng), &c).unwrap() <= 1e-9);
        }
    }

    #[test]
    fn density_integrates_to_one_at_e3() {
        // Midpoint rule over the chart [-L, L]^2 with L = 30 sigma.
        let d = TropicalLaplace::new(TorusPoint::zero(3).unwrap(), 0.7).unwrap();
        let (l, k) = (21.0, 1400);
        let h = 2.0 * l / k as f64;
        let mut total = 0.0;
        for a in 0..k {
            for b in 0..k {
                let x = TorusPoint::from_chart(&[-l + (a as f64 + 0.5) * h, -l + (b as f64 + 0.5) * h]).unwrap();
                total += d.ln_density(&x).unwrap().exp() * h * h;
            }
        }
        assert!((total - 1.0).abs() < 1e-3, "{total}");
    }
}
