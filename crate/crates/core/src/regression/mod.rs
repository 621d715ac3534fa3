//! Tropical logistic regression: one-species (shared center, two
//! dispersions), two-species (two centers, shared dispersion), and a
//! classical linear baseline in chart coordinates.
//!
//! Every model exposes the log-odds `h(x)` of class 1; `classify(x)` is
//! `h(x) >= 0`.

mod fit;
pub mod logistic;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use fit::{
    fit_classical_baseline, fit_one_species, fit_one_species_with_prior, fit_two_species, fit_two_species_with_prior,
    two_species_score_derivative,
};
pub use logistic::sigmoid;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::tropical::{trop_distance, TorusPoint};

fn check_prior(r: f64) -> Result<f64> {
    if !(r > 0.0 && r < 1.0) {
        return Err(Error::invalid(format!("prior must lie in (0, 1), got {r}")));
    }
    Ok((r / (1.0 - r)).ln())
}

fn check_sigma(s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(Error::invalid(format!("sigma must be positive and finite, got {s}")));
    }
    Ok(())
}

/// Log-odds of class 1 for tropical Laplace classes centered at `omega0`,
/// `omega1` with dispersions `sigma0`, `sigma1` and class-1 prior `prior`:
/// `d0/sigma0 - d1/sigma1 + (e-1) ln(sigma0/sigma1) + ln(r/(1-r))`.
pub fn h_general(
    x: &TorusPoint,
    omega0: &TorusPoint,
    omega1: &TorusPoint,
    sigma0: f64,
    sigma1: f64,
    prior: f64,
) -> Result<f64> {
    check_sigma(sigma0)?;
    check_sigma(sigma1)?;
    let offset = check_prior(prior)?;
    let e = x.dim() as f64;
    let d0 = trop_distance(x, omega0)?;
    let d1 = trop_distance(x, omega1)?;
    Ok(d0 / sigma0 - d1 / sigma1 + (e - 1.0) * (sigma0 / sigma1).ln() + offset)
}

/// Shared center with two dispersions. `sigma0 <= sigma1` always; when
/// `swapped` is set, class 0 is the dispersed class and class 1 the tight one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OneSpeciesModel {
    pub omega: TorusPoint,
    pub sigma0: f64,
    pub sigma1: f64,
    pub swapped: bool,
    pub prior: f64,
}

impl OneSpeciesModel {
    /// Builds the model from per-class dispersions, ordering them canonically.
    pub fn new(omega: TorusPoint, sigma_class0: f64, sigma_class1: f64, prior: f64) -> Result<Self> {
        check_sigma(sigma_class0)?;
        check_sigma(sigma_class1)?;
        check_prior(prior)?;
        let swapped = sigma_class0 > sigma_class1;
        let (sigma0, sigma1) =
            if swapped { (sigma_class1, sigma_class0) } else { (sigma_class0, sigma_class1) };
        Ok(OneSpeciesModel { omega, sigma0, sigma1, swapped, prior })
    }

    pub fn dim(&self) -> usize {
        self.omega.dim()
    }

    /// `(sigma of class 0, sigma of class 1)`.
    pub fn class_sigmas(&self) -> (f64, f64) {
        if self.swapped {
            (self.sigma1, self.sigma0)
        } else {
            (self.sigma0, self.sigma1)
        }
    }

    /// `1/sigma0 - 1/sigma1 >= 0`.
    pub fn lambda(&self) -> f64 {
        1.0 / self.sigma0 - 1.0 / self.sigma1
    }

    /// Radius of the decision boundary at prior 1/2:
    /// `sigma0 sigma1 (e-1) ln(sigma1/sigma0) / (sigma1 - sigma0)`.
    pub fn threshold(&self) -> f64 {
        let n = (self.dim() - 1) as f64;
        if self.sigma1 == self.sigma0 {
            n * self.sigma0
        } else {
            self.sigma0 * self.sigma1 * n * (self.sigma1 / self.sigma0).ln() / (self.sigma1 - self.sigma0)
        }
    }

    /// `lambda (d_tr(x, omega) - c)`, negated when the classes are swapped,
    /// plus the prior log-odds.
    pub fn h(&self, x: &TorusPoint) -> Result<f64> {
        let d = trop_distance(x, &self.omega)?;
        let sign = if self.swapped { -1.0 } else { 1.0 };
        Ok(sign * self.lambda() * (d - self.threshold()) + check_prior(self.prior)?)
    }

    /// The same classifier with class labels exchanged.
    pub fn swap_classes(&self) -> Self {
        OneSpeciesModel { swapped: !self.swapped, prior: 1.0 - self.prior, ..self.clone() }
    }
}

/// Two centers with one shared dispersion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoSpeciesModel {
    pub omega0: TorusPoint,
    pub omega1: TorusPoint,
    pub sigma: f64,
    pub prior: f64,
}

impl TwoSpeciesModel {
    pub fn new(omega0: TorusPoint, omega1: TorusPoint, sigma: f64, prior: f64) -> Result<Self> {
        check_sigma(sigma)?;
        check_prior(prior)?;
        if omega0.dim() != omega1.dim() {
            return Err(Error::DimensionMismatch { expected: omega0.dim(), found: omega1.dim() });
        }
        if omega0 == omega1 {
            return Err(Error::Degenerate("the two centers coincide; use the one-species model".into()));
        }
        Ok(TwoSpeciesModel { omega0, omega1, sigma, prior })
    }

    pub fn dim(&self) -> usize {
        self.omega0.dim()
    }

    /// `(d_tr(x, omega0) - d_tr(x, omega1)) / sigma` plus the prior log-odds.
    pub fn h(&self, x: &TorusPoint) -> Result<f64> {
        let d0 = trop_distance(x, &self.omega0)?;
        let d1 = trop_distance(x, &self.omega1)?;
        Ok((d0 - d1) / self.sigma + check_prior(self.prior)?)
    }
}

/// `h(x) = weights . chart(x) + intercept`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
}

impl ClassicalModel {
    pub fn dim(&self) -> usize {
        self.weights.len() + 1
    }

    pub fn h(&self, x: &TorusPoint) -> Result<f64> {
        if x.dim() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        Ok(self.intercept + x.chart().iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    OneSpecies(OneSpeciesModel),
    TwoSpecies(TwoSpeciesModel),
    Classical(ClassicalModel),
}

impl Model {
    pub fn dim(&self) -> usize {
        match self {
            Model::OneSpecies(m) => m.dim(),
            Model::TwoSpecies(m) => m.dim(),
            Model::Classical(m) => m.dim(),
        }
    }

    pub fn h(&self, x: &TorusPoint) -> Result<f64> {
        match self {
            Model::OneSpecies(m) => m.h(x),
            Model::TwoSpecies(m) => m.h(x),
            Model::Classical(m) => m.h(x),
        }
    }

    /// `sigmoid(h(x))`, the probability of class 1.
    pub fn predict_proba(&self, x: &TorusPoint) -> Result<f64> {
        self.h(x).map(sigmoid)
    }

    pub fn classify(&self, x: &TorusPoint) -> Result<u8> {
        self.h(x).map(|h| u8::from(h >= 0.0))
    }

    pub fn scores(&self, ds: &Dataset) -> Result<Vec<f64>> {
        ds.points().iter().map(|x| self.h(x)).collect()
    }
}

impl From<OneSpeciesModel> for Model {
    fn from(m: OneSpeciesModel) -> Self {
        Model::OneSpecies(m)
    }
}

impl From<TwoSpeciesModel> for Model {
    fn from(m: TwoSpeciesModel) -> Self {
        Model::TwoSpecies(m)
    }
}

impl From<ClassicalModel> for Model {
    fn from(m: ClassicalModel) -> Self {
        Model::Classical(m)
    }
}

/// Mean per-sample log-likelihood `(1/N) sum y ln p + (1-y) ln(1-p)`.
pub fn log_likelihood(model: &Model, ds: &Dataset) -> Result<f64> {
    if ds.is_empty() {
        return Err(Error::Empty("dataset"));
    }
    let mut total = 0.0;
    for (x, &y) in ds.points().iter().zip(ds.labels()) {
        total += logistic::log_lik_term(f64::from(y), model.h(x)?);
    }
    Ok(total / ds.len() as f64)
}

const CHART: &str = "canonical chart: last coordinate fixed to 0";

/// On-disk form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format: String,
    pub chart: String,
    pub e: usize,
    pub leaf_order: Option<Vec<String>>,
    pub model: Model,
}

impl ModelFile {
    pub fn new(model: Model, leaf_order: Option<Vec<String>>) -> Self {
        ModelFile { format: "troplr-model/1".into(), chart: CHART.into(), e: model.dim(), leaf_order, model }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let f: ModelFile = serde_json::from_str(text)?;
        if f.e != f.model.dim() {
            return Err(Error::DimensionMismatch { expected: f.e, found: f.model.dim() });
        }
        Ok(f)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
