//! Two-class clustering by the sign of the leading right singular vector.

use nalgebra::DVector;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::leading_singular_subspaces;
use crate::montecarlo::{trial_rng, Estimate, Trials};
use crate::{Error, Matrix, Result};

/// Class labels in `{−1, +1}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVector(Vec<i8>);

impl LabelVector {
    pub fn new(labels: Vec<i8>) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::invalid("label vector is empty"));
        }
        if let Some(pos) = labels.iter().position(|l| *l != 1 && *l != -1) {
            return Err(Error::invalid(format!("label {} at position {pos} is not ±1", labels[pos])));
        }
        Ok(Self(labels))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.0
    }

    pub fn negated(&self) -> Self {
        Self(self.0.iter().map(|l| -l).collect())
    }
}

/// `Y_i = l_i μ + Z_i` with `P(l_i = +1) = ρ`.
#[derive(Clone, Debug, PartialEq)]
pub struct ClusterModel {
    pub n: usize,
    pub p: usize,
    pub mu: DVector<f64>,
    pub rho: f64,
}

impl ClusterModel {
    pub fn new(n: usize, mu: DVector<f64>, rho: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("need at least two samples"));
        }
        if mu.is_empty() || mu.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("mean vector must be non-empty and finite"));
        }
        if !(rho > 0.0 && rho <= 1.0) {
            return Err(Error::invalid(format!("rho must lie in (0, 1], got {rho}")));
        }
        Ok(Self { n, p: mu.len(), mu, rho })
    }

    /// `‖μ‖₂`
    pub fn signal(&self) -> f64 {
        self.mu.norm()
    }
}

#[derive(Clone, Debug)]
pub struct TwoClassSample {
    /// `p × n`, one observation per column.
    pub y: Matrix,
    pub labels: LabelVector,
}

pub fn generate_two_class<R: Rng + ?Sized>(model: &ClusterModel, rng: &mut R) -> TwoClassSample {
    let labels: Vec<i8> = (0..model.n).map(|_| if rng.random::<f64>() < model.rho { 1 } else { -1 }).collect();
    let mut y = Matrix::from_fn(model.p, model.n, |_, _| rng.sample(StandardNormal));
    for (j, l) in labels.iter().enumerate() {
        y.column_mut(j).axpy(f64::from(*l), &model.mu, 1.0);
    }
    TwoClassSample { y, labels: LabelVector(labels) }
}

/// `l̂ = sgn(v̂)` for the leading right singular vector `v̂` of `y`, with `sgn(0) = +1`.
pub fn pca_cluster(y: &Matrix) -> Result<LabelVector> {
    if y.iter().all(|v| *v == 0.0) {
        return Err(Error::invalid("cannot cluster an all-zero matrix"));
    }
    let lead = leading_singular_subspaces(y, 1)?;
    let v = lead.v.as_matrix().column(0);
    Ok(LabelVector(v.iter().map(|x| if *x < 0.0 { -1 } else { 1 }).collect()))
}

/// Fraction of disagreements, minimised over the global sign flip.
pub fn misclassification(l: &LabelVector, l_hat: &LabelVector) -> Result<f64> {
    if l.len() != l_hat.len() {
        return Err(Error::ShapeMismatch(format!("label vectors have lengths {} and {}", l.len(), l_hat.len())));
    }
    let d = l.0.iter().zip(&l_hat.0).filter(|(a, b)| a != b).count();
    Ok(d.min(l.len() - d) as f64 / l.len() as f64)
}

/// One `(p, t, ρ)` setting of the clustering study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterSetting {
    pub p: usize,
    pub t: f64,
    pub rho: f64,
    /// Draw the mean direction once per setting instead of once per trial.
    pub fix_mu: bool,
}

impl ClusterSetting {
    pub fn new(p: usize, t: f64, rho: f64) -> Self {
        Self { p, t, rho, fix_mu: false }
    }

    /// `‖μ‖ = t (p/n)^{1/4}`
    pub fn signal(&self, n: usize) -> f64 {
        self.t * (self.p as f64 / n as f64).powf(0.25)
    }
}

fn unit_direction<R: Rng + ?Sized>(p: usize, rng: &mut R) -> DVector<f64> {
    let g: DVector<f64> = DVector::from_fn(p, |_, _| rng.sample(StandardNormal));
    let norm = g.norm();
    g / norm
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ClusterRow {
    pub n: usize,
    pub misclassification: Estimate,
}

/// Mean misclassification for each sample size in `n_list`.
///
/// Sample size `n_list[k]` uses trial row `trials.row + k`.
pub fn clustering_study(setting: &ClusterSetting, n_list: &[usize], trials: &Trials) -> Result<Vec<ClusterRow>> {
    if setting.p == 0 || !(setting.t >= 0.0) {
        return Err(Error::invalid("need p ≥ 1 and t ≥ 0"));
    }
    let fixed =
        setting.fix_mu.then(|| unit_direction(setting.p, &mut trial_rng(trials.master_seed, trials.row, u64::MAX)));
    n_list
        .iter()
        .enumerate()
        .map(|(k, &n)| {
            let scale = setting.signal(n);
            let rates = trials.row(trials.row + k as u64).run(|_, rng| {
                let dir = match &fixed {
                    Some(d) => d.clone(),
                    None => unit_direction(setting.p, rng),
                };
                let model = ClusterModel::new(n, dir * scale, setting.rho)?;
                let sample = generate_two_class(&model, rng);
                misclassification(&sample.labels, &pca_cluster(&sample.y)?)
            })?;
            Ok(ClusterRow { n, misclassification: Estimate::from_samples(&rates) })
        })
        .collect()
}
