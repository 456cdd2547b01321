//! Low-rank matrix denoising from `Y = X + Z`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::{haar_orthonormal, leading_singular_subspaces, sin_theta, singular_values, svd};
use crate::montecarlo::{summarize, Estimate, Trials};
use crate::{Error, Matrix, OrthonormalBasis, Result};

/// Unit-variance noise distributions.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum NoiseKind {
    #[default]
    Gaussian,
    Rademacher,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::Gaussian => "gaussian",
            NoiseKind::Rademacher => "rademacher",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "gaussian" | "normal" => Ok(NoiseKind::Gaussian),
            "rademacher" => Ok(NoiseKind::Rademacher),
            other => Err(Error::Parse(format!("unknown noise kind `{other}`"))),
        }
    }

    pub fn sample<R: Rng + ?Sized>(self, p1: usize, p2: usize, rng: &mut R) -> Matrix {
        match self {
            NoiseKind::Gaussian => Matrix::from_fn(p1, p2, |_, _| rng.sample(StandardNormal)),
            NoiseKind::Rademacher => Matrix::from_fn(p1, p2, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }),
        }
    }
}

/// Dimensions and signal strength of a denoising experiment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DenoisingSetting {
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    pub t: f64,
    pub noise: NoiseKind,
}

impl DenoisingSetting {
    pub fn new(p1: usize, p2: usize, r: usize, t: f64) -> Self {
        Self { p1, p2, r, t, noise: NoiseKind::Gaussian }
    }

    pub fn with_noise(mut self, noise: NoiseKind) -> Self {
        self.noise = noise;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.r == 0 || self.r > self.p1.min(self.p2) {
            return Err(Error::invalid(format!(
                "rank r = {} must satisfy 1 ≤ r ≤ min(p1, p2) = {}",
                self.r,
                self.p1.min(self.p2)
            )));
        }
        if !(self.t.is_finite() && self.t > 0.0) {
            return Err(Error::invalid(format!("t must be positive and finite, got {}", self.t)));
        }
        Ok(())
    }

    /// `min(p₂(t² + p₁)/t⁴, 1)`
    pub fn theoretical_v(&self) -> f64 {
        let t2 = self.t * self.t;
        (self.p2 as f64 * (t2 + self.p1 as f64) / (t2 * t2)).min(1.0)
    }

    /// `min(p₁(t² + p₂)/t⁴, 1)`
    pub fn theoretical_u(&self) -> f64 {
        let t2 = self.t * self.t;
        (self.p1 as f64 * (t2 + self.p2 as f64) / (t2 * t2)).min(1.0)
    }
}

/// A rank-`r` signal with its singular bases.
#[derive(Clone, Debug)]
pub struct DenoisingModel {
    pub setting: DenoisingSetting,
    pub x: Matrix,
    pub u: OrthonormalBasis,
    pub v: OrthonormalBasis,
}

impl DenoisingModel {
    /// `X = t·UVᵀ` with Haar-random `U`, `V`.
    pub fn haar<R: Rng + ?Sized>(setting: DenoisingSetting, rng: &mut R) -> Result<Self> {
        setting.validate()?;
        let u = haar_orthonormal(setting.p1, setting.r, rng)?;
        let v = haar_orthonormal(setting.p2, setting.r, rng)?;
        let x = u.as_matrix() * v.as_matrix().transpose() * setting.t;
        Ok(Self { setting, x, u, v })
    }

    /// Wraps a given signal, which must have numerical rank exactly `r`.
    pub fn from_signal(x: Matrix, r: usize, noise: NoiseKind) -> Result<Self> {
        let (p1, p2) = x.shape();
        let dec = svd(&x)?;
        let (s_r, s_next) = (dec.sigma(r), dec.sigma(r + 1));
        if r == 0 || r > p1.min(p2) || !(s_r > 0.0) || s_next / s_r >= 1e-10 {
            return Err(Error::invalid(format!("signal does not have rank {r}")));
        }
        Ok(Self {
            setting: DenoisingSetting { p1, p2, r, t: s_r, noise },
            x,
            u: dec.u.columns(0, r),
            v: dec.v.columns(0, r),
        })
    }

    pub fn observe<R: Rng + ?Sized>(&self, rng: &mut R) -> Matrix {
        &self.x + self.setting.noise.sample(self.setting.p1, self.setting.p2, rng)
    }
}

/// Rank-`r` truncated SVD of the observation.
#[derive(Clone, Debug)]
pub struct SpectralEstimate {
    pub x_hat: Matrix,
    pub u_hat: OrthonormalBasis,
    pub v_hat: OrthonormalBasis,
}

pub fn spectral_denoise(y: &Matrix, r: usize) -> Result<SpectralEstimate> {
    let dec = svd(y)?;
    if r == 0 || r > dec.singular_values.len() {
        return Err(Error::invalid(format!("rank {r} out of range")));
    }
    let u_hat = dec.u.columns(0, r);
    let v_hat = dec.v.columns(0, r);
    let mut us = u_hat.as_matrix().clone();
    for j in 0..r {
        us.column_mut(j).scale_mut(dec.singular_values[j]);
    }
    let x_hat = us * v_hat.as_matrix().transpose();
    Ok(SpectralEstimate { x_hat, u_hat, v_hat })
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::invalid(format!("lambda must be finite and non-negative, got {lambda}")));
    }
    Ok(())
}

fn rebuild(y: &Matrix, shrink: impl Fn(f64) -> f64) -> Result<Matrix> {
    let mut dec = svd(y)?;
    dec.singular_values.iter_mut().for_each(|s| *s = shrink(*s));
    Ok(dec.reconstruct())
}

/// Soft thresholding `σᵢ ↦ max(σᵢ − λ, 0)`: minimiser of `½‖Y − X‖_F² + λ‖X‖_*`.
pub fn svt(y: &Matrix, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(y.clone());
    }
    rebuild(y, |s| (s - lambda).max(0.0))
}

/// Hard thresholding keeping `σᵢ` iff `σᵢ² > 2λ`: minimiser of `½‖Y − X‖_F² + λ·rank(X)`.
pub fn hsvt(y: &Matrix, lambda: f64) -> Result<Matrix> {
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Ok(y.clone());
    }
    rebuild(y, |s| if s * s > 2.0 * lambda { s } else { 0.0 })
}

/// Number of singular values kept by [`hsvt`].
pub fn hsvt_rank(y: &Matrix, lambda: f64) -> usize {
    singular_values(y).iter().filter(|s| *s * *s > 2.0 * lambda).count()
}

/// Threshold `√p₁ + √p₂`, the typical spectral norm of unit-variance noise.
pub fn lambda_star(p1: usize, p2: usize) -> f64 {
    (p1 as f64).sqrt() + (p2 as f64).sqrt()
}

/// `SVT_{λ*}(Y)` when `t² ≥ c·(p₁ + p₂)`, otherwise the zero matrix.
pub fn adaptive_estimator(y: &Matrix, t: f64, c_threshold: f64) -> Result<Matrix> {
    if !(t > 0.0 && c_threshold > 0.0) {
        return Err(Error::invalid("t and c_threshold must be positive"));
    }
    let (p1, p2) = y.shape();
    if t * t >= c_threshold * (p1 + p2) as f64 {
        svt(y, lambda_star(p1, p2))
    } else {
        Ok(Matrix::zeros(p1, p2))
    }
}

/// Mean squared sin-Θ losses of the spectral estimator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskSummary {
    pub u_sp: Estimate,
    pub v_sp: Estimate,
    pub u_fro: Estimate,
    pub v_fro: Estimate,
    pub theoretical_u: f64,
    pub theoretical_v: f64,
}

/// Squared losses `(‖sinΘ_U‖², ‖sinΘ_V‖², ‖sinΘ_U‖_F², ‖sinΘ_V‖_F²)` for one draw.
pub fn denoising_trial<R: Rng + ?Sized>(setting: &DenoisingSetting, rng: &mut R) -> Result<[f64; 4]> {
    let model = DenoisingModel::haar(*setting, rng)?;
    let y = model.observe(rng);
    let est = leading_singular_subspaces(&y, setting.r)?;
    let du = sin_theta(&model.u, &est.u)?;
    let dv = sin_theta(&model.v, &est.v)?;
    Ok([du.spectral.powi(2), dv.spectral.powi(2), du.frobenius.powi(2), dv.frobenius.powi(2)])
}

/// Monte-Carlo risk with a fresh signal and fresh noise in every trial.
pub fn denoising_risk(setting: &DenoisingSetting, trials: &Trials) -> Result<RiskSummary> {
    setting.validate()?;
    let rows = trials.run(|_, rng| denoising_trial(setting, rng))?;
    let [u_sp, v_sp, u_fro, v_fro] = summarize(&rows);
    Ok(RiskSummary {
        u_sp,
        v_sp,
        u_fro,
        v_fro,
        theoretical_u: setting.theoretical_u(),
        theoretical_v: setting.theoretical_v(),
    })
}

/// Fraction of trials in which [`adaptive_estimator`] returns the zero matrix.
pub fn adaptive_zero_rate(setting: &DenoisingSetting, c_threshold: f64, trials: &Trials) -> Result<f64> {
    setting.validate()?;
    let zeros = trials.run(|_, rng| {
        let model = DenoisingModel::haar(*setting, rng)?;
        let x_hat = adaptive_estimator(&model.observe(rng), setting.t, c_threshold)?;
        Ok(x_hat.iter().all(|v| *v == 0.0))
    })?;
    Ok(zeros.iter().filter(|z| **z).count() as f64 / zeros.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::gaussian_matrix;
    use nalgebra::DVector;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn diag(a: f64, b: f64) -> Matrix {
        Matrix::from_diagonal(&DVector::from_vec(vec![a, b]))
    }

    fn close(a: &Matrix, b: &Matrix, tol: f64) -> bool {
        (a - b).amax() <= tol
    }

    #[test]
    fn truncation_examples() {
        let est = spectral_denoise(&diag(3.0, 1.0), 1).unwrap();
        assert!(close(&est.x_hat, &diag(3.0, 0.0), 1e-12));

        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = gaussian_matrix(6, 2, &mut rng) * gaussian_matrix(2, 5, &mut rng);
        assert!(close(&spectral_denoise(&y, 2).unwrap().x_hat, &y, 1e-8));

        let y = gaussian_matrix(6, 5, &mut rng);
        let s = singular_values(&y);
        let resid = (&y - spectral_denoise(&y, 2).unwrap().x_hat).norm_squared();
        let tail: f64 = s.iter().skip(2).map(|v| v * v).sum();
        assert!((resid - tail).abs() < 1e-9);
    }

    #[test]
    fn thresholding_examples() {
        let y = diag(3.0, 1.0);
        assert_eq!(svt(&y, 0.0).unwrap(), y);
        assert!(close(&svt(&y, 3.5).unwrap(), &Matrix::zeros(2, 2), 1e-12));
        assert!(close(&svt(&y, 2.0).unwrap(), &diag(1.0, 0.0), 1e-12));
        assert_eq!(hsvt(&y, 0.0).unwrap(), y);
        assert!(close(&hsvt(&y, 2.0).unwrap(), &diag(3.0, 0.0), 1e-12));
        assert!(close(&hsvt(&y, 4.6).unwrap(), &Matrix::zeros(2, 2), 1e-12));
        assert!(close(&hsvt(&y, 0.5).unwrap(), &diag(3.0, 0.0), 1e-12));
        assert!(svt(&y, -1.0).is_err());
    }

    #[test]
    fn soft_threshold_beats_diagonal_grid() {
        let (y, lambda) = (diag(3.0, 1.0), 2.0);
        let objective = |a: f64, b: f64| 0.5 * ((3.0 - a).powi(2) + (1.0 - b).powi(2)) + lambda * (a.abs() + b.abs());
        let best = objective(1.0, 0.0);
        for i in -40..=40 {
            for j in -40..=40 {
                assert!(best <= objective(i as f64 * 0.1, j as f64 * 0.1) + 1e-12);
            }
        }
        assert!(close(&svt(&y, lambda).unwrap(), &diag(1.0, 0.0), 1e-12));
    }

    #[test]
    fn hard_threshold_beats_subsets() {
        let lambda = 2.0;
        let s = [3.0f64, 1.0];
        let objective =
            |keep: [bool; 2]| -> f64 { (0..2).map(|i| if keep[i] { lambda } else { 0.5 * s[i] * s[i] }).sum() };
        let chosen = objective([true, false]);
        for keep in [[false, false], [true, false], [false, true], [true, true]] {
            assert!(chosen <= objective(keep));
        }
    }

    #[test]
    fn adaptive_switch() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let y = gaussian_matrix(10, 8, &mut rng);
        assert_eq!(adaptive_estimator(&y, 1.0, 1.0).unwrap(), Matrix::zeros(10, 8));

        let setting = DenoisingSetting::new(10, 8, 2, 1e4);
        let model = DenoisingModel::haar(setting, &mut rng).unwrap();
        let x_hat = adaptive_estimator(&model.x, setting.t, 1.0).unwrap();
        let lam = lambda_star(10, 8);
        let rel = (&x_hat - &model.x).norm_squared() / model.x.norm_squared();
        assert!(rel <= 4.0 * 2.0 * lam * lam / model.x.norm_squared());
    }

    #[test]
    fn model_from_signal_checks_rank() {
        let x = diag(3.0, 0.0);
        let m = DenoisingModel::from_signal(x.clone(), 1, NoiseKind::Gaussian).unwrap();
        assert_eq!(m.setting.t, 3.0);
        assert!(DenoisingModel::from_signal(diag(3.0, 1.0), 1, NoiseKind::Gaussian).is_err());
    }

    #[test]
    fn noise_has_unit_variance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for kind in [NoiseKind::Gaussian, NoiseKind::Rademacher] {
            let z = kind.sample(100, 100, &mut rng);
            let mean = z.mean();
            let var = z.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 1e4;
            assert!(mean.abs() < 0.05 && (var - 1.0).abs() < 0.05, "{kind:?}");
        }
        assert_eq!(NoiseKind::parse("Rademacher").unwrap(), NoiseKind::Rademacher);
        assert!(NoiseKind::parse("cauchy").is_err());
    }

    #[test]
    fn vanishing_noise_gives_vanishing_risk() {
        let s = DenoisingSetting::new(20, 10, 2, 1e6);
        let risk = denoising_risk(&s, &Trials::new(5, 1).threads(Some(1))).unwrap();
        for e in [risk.u_sp, risk.v_sp, risk.u_fro, risk.v_fro] {
            assert!(e.mean < 1e-6);
        }
    }

    #[test]
    fn risk_is_reproducible() {
        let s = DenoisingSetting::new(30, 8, 2, 6.0).with_noise(NoiseKind::Rademacher);
        let a = denoising_risk(&s, &Trials::new(8, 4).threads(Some(1))).unwrap();
        let b = denoising_risk(&s, &Trials::new(8, 4).threads(Some(3))).unwrap();
        assert_eq!(a, b);
    }
}
