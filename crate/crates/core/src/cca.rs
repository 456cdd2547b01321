//! Canonical correlation analysis with sin-Θ and Procrustes losses.
//!
//! The population model has `Σ_X = I + (Z + Zᵀ)/(2‖Z + Zᵀ‖)` (likewise `Σ_Y`)
//! and `Σ_XY = Σ_X^{1/2}(tUVᵀ)Σ_Y^{1/2}`, so the whitened cross-covariance
//! `S = Σ_X^{-1/2}Σ_XYΣ_Y^{-1/2} = tUVᵀ` has `r` canonical correlations equal to `t`.
//!
//! Losses use the best rotation `O` (a minimum over `O`), matching the
//! Procrustes interpretation of the loss.

use nalgebra::Cholesky;
use rand::Rng;

use crate::linalg::{
    gaussian_matrix, haar_orthonormal, procrustes_rotation, sin_theta, spectral_norm, svd, symmetric_eigen_sorted,
    symmetric_power,
};
use crate::montecarlo::{summarize, Estimate, Trials};
use crate::{Error, Matrix, OrthonormalBasis, Result};

/// Smallest eigenvalue accepted for population and joint covariance blocks.
pub const PD_FLOOR: f64 = 1e-10;
/// Smallest eigenvalue accepted when inverting sample covariances.
pub const SAMPLE_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug)]
pub struct CcaModel {
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    pub t: f64,
    pub sigma_x: Matrix,
    pub sigma_y: Matrix,
    pub sigma_xy: Matrix,
    pub sigma_x_sqrt: Matrix,
    pub sigma_y_sqrt: Matrix,
    /// `Σ_X^{-1/2}Σ_XYΣ_Y^{-1/2}`
    pub s_pop: Matrix,
    pub u_s: OrthonormalBasis,
    pub v_s: OrthonormalBasis,
    /// `Σ_X^{-1/2}U_S`
    pub a_pop: Matrix,
    /// `Σ_Y^{-1/2}V_S`
    pub b_pop: Matrix,
}

impl CcaModel {
    /// `[[Σ_X, Σ_XY], [Σ_XYᵀ, Σ_Y]]`
    pub fn joint_covariance(&self) -> Matrix {
        let p = self.p1 + self.p2;
        let mut s = Matrix::zeros(p, p);
        s.view_mut((0, 0), (self.p1, self.p1)).copy_from(&self.sigma_x);
        s.view_mut((self.p1, self.p1), (self.p2, self.p2)).copy_from(&self.sigma_y);
        s.view_mut((0, self.p1), (self.p1, self.p2)).copy_from(&self.sigma_xy);
        s.view_mut((self.p1, 0), (self.p2, self.p1)).copy_from(&self.sigma_xy.transpose());
        s
    }
}

/// `I + (Z + Zᵀ)/(2‖Z + Zᵀ‖)` together with its square root, inverse square root and
/// smallest eigenvalue, all from one eigendecomposition.
struct PerturbedIdentity {
    sigma: Matrix,
    sqrt: Matrix,
    inv_sqrt: Matrix,
    lambda_min: f64,
}

fn perturbed_identity<R: Rng + ?Sized>(p: usize, rng: &mut R) -> PerturbedIdentity {
    let z = gaussian_matrix(p, p, rng);
    let sym = &z + z.transpose();
    let (vals, vecs) = symmetric_eigen_sorted(&sym);
    let norm = vals.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let eig: Vec<f64> = vals.iter().map(|v| if norm > 0.0 { 1.0 + v / (2.0 * norm) } else { 1.0 }).collect();
    let with = |f: &dyn Fn(f64) -> f64| {
        let mut scaled = vecs.clone();
        for (j, l) in eig.iter().enumerate() {
            scaled.column_mut(j).scale_mut(f(*l));
        }
        scaled * vecs.transpose()
    };
    PerturbedIdentity {
        sigma: with(&|l| l),
        sqrt: with(&|l| l.sqrt()),
        inv_sqrt: with(&|l| 1.0 / l.sqrt()),
        lambda_min: eig.iter().copied().fold(f64::INFINITY, f64::min),
    }
}

pub fn build_cca_model<R: Rng + ?Sized>(p1: usize, p2: usize, r: usize, t: f64, rng: &mut R) -> Result<CcaModel> {
    if r == 0 || r > p1.min(p2) {
        return Err(Error::invalid(format!("rank r = {r} must satisfy 1 ≤ r ≤ min(p1, p2)")));
    }
    if !(0.0..1.0).contains(&t) {
        return Err(Error::invalid(format!("canonical correlation t must lie in [0, 1), got {t}")));
    }
    let x = perturbed_identity(p1, rng);
    let y = perturbed_identity(p2, rng);
    let u = haar_orthonormal(p1, r, rng)?;
    let v = haar_orthonormal(p2, r, rng)?;

    // The joint covariance factors as D·[[I, tUVᵀ], [tVUᵀ, I]]·D with D = diag(Σ_X^{1/2}, Σ_Y^{1/2}),
    // whose middle factor has eigenvalues 1 ± t and 1.
    let certificate = x.lambda_min.min(y.lambda_min).min(1.0 - t);
    if !(certificate > PD_FLOOR) {
        return Err(Error::NotPositiveDefinite(certificate));
    }

    let core = u.as_matrix() * v.as_matrix().transpose() * t;
    let sigma_xy = &x.sqrt * &core * &y.sqrt;
    Ok(CcaModel {
        p1,
        p2,
        r,
        t,
        a_pop: &x.inv_sqrt * u.as_matrix(),
        b_pop: &y.inv_sqrt * v.as_matrix(),
        sigma_x: x.sigma,
        sigma_y: y.sigma,
        sigma_xy,
        sigma_x_sqrt: x.sqrt,
        sigma_y_sqrt: y.sqrt,
        s_pop: core,
        u_s: u,
        v_s: v,
    })
}

#[derive(Clone, Debug)]
pub struct CcaSample {
    /// `p₁ × n`
    pub x_data: Matrix,
    /// `p₂ × n`
    pub y_data: Matrix,
}

fn check_sample_size(model: &CcaModel, n: usize) -> Result<()> {
    if n <= model.p1 + model.p2 {
        return Err(Error::SingularCovariance(format!("n = {n} must exceed p1 + p2 = {}", model.p1 + model.p2)));
    }
    Ok(())
}

/// `n` joint Gaussian draws.
///
/// Uses the factor `X = Σ_X^{1/2}g₁`, `Y = Σ_Y^{1/2}(tVUᵀg₁ + (I − cVVᵀ)g₂)` with
/// `c = 1 − √(1 − t²)`, which reproduces the joint covariance exactly.
pub fn sample_cca<R: Rng + ?Sized>(model: &CcaModel, n: usize, rng: &mut R) -> Result<CcaSample> {
    check_sample_size(model, n)?;
    let g1 = gaussian_matrix(model.p1, n, rng);
    let g2 = gaussian_matrix(model.p2, n, rng);
    let (u, v) = (model.u_s.as_matrix(), model.v_s.as_matrix());
    let c = 1.0 - (1.0 - model.t * model.t).sqrt();
    let white_y = v * (u.tr_mul(&g1) * model.t - v.tr_mul(&g2) * c) + &g2;
    Ok(CcaSample { x_data: &model.sigma_x_sqrt * g1, y_data: &model.sigma_y_sqrt * white_y })
}

/// Data whose sample covariances equal the population blocks exactly.
///
/// Gaussian draws are whitened by the Cholesky factor of their own sample
/// covariance and recoloured by a Cholesky factor of the joint covariance.
pub fn exact_moment_sample<R: Rng + ?Sized>(model: &CcaModel, n: usize, rng: &mut R) -> Result<CcaSample> {
    check_sample_size(model, n)?;
    let p = model.p1 + model.p2;
    let g = gaussian_matrix(p, n, rng);
    let c = &g * g.transpose() / n as f64;
    let l_c = Cholesky::new(c).ok_or_else(|| Error::SingularCovariance("draw covariance".into()))?;
    let f = Cholesky::new(model.joint_covariance()).ok_or(Error::NotPositiveDefinite(0.0))?;
    let white =
        l_c.l().solve_lower_triangular(&g).ok_or_else(|| Error::SingularCovariance("draw covariance".into()))?;
    let w = f.l() * white;
    Ok(CcaSample { x_data: w.rows(0, model.p1).into_owned(), y_data: w.rows(model.p1, model.p2).into_owned() })
}

#[derive(Clone, Debug)]
pub struct CcaEstimate {
    /// `Σ̂_X^{-1/2}Û`
    pub a_hat: Matrix,
    /// `Σ̂_Y^{-1/2}V̂`
    pub b_hat: Matrix,
    pub u_hat: OrthonormalBasis,
    pub v_hat: OrthonormalBasis,
}

/// Leading `r` sample canonical directions from uncentred sample covariances.
pub fn estimate_cca(x_data: &Matrix, y_data: &Matrix, r: usize) -> Result<CcaEstimate> {
    let n = x_data.ncols();
    if y_data.ncols() != n || n == 0 {
        return Err(Error::ShapeMismatch(format!("X has {n} samples but Y has {}", y_data.ncols())));
    }
    let (p1, p2) = (x_data.nrows(), y_data.nrows());
    if r == 0 || r > p1.min(p2) {
        return Err(Error::invalid(format!("rank r = {r} must satisfy 1 ≤ r ≤ min(p1, p2)")));
    }
    let nf = n as f64;
    let sx = x_data * x_data.transpose() / nf;
    let sy = y_data * y_data.transpose() / nf;
    let sxy = x_data * y_data.transpose() / nf;
    let sx_inv = symmetric_power(&sx, -0.5, SAMPLE_FLOOR)?;
    let sy_inv = symmetric_power(&sy, -0.5, SAMPLE_FLOOR)?;
    let s_hat = &sx_inv * sxy * &sy_inv;
    let dec = svd(&s_hat)?;
    let u_hat = dec.u.columns(0, r);
    let v_hat = dec.v.columns(0, r);
    Ok(CcaEstimate { a_hat: sx_inv * u_hat.as_matrix(), b_hat: sy_inv * v_hat.as_matrix(), u_hat, v_hat })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcaLosses {
    pub u_sp: f64,
    pub u_fro: f64,
    pub v_sp: f64,
    pub v_fro: f64,
    /// `min_O ‖Σ_X^{1/2}(ÂO − A)‖_F²`
    pub l_f_procrustes: f64,
    /// `‖Σ_X^{1/2}(ÂO − A)‖²` at the same rotation.
    pub l_sp_procrustes: f64,
}

pub fn cca_losses(model: &CcaModel, est: &CcaEstimate) -> Result<CcaLosses> {
    if est.a_hat.shape() != model.a_pop.shape() || est.b_hat.shape() != model.b_pop.shape() {
        return Err(Error::ShapeMismatch("estimate does not match the model dimensions".into()));
    }
    let du = sin_theta(&model.u_s, &est.u_hat)?;
    let dv = sin_theta(&model.v_s, &est.v_hat)?;
    let m_hat = &model.sigma_x_sqrt * &est.a_hat;
    let m = &model.sigma_x_sqrt * &model.a_pop;
    let o = procrustes_rotation(&m_hat, &m)?;
    let resid = m_hat * o - m;
    Ok(CcaLosses {
        u_sp: du.spectral,
        u_fro: du.frobenius,
        v_sp: dv.spectral,
        v_fro: dv.frobenius,
        l_f_procrustes: resid.norm_squared(),
        l_sp_procrustes: spectral_norm(&resid).powi(2),
    })
}

/// One row of the CCA study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcaSetting {
    pub p1: usize,
    pub p2: usize,
    pub r: usize,
    pub n: usize,
    pub t: f64,
    /// Average squared sin-Θ losses instead of the losses themselves.
    pub squared: bool,
}

impl CcaSetting {
    pub fn new(p1: usize, p2: usize, r: usize, n: usize, t: f64) -> Self {
        Self { p1, p2, r, n, t, squared: false }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CcaSummary {
    pub u_sp: Estimate,
    pub u_fro: Estimate,
    pub v_sp: Estimate,
    pub v_fro: Estimate,
    pub lf_procrustes: Estimate,
}

/// Fresh model and fresh data in every trial.
pub fn cca_study(setting: &CcaSetting, trials: &Trials) -> Result<CcaSummary> {
    let rows = trials.run(|_, rng| {
        let model = build_cca_model(setting.p1, setting.p2, setting.r, setting.t, rng)?;
        let sample = sample_cca(&model, setting.n, rng)?;
        let est = estimate_cca(&sample.x_data, &sample.y_data, setting.r)?;
        let l = cca_losses(&model, &est)?;
        let k = if setting.squared { 2 } else { 1 };
        Ok([l.u_sp.powi(k), l.u_fro.powi(k), l.v_sp.powi(k), l.v_fro.powi(k), l.l_f_procrustes])
    })?;
    let [u_sp, u_fro, v_sp, v_fro, lf_procrustes] = summarize(&rows);
    Ok(CcaSummary { u_sp, u_fro, v_sp, v_fro, lf_procrustes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::singular_values;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model(seed: u64, t: f64) -> CcaModel {
        build_cca_model(30, 10, 2, t, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap()
    }

    #[test]
    fn population_structure() {
        let m = model(1, 0.8);
        let s = singular_values(&m.s_pop);
        assert!((s[0] - 0.8).abs() < 1e-9 && (s[1] - 0.8).abs() < 1e-9 && s[2] < 1e-9);
        let whitened = symmetric_power(&m.sigma_x, -0.5, PD_FLOOR).unwrap()
            * &m.sigma_xy
            * symmetric_power(&m.sigma_y, -0.5, PD_FLOOR).unwrap();
        assert!((whitened - &m.s_pop).amax() < 1e-9);
        let (vals, _) = symmetric_eigen_sorted(&m.sigma_x);
        assert!(vals.iter().all(|l| (0.5 - 1e-12..=1.5 + 1e-12).contains(l)));
        let (joint, _) = symmetric_eigen_sorted(&m.joint_covariance());
        assert!(joint.min() > PD_FLOOR);
        let gram = m.a_pop.transpose() * &m.sigma_x * &m.a_pop;
        assert!((gram - Matrix::identity(2, 2)).amax() < 1e-8);
        let sq = &m.sigma_x_sqrt * &m.sigma_x_sqrt;
        assert!((sq - &m.sigma_x).norm() / m.sigma_x.norm() < 1e-9);
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        assert!(build_cca_model(5, 3, 4, 0.5, &mut rng).is_err());
        assert!(build_cca_model(5, 3, 1, 1.0, &mut rng).is_err());
        let m = model(2, 0.5);
        assert!(matches!(sample_cca(&m, 40, &mut rng), Err(Error::SingularCovariance(_))));
    }

    #[test]
    fn sampling_is_reproducible() {
        let m = model(3, 0.6);
        let a = sample_cca(&m, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = sample_cca(&m, 50, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.x_data, b.x_data);
        assert_eq!(a.y_data, b.y_data);
    }

    #[test]
    fn exact_moments_recover_population() {
        let m = model(4, 0.8);
        let data = exact_moment_sample(&m, 60, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let sx = &data.x_data * data.x_data.transpose() / 60.0;
        assert!((sx - &m.sigma_x).amax() < 1e-10);
        let est = estimate_cca(&data.x_data, &data.y_data, 2).unwrap();
        let l = cca_losses(&m, &est).unwrap();
        for v in [l.u_sp, l.u_fro, l.v_sp, l.v_fro, l.l_f_procrustes] {
            assert!(v <= 1e-8, "{l:?}");
        }
        let s_hat = &data.x_data * data.x_data.transpose() / 60.0;
        let g = est.a_hat.transpose() * s_hat * &est.a_hat;
        assert!((g - Matrix::identity(2, 2)).amax() < 1e-8);
    }

    #[test]
    fn study_is_schedule_independent() {
        let s = CcaSetting::new(8, 4, 1, 30, 0.7);
        let a = cca_study(&s, &Trials::new(4, 1).threads(Some(1))).unwrap();
        let b = cca_study(&s, &Trials::new(4, 1).threads(Some(2))).unwrap();
        assert_eq!(a, b);
    }
}
