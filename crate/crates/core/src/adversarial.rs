//! Instances on which the unilateral bounds are attained.
//!
//! A worst-case pair places the four scalars `(α, β, z₁₂, z₂₁)` on `r × r`
//! identity blocks inside Haar-random frames, so that in those coordinates
//! `X̂ = [[α, z₁₂], [z₂₁, β]] ⊗ I_r`. A confusable pair is two different signals
//! that produce bit-identical observations.

use rand::Rng;

use crate::linalg::{haar_orthonormal, sin_theta, svd};
use crate::montecarlo::Trials;
use crate::perturbation::{bounds_from_scalars, decompose_with_bases, BlockScalars};
use crate::{Error, Matrix, OrthonormalBasis, Result};

/// Closed-form right singular structure of `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoByTwo {
    /// `|v₁₂| = |v₂₁|` of the right singular matrix.
    pub v12_abs: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    /// Leading right singular vector `(v₁₁, v₂₁)`.
    pub v1: [f64; 2],
}

/// Right singular vectors of a 2×2 matrix from the eigenvectors of its Gram matrix.
pub fn two_by_two_right_singular(a: f64, b: f64, c: f64, d: f64) -> TwoByTwo {
    let g11 = a * a + c * c;
    let g22 = b * b + d * d;
    let g12 = a * b + c * d;
    let theta = 0.5 * (2.0 * g12).atan2(g11 - g22);
    let half_diff = 0.5 * (g11 - g22);
    let lambda = 0.5 * (g11 + g22) + half_diff.hypot(g12);
    let sigma1 = lambda.max(0.0).sqrt();
    let sigma2 = if sigma1 > 0.0 { (a * d - b * c).abs() / sigma1 } else { 0.0 };
    TwoByTwo { v12_abs: theta.sin().abs(), sigma1, sigma2, v1: [theta.cos(), theta.sin()] }
}

/// A signal/perturbation pair with known block scalars.
#[derive(Clone, Debug)]
pub struct WorstCasePair {
    pub x: Matrix,
    pub z: Matrix,
    pub r: usize,
    pub alpha: f64,
    pub beta: f64,
    pub z12: f64,
    pub z21: f64,
    pub u_true: OrthonormalBasis,
    pub v_true: OrthonormalBasis,
}

impl WorstCasePair {
    pub fn x_hat(&self) -> Matrix {
        &self.x + &self.z
    }

    /// Whether the pair lies in the class with `σ_min(UᵀX̂V) ≥ α`, `‖U_⊥ᵀX̂V_⊥‖ ≤ β`,
    /// `‖Z₁₂‖ ≤ z₁₂`, `‖Z₂₁‖ ≤ z₂₁`, up to `tol`.
    pub fn in_class(&self, alpha: f64, beta: f64, z12: f64, z21: f64, tol: f64) -> Result<bool> {
        let d = decompose_with_bases(&self.x, &self.z, &self.u_true, &self.v_true)?;
        Ok(d.alpha >= alpha - tol && d.beta <= beta + tol && d.z12_sp <= z12 + tol && d.z21_sp <= z21 + tol)
    }

    /// Membership in the class indexed by the pair's own scalars.
    pub fn in_own_class(&self, tol: f64) -> Result<bool> {
        self.in_class(self.alpha, self.beta, self.z12, self.z21, tol)
    }
}

fn check_dims(p1: usize, p2: usize, r: usize) -> Result<()> {
    if r == 0 || 2 * r > p1.min(p2) {
        return Err(Error::invalid(format!("need 1 ≤ r ≤ min(p1, p2)/2, got p1 = {p1}, p2 = {p2}, r = {r}")));
    }
    Ok(())
}

fn check_scalars(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() || *v < 0.0 {
            return Err(Error::invalid(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    Ok(())
}

/// `X = αUVᵀ + βU₁V₁ᵀ`, `Z = z₁₂UV₁ᵀ + z₂₁U₁Vᵀ` with `[U U₁]`, `[V V₁]` Haar-random.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_pair<R: Rng + ?Sized>(
    p1: usize,
    p2: usize,
    r: usize,
    alpha: f64,
    beta: f64,
    z12: f64,
    z21: f64,
    rng: &mut R,
) -> Result<WorstCasePair> {
    check_dims(p1, p2, r)?;
    check_scalars(&[("alpha", alpha), ("beta", beta), ("z12", z12), ("z21", z21)])?;
    if !(alpha > beta) {
        return Err(Error::invalid(format!("need alpha > beta, got {alpha} and {beta}")));
    }
    let uf = haar_orthonormal(p1, 2 * r, rng)?;
    let vf = haar_orthonormal(p2, 2 * r, rng)?;
    let (u, u1) = (uf.columns(0, r), uf.columns(r, 2 * r));
    let (v, v1) = (vf.columns(0, r), vf.columns(r, 2 * r));
    let (um, u1m, vm, v1m) = (u.as_matrix(), u1.as_matrix(), v.as_matrix(), v1.as_matrix());
    let x = um * vm.transpose() * alpha + u1m * v1m.transpose() * beta;
    let z = um * v1m.transpose() * z12 + u1m * vm.transpose() * z21;
    Ok(WorstCasePair { x, z, r, alpha, beta, z12, z21, u_true: u, v_true: v })
}

/// Frobenius variant: budgets `z̃₁₂, z̃₂₁` on `‖Z₁₂‖_F, ‖Z₂₁‖_F`, spread evenly as `z̃/√r`.
#[allow(clippy::too_many_arguments)]
pub fn worst_case_pair_frobenius<R: Rng + ?Sized>(
    p1: usize,
    p2: usize,
    r: usize,
    alpha: f64,
    beta: f64,
    z12_fro: f64,
    z21_fro: f64,
    rng: &mut R,
) -> Result<WorstCasePair> {
    let s = (r as f64).sqrt();
    worst_case_pair(p1, p2, r, alpha, beta, z12_fro / s, z21_fro / s, rng)
}

/// Two pairs in the same class whose observations coincide bit for bit.
#[derive(Clone, Debug)]
pub struct ConfusablePair {
    pub pair1: WorstCasePair,
    pub pair2: WorstCasePair,
}

/// Places `m ⊗ I_r` in the top-left `2r × 2r` corner of a `p1 × p2` zero matrix.
fn embed(m: [[f64; 2]; 2], p1: usize, p2: usize, r: usize) -> Matrix {
    let mut out = Matrix::zeros(p1, p2);
    for (bi, row) in m.iter().enumerate() {
        for (bj, &val) in row.iter().enumerate() {
            for k in 0..r {
                out[(bi * r + k, bj * r + k)] = val;
            }
        }
    }
    out
}

/// `[w₁ I_r; w₂ I_r; 0]` as a `p × r` basis.
fn stacked_basis(w: [f64; 2], p: usize, r: usize) -> OrthonormalBasis {
    let mut m = Matrix::zeros(p, r);
    for k in 0..r {
        m[(k, k)] = w[0];
        m[(r + k, k)] = w[1];
    }
    OrthonormalBasis::new_unchecked(m)
}

/// Two signals sharing `X̂ = [[α, z₁₂], [0, β]] ⊗ I_r`.
///
/// The first keeps the leading 2×2 singular component as signal and the
/// trailing one as noise; the second takes `X = α E₁₁ ⊗ I_r`. Their right
/// subspaces differ by `|v₂₁|` of the 2×2 SVD, at least `1/√2` once
/// `α² ≤ β² + z₁₂²`.
pub fn confusable_pairs(p1: usize, p2: usize, r: usize, alpha: f64, beta: f64, z12: f64) -> Result<ConfusablePair> {
    check_dims(p1, p2, r)?;
    check_scalars(&[("alpha", alpha), ("beta", beta), ("z12", z12)])?;
    if alpha == 0.0 {
        return Err(Error::invalid("alpha must be positive"));
    }
    let h = [[alpha, z12], [0.0, beta]];
    let t = two_by_two_right_singular(alpha, z12, 0.0, beta);
    let v1 = t.v1;
    // u₁ = A v₁ / σ₁; the trailing pair is the orthogonal complement in ℝ².
    let u1 = [(alpha * v1[0] + z12 * v1[1]) / t.sigma1, (beta * v1[1]) / t.sigma1];
    let u1_norm = u1[0].hypot(u1[1]);
    let u1 = [u1[0] / u1_norm, u1[1] / u1_norm];

    // X̂ is defined by pair 1's floating-point sum. Pair 2's perturbation is
    // recovered from it; X̂₁₁ − α is exact because X̂₁₁ is within an ulp of α.
    let x2 = [[alpha, 0.0], [0.0, 0.0]];
    let mut x1 = [[0.0; 2]; 2];
    let mut z1 = [[0.0; 2]; 2];
    let mut z2 = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            x1[i][j] = t.sigma1 * u1[i] * v1[j];
            z1[i][j] = h[i][j] - x1[i][j];
            let x_hat = x1[i][j] + z1[i][j];
            z2[i][j] = x_hat - x2[i][j];
            debug_assert_eq!(x2[i][j] + z2[i][j], x_hat);
        }
    }

    let pair1 = WorstCasePair {
        x: embed(x1, p1, p2, r),
        z: embed(z1, p1, p2, r),
        r,
        alpha: t.sigma1,
        beta: t.sigma2,
        z12: 0.0,
        z21: 0.0,
        u_true: stacked_basis(u1, p1, r),
        v_true: stacked_basis(v1, p2, r),
    };
    let pair2 = WorstCasePair {
        x: embed(x2, p1, p2, r),
        z: embed(z2, p1, p2, r),
        r,
        alpha,
        beta,
        z12,
        z21: 0.0,
        u_true: stacked_basis([1.0, 0.0], p1, r),
        v_true: stacked_basis([1.0, 0.0], p2, r),
    };
    Ok(ConfusablePair { pair1, pair2 })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sharpness {
    pub actual_v: f64,
    pub bound_v: f64,
    /// `actual_v / bound_v`, with `0/0 := 1`.
    pub ratio: f64,
}

/// Compares the realised right-subspace loss of a pair with its upper bound.
pub fn sharpness_check(pair: &WorstCasePair) -> Result<Sharpness> {
    let (a, b) = (pair.alpha, pair.beta);
    let margin = a * a - b * b - pair.z12 * pair.z12 - pair.z21 * pair.z21;
    if !(margin > 0.0) {
        return Err(Error::NotSharpRegime(margin));
    }
    let d = decompose_with_bases(&pair.x, &pair.z, &pair.u_true, &pair.v_true)?;
    let bound_v = bounds_from_scalars(&BlockScalars::from(&d), pair.r).v_spectral;
    let dec = svd(&pair.x_hat())?;
    let actual_v = sin_theta(&pair.v_true, &dec.v.columns(0, pair.r))?.spectral;
    let ratio = if bound_v == 0.0 { 1.0 } else { actual_v / bound_v };
    Ok(Sharpness { actual_v, bound_v, ratio })
}

/// Random scalars with `α² > β² + z₁₂² + z₂₁²`, drawn uniformly from the
/// admissible part of `[0, α]³` with `α ~ U(0.5, 5)`.
pub fn random_sharp_scalars<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64, f64, f64) {
    let alpha = rng.random_range(0.5..5.0);
    loop {
        let beta = rng.random_range(0.0..alpha);
        let z12 = rng.random_range(0.0..alpha);
        let z21 = rng.random_range(0.0..alpha);
        if alpha * alpha > beta * beta + z12 * z12 + z21 * z21 {
            return (alpha, beta, z12, z21);
        }
    }
}

/// Sharpness of one worst-case pair per trial, each with random admissible scalars.
pub fn sharpness_sweep(p1: usize, p2: usize, r: usize, trials: &Trials) -> Result<Vec<Sharpness>> {
    trials.run(|_, rng| {
        let (alpha, beta, z12, z21) = random_sharp_scalars(rng);
        sharpness_check(&worst_case_pair(p1, p2, r, alpha, beta, z12, z21, rng)?)
    })
}
