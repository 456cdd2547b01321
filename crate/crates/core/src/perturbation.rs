//! Perturbation bounds for the leading singular subspaces of `X̂ = X + Z`.
//!
//! [`block_decompose`] expresses `Z` in the coordinates of the singular bases
//! of `X` and their complements. From those blocks [`unilateral_bounds`]
//! bounds the left and right subspaces separately, so a small `‖Z₁₂‖` can give
//! an accurate right subspace even when the left one is unrecoverable.
//! [`wedin_bounds`] gives the classical two-sided bound for comparison.

use nalgebra::DVector;

use crate::linalg::{check_finite, orthonormal_complement, sigma_min, sin_theta, singular_values, spectral_norm, svd};
use crate::{Error, Matrix, OrthonormalBasis, Result, SinThetaDistances, SvdFactorization};

/// Smallest admissible `(σ_r − σ_{r+1}) / σ₁` when choosing the leading subspaces of `X`.
pub const IDENTIFIABILITY_GAP: f64 = 1e-12;

/// `Z` written in the `(U, U_⊥) × (V, V_⊥)` coordinates of `X`.
#[derive(Clone, Debug)]
pub struct BlockDecomposition {
    pub r: usize,
    /// `UᵀZV`
    pub z11: Matrix,
    /// `UᵀZV_⊥`
    pub z12: Matrix,
    /// `U_⊥ᵀZV`
    pub z21: Matrix,
    /// `U_⊥ᵀZV_⊥`
    pub z22: Matrix,
    /// `σ_min(UᵀX̂V)`
    pub alpha: f64,
    /// `‖U_⊥ᵀX̂V_⊥‖`
    pub beta: f64,
    pub z12_sp: f64,
    pub z21_sp: f64,
    pub z12_fro: f64,
    pub z21_fro: f64,
    pub u: OrthonormalBasis,
    pub v: OrthonormalBasis,
    pub u_perp: OrthonormalBasis,
    pub v_perp: OrthonormalBasis,
}

impl BlockDecomposition {
    /// Maps the four blocks back to `Z`.
    pub fn reconstruct(&self) -> Matrix {
        let (u, v) = (self.u.as_matrix(), self.v.as_matrix());
        let (up, vp) = (self.u_perp.as_matrix(), self.v_perp.as_matrix());
        u * &self.z11 * v.transpose()
            + u * &self.z12 * vp.transpose()
            + up * &self.z21 * v.transpose()
            + up * &self.z22 * vp.transpose()
    }

    /// Decomposition of `(Xᵀ, Zᵀ)`: the roles of the two sides are exchanged.
    pub fn transposed(&self) -> Self {
        Self {
            r: self.r,
            z11: self.z11.transpose(),
            z12: self.z21.transpose(),
            z21: self.z12.transpose(),
            z22: self.z22.transpose(),
            alpha: self.alpha,
            beta: self.beta,
            z12_sp: self.z21_sp,
            z21_sp: self.z12_sp,
            z12_fro: self.z21_fro,
            z21_fro: self.z12_fro,
            u: self.v.clone(),
            v: self.u.clone(),
            u_perp: self.v_perp.clone(),
            v_perp: self.u_perp.clone(),
        }
    }
}

/// Upper bounds on the sin-Θ losses of each side, already capped.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundReport {
    pub v_spectral: f64,
    pub v_frobenius: f64,
    pub u_spectral: f64,
    pub u_frobenius: f64,
    pub applicable: bool,
    pub gap: f64,
}

impl BoundReport {
    fn trivial(r: usize, gap: f64) -> Self {
        let root_r = (r as f64).sqrt();
        Self { v_spectral: 1.0, v_frobenius: root_r, u_spectral: 1.0, u_frobenius: root_r, applicable: false, gap }
    }
}

fn check_pair(x: &Matrix, z: &Matrix) -> Result<()> {
    if x.shape() != z.shape() {
        return Err(Error::ShapeMismatch(format!(
            "X is {}×{} but Z is {}×{}",
            x.nrows(),
            x.ncols(),
            z.nrows(),
            z.ncols()
        )));
    }
    check_finite(x)?;
    check_finite(z)
}

fn check_rank(x: &Matrix, r: usize) -> Result<()> {
    let m = x.nrows().min(x.ncols());
    if r == 0 || r >= m {
        return Err(Error::invalid(format!("rank r = {r} must satisfy 1 ≤ r < min(p1, p2) = {m}")));
    }
    Ok(())
}

fn check_identifiable(dec: &SvdFactorization, r: usize) -> Result<()> {
    let s1 = dec.sigma(1);
    let relative_gap = if s1 > 0.0 { (dec.sigma(r) - dec.sigma(r + 1)) / s1 } else { 0.0 };
    if relative_gap > IDENTIFIABILITY_GAP {
        Ok(())
    } else {
        Err(Error::RankNotIdentifiable { r, relative_gap })
    }
}

/// Leading rank-`r` singular bases of `x` after the identifiability check.
fn leading_bases(x: &Matrix, r: usize) -> Result<(SvdFactorization, OrthonormalBasis, OrthonormalBasis)> {
    check_rank(x, r)?;
    let dec = svd(x)?;
    check_identifiable(&dec, r)?;
    let u = dec.u.columns(0, r);
    let v = dec.v.columns(0, r);
    Ok((dec, u, v))
}

pub fn block_decompose(x: &Matrix, z: &Matrix, r: usize) -> Result<BlockDecomposition> {
    check_pair(x, z)?;
    let (_, u, v) = leading_bases(x, r)?;
    decompose_with_bases(x, z, &u, &v)
}

/// Block decomposition relative to caller-supplied bases `U`, `V` of rank `r < min(p₁, p₂)`.
pub fn decompose_with_bases(
    x: &Matrix,
    z: &Matrix,
    u: &OrthonormalBasis,
    v: &OrthonormalBasis,
) -> Result<BlockDecomposition> {
    check_pair(x, z)?;
    if u.ambient_dim() != x.nrows() || v.ambient_dim() != x.ncols() || u.rank() != v.rank() {
        return Err(Error::ShapeMismatch("bases do not match the shape of X".into()));
    }
    let r = u.rank();
    check_rank(x, r)?;
    let u_perp = orthonormal_complement(u)?;
    let v_perp = orthonormal_complement(v)?;
    let (um, vm) = (u.as_matrix(), v.as_matrix());
    let (upm, vpm) = (u_perp.as_matrix(), v_perp.as_matrix());

    let ut_z = um.tr_mul(z);
    let upt_z = upm.tr_mul(z);
    let z11 = &ut_z * vm;
    let z12 = &ut_z * vpm;
    let z21 = &upt_z * vm;
    let z22 = &upt_z * vpm;

    let ut_x = um.tr_mul(x);
    let upt_x = upm.tr_mul(x);
    let alpha = sigma_min(&(&ut_x * vm + &z11));
    let beta = spectral_norm(&(&upt_x * vpm + &z22));

    Ok(BlockDecomposition {
        r,
        alpha,
        beta,
        z12_sp: spectral_norm(&z12),
        z21_sp: spectral_norm(&z21),
        z12_fro: z12.norm(),
        z21_fro: z21.norm(),
        z11,
        z12,
        z21,
        z22,
        u: u.clone(),
        v: v.clone(),
        u_perp,
        v_perp,
    })
}

/// The scalar summary that the bounds depend on.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlockScalars {
    pub alpha: f64,
    pub beta: f64,
    pub z12_sp: f64,
    pub z21_sp: f64,
    pub z12_fro: f64,
    pub z21_fro: f64,
}

impl BlockScalars {
    /// Spectral-only scalars; Frobenius block norms are set equal to the spectral ones.
    pub fn spectral(alpha: f64, beta: f64, z12: f64, z21: f64) -> Self {
        Self { alpha, beta, z12_sp: z12, z21_sp: z21, z12_fro: z12, z21_fro: z21 }
    }

    /// `α² − β² − min(z₁₂², z₂₁²)`
    pub fn gap(&self) -> f64 {
        self.alpha * self.alpha - self.beta * self.beta - (self.z12_sp * self.z12_sp).min(self.z21_sp * self.z21_sp)
    }
}

impl From<&BlockDecomposition> for BlockScalars {
    fn from(d: &BlockDecomposition) -> Self {
        Self {
            alpha: d.alpha,
            beta: d.beta,
            z12_sp: d.z12_sp,
            z21_sp: d.z21_sp,
            z12_fro: d.z12_fro,
            z21_fro: d.z21_fro,
        }
    }
}

/// Separate left and right bounds from the block scalars at rank `r`.
pub fn bounds_from_scalars(s: &BlockScalars, r: usize) -> BoundReport {
    let gap = s.gap();
    if !(gap > 0.0) {
        return BoundReport::trivial(r, gap);
    }
    let root_r = (r as f64).sqrt();
    BoundReport {
        v_spectral: ((s.alpha * s.z12_sp + s.beta * s.z21_sp) / gap).min(1.0),
        u_spectral: ((s.alpha * s.z21_sp + s.beta * s.z12_sp) / gap).min(1.0),
        v_frobenius: ((s.alpha * s.z12_fro + s.beta * s.z21_fro) / gap).min(root_r),
        u_frobenius: ((s.alpha * s.z21_fro + s.beta * s.z12_fro) / gap).min(root_r),
        applicable: true,
        gap,
    }
}

pub fn unilateral_bounds(d: &BlockDecomposition) -> BoundReport {
    bounds_from_scalars(&BlockScalars::from(d), d.r)
}

/// Two-sided bound `max(‖ZV̂‖, ‖ÛᵀZ‖) / δ` with `δ = σ_r(X̂) − σ_{r+1}(X)`.
///
/// The same value bounds both sides, so the u- and v-fields coincide.
pub fn wedin_bounds(x: &Matrix, z: &Matrix, r: usize) -> Result<BoundReport> {
    check_pair(x, z)?;
    let (dec, _, _) = leading_bases(x, r)?;
    let x_hat = x + z;
    let dec_hat = svd(&x_hat)?;
    let delta = dec_hat.sigma(r) - dec.sigma(r + 1);
    if !(delta > 0.0) {
        return Ok(BoundReport::trivial(r, delta));
    }
    let u_hat = dec_hat.u.columns(0, r);
    let v_hat = dec_hat.v.columns(0, r);
    let zv = z * v_hat.as_matrix();
    let uz = u_hat.as_matrix().tr_mul(z);
    let sp = (spectral_norm(&zv).max(spectral_norm(&uz)) / delta).min(1.0);
    let fro = (zv.norm().max(uz.norm()) / delta).min((r as f64).sqrt());
    Ok(BoundReport { v_spectral: sp, v_frobenius: fro, u_spectral: sp, u_frobenius: fro, applicable: true, gap: delta })
}

/// Realised sin-Θ losses between the leading rank-`r` subspaces of `X` and `X + Z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealizedLosses {
    pub u: SinThetaDistances,
    pub v: SinThetaDistances,
}

pub fn realized_losses(x: &Matrix, z: &Matrix, r: usize) -> Result<RealizedLosses> {
    check_pair(x, z)?;
    let (_, u, v) = leading_bases(x, r)?;
    let dec_hat = svd(&(x + z))?;
    Ok(RealizedLosses { u: sin_theta(&u, &dec_hat.u.columns(0, r))?, v: sin_theta(&v, &dec_hat.v.columns(0, r))? })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProjectionBound {
    pub spectral: f64,
    pub frobenius: f64,
}

/// Bounds `sinΘ(V, W)` where `V` spans the leading `r` right singular vectors of `A`
/// and `W` is any `p₂ × r` orthonormal basis with `σ_r(AW) > σ_{r+1}(A)`.
pub fn projection_bound(a: &Matrix, w: &OrthonormalBasis) -> Result<ProjectionBound> {
    check_finite(a)?;
    let (p1, p2) = a.shape();
    let r = w.rank();
    if w.ambient_dim() != p2 || r > p1 {
        return Err(Error::ShapeMismatch(format!("W is {}×{} but A is {p1}×{p2}", w.ambient_dim(), r)));
    }
    if r == p2 {
        return Ok(ProjectionBound { spectral: 0.0, frobenius: 0.0 });
    }
    let aw = a * w.as_matrix();
    let dec_aw = svd(&aw)?;
    let s_r = dec_aw.sigma(r);
    let s_next = singular_values(a).get(r).copied().unwrap_or(0.0);
    if !(s_r > s_next) {
        return Err(Error::GapConditionFails { sigma_r_aw: s_r, sigma_next: s_next });
    }
    let w_perp = orthonormal_complement(w)?;
    let cross = dec_aw.u.as_matrix().tr_mul(a) * w_perp.as_matrix();
    let denom = s_r * s_r - s_next * s_next;
    Ok(ProjectionBound {
        spectral: (s_r * spectral_norm(&cross) / denom).min(1.0),
        frobenius: (s_r * cross.norm() / denom).min((r as f64).sqrt()),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SegmentBounds {
    pub u_spectral: f64,
    pub v_spectral: f64,
}

/// Block scalars at rank `k` for the leading bases of `dec`; empty complements give zero norms.
fn scalars_at_rank(dec: &SvdFactorization, x: &Matrix, z: &Matrix, k: usize) -> BlockScalars {
    let x_hat = x + z;
    let u = dec.u.as_matrix().columns(0, k).into_owned();
    let v = dec.v.as_matrix().columns(0, k).into_owned();
    let perp = |b: &OrthonormalBasis, full: usize| -> Matrix {
        if k >= full {
            Matrix::zeros(full, 0)
        } else {
            orthonormal_complement(&b.columns(0, k)).expect("k < p").into_matrix()
        }
    };
    let up = perp(&dec.u, x.nrows());
    let vp = perp(&dec.v, x.ncols());
    let z12 = u.tr_mul(z) * &vp;
    let z21 = up.tr_mul(z) * &v;
    BlockScalars {
        alpha: sigma_min(&(u.tr_mul(&x_hat) * &v)),
        beta: spectral_norm(&(up.tr_mul(&x_hat) * &vp)),
        z12_sp: spectral_norm(&z12),
        z21_sp: spectral_norm(&z21),
        z12_fro: z12.norm(),
        z21_fro: z21.norm(),
    }
}

/// Bounds for the singular vectors `i..=j` (1-based) of `X̂ = X + Z`.
///
/// Combines the rank-`(i−1)` and rank-`j` bounds in root-sum-square. The
/// rank-0 term is zero.
pub fn segment_bounds(x: &Matrix, z: &Matrix, i: usize, j: usize) -> Result<SegmentBounds> {
    check_pair(x, z)?;
    let m = x.nrows().min(x.ncols());
    if i == 0 || i > j || j > m {
        return Err(Error::invalid(format!("segment {i}..={j} must satisfy 1 ≤ i ≤ j ≤ {m}")));
    }
    let dec = svd(x)?;
    let mut sq = DVector::<f64>::zeros(2);
    let mut sq_u = DVector::<f64>::zeros(2);
    for (slot, k) in [i - 1, j].into_iter().enumerate() {
        if k == 0 {
            continue;
        }
        let s = scalars_at_rank(&dec, x, z, k);
        let gap = s.gap();
        if !(gap > 0.0) {
            return Err(Error::SegmentInapplicable { k, gap });
        }
        sq[slot] = ((s.alpha * s.z12_sp + s.beta * s.z21_sp) / gap).powi(2);
        sq_u[slot] = ((s.alpha * s.z21_sp + s.beta * s.z12_sp) / gap).powi(2);
    }
    Ok(SegmentBounds { u_spectral: sq_u.sum().sqrt().min(1.0), v_spectral: sq.sum().sqrt().min(1.0) })
}
