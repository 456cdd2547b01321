//! Dense linear algebra used throughout the crate.
//!
//! Matrices are `nalgebra::DMatrix<f64>`. Orthonormal column sets are wrapped
//! in [`OrthonormalBasis`], which checks `QᵀQ = I` on construction.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

pub type Matrix = DMatrix<f64>;

/// Rejects matrices with NaN or infinite entries.
pub fn check_finite(a: &Matrix) -> Result<()> {
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            if !a[(i, j)].is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
        }
    }
    Ok(())
}

fn max_abs(a: &Matrix) -> f64 {
    a.iter().fold(0.0_f64, |m, x| m.max(x.abs()))
}

/// A `p × r` matrix with orthonormal columns, `r ≤ p`.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthonormalBasis(Matrix);

impl OrthonormalBasis {
    /// Max-abs tolerance on `QᵀQ - I`.
    pub const TOLERANCE: f64 = 1e-10;

    pub fn new(columns: Matrix) -> Result<Self> {
        if columns.ncols() == 0 || columns.ncols() > columns.nrows() {
            return Err(Error::ShapeMismatch(format!(
                "orthonormal basis needs 1 ≤ r ≤ p, got {}×{}",
                columns.nrows(),
                columns.ncols()
            )));
        }
        check_finite(&columns)?;
        let err = orthonormality_error(&columns);
        if err > Self::TOLERANCE {
            return Err(Error::NotOrthonormal(err));
        }
        Ok(Self(columns))
    }

    /// Caller guarantees orthonormality (e.g. columns of a Householder Q).
    pub(crate) fn new_unchecked(columns: Matrix) -> Self {
        debug_assert!(orthonormality_error(&columns) <= 1e-8);
        Self(columns)
    }

    /// Span of the standard basis vectors `e_i`, `i ∈ indices` (0-based).
    pub fn standard(p: usize, indices: &[usize]) -> Result<Self> {
        let mut m = Matrix::zeros(p, indices.len());
        for (j, &i) in indices.iter().enumerate() {
            if i >= p {
                return Err(Error::invalid(format!("index {i} out of range for p = {p}")));
            }
            m[(i, j)] = 1.0;
        }
        Self::new(m)
    }

    pub fn ambient_dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn rank(&self) -> usize {
        self.0.ncols()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    /// Columns `start..end` as a new basis.
    pub fn columns(&self, start: usize, end: usize) -> Self {
        assert!(start < end && end <= self.rank(), "column range out of bounds");
        Self(self.0.columns(start, end - start).into_owned())
    }

    /// `Q Qᵀ`.
    pub fn projector(&self) -> Matrix {
        &self.0 * self.0.transpose()
    }

    /// Left-multiplies by an orthogonal matrix.
    pub fn rotated(&self, q: &Matrix) -> Result<Self> {
        if q.nrows() != q.ncols() || q.ncols() != self.ambient_dim() {
            return Err(Error::ShapeMismatch("rotation must be p×p".into()));
        }
        Self::new(q * &self.0)
    }
}

/// `max |QᵀQ - I|`.
pub fn orthonormality_error(q: &Matrix) -> f64 {
    let g = q.transpose() * q;
    max_abs(&(g - Matrix::identity(q.ncols(), q.ncols())))
}

/// Thin SVD `A = U diag(s) Vᵀ` with `k = min(p₁, p₂)` and `s` non-increasing.
#[derive(Clone, Debug)]
pub struct SvdFactorization {
    pub u: OrthonormalBasis,
    pub singular_values: DVector<f64>,
    pub v: OrthonormalBasis,
}

impl SvdFactorization {
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.as_matrix().clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.as_matrix().transpose()
    }

    /// `σ_i` with 1-based `i`; zero beyond `k`.
    pub fn sigma(&self, i: usize) -> f64 {
        if i == 0 || i > self.singular_values.len() {
            0.0
        } else {
            self.singular_values[i - 1]
        }
    }
}

/// Full thin SVD, singular values sorted non-increasing.
///
/// Ties keep the order produced by the backend.
pub fn svd(a: &Matrix) -> Result<SvdFactorization> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::ShapeMismatch("svd of an empty matrix".into()));
    }
    check_finite(a)?;
    let dec = SVD::new(a.clone(), true, true);
    let (mut u, mut v, mut s) =
        (dec.u.expect("u requested"), dec.v_t.expect("v requested").transpose(), dec.singular_values);
    let tol = 16.0 * f64::EPSILON * (a.nrows() + a.ncols()) as f64 * a.norm();
    if (&u * Matrix::from_diagonal(&s) * v.transpose() - a).norm() > tol {
        (u, s, v) = jacobi_svd(a);
    }

    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&i, &j| s[j].partial_cmp(&s[i]).expect("finite singular values"));

    let k = s.len();
    let mut us = Matrix::zeros(a.nrows(), k);
    let mut vs = Matrix::zeros(a.ncols(), k);
    let mut ss = DVector::zeros(k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &v.column(src));
        ss[dst] = s[src].max(0.0);
    }
    Ok(SvdFactorization {
        u: OrthonormalBasis::new_unchecked(us),
        singular_values: ss,
        v: OrthonormalBasis::new_unchecked(vs),
    })
}

/// One-sided Jacobi SVD, unsorted. Used when the bidiagonal factorization fails to reconstruct `a`.
fn jacobi_svd(a: &Matrix) -> (Matrix, DVector<f64>, Matrix) {
    let wide = a.nrows() < a.ncols();
    let mut w = if wide { a.transpose() } else { a.clone() };
    let (m, n) = w.shape();
    let mut v = Matrix::identity(n, n);
    for _ in 0..100 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = w.column(i).norm_squared();
                let beta = w.column(j).norm_squared();
                let gamma = w.column(i).dot(&w.column(j));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                for mat in [&mut w, &mut v] {
                    for row in 0..mat.nrows() {
                        let (x, y) = (mat[(row, i)], mat[(row, j)]);
                        mat[(row, i)] = c * x - sn * y;
                        mat[(row, j)] = sn * x + c * y;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let s = DVector::from_fn(n, |j, _| w.column(j).norm());
    let smax = s.max();
    let keep: Vec<usize> = (0..n).filter(|&j| s[j] > f64::EPSILON * smax && s[j] > 0.0).collect();
    let mut u = Matrix::zeros(m, n);
    for &j in &keep {
        u.set_column(j, &(w.column(j) / s[j]));
    }
    let dropped: Vec<usize> = (0..n).filter(|j| !keep.contains(j)).collect();
    if !dropped.is_empty() {
        let mut aug = Matrix::zeros(m, keep.len() + m);
        for (c, &j) in keep.iter().enumerate() {
            aug.set_column(c, &u.column(j));
        }
        aug.columns_mut(keep.len(), m).fill_with_identity();
        let q = aug.qr().q();
        for (c, &j) in dropped.iter().enumerate() {
            u.set_column(j, &q.column(keep.len() + c));
        }
    }
    if wide {
        (v, s, u)
    } else {
        (u, s, v)
    }
}

/// Singular values only, non-increasing.
pub fn singular_values(a: &Matrix) -> DVector<f64> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return DVector::zeros(0);
    }
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.partial_cmp(x).expect("finite singular values"));
    DVector::from_vec(s)
}

/// `‖A‖`; zero for an empty matrix.
pub fn spectral_norm(a: &Matrix) -> f64 {
    singular_values(a).iter().copied().next().unwrap_or(0.0)
}

/// Smallest non-trivial singular value `σ_min(A) = σ_{min(p₁,p₂)}(A)`.
pub fn sigma_min(a: &Matrix) -> f64 {
    singular_values(a).iter().copied().last().unwrap_or(0.0)
}

/// Orthonormal `V_⊥` with `[V V_⊥]` orthogonal.
pub fn orthonormal_complement(v: &OrthonormalBasis) -> Result<OrthonormalBasis> {
    let (p, r) = (v.ambient_dim(), v.rank());
    if r >= p {
        return Err(Error::EmptyComplement);
    }
    // Householder QR of [V I]: the first r columns of Q span V, the rest complete it.
    let mut aug = Matrix::zeros(p, r + p);
    aug.columns_mut(0, r).copy_from(v.as_matrix());
    aug.columns_mut(r, p).fill_with_identity();
    let q = aug.qr().q();
    Ok(OrthonormalBasis::new_unchecked(q.columns(r, p - r).into_owned()))
}

/// Spectral and Frobenius sin-Θ distances.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SinThetaDistances {
    pub spectral: f64,
    pub frobenius: f64,
}

fn check_same_shape(v: &OrthonormalBasis, w: &OrthonormalBasis) -> Result<()> {
    if v.ambient_dim() != w.ambient_dim() || v.rank() != w.rank() {
        return Err(Error::ShapeMismatch(format!(
            "sin-Θ needs equal shapes, got {}×{} and {}×{}",
            v.ambient_dim(),
            v.rank(),
            w.ambient_dim(),
            w.rank()
        )));
    }
    Ok(())
}

/// `‖V̂ᵀV_⊥‖` and `‖V̂ᵀV_⊥‖_F`.
///
/// Evaluated as the residual `(I - VVᵀ)V̂ = V_⊥V_⊥ᵀV̂`, which has the same
/// singular values as `V_⊥ᵀV̂` without forming the complement.
pub fn sin_theta(v: &OrthonormalBasis, v_hat: &OrthonormalBasis) -> Result<SinThetaDistances> {
    check_same_shape(v, v_hat)?;
    let r = v.rank();
    if r == v.ambient_dim() {
        return Ok(SinThetaDistances { spectral: 0.0, frobenius: 0.0 });
    }
    let vm = v.as_matrix();
    let wm = v_hat.as_matrix();
    let resid = wm - vm * (vm.transpose() * wm);
    let spectral = spectral_norm(&resid).min(1.0);
    let frobenius = resid.norm().min((r as f64).sqrt());
    Ok(SinThetaDistances { spectral, frobenius })
}

/// Procrustes and projector distances between two subspaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EquivalentMetrics {
    /// `inf_O ‖V̂ - VO‖`
    pub d_sp: f64,
    /// `inf_O ‖V̂ - VO‖_F`
    pub d_f: f64,
    /// `‖V̂V̂ᵀ - VVᵀ‖`
    pub proj_sp: f64,
    /// `‖V̂V̂ᵀ - VVᵀ‖_F`
    pub proj_f: f64,
}

/// Orthogonal `O` minimising `‖B O - A‖_F`, i.e. the polar factor of `Bᵀ A`.
pub fn procrustes_rotation(b: &Matrix, a: &Matrix) -> Result<Matrix> {
    if a.shape() != b.shape() {
        return Err(Error::ShapeMismatch("procrustes operands differ in shape".into()));
    }
    let m = b.transpose() * a;
    let dec = svd(&m)?;
    Ok(dec.u.as_matrix() * dec.v.as_matrix().transpose())
}

pub fn equivalent_metrics(v: &OrthonormalBasis, v_hat: &OrthonormalBasis) -> Result<EquivalentMetrics> {
    check_same_shape(v, v_hat)?;
    let o = procrustes_rotation(v.as_matrix(), v_hat.as_matrix())?;
    let diff = v_hat.as_matrix() - v.as_matrix() * o;
    let proj = v_hat.projector() - v.projector();
    Ok(EquivalentMetrics {
        d_sp: spectral_norm(&diff),
        d_f: diff.norm(),
        proj_sp: spectral_norm(&proj),
        proj_f: proj.norm(),
    })
}

/// i.i.d. standard normal entries.
pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed element of `𝕆_{p,r}`: QR of a Gaussian matrix with the
/// columns of Q multiplied by `sign(R_jj)`.
pub fn haar_orthonormal<R: Rng + ?Sized>(p: usize, r: usize, rng: &mut R) -> Result<OrthonormalBasis> {
    if r == 0 || r > p {
        return Err(Error::invalid(format!("haar_orthonormal needs 1 ≤ r ≤ p, got p = {p}, r = {r}")));
    }
    let g = gaussian_matrix(p, r, rng);
    let qr = g.qr();
    let rr = qr.r();
    let mut q = qr.q();
    for j in 0..r {
        if rr[(j, j)] < 0.0 {
            q.column_mut(j).neg_mut();
        }
    }
    Ok(OrthonormalBasis::new_unchecked(q))
}

/// Eigen-decomposition of a symmetric matrix, eigenvalues non-increasing.
pub fn symmetric_eigen_sorted(a: &Matrix) -> (DVector<f64>, Matrix) {
    let eig = SymmetricEigen::new(a.clone());
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].partial_cmp(&eig.eigenvalues[i]).expect("finite eigenvalues"));
    let mut vals = DVector::zeros(n);
    let mut vecs = Matrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        vecs.set_column(dst, &eig.eigenvectors.column(src));
    }
    (vals, vecs)
}

/// `A^e` for symmetric positive definite `A`; fails if `λ_min(A) ≤ floor`.
pub fn symmetric_power(a: &Matrix, exponent: f64, floor: f64) -> Result<Matrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::ShapeMismatch("symmetric power of a non-square matrix".into()));
    }
    let (vals, vecs) = symmetric_eigen_sorted(a);
    let lmin = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if lmin <= floor {
        return Err(Error::SingularCovariance(format!("minimum eigenvalue {lmin:e} is not above {floor:e}")));
    }
    let mut scaled = vecs.clone();
    for (j, l) in vals.iter().enumerate() {
        scaled.column_mut(j).scale_mut(l.powf(exponent));
    }
    Ok(scaled * vecs.transpose())
}

/// Leading `r` singular triplets of `y`.
#[derive(Clone, Debug)]
pub struct LeadingSubspaces {
    pub u: OrthonormalBasis,
    pub singular_values: DVector<f64>,
    pub v: OrthonormalBasis,
}

/// Leading `r` left/right singular subspaces through the eigen-decomposition
/// of the smaller Gram matrix.
///
/// Much cheaper than a full SVD when one dimension is small. The long side is
/// recovered as `Y v / σ` and re-orthonormalised; falls back to [`svd`] when
/// the r-th singular value is negligible.
pub fn leading_singular_subspaces(y: &Matrix, r: usize) -> Result<LeadingSubspaces> {
    let (p1, p2) = y.shape();
    if r == 0 || r > p1.min(p2) {
        return Err(Error::invalid(format!("rank {r} out of range for a {p1}×{p2} matrix")));
    }
    let tall = p1 >= p2;
    let gram = if tall { y.tr_mul(y) } else { y * y.transpose() };
    let (vals, vecs) = symmetric_eigen_sorted(&gram);
    let s: Vec<f64> = vals.iter().take(r).map(|l| l.max(0.0).sqrt()).collect();
    if s[0] == 0.0 || s[r - 1] <= 1e-10 * s[0] {
        let dec = svd(y)?;
        return Ok(LeadingSubspaces {
            u: dec.u.columns(0, r),
            singular_values: dec.singular_values.rows(0, r).into_owned(),
            v: dec.v.columns(0, r),
        });
    }
    let short = vecs.columns(0, r).into_owned();
    let mut long = if tall { y * &short } else { y.tr_mul(&short) };
    for (j, sj) in s.iter().enumerate() {
        long.column_mut(j).scale_mut(1.0 / sj);
    }
    let long = long.qr().q();
    let (u, v) = if tall { (long, short) } else { (short, long) };
    Ok(LeadingSubspaces {
        u: OrthonormalBasis::new_unchecked(u),
        singular_values: DVector::from_vec(s),
        v: OrthonormalBasis::new_unchecked(v),
    })
}

/// Parses a headerless CSV matrix. Ragged rows and non-finite values are rejected.
pub fn parse_matrix_csv<R: Read>(reader: R) -> Result<Matrix> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(false).trim(csv::Trim::All).from_reader(reader);
    let mut data: Vec<Vec<f64>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("row {}: {e}", i + 1)))?;
        let row = rec
            .iter()
            .enumerate()
            .map(|(j, field)| {
                let x: f64 = field
                    .parse()
                    .map_err(|_| Error::Parse(format!("row {}, column {}: `{field}` is not a number", i + 1, j + 1)))?;
                if !x.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                Ok(x)
            })
            .collect::<Result<Vec<f64>>>()?;
        data.push(row);
    }
    if data.is_empty() || data[0].is_empty() {
        return Err(Error::Parse("matrix file is empty".into()));
    }
    let (rows, cols) = (data.len(), data[0].len());
    Ok(Matrix::from_fn(rows, cols, |i, j| data[i][j]))
}

pub fn read_matrix_csv(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
    parse_matrix_csv(file)
}

/// Shortest round-trip decimal, switching to exponent form for very large or small magnitudes.
pub fn format_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || (1e-5..1e16).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn write_matrix_csv_to<W: Write>(a: &Matrix, mut out: W) -> std::io::Result<()> {
    for i in 0..a.nrows() {
        let line: Vec<String> = (0..a.ncols()).map(|j| format_f64(a[(i, j)])).collect();
        writeln!(out, "{}", line.join(","))?;
    }
    Ok(())
}

pub fn write_matrix_csv(a: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_matrix_csv_to(a, &mut w).map_err(io)?;
    w.flush().map_err(io)
}
