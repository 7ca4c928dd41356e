//! Deterministic spectral decompositions and rank primitives.
//!
//! Everything downstream (witness construction, Ky Fan subgradients, the
//! stage solver) consumes decompositions through this module so that the
//! ordering, tie-breaking and sign conventions are fixed in exactly one
//! place. Two calls on bit-identical input produce bit-identical output.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

#[allow(unused_imports)]
use crate::float::*;
use crate::{Error, Result};

/// Relative threshold under which a singular value is reported as zero.
pub const RANK_REL_TOL: f64 = 1e-10;

/// Symmetry tolerance for the eigen path of [`decompose`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// A rank budget `κ ≥ 1`. The upper bound `κ ≤ min(n₁,n₂)` is checked at the
/// operation that sees the matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RankSpec {
    kappa: usize,
}

impl RankSpec {
    pub fn new(kappa: usize) -> Result<Self> {
        if kappa == 0 {
            return Err(Error::InvalidInput("rank bound kappa must be >= 1".into()));
        }
        Ok(Self { kappa })
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    fn check_against(&self, n: usize) -> Result<()> {
        if self.kappa > n {
            return Err(Error::InvalidInput(format!(
                "kappa = {} exceeds min(n1,n2) = {}",
                self.kappa, n
            )));
        }
        Ok(())
    }
}

/// An ordered decomposition `X = Σᵢ valueᵢ · uᵢ vᵢᵀ`.
///
/// For the general (SVD) path the values are the singular values, sorted
/// nonincreasing and nonnegative. For the symmetric (eigen) path the values
/// are the signed eigenvalues sorted nonincreasing and the right family
/// equals the left one.
///
/// Sign convention: in each left column the entry of largest magnitude
/// (lowest index on ties) is nonnegative; on the SVD path the matching right
/// column is flipped along with it so the reconstruction is unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralForm {
    left_vectors: DMatrix<f64>,
    values: DVector<f64>,
    right_vectors: DMatrix<f64>,
    symmetric: bool,
}

impl SpectralForm {
    /// Orthonormal left family, one column per value.
    pub fn left_vectors(&self) -> &DMatrix<f64> {
        &self.left_vectors
    }

    /// Values sorted nonincreasing (singular values, or signed eigenvalues
    /// on the symmetric path).
    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    /// Orthonormal right family; aliases the left family on the symmetric
    /// path.
    pub fn right_vectors(&self) -> &DMatrix<f64> {
        &self.right_vectors
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    /// `Σᵢ valueᵢ uᵢvᵢᵀ`, the represented matrix.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let mut scaled = self.left_vectors.clone();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        &scaled * self.right_vectors.transpose()
    }

    /// Keeps the `κ` leading pairs: `Π_R(X) = Σ_{i≤κ} valueᵢ uᵢvᵢᵀ`.
    pub fn truncated(&self, k: RankSpec) -> DMatrix<f64> {
        let kappa = k.kappa().min(self.values.len());
        let mut scaled = self.left_vectors.columns(0, kappa).into_owned();
        for (j, mut col) in scaled.column_iter_mut().enumerate() {
            col *= self.values[j];
        }
        &scaled * self.right_vectors.columns(0, kappa).transpose()
    }

    /// Sum of the trailing values as stored (signed on the eigen path).
    pub fn tail_sum(&self, k: RankSpec) -> f64 {
        self.values.iter().skip(k.kappa()).sum()
    }

    /// Nuclear norm of `X − Π_R(X)`: sum of trailing absolute values.
    pub fn tail_nuclear(&self, k: RankSpec) -> f64 {
        self.values.iter().skip(k.kappa()).map(|v| v.abs()).sum()
    }

    /// Frobenius norm of `X − Π_R(X)`.
    pub fn tail_frobenius(&self, k: RankSpec) -> f64 {
        self.values
            .iter()
            .skip(k.kappa())
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Number of values above `RANK_REL_TOL` relative to the largest
    /// magnitude.
    pub fn rank(&self) -> usize {
        let scale = self.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if scale == 0.0 {
            return 0;
        }
        self.values
            .iter()
            .filter(|v| v.abs() >= RANK_REL_TOL * scale)
            .count()
    }
}

fn check_finite(x: &DMatrix<f64>) -> Result<()> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("matrix has non-finite entries".into()));
    }
    Ok(())
}

fn max_abs_asymmetry(x: &DMatrix<f64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.nrows() {
        for j in (i + 1)..x.ncols() {
            worst = worst.max((x[(i, j)] - x[(j, i)]).abs());
        }
    }
    worst
}

/// Sort order: values descending, stable in the original factorization
/// order so ties keep a reproducible basis.
fn descending_order(values: &DVector<f64>) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).expect("finite values"));
    idx
}

fn permute_columns(m: &DMatrix<f64>, order: &[usize]) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(m.nrows(), order.len());
    for (dst, &src) in order.iter().enumerate() {
        out.set_column(dst, &m.column(src));
    }
    out
}

/// Index of the entry of largest magnitude, lowest index on ties.
fn dominant_index(col: nalgebra::DVectorView<'_, f64>) -> usize {
    let mut best = 0;
    let mut best_abs = col[0].abs();
    for (i, v) in col.iter().enumerate().skip(1) {
        if v.abs() > best_abs {
            best = i;
            best_abs = v.abs();
        }
    }
    best
}

/// Decomposes `x` into a [`SpectralForm`].
///
/// With `symmetric` set the input must be square and symmetric to
/// [`SYMMETRY_TOL`]; the eigen path is used and the values are signed
/// eigenvalues. Otherwise a singular value form is computed. Either way the
/// result is deterministic for identical input bits: values are sorted
/// nonincreasing with a stable sort, and every left column is flipped so
/// its dominant entry is nonnegative.
///
/// The direct bidiagonal SVD can silently lose accuracy on exactly
/// rank-deficient inputs, which this crate produces all the time
/// (truncations, witnesses, shrinkage outputs). Symmetric inputs are
/// therefore routed through the tridiagonal eigen path, and the general
/// path verifies its reconstruction residual, falling back to the
/// symmetric-embedding eigendecomposition of `[[0, X], [Xᵀ, 0]]` when the
/// direct factorization is off.
pub fn decompose(x: &DMatrix<f64>, symmetric: bool) -> Result<SpectralForm> {
    check_finite(x)?;
    if symmetric {
        if x.nrows() != x.ncols() {
            return Err(Error::InvalidInput(format!(
                "symmetric decomposition needs a square matrix, got {}x{}",
                x.nrows(),
                x.ncols()
            )));
        }
        let asym = max_abs_asymmetry(x);
        if asym > SYMMETRY_TOL {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric: max |X - X^T| entry = {asym:.3e}"
            )));
        }
        return Ok(eigen_form(x));
    }
    if x.nrows() == x.ncols() && max_abs_asymmetry(x) <= SYMMETRY_TOL {
        return Ok(singular_form_of_symmetric(x));
    }
    let direct = direct_svd_form(x);
    let residual = (x - direct.reconstruct()).norm();
    if residual <= 1e-11 * (1.0 + x.norm()) {
        return Ok(direct);
    }
    Ok(embedded_svd_form(x))
}

/// Signed eigen form of a (sub-tolerance) symmetric matrix.
fn eigen_form(x: &DMatrix<f64>) -> SpectralForm {
    // Work on the exactly symmetrized matrix so the factorization cannot
    // see the sub-tolerance asymmetry.
    let sym = (x + x.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let order = descending_order(&eig.eigenvalues);
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = permute_columns(&eig.eigenvectors, &order);
    for mut col in vectors.column_iter_mut() {
        let lead = dominant_index(nalgebra::DVectorView::from(&col));
        if col[lead] < 0.0 {
            col.neg_mut();
        }
    }
    SpectralForm {
        left_vectors: vectors.clone(),
        values,
        right_vectors: vectors,
        symmetric: true,
    }
}

/// Singular value form of a symmetric matrix through its eigendecomposition:
/// `σᵢ = |λᵢ|`, left column `sign(λᵢ)·uᵢ`, right column `uᵢ`.
fn singular_form_of_symmetric(x: &DMatrix<f64>) -> SpectralForm {
    let eigen = eigen_form(x);
    let n = eigen.values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eigen.values[b]
            .abs()
            .partial_cmp(&eigen.values[a].abs())
            .expect("finite values")
    });
    let values = DVector::from_iterator(n, order.iter().map(|&i| eigen.values[i].abs()));
    let right = permute_columns(&eigen.right_vectors, &order);
    let mut left = right.clone();
    for (dst, &src) in order.iter().enumerate() {
        if eigen.values[src] < 0.0 {
            left.column_mut(dst).neg_mut();
        }
    }
    let (left, right) = apply_sign_convention(left, right);
    SpectralForm {
        left_vectors: left,
        values,
        right_vectors: right,
        symmetric: false,
    }
}

fn apply_sign_convention(
    mut left: DMatrix<f64>,
    mut right: DMatrix<f64>,
) -> (DMatrix<f64>, DMatrix<f64>) {
    for j in 0..left.ncols() {
        let lead = dominant_index(left.column(j));
        if left[(lead, j)] < 0.0 {
            left.column_mut(j).neg_mut();
            right.column_mut(j).neg_mut();
        }
    }
    (left, right)
}

fn direct_svd_form(x: &DMatrix<f64>) -> SpectralForm {
    let svd = x.clone().svd(true, true);
    let u = svd.u.expect("u requested");
    let v_t = svd.v_t.expect("v_t requested");
    let order = descending_order(&svd.singular_values);
    let values = DVector::from_iterator(order.len(), order.iter().map(|&i| svd.singular_values[i]));
    let left = permute_columns(&u, &order);
    let right = permute_columns(&v_t.transpose(), &order);
    let (left, right) = apply_sign_convention(left, right);
    SpectralForm {
        left_vectors: left,
        values,
        right_vectors: right,
        symmetric: false,
    }
}

/// Robust singular value form through the eigendecomposition of the
/// symmetric embedding `[[0, X], [Xᵀ, 0]]`, whose positive eigenvalues are
/// the singular values with eigenvectors `(uᵢ; vᵢ)/√2`. Frames belonging to
/// negligible singular values are completed deterministically against the
/// canonical basis.
fn embedded_svd_form(x: &DMatrix<f64>) -> SpectralForm {
    let (rows, cols) = x.shape();
    let n = rows.min(cols);
    let m = rows + cols;
    let mut embed = DMatrix::zeros(m, m);
    embed.view_mut((0, rows), (rows, cols)).copy_from(x);
    embed
        .view_mut((rows, 0), (cols, rows))
        .copy_from(&x.transpose());
    let eig = embed.symmetric_eigen();
    let order = descending_order(&eig.eigenvalues);

    let sqrt2 = 2.0f64.sqrt();
    let sigma_max = eig.eigenvalues[order[0]].max(0.0);
    let trust_tol = 1e-12 * (1.0 + sigma_max);
    let mut values = DVector::zeros(n);
    let mut left = DMatrix::zeros(rows, n);
    let mut right = DMatrix::zeros(cols, n);
    let mut trusted = alloc::vec![false; n];
    for i in 0..n {
        let idx = order[i];
        let lambda = eig.eigenvalues[idx];
        values[i] = lambda.max(0.0);
        if lambda > trust_tol {
            let w = eig.eigenvectors.column(idx);
            for r in 0..rows {
                left[(r, i)] = w[r] * sqrt2;
            }
            for c in 0..cols {
                right[(c, i)] = w[rows + c] * sqrt2;
            }
            trusted[i] = true;
        }
    }
    complete_frame(&mut left, &trusted);
    complete_frame(&mut right, &trusted);
    let (left, right) = apply_sign_convention(left, right);
    SpectralForm {
        left_vectors: left,
        values,
        right_vectors: right,
        symmetric: false,
    }
}

/// Fills the untrusted columns with an orthonormal completion, scanning the
/// canonical basis in index order (deterministic).
fn complete_frame(frame: &mut DMatrix<f64>, trusted: &[bool]) {
    let dim = frame.nrows();
    let total = frame.ncols();
    let mut accepted: Vec<usize> = (0..total).filter(|&j| trusted[j]).collect();
    let mut next_canonical = 0usize;
    for (j, &is_trusted) in trusted.iter().enumerate() {
        if is_trusted {
            continue;
        }
        let mut found = false;
        while next_canonical < dim {
            let mut cand = DVector::zeros(dim);
            cand[next_canonical] = 1.0;
            next_canonical += 1;
            for &a in &accepted {
                let proj = frame.column(a).dot(&cand);
                for r in 0..dim {
                    cand[r] -= proj * frame[(r, a)];
                }
            }
            let norm = cand.norm();
            if norm > 0.5 {
                cand /= norm;
                frame.set_column(j, &cand);
                accepted.push(j);
                found = true;
                break;
            }
        }
        if !found {
            // dim < total can't happen for min(n1,n2) columns; leave zeros
            break;
        }
    }
}

/// `Σ_{i>κ} σᵢ(X)`, the residual of the best rank-`κ` approximation in the
/// nuclear norm; zero iff `rank(X) ≤ κ`.
pub fn tail_sum(x: &DMatrix<f64>, k: RankSpec) -> Result<f64> {
    let form = decompose(x, false)?;
    k.check_against(form.values.len())?;
    Ok(form.tail_sum(k))
}

/// Best rank-`κ` truncation `Π_R(X)` in the Frobenius (and nuclear) sense.
pub fn truncate(x: &DMatrix<f64>, k: RankSpec) -> Result<DMatrix<f64>> {
    let form = decompose(x, false)?;
    k.check_against(form.values.len())?;
    Ok(form.truncated(k))
}

/// Eigen-path truncation `Σ_{i≤κ} λᵢuᵢuᵢᵀ` keeping the κ algebraically
/// largest eigenvalues. This is the truncation the density and correlation
/// witnesses are built from.
pub fn truncate_symmetric(x: &DMatrix<f64>, k: RankSpec) -> Result<DMatrix<f64>> {
    let form = decompose(x, true)?;
    k.check_against(form.values.len())?;
    Ok(form.truncated(k))
}

/// Ky Fan κ-norm `‖X‖_κ = Σ_{i≤κ} σᵢ(X)`.
pub fn kyfan_norm(x: &DMatrix<f64>, k: RankSpec) -> Result<f64> {
    let form = decompose(x, false)?;
    k.check_against(form.values.len())?;
    Ok(form.values.iter().take(k.kappa()).sum())
}

/// The Ky Fan κ-norm subgradient `W = U₁V₁ᵀ` built from the κ leading
/// singular pairs of `xhat`, so `⟨W, xhat⟩ = ‖xhat‖_κ`, `‖W‖₂ ≤ 1` and
/// `rank(W) ≤ κ`. Ties among singular values are resolved by the
/// deterministic ordering of [`decompose`].
pub fn kyfan_subgradient(xhat: &DMatrix<f64>, k: RankSpec) -> Result<DMatrix<f64>> {
    let form = decompose(xhat, false)?;
    k.check_against(form.values.len())?;
    let kappa = k.kappa();
    let u1 = form.left_vectors.columns(0, kappa);
    let v1 = form.right_vectors.columns(0, kappa);
    Ok(u1 * v1.transpose())
}
