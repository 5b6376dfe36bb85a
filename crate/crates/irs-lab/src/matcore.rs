//! Dense complex linear-algebra kernels with an explicit tolerance policy.
//!
//! Everything downstream (channel synthesis, beamformer design, rate
//! evaluation) funnels its numerics through this module so that rank
//! decisions, pseudo-inverse truncation, and eigenvector sign/phase
//! conventions are made in exactly one place.

use nalgebra::{Complex, DMatrix, DVector};
use thiserror::Error;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Relative asymmetry allowed before a matrix is rejected as non-Hermitian.
pub const HERMITIAN_REL_TOL: f64 = 1e-10;
/// Default relative singular-value cutoff for pseudo-inverse truncation.
pub const PINV_REL_TOL: f64 = 1e-12;
/// Default relative singular-value cutoff for numerical rank.
pub const RANK_REL_TOL: f64 = 1e-10;
/// Positive-definiteness floor: smallest eigenvalue must exceed this times
/// the Frobenius norm of the matrix.
pub const PD_REL_TOL: f64 = 1e-12;
/// Two eigenvalues closer than this (relative to the largest magnitude) are
/// treated as degenerate and tie-broken deterministically.
pub const EIG_TIE_REL_TOL: f64 = 1e-10;
/// Condition-number threshold above which linear solves add a diagonal
/// loading of `1e-12 * trace / dim` before factoring.
pub const COND_LIMIT: f64 = 1e12;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hermitian: relative asymmetry {asym:.3e} exceeds {tol:.3e}")]
    NotHermitian { asym: f64, tol: f64 },
    #[error("matrix is not positive definite: min eigenvalue {min_eig:.3e} vs floor {floor:.3e}")]
    NotPositiveDefinite { min_eig: f64, floor: f64 },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("tolerance {0} outside (0, 1)")]
    BadTolerance(f64),
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("eigendecomposition produced no eigenvalues (empty matrix)")]
    EmptyMatrix,
}

pub type Result<T> = std::result::Result<T, MatError>;

/// Top eigenpair of a Hermitian matrix: real eigenvalue plus the unit-norm,
/// phase-fixed eigenvector.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub vector: CVec,
}

pub fn is_finite(a: &CMat) -> bool {
    a.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// Relative departure from Hermitian symmetry, `‖A − Aᴴ‖_F / ‖A‖_F`.
pub fn hermitian_asymmetry(a: &CMat) -> f64 {
    let norm = a.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (a - a.adjoint()).norm() / norm
}

/// Project onto the Hermitian part, `(A + Aᴴ)/2`. Used to scrub roundoff
/// before eigendecompositions.
pub fn hermitianize(a: &CMat) -> CMat {
    (a + a.adjoint()).scale(0.5)
}

fn check_square_hermitian(a: &CMat) -> Result<()> {
    if a.nrows() != a.ncols() {
        return Err(MatError::NotSquare {
            rows: a.nrows(),
            cols: a.ncols(),
        });
    }
    if !is_finite(a) {
        return Err(MatError::NonFinite);
    }
    let asym = hermitian_asymmetry(a);
    if asym > HERMITIAN_REL_TOL {
        return Err(MatError::NotHermitian {
            asym,
            tol: HERMITIAN_REL_TOL,
        });
    }
    Ok(())
}

/// Rotate `v` so its first non-negligible component is real and positive.
/// Makes eigenvectors reproducible across runs and backends.
pub fn fix_phase(v: &mut CVec) {
    let max_abs = v.iter().map(|z| z.norm()).fold(0.0_f64, f64::max);
    if max_abs == 0.0 {
        return;
    }
    let lead = v.iter().find(|z| z.norm() > 1e-9 * max_abs);
    if let Some(&z) = lead {
        let phase = z / z.norm();
        let rot = phase.conj();
        for entry in v.iter_mut() {
            *entry *= rot;
        }
    }
}

/// All eigenpairs of a Hermitian matrix, eigenvalues descending, each vector
/// unit-norm and phase-fixed. The input is symmetrized first so callers can
/// pass products like `BᴴB` without scrubbing roundoff themselves.
pub fn hermitian_eig_desc(a: &CMat) -> Result<(Vec<f64>, Vec<CVec>)> {
    check_square_hermitian(a)?;
    if a.nrows() == 0 {
        return Err(MatError::EmptyMatrix);
    }
    let h = hermitianize(a);
    let eig = nalgebra::SymmetricEigen::new(h);
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        eig.eigenvalues[j]
            .partial_cmp(&eig.eigenvalues[i])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut values = Vec::with_capacity(n);
    let mut vectors = Vec::with_capacity(n);
    for &i in &order {
        values.push(eig.eigenvalues[i]);
        let mut v: CVec = eig.eigenvectors.column(i).into_owned();
        let norm = v.norm();
        if norm > 0.0 {
            v /= C64::new(norm, 0.0);
        }
        fix_phase(&mut v);
        vectors.push(v);
    }
    Ok((values, vectors))
}

/// Lexicographic comparison of component magnitudes; used to tie-break
/// near-degenerate eigenvectors deterministically.
fn lex_cmp_abs(a: &CVec, b: &CVec) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.norm().partial_cmp(&y.norm()) {
            Some(std::cmp::Ordering::Equal) | None => continue,
            Some(ord) => return ord,
        }
    }
    std::cmp::Ordering::Equal
}

/// Top eigenpair of a Hermitian matrix.
///
/// When the two largest eigenvalues differ by less than
/// [`EIG_TIE_REL_TOL`] relative to the top magnitude, the returned vector is
/// the candidate with the lexicographically largest component magnitudes, so
/// degenerate spectra still produce a reproducible answer.
pub fn hermitian_top_eigpair(a: &CMat) -> Result<EigenPair> {
    let (values, vectors) = hermitian_eig_desc(a)?;
    let top = values[0];
    let scale = values.iter().map(|v| v.abs()).fold(0.0_f64, f64::max);
    let tie_gap = EIG_TIE_REL_TOL * scale.max(f64::MIN_POSITIVE);
    let mut best = 0usize;
    for i in 1..values.len() {
        if top - values[i] < tie_gap {
            if lex_cmp_abs(&vectors[i], &vectors[best]) == std::cmp::Ordering::Greater {
                best = i;
            }
        } else {
            break;
        }
    }
    Ok(EigenPair {
        value: values[best],
        vector: vectors[best].clone(),
    })
}

/// Inverse principal square root `D^{-1/2}` of a Hermitian positive-definite
/// matrix, via eigendecomposition. Fails if the smallest eigenvalue does not
/// clear `PD_REL_TOL · ‖D‖_F`.
pub fn matrix_inv_sqrt(d: &CMat) -> Result<CMat> {
    check_square_hermitian(d)?;
    if d.nrows() == 0 {
        return Err(MatError::EmptyMatrix);
    }
    let h = hermitianize(d);
    let floor = PD_REL_TOL * h.norm();
    let eig = nalgebra::SymmetricEigen::new(h);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= floor {
        return Err(MatError::NotPositiveDefinite { min_eig, floor });
    }
    let n = eig.eigenvalues.len();
    let mut scaled = eig.eigenvectors.clone();
    for j in 0..n {
        let s = C64::new(1.0 / eig.eigenvalues[j].sqrt(), 0.0);
        scaled.column_mut(j).scale_mut(1.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    Ok(&scaled * eig.eigenvectors.adjoint())
}

/// Top generalized eigenvector of the Hermitian pencil `(A, D)`: maximizes
/// the Rayleigh quotient `vᴴAv / vᴴDv` over unit vectors. `D` must be
/// positive definite. The result is unit-norm and phase-fixed; the returned
/// value is the maximized quotient.
pub fn generalized_top_eigvec(a: &CMat, d: &CMat) -> Result<EigenPair> {
    check_square_hermitian(a)?;
    if a.nrows() != d.nrows() || a.ncols() != d.ncols() {
        return Err(MatError::DimensionMismatch(format!(
            "pencil shapes {}x{} vs {}x{}",
            a.nrows(),
            a.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    let s = matrix_inv_sqrt(d)?;
    let m = &s * hermitianize(a) * &s;
    let pair = hermitian_top_eigpair(&m)?;
    let mut v = &s * pair.vector;
    let norm = v.norm();
    if norm > 0.0 {
        v /= C64::new(norm, 0.0);
    }
    fix_phase(&mut v);
    Ok(EigenPair {
        value: pair.value,
        vector: v,
    })
}

/// Moore–Penrose pseudo-inverse with relative singular-value truncation:
/// singular values at or below `rel_tol · σ_max` are dropped.
pub fn pinv(a: &CMat, rel_tol: f64) -> Result<CMat> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(MatError::BadTolerance(rel_tol));
    }
    if !is_finite(a) {
        return Err(MatError::NonFinite);
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd with u requested");
    let v_t = svd.v_t.as_ref().expect("svd with v_t requested");
    let sigma_max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let cutoff = rel_tol * sigma_max;
    let k = svd.singular_values.len();
    let mut inv_sigma = DMatrix::<C64>::zeros(k, k);
    for i in 0..k {
        let s = svd.singular_values[i];
        if s > cutoff && s > 0.0 {
            inv_sigma[(i, i)] = C64::new(1.0 / s, 0.0);
        }
    }
    // A = U Σ Vᴴ  ⇒  A⁺ = V Σ⁺ Uᴴ
    Ok(v_t.adjoint() * inv_sigma * u.adjoint())
}

/// Numerical rank: the count of singular values above `rel_tol · σ_max`.
/// The zero matrix has rank 0.
pub fn numerical_rank(a: &CMat, rel_tol: f64) -> Result<usize> {
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        return Err(MatError::BadTolerance(rel_tol));
    }
    if !is_finite(a) {
        return Err(MatError::NonFinite);
    }
    if a.nrows() == 0 || a.ncols() == 0 {
        return Ok(0);
    }
    let sv = a.clone().svd(false, false).singular_values;
    let sigma_max = sv.iter().cloned().fold(0.0_f64, f64::max);
    if sigma_max == 0.0 {
        return Ok(0);
    }
    let cutoff = rel_tol * sigma_max;
    Ok(sv.iter().filter(|&&s| s > cutoff).count())
}

/// Apply the shared conditioning policy to a Hermitian PSD matrix: if its
/// condition number exceeds [`COND_LIMIT`], add a ridge of
/// `1e-12 · trace/n` (with an absolute floor of 1e-12 for numerically zero
/// matrices). Returns the possibly loaded matrix and the loading used.
pub fn ridge_load(a: &CMat) -> Result<(CMat, f64)> {
    check_square_hermitian(a)?;
    let n = a.nrows();
    let mut m = hermitianize(a);
    if n == 0 {
        return Ok((m, 0.0));
    }
    let eig = nalgebra::SymmetricEigen::new(m.clone());
    let max_eig = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = if min_eig > 0.0 { max_eig / min_eig } else { f64::INFINITY };
    let mut loading = 0.0;
    if !cond.is_finite() || cond > COND_LIMIT {
        let trace: C64 = m.diagonal().iter().sum();
        loading = 1e-12 * trace.re / n as f64;
        // Degenerate case: a numerically zero matrix still needs a usable
        // system, so fall back to an absolute floor.
        if loading <= 0.0 {
            loading = 1e-12;
        }
        for i in 0..n {
            m[(i, i)] += C64::new(loading, 0.0);
        }
    }
    Ok((m, loading))
}

/// Solve `A X = B` for Hermitian positive-semidefinite `A`, with automatic
/// diagonal loading per [`ridge_load`]. Returns the solution and the loading
/// that was applied (0.0 when none).
pub fn solve_hermitian(a: &CMat, b: &CMat) -> Result<(CMat, f64)> {
    if a.nrows() != b.nrows() {
        return Err(MatError::DimensionMismatch(format!(
            "lhs is {}x{} but rhs has {} rows",
            a.nrows(),
            a.ncols(),
            b.nrows()
        )));
    }
    let (m, loading) = ridge_load(a)?;
    let lu = m.lu();
    match lu.solve(&b.clone()) {
        Some(x) => Ok((x, loading)),
        None => Err(MatError::NotPositiveDefinite {
            min_eig: 0.0,
            floor: 0.0,
        }),
    }
}

/// `log₂ det(I + M)` for Hermitian PSD `M`, computed from eigenvalues with
/// negative roundoff clamped at zero. Callers pass the SINR-like matrix.
pub fn log2_det_i_plus(m: &CMat) -> Result<f64> {
    check_square_hermitian(m)?;
    let h = hermitianize(m);
    let eig = nalgebra::SymmetricEigen::new(h);
    let mut acc = 0.0;
    for &lambda in eig.eigenvalues.iter() {
        acc += (1.0 + lambda.max(0.0)).log2();
    }
    Ok(acc)
}

/// Convenience: `n × n` identity.
pub fn eye(n: usize) -> CMat {
    CMat::identity(n, n)
}

/// Convenience: build a matrix from a row-major complex slice.
pub fn cmat_from_rows(rows: usize, cols: usize, data: &[C64]) -> CMat {
    assert_eq!(rows * cols, data.len(), "shape mismatch building matrix");
    CMat::from_row_slice(rows, cols, data)
}
