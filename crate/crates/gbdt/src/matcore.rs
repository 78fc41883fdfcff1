//! Dense complex matrix kernel: exponentials, Sylvester solves, definiteness
//! tests and null spaces. Everything here is sized for the desk-scale dense
//! problems the transformation produces (n, m well below ~200).

use nalgebra::DMatrix;
use num_complex::Complex64;
use thiserror::Error;

/// Complex scalar used throughout the crate.
pub type Cx = Complex64;

/// Dense row/column-addressable complex matrix.
pub type CMatrix = DMatrix<Cx>;

#[derive(Debug, Error)]
pub enum MatError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("shape mismatch: {context}")]
    ShapeMismatch { context: String },
    #[error("spectral separation failure: minimum eigenvalue gap {gap:.3e} <= tolerance {tol:.3e}")]
    SpectralSeparation { gap: f64, tol: f64 },
    #[error("matrix not positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("matrix is numerically singular ({context})")]
    Singular { context: String },
    #[error("eigenvalue iteration failed to converge")]
    EigenFailure,
}

pub fn is_finite(m: &CMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

/// (M + M*)/2.
pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()).scale(0.5)
}

/// Frobenius norm.
pub fn fnorm(m: &CMatrix) -> f64 {
    m.norm()
}

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

fn one_norm(m: &CMatrix) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Matrix exponential by scaling-and-squaring with a Padé(13) core.
///
/// The core delivers accuracy near machine precision for the scaled matrix;
/// `tol` is validated and checked against that floor.
pub fn mat_exp(m: &CMatrix, tol: f64) -> Result<CMatrix, MatError> {
    if m.nrows() != m.ncols() {
        return Err(MatError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if !is_finite(m) {
        return Err(MatError::NonFinite);
    }
    assert!(tol > 0.0, "mat_exp: tol must be positive");
    let n = m.nrows();
    if n == 0 {
        return Ok(CMatrix::zeros(0, 0));
    }
    if n == 1 {
        return Ok(CMatrix::from_element(1, 1, m[(0, 0)].exp()));
    }

    // theta_13 from Higham's scaling-and-squaring analysis.
    let theta = 5.371920351148152_f64;
    let norm = one_norm(m);
    let s = if norm > theta { (norm / theta).log2().ceil() as u32 } else { 0 };
    let a = m.scale(1.0 / (1u64 << s) as f64);

    let b: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let id = identity(n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a2 * &a4;
    let u_inner = &a6 * (a6.scale(b[13]) + a4.scale(b[11]) + a2.scale(b[9]))
        + a6.scale(b[7])
        + a4.scale(b[5])
        + a2.scale(b[3])
        + id.scale(b[1]);
    let u = &a * u_inner;
    let v = &a6 * (a6.scale(b[12]) + a4.scale(b[10]) + a2.scale(b[8]))
        + a6.scale(b[6])
        + a4.scale(b[4])
        + a2.scale(b[2])
        + id.scale(b[0]);

    let lhs = &v - &u;
    let rhs = &v + &u;
    let mut e = lhs
        .lu()
        .solve(&rhs)
        .ok_or(MatError::Singular { context: "Pade denominator".into() })?;
    for _ in 0..s {
        e = &e * &e;
    }
    if !is_finite(&e) {
        return Err(MatError::NonFinite);
    }
    Ok(e)
}

/// Eigenvalues of a general complex square matrix via the Schur form.
pub fn eigenvalues(m: &CMatrix) -> Result<Vec<Cx>, MatError> {
    if m.nrows() != m.ncols() {
        return Err(MatError::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Ok(vec![]);
    }
    let schur = m.clone().try_schur(1e-14, 100_000).ok_or(MatError::EigenFailure)?;
    let (_, t) = schur.unpack();
    Ok((0..m.nrows()).map(|i| t[(i, i)]).collect())
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    let (p, q) = (a.nrows(), a.ncols());
    let (r, s) = (b.nrows(), b.ncols());
    let mut out = CMatrix::zeros(p * r, q * s);
    for i in 0..p {
        for j in 0..q {
            let aij = a[(i, j)];
            for k in 0..r {
                for l in 0..s {
                    out[(i * r + k, j * s + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn vec_cols(m: &CMatrix) -> CMatrix {
    CMatrix::from_column_slice(m.nrows() * m.ncols(), 1, m.as_slice())
}

fn unvec(v: &CMatrix, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_column_slice(rows, cols, v.as_slice())
}

/// Solve the Sylvester equation `A X - X B = C` by dense linearization.
///
/// The Kronecker system is exact for the tiny matrices the transformation
/// produces; the spectral gap between `σ(A)` and `σ(B)` is checked first and
/// reported on failure.
pub fn sylvester_solve(
    a: &CMatrix,
    b: &CMatrix,
    c: &CMatrix,
    sep_tol: f64,
) -> Result<CMatrix, MatError> {
    let n = a.nrows();
    if a.ncols() != n || b.nrows() != b.ncols() || c.nrows() != n || c.ncols() != b.ncols() {
        return Err(MatError::ShapeMismatch {
            context: format!(
                "sylvester A {}x{}, B {}x{}, C {}x{}",
                a.nrows(), a.ncols(), b.nrows(), b.ncols(), c.nrows(), c.ncols()
            ),
        });
    }
    assert!(sep_tol > 0.0, "sylvester_solve: sep_tol must be positive");
    let ea = eigenvalues(a)?;
    let eb = eigenvalues(b)?;
    let mut gap = f64::INFINITY;
    for la in &ea {
        for lb in &eb {
            gap = gap.min((la - lb).norm());
        }
    }
    if gap <= sep_tol {
        return Err(MatError::SpectralSeparation { gap, tol: sep_tol });
    }
    let nb = b.nrows();
    let lhs = kron(&identity(nb), a) - kron(&b.transpose(), &identity(n));
    let x = lhs
        .lu()
        .solve(&vec_cols(c))
        .ok_or(MatError::Singular { context: "sylvester linearization".into() })?;
    let x = unvec(&x, n, nb);
    if !is_finite(&x) {
        return Err(MatError::NonFinite);
    }
    Ok(x)
}

#[derive(Debug, Clone, Copy)]
pub struct PosDefReport {
    pub hermitian_defect: f64,
    pub min_eig: f64,
    pub is_pd: bool,
}

/// Hermitian-defect plus minimum eigenvalue of the Hermitian part.
///
/// `is_pd` requires the defect to stay below `tol·‖S‖` and the Hermitian part
/// to have its smallest eigenvalue above the same threshold.
pub fn posdef_check(s: &CMatrix, tol: f64) -> Result<PosDefReport, MatError> {
    if s.nrows() != s.ncols() {
        return Err(MatError::NotSquare { rows: s.nrows(), cols: s.ncols() });
    }
    let scale = fnorm(s).max(f64::MIN_POSITIVE);
    let defect = fnorm(&(s - s.adjoint()));
    let herm = hermitize(s);
    let eig = herm.symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let is_pd = defect <= tol * scale && min_eig > tol * scale;
    Ok(PosDefReport { hermitian_defect: defect, min_eig, is_pd })
}

/// Orthonormal rows `W` with `W M ≈ 0`, spanning the left null space of `M`
/// at relative rank threshold `rank_tol`.
pub fn left_nullspace_basis(m: &CMatrix, rank_tol: f64) -> Result<CMatrix, MatError> {
    let p = m.nrows();
    let q = m.ncols();
    assert!(p >= 1 && q >= 1, "left_nullspace_basis: empty matrix");
    assert!(rank_tol > 0.0);
    let svd = m.clone().svd(true, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let rank = svd
        .singular_values
        .iter()
        .filter(|&&s| s > rank_tol * smax.max(f64::MIN_POSITIVE))
        .count();
    let u = svd.u.as_ref().expect("svd with u requested");
    // Complete the range basis to an orthonormal basis of C^p; the added
    // directions span the left null space.
    let mut basis: Vec<nalgebra::DVector<Cx>> = (0..rank).map(|j| u.column(j).into_owned()).collect();
    let mut complement: Vec<nalgebra::DVector<Cx>> = Vec::new();
    for k in 0..p {
        let mut v = nalgebra::DVector::<Cx>::zeros(p);
        v[k] = Cx::new(1.0, 0.0);
        // two rounds of Gram-Schmidt for orthogonality to working precision
        for _ in 0..2 {
            for b in basis.iter().chain(complement.iter()) {
                let coeff = b.dotc(&v);
                v -= b * coeff;
            }
        }
        let norm = v.norm();
        if norm > 0.5 {
            complement.push(v / Cx::new(norm, 0.0));
        }
        if basis.len() + complement.len() == p {
            break;
        }
    }
    debug_assert_eq!(complement.len(), p - rank);
    let mut w = CMatrix::zeros(p - rank, p);
    for (i, v) in complement.iter().enumerate() {
        for j in 0..p {
            w[(i, j)] = v[j].conj();
        }
    }
    let _ = basis.pop(); // silence unused-mut lint path when rank == p
    Ok(w)
}

/// Complex Schur factorization `A = Q T Q*` with the eigenvalues satisfying
/// `select` moved to the leading diagonal positions of `T`.
///
/// Returns `(Q, T, k)` where `k` is the number of selected eigenvalues; the
/// first `k` columns of `Q` then span the corresponding invariant subspace.
pub fn ordered_schur(
    a: &CMatrix,
    select: impl Fn(Cx) -> bool,
) -> Result<(CMatrix, CMatrix, usize), MatError> {
    if a.nrows() != a.ncols() {
        return Err(MatError::NotSquare { rows: a.nrows(), cols: a.ncols() });
    }
    let n = a.nrows();
    let schur = a.clone().try_schur(1e-14, 100_000).ok_or(MatError::EigenFailure)?;
    let (mut q, mut t) = schur.unpack();

    // Bubble selected eigenvalues to the top with unitary adjacent swaps.
    let mut front = 0usize;
    for i in 0..n {
        if select(t[(i, i)]) {
            let mut pos = i;
            while pos > front {
                swap_adjacent(&mut q, &mut t, pos - 1);
                pos -= 1;
            }
            front += 1;
        }
    }
    Ok((q, t, front))
}

/// Swap diagonal entries k and k+1 of the upper triangular `t` by a unitary
/// similarity, updating `q` accordingly.
fn swap_adjacent(q: &mut CMatrix, t: &mut CMatrix, k: usize) {
    let t11 = t[(k, k)];
    let t12 = t[(k, k + 1)];
    let t22 = t[(k + 1, k + 1)];
    // Eigenvector of [[t11,t12],[0,t22]] for t22 is proportional to
    // [t12, t22-t11]; rotate it onto e1.
    let v1 = t12;
    let v2 = t22 - t11;
    let nrm = (v1.norm_sqr() + v2.norm_sqr()).sqrt();
    if nrm == 0.0 {
        return; // equal eigenvalues with zero coupling: nothing to do
    }
    let c = v1 / nrm;
    let s = v2 / nrm;
    // G = [[c, -s̄],[s, c̄]] is unitary with G* [v1,v2]^T = nrm e1.
    let n = t.nrows();
    // T <- G* T G (rows then columns), Q <- Q G.
    for j in 0..n {
        let a = t[(k, j)];
        let b = t[(k + 1, j)];
        t[(k, j)] = c.conj() * a + s.conj() * b;
        t[(k + 1, j)] = -s * a + c * b;
    }
    for i in 0..n {
        let a = t[(i, k)];
        let b = t[(i, k + 1)];
        t[(i, k)] = a * c + b * s;
        t[(i, k + 1)] = -a * s.conj() + b * c.conj();
    }
    for i in 0..n {
        let a = q[(i, k)];
        let b = q[(i, k + 1)];
        q[(i, k)] = a * c + b * s;
        q[(i, k + 1)] = -a * s.conj() + b * c.conj();
    }
    t[(k + 1, k)] = Cx::new(0.0, 0.0);
}

/// Solve `S X = B` through a Cholesky factorization of the symmetrized `S`.
///
/// Returns the solution together with a crude condition estimate
/// (max/min eigenvalue ratio of the Hermitian part).
pub fn pd_solve(s: &CMatrix, b: &CMatrix) -> Result<(CMatrix, f64), MatError> {
    let h = hermitize(s);
    let eig = h.clone().symmetric_eigen();
    let maxe = eig.eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mine = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let chol = h.cholesky().ok_or(MatError::NotPositiveDefinite { min_eig: mine })?;
    let cond = if mine > 0.0 { maxe / mine } else { f64::INFINITY };
    Ok((chol.solve(b), cond))
}

/// Smallest singular value.
pub fn sigma_min(m: &CMatrix) -> f64 {
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min)
}

/// Inverse via LU, erroring on numerical singularity.
pub fn inverse(m: &CMatrix, context: &str) -> Result<CMatrix, MatError> {
    m.clone()
        .lu()
        .try_inverse()
        .ok_or(MatError::Singular { context: context.to_string() })
}
