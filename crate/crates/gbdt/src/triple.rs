//! GBDT parameter triples `{A, S(0), Π(0)}` with signature `(m1, m2)` and the
//! matrix identity `A S(0) - S(0) A* = i Π(0) j Π(0)*` that seeds every
//! transformation.

use crate::matcore::{
    self, eigenvalues, fnorm, hermitize, identity, posdef_check, sigma_min, sylvester_solve,
    CMatrix, Cx, MatError,
};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Signature of the matrix `j = diag(I_{m1}, -I_{m2})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct SignatureJ {
    pub m1: usize,
    pub m2: usize,
}

impl SignatureJ {
    pub fn new(m1: usize, m2: usize) -> Self {
        assert!(m1 + m2 > 0, "signature must have m1 + m2 > 0");
        SignatureJ { m1, m2 }
    }

    pub fn m(&self) -> usize {
        self.m1 + self.m2
    }

    /// The realized matrix `diag(I_{m1}, -I_{m2})`.
    pub fn matrix(&self) -> CMatrix {
        let m = self.m();
        CMatrix::from_fn(m, m, |i, j| {
            if i != j {
                Cx::new(0.0, 0.0)
            } else if i < self.m1 {
                Cx::new(1.0, 0.0)
            } else {
                Cx::new(-1.0, 0.0)
            }
        })
    }
}

#[derive(Debug, Error)]
pub enum TripleError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("S(0) is not Hermitian positive definite (min eigenvalue {min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("parameter identity violated: residual {residual:.3e} exceeds bound {bound:.3e}")]
    IdentityViolated { residual: f64, bound: f64 },
    #[error("retry budget exhausted after {attempts} draws (n={n}, m1={m1}, m2={m2})")]
    RetriesExhausted { attempts: usize, n: usize, m1: usize, m2: usize },
    #[error(transparent)]
    Mat(#[from] MatError),
}

/// A validated parameter triple.
#[derive(Debug, Clone)]
pub struct GbdtTriple {
    pub a: CMatrix,
    pub s0: CMatrix,
    pub pi0: CMatrix,
    pub sig: SignatureJ,
}

pub const IDENTITY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy)]
pub struct IdentityCheck {
    pub residual: f64,
    pub ok: bool,
}

impl GbdtTriple {
    /// Validate shapes and the parameter identity; the Hermitian positivity
    /// of `S(0)` is checked at tolerance 1e-10.
    pub fn new(
        a: CMatrix,
        s0: CMatrix,
        pi0: CMatrix,
        sig: SignatureJ,
    ) -> Result<Self, TripleError> {
        let n = a.nrows();
        if a.ncols() != n {
            return Err(TripleError::Shape(format!("A must be square, got {}x{}", n, a.ncols())));
        }
        if s0.nrows() != n || s0.ncols() != n {
            return Err(TripleError::Shape(format!(
                "S(0) must be {n}x{n}, got {}x{}",
                s0.nrows(),
                s0.ncols()
            )));
        }
        if pi0.nrows() != n || pi0.ncols() != sig.m() {
            return Err(TripleError::Shape(format!(
                "Pi(0) must be {}x{}, got {}x{}",
                n,
                sig.m(),
                pi0.nrows(),
                pi0.ncols()
            )));
        }
        let pd = posdef_check(&s0, IDENTITY_TOL)?;
        if !pd.is_pd {
            return Err(TripleError::NotPositive { min_eig: pd.min_eig });
        }
        let t = GbdtTriple { a, s0, pi0, sig };
        let check = t.verify_identity();
        if !check.ok {
            return Err(TripleError::IdentityViolated {
                residual: check.residual,
                bound: t.identity_bound(),
            });
        }
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    fn identity_bound(&self) -> f64 {
        IDENTITY_TOL * (fnorm(&self.a) * fnorm(&self.s0) + fnorm(&self.pi0).powi(2)).max(1e-300)
    }

    /// Frobenius residual of `A S(0) - S(0) A* - i Π(0) j Π(0)*`.
    pub fn verify_identity(&self) -> IdentityCheck {
        let j = self.sig.matrix();
        let lhs = &self.a * &self.s0 - &self.s0 * self.a.adjoint();
        let rhs = (&self.pi0 * &j * self.pi0.adjoint()).map(|z| z * Cx::new(0.0, 1.0));
        let residual = fnorm(&(lhs - rhs));
        IdentityCheck { residual, ok: residual <= self.identity_bound() }
    }

    /// True when `A` is invertible enough for the explicit engine.
    pub fn a_invertible(&self) -> bool {
        sigma_min(&self.a) > 1e-12 * fnorm(&self.a)
    }
}

/// Solve `A S0 - S0 A* = i Π0 j Π0*` for `S0` and wrap the result, rejecting
/// triples whose completed `S0` is not positive definite.
pub fn complete_s0(
    a: &CMatrix,
    pi0: &CMatrix,
    sig: SignatureJ,
) -> Result<GbdtTriple, TripleError> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(TripleError::Shape(format!("A must be square, got {}x{}", n, a.ncols())));
    }
    if pi0.nrows() != n || pi0.ncols() != sig.m() {
        return Err(TripleError::Shape(format!(
            "Pi(0) must be {}x{}, got {}x{}",
            n,
            sig.m(),
            pi0.nrows(),
            pi0.ncols()
        )));
    }
    let j = sig.matrix();
    let rhs = (pi0 * &j * pi0.adjoint()).map(|z| z * Cx::new(0.0, 1.0));
    let sep_tol = 1e-10 * (2.0 * fnorm(a)).max(f64::MIN_POSITIVE);
    let s0 = sylvester_solve(a, &a.adjoint(), &rhs, sep_tol)?;
    let s0 = hermitize(&s0);
    let pd = posdef_check(&s0, IDENTITY_TOL)?;
    if !pd.is_pd {
        return Err(TripleError::NotPositive { min_eig: pd.min_eig });
    }
    GbdtTriple::new(a.clone(), s0, pi0.clone(), sig)
}

/// Where the random generator places the spectrum of `A`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectrumRegion {
    /// Unconstrained draw (aside from invertibility and spectral separation).
    Any,
    /// All eigenvalues in the open upper half-plane.
    UpperHalf,
    /// `upper` eigenvalues in the upper half-plane, the rest below the axis.
    Split { upper: usize },
}

fn rand_cx(rng: &mut ChaCha8Rng) -> Cx {
    Cx::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

fn rand_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> CMatrix {
    CMatrix::from_fn(r, c, |_, _| rand_cx(rng))
}

fn draw_a(rng: &mut ChaCha8Rng, n: usize, region: SpectrumRegion) -> CMatrix {
    match region {
        SpectrumRegion::Any => rand_matrix(rng, n, n),
        SpectrumRegion::UpperHalf => {
            // B + i alpha I with alpha beyond any eigenvalue excursion of B
            let b = rand_matrix(rng, n, n).scale(0.3);
            let alpha = 0.3 * (n as f64) + 0.5 + rng.gen_range(0.0..0.5);
            b + identity(n).map(|z| z * Cx::new(0.0, alpha))
        }
        SpectrumRegion::Split { upper } => {
            let upper = upper.min(n);
            let mut lambda = CMatrix::zeros(n, n);
            for k in 0..n {
                let re = rng.gen_range(-1.0..1.0_f64);
                let im_mag = rng.gen_range(0.3..1.0_f64);
                let im = if k < upper { im_mag } else { -im_mag };
                lambda[(k, k)] = Cx::new(re, im);
            }
            let v = rand_matrix(rng, n, n) + identity(n).scale(2.0);
            match matcore::inverse(&v, "eigenvector frame") {
                Ok(vinv) => &v * lambda * vinv,
                Err(_) => rand_matrix(rng, n, n),
            }
        }
    }
}

/// Deterministic random admissible triple: draws `S0 ≻ 0` and `A`, forms the
/// Hermitian `K = -i(A S0 - S0 A*)`, and when its inertia fits `(m1, m2)`
/// builds `Π(0)` from scaled eigenvectors of `K`.
pub fn random_admissible(
    n: usize,
    sig: SignatureJ,
    seed: u64,
) -> Result<GbdtTriple, TripleError> {
    random_admissible_in(n, sig, seed, SpectrumRegion::Any)
}

pub fn random_admissible_in(
    n: usize,
    sig: SignatureJ,
    seed: u64,
    region: SpectrumRegion,
) -> Result<GbdtTriple, TripleError> {
    assert!(n >= 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    const BUDGET: usize = 64;
    for _ in 0..BUDGET {
        let g = rand_matrix(&mut rng, n, n);
        let s0 = &g * g.adjoint() + identity(n);
        let a = draw_a(&mut rng, n, region);
        if sigma_min(&a) <= 1e-10 * fnorm(&a) {
            continue;
        }
        // explicit-mode use also needs spectral separation from A*
        let ea = match eigenvalues(&a) {
            Ok(e) => e,
            Err(_) => continue,
        };
        let mut gap = f64::INFINITY;
        for la in &ea {
            for lb in &ea {
                gap = gap.min((la - lb.conj()).norm());
            }
        }
        if gap <= 1e-6 * (2.0 * fnorm(&a)).max(1e-300) {
            continue;
        }
        let k = (&a * &s0 - &s0 * a.adjoint()).map(|z| z * Cx::new(0.0, -1.0));
        let k = hermitize(&k);
        let kscale = fnorm(&k).max(1e-300);
        let eig = k.symmetric_eigen();
        let mut pos: Vec<usize> = Vec::new();
        let mut neg: Vec<usize> = Vec::new();
        for (idx, &lam) in eig.eigenvalues.iter().enumerate() {
            if lam > 1e-12 * kscale {
                pos.push(idx);
            } else if lam < -1e-12 * kscale {
                neg.push(idx);
            }
        }
        if pos.len() > sig.m1 || neg.len() > sig.m2 {
            continue;
        }
        let mut pi0 = CMatrix::zeros(n, sig.m());
        for (col, &idx) in pos.iter().enumerate() {
            let scale = eig.eigenvalues[idx].sqrt();
            pi0.set_column(col, &(eig.eigenvectors.column(idx) * Cx::new(scale, 0.0)));
        }
        for (col, &idx) in neg.iter().enumerate() {
            let scale = (-eig.eigenvalues[idx]).sqrt();
            pi0.set_column(
                sig.m1 + col,
                &(eig.eigenvectors.column(idx) * Cx::new(scale, 0.0)),
            );
        }
        if let Ok(t) = GbdtTriple::new(a, s0, pi0, sig) {
            return Ok(t);
        }
    }
    Err(TripleError::RetriesExhausted { attempts: BUDGET, n, m1: sig.m1, m2: sig.m2 })
}

/// The worked scalar reference triple: n = 1, m1 = m2 = 1, A = i/2, S0 = 1,
/// Π0 = (√2, 1).
pub fn reference_scalar_triple() -> GbdtTriple {
    let a = CMatrix::from_element(1, 1, Cx::new(0.0, 0.5));
    let s0 = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
    let pi0 = CMatrix::from_row_slice(1, 2, &[Cx::new(2.0_f64.sqrt(), 0.0), Cx::new(1.0, 0.0)]);
    GbdtTriple::new(a, s0, pi0, SignatureJ::new(1, 1)).expect("reference triple is admissible")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn signature_matrix_involution() {
        let j = SignatureJ::new(2, 3).matrix();
        assert!(fnorm(&(&j * &j - identity(5))) < 1e-15);
        assert!(fnorm(&(&j - j.adjoint())) < 1e-15);
    }

    #[test]
    fn reference_triple_residual_zero() {
        let t = reference_scalar_triple();
        let c = t.verify_identity();
        assert!(c.ok);
        assert!(c.residual < 1e-14);
    }

    #[test]
    fn zero_pi_identity_holds() {
        let t = GbdtTriple::new(
            identity(2),
            identity(2),
            CMatrix::zeros(2, 2),
            SignatureJ::new(1, 1),
        )
        .unwrap();
        let c = t.verify_identity();
        assert!(c.ok && c.residual < 1e-15);
    }

    #[test]
    fn broken_triple_rejected() {
        // A=[i], S0=[1], Pi0=[1,1]: residual |2i - 0| = 2
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 1.0));
        let s0 = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let pi0 = CMatrix::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(1.0, 0.0)]);
        match GbdtTriple::new(a, s0, pi0, SignatureJ::new(1, 1)) {
            Err(TripleError::IdentityViolated { residual, .. }) => {
                assert!((residual - 2.0).abs() < 1e-12)
            }
            other => panic!("expected identity violation, got {other:?}"),
        }
    }

    #[test]
    fn complete_s0_scalar() {
        // A=[i/2], Pi0=[sqrt2, 1] -> S0 = 1
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 0.5));
        let pi0 =
            CMatrix::from_row_slice(1, 2, &[Cx::new(2.0_f64.sqrt(), 0.0), Cx::new(1.0, 0.0)]);
        let t = complete_s0(&a, &pi0, SignatureJ::new(1, 1)).unwrap();
        assert!((t.s0[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn complete_s0_rejects_zero_pi() {
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 0.5));
        let pi0 = CMatrix::zeros(1, 2);
        match complete_s0(&a, &pi0, SignatureJ::new(1, 1)) {
            Err(TripleError::NotPositive { min_eig }) => assert!(min_eig.abs() < 1e-12),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn complete_s0_rejects_negative() {
        // A=[i/2], Pi0=[1, sqrt2] -> S0 = -1
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 0.5));
        let pi0 =
            CMatrix::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(2.0_f64.sqrt(), 0.0)]);
        match complete_s0(&a, &pi0, SignatureJ::new(1, 1)) {
            Err(TripleError::NotPositive { min_eig }) => assert!((min_eig + 1.0).abs() < 1e-10),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn generator_produces_admissible_triples() {
        for seed in 0..10u64 {
            let t = random_admissible(1, SignatureJ::new(1, 1), seed).unwrap();
            assert!(t.verify_identity().residual <= 1e-12 * (1.0 + fnorm(&t.a) * fnorm(&t.s0)));
        }
        for seed in 0..5u64 {
            let t = random_admissible(3, SignatureJ::new(2, 2), seed).unwrap();
            assert!(t.verify_identity().ok);
        }
    }

    #[test]
    fn generator_definite_signature_requires_matching_inertia() {
        // m2 = 0 requires K >= 0; the upper-half-plane draw makes that likely.
        let t =
            random_admissible_in(2, SignatureJ::new(2, 0), 4, SpectrumRegion::UpperHalf).unwrap();
        assert!(t.verify_identity().ok);
        let j = t.sig.matrix();
        assert!(fnorm(&(&j - identity(2))) < 1e-15);
    }

    #[test]
    fn generator_hermitian_k_defect() {
        for seed in [1u64, 2, 3] {
            let t = random_admissible(3, SignatureJ::new(2, 2), seed).unwrap();
            let k = (&t.a * &t.s0 - &t.s0 * t.a.adjoint()).map(|z| z * Cx::new(0.0, -1.0));
            let defect = fnorm(&(&k - k.adjoint()));
            assert!(defect <= 1e-12 * fnorm(&k).max(1e-300));
        }
    }

    #[test]
    fn generator_deterministic_in_seed() {
        let t1 = random_admissible(2, SignatureJ::new(1, 1), 42).unwrap();
        let t2 = random_admissible(2, SignatureJ::new(1, 1), 42).unwrap();
        assert_eq!(t1.a.as_slice(), t2.a.as_slice());
        assert_eq!(t1.s0.as_slice(), t2.s0.as_slice());
        assert_eq!(t1.pi0.as_slice(), t2.pi0.as_slice());
    }

    #[test]
    fn generator_upper_half_spectrum() {
        let t =
            random_admissible_in(3, SignatureJ::new(3, 1), 7, SpectrumRegion::UpperHalf).unwrap();
        for lam in eigenvalues(&t.a).unwrap() {
            assert!(lam.im > 0.0);
        }
    }
}
