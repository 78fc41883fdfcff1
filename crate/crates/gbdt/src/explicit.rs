//! Closed-form engine for the trivial initial Hamiltonian `H(x) ≡ I`.
//!
//! With `det A ≠ 0` and `σ(A) ∩ σ(A*) = ∅` everything is expressed through
//! matrix exponentials and the Sylvester solutions `C₁`, `C₂`:
//!
//! * `Π(x) = [e^{-ixA} θ₁, e^{ixA} θ₂]`
//! * `S(x) = S(0) - C₁ + C₂ + e^{-ixA} C₁ e^{ixA*} - e^{ixA} C₂ e^{-ixA*}`
//! * `u(x) = (I - i jΠ(x)*S(x)⁻¹A⁻¹Π(x)) (I + i jΠ(0)*(A⁻¹)*S(0)⁻¹Π(0))`
//! * `Y(x,t) = u(x)* j Π(x)* S(x)⁻¹ e^{itA}`, `𝓗(x) = u(x)⁻¹ u(x)⁻*`

use crate::matcore::{
    fnorm, hermitize, identity, inverse, mat_exp, pd_solve, posdef_check, sigma_min,
    sylvester_solve, CMatrix, Cx, MatError,
};
use crate::triple::GbdtTriple;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExplicitError {
    #[error("A is numerically singular (sigma_min/|A| = {ratio:.3e})")]
    SingularA { ratio: f64 },
    #[error("S(x) lost positivity at x = {x} (min eigenvalue {min_eig:.3e})")]
    PositivityLost { x: f64, min_eig: f64 },
    #[error("C2 = C1 - S(0) fails its Sylvester identity (residual {residual:.3e}); triple is inconsistent")]
    InconsistentC2 { residual: f64 },
    #[error("lambda = {lambda} too close to the spectrum of A")]
    LambdaNearSpectrum { lambda: Cx },
    #[error(transparent)]
    Mat(#[from] MatError),
}

const EXP_TOL: f64 = 1e-12;
const IM: Cx = Cx::new(0.0, 1.0);

/// Precomputed closed-form ingredients for one triple.
#[derive(Debug, Clone)]
pub struct ExplicitModel {
    pub triple: GbdtTriple,
    pub theta1: CMatrix,
    pub theta2: CMatrix,
    pub c1: CMatrix,
    pub c2: CMatrix,
    /// Constant right factor of `u(x)`.
    pub u_right: CMatrix,
    a_inv: CMatrix,
}

/// Grid samples of `Y(x,t)` and `𝓗(x)`.
#[derive(Debug, Clone)]
pub struct SolutionField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `Y(x,t)` samples, x-major: index `ix * ts.len() + it`.
    pub y: Vec<CMatrix>,
    /// `𝓗(x)` samples, one per grid x.
    pub hcal: Vec<CMatrix>,
}

impl SolutionField {
    pub fn y_at(&self, ix: usize, it: usize) -> &CMatrix {
        &self.y[ix * self.ts.len() + it]
    }
}

#[derive(Debug, Clone)]
pub struct KappaLimits {
    pub k_q: CMatrix,
    pub k_r: CMatrix,
    pub k_s: CMatrix,
    pub q_converged: bool,
    pub r_converged: bool,
    pub s_converged: bool,
    pub schedule: Vec<f64>,
}

/// Solve for `C₁`, set `C₂ = C₁ - S(0)`, verify the `C₂` identity and
/// precompute the constant right factor of `u`.
pub fn build_model(triple: &GbdtTriple) -> Result<ExplicitModel, ExplicitError> {
    let a = &triple.a;
    let ratio = sigma_min(a) / fnorm(a).max(f64::MIN_POSITIVE);
    if ratio <= 1e-12 {
        return Err(ExplicitError::SingularA { ratio });
    }
    let m1 = triple.sig.m1;
    let m2 = triple.sig.m2;
    let theta1 = triple.pi0.columns(0, m1).into_owned();
    let theta2 = triple.pi0.columns(m1, m2).into_owned();

    let rhs1 = (&theta1 * theta1.adjoint()).map(|z| z * IM);
    let sep_tol = 1e-10 * (2.0 * fnorm(a)).max(f64::MIN_POSITIVE);
    // theta1 = 0 admits C1 = 0 without any spectral separation
    let c1 = if fnorm(&rhs1) == 0.0 {
        CMatrix::zeros(a.nrows(), a.nrows())
    } else {
        sylvester_solve(a, &a.adjoint(), &rhs1, sep_tol)?
    };
    let c2 = &c1 - &triple.s0;

    // The residual comes from cancellation in A*C1 - A*S0 etc., so scale by the
    // summands rather than by C2 itself (C2 may be tiny when theta2 ~ 0).
    let scale =
        (fnorm(a) * (fnorm(&c1) + fnorm(&triple.s0)) + fnorm(&theta2).powi(2)).max(1e-300);
    let resid2 =
        fnorm(&(a * &c2 - &c2 * a.adjoint() - (&theta2 * theta2.adjoint()).map(|z| z * IM)));
    if resid2 > 1e-10 * scale {
        return Err(ExplicitError::InconsistentC2 { residual: resid2 });
    }

    let a_inv = inverse(a, "A")?;
    let j = triple.sig.matrix();
    let (s0_inv_pi0, _) = pd_solve(&triple.s0, &triple.pi0)?;
    let u_right = identity(triple.sig.m())
        + (&j * triple.pi0.adjoint() * a_inv.adjoint() * s0_inv_pi0).map(|z| z * IM);

    Ok(ExplicitModel { triple: triple.clone(), theta1, theta2, c1, c2, u_right, a_inv })
}

impl ExplicitModel {
    pub fn n(&self) -> usize {
        self.triple.n()
    }

    pub fn m(&self) -> usize {
        self.triple.sig.m()
    }

    /// `e^{ixA}`.
    pub fn exp_plus(&self, x: f64) -> CMatrix {
        mat_exp(&self.triple.a.map(|z| z * Cx::new(0.0, x)), EXP_TOL).expect("exp of finite matrix")
    }

    /// `e^{-ixA}`.
    pub fn exp_minus(&self, x: f64) -> CMatrix {
        mat_exp(&self.triple.a.map(|z| z * Cx::new(0.0, -x)), EXP_TOL)
            .expect("exp of finite matrix")
    }

    /// `Π(x) = [e^{-ixA} θ₁, e^{ixA} θ₂]`.
    pub fn pi_at(&self, x: f64) -> CMatrix {
        let b1 = self.exp_minus(x) * &self.theta1;
        let b2 = self.exp_plus(x) * &self.theta2;
        let mut pi = CMatrix::zeros(self.n(), self.m());
        for c in 0..self.triple.sig.m1 {
            pi.set_column(c, &b1.column(c));
        }
        for c in 0..self.triple.sig.m2 {
            pi.set_column(self.triple.sig.m1 + c, &b2.column(c));
        }
        pi
    }

    /// Closed-form `S(x)`, Hermitian-symmetrized; errors if positivity is lost.
    pub fn s_at(&self, x: f64) -> Result<CMatrix, ExplicitError> {
        let em = self.exp_minus(x);
        let ep = self.exp_plus(x);
        // e^{ixA*} = (e^{-ixA})*, e^{-ixA*} = (e^{ixA})*
        let s = &self.triple.s0 - &self.c1
            + &self.c2
            + &em * &self.c1 * em.adjoint()
            - &ep * &self.c2 * ep.adjoint();
        let s = hermitize(&s);
        let pd = posdef_check(&s, 1e-12)?;
        if !pd.is_pd {
            return Err(ExplicitError::PositivityLost { x, min_eig: pd.min_eig });
        }
        Ok(s)
    }

    /// Condition estimate of `S(x)` (eigenvalue ratio of its Hermitian part).
    pub fn s_condition(&self, x: f64) -> Result<f64, ExplicitError> {
        let s = self.s_at(x)?;
        let (_, cond) = pd_solve(&s, &identity(self.n()))?;
        Ok(cond)
    }

    /// Transfer matrix `w_A(x,λ) = I - i jΠ(x)*S(x)⁻¹(A-λI)⁻¹Π(x)`.
    pub fn wa_at(&self, x: f64, lambda: Cx) -> Result<CMatrix, ExplicitError> {
        let a = &self.triple.a;
        let shifted = a - identity(self.n()).map(|z| z * lambda);
        if sigma_min(&shifted) < 1e-10 * fnorm(a).max(f64::MIN_POSITIVE) {
            return Err(ExplicitError::LambdaNearSpectrum { lambda });
        }
        let pi = self.pi_at(x);
        let s = self.s_at(x)?;
        let resolvent_pi = inverse(&shifted, "A - lambda I")? * &pi;
        let (s_inv_res_pi, _) = pd_solve(&s, &resolvent_pi)?;
        let j = self.triple.sig.matrix();
        Ok(identity(self.m()) - (&j * pi.adjoint() * s_inv_res_pi).map(|z| z * IM))
    }

    /// `u(x)`, j-unitary with `u(0) = I`.
    pub fn u_at(&self, x: f64) -> Result<CMatrix, ExplicitError> {
        let pi = self.pi_at(x);
        let s = self.s_at(x)?;
        let (s_inv_ainv_pi, _) = pd_solve(&s, &(&self.a_inv * &pi))?;
        let j = self.triple.sig.matrix();
        let left = identity(self.m()) - (&j * pi.adjoint() * s_inv_ainv_pi).map(|z| z * IM);
        Ok(left * &self.u_right)
    }

    /// `𝓗(x) = u(x)⁻¹ u(x)⁻*`, Hermitian positive definite by construction.
    pub fn hcal_at(&self, x: f64) -> Result<CMatrix, ExplicitError> {
        let u = self.u_at(x)?;
        let u_inv = inverse(&u, "u(x)")?;
        Ok(&u_inv * u_inv.adjoint())
    }

    /// `Y(x,t) = u(x)* j Π(x)* S(x)⁻¹ e^{itA}`.
    pub fn y_at(&self, x: f64, t: f64) -> Result<CMatrix, ExplicitError> {
        let u = self.u_at(x)?;
        let pi = self.pi_at(x);
        let s = self.s_at(x)?;
        let (s_inv_eta, _) = pd_solve(&s, &self.exp_plus(t))?;
        let j = self.triple.sig.matrix();
        Ok(u.adjoint() * j * pi.adjoint() * s_inv_eta)
    }

    /// Sample `Y` and `𝓗` over the given grids.
    pub fn field(&self, xs: &[f64], ts: &[f64]) -> Result<SolutionField, ExplicitError> {
        assert!(xs.windows(2).all(|w| w[1] > w[0]), "x grid must be strictly increasing");
        assert!(ts.windows(2).all(|w| w[1] > w[0]), "t grid must be strictly increasing");
        let mut y = Vec::with_capacity(xs.len() * ts.len());
        let mut hcal = Vec::with_capacity(xs.len());
        let j = self.triple.sig.matrix();
        for &x in xs {
            let u = self.u_at(x)?;
            let pi = self.pi_at(x);
            let s = self.s_at(x)?;
            let (s_inv_pi_adj, _) = pd_solve(&s, &identity(self.n()))?;
            let left = u.adjoint() * &j * pi.adjoint() * s_inv_pi_adj;
            let u_inv = inverse(&u, "u(x)")?;
            hcal.push(&u_inv * u_inv.adjoint());
            for &t in ts {
                y.push(&left * self.exp_plus(t));
            }
        }
        Ok(SolutionField { xs: xs.to_vec(), ts: ts.to_vec(), y, hcal })
    }

    /// `Q(x) = e^{ixA} S(x) e^{-ixA*}` and `R(x) = e^{-ixA} S(x) e^{ixA*}`.
    pub fn qr_at(&self, x: f64) -> Result<(CMatrix, CMatrix), ExplicitError> {
        let s = self.s_at(x)?;
        let ep = self.exp_plus(x);
        let em = self.exp_minus(x);
        let q = hermitize(&(&ep * &s * ep.adjoint()));
        let r = hermitize(&(&em * &s * em.adjoint()));
        Ok((q, r))
    }

    /// Evaluate `Q⁻¹`, `R⁻¹`, `S⁻¹` along the geometric schedule
    /// `x_k = x_max (1 - 2^{-k})`, `k = 0..=20`, reporting the last values and
    /// whether successive differences fell below `tol`.
    pub fn kappa_limits(&self, x_max: f64, tol: f64) -> Result<KappaLimits, ExplicitError> {
        assert!(x_max > 0.0 && tol > 0.0);
        let id = identity(self.n());
        let mut schedule = Vec::new();
        let mut prev: Option<(CMatrix, CMatrix, CMatrix)> = None;
        let mut flags = (false, false, false);
        let mut last: Option<(CMatrix, CMatrix, CMatrix)> = None;
        for k in 0..=20u32 {
            let x = x_max * (1.0 - 0.5_f64.powi(k as i32));
            schedule.push(x);
            let (q, r) = self.qr_at(x)?;
            let s = self.s_at(x)?;
            let (qi, _) = pd_solve(&q, &id)?;
            let (ri, _) = pd_solve(&r, &id)?;
            let (si, _) = pd_solve(&s, &id)?;
            let (qi, ri, si) = (hermitize(&qi), hermitize(&ri), hermitize(&si));
            if let Some((pq, pr, ps)) = &prev {
                flags.0 = fnorm(&(&qi - pq)) < tol;
                flags.1 = fnorm(&(&ri - pr)) < tol;
                flags.2 = fnorm(&(&si - ps)) < tol;
            }
            prev = Some((qi.clone(), ri.clone(), si.clone()));
            last = Some((qi, ri, si));
        }
        let (k_q, k_r, k_s) = last.expect("schedule non-empty");
        Ok(KappaLimits {
            k_q,
            k_r,
            k_s,
            q_converged: flags.0,
            r_converged: flags.1,
            s_converged: flags.2,
            schedule,
        })
    }

    /// Block-diagonal limit of `w_A(x,0)`:
    /// `diag(I - iθ₁*κ_Q A⁻¹θ₁, I + iθ₂*κ_R A⁻¹θ₂)`.
    pub fn wa_limit(&self, k_q: &CMatrix, k_r: &CMatrix) -> CMatrix {
        let m1 = self.triple.sig.m1;
        let m2 = self.triple.sig.m2;
        let b1 = identity(m1)
            - (self.theta1.adjoint() * k_q * &self.a_inv * &self.theta1).map(|z| z * IM);
        let b2 = identity(m2)
            + (self.theta2.adjoint() * k_r * &self.a_inv * &self.theta2).map(|z| z * IM);
        let mut w = CMatrix::zeros(self.m(), self.m());
        for i in 0..m1 {
            for jj in 0..m1 {
                w[(i, jj)] = b1[(i, jj)];
            }
        }
        for i in 0..m2 {
            for jj in 0..m2 {
                w[(m1 + i, m1 + jj)] = b2[(i, jj)];
            }
        }
        w
    }

    /// Leading-order asymptotic form of `Y(x,t)` with the decaying terms
    /// dropped: the constant factor `j w_A(0,0) diag(I + iθ₁*(A⁻¹)*κ_Q θ₁,
    /// I - iθ₂*(A⁻¹)*κ_R θ₂)` applied to the stacked exponent block.
    pub fn y_asymptotic(
        &self,
        x: f64,
        t: f64,
        k_q: &CMatrix,
        k_r: &CMatrix,
    ) -> Result<CMatrix, ExplicitError> {
        let m1 = self.triple.sig.m1;
        let m2 = self.triple.sig.m2;
        let j = self.triple.sig.matrix();
        let wa00 = self.wa_at(0.0, Cx::new(0.0, 0.0))?;
        let d1 = identity(m1)
            + (self.theta1.adjoint() * self.a_inv.adjoint() * k_q * &self.theta1)
                .map(|z| z * IM);
        let d2 = identity(m2)
            - (self.theta2.adjoint() * self.a_inv.adjoint() * k_r * &self.theta2)
                .map(|z| z * IM);
        let mut d = CMatrix::zeros(self.m(), self.m());
        for i in 0..m1 {
            for jj in 0..m1 {
                d[(i, jj)] = d1[(i, jj)];
            }
        }
        for i in 0..m2 {
            for jj in 0..m2 {
                d[(m1 + i, m1 + jj)] = d2[(i, jj)];
            }
        }
        let first = j * wa00 * d;

        let e_fwd = mat_exp(&self.triple.a.map(|z| z * Cx::new(0.0, t + x)), EXP_TOL)?;
        let e_bwd = mat_exp(&self.triple.a.map(|z| z * Cx::new(0.0, t - x)), EXP_TOL)?;
        let top = self.theta1.adjoint() * k_q * e_fwd;
        let bot = self.theta2.adjoint() * k_r * e_bwd;
        let mut stack = CMatrix::zeros(self.m(), self.n());
        for i in 0..m1 {
            for jj in 0..self.n() {
                stack[(i, jj)] = top[(i, jj)];
            }
        }
        for i in 0..m2 {
            for jj in 0..self.n() {
                stack[(m1 + i, jj)] = bot[(i, jj)];
            }
        }
        Ok(first * stack)
    }

    /// Eigenvector spans `Z±(x)` of `j𝓗(x)`: columns of `u(x)*(I±j)` on the
    /// corresponding standard basis vectors.
    pub fn eigenspaces(&self, x: f64) -> Result<(CMatrix, CMatrix), ExplicitError> {
        let u_adj = self.u_at(x)?.adjoint();
        let m1 = self.triple.sig.m1;
        let m2 = self.triple.sig.m2;
        let z_plus = u_adj.columns(0, m1).into_owned().scale(2.0);
        let z_minus = u_adj.columns(m1, m2).into_owned().scale(2.0);
        Ok((z_plus, z_minus))
    }

    /// Similarity witness `𝒯(x) = (j u(x) j)⁻¹` with `j𝓗 = 𝒯 j 𝒯⁻¹`.
    ///
    /// By j-unitarity `(j u j)⁻¹ = u*`; both forms are computed and their
    /// deviation checked before returning the inverse form.
    pub fn similarity_t(&self, x: f64) -> Result<CMatrix, ExplicitError> {
        let u = self.u_at(x)?;
        let j = self.triple.sig.matrix();
        let t_inv_form = inverse(&(&j * &u * &j), "j u j")?;
        let t_adj_form = u.adjoint();
        debug_assert!(
            fnorm(&(&t_inv_form - &t_adj_form)) <= 1e-8 * fnorm(&t_adj_form).max(1.0),
            "similarity forms diverged"
        );
        Ok(t_inv_form)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::{random_admissible, reference_scalar_triple, SignatureJ};
    use crate::triple::GbdtTriple;

    fn ex1() -> ExplicitModel {
        build_model(&reference_scalar_triple()).unwrap()
    }

    fn zero_pi_model() -> ExplicitModel {
        // Pi0 = 0 forces A S0 = S0 A*; a Hermitian invertible A qualifies
        let n = 2;
        let mut a = CMatrix::zeros(n, n);
        a[(0, 0)] = Cx::new(1.0, 0.0);
        a[(1, 1)] = Cx::new(2.0, 0.0);
        let t = GbdtTriple::new(a, identity(n), CMatrix::zeros(n, 4), SignatureJ::new(2, 2))
            .unwrap();
        build_model(&t).unwrap()
    }

    #[test]
    fn ex1_sylvester_constants() {
        let m = ex1();
        assert!((m.c1[(0, 0)] - Cx::new(2.0, 0.0)).norm() < 1e-12);
        assert!((m.c2[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn zero_pi_constants() {
        let m = zero_pi_model();
        assert!(fnorm(&m.c1) < 1e-14);
        assert!(fnorm(&(&m.c2 + identity(2))) < 1e-14);
    }

    #[test]
    fn real_spectrum_rejected() {
        // sigma(A) real means sigma(A) and sigma(A*) coincide; with a nonzero
        // theta1 the Sylvester step must refuse. A = [[1,1],[0,1]], S0 = I,
        // Pi0 columns from the eigenvectors of A - A* = i Pi0 j Pi0*.
        let a = CMatrix::from_row_slice(
            2,
            2,
            &[Cx::new(1.0, 0.0), Cx::new(1.0, 0.0), Cx::new(0.0, 0.0), Cx::new(1.0, 0.0)],
        );
        let r = 0.5_f64.sqrt();
        let pi0 = CMatrix::from_row_slice(
            2,
            2,
            &[Cx::new(r, 0.0), Cx::new(r, 0.0), Cx::new(0.0, r), Cx::new(0.0, -r)],
        );
        let t = GbdtTriple::new(a, identity(2), pi0, SignatureJ::new(1, 1)).unwrap();
        assert!(matches!(
            build_model(&t),
            Err(ExplicitError::Mat(MatError::SpectralSeparation { .. }))
        ));
    }

    #[test]
    fn pi_at_zero_and_one() {
        let m = ex1();
        assert!(fnorm(&(m.pi_at(0.0) - &m.triple.pi0)) < 1e-14);
        let p = m.pi_at(1.0);
        let want0 = Cx::new(2.0_f64.sqrt() * 0.5_f64.exp(), 0.0);
        let want1 = Cx::new((-0.5_f64).exp(), 0.0);
        assert!((p[(0, 0)] - want0).norm() < 1e-13);
        assert!((p[(0, 1)] - want1).norm() < 1e-13);
    }

    #[test]
    fn pi_satisfies_ode_h_identity() {
        // central difference of Pi vs -iA Pi j
        let m = ex1();
        let j = m.triple.sig.matrix();
        for &x in &[0.3, 1.0, 2.5] {
            for &h in &[1e-3, 5e-4] {
                let d = (m.pi_at(x + h) - m.pi_at(x - h)).scale(1.0 / (2.0 * h));
                let rhs = (&m.triple.a * m.pi_at(x) * &j).map(|z| z * Cx::new(0.0, -1.0));
                assert!(fnorm(&(d - rhs)) < 10.0 * h * h);
            }
        }
    }

    #[test]
    fn s_scalar_closed_form() {
        let m = ex1();
        assert!(fnorm(&(m.s_at(0.0).unwrap() - &m.triple.s0)) < 1e-13);
        for &x in &[0.5_f64, 1.0, 2.0, 3.0] {
            let want = 2.0 * x.exp() - (-x).exp();
            let got = m.s_at(x).unwrap()[(0, 0)];
            assert!((got - Cx::new(want, 0.0)).norm() < 1e-12 * want);
        }
    }

    #[test]
    fn s_matches_quadrature_of_pi_pi_adj() {
        // S(x) = S(0) + int_0^x Pi Pi* dxi, adaptive-Simpson entrywise
        let m = build_model(&random_admissible(2, SignatureJ::new(1, 1), 5).unwrap()).unwrap();
        let x_end = 1.5;
        let integrand = |xi: f64| {
            let p = m.pi_at(xi);
            &p * p.adjoint()
        };
        // fixed composite Simpson fine enough as an oracle here
        let nseg = 2000;
        let h = x_end / nseg as f64;
        let mut acc = CMatrix::zeros(m.n(), m.n());
        for k in 0..nseg {
            let a = k as f64 * h;
            let fa = integrand(a);
            let fm = integrand(a + 0.5 * h);
            let fb = integrand(a + h);
            acc += (fa + fm.scale(4.0) + fb).scale(h / 6.0);
        }
        let want = &m.triple.s0 + acc;
        let got = m.s_at(x_end).unwrap();
        assert!(fnorm(&(got - want)) < 1e-8 * fnorm(&m.s_at(x_end).unwrap()).max(1.0));
    }

    #[test]
    fn wa_identity_for_zero_pi() {
        let m = zero_pi_model();
        let w = m.wa_at(1.3, Cx::new(0.3, -0.2)).unwrap();
        assert!(fnorm(&(w - identity(4))) < 1e-13);
    }

    #[test]
    fn wa_inverse_identity() {
        let m = ex1();
        let j = m.triple.sig.matrix();
        for &(x, re, im) in &[(0.4, 0.3, 0.7), (1.7, -0.8, 0.1), (2.2, 0.0, -1.3)] {
            let lam = Cx::new(re, im);
            let w = m.wa_at(x, lam).unwrap();
            let w_bar = m.wa_at(x, lam.conj()).unwrap();
            let prod = &w * &j * w_bar.adjoint() * &j;
            assert!(fnorm(&(prod - identity(2))) < 1e-9);
        }
    }

    #[test]
    fn wa_direct_scalar_at_origin() {
        let m = ex1();
        // 1 - i j Pi0* S0^{-1} A^{-1} Pi0 with A^{-1} = -2i
        let j = m.triple.sig.matrix();
        let pi0 = &m.triple.pi0;
        let want = identity(2)
            - (&j * pi0.adjoint() * Cx::new(0.0, -2.0) * pi0).map(|z| z * IM);
        let got = m.wa_at(0.0, Cx::new(0.0, 0.0)).unwrap();
        assert!(fnorm(&(got - want)) < 1e-12);
    }

    #[test]
    fn u_at_zero_is_identity() {
        let m = ex1();
        assert!(fnorm(&(m.u_at(0.0).unwrap() - identity(2))) < 1e-12);
        let zm = zero_pi_model();
        assert!(fnorm(&(zm.u_at(2.0).unwrap() - identity(4))) < 1e-13);
    }

    #[test]
    fn u_j_unitary() {
        let m = ex1();
        let j = m.triple.sig.matrix();
        for &x in &[0.0, 0.7, 1.9, 3.4] {
            let u = m.u_at(x).unwrap();
            assert!(fnorm(&(u.adjoint() * &j * &u - &j)) < 1e-10);
        }
    }

    #[test]
    fn u_equals_transfer_matrix_ratio() {
        let m = build_model(&random_admissible(2, SignatureJ::new(2, 1), 9).unwrap()).unwrap();
        let w00 = m.wa_at(0.0, Cx::new(0.0, 0.0)).unwrap();
        let w00_inv = inverse(&w00, "w_A(0,0)").unwrap();
        for &x in &[0.5, 1.2, 2.0] {
            let u = m.u_at(x).unwrap();
            let wx = m.wa_at(x, Cx::new(0.0, 0.0)).unwrap();
            assert!(fnorm(&(&wx * &w00_inv - u)) < 1e-10 * fnorm(&wx).max(1.0));
        }
    }

    #[test]
    fn field_zero_pi() {
        let m = zero_pi_model();
        let f = m.field(&[0.0, 0.5, 1.0], &[0.0, 1.0]).unwrap();
        for y in &f.y {
            assert!(fnorm(y) < 1e-13);
        }
        for h in &f.hcal {
            assert!(fnorm(&(h - identity(4))) < 1e-13);
        }
    }

    #[test]
    fn field_ex1_origin_value() {
        let m = ex1();
        let f = m.field(&[0.0, 1.0], &[0.0, 1.0]).unwrap();
        let y00 = f.y_at(0, 0);
        assert!((y00[(0, 0)] - Cx::new(2.0_f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((y00[(1, 0)] - Cx::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn qr_scalar_closed_forms() {
        let m = ex1();
        let (q0, r0) = m.qr_at(0.0).unwrap();
        assert!((q0[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-13);
        assert!((r0[(0, 0)] - Cx::new(1.0, 0.0)).norm() < 1e-13);
        for &x in &[0.5, 1.5, 3.0] {
            let (q, r) = m.qr_at(x).unwrap();
            let wq = 2.0 - (-2.0 * x).exp();
            let wr = 2.0 * (2.0 * x).exp() - 1.0;
            assert!((q[(0, 0)] - Cx::new(wq, 0.0)).norm() < 1e-11 * wq.max(1.0));
            assert!((r[(0, 0)] - Cx::new(wr, 0.0)).norm() < 1e-11 * wr);
        }
    }

    #[test]
    fn q_derivative_nonnegative() {
        let m = ex1();
        let h = 1e-4;
        for &x in &[0.3, 1.0, 2.0] {
            let (qp, _) = m.qr_at(x + h).unwrap();
            let (qm, _) = m.qr_at(x - h).unwrap();
            let d = (qp - qm).scale(1.0 / (2.0 * h));
            let min_eig = hermitize(&d)
                .symmetric_eigen()
                .eigenvalues
                .iter()
                .cloned()
                .fold(f64::INFINITY, f64::min);
            assert!(min_eig > -1e-6);
        }
    }

    #[test]
    fn kappa_scalar_limits() {
        let m = ex1();
        let k = m.kappa_limits(30.0, 1e-12).unwrap();
        assert!(k.q_converged && k.r_converged && k.s_converged);
        assert!((k.k_q[(0, 0)] - Cx::new(0.5, 0.0)).norm() < 1e-10);
        assert!(k.k_r[(0, 0)].norm() < 1e-10);
        assert!(k.k_s[(0, 0)].norm() < 1e-10);
    }

    #[test]
    fn kappa_constant_s_for_zero_pi() {
        let m = zero_pi_model();
        let k = m.kappa_limits(10.0, 1e-12).unwrap();
        for mat in [&k.k_q, &k.k_r, &k.k_s] {
            assert!(fnorm(&(mat - identity(2))) < 1e-11);
        }
    }

    #[test]
    fn kappa_q_inverse_monotone_decreasing() {
        let m = build_model(&random_admissible(2, SignatureJ::new(1, 1), 3).unwrap()).unwrap();
        let id = identity(2);
        let mut prev: Option<CMatrix> = None;
        for &x in &[0.5, 1.0, 2.0, 4.0] {
            let (q, _) = m.qr_at(x).unwrap();
            let (qi, _) = pd_solve(&q, &id).unwrap();
            let qi = hermitize(&qi);
            if let Some(p) = prev {
                let diff = &p - &qi;
                let min_eig = hermitize(&diff)
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                assert!(min_eig > -1e-10 * fnorm(&p).max(1.0));
            }
            prev = Some(qi);
        }
    }

    #[test]
    fn wa_limit_scalar() {
        let m = ex1();
        let k = m.kappa_limits(30.0, 1e-12).unwrap();
        let lim = m.wa_limit(&k.k_q, &k.k_r);
        assert!((lim[(0, 0)] - Cx::new(-1.0, 0.0)).norm() < 1e-10);
        assert!((lim[(1, 1)] - Cx::new(1.0, 0.0)).norm() < 1e-10);
        assert!(lim[(0, 1)].norm() < 1e-14 && lim[(1, 0)].norm() < 1e-14);
        // numerical re-verification at large x
        let w = m.wa_at(25.0, Cx::new(0.0, 0.0)).unwrap();
        assert!(fnorm(&(w - lim)) < 1e-8);
    }

    #[test]
    fn y_asymptotic_matches_y_at_large_x() {
        let m = ex1();
        let k = m.kappa_limits(30.0, 1e-12).unwrap();
        let mut prev_rel = f64::INFINITY;
        for &x in &[5.0, 10.0, 20.0] {
            let y = m.y_at(x, 0.0).unwrap();
            let ya = m.y_asymptotic(x, 0.0, &k.k_q, &k.k_r).unwrap();
            let rel = fnorm(&(&y - &ya)) / fnorm(&y).max(1e-300);
            assert!(rel < prev_rel);
            prev_rel = rel;
        }
        assert!(prev_rel < 1e-3);
    }

    #[test]
    fn y_asymptotic_zero_for_zero_pi() {
        let m = zero_pi_model();
        let k = m.kappa_limits(10.0, 1e-12).unwrap();
        let ya = m.y_asymptotic(3.0, 1.0, &k.k_q, &k.k_r).unwrap();
        assert!(fnorm(&ya) < 1e-13);
    }

    #[test]
    fn eigenspaces_zero_pi() {
        let m = zero_pi_model();
        let (zp, zm) = m.eigenspaces(1.0).unwrap();
        // u == I so Z+ spans e1..e_m1, Z- spans the rest
        for c in 0..2 {
            assert!((zp[(c, c)] - Cx::new(2.0, 0.0)).norm() < 1e-13);
            assert!((zm[(2 + c, c)] - Cx::new(2.0, 0.0)).norm() < 1e-13);
        }
    }

    #[test]
    fn eigenspaces_satisfy_eigen_residual() {
        let m = ex1();
        for &x in &[0.5, 1.0, 2.0] {
            let hc = m.hcal_at(x).unwrap();
            let j = m.triple.sig.matrix();
            let jh = &j * &hc;
            let (zp, zm) = m.eigenspaces(x).unwrap();
            for c in 0..zp.ncols() {
                let z = zp.column(c).into_owned();
                assert!((&jh * &z - &z).norm() < 1e-9 * z.norm());
            }
            for c in 0..zm.ncols() {
                let z = zm.column(c).into_owned();
                assert!((&jh * &z + &z).norm() < 1e-9 * z.norm());
            }
        }
    }

    #[test]
    fn j_hcal_spectrum_is_plus_minus_one() {
        let m = build_model(&random_admissible(2, SignatureJ::new(2, 1), 17).unwrap()).unwrap();
        let j = m.triple.sig.matrix();
        for &x in &[0.5, 1.5] {
            let jh = &j * m.hcal_at(x).unwrap();
            let mut eigs = crate::matcore::eigenvalues(&jh).unwrap();
            eigs.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
            assert!((eigs[0] + Cx::new(1.0, 0.0)).norm() < 1e-9);
            assert!((eigs[1] - Cx::new(1.0, 0.0)).norm() < 1e-9);
            assert!((eigs[2] - Cx::new(1.0, 0.0)).norm() < 1e-9);
        }
    }

    #[test]
    fn similarity_witness() {
        let m = ex1();
        assert!(fnorm(&(m.similarity_t(0.0).unwrap() - identity(2))) < 1e-12);
        let j = m.triple.sig.matrix();
        for &x in &[1.0, 2.0] {
            let t = m.similarity_t(x).unwrap();
            let t_inv = inverse(&t, "T").unwrap();
            let jh = &j * m.hcal_at(x).unwrap();
            let resid = fnorm(&(&jh - &t * &j * t_inv));
            assert!(resid <= 1e-10 * fnorm(&m.hcal_at(x).unwrap()).max(1.0));
        }
    }

    #[test]
    fn identity_propagates_along_x() {
        let m = build_model(&random_admissible(3, SignatureJ::new(2, 2), 23).unwrap()).unwrap();
        let j = m.triple.sig.matrix();
        for k in 0..20 {
            let x = 0.15 * k as f64;
            let pi = m.pi_at(x);
            let s = m.s_at(x).unwrap();
            let lhs = &m.triple.a * &s - &s * m.triple.a.adjoint();
            let rhs = (&pi * &j * pi.adjoint()).map(|z| z * IM);
            let scale = (fnorm(&m.triple.a) * fnorm(&s) + fnorm(&pi).powi(2)).max(1.0);
            assert!(fnorm(&(lhs - rhs)) <= 1e-9 * scale);
        }
    }

    #[test]
    fn s_monotone_nondecreasing() {
        let m = build_model(&random_admissible(2, SignatureJ::new(1, 1), 31).unwrap()).unwrap();
        let mut prev: Option<CMatrix> = None;
        for k in 0..12 {
            let s = m.s_at(0.25 * k as f64).unwrap();
            if let Some(p) = prev {
                let diff = &s - &p;
                let min_eig = hermitize(&diff)
                    .symmetric_eigen()
                    .eigenvalues
                    .iter()
                    .cloned()
                    .fold(f64::INFINITY, f64::min);
                assert!(min_eig > -1e-10 * fnorm(&s));
            }
            prev = Some(s);
        }
    }

    #[test]
    fn wa_ode_finite_difference() {
        // w' = (i lam j H - q0~) w - i lam w j H with H = I
        let m = ex1();
        let j = m.triple.sig.matrix();
        let lam = Cx::new(0.4, 0.3);
        let x = 0.8;
        let mut resid_prev = f64::INFINITY;
        for &h in &[1e-2, 5e-3] {
            let d = (m.wa_at(x + h, lam).unwrap() - m.wa_at(x - h, lam).unwrap())
                .scale(1.0 / (2.0 * h));
            let pi = m.pi_at(x);
            let s = m.s_at(x).unwrap();
            let (s_inv_pi, _) = pd_solve(&s, &pi).unwrap();
            // q0~ = j Pi* S^{-1} Pi j H - j H j Pi* S^{-1} Pi, H = I
            let p_s_p = pi.adjoint() * &s_inv_pi;
            let q0 = &j * &p_s_p * &j - &p_s_p;
            let w = m.wa_at(x, lam).unwrap();
            let rhs = (&j).map(|z| z * Cx::new(0.0, 1.0) * lam) * &w - &q0 * &w
                - (&w * &j).map(|z| z * Cx::new(0.0, 1.0) * lam);
            let resid = fnorm(&(d - rhs));
            assert!(resid < resid_prev);
            resid_prev = resid;
        }
        assert!(resid_prev < 1e-4);
    }
}
