//! Verification harness: PDE residuals, energy and supply-rate accounting,
//! asymptotic decay, and boundary-matrix construction.
//!
//! Every check reports a residual together with the bound it was held to, so
//! a [`Report`] doubles as a numerical log of how tightly the identities hold.

use crate::explicit::{ExplicitError, ExplicitModel, SolutionField};
use crate::generalham::{
    hcal_general, integrate, q0_tilde, y_general, GeneralError, HamiltonianField, Trajectory,
};
use crate::matcore::{
    eigenvalues, fnorm, hermitize, identity, inverse, left_nullspace_basis, mat_exp, pd_solve,
    CMatrix, Cx, MatError,
};
use crate::triple::{GbdtTriple, SignatureJ};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("subspace basis is not A-invariant (residual {residual:.3e})")]
    NotInvariant { residual: f64 },
    #[error("left null space has {rows} rows, need at least {need}")]
    NullspaceDeficient { rows: usize, need: usize },
    #[error("engine evaluation failed: {0}")]
    Engine(String),
    #[error(transparent)]
    Mat(#[from] MatError),
}

impl From<ExplicitError> for VerifyError {
    fn from(e: ExplicitError) -> Self {
        VerifyError::Engine(e.to_string())
    }
}

impl From<GeneralError> for VerifyError {
    fn from(e: GeneralError) -> Self {
        VerifyError::Engine(e.to_string())
    }
}

/// One named check: `pass` holds exactly when `residual <= bound`.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub pass: bool,
    pub context: String,
}

impl CheckResult {
    pub fn new(name: &str, residual: f64, bound: f64, context: String) -> Self {
        CheckResult { name: name.into(), residual, bound, pass: residual <= bound, context }
    }

    pub fn skipped(name: &str, reason: &str) -> Self {
        CheckResult {
            name: name.into(),
            residual: 1.0,
            bound: 0.0,
            pass: false,
            context: format!("skipped: {reason}"),
        }
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn push(&mut self, c: CheckResult) {
        self.checks.push(c);
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("report serialization")
    }

    /// One line per check, stable order.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            out.push_str(&format!(
                "{} {:<24} residual {:.3e} bound {:.3e}  {}\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.name,
                c.residual,
                c.bound,
                c.context
            ));
        }
        out
    }
}

/// Adaptive Simpson quadrature with absolute floor 1e-12.
pub fn adaptive_simpson<F: FnMut(f64) -> f64>(f: &mut F, a: f64, b: f64, tol: f64) -> f64 {
    fn recurse<F: FnMut(f64) -> f64>(
        f: &mut F,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let tol = tol.max(1e-12);
    let fa = f(a);
    let fm = f(0.5 * (a + b));
    let fb = f(b);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    recurse(f, a, b, fa, fm, fb, whole, tol, 30)
}

/// Identity residual check computable on raw matrices (no validated triple
/// required, so it can report on deliberately broken input).
pub fn identity_check(a: &CMatrix, s0: &CMatrix, pi0: &CMatrix, sig: SignatureJ) -> CheckResult {
    let j = sig.matrix();
    let lhs = a * s0 - s0 * a.adjoint();
    let rhs = (pi0 * &j * pi0.adjoint()).map(|z| z * Cx::new(0.0, 1.0));
    let residual = fnorm(&(lhs - rhs));
    let scale = fnorm(a) * fnorm(s0) + fnorm(pi0).powi(2);
    CheckResult::new(
        "identity",
        residual,
        1e-10 * scale.max(f64::MIN_POSITIVE),
        format!("|AS0 - S0A* - iPi0 j Pi0*| over scale {scale:.3e}"),
    )
}

/// Max over interior grid nodes of the dynamical-system residual
/// `|dY/dt - j d(Hcal Y)/dx|` by central differences. Grids must be uniform.
pub fn pde_residual_max(f: &SolutionField, sig: SignatureJ) -> f64 {
    assert!(f.xs.len() >= 3 && f.ts.len() >= 3, "grid too coarse for central differences");
    let hx = f.xs[1] - f.xs[0];
    let ht = f.ts[1] - f.ts[0];
    // restrict to a fixed interior window so refinement ladders compare the
    // residual over the same region (the maximizer would otherwise track the
    // grid-dependent node nearest the boundary)
    let (x_lo, x_hi) = interior_window(f.xs[0], *f.xs.last().unwrap());
    let (t_lo, t_hi) = interior_window(f.ts[0], *f.ts.last().unwrap());
    let j = sig.matrix();
    let mut worst = 0.0_f64;
    for ix in 1..f.xs.len() - 1 {
        if f.xs[ix] < x_lo || f.xs[ix] > x_hi {
            continue;
        }
        for it in 1..f.ts.len() - 1 {
            if f.ts[it] < t_lo || f.ts[it] > t_hi {
                continue;
            }
            let dt_y = (f.y_at(ix, it + 1) - f.y_at(ix, it - 1)).scale(1.0 / (2.0 * ht));
            let hy_p = &f.hcal[ix + 1] * f.y_at(ix + 1, it);
            let hy_m = &f.hcal[ix - 1] * f.y_at(ix - 1, it);
            let dx_hy = (hy_p - hy_m).scale(1.0 / (2.0 * hx));
            worst = worst.max(fnorm(&(dt_y - &j * dx_hy)));
        }
    }
    worst
}

fn interior_window(lo: f64, hi: f64) -> (f64, f64) {
    let margin = 0.2 * (hi - lo);
    // tiny slack so grid-aligned window edges are kept despite roundoff
    let eps = 1e-9 * (hi - lo);
    (lo + margin - eps, hi - margin + eps)
}

/// Evaluate the PDE residual at a descending ladder of grid steps and check
/// the refinement ratios sit in the second-order window [3.2, 5.0].
/// `field_at(h)` must return the field sampled on uniform grids of step `h`.
pub fn pde_order_check<F>(sig: SignatureJ, steps: &[f64], mut field_at: F) -> CheckResult
where
    F: FnMut(f64) -> Result<SolutionField, String>,
{
    assert!(steps.len() >= 2);
    let mut residuals = Vec::with_capacity(steps.len());
    for &h in steps {
        match field_at(h) {
            Ok(f) => residuals.push(pde_residual_max(&f, sig)),
            Err(e) => return CheckResult::skipped("pde_residual", &e),
        }
    }
    let fmt_list =
        |v: &[f64]| v.iter().map(|r| format!("{r:.3e}")).collect::<Vec<_>>().join(", ");
    if residuals.iter().all(|&r| r <= 1e-12) {
        return CheckResult::new(
            "pde_residual",
            0.0,
            0.0,
            format!("residuals at machine zero: [{}]", fmt_list(&residuals)),
        );
    }
    let mut worst = 0.0_f64;
    let mut ratios = Vec::new();
    for w in residuals.windows(2) {
        let ratio = w[0] / w[1].max(f64::MIN_POSITIVE);
        ratios.push(ratio);
        let miss = if ratio < 3.2 {
            3.2 - ratio
        } else if ratio > 5.0 {
            ratio - 5.0
        } else {
            0.0
        };
        worst = worst.max(miss);
    }
    CheckResult::new(
        "pde_residual",
        worst,
        0.0,
        format!(
            "residuals [{}], halving ratios [{}] (window [3.2, 5.0])",
            fmt_list(&residuals),
            ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>().join(", ")
        ),
    )
}

/// Energy of the solution branch seeded by the n-vector `h`.
#[derive(Debug, Clone)]
pub struct EnergySample {
    pub t: f64,
    pub a: f64,
    /// Closed form: `sqrt(h* e^{-itA*} (S(0)^-1 - S(a)^-1) e^{itA} h)`.
    pub e: f64,
    /// Defining quadrature `sqrt(int_0^a h*Y* Hcal Y h dx)`.
    pub e_direct: f64,
}

/// Both energy evaluations for the closed-form engine.
pub fn energy(
    model: &ExplicitModel,
    h: &CMatrix,
    a: f64,
    t: f64,
    quad_tol: f64,
) -> Result<EnergySample, VerifyError> {
    assert_eq!(h.ncols(), 1);
    assert_eq!(h.nrows(), model.n());
    let g = model.exp_plus(t) * h;
    let e2 = energy_sq_closed(model, &g, a)?;
    let mut integrand = |x: f64| {
        let yh = model.y_at(x, t).expect("field evaluation inside [0, a]") * h;
        let hc = model.hcal_at(x).expect("Hcal evaluation inside [0, a]");
        (yh.adjoint() * hc * yh)[(0, 0)].re
    };
    let direct2 = adaptive_simpson(&mut integrand, 0.0, a, quad_tol);
    Ok(EnergySample { t, a, e: e2.max(0.0).sqrt(), e_direct: direct2.max(0.0).sqrt() })
}

/// Semiaxis energy: `S(a)^-1` replaced by the limit `kappa_S`.
pub fn energy_semiaxis(
    model: &ExplicitModel,
    h: &CMatrix,
    t: f64,
    k_s: &CMatrix,
) -> Result<f64, VerifyError> {
    let g = model.exp_plus(t) * h;
    let s0 = model.s_at(0.0)?;
    let (s0_inv, _) = pd_solve(&s0, &identity(model.n()))?;
    let m = hermitize(&s0_inv) - k_s;
    Ok((g.adjoint() * m * g)[(0, 0)].re.max(0.0).sqrt())
}

fn energy_sq_closed(model: &ExplicitModel, g: &CMatrix, a: f64) -> Result<f64, VerifyError> {
    let id = identity(model.n());
    let s0 = model.s_at(0.0)?;
    let sa = model.s_at(a)?;
    let (s0_inv, _) = pd_solve(&s0, &id)?;
    let (sa_inv, _) = pd_solve(&sa, &id)?;
    let m = hermitize(&(s0_inv - sa_inv));
    Ok((g.adjoint() * m * g)[(0, 0)].re)
}

/// Supply rate `s(x,Y,h) = h* e^{-itA*} S^-1 Pi j Pi* S^-1 e^{itA} h`,
/// returned together with the boundary-flux form `(Hcal Y h)* j (Hcal Y h)`;
/// the two agree by j-unitarity of `u`.
pub fn supply_rate_forms(
    model: &ExplicitModel,
    h: &CMatrix,
    x: f64,
    t: f64,
) -> Result<(f64, f64), VerifyError> {
    let j = model.triple.sig.matrix();
    let g = model.exp_plus(t) * h;
    let s = model.s_at(x)?;
    let (s_inv_g, _) = pd_solve(&s, &g)?;
    let w = model.pi_at(x).adjoint() * s_inv_g;
    let s1 = (w.adjoint() * &j * &w)[(0, 0)];
    debug_assert!(s1.im.abs() <= 1e-12 * s1.re.abs().max(1.0));

    let u_inv = inverse(&model.u_at(x)?, "u(x)")?;
    let v = u_inv * &j * &w;
    let s2 = (v.adjoint() * &j * v)[(0, 0)];
    Ok((s1.re, s2.re))
}

pub fn supply_rate(
    model: &ExplicitModel,
    h: &CMatrix,
    x: f64,
    t: f64,
) -> Result<f64, VerifyError> {
    Ok(supply_rate_forms(model, h, x, t)?.0)
}

/// Balance relation: `E(t2)^2 - E(t1)^2 = int_{t1}^{t2} (s(a) - s(0)) dt`.
pub fn energy_balance(
    model: &ExplicitModel,
    h: &CMatrix,
    a: f64,
    t1: f64,
    t2: f64,
    quad_tol: f64,
) -> Result<CheckResult, VerifyError> {
    assert!(t1 < t2);
    let g1 = model.exp_plus(t1) * h;
    let g2 = model.exp_plus(t2) * h;
    let lhs = energy_sq_closed(model, &g2, a)? - energy_sq_closed(model, &g1, a)?;
    let mut integrand = |t: f64| {
        let sa = supply_rate(model, h, a, t).expect("supply rate at x = a");
        let s0 = supply_rate(model, h, 0.0, t).expect("supply rate at x = 0");
        sa - s0
    };
    let rhs = adaptive_simpson(&mut integrand, t1, t2, quad_tol);
    let scale = lhs.abs().max(rhs.abs()).max(1e-12);
    Ok(CheckResult::new(
        "energy_balance",
        (lhs - rhs).abs() / scale,
        quad_tol.max(1e-6),
        format!("endpoint energies {lhs:.6e} vs supply integral {rhs:.6e} on [{t1}, {t2}]"),
    ))
}

/// Decay of the off-diagonal asymptotic terms along the geometric schedule,
/// plus a finite-difference check of the `(Q^-1)'` derivative identity.
pub fn decay_suite(model: &ExplicitModel, x_max: f64) -> Result<Vec<CheckResult>, VerifyError> {
    let a = &model.triple.a;
    let id = identity(model.n());
    let mut d_q = Vec::new();
    let mut d_r = Vec::new();
    for k in 0..=20u32 {
        let x = x_max * (1.0 - 0.5_f64.powi(k as i32));
        let (q, r) = model.qr_at(x)?;
        let (q_inv, _) = pd_solve(&q, &id)?;
        let (r_inv, _) = pd_solve(&r, &id)?;
        let e_m2 = mat_exp(&a.adjoint().map(|z| z * Cx::new(0.0, -2.0 * x)), 1e-12)?;
        let e_p2 = mat_exp(&a.adjoint().map(|z| z * Cx::new(0.0, 2.0 * x)), 1e-12)?;
        d_q.push(fnorm(&(model.theta2.adjoint() * e_m2 * &q_inv)));
        d_r.push(fnorm(&(model.theta1.adjoint() * e_p2 * &r_inv)));
    }
    let decreasing = |v: &[f64]| v.windows(2).skip(v.len() - 6).all(|w| w[1] <= w[0] * 1.0001);
    let mut out = Vec::new();
    for (name, seq) in [("decay_q", &d_q), ("decay_r", &d_r)] {
        let final_v = *seq.last().unwrap();
        let tail_ok = seq.iter().all(|v| *v == 0.0) || decreasing(seq);
        out.push(CheckResult::new(
            name,
            if tail_ok { final_v } else { final_v.max(1.0) },
            1e-6,
            format!(
                "start {:.3e}, final {:.3e} at x = {:.2}, tail decreasing: {}",
                seq[0],
                final_v,
                x_max * (1.0 - 0.5_f64.powi(20)),
                tail_ok
            ),
        ));
    }
    out.push(q_inv_derivative_check(model, 1.0)?);
    Ok(out)
}

/// Central-difference check of
/// `(Q^-1)'(x) = -2 Q^-1 e^{2ixA} theta2 theta2* e^{-2ixA*} Q^-1`
/// at second order under step halving.
fn q_inv_derivative_check(model: &ExplicitModel, x: f64) -> Result<CheckResult, VerifyError> {
    let a = &model.triple.a;
    let id = identity(model.n());
    let q_inv_at = |x: f64| -> Result<CMatrix, VerifyError> {
        let (q, _) = model.qr_at(x)?;
        let (qi, _) = pd_solve(&q, &id)?;
        Ok(hermitize(&qi))
    };
    let qi = q_inv_at(x)?;
    let e_p = mat_exp(&a.map(|z| z * Cx::new(0.0, 2.0 * x)), 1e-12)?;
    let e_m = mat_exp(&a.adjoint().map(|z| z * Cx::new(0.0, -2.0 * x)), 1e-12)?;
    let rhs =
        (&qi * e_p * &model.theta2 * model.theta2.adjoint() * e_m * &qi).scale(-2.0);
    let mut resids = Vec::new();
    for &h in &[1e-2, 5e-3] {
        let fd = (q_inv_at(x + h)? - q_inv_at(x - h)?).scale(1.0 / (2.0 * h));
        resids.push(fnorm(&(fd - &rhs)));
    }
    if resids.iter().all(|&r| r <= 1e-11) {
        return Ok(CheckResult::new(
            "decay_qinv_derivative",
            0.0,
            0.0,
            "finite-difference residuals at machine zero".into(),
        ));
    }
    let order = (resids[0] / resids[1].max(f64::MIN_POSITIVE)).log2();
    Ok(CheckResult::new(
        "decay_qinv_derivative",
        (order - 2.0).abs(),
        0.5,
        format!("residuals {:.3e} -> {:.3e}, empirical order {order:.3}", resids[0], resids[1]),
    ))
}

/// Either engine's output, viewed through the quantities the boundary
/// construction needs.
pub enum EngineRef<'a> {
    Explicit(&'a ExplicitModel),
    General(&'a Trajectory),
}

impl EngineRef<'_> {
    pub fn triple(&self) -> &GbdtTriple {
        match self {
            EngineRef::Explicit(m) => &m.triple,
            EngineRef::General(tr) => &tr.triple,
        }
    }

    fn pi_s_u(&self, x: f64) -> Result<(CMatrix, CMatrix, CMatrix), VerifyError> {
        match self {
            EngineRef::Explicit(m) => Ok((m.pi_at(x), m.s_at(x)?, m.u_at(x)?)),
            EngineRef::General(tr) => {
                let idx = tr.node_index(x)?;
                Ok((tr.pi[idx].clone(), tr.s[idx].clone(), tr.u[idx].clone()))
            }
        }
    }

    /// `Hcal(x) Y(x,t) = j u(x)* Pi(x)* S(x)^-1 e^{itA}` (equal to
    /// `u^-1 j Pi* S^-1 e^{itA}` by j-unitarity).
    pub fn hcal_y(&self, x: f64, t: f64) -> Result<CMatrix, VerifyError> {
        let (pi, s, u) = self.pi_s_u(x)?;
        let triple = self.triple();
        let j = triple.sig.matrix();
        let eta = mat_exp(&triple.a.map(|z| z * Cx::new(0.0, t)), 1e-12)?;
        let (s_inv_eta, _) = pd_solve(&s, &eta)?;
        Ok(&j * u.adjoint() * pi.adjoint() * s_inv_eta)
    }
}

#[derive(Debug, Clone)]
pub struct BoundaryDesign {
    /// `m x 2m` matrix with orthonormal rows annihilating the stacked
    /// boundary values `[Hcal(a)Y(a,t)h; Hcal(0)Y(0,t)h]` for `h` in the
    /// invariant subspace.
    pub w: CMatrix,
    /// Max over sampled t and basis columns of `|W v| / max(1, |v|)`.
    pub residual: f64,
    /// Max minus min of the per-t residuals (t-independence witness).
    pub t_spread: f64,
}

/// Build boundary matrices from an A-invariant subspace basis `L` (n x k,
/// k <= m): stack `j u(x)* Pi(x)* S(x)^-1 L` at `x = a` over `x = 0`, take m
/// orthonormal rows of its left null space, and verify the annihilation over
/// 20 sampled t in [0, 5].
pub fn boundary_design(
    engine: &EngineRef,
    a: f64,
    l_basis: &CMatrix,
) -> Result<BoundaryDesign, VerifyError> {
    let triple = engine.triple();
    let m = triple.sig.m();
    let k = l_basis.ncols();
    assert!(k >= 1 && k <= m, "subspace dimension must be in 1..=m");
    assert_eq!(l_basis.nrows(), triple.n());

    // invariance: A L = L (L^+ A L) with L^+ the left pseudo-inverse
    let gram = hermitize(&(l_basis.adjoint() * l_basis));
    let (pinv_al, _) = pd_solve(&gram, &(l_basis.adjoint() * &triple.a * l_basis))?;
    let inv_resid = fnorm(&(&triple.a * l_basis - l_basis * pinv_al));
    let inv_scale = (fnorm(&triple.a) * fnorm(l_basis)).max(f64::MIN_POSITIVE);
    if inv_resid > 1e-9 * inv_scale {
        return Err(VerifyError::NotInvariant { residual: inv_resid / inv_scale });
    }

    let block = |x: f64| -> Result<CMatrix, VerifyError> {
        let (pi, s, u) = engine.pi_s_u(x)?;
        let (s_inv_l, _) = pd_solve(&s, l_basis)?;
        Ok(triple.sig.matrix() * u.adjoint() * pi.adjoint() * s_inv_l)
    };
    let top = block(a)?;
    let bot = block(0.0)?;
    let mut stacked = CMatrix::zeros(2 * m, k);
    for i in 0..m {
        for c in 0..k {
            stacked[(i, c)] = top[(i, c)];
            stacked[(m + i, c)] = bot[(i, c)];
        }
    }
    let null = left_nullspace_basis(&stacked, 1e-10)?;
    if null.nrows() < m {
        return Err(VerifyError::NullspaceDeficient { rows: null.nrows(), need: m });
    }
    let w = null.rows(0, m).into_owned();

    let mut worst = 0.0_f64;
    let mut best = f64::INFINITY;
    for i in 0..20 {
        let t = 5.0 * i as f64 / 19.0;
        let va = engine.hcal_y(a, t)? * l_basis;
        let v0 = engine.hcal_y(0.0, t)? * l_basis;
        let mut r_t = 0.0_f64;
        for c in 0..k {
            let mut v = CMatrix::zeros(2 * m, 1);
            for i in 0..m {
                v[(i, 0)] = va[(i, c)];
                v[(m + i, 0)] = v0[(i, c)];
            }
            r_t = r_t.max(fnorm(&(&w * &v)) / fnorm(&v).max(1.0));
        }
        worst = worst.max(r_t);
        best = best.min(r_t);
    }
    Ok(BoundaryDesign { w, residual: worst, t_spread: worst - best })
}

/// Which engine the suite should drive.
pub enum EngineChoice {
    Explicit,
    General { ham: HamiltonianField, step: f64 },
}

/// Everything `run_suite` needs: raw triple matrices (so broken input still
/// produces a report), engine choice, interval, and per-check bound overrides.
pub struct SuiteInput {
    pub a: CMatrix,
    pub s0: CMatrix,
    pub pi0: CMatrix,
    pub sig: SignatureJ,
    pub engine: EngineChoice,
    pub x_end: f64,
    /// Empty means the engine's default check list.
    pub checks: Vec<String>,
    pub bounds: HashMap<String, f64>,
    pub seed: u64,
}

const EXPLICIT_CHECKS: &[&str] = &[
    "identity",
    "identity_propagation",
    "j_unitarity",
    "pde_residual",
    "monotonicity",
    "transfer_inverse",
    "transfer_u_factorization",
    "transfer_ode",
    "similarity",
    "eigenspaces",
    "energy",
    "energy_balance",
    "kappa",
    "asymptotics_wa",
    "asymptotics_y",
    "decay",
];

const GENERAL_CHECKS: &[&str] = &[
    "identity",
    "identity_propagation",
    "j_unitarity",
    "pde_residual",
    "hcal_positivity",
];

/// Pick an x-schedule endpoint for the asymptotic limits from the spectrum of
/// `A`: far enough out for the `e^{-2 Im(lambda) x}` terms to die, close
/// enough in that `S(x)` stays invertible in double precision.
pub fn suggest_xmax(a: &CMatrix) -> f64 {
    match eigenvalues(a) {
        Ok(eigs) => {
            let im_min = eigs.iter().map(|z| z.im.abs()).fold(f64::INFINITY, f64::min);
            if im_min < 0.05 {
                20.0
            } else {
                (10.0 / im_min).clamp(5.0, 30.0)
            }
        }
        Err(_) => 20.0,
    }
}

struct SuiteCtx<'a> {
    input: &'a SuiteInput,
    report: Report,
    requested: Vec<String>,
}

impl SuiteCtx<'_> {
    fn bound(&self, name: &str, default: f64) -> f64 {
        self.input.bounds.get(name).copied().unwrap_or(default)
    }

    fn wants(&self, name: &str) -> bool {
        self.requested.iter().any(|c| c == name)
    }

    fn skip_rest(&mut self, from: usize, reason: &str) {
        let names: Vec<String> = self.requested[from..].to_vec();
        for name in names {
            self.report.push(CheckResult::skipped(&name, reason));
        }
    }
}

/// Run every requested check and aggregate the results; component failures
/// become failed checks, never a crash.
pub fn run_suite(input: &SuiteInput) -> Report {
    let defaults: &[&str] = match input.engine {
        EngineChoice::Explicit => EXPLICIT_CHECKS,
        EngineChoice::General { .. } => GENERAL_CHECKS,
    };
    let requested: Vec<String> = if input.checks.is_empty() {
        defaults.iter().map(|s| s.to_string()).collect()
    } else {
        input.checks.clone()
    };
    let mut ctx = SuiteCtx { input, report: Report::default(), requested };

    let id_check = identity_check(&input.a, &input.s0, &input.pi0, input.sig);
    let identity_ok = id_check.pass;
    if ctx.wants("identity") {
        ctx.report.push(id_check);
    }
    let done = ctx.report.checks.len();
    if !identity_ok {
        ctx.skip_rest(done, "parameter identity violated");
        return ctx.report;
    }
    let triple = match GbdtTriple::new(
        input.a.clone(),
        input.s0.clone(),
        input.pi0.clone(),
        input.sig,
    ) {
        Ok(t) => t,
        Err(e) => {
            ctx.skip_rest(done, &format!("triple rejected: {e}"));
            return ctx.report;
        }
    };

    match &input.engine {
        EngineChoice::Explicit => run_explicit_suite(&mut ctx, &triple),
        EngineChoice::General { ham, step } => {
            run_general_suite(&mut ctx, &triple, ham, *step)
        }
    }
    ctx.report
}

fn run_explicit_suite(ctx: &mut SuiteCtx, triple: &GbdtTriple) {
    let model = match crate::explicit::build_model(triple) {
        Ok(m) => m,
        Err(e) => {
            let done = ctx.report.checks.len();
            ctx.skip_rest(done, &format!("explicit engine build failed: {e}"));
            return;
        }
    };
    let a_end = ctx.input.x_end;
    let sig = triple.sig;
    let j = sig.matrix();
    let n = triple.n();

    macro_rules! guard {
        ($name:expr, $e:expr) => {
            match $e {
                Ok(v) => v,
                Err(err) => {
                    ctx.report.push(CheckResult::skipped($name, &err.to_string()));
                    break;
                }
            }
        };
    }

    let names = ctx.requested.clone();
    #[allow(clippy::never_loop)]
    for name in &names {
        // single-iteration loop so `guard!` can bail out to the next check
        loop {
            match name.as_str() {
                "identity" => {}
                "identity_propagation" => {
                    let mut worst = 0.0_f64;
                    for k in 0..100 {
                        let x = a_end * k as f64 / 99.0;
                        let s = guard!(name, model.s_at(x));
                        let pi = model.pi_at(x);
                        let resid = fnorm(
                            &(&triple.a * &s
                                - &s * triple.a.adjoint()
                                - (&pi * &j * pi.adjoint()).map(|z| z * Cx::new(0.0, 1.0))),
                        );
                        let scale = fnorm(&triple.a) * fnorm(&s) + fnorm(&pi).powi(2);
                        worst = worst.max(resid / scale.max(f64::MIN_POSITIVE));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-9),
                        format!("max over 100 x in [0, {a_end}]"),
                    ));
                }
                "j_unitarity" => {
                    let mut worst = 0.0_f64;
                    for k in 0..=20 {
                        let x = a_end * k as f64 / 20.0;
                        let u = guard!(name, model.u_at(x));
                        worst = worst.max(fnorm(&(u.adjoint() * &j * &u - &j)));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-10),
                        format!("max |u*ju - j| over 21 x in [0, {a_end}]"),
                    ));
                }
                "pde_residual" => {
                    let x1 = a_end.min(2.0);
                    let steps = [x1 / 25.0, x1 / 50.0, x1 / 100.0];
                    let check = pde_order_check(sig, &steps, |h| {
                        let nx = (x1 / h).round() as usize;
                        let nt = (2.0 / h).round() as usize;
                        let xs: Vec<f64> = (0..=nx).map(|k| k as f64 * h).collect();
                        let ts: Vec<f64> = (0..=nt).map(|k| k as f64 * h).collect();
                        model.field(&xs, &ts).map_err(|e| e.to_string())
                    });
                    ctx.report.push(check);
                }
                "monotonicity" => {
                    let mut worst = 0.0_f64;
                    let mut prev: Option<(CMatrix, CMatrix, CMatrix)> = None;
                    for k in 0..=16 {
                        let x = a_end * k as f64 / 16.0;
                        let s = guard!(name, model.s_at(x));
                        let (q, r) = guard!(name, model.qr_at(x));
                        if let Some((ps, pq, pr)) = &prev {
                            for (cur, old) in [(&s, ps), (&q, pq), (&r, pr)] {
                                let d = hermitize(&(cur - old));
                                let min_eig = d
                                    .symmetric_eigen()
                                    .eigenvalues
                                    .iter()
                                    .fold(f64::INFINITY, |m, &v| m.min(v));
                                worst = worst
                                    .max((-min_eig / fnorm(cur).max(f64::MIN_POSITIVE)).max(0.0));
                            }
                        }
                        prev = Some((s, q, r));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-10),
                        "S, Q, R nondecreasing across 17 x samples".into(),
                    ));
                }
                "transfer_inverse" => {
                    let mut rng = ChaCha8Rng::seed_from_u64(ctx.input.seed ^ 0x7472616e73);
                    let mut worst = 0.0_f64;
                    let mut done = 0;
                    let mut attempts = 0;
                    while done < 50 && attempts < 500 {
                        attempts += 1;
                        let x = rng.gen_range(0.0..a_end.min(3.0));
                        let lam = Cx::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
                        let w1 = match model.wa_at(x, lam) {
                            Ok(w) => w,
                            Err(_) => continue,
                        };
                        let w2 = match model.wa_at(x, lam.conj()) {
                            Ok(w) => w,
                            Err(_) => continue,
                        };
                        worst =
                            worst.max(fnorm(&(&w1 * &j * w2.adjoint() * &j - identity(sig.m()))));
                        done += 1;
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-9),
                        format!("|w_A(x,l) j w_A(x,conj l)* j - I| over {done} random (x, l)"),
                    ));
                }
                "transfer_u_factorization" => {
                    let w0 = guard!(name, model.wa_at(0.0, Cx::new(0.0, 0.0)));
                    let w0_inv = guard!(name, inverse(&w0, "w_A(0,0)"));
                    let mut worst = 0.0_f64;
                    for k in 0..=10 {
                        let x = a_end.min(3.0) * k as f64 / 10.0;
                        let u = guard!(name, model.u_at(x));
                        let wx = guard!(name, model.wa_at(x, Cx::new(0.0, 0.0)));
                        worst = worst.max(fnorm(&(u - wx * &w0_inv)));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-10),
                        "u(x) vs w_A(x,0) w_A(0,0)^-1 over 11 x".into(),
                    ));
                }
                "transfer_ode" => {
                    ctx.report.push(guard!(name, wa_ode_order_check(&model)));
                }
                "similarity" => {
                    let mut worst = 0.0_f64;
                    for k in 0..=10 {
                        let x = a_end.min(3.0) * k as f64 / 10.0;
                        let hc = guard!(name, model.hcal_at(x));
                        let t_w = guard!(name, model.similarity_t(x));
                        let t_inv = guard!(name, inverse(&t_w, "similarity witness"));
                        let resid = fnorm(&(&j * &hc - &t_w * &j * t_inv));
                        worst = worst.max(resid / fnorm(&hc).max(1.0));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-9),
                        "|j Hcal - T j T^-1| relative, 11 x samples".into(),
                    ));
                }
                "eigenspaces" => {
                    let mut worst = 0.0_f64;
                    for k in 1..=5 {
                        let x = a_end.min(3.0) * k as f64 / 5.0;
                        let hc = guard!(name, model.hcal_at(x));
                        let (zp, zm) = guard!(name, model.eigenspaces(x));
                        for c in 0..zp.ncols() {
                            let z = zp.columns(c, 1).into_owned();
                            worst = worst
                                .max(fnorm(&(&j * &hc * &z - &z)) / fnorm(&z).max(1e-300));
                        }
                        for c in 0..zm.ncols() {
                            let z = zm.columns(c, 1).into_owned();
                            worst = worst
                                .max(fnorm(&(&j * &hc * &z + &z)) / fnorm(&z).max(1e-300));
                        }
                        let eigs = guard!(name, eigenvalues(&(&j * &hc)));
                        let plus = eigs.iter().filter(|z| z.re > 0.0).count();
                        if plus != sig.m1 {
                            worst = worst.max(1.0);
                        }
                        for lam in eigs {
                            let target = if lam.re > 0.0 { 1.0 } else { -1.0 };
                            worst = worst.max((lam - Cx::new(target, 0.0)).norm());
                        }
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-9),
                        format!(
                            "j Hcal z = +/-z on Z+/- columns and spectrum (+1 x{}, -1 x{})",
                            sig.m1, sig.m2
                        ),
                    ));
                }
                "energy" => {
                    let h = CMatrix::from_element(n, 1, Cx::new(1.0, 0.0));
                    let sample = guard!(name, energy(&model, &h, a_end, 0.5, 1e-9));
                    let resid = (sample.e - sample.e_direct).abs() / sample.e.max(1e-12);
                    ctx.report.push(CheckResult::new(
                        name,
                        resid,
                        ctx.bound(name, 1e-6),
                        format!(
                            "closed form {:.9e} vs quadrature {:.9e} (a = {a_end}, t = 0.5)",
                            sample.e, sample.e_direct
                        ),
                    ));
                }
                "energy_balance" => {
                    let h = CMatrix::from_element(n, 1, Cx::new(1.0, 0.0));
                    ctx.report
                        .push(guard!(name, energy_balance(&model, &h, a_end, 0.0, 1.0, 1e-8)));
                }
                "kappa" => {
                    let x_max = ctx
                        .input
                        .bounds
                        .get("kappa_xmax")
                        .copied()
                        .unwrap_or_else(|| suggest_xmax(&triple.a));
                    let tol = ctx.bound("kappa_tol", 1e-9);
                    let k = guard!(name, model.kappa_limits(x_max, tol));
                    let misses = [k.q_converged, k.r_converged, k.s_converged]
                        .iter()
                        .filter(|c| !**c)
                        .count();
                    ctx.report.push(CheckResult::new(
                        name,
                        misses as f64,
                        0.0,
                        format!(
                            "Q/R/S inverse limits converged: {}/{}/{} at x_max = {x_max:.2}",
                            k.q_converged, k.r_converged, k.s_converged
                        ),
                    ));
                }
                "asymptotics_wa" => {
                    let x_max = ctx
                        .input
                        .bounds
                        .get("kappa_xmax")
                        .copied()
                        .unwrap_or_else(|| suggest_xmax(&triple.a));
                    let k = guard!(name, model.kappa_limits(x_max, 1e-9));
                    let wl = model.wa_limit(&k.k_q, &k.k_r);
                    let mut dev = Vec::new();
                    for &x in &k.schedule {
                        let wa = guard!(name, model.wa_at(x, Cx::new(0.0, 0.0)));
                        dev.push(fnorm(&(wa - &wl)));
                    }
                    let final_v = *dev.last().unwrap();
                    let tail = &dev[dev.len() - 6..];
                    // Monotone decrease is meaningless once the deviation sits at
                    // roundoff level; treat an all-tiny tail as converged.
                    let dec = tail.windows(2).all(|w| w[1] <= w[0] * 1.01)
                        || tail.iter().all(|&v| v <= 1e-10);
                    ctx.report.push(CheckResult::new(
                        name,
                        if dec { final_v } else { final_v.max(1.0) },
                        ctx.bound(name, 1e-6),
                        format!(
                            "|w_A(x,0) - limit|: start {:.3e}, final {:.3e}, tail decreasing: {dec}",
                            dev[0], final_v
                        ),
                    ));
                }
                "asymptotics_y" => {
                    let x_max = ctx
                        .input
                        .bounds
                        .get("kappa_xmax")
                        .copied()
                        .unwrap_or_else(|| suggest_xmax(&triple.a));
                    let k = guard!(name, model.kappa_limits(x_max, 1e-9));
                    let x = *k.schedule.last().unwrap();
                    let mut worst = 0.0_f64;
                    for &t in &[0.0, 0.7] {
                        let y = guard!(name, model.y_at(x, t));
                        let ya = guard!(name, model.y_asymptotic(x, t, &k.k_q, &k.k_r));
                        worst = worst.max(fnorm(&(&y - &ya)) / fnorm(&y).max(1e-300));
                    }
                    ctx.report.push(CheckResult::new(
                        name,
                        worst,
                        ctx.bound(name, 1e-3),
                        format!("relative deviation of Y from its leading form at x = {x:.2}"),
                    ));
                }
                "decay" => {
                    let x_max = ctx
                        .input
                        .bounds
                        .get("kappa_xmax")
                        .copied()
                        .unwrap_or_else(|| suggest_xmax(&triple.a));
                    let entries = guard!(name, decay_suite(&model, x_max));
                    for e in entries {
                        ctx.report.push(e);
                    }
                }
                other => {
                    ctx.report
                        .push(CheckResult::skipped(other, "unknown check for explicit engine"));
                }
            }
            break;
        }
    }
}

/// Finite-difference check of the transfer-matrix differential equation
/// `w_A' = (i lambda j H - q0) w_A - i lambda w_A j H` (H = I) at order 2.
fn wa_ode_order_check(model: &ExplicitModel) -> Result<CheckResult, VerifyError> {
    let lam = Cx::new(0.3, 0.4);
    let x = 1.0;
    let j = model.triple.sig.matrix();
    let h_id = identity(model.m());
    let pi = model.pi_at(x);
    let s = model.s_at(x)?;
    let q0 = q0_tilde(&pi, &s, &h_id, model.triple.sig)?;
    let wa = model.wa_at(x, lam)?;
    let rhs = (j.map(|z| z * Cx::new(0.0, 1.0) * lam) - q0) * &wa
        - (&wa * &j).map(|z| z * Cx::new(0.0, 1.0) * lam);
    let mut resids = Vec::new();
    for &h in &[1e-2, 5e-3] {
        let fd = (model.wa_at(x + h, lam)? - model.wa_at(x - h, lam)?).scale(1.0 / (2.0 * h));
        resids.push(fnorm(&(fd - &rhs)));
    }
    let floor = 1e-11 * fnorm(&wa).max(1.0);
    if resids.iter().all(|&r| r <= floor) {
        return Ok(CheckResult::new(
            "transfer_ode",
            0.0,
            0.5,
            format!(
                "residuals at machine zero: {:.3e} -> {:.3e}",
                resids[0], resids[1]
            ),
        ));
    }
    let order = (resids[0] / resids[1].max(f64::MIN_POSITIVE)).log2();
    Ok(CheckResult::new(
        "transfer_ode",
        (order - 2.0).abs(),
        0.5,
        format!("residuals {:.3e} -> {:.3e}, empirical order {order:.3}", resids[0], resids[1]),
    ))
}

/// Sample a general-engine trajectory into a [`SolutionField`] over all nodes
/// up to `x1` and the given t grid.
pub fn general_field(
    triple: &GbdtTriple,
    ham: &HamiltonianField,
    x1: f64,
    step: f64,
    ts: &[f64],
) -> Result<SolutionField, GeneralError> {
    let tr = integrate(triple, ham, x1, step)?;
    let mut y = Vec::with_capacity(tr.xs.len() * ts.len());
    let mut hcal = Vec::with_capacity(tr.xs.len());
    for &x in &tr.xs {
        hcal.push(hcal_general(&tr, x)?);
        for &t in ts {
            y.push(y_general(&tr, x, t)?);
        }
    }
    Ok(SolutionField { xs: tr.xs.clone(), ts: ts.to_vec(), y, hcal })
}

fn run_general_suite(
    ctx: &mut SuiteCtx,
    triple: &GbdtTriple,
    ham: &HamiltonianField,
    step: f64,
) {
    let a_end = ctx.input.x_end;
    let tr = match integrate(triple, ham, a_end, step) {
        Ok(t) => t,
        Err(e) => {
            let done = ctx.report.checks.len();
            ctx.skip_rest(done, &format!("integration failed: {e}"));
            return;
        }
    };
    let sig = triple.sig;
    let j = sig.matrix();
    let nsteps = tr.xs.len() - 1;
    let stride = (nsteps / 100).max(1);

    let names = ctx.requested.clone();
    for name in &names {
        match name.as_str() {
            "identity" => {}
            "identity_propagation" => {
                let mut worst = 0.0_f64;
                for idx in (0..=nsteps).step_by(stride) {
                    let s = &tr.s[idx];
                    let pi = &tr.pi[idx];
                    let resid = fnorm(
                        &(&triple.a * s
                            - s * triple.a.adjoint()
                            - (pi * &j * pi.adjoint()).map(|z| z * Cx::new(0.0, 1.0))),
                    );
                    let scale = fnorm(&triple.a) * fnorm(s) + fnorm(pi).powi(2);
                    worst = worst.max(resid / scale.max(f64::MIN_POSITIVE));
                }
                ctx.report.push(CheckResult::new(
                    name,
                    worst,
                    ctx.bound(name, 1e-9),
                    format!("sampled nodes, step {step}"),
                ));
            }
            "j_unitarity" => {
                let mut worst = 0.0_f64;
                for idx in (0..=nsteps).step_by(stride) {
                    let u = &tr.u[idx];
                    worst = worst.max(fnorm(&(u.adjoint() * &j * u - &j)));
                }
                ctx.report.push(CheckResult::new(
                    name,
                    worst,
                    ctx.bound(name, 1e-9),
                    format!("max |u*ju - j| over integration nodes, step {step}"),
                ));
            }
            "pde_residual" => {
                let x1 = a_end.min(2.0);
                let steps = [x1 / 20.0, x1 / 40.0, x1 / 80.0];
                let check = pde_order_check(sig, &steps, |h| {
                    let nt = (2.0 / h).round() as usize;
                    let ts: Vec<f64> = (0..=nt).map(|k| k as f64 * h).collect();
                    general_field(triple, ham, x1, h, &ts).map_err(|e| e.to_string())
                });
                ctx.report.push(check);
            }
            "hcal_positivity" => {
                let mut worst = 0.0_f64;
                let mut failure: Option<String> = None;
                for idx in (0..=nsteps).step_by((nsteps / 20).max(1)) {
                    match hcal_general(&tr, tr.xs[idx]) {
                        Ok(hc) => {
                            let min_eig = hermitize(&hc)
                                .symmetric_eigen()
                                .eigenvalues
                                .iter()
                                .fold(f64::INFINITY, |m, &v| m.min(v));
                            worst = worst.max((-min_eig).max(0.0));
                        }
                        Err(e) => {
                            failure = Some(e.to_string());
                            break;
                        }
                    }
                }
                ctx.report.push(match failure {
                    Some(e) => CheckResult::skipped(name, &e),
                    None => CheckResult::new(
                        name,
                        worst,
                        0.0,
                        "transformed Hamiltonian positive definite at sampled nodes".into(),
                    ),
                });
            }
            other => {
                ctx.report.push(CheckResult::skipped(other, "unknown check for general engine"));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::explicit::build_model;
    use crate::triple::{random_admissible_in, reference_scalar_triple, SpectrumRegion};

    fn ex1() -> ExplicitModel {
        build_model(&reference_scalar_triple()).unwrap()
    }

    #[test]
    fn simpson_polynomial_exact() {
        // Simpson is exact on cubics
        let v = adaptive_simpson(&mut |x: f64| x * x * x, 0.0, 2.0, 1e-10);
        assert!((v - 4.0).abs() < 1e-12);
        let e = adaptive_simpson(&mut |x: f64| x.exp(), 0.0, 1.0, 1e-10);
        assert!((e - (1f64.exp() - 1.0)).abs() < 1e-9);
    }

    #[test]
    fn identity_check_reference_and_broken() {
        let t = reference_scalar_triple();
        let c = identity_check(&t.a, &t.s0, &t.pi0, t.sig);
        assert!(c.pass && c.residual < 1e-14);
        // A = i, S0 = 1, Pi0 = (1, 1): residual |2i - 0| = 2
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 1.0));
        let s0 = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let pi0 = CMatrix::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(1.0, 0.0)]);
        let c = identity_check(&a, &s0, &pi0, SignatureJ::new(1, 1));
        assert!(!c.pass);
        assert!((c.residual - 2.0).abs() < 1e-14);
    }

    #[test]
    fn energy_matches_scalar_closed_form() {
        // E(t)^2 = e^{-t} (1 - 1/(2 e^a - e^{-a}))
        let m = ex1();
        let h = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let a = 2.0;
        for &t in &[0.0, 0.5, 1.3] {
            let s = energy(&m, &h, a, t, 1e-10).unwrap();
            let want = ((-t).exp() * (1.0 - 1.0 / (2.0 * a.exp() - (-a).exp()))).sqrt();
            assert!((s.e - want).abs() < 1e-10, "closed form at t={t}");
            assert!((s.e - s.e_direct).abs() < 1e-7 * s.e.max(1e-12), "quadrature at t={t}");
        }
    }

    #[test]
    fn supply_rate_scalar_value_and_forms() {
        let m = ex1();
        let h = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        // x=0, t=0: S(0)^-1 Pi(0) j Pi(0)* S(0)^-1 = 2 - 1 = 1
        let (s1, s2) = supply_rate_forms(&m, &h, 0.0, 0.0).unwrap();
        assert!((s1 - 1.0).abs() < 1e-12);
        assert!((s1 - s2).abs() < 1e-10);
        for &(x, t) in &[(0.7, 0.3), (2.0, 1.1)] {
            let (a, b) = supply_rate_forms(&m, &h, x, t).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0));
        }
    }

    #[test]
    fn balance_holds_on_reference() {
        let m = ex1();
        let h = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let c = energy_balance(&m, &h, 2.0, 0.0, 1.0, 1e-8).unwrap();
        assert!(c.pass, "balance: {}", c.context);
        assert!(c.residual < 1e-6);
    }

    #[test]
    fn balance_holds_on_random_model() {
        let t = random_admissible_in(
            3,
            SignatureJ::new(2, 2),
            11,
            SpectrumRegion::Split { upper: 2 },
        )
        .unwrap();
        let m = build_model(&t).unwrap();
        let h = CMatrix::from_element(3, 1, Cx::new(1.0, 0.0));
        let c = energy_balance(&m, &h, 1.5, 0.0, 1.0, 1e-8).unwrap();
        assert!(c.pass, "balance: {}", c.context);
    }

    #[test]
    fn pde_order_window_on_reference() {
        let m = ex1();
        let c = pde_order_check(m.triple.sig, &[0.08, 0.04, 0.02], |h| {
            let nx = (2.0 / h).round() as usize;
            let xs: Vec<f64> = (0..=nx).map(|k| k as f64 * h).collect();
            m.field(&xs, &xs).map_err(|e| e.to_string())
        });
        assert!(c.pass, "pde order: {}", c.context);
    }

    #[test]
    fn pde_zero_field_machine_zero() {
        let n = 2;
        let mut a = CMatrix::zeros(n, n);
        a[(0, 0)] = Cx::new(1.0, 0.0);
        a[(1, 1)] = Cx::new(2.0, 0.0);
        let t =
            GbdtTriple::new(a, identity(n), CMatrix::zeros(n, 4), SignatureJ::new(2, 2)).unwrap();
        let m = build_model(&t).unwrap();
        let c = pde_order_check(t.sig, &[0.1, 0.05], |h| {
            let nx = (1.0 / h).round() as usize;
            let xs: Vec<f64> = (0..=nx).map(|k| k as f64 * h).collect();
            m.field(&xs, &xs).map_err(|e| e.to_string())
        });
        assert!(c.pass && c.residual == 0.0);
    }

    #[test]
    fn decay_suite_reference() {
        let m = ex1();
        let entries = decay_suite(&m, 30.0).unwrap();
        for e in &entries {
            assert!(e.pass, "{}: {}", e.name, e.context);
        }
        // scalar: theta2* e^{-2ixA*} Q^-1 at x=0 is 1/(2 - 1) = 1
        let dq = entries.iter().find(|e| e.name == "decay_q").unwrap();
        assert!(dq.context.contains("start 1.000e0"));
    }

    #[test]
    fn boundary_design_reference() {
        let m = ex1();
        let l = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let d = boundary_design(&EngineRef::Explicit(&m), 2.0, &l).unwrap();
        assert_eq!(d.w.nrows(), 2);
        assert_eq!(d.w.ncols(), 4);
        assert!(d.residual <= 1e-10, "residual {}", d.residual);
        assert!(d.t_spread <= 1e-9);
        // rows orthonormal
        assert!(fnorm(&(&d.w * d.w.adjoint() - identity(2))) < 1e-12);
    }

    #[test]
    fn boundary_design_zero_pi() {
        let n = 2;
        let mut a = CMatrix::zeros(n, n);
        a[(0, 0)] = Cx::new(1.0, 0.0);
        a[(1, 1)] = Cx::new(2.0, 0.0);
        let t =
            GbdtTriple::new(a, identity(n), CMatrix::zeros(n, 4), SignatureJ::new(2, 2)).unwrap();
        let m = build_model(&t).unwrap();
        let l = identity(2);
        let d = boundary_design(&EngineRef::Explicit(&m), 1.0, &l).unwrap();
        assert_eq!(d.w.nrows(), 4);
        assert!(d.residual == 0.0);
    }

    #[test]
    fn boundary_design_rejects_noninvariant() {
        // A = [[0,1],[0,0]] + diag shift has no invariant span{(1,1)}
        let t = random_admissible_in(
            2,
            SignatureJ::new(1, 1),
            3,
            SpectrumRegion::Split { upper: 1 },
        )
        .unwrap();
        let m = build_model(&t).unwrap();
        // random direction is almost surely not invariant
        let l = CMatrix::from_row_slice(2, 1, &[Cx::new(1.0, 0.3), Cx::new(-0.4, 1.0)]);
        let r = boundary_design(&EngineRef::Explicit(&m), 1.0, &l);
        assert!(matches!(r, Err(VerifyError::NotInvariant { .. })));
    }

    #[test]
    fn run_suite_reference_all_pass() {
        let t = reference_scalar_triple();
        let input = SuiteInput {
            a: t.a.clone(),
            s0: t.s0.clone(),
            pi0: t.pi0.clone(),
            sig: t.sig,
            engine: EngineChoice::Explicit,
            x_end: 2.0,
            checks: vec![],
            bounds: HashMap::new(),
            seed: 7,
        };
        let report = run_suite(&input);
        assert!(report.all_pass(), "report:\n{}", report.render());
        assert_eq!(report.checks.len(), EXPLICIT_CHECKS.len() + 2); // decay expands to 3 entries
    }

    #[test]
    fn run_suite_broken_identity_skips() {
        let a = CMatrix::from_element(1, 1, Cx::new(0.0, 1.0));
        let s0 = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let pi0 = CMatrix::from_row_slice(1, 2, &[Cx::new(1.0, 0.0), Cx::new(1.0, 0.0)]);
        let input = SuiteInput {
            a,
            s0,
            pi0,
            sig: SignatureJ::new(1, 1),
            engine: EngineChoice::Explicit,
            x_end: 2.0,
            checks: vec![],
            bounds: HashMap::new(),
            seed: 7,
        };
        let report = run_suite(&input);
        assert!(!report.all_pass());
        assert!(!report.checks[0].pass);
        assert!(report.checks[1..].iter().all(|c| c.context.starts_with("skipped:")));
    }

    #[test]
    fn run_suite_general_diag_hamiltonian() {
        let t = reference_scalar_triple();
        let ham = HamiltonianField::diag_channels(vec![(1.0, 0.5, 0.1), (2.0, 0.0, 0.0)]);
        let input = SuiteInput {
            a: t.a.clone(),
            s0: t.s0.clone(),
            pi0: t.pi0.clone(),
            sig: t.sig,
            engine: EngineChoice::General { ham, step: 1e-3 },
            x_end: 1.0,
            checks: vec![],
            bounds: HashMap::new(),
            seed: 7,
        };
        let report = run_suite(&input);
        assert!(report.all_pass(), "report:\n{}", report.render());
    }

    #[test]
    fn boundary_design_general_engine_matches() {
        let t = reference_scalar_triple();
        let tr = integrate(&t, &HamiltonianField::identity(2), 2.0, 1e-3).unwrap();
        let l = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
        let d = boundary_design(&EngineRef::General(&tr), 2.0, &l).unwrap();
        assert!(d.residual <= 1e-8, "residual {}", d.residual);
    }
}
