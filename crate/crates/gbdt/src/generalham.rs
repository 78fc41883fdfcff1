//! RK4 engine for an arbitrary initial Hamiltonian `H(x) > 0`.
//!
//! Integrates the coupled system
//! `Π' = -iAΠjH`, `S' = ΠjHjΠ*`, `u' = -q̃₀u` with `u(0) = I` and evaluates
//! the transformed solution `Y(x,t) = u* H jΠ* S⁻¹ e^{itA}` and Hamiltonian
//! `𝓗 = u⁻¹ H⁻¹ u⁻*`. At `H ≡ I` this is the independent oracle for the
//! closed-form engine.

use crate::matcore::{
    fnorm, hermitize, identity, inverse, mat_exp, pd_solve, posdef_check, CMatrix, Cx, MatError,
};
use crate::triple::{GbdtTriple, SignatureJ};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeneralError {
    #[error("H({x}) is not Hermitian positive definite (min eigenvalue {min_eig:.3e})")]
    HamiltonianNotPositive { x: f64, min_eig: f64 },
    #[error("S lost positivity at x = {x:.6} (min eigenvalue {min_eig:.3e}); partial trajectory retained")]
    PositivityLost { x: f64, min_eig: f64, partial: Box<Trajectory> },
    #[error("step {step} does not divide [0, {a}] into at least 8 uniform steps")]
    BadStep { a: f64, step: f64 },
    #[error("no trajectory node at x = {x}")]
    NoSuchNode { x: f64 },
    #[error("supplied factorization jH^-1 = T D T^-1 fails residual check ({residual:.3e})")]
    BadFactorization { residual: f64 },
    #[error("eigenvector frame too ill-conditioned for the similarity witness (cond {cond:.3e})")]
    IllConditionedFrame { cond: f64 },
    #[error(transparent)]
    Mat(#[from] MatError),
}

#[derive(Clone)]
enum HamKind {
    Identity,
    /// Per-channel diagonal `c + d e^{r x}`.
    Diag(Vec<(f64, f64, f64)>),
    /// Linear interpolation between tabulated samples.
    Tabulated { xs: Vec<f64>, mats: Vec<CMatrix> },
    Custom(Arc<dyn Fn(f64) -> CMatrix + Send + Sync>),
}

/// An initial Hamiltonian `x ↦ H(x) > 0`.
#[derive(Clone)]
pub struct HamiltonianField {
    dim: usize,
    kind: HamKind,
    /// Descriptive tag carried into output metadata.
    pub description: String,
}

impl std::fmt::Debug for HamiltonianField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "HamiltonianField({}, dim {})", self.description, self.dim)
    }
}

impl HamiltonianField {
    pub fn identity(dim: usize) -> Self {
        HamiltonianField { dim, kind: HamKind::Identity, description: "identity".into() }
    }

    /// Diagonal `H(x) = diag(c_k + d_k e^{r_k x})`.
    pub fn diag_channels(channels: Vec<(f64, f64, f64)>) -> Self {
        let desc = format!(
            "diag:{}",
            channels
                .iter()
                .map(|(c, d, r)| format!("{c}+{d}*exp({r}*x)"))
                .collect::<Vec<_>>()
                .join(",")
        );
        HamiltonianField { dim: channels.len(), kind: HamKind::Diag(channels), description: desc }
    }

    /// Tabulated samples with linear interpolation between nodes.
    pub fn tabulated(xs: Vec<f64>, mats: Vec<CMatrix>) -> Self {
        assert!(xs.len() >= 2 && xs.len() == mats.len());
        assert!(xs.windows(2).all(|w| w[1] > w[0]));
        let dim = mats[0].nrows();
        HamiltonianField {
            dim,
            kind: HamKind::Tabulated { xs, mats },
            description: "tabulated (linear interpolation)".into(),
        }
    }

    pub fn custom(
        dim: usize,
        description: &str,
        f: impl Fn(f64) -> CMatrix + Send + Sync + 'static,
    ) -> Self {
        HamiltonianField { dim, kind: HamKind::Custom(Arc::new(f)), description: description.into() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: f64) -> CMatrix {
        match &self.kind {
            HamKind::Identity => identity(self.dim),
            HamKind::Diag(channels) => CMatrix::from_fn(self.dim, self.dim, |i, j| {
                if i == j {
                    let (c, d, r) = channels[i];
                    Cx::new(c + d * (r * x).exp(), 0.0)
                } else {
                    Cx::new(0.0, 0.0)
                }
            }),
            HamKind::Tabulated { xs, mats } => {
                let x = x.clamp(xs[0], *xs.last().unwrap());
                let hi = xs.partition_point(|&v| v < x).min(xs.len() - 1).max(1);
                let lo = hi - 1;
                let w = (x - xs[lo]) / (xs[hi] - xs[lo]);
                mats[lo].scale(1.0 - w) + mats[hi].scale(w)
            }
            HamKind::Custom(f) => f(x),
        }
    }
}

/// `q̃₀ = jΠ*S⁻¹ΠjH - jHjΠ*S⁻¹Π`; anti-j-Hermitian (`q̃₀*j + jq̃₀ = 0`).
pub fn q0_tilde(
    pi: &CMatrix,
    s: &CMatrix,
    h: &CMatrix,
    sig: SignatureJ,
) -> Result<CMatrix, GeneralError> {
    let j = sig.matrix();
    let (s_inv_pi, _) = pd_solve(s, pi)?;
    let g = pi.adjoint() * s_inv_pi; // Π* S⁻¹ Π
    Ok(&j * &g * &j * h - &j * h * &j * &g)
}

/// Sampled `(Π(x), S(x), u(x))` path from RK4 integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub xs: Vec<f64>,
    pub pi: Vec<CMatrix>,
    pub s: Vec<CMatrix>,
    pub u: Vec<CMatrix>,
    pub h: Vec<CMatrix>,
    pub step: f64,
    pub triple: GbdtTriple,
}

impl Trajectory {
    pub fn node_index(&self, x: f64) -> Result<usize, GeneralError> {
        let idx = (x / self.step).round() as usize;
        if idx < self.xs.len() && (self.xs[idx] - x).abs() <= 1e-9 * self.step.max(1.0) {
            Ok(idx)
        } else {
            Err(GeneralError::NoSuchNode { x })
        }
    }

    pub fn last_x(&self) -> f64 {
        *self.xs.last().unwrap()
    }
}

struct State {
    pi: CMatrix,
    s: CMatrix,
    u: CMatrix,
}

fn rhs(state: &State, h: &CMatrix, triple: &GbdtTriple) -> Result<State, GeneralError> {
    let j = triple.sig.matrix();
    let dpi = (&triple.a * &state.pi * &j * h).map(|z| z * Cx::new(0.0, -1.0));
    let ds = &state.pi * &j * h * &j * state.pi.adjoint();
    let q0 = q0_tilde(&state.pi, &state.s, h, triple.sig)?;
    let du = -(q0 * &state.u);
    Ok(State { pi: dpi, s: ds, u: du })
}

fn axpy(state: &State, k: &State, c: f64) -> State {
    State { pi: &state.pi + k.pi.scale(c), s: &state.s + k.s.scale(c), u: &state.u + k.u.scale(c) }
}

/// Classical fixed-step RK4 over `[0, a]`; the positivity of `S` (and of
/// `H(x)`) is checked at every node and integration aborts on failure.
pub fn integrate(
    triple: &GbdtTriple,
    ham: &HamiltonianField,
    a: f64,
    step: f64,
) -> Result<Trajectory, GeneralError> {
    assert!(a > 0.0 && step > 0.0);
    let nsteps_f = a / step;
    let nsteps = nsteps_f.round() as usize;
    if nsteps < 8 || (nsteps as f64 * step - a).abs() > 1e-9 * a {
        return Err(GeneralError::BadStep { a, step });
    }
    assert_eq!(ham.dim(), triple.sig.m(), "Hamiltonian dimension must equal m");

    let mut tr = Trajectory {
        xs: Vec::with_capacity(nsteps + 1),
        pi: Vec::with_capacity(nsteps + 1),
        s: Vec::with_capacity(nsteps + 1),
        u: Vec::with_capacity(nsteps + 1),
        h: Vec::with_capacity(nsteps + 1),
        step,
        triple: triple.clone(),
    };

    let mut state = State {
        pi: triple.pi0.clone(),
        s: triple.s0.clone(),
        u: identity(triple.sig.m()),
    };

    for k in 0..=nsteps {
        let x = k as f64 * step;
        let h_here = ham.eval(x);
        let pd_h = posdef_check(&h_here, 1e-10)?;
        if !pd_h.is_pd {
            return Err(GeneralError::HamiltonianNotPositive { x, min_eig: pd_h.min_eig });
        }
        let s_sym = hermitize(&state.s);
        let pd_s = posdef_check(&s_sym, 1e-12)?;
        if !pd_s.is_pd {
            return Err(GeneralError::PositivityLost {
                x,
                min_eig: pd_s.min_eig,
                partial: Box::new(tr),
            });
        }
        state.s = s_sym;
        tr.xs.push(x);
        tr.pi.push(state.pi.clone());
        tr.s.push(state.s.clone());
        tr.u.push(state.u.clone());
        tr.h.push(h_here.clone());
        if k == nsteps {
            break;
        }

        let h_mid = ham.eval(x + 0.5 * step);
        let h_end = ham.eval(x + step);
        let k1 = rhs(&state, &h_here, triple)?;
        let k2 = rhs(&axpy(&state, &k1, 0.5 * step), &h_mid, triple)?;
        let k3 = rhs(&axpy(&state, &k2, 0.5 * step), &h_mid, triple)?;
        let k4 = rhs(&axpy(&state, &k3, step), &h_end, triple)?;
        let c = step / 6.0;
        state = State {
            pi: &state.pi + (k1.pi + k2.pi.scale(2.0) + k3.pi.scale(2.0) + k4.pi).scale(c),
            s: &state.s + (k1.s + k2.s.scale(2.0) + k3.s.scale(2.0) + k4.s).scale(c),
            u: &state.u + (k1.u + k2.u.scale(2.0) + k3.u.scale(2.0) + k4.u).scale(c),
        };
    }
    Ok(tr)
}

/// `Y(x,t) = u(x)* H(x) j Π(x)* S(x)⁻¹ e^{itA}` at a trajectory node.
pub fn y_general(tr: &Trajectory, node_x: f64, t: f64) -> Result<CMatrix, GeneralError> {
    let idx = tr.node_index(node_x)?;
    let j = tr.triple.sig.matrix();
    let eta = mat_exp(&tr.triple.a.map(|z| z * Cx::new(0.0, t)), 1e-12)?;
    let (s_inv_eta, _) = pd_solve(&tr.s[idx], &eta)?;
    Ok(tr.u[idx].adjoint() * &tr.h[idx] * &j * tr.pi[idx].adjoint() * s_inv_eta)
}

/// The product `𝓗(x)Y(x,t) = j u(x)* Π(x)* S(x)⁻¹ e^{itA}` at a node; this is
/// the quantity entering the boundary matrices.
pub fn hcal_y_general(tr: &Trajectory, node_x: f64, t: f64) -> Result<CMatrix, GeneralError> {
    let idx = tr.node_index(node_x)?;
    let j = tr.triple.sig.matrix();
    let eta = mat_exp(&tr.triple.a.map(|z| z * Cx::new(0.0, t)), 1e-12)?;
    let (s_inv_eta, _) = pd_solve(&tr.s[idx], &eta)?;
    Ok(&j * tr.u[idx].adjoint() * tr.pi[idx].adjoint() * s_inv_eta)
}

/// Transformed Hamiltonian `𝓗(x) = u⁻¹ H⁻¹ u⁻*` at a node.
pub fn hcal_general(tr: &Trajectory, node_x: f64) -> Result<CMatrix, GeneralError> {
    let idx = tr.node_index(node_x)?;
    let u_inv = inverse(&tr.u[idx], "u(x)")?;
    let h_inv = inverse(&tr.h[idx], "H(x)")?;
    Ok(&u_inv * h_inv * u_inv.adjoint())
}

/// Similarity witness for a supplied factorization `jH(x)⁻¹ = T D T⁻¹`:
/// returns `𝒯(x) = (j u(x) j)⁻¹ T` after validating the factorization and
/// the resulting `j𝓗 = 𝒯 D 𝒯⁻¹` relation.
pub fn similarity_witness(
    tr: &Trajectory,
    node_x: f64,
    t_factor: &CMatrix,
    d_factor: &CMatrix,
) -> Result<CMatrix, GeneralError> {
    let idx = tr.node_index(node_x)?;
    let j = tr.triple.sig.matrix();
    let h_inv = inverse(&tr.h[idx], "H(x)")?;
    let t_inv = inverse(t_factor, "T")?;
    let resid = fnorm(&(&j * &h_inv - t_factor * d_factor * &t_inv));
    if resid > 1e-9 * fnorm(&h_inv).max(1e-300) {
        return Err(GeneralError::BadFactorization { residual: resid });
    }
    let u = &tr.u[idx];
    let cal_t = inverse(&(&j * u * &j), "j u j")? * t_factor;
    Ok(cal_t)
}

/// Diagonalize `jH⁻¹` by Schur form plus triangular eigenvectors; rejects
/// eigenvector frames with condition number above 1e8.
pub fn diag_factorization(m: &CMatrix) -> Result<(CMatrix, CMatrix), GeneralError> {
    let n = m.nrows();
    let schur = m.clone().try_schur(1e-14, 100_000).ok_or(MatError::EigenFailure)?;
    let (q, t) = schur.unpack();
    // eigenvectors of the upper triangular factor by back substitution
    let mut v = CMatrix::zeros(n, n);
    for k in 0..n {
        let lam = t[(k, k)];
        v[(k, k)] = Cx::new(1.0, 0.0);
        for i in (0..k).rev() {
            let mut acc = Cx::new(0.0, 0.0);
            for l in (i + 1)..=k {
                acc += t[(i, l)] * v[(l, k)];
            }
            let denom = lam - t[(i, i)];
            if denom.norm() < 1e-14 * fnorm(m).max(1e-300) {
                return Err(GeneralError::IllConditionedFrame { cond: f64::INFINITY });
            }
            v[(i, k)] = acc / denom;
        }
        let col_norm = v.column(k).norm();
        for i in 0..=k {
            v[(i, k)] /= Cx::new(col_norm, 0.0);
        }
    }
    let frame = &q * v;
    let svd = frame.clone().svd(false, false);
    let smax = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    let smin = svd.singular_values.iter().cloned().fold(f64::INFINITY, f64::min);
    let cond = smax / smin.max(f64::MIN_POSITIVE);
    if cond > 1e8 {
        return Err(GeneralError::IllConditionedFrame { cond });
    }
    let d = CMatrix::from_fn(n, n, |i, jj| if i == jj { t[(i, i)] } else { Cx::new(0.0, 0.0) });
    Ok((frame, d))
}
