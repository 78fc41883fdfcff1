//! Scenario files: structured JSON input shared by the CLI and the examples.
//!
//! A scenario names a triple (inline or generated from a seed), an engine,
//! grids, and the checks to run:
//!
//! ```json
//! {
//!   "triple": {"generate": {"n": 2, "m1": 1, "m2": 1, "seed": 7}},
//!   "engine": "explicit",
//!   "grid": {"x0": 0.0, "x1": 2.0, "nx": 50, "t0": 0.0, "t1": 2.0, "nt": 50},
//!   "checks": [],
//!   "tolerances": {"j_unitarity": 1e-10}
//! }
//! ```
//!
//! The general engine additionally takes `"hamiltonian"` (a builtin name,
//! `"diag:c+d*exp(r*x),..."` channels, or `{"csv": "path"}`) and `"step"`.

use crate::explicit::build_model;
use crate::explicit::SolutionField;
use crate::generalham::{hcal_general, integrate, y_general, HamiltonianField};
use crate::io::{
    self, hamiltonian_from_csv, matrix_from_json, matrix_to_json, partial_triple_from_json,
};
use crate::matcore::{fnorm, ordered_schur, CMatrix, Cx};
use crate::triple::{random_admissible_in, GbdtTriple, SignatureJ, SpectrumRegion};
use crate::verify::{
    boundary_design, decay_suite, run_suite, suggest_xmax, BoundaryDesign, EngineChoice,
    EngineRef, Report, SuiteInput,
};
use serde_json::{json, Value};
use std::collections::HashMap;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Malformed or inconsistent input (CLI exit code 2).
    #[error("input error: {0}")]
    Input(String),
    /// Engine failure on valid input (CLI exit code 1).
    #[error("engine error: {0}")]
    Engine(String),
}

impl From<io::IoError> for ScenarioError {
    fn from(e: io::IoError) -> Self {
        ScenarioError::Input(e.to_string())
    }
}

fn input_err<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError::Input(msg.into()))
}

#[derive(Debug, Clone, Copy)]
pub struct Grid {
    pub x0: f64,
    pub x1: f64,
    pub nx: usize,
    pub t0: f64,
    pub t1: f64,
    pub nt: usize,
}

impl Grid {
    pub fn xs(&self) -> Vec<f64> {
        (0..self.nx)
            .map(|k| self.x0 + (self.x1 - self.x0) * k as f64 / (self.nx - 1) as f64)
            .collect()
    }

    pub fn ts(&self) -> Vec<f64> {
        (0..self.nt)
            .map(|k| self.t0 + (self.t1 - self.t0) * k as f64 / (self.nt - 1) as f64)
            .collect()
    }
}

#[derive(Debug, Clone)]
pub enum TripleSource {
    /// Raw matrices as given; deliberately broken triples still reach the
    /// verification report.
    Inline { a: CMatrix, s0: CMatrix, pi0: CMatrix, sig: SignatureJ },
    Generate { n: usize, sig: SignatureJ, seed: u64, region: SpectrumRegion },
}

#[derive(Debug, Clone)]
pub enum HamSpec {
    Identity,
    Diag(Vec<(f64, f64, f64)>),
    Csv(PathBuf),
}

#[derive(Debug, Clone)]
pub struct Scenario {
    pub triple: TripleSource,
    pub general: bool,
    pub hamiltonian: Option<HamSpec>,
    /// Integration step for the general engine.
    pub step: f64,
    pub grid: Grid,
    pub checks: Vec<String>,
    pub tolerances: HashMap<String, f64>,
    pub outputs: HashMap<String, String>,
}

/// Parse `c+d*exp(r*x)` (or a bare constant) into a diagonal channel.
fn parse_channel(s: &str) -> Result<(f64, f64, f64), ScenarioError> {
    let s = s.trim();
    let bad = || ScenarioError::Input(format!("cannot parse Hamiltonian channel {s:?}"));
    if let Ok(c) = s.parse::<f64>() {
        return Ok((c, 0.0, 0.0));
    }
    // c+d*exp(r*x) with signed c, d, r
    let star = s.find("*exp(").ok_or_else(bad)?;
    let head = &s[..star];
    let split = head[1..].rfind(['+', '-']).map(|i| i + 1).ok_or_else(bad)?;
    let c: f64 = head[..split].parse().map_err(|_| bad())?;
    let d: f64 = head[split..].parse().map_err(|_| bad())?;
    let inner = s[star + 5..].strip_suffix(')').ok_or_else(bad)?;
    let r: f64 = inner.strip_suffix("*x").ok_or_else(bad)?.parse().map_err(|_| bad())?;
    Ok((c, d, r))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Scenario, ScenarioError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ScenarioError::Input(format!("cannot read {}: {e}", path.display())))?;
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| ScenarioError::Input(format!("malformed JSON: {e}")))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Scenario::from_json(&v, base)
    }

    pub fn from_json(v: &Value, base_dir: &Path) -> Result<Scenario, ScenarioError> {
        let obj =
            v.as_object().ok_or_else(|| ScenarioError::Input("scenario must be an object".into()))?;

        let triple_v = obj
            .get("triple")
            .ok_or_else(|| ScenarioError::Input("missing field: triple".into()))?;
        let triple = if let Some(g) = triple_v.get("generate") {
            let get = |k: &str| -> Result<u64, ScenarioError> {
                g.get(k)
                    .and_then(Value::as_u64)
                    .ok_or_else(|| ScenarioError::Input(format!("generate.{k} must be an integer")))
            };
            let region = match g.get("spectrum").and_then(Value::as_str).unwrap_or("any") {
                "any" => SpectrumRegion::Any,
                "upper" => SpectrumRegion::UpperHalf,
                s if s.starts_with("split:") => {
                    let k = s[6..]
                        .parse()
                        .map_err(|_| ScenarioError::Input(format!("bad spectrum spec {s:?}")))?;
                    SpectrumRegion::Split { upper: k }
                }
                s => return input_err(format!("unknown spectrum region {s:?}")),
            };
            TripleSource::Generate {
                n: get("n")? as usize,
                sig: SignatureJ::new(get("m1")? as usize, get("m2")? as usize),
                seed: get("seed")?,
                region,
            }
        } else {
            let obj = triple_v
                .as_object()
                .ok_or_else(|| ScenarioError::Input("triple must be an object".into()))?;
            let field = |k: &str| {
                obj.get(k).ok_or_else(|| ScenarioError::Input(format!("triple missing field {k}")))
            };
            let m1 = field("m1")?
                .as_u64()
                .ok_or_else(|| ScenarioError::Input("triple.m1 must be an integer".into()))?;
            let m2 = field("m2")?
                .as_u64()
                .ok_or_else(|| ScenarioError::Input("triple.m2 must be an integer".into()))?;
            TripleSource::Inline {
                a: matrix_from_json(field("A")?)?,
                s0: matrix_from_json(field("S0")?)?,
                pi0: matrix_from_json(field("Pi0")?)?,
                sig: SignatureJ::new(m1 as usize, m2 as usize),
            }
        };

        let general = match obj.get("engine").and_then(Value::as_str) {
            Some("explicit") | None => false,
            Some("general") => true,
            Some(other) => return input_err(format!("unknown engine {other:?}")),
        };

        let hamiltonian = match obj.get("hamiltonian") {
            None => None,
            Some(Value::String(s)) if s == "identity" => Some(HamSpec::Identity),
            Some(Value::String(s)) if s.starts_with("diag:") => {
                let channels = s[5..]
                    .split(',')
                    .map(parse_channel)
                    .collect::<Result<Vec<_>, _>>()?;
                Some(HamSpec::Diag(channels))
            }
            Some(v) if v.get("csv").is_some() => {
                let rel = v["csv"]
                    .as_str()
                    .ok_or_else(|| ScenarioError::Input("hamiltonian.csv must be a path".into()))?;
                Some(HamSpec::Csv(base_dir.join(rel)))
            }
            Some(other) => return input_err(format!("unknown hamiltonian spec {other}")),
        };
        if general && hamiltonian.is_none() {
            return input_err("general engine requires a hamiltonian");
        }

        let grid_v = obj
            .get("grid")
            .ok_or_else(|| ScenarioError::Input("missing field: grid".into()))?;
        let gf = |k: &str| -> Result<f64, ScenarioError> {
            grid_v
                .get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| ScenarioError::Input(format!("grid.{k} must be a number")))
        };
        let grid = Grid {
            x0: gf("x0")?,
            x1: gf("x1")?,
            nx: gf("nx")? as usize,
            t0: gf("t0")?,
            t1: gf("t1")?,
            nt: gf("nt")? as usize,
        };
        if grid.nx < 2 || grid.nt < 2 || grid.x1 <= grid.x0 || grid.t1 <= grid.t0 {
            return input_err("grid must have nx, nt >= 2 and increasing ranges");
        }
        if general && grid.x0 != 0.0 {
            return input_err("general engine integrates from x = 0; grid.x0 must be 0");
        }

        let checks = match obj.get("checks") {
            None => Vec::new(),
            Some(Value::Array(items)) => items
                .iter()
                .map(|c| {
                    c.as_str()
                        .map(String::from)
                        .ok_or_else(|| ScenarioError::Input("checks must be strings".into()))
                })
                .collect::<Result<_, _>>()?,
            Some(_) => return input_err("checks must be an array"),
        };

        let mut tolerances = HashMap::new();
        if let Some(t) = obj.get("tolerances") {
            let t = t
                .as_object()
                .ok_or_else(|| ScenarioError::Input("tolerances must be an object".into()))?;
            for (k, v) in t {
                let f = v
                    .as_f64()
                    .ok_or_else(|| ScenarioError::Input(format!("tolerance {k} not a number")))?;
                tolerances.insert(k.clone(), f);
            }
        }

        let mut outputs = HashMap::new();
        if let Some(o) = obj.get("outputs") {
            let o = o
                .as_object()
                .ok_or_else(|| ScenarioError::Input("outputs must be an object".into()))?;
            for (k, v) in o {
                let s = v
                    .as_str()
                    .ok_or_else(|| ScenarioError::Input(format!("output {k} not a path")))?;
                outputs.insert(k.clone(), base_dir.join(s).to_string_lossy().into_owned());
            }
        }

        let step = obj.get("step").and_then(Value::as_f64).unwrap_or(1e-3);
        if step <= 0.0 {
            return input_err("step must be positive");
        }

        Ok(Scenario { triple, general, hamiltonian, step, grid, checks, tolerances, outputs })
    }

    /// Resolve the triple source into raw matrices; `seed_override` replaces
    /// the generator seed (the `GBDT_SEED` contract).
    pub fn raw_triple(
        &self,
        seed_override: Option<u64>,
    ) -> Result<(CMatrix, CMatrix, CMatrix, SignatureJ, Option<u64>), ScenarioError> {
        match &self.triple {
            TripleSource::Inline { a, s0, pi0, sig } => {
                Ok((a.clone(), s0.clone(), pi0.clone(), *sig, None))
            }
            TripleSource::Generate { n, sig, seed, region } => {
                let seed = seed_override.unwrap_or(*seed);
                let t = random_admissible_in(*n, *sig, seed, *region)
                    .map_err(|e| ScenarioError::Input(format!("triple generation failed: {e}")))?;
                Ok((t.a, t.s0, t.pi0, *sig, Some(seed)))
            }
        }
    }

    fn validated_triple(
        &self,
        seed_override: Option<u64>,
    ) -> Result<(GbdtTriple, Option<u64>), ScenarioError> {
        let (a, s0, pi0, sig, seed) = self.raw_triple(seed_override)?;
        let t = GbdtTriple::new(a, s0, pi0, sig)
            .map_err(|e| ScenarioError::Input(format!("invalid triple: {e}")))?;
        Ok((t, seed))
    }

    pub fn hamiltonian_field(&self, m: usize) -> Result<HamiltonianField, ScenarioError> {
        match &self.hamiltonian {
            None | Some(HamSpec::Identity) => Ok(HamiltonianField::identity(m)),
            Some(HamSpec::Diag(channels)) => {
                if channels.len() != m {
                    return input_err(format!(
                        "hamiltonian has {} channels, triple needs m = {m}",
                        channels.len()
                    ));
                }
                Ok(HamiltonianField::diag_channels(channels.clone()))
            }
            Some(HamSpec::Csv(path)) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ScenarioError::Input(format!("cannot read {}: {e}", path.display()))
                })?;
                let (xs, mats) = hamiltonian_from_csv(&text, m)?;
                Ok(HamiltonianField::tabulated(xs, mats))
            }
        }
    }

    /// Sample the solution field on the scenario grid; returns the field and
    /// run metadata.
    pub fn solve(
        &self,
        seed_override: Option<u64>,
    ) -> Result<(SolutionField, Value), ScenarioError> {
        let (triple, seed) = self.validated_triple(seed_override)?;
        let xs = self.grid.xs();
        let ts = self.grid.ts();
        if !self.general {
            let model = build_model(&triple).map_err(|e| ScenarioError::Engine(e.to_string()))?;
            let field = model.field(&xs, &ts).map_err(|e| ScenarioError::Engine(e.to_string()))?;
            let mut max_cond = 0.0_f64;
            for &x in &xs {
                max_cond = max_cond
                    .max(model.s_condition(x).map_err(|e| ScenarioError::Engine(e.to_string()))?);
            }
            let mut meta = json!({
                "engine": "explicit",
                "grid": {"x0": self.grid.x0, "x1": self.grid.x1, "nx": self.grid.nx,
                         "t0": self.grid.t0, "t1": self.grid.t1, "nt": self.grid.nt},
                "s_condition_max": max_cond,
                "condition_warning": max_cond > 1e12,
                "triple": io::triple_to_json(&triple),
            });
            if let Some(s) = seed {
                meta["seed"] = json!(s);
            }
            Ok((field, meta))
        } else {
            let ham = self.hamiltonian_field(triple.sig.m())?;
            // refine the integration step so grid nodes land on ODE nodes
            let dx = (self.grid.x1 - self.grid.x0) / (self.grid.nx - 1) as f64;
            let sub = (dx / self.step).ceil().max(1.0) as usize;
            let istep = dx / sub as f64;
            let tr = integrate(&triple, &ham, self.grid.x1, istep)
                .map_err(|e| ScenarioError::Engine(e.to_string()))?;
            let mut y = Vec::with_capacity(xs.len() * ts.len());
            let mut hcal = Vec::with_capacity(xs.len());
            for k in 0..xs.len() {
                let node = tr.xs[k * sub];
                hcal.push(
                    hcal_general(&tr, node).map_err(|e| ScenarioError::Engine(e.to_string()))?,
                );
                for &t in &ts {
                    y.push(
                        y_general(&tr, node, t)
                            .map_err(|e| ScenarioError::Engine(e.to_string()))?,
                    );
                }
            }
            let field = SolutionField { xs: xs.clone(), ts: ts.clone(), y, hcal };
            let mut meta = json!({
                "engine": "general",
                "hamiltonian": ham.description,
                "interpolation_note": "tabulated Hamiltonians are linearly interpolated",
                "step_requested": self.step,
                "step_used": istep,
                "grid": {"x0": self.grid.x0, "x1": self.grid.x1, "nx": self.grid.nx,
                         "t0": self.grid.t0, "t1": self.grid.t1, "nt": self.grid.nt},
                "triple": io::triple_to_json(&triple),
            });
            if let Some(s) = seed {
                meta["seed"] = json!(s);
            }
            Ok((field, meta))
        }
    }

    /// Run the verification suite for this scenario.
    pub fn check(&self, seed_override: Option<u64>) -> Result<Report, ScenarioError> {
        let (a, s0, pi0, sig, seed) = self.raw_triple(seed_override)?;
        let engine = if self.general {
            let ham = self.hamiltonian_field(sig.m())?;
            EngineChoice::General { ham, step: self.step }
        } else {
            EngineChoice::Explicit
        };
        let input = SuiteInput {
            a,
            s0,
            pi0,
            sig,
            engine,
            x_end: self.grid.x1,
            checks: self.checks.clone(),
            bounds: self.tolerances.clone(),
            seed: seed.unwrap_or(0),
        };
        Ok(run_suite(&input))
    }

    /// Asymptotic study: kappa limits, the transfer-matrix limit, and the
    /// decay suite (explicit engine only).
    pub fn asymptotics(&self, seed_override: Option<u64>) -> Result<(Value, bool), ScenarioError> {
        if self.general {
            return input_err("asymptotics requires the explicit engine");
        }
        let (triple, seed) = self.validated_triple(seed_override)?;
        let model = build_model(&triple).map_err(|e| ScenarioError::Engine(e.to_string()))?;
        let x_max = self
            .tolerances
            .get("kappa_xmax")
            .copied()
            .unwrap_or_else(|| suggest_xmax(&triple.a));
        let tol = self.tolerances.get("kappa_tol").copied().unwrap_or(1e-9);
        let k = model.kappa_limits(x_max, tol).map_err(|e| ScenarioError::Engine(e.to_string()))?;
        let wl = model.wa_limit(&k.k_q, &k.k_r);
        let wa_far = model
            .wa_at(*k.schedule.last().unwrap(), Cx::new(0.0, 0.0))
            .map_err(|e| ScenarioError::Engine(e.to_string()))?;
        let wa_dev = fnorm(&(wa_far - &wl));
        let decay = decay_suite(&model, x_max).map_err(|e| ScenarioError::Engine(e.to_string()))?;
        let converged = k.q_converged && k.r_converged && k.s_converged;
        let pass = converged && decay.iter().all(|c| c.pass) && wa_dev <= 1e-6;
        let mut out = json!({
            "x_max": x_max,
            "kappa_q": matrix_to_json(&k.k_q),
            "kappa_r": matrix_to_json(&k.k_r),
            "kappa_s": matrix_to_json(&k.k_s),
            "converged": {"q": k.q_converged, "r": k.r_converged, "s": k.s_converged},
            "wa_limit": matrix_to_json(&wl),
            "wa_deviation_at_xmax": wa_dev,
            "decay": serde_json::to_value(&decay).expect("check serialization"),
        });
        if let Some(s) = seed {
            out["seed"] = json!(s);
        }
        Ok((out, pass))
    }

    /// Boundary-matrix construction from an invariant subspace.
    pub fn boundary(
        &self,
        seed_override: Option<u64>,
        subspace: &SubspaceSpec,
    ) -> Result<(Value, bool), ScenarioError> {
        let (triple, seed) = self.validated_triple(seed_override)?;
        let l_basis = subspace.basis(&triple.a)?;
        if l_basis.ncols() == 0 || l_basis.ncols() > triple.sig.m() {
            return input_err(format!(
                "subspace dimension {} out of range 1..={}",
                l_basis.ncols(),
                triple.sig.m()
            ));
        }
        let a_end = self.grid.x1;
        let design: BoundaryDesign = if self.general {
            let ham = self.hamiltonian_field(triple.sig.m())?;
            let tr = integrate(&triple, &ham, a_end, self.step)
                .map_err(|e| ScenarioError::Engine(e.to_string()))?;
            boundary_design(&EngineRef::General(&tr), tr.last_x(), &l_basis)
                .map_err(|e| ScenarioError::Engine(e.to_string()))?
        } else {
            let model = build_model(&triple).map_err(|e| ScenarioError::Engine(e.to_string()))?;
            boundary_design(&EngineRef::Explicit(&model), a_end, &l_basis)
                .map_err(|e| ScenarioError::Engine(e.to_string()))?
        };
        let bound = self.tolerances.get("boundary").copied().unwrap_or(1e-9);
        let pass = design.residual <= bound;
        let mut out = json!({
            "a": a_end,
            "subspace_dim": l_basis.ncols(),
            "L": matrix_to_json(&l_basis),
            "W": matrix_to_json(&design.w),
            "residual": design.residual,
            "t_spread": design.t_spread,
            "bound": bound,
            "pass": pass,
        });
        if let Some(s) = seed {
            out["seed"] = json!(s);
        }
        Ok((out, pass))
    }
}

/// Invariant-subspace input: an explicit basis file or a Schur predicate.
#[derive(Debug, Clone)]
pub enum SubspaceSpec {
    BasisFile(PathBuf),
    Schur(String),
}

impl SubspaceSpec {
    /// Parse the CLI `--subspace` argument: `schur:<predicate>` or a path to
    /// a matrix JSON file.
    pub fn parse(arg: &str) -> SubspaceSpec {
        match arg.strip_prefix("schur:") {
            Some(p) => SubspaceSpec::Schur(p.to_string()),
            None => SubspaceSpec::BasisFile(PathBuf::from(arg)),
        }
    }

    pub fn basis(&self, a: &CMatrix) -> Result<CMatrix, ScenarioError> {
        match self {
            SubspaceSpec::BasisFile(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    ScenarioError::Input(format!("cannot read {}: {e}", path.display()))
                })?;
                let v: Value = serde_json::from_str(&text)
                    .map_err(|e| ScenarioError::Input(format!("malformed basis JSON: {e}")))?;
                Ok(matrix_from_json(&v)?)
            }
            SubspaceSpec::Schur(pred) => {
                let select: Box<dyn Fn(Cx) -> bool> = match pred.as_str() {
                    "upper" => Box::new(|z: Cx| z.im > 0.0),
                    "lower" => Box::new(|z: Cx| z.im < 0.0),
                    "re-positive" => Box::new(|z: Cx| z.re > 0.0),
                    "re-negative" => Box::new(|z: Cx| z.re < 0.0),
                    other => {
                        return input_err(format!(
                            "unknown Schur predicate {other:?} \
                             (expected upper, lower, re-positive, re-negative)"
                        ))
                    }
                };
                let (q, _, k) =
                    ordered_schur(a, select).map_err(|e| ScenarioError::Engine(e.to_string()))?;
                if k == 0 {
                    return input_err("Schur predicate selected no eigenvalues");
                }
                Ok(q.columns(0, k).into_owned())
            }
        }
    }
}

/// Completion helper for the CLI: read `{A, Pi0, m1, m2}` and solve for S0.
pub fn complete_from_json(v: &Value) -> Result<GbdtTriple, ScenarioError> {
    let (a, pi0, sig) = partial_triple_from_json(v)?;
    crate::triple::complete_s0(&a, &pi0, sig)
        .map_err(|e| ScenarioError::Input(format!("completion failed: {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::triple::reference_scalar_triple;

    fn ex1_scenario_json() -> Value {
        json!({
            "triple": io::triple_to_json(&reference_scalar_triple()),
            "engine": "explicit",
            "grid": {"x0": 0.0, "x1": 2.0, "nx": 21, "t0": 0.0, "t1": 2.0, "nt": 21},
        })
    }

    #[test]
    fn parse_channels() {
        assert_eq!(parse_channel("2").unwrap(), (2.0, 0.0, 0.0));
        assert_eq!(parse_channel("1+0.5*exp(0.1*x)").unwrap(), (1.0, 0.5, 0.1));
        assert_eq!(parse_channel("3-0.25*exp(-2*x)").unwrap(), (3.0, -0.25, -2.0));
        assert!(parse_channel("nonsense").is_err());
    }

    #[test]
    fn load_and_solve_reference() {
        let s = Scenario::from_json(&ex1_scenario_json(), Path::new(".")).unwrap();
        let (field, meta) = s.solve(None).unwrap();
        assert_eq!(field.xs.len(), 21);
        assert_eq!(meta["engine"], "explicit");
        // Y(0,0) = (sqrt 2, -1)^T
        let y00 = field.y_at(0, 0);
        assert!((y00[(0, 0)] - Cx::new(2.0_f64.sqrt(), 0.0)).norm() < 1e-12);
        assert!((y00[(1, 0)] - Cx::new(-1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn check_reference_passes() {
        let s = Scenario::from_json(&ex1_scenario_json(), Path::new(".")).unwrap();
        let report = s.check(None).unwrap();
        assert!(report.all_pass(), "{}", report.render());
    }

    #[test]
    fn generated_triple_deterministic_in_seed() {
        let v = json!({
            "triple": {"generate": {"n": 2, "m1": 1, "m2": 1, "seed": 7}},
            "grid": {"x0": 0.0, "x1": 1.0, "nx": 11, "t0": 0.0, "t1": 1.0, "nt": 11},
        });
        let s = Scenario::from_json(&v, Path::new(".")).unwrap();
        let (a1, ..) = s.raw_triple(None).unwrap();
        let (a2, ..) = s.raw_triple(None).unwrap();
        assert_eq!(a1.as_slice(), a2.as_slice());
        let (a3, ..) = s.raw_triple(Some(8)).unwrap();
        assert_ne!(a1.as_slice(), a3.as_slice());
    }

    #[test]
    fn general_engine_identity_matches_explicit() {
        let v = json!({
            "triple": io::triple_to_json(&reference_scalar_triple()),
            "engine": "general",
            "hamiltonian": "identity",
            "step": 0.01,
            "grid": {"x0": 0.0, "x1": 1.0, "nx": 6, "t0": 0.0, "t1": 1.0, "nt": 3},
        });
        let s = Scenario::from_json(&v, Path::new(".")).unwrap();
        let (fg, _) = s.solve(None).unwrap();
        let ex = Scenario::from_json(&ex1_scenario_json(), Path::new(".")).unwrap();
        let model = build_model(&reference_scalar_triple()).unwrap();
        drop(ex);
        for (ix, &x) in fg.xs.iter().enumerate() {
            let want = model.y_at(x, fg.ts[1]).unwrap();
            assert!(fnorm(&(fg.y_at(ix, 1) - want)) < 1e-7, "node x = {x}");
        }
    }

    #[test]
    fn asymptotics_reference() {
        let mut v = ex1_scenario_json();
        // kappa_S decays like e^{-x}; x_max = 30 puts it below 1e-10
        v["tolerances"] = json!({"kappa_xmax": 30.0});
        let s = Scenario::from_json(&v, Path::new(".")).unwrap();
        let (out, pass) = s.asymptotics(None).unwrap();
        assert!(pass);
        // kappa_Q = 1/2, kappa_R = kappa_S = 0
        assert!((out["kappa_q"][0][0][0].as_f64().unwrap() - 0.5).abs() < 1e-10);
        assert!(out["kappa_r"][0][0][0].as_f64().unwrap().abs() < 1e-10);
        assert!(out["kappa_s"][0][0][0].as_f64().unwrap().abs() < 1e-10);
    }

    #[test]
    fn boundary_reference_via_schur() {
        let s = Scenario::from_json(&ex1_scenario_json(), Path::new(".")).unwrap();
        let (out, pass) = s.boundary(None, &SubspaceSpec::parse("schur:upper")).unwrap();
        assert!(pass, "residual {}", out["residual"]);
    }

    #[test]
    fn bad_engine_rejected() {
        let mut v = ex1_scenario_json();
        v["engine"] = json!("quantum");
        assert!(matches!(
            Scenario::from_json(&v, Path::new(".")),
            Err(ScenarioError::Input(_))
        ));
    }
}
