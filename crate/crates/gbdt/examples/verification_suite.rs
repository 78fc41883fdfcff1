//! The full verification suite, driven directly from the library.
//!
//! `run_suite` takes raw triple matrices (so broken input still yields a
//! report), an engine choice, and optional per-check bound overrides, and
//! returns one pass/fail line per check. The `gbdt check` subcommand is a
//! thin wrapper around exactly this call.

use gbdt_canonical::triple::reference_scalar_triple;
use gbdt_canonical::verify::{run_suite, EngineChoice, SuiteInput};
use std::collections::HashMap;

fn main() {
    let triple = reference_scalar_triple();
    let mut bounds = HashMap::new();
    // push the kappa schedule out far enough for ~1e-13 limits on this triple
    bounds.insert("kappa_xmax".to_string(), 30.0);

    let input = SuiteInput {
        a: triple.a.clone(),
        s0: triple.s0.clone(),
        pi0: triple.pi0.clone(),
        sig: triple.sig,
        engine: EngineChoice::Explicit,
        x_end: 2.0,
        checks: Vec::new(), // empty = the engine's full default list
        bounds,
        seed: 0,
    };
    let report = run_suite(&input);
    print!("{}", report.render());
    println!("\nall pass: {}", report.all_pass());
}
