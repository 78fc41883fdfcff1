//! The two engines agree when H(x) = I.
//!
//! Draws a random admissible triple, evaluates Y(x,t) both through the
//! closed-form engine and through RK4 integration with the identity
//! Hamiltonian, and reports the largest deviation. Halving the ODE step
//! should shrink the integration error by roughly 2^4.

use gbdt_canonical::explicit::build_model;
use gbdt_canonical::generalham::{integrate, y_general, HamiltonianField};
use gbdt_canonical::matcore::fnorm;
use gbdt_canonical::triple::{random_admissible_in, SignatureJ, SpectrumRegion};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let triple = random_admissible_in(3, SignatureJ::new(2, 2), 42, SpectrumRegion::Any)?;
    println!("drew an n = 3 triple with signature (2, 2), seed 42");

    let model = build_model(&triple)?;
    let ham = HamiltonianField::identity(triple.sig.m());

    let mut dev = Vec::new();
    for &step in &[2e-3, 1e-3] {
        let tr = integrate(&triple, &ham, 2.0, step)?;
        let mut worst = 0.0_f64;
        for k in 0..=10 {
            let x = 2.0 * k as f64 / 10.0;
            for &t in &[0.0, 0.5, 1.3] {
                let y_rk4 = y_general(&tr, x, t)?;
                let y_closed = model.y_at(x, t)?;
                worst = worst.max(fnorm(&(y_rk4 - y_closed)));
            }
        }
        println!("step {step:.0e}: max |Y_rk4 - Y_closed| = {worst:.3e}");
        dev.push(worst);
    }
    println!("error ratio under step halving: {:.2} (expect ~16 for RK4)", dev[0] / dev[1]);
    Ok(())
}
