//! Energy and supply-rate accounting on a finite interval.
//!
//! The squared energy E(t)^2 = integral of (Yh)* Hcal (Yh) over [0, a] has a
//! closed form through S(0)^-1 - S(a)^-1; its time derivative is balanced by
//! the supply rate s(x, Y, h) = (Hcal Y h)* j (Hcal Y h) at the two endpoints.

use gbdt_canonical::explicit::build_model;
use gbdt_canonical::matcore::{CMatrix, Cx};
use gbdt_canonical::triple::reference_scalar_triple;
use gbdt_canonical::verify::{energy, energy_balance, supply_rate_forms};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let triple = reference_scalar_triple();
    let model = build_model(&triple)?;
    let h = CMatrix::from_element(1, 1, Cx::new(1.0, 0.0));
    let a = 2.0;

    println!("  t     E(t) closed     E(t) quadrature");
    for k in 0..=4 {
        let t = 0.5 * k as f64;
        let sample = energy(&model, &h, a, t, 1e-10)?;
        println!("{t:4.1}  {:14.10}  {:14.10}", sample.e, sample.e_direct);
    }

    // the two supply-rate forms agree by j-unitarity of u
    let (s1, s2) = supply_rate_forms(&model, &h, 0.0, 0.0)?;
    println!("\nsupply rate at (x, t) = (0, 0): {s1:.10} / {s2:.10} (two forms)");

    let balance = energy_balance(&model, &h, a, 0.0, 1.5, 1e-9)?;
    println!(
        "\nbalance over t in [0, 1.5]: relative mismatch {:.3e} ({})",
        balance.residual,
        if balance.pass { "pass" } else { "fail" }
    );
    println!("{}", balance.context);
    Ok(())
}
