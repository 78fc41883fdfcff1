//! RK4 engine for a non-trivial initial Hamiltonian.
//!
//! Integrates Pi, S and the factor u across [0, 1] for the diagonal
//! Hamiltonian H(x) = diag(1 + 0.5 e^{0.1x}, 2), then checks that the
//! identity A S(x) - S(x) A* = i Pi(x) j Pi(x)* propagates along the
//! trajectory and prints the transformed Hamiltonian at the endpoint.

use gbdt_canonical::generalham::{hcal_general, integrate, y_general, HamiltonianField};
use gbdt_canonical::matcore::{fnorm, Cx};
use gbdt_canonical::triple::reference_scalar_triple;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let triple = reference_scalar_triple();
    let ham = HamiltonianField::diag_channels(vec![(1.0, 0.5, 0.1), (2.0, 0.0, 0.0)]);
    println!("H(0) = diag({:.4}, {:.4})", ham.eval(0.0)[(0, 0)].re, ham.eval(0.0)[(1, 1)].re);

    let tr = integrate(&triple, &ham, 1.0, 1e-3)?;
    println!("integrated {} nodes with step {}", tr.xs.len(), tr.step);

    // identity propagation along the trajectory
    let j = triple.sig.matrix();
    let mut worst = 0.0_f64;
    for idx in 0..tr.xs.len() {
        let lhs = &triple.a * &tr.s[idx] - &tr.s[idx] * triple.a.adjoint();
        let rhs = (&tr.pi[idx] * &j * tr.pi[idx].adjoint()).map(|z| z * Cx::new(0.0, 1.0));
        worst = worst.max(fnorm(&(lhs - rhs)));
    }
    println!("max identity residual along trajectory: {worst:.3e}");

    let hc = hcal_general(&tr, tr.last_x())?;
    println!(
        "Hcal(1) = [[{:.6}, {:.6}], [{:.6}, {:.6}]]",
        hc[(0, 0)], hc[(0, 1)], hc[(1, 0)], hc[(1, 1)]
    );

    let y = y_general(&tr, 1.0, 0.5)?;
    println!("Y(1, 0.5) = ({:.6}, {:.6})", y[(0, 0)], y[(1, 0)]);
    Ok(())
}
