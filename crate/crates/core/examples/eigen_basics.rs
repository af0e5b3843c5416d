//! Hermitian eigendecomposition and the exact step exponential.

use adiabatic_lab::numerics::{expm_antiherm, herm_eig, pauli};

fn main() -> adiabatic_lab::Result<()> {
    let h = pauli::bloch(0.3, -0.4, 1.2);
    let eig = herm_eig(&h)?;
    println!("eigenvalues: {:?}", eig.values);
    println!(
        "reconstruction error: {:.2e}",
        eig.reconstruct().max_diff(h.as_matrix())
    );
    println!(
        "eigenvector orthonormality defect: {:.2e}",
        eig.vectors.defect()
    );

    for tau in [0.1, 1.0, 10.0, 100.0] {
        let u = expm_antiherm(&h, tau)?;
        println!("exp(-i H {tau}): unitarity defect {:.2e}", u.defect());
    }
    Ok(())
}
