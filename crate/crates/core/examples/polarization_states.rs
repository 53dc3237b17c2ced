//! Stokes vectors, fidelities and purities of the standard polarization states.

use qpt::state::{density_from_stokes, purity, state_fidelity, states, stokes_of, StokesVector};

fn main() -> qpt::error::Result<()> {
    let named = [
        ("H", states::h()),
        ("V", states::v()),
        ("D", states::d()),
        ("A", states::a()),
        ("R", states::r()),
        ("L", states::l()),
    ];
    for (label, rho) in &named {
        let s = stokes_of(rho)?;
        println!("{label}: S = ({:+.3}, {:+.3}, {:+.3})  F(H) = {:.3}", s.s1, s.s2, s.s3, state_fidelity(rho, &states::h())?);
    }

    let partial = density_from_stokes(StokesVector::new(0.3, -0.4, 0.5));
    println!("|S| = {:.3}, purity = {:.3}", stokes_of(&partial)?.norm(), purity(&partial)?);

    let werner = states::werner();
    println!("Werner state: purity {:.4}, fidelity with phi+ {:.4}", purity(&werner)?, state_fidelity(&werner, &states::phi_plus())?);
    Ok(())
}
