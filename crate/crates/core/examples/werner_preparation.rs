//! Preparing the Werner state from a polarization-entangled pair with
//! birefringent delays, tracked branch by branch.

use qpt::process::{operator_schmidt, schmidt_number, DEFAULT_SCHMIDT_TOL};
use qpt::scenario::{effective_density, werner_branch_state, Kernel};
use qpt::state::{state_fidelity, states};

fn main() -> qpt::error::Result<()> {
    for kernel in [Kernel::Triangular, Kernel::Gaussian] {
        let branches = werner_branch_state(kernel);
        let rho = effective_density(&branches)?;
        let d = operator_schmidt(rho.matrix())?;
        println!("{kernel:?} kernel:");
        for b in &branches.branches {
            println!("  pol {}  delay {:+.2}  amplitude {:.4}", b.pol_index, b.rel_delay, b.amplitude);
        }
        println!(
            "  fidelity with Werner {:.6}  Schmidt number {}  coefficients {:.4?}",
            state_fidelity(&rho, &states::werner())?,
            schmidt_number(&d, DEFAULT_SCHMIDT_TOL),
            d.coefficients
        );
    }
    Ok(())
}
