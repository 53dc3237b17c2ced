//! Two-photon state tomography from simulated Poisson counts: linear
//! inversion against maximum likelihood.
//!
//! cargo run --release --example state_tomography -- [counts] [seed]

use qpt::state::{state_fidelity, states};
use qpt::tomography::{linear_reconstruct, mle_reconstruct, settings_pair, simulate_counts, NoiseConfig};

fn main() -> qpt::error::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let counts = args.next().unwrap_or(500);
    let seed = args.next().unwrap_or(0);

    let truth = states::werner();
    let records = simulate_counts(&truth, &settings_pair(), &NoiseConfig::new(counts, seed)?)?;

    let linear = linear_reconstruct(&records)?;
    println!(
        "linear: min eigenvalue {:+.4}  physical {}  fidelity {:.4}",
        linear.state.min_eigenvalue(),
        linear.physical,
        state_fidelity(&linear.state, &truth).unwrap_or(f64::NAN)
    );

    let mle = mle_reconstruct(&records, 4)?;
    println!(
        "mle:    min eigenvalue {:+.4}  fidelity {:.4}  ({} iterations, nll {:.2} from {:.2})",
        mle.state.min_eigenvalue(),
        state_fidelity(&mle.state, &truth)?,
        mle.iterations,
        mle.nll,
        mle.start_nll
    );
    Ok(())
}
