//! Standard process tomography of a coherent partial polarizer from four
//! input states, exact and with counting noise.

use qpt::analysis::process_fidelity;
use qpt::channel::{kraus_to_chi, KrausChannel, QuantumProcess};
use qpt::process::{sqpt, SqptInput};
use qpt::state::states;
use qpt::tomography::{mle_reconstruct, settings_single, simulate_counts, NoiseConfig};

fn main() -> qpt::error::Result<()> {
    let channel = KrausChannel::coherent_partial_polarizer(0.88, 0.45)?;
    let truth = kraus_to_chi(&channel);

    let exact = sqpt(&SqptInput::from_process(&channel)?)?;
    println!("exact: fidelity {:.12}  tr chi {:.4}", process_fidelity(&exact.chi, &truth)?, exact.chi.trace());

    let inputs = [states::h(), states::v(), states::d(), states::r()];
    let outputs = inputs
        .iter()
        .enumerate()
        .map(|(j, rho)| {
            let records = simulate_counts(&channel.apply(rho)?, &settings_single(), &NoiseConfig::new(13_000, j as u64)?)?;
            Ok(mle_reconstruct(&records, 2)?.state)
        })
        .collect::<qpt::error::Result<Vec<_>>>()?;
    let noisy = sqpt(&SqptInput::new(outputs)?)?;
    println!(
        "noisy: fidelity {:.5}  min eigenvalue {:+.5}  anti-Hermitian residual {:.1e}",
        process_fidelity(&noisy.chi, &truth)?,
        noisy.chi.min_eigenvalue(),
        noisy.hermiticity_residual
    );
    println!("{}", serde_json::to_string_pretty(&noisy.to_json()).expect("serializable"));
    Ok(())
}
