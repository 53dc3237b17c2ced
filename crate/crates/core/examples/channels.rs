//! Library channels in the Pauli-basis process-matrix form, with a Kraus
//! round trip.

use qpt::analysis::{chi_report, process_fidelity};
use qpt::channel::{chi_to_kraus, kraus_to_chi, KrausChannel};
use std::f64::consts::{FRAC_PI_2, FRAC_PI_8};

fn main() -> qpt::error::Result<()> {
    let channels = [
        ("identity", KrausChannel::identity()),
        ("quarter-wave plate at pi/8", KrausChannel::waveplate(FRAC_PI_2, FRAC_PI_8)),
        ("rotator 0.3", KrausChannel::rotator(0.3)),
        ("dephaser p = 1", KrausChannel::dephaser(1.0)?),
        ("coherent polarizer 0.88/0.45", KrausChannel::coherent_partial_polarizer(0.88, 0.45)?),
        ("incoherent polarizer 0.5", KrausChannel::incoherent_partial_polarizer(0.5)?),
    ];
    for (name, ch) in &channels {
        let chi = kraus_to_chi(ch);
        let report = chi_report(&chi);
        let back = kraus_to_chi(&chi_to_kraus(&chi)?);
        println!(
            "{name:<30} tr {:.3}  eigenvalues {:?}  round-trip fidelity {:.12}",
            report.trace,
            report.eigenvalues.iter().map(|x| (x * 1e4).round() / 1e4).collect::<Vec<_>>(),
            process_fidelity(&back, &chi)?
        );
    }
    Ok(())
}
