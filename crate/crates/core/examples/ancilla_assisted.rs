//! Operator-Schmidt analysis of input states and ancilla-assisted tomography
//! of a rotator with a Bell state and with the Werner state.

use qpt::analysis::process_fidelity;
use qpt::channel::{kraus_to_chi, KrausChannel};
use qpt::linalg::Subsystem;
use qpt::process::{aapt, aapt_usable, eapt};
use qpt::state::states;

fn main() -> qpt::error::Result<()> {
    let candidates = [
        ("HH", states::product(&states::h(), &states::h())),
        ("phi-", states::phi_minus()),
        ("Werner", states::werner()),
    ];
    for (name, rho) in &candidates {
        let u = aapt_usable(rho.matrix())?;
        println!("{name:<7} Schmidt number {}  usable {}  coefficients {:.4?}", u.schmidt_number, u.usable, u.coefficients);
    }

    let channel = KrausChannel::rotator(0.4);
    let truth = kraus_to_chi(&channel);
    let bell = states::phi_minus();
    let by_eapt = eapt(&bell, &channel.apply_extended(&bell, Subsystem::A)?)?;
    let werner = states::werner();
    let by_aapt = aapt(&werner, &channel.apply_extended(&werner, Subsystem::A)?)?;
    println!("EAPT fidelity {:.12}", process_fidelity(&by_eapt.chi, &truth)?);
    println!("AAPT fidelity {:.12}", process_fidelity(&by_aapt.chi, &truth)?);

    let product = states::product(&states::h(), &states::d());
    match aapt(&product, &channel.apply_extended(&product, Subsystem::A)?) {
        Ok(_) => println!("product state unexpectedly accepted"),
        Err(e) => println!("product state rejected: {e}"),
    }
    Ok(())
}
