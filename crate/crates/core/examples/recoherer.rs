//! A delay that undoes part of the Werner preparation looks like a physical
//! channel to standard tomography but not to ancilla-assisted tomography.

use qpt::analysis::chi_report;
use qpt::scenario::{recoherer_scenario, recoherer_sqpt};

fn main() -> qpt::error::Result<()> {
    let result = recoherer_scenario()?;
    let assisted = chi_report(&result.estimate.chi);
    println!("AAPT: eigenvalues {:.4?}  {}", assisted.eigenvalues, assisted.verdict);

    let standard = recoherer_sqpt()?;
    let report = chi_report(&standard.chi);
    println!("SQPT: eigenvalues {:.4?}  {}", report.eigenvalues, report.verdict);
    Ok(())
}
