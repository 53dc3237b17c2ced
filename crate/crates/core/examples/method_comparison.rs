//! Monte-Carlo comparison of SQPT, Bell-state EAPT and Werner-state AAPT on a
//! half-wave plate, with Poisson counts.
//!
//! cargo run --release --example method_comparison -- [trials] [counts]

use std::time::Instant;

use qpt::channel::KrausChannel;
use qpt::process::Method;
use qpt::scenario::compare::{compare_methods, ComparisonOptions, Measurement};
use qpt::scenario::config::{Estimator, Noise, PairSettings, PoissonNoise, SigmaMode};

fn main() -> qpt::error::Result<()> {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("integer argument"));
    let trials = args.next().unwrap_or(200);
    let counts = args.next().unwrap_or(13_000);

    let channel = KrausChannel::waveplate(std::f64::consts::PI, std::f64::consts::FRAC_PI_4);
    let options = ComparisonOptions {
        measurement: Measurement { noise: Noise::Poisson(PoissonNoise { counts, seed: 1 }), estimator: Estimator::Mle },
        trials,
        pair_settings: PairSettings::Full,
        sigma: SigmaMode::Measured,
    };
    let start = Instant::now();
    let report = compare_methods(&channel, &options)?;
    for s in &report.summaries {
        println!("{:<5} mean {:.5}  std {:.5}  ({} trials)", s.method.to_string(), s.mean_fidelity, s.std_fidelity, s.trials);
    }
    println!(
        "AAPT vs EAPT spread: {:.1} standard errors",
        report.std_significance(Method::Aapt, Method::Eapt)
    );
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}
