//! Where a channel sends the Poincaré sphere. Writes the mesh as CSV into the
//! system temp directory and prints the summary.

use std::fs::File;

use qpt::analysis::{sphere_map, DEFAULT_RESOLUTION};
use qpt::channel::KrausChannel;

fn main() -> qpt::error::Result<()> {
    let channel = KrausChannel::coherent_partial_polarizer(0.88, 0.45)?;
    let (n_lat, n_lon) = DEFAULT_RESOLUTION;
    let mesh = sphere_map(&channel, n_lat, n_lon)?;

    let path = std::env::temp_dir().join("sphere-map-polarizer.csv");
    mesh.write_csv(File::create(&path)?)?;
    println!("wrote {} samples to {}", mesh.samples.len(), path.display());

    for m in &mesh.markers {
        match m.sample.output_stokes {
            Some(s) => println!("{} -> ({:+.3}, {:+.3}, {:+.3})  T = {:.3}", m.label, s.s1, s.s2, s.s3, m.sample.transmission),
            None => println!("{} -> annihilated", m.label),
        }
    }
    println!("{}", serde_json::to_string_pretty(&mesh.summary()).expect("serializable"));
    Ok(())
}
