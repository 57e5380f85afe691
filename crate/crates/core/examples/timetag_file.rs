// Writing detected clicks to the binary time-tag format and reading them
// back.
//
// ```bash
// cargo run --release --example timetag_file
// ```

use phonon_counting::config::ExperimentConfig;
use phonon_counting::detection::{read_timetags, write_timetags, HEADER_LEN};
use phonon_counting::pipeline::Context;
use phonon_counting::provenance::to_hex;
use std::fs::File;
use std::io::BufWriter;

pub fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ctx = Context::new(ExperimentConfig::from_json(r#"{"seed": 5, "sim": {"duration_s": 0.0002}}"#)?)?;
    let (_, stream) = ctx.events()?;
    let path = std::env::temp_dir().join(format!("phonon_counting_{}.phct", std::process::id()));
    write_timetags(&stream, BufWriter::new(File::create(&path)?))?;
    let back = read_timetags(File::open(&path)?)?;
    let size = std::fs::metadata(&path)?.len();
    std::fs::remove_file(&path)?;
    println!("{} events, {} bytes ({} header + 9 per event)", back.len(), size, HEADER_LEN);
    println!("seed {:?}, config hash {}", back.meta.seed, to_hex(&back.meta.params_hash));
    println!("detector A {:.3e}/s, detector B {:.3e}/s", back.rate(0), back.rate(1));
    assert_eq!(back.timestamps, stream.timestamps);
    Ok(())
}
