//! Regenerates `data/ontime.csv` from the seeded generator.
//!
//! Run from the workspace root: `cargo run -p verbframe --example gen_flights`.

#[path = "../tests/common/synth.rs"]
mod synth;

fn main() -> std::io::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "data/ontime.csv".to_owned());
    std::fs::write(&path, synth::flights_csv())?;
    println!("wrote {} rows to {path}", synth::ROWS);
    Ok(())
}
