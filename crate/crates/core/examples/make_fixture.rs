//! Writes the bundled bimodal fixture: `cargo run --example make_fixture -- <dir>`.

use std::path::PathBuf;

use homophily::synthetic::camp_segregated;

fn main() -> std::io::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "fixtures/bimodal".into()));
    std::fs::create_dir_all(&dir)?;
    let f = camp_segregated(1000, 8, 0.05, 7);
    std::fs::write(dir.join("edges.csv"), f.edges_csv())?;
    std::fs::write(dir.join("opinions.csv"), f.opinions_csv())?;
    Ok(())
}
