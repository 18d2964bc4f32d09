//! Writes a mollified noise field and the evolved solution as CRITFLD1 rasters.
//!
//! `cargo run --release --example raster_dump -- <out-dir>`

use std::fs::File;
use std::io::BufWriter;
use std::path::PathBuf;

use critfield::noise::{read_raster, write_raster};
use critfield::{evolve, mollify, sample_white_noise, Reaction, SolverConfig, TorusGrid};

fn main() -> critfield::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "critfield-out/rasters".into()));
    std::fs::create_dir_all(&dir)?;
    let grid = TorusGrid::new(4.0, 256)?;
    let eps = 0.1;
    let eta = mollify(&sample_white_noise(&grid, 0, 0), eps)?;
    let cfg = SolverConfig::new(Reaction::allen_cahn(1.0)?, grid, eps, 0.0, 0.25)?;
    let u = evolve(&eta, &cfg)?;
    for (name, field, t) in [("eta_eps.raster", &eta, 0.0), ("u_T.raster", &u.u, u.t)] {
        let path = dir.join(name);
        write_raster(BufWriter::new(File::create(&path)?), field, t)?;
        let (back, _) = read_raster(File::open(&path)?)?;
        assert_eq!(&back, field);
        println!("{} (t = {t}, rms {:.4})", path.display(), field.rms());
    }
    Ok(())
}
