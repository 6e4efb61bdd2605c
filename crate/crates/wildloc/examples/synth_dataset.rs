//! Writes a complete synthetic experiment directory: photos, metadata with
//! ground truth, and a tile catalog of the world.
//!
//! cargo run --release --example synth_dataset [out_dir] [seed]

use std::path::PathBuf;

use wildloc::geo::ImageDims;
use wildloc::synth::{emit_dataset, random_view_specs, SynthWorld, ViewSampling};

fn main() -> wildloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wildloc_synth"));
    let seed: u64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(1);

    let world = SynthWorld::default_with_seed(seed)?;
    let sampling = ViewSampling {
        count: 10,
        ..ViewSampling::default()
    };
    let specs = random_view_specs(&world, &sampling, seed + 1)?;
    let data = emit_dataset(&world, &specs, &out, ImageDims::new(1024, 1024)?, 0.25)?;
    world.raster.save_png(&out.join("world.png"))?;

    println!("world {} at {} m/px, seed {seed}", world.dims(), world.gsd_m);
    for m in &data.truth {
        let g = m.gnss.expect("synthetic views carry truth");
        println!(
            "{}  yaw {:>6.1}  truth ({:.6}, {:.6})",
            m.filename, m.gimbal_yaw_deg, g.lat, g.lon
        );
    }
    println!(
        "{} photos, {} tiles, metadata {}",
        data.photos.len(),
        data.catalog.len(),
        data.metadata_csv.display()
    );
    Ok(())
}
