//! Generates a synthetic world, slices it into tiles, renders rotated noisy
//! views and localizes each one.
//!
//! cargo run --release --example localize_synthetic [seed]

use std::time::Instant;

use wildloc::geo::{haversine_m, ImageDims};
use wildloc::localizer::{Localizer, LocalizerConfig};
use wildloc::synth::{emit_dataset, random_view_specs, SynthWorld, ViewSampling};

fn main() -> wildloc::Result<()> {
    let seed: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(1);
    let dir = tempfile::tempdir().expect("temp dir");

    let t0 = Instant::now();
    let world = SynthWorld::default_with_seed(seed)?;
    let specs = random_view_specs(&world, &ViewSampling::default(), seed + 1)?;
    let tile = ImageDims::new(1024, 1024)?;
    let data = emit_dataset(&world, &specs, dir.path(), tile, 0.25)?;
    println!(
        "dataset: {} views, {} tiles in {:.1?}",
        specs.len(),
        data.catalog.len(),
        t0.elapsed()
    );

    let t1 = Instant::now();
    let localizer = Localizer::new(data.catalog.clone(), LocalizerConfig::default())?;
    let results = localizer.localize_rows(dir.path(), &data.truth);
    println!("localized in {:.1?}", t1.elapsed());

    let mut errors = Vec::new();
    for (r, truth) in results.iter().zip(&data.truth) {
        let err = match (r.position, truth.gnss) {
            (Some(p), Some(g)) => {
                let e = haversine_m(p, g);
                errors.push(e);
                format!("{e:.2} m")
            }
            _ => "-".into(),
        };
        println!(
            "{:<14} {:<20} tile={:<3} raw={:<5} inliers={:<5} err={err}",
            r.photo,
            r.status.as_str(),
            r.best_tile_id.map_or("-".into(), |t| t.to_string()),
            r.raw_match_count,
            r.inlier_count,
        );
    }
    let mae = errors.iter().sum::<f64>() / errors.len().max(1) as f64;
    println!(
        "localized {}/{}  mean error {mae:.2} m",
        errors.len(),
        results.len()
    );
    Ok(())
}
