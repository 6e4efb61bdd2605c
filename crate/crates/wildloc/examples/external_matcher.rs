//! Localizes through an external matcher process speaking the line-based
//! JSON match-exchange protocol. Defaults to the identity stub shipped with
//! the tests, which only demonstrates the plumbing.
//!
//! cargo run --example external_matcher [matcher command...]

use wildloc::features::{ExternalMatcher, ExternalMatcherConfig, MatcherConfig};
use wildloc::geo::{GeoPoint, GeoRect, ImageDims};
use wildloc::localizer::{Localizer, LocalizerConfig, PhotoMeta};
use wildloc::mapstore::slice_gray_mosaic;
use wildloc::raster::GrayRaster;

fn main() -> wildloc::Result<()> {
    let mut command: Vec<String> = std::env::args().skip(1).collect();
    if command.is_empty() {
        let stub = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/stub_matcher.py");
        command = vec!["python3".into(), stub.into()];
    }
    let dir = tempfile::tempdir().expect("temp dir");

    // direct protocol use
    let img = dir.path().join("a.png");
    GrayRaster::from_fn(200, 150, |x, y| ((x * 3 + y) % 256) as u8).save_png(&img)?;
    let dims = ImageDims::new(200, 150)?;
    let bridge = ExternalMatcher::spawn(&command, 1)?;
    let pairs = bridge.match_files(&img, dims, &img, dims)?;
    println!("self-match through {:?}: {} pairs", command, pairs.len());
    match bridge.match_files(&dir.path().join("missing.png"), dims, &img, dims) {
        Err(e) => println!("missing file reported in band: {e}"),
        Ok(p) => println!("unexpected success with {} pairs", p.len()),
    }

    // the same matcher driving the localizer
    let map = GrayRaster::from_fn(1024, 512, |x, y| ((x ^ y) % 253) as u8);
    let rect = GeoRect::new(
        GeoPoint {
            lat: 60.41,
            lon: 22.45,
        },
        GeoPoint {
            lat: 60.40,
            lon: 22.47,
        },
    )?;
    let catalog = slice_gray_mosaic(&map, &rect, ImageDims::new(512, 512)?, 0.0, dir.path())?;
    let cfg = LocalizerConfig {
        matcher: MatcherConfig::External(ExternalMatcherConfig {
            command,
            pool_size: 2,
        }),
        ..LocalizerConfig::default()
    };
    let localizer = Localizer::new(catalog, cfg)?;
    let photo = GrayRaster::from_fn(256, 192, |x, y| ((x + 2 * y) % 256) as u8);
    let r = localizer.localize(&photo, &PhotoMeta::new("photo.png"))?;
    println!(
        "{} tile={:?} raw={} inliers={} position={:?}",
        r.status, r.best_tile_id, r.raw_match_count, r.inlier_count, r.position
    );
    Ok(())
}
