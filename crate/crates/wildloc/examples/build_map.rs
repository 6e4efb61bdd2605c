//! Slices a georeferenced mosaic into an overlapping tile catalog and reads
//! it back.
//!
//! cargo run --example build_map [mosaic] [out_dir]

use std::path::PathBuf;

use wildloc::geo::{GeoPoint, GeoRect, ImageDims};
use wildloc::mapstore::{load_catalog, slice_mosaic, CATALOG_FILE};
use wildloc::raster::load_image;

fn main() -> wildloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let mosaic = match args.next() {
        Some(p) => load_image(&PathBuf::from(p))?,
        None => image::DynamicImage::ImageRgb8(image::RgbImage::from_fn(1200, 900, |x, y| {
            image::Rgb([(x / 5 % 256) as u8, (y / 4 % 256) as u8, ((x ^ y) % 256) as u8])
        })),
    };
    let out = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wildloc_map"));

    let rect = GeoRect::new(
        GeoPoint {
            lat: 60.4070,
            lon: 22.4540,
        },
        GeoPoint {
            lat: 60.3990,
            lon: 22.4700,
        },
    )?;
    let catalog = slice_mosaic(&mosaic, &rect, ImageDims::new(512, 512)?, 0.25, &out)?;
    let reloaded = load_catalog(&out.join(CATALOG_FILE))?;
    assert_eq!(reloaded.len(), catalog.len());
    for t in &reloaded.tiles {
        println!(
            "{:>2} {:<18} ({:.6}, {:.6}) .. ({:.6}, {:.6})",
            t.id,
            t.image_path.file_name().unwrap().to_string_lossy(),
            t.rect.top_left.lat,
            t.rect.top_left.lon,
            t.rect.bottom_right.lat,
            t.rect.bottom_right.lon
        );
    }
    println!("catalog at {}", out.join(CATALOG_FILE).display());
    Ok(())
}
