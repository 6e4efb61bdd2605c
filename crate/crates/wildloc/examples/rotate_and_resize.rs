//! North-up rotation onto an expanded canvas and box-filter downsampling.
//!
//! cargo run --example rotate_and_resize [image] [degrees]

use std::path::PathBuf;

use wildloc::raster::{load_gray, resize_half, rotate_expand, GrayRaster};

fn main() -> wildloc::Result<()> {
    let mut args = std::env::args().skip(1);
    let img = match args.next() {
        Some(path) => load_gray(&PathBuf::from(path))?,
        None => GrayRaster::from_fn(400, 300, |x, y| if (x / 25 + y / 25) % 2 == 0 { 40 } else { 210 }),
    };
    let degrees: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(30.0);

    let (rotated, mask) = rotate_expand(&img, degrees);
    println!(
        "{} rotated {degrees} deg clockwise -> {} canvas, {:.1}% valid",
        img.dims(),
        rotated.dims(),
        100.0 * mask.valid_count() as f64 / (rotated.width() * rotated.height()) as f64
    );

    let half = resize_half(&img, 1)?;
    println!(
        "one halving: {} -> {}, mean {:.2} -> {:.2}",
        img.dims(),
        half.dims(),
        img.mean(),
        half.mean()
    );

    let out = std::env::temp_dir().join("wildloc_rotated.png");
    rotated.save_png(&out)?;
    println!("wrote {}", out.display());
    Ok(())
}
