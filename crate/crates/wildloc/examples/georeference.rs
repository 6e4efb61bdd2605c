//! Pixel/coordinate conversion on a corner-referenced tile, and the metric
//! distance between the results.
//!
//! cargo run --example georeference

use wildloc::geo::{geo_to_pixel, haversine_m, pixel_to_geo, GeoPoint, GeoRect, ImageDims, PixelPoint};

fn main() -> wildloc::Result<()> {
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
    let dims = ImageDims::new(1400, 1200)?;

    for p in [
        PixelPoint::new(0.0, 0.0),
        PixelPoint::new(700.0, 600.0),
        PixelPoint::new(1400.0, 1200.0),
    ] {
        let g = pixel_to_geo(p, &rect, dims);
        let back = geo_to_pixel(g, &rect, dims)?;
        println!(
            "pixel ({:>6.1}, {:>6.1}) -> ({:.6}, {:.6}) -> pixel ({:.1}, {:.1})",
            p.x, p.y, g.lat, g.lon, back.x, back.y
        );
    }

    let diag = haversine_m(rect.top_left, rect.bottom_right);
    println!("tile diagonal: {diag:.1} m");
    println!(
        "ground sampling: {:.3} m/px across, {:.3} m/px down",
        haversine_m(
            rect.top_left,
            GeoPoint {
                lat: 60.41,
                lon: 22.47
            }
        ) / dims.width as f64,
        haversine_m(
            rect.top_left,
            GeoPoint {
                lat: 60.40,
                lon: 22.45
            }
        ) / dims.height as f64,
    );
    Ok(())
}
