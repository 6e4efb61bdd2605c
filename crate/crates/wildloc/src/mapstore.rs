//! Georeferenced tile catalogs: the CSV sidecar format, loading, and slicing
//! a georeferenced mosaic into overlapping tiles.
//!
//! A catalog is a UTF-8 CSV whose first line is exactly
//!
//! ```text
//! filename,top_left_lat,top_left_lon,bottom_right_lat,bottom_right_lon
//! ```
//!
//! followed by one row per tile. Filenames are relative to the CSV's directory.

use std::path::{Path, PathBuf};

use image::DynamicImage;

use crate::error::{Error, Result};
use crate::geo::{pixel_to_geo, GeoPoint, GeoRect, ImageDims, PixelPoint};
use crate::raster::GrayRaster;

pub const CATALOG_HEADER: [&str; 5] = [
    "filename",
    "top_left_lat",
    "top_left_lon",
    "bottom_right_lat",
    "bottom_right_lon",
];

/// Name of the catalog file written by [`slice_mosaic`].
pub const CATALOG_FILE: &str = "catalog.csv";

#[derive(Debug, Clone, PartialEq)]
pub struct MapTile {
    pub id: usize,
    pub image_path: PathBuf,
    pub rect: GeoRect,
    pub dims: ImageDims,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MapCatalog {
    pub tiles: Vec<MapTile>,
    pub root: PathBuf,
}

impl MapCatalog {
    pub fn len(&self) -> usize {
        self.tiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tiles.is_empty()
    }
}

/// Parses a catalog CSV and reads each referenced image's dimensions.
pub fn load_catalog(csv_path: &Path) -> Result<MapCatalog> {
    let text = std::fs::read_to_string(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let root = csv_path.parent().map(Path::to_path_buf).unwrap_or_default();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::None)
        .from_reader(text.as_bytes());

    let header = reader
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", csv_path.display())))?;
    if header.iter().ne(CATALOG_HEADER.iter().copied()) {
        return Err(Error::Format(format!(
            "{}: header must be `{}`",
            csv_path.display(),
            CATALOG_HEADER.join(",")
        )));
    }

    let mut tiles = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let line = row + 2;
        let record = record.map_err(|e| Error::Format(format!("{}: {e}", csv_path.display())))?;
        if record.len() != CATALOG_HEADER.len() {
            return Err(Error::Format(format!(
                "{} line {line}: expected {} fields, found {}",
                csv_path.display(),
                CATALOG_HEADER.len(),
                record.len()
            )));
        }
        let num = |k: usize| -> Result<f64> {
            record[k].trim().parse::<f64>().map_err(|_| {
                Error::Format(format!(
                    "{} line {line}: {} is not a number: {:?}",
                    csv_path.display(),
                    CATALOG_HEADER[k],
                    &record[k]
                ))
            })
        };
        let top_left = GeoPoint {
            lat: num(1)?,
            lon: num(2)?,
        };
        let bottom_right = GeoPoint {
            lat: num(3)?,
            lon: num(4)?,
        };
        let rect = GeoRect::new(top_left, bottom_right).map_err(|e| match e {
            Error::InvalidGeoRect(m) => {
                Error::InvalidGeoRect(format!("{} line {line}: {m}", csv_path.display()))
            }
            other => other,
        })?;

        let image_path = root.join(record[0].trim());
        if !image_path.is_file() {
            return Err(Error::MissingImage(image_path));
        }
        let (w, h) = image::image_dimensions(&image_path).map_err(|e| match e {
            image::ImageError::IoError(io) => Error::io(&image_path, io),
            other => Error::Decode {
                path: image_path.clone(),
                message: other.to_string(),
            },
        })?;
        tiles.push(MapTile {
            id: tiles.len(),
            image_path,
            rect,
            dims: ImageDims::new(w, h)?,
        });
    }
    if tiles.is_empty() {
        return Err(Error::Format(format!(
            "{}: catalog lists no tiles",
            csv_path.display()
        )));
    }
    Ok(MapCatalog { tiles, root })
}

/// Writes a catalog CSV for `tiles`, with paths relative to `csv_path`'s directory.
pub fn write_catalog(csv_path: &Path, tiles: &[MapTile]) -> Result<()> {
    let root = csv_path.parent().unwrap_or(Path::new(""));
    let mut out = String::new();
    out.push_str(&CATALOG_HEADER.join(","));
    out.push('\n');
    for t in tiles {
        let rel = t.image_path.strip_prefix(root).unwrap_or(&t.image_path);
        out.push_str(&format!(
            "{},{:.15},{:.15},{:.15},{:.15}\n",
            rel.display(),
            t.rect.top_left.lat,
            t.rect.top_left.lon,
            t.rect.bottom_right.lat,
            t.rect.bottom_right.lon
        ));
    }
    std::fs::write(csv_path, out).map_err(|e| Error::io(csv_path, e))
}

/// Tile origins along one axis: a regular stride with the last tile clamped
/// flush against the far edge.
pub fn tile_origins(extent: u32, tile: u32, overlap_frac: f64) -> Vec<u32> {
    assert!(tile >= 1 && tile <= extent, "tile must fit the extent");
    let stride = ((tile as f64 * (1.0 - overlap_frac)).floor() as u32).max(1);
    let span = extent - tile;
    let count = span.div_ceil(stride) + 1;
    (0..count)
        .map(|k| if k + 1 == count { span } else { k * stride })
        .collect()
}

/// Cuts `mosaic` into a grid of tiles, writes them as PNGs plus
/// [`CATALOG_FILE`] into `out_dir`, and returns the catalog.
///
/// Tiles are numbered in row-major grid order. Each tile's rect is the
/// mosaic rect interpolated at the tile's pixel corners.
pub fn slice_mosaic(
    mosaic: &DynamicImage,
    rect: &GeoRect,
    tile_dims: ImageDims,
    overlap_frac: f64,
    out_dir: &Path,
) -> Result<MapCatalog> {
    let mosaic_dims = ImageDims::new(mosaic.width(), mosaic.height())?;
    if tile_dims.width > mosaic_dims.width || tile_dims.height > mosaic_dims.height {
        return Err(Error::InvalidTileSpec(format!(
            "tile {tile_dims} larger than mosaic {mosaic_dims}"
        )));
    }
    if !(0.0..1.0).contains(&overlap_frac) {
        return Err(Error::InvalidTileSpec(format!(
            "overlap {overlap_frac} outside [0, 1)"
        )));
    }
    // validates the rect as well
    let rect = GeoRect::new(rect.top_left, rect.bottom_right)?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let xs = tile_origins(mosaic_dims.width, tile_dims.width, overlap_frac);
    let ys = tile_origins(mosaic_dims.height, tile_dims.height, overlap_frac);
    let mut tiles = Vec::with_capacity(xs.len() * ys.len());
    for (row, &y0) in ys.iter().enumerate() {
        for (col, &x0) in xs.iter().enumerate() {
            let top_left = pixel_to_geo(PixelPoint::new(x0 as f64, y0 as f64), &rect, mosaic_dims);
            let bottom_right = pixel_to_geo(
                PixelPoint::new((x0 + tile_dims.width) as f64, (y0 + tile_dims.height) as f64),
                &rect,
                mosaic_dims,
            );
            let image_path = out_dir.join(format!("tile_r{row}_c{col}.png"));
            mosaic
                .crop_imm(x0, y0, tile_dims.width, tile_dims.height)
                .save_with_format(&image_path, image::ImageFormat::Png)
                .map_err(|e| match e {
                    image::ImageError::IoError(io) => Error::io(&image_path, io),
                    other => Error::Decode {
                        path: image_path.clone(),
                        message: other.to_string(),
                    },
                })?;
            tiles.push(MapTile {
                id: tiles.len(),
                image_path,
                rect: GeoRect {
                    top_left,
                    bottom_right,
                },
                dims: tile_dims,
            });
        }
    }
    write_catalog(&out_dir.join(CATALOG_FILE), &tiles)?;
    Ok(MapCatalog {
        tiles,
        root: out_dir.to_path_buf(),
    })
}

/// [`slice_mosaic`] for a grayscale raster.
pub fn slice_gray_mosaic(
    mosaic: &GrayRaster,
    rect: &GeoRect,
    tile_dims: ImageDims,
    overlap_frac: f64,
    out_dir: &Path,
) -> Result<MapCatalog> {
    slice_mosaic(
        &DynamicImage::ImageLuma8(mosaic.to_image()),
        rect,
        tile_dims,
        overlap_frac,
        out_dir,
    )
}

/// Position of tile `t`'s top-left pixel corner inside the mosaic it was cut
/// from, recovered from the two rects.
pub fn tile_offset_in(t: &MapTile, mosaic_rect: &GeoRect, mosaic_dims: ImageDims) -> Result<PixelPoint> {
    crate::geo::geo_to_pixel(t.rect.top_left, mosaic_rect, mosaic_dims)
}
