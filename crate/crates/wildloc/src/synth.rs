//! Synthetic ground truth: a seeded terrain mosaic and nadir views sampled
//! from it through an exact similarity transform.
//!
//! The terrain is a layered value-noise background split into field parcels,
//! with high-frequency "forest" patches, bright road polylines and a few
//! rectangular buildings. Views record their true center and heading, so an
//! emitted dataset doubles as a localization benchmark.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::geo::{geo_to_pixel, haversine_m, GeoPoint, GeoRect, ImageDims, PixelPoint};
use crate::localizer::{write_metadata, PhotoMeta, METADATA_FILE};
use crate::mapstore::{slice_gray_mosaic, MapCatalog};
use crate::raster::{sin_cos_deg, GrayRaster};

/// Anchor for default worlds, the center of the original flight area.
pub const DEFAULT_ANCHOR: GeoPoint = GeoPoint {
    lat: 60.4031,
    lon: 22.4618,
};
pub const DEFAULT_WORLD_SIZE: u32 = 2048;
pub const DEFAULT_GSD_M: f64 = 0.5;
const MIN_WORLD_SIZE: u32 = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthWorld {
    pub raster: GrayRaster,
    pub rect: GeoRect,
    /// Meters per world pixel.
    pub gsd_m: f64,
    pub seed: u64,
}

impl SynthWorld {
    pub fn dims(&self) -> ImageDims {
        self.raster.dims()
    }

    /// The rect a `dims` world at `gsd_m` occupies around [`DEFAULT_ANCHOR`].
    pub fn default_rect(dims: ImageDims, gsd_m: f64) -> Result<GeoRect> {
        GeoRect::around(
            DEFAULT_ANCHOR,
            dims.width as f64 * gsd_m,
            dims.height as f64 * gsd_m,
        )
    }

    /// Default 2048x2048 world at 0.5 m/px.
    pub fn default_with_seed(seed: u64) -> Result<SynthWorld> {
        let dims = ImageDims::new(DEFAULT_WORLD_SIZE, DEFAULT_WORLD_SIZE)?;
        generate_world(
            seed,
            dims,
            &SynthWorld::default_rect(dims, DEFAULT_GSD_M)?,
            DEFAULT_GSD_M,
        )
    }
}

/// A nadir view of the world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSpec {
    pub center: GeoPoint,
    /// Heading of the photo's up direction, clockwise from north.
    pub yaw_deg: f64,
    pub view_dims: ImageDims,
    /// View meters-per-pixel as a multiple of the world's.
    pub scale: f64,
    pub noise_sigma: f64,
    pub brightness_delta: f64,
    pub noise_seed: u64,
}

impl ViewSpec {
    pub fn new(center: GeoPoint, yaw_deg: f64, view_dims: ImageDims) -> Self {
        ViewSpec {
            center,
            yaw_deg,
            view_dims,
            scale: 1.0,
            noise_sigma: 0.0,
            brightness_delta: 0.0,
            noise_seed: 0,
        }
    }
}

fn check_scale(dims: ImageDims, rect: &GeoRect, gsd_m: f64) -> Result<()> {
    let mid_lat = rect.center().lat;
    let mid_lon = rect.center().lon;
    let height_m = haversine_m(
        GeoPoint {
            lat: rect.top_left.lat,
            lon: mid_lon,
        },
        GeoPoint {
            lat: rect.bottom_right.lat,
            lon: mid_lon,
        },
    );
    let width_m = haversine_m(
        GeoPoint {
            lat: mid_lat,
            lon: rect.top_left.lon,
        },
        GeoPoint {
            lat: mid_lat,
            lon: rect.bottom_right.lon,
        },
    );
    let off = |metric: f64, px: u32| (metric - px as f64 * gsd_m).abs() / (px as f64 * gsd_m);
    if off(width_m, dims.width) > 0.01 || off(height_m, dims.height) > 0.01 {
        return Err(Error::InvalidGeoRect(format!(
            "rect spans {width_m:.1} x {height_m:.1} m but {dims} px at {gsd_m} m/px is {:.1} x {:.1} m",
            dims.width as f64 * gsd_m,
            dims.height as f64 * gsd_m
        )));
    }
    Ok(())
}

/// Lattice of random values in [-1, 1], sampled with smoothstep blending.
struct ValueNoise {
    cell: f64,
    cols: usize,
    values: Vec<f32>,
}

impl ValueNoise {
    fn new(rng: &mut ChaCha8Rng, dims: ImageDims, cell: u32) -> Self {
        let cols = (dims.width / cell + 2) as usize;
        let rows = (dims.height / cell + 2) as usize;
        ValueNoise {
            cell: cell as f64,
            cols,
            values: (0..cols * rows).map(|_| rng.random_range(-1.0..=1.0)).collect(),
        }
    }

    fn at(&self, x: u32, y: u32) -> f64 {
        let fx = x as f64 / self.cell;
        let fy = y as f64 / self.cell;
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        let s = |t: f64| t * t * (3.0 - 2.0 * t);
        let (tx, ty) = (s(fx - ix as f64), s(fy - iy as f64));
        let v = |cx: usize, cy: usize| self.values[cy * self.cols + cx] as f64;
        let top = v(ix, iy) + (v(ix + 1, iy) - v(ix, iy)) * tx;
        let bottom = v(ix, iy + 1) + (v(ix + 1, iy + 1) - v(ix, iy + 1)) * tx;
        top + (bottom - top) * ty
    }
}

/// Jittered-grid Voronoi parcels, each with its own brightness offset.
struct Parcels {
    cell: f64,
    cols: i64,
    rows: i64,
    sites: Vec<(f64, f64, f64)>,
}

impl Parcels {
    fn new(rng: &mut ChaCha8Rng, dims: ImageDims, cell: u32) -> Self {
        let cols = (dims.width / cell + 1) as i64;
        let rows = (dims.height / cell + 1) as i64;
        let c = cell as f64;
        let sites = (0..rows * cols)
            .map(|k| {
                let (gx, gy) = ((k % cols) as f64, (k / cols) as f64);
                (
                    (gx + rng.random_range(0.1..0.9)) * c,
                    (gy + rng.random_range(0.1..0.9)) * c,
                    rng.random_range(-45.0..45.0),
                )
            })
            .collect();
        Parcels {
            cell: c,
            cols,
            rows,
            sites,
        }
    }

    fn offset(&self, x: u32, y: u32) -> f64 {
        let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
        let (gx, gy) = ((px / self.cell) as i64, (py / self.cell) as i64);
        let mut best = (f64::MAX, 0.0);
        for cy in (gy - 1).max(0)..=(gy + 1).min(self.rows - 1) {
            for cx in (gx - 1).max(0)..=(gx + 1).min(self.cols - 1) {
                let (sx, sy, v) = self.sites[(cy * self.cols + cx) as usize];
                let d = (sx - px).powi(2) + (sy - py).powi(2);
                if d < best.0 {
                    best = (d, v);
                }
            }
        }
        best.1
    }
}

fn draw_thick_segment(
    canvas: &mut [f64],
    dims: ImageDims,
    a: (f64, f64),
    b: (f64, f64),
    width: f64,
    value: f64,
) {
    let half = width / 2.0;
    let (x0, x1) = (a.0.min(b.0) - half, a.0.max(b.0) + half);
    let (y0, y1) = (a.1.min(b.1) - half, a.1.max(b.1) + half);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = (dx * dx + dy * dy).max(1e-12);
    let xr = (x0.floor().max(0.0) as u32)..(x1.ceil().min(dims.width as f64) as u32);
    for y in (y0.floor().max(0.0) as u32)..(y1.ceil().min(dims.height as f64) as u32) {
        for x in xr.clone() {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            let t = (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0);
            let (cx, cy) = (a.0 + t * dx, a.1 + t * dy);
            if (px - cx).hypot(py - cy) <= half {
                canvas[(y * dims.width + x) as usize] = value;
            }
        }
    }
}

/// Builds a deterministic terrain raster of `dims` pixels georeferenced by `rect`.
pub fn generate_world(seed: u64, dims: ImageDims, rect: &GeoRect, gsd_m: f64) -> Result<SynthWorld> {
    if dims.width < MIN_WORLD_SIZE || dims.height < MIN_WORLD_SIZE {
        return Err(Error::WorldTooSmall(format!(
            "{dims} is below the {MIN_WORLD_SIZE}x{MIN_WORLD_SIZE} minimum"
        )));
    }
    if !(gsd_m > 0.0 && gsd_m.is_finite()) {
        return Err(Error::InvalidGeoRect(format!("ground sampling distance {gsd_m}")));
    }
    let rect = GeoRect::new(rect.top_left, rect.bottom_right)?;
    check_scale(dims, &rect, gsd_m)?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let broad = ValueNoise::new(&mut rng, dims, 256);
    let medium = ValueNoise::new(&mut rng, dims, 48);
    let fine = ValueNoise::new(&mut rng, dims, 12);
    let forest_mask = ValueNoise::new(&mut rng, dims, 160);
    let canopy = ValueNoise::new(&mut rng, dims, 3);
    let parcels = Parcels::new(&mut rng, dims, 140);

    let (w, h) = (dims.width, dims.height);
    let mut canvas = vec![0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let mut v = 120.0
                + 35.0 * broad.at(x, y)
                + 20.0 * medium.at(x, y)
                + 10.0 * fine.at(x, y)
                + parcels.offset(x, y);
            // forest: dark, rough canopy where the mask noise is high
            let f = forest_mask.at(x, y);
            if f > 0.15 {
                let blend = ((f - 0.15) / 0.1).min(1.0);
                v += blend * (-30.0 + 40.0 * canopy.at(x, y));
            }
            canvas[(y * w + x) as usize] = v;
        }
    }

    // roads: random walks with gentle turns
    let n_roads = rng.random_range(6..=12);
    for _ in 0..n_roads {
        let width = rng.random_range(3.0..=8.0);
        let value = rng.random_range(195.0..235.0);
        let mut p = (rng.random_range(0.0..w as f64), rng.random_range(0.0..h as f64));
        let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        for _ in 0..rng.random_range(4..10) {
            let len = rng.random_range(80.0..300.0);
            let q = (p.0 + len * heading.cos(), p.1 + len * heading.sin());
            draw_thick_segment(&mut canvas, dims, p, q, width, value);
            p = q;
            heading += rng.random_range(-0.8..0.8);
        }
    }

    // buildings: axis-aligned blocks with a contrasting roof
    let n_buildings = rng.random_range(10..=50);
    for _ in 0..n_buildings {
        let bw = rng.random_range(8..=30u32);
        let bh = rng.random_range(8..=30u32);
        let x0 = rng.random_range(0..w - bw);
        let y0 = rng.random_range(0..h - bh);
        let roof = if rng.random_bool(0.5) {
            rng.random_range(210.0..250.0)
        } else {
            rng.random_range(20.0..60.0)
        };
        for y in y0..y0 + bh {
            for x in x0..x0 + bw {
                canvas[(y * w + x) as usize] = roof;
            }
        }
    }

    let pixels = canvas
        .into_iter()
        .map(|v| v.round().clamp(0.0, 255.0) as u8)
        .collect();
    Ok(SynthWorld {
        raster: GrayRaster::new(w, h, pixels)?,
        rect,
        gsd_m,
        seed,
    })
}

/// Maps a photo pixel-index position to a world pixel-corner position.
struct ViewTransform {
    center: PixelPoint,
    half_w: f64,
    half_h: f64,
    sin: f64,
    cos: f64,
    scale: f64,
}

impl ViewTransform {
    fn new(world: &SynthWorld, spec: &ViewSpec) -> Result<Self> {
        let center = geo_to_pixel(spec.center, &world.rect, world.dims())?;
        let (sin, cos) = sin_cos_deg(spec.yaw_deg);
        Ok(ViewTransform {
            center,
            half_w: spec.view_dims.width as f64 / 2.0,
            half_h: spec.view_dims.height as f64 / 2.0,
            sin,
            cos,
            scale: spec.scale,
        })
    }

    #[inline]
    fn world_of(&self, px: f64, py: f64) -> (f64, f64) {
        let du = (px + 0.5 - self.half_w) * self.scale;
        let dv = (py + 0.5 - self.half_h) * self.scale;
        (
            self.center.x + du * self.cos - dv * self.sin,
            self.center.y + du * self.sin + dv * self.cos,
        )
    }
}

/// Renders the view `spec` of `world` and its ground-truth metadata.
///
/// The photo's up direction points `yaw_deg` clockwise from north, so world
/// content appears rotated counter-clockwise by that angle.
pub fn sample_view(world: &SynthWorld, spec: &ViewSpec, filename: &str) -> Result<(GrayRaster, PhotoMeta)> {
    if !(spec.scale > 0.0 && spec.scale.is_finite()) {
        return Err(Error::FootprintOutOfBounds(format!("view scale {}", spec.scale)));
    }
    let t = ViewTransform::new(world, spec)?;
    let (vw, vh) = (spec.view_dims.width, spec.view_dims.height);
    let (ww, wh) = (world.raster.width() as f64, world.raster.height() as f64);
    const EPS: f64 = 1e-6;
    for (px, py) in [(0, 0), (vw - 1, 0), (vw - 1, vh - 1), (0, vh - 1)] {
        let (x, y) = t.world_of(px as f64, py as f64);
        let (fx, fy) = (x - 0.5, y - 0.5);
        if fx < -EPS || fy < -EPS || fx > ww - 1.0 + EPS || fy > wh - 1.0 + EPS {
            return Err(Error::FootprintOutOfBounds(format!(
                "view corner ({px}, {py}) lands at world ({x:.1}, {y:.1}) outside {}",
                world.dims()
            )));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);
    let noise = (spec.noise_sigma > 0.0).then(|| Normal::new(0.0, spec.noise_sigma).expect("positive sigma"));
    let photo = GrayRaster::from_fn(vw, vh, |px, py| {
        let (x, y) = t.world_of(px as f64, py as f64);
        let mut v = world.raster.sample_bilinear(x - 0.5, y - 0.5) + spec.brightness_delta;
        if let Some(n) = &noise {
            v += n.sample(&mut rng);
        }
        v.round().clamp(0.0, 255.0) as u8
    });
    let meta = PhotoMeta {
        filename: filename.to_owned(),
        gimbal_yaw_deg: spec.yaw_deg,
        drone_yaw_deg: 0.0,
        gnss: Some(spec.center),
        altitude_m: None,
    };
    Ok((photo, meta))
}

/// Parameters for drawing a batch of random views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewSampling {
    pub count: usize,
    pub view_dims: ImageDims,
    pub max_abs_yaw_deg: f64,
    pub scale: f64,
    pub noise_sigma: f64,
    pub max_abs_brightness: f64,
}

impl Default for ViewSampling {
    fn default() -> Self {
        ViewSampling {
            count: 50,
            view_dims: ImageDims {
                width: 512,
                height: 384,
            },
            max_abs_yaw_deg: 30.0,
            scale: 1.0,
            noise_sigma: 4.0,
            max_abs_brightness: 10.0,
        }
    }
}

/// Draws `sampling.count` views whose footprints lie inside the world at any heading.
pub fn random_view_specs(world: &SynthWorld, sampling: &ViewSampling, seed: u64) -> Result<Vec<ViewSpec>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dims = world.dims();
    let half_diag =
        0.5 * (sampling.view_dims.width as f64).hypot(sampling.view_dims.height as f64) * sampling.scale;
    let margin = half_diag + 2.0;
    if 2.0 * margin >= dims.width.min(dims.height) as f64 {
        return Err(Error::FootprintOutOfBounds(format!(
            "{} views at scale {} do not fit in {dims}",
            sampling.view_dims, sampling.scale
        )));
    }
    (0..sampling.count)
        .map(|_| {
            let x = rng.random_range(margin..dims.width as f64 - margin);
            let y = rng.random_range(margin..dims.height as f64 - margin);
            let yaw = if sampling.max_abs_yaw_deg > 0.0 {
                rng.random_range(-sampling.max_abs_yaw_deg..=sampling.max_abs_yaw_deg)
            } else {
                0.0
            };
            let brightness = if sampling.max_abs_brightness > 0.0 {
                rng.random_range(-sampling.max_abs_brightness..=sampling.max_abs_brightness)
            } else {
                0.0
            };
            let noise_seed = rng.random();
            Ok(ViewSpec {
                center: crate::geo::pixel_to_geo(PixelPoint::new(x, y), &world.rect, dims),
                yaw_deg: yaw,
                view_dims: sampling.view_dims,
                scale: sampling.scale,
                noise_sigma: sampling.noise_sigma,
                brightness_delta: brightness,
                noise_seed,
            })
        })
        .collect()
}

/// Files produced by [`emit_dataset`].
#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub photos: Vec<PathBuf>,
    pub metadata_csv: PathBuf,
    pub catalog: MapCatalog,
    pub truth: Vec<PhotoMeta>,
}

/// Writes a self-contained experiment: `view_NNN.png` photos, the metadata
/// CSV with ground truth, and the world sliced into a tile catalog.
pub fn emit_dataset(
    world: &SynthWorld,
    specs: &[ViewSpec],
    out_dir: &Path,
    tile_dims: ImageDims,
    overlap: f64,
) -> Result<SynthDataset> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut photos = Vec::with_capacity(specs.len());
    let mut truth = Vec::with_capacity(specs.len());
    for (k, spec) in specs.iter().enumerate() {
        let name = format!("view_{k:03}.png");
        let (photo, meta) = sample_view(world, spec, &name)?;
        let path = out_dir.join(&name);
        photo.save_png(&path)?;
        photos.push(path);
        truth.push(meta);
    }
    let metadata_csv = out_dir.join(METADATA_FILE);
    write_metadata(&metadata_csv, &truth)?;
    let catalog = slice_gray_mosaic(&world.raster, &world.rect, tile_dims, overlap, out_dir)?;
    Ok(SynthDataset {
        photos,
        metadata_csv,
        catalog,
        truth,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{detect_keypoints, DetectorConfig};
    use crate::raster::rotate_expand;

    fn small_world(seed: u64) -> SynthWorld {
        let dims = ImageDims::new(640, 560).unwrap();
        generate_world(seed, dims, &SynthWorld::default_rect(dims, 0.5).unwrap(), 0.5).unwrap()
    }

    #[test]
    fn deterministic_world() {
        assert_eq!(small_world(4).raster, small_world(4).raster);
        assert_ne!(small_world(4).raster, small_world(5).raster);
    }

    #[test]
    fn world_too_small() {
        let dims = ImageDims::new(100, 100).unwrap();
        let rect = SynthWorld::default_rect(dims, 0.5).unwrap();
        assert!(matches!(
            generate_world(1, dims, &rect, 0.5),
            Err(Error::WorldTooSmall(_))
        ));
    }

    #[test]
    fn inconsistent_scale_rejected() {
        let dims = ImageDims::new(600, 600).unwrap();
        let rect = SynthWorld::default_rect(dims, 0.5).unwrap();
        assert!(generate_world(1, dims, &rect, 0.6).is_err());
    }

    #[test]
    fn default_world_has_enough_corners() {
        let world = SynthWorld::default_with_seed(1).unwrap();
        let cfg = DetectorConfig {
            max_count: usize::MAX,
            ..Default::default()
        };
        let n = detect_keypoints(&world.raster, None, &cfg).len();
        assert!(n >= 500, "{n} corners");
    }

    #[test]
    fn identity_view_is_a_window() {
        let world = small_world(7);
        let spec = ViewSpec::new(world.rect.center(), 0.0, ImageDims::new(200, 120).unwrap());
        let (photo, meta) = sample_view(&world, &spec, "v.png").unwrap();
        let window = world.raster.crop(320 - 100, 280 - 60, spec.view_dims).unwrap();
        assert_eq!(photo, window);
        assert_eq!(meta.gnss, Some(spec.center));
        assert_eq!((meta.gimbal_yaw_deg, meta.drone_yaw_deg), (0.0, 0.0));
    }

    #[test]
    fn ninety_degree_view_is_a_rotated_window() {
        let world = small_world(8);
        let spec = ViewSpec::new(world.rect.center(), 90.0, ImageDims::new(200, 120).unwrap());
        let (photo, _) = sample_view(&world, &spec, "v.png").unwrap();
        // world window has swapped extents; photo shows it turned counter-clockwise
        let window = world
            .raster
            .crop(320 - 60, 280 - 100, ImageDims::new(120, 200).unwrap())
            .unwrap();
        for y in 0..120 {
            for x in 0..200 {
                assert_eq!(photo.get(x, y), window.get(119 - y, x));
            }
        }
        let (restored, mask) = rotate_expand(&photo, 90.0);
        assert_eq!(restored, window);
        assert_eq!(mask.valid_count(), 120 * 200);
    }

    #[test]
    fn footprint_bounds() {
        let world = small_world(9);
        // 1 m (2 px) inside the western edge
        let near_edge = crate::geo::pixel_to_geo(PixelPoint::new(2.0, 280.0), &world.rect, world.dims());
        let spec = ViewSpec::new(near_edge, 0.0, ImageDims::new(500, 500).unwrap());
        assert!(matches!(
            sample_view(&world, &spec, "v.png"),
            Err(Error::FootprintOutOfBounds(_))
        ));
    }

    #[test]
    fn oracle_center_position() {
        let world = small_world(10);
        let target = PixelPoint::new(300.0, 250.0);
        let center = crate::geo::pixel_to_geo(target, &world.rect, world.dims());
        let p = geo_to_pixel(center, &world.rect, world.dims()).unwrap();
        assert!(p.distance(&target) < 1e-9);
        // even-sized view centered on an integer corner is an exact window
        let spec = ViewSpec::new(center, 0.0, ImageDims::new(100, 80).unwrap());
        let (photo, _) = sample_view(&world, &spec, "v.png").unwrap();
        assert_eq!(photo, world.raster.crop(250, 210, spec.view_dims).unwrap());
    }

    #[test]
    fn noise_and_brightness_are_seeded() {
        let world = small_world(11);
        let mut spec = ViewSpec::new(world.rect.center(), 12.0, ImageDims::new(100, 100).unwrap());
        spec.noise_sigma = 4.0;
        spec.brightness_delta = 10.0;
        spec.noise_seed = 3;
        let (a, _) = sample_view(&world, &spec, "a").unwrap();
        let (b, _) = sample_view(&world, &spec, "b").unwrap();
        assert_eq!(a, b);
        spec.noise_seed = 4;
        let (c, _) = sample_view(&world, &spec, "c").unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn emit_arity() {
        let world = small_world(12);
        let dir = tempfile::tempdir().unwrap();
        let tile = ImageDims::new(320, 280).unwrap();
        let spec = ViewSpec::new(world.rect.center(), 5.0, ImageDims::new(128, 96).unwrap());
        let ds = emit_dataset(&world, &[spec], dir.path(), tile, 0.0).unwrap();
        assert_eq!(ds.photos.len(), 1);
        assert!(ds.photos[0].is_file());
        let meta = std::fs::read_to_string(&ds.metadata_csv).unwrap();
        assert_eq!(meta.lines().count(), 2);
        assert!(!ds.catalog.is_empty());

        let empty = tempfile::tempdir().unwrap();
        let ds = emit_dataset(&world, &[], empty.path(), tile, 0.0).unwrap();
        let meta = std::fs::read_to_string(&ds.metadata_csv).unwrap();
        assert_eq!(meta.lines().count(), 1);
        assert!(empty.path().join(crate::mapstore::CATALOG_FILE).is_file());
    }
}
