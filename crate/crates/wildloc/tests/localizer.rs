//! End-to-end behavior of the localizer on small synthetic worlds.

use std::path::Path;
use std::sync::OnceLock;

use wildloc::geo::{geo_to_pixel, haversine_m, pixel_to_geo, quad_centroid, GeoPoint, ImageDims, PixelPoint};
use wildloc::localizer::{
    localize_dataset, localize_photo, write_metadata, CenterMode, LocalizationStatus, Localizer,
    LocalizerConfig, PhotoMeta,
};
use wildloc::mapstore::{load_catalog, slice_gray_mosaic, write_catalog, MapCatalog, CATALOG_FILE};
use wildloc::raster::GrayRaster;
use wildloc::synth::{generate_world, sample_view, SynthWorld, ViewSpec};
use wildloc::Error;

fn world() -> &'static SynthWorld {
    static WORLD: OnceLock<SynthWorld> = OnceLock::new();
    WORLD.get_or_init(|| {
        let dims = ImageDims::new(1024, 1024).unwrap();
        let rect = SynthWorld::default_rect(dims, 0.5).unwrap();
        generate_world(11, dims, &rect, 0.5).unwrap()
    })
}

fn catalog(dir: &Path, tile: u32) -> MapCatalog {
    let w = world();
    slice_gray_mosaic(&w.raster, &w.rect, ImageDims::new(tile, tile).unwrap(), 0.25, dir).unwrap()
}

fn at(x: f64, y: f64) -> GeoPoint {
    pixel_to_geo(PixelPoint::new(x, y), &world().rect, world().dims())
}

fn view(x: f64, y: f64, yaw: f64, name: &str) -> (GrayRaster, PhotoMeta) {
    let mut spec = ViewSpec::new(at(x, y), yaw, ImageDims::new(320, 240).unwrap());
    spec.noise_sigma = 3.0;
    spec.noise_seed = 5;
    sample_view(world(), &spec, name).unwrap()
}

fn error_m(r: &wildloc::localizer::LocalizationResult, truth: &PhotoMeta) -> f64 {
    haversine_m(r.position.unwrap(), truth.gnss.unwrap())
}

#[test]
fn exact_window_against_whole_world_tile() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 1024);
    assert_eq!(cat.len(), 1);
    let spec = ViewSpec::new(at(400.0, 600.0), 0.0, ImageDims::new(320, 240).unwrap());
    let (photo, truth) = sample_view(world(), &spec, "p.png").unwrap();
    let r = Localizer::new(cat, LocalizerConfig::default())
        .unwrap()
        .localize(&photo, &truth)
        .unwrap();
    assert_eq!(r.status, LocalizationStatus::Localized);
    assert!(
        error_m(&r, &truth) <= 2.0 * world().gsd_m,
        "{}",
        error_m(&r, &truth)
    );
}

#[test]
fn rotated_views_localize_in_the_rotated_frame() {
    let dir = tempfile::tempdir().unwrap();
    let loc = Localizer::new(catalog(dir.path(), 512), LocalizerConfig::default()).unwrap();
    for (k, yaw) in [-30.0, -12.5, 0.0, 17.0, 30.0].into_iter().enumerate() {
        let (photo, truth) = view(300.0 + 90.0 * k as f64, 700.0 - 80.0 * k as f64, yaw, "p.png");
        let r = loc.localize(&photo, &truth).unwrap();
        assert_eq!(r.status, LocalizationStatus::Localized, "yaw {yaw}");
        assert!(error_m(&r, &truth) < 5.0, "yaw {yaw}: {} m", error_m(&r, &truth));

        // the tile origin plus the footprint center reproduces the truth pixel
        let tile = &loc.catalog().tiles[r.best_tile_id.unwrap()];
        let c = quad_centroid(&r.footprint.unwrap());
        assert_eq!(r.position.unwrap(), pixel_to_geo(c, &tile.rect, tile.dims));
        let truth_px = geo_to_pixel(truth.gnss.unwrap(), &tile.rect, tile.dims).unwrap();
        assert!(c.distance(&truth_px) < 10.0);
    }
}

#[test]
fn yaw_sources_add_up() {
    let dir = tempfile::tempdir().unwrap();
    let base = LocalizerConfig::default();
    let loc = Localizer::new(catalog(dir.path(), 512), base.clone()).unwrap();
    let (photo, truth) = view(500.0, 500.0, 28.0, "p.png");
    let whole = loc.localize(&photo, &truth).unwrap();

    let split = PhotoMeta {
        gimbal_yaw_deg: 20.0,
        drone_yaw_deg: 8.0,
        ..truth.clone()
    };
    assert_eq!(loc.localize(&photo, &split).unwrap(), whole);

    let corrected = Localizer::new(
        loc.catalog().clone(),
        LocalizerConfig {
            yaw_correction_deg: 13.0,
            ..base
        },
    )
    .unwrap();
    let biased = PhotoMeta {
        gimbal_yaw_deg: 15.0,
        ..truth.clone()
    };
    assert_eq!(corrected.localize(&photo, &biased).unwrap(), whole);
}

#[test]
fn featureless_photo_has_insufficient_matches() {
    let dir = tempfile::tempdir().unwrap();
    let loc = Localizer::new(catalog(dir.path(), 512), LocalizerConfig::default()).unwrap();
    let flat = GrayRaster::filled(320, 240, 128);
    let r = loc.localize(&flat, &PhotoMeta::new("flat.png")).unwrap();
    assert_eq!(r.status, LocalizationStatus::InsufficientMatches);
    assert_eq!((r.best_tile_id, r.raw_match_count, r.inlier_count), (None, 0, 0));
    assert_eq!((r.position, r.footprint), (None, None));
}

#[test]
fn duplicate_tiles_select_lowest_id_regardless_of_row_order() {
    let dir = tempfile::tempdir().unwrap();
    let base = catalog(dir.path(), 512);
    let mut tile = base.tiles[4].clone();
    let dup_path = dir.path().join("dup.png");
    std::fs::copy(&tile.image_path, &dup_path).unwrap();

    let mut tiles = vec![tile.clone()];
    tile.image_path = dup_path;
    tiles.push(tile);
    let csv = dir.path().join("dup.csv");
    write_catalog(&csv, &tiles).unwrap();
    let cat = load_catalog(&csv).unwrap();
    assert_eq!(cat.len(), 2);

    let (photo, truth) = view(512.0, 512.0, 10.0, "p.png");
    let r = Localizer::new(cat.clone(), LocalizerConfig::default())
        .unwrap()
        .localize(&photo, &truth)
        .unwrap();
    assert_eq!(r.status, LocalizationStatus::Localized);
    assert_eq!(r.best_tile_id, Some(0));

    // same ids, reversed rows
    let mut reversed = cat;
    reversed.tiles.reverse();
    let r_rev = Localizer::new(reversed, LocalizerConfig::default())
        .unwrap()
        .localize(&photo, &truth)
        .unwrap();
    assert_eq!(r_rev, r);
}

#[test]
fn raising_min_inliers_never_creates_a_success() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 512);
    let views: Vec<_> = [(200.0, 200.0, 5.0), (800.0, 300.0, -25.0), (512.0, 900.0, 0.0)]
        .iter()
        .map(|&(x, y, yaw)| view(x, y, yaw, "p.png"))
        .chain(std::iter::once((
            GrayRaster::filled(320, 240, 9),
            PhotoMeta::new("flat.png"),
        )))
        .collect();
    let mut previous: Option<Vec<bool>> = None;
    for min_inliers in [4, 10, 100, 300, 100_000] {
        let loc = Localizer::new(
            cat.clone(),
            LocalizerConfig {
                min_inliers,
                ..LocalizerConfig::default()
            },
        )
        .unwrap();
        let ok: Vec<bool> = views
            .iter()
            .map(|(p, m)| loc.localize(p, m).unwrap().is_localized())
            .collect();
        if let Some(prev) = &previous {
            for (before, now) in prev.iter().zip(&ok) {
                assert!(*before || !*now);
            }
        }
        previous = Some(ok);
    }
    assert!(previous.unwrap().iter().all(|ok| !ok));
}

#[test]
fn homography_center_mode_agrees_with_quad_mean() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 512);
    let (photo, truth) = view(600.0, 420.0, -20.0, "p.png");
    let quad = Localizer::new(cat.clone(), LocalizerConfig::default())
        .unwrap()
        .localize(&photo, &truth)
        .unwrap();
    let hc = Localizer::new(
        cat,
        LocalizerConfig {
            center_mode: CenterMode::HomographyCenter,
            ..LocalizerConfig::default()
        },
    )
    .unwrap()
    .localize(&photo, &truth)
    .unwrap();
    // near-affine fits put both centers within a fraction of a meter
    assert!(haversine_m(quad.position.unwrap(), hc.position.unwrap()) < 0.5);
}

#[test]
fn dataset_keeps_row_order_and_isolates_bad_photos() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 512);
    let photos = dir.path().join("photos");
    std::fs::create_dir(&photos).unwrap();
    let mut rows = Vec::new();
    for (k, (x, y)) in [(300.0, 300.0), (700.0, 650.0)].into_iter().enumerate() {
        let name = format!("v{k}.png");
        let (p, m) = view(x, y, 12.0, &name);
        p.save_png(&photos.join(&name)).unwrap();
        rows.push(m);
    }
    std::fs::write(photos.join("broken.png"), b"\x89PNG not really").unwrap();
    rows.insert(1, PhotoMeta::new("broken.png"));
    rows.push(PhotoMeta::new("absent.png"));
    let meta = dir.path().join("meta.csv");
    write_metadata(&meta, &rows).unwrap();

    let results = localize_dataset(&photos, &meta, &cat, &LocalizerConfig::default()).unwrap();
    let names: Vec<&str> = results.iter().map(|r| r.photo.as_str()).collect();
    assert_eq!(names, ["v0.png", "broken.png", "v1.png", "absent.png"]);
    let statuses: Vec<_> = results.iter().map(|r| r.status).collect();
    assert_eq!(
        statuses,
        [
            LocalizationStatus::Localized,
            LocalizationStatus::Failed,
            LocalizationStatus::Localized,
            LocalizationStatus::Failed
        ]
    );
    assert!(results[1].message.as_deref().unwrap().starts_with("DecodeError"));
    assert!(results[3].message.as_deref().unwrap().starts_with("IoError"));

    // one worker gives the same answers
    let serial = localize_dataset(
        &photos,
        &meta,
        &cat,
        &LocalizerConfig {
            jobs: 1,
            ..LocalizerConfig::default()
        },
    )
    .unwrap();
    assert_eq!(serial, results);

    let empty = dir.path().join("empty.csv");
    write_metadata(&empty, &[]).unwrap();
    assert!(
        localize_dataset(&photos, &empty, &cat, &LocalizerConfig::default())
            .unwrap()
            .is_empty()
    );
}

#[test]
fn single_photo_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 512);
    let cfg = LocalizerConfig::default();
    let meta = PhotoMeta::new("x.png");
    assert!(matches!(
        localize_photo(&dir.path().join("missing.png"), &meta, &cat, &cfg),
        Err(Error::Io { .. })
    ));
    let bad = dir.path().join("bad.jpg");
    std::fs::write(&bad, "text").unwrap();
    assert!(matches!(
        localize_photo(&bad, &meta, &cat, &cfg),
        Err(Error::Decode { .. })
    ));

    let tiny = dir.path().join("tiny.png");
    GrayRaster::filled(40, 40, 0).save_png(&tiny).unwrap();
    let halved = LocalizerConfig {
        resize_levels: 1,
        ..cfg
    };
    assert!(matches!(
        localize_photo(&tiny, &meta, &cat, &halved),
        Err(Error::TooSmall(_))
    ));
    assert!(dir.path().join(CATALOG_FILE).exists());
}

#[test]
fn resize_levels_undo_a_finer_photo_scale() {
    let dir = tempfile::tempdir().unwrap();
    let cat = catalog(dir.path(), 512);
    let mut spec = ViewSpec::new(at(520.0, 480.0), -8.0, ImageDims::new(640, 480).unwrap());
    spec.scale = 0.5;
    spec.noise_sigma = 2.0;
    let (photo, truth) = sample_view(world(), &spec, "zoomed.png").unwrap();
    let r = localize_photo_in(&cat, &photo, &truth, 1);
    assert_eq!(r.status, LocalizationStatus::Localized);
    assert!(error_m(&r, &truth) < 5.0);
}

fn localize_photo_in(
    cat: &MapCatalog,
    photo: &GrayRaster,
    meta: &PhotoMeta,
    resize_levels: u32,
) -> wildloc::localizer::LocalizationResult {
    Localizer::new(
        cat.clone(),
        LocalizerConfig {
            resize_levels,
            ..LocalizerConfig::default()
        },
    )
    .unwrap()
    .localize(photo, meta)
    .unwrap()
}
