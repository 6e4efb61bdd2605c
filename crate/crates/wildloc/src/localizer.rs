//! End-to-end localization of drone photos against a tile catalog.
//!
//! Per photo: rotate north-up by the recorded yaw, match against every tile,
//! keep the tile with the most raw matches (lowest id on ties), fit a robust
//! homography, map the photo footprint into that tile and convert the
//! footprint center to latitude/longitude.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::{match_features, ImageFeatures, MatchPair, Matcher, MatcherConfig};
use crate::geo::{pixel_to_geo, quad_centroid, GeoPoint, PixelPoint};
use crate::homography::{apply_h, ransac_homography, transform_quad, RansacConfig};
use crate::mapstore::MapCatalog;
use crate::raster::{load_gray, resize_half, rotate_expand, GrayRaster};

pub const METADATA_HEADER: [&str; 6] = [
    "filename",
    "gimbal_yaw_deg",
    "drone_yaw_deg",
    "gnss_lat",
    "gnss_lon",
    "altitude_m",
];

/// Name of the metadata CSV written by the synthetic dataset generator.
pub const METADATA_FILE: &str = "meta.csv";

/// Per-photo capture metadata, with optional GNSS ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotoMeta {
    pub filename: String,
    pub gimbal_yaw_deg: f64,
    pub drone_yaw_deg: f64,
    pub gnss: Option<GeoPoint>,
    pub altitude_m: Option<f64>,
}

impl PhotoMeta {
    pub fn new(filename: impl Into<String>) -> Self {
        PhotoMeta {
            filename: filename.into(),
            gimbal_yaw_deg: 0.0,
            drone_yaw_deg: 0.0,
            gnss: None,
            altitude_m: None,
        }
    }
}

/// Reads a metadata CSV. GNSS and altitude cells may be empty.
pub fn read_metadata(path: &Path) -> Result<Vec<PhotoMeta>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let fmt = |msg: String| Error::Format(format!("{}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| fmt(e.to_string()))?;
    if header.iter().ne(METADATA_HEADER.iter().copied()) {
        return Err(fmt(format!("header must be `{}`", METADATA_HEADER.join(","))));
    }
    let mut rows = Vec::new();
    for (k, record) in reader.records().enumerate() {
        let line = k + 2;
        let record = record.map_err(|e| fmt(e.to_string()))?;
        let field = |i: usize| record[i].trim();
        let number = |i: usize| -> Result<f64> {
            let v: f64 = field(i).parse().map_err(|_| {
                fmt(format!(
                    "line {line}: {} is not a number: {:?}",
                    METADATA_HEADER[i],
                    field(i)
                ))
            })?;
            if !v.is_finite() {
                return Err(fmt(format!("line {line}: {} is not finite", METADATA_HEADER[i])));
            }
            Ok(v)
        };
        let optional = |i: usize| -> Result<Option<f64>> {
            if field(i).is_empty() {
                Ok(None)
            } else {
                number(i).map(Some)
            }
        };
        let filename = field(0).to_owned();
        if filename.is_empty() {
            return Err(fmt(format!("line {line}: empty filename")));
        }
        let gnss = match (optional(3)?, optional(4)?) {
            (Some(lat), Some(lon)) => {
                Some(GeoPoint::new(lat, lon).map_err(|_| fmt(format!("line {line}: GNSS out of range")))?)
            }
            (None, None) => None,
            _ => {
                return Err(fmt(format!(
                    "line {line}: gnss_lat and gnss_lon must be given together"
                )))
            }
        };
        rows.push(PhotoMeta {
            filename,
            gimbal_yaw_deg: number(1)?,
            drone_yaw_deg: number(2)?,
            gnss,
            altitude_m: optional(5)?,
        });
    }
    Ok(rows)
}

pub fn write_metadata(path: &Path, rows: &[PhotoMeta]) -> Result<()> {
    let mut out = METADATA_HEADER.join(",");
    out.push('\n');
    for m in rows {
        let (lat, lon) = match m.gnss {
            Some(g) => (format!("{:.15}", g.lat), format!("{:.15}", g.lon)),
            None => (String::new(), String::new()),
        };
        let alt = m.altitude_m.map(|a| format!("{a}")).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{lat},{lon},{alt}\n",
            m.filename, m.gimbal_yaw_deg, m.drone_yaw_deg
        ));
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Which point of the mapped footprint is reported as the photo position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CenterMode {
    /// Mean of the four transformed photo corners.
    #[default]
    QuadMean,
    /// Homography image of the photo center.
    HomographyCenter,
}

/// How the best tile is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TileSelection {
    /// Most raw matches before outlier rejection.
    #[default]
    RawMatches,
    /// Most RANSAC inliers.
    Inliers,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizerConfig {
    /// Added to gimbal and drone yaw before rotating the photo (compass bias).
    pub yaw_correction_deg: f64,
    pub min_raw_matches: usize,
    pub min_inliers: usize,
    pub ransac: RansacConfig,
    pub matcher: MatcherConfig,
    /// Box-filter halvings applied to the photo before rotation.
    pub resize_levels: u32,
    pub center_mode: CenterMode,
    pub selection: TileSelection,
    /// Worker threads; 0 uses the available parallelism.
    pub jobs: usize,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        LocalizerConfig {
            yaw_correction_deg: 0.0,
            min_raw_matches: 4,
            min_inliers: 10,
            ransac: RansacConfig::default(),
            matcher: MatcherConfig::default(),
            resize_levels: 0,
            center_mode: CenterMode::QuadMean,
            selection: TileSelection::RawMatches,
            jobs: 0,
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_raw_matches < 4 {
            return Err(Error::Config(format!(
                "min_raw_matches must be at least 4, got {}",
                self.min_raw_matches
            )));
        }
        if self.min_inliers < 4 {
            return Err(Error::Config(format!(
                "min_inliers must be at least 4, got {}",
                self.min_inliers
            )));
        }
        if self.ransac.threshold_px.is_nan() || self.ransac.threshold_px <= 0.0 {
            return Err(Error::Config("ransac threshold must be positive".into()));
        }
        if !(self.ransac.confidence > 0.0 && self.ransac.confidence < 1.0) {
            return Err(Error::Config("ransac confidence must lie in (0, 1)".into()));
        }
        if !self.yaw_correction_deg.is_finite() {
            return Err(Error::Config("yaw correction must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalizationStatus {
    Localized,
    InsufficientMatches,
    NoModel,
    /// The photo could not be read or matched; see the result's message.
    Failed,
}

impl LocalizationStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            LocalizationStatus::Localized => "localized",
            LocalizationStatus::InsufficientMatches => "insufficient_matches",
            LocalizationStatus::NoModel => "no_model",
            LocalizationStatus::Failed => "failed",
        }
    }
}

impl std::fmt::Display for LocalizationStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalizationResult {
    pub status: LocalizationStatus,
    pub photo: String,
    pub best_tile_id: Option<usize>,
    pub raw_match_count: usize,
    pub inlier_count: usize,
    /// Photo corners mapped into the best tile's pixel frame.
    pub footprint: Option<[PixelPoint; 4]>,
    pub position: Option<GeoPoint>,
    pub message: Option<String>,
}

impl LocalizationResult {
    fn unlocalized(photo: &str, status: LocalizationStatus) -> Self {
        LocalizationResult {
            status,
            photo: photo.to_owned(),
            best_tile_id: None,
            raw_match_count: 0,
            inlier_count: 0,
            footprint: None,
            position: None,
            message: None,
        }
    }

    pub fn failed(photo: &str, err: &Error) -> Self {
        LocalizationResult {
            message: Some(format!("{}: {}", err.kind(), err.detail())),
            ..Self::unlocalized(photo, LocalizationStatus::Failed)
        }
    }

    pub fn is_localized(&self) -> bool {
        self.status == LocalizationStatus::Localized
    }
}

struct TileCandidate {
    /// Row in the catalog.
    index: usize,
    id: usize,
    matches: Vec<MatchPair>,
}

/// A catalog prepared for repeated localization: tile features are extracted
/// once and external bridges stay alive between photos.
pub struct Localizer {
    catalog: MapCatalog,
    cfg: LocalizerConfig,
    matcher: Matcher,
    tile_features: Vec<ImageFeatures>,
    pool: rayon::ThreadPool,
}

impl std::fmt::Debug for Localizer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Localizer")
            .field("tiles", &self.catalog.len())
            .field("cfg", &self.cfg)
            .finish()
    }
}

impl Localizer {
    pub fn new(catalog: MapCatalog, cfg: LocalizerConfig) -> Result<Self> {
        cfg.validate()?;
        if catalog.is_empty() {
            return Err(Error::Format("catalog has no tiles".into()));
        }
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.jobs)
            .build()
            .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        let matcher = Matcher::new(&cfg.matcher)?;
        let tile_features = match &matcher {
            Matcher::Builtin(b) => pool.install(|| {
                catalog
                    .tiles
                    .par_iter()
                    .map(|t| {
                        let img = load_gray(&t.image_path)?;
                        ImageFeatures::extract(&img, None, &b.detector)
                    })
                    .collect::<Result<Vec<_>>>()
            })?,
            Matcher::External(_) => Vec::new(),
        };
        Ok(Localizer {
            catalog,
            cfg,
            matcher,
            tile_features,
            pool,
        })
    }

    pub fn catalog(&self) -> &MapCatalog {
        &self.catalog
    }

    pub fn config(&self) -> &LocalizerConfig {
        &self.cfg
    }

    /// Loads and localizes one photo file.
    pub fn localize_path(&self, photo_path: &Path, meta: &PhotoMeta) -> Result<LocalizationResult> {
        let photo = load_gray(photo_path)?;
        self.localize(&photo, meta)
    }

    /// Localizes an in-memory photo; `meta` supplies its name and headings.
    pub fn localize(&self, photo: &GrayRaster, meta: &PhotoMeta) -> Result<LocalizationResult> {
        let cfg = &self.cfg;
        let resized = resize_half(photo, cfg.resize_levels)?;
        let yaw = meta.gimbal_yaw_deg + meta.drone_yaw_deg + cfg.yaw_correction_deg;
        let (rotated, mask) = rotate_expand(&resized, yaw);

        let candidates = self.match_all_tiles(&rotated, &mask)?;
        let name = meta.filename.as_str();
        let Some(best) = self.select_tile(&candidates) else {
            return Ok(LocalizationResult::unlocalized(
                name,
                LocalizationStatus::InsufficientMatches,
            ));
        };
        let tile = &self.catalog.tiles[best.index];
        let mut result = LocalizationResult {
            best_tile_id: Some(best.id),
            raw_match_count: best.matches.len(),
            ..LocalizationResult::unlocalized(name, LocalizationStatus::InsufficientMatches)
        };
        if best.matches.len() < cfg.min_raw_matches {
            return Ok(result);
        }

        result.status = LocalizationStatus::NoModel;
        let (h, report) = match ransac_homography(&best.matches, &cfg.ransac) {
            Ok(fit) => fit,
            Err(Error::NoModelFound)
            | Err(Error::InsufficientPairs(_))
            | Err(Error::DegenerateConfiguration(_)) => return Ok(result),
            Err(e) => return Err(e),
        };
        result.inlier_count = report.inlier_indices.len();
        if result.inlier_count < cfg.min_inliers {
            return Ok(result);
        }

        let Ok(footprint) = transform_quad(&h, rotated.dims()) else {
            return Ok(result);
        };
        let center = match cfg.center_mode {
            CenterMode::QuadMean => quad_centroid(&footprint),
            CenterMode::HomographyCenter => match apply_h(&h, rotated.dims().center()) {
                Ok(c) => c,
                Err(_) => return Ok(result),
            },
        };
        let position = pixel_to_geo(center, &tile.rect, tile.dims);
        if !(position.lat.is_finite() && position.lon.is_finite()) {
            return Ok(result);
        }
        result.status = LocalizationStatus::Localized;
        result.footprint = Some(footprint);
        result.position = Some(position);
        Ok(result)
    }

    fn match_all_tiles(
        &self,
        rotated: &GrayRaster,
        mask: &crate::raster::ValidityMask,
    ) -> Result<Vec<TileCandidate>> {
        let tiles = &self.catalog.tiles;
        match &self.matcher {
            Matcher::Builtin(b) => {
                let photo = ImageFeatures::extract(rotated, Some(mask), &b.detector)?;
                Ok(self.pool.install(|| {
                    tiles
                        .par_iter()
                        .zip(self.tile_features.par_iter())
                        .enumerate()
                        .map(|(index, (t, tf))| TileCandidate {
                            index,
                            id: t.id,
                            matches: match_features(&photo, tf, b),
                        })
                        .collect()
                }))
            }
            Matcher::External(ext) => {
                let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                let photo_path: PathBuf = tmp.path().join("photo.png");
                rotated.save_png(&photo_path)?;
                self.pool.install(|| {
                    tiles
                        .par_iter()
                        .enumerate()
                        .map(|(index, t)| {
                            Ok(TileCandidate {
                                index,
                                id: t.id,
                                matches: ext.match_files(
                                    &photo_path,
                                    rotated.dims(),
                                    &t.image_path,
                                    t.dims,
                                )?,
                            })
                        })
                        .collect()
                })
            }
        }
    }

    /// Highest score wins; equal scores go to the lowest tile id.
    fn select_tile<'a>(&self, candidates: &'a [TileCandidate]) -> Option<&'a TileCandidate> {
        let score = |c: &TileCandidate| match self.cfg.selection {
            TileSelection::RawMatches => c.matches.len(),
            TileSelection::Inliers => {
                if c.matches.len() < self.cfg.min_raw_matches {
                    0
                } else {
                    ransac_homography(&c.matches, &self.cfg.ransac)
                        .map(|(_, r)| r.inlier_indices.len())
                        .unwrap_or(0)
                }
            }
        };
        let scored: Vec<(usize, usize)> = self
            .pool
            .install(|| candidates.par_iter().map(|c| (score(c), c.id)).collect());
        let (best_score, best_id) = scored
            .into_iter()
            .max_by(|a, b| a.0.cmp(&b.0).then(b.1.cmp(&a.1)))?;
        if best_score == 0 && candidates.iter().all(|c| c.matches.is_empty()) {
            return None;
        }
        candidates.iter().find(|c| c.id == best_id)
    }

    /// Localizes every metadata row; per-photo failures become
    /// [`LocalizationStatus::Failed`] results rather than errors.
    pub fn localize_rows(&self, photo_dir: &Path, rows: &[PhotoMeta]) -> Vec<LocalizationResult> {
        self.pool.install(|| {
            rows.par_iter()
                .map(|meta| {
                    let path = photo_dir.join(&meta.filename);
                    self.localize_path(&path, meta)
                        .unwrap_or_else(|e| LocalizationResult::failed(&meta.filename, &e))
                })
                .collect()
        })
    }
}

/// Localizes a single photo file against `catalog`.
pub fn localize_photo(
    photo_path: &Path,
    meta: &PhotoMeta,
    catalog: &MapCatalog,
    cfg: &LocalizerConfig,
) -> Result<LocalizationResult> {
    // decode the photo first so its errors take precedence over catalog work
    let photo = load_gray(photo_path)?;
    Localizer::new(catalog.clone(), cfg.clone())?.localize(&photo, meta)
}

/// Localizes every photo listed in `meta_csv`, in row order.
pub fn localize_dataset(
    photo_dir: &Path,
    meta_csv: &Path,
    catalog: &MapCatalog,
    cfg: &LocalizerConfig,
) -> Result<Vec<LocalizationResult>> {
    let rows = read_metadata(meta_csv)?;
    if rows.is_empty() {
        return Ok(Vec::new());
    }
    let localizer = Localizer::new(catalog.clone(), cfg.clone())?;
    Ok(localizer.localize_rows(photo_dir, &rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn metadata_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        let rows = vec![
            PhotoMeta {
                filename: "a.jpg".into(),
                gimbal_yaw_deg: -12.5,
                drone_yaw_deg: 3.0,
                gnss: Some(GeoPoint {
                    lat: 60.403091,
                    lon: 22.461824,
                }),
                altitude_m: Some(120.0),
            },
            PhotoMeta::new("b.png"),
        ];
        write_metadata(&path, &rows).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("filename,gimbal_yaw_deg,drone_yaw_deg,gnss_lat,gnss_lon,altitude_m\n"));
        assert!(text.contains("b.png,0,0,,,\n"));
        assert_eq!(read_metadata(&path).unwrap(), rows);
    }

    #[test]
    fn metadata_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("meta.csv");
        let header = METADATA_HEADER.join(",");
        std::fs::write(&path, format!("{header}\na.png,1,2,60.0,,\n")).unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::Format(_))));
        std::fs::write(&path, format!("{header}\na.png,north,2,,,\n")).unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::Format(_))));
        std::fs::write(&path, "name,yaw\n").unwrap();
        assert!(matches!(read_metadata(&path), Err(Error::Format(_))));
        std::fs::write(&path, format!("{header}\n")).unwrap();
        assert!(read_metadata(&path).unwrap().is_empty());
        assert!(matches!(
            read_metadata(&dir.path().join("none.csv")),
            Err(Error::Io { .. })
        ));
    }

    #[test]
    fn config_floors() {
        let mut cfg = LocalizerConfig::default();
        assert!(cfg.validate().is_ok());
        cfg.min_inliers = 3;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
        cfg.min_inliers = 10;
        cfg.min_raw_matches = 2;
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }
}
