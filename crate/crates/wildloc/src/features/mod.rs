//! Feature detection, description and matching between a drone photo and a
//! satellite tile.
//!
//! The built-in matcher is a classical pipeline: segment-test corners, 256-bit
//! intensity-comparison descriptors on a smoothed 31x31 patch, and Hamming
//! matching with a ratio test and cross-check. It is neither scale- nor
//! rotation-invariant; the localizer compensates by rotating and resizing the
//! photo first. A learned matcher can be attached instead through the
//! external bridge protocol in [`bridge`].

pub mod bridge;
mod brief;
mod fast;
mod matching;

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo::PixelPoint;
use crate::raster::{GrayRaster, ValidityMask};

pub use bridge::ExternalMatcher;
pub use brief::compute_descriptors;
pub use fast::detect_keypoints;
pub use matching::{match_descriptors, IndexMatch};

/// Half-width of the square descriptor patch (31x31).
pub const PATCH_RADIUS: u32 = 15;
/// Half-width of the box filter applied before intensity comparisons (5x5).
pub const SMOOTH_RADIUS: u32 = 2;
/// Detector keeps this distance to every border so each patch fits.
pub const DESCRIPTOR_MARGIN: u32 = PATCH_RADIUS + 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Keypoint {
    pub pos: PixelPoint,
    pub score: f64,
}

/// 256-bit binary signature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Descriptor(pub [u64; 4]);

impl Descriptor {
    #[inline]
    pub fn hamming(&self, other: &Descriptor) -> u32 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

/// A correspondence from a drone-photo pixel `a` to a tile pixel `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchPair {
    pub a: PixelPoint,
    pub b: PixelPoint,
    pub confidence: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DetectorConfig {
    /// Minimum intensity difference between circle pixels and the center.
    pub threshold: u8,
    pub max_count: usize,
    /// Contiguous circle pixels required for a corner.
    pub min_arc: u8,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            threshold: 20,
            max_count: 2000,
            min_arc: 9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuiltinMatcherConfig {
    pub detector: DetectorConfig,
    pub ratio: f64,
    pub cross_check: bool,
}

impl Default for BuiltinMatcherConfig {
    fn default() -> Self {
        BuiltinMatcherConfig {
            detector: DetectorConfig::default(),
            ratio: 0.8,
            cross_check: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExternalMatcherConfig {
    /// Program and arguments of the bridge process.
    pub command: Vec<String>,
    pub pool_size: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub enum MatcherConfig {
    Builtin(BuiltinMatcherConfig),
    External(ExternalMatcherConfig),
}

impl Default for MatcherConfig {
    fn default() -> Self {
        MatcherConfig::Builtin(BuiltinMatcherConfig::default())
    }
}

/// Keypoints and their descriptors for one image, index-aligned.
#[derive(Debug, Clone, Default)]
pub struct ImageFeatures {
    pub keypoints: Vec<Keypoint>,
    pub descriptors: Vec<Descriptor>,
}

impl ImageFeatures {
    pub fn extract(img: &GrayRaster, mask: Option<&ValidityMask>, cfg: &DetectorConfig) -> Result<Self> {
        let keypoints = detect_keypoints(img, mask, cfg);
        let descriptors = compute_descriptors(img, &keypoints)?;
        Ok(ImageFeatures {
            keypoints,
            descriptors,
        })
    }

    pub fn len(&self) -> usize {
        self.keypoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keypoints.is_empty()
    }
}

/// Matches precomputed features; points come back in each image's frame.
pub fn match_features(a: &ImageFeatures, b: &ImageFeatures, cfg: &BuiltinMatcherConfig) -> Vec<MatchPair> {
    match_descriptors(&a.descriptors, &b.descriptors, cfg.ratio, cfg.cross_check)
        .into_iter()
        .map(|m| MatchPair {
            a: a.keypoints[m.index_a].pos,
            b: b.keypoints[m.index_b].pos,
            confidence: m.confidence,
        })
        .collect()
}

/// An image handed to a matcher. The external matcher needs a file; when
/// `path` is absent the raster is written to a temporary PNG.
#[derive(Debug, Clone, Copy)]
pub struct MatchImage<'a> {
    pub raster: &'a GrayRaster,
    pub mask: Option<&'a ValidityMask>,
    pub path: Option<&'a Path>,
}

impl<'a> MatchImage<'a> {
    pub fn new(raster: &'a GrayRaster) -> Self {
        MatchImage {
            raster,
            mask: None,
            path: None,
        }
    }

    pub fn with_mask(mut self, mask: &'a ValidityMask) -> Self {
        self.mask = Some(mask);
        self
    }

    pub fn with_path(mut self, path: &'a Path) -> Self {
        self.path = Some(path);
        self
    }
}

/// A ready-to-use matcher; the external variant owns its bridge processes.
#[derive(Debug)]
pub enum Matcher {
    Builtin(BuiltinMatcherConfig),
    External(ExternalMatcher),
}

impl Matcher {
    /// Builds the matcher, spawning and handshaking bridges if external.
    pub fn new(cfg: &MatcherConfig) -> Result<Self> {
        match cfg {
            MatcherConfig::Builtin(b) => Ok(Matcher::Builtin(*b)),
            MatcherConfig::External(e) => {
                ExternalMatcher::spawn(&e.command, e.pool_size).map(Matcher::External)
            }
        }
    }

    pub fn match_images(&self, a: &MatchImage<'_>, b: &MatchImage<'_>) -> Result<Vec<MatchPair>> {
        match self {
            Matcher::Builtin(cfg) => {
                let fa = ImageFeatures::extract(a.raster, a.mask, &cfg.detector)?;
                let fb = ImageFeatures::extract(b.raster, b.mask, &cfg.detector)?;
                Ok(match_features(&fa, &fb, cfg))
            }
            Matcher::External(ext) => {
                let tmp = tempfile::tempdir().map_err(|e| Error::io(std::env::temp_dir(), e))?;
                let pa = materialize(a, tmp.path(), "a.png")?;
                let pb = materialize(b, tmp.path(), "b.png")?;
                ext.match_files(&pa, a.raster.dims(), &pb, b.raster.dims())
            }
        }
    }
}

fn materialize(img: &MatchImage<'_>, dir: &Path, name: &str) -> Result<PathBuf> {
    match img.path {
        Some(p) => Ok(p.to_path_buf()),
        None => {
            let p = dir.join(name);
            img.raster.save_png(&p)?;
            Ok(p)
        }
    }
}

/// One-shot matching of two images with the configured matcher.
pub fn match_images(a: &MatchImage<'_>, b: &MatchImage<'_>, cfg: &MatcherConfig) -> Result<Vec<MatchPair>> {
    Matcher::new(cfg)?.match_images(a, b)
}
