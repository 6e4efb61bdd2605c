//! Layered settings: built-in defaults, then a `key = value` file, then
//! command-line overrides.

use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::evalkit::DEFAULT_THRESHOLD_M;
use crate::features::{BuiltinMatcherConfig, DetectorConfig, ExternalMatcherConfig, MatcherConfig};
use crate::homography::{RansacConfig, ReprojectionError};
use crate::localizer::{CenterMode, LocalizerConfig, TileSelection};

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "WILDLOC_CONFIG";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MatcherKind {
    #[default]
    Builtin,
    External,
}

/// Every tunable, flat. Keys in config files are the field names.
#[derive(Debug, Clone, PartialEq)]
pub struct Settings {
    pub yaw_correction: f64,
    pub min_raw_matches: usize,
    pub min_inliers: usize,
    pub ransac_threshold: f64,
    pub ransac_max_iters: usize,
    pub ransac_confidence: f64,
    pub ransac_error: ReprojectionError,
    pub seed: u64,
    pub matcher: MatcherKind,
    /// External matcher argv, whitespace separated.
    pub matcher_cmd: String,
    pub matcher_pool: usize,
    pub fast_threshold: u8,
    pub fast_min_arc: u8,
    pub max_keypoints: usize,
    pub ratio: f64,
    pub cross_check: bool,
    pub resize_levels: u32,
    pub center_mode: CenterMode,
    pub tile_selection: TileSelection,
    pub jobs: usize,
    pub threshold_m: f64,
}

impl Default for Settings {
    fn default() -> Self {
        let loc = LocalizerConfig::default();
        let det = DetectorConfig::default();
        let bm = BuiltinMatcherConfig::default();
        Settings {
            yaw_correction: loc.yaw_correction_deg,
            min_raw_matches: loc.min_raw_matches,
            min_inliers: loc.min_inliers,
            ransac_threshold: loc.ransac.threshold_px,
            ransac_max_iters: loc.ransac.max_iters,
            ransac_confidence: loc.ransac.confidence,
            ransac_error: loc.ransac.error,
            seed: loc.ransac.seed,
            matcher: MatcherKind::Builtin,
            matcher_cmd: String::new(),
            matcher_pool: 1,
            fast_threshold: det.threshold,
            fast_min_arc: det.min_arc,
            max_keypoints: det.max_count,
            ratio: bm.ratio,
            cross_check: bm.cross_check,
            resize_levels: loc.resize_levels,
            center_mode: loc.center_mode,
            tile_selection: loc.selection,
            jobs: loc.jobs,
            threshold_m: DEFAULT_THRESHOLD_M,
        }
    }
}

pub const KEYS: [&str; 21] = [
    "yaw_correction",
    "min_raw_matches",
    "min_inliers",
    "ransac_threshold",
    "ransac_max_iters",
    "ransac_confidence",
    "ransac_error",
    "seed",
    "matcher",
    "matcher_cmd",
    "matcher_pool",
    "fast_threshold",
    "fast_min_arc",
    "max_keypoints",
    "ratio",
    "cross_check",
    "resize_levels",
    "center_mode",
    "tile_selection",
    "jobs",
    "threshold_m",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::Config(format!("invalid value for {key}: {value:?}")))
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            Error::Config(format!("{key} must be one of {}, got {value:?}", names.join("|")))
        })
}

impl Settings {
    /// Sets one key; `-` and `_` are interchangeable in key names.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim().replace('-', "_");
        let v = value.trim();
        let k = key.as_str();
        match k {
            "yaw_correction" => self.yaw_correction = parse(k, v)?,
            "min_raw_matches" => self.min_raw_matches = parse(k, v)?,
            "min_inliers" => self.min_inliers = parse(k, v)?,
            "ransac_threshold" => self.ransac_threshold = parse(k, v)?,
            "ransac_max_iters" => self.ransac_max_iters = parse(k, v)?,
            "ransac_confidence" => self.ransac_confidence = parse(k, v)?,
            "ransac_error" => {
                self.ransac_error = choice(
                    k,
                    v,
                    &[
                        ("forward", ReprojectionError::Forward),
                        ("symmetric", ReprojectionError::Symmetric),
                    ],
                )?
            }
            "seed" => self.seed = parse(k, v)?,
            "matcher" => {
                self.matcher = choice(
                    k,
                    v,
                    &[
                        ("builtin", MatcherKind::Builtin),
                        ("external", MatcherKind::External),
                    ],
                )?
            }
            "matcher_cmd" => self.matcher_cmd = v.to_owned(),
            "matcher_pool" => self.matcher_pool = parse(k, v)?,
            "fast_threshold" => self.fast_threshold = parse(k, v)?,
            "fast_min_arc" => self.fast_min_arc = parse(k, v)?,
            "max_keypoints" => self.max_keypoints = parse(k, v)?,
            "ratio" => self.ratio = parse(k, v)?,
            "cross_check" => self.cross_check = parse(k, v)?,
            "resize_levels" => self.resize_levels = parse(k, v)?,
            "center_mode" => {
                self.center_mode = choice(
                    k,
                    v,
                    &[
                        ("quad-mean", CenterMode::QuadMean),
                        ("homography-center", CenterMode::HomographyCenter),
                    ],
                )?
            }
            "tile_selection" => {
                self.tile_selection = choice(
                    k,
                    v,
                    &[
                        ("raw-matches", TileSelection::RawMatches),
                        ("inliers", TileSelection::Inliers),
                    ],
                )?
            }
            "jobs" => self.jobs = parse(k, v)?,
            "threshold_m" => self.threshold_m = parse(k, v)?,
            _ => return Err(Error::Config(format!("unknown key {k:?}"))),
        }
        Ok(())
    }

    /// Applies `key = value` lines; blank lines and `#` comments are skipped.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<()> {
        for (n, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("{origin}:{}: expected key = value", n + 1)))?;
            self.set(key, value)
                .map_err(|e| Error::Config(format!("{origin}:{}: {}", n + 1, e.detail())))?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, &path.display().to_string())
    }

    /// Defaults overlaid by `explicit`, or else by the file named in
    /// [`CONFIG_ENV`], if any.
    pub fn load(explicit: Option<&Path>) -> Result<Settings> {
        let mut s = Settings::default();
        let path: Option<PathBuf> = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV)
                .filter(|v| !v.is_empty())
                .map(PathBuf::from),
        };
        if let Some(p) = path {
            s.apply_file(&p)?;
        }
        Ok(s)
    }

    pub fn matcher_config(&self) -> Result<MatcherConfig> {
        match self.matcher {
            MatcherKind::Builtin => {
                if !(self.ratio > 0.0 && self.ratio <= 1.0) {
                    return Err(Error::Config(format!(
                        "ratio must lie in (0, 1], got {}",
                        self.ratio
                    )));
                }
                if !(1..=16).contains(&self.fast_min_arc) {
                    return Err(Error::Config(format!(
                        "fast_min_arc must lie in 1..=16, got {}",
                        self.fast_min_arc
                    )));
                }
                Ok(MatcherConfig::Builtin(BuiltinMatcherConfig {
                    detector: DetectorConfig {
                        threshold: self.fast_threshold,
                        max_count: self.max_keypoints,
                        min_arc: self.fast_min_arc,
                    },
                    ratio: self.ratio,
                    cross_check: self.cross_check,
                }))
            }
            MatcherKind::External => {
                let command: Vec<String> = self.matcher_cmd.split_whitespace().map(str::to_owned).collect();
                if command.is_empty() {
                    return Err(Error::Config("matcher external needs matcher_cmd".into()));
                }
                if self.matcher_pool == 0 {
                    return Err(Error::Config("matcher_pool must be at least 1".into()));
                }
                Ok(MatcherConfig::External(ExternalMatcherConfig {
                    command,
                    pool_size: self.matcher_pool,
                }))
            }
        }
    }

    pub fn ransac_config(&self) -> RansacConfig {
        RansacConfig {
            threshold_px: self.ransac_threshold,
            max_iters: self.ransac_max_iters,
            confidence: self.ransac_confidence,
            seed: self.seed,
            error: self.ransac_error,
        }
    }

    pub fn localizer_config(&self) -> Result<LocalizerConfig> {
        let cfg = LocalizerConfig {
            yaw_correction_deg: self.yaw_correction,
            min_raw_matches: self.min_raw_matches,
            min_inliers: self.min_inliers,
            ransac: self.ransac_config(),
            matcher: self.matcher_config()?,
            resize_levels: self.resize_levels,
            center_mode: self.center_mode,
            selection: self.tile_selection,
            jobs: self.jobs,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_library_defaults() {
        let s = Settings::default();
        assert_eq!(s.localizer_config().unwrap(), LocalizerConfig::default());
        assert_eq!(s.threshold_m, 50.0);
    }

    #[test]
    fn file_overrides_and_comments() {
        let mut s = Settings::default();
        s.apply_text(
            "# paper flight\nyaw_correction = 15\n\nmin-inliers=12\nmatcher = external\nmatcher_cmd = python3 stub.py --fast\ncenter_mode = homography-center\n",
            "test",
        )
        .unwrap();
        assert_eq!(s.yaw_correction, 15.0);
        assert_eq!(s.min_inliers, 12);
        match s.matcher_config().unwrap() {
            MatcherConfig::External(e) => assert_eq!(e.command, ["python3", "stub.py", "--fast"]),
            other => panic!("{other:?}"),
        }
        assert_eq!(s.center_mode, CenterMode::HomographyCenter);
    }

    #[test]
    fn every_key_is_settable() {
        let s = Settings::default();
        for key in KEYS {
            let mut t = s.clone();
            let value = match key {
                "ransac_error" => "symmetric",
                "matcher" => "builtin",
                "matcher_cmd" => "x",
                "cross_check" => "false",
                "center_mode" => "quad-mean",
                "tile_selection" => "inliers",
                _ => "7",
            };
            t.set(key, value).unwrap_or_else(|e| panic!("{key}: {e}"));
        }
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let mut s = Settings::default();
        assert!(matches!(
            s.apply_text("colour = red\n", "t"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            s.apply_text("min_inliers\n", "t"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            s.apply_text("min_inliers = many\n", "t"),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            s.apply_text("matcher = magic\n", "t"),
            Err(Error::Config(_))
        ));
        s.min_inliers = 2;
        assert!(matches!(s.localizer_config(), Err(Error::Config(_))));
        let s = Settings {
            matcher: MatcherKind::External,
            ..Settings::default()
        };
        assert!(matches!(s.matcher_config(), Err(Error::Config(_))));
    }
}
