//! Ground-truth comparison, summary metrics and report files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::geo::{haversine_m, GeoPoint};
use crate::localizer::{LocalizationResult, PhotoMeta};

pub const DEFAULT_THRESHOLD_M: f64 = 50.0;

pub const RESULTS_HEADER: &str = "filename,status,best_tile_id,raw_matches,inliers,lat,lon,error_m";
pub const RESULTS_FILE: &str = "results.csv";
pub const SUMMARY_FILE: &str = "summary.txt";
pub const ERROR_PLOT_FILE: &str = "error_plot.dat";
pub const COORDS_PLOT_FILE: &str = "coords_plot.dat";

#[derive(Debug, Clone, PartialEq)]
pub struct PhotoError {
    pub filename: String,
    /// Absent when the photo was not localized.
    pub error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalSummary {
    pub n_total: usize,
    pub n_localized: usize,
    /// Photos whose error is strictly below the threshold.
    pub n_success: usize,
    pub success_threshold_m: f64,
    /// Mean error over the successful photos.
    pub mae_m: Option<f64>,
    /// Mean error over every localized photo, successful or not.
    pub mae_all_localized_m: Option<f64>,
    pub errors: Vec<PhotoError>,
}

impl EvalSummary {
    pub fn success_rate(&self) -> f64 {
        if self.n_total == 0 {
            0.0
        } else {
            self.n_success as f64 / self.n_total as f64
        }
    }
}

/// Pairs each result with the truth row of the same filename.
pub fn compute_errors(results: &[LocalizationResult], truth: &[PhotoMeta]) -> Result<Vec<PhotoError>> {
    let by_name: HashMap<&str, &PhotoMeta> = truth.iter().map(|m| (m.filename.as_str(), m)).collect();
    results
        .iter()
        .map(|r| {
            let error_m = match r.position {
                Some(pos) if r.is_localized() => {
                    let gnss = by_name
                        .get(r.photo.as_str())
                        .and_then(|m| m.gnss)
                        .ok_or_else(|| Error::MissingGroundTruth(r.photo.clone()))?;
                    Some(haversine_m(pos, gnss))
                }
                _ => None,
            };
            Ok(PhotoError {
                filename: r.photo.clone(),
                error_m,
            })
        })
        .collect()
}

/// Mean of ascending `sorted`, offset by the minimum so equal values
/// average to themselves exactly.
fn mean(sorted: &[f64]) -> Option<f64> {
    let lo = *sorted.first()?;
    let excess: f64 = sorted.iter().map(|v| v - lo).sum();
    Some(lo + excess / sorted.len() as f64)
}

/// Counts and mean errors. Sums run over sorted values so the result does
/// not depend on photo order.
pub fn summarize(errors: &[PhotoError], threshold_m: f64) -> EvalSummary {
    assert!(threshold_m > 0.0, "threshold must be positive");
    let mut localized: Vec<f64> = errors.iter().filter_map(|e| e.error_m).collect();
    localized.sort_by(f64::total_cmp);
    let successes: Vec<f64> = localized.iter().copied().filter(|&e| e < threshold_m).collect();
    EvalSummary {
        n_total: errors.len(),
        n_localized: localized.len(),
        n_success: successes.len(),
        success_threshold_m: threshold_m,
        mae_m: mean(&successes),
        mae_all_localized_m: mean(&localized),
        errors: errors.to_vec(),
    }
}

/// Convenience for bare error values, all treated as localized.
pub fn summarize_values(errors: &[f64], threshold_m: f64) -> EvalSummary {
    let errors: Vec<PhotoError> = errors
        .iter()
        .enumerate()
        .map(|(i, &e)| PhotoError {
            filename: format!("photo_{i}"),
            error_m: Some(e),
        })
        .collect();
    summarize(&errors, threshold_m)
}

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// Results CSV text; `errors` aligns with `results` by index.
pub fn results_csv(results: &[LocalizationResult], errors: &[PhotoError]) -> String {
    let mut out = format!("{RESULTS_HEADER}\n");
    for (i, r) in results.iter().enumerate() {
        let (lat, lon) = match r.position {
            Some(p) => (format!("{:.9}", p.lat), format!("{:.9}", p.lon)),
            None => (String::new(), String::new()),
        };
        let err = errors
            .get(i)
            .and_then(|e| e.error_m)
            .map(|e| format!("{e:.3}"))
            .unwrap_or_default();
        let localized = r.is_localized();
        writeln!(
            out,
            "{},{},{},{},{},{lat},{lon},{err}",
            r.photo,
            r.status,
            opt(r.best_tile_id),
            r.raw_match_count,
            if localized || r.inlier_count > 0 {
                r.inlier_count.to_string()
            } else {
                String::new()
            },
        )
        .unwrap();
    }
    out
}

pub fn summary_text(s: &EvalSummary) -> String {
    let fmt = |v: Option<f64>| v.map(|v| format!("{v:.3}")).unwrap_or_default();
    format!(
        "n_total={}\nn_localized={}\nn_success={}\nsuccess_threshold_m={}\nsuccess_rate={:.4}\nmae_m={}\nmae_all_localized_m={}\n",
        s.n_total,
        s.n_localized,
        s.n_success,
        s.success_threshold_m,
        s.success_rate(),
        fmt(s.mae_m),
        fmt(s.mae_all_localized_m),
    )
}

/// Photo index against error, localized photos only.
pub fn error_plot(s: &EvalSummary) -> String {
    let mut out = String::from("# photo_index error_m\n");
    for (i, e) in s.errors.iter().enumerate() {
        if let Some(err) = e.error_m {
            writeln!(out, "{i} {err:.3}").unwrap();
        }
    }
    out
}

/// Computed and true coordinates, localized photos with truth only.
pub fn coords_plot(results: &[LocalizationResult], truth: &[PhotoMeta]) -> String {
    let by_name: HashMap<&str, GeoPoint> = truth
        .iter()
        .filter_map(|m| m.gnss.map(|g| (m.filename.as_str(), g)))
        .collect();
    let mut out = String::from("# lat lon truth_lat truth_lon\n");
    for r in results {
        if let (Some(p), Some(t)) = (r.position, by_name.get(r.photo.as_str())) {
            writeln!(out, "{:.9} {:.9} {:.9} {:.9}", p.lat, p.lon, t.lat, t.lon).unwrap();
        }
    }
    out
}

/// Paths written by [`emit_report`].
#[derive(Debug, Clone)]
pub struct ReportFiles {
    pub results_csv: PathBuf,
    pub summary: PathBuf,
    pub error_plot: PathBuf,
    pub coords_plot: PathBuf,
}

pub fn emit_report(
    results: &[LocalizationResult],
    truth: &[PhotoMeta],
    summary: &EvalSummary,
    out_dir: &Path,
) -> Result<ReportFiles> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let files = ReportFiles {
        results_csv: out_dir.join(RESULTS_FILE),
        summary: out_dir.join(SUMMARY_FILE),
        error_plot: out_dir.join(ERROR_PLOT_FILE),
        coords_plot: out_dir.join(COORDS_PLOT_FILE),
    };
    let write = |p: &Path, text: String| std::fs::write(p, text).map_err(|e| Error::io(p, e));
    write(&files.results_csv, results_csv(results, &summary.errors))?;
    write(&files.summary, summary_text(summary))?;
    write(&files.error_plot, error_plot(summary))?;
    write(&files.coords_plot, coords_plot(results, truth))?;
    Ok(files)
}
