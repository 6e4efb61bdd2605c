//! Batch localization of a synthetic dataset, then the error summary and the
//! report files (results CSV, key=value summary, plot data).
//!
//! cargo run --release --example evaluate_report [report_dir]

use std::path::PathBuf;

use wildloc::evalkit::{compute_errors, emit_report, summarize, summary_text, DEFAULT_THRESHOLD_M};
use wildloc::geo::ImageDims;
use wildloc::localizer::{localize_dataset, LocalizerConfig};
use wildloc::synth::{emit_dataset, generate_world, random_view_specs, SynthWorld, ViewSampling};

fn main() -> wildloc::Result<()> {
    let report_dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("wildloc_report"));
    let data_dir = tempfile::tempdir().expect("temp dir");

    let dims = ImageDims::new(1024, 1024)?;
    let world = generate_world(21, dims, &SynthWorld::default_rect(dims, 0.5)?, 0.5)?;
    let sampling = ViewSampling {
        count: 12,
        // hard views: heavy noise and large headings
        noise_sigma: 12.0,
        max_abs_yaw_deg: 45.0,
        ..ViewSampling::default()
    };
    let specs = random_view_specs(&world, &sampling, 22)?;
    let data = emit_dataset(&world, &specs, data_dir.path(), ImageDims::new(512, 512)?, 0.25)?;

    let results = localize_dataset(
        data_dir.path(),
        &data.metadata_csv,
        &data.catalog,
        &LocalizerConfig::default(),
    )?;
    let summary = summarize(&compute_errors(&results, &data.truth)?, DEFAULT_THRESHOLD_M);
    let files = emit_report(&results, &data.truth, &summary, &report_dir)?;

    print!("{}", summary_text(&summary));
    println!(
        "report written to {}",
        files.results_csv.parent().unwrap().display()
    );
    Ok(())
}
