//! Corner detection, binary descriptors and ratio-tested matching between a
//! synthetic view and the window it was cut from.
//!
//! cargo run --release --example match_features

use wildloc::features::{
    detect_keypoints, match_features, BuiltinMatcherConfig, DetectorConfig, ImageFeatures,
};
use wildloc::geo::{pixel_to_geo, ImageDims, PixelPoint};
use wildloc::raster::rotate_expand;
use wildloc::synth::{generate_world, sample_view, SynthWorld, ViewSpec};

fn main() -> wildloc::Result<()> {
    let dims = ImageDims::new(768, 768)?;
    let world = generate_world(3, dims, &SynthWorld::default_rect(dims, 0.5)?, 0.5)?;
    let center = pixel_to_geo(PixelPoint::new(384.0, 384.0), &world.rect, dims);
    let mut spec = ViewSpec::new(center, 20.0, ImageDims::new(400, 300)?);
    spec.noise_sigma = 4.0;
    let (photo, meta) = sample_view(&world, &spec, "view.png")?;

    let det = DetectorConfig::default();
    println!(
        "world keypoints: {}",
        detect_keypoints(&world.raster, None, &det).len()
    );

    // undo the heading so the descriptors line up
    let (upright, mask) = rotate_expand(&photo, meta.gimbal_yaw_deg);
    let cfg = BuiltinMatcherConfig::default();
    let fa = ImageFeatures::extract(&upright, Some(&mask), &cfg.detector)?;
    let fb = ImageFeatures::extract(&world.raster, None, &cfg.detector)?;
    let matches = match_features(&fa, &fb, &cfg);
    println!(
        "photo features: {}, world features: {}, matches: {}",
        fa.len(),
        fb.len(),
        matches.len()
    );

    // a correct match shifts by the same offset everywhere
    let offset = |m: &wildloc::features::MatchPair| (m.b.x - m.a.x, m.b.y - m.a.y);
    let mut dx: Vec<f64> = matches.iter().map(|m| offset(m).0).collect();
    dx.sort_by(f64::total_cmp);
    if let Some(median) = dx.get(dx.len() / 2) {
        let agree = matches
            .iter()
            .filter(|m| (offset(m).0 - median).abs() < 3.0)
            .count();
        println!(
            "{agree} of {} matches agree on the median x offset {median:.1}",
            matches.len()
        );
    }
    Ok(())
}
