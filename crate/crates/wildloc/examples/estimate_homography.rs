//! Normalized DLT on exact correspondences, then RANSAC on noisy ones with
//! a third of them replaced by outliers.
//!
//! cargo run --example estimate_homography

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use wildloc::features::MatchPair;
use wildloc::geo::{ImageDims, PixelPoint};
use wildloc::homography::{
    apply_h, estimate_dlt, ransac_homography, transform_quad, Homography, RansacConfig,
};

fn main() -> wildloc::Result<()> {
    let truth = Homography::from_matrix(Matrix3::new(0.9, -0.2, 140.0, 0.25, 0.95, 60.0, 1e-5, -2e-5, 1.0))?;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs: Vec<MatchPair> = (0..150)
        .map(|_| {
            let a = PixelPoint::new(rng.random_range(0.0..640.0), rng.random_range(0.0..480.0));
            let b = apply_h(&truth, a)?;
            Ok(MatchPair {
                a,
                b,
                confidence: 1.0,
            })
        })
        .collect::<wildloc::Result<_>>()?;

    let exact = estimate_dlt(&pairs)?;
    println!("DLT on exact pairs:\n{}", exact.matrix());

    for (i, p) in pairs.iter_mut().enumerate() {
        if i % 3 == 0 {
            p.b = PixelPoint::new(rng.random_range(0.0..1000.0), rng.random_range(0.0..1000.0));
        } else {
            p.b.x += rng.random_range(-0.5..0.5);
            p.b.y += rng.random_range(-0.5..0.5);
        }
    }
    let cfg = RansacConfig {
        threshold_px: 3.0,
        ..RansacConfig::default()
    };
    let (h, report) = ransac_homography(&pairs, &cfg)?;
    println!(
        "RANSAC: {} inliers of {}, {} iterations, rms {:.3} px (best minimal sample {:.3} px)",
        report.inlier_indices.len(),
        pairs.len(),
        report.iterations_run,
        report.reprojection_rms,
        report.minimal_sample_rms
    );
    let quad = transform_quad(&h, ImageDims::new(640, 480)?)?;
    for (name, q) in ["top-left", "top-right", "bottom-right", "bottom-left"]
        .iter()
        .zip(quad)
    {
        println!("{name:>12}: ({:.1}, {:.1})", q.x, q.y);
    }
    Ok(())
}
