use nalgebra::{DMatrix, Matrix2, Matrix3};

use crate::error::{Error, Result};
use crate::features::MatchPair;
use crate::geo::PixelPoint;

use super::Homography;

/// Ratio of singular values below which the system counts as rank-deficient.
const CONDITION_EPS: f64 = 1e-10;

/// Similarity that moves the centroid to the origin and scales the mean
/// distance from it to sqrt(2).
fn normalizer(points: &[PixelPoint]) -> Result<Matrix3<f64>> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points.iter().map(|p| (p.x - cx).hypot(p.y - cy)).sum::<f64>() / n;
    if !mean_dist.is_finite() || mean_dist < 1e-12 {
        return Err(Error::DegenerateConfiguration(
            "correspondence points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);

    // all points on one line: the normalized scatter matrix loses rank
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        let (x, y) = (s * (p.x - cx), s * (p.y - cy));
        sxx += x * x;
        sxy += x * y;
        syy += y * y;
    }
    let eig = Matrix2::new(sxx, sxy, sxy, syy).symmetric_eigenvalues();
    let (lo, hi) = (eig.min(), eig.max());
    if hi <= 0.0 || lo / hi < CONDITION_EPS {
        return Err(Error::DegenerateConfiguration(
            "correspondence points are collinear".into(),
        ));
    }
    Ok(t)
}

fn transform(t: &Matrix3<f64>, p: PixelPoint) -> (f64, f64) {
    (
        t[(0, 0)] * p.x + t[(0, 1)] * p.y + t[(0, 2)],
        t[(1, 0)] * p.x + t[(1, 1)] * p.y + t[(1, 2)],
    )
}

/// Normalized direct linear transform over all `pairs` (`a` maps to `b`).
///
/// Minimizes the algebraic residual `|A h|` subject to `|h| = 1` via the
/// right singular vector of the smallest singular value.
pub fn estimate_dlt(pairs: &[MatchPair]) -> Result<Homography> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientPairs(pairs.len()));
    }
    let src: Vec<PixelPoint> = pairs.iter().map(|p| p.a).collect();
    let dst: Vec<PixelPoint> = pairs.iter().map(|p| p.b).collect();
    let ta = normalizer(&src)?;
    let tb = normalizer(&dst)?;

    // at least 9 rows so the SVD yields the full right basis
    let rows = (2 * pairs.len()).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src.iter().zip(&dst).enumerate() {
        let (x, y) = transform(&ta, *s);
        let (u, v) = transform(&tb, *d);
        let r = 2 * i;
        a.row_mut(r)
            .copy_from_slice(&[-x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u]);
        a.row_mut(r + 1)
            .copy_from_slice(&[0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v]);
    }

    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let smallest = order[0];
    let second = order[1];
    let largest = order[order.len() - 1];
    if sv[largest] <= 0.0 || sv[second] / sv[largest] < CONDITION_EPS {
        return Err(Error::DegenerateConfiguration(
            "linear system has a multi-dimensional null space".into(),
        ));
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8]);
    let tb_inv = tb.try_inverse().expect("normalizing similarity is invertible");
    Homography::from_matrix(tb_inv * hn * ta)
}
