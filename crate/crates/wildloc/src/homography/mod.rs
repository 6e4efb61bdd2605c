//! Planar homographies from drone-photo pixels to tile pixels.

mod dlt;
mod ransac;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geo::{ImageDims, PixelPoint};

pub use dlt::estimate_dlt;
pub use ransac::{ransac_homography, RansacConfig, RansacReport, ReprojectionError};

/// 3x3 projective transform, defined up to scale.
///
/// Stored with `m[(2, 2)] = 1` when that entry is not vanishingly small,
/// otherwise scaled to unit Frobenius norm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn identity() -> Self {
        Homography {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(tx: f64, ty: f64) -> Self {
        Homography {
            m: Matrix3::new(1.0, 0.0, tx, 0.0, 1.0, ty, 0.0, 0.0, 1.0),
        }
    }

    /// Wraps a matrix, rejecting singular or non-finite ones.
    pub fn from_matrix(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::DegenerateConfiguration(
                "homography has non-finite entries".into(),
            ));
        }
        let norm = m.norm();
        if norm == 0.0 || (m.determinant() / norm.powi(3)).abs() < 1e-14 {
            return Err(Error::DegenerateConfiguration(
                "homography matrix is singular".into(),
            ));
        }
        let scale = if m[(2, 2)].abs() > 1e-12 { m[(2, 2)] } else { norm };
        Ok(Homography { m: m / scale })
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn inverse(&self) -> Result<Homography> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| Error::DegenerateConfiguration("homography is not invertible".into()))?;
        Homography::from_matrix(inv)
    }
}

/// Maps `p` through `h`, dividing out the projective scale.
pub fn apply_h(h: &Homography, p: PixelPoint) -> Result<PixelPoint> {
    let v = h.m * Vector3::new(p.x, p.y, 1.0);
    if v.z.abs() < 1e-12 {
        return Err(Error::PointAtInfinity(v.z));
    }
    Ok(PixelPoint::new(v.x / v.z, v.y / v.z))
}

/// Images of the corners `(0,0)`, `(W,0)`, `(W,H)`, `(0,H)`, in that order.
pub fn transform_quad(h: &Homography, dims: ImageDims) -> Result<[PixelPoint; 4]> {
    let (w, hh) = (dims.width as f64, dims.height as f64);
    Ok([
        apply_h(h, PixelPoint::new(0.0, 0.0))?,
        apply_h(h, PixelPoint::new(w, 0.0))?,
        apply_h(h, PixelPoint::new(w, hh))?,
        apply_h(h, PixelPoint::new(0.0, hh))?,
    ])
}
