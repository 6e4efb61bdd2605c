//! Geographic coordinate types and the pixel/degree conversions used by a
//! corner-georeferenced, north-up tile.
//!
//! A tile is referenced by its top-left and bottom-right corners. Pixel
//! coordinates address pixel *corners*: `(0, 0)` is the top-left corner of the
//! top-left pixel and `(W, H)` the bottom-right corner of the image, so those
//! two points land exactly on the referenced coordinates.

use crate::error::{Error, Result};

/// Mean Earth radius used for all metric distances, in meters.
pub const EARTH_RADIUS_M: f64 = 6_371_000.0;

/// WGS-84 latitude/longitude in degrees.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoPoint {
    pub lat: f64,
    pub lon: f64,
}

impl GeoPoint {
    pub fn new(lat: f64, lon: f64) -> Result<Self> {
        let p = GeoPoint { lat, lon };
        if p.is_valid() {
            Ok(p)
        } else {
            Err(Error::InvalidGeoRect(format!(
                "coordinate ({lat}, {lon}) outside [-90, 90] x [-180, 180]"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.lat.is_finite()
            && self.lon.is_finite()
            && (-90.0..=90.0).contains(&self.lat)
            && (-180.0..=180.0).contains(&self.lon)
    }
}

/// Two-corner georeference of a north-up tile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeoRect {
    pub top_left: GeoPoint,
    pub bottom_right: GeoPoint,
}

impl GeoRect {
    /// Builds a rect, checking that north is above south and the longitudes differ.
    pub fn new(top_left: GeoPoint, bottom_right: GeoPoint) -> Result<Self> {
        if !top_left.is_valid() || !bottom_right.is_valid() {
            return Err(Error::InvalidGeoRect(format!(
                "corner out of range: {top_left:?} / {bottom_right:?}"
            )));
        }
        if top_left.lat <= bottom_right.lat {
            return Err(Error::InvalidGeoRect(format!(
                "top-left latitude {} must exceed bottom-right latitude {}",
                top_left.lat, bottom_right.lat
            )));
        }
        if top_left.lon == bottom_right.lon {
            return Err(Error::InvalidGeoRect(format!(
                "corner longitudes coincide at {}",
                top_left.lon
            )));
        }
        Ok(GeoRect {
            top_left,
            bottom_right,
        })
    }

    /// A rect of the given metric extent centered on `center`, on the spherical
    /// Earth model. Used to anchor synthetic worlds.
    pub fn around(center: GeoPoint, width_m: f64, height_m: f64) -> Result<Self> {
        let m_per_deg_lat = EARTH_RADIUS_M * std::f64::consts::PI / 180.0;
        let m_per_deg_lon = m_per_deg_lat * center.lat.to_radians().cos();
        let half_lat = 0.5 * height_m / m_per_deg_lat;
        let half_lon = 0.5 * width_m / m_per_deg_lon;
        GeoRect::new(
            GeoPoint {
                lat: center.lat + half_lat,
                lon: center.lon - half_lon,
            },
            GeoPoint {
                lat: center.lat - half_lat,
                lon: center.lon + half_lon,
            },
        )
    }

    pub fn center(&self) -> GeoPoint {
        GeoPoint {
            lat: 0.5 * (self.top_left.lat + self.bottom_right.lat),
            lon: 0.5 * (self.top_left.lon + self.bottom_right.lon),
        }
    }

    pub fn lat_span(&self) -> f64 {
        self.bottom_right.lat - self.top_left.lat
    }

    pub fn lon_span(&self) -> f64 {
        self.bottom_right.lon - self.top_left.lon
    }
}

/// Real-valued pixel position, origin at the top-left corner, y down.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct PixelPoint {
    pub x: f64,
    pub y: f64,
}

impl PixelPoint {
    pub const fn new(x: f64, y: f64) -> Self {
        PixelPoint { x, y }
    }

    pub fn distance(&self, other: &PixelPoint) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ImageDims {
    pub width: u32,
    pub height: u32,
}

impl ImageDims {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::TooSmall(format!("image dims {width}x{height}")));
        }
        Ok(ImageDims { width, height })
    }

    pub fn center(&self) -> PixelPoint {
        PixelPoint::new(self.width as f64 / 2.0, self.height as f64 / 2.0)
    }
}

impl std::fmt::Display for ImageDims {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}", self.width, self.height)
    }
}

/// Linear interpolation of the tile's corner coordinates at pixel `p`.
///
/// Points outside the image extrapolate along the same lines.
pub fn pixel_to_geo(p: PixelPoint, rect: &GeoRect, dims: ImageDims) -> GeoPoint {
    let fy = p.y / dims.height as f64;
    let fx = p.x / dims.width as f64;
    GeoPoint {
        lat: lerp(rect.top_left.lat, rect.bottom_right.lat, fy),
        lon: lerp(rect.top_left.lon, rect.bottom_right.lon, fx),
    }
}

/// Linear interpolation that returns `a` at `t = 0` and `b` at `t = 1` exactly.
fn lerp(a: f64, b: f64, t: f64) -> f64 {
    if t < 0.5 {
        a + t * (b - a)
    } else {
        b - (1.0 - t) * (b - a)
    }
}

/// Inverse of [`pixel_to_geo`].
pub fn geo_to_pixel(g: GeoPoint, rect: &GeoRect, dims: ImageDims) -> Result<PixelPoint> {
    let lat_span = rect.lat_span();
    let lon_span = rect.lon_span();
    if lat_span == 0.0 || lon_span == 0.0 {
        return Err(Error::DegenerateRect);
    }
    Ok(PixelPoint {
        x: dims.width as f64 * (g.lon - rect.top_left.lon) / lon_span,
        y: dims.height as f64 * (g.lat - rect.top_left.lat) / lat_span,
    })
}

/// Great-circle distance in meters on a sphere of radius [`EARTH_RADIUS_M`].
pub fn haversine_m(a: GeoPoint, b: GeoPoint) -> f64 {
    let phi1 = a.lat.to_radians();
    let phi2 = b.lat.to_radians();
    let dphi = (b.lat - a.lat).to_radians();
    let dlambda = (b.lon - a.lon).to_radians();
    let h = (dphi / 2.0).sin().powi(2) + phi1.cos() * phi2.cos() * (dlambda / 2.0).sin().powi(2);
    2.0 * EARTH_RADIUS_M * h.sqrt().min(1.0).asin()
}

/// Center of a footprint quadrilateral: the arithmetic mean of its vertices.
pub fn quad_centroid(q: &[PixelPoint; 4]) -> PixelPoint {
    let (sx, sy) = q.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p.x, sy + p.y));
    PixelPoint::new(sx / 4.0, sy / 4.0)
}
