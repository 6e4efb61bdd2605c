//! Segment-test corner detection on a 16-pixel Bresenham circle of radius 3.

use crate::geo::PixelPoint;
use crate::raster::{GrayRaster, ValidityMask};

use super::{DetectorConfig, Keypoint, DESCRIPTOR_MARGIN, PATCH_RADIUS, SMOOTH_RADIUS};

/// Circle offsets, clockwise from twelve o'clock.
pub(crate) const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

/// Longest run of set bits in a 16-bit ring, wrapping around.
fn longest_circular_run(bits: u16) -> u32 {
    if bits == u16::MAX {
        return 16;
    }
    let doubled = (bits as u32) | ((bits as u32) << 16);
    let mut best = 0;
    let mut run = 0;
    for i in 0..32 {
        if doubled >> i & 1 == 1 {
            run += 1;
            best = best.max(run);
        } else {
            run = 0;
        }
    }
    best.min(16)
}

/// Corner score of pixel `(x, y)`, or `None` if it fails the segment test.
///
/// The score is the larger of the summed excess contrast (beyond the
/// threshold) over the brighter and darker circle pixels, taken for the side
/// that forms the qualifying arc.
fn segment_test(img: &GrayRaster, x: u32, y: u32, threshold: i32, min_arc: u32) -> Option<f64> {
    let center = img.get(x, y) as i32;
    let hi = center + threshold;
    let lo = center - threshold;

    // any contiguous arc of length n covers at least n / 4 compass points
    let needed = (min_arc / 4) as usize;
    let compass = [0usize, 4, 8, 12].map(|k| {
        let (dx, dy) = CIRCLE[k];
        img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32) as i32
    });
    let n_bright = compass.iter().filter(|&&v| v >= hi).count();
    let n_dark = compass.iter().filter(|&&v| v <= lo).count();
    if n_bright < needed && n_dark < needed {
        return None;
    }

    let mut bright = 0u16;
    let mut dark = 0u16;
    let mut bright_sum = 0i32;
    let mut dark_sum = 0i32;
    for (k, &(dx, dy)) in CIRCLE.iter().enumerate() {
        let v = img.get((x as i32 + dx) as u32, (y as i32 + dy) as u32) as i32;
        if v >= hi {
            bright |= 1 << k;
            bright_sum += v - hi;
        } else if v <= lo {
            dark |= 1 << k;
            dark_sum += lo - v;
        }
    }
    let bright_ok = longest_circular_run(bright) >= min_arc;
    let dark_ok = longest_circular_run(dark) >= min_arc;
    match (bright_ok, dark_ok) {
        (false, false) => None,
        (true, false) => Some(bright_sum as f64 + 1.0),
        (false, true) => Some(dark_sum as f64 + 1.0),
        (true, true) => Some(bright_sum.max(dark_sum) as f64 + 1.0),
    }
}

/// Summed-area table of invalid mask pixels, `(w + 1) x (h + 1)`.
struct InvalidCounts {
    stride: usize,
    table: Vec<u32>,
}

impl InvalidCounts {
    fn new(mask: &ValidityMask) -> Self {
        let (w, h) = (mask.width() as usize, mask.height() as usize);
        let stride = w + 1;
        let mut table = vec![0u32; stride * (h + 1)];
        for y in 0..h {
            let mut row = 0u32;
            for x in 0..w {
                row += u32::from(!mask.is_valid(x as u32, y as u32));
                table[(y + 1) * stride + x + 1] = table[y * stride + x + 1] + row;
            }
        }
        InvalidCounts { stride, table }
    }

    /// Invalid count in the inclusive window `[x0, x1] x [y0, y1]`.
    fn window(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = self.stride;
        self.table[(y1 + 1) * s + x1 + 1] + self.table[y0 * s + x0]
            - self.table[y0 * s + x1 + 1]
            - self.table[(y1 + 1) * s + x0]
    }
}

/// Detects segment-test corners, suppresses non-maxima in 3x3 neighborhoods
/// and returns the strongest `max_count` of them.
///
/// Only pixels at least [`DESCRIPTOR_MARGIN`] from every border are
/// considered. With a mask, a corner is dropped when any pixel feeding its
/// smoothed descriptor patch is invalid.
pub fn detect_keypoints(
    img: &GrayRaster,
    mask: Option<&ValidityMask>,
    cfg: &DetectorConfig,
) -> Vec<Keypoint> {
    assert!(cfg.threshold >= 1, "detector threshold must be at least 1");
    assert!(cfg.max_count >= 1, "max_count must be at least 1");
    assert!(
        (1..=16).contains(&cfg.min_arc),
        "arc length must be within 1..=16"
    );
    if let Some(m) = mask {
        assert_eq!(
            (m.width(), m.height()),
            (img.width(), img.height()),
            "mask and raster dimensions differ"
        );
    }

    let (w, h) = (img.width(), img.height());
    let margin = DESCRIPTOR_MARGIN;
    if w <= 2 * margin || h <= 2 * margin {
        return Vec::new();
    }
    let threshold = cfg.threshold as i32;
    let min_arc = cfg.min_arc as u32;

    let mut scores = vec![0f64; w as usize * h as usize];
    for y in margin..h - margin {
        for x in margin..w - margin {
            if let Some(s) = segment_test(img, x, y, threshold, min_arc) {
                scores[y as usize * w as usize + x as usize] = s;
            }
        }
    }

    let invalid = mask.map(InvalidCounts::new);
    let reach = (PATCH_RADIUS + SMOOTH_RADIUS) as usize;
    let mut out = Vec::new();
    for y in margin..h - margin {
        for x in margin..w - margin {
            let idx = y as usize * w as usize + x as usize;
            let s = scores[idx];
            if s <= 0.0 || !is_local_max(&scores, w as usize, x as usize, y as usize) {
                continue;
            }
            if let Some(inv) = &invalid {
                let (cx, cy) = (x as usize, y as usize);
                let x0 = cx.saturating_sub(reach);
                let y0 = cy.saturating_sub(reach);
                let x1 = (cx + reach).min(w as usize - 1);
                let y1 = (cy + reach).min(h as usize - 1);
                if inv.window(x0, y0, x1, y1) > 0 {
                    continue;
                }
            }
            out.push(Keypoint {
                pos: PixelPoint::new(x as f64 + 0.5, y as f64 + 0.5),
                score: s,
            });
        }
    }

    // stable sort keeps raster order among equal scores
    out.sort_by(|a, b| b.score.total_cmp(&a.score));
    out.truncate(cfg.max_count);
    out
}

/// Strict maximum against earlier neighbors in raster order, non-strict
/// against later ones, so plateaus keep exactly their first pixel.
fn is_local_max(scores: &[f64], w: usize, x: usize, y: usize) -> bool {
    let s = scores[y * w + x];
    for dy in -1i64..=1 {
        for dx in -1i64..=1 {
            if dx == 0 && dy == 0 {
                continue;
            }
            let n = scores[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
            let earlier = dy < 0 || (dy == 0 && dx < 0);
            if n > s || (earlier && n == s) {
                return false;
            }
        }
    }
    true
}
