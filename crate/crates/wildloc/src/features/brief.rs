//! 256-bit intensity-comparison descriptors over a box-smoothed patch.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::raster::GrayRaster;

use super::{Descriptor, Keypoint, PATCH_RADIUS, SMOOTH_RADIUS};

const PAIR_TABLE: &str = include_str!("../../data/brief_pairs.txt");

/// One comparison: offsets of the first and second sample from the keypoint.
pub(crate) type Pair = [(i32, i32); 2];

pub(crate) fn parse_pair_table(text: &str) -> Vec<Pair> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let v: Vec<i32> = l
                .split_whitespace()
                .map(|t| t.parse().expect("pair table holds integers"))
                .collect();
            assert_eq!(v.len(), 4, "pair table rows have four offsets");
            [(v[0], v[1]), (v[2], v[3])]
        })
        .collect()
}

pub(crate) fn pairs() -> &'static [Pair] {
    static PAIRS: OnceLock<Vec<Pair>> = OnceLock::new();
    PAIRS.get_or_init(|| {
        let p = parse_pair_table(PAIR_TABLE);
        assert_eq!(p.len(), 256);
        p
    })
}

/// Sums of the 5x5 box around each pixel, with edge replication.
///
/// Comparing box sums orders samples exactly as comparing box means would.
pub(crate) struct BoxSums {
    width: usize,
    sums: Vec<u16>,
}

impl BoxSums {
    pub(crate) fn new(img: &GrayRaster) -> Self {
        let (w, h) = (img.width() as usize, img.height() as usize);
        let r = SMOOTH_RADIUS as i64;
        let px = img.pixels();
        let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;

        let mut horiz = vec![0u16; w * h];
        for y in 0..h {
            let row = &px[y * w..(y + 1) * w];
            for x in 0..w {
                let mut s = 0u16;
                for dx in -r..=r {
                    s += row[clamp(x as i64 + dx, w)] as u16;
                }
                horiz[y * w + x] = s;
            }
        }
        let mut sums = vec![0u16; w * h];
        for y in 0..h {
            for x in 0..w {
                let mut s = 0u16;
                for dy in -r..=r {
                    s += horiz[clamp(y as i64 + dy, h) * w + x];
                }
                sums[y * w + x] = s;
            }
        }
        BoxSums { width: w, sums }
    }

    #[inline]
    fn at(&self, x: i32, y: i32) -> u16 {
        self.sums[y as usize * self.width + x as usize]
    }
}

/// Describes each keypoint; fails if any 31x31 patch leaves the image.
pub fn compute_descriptors(img: &GrayRaster, kps: &[Keypoint]) -> Result<Vec<Descriptor>> {
    let r = PATCH_RADIUS as i64;
    for kp in kps {
        let (x, y) = (kp.pos.x.floor() as i64, kp.pos.y.floor() as i64);
        if x - r < 0 || y - r < 0 || x + r >= img.width() as i64 || y + r >= img.height() as i64 {
            return Err(Error::OutOfBounds(format!(
                "descriptor patch around ({}, {}) exceeds {}x{}",
                kp.pos.x,
                kp.pos.y,
                img.width(),
                img.height()
            )));
        }
    }
    if kps.is_empty() {
        return Ok(Vec::new());
    }
    let sums = BoxSums::new(img);
    Ok(kps.iter().map(|kp| describe(&sums, kp)).collect())
}

fn describe(sums: &BoxSums, kp: &Keypoint) -> Descriptor {
    let (x, y) = (kp.pos.x.floor() as i32, kp.pos.y.floor() as i32);
    let mut bits = [0u64; 4];
    for (i, [(x1, y1), (x2, y2)]) in pairs().iter().enumerate() {
        let first = sums.at(x + x1, y + y1);
        let second = sums.at(x + x2, y + y2);
        if first < second {
            bits[i / 64] |= 1 << (i % 64);
        }
    }
    Descriptor(bits)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geo::PixelPoint;

    /// Regenerates the committed table from its recorded seed.
    fn regenerate(seed: u64) -> Vec<Pair> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = state;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            z ^ (z >> 31)
        };
        let mut coord = || {
            let v: i64 = (0..4).map(|_| (next() % 9) as i64 - 4).sum();
            v.clamp(-15, 15) as i32
        };
        let mut out = Vec::new();
        while out.len() < 256 {
            let p = [(coord(), coord()), (coord(), coord())];
            if p[0] != p[1] {
                out.push(p);
            }
        }
        out
    }

    #[test]
    fn committed_table_matches_seed() {
        assert_eq!(pairs(), regenerate(0x0077_696C_646C_6F63).as_slice());
        for [(a, b), (c, d)] in pairs() {
            for v in [a, b, c, d] {
                assert!(v.abs() <= PATCH_RADIUS as i32);
            }
        }
    }

    fn kp(x: f64, y: f64) -> Keypoint {
        Keypoint {
            pos: PixelPoint::new(x, y),
            score: 1.0,
        }
    }

    #[test]
    fn deterministic() {
        let img = GrayRaster::from_fn(64, 64, |x, y| ((x * 37 + y * 91) % 251) as u8);
        let a = compute_descriptors(&img, &[kp(32.5, 30.5)]).unwrap();
        let b = compute_descriptors(&img, &[kp(32.5, 30.5)]).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn border_contract() {
        let img = GrayRaster::filled(100, 100, 9);
        assert!(matches!(
            compute_descriptors(&img, &[kp(5.0, 5.0)]),
            Err(Error::OutOfBounds(_))
        ));
        assert!(compute_descriptors(&img, &[kp(15.5, 84.5)]).is_ok());
        assert!(compute_descriptors(&img, &[kp(85.5, 50.5)]).is_err());
    }

    #[test]
    fn uniform_patch_is_all_zero() {
        // strict "first < second" never holds on constant input
        let img = GrayRaster::filled(64, 64, 120);
        let d = compute_descriptors(&img, &[kp(32.0, 32.0)]).unwrap();
        assert_eq!(d[0].0, [0; 4]);
    }

    #[test]
    fn box_sums_match_naive_mean() {
        let img = GrayRaster::from_fn(20, 17, |x, y| ((x * 13 + y * 7) % 200) as u8);
        let sums = BoxSums::new(&img);
        for y in 0..17i32 {
            for x in 0..20i32 {
                let mut s = 0u16;
                for dy in -2..=2 {
                    for dx in -2..=2 {
                        let xx = (x + dx).clamp(0, 19) as u32;
                        let yy = (y + dy).clamp(0, 16) as u32;
                        s += img.get(xx, yy) as u16;
                    }
                }
                assert_eq!(sums.at(x, y), s);
            }
        }
    }
}
