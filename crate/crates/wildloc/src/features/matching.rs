//! Brute-force Hamming matching with a ratio test and optional cross-check.

use super::Descriptor;

/// A correspondence between `da[index_a]` and `db[index_b]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndexMatch {
    pub index_a: usize,
    pub index_b: usize,
    pub distance: u32,
    pub confidence: f64,
}

#[derive(Clone, Copy)]
struct Nearest {
    best: u32,
    best_idx: usize,
    second: u32,
}

impl Nearest {
    const EMPTY: Nearest = Nearest {
        best: u32::MAX,
        best_idx: usize::MAX,
        second: u32::MAX,
    };

    // strict comparison keeps the lowest index among equal distances
    #[inline]
    fn offer(&mut self, d: u32, idx: usize) {
        if d < self.best {
            self.second = self.best;
            self.best = d;
            self.best_idx = idx;
        } else if d < self.second {
            self.second = d;
        }
    }

    fn passes_ratio(&self, ratio: f64) -> bool {
        // a lone candidate has no runner-up to compete with
        self.second == u32::MAX || (self.best as f64) < ratio * self.second as f64
    }
}

/// Matches each descriptor in `da` to its nearest neighbor in `db`.
///
/// A match is kept when the nearest distance is below `ratio` times the
/// second-nearest. With `cross_check`, the pair must also be mutual nearest
/// neighbors and pass the ratio test from `db`'s side, which makes the
/// result symmetric in its arguments. Confidence is `1 - d / 256`.
pub fn match_descriptors(
    da: &[Descriptor],
    db: &[Descriptor],
    ratio: f64,
    cross_check: bool,
) -> Vec<IndexMatch> {
    assert!(ratio > 0.0 && ratio <= 1.0, "ratio must lie in (0, 1]");
    if da.is_empty() || db.is_empty() {
        return Vec::new();
    }
    let mut rows = vec![Nearest::EMPTY; da.len()];
    let mut cols = vec![Nearest::EMPTY; if cross_check { db.len() } else { 0 }];
    for (i, a) in da.iter().enumerate() {
        let row = &mut rows[i];
        for (j, b) in db.iter().enumerate() {
            let d = a.hamming(b);
            row.offer(d, j);
            if cross_check {
                cols[j].offer(d, i);
            }
        }
    }

    rows.iter()
        .enumerate()
        .filter(|(_, row)| row.passes_ratio(ratio))
        .filter(|(i, row)| {
            !cross_check || {
                let col = &cols[row.best_idx];
                col.best_idx == *i && col.passes_ratio(ratio)
            }
        })
        .map(|(i, row)| IndexMatch {
            index_a: i,
            index_b: row.best_idx,
            distance: row.best,
            confidence: 1.0 - row.best as f64 / 256.0,
        })
        .collect()
}
