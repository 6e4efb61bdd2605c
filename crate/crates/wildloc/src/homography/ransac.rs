use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::features::MatchPair;
use crate::geo::PixelPoint;

use super::{apply_h, estimate_dlt, Homography};

/// How a correspondence's fit to a model is measured.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReprojectionError {
    /// `|H a - b|`, photo to tile only.
    #[default]
    Forward,
    /// Mean of the forward error and the backward error `|H^-1 b - a|`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacConfig {
    pub threshold_px: f64,
    pub max_iters: usize,
    pub confidence: f64,
    pub seed: u64,
    pub error: ReprojectionError,
}

impl Default for RansacConfig {
    fn default() -> Self {
        RansacConfig {
            threshold_px: 5.0,
            max_iters: 2000,
            confidence: 0.995,
            seed: 0,
            error: ReprojectionError::Forward,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RansacReport {
    /// Indices into the input pairs, ascending.
    pub inlier_indices: Vec<usize>,
    pub iterations_run: usize,
    /// RMS reprojection error of the returned model over the inliers.
    pub reprojection_rms: f64,
    /// RMS of the best minimal-sample model over the same inliers.
    pub minimal_sample_rms: f64,
}

/// Minimal samples with three nearly collinear source points are skipped.
const COLLINEAR_AREA_EPS: f64 = 1e-9;
/// Bound on consensus-growing refits after the sampling loop.
const MAX_REFINE_ROUNDS: usize = 10;

fn residual(h: &Homography, inv: Option<&Homography>, p: &MatchPair) -> f64 {
    let forward = match apply_h(h, p.a) {
        Ok(q) => q.distance(&p.b),
        Err(_) => return f64::INFINITY,
    };
    match inv {
        None => forward,
        Some(hi) => match apply_h(hi, p.b) {
            Ok(q) => 0.5 * (forward + q.distance(&p.a)),
            Err(_) => f64::INFINITY,
        },
    }
}

struct Consensus {
    indices: Vec<usize>,
    sq_sum: f64,
}

fn consensus(h: &Homography, pairs: &[MatchPair], cfg: &RansacConfig) -> Consensus {
    let inv = match cfg.error {
        ReprojectionError::Forward => None,
        ReprojectionError::Symmetric => h.inverse().ok(),
    };
    if cfg.error == ReprojectionError::Symmetric && inv.is_none() {
        return Consensus {
            indices: Vec::new(),
            sq_sum: 0.0,
        };
    }
    let mut indices = Vec::new();
    let mut sq_sum = 0.0;
    for (i, p) in pairs.iter().enumerate() {
        let e = residual(h, inv.as_ref(), p);
        if e < cfg.threshold_px {
            indices.push(i);
            sq_sum += e * e;
        }
    }
    Consensus { indices, sq_sum }
}

/// Whether `a` explains more data than `b`: more inliers, then lower error.
fn better(a: &Consensus, b: &Consensus) -> bool {
    a.indices.len() > b.indices.len() || (a.indices.len() == b.indices.len() && a.sq_sum < b.sq_sum)
}

fn rms(h: &Homography, pairs: &[MatchPair], idx: &[usize], cfg: &RansacConfig) -> f64 {
    let inv = match cfg.error {
        ReprojectionError::Forward => None,
        ReprojectionError::Symmetric => h.inverse().ok(),
    };
    let sum: f64 = idx
        .iter()
        .map(|&i| residual(h, inv.as_ref(), &pairs[i]).powi(2))
        .sum();
    (sum / idx.len() as f64).sqrt()
}

fn has_collinear_triple(pts: &[PixelPoint; 4]) -> bool {
    const TRIPLES: [[usize; 3]; 4] = [[0, 1, 2], [0, 1, 3], [0, 2, 3], [1, 2, 3]];
    TRIPLES.iter().any(|&[i, j, k]| {
        let (a, b, c) = (pts[i], pts[j], pts[k]);
        let area = 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs();
        area < COLLINEAR_AREA_EPS
    })
}

fn subset(pairs: &[MatchPair], idx: &[usize]) -> Vec<MatchPair> {
    idx.iter().map(|&i| pairs[i]).collect()
}

/// Robust homography fit: seeded 4-point sampling with an adaptive
/// iteration count, then refits on the consensus set until it stops growing.
///
/// The returned model is the lowest-RMS candidate among the final DLT refit,
/// the last consensus model and the best minimal-sample model, measured over
/// the final inlier set.
pub fn ransac_homography(pairs: &[MatchPair], cfg: &RansacConfig) -> Result<(Homography, RansacReport)> {
    if pairs.len() < 4 {
        return Err(Error::InsufficientPairs(pairs.len()));
    }
    assert!(cfg.threshold_px > 0.0, "RANSAC threshold must be positive");
    assert!(
        cfg.confidence > 0.0 && cfg.confidence < 1.0,
        "RANSAC confidence must lie in (0, 1)"
    );

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let n = pairs.len();
    let mut best: Option<(Homography, Consensus)> = None;
    let mut needed = cfg.max_iters;
    let mut iterations = 0;

    while iterations < needed.min(cfg.max_iters) {
        iterations += 1;
        let idx = rand::seq::index::sample(&mut rng, n, 4);
        let sample = [
            pairs[idx.index(0)],
            pairs[idx.index(1)],
            pairs[idx.index(2)],
            pairs[idx.index(3)],
        ];
        if has_collinear_triple(&sample.map(|p| p.a)) {
            continue;
        }
        let Ok(h) = estimate_dlt(&sample) else {
            continue;
        };
        let c = consensus(&h, pairs, cfg);
        if best.as_ref().is_none_or(|(_, b)| better(&c, b)) {
            let w = c.indices.len() as f64 / n as f64;
            let miss = 1.0 - w.powi(4);
            needed = if miss <= 0.0 {
                0
            } else if miss >= 1.0 {
                cfg.max_iters
            } else {
                let k = (1.0 - cfg.confidence).ln() / miss.ln();
                k.ceil().min(cfg.max_iters as f64) as usize
            };
            best = Some((h, c));
        }
    }

    let (minimal, first) = best.ok_or(Error::NoModelFound)?;
    if first.indices.len() < 4 {
        return Err(Error::NoModelFound);
    }

    let mut current = minimal;
    let mut support = first;
    for _ in 0..MAX_REFINE_ROUNDS {
        let Ok(refit) = estimate_dlt(&subset(pairs, &support.indices)) else {
            break;
        };
        let c = consensus(&refit, pairs, cfg);
        if c.indices.len() >= 4 && better(&c, &support) {
            current = refit;
            support = c;
        } else {
            break;
        }
    }

    let inliers = support.indices;
    let mut candidates = vec![current, minimal];
    if let Ok(h) = estimate_dlt(&subset(pairs, &inliers)) {
        candidates.insert(0, h);
    }
    let minimal_sample_rms = rms(&minimal, pairs, &inliers, cfg);
    let (model, model_rms) = candidates
        .into_iter()
        .map(|h| (h, rms(&h, pairs, &inliers, cfg)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("at least one candidate");

    Ok((
        model,
        RansacReport {
            inlier_indices: inliers,
            iterations_run: iterations,
            reprojection_rms: model_rms,
            minimal_sample_rms,
        },
    ))
}
