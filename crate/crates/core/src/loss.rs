//! Forward-only training losses: L1 on gamma, scale-invariant log loss on the
//! depth reconstructed from gamma, and their weighted sum.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::gamma_to_depth;
use crate::grid::{check_shape, ScalarGrid};
use crate::sum::{compensated_sum, Accumulator};

/// Loss weighting. Defaults: `w_gamma = 1`, `w_depth = 0.01`,
/// `lambda = 0.85`, `alpha = 10`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawWeights", into = "RawWeights")]
pub struct LossWeights {
    w_gamma: f64,
    w_depth: f64,
    lambda: f64,
    alpha: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawWeights {
    w_gamma: f64,
    w_depth: f64,
    lambda: f64,
    alpha: f64,
}

impl Default for RawWeights {
    fn default() -> Self {
        LossWeights::default().into()
    }
}

impl TryFrom<RawWeights> for LossWeights {
    type Error = Error;

    fn try_from(raw: RawWeights) -> Result<Self> {
        LossWeights::new(raw.w_gamma, raw.w_depth, raw.lambda, raw.alpha)
    }
}

impl From<LossWeights> for RawWeights {
    fn from(w: LossWeights) -> Self {
        RawWeights {
            w_gamma: w.w_gamma,
            w_depth: w.w_depth,
            lambda: w.lambda,
            alpha: w.alpha,
        }
    }
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w_gamma: 1.0,
            w_depth: 1e-2,
            lambda: 0.85,
            alpha: 10.0,
        }
    }
}

impl LossWeights {
    pub fn new(w_gamma: f64, w_depth: f64, lambda: f64, alpha: f64) -> Result<Self> {
        let all = [w_gamma, w_depth, lambda, alpha];
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || lambda > 1.0 {
            return Err(Error::InvalidParameter(format!(
                "loss weights must be non-negative with lambda <= 1, got {all:?}"
            )));
        }
        Ok(Self {
            w_gamma,
            w_depth,
            lambda,
            alpha,
        })
    }

    pub fn w_gamma(&self) -> f64 {
        self.w_gamma
    }

    pub fn w_depth(&self) -> f64 {
        self.w_depth
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
}

fn joint_pairs<'a>(
    a: &'a ScalarGrid,
    b: &'a ScalarGrid,
) -> Result<impl Iterator<Item = (f64, f64)> + 'a> {
    check_shape(a.width(), a.height(), b.width(), b.height())?;
    Ok(a.values()
        .iter()
        .zip(a.valid())
        .zip(b.values().iter().zip(b.valid()))
        .filter(|((_, &va), (_, &vb))| va && vb)
        .map(|((&x, _), (&y, _))| (x, y)))
}

/// Mean absolute gamma error over jointly valid pixels.
pub fn gamma_l1_loss(pred: &ScalarGrid, gt: &ScalarGrid) -> Result<f64> {
    let mut acc = Accumulator::default();
    let mut n = 0usize;
    for (p, g) in joint_pairs(pred, gt)? {
        acc.add((p - g).abs());
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    Ok(acc.total() / n as f64)
}

/// `alpha * sqrt(mean(d^2) - lambda * mean(d)^2)` with `d = ln pred - ln gt`.
///
/// Evaluated as `variance(d) + (1 - lambda) mean(d)^2`, which is the same
/// quantity without the cancellation of the one-pass form. The radicand is
/// clamped at zero.
pub fn silog_loss(pred: &ScalarGrid, gt: &ScalarGrid, weights: &LossWeights) -> Result<f64> {
    let mut diffs = Vec::new();
    for (p, g) in joint_pairs(pred, gt)? {
        if !(p > 0.0) {
            return Err(Error::NonPositiveDepth(p));
        }
        if !(g > 0.0) {
            return Err(Error::NonPositiveDepth(g));
        }
        diffs.push(p.ln() - g.ln());
    }
    silog_from_log_diffs(&diffs, weights)
}

fn silog_from_log_diffs(diffs: &[f64], weights: &LossWeights) -> Result<f64> {
    if diffs.is_empty() {
        return Err(Error::EmptyMask);
    }
    let n = diffs.len() as f64;
    let mean = compensated_sum(diffs.iter().copied()) / n;
    let variance = compensated_sum(diffs.iter().map(|d| (d - mean) * (d - mean))) / n;
    let radicand = (variance + (1.0 - weights.lambda) * mean * mean).max(0.0);
    Ok(weights.alpha * radicand.sqrt())
}

/// The individual terms of the total loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LossBreakdown {
    pub gamma: f64,
    /// `None` when `w_depth = 0` and the depth term was not evaluated.
    pub depth: Option<f64>,
    pub total: f64,
    /// Pixels contributing to the depth term.
    pub depth_pixels: usize,
}

/// `w_gamma L_gamma + w_depth L_depth`, where both depths come from gamma via
/// `z = h_c / (gamma + ppe)`. Pixels at or above the horizon
/// (`gamma + ppe <= 1e-9` for either map) are dropped from the depth term
/// only.
pub fn total_loss(
    pred_gamma: &ScalarGrid,
    gt_gamma: &ScalarGrid,
    ppe: &ScalarGrid,
    camera_height: f64,
    weights: &LossWeights,
) -> Result<LossBreakdown> {
    let gamma = gamma_l1_loss(pred_gamma, gt_gamma)?;
    if weights.w_depth == 0.0 {
        return Ok(LossBreakdown {
            gamma,
            depth: None,
            total: weights.w_gamma * gamma,
            depth_pixels: 0,
        });
    }
    check_shape(
        pred_gamma.width(),
        pred_gamma.height(),
        ppe.width(),
        ppe.height(),
    )?;
    let mut diffs = Vec::new();
    for i in 0..pred_gamma.len() {
        if !(pred_gamma.valid()[i] && gt_gamma.valid()[i] && ppe.valid()[i]) {
            continue;
        }
        let e = ppe.values()[i];
        let (Ok(d_pred), Ok(d_gt)) = (
            gamma_to_depth(pred_gamma.values()[i], e, camera_height),
            gamma_to_depth(gt_gamma.values()[i], e, camera_height),
        ) else {
            continue;
        };
        diffs.push(d_pred.ln() - d_gt.ln());
    }
    let depth = silog_from_log_diffs(&diffs, weights)?;
    Ok(LossBreakdown {
        gamma,
        depth: Some(depth),
        total: weights.w_gamma * gamma + weights.w_depth * depth,
        depth_pixels: diffs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(values: &[f64]) -> ScalarGrid {
        ScalarGrid::from_values(values.len(), 1, values.to_vec()).unwrap()
    }

    #[test]
    fn defaults_match_published_settings() {
        let w = LossWeights::default();
        assert_eq!(
            (w.w_gamma(), w.w_depth(), w.lambda(), w.alpha()),
            (1.0, 0.01, 0.85, 10.0)
        );
        let parsed: LossWeights = toml::from_str("").unwrap();
        assert_eq!(parsed, w);
        assert!(LossWeights::new(1.0, 0.01, 1.2, 10.0).is_err());
        assert!(LossWeights::new(-1.0, 0.01, 0.5, 10.0).is_err());
    }

    #[test]
    fn l1_examples() {
        let gt = grid(&[0.1, -0.2, 0.0, 0.3]);
        assert_eq!(gamma_l1_loss(&gt, &gt).unwrap(), 0.0);
        let shifted = grid(&[0.2, -0.1, 0.1, 0.4]);
        assert!((gamma_l1_loss(&shifted, &gt).unwrap() - 0.1).abs() < 1e-15);
        let invalid = ScalarGrid::empty(4, 1);
        assert!(matches!(
            gamma_l1_loss(&invalid, &gt),
            Err(Error::EmptyMask)
        ));
        assert!(matches!(
            gamma_l1_loss(&grid(&[1.0]), &gt),
            Err(Error::ShapeMismatch(..))
        ));
    }

    #[test]
    fn silog_uniform_scale_closed_form() {
        let gt = grid(&[3.0, 7.5, 12.0, 40.0, 65.5]);
        let pred = grid(&gt.values().iter().map(|d| 1.2 * d).collect::<Vec<_>>());
        let loss = silog_loss(&pred, &gt, &LossWeights::default()).unwrap();
        let expected = 10.0 * 0.15f64.sqrt() * 1.2f64.ln();
        assert!((loss - expected).abs() <= 1e-12 * expected);
        assert_eq!(silog_loss(&gt, &gt, &LossWeights::default()).unwrap(), 0.0);

        let scale_invariant = LossWeights::new(1.0, 0.01, 1.0, 10.0).unwrap();
        assert!(silog_loss(&pred, &gt, &scale_invariant).unwrap() < 1e-12);
    }

    #[test]
    fn silog_rejects_non_positive_depth() {
        let gt = grid(&[1.0, 2.0]);
        assert!(matches!(
            silog_loss(&grid(&[1.0, 0.0]), &gt, &LossWeights::default()),
            Err(Error::NonPositiveDepth(_))
        ));
    }

    #[test]
    fn total_reduces_to_gamma_term_without_depth_weight() {
        let gt = grid(&[0.0, 0.1, 0.05]);
        let pred = grid(&[0.01, 0.12, 0.0]);
        let ppe = grid(&[0.2, 0.15, 0.3]);
        let w = LossWeights::new(1.0, 0.0, 0.85, 10.0).unwrap();
        let total = total_loss(&pred, &gt, &ppe, 1.5, &w).unwrap();
        assert_eq!(total.total, gamma_l1_loss(&pred, &gt).unwrap());
        assert_eq!(total.depth, None);

        let zero = total_loss(&gt, &gt, &ppe, 1.5, &LossWeights::default()).unwrap();
        assert_eq!(zero.total, 0.0);
    }

    #[test]
    fn total_skips_horizon_pixels_in_depth_term() {
        let gt = grid(&[0.0, 0.1, 0.05]);
        let pred = grid(&[0.01, -0.5, 0.0]);
        let ppe = grid(&[0.2, 0.15, 0.3]);
        let out = total_loss(&pred, &gt, &ppe, 1.5, &LossWeights::default()).unwrap();
        assert_eq!(out.depth_pixels, 2);
    }
}
