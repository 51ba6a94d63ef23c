//! Standard monocular depth metrics and height-based masking.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{check_shape, Mask, ScalarGrid};
use crate::sum::MeanAccumulator;

/// Abs Rel, Sq Rel, RMSE, RMSE log and the three threshold accuracies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub abs_rel: f64,
    pub sq_rel: f64,
    pub rmse: f64,
    pub rmse_log: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub pixel_count: usize,
}

impl MetricReport {
    /// One `key=value` pair per line, fixed key order.
    pub fn to_key_value(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.fields() {
            let _ = writeln!(out, "{key}={value}");
        }
        let _ = writeln!(out, "pixel_count={}", self.pixel_count);
        out
    }

    pub fn fields(&self) -> [(&'static str, f64); 7] {
        [
            ("abs_rel", self.abs_rel),
            ("sq_rel", self.sq_rel),
            ("rmse", self.rmse),
            ("rmse_log", self.rmse_log),
            ("delta1", self.delta1),
            ("delta2", self.delta2),
            ("delta3", self.delta3),
        ]
    }
}

/// Evaluates `pred` against `gt` on pixels valid in both grids and set in
/// `mask`. Depth ratios use the natural log; the threshold accuracies count
/// `max(d / d*, d* / d) < 1.25^k` with a strict comparison.
pub fn depth_metrics(pred: &ScalarGrid, gt: &ScalarGrid, mask: &Mask) -> Result<MetricReport> {
    check_shape(pred.width(), pred.height(), gt.width(), gt.height())?;
    check_shape(pred.width(), pred.height(), mask.width(), mask.height())?;

    let thresholds = [1.25, 1.25f64.powi(2), 1.25f64.powi(3)];
    let mut abs_rel = MeanAccumulator::default();
    let mut sq_rel = MeanAccumulator::default();
    let mut sq = MeanAccumulator::default();
    let mut sq_log = MeanAccumulator::default();
    let mut hits = [0usize; 3];
    let mut n = 0usize;

    for i in 0..pred.len() {
        if !(pred.valid()[i] && gt.valid()[i] && mask.bits()[i]) {
            continue;
        }
        let (d, g) = (pred.values()[i], gt.values()[i]);
        if !(d > 0.0) {
            return Err(Error::NonPositiveDepth(d));
        }
        if !(g > 0.0) {
            return Err(Error::NonPositiveDepth(g));
        }
        let diff = d - g;
        abs_rel.add(diff.abs() / g);
        sq_rel.add(diff * diff / g);
        sq.add(diff * diff);
        let log_diff = (d / g).ln();
        sq_log.add(log_diff * log_diff);
        let ratio = (d / g).max(g / d);
        for (hit, threshold) in hits.iter_mut().zip(thresholds) {
            if ratio < threshold {
                *hit += 1;
            }
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMask);
    }
    let count = n as f64;
    let mean = |acc: MeanAccumulator| acc.mean().expect("at least one pixel");
    Ok(MetricReport {
        abs_rel: mean(abs_rel),
        sq_rel: mean(sq_rel),
        rmse: mean(sq).sqrt(),
        rmse_log: mean(sq_log).sqrt(),
        delta1: hits[0] as f64 / count,
        delta2: hits[1] as f64 / count,
        delta3: hits[2] as f64 / count,
        pixel_count: n,
    })
}

/// Pixels valid in `height` whose height is strictly below `threshold`.
pub fn height_mask(height: &ScalarGrid, threshold: f64) -> Mask {
    let bits = height
        .values()
        .iter()
        .zip(height.valid())
        .map(|(&h, &ok)| ok && h < threshold)
        .collect();
    Mask::from_bits(height.width(), height.height(), bits).expect("shape taken from grid")
}

/// Evaluation range and crop applied before computing metrics: ground truth
/// outside `(min_depth, max_depth)` is dropped and predictions are clamped
/// into the range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalSettings {
    pub min_depth: f64,
    pub max_depth: f64,
    /// Restrict to the crop of Garg et al. used on the Eigen split.
    pub garg_crop: bool,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            min_depth: 1e-3,
            max_depth: 80.0,
            garg_crop: false,
        }
    }
}

impl EvalSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.min_depth > 0.0 && self.max_depth > self.min_depth) {
            return Err(Error::InvalidParameter(format!(
                "evaluation range ({}, {}) is empty",
                self.min_depth, self.max_depth
            )));
        }
        Ok(())
    }

    /// Returns the clamped prediction and the evaluation mask.
    pub fn prepare(&self, pred: &ScalarGrid, gt: &ScalarGrid) -> Result<(ScalarGrid, Mask)> {
        self.validate()?;
        check_shape(pred.width(), pred.height(), gt.width(), gt.height())?;
        let (w, h) = (gt.width(), gt.height());
        let crop = |u: usize, v: usize| {
            if !self.garg_crop {
                return true;
            }
            let (wf, hf) = (w as f64, h as f64);
            let (top, bottom) = ((0.408_108_11 * hf) as usize, (0.991_891_89 * hf) as usize);
            let (left, right) = ((0.035_947_71 * wf) as usize, (0.964_052_29 * wf) as usize);
            v >= top && v < bottom && u >= left && u < right
        };
        let mut bits = vec![false; w * h];
        for (u, v, g) in gt.iter_valid() {
            bits[v * w + u] = g > self.min_depth && g < self.max_depth && crop(u, v);
        }
        let clamped = ScalarGrid::from_fn(w, h, |u, v| {
            pred.get(u, v)
                .map(|d| d.clamp(self.min_depth, self.max_depth))
        });
        Ok((clamped, Mask::from_bits(w, h, bits)?))
    }
}
