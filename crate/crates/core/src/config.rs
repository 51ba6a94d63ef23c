//! Tool-wide configuration, read from a TOML file. Every section and key is
//! optional:
//!
//! ```toml
//! [ransac]
//! iterations = 500
//! inlier_threshold = 0.05
//! min_inlier_fraction = 0.3
//! rng_seed = 0
//!
//! [epipole_policy]
//! min_epipole_dist = 2.0
//! max_gamma_factor = 0.9
//!
//! [loss_weights]
//! w_gamma = 1.0
//! w_depth = 0.01
//! lambda = 0.85
//! alpha = 10.0
//!
//! [eval]
//! min_depth = 0.001
//! max_depth = 80.0
//! garg_crop = false
//!
//! [icp]
//! max_iters = 50
//! tol = 1e-9
//! gate = 1.0
//! ```

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::icp::IcpConfig;
use crate::loss::LossWeights;
use crate::metrics::EvalSettings;
use crate::parallax::EpipoleMaskPolicy;
use crate::plane::RansacConfig;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ToolConfig {
    pub ransac: RansacConfig,
    pub epipole_policy: EpipoleMaskPolicy,
    pub loss_weights: LossWeights,
    pub eval: EvalSettings,
    pub icp: IcpConfig,
}

impl ToolConfig {
    pub fn validate(&self) -> Result<()> {
        self.ransac.validate()?;
        self.eval.validate()?;
        self.icp.validate()
    }
}
