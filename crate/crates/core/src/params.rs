use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Distance used to regularize the latent code towards its initial value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum LatentNorm {
    /// Sum of absolute differences over all entries.
    #[serde(alias = "L1")]
    L1,
    /// Euclidean norm of the flattened difference.
    #[serde(alias = "L2")]
    L2,
    /// Sum over spatial positions of the channel-vector Euclidean norms.
    #[default]
    #[serde(alias = "L21")]
    L21,
}

impl std::str::FromStr for LatentNorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(LatentNorm::L1),
            "l2" => Ok(LatentNorm::L2),
            "l21" | "l2,1" | "l2_1" => Ok(LatentNorm::L21),
            other => Err(Error::invalid(format!("unknown latent norm `{other}`"))),
        }
    }
}

impl std::fmt::Display for LatentNorm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LatentNorm::L1 => "L1",
            LatentNorm::L2 => "L2",
            LatentNorm::L21 => "L21",
        })
    }
}

/// Optimization and evaluation hyper-parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// Weight of the input-image embedding in the target point.
    pub lambda_image: f64,
    /// Weight of the (subtracted) source-text embedding in the target point.
    pub lambda_source: f64,
    /// Weight of the perceptual-distance term.
    pub lambda_perceptual: f64,
    /// Weight of the latent-distance term.
    pub lambda_latent: f64,
    /// Step size of the normalized-gradient update.
    pub step_size: f64,
    pub steps: usize,
    /// Augmentations per ensemble member per step; 0 embeds the raw image.
    pub augmentations: usize,
    pub latent_norm: LatentNorm,
    pub encode_resolution: usize,
    pub metric_resolution: usize,
    pub rng_seed: u64,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            lambda_image: 0.2,
            lambda_source: 0.4,
            lambda_perceptual: 0.15,
            lambda_latent: 0.05,
            step_size: 0.05,
            steps: 160,
            augmentations: 8,
            latent_norm: LatentNorm::L21,
            encode_resolution: 288,
            metric_resolution: 256,
            rng_seed: 0,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let weights = [
            ("lambda_image", self.lambda_image),
            ("lambda_source", self.lambda_source),
            ("lambda_perceptual", self.lambda_perceptual),
            ("lambda_latent", self.lambda_latent),
        ];
        for (name, v) in weights {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::invalid(format!("{name} must be a non-negative real, got {v}")));
            }
        }
        if !(self.step_size.is_finite() && self.step_size > 0.0) {
            return Err(Error::invalid(format!("step_size must be positive, got {}", self.step_size)));
        }
        if self.encode_resolution == 0 || self.metric_resolution == 0 {
            return Err(Error::invalid("resolutions must be positive"));
        }
        Ok(())
    }
}
