//! Composite eating-quality score from a ten-person consumer panel.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PANEL_SIZE: usize = 10;
/// Scores discarded at each end before averaging.
pub const CLIPPED: usize = 2;
/// Weights of tenderness, juiciness, flavour liking and overall liking.
pub const WEIGHTS: [f64; 4] = [0.3, 0.1, 0.3, 0.3];

/// Panel scores (0–100) for one sample, ten per trait.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PanelRecord {
    pub tenderness: Vec<f64>,
    pub juiciness: Vec<f64>,
    pub flavour: Vec<f64>,
    pub overall: Vec<f64>,
}

impl PanelRecord {
    fn traits(&self) -> [(&'static str, &[f64]); 4] {
        [
            ("tenderness", &self.tenderness),
            ("juiciness", &self.juiciness),
            ("flavour", &self.flavour),
            ("overall", &self.overall),
        ]
    }
}

/// Mean of the six middle scores of a ten-score panel.
pub fn clipped_mean(trait_name: &'static str, scores: &[f64]) -> Result<f64> {
    if scores.len() != PANEL_SIZE {
        return Err(Error::PanelSize { trait_name, got: scores.len() });
    }
    if let Some(&value) = scores.iter().find(|s| !(0.0..=100.0).contains(*s)) {
        return Err(Error::PanelScore { trait_name, value });
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let kept = &sorted[CLIPPED..PANEL_SIZE - CLIPPED];
    Ok(kept.iter().sum::<f64>() / kept.len() as f64)
}

/// Weighted sum of the clipped trait means.
pub fn mq4(record: &PanelRecord) -> Result<f64> {
    let mut score = 0.0;
    for ((name, scores), w) in record.traits().into_iter().zip(WEIGHTS) {
        score += w * clipped_mean(name, scores)?;
    }
    Ok(score.clamp(0.0, 100.0))
}
