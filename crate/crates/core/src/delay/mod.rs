//! Signed frame delay from a matching matrix.

mod dense;
mod heatmap;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use dense::{
    densedelay_forward, matrix_features, train_densedelay, DenseDelayModel, LAYER_SIZES,
    ROW_SHARPNESS,
};
pub use heatmap::{diagonal_votes, heatmap_estimate, heatmap_estimate_with, HeatmapOptions};

use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = 40;
pub const DELAY_MIN: i32 = -20;
pub const DELAY_MAX: i32 = 19;

pub fn class_to_delay(class: usize) -> Result<i32> {
    if class >= NUM_CLASSES {
        return Err(Error::invalid(format!(
            "delay class {class} outside [0, {NUM_CLASSES})"
        )));
    }
    Ok(class as i32 + DELAY_MIN)
}

pub fn delay_to_class(delay: i32) -> Result<usize> {
    if !(DELAY_MIN..=DELAY_MAX).contains(&delay) {
        return Err(Error::invalid(format!(
            "delay {delay} outside the supported range [{DELAY_MIN}, {DELAY_MAX}]"
        )));
    }
    Ok((delay - DELAY_MIN) as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DelayMethod {
    #[serde(rename = "heatmap")]
    HeatMap,
    #[serde(rename = "dense")]
    DenseDelay,
}

impl fmt::Display for DelayMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DelayMethod::HeatMap => "heatmap",
            DelayMethod::DenseDelay => "dense",
        })
    }
}

impl FromStr for DelayMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "heatmap" => Ok(DelayMethod::HeatMap),
            "dense" => Ok(DelayMethod::DenseDelay),
            other => Err(Error::invalid(format!(
                "unknown delay method `{other}` (heatmap|dense)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DelayEstimate {
    pub delay: i32,
    /// Winning-class probability or winning-diagonal vote share.
    pub confidence: f64,
    pub method: DelayMethod,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn class_mapping_anchors() {
        assert_eq!(class_to_delay(20).unwrap(), 0);
        assert_eq!(class_to_delay(0).unwrap(), -20);
        assert_eq!(class_to_delay(39).unwrap(), 19);
        assert!(class_to_delay(40).is_err());
        assert!(delay_to_class(20).is_err());
        assert!(delay_to_class(-21).is_err());
    }

    #[test]
    fn class_mapping_is_bijective() {
        for c in 0..NUM_CLASSES {
            assert_eq!(delay_to_class(class_to_delay(c).unwrap()).unwrap(), c);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in [DelayMethod::HeatMap, DelayMethod::DenseDelay] {
            assert_eq!(m.to_string().parse::<DelayMethod>().unwrap(), m);
        }
        assert!("lstm".parse::<DelayMethod>().is_err());
    }
}
