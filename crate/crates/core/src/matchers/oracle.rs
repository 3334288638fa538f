use super::{FrameMatcher, MatcherKind, Polarity};
use crate::dataset::ImageFrame;
use crate::error::{Error, Result};

/// Untrained baseline: negative sum of squared pixel differences.
#[derive(Debug, Clone, Copy, Default)]
pub struct PixelOracle;

impl FrameMatcher for PixelOracle {
    fn kind(&self) -> MatcherKind {
        MatcherKind::Oracle
    }

    fn polarity(&self) -> Polarity {
        Polarity::HigherIsMatch
    }

    fn score(&self, left: &ImageFrame, right: &ImageFrame) -> Result<f64> {
        if (left.width(), left.height(), left.channels())
            != (right.width(), right.height(), right.channels())
        {
            return Err(Error::shape(
                "pixel oracle",
                format!(
                    "frames differ: {}×{}×{} vs {}×{}×{}",
                    left.width(),
                    left.height(),
                    left.channels(),
                    right.width(),
                    right.height(),
                    right.channels()
                ),
            ));
        }
        Ok(-left
            .data()
            .iter()
            .zip(right.data())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>())
    }
}
