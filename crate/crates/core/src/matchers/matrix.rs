use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::SEQUENCE_LEN;

/// Whether a larger or a smaller score marks a matching frame pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarity {
    #[serde(rename = "higher_is_match")]
    HigherIsMatch,
    #[serde(rename = "lower_is_match")]
    LowerIsMatch,
}

impl fmt::Display for Polarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Polarity::HigherIsMatch => "higher_is_match",
            Polarity::LowerIsMatch => "lower_is_match",
        })
    }
}

impl FromStr for Polarity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "higher_is_match" => Ok(Polarity::HigherIsMatch),
            "lower_is_match" => Ok(Polarity::LowerIsMatch),
            other => Err(Error::format(
                "matching matrix",
                format!("unknown polarity `{other}`"),
            )),
        }
    }
}

/// 20×20 frame-pair scores; entry (i, j) scores left frame i against right
/// frame j.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchingMatrix {
    scores: Vec<f64>,
    polarity: Polarity,
    model: String,
}

impl MatchingMatrix {
    pub const SIDE: usize = SEQUENCE_LEN;
    pub const LEN: usize = SEQUENCE_LEN * SEQUENCE_LEN;

    pub fn new(scores: Vec<f64>, polarity: Polarity, model: impl Into<String>) -> Result<Self> {
        if scores.len() != Self::LEN {
            return Err(Error::shape(
                "matching matrix",
                format!(
                    "expected {} scores ({}×{}), got {}",
                    Self::LEN,
                    Self::SIDE,
                    Self::SIDE,
                    scores.len()
                ),
            ));
        }
        if let Some(bad) = scores.iter().find(|v| !v.is_finite()) {
            return Err(Error::invalid(format!(
                "matching matrix entry {bad} is not finite"
            )));
        }
        let model = model.into();
        if model.contains([',', '\n', '=']) {
            return Err(Error::invalid(format!(
                "model tag `{model}` contains a reserved character"
            )));
        }
        Ok(MatchingMatrix {
            scores,
            polarity,
            model,
        })
    }

    pub fn from_rows(
        rows: &[Vec<f64>],
        polarity: Polarity,
        model: impl Into<String>,
    ) -> Result<Self> {
        if rows.len() != Self::SIDE || rows.iter().any(|r| r.len() != Self::SIDE) {
            return Err(Error::shape(
                "matching matrix",
                format!(
                    "expected {}×{}, got {} rows of lengths {:?}",
                    Self::SIDE,
                    Self::SIDE,
                    rows.len(),
                    rows.iter().map(Vec::len).collect::<Vec<_>>()
                ),
            ));
        }
        Self::new(rows.concat(), polarity, model)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.scores[i * Self::SIDE + j]
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn model(&self) -> &str {
        &self.model
    }

    /// Row-major scores, length 400.
    pub fn flatten(&self) -> &[f64] {
        &self.scores
    }

    /// Scores converted to higher-is-match (negated when lower is better).
    pub fn normalized(&self) -> Vec<f64> {
        match self.polarity {
            Polarity::HigherIsMatch => self.scores.clone(),
            Polarity::LowerIsMatch => self.scores.iter().map(|v| -v).collect(),
        }
    }

    /// First line `polarity=<p>,model=<tag>`, then 20 comma-separated rows.
    pub fn to_csv(&self) -> String {
        let mut s = format!("polarity={},model={}\n", self.polarity, self.model);
        for row in self.scores.chunks_exact(Self::SIDE) {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::format("matching matrix", "empty input"))?;
        let mut polarity = None;
        let mut model = None;
        for field in header.split(',') {
            match field.split_once('=') {
                Some(("polarity", v)) => polarity = Some(v.parse()?),
                Some(("model", v)) => model = Some(v.to_string()),
                _ => {
                    return Err(Error::format(
                        "matching matrix",
                        format!("bad header field `{field}`"),
                    ))
                }
            }
        }
        let polarity =
            polarity.ok_or_else(|| Error::format("matching matrix", "header lacks polarity"))?;
        let rows = lines
            .filter(|l| !l.trim().is_empty())
            .map(|l| {
                l.split(',')
                    .map(|c| {
                        c.trim().parse::<f64>().map_err(|_| {
                            Error::format("matching matrix", format!("bad score `{c}`"))
                        })
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_rows(&rows, polarity, model.unwrap_or_default())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_csv(&text)
    }
}
