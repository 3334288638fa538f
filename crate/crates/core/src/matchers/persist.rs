//! A trained matcher is a parameter file plus a `<file>.meta` record of
//! `key=value` lines.

use std::path::{Path, PathBuf};

use super::{DistanceKind, FrameMatcher, MatcherKind, SiameseModel, TripletModel};
use crate::error::{Error, Result};
use crate::tensorcore::ParamSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelMetadata {
    pub kind: MatcherKind,
    pub in_channels: usize,
    pub resolution: usize,
    pub hinge: bool,
}

impl ModelMetadata {
    pub fn distance(&self) -> Option<DistanceKind> {
        self.kind.distance()
    }

    pub fn to_text(&self) -> String {
        let distance = self
            .distance()
            .map_or_else(|| "none".to_string(), |d| d.to_string());
        format!(
            "kind={}\ndistance={}\nin_channels={}\nresolution={}\nhinge={}\n",
            self.kind, distance, self.in_channels, self.resolution, self.hinge
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut kind = None;
        let mut in_channels = None;
        let mut resolution = None;
        let mut hinge = true;
        let bad = |detail: String| Error::format("model metadata", detail);
        for line in text.lines().map(str::trim).filter(|l| !l.is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("line `{line}` is not key=value")))?;
            match k {
                "kind" => kind = Some(v.parse::<MatcherKind>()?),
                "distance" => {}
                "in_channels" => {
                    in_channels = Some(
                        v.parse()
                            .map_err(|_| bad(format!("bad in_channels `{v}`")))?,
                    )
                }
                "resolution" => {
                    resolution = Some(
                        v.parse()
                            .map_err(|_| bad(format!("bad resolution `{v}`")))?,
                    )
                }
                "hinge" => hinge = v.parse().map_err(|_| bad(format!("bad hinge `{v}`")))?,
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        Ok(ModelMetadata {
            kind: kind.ok_or_else(|| bad("missing kind".into()))?,
            in_channels: in_channels.ok_or_else(|| bad("missing in_channels".into()))?,
            resolution: resolution.ok_or_else(|| bad("missing resolution".into()))?,
            hinge,
        })
    }
}

pub fn meta_path(params_path: &Path) -> PathBuf {
    let mut s = params_path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn save_matcher(params: &ParamSet, meta: &ModelMetadata, path: &Path) -> Result<()> {
    params.save(path)?;
    let mp = meta_path(path);
    std::fs::write(&mp, meta.to_text()).map_err(|e| Error::io(mp, e))
}

pub fn load_metadata(path: &Path) -> Result<ModelMetadata> {
    let mp = meta_path(path);
    let text = std::fs::read_to_string(&mp).map_err(|e| Error::io(mp, e))?;
    ModelMetadata::from_text(&text)
}

/// Loads a trained matcher and its metadata.
pub fn load_matcher(path: &Path) -> Result<(Box<dyn FrameMatcher>, ModelMetadata)> {
    let meta = load_metadata(path)?;
    let params = ParamSet::load(path)?;
    let matcher: Box<dyn FrameMatcher> = match meta.kind {
        MatcherKind::Siamese => Box::new(SiameseModel::from_params(params)?),
        MatcherKind::TripletEuc | MatcherKind::TripletSim => Box::new(TripletModel::from_params(
            params,
            meta.distance().expect("triplet kinds carry a distance"),
            meta.hinge,
        )?),
        MatcherKind::Oracle => {
            return Err(Error::invalid("the pixel oracle has no parameter file"))
        }
    };
    Ok((matcher, meta))
}
