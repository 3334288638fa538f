//! Named parameter storage and its binary file format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "VSYNC" | version u32 | seed u64 | count u32
//! count × { name_len u32 | name utf-8 | rank u32 | rank × dim u64 | values f64... }
//! ```

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"VSYNC";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSet {
    seed: u64,
    version: u32,
    tensors: BTreeMap<String, Tensor>,
}

impl ParamSet {
    pub fn new(seed: u64) -> Self {
        ParamSet {
            seed,
            version: FORMAT_VERSION,
            tensors: BTreeMap::new(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if self.tensors.contains_key(&name) {
            return Err(Error::DuplicateParameter(name));
        }
        self.tensors.insert(name, tensor);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&Tensor> {
        self.tensors
            .get(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn get_mut(&mut self, name: &str) -> Result<&mut Tensor> {
        self.tensors
            .get_mut(name)
            .ok_or_else(|| Error::UnknownParameter(name.to_string()))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.tensors.contains_key(name)
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_values(&self) -> usize {
        self.tensors.values().map(Tensor::numel).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.tensors.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.tensors.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn zero_grad(&mut self) {
        self.tensors.values_mut().for_each(Tensor::zero_grad);
    }

    /// Values only; gradients are not part of the persisted state.
    pub fn same_values(&self, other: &ParamSet) -> bool {
        self.tensors.len() == other.tensors.len()
            && self.tensors.iter().zip(&other.tensors).all(|(a, b)| {
                a.0 == b.0
                    && a.1.shape() == b.1.shape()
                    && a.1
                        .values()
                        .iter()
                        .zip(b.1.values())
                        .all(|(x, y)| x.to_bits() == y.to_bits())
            })
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&self.version.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&(self.tensors.len() as u32).to_le_bytes())?;
        for (name, t) in &self.tensors {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            write_planes(&mut w, t.shape(), t.values())?;
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let (version, seed) = read_header(&mut r, "parameter file")?;
        let count = read_u32(&mut r, "parameter file")?;
        let mut set = ParamSet {
            seed,
            version,
            tensors: BTreeMap::new(),
        };
        for _ in 0..count {
            let len = read_u32(&mut r, "parameter file")? as usize;
            let mut name = vec![0u8; len];
            read_exact(&mut r, &mut name, "parameter file")?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::format("parameter file", "name is not valid UTF-8"))?;
            let (shape, values) = read_planes(&mut r, "parameter file")?;
            set.insert(name, Tensor::new(shape, values)?)?;
        }
        Ok(set)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        Self::read_from(bytes)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

/// Glorot-uniform initialization: U(-l, l) with l = sqrt(6 / (fan_in + fan_out)).
pub fn glorot_uniform(
    shape: &[usize],
    fan_in: usize,
    fan_out: usize,
    rng: &mut ChaCha8Rng,
) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    let mut t = Tensor::zeros(shape);
    for v in t.values_mut() {
        *v = rng.gen_range(-limit..limit);
    }
    t
}

pub(crate) fn write_header<W: Write>(w: &mut W, version: u32, seed: u64) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&version.to_le_bytes())?;
    w.write_all(&seed.to_le_bytes())
}

pub(crate) fn write_planes<W: Write>(
    w: &mut W,
    shape: &[usize],
    values: &[f64],
) -> std::io::Result<()> {
    w.write_all(&(shape.len() as u32).to_le_bytes())?;
    for &d in shape {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    for v in values {
        w.write_all(&v.to_le_bytes())?;
    }
    Ok(())
}

pub(crate) fn read_header<R: Read>(r: &mut R, what: &'static str) -> Result<(u32, u64)> {
    let mut magic = [0u8; 5];
    read_exact(r, &mut magic, what)?;
    if &magic != MAGIC {
        return Err(Error::format(what, "missing VSYNC magic"));
    }
    let version = read_u32(r, what)?;
    if version != FORMAT_VERSION {
        return Err(Error::format(
            what,
            format!("unsupported format version {version}"),
        ));
    }
    let mut seed = [0u8; 8];
    read_exact(r, &mut seed, what)?;
    Ok((version, u64::from_le_bytes(seed)))
}

pub(crate) fn read_planes<R: Read>(
    r: &mut R,
    what: &'static str,
) -> Result<(Vec<usize>, Vec<f64>)> {
    let rank = read_u32(r, what)? as usize;
    if rank == 0 || rank > 8 {
        return Err(Error::format(what, format!("implausible rank {rank}")));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut numel = 1usize;
    for _ in 0..rank {
        let mut b = [0u8; 8];
        read_exact(r, &mut b, what)?;
        let d = u64::from_le_bytes(b) as usize;
        numel = numel
            .checked_mul(d)
            .filter(|&n| n <= 1 << 32)
            .ok_or_else(|| Error::format(what, "tensor too large"))?;
        shape.push(d);
    }
    let mut raw = vec![0u8; numel * 8];
    read_exact(r, &mut raw, what)?;
    let values = raw
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((shape, values))
}

fn read_u32<R: Read>(r: &mut R, what: &'static str) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b, what)?;
    Ok(u32::from_le_bytes(b))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &'static str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| Error::format(what, "unexpected end of data"))
}
