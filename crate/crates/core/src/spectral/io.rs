//! JSON and binary encodings of [`SpectralField`].
//!
//! Binary layout, all little-endian: a 16-byte header (`b"SPEC"`, `u16` version,
//! `u16` dim, `u32` K, 4 reserved zero bytes), then `L` as `f64`, then one
//! `(re, im)` pair of `f64` per mode in row-major lattice order.

use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{FrequencyBox, SpectralField};
use crate::error::{Error, Result};

pub const BINARY_MAGIC: &[u8; 4] = b"SPEC";
pub const BINARY_VERSION: u16 = 1;

/// Serde mirror of a field: `{dim, K, L, coeffs: [[re, im], …]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralFieldJson {
    pub dim: usize,
    #[serde(rename = "K")]
    pub half_width: usize,
    #[serde(rename = "L")]
    pub domain_scale: f64,
    pub coeffs: Vec<[f64; 2]>,
}

impl From<&SpectralField> for SpectralFieldJson {
    fn from(f: &SpectralField) -> Self {
        let fb = f.freq_box();
        Self {
            dim: fb.dim(),
            half_width: fb.half_width(),
            domain_scale: fb.domain_scale(),
            coeffs: f.coeffs().iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<SpectralFieldJson> for SpectralField {
    type Error = Error;

    fn try_from(j: SpectralFieldJson) -> Result<Self> {
        let fb = FrequencyBox::with_scale(j.dim, j.half_width, j.domain_scale)?;
        SpectralField::from_coeffs(fb, j.coeffs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect())
    }
}

impl Serialize for SpectralField {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        SpectralFieldJson::from(self).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for SpectralField {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let j = SpectralFieldJson::deserialize(deserializer)?;
        SpectralField::try_from(j).map_err(serde::de::Error::custom)
    }
}

impl SpectralField {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_binary(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + 16 * self.coeffs().len());
        write_binary(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn from_binary(bytes: &[u8]) -> Result<Self> {
        read_binary(&mut &bytes[..])
    }
}

pub fn write_binary<W: Write>(f: &SpectralField, w: &mut W) -> Result<()> {
    let fb = f.freq_box();
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&BINARY_VERSION.to_le_bytes())?;
    w.write_all(&(fb.dim() as u16).to_le_bytes())?;
    w.write_all(&(fb.half_width() as u32).to_le_bytes())?;
    w.write_all(&[0u8; 4])?;
    w.write_all(&fb.domain_scale().to_le_bytes())?;
    for c in f.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_binary<R: Read>(r: &mut R) -> Result<SpectralField> {
    let mut header = [0u8; 16];
    r.read_exact(&mut header)?;
    if &header[0..4] != BINARY_MAGIC {
        return Err(Error::structure("bad magic, not a spectral field record"));
    }
    let version = u16::from_le_bytes([header[4], header[5]]);
    if version != BINARY_VERSION {
        return Err(Error::structure(format!("unsupported record version {version}")));
    }
    let dim = u16::from_le_bytes([header[6], header[7]]) as usize;
    let k = u32::from_le_bytes([header[8], header[9], header[10], header[11]]) as usize;
    let mut word = [0u8; 8];
    r.read_exact(&mut word)?;
    let fb = FrequencyBox::with_scale(dim, k, f64::from_le_bytes(word))?;
    let mut coeffs = Vec::with_capacity(fb.mode_count());
    for _ in 0..fb.mode_count() {
        r.read_exact(&mut word)?;
        let re = f64::from_le_bytes(word);
        r.read_exact(&mut word)?;
        coeffs.push(Complex64::new(re, f64::from_le_bytes(word)));
    }
    SpectralField::from_coeffs(fb, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn json_layout() {
        let fb = FrequencyBox::new(1, 1).unwrap();
        let f = SpectralField::single_mode(fb, [1, 0], Complex64::new(0.5, -2.0)).unwrap();
        let v: serde_json::Value = serde_json::from_str(&f.to_json().unwrap()).unwrap();
        assert_eq!(v["dim"], 1);
        assert_eq!(v["K"], 1);
        assert_eq!(v["coeffs"][2], serde_json::json!([0.5, -2.0]));
        assert_eq!(v["coeffs"][0], serde_json::json!([0.0, 0.0]));
    }

    #[test]
    fn binary_header_layout() {
        let fb = FrequencyBox::new(2, 3).unwrap();
        let bytes = SpectralField::zeros(fb).to_binary();
        assert_eq!(&bytes[..4], b"SPEC");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        assert_eq!(u16::from_le_bytes([bytes[6], bytes[7]]), 2);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 3);
        assert_eq!(bytes.len(), 16 + 8 + 16 * 49);
        assert!(SpectralField::from_binary(&bytes[..30]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(SpectralField::from_binary(&bad).is_err());
    }

    proptest! {
        #[test]
        fn encodings_round_trip(dim in 1usize..3, k in 1usize..5, vals in proptest::collection::vec(-1e3f64..1e3, 162)) {
            let fb = FrequencyBox::new(dim, k).unwrap();
            let f = SpectralField::from_fn(fb, |n| {
                let i = fb.index_of(n).unwrap();
                Complex64::new(vals[2 * i % vals.len()], vals[(2 * i + 1) % vals.len()])
            });
            prop_assert_eq!(SpectralField::from_binary(&f.to_binary()).unwrap(), f.clone());
            prop_assert_eq!(SpectralField::from_json(&f.to_json().unwrap()).unwrap(), f);
        }
    }
}
