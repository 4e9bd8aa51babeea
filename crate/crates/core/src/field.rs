//! Fourier coefficient arrays on the truncated cube [−N_max, N_max]³.
//!
//! Coefficients follow the normalized Haar convention: u(x) = Σ a_n e^{in·x}
//! and ∫|u|² = Σ|a_n|² with ∫ the mean over 𝕋³.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::Freq;

pub const CONVENTION: &str = "normalized_haar";
const MAGIC: &[u8; 4] = b"QLFF";
const VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct FourierField {
    n_max: usize,
    coeffs: Vec<Complex64>,
}

impl FourierField {
    pub fn zeros(n_max: usize) -> Self {
        let side = 2 * n_max + 1;
        FourierField { n_max, coeffs: vec![Complex64::new(0.0, 0.0); side * side * side] }
    }

    pub fn from_fn(n_max: usize, mut f: impl FnMut(Freq) -> Complex64) -> Self {
        let mut out = Self::zeros(n_max);
        for (i, n) in crate::lattice::cube_points(n_max).into_iter().enumerate() {
            out.coeffs[i] = f(n);
        }
        out
    }

    /// A field with a single nonzero coefficient.
    pub fn plane_wave(n_max: usize, n0: Freq, amplitude: Complex64) -> Self {
        let mut out = Self::zeros(n_max);
        out.set(n0, amplitude);
        out
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn side(&self) -> usize {
        2 * self.n_max + 1
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn index(&self, n: Freq) -> Option<usize> {
        let m = self.n_max as i32;
        if n.max_abs() > m {
            return None;
        }
        let s = self.side();
        let [x, y, z] = n.0;
        Some((((x + m) as usize) * s + (y + m) as usize) * s + (z + m) as usize)
    }

    pub fn freq_at(&self, i: usize) -> Freq {
        let s = self.side();
        let m = self.n_max as i32;
        Freq([(i / (s * s)) as i32 - m, ((i / s) % s) as i32 - m, (i % s) as i32 - m])
    }

    /// a_n, or zero outside the cube.
    pub fn get(&self, n: Freq) -> Complex64 {
        self.index(n).map_or(Complex64::new(0.0, 0.0), |i| self.coeffs[i])
    }

    /// Panics if n lies outside the cube.
    pub fn set(&mut self, n: Freq, v: Complex64) {
        let i = self.index(n).expect("frequency outside the field cube");
        self.coeffs[i] = v;
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn iter(&self) -> impl Iterator<Item = (Freq, Complex64)> + '_ {
        self.coeffs.iter().enumerate().map(move |(i, &c)| (self.freq_at(i), c))
    }

    /// Nonzero entries only.
    pub fn support(&self) -> Vec<(Freq, Complex64)> {
        self.iter().filter(|(_, c)| c.norm_sqr() > 0.0).collect()
    }

    /// Σ|a_n|² = ∫|u|².
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// Copy onto a cube of a different size, dropping modes that do not fit.
    pub fn resized(&self, n_max: usize) -> FourierField {
        let mut out = FourierField::zeros(n_max);
        let m = self.n_max.min(n_max) as i32;
        for x in -m..=m {
            for y in -m..=m {
                for z in -m..=m {
                    let n = Freq([x, y, z]);
                    out.set(n, self.get(n));
                }
            }
        }
        out
    }

    pub fn map(&self, mut f: impl FnMut(Freq, Complex64) -> Complex64) -> FourierField {
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            out.coeffs[i] = f(self.freq_at(i), self.coeffs[i]);
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> FourierField {
        self.map(|_, c| c * s)
    }

    /// Entrywise a + b on the larger of the two cubes.
    pub fn add(&self, other: &FourierField) -> FourierField {
        let n = self.n_max.max(other.n_max);
        FourierField::from_fn(n, |k| self.get(k) + other.get(k))
    }

    pub fn sub(&self, other: &FourierField) -> FourierField {
        let n = self.n_max.max(other.n_max);
        FourierField::from_fn(n, |k| self.get(k) - other.get(k))
    }

    /// Coefficients of the complex conjugate function: b_n = conj(a_{−n}).
    pub fn conj_reflect(&self) -> FourierField {
        FourierField::from_fn(self.n_max, |k| self.get(-k).conj())
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// max_n |a_n − b_n| over the union of both cubes.
    pub fn max_abs_diff(&self, other: &FourierField) -> f64 {
        self.sub(other).max_abs()
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(FieldJson::from(self)).expect("field serializes")
    }

    pub fn from_json(v: &serde_json::Value) -> Result<Self> {
        let raw: FieldJson = serde_json::from_value(v.clone())?;
        raw.try_into()
    }

    /// Binary form: magic, version, n_max, convention tag, then (re, im) f64
    /// pairs little-endian in lexicographic frequency order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(16 + 16 * self.coeffs.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(self.n_max as u32).to_le_bytes());
        out.extend_from_slice(&1u32.to_le_bytes());
        for c in &self.coeffs {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (field, used) = Self::read_bytes(bytes)?;
        if used != bytes.len() {
            return Err(Error::Format("trailing bytes after field".into()));
        }
        Ok(field)
    }

    /// Parse one field from the front of `bytes`, returning it and the byte count consumed.
    pub fn read_bytes(bytes: &[u8]) -> Result<(Self, usize)> {
        let word = |at: usize| -> Result<u32> {
            bytes
                .get(at..at + 4)
                .map(|b| u32::from_le_bytes(b.try_into().unwrap()))
                .ok_or_else(|| Error::Format("truncated field header".into()))
        };
        if bytes.get(..4) != Some(MAGIC.as_slice()) {
            return Err(Error::Format("bad field magic".into()));
        }
        if word(4)? != VERSION {
            return Err(Error::Format("unsupported field version".into()));
        }
        let n_max = word(8)? as usize;
        if word(12)? != 1 {
            return Err(Error::Format("unknown coefficient convention".into()));
        }
        let mut field = FourierField::zeros(n_max);
        let need = 16 + 16 * field.len();
        if bytes.len() < need {
            return Err(Error::Format("truncated field payload".into()));
        }
        for (i, c) in field.coeffs.iter_mut().enumerate() {
            let at = 16 + 16 * i;
            let re = f64::from_le_bytes(bytes[at..at + 8].try_into().unwrap());
            let im = f64::from_le_bytes(bytes[at + 8..at + 16].try_into().unwrap());
            *c = Complex64::new(re, im);
        }
        Ok((field, need))
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FieldJson {
    n_max: usize,
    convention: String,
    coefficients: Vec<[f64; 2]>,
}

impl From<&FourierField> for FieldJson {
    fn from(f: &FourierField) -> Self {
        FieldJson {
            n_max: f.n_max,
            convention: CONVENTION.into(),
            coefficients: f.coeffs.iter().map(|c| [c.re, c.im]).collect(),
        }
    }
}

impl TryFrom<FieldJson> for FourierField {
    type Error = Error;
    fn try_from(j: FieldJson) -> Result<Self> {
        if j.convention != CONVENTION {
            return Err(Error::Format(format!("unknown convention `{}`", j.convention)));
        }
        let mut f = FourierField::zeros(j.n_max);
        if j.coefficients.len() != f.len() {
            return Err(Error::Format(format!(
                "expected {} coefficients for n_max = {}, got {}",
                f.len(),
                j.n_max,
                j.coefficients.len()
            )));
        }
        for (c, [re, im]) in f.coeffs.iter_mut().zip(j.coefficients) {
            *c = Complex64::new(re, im);
        }
        Ok(f)
    }
}

impl Serialize for FourierField {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FieldJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for FourierField {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        FieldJson::deserialize(d)?.try_into().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FourierField {
        FourierField::from_fn(2, |n| Complex64::new(n.0[0] as f64 + 0.5, (n.0[1] * n.0[2]) as f64))
    }

    #[test]
    fn index_roundtrip() {
        let f = FourierField::zeros(3);
        for i in 0..f.len() {
            assert_eq!(f.index(f.freq_at(i)), Some(i));
        }
        assert_eq!(f.index(Freq::new(4, 0, 0)), None);
    }

    #[test]
    fn lexicographic_layout() {
        let f = FourierField::zeros(1);
        let freqs: Vec<Freq> = (0..f.len()).map(|i| f.freq_at(i)).collect();
        let mut sorted = freqs.clone();
        sorted.sort();
        assert_eq!(freqs, sorted);
    }

    #[test]
    fn json_roundtrip() {
        let f = sample();
        let back = FourierField::from_json(&f.to_json()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn bytes_roundtrip_and_errors() {
        let f = sample();
        let b = f.to_bytes();
        assert_eq!(FourierField::from_bytes(&b).unwrap(), f);
        assert!(FourierField::from_bytes(&b[..b.len() - 1]).is_err());
        let mut bad = b.clone();
        bad[0] = b'X';
        assert!(FourierField::from_bytes(&bad).is_err());
    }

    #[test]
    fn conj_reflect_is_involution() {
        let f = sample();
        assert_eq!(f.conj_reflect().conj_reflect(), f);
    }

    #[test]
    fn resize_keeps_low_modes() {
        let f = sample();
        let g = f.resized(4).resized(2);
        assert_eq!(f, g);
        assert_eq!(f.resized(1).get(Freq::new(2, 0, 0)), Complex64::new(0.0, 0.0));
    }
}
