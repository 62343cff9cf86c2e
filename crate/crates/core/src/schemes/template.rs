use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeKind {
    MlpHash,
    BioHash,
    IomGrp,
    IomUrp,
}

impl SchemeKind {
    pub const ALL: [SchemeKind; 4] = [
        SchemeKind::MlpHash,
        SchemeKind::BioHash,
        SchemeKind::IomGrp,
        SchemeKind::IomUrp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::MlpHash => "mlp-hash",
            SchemeKind::BioHash => "biohash",
            SchemeKind::IomGrp => "iom-grp",
            SchemeKind::IomUrp => "iom-urp",
        }
    }

    pub fn is_binary(self) -> bool {
        matches!(self, SchemeKind::MlpHash | SchemeKind::BioHash)
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchemeKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown scheme '{s}'")))
    }
}

/// Checksum of a scheme's public parameters (never of the key).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ParamsDigest(pub [u8; 8]);

impl ParamsDigest {
    pub fn of(canonical: &str) -> Self {
        let h = Sha256::digest(canonical.as_bytes());
        let mut out = [0u8; 8];
        out.copy_from_slice(&h[..8]);
        ParamsDigest(out)
    }
}

impl fmt::Display for ParamsDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl FromStr for ParamsDigest {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidParameter(format!("malformed params digest '{s}'"));
        if s.len() != 16 || !s.is_ascii() {
            return Err(bad());
        }
        let mut out = [0u8; 8];
        for (i, b) in out.iter_mut().enumerate() {
            *b = u8::from_str_radix(&s[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        Ok(ParamsDigest(out))
    }
}

/// Fixed-length bit string packed 64 bits per word, bit `i` in word `i / 64`
/// at position `i % 64`. Padding bits are always zero.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVector {
    words: Vec<u64>,
    len: usize,
}

impl BitVector {
    pub fn zeros(len: usize) -> Self {
        BitVector {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bools<I: IntoIterator<Item = bool>>(bits: I) -> Self {
        let mut words = Vec::new();
        let mut len = 0;
        for b in bits {
            if len % 64 == 0 {
                words.push(0);
            }
            if b {
                words[len / 64] |= 1 << (len % 64);
            }
            len += 1;
        }
        BitVector { words, len }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len);
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, v: bool) {
        assert!(i < self.len);
        let mask = 1u64 << (i % 64);
        if v {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(|i| self.get(i))
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn complement(&self) -> Self {
        let mut out = BitVector {
            words: self.words.iter().map(|w| !w).collect(),
            len: self.len,
        };
        out.clear_padding();
        out
    }

    fn clear_padding(&mut self) {
        let tail = self.len % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// Number of differing positions.
    pub fn hamming(&self, other: &BitVector) -> Result<usize> {
        if self.len != other.len {
            return Err(Error::LengthMismatch(self.len, other.len));
        }
        Ok(self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum())
    }

    /// Hex string, bits packed MSB-first into bytes (bit 0 is the top bit of
    /// the first byte), two lowercase digits per byte.
    pub fn to_hex(&self) -> String {
        let nbytes = self.len.div_ceil(8);
        let mut s = String::with_capacity(nbytes * 2);
        for byte_idx in 0..nbytes {
            let mut byte = 0u8;
            for k in 0..8 {
                let i = byte_idx * 8 + k;
                if i < self.len && self.get(i) {
                    byte |= 0x80 >> k;
                }
            }
            s.push_str(&format!("{byte:02x}"));
        }
        s
    }

    pub fn from_hex(hex: &str, len: usize) -> Result<Self> {
        let bad = |m: &str| Error::InvalidParameter(format!("bit string: {m}"));
        if hex.len() != len.div_ceil(8) * 2 {
            return Err(bad("length does not match template length"));
        }
        let mut out = BitVector::zeros(len);
        for byte_idx in 0..len.div_ceil(8) {
            let byte = u8::from_str_radix(
                hex.get(2 * byte_idx..2 * byte_idx + 2).ok_or_else(|| bad("not ascii"))?,
                16,
            )
            .map_err(|_| bad("not hexadecimal"))?;
            for k in 0..8 {
                let i = byte_idx * 8 + k;
                let on = byte & (0x80 >> k) != 0;
                if i < len {
                    out.set(i, on);
                } else if on {
                    return Err(bad("non-zero padding"));
                }
            }
        }
        Ok(out)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Payload {
    Bits(BitVector),
    Indices(Vec<u32>),
}

/// Output of one of the protection schemes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProtectedTemplate {
    pub scheme: SchemeKind,
    pub payload: Payload,
    pub params_digest: ParamsDigest,
}

impl ProtectedTemplate {
    pub fn len(&self) -> usize {
        match &self.payload {
            Payload::Bits(b) => b.len(),
            Payload::Indices(ix) => ix.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bits(&self) -> Option<&BitVector> {
        match &self.payload {
            Payload::Bits(b) => Some(b),
            Payload::Indices(_) => None,
        }
    }

    pub fn indices(&self) -> Option<&[u32]> {
        match &self.payload {
            Payload::Indices(ix) => Some(ix),
            Payload::Bits(_) => None,
        }
    }
}

/// Similarity `1 - hamming / length` in `[0, 1]`.
///
/// Bit templates count differing bits; index templates count positions whose
/// indices differ.
pub fn hamming_score(a: &ProtectedTemplate, b: &ProtectedTemplate) -> Result<f64> {
    if a.scheme != b.scheme || a.params_digest != b.params_digest {
        return Err(Error::SchemeMismatch);
    }
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n == 0 {
        return Ok(1.0);
    }
    let dist = match (&a.payload, &b.payload) {
        (Payload::Bits(x), Payload::Bits(y)) => x.hamming(y)?,
        (Payload::Indices(x), Payload::Indices(y)) => {
            x.iter().zip(y).filter(|(p, q)| p != q).count()
        }
        _ => return Err(Error::SchemeMismatch),
    };
    Ok(1.0 - dist as f64 / n as f64)
}
