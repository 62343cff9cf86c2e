//! Key-seeded random matrices and row-wise Gram-Schmidt.
//!
//! Random stream: ChaCha20 (`rand_chacha::ChaCha20Rng`, 20 rounds) keyed with the
//! little-endian bytes of the 64-bit user key in the first 8 bytes of the 32-byte
//! seed (remaining bytes zero), with the ChaCha stream id set to `stream_id`.
//! Uniforms take the top 53 bits of each `u64` word as `(k + 0.5) / 2^53`, which
//! lies strictly inside (0, 1). Normals use the Box-Muller transform, emitting the
//! cosine branch first and the sine branch on the next call. `ln`, `sqrt`, `sin`
//! and `cos` come from `libm`, so the stream is the same on every platform.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{axpy, dot, norm, Scalar};

/// Default residual tolerance for [`gram_schmidt_rows`].
pub const GS_TOLERANCE: f64 = 1e-10;

/// A user's secret key `k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserKey(pub u64);

impl UserKey {
    /// Mix an extra word into the key (splitmix64 finalizer).
    pub fn derive(self, salt: u64) -> UserKey {
        let mut z = self.0 ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        UserKey(z ^ (z >> 31))
    }
}

impl From<u64> for UserKey {
    fn from(v: u64) -> Self {
        UserKey(v)
    }
}

/// Deterministic stream of uniforms and standard normals for one `(key, stream_id)`.
#[derive(Debug, Clone)]
pub struct KeyStream {
    rng: ChaCha20Rng,
    spare: Option<f64>,
}

impl KeyStream {
    pub fn new(key: UserKey, stream_id: u64) -> Self {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&key.0.to_le_bytes());
        let mut rng = ChaCha20Rng::from_seed(seed);
        rng.set_stream(stream_id);
        KeyStream { rng, spare: None }
    }

    /// Uniform in the open interval (0, 1).
    pub fn next_uniform(&mut self) -> f64 {
        let k = self.rng.next_u64() >> 11;
        (k as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = libm::sqrt(-2.0 * libm::log(u1));
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * libm::sin(theta));
        r * libm::cos(theta)
    }

    /// Uniform integer in `0..n` by rejection, `n >= 1`.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below needs a non-empty range");
        let zone = u64::MAX - (u64::MAX - n + 1) % n;
        loop {
            let v = self.rng.next_u64();
            if v <= zone {
                return v % n;
            }
        }
    }

    /// Uniformly random permutation of `0..n` (Fisher-Yates, high to low).
    pub fn permutation(&mut self, n: usize) -> Vec<usize> {
        let mut p: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            p.swap(i, j);
        }
        p
    }

    pub fn normals<T: Scalar>(&mut self, n: usize) -> Vec<T> {
        (0..n).map(|_| T::of(self.next_normal())).collect()
    }
}

impl Iterator for KeyStream {
    type Item = f64;

    fn next(&mut self) -> Option<f64> {
        Some(self.next_normal())
    }
}

/// Unbounded standard-normal stream fully determined by `(seed, stream_id)`.
pub fn seeded_prng(seed: UserKey, stream_id: u64) -> KeyStream {
    KeyStream::new(seed, stream_id)
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> Matrix<T> {
    pub fn from_vec(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteInput);
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            if r.len() != cols {
                return Err(Error::DimensionMismatch {
                    expected: cols,
                    found: r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_vec(rows.len(), cols, data)
    }

    pub fn identity(n: usize) -> Self {
        let mut data = vec![T::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = T::one();
        }
        Matrix {
            rows: n,
            cols: n,
            data,
        }
    }

    /// `rows x cols` matrix of standard normals, filled row by row from `stream`.
    pub fn gaussian(rows: usize, cols: usize, stream: &mut KeyStream) -> Self {
        Matrix {
            rows,
            cols,
            data: stream.normals(rows * cols),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    fn row_mut(&mut self, i: usize) -> &mut [T] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for j in 0..self.cols {
            for i in 0..self.rows {
                data.push(self.get(i, j));
            }
        }
        Matrix {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Row vector times matrix: `out = x * self`, `|x| = rows`.
    pub fn left_mul(&self, x: &[T], out: &mut Vec<T>) {
        assert_eq!(x.len(), self.rows, "left_mul: input length");
        out.clear();
        out.resize(self.cols, T::zero());
        for (k, &xk) in x.iter().enumerate() {
            if xk != T::zero() {
                axpy(xk, self.row(k), out);
            }
        }
    }

    /// Matrix times column vector: `out = self * x`, `|x| = cols`.
    pub fn right_mul(&self, x: &[T], out: &mut Vec<T>) {
        assert_eq!(x.len(), self.cols, "right_mul: input length");
        out.clear();
        out.extend((0..self.rows).map(|i| dot(self.row(i), x)));
    }

    /// `self * other^T`.
    pub fn mul_transpose(&self, other: &Matrix<T>) -> Matrix<T> {
        assert_eq!(self.cols, other.cols);
        let mut data = Vec::with_capacity(self.rows * other.rows);
        for i in 0..self.rows {
            for j in 0..other.rows {
                data.push(dot(self.row(i), other.row(j)));
            }
        }
        Matrix {
            rows: self.rows,
            cols: other.rows,
            data,
        }
    }

    /// Rows `start..end` as a new matrix.
    pub fn row_block(&self, start: usize, end: usize) -> Matrix<T> {
        Matrix {
            rows: end - start,
            cols: self.cols,
            data: self.data[start * self.cols..end * self.cols].to_vec(),
        }
    }

    pub fn max_abs_diff(&self, other: &Matrix<T>) -> T {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .fold(T::zero(), |m, (&a, &b)| m.max((a - b).abs()))
    }
}

/// Modified Gram-Schmidt over rows, restarting the basis every `cols` rows.
///
/// `redraw(row)` is asked for a replacement when a residual norm drops below
/// `tol`; returning `None` fails with `DegenerateDraw`. At most `rows` redraws
/// are attempted overall.
fn orthonormalize_rows<T, F>(mut m: Matrix<T>, tol: f64, mut redraw: F) -> Result<Matrix<T>>
where
    T: Scalar,
    F: FnMut(usize) -> Option<Vec<T>>,
{
    let (rows, cols) = (m.rows, m.cols);
    let tol = T::of(tol);
    let mut retries = 0;
    let mut i = 0;
    while i < rows {
        let block_start = i - i % cols;
        let mut v = m.row(i).to_vec();
        for j in block_start..i {
            let q = m.row(j);
            let c = dot(&v, q);
            axpy(-c, q, &mut v);
        }
        let n = norm(&v);
        if n < tol || !n.is_finite() {
            if retries >= rows {
                return Err(Error::DegenerateDraw { row: i, retries });
            }
            match redraw(i) {
                Some(fresh) => {
                    retries += 1;
                    m.row_mut(i).copy_from_slice(&fresh);
                    continue;
                }
                None => return Err(Error::DegenerateDraw { row: i, retries }),
            }
        }
        let inv = T::one() / n;
        for (dst, &src) in m.row_mut(i).iter_mut().zip(&v) {
            *dst = src * inv;
        }
        i += 1;
    }
    Ok(m)
}

/// Orthonormalize the rows of `m` in order.
///
/// When `rows > cols`, the rows are split into consecutive blocks of `cols`
/// rows and each block is orthonormalized on its own, so every block is an
/// orthonormal set and every row has unit norm. A row whose residual falls
/// below `tol` is reported as [`Error::DegenerateDraw`].
pub fn gram_schmidt_rows<T: Scalar>(m: &Matrix<T>, tol: f64) -> Result<Matrix<T>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {tol}")));
    }
    if m.data.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    orthonormalize_rows(m.clone(), tol, |_| None)
}

/// The orthonormal weight matrix of layer `layer_index` for `key`.
///
/// Draws `rows x cols` normals from stream `layer_index`, then runs
/// [`gram_schmidt_rows`]. A degenerate row is replaced by the next `cols`
/// values of the same stream.
pub fn gen_orthonormal_layer<T: Scalar>(
    key: UserKey,
    layer_index: u64,
    rows: usize,
    cols: usize,
) -> Result<Matrix<T>> {
    let mut stream = KeyStream::new(key, layer_index);
    orthonormal_from_stream(&mut stream, rows, cols)
}

pub(crate) fn orthonormal_from_stream<T: Scalar>(
    stream: &mut KeyStream,
    rows: usize,
    cols: usize,
) -> Result<Matrix<T>> {
    if rows == 0 || cols == 0 {
        return Err(Error::InvalidParameter(format!(
            "layer shape must be at least 1x1, got {rows}x{cols}"
        )));
    }
    let raw = Matrix::gaussian(rows, cols, stream);
    orthonormalize_rows(raw, GS_TOLERANCE, |_| Some(stream.normals(cols)))
}

/// The per-user stack of orthonormal layer matrices, layer `l` (1-based) drawn
/// from stream `l`.
#[derive(Debug, Clone)]
pub struct OrthonormalStack<T> {
    layers: Vec<Matrix<T>>,
}

impl<T: Scalar> OrthonormalStack<T> {
    /// `lengths[0]` is the input width; one matrix per consecutive pair.
    pub fn generate(key: UserKey, lengths: &[usize]) -> Result<Self> {
        if lengths.len() < 2 {
            return Err(Error::InvalidParameter(
                "need at least input and output widths".into(),
            ));
        }
        let layers = lengths
            .windows(2)
            .enumerate()
            .map(|(i, w)| gen_orthonormal_layer(key, i as u64 + 1, w[0], w[1]))
            .collect::<Result<Vec<_>>>()?;
        Ok(OrthonormalStack { layers })
    }

    pub fn layers(&self) -> &[Matrix<T>] {
        &self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].rows()
    }
}
