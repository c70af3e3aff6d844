//! Dense embedding matrices and the SEMB interchange format.
//!
//! SEMB layout, all integers little-endian:
//!
//! ```text
//! offset  size   field
//! 0       4      magic "SEMB"
//! 4       4      format version (u32, = 1)
//! 8       8      rows n (u64)
//! 16      8      dims d (u64)
//! 24      4·n·d  f32 values, row-major
//! ```
//!
//! A plain-text fallback is also accepted on read: one row per line,
//! whitespace-separated decimal floats, constant column count.

use std::path::Path;

use ndarray::{Array2, ArrayView2};

use crate::error::{Error, Result};
use crate::io_util::write_atomic;

pub const SEMB_MAGIC: &[u8; 4] = b"SEMB";
pub const SEMB_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

/// An `n × d` matrix of finite `f32` values; row `i` embeds response `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    data: Array2<f32>,
}

impl EmbeddingMatrix {
    pub fn new(data: Array2<f32>) -> Result<Self> {
        check_finite(data.view())?;
        Ok(EmbeddingMatrix { data })
    }

    pub fn from_rows(rows: usize, dims: usize, values: Vec<f32>) -> Result<Self> {
        let data = Array2::from_shape_vec((rows, dims), values)
            .map_err(|e| Error::arg(format!("bad matrix shape: {e}")))?;
        Self::new(data)
    }

    pub fn rows(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f32> {
        self.data.view()
    }

    /// Widens to `f64` for numerical work.
    pub fn to_f64(&self) -> Array2<f64> {
        self.data.mapv(f64::from)
    }

    /// Bitwise equality, distinguishing `0.0` from `-0.0`.
    pub fn bitwise_eq(&self, other: &Self) -> bool {
        self.data.dim() == other.data.dim()
            && self
                .data
                .iter()
                .zip(other.data.iter())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    pub fn to_semb_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 4 * self.data.len());
        out.extend_from_slice(SEMB_MAGIC);
        out.extend_from_slice(&SEMB_VERSION.to_le_bytes());
        out.extend_from_slice(&(self.rows() as u64).to_le_bytes());
        out.extend_from_slice(&(self.dims() as u64).to_le_bytes());
        for v in self.data.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_semb_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 || &bytes[..4] != SEMB_MAGIC {
            return Err(Error::BadMagic {
                expected: "SEMB".into(),
                found: bytes.iter().take(4).copied().collect(),
            });
        }
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        if version != SEMB_VERSION {
            return Err(Error::UnsupportedVersion {
                expected: SEMB_VERSION,
                found: version,
            });
        }
        let n = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
        let d = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
        let payload = &bytes[HEADER_LEN..];
        let expected = n
            .checked_mul(d)
            .and_then(|c| c.checked_mul(4))
            .and_then(|c| usize::try_from(c).ok())
            .ok_or_else(|| Error::arg(format!("header dimensions {n}×{d} overflow")))?;
        if payload.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: payload.len(),
            });
        }
        if payload.len() > expected {
            return Err(Error::SizeMismatch {
                expected,
                found: payload.len(),
            });
        }
        let values: Vec<f32> = payload
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Self::from_rows(n as usize, d as usize, values)
    }
}

fn check_finite(data: ArrayView2<'_, f32>) -> Result<()> {
    for ((row, col), v) in data.indexed_iter() {
        if !v.is_finite() {
            return Err(Error::NonFinite { row, col });
        }
    }
    Ok(())
}

/// Reads a SEMB file, or the whitespace-separated text fallback when the file
/// is valid UTF-8 without the SEMB magic.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(SEMB_MAGIC) {
        return EmbeddingMatrix::from_semb_bytes(&bytes);
    }
    match std::str::from_utf8(&bytes) {
        Ok(text) => parse_text(path, text),
        Err(_) => EmbeddingMatrix::from_semb_bytes(&bytes),
    }
}

fn parse_text(path: &Path, text: &str) -> Result<EmbeddingMatrix> {
    let mut values = Vec::new();
    let mut dims = None;
    let mut rows = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let before = values.len();
        for (col, field) in line.split_whitespace().enumerate() {
            let v: f32 = field.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line: lineno + 1,
                message: format!("column {col}: {field:?} is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite { row: rows, col });
            }
            values.push(v);
        }
        let width = values.len() - before;
        match dims {
            None => dims = Some(width),
            Some(d) if d != width => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: lineno + 1,
                    message: format!("expected {d} columns, found {width}"),
                })
            }
            Some(_) => {}
        }
        rows += 1;
    }
    EmbeddingMatrix::from_rows(rows, dims.unwrap_or(0), values)
}

pub fn write_embeddings(matrix: &EmbeddingMatrix, path: &Path) -> Result<()> {
    check_finite(matrix.view())?;
    write_atomic(path, &matrix.to_semb_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use proptest::prelude::*;

    fn round_trip(m: &EmbeddingMatrix) -> EmbeddingMatrix {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.semb");
        write_embeddings(m, &p).unwrap();
        read_embeddings(&p).unwrap()
    }

    #[test]
    fn minimal_file() {
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"SEMB");
        bytes.extend_from_slice(&1u32.to_le_bytes());
        bytes.extend_from_slice(&2u64.to_le_bytes());
        bytes.extend_from_slice(&3u64.to_le_bytes());
        for v in [1.0f32, 2.0, 3.0, 4.0, 5.0, 6.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        let m = EmbeddingMatrix::from_semb_bytes(&bytes).unwrap();
        assert_eq!((m.rows(), m.dims()), (2, 3));
        assert_eq!(m.view()[[1, 2]], 6.0);

        bytes.truncate(bytes.len() - 4);
        assert!(matches!(
            EmbeddingMatrix::from_semb_bytes(&bytes),
            Err(Error::Truncated { expected: 24, found: 20 })
        ));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let m = EmbeddingMatrix::new(array![[1.0f32]]).unwrap();
        let mut bytes = m.to_semb_bytes();
        bytes.push(0);
        assert!(matches!(
            EmbeddingMatrix::from_semb_bytes(&bytes),
            Err(Error::SizeMismatch { .. })
        ));
    }

    #[test]
    fn bad_magic_and_version() {
        assert!(matches!(
            EmbeddingMatrix::from_semb_bytes(b"SEMX\x01\0\0\0"),
            Err(Error::BadMagic { .. })
        ));
        let mut bytes = EmbeddingMatrix::new(array![[1.0f32]]).unwrap().to_semb_bytes();
        bytes[4] = 2;
        assert!(matches!(
            EmbeddingMatrix::from_semb_bytes(&bytes),
            Err(Error::UnsupportedVersion { found: 2, .. })
        ));
    }

    #[test]
    fn binary_garbage_is_bad_magic() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("g.semb");
        std::fs::write(&p, [0xffu8, 0xfe, 0x00, 0x01, 0x02]).unwrap();
        assert!(matches!(read_embeddings(&p), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn non_finite_reported_with_position() {
        let mut bytes = EmbeddingMatrix::new(array![[1.0f32, 2.0], [3.0, 4.0]])
            .unwrap()
            .to_semb_bytes();
        let off = HEADER_LEN + 4 * 3;
        bytes[off..off + 4].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            EmbeddingMatrix::from_semb_bytes(&bytes),
            Err(Error::NonFinite { row: 1, col: 1 })
        ));
        assert!(EmbeddingMatrix::new(array![[f32::INFINITY]]).is_err());
    }

    #[test]
    fn small_round_trips() {
        let one = EmbeddingMatrix::new(array![[0.0f32]]).unwrap();
        assert!(round_trip(&one).bitwise_eq(&one));
        let eye = EmbeddingMatrix::new(array![[1.0f32, 0.0], [0.0, 1.0]]).unwrap();
        assert!(round_trip(&eye).bitwise_eq(&eye));
    }

    #[test]
    fn text_fallback() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.txt");
        std::fs::write(&p, "1 2 3\n4.5\t-6 7e-1\n").unwrap();
        let m = read_embeddings(&p).unwrap();
        assert_eq!((m.rows(), m.dims()), (2, 3));
        assert_eq!(m.view()[[1, 2]], 0.7);

        std::fs::write(&p, "1 2 3\n4 5\n").unwrap();
        assert!(matches!(read_embeddings(&p), Err(Error::Parse { line: 2, .. })));
        std::fs::write(&p, "1 nan\n").unwrap();
        assert!(matches!(read_embeddings(&p), Err(Error::NonFinite { row: 0, col: 1 })));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn semb_bytes_round_trip(rows in 0usize..12, dims in 0usize..9, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let values: Vec<f32> = (0..rows * dims)
                .map(|_| f32::from_bits(rng.random::<u32>()))
                .map(|v| if v.is_finite() { v } else { -0.0 })
                .collect();
            let m = EmbeddingMatrix::from_rows(rows, dims, values).unwrap();
            let back = EmbeddingMatrix::from_semb_bytes(&m.to_semb_bytes()).unwrap();
            prop_assert!(back.bitwise_eq(&m));
        }
    }

    #[test]
    fn random_100_by_8_round_trip() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f32> = (0..800).map(|_| rng.random_range(-1e3f32..1e3)).collect();
        let m = EmbeddingMatrix::from_rows(100, 8, values).unwrap();
        assert!(round_trip(&m).bitwise_eq(&m));
    }
}
