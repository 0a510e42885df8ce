//! Binary persistence for dense affinity matrices.
//!
//! Layout (little-endian): magic `RDKM`, version `u32`, `m` as `u64`, `tau` as
//! `f64`, then `m * m` row-major `f64` entries. The matrix is stored over the
//! whole vocabulary; tokens outside `T` get identity rows, which keeps the file
//! row-stochastic and self-describing.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::AffinityMatrix;
use crate::error::{Error, Result};
use crate::prob::SupportSet;
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"RDKM";
pub const VERSION: u32 = 1;

/// Refuse headers that would need more than this many entries (2 GiB of f64).
const MAX_ENTRIES: u64 = 1 << 28;

pub fn write_dense<S: Scalar, W: Write>(m: &AffinityMatrix<S>, out: &mut W) -> Result<()> {
    let support = m.support();
    let vocab = support.vocab_size();
    if (vocab as u64).saturating_mul(vocab as u64) > MAX_ENTRIES {
        return Err(Error::InvalidParameter(format!(
            "vocabulary of {vocab} is too large for a dense affinity file"
        )));
    }
    out.write_all(&MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    out.write_all(&(vocab as u64).to_le_bytes())?;
    out.write_all(&m.tau().as_f64().to_le_bytes())?;
    let mut row = vec![0.0f64; vocab];
    for r in 0..vocab {
        row.iter_mut().for_each(|x| *x = 0.0);
        match support.position(r) {
            Some(a) => {
                for (b, &v) in m.row(a).iter().enumerate() {
                    row[support.indices()[b]] = v.as_f64();
                }
            }
            None => row[r] = 1.0,
        }
        for x in &row {
            out.write_all(&x.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Reads a matrix written by [`write_dense`]; the result spans the full
/// vocabulary and is re-validated as row-stochastic.
pub fn read_dense<S: Scalar, R: Read>(input: &mut R) -> Result<AffinityMatrix<S>> {
    let mut magic = [0u8; 4];
    read_exact(input, &mut magic, "magic")?;
    if magic != MAGIC {
        return Err(Error::Format("bad magic, not an affinity matrix file".into()));
    }
    let mut b4 = [0u8; 4];
    read_exact(input, &mut b4, "version")?;
    let version = u32::from_le_bytes(b4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut b8 = [0u8; 8];
    read_exact(input, &mut b8, "size")?;
    let m = u64::from_le_bytes(b8);
    read_exact(input, &mut b8, "temperature")?;
    let tau = f64::from_le_bytes(b8);
    if m == 0 || m.saturating_mul(m) > MAX_ENTRIES {
        return Err(Error::Format(format!("unsupported matrix size {m}")));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Format(format!("temperature {tau} is not positive")));
    }
    let m = m as usize;
    let mut rows = Vec::with_capacity(m * m);
    let mut buf = vec![0u8; 8 * m];
    for _ in 0..m {
        read_exact(input, &mut buf, "payload")?;
        rows.extend(
            buf.chunks_exact(8)
                .map(|c| S::lit(f64::from_le_bytes(c.try_into().unwrap()))),
        );
    }
    let mut extra = [0u8; 1];
    if input.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after payload".into()));
    }
    AffinityMatrix::from_rows(&SupportSet::full(m), rows, S::lit(tau))
}

pub fn save_dense<S: Scalar>(m: &AffinityMatrix<S>, path: &Path) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_dense(m, &mut w)?;
    w.flush()?;
    Ok(())
}

pub fn load_dense<S: Scalar>(path: &Path) -> Result<AffinityMatrix<S>> {
    read_dense(&mut BufReader::new(File::open(path)?))
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("file truncated in {what}")),
        _ => Error::Io(e),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_expands_to_vocab() {
        let t = SupportSet::new(vec![0, 2], 3).unwrap();
        let m = AffinityMatrix::<f64>::from_rows(&t, vec![0.25, 0.75, 0.5, 0.5], 0.5).unwrap();
        let mut bytes = Vec::new();
        write_dense(&m, &mut bytes).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 8 + 8 + 9 * 8);
        assert_eq!(&bytes[..4], b"RDKM");
        let back: AffinityMatrix<f64> = read_dense(&mut bytes.as_slice()).unwrap();
        assert_eq!(back.tau(), 0.5);
        assert_eq!(back.row(0), &[0.25, 0.0, 0.75]);
        assert_eq!(back.row(1), &[0.0, 1.0, 0.0]);
        assert_eq!(back.row(2), &[0.5, 0.0, 0.5]);
    }

    #[test]
    fn rejects_corrupt_files() {
        let m = AffinityMatrix::<f64>::identity(&SupportSet::full(2));
        let mut bytes = Vec::new();
        write_dense(&m, &mut bytes).unwrap();

        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_dense::<f64, _>(&mut bad.as_slice()), Err(Error::Format(_))));

        let truncated = &bytes[..bytes.len() - 3];
        assert!(matches!(read_dense::<f64, _>(&mut &truncated[..]), Err(Error::Format(_))));

        let mut trailing = bytes.clone();
        trailing.push(0);
        assert!(read_dense::<f64, _>(&mut trailing.as_slice()).is_err());

        // first payload entry 1.0 -> 0.5 breaks row 0's sum
        let mut skewed = bytes.clone();
        skewed[24..32].copy_from_slice(&0.5f64.to_le_bytes());
        assert!(matches!(
            read_dense::<f64, _>(&mut skewed.as_slice()),
            Err(Error::InvalidInput(_))
        ));

        let mut huge = bytes;
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(read_dense::<f64, _>(&mut huge.as_slice()), Err(Error::Format(_))));
    }
}
