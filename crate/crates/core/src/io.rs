//! Flat binary tensor format used to exchange frames and maps.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes        | content                                     |
//! |--------------|---------------------------------------------|
//! | 8            | magic `ODTNSR01`                            |
//! | 4            | rank `r` as `u32`                           |
//! | 8 * r        | dimensions as `u64`, outermost first        |
//! | 8            | generating seed as `u64`                    |
//! | 16 * prod(d) | row-major `f64` pairs `(re, im)`            |
//!
//! Real tensors are stored with a zero imaginary part.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::{ArrayBase, ArrayD, Data, Dimension, IxDyn};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 8] = b"ODTNSR01";

pub fn write_tensor<W, S, D>(mut w: W, tensor: &ArrayBase<S, D>, seed: u64) -> Result<()>
where
    W: Write,
    S: Data<Elem = Complex64>,
    D: Dimension,
{
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&(tensor.ndim() as u32).to_le_bytes())?;
    for &d in tensor.shape() {
        w.write_all(&(d as u64).to_le_bytes())?;
    }
    w.write_all(&seed.to_le_bytes())?;
    // Logical (row-major) order regardless of memory layout.
    for z in tensor.iter() {
        w.write_all(&z.re.to_le_bytes())?;
        w.write_all(&z.im.to_le_bytes())?;
    }
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

/// Reads a tensor and its seed.
pub fn read_tensor<R: Read>(mut r: R) -> Result<(ArrayD<Complex64>, u64)> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != TENSOR_MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let rank = read_u32(&mut r)? as usize;
    if rank > 8 {
        return Err(Error::Format(format!("unsupported rank {rank}")));
    }
    let dims = (0..rank)
        .map(|_| read_u64(&mut r).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let seed = read_u64(&mut r)?;
    let len = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .ok_or_else(|| Error::Format("dimension product overflows".into()))?;
    let mut data = Vec::with_capacity(len);
    for _ in 0..len {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        data.push(Complex64::new(re, im));
    }
    let tensor = ArrayD::from_shape_vec(IxDyn(&dims), data)
        .map_err(|e| Error::Format(e.to_string()))?;
    Ok((tensor, seed))
}

pub fn save_tensor<S, D>(path: impl AsRef<Path>, tensor: &ArrayBase<S, D>, seed: u64) -> Result<()>
where
    S: Data<Elem = Complex64>,
    D: Dimension,
{
    let mut w = BufWriter::new(File::create(path)?);
    write_tensor(&mut w, tensor, seed)?;
    w.flush()?;
    Ok(())
}

pub fn load_tensor(path: impl AsRef<Path>) -> Result<(ArrayD<Complex64>, u64)> {
    read_tensor(BufReader::new(File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let t = Array3::<Complex64>::zeros((2, 3, 1));
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t, 9).unwrap();
        assert_eq!(&buf[..8], TENSOR_MAGIC);
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(buf[12..20].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(buf[28..36].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(buf[36..44].try_into().unwrap()), 9);
        assert_eq!(buf.len(), 44 + 6 * 16);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(read_tensor(&b"NOTATENSOR......"[..]).is_err());
        let t = Array3::<Complex64>::zeros((2, 2, 2));
        let mut buf = Vec::new();
        write_tensor(&mut buf, &t, 0).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(read_tensor(&buf[..]).is_err());
    }

    proptest! {
        #[test]
        fn roundtrip(
            dims in proptest::collection::vec(1usize..5, 1..4),
            seed in any::<u64>(),
            salt in -1e3f64..1e3,
        ) {
            let len: usize = dims.iter().product();
            let data = (0..len).map(|i| Complex64::new(i as f64 * salt, -(i as f64) / 3.0)).collect();
            let t = ArrayD::from_shape_vec(IxDyn(&dims), data).unwrap();
            let mut buf = Vec::new();
            write_tensor(&mut buf, &t, seed).unwrap();
            let (back, s) = read_tensor(&buf[..]).unwrap();
            prop_assert_eq!(s, seed);
            prop_assert_eq!(back, t);
        }
    }
}
