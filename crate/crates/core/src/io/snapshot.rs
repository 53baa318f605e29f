//! Binary field snapshots.
//!
//! Layout, all little-endian: magic `TORN`, version `u32`, `nx ny nz` as `u32`,
//! `h`, `origin[3]`, `t` as `f64`, then the three components in order, each
//! `nx*ny*nz` `f64` values with z fastest.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::fields::VectorField;
use crate::grid::GridSpec;
use crate::scalar::Scalar;

pub const SNAPSHOT_MAGIC: [u8; 4] = *b"TORN";
pub const SNAPSHOT_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 + 12 + 8 * 5;

/// File size in bytes for a grid of `n` points.
pub fn snapshot_size(dims: [usize; 3]) -> u64 {
    HEADER_LEN + 8 * 3 * (dims[0] * dims[1] * dims[2]) as u64
}

pub fn write_snapshot<T: Scalar>(v: &VectorField<T>, t: T, path: impl AsRef<Path>) -> Result<()> {
    let g = v.grid();
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&SNAPSHOT_MAGIC)?;
    w.write_all(&SNAPSHOT_VERSION.to_le_bytes())?;
    for n in g.dims() {
        let n = u32::try_from(n).map_err(|_| Error::InvalidGrid(format!("{n} points exceed u32")))?;
        w.write_all(&n.to_le_bytes())?;
    }
    for x in [g.h, g.origin[0], g.origin[1], g.origin[2], t] {
        w.write_all(&x.to_f64_lossy().to_le_bytes())?;
    }
    for c in 0..3 {
        for &x in v.component(c) {
            w.write_all(&x.to_f64_lossy().to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<(VectorField<f64>, f64)> {
    let file = File::open(path)?;
    let found = file.metadata()?.len();
    let mut r = BufReader::new(file);
    let truncated = |expected| Error::Truncated { expected, found };
    let mut header = [0u8; HEADER_LEN as usize];
    if found < HEADER_LEN {
        // Still distinguish a foreign file from a cut-off one.
        let mut head = vec![0u8; found as usize];
        r.read_exact(&mut head)?;
        if head.len() >= 4 && head[..4] != SNAPSHOT_MAGIC {
            return Err(Error::BadMagic(head[..4].try_into().unwrap()));
        }
        return Err(truncated(HEADER_LEN));
    }
    r.read_exact(&mut header)?;
    let magic: [u8; 4] = header[0..4].try_into().unwrap();
    if magic != SNAPSHOT_MAGIC {
        return Err(Error::BadMagic(magic));
    }
    let u32_at = |o: usize| u32::from_le_bytes(header[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(header[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != SNAPSHOT_VERSION {
        return Err(Error::BadVersion(version));
    }
    let dims = [u32_at(8) as usize, u32_at(12) as usize, u32_at(16) as usize];
    let (h, origin, t) = (f64_at(20), [f64_at(28), f64_at(36), f64_at(44)], f64_at(52));
    let expected = snapshot_size(dims);
    if found < expected {
        return Err(truncated(expected));
    }
    let grid = GridSpec::new(dims, h, origin)?;
    let n = grid.len();
    let mut buf = vec![0u8; 8 * n];
    let comps = [0, 1, 2].map(|_| -> Result<Vec<f64>> {
        r.read_exact(&mut buf)?;
        Ok(buf.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect())
    });
    let [a, b, c] = comps;
    Ok((VectorField::from_components(grid, [a?, b?, c?])?, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn grid() -> GridSpec<f64> {
        GridSpec::new([3, 4, 5], 0.25, [-0.5, -0.75, 1.0]).unwrap()
    }

    #[test]
    fn zero_field_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("z.bin");
        let v = VectorField::zeros(grid());
        write_snapshot(&v, 0.5, &p).unwrap();
        let (back, t) = read_snapshot(&p).unwrap();
        assert_eq!(back, v);
        assert_eq!(t, 0.5);
        assert_eq!(std::fs::metadata(&p).unwrap().len(), 4 + 4 + 12 + 8 * 5 + 8 * 3 * 60);
    }

    #[test]
    fn random_field_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("r.bin");
        let g = grid();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let comps =
            [0, 1, 2].map(|_| (0..g.len()).map(|_| rng.random::<f64>() * 1e-300 + rng.random::<f64>()).collect());
        let v = VectorField::from_components(g, comps).unwrap();
        write_snapshot(&v, 0.047, &p).unwrap();
        let (back, t) = read_snapshot(&p).unwrap();
        for c in 0..3 {
            let a: Vec<u64> = v.component(c).iter().map(|x| x.to_bits()).collect();
            let b: Vec<u64> = back.component(c).iter().map(|x| x.to_bits()).collect();
            assert_eq!(a, b);
        }
        assert_eq!(t.to_bits(), 0.047f64.to_bits());
    }

    #[test]
    fn corrupt_files_have_distinct_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.bin");
        write_snapshot(&VectorField::zeros(grid()), 0.0, &p).unwrap();
        let good = std::fs::read(&p).unwrap();

        let mut bad = good.clone();
        bad[0] = b'X';
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::BadMagic(_))));

        let mut bad = good.clone();
        bad[4] = 2;
        std::fs::write(&p, &bad).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::BadVersion(2))));

        std::fs::write(&p, &good[..good.len() - 1]).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Truncated { .. })));

        std::fs::write(&p, &good[..10]).unwrap();
        assert!(matches!(read_snapshot(&p), Err(Error::Truncated { .. })));
    }
}
