//! Parameter checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic     8 bytes  "GMEMCKPT"
//! version   u32      CHECKPOINT_VERSION
//! count     u32      number of entries
//! entry*    name_len u32, name (UTF-8), rows u32, cols u32, rows*cols f64
//! ```

use std::io::{self, Read, Write};

use thiserror::Error;

use super::Tensor;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GMEMCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint i/o: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("checkpoint format version {found}, expected {expected}")]
    Version { found: u32, expected: u32 },
    #[error("checkpoint entry name is not UTF-8")]
    BadName,
    #[error("checkpoint is missing parameter `{0}`")]
    Missing(String),
    #[error("checkpoint parameter `{name}` has shape {found:?}, expected {expected:?}")]
    Shape {
        name: String,
        found: (usize, usize),
        expected: (usize, usize),
    },
}

pub fn write_checkpoint<W: Write>(mut w: W, entries: &[(String, &Tensor<f64>)]) -> Result<(), CheckpointError> {
    w.write_all(CHECKPOINT_MAGIC)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
    w.write_all(&(entries.len() as u32).to_le_bytes())?;
    for (name, t) in entries {
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        w.write_all(&(t.rows() as u32).to_le_bytes())?;
        w.write_all(&(t.cols() as u32).to_le_bytes())?;
        for v in t.as_slice() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<Vec<(String, Tensor<f64>)>, CheckpointError> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let count = read_u32(&mut r)?;
    let mut out = Vec::with_capacity(count as usize);
    for _ in 0..count {
        let len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| CheckpointError::BadName)?;
        let rows = read_u32(&mut r)? as usize;
        let cols = read_u32(&mut r)? as usize;
        let mut data = Vec::with_capacity(rows * cols);
        let mut b = [0u8; 8];
        for _ in 0..rows * cols {
            r.read_exact(&mut b)?;
            data.push(f64::from_le_bytes(b));
        }
        out.push((name, Tensor::from_vec(rows, cols, data).expect("length matches shape")));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn byte_layout() {
        let t = Tensor::from_f64(1, 2, &[1.0, -2.5]).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[("w".to_string(), &t)]).unwrap();
        assert_eq!(&buf[..8], b"GMEMCKPT");
        assert_eq!(&buf[8..12], &1u32.to_le_bytes());
        assert_eq!(&buf[12..16], &1u32.to_le_bytes());
        assert_eq!(&buf[16..20], &1u32.to_le_bytes());
        assert_eq!(buf[20], b'w');
        assert_eq!(&buf[29..37], &1.0f64.to_le_bytes());
        assert_eq!(buf.len(), 8 + 4 + 4 + 4 + 1 + 8 + 16);
        let back = read_checkpoint(buf.as_slice()).unwrap();
        assert_eq!(back, vec![("w".to_string(), t)]);
    }

    #[test]
    fn rejects_other_versions() {
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &[]).unwrap();
        buf[8] = 9;
        assert!(matches!(
            read_checkpoint(buf.as_slice()),
            Err(CheckpointError::Version { found: 9, expected: 1 })
        ));
        assert!(matches!(read_checkpoint(&b"NOTACKPTxxxxxxxx"[..]), Err(CheckpointError::BadMagic)));
    }
}
