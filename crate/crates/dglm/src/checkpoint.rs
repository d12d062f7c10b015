//! Binary belief checkpoints.
//!
//! Layout, all little-endian:
//!
//! ```text
//! b"DGLMBEL1"                        8-byte magic
//! k: u64, step: u64
//! mean: k × f64
//! cov: k(k+1)/2 × f64                lower triangle, row-major
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use dglm_core::{Belief, Matrix, Vector};

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DGLMBEL1";

/// Largest dimension accepted when reading, to bound allocation on corrupt
/// input.
const MAX_DIM: u64 = 1 << 16;

pub fn write_belief<W: Write>(belief: &Belief, mut w: W) -> std::io::Result<()> {
    let k = belief.dim();
    w.write_all(MAGIC)?;
    w.write_all(&(k as u64).to_le_bytes())?;
    w.write_all(&belief.step().to_le_bytes())?;
    for v in belief.mean().iter() {
        w.write_all(&v.to_le_bytes())?;
    }
    let cov = belief.cov();
    for i in 0..k {
        for j in 0..=i {
            w.write_all(&cov[(i, j)].to_le_bytes())?;
        }
    }
    w.flush()
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    Ok(u64::from_le_bytes(buf))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)
        .map_err(|e| Error::Checkpoint(format!("truncated payload: {e}")))?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_belief<R: Read>(mut r: R) -> Result<Belief> {
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)
        .map_err(|e| Error::Checkpoint(format!("truncated header: {e}")))?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a belief checkpoint".into()));
    }
    let k = read_u64(&mut r)?;
    if k > MAX_DIM {
        return Err(Error::Checkpoint(format!("dimension {k} is implausible")));
    }
    let k = k as usize;
    let step = read_u64(&mut r)?;
    let mut mean = Vector::zeros(k);
    for i in 0..k {
        mean[i] = read_f64(&mut r)?;
    }
    let mut cov = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..=i {
            let v = read_f64(&mut r)?;
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    let mut rest = [0u8; 1];
    if r.read(&mut rest).map_err(|e| Error::Checkpoint(e.to_string()))? != 0 {
        return Err(Error::Checkpoint("trailing bytes after covariance".into()));
    }
    Ok(Belief::new(mean, cov, step)?)
}

pub fn save_belief(belief: &Belief, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(Error::io(path))?;
    write_belief(belief, BufWriter::new(file)).map_err(Error::io(path))
}

pub fn load_belief(path: &Path) -> Result<Belief> {
    let file = File::open(path).map_err(Error::io(path))?;
    read_belief(BufReader::new(file))
}
