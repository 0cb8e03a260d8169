//! Checkpoint file format: a versioned header, named parameters as
//! (shape, little-endian f64 array), and optional optimizer state.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use thiserror::Error;

use super::adam::{AdamState, MomentSlot};

const MAGIC: &[u8; 8] = b"TQACKPT\0";
const VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("io error: {0}")]
    Io(#[from] io::Error),
    #[error("not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    BadVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParamRecord {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

#[derive(Clone)]
pub struct Checkpoint {
    pub params: Vec<ParamRecord>,
    pub optimizer: Option<AdamState>,
}

pub fn save(path: &Path, ckpt: &Checkpoint) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(ckpt.params.len() as u32).to_le_bytes())?;
    for p in &ckpt.params {
        let name = p.name.as_bytes();
        w.write_all(&(name.len() as u32).to_le_bytes())?;
        w.write_all(name)?;
        w.write_all(&(p.shape.len() as u32).to_le_bytes())?;
        for &d in &p.shape {
            w.write_all(&(d as u64).to_le_bytes())?;
        }
        let numel: usize = p.shape.iter().product();
        assert_eq!(numel, p.data.len(), "param record shape/data mismatch");
        for &v in &p.data {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    match &ckpt.optimizer {
        None => w.write_all(&[0u8])?,
        Some(opt) => {
            w.write_all(&[1u8])?;
            w.write_all(&opt.step_count().to_le_bytes())?;
            w.write_all(&opt.lr.to_le_bytes())?;
            w.write_all(&(opt.slots().len() as u32).to_le_bytes())?;
            for slot in opt.slots() {
                w.write_all(&(slot.m.len() as u64).to_le_bytes())?;
                for &v in &slot.m {
                    w.write_all(&v.to_le_bytes())?;
                }
                for &v in &slot.v {
                    w.write_all(&v.to_le_bytes())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(CheckpointError::BadVersion(version));
    }
    let n_params = read_u32(&mut r)? as usize;
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name)
            .map_err(|_| CheckpointError::Corrupt("non-utf8 parameter name".into()))?;
        let ndim = read_u32(&mut r)? as usize;
        let mut shape = Vec::with_capacity(ndim);
        for _ in 0..ndim {
            shape.push(read_u64(&mut r)? as usize);
        }
        let numel: usize = shape.iter().product();
        let data = read_f64s(&mut r, numel)?;
        params.push(ParamRecord { name, shape, data });
    }
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let optimizer = match flag[0] {
        0 => None,
        1 => {
            let step = read_u64(&mut r)?;
            let lr = f64::from_le_bytes(read_array(&mut r)?);
            let n_slots = read_u32(&mut r)? as usize;
            let mut slots = Vec::with_capacity(n_slots);
            for _ in 0..n_slots {
                let len = read_u64(&mut r)? as usize;
                let m = read_f64s(&mut r, len)?;
                let v = read_f64s(&mut r, len)?;
                slots.push(MomentSlot { m, v });
            }
            Some(AdamState::from_parts(lr, step, slots))
        }
        other => return Err(CheckpointError::Corrupt(format!("bad optimizer flag {other}"))),
    };
    Ok(Checkpoint { params, optimizer })
}

fn read_array<R: Read, const N: usize>(r: &mut R) -> Result<[u8; N], CheckpointError> {
    let mut buf = [0u8; N];
    r.read_exact(&mut buf)?;
    Ok(buf)
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32, CheckpointError> {
    Ok(u32::from_le_bytes(read_array(r)?))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64, CheckpointError> {
    Ok(u64::from_le_bytes(read_array(r)?))
}

fn read_f64s<R: Read>(r: &mut R, n: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        out.push(f64::from_le_bytes(read_array(r)?));
    }
    Ok(out)
}
