//! Versioned binary checkpoint format.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic            8 bytes  "GFPOLICY"
//! version          u32
//! input_channels   u32
//! window           u32
//! hidden_units     u32
//! context_units    u32
//! action_count     u32
//! conv layer count u32, then per layer: out_channels u32, kernel u32, stride u32
//! parameter count  u64
//! parameters       f64 x count
//! optimizer flag   u8 (0 = absent, 1 = present)
//!   step           u64
//!   first moments  f64 x count
//!   second moments f64 x count
//! ```

use super::{ConvSpec, NetworkSpec, PolicyParams};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;
use thiserror::Error;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GFPOLICY";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum CheckpointError {
    #[error("checkpoint io: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic: not a policy checkpoint")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u32),
    #[error("corrupt checkpoint: {0}")]
    Corrupt(String),
}

/// Optimizer moments stored alongside the parameters so training can
/// resume exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerMoments {
    pub step: u64,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
}

/// A loaded checkpoint: parameters plus optional optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub params: PolicyParams,
    pub optimizer: Option<OptimizerMoments>,
}

pub fn save_checkpoint(
    path: &Path,
    params: &PolicyParams,
    optimizer: Option<&OptimizerMoments>,
) -> Result<(), CheckpointError> {
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(CHECKPOINT_MAGIC)?;
    write_u32(&mut w, CHECKPOINT_VERSION)?;
    let spec = &params.spec;
    write_u32(&mut w, spec.input_channels as u32)?;
    write_u32(&mut w, spec.window as u32)?;
    write_u32(&mut w, spec.hidden_units as u32)?;
    write_u32(&mut w, spec.context_units as u32)?;
    write_u32(&mut w, spec.action_count as u32)?;
    write_u32(&mut w, spec.conv_layers.len() as u32)?;
    for conv in &spec.conv_layers {
        write_u32(&mut w, conv.out_channels as u32)?;
        write_u32(&mut w, conv.kernel as u32)?;
        write_u32(&mut w, conv.stride as u32)?;
    }
    w.write_all(&(params.data.len() as u64).to_le_bytes())?;
    for v in &params.data {
        w.write_all(&v.to_le_bytes())?;
    }
    match optimizer {
        Some(state) => {
            if state.first.len() != params.data.len() || state.second.len() != params.data.len() {
                return Err(CheckpointError::Corrupt(
                    "optimizer moment length does not match parameter count".into(),
                ));
            }
            w.write_all(&[1u8])?;
            w.write_all(&state.step.to_le_bytes())?;
            for v in state.first.iter().chain(state.second.iter()) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        None => w.write_all(&[0u8])?,
    }
    w.flush()?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, CheckpointError> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic)?;
    if &magic != CHECKPOINT_MAGIC {
        return Err(CheckpointError::BadMagic);
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(CheckpointError::UnsupportedVersion(version));
    }
    let input_channels = read_u32(&mut r)? as usize;
    let window = read_u32(&mut r)? as usize;
    let hidden_units = read_u32(&mut r)? as usize;
    let context_units = read_u32(&mut r)? as usize;
    let action_count = read_u32(&mut r)? as usize;
    let conv_count = read_u32(&mut r)? as usize;
    if conv_count > 64 {
        return Err(CheckpointError::Corrupt(format!(
            "implausible conv layer count {conv_count}"
        )));
    }
    let mut conv_layers = Vec::with_capacity(conv_count);
    for _ in 0..conv_count {
        conv_layers.push(ConvSpec {
            out_channels: read_u32(&mut r)? as usize,
            kernel: read_u32(&mut r)? as usize,
            stride: read_u32(&mut r)? as usize,
        });
    }
    let spec = NetworkSpec {
        input_channels,
        window,
        conv_layers,
        hidden_units,
        context_units,
        action_count,
    };
    let mut count_bytes = [0u8; 8];
    r.read_exact(&mut count_bytes)?;
    let count = u64::from_le_bytes(count_bytes) as usize;
    if count != spec.parameter_count() {
        return Err(CheckpointError::Corrupt(format!(
            "parameter count {count} does not match spec arithmetic {}",
            spec.parameter_count()
        )));
    }
    let data = read_f64s(&mut r, count)?;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let optimizer = match flag[0] {
        0 => None,
        1 => {
            let mut step_bytes = [0u8; 8];
            r.read_exact(&mut step_bytes)?;
            let step = u64::from_le_bytes(step_bytes);
            let first = read_f64s(&mut r, count)?;
            let second = read_f64s(&mut r, count)?;
            Some(OptimizerMoments {
                step,
                first,
                second,
            })
        }
        other => {
            return Err(CheckpointError::Corrupt(format!(
                "invalid optimizer flag {other}"
            )))
        }
    };
    Ok(Checkpoint {
        params: PolicyParams { spec, data },
        optimizer,
    })
}

fn write_u32<W: Write>(w: &mut W, v: u32) -> io::Result<()> {
    w.write_all(&v.to_le_bytes())
}

fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

fn read_f64s<R: Read>(r: &mut R, count: usize) -> Result<Vec<f64>, CheckpointError> {
    let mut bytes = vec![0u8; count * 8];
    r.read_exact(&mut bytes)?;
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}
