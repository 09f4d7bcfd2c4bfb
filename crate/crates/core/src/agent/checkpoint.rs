//! Binary checkpoint format.
//!
//! Layout (all integers `u32`, everything little-endian):
//! magic `PBNQ`, version, inputs, branches, stream width, trunk depth, trunk
//! widths, then every layer in [`QNetwork::layers`] order as row-major
//! weights followed by biases, each value an `f32`.

use std::fs;
use std::path::Path;

use super::network::{NetworkShape, QNetwork};
use crate::error::AgentError;

pub const MAGIC: &[u8; 4] = b"PBNQ";
pub const VERSION: u32 = 1;

pub fn encode(net: &QNetwork<f32>) -> Vec<u8> {
    let shape = net.shape();
    let mut out = Vec::with_capacity(24 + 4 * net.parameter_count());
    out.extend_from_slice(MAGIC);
    let mut header = vec![VERSION, shape.inputs as u32, shape.branches as u32, shape.stream as u32, shape.trunk.len() as u32];
    header.extend(shape.trunk.iter().map(|&w| w as u32));
    for v in header {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for layer in net.layers() {
        for v in layer.weight.iter().chain(layer.bias.iter()) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8], AgentError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        let end = end.ok_or_else(|| AgentError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, AgentError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f32(&mut self) -> Result<f32, AgentError> {
        Ok(f32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8]) -> Result<QNetwork<f32>, AgentError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(AgentError::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(AgentError::Checkpoint(format!("unsupported version {version}, expected {VERSION}")));
    }
    let inputs = r.u32()? as usize;
    let branches = r.u32()? as usize;
    let stream = r.u32()? as usize;
    let depth = r.u32()? as usize;
    if depth > 16 {
        return Err(AgentError::Checkpoint(format!("implausible trunk depth {depth}")));
    }
    let trunk = (0..depth).map(|_| r.u32().map(|w| w as usize)).collect::<Result<Vec<_>, _>>()?;
    let mut net = QNetwork::zeros(NetworkShape { inputs, branches, trunk, stream });
    let expected = 4 * net.parameter_count();
    if bytes.len() - r.pos != expected {
        return Err(AgentError::Checkpoint(format!(
            "expected {expected} parameter bytes, found {}",
            bytes.len() - r.pos
        )));
    }
    for layer in net.layers_mut() {
        for v in layer.weight.iter_mut().chain(layer.bias.iter_mut()) {
            *v = r.f32()?;
        }
    }
    Ok(net)
}

pub fn save(net: &QNetwork<f32>, path: impl AsRef<Path>) -> Result<(), AgentError> {
    fs::write(path, encode(net))?;
    Ok(())
}

pub fn load(path: impl AsRef<Path>) -> Result<QNetwork<f32>, AgentError> {
    decode(&fs::read(path)?)
}
