//! `.mvb` batch files: 8-byte magic "MVBATCH1", little-endian u32 header
//! (n, dim_view, n_label_kinds), f32 arrays v1, v2, t_reg, i32 label
//! arrays, then a JSON trailer holding the generating spec.

use crate::error::{Error, Result};
use crate::synth::continuous::{ContinuousSpec, MultiViewBatch};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"MVBATCH1";
const N_LABEL_KINDS: u32 = 2;

pub fn write_batch(batch: &MultiViewBatch, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(batch.n as u32).to_le_bytes());
    buf.extend_from_slice(&(batch.dim_view as u32).to_le_bytes());
    buf.extend_from_slice(&N_LABEL_KINDS.to_le_bytes());
    for x in &batch.v1 {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in &batch.v2 {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in &batch.t_reg {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in &batch.t_shared {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    for x in &batch.t_nonshared {
        buf.extend_from_slice(&x.to_le_bytes());
    }
    buf.extend_from_slice(serde_json::to_string(&batch.spec)?.as_bytes());

    // atomic write: temp file in the same directory, then rename
    let tmp = path.with_extension("mvb.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn read_batch(path: &Path) -> Result<MultiViewBatch> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 20 {
        return Err(Error::Format(format!(
            "file too short: {} bytes, need at least 20 for the header",
            bytes.len()
        )));
    }
    if &bytes[..8] != MAGIC {
        return Err(Error::Format("bad magic, expected MVBATCH1".into()));
    }
    let u32_at = |off: usize| u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize;
    let n = u32_at(8);
    let dim_view = u32_at(12);
    let kinds = u32_at(16);
    if kinds != N_LABEL_KINDS as usize {
        return Err(Error::Format(format!(
            "expected {N_LABEL_KINDS} label kinds, header says {kinds}"
        )));
    }
    let body = 4 * (2 * n * dim_view + n + kinds * n);
    let need = 20 + body;
    if bytes.len() < need {
        return Err(Error::Format(format!(
            "truncated file: expected at least {need} bytes for the declared shapes, got {}",
            bytes.len()
        )));
    }
    let mut off = 20;
    let f32s = |count: usize, off: &mut usize| -> Vec<f32> {
        let out = (0..count)
            .map(|i| f32::from_le_bytes(bytes[*off + 4 * i..*off + 4 * i + 4].try_into().unwrap()))
            .collect();
        *off += 4 * count;
        out
    };
    let v1 = f32s(n * dim_view, &mut off);
    let v2 = f32s(n * dim_view, &mut off);
    let t_reg = f32s(n, &mut off);
    let i32s = |count: usize, off: &mut usize| -> Vec<i32> {
        let out = (0..count)
            .map(|i| i32::from_le_bytes(bytes[*off + 4 * i..*off + 4 * i + 4].try_into().unwrap()))
            .collect();
        *off += 4 * count;
        out
    };
    let t_shared = i32s(n, &mut off);
    let t_nonshared = i32s(n, &mut off);
    let spec: ContinuousSpec = serde_json::from_slice(&bytes[off..])?;
    Ok(MultiViewBatch {
        n,
        dim_view,
        v1,
        v2,
        t_shared,
        t_nonshared,
        t_reg,
        latents: None,
        spec,
    })
}
