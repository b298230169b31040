//! Model checkpoints: magic "MVMODEL1", u32 layer count, u32 per-layer
//! dims, f64 LE parameter blobs (W then b per layer), JSON trailer with
//! the config hash and activation.

use crate::autodiff::mlp::{Activation, MlpParams};
use crate::autodiff::tensor::Tensor;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"MVMODEL1";

#[derive(Serialize, Deserialize)]
struct Trailer {
    config_hash: String,
    activation: Activation,
}

pub fn save_mlp(params: &MlpParams, config_hash: u64, path: &Path) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(params.n_layers() as u32).to_le_bytes());
    for &d in &params.sizes {
        buf.extend_from_slice(&(d as u32).to_le_bytes());
    }
    for l in 0..params.n_layers() {
        for &x in &params.weights[l].data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
        for &x in &params.biases[l].data {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    let trailer = Trailer {
        config_hash: format!("{config_hash:016x}"),
        activation: params.activation,
    };
    buf.extend_from_slice(serde_json::to_string(&trailer)?.as_bytes());

    let tmp = path.with_extension("mvmodel.tmp");
    {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&buf)?;
        f.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

pub fn load_mlp(path: &Path) -> Result<(MlpParams, u64)> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(Error::Format("not an MVMODEL1 checkpoint".into()));
    }
    let n_layers = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let mut off = 12;
    let mut sizes = Vec::with_capacity(n_layers + 1);
    for _ in 0..=n_layers {
        if off + 4 > bytes.len() {
            return Err(Error::Format("truncated checkpoint header".into()));
        }
        sizes.push(u32::from_le_bytes(bytes[off..off + 4].try_into().unwrap()) as usize);
        off += 4;
    }
    let mut weights = Vec::new();
    let mut biases = Vec::new();
    for l in 0..n_layers {
        let (fi, fo) = (sizes[l], sizes[l + 1]);
        let need = 8 * (fi * fo + fo);
        if off + need > bytes.len() {
            return Err(Error::Format(format!(
                "truncated checkpoint: layer {l} needs {need} bytes at offset {off}, file has {}",
                bytes.len()
            )));
        }
        let mut w = Vec::with_capacity(fi * fo);
        for i in 0..fi * fo {
            w.push(f64::from_le_bytes(
                bytes[off + 8 * i..off + 8 * i + 8].try_into().unwrap(),
            ));
        }
        off += 8 * fi * fo;
        let mut b = Vec::with_capacity(fo);
        for i in 0..fo {
            b.push(f64::from_le_bytes(
                bytes[off + 8 * i..off + 8 * i + 8].try_into().unwrap(),
            ));
        }
        off += 8 * fo;
        weights.push(Tensor::new(vec![fi, fo], w)?);
        biases.push(Tensor::new(vec![1, fo], b)?);
    }
    let trailer: Trailer = serde_json::from_slice(&bytes[off..])?;
    let hash = u64::from_str_radix(&trailer.config_hash, 16)
        .map_err(|e| Error::Format(format!("bad config hash in trailer: {e}")))?;
    Ok((
        MlpParams {
            sizes,
            activation: trailer.activation,
            weights,
            biases,
        },
        hash,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mvmodel");
        let p = MlpParams::init(&[4, 6, 3], Activation::Relu, 21).unwrap();
        save_mlp(&p, 0xdeadbeefcafe, &path).unwrap();
        let (q, h) = load_mlp(&path).unwrap();
        assert_eq!(p, q);
        assert_eq!(h, 0xdeadbeefcafe);
    }

    #[test]
    fn rejects_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.mvmodel");
        let p = MlpParams::init(&[4, 6, 3], Activation::Tanh, 21).unwrap();
        save_mlp(&p, 1, &path).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..40]).unwrap();
        assert!(load_mlp(&path).is_err());
    }
}
