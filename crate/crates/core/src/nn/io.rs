//! `.pqnn` model container (little-endian):
//!
//! ```text
//! magic      4 bytes "PQNN"
//! version    u16     = 1
//! name       u16 length + UTF-8 architecture name
//! input_len  u32
//! layers     u32 count, then per layer a tag byte and shape header:
//!              0 conv   : out u32, in u32, kernel u32, stride u32
//!              1 leaky  : alpha f64
//!              2 flatten
//!              3 dense  : in u32, out u32
//! params     f64 values of every parameter group in layer order
//! ```

use std::fs;
use std::path::Path;

use super::{ConvLayer, DenseLayer, Layer, LeakyRelu, Network};
use crate::dataset::{write_atomic, Reader};
use crate::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"PQNN";
pub const MODEL_VERSION: u16 = 1;

const TAG_CONV: u8 = 0;
const TAG_LEAKY: u8 = 1;
const TAG_FLATTEN: u8 = 2;
const TAG_DENSE: u8 = 3;

pub fn encode_model(net: &Network) -> Vec<u8> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MODEL_MAGIC);
    buf.extend_from_slice(&MODEL_VERSION.to_le_bytes());
    let name = net.architecture().as_bytes();
    buf.extend_from_slice(&(name.len() as u16).to_le_bytes());
    buf.extend_from_slice(name);
    buf.extend_from_slice(&(net.input_len() as u32).to_le_bytes());
    buf.extend_from_slice(&(net.layers().len() as u32).to_le_bytes());
    let u32s = |buf: &mut Vec<u8>, vals: &[usize]| {
        for &v in vals {
            buf.extend_from_slice(&(v as u32).to_le_bytes());
        }
    };
    for layer in net.layers() {
        match layer {
            Layer::Conv(c) => {
                buf.push(TAG_CONV);
                u32s(&mut buf, &[c.out_channels, c.in_channels, c.kernel_len, c.stride]);
            }
            Layer::LeakyRelu(r) => {
                buf.push(TAG_LEAKY);
                buf.extend_from_slice(&r.alpha.to_le_bytes());
            }
            Layer::Flatten => buf.push(TAG_FLATTEN),
            Layer::Dense(d) => {
                buf.push(TAG_DENSE);
                u32s(&mut buf, &[d.in_dim, d.out_dim]);
            }
        }
    }
    for group in net.param_groups() {
        for x in group {
            buf.extend_from_slice(&x.to_le_bytes());
        }
    }
    buf
}

pub fn decode_model(buf: &[u8]) -> Result<Network> {
    let mut r = Reader::new(buf);
    if r.take(4, "magic")? != MODEL_MAGIC {
        return Err(Error::Malformed {
            offset: 0,
            reason: "bad magic, not a .pqnn file".into(),
        });
    }
    let version = r.u16("version")?;
    if version != MODEL_VERSION {
        return Err(Error::VersionMismatch {
            found: version,
            expected: MODEL_VERSION,
        });
    }
    let name_len = r.u16("name length")? as usize;
    let name = std::str::from_utf8(r.take(name_len, "name")?)
        .map_err(|_| r.malformed("architecture name is not UTF-8"))?
        .to_string();
    let input_len = r.u32("input length")? as usize;
    let count = r.u32("layer count")?;
    let mut layers = Vec::new();
    for _ in 0..count {
        let at = r.offset();
        let shape_err = |e: Error| Error::Malformed {
            offset: at,
            reason: e.to_string(),
        };
        let layer = match r.u8("layer tag")? {
            TAG_CONV => {
                let out = r.u32("conv shape")? as usize;
                let inp = r.u32("conv shape")? as usize;
                let k = r.u32("conv shape")? as usize;
                let s = r.u32("conv shape")? as usize;
                Layer::Conv(ConvLayer::new(out, inp, k, s).map_err(shape_err)?)
            }
            TAG_LEAKY => Layer::LeakyRelu(LeakyRelu::new(r.f64("leaky alpha")?)),
            TAG_FLATTEN => Layer::Flatten,
            TAG_DENSE => {
                let inp = r.u32("dense shape")? as usize;
                let out = r.u32("dense shape")? as usize;
                Layer::Dense(DenseLayer::new(inp, out).map_err(shape_err)?)
            }
            other => {
                return Err(Error::Malformed {
                    offset: at,
                    reason: format!("unknown layer tag {other}"),
                })
            }
        };
        layers.push(layer);
    }
    let at = r.offset();
    let mut net = Network::new(name, input_len, layers).map_err(|e| Error::Malformed {
        offset: at,
        reason: e.to_string(),
    })?;
    for group in net.param_groups_mut() {
        let values = r.f64s(group.len(), "parameters")?;
        group.copy_from_slice(&values);
    }
    r.finish()?;
    Ok(net)
}

pub fn save_model(net: &Network, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(net))
}

pub fn load_model(path: &Path) -> Result<Network> {
    decode_model(&fs::read(path)?)
}
