//! The `HPNN` binary model container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! "HPNN"                      magic
//! u16                         format version (1)
//! u32 input_height, input_width, classes
//! u32 pyramidal layer count
//!     per layer: u32 sublayers, field, overlap, activation, bias scheme
//! u32 dense layer count
//!     per layer: u32 units, activation
//! f64 tensors in declaration order: for each pyramidal layer weights
//!     then biases, then for each dense layer weights then biases
//! ```
//!
//! Tensor sizes are implied by the geometry, so the file carries no
//! per-tensor lengths. Trailing bytes are an error.

use std::path::Path;

use crate::dense::DenseLayerSpec;
use crate::error::{Error, Result};
use crate::feature_map::ActivationKind;
use crate::network::{Network, NetworkSpec};
use crate::pyramidal::{BiasScheme, PyramidalLayerSpec};

pub const MAGIC: &[u8; 4] = b"HPNN";
pub const FORMAT_VERSION: u16 = 1;

fn put_u32(out: &mut Vec<u8>, v: usize) {
    let v = u32::try_from(v).expect("geometry field exceeds u32");
    out.extend_from_slice(&v.to_le_bytes());
}

pub fn encode_model(net: &Network) -> Vec<u8> {
    let spec = &net.spec;
    let mut out = Vec::with_capacity(64 + 8 * net.param_count());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, spec.input_height);
    put_u32(&mut out, spec.input_width);
    put_u32(&mut out, spec.classes);
    put_u32(&mut out, spec.pyramidal.len());
    for layer in &spec.pyramidal {
        put_u32(&mut out, layer.sublayers);
        put_u32(&mut out, layer.field);
        put_u32(&mut out, layer.overlap);
        out.extend_from_slice(&layer.activation.code().to_le_bytes());
        out.extend_from_slice(&layer.bias.code().to_le_bytes());
    }
    put_u32(&mut out, spec.dense.len());
    for layer in &spec.dense {
        put_u32(&mut out, layer.units);
        out.extend_from_slice(&layer.activation.code().to_le_bytes());
    }
    for tensor in net.params.tensors() {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        if end > self.bytes.len() {
            return Err(Error::TruncatedPayload { expected: end, found: self.bytes.len() });
        }
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn usize(&mut self) -> Result<usize> {
        Ok(self.u32()? as usize)
    }

    fn activation(&mut self) -> Result<ActivationKind> {
        let code = self.u32()?;
        ActivationKind::from_code(code).ok_or_else(|| Error::MalformedModel(format!("unknown activation code {code}")))
    }
}

pub fn decode_model(bytes: &[u8]) -> Result<Network> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4).ok() != Some(MAGIC.as_slice()) {
        return Err(Error::BadMagic { expected: "HPNN" });
    }
    let version = r.u16()?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let input_height = r.usize()?;
    let input_width = r.usize()?;
    let classes = r.usize()?;
    let n_pyr = r.usize()?;
    let mut pyramidal = Vec::new();
    for _ in 0..n_pyr {
        let sublayers = r.usize()?;
        let field = r.usize()?;
        let overlap = r.usize()?;
        let activation = r.activation()?;
        let code = r.u32()?;
        let bias = BiasScheme::from_code(code)
            .ok_or_else(|| Error::MalformedModel(format!("unknown bias scheme code {code}")))?;
        pyramidal.push(PyramidalLayerSpec { sublayers, field, overlap, activation, bias });
    }
    let n_dense = r.usize()?;
    let mut dense = Vec::new();
    for _ in 0..n_dense {
        let units = r.usize()?;
        let activation = r.activation()?;
        dense.push(DenseLayerSpec { units, activation });
    }
    let spec = NetworkSpec { input_height, input_width, classes, pyramidal, dense };
    let mut net = Network::zeros(spec)?;
    for tensor in net.params.tensors_mut() {
        let raw = r.take(8 * tensor.len())?;
        for (v, chunk) in tensor.iter_mut().zip(raw.chunks_exact(8)) {
            *v = f64::from_le_bytes(chunk.try_into().unwrap());
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::MalformedModel(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(net)
}

pub fn save_model(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_model(net)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_model(&bytes)
}
