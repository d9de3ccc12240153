//! Binary model container.
//!
//! Layout, all little-endian:
//!
//! ```text
//! "SNNMODEL"  u32 version
//! u32 depth, height, width              input shape
//! f64 t_start, t_end                    coding window
//! u32 dog_size, f64 center, surround    DoG variances
//! f64 w_min, w_max
//! u32 layer count
//! per layer: u8 kind, u32 filter_w, filter_h, maps, stride, padding, f64 t_target
//! per trainable layer: f64 weights (out, in, y, x order), f64 thresholds
//! ```
//!
//! Filters are stored once per layer. Writing the same model twice gives
//! the same bytes.

use std::path::Path;

use crate::encoder::{CodingWindow, DogParams};
use crate::network::{LayerKind, LayerParams, LayerSpec, Network, NetworkSpec, SynapseTensor};
use crate::types::Shape3;
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"SNNMODEL";
const VERSION: u32 = 1;

/// A network together with the input coding it was trained with.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub network: Network,
    pub window: CodingWindow,
    pub dog: DogParams,
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut b = Vec::new();
        let net = &self.network;
        b.extend_from_slice(MAGIC);
        put_u32(&mut b, VERSION);
        let s = net.spec.input;
        for v in [s.depth, s.height, s.width] {
            put_u32(&mut b, v as u32);
        }
        put_f64(&mut b, self.window.start);
        put_f64(&mut b, self.window.end);
        put_u32(&mut b, self.dog.size as u32);
        put_f64(&mut b, self.dog.center);
        put_f64(&mut b, self.dog.surround);
        let bounds = net
            .params
            .iter()
            .flatten()
            .next()
            .map(|p| p.weights.bounds())
            .unwrap_or((0.0, 1.0));
        put_f64(&mut b, bounds.0);
        put_f64(&mut b, bounds.1);
        put_u32(&mut b, net.spec.layers.len() as u32);
        for (l, t) in net.spec.layers.iter().zip(&net.targets) {
            b.push(l.kind.code());
            for v in [l.filter_w, l.filter_h, l.maps, l.stride, l.padding] {
                put_u32(&mut b, v as u32);
            }
            put_f64(&mut b, *t);
        }
        for p in net.params.iter().flatten() {
            for w in p.weights.to_canonical() {
                put_f64(&mut b, w);
            }
            for t in &p.thresholds {
                put_f64(&mut b, *t);
            }
        }
        b
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut c = Cursor::new(bytes);
        let magic = c.take(8)?;
        if magic != MAGIC {
            return Err(Error::Format("not a model file (bad magic)".into()));
        }
        let version = c.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported model version {version}")));
        }
        let input = Shape3::new(c.u32()? as usize, c.u32()? as usize, c.u32()? as usize)?;
        let window = CodingWindow::new(c.f64()?, c.f64()?)?;
        let dog = DogParams {
            size: c.u32()? as usize,
            center: c.f64()?,
            surround: c.f64()?,
        };
        dog.validate()?;
        let bounds = (c.f64()?, c.f64()?);
        let n = c.u32()? as usize;
        let mut layers = Vec::with_capacity(n);
        let mut targets = Vec::with_capacity(n);
        for _ in 0..n {
            let code = c.u8()?;
            let kind = LayerKind::from_code(code)
                .ok_or_else(|| Error::Format(format!("unknown layer kind {code}")))?;
            let mut v = [0usize; 5];
            for x in v.iter_mut() {
                *x = c.u32()? as usize;
            }
            layers.push(LayerSpec {
                kind,
                filter_w: v[0],
                filter_h: v[1],
                maps: v[2],
                stride: v[3],
                padding: v[4],
            });
            targets.push(c.f64()?);
        }
        let spec = NetworkSpec::new(input, layers)?;
        let shapes = spec.shapes()?;
        let mut params = Vec::with_capacity(n);
        for (i, l) in spec.layers.iter().enumerate() {
            if !l.kind.is_trainable() {
                params.push(None);
                continue;
            }
            let dims = (l.maps, shapes[i].depth, l.filter_h, l.filter_w);
            let count = dims.0 * dims.1 * dims.2 * dims.3;
            let w = (0..count).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
            let weights = SynapseTensor::from_canonical(dims, bounds, &w)?;
            let thresholds = (0..l.maps).map(|_| c.f64()).collect::<Result<Vec<_>>>()?;
            params.push(Some(LayerParams {
                weights,
                thresholds,
            }));
        }
        c.finish()?;
        Ok(ModelFile {
            network: Network {
                spec,
                params,
                targets,
            },
            window,
            dog,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes())
            .map_err(|e| Error::io(format!("writing {}", path.display()), e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes =
            std::fs::read(path).map_err(|e| Error::io(format!("reading {}", path.display()), e))?;
        Self::from_bytes(&bytes)
    }
}

fn put_u32(b: &mut Vec<u8>, v: u32) {
    b.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(b: &mut Vec<u8>, v: f64) {
    b.extend_from_slice(&v.to_le_bytes());
}

/// Little-endian reader over a byte slice.
pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Cursor { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(Error::Format(format!(
                "unexpected end of data at byte {} (need {n} more)",
                self.pos
            )));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    pub(crate) fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    pub(crate) fn finish(&self) -> Result<()> {
        if self.pos != self.bytes.len() {
            return Err(Error::Format(format!(
                "{} trailing bytes",
                self.bytes.len() - self.pos
            )));
        }
        Ok(())
    }
}
