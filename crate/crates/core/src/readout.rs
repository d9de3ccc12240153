//! Output decoding, sum pooling, sparsity and filter visualization.

use std::io::{Read, Write};
use std::path::Path;

use crate::network::{LayerKind, Network};
use crate::simulator::{InhibitionPolicy, Simulator, SpikeTrain};
use crate::types::{Image, Shape3};
use crate::{Error, Result};

/// Maps an output spike time to `[0, 1]`: a spike at or before `t_target`
/// decodes to 1, a spike at `t_end` (or no spike) to 0, linear in between.
pub fn decode(t: Option<f64>, t_target: f64, t_end: f64) -> f64 {
    match t {
        None => 0.0,
        Some(t) => (1.0 - (t - t_target) / (t_end - t_target)).clamp(0.0, 1.0),
    }
}

/// Sums a decoded `(map, y, x)` field over positions, one value per map.
pub fn sum_pool(field: &[f64], shape: Shape3) -> Result<Vec<f64>> {
    if field.len() != shape.len() {
        return Err(Error::DimensionMismatch {
            expected: shape.len(),
            actual: field.len(),
        });
    }
    let cols = shape.columns();
    Ok(field.chunks_exact(cols).map(|c| c.iter().sum()).collect())
}

/// Hoyer sparseness in `[0, 1]`; an all-zero vector counts as 0.
pub fn sparsity(y: &[f64]) -> Result<f64> {
    let n = y.len();
    if n < 2 {
        return Err(Error::param("features", format!("sparsity needs n >= 2, got {n}")));
    }
    let peak = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return Ok(0.0);
    }
    // scaled by the peak and kept squared so that constant and one-hot
    // vectors land exactly on 0 and 1
    let l1: f64 = y.iter().map(|v| v.abs() / peak).sum();
    let ss: f64 = y.iter().map(|v| (v / peak).powi(2)).sum();
    let root = (n as f64).sqrt();
    Ok(((root - (l1 * l1 / ss).sqrt()) / (root - 1.0)).clamp(0.0, 1.0))
}

/// Decoded, sum-pooled output of one network for one sample.
pub fn decode_output(output: &SpikeTrain, shape: Shape3, t_target: f64, t_end: f64) -> Vec<f64> {
    let mut field = vec![0.0; shape.len()];
    for &(t, site) in &output.spikes {
        field[site as usize] = decode(Some(t), t_target, t_end);
    }
    if shape.columns() == 1 {
        field
    } else {
        sum_pool(&field, shape).expect("field built from shape")
    }
}

/// Row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl FeatureMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                expected: rows * cols,
                actual: data.len(),
            });
        }
        Ok(FeatureMatrix { rows, cols, data })
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1)).take(self.rows)
    }

    /// Mean Hoyer sparsity over rows.
    pub fn mean_sparsity(&self) -> Result<f64> {
        if self.rows == 0 {
            return Err(Error::EmptyDataset);
        }
        let mut acc = 0.0;
        for r in self.iter_rows() {
            acc += sparsity(r)?;
        }
        Ok(acc / self.rows as f64)
    }

    /// Text header (`rows`, `cols`, label presence) followed by row-major
    /// little-endian f64 values.
    pub fn write_to<W: Write>(&self, mut w: W, has_labels: bool) -> std::io::Result<()> {
        write!(
            w,
            "snn-features 1\nrows {}\ncols {}\nlabels {}\n",
            self.rows,
            self.cols,
            if has_labels { "yes" } else { "no" }
        )?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    /// Parses what [`write_to`](Self::write_to) produced; also returns the
    /// label-presence flag.
    pub fn read_from<R: Read>(mut r: R) -> Result<(Self, bool)> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)
            .map_err(|e| Error::io("reading feature matrix", e))?;
        let mut pos = 0;
        let mut lines = Vec::new();
        for _ in 0..4 {
            let end = bytes[pos..]
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| Error::Format("feature header truncated".into()))?;
            lines.push(String::from_utf8_lossy(&bytes[pos..pos + end]).into_owned());
            pos += end + 1;
        }
        if lines[0] != "snn-features 1" {
            return Err(Error::Format(format!("unknown feature header `{}`", lines[0])));
        }
        let field = |line: &str, key: &str| -> Result<String> {
            line.strip_prefix(key)
                .and_then(|s| s.strip_prefix(' '))
                .map(str::to_owned)
                .ok_or_else(|| Error::Format(format!("expected `{key}` in `{line}`")))
        };
        let rows: usize = field(&lines[1], "rows")?
            .parse()
            .map_err(|_| Error::Format("bad row count".into()))?;
        let cols: usize = field(&lines[2], "cols")?
            .parse()
            .map_err(|_| Error::Format("bad column count".into()))?;
        let labels = field(&lines[3], "labels")? == "yes";
        let body = &bytes[pos..];
        if body.len() != rows * cols * 8 {
            return Err(Error::Format(format!(
                "expected {} bytes of features, found {}",
                rows * cols * 8,
                body.len()
            )));
        }
        let data = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok((FeatureMatrix { rows, cols, data }, labels))
    }
}

/// Writes one label per line.
pub fn write_labels<W: Write>(mut w: W, labels: &[usize]) -> std::io::Result<()> {
    for l in labels {
        writeln!(w, "{l}")?;
    }
    Ok(())
}

/// Features of a dataset plus summary statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureReport {
    pub features: FeatureMatrix,
    /// Mean Hoyer sparsity over samples.
    pub sparsity: f64,
    /// Output-layer spikes summed over samples and networks.
    pub output_spikes: usize,
}

/// Runs every sample through every network with `policy`, decodes each
/// network's output with its own output target, sum-pools and concatenates.
pub fn extract_features(
    networks: &[Network],
    samples: &[SpikeTrain],
    policy: InhibitionPolicy,
    t_end: f64,
) -> Result<FeatureReport> {
    if networks.is_empty() {
        return Err(Error::param("networks", "need at least one network"));
    }
    let input = networks[0].spec.input;
    for n in networks {
        if n.spec.input != input {
            return Err(Error::InvalidArchitecture(format!(
                "ensemble members disagree on input shape: {} vs {}",
                input, n.spec.input
            )));
        }
    }
    let widths: Vec<usize> = networks
        .iter()
        .map(|n| n.shapes().last().unwrap().depth)
        .collect();
    let cols: usize = widths.iter().sum();
    let mut data = vec![0.0; samples.len() * cols];
    let mut offset = 0;
    let mut output_spikes = 0;
    for (net, &width) in networks.iter().zip(&widths) {
        let shape = *net.shapes().last().unwrap();
        let target = net.output_target();
        let depth = net.depth();
        let sim = Simulator::new(&net.spec)?;
        let rows = map_samples(samples, sim, |sim, s| {
            let out = sim.run_train(net, 0, s, depth, policy)?;
            let last = out.last().unwrap();
            Ok((decode_output(last, shape, target, t_end), last.len()))
        })?;
        for (i, (r, n)) in rows.into_iter().enumerate() {
            data[i * cols + offset..i * cols + offset + width].copy_from_slice(&r);
            output_spikes += n;
        }
        offset += width;
    }
    let features = FeatureMatrix::new(samples.len(), cols, data)?;
    let sparsity = if features.rows > 0 && cols >= 2 {
        features.mean_sparsity()?
    } else {
        0.0
    };
    Ok(FeatureReport {
        features,
        sparsity,
        output_spikes,
    })
}

#[cfg(feature = "parallel")]
pub(crate) fn map_samples<T, F>(samples: &[SpikeTrain], sim: Simulator, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(&mut Simulator, &SpikeTrain) -> Result<T> + Sync + Send,
{
    use rayon::prelude::*;
    samples
        .par_iter()
        .map_init(|| sim.clone(), |sim, s| f(sim, s))
        .collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_samples<T, F>(samples: &[SpikeTrain], mut sim: Simulator, f: F) -> Result<Vec<T>>
where
    F: Fn(&mut Simulator, &SpikeTrain) -> Result<T>,
{
    samples.iter().map(|s| f(&mut sim, s)).collect()
}

/// Back-projected receptive field of one map, one image per input channel,
/// jointly scaled so the largest value is 1.
///
/// Layer-1 filters are their weights. Deeper layers combine the
/// reconstructions of their inputs weighted by their own synapses
/// (transposed convolution); pooling layers are undone by nearest-neighbour
/// upsampling by their stride.
pub fn reconstruct_filter(net: &Network, layer: usize, map: usize) -> Result<Vec<Image>> {
    let spec = *net.spec.layer(layer)?;
    if !spec.kind.is_trainable() {
        return Err(Error::NotTrainable(layer));
    }
    if map >= spec.maps {
        return Err(Error::param(
            "map",
            format!("layer {layer} has {} maps, asked for {map}", spec.maps),
        ));
    }
    let shapes = net.shapes();
    let w = &net.layer_params(layer)?.weights;
    let mut field = Field {
        depth: shapes[layer - 1].depth,
        height: spec.filter_h,
        width: spec.filter_w,
        data: w.filter(map),
    };
    for cur in (1..layer).rev() {
        let l = net.spec.layers[cur - 1];
        field = match l.kind {
            LayerKind::Pooling => field.upsample(l.stride),
            LayerKind::Convolution | LayerKind::FullyConnected => {
                let p = net.layer_params(cur)?;
                field.transpose_conv(&p.weights, l.stride)
            }
        };
    }
    let max = field.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max > 0.0 {
        field.data.iter_mut().for_each(|v| *v /= max);
    }
    let plane = field.height * field.width;
    Ok(field
        .data
        .chunks_exact(plane)
        .map(|c| Image::new(field.width, field.height, c.to_vec()).unwrap())
        .collect())
}

#[derive(Debug, Clone)]
struct Field {
    depth: usize,
    height: usize,
    width: usize,
    data: Vec<f64>,
}

impl Field {
    fn upsample(&self, factor: usize) -> Field {
        let (h, w) = (self.height * factor, self.width * factor);
        let mut data = vec![0.0; self.depth * h * w];
        for c in 0..self.depth {
            for y in 0..h {
                for x in 0..w {
                    data[(c * h + y) * w + x] =
                        self.data[(c * self.height + y / factor) * self.width + x / factor];
                }
            }
        }
        Field {
            depth: self.depth,
            height: h,
            width: w,
            data,
        }
    }

    fn transpose_conv(&self, weights: &crate::network::SynapseTensor, stride: usize) -> Field {
        let (out_maps, in_maps, fh, fw) = weights.dims();
        debug_assert_eq!(out_maps, self.depth);
        let h = (self.height - 1) * stride + fh;
        let w = (self.width - 1) * stride + fw;
        let mut data = vec![0.0; in_maps * h * w];
        for m in 0..self.depth {
            for y in 0..self.height {
                for x in 0..self.width {
                    let a = self.data[(m * self.height + y) * self.width + x];
                    if a == 0.0 {
                        continue;
                    }
                    for c in 0..in_maps {
                        for fy in 0..fh {
                            for fx in 0..fw {
                                data[(c * h + y * stride + fy) * w + x * stride + fx] +=
                                    a * weights.get(m, c, fy, fx);
                            }
                        }
                    }
                }
            }
        }
        Field {
            depth: in_maps,
            height: h,
            width: w,
            data,
        }
    }
}

fn to_byte(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

/// Binary PGM (one channel) or PPM (two or three channels, mapped to red,
/// green, blue; with on/off input the overlap shows as yellow).
pub fn write_pnm<W: Write>(mut w: W, channels: &[Image]) -> Result<()> {
    let first = channels
        .first()
        .ok_or_else(|| Error::param("channels", "need at least one channel"))?;
    if channels.len() > 3 {
        return Err(Error::param("channels", "at most three channels can be rendered"));
    }
    let (width, height) = (first.width, first.height);
    let io = |e| Error::io("writing image", e);
    if channels.len() == 1 {
        write!(w, "P5\n{width} {height}\n255\n").map_err(io)?;
        let bytes: Vec<u8> = first.pixels.iter().map(|&v| to_byte(v)).collect();
        w.write_all(&bytes).map_err(io)?;
    } else {
        write!(w, "P6\n{width} {height}\n255\n").map_err(io)?;
        let mut bytes = Vec::with_capacity(width * height * 3);
        for i in 0..width * height {
            for c in 0..3 {
                bytes.push(channels.get(c).map_or(0, |img| to_byte(img.pixels[i])));
            }
        }
        w.write_all(&bytes).map_err(io)?;
    }
    Ok(())
}

/// Writes one image per map of `layer` into `dir` as
/// `layer<L>_map<M>.pgm` or `.ppm`. Returns the written paths.
pub fn export_filters(net: &Network, layer: usize, dir: &Path) -> Result<Vec<std::path::PathBuf>> {
    let spec = *net.spec.layer(layer)?;
    if !spec.kind.is_trainable() {
        return Err(Error::NotTrainable(layer));
    }
    std::fs::create_dir_all(dir).map_err(|e| Error::io(format!("creating {}", dir.display()), e))?;
    let mut paths = Vec::with_capacity(spec.maps);
    for m in 0..spec.maps {
        let channels = reconstruct_filter(net, layer, m)?;
        let ext = if channels.len() == 1 { "pgm" } else { "ppm" };
        let path = dir.join(format!("layer{layer}_map{m}.{ext}"));
        let mut buf = Vec::new();
        write_pnm(&mut buf, &channels)?;
        std::fs::write(&path, buf).map_err(|e| Error::io(format!("writing {}", path.display()), e))?;
        paths.push(path);
    }
    Ok(paths)
}
