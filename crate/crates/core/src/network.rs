//! Architecture description and learnable parameters.

use rand::Rng;
use rand_distr::{Distribution, Normal, Uniform};

use crate::rng::{self, Purpose};
use crate::types::Shape3;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LayerKind {
    Convolution,
    Pooling,
    FullyConnected,
}

impl LayerKind {
    pub fn is_trainable(self) -> bool {
        !matches!(self, LayerKind::Pooling)
    }

    pub fn name(self) -> &'static str {
        match self {
            LayerKind::Convolution => "conv",
            LayerKind::Pooling => "pool",
            LayerKind::FullyConnected => "fc",
        }
    }

    pub fn code(self) -> u8 {
        match self {
            LayerKind::Convolution => 0,
            LayerKind::Pooling => 1,
            LayerKind::FullyConnected => 2,
        }
    }

    pub fn from_code(c: u8) -> Option<Self> {
        match c {
            0 => Some(LayerKind::Convolution),
            1 => Some(LayerKind::Pooling),
            2 => Some(LayerKind::FullyConnected),
            _ => None,
        }
    }
}

impl std::str::FromStr for LayerKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "conv" | "convolution" => Ok(LayerKind::Convolution),
            "pool" | "pooling" => Ok(LayerKind::Pooling),
            "fc" | "fully-connected" | "fullyconnected" | "dense" => {
                Ok(LayerKind::FullyConnected)
            }
            other => Err(format!("unknown layer kind `{other}`")),
        }
    }
}

/// One architecture row: kind, filter geometry, map count, stride, padding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct LayerSpec {
    pub kind: LayerKind,
    pub filter_w: usize,
    pub filter_h: usize,
    pub maps: usize,
    pub stride: usize,
    pub padding: usize,
}

impl LayerSpec {
    pub fn conv(filter: usize, maps: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Convolution,
            filter_w: filter,
            filter_h: filter,
            maps,
            stride: 1,
            padding: 0,
        }
    }

    pub fn pool(filter: usize, maps: usize, stride: usize) -> Self {
        LayerSpec {
            kind: LayerKind::Pooling,
            filter_w: filter,
            filter_h: filter,
            maps,
            stride,
            padding: 0,
        }
    }

    pub fn fc(filter: usize, maps: usize) -> Self {
        LayerSpec {
            kind: LayerKind::FullyConnected,
            filter_w: filter,
            filter_h: filter,
            maps,
            stride: 1,
            padding: 0,
        }
    }

    pub fn with_padding(mut self, padding: usize) -> Self {
        self.padding = padding;
        self
    }

    pub fn with_stride(mut self, stride: usize) -> Self {
        self.stride = stride;
        self
    }

    /// Output shape for the given input, or a diagnostic when the geometry
    /// does not fit.
    pub fn output_shape(&self, input: Shape3) -> Result<Shape3> {
        if self.filter_w == 0 || self.filter_h == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "{} filter must be positive, got {}x{}",
                self.kind.name(),
                self.filter_w,
                self.filter_h
            )));
        }
        if self.maps == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "{} layer needs at least one map",
                self.kind.name()
            )));
        }
        if self.stride == 0 {
            return Err(Error::InvalidArchitecture(format!(
                "{} stride must be positive",
                self.kind.name()
            )));
        }
        let span_w = input.width + 2 * self.padding;
        let span_h = input.height + 2 * self.padding;
        if span_w < self.filter_w || span_h < self.filter_h {
            return Err(Error::InvalidArchitecture(format!(
                "{} filter {}x{} larger than padded input {}x{}",
                self.kind.name(),
                self.filter_w,
                self.filter_h,
                span_w,
                span_h
            )));
        }
        let out_w = (span_w - self.filter_w) / self.stride + 1;
        let out_h = (span_h - self.filter_h) / self.stride + 1;
        match self.kind {
            LayerKind::Pooling if self.maps != input.depth => {
                return Err(Error::InvalidArchitecture(format!(
                    "pooling keeps the map count: input has {} maps, row declares {}",
                    input.depth, self.maps
                )))
            }
            LayerKind::FullyConnected if out_w != 1 || out_h != 1 => {
                return Err(Error::InvalidArchitecture(format!(
                    "fully-connected filter {}x{} must cover the whole {}x{} input",
                    self.filter_w, self.filter_h, input.width, input.height
                )))
            }
            _ => {}
        }
        Shape3::new(self.maps, out_h, out_w)
    }
}

/// Input shape plus the ordered layer rows.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NetworkSpec {
    pub input: Shape3,
    pub layers: Vec<LayerSpec>,
}

impl NetworkSpec {
    pub fn new(input: Shape3, layers: Vec<LayerSpec>) -> Result<Self> {
        let spec = NetworkSpec { input, layers };
        spec.shapes()?;
        Ok(spec)
    }

    /// `shapes()[0]` is the input; `shapes()[k]` the output of layer `k`.
    pub fn shapes(&self) -> Result<Vec<Shape3>> {
        let mut shapes = Vec::with_capacity(self.layers.len() + 1);
        shapes.push(self.input);
        for (i, l) in self.layers.iter().enumerate() {
            let prev = *shapes.last().unwrap();
            let out = l
                .output_shape(prev)
                .map_err(|e| Error::InvalidArchitecture(format!("layer {}: {e}", i + 1)))?;
            shapes.push(out);
        }
        Ok(shapes)
    }

    /// 1-based indices of trainable layers.
    pub fn trainable_layers(&self) -> Vec<usize> {
        self.layers
            .iter()
            .enumerate()
            .filter(|(_, l)| l.kind.is_trainable())
            .map(|(i, _)| i + 1)
            .collect()
    }

    pub fn layer(&self, index: usize) -> Result<&LayerSpec> {
        if index == 0 || index > self.layers.len() {
            return Err(Error::LayerOutOfRange {
                index,
                count: self.layers.len(),
            });
        }
        Ok(&self.layers[index - 1])
    }

    /// conv(5×5×32)-pool(2×2)-conv(5×5×128)-pool(2×2)-fc(4×4×4096) over a
    /// two-channel 28×28 input.
    pub fn mnist() -> Self {
        Self::mnist_scaled(32, 128, 4096)
    }

    pub fn mnist_scaled(conv1: usize, conv2: usize, fc: usize) -> Self {
        NetworkSpec::new(
            Shape3 {
                depth: 2,
                height: 28,
                width: 28,
            },
            vec![
                LayerSpec::conv(5, conv1),
                LayerSpec::pool(2, conv1, 2),
                LayerSpec::conv(5, conv2),
                LayerSpec::pool(2, conv2, 2),
                LayerSpec::fc(4, fc),
            ],
        )
        .expect("static architecture is valid")
    }

    /// Three-convolution architecture for 250×160 Faces/Motorbikes images.
    pub fn faces_motorbikes() -> Self {
        NetworkSpec::new(
            Shape3 {
                depth: 2,
                height: 160,
                width: 250,
            },
            vec![
                LayerSpec::conv(5, 32).with_padding(2),
                LayerSpec::pool(7, 32, 6).with_padding(3),
                LayerSpec::conv(17, 64).with_padding(8),
                LayerSpec::pool(5, 64, 5).with_padding(2),
                LayerSpec::conv(5, 128).with_padding(2),
            ],
        )
        .expect("static architecture is valid")
    }
}

/// Learnable weights of one layer, logically shaped
/// `(out_maps, in_maps, filter_h, filter_w)` and always inside
/// `[w_min, w_max]`.
///
/// Storage is input-major with the output map innermost so that fanning
/// one input spike out to all maps of a column touches contiguous memory.
#[derive(Debug, Clone, PartialEq)]
pub struct SynapseTensor {
    out_maps: usize,
    in_maps: usize,
    filter_h: usize,
    filter_w: usize,
    w_min: f64,
    w_max: f64,
    data: Vec<f64>,
}

impl SynapseTensor {
    pub fn filled(
        out_maps: usize,
        in_maps: usize,
        filter_h: usize,
        filter_w: usize,
        value: f64,
        bounds: (f64, f64),
    ) -> Result<Self> {
        if !(bounds.0 < bounds.1) {
            return Err(Error::param(
                "w_min",
                format!("need W_min < W_max, got {:?}", bounds),
            ));
        }
        Ok(SynapseTensor {
            out_maps,
            in_maps,
            filter_h,
            filter_w,
            w_min: bounds.0,
            w_max: bounds.1,
            data: vec![value.clamp(bounds.0, bounds.1); out_maps * in_maps * filter_h * filter_w],
        })
    }

    pub fn dims(&self) -> (usize, usize, usize, usize) {
        (self.out_maps, self.in_maps, self.filter_h, self.filter_w)
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.w_min, self.w_max)
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Synapses per output map.
    pub fn fan_in(&self) -> usize {
        self.in_maps * self.filter_h * self.filter_w
    }

    #[inline]
    fn offset(&self, out_map: usize, in_map: usize, fy: usize, fx: usize) -> usize {
        ((in_map * self.filter_h + fy) * self.filter_w + fx) * self.out_maps + out_map
    }

    #[inline]
    pub fn get(&self, out_map: usize, in_map: usize, fy: usize, fx: usize) -> f64 {
        self.data[self.offset(out_map, in_map, fy, fx)]
    }

    /// Stores `value` clipped into `[w_min, w_max]`.
    #[inline]
    pub fn set(&mut self, out_map: usize, in_map: usize, fy: usize, fx: usize, value: f64) {
        let o = self.offset(out_map, in_map, fy, fx);
        self.data[o] = value.clamp(self.w_min, self.w_max);
    }

    /// Weights of every output map for one input synapse position, where
    /// `synapse = (in_map * filter_h + fy) * filter_w + fx`.
    #[inline]
    pub fn fan_out_row(&self, synapse: usize) -> &[f64] {
        &self.data[synapse * self.out_maps..(synapse + 1) * self.out_maps]
    }

    /// Weight of `out_map` at flat synapse index (same convention as
    /// [`fan_out_row`](Self::fan_out_row)).
    #[inline]
    pub fn at_synapse(&self, out_map: usize, synapse: usize) -> f64 {
        self.data[synapse * self.out_maps + out_map]
    }

    #[inline]
    pub fn set_at_synapse(&mut self, out_map: usize, synapse: usize, value: f64) {
        self.data[synapse * self.out_maps + out_map] = value.clamp(self.w_min, self.w_max);
    }

    /// Filter of one output map in `(in_map, y, x)` order.
    pub fn filter(&self, out_map: usize) -> Vec<f64> {
        (0..self.fan_in())
            .map(|s| self.at_synapse(out_map, s))
            .collect()
    }

    /// All weights in `(out_map, in_map, y, x)` order.
    pub fn to_canonical(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.data.len());
        for m in 0..self.out_maps {
            v.extend(self.filter(m));
        }
        v
    }

    /// Inverse of [`to_canonical`](Self::to_canonical). Values outside the
    /// bounds are rejected rather than clipped.
    pub fn from_canonical(
        dims: (usize, usize, usize, usize),
        bounds: (f64, f64),
        values: &[f64],
    ) -> Result<Self> {
        let (o, i, h, w) = dims;
        let mut t = SynapseTensor::filled(o, i, h, w, bounds.0, bounds)?;
        if values.len() != t.len() {
            return Err(Error::DimensionMismatch {
                expected: t.len(),
                actual: values.len(),
            });
        }
        let fan_in = t.fan_in();
        for (k, &v) in values.iter().enumerate() {
            if !(v >= bounds.0 && v <= bounds.1) {
                return Err(Error::Format(format!(
                    "weight {v} outside [{}, {}]",
                    bounds.0, bounds.1
                )));
            }
            let (m, s) = (k / fan_in, k % fan_in);
            t.data[s * o + m] = v;
        }
        Ok(t)
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.data.iter().copied()
    }
}

/// Weights and per-map thresholds of one trainable layer. Every column
/// shares them.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: SynapseTensor,
    pub thresholds: Vec<f64>,
}

/// Random initial parameter distributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitParams {
    /// `W(0) ~ U(low, high)`
    pub weight_low: f64,
    pub weight_high: f64,
    /// `V_th(0) ~ N(mean, std)`
    pub threshold_mean: f64,
    pub threshold_std: f64,
    pub w_min: f64,
    pub w_max: f64,
    pub th_min: f64,
}

impl Default for InitParams {
    fn default() -> Self {
        InitParams {
            weight_low: 0.0,
            weight_high: 1.0,
            threshold_mean: 5.0,
            threshold_std: 1.0,
            w_min: 0.0,
            w_max: 1.0,
            th_min: 1.0,
        }
    }
}

/// Architecture, parameters and per-layer target timestamps.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub spec: NetworkSpec,
    /// `params[k - 1]` belongs to layer `k`; `None` for pooling layers.
    pub params: Vec<Option<LayerParams>>,
    /// `targets[k - 1]` is the target firing time of layer `k`.
    pub targets: Vec<f64>,
}

impl Network {
    /// Draws initial weights and thresholds from the `(purpose, layer)`
    /// streams of `seed`.
    pub fn initialize(
        spec: NetworkSpec,
        init: &InitParams,
        targets: Vec<f64>,
        seed: u64,
    ) -> Result<Self> {
        let shapes = spec.shapes()?;
        if targets.len() != spec.layers.len() {
            return Err(Error::DimensionMismatch {
                expected: spec.layers.len(),
                actual: targets.len(),
            });
        }
        if !(init.weight_low <= init.weight_high) {
            return Err(Error::param("w_init", "low must not exceed high"));
        }
        if !(init.threshold_std >= 0.0) {
            return Err(Error::param("th_init", "standard deviation must be >= 0"));
        }
        if !(init.th_min > 0.0) {
            return Err(Error::param("th_min", "must be positive"));
        }
        let mut params = Vec::with_capacity(spec.layers.len());
        for (i, l) in spec.layers.iter().enumerate() {
            let layer = i + 1;
            if !l.kind.is_trainable() {
                params.push(None);
                continue;
            }
            let in_maps = shapes[i].depth;
            let mut weights = SynapseTensor::filled(
                l.maps,
                in_maps,
                l.filter_h,
                l.filter_w,
                init.w_min,
                (init.w_min, init.w_max),
            )?;
            let mut wr = rng::stream(seed, Purpose::WeightInit, layer);
            let uniform = Uniform::new_inclusive(init.weight_low, init.weight_high)
                .map_err(|e| Error::param("w_init", e.to_string()))?;
            // canonical order so the draw sequence does not depend on storage
            for m in 0..l.maps {
                for s in 0..weights.fan_in() {
                    let w = uniform.sample(&mut wr);
                    weights.set_at_synapse(m, s, w);
                }
            }
            let mut tr = rng::stream(seed, Purpose::ThresholdInit, layer);
            let normal = Normal::new(init.threshold_mean, init.threshold_std)
                .map_err(|e| Error::param("th_init", e.to_string()))?;
            let thresholds = (0..l.maps)
                .map(|_| normal.sample(&mut tr).max(init.th_min))
                .collect();
            params.push(Some(LayerParams {
                weights,
                thresholds,
            }));
        }
        Ok(Network {
            spec,
            params,
            targets,
        })
    }

    pub fn shapes(&self) -> Vec<Shape3> {
        self.spec.shapes().expect("validated at construction")
    }

    pub fn depth(&self) -> usize {
        self.spec.layers.len()
    }

    pub fn layer_params(&self, layer: usize) -> Result<&LayerParams> {
        self.spec.layer(layer)?;
        self.params[layer - 1]
            .as_ref()
            .ok_or(Error::NotTrainable(layer))
    }

    pub fn layer_params_mut(&mut self, layer: usize) -> Result<&mut LayerParams> {
        self.spec.layer(layer)?;
        self.params[layer - 1]
            .as_mut()
            .ok_or(Error::NotTrainable(layer))
    }

    pub fn output_target(&self) -> f64 {
        *self.targets.last().expect("network has layers")
    }

    /// FNV-1a over every parameter bit pattern of layers `1..=upto`.
    pub fn checksum(&self, upto: usize) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        let mut mix = |v: f64| {
            for b in v.to_bits().to_le_bytes() {
                h ^= b as u64;
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        };
        for p in self.params.iter().take(upto).flatten() {
            p.weights.iter().for_each(&mut mix);
            p.thresholds.iter().copied().for_each(&mut mix);
        }
        h
    }
}

/// Uniform draw helper kept here so callers need not depend on `rand`.
pub(crate) fn uniform_index<R: Rng>(rng: &mut R, upper: usize) -> usize {
    rng.random_range(0..upper)
}
