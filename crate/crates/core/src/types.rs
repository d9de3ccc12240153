use std::cmp::Ordering;

use crate::{Error, Result};

/// A spike at a `(layer, map, y, x)` site.
///
/// `layer` 0 is the encoded input; layer `k` is the output of the `k`-th
/// architecture row. Internally emitted spikes carry voltage 1.0; synapses
/// scale it by their weight when the spike is integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpikeEvent {
    pub time: f64,
    pub layer: usize,
    pub map: usize,
    pub y: usize,
    pub x: usize,
    pub voltage: f64,
}

impl SpikeEvent {
    pub fn new(time: f64, layer: usize, map: usize, y: usize, x: usize) -> Self {
        SpikeEvent {
            time,
            layer,
            map,
            y,
            x,
            voltage: 1.0,
        }
    }

    /// Lexicographic order on `(time, layer, map, y, x)`.
    ///
    /// Voltage does not take part, so two events at the same site and time
    /// compare equal.
    pub fn total_order(&self, other: &SpikeEvent) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.layer.cmp(&other.layer))
            .then(self.map.cmp(&other.map))
            .then(self.y.cmp(&other.y))
            .then(self.x.cmp(&other.x))
    }
}

/// Sorts events in place under [`SpikeEvent::total_order`].
pub fn sort_events(events: &mut [SpikeEvent]) {
    events.sort_by(SpikeEvent::total_order);
}

/// Depth × height × width of a layer's feature maps.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Shape3 {
    pub depth: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape3 {
    pub fn new(depth: usize, height: usize, width: usize) -> Result<Self> {
        if depth == 0 || height == 0 || width == 0 {
            return Err(Error::param(
                "shape",
                format!("all dimensions must be positive, got {depth}x{height}x{width}"),
            ));
        }
        Ok(Shape3 {
            depth,
            height,
            width,
        })
    }

    pub fn len(&self) -> usize {
        self.depth * self.height * self.width
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn columns(&self) -> usize {
        self.height * self.width
    }

    /// Flat index in `(map, y, x)` order.
    #[inline]
    pub fn index(&self, map: usize, y: usize, x: usize) -> usize {
        (map * self.height + y) * self.width + x
    }

    pub fn contains(&self, map: usize, y: usize, x: usize) -> bool {
        map < self.depth && y < self.height && x < self.width
    }
}

impl std::fmt::Display for Shape3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}x{}x{}", self.depth, self.height, self.width)
    }
}


/// Row-major grayscale image.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<f64>,
}

impl Image {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: width * height,
                actual: pixels.len(),
            });
        }
        Ok(Image {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Image {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f64 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, v: f64) {
        self.pixels[y * self.width + x] = v;
    }
}
